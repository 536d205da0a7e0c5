"""Min-cost max-flow by successive shortest paths with Johnson potentials."""
from __future__ import annotations

import heapq
from typing import Mapping

import numpy as np

from harmratio.errors import InfeasibleError


class FlowNetwork:
    """Directed network with integral capacities and real costs.

    Arcs are stored in paired forward/backward slots so residual updates are
    O(1). Costs may be negative as long as there is no negative cycle.
    """

    def __init__(self, n_nodes: int, source: int, sink: int):
        self.n_nodes = n_nodes
        self.source = source
        self.sink = sink
        self.head: list[int] = []
        self.cap: list[int] = []
        self.cost: list[float] = []
        self.adj: list[list[int]] = [[] for _ in range(n_nodes)]
        self._orig_cap: list[int] = []

    def add_arc(self, u: int, v: int, capacity: int, cost: float = 0.0) -> int:
        if capacity < 0:
            raise ValueError("capacities must be non-negative")
        k = len(self.head)
        self.head += [v, u]
        self.cap += [int(capacity), 0]
        self.cost += [float(cost), -float(cost)]
        self._orig_cap += [int(capacity), 0]
        self.adj[u].append(k)
        self.adj[v].append(k + 1)
        return k

    def flow_on(self, arc: int) -> int:
        return self._orig_cap[arc] - self.cap[arc]

    def _bellman_ford(self):
        n = self.n_nodes
        dist = [0.0] * n  # virtual super-source reaches everything at 0
        for _ in range(n):
            changed = False
            for u in range(n):
                du = dist[u]
                for k in self.adj[u]:
                    if self.cap[k] > 0:
                        v = self.head[k]
                        nd = du + self.cost[k]
                        if nd < dist[v] - 1e-12:
                            dist[v] = nd
                            changed = True
            if not changed:
                return dist
        raise ValueError("negative-cost cycle in flow network")

    def min_cost_max_flow(self, max_flow: int | None = None) -> tuple[int, float]:
        """Push as much flow as possible (up to ``max_flow``) at minimum cost."""
        n, s, t = self.n_nodes, self.source, self.sink
        pot = self._bellman_ford()
        flow, total = 0, 0.0
        limit = float("inf") if max_flow is None else max_flow
        while flow < limit:
            dist = [float("inf")] * n
            prev = [-1] * n
            dist[s] = 0.0
            heap = [(0.0, s)]
            while heap:
                d, u = heapq.heappop(heap)
                if d > dist[u]:
                    continue
                pu = pot[u]
                for k in self.adj[u]:
                    if self.cap[k] <= 0:
                        continue
                    v = self.head[k]
                    nd = d + self.cost[k] + pu - pot[v]
                    if nd < dist[v] - 1e-12:
                        dist[v] = nd
                        prev[v] = k
                        heapq.heappush(heap, (nd, v))
            if dist[t] == float("inf"):
                break
            for v in range(n):
                if dist[v] < float("inf"):
                    pot[v] += dist[v]
            push = limit - flow
            v = t
            while v != s:
                k = prev[v]
                push = min(push, self.cap[k])
                v = self.head[k ^ 1]
            v = t
            while v != s:
                k = prev[v]
                self.cap[k] -= push
                self.cap[k ^ 1] += push
                total += push * self.cost[k]
                v = self.head[k ^ 1]
            flow += int(push)
        return flow, total


def review_network(weights: np.ndarray, allowed: np.ndarray, load: int,
                   fixed: Mapping[int, set] | None = None):
    """Build the paper/reviewer b-matching network.

    Node layout: source, papers 1..n, reviewers n+1..2n, sink. Pairs listed
    in ``fixed`` are taken as already assigned (capacities reduced, arc
    omitted). Returns the network and a dict mapping arc id to (paper, reviewer).
    """
    n = weights.shape[0]
    fixed = fixed or {}
    s, t = 0, 2 * n + 1
    net = FlowNetwork(2 * n + 2, s, t)
    paper_need = np.full(n, load)
    rev_left = np.full(n, load)
    for p, rs in fixed.items():
        paper_need[p] -= len(rs)
        for r in rs:
            rev_left[r] -= 1
    if np.any(paper_need < 0) or np.any(rev_left < 0):
        raise InfeasibleError("fixed pairs exceed the load")
    arcs = {}
    for p in range(n):
        if paper_need[p]:
            net.add_arc(s, 1 + p, int(paper_need[p]))
    for r in range(n):
        if rev_left[r]:
            net.add_arc(1 + n + r, t, int(rev_left[r]))
    for p in range(n):
        taken = fixed.get(p, ())
        for r in range(n):
            if allowed[p, r] and r not in taken:
                k = net.add_arc(1 + p, 1 + n + r, 1, -float(weights[p, r]))
                arcs[k] = (p, r)
    return net, arcs, int(paper_need.sum())


def min_cost_assignment(weights: np.ndarray, allowed: np.ndarray, load: int) -> dict[int, set[int]]:
    """Maximum-weight b-matching: each paper and each reviewer gets exactly ``load`` partners.

    Solved as min-cost flow on negated weights. Raises
    :class:`~harmratio.errors.InfeasibleError` when no complete assignment exists.
    """
    weights = np.asarray(weights, dtype=float)
    net, arcs, need = review_network(weights, np.asarray(allowed, dtype=bool), load)
    flow, _ = net.min_cost_max_flow()
    if flow < need:
        raise InfeasibleError(f"only {flow} of {need} reviewer slots can be filled")
    out: dict[int, set[int]] = {p: set() for p in range(weights.shape[0])}
    for k, (p, r) in arcs.items():
        if net.flow_on(k):
            out[p].add(r)
    return out


def completion_feasible(allowed: np.ndarray, load: int, fixed: Mapping[int, set]) -> bool:
    """Whether the partial assignment ``fixed`` extends to a complete one."""
    n = allowed.shape[0]
    try:
        net, _, need = review_network(np.zeros((n, n)), allowed, load, fixed)
    except InfeasibleError:
        return False
    flow, _ = net.min_cost_max_flow()
    return flow == need
