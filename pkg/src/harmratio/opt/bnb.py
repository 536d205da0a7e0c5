"""Exact search over integral goods allocations.

The depth-first searches live in the kernel backend; this module builds
incumbents and bounds and strings the leximin steps together.
"""
from __future__ import annotations

import numpy as np

from harmratio import kernels
from harmratio.errors import CapExceededError, InvalidInstanceError, SolverError
from harmratio.model import Allocation, GoodsInstance
from harmratio.opt.convex import eisenberg_gale_mnw
from harmratio.opt.leximin import leximin_search
from harmratio.opt.lp import LinearProgram, solve_lp
from harmratio.opt.milp import maxmin_milp

MAX_AGENTS = 10
MAX_GOODS = 20
_TOL = 1e-9

OBJECTIVES = ("nash", "egalitarian", "leximin", "leximin-step")


class _GoodsOracle:
    def __init__(self, V):
        self.V = np.asarray(V, dtype=float)
        self.n = self.V.shape[0]

    def linear_oracle(self, w):
        own = np.argmax(w[:, None] * self.V, axis=0)
        X = np.zeros_like(self.V)
        X[own, np.arange(self.V.shape[1])] = 1.0
        return (X * self.V).sum(axis=1), X


def _utilities(V, owners):
    u = np.zeros(V.shape[0])
    np.add.at(u, owners, V[owners, np.arange(V.shape[1])])
    return u


def greedy_nash_owners(V):
    """Goods in decreasing max-value order, each to the agent with the best log gain."""
    n, m = V.shape
    owners = np.zeros(m, dtype=np.int64)
    cur = np.zeros(n)
    for g in np.argsort(-V.max(axis=0), kind="stable"):
        col = V[:, g]
        with np.errstate(divide="ignore"):
            gain = np.where(cur > 0, np.log1p(col / np.where(cur > 0, cur, 1.0)), np.where(col > 0, np.inf, 0.0))
        i = int(np.argmax(gain))
        owners[g] = i
        cur[i] += col[i]
    return _improve_by_moves(V, owners, lambda u: _nash_score(u))


def greedy_egal_owners(V):
    """Goods in decreasing max-value order, each to the poorest agent that values it."""
    n, m = V.shape
    owners = np.zeros(m, dtype=np.int64)
    cur = np.zeros(n)
    for g in np.argsort(-V.max(axis=0), kind="stable"):
        col = V[:, g]
        cand = np.flatnonzero(col > 0)
        i = int(cand[np.argmin(cur[cand])]) if cand.size else 0
        owners[g] = i
        cur[i] += col[i]
    return _improve_by_moves(V, owners, lambda u: tuple(np.sort(u)))


def _nash_score(u):
    pos = u > 0
    return (int(pos.sum()), float(np.log(u[pos]).sum()) if pos.any() else 0.0)


def _improve_by_moves(V, owners, score, rounds=50):
    """First-improvement local search over single-good moves."""
    owners = owners.copy()
    n, m = V.shape
    u = _utilities(V, owners)
    best = score(u)
    for _ in range(rounds):
        improved = False
        for g in range(m):
            a = owners[g]
            for b in range(n):
                if b == a:
                    continue
                u2 = u.copy()
                u2[a] -= V[a, g]
                u2[b] += V[b, g]
                s = score(u2)
                if s > best:
                    owners[g], u, best, improved = b, u2, s, True
                    a = b
        if not improved:
            break
    return owners


def _egal_weights(V, active=None, floors=None):
    """LP dual weights of the fractional max-min problem (a point of the simplex).

    Agents outside ``active`` only have to keep their ``floors``. The
    weights are zero on them. Returns None when the LP gives no usable duals.
    """
    n, m = V.shape
    active = np.ones(n, dtype=bool) if active is None else np.asarray(active, dtype=bool)
    nv = n * m + 1  # x (agent-major) then t
    A, b, senses = [], [], []
    for i in range(n):
        row = np.zeros(nv)
        row[i * m:(i + 1) * m] = V[i]
        if active[i]:
            row[-1] = -1.0
            b.append(0.0)
        else:
            b.append(float(floors[i]))
        A.append(row)
        senses.append(">=")
    for g in range(m):
        row = np.zeros(nv)
        row[g:n * m:m] = 1.0
        A.append(row)
        b.append(1.0)
        senses.append("=")
    c = np.zeros(nv)
    c[-1] = 1.0
    bounds = [(0.0, np.inf)] * (n * m) + [(-np.inf, np.inf)]
    try:
        res = solve_lp(LinearProgram(c, np.array(A), np.array(b), senses, bounds, maximize=True))
    except SolverError:
        return None
    if not res.optimal or res.duals is None:
        return None
    lam = np.where(active, np.abs(res.duals[:n]), 0.0)
    if lam.sum() <= 0:
        return None
    return lam / lam.sum()


def _check(instance: GoodsInstance, max_agents: int, max_goods: int):
    if instance.divisible:
        raise InvalidInstanceError("branch and bound needs an indivisible instance")
    if instance.n > max_agents or instance.m > max_goods:
        raise CapExceededError(
            f"instance has n={instance.n}, m={instance.m}; branch and bound is capped at "
            f"n<={max_agents}, m<={max_goods} (raise the caps or use the integer-program backend)"
        )


def leximin_owners(V, steps=None, incumbent=None):
    """Iterated max-min with frozen minima (see :mod:`harmratio.opt.leximin`).

    Returns the owner vector and the per-step minima.
    """
    V = np.asarray(V, dtype=float)
    pool = [greedy_egal_owners(V) if incumbent is None else np.asarray(incumbent, dtype=np.int64)]

    def maxmin(active, floors):
        weights = _egal_weights(V, active, floors)
        value, owners = kernels.bnb_maxmin(V, active, floors, _feasible_start(V, active, floors, pool), _TOL, weights)
        pool.append(owners)
        return value, _utilities(V, owners), owners

    owners, _, minima = leximin_search(maxmin, V.shape[0], steps)
    return owners, minima


def _feasible_start(V, active, floors, pool):
    """Most recent owner vector meeting the frozen agents' floors; the MILP supplies one otherwise."""
    frozen = ~np.asarray(active, dtype=bool)
    for owners in reversed(pool):
        if np.all(_utilities(V, owners)[frozen] >= floors[frozen] - _TOL):
            return owners
    _, owners = maxmin_milp(V, active, floors)
    return owners


def branch_and_bound_allocation(
    instance: GoodsInstance,
    objective: str = "nash",
    max_agents: int = MAX_AGENTS,
    max_goods: int = MAX_GOODS,
) -> Allocation:
    """Exact integral allocation for ``objective``.

    ``nash`` is lexicographic: most agents with positive utility first, then
    the largest product over those agents. ``egalitarian`` maximizes the
    minimum utility. ``leximin`` refines it by iterated max-min with frozen
    minima (see :func:`leximin_owners`), and ``leximin-step`` runs one such
    step.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}; choose from {OBJECTIVES}")
    _check(instance, max_agents, max_goods)
    V = np.asarray(instance.valuations, dtype=float)
    n = instance.n
    if objective == "nash":
        inc = greedy_nash_owners(V)
        tangent = None
        if instance.m >= n:
            # log u <= log t + u/t - 1 holds for any t > 0, so a rough optimum is enough
            try:
                tangent = eisenberg_gale_mnw(_GoodsOracle(V), tol=1e-6, max_iter=500).utilities
            except SolverError:
                tangent = None
        owners = kernels.bnb_nash(V, inc, tangent)
    elif objective == "egalitarian":
        inc = greedy_egal_owners(V)
        active = np.ones(n, dtype=bool)
        _, owners = kernels.bnb_maxmin(V, active, np.zeros(n), inc, _TOL, _egal_weights(V))
    elif objective == "leximin-step":
        owners, _ = leximin_owners(V, steps=1)
    else:
        owners, _ = leximin_owners(V)
    return Allocation.from_owners(owners, n)
