"""Reviewer assignment rules: TPMS, Nash, Leximin, RR."""
from __future__ import annotations

import numpy as np

from harmratio.errors import InfeasibleError
from harmratio.model import ReviewAssignment, ReviewInstance, nash_welfare
from harmratio.opt.flow import completion_feasible, min_cost_assignment
from harmratio.opt.milp import leximin_program
from harmratio.rules.base import RuleResult, stopwatch
from harmratio.space import enumerate_review_assignments, review_assignment_space

REVIEW_RULES = ("TPMS", "Nash", "Leximin", "RR")
NASH_EXACT_MAX = 6


def _utilities(instance, A: ReviewAssignment):
    S = instance.similarity
    return np.array([sum(S[p, r] for r in A.assigned[p]) for p in range(instance.n)])


def tpms(instance: ReviewInstance) -> RuleResult:
    """Utilitarian assignment via min-cost flow."""
    with stopwatch() as sw:
        mapping = min_cost_assignment(instance.similarity, instance.allowed, instance.load)
        A = ReviewAssignment.from_mapping(mapping, instance.n)
    u = _utilities(instance, A)
    return RuleResult("TPMS", A, u, float(u.sum()), runtime=sw["t"])


def _swap_search(instance, A: ReviewAssignment, max_rounds: int = 200) -> ReviewAssignment:
    """Improve sum of log utilities by exchanging one reviewer between two papers."""
    S = instance.similarity
    allowed = instance.allowed
    n = instance.n
    bundles = [set(b) for b in A.assigned]
    u = np.array([sum(S[p, r] for r in bundles[p]) for p in range(n)])
    for _ in range(max_rounds):
        improved = False
        for p in range(n):
            for q in range(p + 1, n):
                for r in list(bundles[p]):
                    if r in bundles[q] or not allowed[q, r]:
                        continue
                    for s in list(bundles[q]):
                        if s in bundles[p] or not allowed[p, s]:
                            continue
                        up = u[p] - S[p, r] + S[p, s]
                        uq = u[q] - S[q, s] + S[q, r]
                        if np.log(up) + np.log(uq) > np.log(u[p]) + np.log(u[q]) + 1e-12:
                            bundles[p].remove(r)
                            bundles[p].add(s)
                            bundles[q].remove(s)
                            bundles[q].add(r)
                            u[p], u[q] = up, uq
                            improved = True
                            break
                    if improved:
                        break
                if improved:
                    break
            if improved:
                break
        if not improved:
            break
    return ReviewAssignment(tuple(frozenset(b) for b in bundles))


def nash_review(instance: ReviewInstance, exact_max: int = NASH_EXACT_MAX) -> RuleResult:
    """Maximum Nash welfare: exact by enumeration for small n, else swap search from TPMS."""
    with stopwatch() as sw:
        if instance.n <= exact_max:
            space = enumerate_review_assignments(instance)
            logs = np.log(space.utilities).sum(axis=1)
            k = int(np.argmax(logs))
            A = space.decode(k)
            status = "exact"
        else:
            start = tpms(instance).outcome
            A = _swap_search(instance, start, max_rounds=10 * instance.n * instance.n)
            status = "heuristic"
    u = _utilities(instance, A)
    return RuleResult("Nash", A, u, nash_welfare(u), status, sw["t"])


def leximin_review(instance: ReviewInstance, time_limit: float | None = None) -> RuleResult:
    """Iterated max-min over the 0/1 assignment program, minima frozen in paper order."""
    with stopwatch() as sw:
        space = review_assignment_space(instance)
        x, minima = leximin_program(space.U, space.A_eq, space.b_eq, time_limit)
        A = space.decode(x)
    u = _utilities(instance, A)
    return RuleResult("Leximin", A, u, float(u.min()), "exact", sw["t"], {"minima": minima})


def round_robin_review(instance: ReviewInstance, order=None, seed: int | None = None) -> RuleResult:
    """Papers pick one reviewer at a time cyclically, never breaking completability.

    Each pick is the most similar allowed reviewer with spare load whose
    choice still leaves a feasible completion (checked by max flow).
    """
    n, load = instance.n, instance.load
    if order is None:
        order = np.arange(n) if seed is None else np.random.default_rng(seed).permutation(n)
    order = [int(p) for p in order]
    S = instance.similarity
    allowed = instance.allowed
    with stopwatch() as sw:
        if not completion_feasible(allowed, load, {}):
            raise InfeasibleError("no assignment satisfies the load and conflict constraints")
        fixed: dict[int, set] = {p: set() for p in range(n)}
        used = np.zeros(n, dtype=int)
        for _ in range(load):
            for p in order:
                cands = [r for r in np.argsort(-S[p], kind="stable")
                         if allowed[p, r] and r not in fixed[p] and used[r] < load]
                for r in cands:
                    fixed[p].add(int(r))
                    if completion_feasible(allowed, load, fixed):
                        used[r] += 1
                        break
                    fixed[p].discard(int(r))
                else:
                    raise InfeasibleError(f"paper {p} has no completable pick")
        A = ReviewAssignment.from_mapping(fixed, n)
    u = _utilities(instance, A)
    return RuleResult("RR", A, u, float(u.sum()), runtime=sw["t"], diagnostics={"order": order})


_DISPATCH = {"TPMS": tpms, "Nash": nash_review, "Leximin": leximin_review, "RR": round_robin_review}


def review_rules(instance: ReviewInstance, rules=REVIEW_RULES) -> dict[str, RuleResult]:
    out = {}
    for r in rules:
        if r not in _DISPATCH:
            raise ValueError(f"unknown review rule {r!r}; choose from {REVIEW_RULES}")
        out[r] = _DISPATCH[r](instance)
    return out
