"""Participatory budgeting rules.

Tie-breaking everywhere prefers the lower project index (instance order).
"""
from __future__ import annotations

import numpy as np
from scipy.special import digamma

from harmratio.model import BudgetSelection, PBInstance, pb_utilities
from harmratio.opt.knapsack import knapsack_max_value
from harmratio.rules.base import RuleResult, stopwatch
from harmratio.space import DEFAULT_PROJECT_CAP, enumerate_budget_feasible

PB_RULES = ("Global-U", "Greedy-U", "Nash", "MES", "Phragmen", "PAV", "Smooth-Nash")

_FIT = 1e-9


def _fits(cost, remaining):
    return cost <= remaining + _FIT


def _selection(instance, idx) -> BudgetSelection:
    ids = instance.project_ids
    return BudgetSelection(frozenset(ids[j] for j in idx))


def _result(instance, rule, idx, objective, status, runtime, **diag):
    mask = np.zeros(len(instance.projects), dtype=bool)
    mask[list(idx)] = True
    u = pb_utilities(instance, mask)
    diag.setdefault("funded_indices", sorted(int(j) for j in idx))
    return RuleResult(rule, _selection(instance, idx), u, float(objective), status, runtime, diag)


def utilitarian_scores(instance: PBInstance) -> np.ndarray:
    """Raw utilitarian welfare of funding each project alone."""
    return instance.project_weights().sum(axis=0)


def greedy_complete(instance: PBInstance, selected) -> list[int]:
    """Add affordable projects in decreasing utilitarian welfare until none fits."""
    chosen = list(selected)
    costs = instance.costs
    remaining = instance.budget - float(costs[chosen].sum()) if chosen else instance.budget
    scores = utilitarian_scores(instance)
    taken = set(chosen)
    for j in np.argsort(-scores, kind="stable"):
        j = int(j)
        if j not in taken and _fits(costs[j], remaining):
            chosen.append(j)
            taken.add(j)
            remaining -= costs[j]
    return chosen


def greedy_u(instance: PBInstance) -> RuleResult:
    with stopwatch() as sw:
        idx = greedy_complete(instance, [])
    return _result(instance, "Greedy-U", idx, utilitarian_scores(instance)[idx].sum(), "exact", sw["t"])


def global_u(instance: PBInstance) -> RuleResult:
    """Utilitarian optimum over budget-feasible sets (raw utilities), by knapsack."""
    with stopwatch() as sw:
        value, idx = knapsack_max_value(instance.costs, utilitarian_scores(instance), instance.budget)
    return _result(instance, "Global-U", idx, value, "exact", sw["t"])


def method_of_equal_shares(instance: PBInstance) -> list[int]:
    """Equal shares without completion.

    Every voter starts with budget/n. A project is affordable when its
    supporters can jointly pay its cost; its price ``rho`` is the smallest
    per-unit-utility price such that supporters paying ``min(budget_i, rho * u_i)``
    cover the cost. The cheapest affordable project is bought each round.
    """
    W = instance.project_weights()
    costs = instance.costs
    n, p = W.shape
    money = np.full(n, instance.budget / n if n else 0.0)
    remaining = list(range(p))
    chosen: list[int] = []
    while True:
        best, best_rho = None, np.inf
        still = []
        for j in remaining:
            c = costs[j]
            sup = np.flatnonzero(W[:, j] > 0)
            if c <= 0:
                rho = 0.0
            else:
                if sup.size == 0 or money[sup].sum() < c - _FIT:
                    continue  # budgets only shrink, so this project is out for good
                u = W[sup, j]
                b = money[sup]
                order = np.argsort(b / u, kind="stable")
                paid, rest_u = 0.0, float(u.sum())
                rho = np.inf
                for k in order:
                    cand = (c - paid) / rest_u
                    if cand <= b[k] / u[k]:
                        rho = cand
                        break
                    paid += b[k]
                    rest_u -= u[k]
                if not np.isfinite(rho):
                    # budgets cover the cost only up to rounding: everyone pays in full
                    rho = float(np.max(b / u))
            still.append(j)
            if rho < best_rho - 1e-12:
                best, best_rho = j, rho
        remaining = still
        if best is None:
            return chosen
        sup = np.flatnonzero(W[:, best] > 0)
        if costs[best] > 0:
            pay = np.minimum(money[sup], best_rho * W[sup, best])
            money[sup] -= pay
            money = np.maximum(money, 0.0)
        chosen.append(best)
        remaining.remove(best)


def phragmen(instance: PBInstance) -> list[int]:
    """Sequential Phragmen without completion.

    Approvers of a project share its cost by raising their loads to a common
    level ``(cost + sum of their loads) / #approvers``; the project reaching
    the lowest level is bought. Projects that no longer fit are dropped.
    """
    A = instance.approvals
    costs = instance.costs
    n, p = A.shape
    load = np.zeros(n)
    remaining_budget = instance.budget
    candidates = [j for j in range(p) if A[:, j].any()]
    chosen: list[int] = []
    while candidates:
        levels = [(costs[j] + load[A[:, j]].sum()) / A[:, j].sum() for j in candidates]
        k = int(np.argmin(levels))
        j = candidates.pop(k)
        if not _fits(costs[j], remaining_budget):
            continue
        load[A[:, j]] = levels[k]
        remaining_budget -= costs[j]
        chosen.append(j)
    return chosen


def _completed(instance, rule, base, runtime):
    full = greedy_complete(instance, base)
    status = "completed-by-greedy" if len(full) > len(base) else "exact"
    return _result(instance, rule, full, utilitarian_scores(instance)[full].sum(), status, runtime,
                   before_completion=sorted(int(j) for j in base))


def mes(instance: PBInstance) -> RuleResult:
    with stopwatch() as sw:
        base = method_of_equal_shares(instance)
    return _completed(instance, "MES", base, sw["t"])


def phragmen_rule(instance: PBInstance) -> RuleResult:
    with stopwatch() as sw:
        base = phragmen(instance)
    return _completed(instance, "Phragmen", base, sw["t"])


def harmonic(x) -> np.ndarray:
    """H(x) = sum_{k<=x} 1/k on integers, continued by digamma(x + 1) + Euler's gamma."""
    x = np.asarray(x, dtype=float)
    return digamma(x + 1.0) + np.euler_gamma


def _scan_rule(instance, rule, score, cap):
    with stopwatch() as sw:
        space = enumerate_budget_feasible(instance, cap)
        masks = space.masks
        raw = pb_utilities(instance, masks, floored=False)
        s = score(space.utilities, raw)
        best = float(s.max())
        ties = np.flatnonzero(s >= best - 1e-9 * max(1.0, abs(best)))
        keys = [tuple(np.flatnonzero(masks[k]).tolist()) for k in ties]
        idx = list(min(keys))
    return _result(instance, rule, idx, best, "exact", sw["t"], outcomes_scanned=int(masks.shape[0]))


def nash_pb(instance: PBInstance, cap: int = DEFAULT_PROJECT_CAP) -> RuleResult:
    """Maximum Nash welfare over budget-feasible sets (floored utilities)."""
    return _scan_rule(instance, "Nash", lambda U, raw: np.log(U).sum(axis=1), cap)


def pav(instance: PBInstance, cap: int = DEFAULT_PROJECT_CAP) -> RuleResult:
    return _scan_rule(instance, "PAV", lambda U, raw: harmonic(raw).sum(axis=1), cap)


def smooth_nash(instance: PBInstance, cap: int = DEFAULT_PROJECT_CAP) -> RuleResult:
    return _scan_rule(instance, "Smooth-Nash", lambda U, raw: np.log1p(raw).sum(axis=1), cap)


_DISPATCH = {
    "Global-U": global_u,
    "Greedy-U": greedy_u,
    "Nash": nash_pb,
    "MES": mes,
    "Phragmen": phragmen_rule,
    "PAV": pav,
    "Smooth-Nash": smooth_nash,
}


def pb_rules(instance: PBInstance, rules=PB_RULES) -> dict[str, RuleResult]:
    out = {}
    for r in rules:
        if r not in _DISPATCH:
            raise ValueError(f"unknown PB rule {r!r}; choose from {PB_RULES}")
        out[r] = _DISPATCH[r](instance)
    return out
