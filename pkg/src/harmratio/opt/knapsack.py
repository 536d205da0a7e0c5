"""Exact 0/1 knapsack.

Ties between optimal subsets go to the one that includes lower-index items
first (compare indicator vectors item 0 first, an included item beats an
excluded one). The same order is used by every subset-selection rule in the
package so that results are reproducible.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd

import numpy as np

_DP_CELLS = 20_000_000
_VALUE_TOL = 1e-9


def _integer_costs(costs, budget, max_scale=10**6):
    """Scale rational costs to a common integer grid; None when not representable."""
    fr = [Fraction(float(c)).limit_denominator(max_scale) for c in costs]
    fb = Fraction(float(budget)).limit_denominator(max_scale)
    if any(abs(float(f) - float(c)) > 1e-12 * max(1.0, abs(c)) for f, c in zip(fr, costs)):
        return None
    den = 1
    for f in fr:
        den = den * f.denominator // gcd(den, f.denominator)
    ic = [int(f * den) for f in fr]
    ib = int(np.floor(float(fb * den) + 1e-9))
    g = 0
    for c in ic:
        g = gcd(g, c)
    if g > 1:
        ic = [c // g for c in ic]
        ib //= g
    return ic, ib


def _dp(ic, values, cap):
    p = len(ic)
    # best[k, c]: best value from items k.. with capacity c
    best = np.zeros((p + 1, cap + 1))
    for k in range(p - 1, -1, -1):
        row = best[k + 1].copy()
        c = ic[k]
        if c <= cap:
            cand = best[k + 1, : cap + 1 - c] + values[k]
            row[c:] = np.maximum(row[c:], cand)
        best[k] = row
    chosen = []
    c = cap
    target = best[0, cap]
    for k in range(p):
        tol = _VALUE_TOL * max(1.0, abs(target))
        if ic[k] <= c and values[k] + best[k + 1, c - ic[k]] >= best[k, c] - tol:
            chosen.append(k)
            c -= ic[k]
    return float(best[0, cap]), chosen


def _branch_and_bound(costs, values, budget):
    p = len(costs)
    order = sorted(range(p), key=lambda k: k)  # index order keeps the tie-break rule
    ratio_order = sorted(range(p), key=lambda k: -(values[k] / costs[k]) if costs[k] > 0 else -np.inf)
    best = [-1.0, []]

    def bound(k, cap, val):
        # fractional relaxation over remaining items k..p-1
        ub = val
        for j in ratio_order:
            if j < k:
                continue
            if costs[j] <= cap:
                cap -= costs[j]
                ub += values[j]
            else:
                if costs[j] > 0:
                    ub += values[j] * cap / costs[j]
                break
        return ub

    def rec(k, cap, val, chosen):
        if k == p:
            if val > best[0] + _VALUE_TOL * max(1.0, abs(best[0])):
                best[0], best[1] = val, list(chosen)
            return
        if bound(k, cap, val) <= best[0] + _VALUE_TOL * max(1.0, abs(best[0])):
            return
        j = order[k]
        if costs[j] <= cap + 1e-12:
            chosen.append(j)
            rec(k + 1, cap - costs[j], val + values[j], chosen)
            chosen.pop()
        rec(k + 1, cap, val, chosen)

    rec(0, float(budget), 0.0, [])
    return best[0], best[1]


def knapsack_max_value(costs, values, budget) -> tuple[float, list[int]]:
    """Maximize total value subject to total cost <= budget.

    Returns ``(value, chosen item indices in increasing order)``.
    """
    costs = [float(c) for c in costs]
    values = [float(v) for v in values]
    if len(costs) != len(values):
        raise ValueError("costs and values differ in length")
    if any(c < 0 for c in costs) or any(v < 0 for v in values):
        raise ValueError("costs and values must be non-negative")
    if budget < 0:
        raise ValueError("budget must be non-negative")
    if not costs:
        return 0.0, []
    scaled = _integer_costs(costs, budget)
    if scaled is not None:
        ic, cap = scaled
        if (len(ic) + 1) * (cap + 1) <= _DP_CELLS:
            return _dp(ic, np.asarray(values), cap)
    val, chosen = _branch_and_bound(costs, values, budget)
    return max(val, 0.0), sorted(chosen)
