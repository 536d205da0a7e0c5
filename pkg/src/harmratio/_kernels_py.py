"""Pure-Python/numpy implementations of the hot scans and searches.

Every function here has a twin with the same signature in ``_kernels.pyx``;
``harmratio.kernels`` picks one at import time. The tests run both.
"""
from __future__ import annotations

import math

import numpy as np

NEG_INF = float("-inf")
INF = float("inf")


def floors_argmax(U, target, floors, active, tol):
    """Best ``U[k, target]`` over rows meeting every active floor; ``(-inf, -1)`` if none.

    Ties go to the lowest row index.
    """
    U = np.asarray(U, dtype=float)
    active = np.asarray(active, dtype=bool)
    if active.any():
        ok = np.all(U[:, active] >= np.asarray(floors, dtype=float)[active] - tol, axis=1)
        rows = np.flatnonzero(ok)
    else:
        rows = np.arange(U.shape[0])
    if rows.size == 0:
        return NEG_INF, -1
    col = U[rows, target]
    k = int(np.argmax(col))
    return float(col[k]), int(rows[k])


def _merge(val, idx, cand_val, cand_idx):
    """Elementwise max of (val, idx) with candidates; ties keep the lower row index."""
    better = (cand_val > val) | ((cand_val == val) & (cand_idx >= 0) & ((idx < 0) | (cand_idx < idx)))
    val[better] = cand_val[better]
    idx[better] = cand_idx[better]


def ihr_pairs(U, cur, tol):
    """``V[i, j]`` = best utility of i over rows hurting nobody outside {i, j}.

    A row contributes to pair (i, j) iff its hurt set (agents strictly below
    their current utility, up to ``tol``) is a subset of {i, j}, so each row
    is routed by the size of its hurt set and the scan stays O(K n).
    ``W[i, j]`` holds the witness row (lowest index among ties), -1 if none.
    """
    U = np.asarray(U, dtype=float)
    cur = np.asarray(cur, dtype=float)
    K, n = U.shape
    V = np.full((n, n), NEG_INF)
    W = np.full((n, n), -1, dtype=np.int64)
    hurt = U < cur[None, :] - tol
    nh = hurt.sum(axis=1)

    rows0 = np.flatnonzero(nh == 0)
    if rows0.size:
        a = np.argmax(U[rows0], axis=0)
        best0 = U[rows0, :][a, np.arange(n)]
        idx0 = rows0[a]
        cand = np.repeat(best0[:, None], n, axis=1)
        cidx = np.repeat(idx0[:, None], n, axis=1)
        _merge(V, W, cand, cidx)

    rows1 = np.flatnonzero(nh == 1)
    if rows1.size:
        hs = np.argmax(hurt[rows1], axis=1)
        for h in np.unique(hs):
            rr = rows1[hs == h]
            a = np.argmax(U[rr], axis=0)
            best = U[rr, :][a, np.arange(n)]
            bidx = rr[a]
            # pairs (i, h): i keeps floors except on h
            cv = np.full((n, n), NEG_INF)
            ci = np.full((n, n), -1, dtype=np.int64)
            cv[:, h] = best
            ci[:, h] = bidx
            # pairs (h, j): the improving agent is the hurt one
            cv[h, :] = best[h]
            ci[h, :] = bidx[h]
            _merge(V, W, cv, ci)

    rows2 = np.flatnonzero(nh == 2)
    for k in rows2:
        a, b = np.flatnonzero(hurt[k])
        for i, j in ((a, b), (b, a)):
            v = U[k, i]
            if v > V[i, j] or (v == V[i, j] and (W[i, j] < 0 or k < W[i, j])):
                V[i, j] = v
                W[i, j] = k
    np.fill_diagonal(V, NEG_INF)
    np.fill_diagonal(W, -1)
    return V, W


def ratio_matrix(U, cur):
    """Per-agent ratios ``U/cur`` with 0/0 -> 1 and positive/0 -> inf."""
    U = np.asarray(U, dtype=float)
    cur = np.asarray(cur, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = U / cur[None, :]
    zero = cur[None, :] == 0
    r = np.where(zero & (U > 0), INF, r)
    r = np.where(zero & (U <= 0), 1.0, r)
    return r


def ghr_sort(U, cur, min_k, alpha, tol):
    """Sort construction for the group harm ratio over a finite space.

    For each row the hurt agents form the forced sacrifice set; the others are
    sorted by ratio and every top-k prefix (k >= ``min_k``) is a candidate with
    value ``k/(k+h) * r_(k)``. Returns ``(value, row, k, strict, violates)``:
    the best candidate (``-inf`` when no prefix is admissible), its row and
    size, whether some member of the best group is scaled strictly above the
    value, and whether any candidate violates the ``alpha`` bound.
    """
    U = np.asarray(U, dtype=float)
    cur = np.asarray(cur, dtype=float)
    K, n = U.shape
    hurt = U < cur[None, :] - tol
    h = hurt.sum(axis=1)
    r = ratio_matrix(U, cur)
    r = np.where(hurt, NEG_INF, r)
    rs = -np.sort(-r, axis=1)
    ks = np.arange(1, n + 1)
    f = ks[None, :] / (ks[None, :] + h[:, None])
    valid = (ks[None, :] <= (n - h)[:, None]) & (ks[None, :] >= max(min_k, 1))
    with np.errstate(invalid="ignore"):
        cand = np.where(valid, f * rs, NEG_INF)
        top = np.where(valid, f * rs[:, :1], NEG_INF)
    if not valid.any():
        return NEG_INF, -1, 0, False, False
    flat = cand.ravel()
    value = float(flat.max())
    if value == NEG_INF:
        return NEG_INF, -1, 0, False, False
    close = flat >= value - tol if np.isfinite(value) else flat == value
    pos = np.flatnonzero(close)
    first = int(pos[0])
    row, k = divmod(first, n)
    strict = bool(np.any(top.ravel()[pos] > value + tol)) if np.isfinite(value) else True
    with np.errstate(invalid="ignore"):
        violates = bool(np.any((cand >= alpha - tol) & (top > alpha + tol)))
    return value, int(row), int(k + 1), strict, violates


def allocation_utilities(V):
    """Utility matrix of all n^m integral allocations; row index = base-n owner code, good 0 most significant."""
    V = np.asarray(V, dtype=float)
    n, m = V.shape
    util = np.zeros((1, n))
    eye = np.eye(n)
    for g in range(m):
        step = eye * V[:, g][:, None]  # row i: agent i gets good g
        util = (util[:, None, :] + step[None, :, :]).reshape(-1, n)
    return util


# ---------------------------------------------------------------------------
# branch and bound over integral allocations


def _goods_order(V):
    return np.argsort(-V.max(axis=0), kind="stable")


def _suffix_sums(V, order):
    n, m = V.shape
    rem = np.zeros((m + 1, n))
    for p in range(m - 1, -1, -1):
        rem[p] = rem[p + 1] + V[:, order[p]]
    return rem


def _nash_key(u):
    pos = u > 0
    return int(pos.sum()), float(np.log(u[pos]).sum()) if pos.any() else 0.0


def _linear_suffix(V, order, weights):
    """``out[p] = sum over goods order[p:] of max_i weights[i] * V[i, g]``."""
    n, m = V.shape
    out = np.zeros(m + 1)
    for p in range(m - 1, -1, -1):
        out[p] = out[p + 1] + float((weights * V[:, order[p]]).max())
    return out


def bnb_nash(V, incumbent, tangent=None):
    """Lexicographic max of (#agents with positive utility, sum of their logs).

    ``incumbent`` is an owner vector used as the starting lower bound.
    ``tangent`` (optional, all entries positive) is a utility vector whose
    supporting hyperplane of the log objective adds a linear bound, valid
    while every agent must end up positive; the fractional optimum is the
    natural choice. Returns the best owner vector found (exact).
    """
    V = np.asarray(V, dtype=float)
    n, m = V.shape
    order = _goods_order(V)
    rem = _suffix_sums(V, order)
    owners = np.asarray(incumbent, dtype=np.int64).copy()
    u0 = np.zeros(n)
    for g in range(m):
        u0[owners[g]] += V[owners[g], g]
    best = list(_nash_key(u0))
    best_owners = owners.copy()
    cur = np.zeros(n)
    assign = np.zeros(m, dtype=np.int64)
    if tangent is not None:
        tw = 1.0 / np.asarray(tangent, dtype=float)
        tconst = float(np.sum(np.log(tangent)) - n)
        tsuf = _linear_suffix(V, order, tw)

    def bound_prunes(p):
        if tangent is not None and best[0] == n:
            if tconst + float(cur @ tw) + tsuf[p] <= best[1] + 1e-12:
                return True
        pos = cur > 0
        c0 = int(pos.sum())
        zpot = (~pos) & (rem[p] > 0)
        cub = c0 + min(int(zpot.sum()), m - p)
        if cub < best[0]:
            return True
        if cub > best[0]:
            return False
        need = best[0] - c0
        lub = float(np.log(cur[pos]).sum()) if c0 else 0.0
        if c0 and p < m:
            cp = cur[pos]
            G = V[np.ix_(pos, order[p:])]
            gains = np.log1p(G / cp[:, None]).max(axis=0)
            lub += float(gains.sum())
        if need > 0:
            zl = np.sort(np.log(rem[p][zpot]))[::-1]
            lub += float(zl[:need].sum())
        return lub <= best[1] + 1e-12

    def rec(p):
        if p == m:
            key = _nash_key(cur)
            if key[0] > best[0] or (key[0] == best[0] and key[1] > best[1] + 1e-12):
                best[0], best[1] = key
                best_owners[order] = assign[:m]
            return
        if bound_prunes(p):
            return
        g = order[p]
        col = V[:, g]
        with np.errstate(divide="ignore"):
            gain = np.where(cur > 0, np.log1p(col / np.where(cur > 0, cur, 1.0)), np.where(col > 0, INF, 0.0))
        cand = np.argsort(-gain, kind="stable")
        tried_zero = False
        for i in cand:
            if col[i] <= 0:
                if tried_zero:
                    continue
                tried_zero = True
            assign[p] = i
            prev = cur[i]
            cur[i] = prev + col[i]
            rec(p + 1)
            cur[i] = prev

    rec(0)
    return best_owners


def bnb_maxmin(V, active, floors, incumbent, tol, weights=None):
    """Maximize the minimum utility over ``active`` agents of an integral allocation.

    Inactive agents must keep utility at least ``floors[i] - tol``.
    ``incumbent`` must satisfy those floors. Optional non-negative
    ``weights`` (zero on inactive agents, summing to 1) give the Lagrangian
    bound ``min over active <= sum_i w_i u_i``. Returns ``(value, owners)``.
    """
    V = np.asarray(V, dtype=float)
    n, m = V.shape
    act = np.asarray(active, dtype=bool)
    fl = np.asarray(floors, dtype=float)
    frozen = ~act
    order = _goods_order(V)
    rem = _suffix_sums(V, order)
    owners = np.asarray(incumbent, dtype=np.int64).copy()
    u0 = np.zeros(n)
    for g in range(m):
        u0[owners[g]] += V[owners[g], g]
    best = [float(u0[act].min())]
    best_owners = owners.copy()
    cur = np.zeros(n)
    assign = np.zeros(m, dtype=np.int64)
    use_w = weights is not None
    if use_w:
        w = np.asarray(weights, dtype=float)
        wsuf = _linear_suffix(V, order, w)

    def rec(p):
        if use_w and float(cur @ w) + wsuf[p] <= best[0] + tol:
            return
        ub = cur + rem[p]
        if ub[act].min() <= best[0] + tol:
            return
        if np.any(ub[frozen] < fl[frozen] - tol):
            return
        if p == m:
            best[0] = float(cur[act].min())
            best_owners[order] = assign
            return
        g = order[p]
        col = V[:, g]
        cand = np.lexsort((np.arange(n), cur))  # neediest first
        tried_zero = False
        for i in cand:
            if col[i] <= 0:
                if tried_zero:
                    continue
                tried_zero = True
            assign[p] = i
            prev = cur[i]
            cur[i] = prev + col[i]
            rec(p + 1)
            cur[i] = prev

    rec(0)
    return best[0], best_owners
