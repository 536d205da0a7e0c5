"""Max-min and leximin over 0/1 programs through scipy's MILP interface (HiGHS).

Used where the exact branch and bound gets slow: max-min objectives with
many goods produce long plateaus of tied bounds, which HiGHS cuts through.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from harmratio.errors import InfeasibleError, SolverError
from harmratio.opt.leximin import leximin_search

_TOL = 1e-9


def maxmin_program(U, A_eq, b_eq, active=None, floors=None, time_limit: float | None = None):
    """Maximize ``min_{i active} U_i x`` over binary x with ``A_eq x = b_eq``.

    Inactive agents must keep ``U_i x >= floors[i]``. Returns the rounded
    binary point.
    """
    U = np.asarray(U, dtype=float)
    n, d = U.shape
    A_eq = np.asarray(A_eq, dtype=float)
    act = np.ones(n, dtype=bool) if active is None else np.asarray(active, dtype=bool)
    fl = np.zeros(n) if floors is None else np.asarray(floors, dtype=float)
    A = np.zeros((n + A_eq.shape[0], d + 1))
    lo = np.zeros(A.shape[0])
    hi = np.full(A.shape[0], np.inf)
    A[:n, :d] = U
    A[:n, d] = np.where(act, -1.0, 0.0)
    lo[:n] = np.where(act, 0.0, fl - _TOL)
    A[n:, :d] = A_eq
    lo[n:] = hi[n:] = b_eq
    c = np.zeros(d + 1)
    c[-1] = -1.0
    options = {"mip_rel_gap": 0.0}
    if time_limit is not None:
        options["time_limit"] = time_limit
    res = milp(
        c,
        constraints=LinearConstraint(A, lo, hi),
        integrality=np.concatenate([np.ones(d), [0.0]]),
        bounds=Bounds(np.concatenate([np.zeros(d), [-np.inf]]), np.concatenate([np.ones(d), [np.inf]])),
        options=options,
    )
    if res.status == 2:
        raise InfeasibleError("no binary point satisfies the constraints")
    if res.status != 0 or res.x is None:
        raise SolverError(f"max-min MILP failed: {res.message}")
    return np.round(res.x[:d])


def leximin_program(U, A_eq, b_eq, time_limit: float | None = None):
    """Exact leximin over the 0/1 program (see :mod:`harmratio.opt.leximin`).

    Returns ``(x, minima)``.
    """
    U = np.asarray(U, dtype=float)

    def maxmin(active, floors):
        x = maxmin_program(U, A_eq, b_eq, active, floors, time_limit)
        u = U @ x
        return float(u[active].min()), u, x

    x, _, minima = leximin_search(maxmin, U.shape[0])
    return x, minima


def _goods_program(V):
    n, m = V.shape
    d = n * m
    U = np.zeros((n, d))
    for i in range(n):
        U[i, i * m:(i + 1) * m] = V[i]
    A_eq = np.zeros((m, d))
    for g in range(m):
        A_eq[g, g:d:m] = 1.0
    return U, A_eq, np.ones(m)


def _owners(x, n, m):
    return np.argmax(x.reshape(n, m), axis=0).astype(np.int64)


def maxmin_milp(V, active=None, floors=None, time_limit: float | None = None):
    """Goods version of :func:`maxmin_program`; returns ``(value, owners)``."""
    V = np.asarray(V, dtype=float)
    n, m = V.shape
    U, A_eq, b_eq = _goods_program(V)
    x = maxmin_program(U, A_eq, b_eq, active, floors, time_limit)
    owners = _owners(x, n, m)
    u = np.zeros(n)
    np.add.at(u, owners, V[owners, np.arange(m)])
    act = np.ones(n, dtype=bool) if active is None else np.asarray(active, dtype=bool)
    return float(u[act].min()), owners


def leximin_milp(V, time_limit: float | None = None):
    """Goods leximin; returns ``(owners, minima)``."""
    V = np.asarray(V, dtype=float)
    n, m = V.shape
    U, A_eq, b_eq = _goods_program(V)
    x, minima = leximin_program(U, A_eq, b_eq, time_limit)
    return _owners(x, n, m), minima
