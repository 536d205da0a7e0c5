"""Dense two-phase tableau simplex.

Small, dependency-free LP solver used by the polytope outcome spaces. It
switches from Dantzig's rule to Bland's rule once degenerate pivots pile up,
so it always terminates; a stalled or numerically inconsistent solve raises
:class:`~harmratio.errors.SolverError` rather than reporting a wrong status.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from harmratio.errors import SolverError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_PIVOT_TOL = 1e-10
_COST_TOL = 1e-10
_FEAS_TOL = 1e-7


@dataclass
class LinearProgram:
    """``optimize c @ x`` subject to ``A[k] @ x (senses[k]) b[k]`` and per-variable bounds.

    ``senses`` entries are ``"<="``, ``"="`` or ``">="``; ``bounds`` defaults
    to ``(0, inf)`` for every variable. Use ``-np.inf`` / ``np.inf`` for
    missing bounds.
    """

    c: np.ndarray
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    senses: Sequence[str] | None = None
    bounds: Sequence[tuple[float, float]] | None = None
    maximize: bool = False

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        nv = self.c.size
        if self.A is None:
            self.A = np.zeros((0, nv))
            self.b = np.zeros(0)
            self.senses = ()
        self.A = np.asarray(self.A, dtype=float).reshape(-1, nv)
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.senses is None:
            self.senses = ("<=",) * self.A.shape[0]
        self.senses = tuple(self.senses)
        if self.bounds is None:
            self.bounds = [(0.0, np.inf)] * nv
        self.bounds = [(float(lo), float(hi)) for lo, hi in self.bounds]
        if self.A.shape[0] != self.b.size or len(self.senses) != self.b.size:
            raise ValueError("constraint matrix, rhs and senses disagree in length")
        if len(self.bounds) != nv:
            raise ValueError("need one (lo, hi) bound pair per variable")
        for s in self.senses:
            if s not in ("<=", "=", ">="):
                raise ValueError(f"unknown constraint sense {s!r}")
        for lo, hi in self.bounds:
            if lo > hi:
                raise ValueError("variable with lower bound above upper bound")

    @property
    def n_vars(self) -> int:
        return self.c.size


@dataclass
class LPResult:
    status: str
    value: float = float("nan")
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    dual_value: float = float("nan")
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    """Canonical-form tableau: rows 0..m-1 constraints, last row reduced costs."""

    def __init__(self, A, b, basis):
        m, n = A.shape
        self.T = np.zeros((m + 1, n + 1))
        self.T[:m, :n] = A
        self.T[:m, n] = b
        self.basis = np.array(basis, dtype=int)
        self.m, self.n = m, n

    def set_cost(self, c):
        m, n = self.m, self.n
        self.T[m, :n] = c
        self.T[m, n] = 0.0
        cb = c[self.basis]
        self.T[m, :] -= cb @ self.T[:m, :]

    def pivot(self, r, e):
        T = self.T
        T[r, :] /= T[r, e]
        col = T[:, e].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r, :])
        self.basis[r] = e

    def run(self, allowed, max_iter, counter):
        """Minimize the current cost row over columns where ``allowed`` is True."""
        m, n = self.m, self.n
        T = self.T
        degenerate = 0
        bland = False
        threshold = 5 * (m + n)
        while True:
            if counter[0] >= max_iter:
                raise SolverError(f"simplex iteration cap {max_iter} reached")
            red = T[m, :n]
            scale = max(1.0, float(np.abs(red).max(initial=0.0)))
            cand = np.flatnonzero(allowed & (red < -_COST_TOL * scale))
            if cand.size == 0:
                return OPTIMAL
            e = int(cand[0]) if bland else int(cand[np.argmin(red[cand])])
            col = T[:m, e]
            rows = np.flatnonzero(col > _PIVOT_TOL)
            if rows.size == 0:
                return UNBOUNDED
            ratios = T[rows, n] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            # smallest basic index among ties (Bland's leaving rule)
            r = int(ties[np.argmin(self.basis[ties])])
            if best <= 1e-12:
                degenerate += 1
                if degenerate > threshold:
                    bland = True
            self.pivot(r, e)
            counter[0] += 1


def _standard_form(lp: LinearProgram):
    """Rewrite as ``min c' y`` s.t. ``A' y (senses) b'`` with ``y >= 0``.

    Returns the pieces plus the affine map back to the original variables:
    ``x = shift + M @ y``.
    """
    nv = lp.n_vars
    cols = []  # (original var, sign) per standard column
    shift = np.zeros(nv)
    extra_rows = []  # (std column, upper bound) rows y_col <= ub
    for j, (lo, hi) in enumerate(lp.bounds):
        if np.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    ns = len(cols)
    M = np.zeros((nv, ns))
    for k, (j, s) in enumerate(cols):
        M[j, k] = s
    sign = -1.0 if lp.maximize else 1.0
    c_std = sign * (lp.c @ M)
    const = sign * float(lp.c @ shift)
    A_std = lp.A @ M
    b_std = lp.b - lp.A @ shift
    senses = list(lp.senses)
    if extra_rows:
        E = np.zeros((len(extra_rows), ns))
        eb = np.zeros(len(extra_rows))
        for r, (k, ub) in enumerate(extra_rows):
            E[r, k] = 1.0
            eb[r] = ub
        A_std = np.vstack([A_std, E])
        b_std = np.concatenate([b_std, eb])
        senses += ["<="] * len(extra_rows)
    return c_std, const, A_std, b_std, senses, shift, M


def solve_lp(lp: LinearProgram, max_iter: int | None = None) -> LPResult:
    """Solve ``lp``; returns an :class:`LPResult` with status optimal/infeasible/unbounded."""
    c, const, A, b, senses, shift, M = _standard_form(lp)
    m, ns = A.shape
    sign = -1.0 if lp.maximize else 1.0
    if max_iter is None:
        max_iter = 50 * (m + ns) + 1000

    # slack / surplus columns
    n_slack = sum(1 for s in senses if s != "=")
    S = np.zeros((m, n_slack))
    k = 0
    slack_of_row = np.full(m, -1)
    for r, s in enumerate(senses):
        if s == "<=":
            S[r, k] = 1.0
            slack_of_row[r] = ns + k
            k += 1
        elif s == ">=":
            S[r, k] = -1.0
            slack_of_row[r] = ns + k
            k += 1
    A1 = np.hstack([A, S])
    b1 = b.copy()
    row_sign = np.where(b1 < 0, -1.0, 1.0)
    A1 *= row_sign[:, None]
    b1 *= row_sign

    # initial basis: a +1 slack where possible, artificials elsewhere
    n1 = A1.shape[1]
    basis = []
    art_rows = []
    for r in range(m):
        j = slack_of_row[r]
        if j >= 0 and A1[r, j] > 0:
            basis.append(j)
        else:
            basis.append(-1)
            art_rows.append(r)
    n_art = len(art_rows)
    Art = np.zeros((m, n_art))
    for k, r in enumerate(art_rows):
        Art[r, k] = 1.0
        basis[r] = n1 + k
    full = np.hstack([A1, Art])
    tab = _Tableau(full, b1, basis)
    counter = [0]
    ntot = n1 + n_art
    allowed = np.ones(ntot, dtype=bool)
    keep = np.ones(m, dtype=bool)

    if n_art:
        c1 = np.zeros(ntot)
        c1[n1:] = 1.0
        tab.set_cost(c1)
        status = tab.run(allowed, max_iter, counter)
        if status != OPTIMAL:
            raise SolverError("phase one reported unbounded; numerical breakdown")
        phase1 = -tab.T[m, -1]
        if phase1 > _FEAS_TOL * max(1.0, float(np.abs(b1).max(initial=0.0))):
            return LPResult(INFEASIBLE, iterations=counter[0])
        # drive artificials out of the basis
        for r in range(m):
            if tab.basis[r] >= n1:
                row = tab.T[r, :n1]
                nz = np.flatnonzero(np.abs(row) > 1e-9)
                if nz.size:
                    tab.pivot(r, int(nz[np.argmax(np.abs(row[nz]))]))
                else:
                    keep[r] = False
        if not keep.all():
            rows = np.concatenate([np.flatnonzero(keep), [m]])
            tab.T = tab.T[rows]
            tab.basis = tab.basis[keep]
            tab.m = int(keep.sum())
        allowed[n1:] = False
    m_eff = tab.m

    c2 = np.zeros(ntot)
    c2[:ns] = c
    tab.set_cost(c2)
    status = tab.run(allowed, max_iter, counter)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, iterations=counter[0])

    y = np.zeros(ntot)
    y[tab.basis] = tab.T[:m_eff, -1]
    y = y[:ns]
    x = shift + M @ y
    # feasibility audit against the original system
    resid = lp.A @ x - lp.b
    scale = 1.0 + float(np.abs(lp.b).max(initial=0.0)) + float(np.abs(lp.A).max(initial=0.0)) * float(np.abs(x).max(initial=0.0))
    tol = 1e-7 * scale
    for r, s in enumerate(lp.senses):
        if (s == "<=" and resid[r] > tol) or (s == ">=" and resid[r] < -tol) or (s == "=" and abs(resid[r]) > tol):
            raise SolverError("simplex returned a point violating the constraints; ill-conditioned LP")
    for j, (lo, hi) in enumerate(lp.bounds):
        if x[j] < lo - tol or x[j] > hi + tol:
            raise SolverError("simplex returned a point violating variable bounds")
        x[j] = min(max(x[j], lo), hi)
    value = float(lp.c @ x)

    # duals of the standard-form rows: B^T w = c_B
    duals = None
    dual_value = float("nan")
    rows_kept = np.flatnonzero(keep)
    try:
        w = np.linalg.solve(full[rows_kept][:, tab.basis].T, c2[tab.basis])
        w_full = np.zeros(m)
        w_full[rows_kept] = w
        w_full *= row_sign
        dual_value = sign * (float(b @ w_full) + const)
        duals = sign * w_full[: lp.A.shape[0]]
    except np.linalg.LinAlgError:
        pass
    return LPResult(OPTIMAL, value, x, duals, dual_value, counter[0])
