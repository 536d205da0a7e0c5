"""Nash-welfare maximization over polytopes given by a linear oracle.

Both solvers work in utility space. The feasible utility set is the convex
hull of the oracle's answers, so we keep a small set of oracle vertices,
maximize ``sum_i log u_i`` over their convex hull with a projected Newton
method, and ask the oracle for a new vertex in the gradient direction.

The oracle's answer doubles as a certificate: with weights ``1/u_i`` it
returns ``max_y sum_i u_i(y)/u_i``, so the proportional-fairness value of
the current point is ``oracle value / n``. No separate check is needed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from harmratio.errors import ApproxPFError, InvalidInstanceError, SolverError


class LinearOracle(Protocol):
    n: int

    def linear_oracle(self, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(u, x)`` for an outcome x maximizing ``weights @ u(x)``."""


@dataclass
class MNWResult:
    x: np.ndarray
    utilities: np.ndarray
    pf_value: float
    iterations: int


# convex weights below this are treated as zero
_WEIGHT_FLOOR = 1e-15


def _log_objective(U, lam):
    u = U @ lam
    if np.any(u <= 0):
        return -np.inf
    return float(np.log(u).sum())


def _segment_search(u, y):
    """Best ``t`` in [0, 1] for ``sum log((1-t) u + t y)``; bisection on the derivative."""

    def slope(t):
        return float(np.sum((y - u) / ((1 - t) * u + t * y)))

    if slope(0.0) <= 0:
        return 0.0
    if np.all(y > 0) and slope(1.0) >= 0:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo


def _restricted_mnw(U, lam, tol=1e-13, max_iter=500):
    """Maximize ``sum log (U @ lam)`` over the probability simplex.

    Newton steps on the support with the sum constraint and a ratio test
    that drops coordinates hitting zero. When the support is optimal, the
    outside coordinate with the largest gradient (if it beats the multiplier
    ``n``) is brought in by an exact segment search toward its vertex.
    """
    n = U.shape[0]
    lam = lam.copy()
    support = lam > 0
    for _ in range(max_iter):
        u = U @ lam
        g = U.T @ (1.0 / u)
        idx = np.flatnonzero(support)
        A = U[:, idx] / u[:, None]
        k = idx.size
        KKT = np.zeros((k + 1, k + 1))
        KKT[:k, :k] = A.T @ A  # negated Hessian on the support
        KKT[:k, k] = 1.0
        KKT[k, :k] = 1.0
        rhs = np.concatenate([g[idx], [0.0]])
        d = np.linalg.lstsq(KKT, rhs, rcond=None)[0][:k]
        decrement = float(g[idx] @ d)
        if decrement <= tol * n:
            outside = np.flatnonzero(~support)
            if outside.size == 0:
                return lam
            j = outside[np.argmax(g[outside])]
            if g[j] <= n * (1 + 1e-12):
                return lam
            t = _segment_search(u, U[:, j])
            if t <= 0:
                return lam
            lam *= 1 - t
            lam[j] += t
            support = lam > 0
            continue
        neg = d < 0
        step = 1.0
        if np.any(neg):
            step = min(1.0, float(np.min(-lam[idx][neg] / d[neg])))
            if step < 1e-12:
                # a blocking weight is numerically zero already: drop it and re-solve
                lam[idx[neg][np.argmin(-lam[idx][neg] / d[neg])]] = 0.0
                lam /= lam.sum()
                support = lam > 0
                continue
        f0 = _log_objective(U, lam)
        t = step
        while t > 1e-14:
            cand = lam.copy()
            cand[idx] = np.maximum(cand[idx] + t * d, 0.0)
            if _log_objective(U, cand) >= f0 + 1e-4 * t * decrement:
                break
            t *= 0.5
        else:
            return lam
        if t == step and step < 1.0:
            # the limiting coordinate lands exactly on zero
            cand[idx[neg][np.argmin(-lam[idx][neg] / d[neg])]] = 0.0
        cand[cand < _WEIGHT_FLOOR] = 0.0
        lam = cand / cand.sum()
        support = lam > 0
    return lam


def _start(space: LinearOracle):
    n = space.n
    Us, Xs = [], []
    for i in range(n):
        w = np.zeros(n)
        w[i] = 1.0
        u, x = space.linear_oracle(w)
        if u[i] <= 0:
            raise InvalidInstanceError(f"agent {i} cannot reach positive utility anywhere in the space")
        Us.append(np.asarray(u, dtype=float))
        Xs.append(np.asarray(x, dtype=float))
    return Us, Xs


def _simplicial(space: LinearOracle, stop: Callable[[float], bool], max_iter: int):
    n = space.n
    Us, Xs = _start(space)
    lam = np.full(len(Us), 1.0 / len(Us))
    it = 0
    best = None
    while True:
        U = np.column_stack(Us)
        lam = _restricted_mnw(U, lam)
        keep = lam > 0
        Us = [u for u, k in zip(Us, keep) if k]
        Xs = [x for x, k in zip(Xs, keep) if k]
        lam = lam[keep]
        U = np.column_stack(Us)
        u = U @ lam
        y_u, y_x = space.linear_oracle(1.0 / u)
        pf = float(np.dot(y_u, 1.0 / u)) / n
        x = sum(l * xx for l, xx in zip(lam, Xs))
        if best is None or pf < best.pf_value:
            best = MNWResult(x, u, pf, it)
        if stop(pf):
            return MNWResult(x, u, pf, it), best
        it += 1
        if it > max_iter:
            return None, best
        t = _segment_search(u, np.asarray(y_u, dtype=float))
        if t <= 0:
            # numerically converged: the best vertex cannot improve the point
            return MNWResult(x, u, pf, it), best
        Us.append(np.asarray(y_u, dtype=float))
        Xs.append(np.asarray(y_x, dtype=float))
        lam = np.concatenate([lam * (1 - t), [t]])


def eisenberg_gale_mnw(space: LinearOracle, tol: float = 1e-9, max_iter: int = 5000) -> MNWResult:
    """Maximize Nash welfare over a polytope space.

    Stops once the certified proportional-fairness value is at most
    ``1 + tol``; at that point the objective is within ``n * tol`` of
    optimal (duality gap of the concave program).
    """
    res, best = _simplicial(space, lambda pf: pf <= 1 + tol, max_iter)
    if res is None:
        raise SolverError(f"Nash welfare solver did not converge in {max_iter} iterations (pf value {best.pf_value})")
    return res


def proportional_point(space: LinearOracle):
    """Average of every agent's favourite vertex: each agent gets at least 1/n of its maximum."""
    Us, Xs = _start(space)
    n = space.n
    return sum(Us) / n, sum(Xs) / n


def approx_pf_solve(space: LinearOracle, epsilon: float, max_iter: int = 2000) -> MNWResult:
    """Find an outcome whose proportional-fairness value is at most ``1 + epsilon``.

    Starts at the proportional point and returns immediately if its
    certificate already suffices. Otherwise alternates best responses
    (oracle calls) with improving steps until certified. Raises
    :class:`~harmratio.errors.ApproxPFError` at the iteration cap, carrying
    the best point seen.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    n = space.n
    u0, x0 = proportional_point(space)
    y_u, _ = space.linear_oracle(1.0 / u0)
    pf0 = float(np.dot(y_u, 1.0 / u0)) / n
    if pf0 <= 1 + epsilon:
        return MNWResult(x0, u0, pf0, 0)
    res, best = _simplicial(space, lambda pf: pf <= 1 + epsilon, max_iter)
    if res is None:
        raise ApproxPFError(
            f"no (1+{epsilon})-PF certificate within {max_iter} iterations", best.x, best.pf_value
        )
    return res
