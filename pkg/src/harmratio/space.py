"""Outcome spaces: the set O of alternatives that the criteria quantify over.

Three backends share one query interface:

* :class:`EnumeratedSpace` caches the utility vector of every outcome and
  answers queries by scanning (kernel-accelerated).
* :class:`PolytopeSpace` describes outcomes as points of a polytope with
  linear utilities; queries are linear programs.
* :class:`IntegerProgramSpace` is the same description restricted to
  integral points; queries are mixed-integer programs (scipy/HiGHS).

Witnesses are backend-specific handles (row index, or a point ``x``) that
:meth:`OutcomeSpace.decode` turns into domain outcomes.
"""
from __future__ import annotations

import itertools
from math import comb
from typing import Callable, Mapping, Sequence

import numpy as np

from harmratio import kernels
from harmratio.errors import CapExceededError, InfeasibleError, InvalidInstanceError, SolverError
from harmratio.model import (
    Allocation,
    BudgetSelection,
    FiniteUtilityTable,
    GoodsInstance,
    PBInstance,
    ReviewAssignment,
    ReviewInstance,
    pb_utilities,
    utility_vector,
)
from harmratio.opt.lp import LinearProgram, solve_lp

FLOOR_TOL = 1e-9
NEG_INF = float("-inf")

DEFAULT_PROJECT_CAP = 20
DEFAULT_ALLOCATION_CAP = 10**7


class OutcomeSpace:
    """Common interface. ``n`` is the agent count."""

    n: int
    kind: str = "abstract"

    def max_utility_with_floors(self, i: int, floors: Mapping[int, float]):
        """Maximize agent i's utility subject to ``u_k >= floors[k]``.

        Returns ``(value, witness)``; ``(-inf, None)`` if the floors are infeasible.
        """
        raise NotImplementedError

    def max_min_scaled_utility(self, S: Sequence[int], scale: float, floors: Mapping[int, float], reference):
        """Maximize ``min_{i in S} scale * u_i / reference_i`` subject to floors.

        ``reference`` is a length-n vector; zero references follow the ratio
        convention 0/0 -> 1, positive/0 -> inf.
        """
        raise NotImplementedError

    def max_weighted_utility(self, weights, floors: Mapping[int, float] | None = None):
        """Maximize ``weights @ u`` subject to optional floors."""
        raise NotImplementedError

    def utility_of(self, outcome) -> np.ndarray:
        """Utility vector of a domain outcome or witness handle."""
        raise NotImplementedError

    def decode(self, witness):
        """Domain outcome for a witness handle."""
        return witness


# ---------------------------------------------------------------------------
# finite enumeration


class EnumeratedSpace(OutcomeSpace):
    """Finite list of outcomes with cached utilities (rows of ``utilities``)."""

    kind = "enumerated"

    def __init__(self, utilities, decoder: Callable[[int], object] | None = None,
                 labels: Sequence[str] | None = None, instance=None):
        U = np.array(utilities, dtype=float)
        if U.ndim != 2 or U.shape[0] == 0 or U.shape[1] == 0:
            raise InvalidInstanceError("an enumerated space needs at least one outcome over at least one agent")
        U.setflags(write=False)
        self.utilities = U
        self.n = U.shape[1]
        self._decoder = decoder
        self.labels = tuple(labels) if labels is not None else None
        self.instance = instance

    def __len__(self):
        return self.utilities.shape[0]

    def _floor_vectors(self, floors):
        fl = np.zeros(self.n)
        act = np.zeros(self.n, dtype=np.uint8)
        for k, v in floors.items():
            fl[k] = v
            act[k] = 1
        return fl, act

    def feasible_rows(self, floors: Mapping[int, float]) -> np.ndarray:
        fl, act = self._floor_vectors(floors)
        a = act.astype(bool)
        if not a.any():
            return np.arange(len(self))
        return np.flatnonzero(np.all(self.utilities[:, a] >= fl[a] - FLOOR_TOL, axis=1))

    def max_utility_with_floors(self, i, floors):
        fl, act = self._floor_vectors(floors)
        value, row = kernels.floors_argmax(self.utilities, int(i), fl, act, FLOOR_TOL)
        return (NEG_INF, None) if row < 0 else (value, row)

    def max_min_scaled_utility(self, S, scale, floors, reference):
        S = list(S)
        if not S:
            raise ValueError("S must be non-empty")
        rows = self.feasible_rows(floors)
        if rows.size == 0:
            return NEG_INF, None
        r = kernels.ratio_matrix(self.utilities[rows][:, S], np.asarray(reference, dtype=float)[S])
        vals = scale * r.min(axis=1)
        k = int(np.argmax(vals))
        return float(vals[k]), int(rows[k])

    def max_weighted_utility(self, weights, floors=None):
        rows = self.feasible_rows(floors or {})
        if rows.size == 0:
            return NEG_INF, None
        vals = self.utilities[rows] @ np.asarray(weights, dtype=float)
        k = int(np.argmax(vals))
        return float(vals[k]), int(rows[k])

    def max_utilities(self) -> np.ndarray:
        return self.utilities.max(axis=0)

    def utility_of(self, outcome):
        if isinstance(outcome, (int, np.integer)):
            return np.array(self.utilities[int(outcome)])
        if isinstance(outcome, str) and self.labels is not None:
            return np.array(self.utilities[self.labels.index(outcome)])
        if isinstance(outcome, np.ndarray) and outcome.ndim == 1 and outcome.size == self.n:
            return np.asarray(outcome, dtype=float)
        if self.instance is not None:
            return utility_vector(self.instance, outcome)
        raise TypeError("cannot evaluate this outcome against the space")

    def decode(self, witness):
        if witness is None:
            return None
        if self._decoder is not None:
            return self._decoder(int(witness))
        if self.labels is not None:
            return self.labels[int(witness)]
        return int(witness)

    def label(self, witness) -> str:
        if witness is None:
            return ""
        if self.labels is not None:
            return self.labels[int(witness)]
        return f"#{int(witness)}"


def table_space(table: FiniteUtilityTable) -> EnumeratedSpace:
    return EnumeratedSpace(table.utilities, labels=table.labels, instance=table)


def _subset_masks(p: int) -> np.ndarray:
    codes = np.arange(1 << p, dtype=np.int64)
    return ((codes[:, None] >> np.arange(p)) & 1).astype(bool)


def enumerate_budget_feasible(instance: PBInstance, cap: int = DEFAULT_PROJECT_CAP) -> EnumeratedSpace:
    """Every funded set within budget, utilities under the instance's model and floor.

    Rows are ordered by the binary code of the funded set (project 0 is bit 0).
    """
    p = len(instance.projects)
    if p > cap:
        raise CapExceededError(
            f"{p} projects exceed the enumeration cap {cap} (raise the cap or use a greedy/MES/Phragmen rule)"
        )
    masks = _subset_masks(p)
    costs = instance.costs
    ok = masks.astype(float) @ costs <= instance.budget * (1 + 1e-12) + 1e-9
    masks = masks[ok]
    U = pb_utilities(instance, masks)
    ids = instance.project_ids

    def decode(k):
        return BudgetSelection(frozenset(ids[j] for j in np.flatnonzero(masks[k])))

    space = EnumeratedSpace(U, decode, instance=instance)
    space.masks = masks
    return space


def _owners_from_code(code: int, n: int, m: int) -> np.ndarray:
    owners = np.zeros(m, dtype=np.int64)
    for g in range(m - 1, -1, -1):
        code, owners[g] = divmod(code, n)
    return owners


def enumerate_allocations(instance: GoodsInstance, cap: int = DEFAULT_ALLOCATION_CAP) -> EnumeratedSpace:
    """All n^m integral allocations; row k encodes the owners in base n (good 0 most significant)."""
    if instance.divisible:
        raise InvalidInstanceError("enumerate_allocations needs an indivisible instance (use fractional_goods_polytope)")
    n, m = instance.n, instance.m
    if n ** m > cap:
        raise CapExceededError(
            f"{n}^{m} allocations exceed the cap {cap} (raise the cap or use integer_goods_space)"
        )
    U = kernels.allocation_utilities(instance.valuations)

    def decode(k):
        return Allocation.from_owners(_owners_from_code(k, n, m), n)

    return EnumeratedSpace(U, decode, instance=instance)


def allocation_code(owners: Sequence[int], n: int) -> int:
    code = 0
    for o in owners:
        code = code * n + int(o)
    return code


def _compositions(q: int, n: int) -> np.ndarray:
    """All non-negative integer vectors of length n summing to q."""
    out = []
    for bars in itertools.combinations(range(q + n - 1), n - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(q + n - 1 - prev - 1)
        out.append(parts)
    return np.array(out, dtype=float).reshape(-1, n)


def discretize_goods(instance: GoodsInstance, resolution: int, cap: int = DEFAULT_ALLOCATION_CAP) -> EnumeratedSpace:
    """Fractional allocations whose shares are multiples of ``1/resolution``."""
    n, m = instance.n, instance.m
    count = comb(resolution + n - 1, n - 1) ** m
    if count > cap:
        raise CapExceededError(f"{count} grid allocations exceed the cap {cap} (use a coarser resolution)")
    comp = _compositions(resolution, n) / resolution  # (c, n) share vectors
    c = comp.shape[0]
    U = np.zeros((1, n))
    V = instance.valuations
    for g in range(m):
        step = comp * V[:, g][None, :]
        U = (U[:, None, :] + step[None, :, :]).reshape(-1, n)

    def decode(k):
        shares = np.zeros((n, m))
        for g in range(m - 1, -1, -1):
            k, j = divmod(k, c)
            shares[:, g] = comp[j]
        return Allocation(shares)

    return EnumeratedSpace(U, decode, instance=instance.with_divisible(True))


def enumerate_review_assignments(instance: ReviewInstance, cap: int = 2_000_000) -> EnumeratedSpace:
    """Every conflict-free assignment meeting the loads (tiny instances only)."""
    n, load = instance.n, instance.load
    allowed = instance.allowed
    options = [
        [c for c in itertools.combinations(np.flatnonzero(allowed[p]).tolist(), load)]
        for p in range(n)
    ]
    results: list[tuple] = []
    left = [load] * n

    def rec(p, chosen):
        if len(results) > cap:
            raise CapExceededError(f"more than {cap} assignments (use review_assignment_space)")
        if p == n:
            results.append(tuple(chosen))
            return
        # reviewers that still need papers must fit into the remaining papers
        need = sum(left)
        if need != (n - p) * load:
            return
        for combo in options[p]:
            if all(left[r] > 0 for r in combo):
                for r in combo:
                    left[r] -= 1
                if all(left[r] <= n - p - 1 for r in range(n)):
                    chosen.append(frozenset(combo))
                    rec(p + 1, chosen)
                    chosen.pop()
                for r in combo:
                    left[r] += 1

    rec(0, [])
    if not results:
        raise InfeasibleError("no assignment satisfies the load and conflict constraints")
    S = instance.similarity
    U = np.array([[sum(S[p, r] for r in a[p]) for p in range(n)] for a in results])

    def decode(k):
        return ReviewAssignment(results[k])

    space = EnumeratedSpace(U, decode, instance=instance)
    space.assignments = results
    return space


# ---------------------------------------------------------------------------
# polytopes and integer programs


class PolytopeSpace(OutcomeSpace):
    """``{x : A_ub x <= b_ub, A_eq x = b_eq, lo <= x <= hi}`` with utilities ``U @ x``."""

    kind = "polytope"
    integral = False

    def __init__(self, U, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None,
                 decoder: Callable[[np.ndarray], object] | None = None, instance=None,
                 oracle: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None,
                 encoder: Callable[[object], np.ndarray] | None = None):
        self.U = np.asarray(U, dtype=float)
        self.n, self.d = self.U.shape
        self.A_ub = np.zeros((0, self.d)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, self.d)
        self.b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
        self.A_eq = np.zeros((0, self.d)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, self.d)
        self.b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
        self.bounds = [(0.0, np.inf)] * self.d if bounds is None else [tuple(map(float, b)) for b in bounds]
        self._decoder = decoder
        self._encoder = encoder
        self._oracle = oracle
        self.instance = instance

    # the generic solver for one query: maximize c @ x (+ c_t t) with extra rows
    def _solve(self, c, rows_ge=(), t_col=None):
        """Maximize ``c @ z`` where z is x, or (x, t) when ``t_col`` is given.

        ``rows_ge`` are (coefficients over z, rhs) pairs meaning ``coef @ z >= rhs``.
        Returns ``(status, value, z)``.
        """
        extra = 1 if t_col is not None else 0
        dz = self.d + extra

        def pad(M):
            return np.hstack([M, np.zeros((M.shape[0], extra))]) if extra else M

        A = [pad(self.A_ub), pad(self.A_eq)]
        b = [self.b_ub, self.b_eq]
        senses = ["<="] * self.A_ub.shape[0] + ["="] * self.A_eq.shape[0]
        if rows_ge:
            A.append(np.array([r for r, _ in rows_ge], dtype=float).reshape(-1, dz))
            b.append(np.array([v for _, v in rows_ge], dtype=float))
            senses += [">="] * len(rows_ge)
        A = np.vstack(A) if A else np.zeros((0, dz))
        b = np.concatenate(b) if b else np.zeros(0)
        bounds = list(self.bounds) + ([t_col] if extra else [])
        return self._backend_solve(np.asarray(c, dtype=float), A, b, senses, bounds, extra)

    def _backend_solve(self, c, A, b, senses, bounds, extra):
        res = solve_lp(LinearProgram(c, A, b, senses, bounds, maximize=True))
        if res.status == "infeasible":
            return "infeasible", NEG_INF, None
        if res.status == "unbounded":
            raise InvalidInstanceError("utility functional is unbounded on the polytope")
        return "optimal", float(res.value), res.x

    def _floor_rows(self, floors, extra=0):
        rows = []
        for k, v in floors.items():
            coef = np.concatenate([self.U[k], np.zeros(extra)])
            rows.append((coef, float(v)))
        return rows

    def max_utility_with_floors(self, i, floors):
        status, value, x = self._solve(self.U[i], self._floor_rows(floors))
        return (NEG_INF, None) if status != "optimal" else (value, x)

    def max_weighted_utility(self, weights, floors=None):
        c = np.asarray(weights, dtype=float) @ self.U
        status, value, x = self._solve(c, self._floor_rows(floors or {}))
        return (NEG_INF, None) if status != "optimal" else (value, x)

    def max_min_scaled_utility(self, S, scale, floors, reference):
        S = list(S)
        if not S:
            raise ValueError("S must be non-empty")
        ref = np.asarray(reference, dtype=float)
        pos = [i for i in S if ref[i] > 0]
        zero = [i for i in S if ref[i] <= 0]
        if not pos:
            # every member has ratio 1 or inf; inf is reachable iff some member can be positive
            best, wit = NEG_INF, None
            for i in zero:
                v, x = self.max_utility_with_floors(i, floors)
                if v > FLOOR_TOL:
                    return float("inf"), x
                if v > NEG_INF and wit is None:
                    best, wit = scale * 1.0, x
            return best, wit
        c = np.zeros(self.d + 1)
        c[-1] = 1.0
        rows = self._floor_rows(floors, extra=1)
        for i in pos:
            coef = np.concatenate([scale * self.U[i] / ref[i], [-1.0]])
            rows.append((coef, 0.0))
        status, value, z = self._solve(c, rows, t_col=(-np.inf, np.inf))
        if status != "optimal":
            return NEG_INF, None
        x = z[:-1]
        if zero:
            u = self.U @ x
            r = [float("inf") if u[i] > FLOOR_TOL else 1.0 for i in zero]
            value = min(value, scale * min(r))
        return float(value), x

    def max_utilities(self) -> np.ndarray:
        return np.array([self.max_utility_with_floors(i, {})[0] for i in range(self.n)])

    def linear_oracle(self, weights):
        if self._oracle is not None:
            return self._oracle(np.asarray(weights, dtype=float))
        value, x = self.max_weighted_utility(weights)
        if x is None:
            raise InfeasibleError("empty polytope")
        return self.U @ x, x

    def utility_of(self, outcome):
        if isinstance(outcome, np.ndarray) and outcome.ndim == 1:
            if outcome.size == self.d:
                return self.U @ outcome
            if outcome.size == self.n:
                return np.asarray(outcome, dtype=float)
        if self._encoder is not None:
            return self.U @ self._encoder(outcome)
        if self.instance is not None:
            return utility_vector(self.instance, outcome)
        raise TypeError("cannot evaluate this outcome against the space")

    def encode(self, outcome) -> np.ndarray:
        if self._encoder is None:
            raise TypeError("space has no encoder")
        return self._encoder(outcome)

    def decode(self, witness):
        if witness is None:
            return None
        x = np.asarray(witness, dtype=float)
        return self._decoder(x) if self._decoder is not None else x

    def label(self, witness) -> str:
        return "" if witness is None else "point"


class IntegerProgramSpace(PolytopeSpace):
    """Integral points of a polytope; queries go to scipy's MILP solver (HiGHS)."""

    kind = "integer"
    integral = True

    def __init__(self, *args, time_limit: float | None = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.time_limit = time_limit

    def _backend_solve(self, c, A, b, senses, bounds, extra):
        from scipy.optimize import Bounds, LinearConstraint, milp

        lo = np.full(A.shape[0], -np.inf)
        hi = np.full(A.shape[0], np.inf)
        for r, s in enumerate(senses):
            if s in ("<=", "="):
                hi[r] = b[r]
            if s in (">=", "="):
                lo[r] = b[r]
        integrality = np.concatenate([np.ones(self.d), np.zeros(extra)])
        lb = np.array([bd[0] for bd in bounds])
        ub = np.array([bd[1] for bd in bounds])
        options = {"mip_rel_gap": 0.0}
        if self.time_limit is not None:
            options["time_limit"] = self.time_limit
        cons = [LinearConstraint(A, lo, hi)] if A.shape[0] else []
        res = milp(-c, constraints=cons, integrality=integrality, bounds=Bounds(lb, ub), options=options)
        if res.status == 2:
            return "infeasible", NEG_INF, None
        if res.status == 3:
            raise InvalidInstanceError("utility functional is unbounded on the integer space")
        if res.status != 0 or res.x is None:
            raise SolverError(f"MILP solver failed: {res.message}")
        z = np.array(res.x)
        z[: self.d] = np.round(z[: self.d])
        return "optimal", float(c @ z), z

    def relaxed_max_utility(self, i, floors) -> float:
        """Upper bound on :meth:`max_utility_with_floors` from the LP relaxation (-inf if infeasible)."""
        from scipy.optimize import linprog

        A_ub = [self.A_ub] + [-self.U[[k]] for k in floors]
        b_ub = [self.b_ub] + [np.array([-float(v)]) for v in floors.values()]
        res = linprog(
            -self.U[i], A_ub=np.vstack(A_ub), b_ub=np.concatenate(b_ub),
            A_eq=self.A_eq if self.A_eq.shape[0] else None, b_eq=self.b_eq if self.A_eq.shape[0] else None,
            bounds=self.bounds, method="highs",
        )
        if res.status == 2:
            return NEG_INF
        if res.status != 0:
            return float("inf")
        return float(-res.fun)

    def max_min_scaled_utility(self, S, scale, floors, reference):
        value, x = super().max_min_scaled_utility(S, scale, floors, reference)
        if x is not None and np.isfinite(value):
            # recompute on the rounded point so the witness replays exactly
            u = self.U @ x
            ref = np.asarray(reference, dtype=float)
            r = kernels.ratio_matrix(u[None, list(S)], ref[list(S)])[0]
            value = float(scale * r.min())
        return value, x


# ---------------------------------------------------------------------------
# goods spaces


def _goods_structure(instance: GoodsInstance):
    n, m = instance.n, instance.m
    V = instance.valuations
    d = n * m  # x[i*m + g] = share of good g held by agent i
    U = np.zeros((n, d))
    for i in range(n):
        U[i, i * m:(i + 1) * m] = V[i]
    A_eq = np.zeros((m, d))
    for g in range(m):
        A_eq[g, g::m] = 1.0
    return U, A_eq, np.ones(m), [(0.0, 1.0)] * d


def _goods_oracle(instance: GoodsInstance):
    V = instance.valuations
    n, m = V.shape

    def oracle(w):
        own = np.argmax(w[:, None] * V, axis=0)
        X = np.zeros((n, m))
        X[own, np.arange(m)] = 1.0
        return (X * V).sum(axis=1), X.ravel()

    return oracle


def fractional_goods_polytope(instance: GoodsInstance) -> PolytopeSpace:
    """All fractional allocations: n*m shares in [0, 1], each good's shares summing to 1."""
    if not instance.divisible:
        raise InvalidInstanceError("fractional_goods_polytope needs a divisible instance")
    U, A_eq, b_eq, bounds = _goods_structure(instance)
    n, m = instance.n, instance.m
    return PolytopeSpace(
        U, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
        decoder=lambda x: Allocation(np.clip(x.reshape(n, m), 0.0, 1.0) / np.clip(x.reshape(n, m), 0.0, 1.0).sum(axis=0, keepdims=True)),
        encoder=lambda A: np.asarray(A.shares, dtype=float).ravel(),
        instance=instance, oracle=_goods_oracle(instance),
    )


def integer_goods_space(instance: GoodsInstance, time_limit: float | None = None) -> IntegerProgramSpace:
    """All integral allocations as a 0/1 program (no enumeration cap)."""
    U, A_eq, b_eq, bounds = _goods_structure(instance)
    n, m = instance.n, instance.m
    return IntegerProgramSpace(
        U, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
        decoder=lambda x: Allocation.from_owners(np.argmax(x.reshape(n, m), axis=0), n),
        encoder=lambda A: np.asarray(A.shares, dtype=float).ravel(),
        instance=instance.with_divisible(False), oracle=_goods_oracle(instance), time_limit=time_limit,
    )


def review_assignment_space(instance: ReviewInstance, time_limit: float | None = None) -> IntegerProgramSpace:
    """Load-regular conflict-free assignments as a 0/1 program over allowed pairs."""
    n, load = instance.n, instance.load
    pairs = [(p, r) for p in range(n) for r in range(n) if instance.allowed[p, r]]
    d = len(pairs)
    U = np.zeros((n, d))
    A_eq = np.zeros((2 * n, d))
    for k, (p, r) in enumerate(pairs):
        U[p, k] = instance.similarity[p, r]
        A_eq[p, k] = 1.0
        A_eq[n + r, k] = 1.0
    b_eq = np.full(2 * n, float(load))
    index = {pr: k for k, pr in enumerate(pairs)}

    def decode(x):
        assigned = [set() for _ in range(n)]
        for k in np.flatnonzero(x[:d] > 0.5):
            p, r = pairs[k]
            assigned[p].add(r)
        return ReviewAssignment(tuple(frozenset(a) for a in assigned))

    def encode(a: ReviewAssignment):
        x = np.zeros(d)
        for p, rs in enumerate(a.assigned):
            for r in rs:
                x[index[(p, r)]] = 1.0
        return x

    space = IntegerProgramSpace(
        U, A_eq=A_eq, b_eq=b_eq, bounds=[(0.0, 1.0)] * d, decoder=decode, encoder=encode,
        instance=instance, time_limit=time_limit,
    )
    space.pairs = pairs
    return space


def space_for(instance, *, allocation_cap: int = DEFAULT_ALLOCATION_CAP, project_cap: int = DEFAULT_PROJECT_CAP) -> OutcomeSpace:
    """Default auditing space for an instance."""
    if isinstance(instance, FiniteUtilityTable):
        return table_space(instance)
    if isinstance(instance, GoodsInstance):
        if instance.divisible:
            return fractional_goods_polytope(instance)
        if instance.n ** instance.m <= allocation_cap:
            return enumerate_allocations(instance, allocation_cap)
        return integer_goods_space(instance)
    if isinstance(instance, PBInstance):
        return enumerate_budget_feasible(instance, project_cap)
    if isinstance(instance, ReviewInstance):
        return review_assignment_space(instance)
    raise TypeError(f"unsupported instance type {type(instance).__name__}")


def max_utility_with_floors(space: OutcomeSpace, i: int, floors: Mapping[int, float]):
    return space.max_utility_with_floors(i, floors)


def max_min_scaled_utility(space: OutcomeSpace, S, scale, floors, reference):
    return space.max_min_scaled_utility(S, scale, floors, reference)
