"""Fairness criteria over an outcome space.

Ratio conventions live here and nowhere else: ``positive/0`` is infinite,
``0/0`` is 1 inside group ratios and "no claim" for IHR pairs. Strict
inequalities use an absolute tolerance of ``TOL``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from harmratio import kernels
from harmratio.errors import CapExceededError, InvalidOutcomeError
from harmratio.model import (
    Allocation,
    GoodsInstance,
    ReviewAssignment,
    ReviewInstance,
    check_allocation,
    nash_welfare,
)
from harmratio.space import EnumeratedSpace, OutcomeSpace, PolytopeSpace

TOL = 1e-9
INF = float("inf")
NEG_INF_BOUND = float("-inf")

EXHAUSTIVE_MAX_AGENTS = 12
POLYTOPE_GROUP_MAX_AGENTS = 6
GF_MAX_AGENTS = 5
GF_MAX_GOODS = 8


def _ratio(a: float, b: float) -> float:
    if b > 0:
        return a / b
    return INF if a > 0 else 1.0


def min_group_size(n: int, fraction: float) -> int:
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("min_group_fraction must lie in [0, 1]")
    return max(1, math.ceil(fraction * n - 1e-12))


# ---------------------------------------------------------------------------
# witnesses


@dataclass(frozen=True)
class HarmWitness:
    """An alternative outcome together with the groups that certify a ratio.

    ``improving`` is i (IHR) or S (group ratios); ``sacrificed`` is j or T.
    ``handle`` is the space's own reference to the alternative (row index or
    point); ``label`` is a printable name for it.
    """

    kind: str
    improving: tuple[int, ...]
    sacrificed: tuple[int, ...]
    handle: object
    label: str
    ratio: float
    strict: bool = True

    def factor(self) -> float:
        if self.kind == "ihr":
            return 0.5
        union = set(self.improving) | set(self.sacrificed)
        return len(self.improving) / len(union)

    def replay(self, space: OutcomeSpace, current) -> float:
        """Recompute the ratio from the alternative's utilities.

        Raises :class:`InvalidOutcomeError` if an agent outside the two
        groups would be hurt.
        """
        cur = np.asarray(current, dtype=float)
        if self.handle is None:
            return self.ratio
        alt = space.utility_of(self.handle)
        free = set(self.improving) | set(self.sacrificed)
        for k in range(len(cur)):
            if k not in free and alt[k] < cur[k] - 1e-7:
                raise InvalidOutcomeError(f"witness hurts agent {k} outside the declared groups")
        r = min(_ratio(alt[i], cur[i]) for i in self.improving)
        return self.factor() * r

    def outcome(self, space: OutcomeSpace):
        return space.decode(self.handle)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "improving": list(self.improving),
            "sacrificed": list(self.sacrificed),
            "outcome": self.label,
            "ratio": _json_number(self.ratio),
            "strict": self.strict,
        }


def _json_number(x: float):
    return "inf" if x == INF else float(x)


def _label(space, handle) -> str:
    if handle is None:
        return "current"
    if hasattr(space, "label"):
        return space.label(handle)
    return str(handle)


def current_utilities(space: OutcomeSpace, outcome) -> np.ndarray:
    cur = np.asarray(space.utility_of(outcome), dtype=float)
    if cur.shape != (space.n,):
        raise InvalidOutcomeError(f"outcome has {cur.size} utilities, space has {space.n} agents")
    return cur


# ---------------------------------------------------------------------------
# individual harm ratio


def ihr(space: OutcomeSpace, outcome) -> tuple[float, HarmWitness | None]:
    """Individual harm ratio and a witness (i, j, o').

    For each ordered pair i != j, agent i maximizes its utility over
    outcomes that keep everyone except i and j at least as well off; the
    value is the largest half-ratio against i's current utility.
    """
    cur = current_utilities(space, outcome)
    n = space.n
    if n == 1:
        v, h = space.max_utility_with_floors(0, {})
        if cur[0] == 0 and v <= 0:
            return 0.0, None
        r = 0.5 * _ratio(v, cur[0])
        return r, HarmWitness("ihr", (0,), (), h, _label(space, h), r)
    if isinstance(space, EnumeratedSpace):
        return _ihr_enumerated(space, cur)
    return _ihr_programs(space, cur)


def _ihr_enumerated(space: EnumeratedSpace, cur):
    V, W = kernels.ihr_pairs(space.utilities, cur, TOL)
    n = space.n
    best, arg = -INF, None
    for i in range(n):
        for j in range(n):
            if i == j or W[i, j] < 0:
                continue
            v = V[i, j]
            if cur[i] == 0 and v <= 0:
                continue
            r = 0.5 * _ratio(v, cur[i])
            if r > best:
                best, arg = r, (i, j)
    if arg is None:
        return 0.0, None
    i, j = arg
    row = int(W[i, j])
    return best, HarmWitness("ihr", (i,), (j,), row, _label(space, row), best)


def _ihr_programs(space: OutcomeSpace, cur):
    """Pair scan; integer spaces solve pairs in decreasing LP-bound order and stop early."""
    n = space.n
    ub = space.max_utilities()
    relaxed = getattr(space, "relaxed_max_utility", None)
    pairs = []
    for i in range(n):
        if cur[i] == 0 and ub[i] <= 0:
            continue
        for j in range(n):
            if j != i:
                floors = {k: cur[k] for k in range(n) if k not in (i, j)}
                bound = relaxed(i, floors) if relaxed is not None else ub[i]
                if bound > NEG_INF_BOUND:
                    pairs.append((0.5 * _ratio(max(bound, 0.0), cur[i]), i, j, floors))
    pairs.sort(key=lambda p: -p[0])
    best, arg, handle = -INF, None, None
    for bound, i, j, floors in pairs:
        if bound <= best * (1 + 1e-9) + 1e-12:
            break
        v, x = space.max_utility_with_floors(i, floors)
        if x is None:
            continue
        v = float(space.utility_of(x)[i])
        if cur[i] == 0 and v <= 0:
            continue
        r = 0.5 * _ratio(v, cur[i])
        if r > best + 1e-12:
            best, arg, handle = r, (i, j), x
        if best == INF:
            break
    if arg is None:
        return 0.0, None
    i, j = arg
    return best, HarmWitness("ihr", (i,), (j,), handle, _label(space, handle), best)


# ---------------------------------------------------------------------------
# group harm ratio


@dataclass(frozen=True)
class GroupScan:
    value: float
    witness: HarmWitness | None
    violates: bool


def _baseline(cur):
    return HarmWitness("ghr", (0,), (0,), None, "current", 1.0, strict=False)


def _sort_scan(space: EnumeratedSpace, cur, min_k, alpha, equal_size):
    U = space.utilities
    n = space.n
    if not equal_size:
        value, row, k, strict, violates = kernels.ghr_sort(U, cur, min_k, alpha, TOL)
        if row < 0:
            return -INF, None, violates
        return value, _sort_witness(space, cur, row, k, "ghr", value, strict), violates
    # equal-size variant: the sacrificed set has exactly k members, so at most k agents may be hurt
    hurt = U < cur[None, :] - TOL
    h = hurt.sum(axis=1)
    r = np.where(hurt, -INF, kernels.ratio_matrix(U, cur))
    rs = -np.sort(-r, axis=1)
    ks = np.arange(1, n + 1)
    valid = (ks[None, :] <= (n - h)[:, None]) & (ks[None, :] >= min_k) & (h[:, None] <= ks[None, :])
    f = ks[None, :] / (ks[None, :] + h[:, None])
    with np.errstate(invalid="ignore"):
        cand = np.where(valid, f * rs, -INF)
        top = np.where(valid, f * rs[:, :1], -INF)
        violates = bool(np.any((cand >= alpha - TOL) & (top > alpha + TOL)))
    value = float(cand.max()) if cand.size else -INF
    if value == -INF:
        return -INF, None, violates
    close = cand >= value - TOL if np.isfinite(value) else cand == value
    pos = np.flatnonzero(close.ravel())
    row, kk = divmod(int(pos[0]), n)
    strict = bool(np.any(top.ravel()[pos] > value + TOL)) if np.isfinite(value) else True
    return value, _sort_witness(space, cur, row, kk + 1, "eghr", value, strict), violates


def _sort_witness(space, cur, row, k, kind, value, strict):
    u = space.utilities[row]
    hurt = np.flatnonzero(u < cur - TOL)
    ok = np.flatnonzero(u >= cur - TOL)
    r = kernels.ratio_matrix(u[None, ok], cur[ok])[0]
    order = ok[np.lexsort((ok, -r))]
    S = tuple(int(i) for i in sorted(order[:k]))
    T = tuple(int(i) for i in hurt)
    if kind == "eghr" and len(T) < len(S):
        # pad the sacrificed set with members of S (overlap is allowed)
        T = tuple(sorted(set(T) | set(S[: len(S) - len(T)])))
    if not T:
        T = (S[0],)
    return HarmWitness(kind, S, T, row, _label(space, row), value, strict)


def _popcounts(n):
    masks = np.arange(1 << n)
    return np.array([bin(x).count("1") for x in range(1 << n)], dtype=np.int64), masks


def ghr_exhaustive_scan(space: EnumeratedSpace, outcome, min_group_fraction: float = 0.0,
                        equal_size: bool = False, alpha: float = 1.0) -> GroupScan:
    """Direct scan over every (S, T, o') triple; the oracle for the sort construction."""
    cur = current_utilities(space, outcome)
    n = space.n
    if n > EXHAUSTIVE_MAX_AGENTS:
        raise CapExceededError(f"exhaustive group scan is capped at n <= {EXHAUSTIVE_MAX_AGENTS}")
    min_k = min_group_size(n, min_group_fraction)
    U = space.utilities
    K = U.shape[0]
    hurt = U < cur[None, :] - TOL
    H = (hurt.astype(np.int64) << np.arange(n)).sum(axis=1)
    r = kernels.ratio_matrix(U, cur)
    full = 1 << n
    pc, masks = _popcounts(n)
    minr = np.full((full, K), INF)
    maxr = np.full((full, K), -INF)
    for S in range(1, full):
        low = S & -S
        b = low.bit_length() - 1
        rest = S ^ low
        minr[S] = np.minimum(minr[rest], r[:, b])
        maxr[S] = np.maximum(maxr[rest], r[:, b])
    Ts = masks[1:]
    best = -INF
    best_key = None
    strict = False
    violates = False
    for S in range(1, full):
        s = pc[S]
        if s < min_k:
            continue
        Tsel = Ts[pc[Ts] == s] if equal_size else Ts
        if Tsel.size == 0:
            continue
        union = S | Tsel
        valid = (H[None, :] & ~union[:, None]) == 0  # (T, K)
        factor = s / pc[union]
        with np.errstate(invalid="ignore"):
            cand = np.where(valid, factor[:, None] * minr[S][None, :], -INF)
            top = np.where(valid, factor[:, None] * maxr[S][None, :], -INF)
            if not violates:
                violates = bool(np.any((cand >= alpha - TOL) & (top > alpha + TOL)))
        v = float(cand.max())
        if v == -INF:
            continue
        if best_key is None or (np.isfinite(best) and v > best + TOL):
            best = v
            close = cand >= v - TOL if np.isfinite(v) else cand == v
            t_idx, k_idx = np.unravel_index(int(np.flatnonzero(close.ravel())[0]), cand.shape)
            best_key = (S, int(Tsel[t_idx]), int(k_idx))
            strict = bool(np.any(top[close] > v + TOL)) if np.isfinite(v) else True
        elif np.isfinite(best) and v >= best - TOL:
            close = cand >= best - TOL
            strict = strict or bool(np.any(top[close] > best + TOL))
    if best_key is None:
        return GroupScan(1.0, _baseline(cur), violates)
    S, T, row = best_key
    kind = "eghr" if equal_size else "ghr"
    Sl = tuple(i for i in range(n) if S >> i & 1)
    Tl = tuple(i for i in range(n) if T >> i & 1)
    w = HarmWitness(kind, Sl, Tl, row, _label(space, row), best, strict)
    if best < 1.0:
        return GroupScan(1.0, _baseline(cur), violates)
    return GroupScan(best, w, violates)


def _polytope_scan(space: PolytopeSpace, cur, min_k, alpha, equal_size) -> GroupScan:
    """Enumerate (S, W = S u T) and solve one max-min program each."""
    n = space.n
    if n > POLYTOPE_GROUP_MAX_AGENTS:
        raise CapExceededError(
            f"group ratios over a polytope enumerate 3^n group pairs; capped at n <= {POLYTOPE_GROUP_MAX_AGENTS}"
        )
    best, wit, violates = -INF, None, False
    agents = range(n)
    for w_size in range(1, n + 1):
        for W in itertools.combinations(agents, w_size):
            floors = {k: cur[k] for k in agents if k not in W}
            for s_size in range(max(min_k, 1), w_size + 1):
                if equal_size and 2 * s_size < w_size:
                    continue  # |S| = |T| forces |S u T| <= 2|S|
                for S in itertools.combinations(W, s_size):
                    scale = s_size / w_size
                    v, x = space.max_min_scaled_utility(S, scale, floors, cur)
                    if x is None:
                        continue
                    u = space.utility_of(x)
                    rr = [_ratio(u[i], cur[i]) for i in S]
                    v = scale * min(rr)
                    top = scale * max(rr)
                    if v >= alpha - TOL and top > alpha + TOL:
                        violates = True
                    if v > best + TOL:
                        T = tuple(k for k in W if k not in S) or (S[0],)
                        if equal_size and len(T) < len(S):
                            T = tuple(sorted(set(T) | set(S[: len(S) - len(T)])))
                        best = v
                        wit = HarmWitness("eghr" if equal_size else "ghr", tuple(S), T, x,
                                          _label(space, x), v, top > v + TOL)
    if wit is None or best < 1.0:
        return GroupScan(1.0, _baseline(cur), violates or best > alpha + TOL)
    return GroupScan(best, wit, violates or best > alpha + TOL)


def ghr_scan(space: OutcomeSpace, outcome, min_group_fraction: float = 0.0, alpha: float = 1.0,
             mode: str = "sort", equal_size: bool = False) -> GroupScan:
    """Group harm ratio value, witness, and whether the outcome violates ``alpha``.

    ``mode`` is ``"sort"`` (per-alternative sort construction) or
    ``"exhaustive"`` (all S, T pairs). Polytope spaces always enumerate
    group pairs and solve one program per pair.
    """
    cur = current_utilities(space, outcome)
    n = space.n
    min_k = min_group_size(n, min_group_fraction)
    if not isinstance(space, EnumeratedSpace):
        return _polytope_scan(space, cur, min_k, alpha, equal_size)
    if mode == "exhaustive":
        return ghr_exhaustive_scan(space, cur, min_group_fraction, equal_size, alpha)
    if mode != "sort":
        raise ValueError(f"unknown mode {mode!r}")
    value, wit, violates = _sort_scan(space, cur, min_k, alpha, equal_size)
    if wit is None or value < 1.0:
        return GroupScan(1.0, _baseline(cur), violates)
    return GroupScan(value, wit, violates)


def ghr(space: OutcomeSpace, outcome, min_group_fraction: float = 0.0, mode: str = "sort"):
    """Group harm ratio restricted to improving groups of at least ``min_group_fraction * n`` agents.

    Returns ``(value, witness)``; ``witness.strict`` tells whether the
    supremum is attained with a strict improvement for some member.
    """
    res = ghr_scan(space, outcome, min_group_fraction, mode=mode)
    return res.value, res.witness


def ghr_curve(space: OutcomeSpace, outcome, fractions: Sequence[float], mode: str = "sort"):
    """``[(fraction, value, witness), ...]``; non-increasing in the fraction."""
    return [(float(f), *ghr(space, outcome, f, mode)) for f in fractions]


def is_alpha_ghr(space: OutcomeSpace, outcome, alpha: float = 1.0, min_group_fraction: float = 0.0,
                 mode: str = "sort") -> bool:
    return not ghr_scan(space, outcome, min_group_fraction, alpha, mode).violates


def eghr(space: OutcomeSpace, outcome, mode: str = "sort") -> float:
    """Group harm ratio restricted to |S| = |T|."""
    if space.n > EXHAUSTIVE_MAX_AGENTS:
        raise CapExceededError(f"eghr is capped at n <= {EXHAUSTIVE_MAX_AGENTS}")
    return ghr_scan(space, outcome, 0.0, mode=mode, equal_size=True).value


# ---------------------------------------------------------------------------
# classical notions


def pf_value(space: OutcomeSpace, outcome) -> float:
    """Largest mean utility ratio of any alternative against ``outcome``."""
    cur = current_utilities(space, outcome)
    n = space.n
    if isinstance(space, EnumeratedSpace):
        r = kernels.ratio_matrix(space.utilities, cur)
        return float(max(1.0, r.mean(axis=1).max()))
    zero = np.flatnonzero(cur <= 0)
    for i in zero:
        v, _ = space.max_utility_with_floors(int(i), {})
        if v > TOL:
            return INF
    w = np.where(cur > 0, 1.0 / np.where(cur > 0, cur, 1.0), 0.0)
    v, _ = space.max_weighted_utility(w)
    return float(max(1.0, (v + zero.size) / n))


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    witness: HarmWitness | None = None
    evaluated: bool = True
    detail: str = ""


def core_check(space: OutcomeSpace, outcome) -> CheckResult:
    """No coalition S and alternative o' with ``|S|/n * u_i(o') >= u_i(o)`` for all of S, one strictly."""
    cur = current_utilities(space, outcome)
    n = space.n
    if isinstance(space, EnumeratedSpace):
        U = space.utilities
        for s in range(1, n + 1):
            scaled = (s / n) * U
            weak = scaled >= cur[None, :] - TOL
            strong = scaled > cur[None, :] + TOL
            blocked = (weak.sum(axis=1) >= s) & np.any(strong & weak, axis=1)
            rows = np.flatnonzero(blocked)
            if rows.size:
                k = int(rows[0])
                st = np.flatnonzero(strong[k])[0]
                members = [int(st)] + [int(i) for i in np.flatnonzero(weak[k]) if i != st][: s - 1]
                S = tuple(sorted(members))
                r = (s / n) * min(_ratio(U[k, i], cur[i]) for i in S)
                return CheckResult(False, HarmWitness("core", S, tuple(range(n)), k, _label(space, k), r))
        return CheckResult(True)
    if n > EXHAUSTIVE_MAX_AGENTS:
        raise CapExceededError(f"core check over a polytope enumerates 2^n coalitions; capped at n <= {EXHAUSTIVE_MAX_AGENTS}")
    for s in range(1, n + 1):
        for S in itertools.combinations(range(n), s):
            floors = {i: (n / s) * cur[i] for i in S}
            w = np.zeros(n)
            w[list(S)] = 1.0
            v, x = space.max_weighted_utility(w, floors)
            if x is None:
                continue
            if v > sum(floors.values()) + 1e-7:
                u = space.utility_of(x)
                r = (s / n) * min(_ratio(u[i], cur[i]) for i in S)
                return CheckResult(False, HarmWitness("core", S, tuple(range(n)), x, _label(space, x), r))
    return CheckResult(True)


def prop_ratio(space: OutcomeSpace, outcome) -> float:
    """``min_i u_i(o) / (max_{o'} u_i(o') / n)``; at least 1 means proportional."""
    cur = current_utilities(space, outcome)
    n = space.n
    best = space.max_utilities()
    vals = [cur[i] / (best[i] / n) for i in range(n) if best[i] > 0]
    return float(min(vals)) if vals else INF


def pareto_check(space: OutcomeSpace, outcome) -> CheckResult:
    """Is there an alternative nobody likes less and someone strictly prefers?"""
    cur = current_utilities(space, outcome)
    n = space.n
    if isinstance(space, EnumeratedSpace):
        U = space.utilities
        dom = np.all(U >= cur[None, :] - TOL, axis=1) & np.any(U > cur[None, :] + TOL, axis=1)
        rows = np.flatnonzero(dom)
        if rows.size == 0:
            return CheckResult(True)
        k = int(rows[np.argmax(U[rows].sum(axis=1))])
    else:
        v, x = space.max_weighted_utility(np.ones(n), {i: cur[i] for i in range(n)})
        if x is None or v <= cur.sum() + 1e-7:
            return CheckResult(True)
        k = x
    u = space.utility_of(k)
    r = min(_ratio(u[i], cur[i]) for i in range(n))
    return CheckResult(False, HarmWitness("pareto", tuple(range(n)), tuple(range(n)), k, _label(space, k), r))


def nw_ratio(space: OutcomeSpace, outcome) -> float:
    """Nash welfare of ``outcome`` over the maximum Nash welfare of the space."""
    cur = current_utilities(space, outcome)
    best = max_nash_welfare(space)
    nw = nash_welfare(cur)
    if best <= 0:
        return 1.0
    return nw / best


def max_nash_welfare(space: OutcomeSpace) -> float:
    if isinstance(space, EnumeratedSpace):
        U = space.utilities
        with np.errstate(divide="ignore"):
            logs = np.where(U > 0, np.log(np.where(U > 0, U, 1.0)), -INF).mean(axis=1)
        m = float(logs.max())
        return 0.0 if m == -INF else math.exp(m)
    if getattr(space, "integral", False):
        inst = getattr(space, "instance", None)
        if isinstance(inst, GoodsInstance):
            from harmratio.opt.bnb import branch_and_bound_allocation

            A = branch_and_bound_allocation(inst, "nash", max_goods=max(inst.m, 20))
            return nash_welfare((A.shares * inst.valuations).sum(axis=1))
        raise CapExceededError("maximum Nash welfare over this integer space needs an enumerated space")
    from harmratio.opt.convex import eisenberg_gale_mnw

    return nash_welfare(eisenberg_gale_mnw(space).utilities)


# ---------------------------------------------------------------------------
# envy notions


def _bundle_matrix(instance: GoodsInstance, A: Allocation) -> np.ndarray:
    check_allocation(instance, A)
    return instance.valuations @ np.asarray(A.shares, dtype=float).T  # [i, j] = u_i(A_j)


def envy_free_check(instance: GoodsInstance, A: Allocation) -> CheckResult:
    B = _bundle_matrix(instance, A)
    n = instance.n
    for i in range(n):
        for j in range(n):
            if i != j and B[i, j] > B[i, i] + TOL:
                w = HarmWitness("envy", (i,), (j,), None, f"bundle of agent {j}", _ratio(B[i, j], B[i, i]))
                return CheckResult(False, w, detail=f"agent {i} envies agent {j}")
    return CheckResult(True)


def private_envy_ratio(instance: GoodsInstance, A: Allocation) -> float:
    """``(1 + max_{i != j} u_i(A_j) / u_i(A_i)) / 2``.

    Handing j's bundle to i is an alternative for the pair (i, j), so this
    never exceeds the individual harm ratio. As there, 0/0 makes no claim;
    with a single agent the value is 1/2.
    """
    B = _bundle_matrix(instance, A)
    n = instance.n
    own = np.diag(B)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(own[:, None] > 0, B / np.where(own > 0, own, 1.0)[:, None],
                     np.where(B > 0, INF, 0.0))
    r[np.arange(n), np.arange(n)] = 0.0
    return 0.5 * (1.0 + float(r.max()))


def group_fair_check(instance: GoodsInstance, A: Allocation,
                     max_agents: int = GF_MAX_AGENTS, max_goods: int = GF_MAX_GOODS) -> CheckResult:
    """Group fairness on integral allocations by redistributing T's goods among S.

    Returns ``evaluated=False`` beyond the size limits.
    """
    check_allocation(instance, A)
    n, m = instance.n, instance.m
    if n > max_agents or m > max_goods or not A.is_integral:
        return CheckResult(True, evaluated=False, detail="not evaluated")
    V = instance.valuations
    owners = A.owners()
    cur = (A.shares * V).sum(axis=1)
    agents = range(n)
    for t in range(1, n + 1):
        for T in itertools.combinations(agents, t):
            goods = np.flatnonzero(np.isin(owners, T))
            for s in range(1, n + 1):
                for S in itertools.combinations(agents, s):
                    sub = V[np.ix_(S, goods)]
                    if goods.size == 0:
                        U = np.zeros((1, s))
                    else:
                        U = kernels.allocation_utilities(sub)
                    scaled = (s / t) * U
                    c = cur[list(S)]
                    ok = np.all(scaled >= c - TOL, axis=1) & np.any(scaled > c + TOL, axis=1)
                    if ok.any():
                        w = HarmWitness("gf", S, T, None, "redistribution", float(
                            min(_ratio(x, y) for x, y in zip(scaled[np.argmax(ok)], c))))
                        return CheckResult(False, w, detail=f"group {S} envies group {T}")
    return CheckResult(True)


def shuffle_envy_ratio(instance: ReviewInstance, A: ReviewAssignment) -> tuple[float, tuple]:
    """Max over pairs (i, j) of half of i's best re-split of the two papers' reviewers over u_i(A_i).

    Returns ``(value, (i, j, new_bundle_of_i))``.
    """
    A.validate(instance)
    n, load = instance.n, instance.load
    S = instance.similarity
    allowed = instance.allowed
    cur = np.array([sum(S[p, r] for r in A.assigned[p]) for p in range(n)])
    best, arg = -INF, None
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            pool = list(A.assigned[i]) + list(A.assigned[j])
            distinct = sorted(set(pool))
            both = {r for r in distinct if pool.count(r) == 2}
            for Bi in itertools.combinations(distinct, load):
                Bi_set = set(Bi)
                if not both <= Bi_set:
                    continue
                Bj = [r for r in distinct if r not in Bi_set] + sorted(both)
                if len(Bj) != load:
                    continue
                if not all(allowed[i, r] for r in Bi) or not all(allowed[j, r] for r in Bj):
                    continue
                v = 0.5 * _ratio(sum(S[i, r] for r in Bi), cur[i])
                if v > best + 1e-12:
                    best, arg = v, (i, j, tuple(Bi))
    return best, arg


# ---------------------------------------------------------------------------
# report


DEFAULT_CRITERIA = ("ihr", "ghr", "eghr", "pf", "core", "prop", "pareto", "nw")
ALL_CRITERIA = DEFAULT_CRITERIA + ("per", "ef", "gf", "shuffle")


@dataclass
class FairnessReport:
    utilities: list
    ihr: float | None = None
    ihr_witness: HarmWitness | None = None
    ghr_curve: list = field(default_factory=list)  # [(fraction, value, witness)]
    ghr_method: str = "sort-construction"
    eghr: float | None = None
    pf: float | None = None
    core_ok: bool | None = None
    prop_ratio: float | None = None
    pareto_ok: bool | None = None
    nw: float | None = None
    nw_ratio: float | None = None
    per: float | None = None
    ef_ok: bool | None = None
    gf_ok: bool | None = None
    shuffle_envy: float | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def num(x):
            return None if x is None else _json_number(x)

        d = {
            "utilities": [float(x) for x in self.utilities],
            "ihr": num(self.ihr),
            "ihr_infinite": self.ihr == INF if self.ihr is not None else None,
            "ghr_curve": [{"min_frac": f, "value": num(v)} for f, v, _ in self.ghr_curve],
            "ghr_method": self.ghr_method,
            "eghr": num(self.eghr),
            "pf": num(self.pf),
            "pf_infinite": self.pf == INF if self.pf is not None else None,
            "core_ok": self.core_ok,
            "prop_ratio": num(self.prop_ratio),
            "pareto_ok": self.pareto_ok,
            "nw": num(self.nw),
            "nw_ratio": num(self.nw_ratio),
            "per": num(self.per),
            "per_infinite": self.per == INF if self.per is not None else None,
            "ef_ok": self.ef_ok,
            "gf_ok": self.gf_ok,
            "shuffle_envy": num(self.shuffle_envy),
            "witnesses": {},
            "notes": list(self.notes),
        }
        if self.ihr_witness is not None:
            d["witnesses"]["ihr"] = self.ihr_witness.to_dict()
        for f, _, w in self.ghr_curve:
            if w is not None:
                d["witnesses"][f"ghr@{f:g}"] = w.to_dict()
        return d


def audit(space: OutcomeSpace, outcome, criteria: Sequence[str] = DEFAULT_CRITERIA,
          fractions: Sequence[float] = (0.0,), instance=None) -> FairnessReport:
    """Evaluate the requested criteria for one outcome."""
    unknown = set(criteria) - set(ALL_CRITERIA)
    if unknown:
        raise ValueError(f"unknown criteria {sorted(unknown)}; choose from {list(ALL_CRITERIA)}")
    cur = current_utilities(space, outcome)
    rep = FairnessReport(utilities=list(cur))
    crit = set(criteria)
    if "ihr" in crit:
        rep.ihr, rep.ihr_witness = ihr(space, outcome)
    if "ghr" in crit:
        if space.n > EXHAUSTIVE_MAX_AGENTS:
            rep.notes.append("ghr values use the sort construction (not cross-checked exhaustively at this n)")
        rep.ghr_curve = ghr_curve(space, outcome, fractions)
    if "eghr" in crit:
        if space.n <= EXHAUSTIVE_MAX_AGENTS:
            rep.eghr = eghr(space, outcome)
        else:
            rep.notes.append("eghr not evaluated (n above cap)")
    if "pf" in crit:
        rep.pf = pf_value(space, outcome)
    if "core" in crit:
        if isinstance(space, EnumeratedSpace) or space.n <= EXHAUSTIVE_MAX_AGENTS:
            rep.core_ok = core_check(space, outcome).ok
        else:
            rep.notes.append("core not evaluated (n above cap)")
    if "prop" in crit:
        rep.prop_ratio = prop_ratio(space, outcome)
    if "pareto" in crit:
        rep.pareto_ok = pareto_check(space, outcome).ok
    if "nw" in crit:
        rep.nw = nash_welfare(cur)
        rep.nw_ratio = nw_ratio(space, outcome)
    if isinstance(instance, GoodsInstance) and isinstance(outcome, Allocation):
        if "per" in crit:
            rep.per = private_envy_ratio(instance, outcome)
        if "ef" in crit:
            rep.ef_ok = envy_free_check(instance, outcome).ok
        if "gf" in crit:
            res = group_fair_check(instance, outcome)
            rep.gf_ok = res.ok if res.evaluated else None
            if not res.evaluated:
                rep.notes.append("gf not evaluated (instance above size limits)")
    if isinstance(instance, ReviewInstance) and isinstance(outcome, ReviewAssignment) and "shuffle" in crit:
        rep.shuffle_envy = shuffle_envy_ratio(instance, outcome)[0]
    return rep
