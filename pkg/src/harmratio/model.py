"""Domain types for the three decision problems plus generic utility tables.

Everything here is immutable after construction: numpy payloads are copied
and flagged read-only, containers are tuples/frozensets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from harmratio.errors import InvalidInstanceError, InvalidOutcomeError

#: Row-sum used by the synthetic generators (points handed to each agent).
MULTINOMIAL_POINTS = 200
#: Default row-sum when normalizing Spliddit-style valuations.
SPLIDDIT_TOTAL = 1000.0

APPROVAL_FLOOR = 1e-2
COST_FLOOR_FRACTION = 1e-3
REVIEW_SCORE_FLOOR = 1e-3
REVIEW_LOAD = 3

_ALLOC_TOL = 1e-9


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# goods division


@dataclass(frozen=True, eq=False)
class GoodsInstance:
    """Additive goods division: ``valuations[i, g]`` is agent i's value for all of good g."""

    valuations: np.ndarray
    divisible: bool = False
    good_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        v = _frozen_array(self.valuations)
        if v.ndim != 2 or v.shape[0] == 0 or v.shape[1] == 0:
            raise InvalidInstanceError(f"valuations must be a non-empty n x m matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise InvalidInstanceError("valuations must be finite and non-negative")
        zero_rows = np.flatnonzero(v.max(axis=1) <= 0)
        if zero_rows.size:
            raise InvalidInstanceError(f"agents {zero_rows.tolist()} value every good at zero")
        object.__setattr__(self, "valuations", v)
        if self.good_labels is not None:
            labels = tuple(str(x) for x in self.good_labels)
            if len(labels) != v.shape[1]:
                raise InvalidInstanceError("good_labels length does not match the number of goods")
            object.__setattr__(self, "good_labels", labels)

    @property
    def n(self) -> int:
        return self.valuations.shape[0]

    @property
    def m(self) -> int:
        return self.valuations.shape[1]

    def with_divisible(self, divisible: bool) -> "GoodsInstance":
        return GoodsInstance(self.valuations, divisible, self.good_labels)


@dataclass(frozen=True, eq=False)
class Allocation:
    """``shares[i, g]`` is the fraction of good g held by agent i; columns sum to 1."""

    shares: np.ndarray

    def __post_init__(self):
        a = _frozen_array(self.shares)
        if a.ndim != 2:
            raise InvalidOutcomeError("shares must be an n x m matrix")
        if np.any(a < -_ALLOC_TOL) or np.any(a > 1 + _ALLOC_TOL):
            raise InvalidOutcomeError("shares must lie in [0, 1]")
        cols = a.sum(axis=0)
        bad = np.flatnonzero(np.abs(cols - 1.0) > 1e-7)
        if bad.size:
            raise InvalidOutcomeError(f"goods {bad.tolist()} are not fully allocated")
        object.__setattr__(self, "shares", a)

    @classmethod
    def from_owners(cls, owners: Sequence[int], n: int) -> "Allocation":
        owners = np.asarray(owners, dtype=int)
        if owners.size and (owners.min() < 0 or owners.max() >= n):
            raise InvalidOutcomeError("owner index out of range")
        shares = np.zeros((n, owners.size))
        shares[owners, np.arange(owners.size)] = 1.0
        return cls(shares)

    @property
    def is_integral(self) -> bool:
        return bool(np.all((self.shares <= _ALLOC_TOL) | (self.shares >= 1 - _ALLOC_TOL)))

    def owners(self) -> np.ndarray:
        if not self.is_integral:
            raise InvalidOutcomeError("fractional allocation has no single owner per good")
        return self.shares.argmax(axis=0)

    def bundle_values(self, valuations: np.ndarray) -> np.ndarray:
        """``out[i, j] = u_i(A_j)``: agent i's value for agent j's bundle."""
        return np.asarray(valuations) @ self.shares.T


def check_allocation(instance: GoodsInstance, allocation: Allocation) -> None:
    if allocation.shares.shape != instance.valuations.shape:
        raise InvalidOutcomeError(
            f"allocation shape {allocation.shares.shape} does not match instance {instance.valuations.shape}"
        )
    if not instance.divisible and not allocation.is_integral:
        raise InvalidOutcomeError("indivisible instance requires a 0/1 allocation")


# ---------------------------------------------------------------------------
# participatory budgeting


@dataclass(frozen=True)
class Project:
    id: str
    cost: float
    meta: Mapping[str, str] = field(default_factory=dict, compare=False)


@dataclass(frozen=True, eq=False)
class PBInstance:
    """Approval-ballot participatory budgeting election.

    ``utility_model`` is ``"approval"`` (count of funded approved projects) or
    ``"cost"`` (total cost of funded approved projects). A voter whose raw
    utility is zero is credited ``epsilon_floor`` instead; it defaults to
    0.01 for approval utilities and 0.001 * budget for cost utilities.
    """

    projects: tuple[Project, ...]
    budget: float
    ballots: tuple[frozenset, ...]
    utility_model: str = "approval"
    epsilon_floor: float | None = None
    voter_ids: tuple[str, ...] | None = None
    meta: Mapping[str, str] = field(default_factory=dict)
    voter_meta: tuple[Mapping[str, str], ...] | None = None

    def __post_init__(self):
        projects = tuple(self.projects)
        ids = [p.id for p in projects]
        if len(set(ids)) != len(ids):
            raise InvalidInstanceError("duplicate project ids")
        if any(p.cost < 0 or not np.isfinite(p.cost) for p in projects):
            raise InvalidInstanceError("project costs must be finite and non-negative")
        if self.budget < 0 or not np.isfinite(self.budget):
            raise InvalidInstanceError("budget must be finite and non-negative")
        if self.utility_model not in ("approval", "cost"):
            raise InvalidInstanceError(f"unknown utility model {self.utility_model!r}")
        known = set(ids)
        ballots = tuple(frozenset(str(x) for x in b) for b in self.ballots)
        for k, b in enumerate(ballots):
            if not b:
                raise InvalidInstanceError(f"ballot {k} is empty")
            unknown = b - known
            if unknown:
                raise InvalidInstanceError(f"ballot {k} approves unknown projects {sorted(unknown)}")
        eps = self.epsilon_floor
        if eps is None:
            eps = APPROVAL_FLOOR if self.utility_model == "approval" else COST_FLOOR_FRACTION * self.budget
        if not eps > 0:
            raise InvalidInstanceError("epsilon_floor must be positive")
        voter_ids = self.voter_ids
        if voter_ids is None:
            voter_ids = tuple(str(k + 1) for k in range(len(ballots)))
        elif len(voter_ids) != len(ballots):
            raise InvalidInstanceError("voter_ids length does not match ballots")
        object.__setattr__(self, "projects", projects)
        object.__setattr__(self, "ballots", ballots)
        object.__setattr__(self, "epsilon_floor", float(eps))
        object.__setattr__(self, "voter_ids", tuple(str(v) for v in voter_ids))
        object.__setattr__(self, "budget", float(self.budget))
        index = {pid: k for k, pid in enumerate(ids)}
        object.__setattr__(self, "_index", index)
        approvals = np.zeros((len(ballots), len(projects)), dtype=bool)
        for k, b in enumerate(ballots):
            approvals[k, [index[p] for p in b]] = True
        approvals.setflags(write=False)
        object.__setattr__(self, "_approvals", approvals)

    @property
    def n(self) -> int:
        return len(self.ballots)

    @property
    def project_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.projects)

    @property
    def costs(self) -> np.ndarray:
        return np.array([p.cost for p in self.projects], dtype=float)

    @property
    def approvals(self) -> np.ndarray:
        """Boolean voters x projects approval matrix."""
        return self._approvals

    def index_of(self, project_id: str) -> int:
        return self._index[project_id]

    @property
    def unfundable(self) -> frozenset:
        """Projects whose cost alone exceeds the budget."""
        return frozenset(p.id for p in self.projects if p.cost > self.budget)

    def project_weights(self) -> np.ndarray:
        """Per-(voter, project) raw utility contribution under the utility model."""
        w = self.approvals.astype(float)
        if self.utility_model == "cost":
            w = w * self.costs[None, :]
        return w

    def with_utility_model(self, utility_model: str, epsilon_floor: float | None = None) -> "PBInstance":
        return PBInstance(
            self.projects, self.budget, self.ballots, utility_model, epsilon_floor,
            self.voter_ids, self.meta, self.voter_meta,
        )


@dataclass(frozen=True)
class BudgetSelection:
    funded: frozenset

    def __post_init__(self):
        object.__setattr__(self, "funded", frozenset(str(x) for x in self.funded))

    def cost(self, instance: PBInstance) -> float:
        return float(sum(instance.projects[instance.index_of(p)].cost for p in self.funded))

    def validate(self, instance: PBInstance) -> None:
        unknown = [p for p in self.funded if p not in instance._index]
        if unknown:
            raise InvalidOutcomeError(f"unknown projects {sorted(unknown)}")
        if self.cost(instance) > instance.budget * (1 + 1e-12) + 1e-9:
            raise InvalidOutcomeError("funded set exceeds the budget")

    def mask(self, instance: PBInstance) -> np.ndarray:
        out = np.zeros(len(instance.projects), dtype=bool)
        for p in self.funded:
            out[instance.index_of(p)] = True
        return out


# ---------------------------------------------------------------------------
# reviewer assignment


@dataclass(frozen=True, eq=False)
class ReviewInstance:
    """Papers and reviewers coincide (paper i is written by reviewer i).

    Similarities are clamped to ``[score_floor, 1]`` on construction; every
    self pair is always in ``conflicts``.
    """

    similarity: np.ndarray
    conflicts: frozenset = frozenset()
    load: int = REVIEW_LOAD
    score_floor: float = REVIEW_SCORE_FLOOR

    def __post_init__(self):
        s = np.array(self.similarity, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] == 0:
            raise InvalidInstanceError("similarity must be a non-empty square matrix")
        if not np.all(np.isfinite(s)):
            raise InvalidInstanceError("similarity must be finite")
        if not self.score_floor > 0:
            raise InvalidInstanceError("score_floor must be positive")
        if int(self.load) != self.load or self.load < 1:
            raise InvalidInstanceError("load must be a positive integer")
        n = s.shape[0]
        s = np.clip(s, self.score_floor, 1.0)
        s.setflags(write=False)
        conflicts = {(int(p), int(r)) for p, r in self.conflicts}
        if any(not (0 <= p < n and 0 <= r < n) for p, r in conflicts):
            raise InvalidInstanceError("conflict pair out of range")
        conflicts |= {(i, i) for i in range(n)}
        allowed = np.ones((n, n), dtype=bool)
        for p, r in conflicts:
            allowed[p, r] = False
        allowed.setflags(write=False)
        object.__setattr__(self, "similarity", s)
        object.__setattr__(self, "conflicts", frozenset(conflicts))
        object.__setattr__(self, "load", int(self.load))
        object.__setattr__(self, "_allowed", allowed)

    @property
    def n(self) -> int:
        return self.similarity.shape[0]

    @property
    def allowed(self) -> np.ndarray:
        """``allowed[p, r]`` is True when reviewer r may review paper p."""
        return self._allowed


@dataclass(frozen=True)
class ReviewAssignment:
    """``assigned[p]`` is the set of reviewers of paper p."""

    assigned: tuple[frozenset, ...]

    def __post_init__(self):
        object.__setattr__(self, "assigned", tuple(frozenset(int(r) for r in b) for b in self.assigned))

    @classmethod
    def from_mapping(cls, mapping: Mapping[int, Sequence[int]], n: int) -> "ReviewAssignment":
        return cls(tuple(frozenset(mapping.get(p, ())) for p in range(n)))

    @classmethod
    def from_matrix(cls, x: np.ndarray) -> "ReviewAssignment":
        x = np.asarray(x) > 0.5
        return cls(tuple(frozenset(np.flatnonzero(row).tolist()) for row in x))

    def matrix(self, n: int) -> np.ndarray:
        x = np.zeros((n, n), dtype=bool)
        for p, b in enumerate(self.assigned):
            x[p, list(b)] = True
        return x

    def validate(self, instance: ReviewInstance) -> None:
        n = instance.n
        if len(self.assigned) != n:
            raise InvalidOutcomeError(f"assignment covers {len(self.assigned)} papers, instance has {n}")
        loads = np.zeros(n, dtype=int)
        for p, b in enumerate(self.assigned):
            if len(b) != instance.load:
                raise InvalidOutcomeError(f"paper {p} has {len(b)} reviewers, expected {instance.load}")
            for r in b:
                if not 0 <= r < n:
                    raise InvalidOutcomeError(f"reviewer {r} out of range")
                if not instance.allowed[p, r]:
                    raise InvalidOutcomeError(f"conflicted pair ({p}, {r}) used")
                loads[r] += 1
        bad = np.flatnonzero(loads != instance.load)
        if bad.size:
            raise InvalidOutcomeError(f"reviewers {bad.tolist()} do not have load {instance.load}")


# ---------------------------------------------------------------------------
# generic finite spaces


@dataclass(frozen=True, eq=False)
class FiniteUtilityTable:
    """Outcomes given directly by their utility vectors (rows)."""

    utilities: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        u = _frozen_array(self.utilities)
        if u.ndim != 2 or u.shape[0] == 0 or u.shape[1] == 0:
            raise InvalidInstanceError("need at least one outcome over at least one agent")
        if not np.all(np.isfinite(u)) or np.any(u < 0):
            raise InvalidInstanceError("utilities must be finite and non-negative")
        labels = self.labels
        if labels is None:
            labels = tuple(f"o{k}" for k in range(u.shape[0]))
        elif len(labels) != u.shape[0]:
            raise InvalidInstanceError("labels length does not match the number of outcomes")
        object.__setattr__(self, "utilities", u)
        object.__setattr__(self, "labels", tuple(str(x) for x in labels))

    @property
    def n(self) -> int:
        return self.utilities.shape[1]


# ---------------------------------------------------------------------------
# operations


def pb_utilities(instance: PBInstance, funded_mask: np.ndarray, floored: bool = True) -> np.ndarray:
    """Utilities of every voter for one or many funded masks (last axis = projects)."""
    raw = np.asarray(funded_mask, dtype=float) @ instance.project_weights().T
    if floored:
        raw = np.where(raw > 0, raw, instance.epsilon_floor)
    return raw


def utility_vector(instance, outcome) -> np.ndarray:
    """Utility of every agent for ``outcome`` under ``instance``."""
    if isinstance(instance, GoodsInstance):
        if not isinstance(outcome, Allocation):
            raise InvalidOutcomeError("goods instances take an Allocation")
        check_allocation(instance, outcome)
        return (outcome.shares * instance.valuations).sum(axis=1)
    if isinstance(instance, PBInstance):
        if not isinstance(outcome, BudgetSelection):
            raise InvalidOutcomeError("PB instances take a BudgetSelection")
        outcome.validate(instance)
        return pb_utilities(instance, outcome.mask(instance))
    if isinstance(instance, ReviewInstance):
        if not isinstance(outcome, ReviewAssignment):
            raise InvalidOutcomeError("review instances take a ReviewAssignment")
        outcome.validate(instance)
        return (outcome.matrix(instance.n) * instance.similarity).sum(axis=1)
    if isinstance(instance, FiniteUtilityTable):
        k = instance.labels.index(outcome) if isinstance(outcome, str) else int(outcome)
        return np.array(instance.utilities[k])
    raise TypeError(f"unsupported instance type {type(instance).__name__}")


def nash_welfare(v) -> float:
    """Geometric mean of the utilities; zero as soon as any utility is zero."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise ValueError("empty utility vector")
    if np.any(v < 0):
        raise ValueError("utilities must be non-negative")
    if np.any(v == 0):
        return 0.0
    return float(np.exp(np.mean(np.log(v))))


def normalize_valuations(instance: GoodsInstance, target: float = SPLIDDIT_TOTAL) -> GoodsInstance:
    """Rescale each agent's row to sum to ``target``."""
    if not target > 0:
        raise ValueError("target must be positive")
    v = instance.valuations
    sums = v.sum(axis=1, keepdims=True)
    if np.any(sums <= 0):
        raise InvalidInstanceError("cannot normalize an all-zero row")
    return GoodsInstance(v * (target / sums), instance.divisible, instance.good_labels)
