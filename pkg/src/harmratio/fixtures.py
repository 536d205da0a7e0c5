"""Worked instances and hardness gadgets, built exactly as constructed by hand."""
from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from harmratio.errors import InvalidInstanceError
from harmratio.model import Allocation, FiniteUtilityTable, GoodsInstance

GADGET_EPSILON = 0.1


def fig1_instance(n: int):
    """Staircase instance where an envy-free allocation still harms agent 1 by a factor n/2.

    Agent i values goods 1..i at 1 (zero-based: agent i values goods 0..i).
    ``blue`` splits good 0 equally and gives good g to agent g; ``red``
    gives good g to agent g except good 1, which is split among agents 2..n-1.
    Returns ``(instance, blue, red)``.
    """
    if n < 3:
        raise InvalidInstanceError("the staircase instance needs n >= 3")
    V = np.tril(np.ones((n, n)))
    inst = GoodsInstance(V, divisible=True)
    blue = np.eye(n)
    blue[:, 0] = 1.0 / n
    red = np.eye(n)
    red[1, 1] = 0.0
    red[2:, 1] = 1.0 / (n - 2)
    return inst, Allocation(blue), Allocation(red)


def example33_space() -> FiniteUtilityTable:
    """Two outcomes for three agents: ``o = (1, 1, 0)`` and ``o' = (0.1, 0.1, 1)``."""
    return FiniteUtilityTable(np.array([[1.0, 1.0, 0.0], [0.1, 0.1, 1.0]]), labels=("o", "o'"))


def thm43_instance(n: int, epsilon: float) -> FiniteUtilityTable:
    """Tight instance for the Nash-welfare guarantee of group harm ratio 1.

    Row ``o``: agent i (1-based) gets ``i/(ceil(n/2)+i) + epsilon`` for
    i <= floor(n/2) and ``1 + epsilon`` otherwise. Row ``o*`` gives everyone 1.
    """
    if n < 2:
        raise InvalidInstanceError("need n >= 2")
    if not 0 < epsilon < 0.5:
        raise InvalidInstanceError("epsilon must lie in (0, 1/2)")
    half_down, half_up = n // 2, (n + 1) // 2
    o = np.array([i / (half_up + i) + epsilon if i <= half_down else 1.0 + epsilon for i in range(1, n + 1)])
    return FiniteUtilityTable(np.vstack([o, np.ones(n)]), labels=("o", "o*"))


def thm43_bound(n: int) -> float:
    """``binom(n, floor(n/2)) ** (-1/n)``."""
    from math import comb

    return comb(n, n // 2) ** (-1.0 / n)


class GadgetLayout:
    """Index bookkeeping for the 3-Partition gadget (zero-based)."""

    def __init__(self, d: int):
        self.d = d
        # goods: G1 (3d), G2 (d), G3 (d), G4 (3d), G5 (3d), g*
        self.G1 = list(range(0, 3 * d))
        self.G2 = list(range(3 * d, 4 * d))
        self.G3 = list(range(4 * d, 5 * d))
        self.G4 = list(range(5 * d, 8 * d))
        self.G5 = list(range(8 * d, 11 * d))
        self.gstar = 11 * d
        self.m = 11 * d + 1
        # agents: Y (3d), Z (d), w1, w2
        self.Y = list(range(0, 3 * d))
        self.Z = list(range(3 * d, 4 * d))
        self.w1 = 4 * d
        self.w2 = 4 * d + 1
        self.n = 4 * d + 2


def _check_partition_input(c):
    c = [float(x) for x in c]
    if len(c) == 0 or len(c) % 3:
        raise InvalidInstanceError("need a non-empty multiset whose size is a multiple of 3")
    if any(not 0.25 < x < 0.5 for x in c):
        raise InvalidInstanceError("3-Partition values must lie strictly between 1/4 and 1/2")
    return c


def three_partition_gadget(c: Sequence[float], epsilon: float = GADGET_EPSILON):
    """Indivisible goods instance and allocation A encoding a 3-Partition instance.

    A is 1-IHR exactly when ``c`` has no partition into triples summing to 1.
    Returns ``(instance, A)``.
    """
    c = _check_partition_input(c)
    if not 0 < epsilon < 1:
        raise InvalidInstanceError("epsilon must lie in (0, 1)")
    d = len(c) // 3
    L = GadgetLayout(d)
    V = np.zeros((L.n, L.m))
    for j, y in enumerate(L.Y):
        V[y, L.G1[j]] = 1.0
        V[y, L.G4[j]] = 1.0 - epsilon
        V[y, L.G5[j]] = epsilon
    for k, z in enumerate(L.Z):
        V[z, L.G1] = c
        V[z, L.G2[k]] = 1.0
        V[z, L.G3[k]] = float(d)
    V[L.w1, L.G2] = 2.0
    V[L.w1, L.G4] = 1.0 / 3.0
    V[L.w1, L.gstar] = epsilon
    V[L.w2, L.G5] = epsilon
    V[L.w2, L.gstar] = epsilon
    owners = np.zeros(L.m, dtype=np.int64)
    for j, y in enumerate(L.Y):
        owners[L.G1[j]] = y
    for k, z in enumerate(L.Z):
        owners[L.G2[k]] = z
        owners[L.G3[k]] = z
    owners[L.G4] = L.w1
    owners[L.G5] = L.w2
    owners[L.gstar] = L.w2
    return GoodsInstance(V), Allocation.from_owners(owners, L.n)


def find_three_partition(c: Sequence[float], tol: float = 1e-9):
    """Triples of indices summing to 1, or None. Plain backtracking for gadget-sized inputs."""
    c = _check_partition_input(c)
    left = set(range(len(c)))
    out: list[tuple[int, int, int]] = []

    def rec():
        if not left:
            return True
        a = min(left)
        rest = sorted(left - {a})
        for b, e in itertools.combinations(rest, 2):
            if abs(c[a] + c[b] + c[e] - 1.0) <= tol:
                left.difference_update((a, b, e))
                out.append((a, b, e))
                if rec():
                    return True
                out.pop()
                left.update((a, b, e))
        return False

    return list(out) if rec() else None


def three_partition_witness(c: Sequence[float], triples=None, epsilon: float = GADGET_EPSILON):
    """The alternative allocation A' built from a 3-Partition solution.

    Y agents take their G4 and G5 goods, each z takes its G3 good and one
    triple of G1 goods, and w1 takes G2 and g*. Only w2 loses, while w1
    more than doubles. Returns ``(A', i, j)`` with i = w1 and j = w2.
    """
    c = _check_partition_input(c)
    if triples is None:
        triples = find_three_partition(c)
        if triples is None:
            raise InvalidInstanceError("the multiset has no 3-partition")
    d = len(c) // 3
    L = GadgetLayout(d)
    owners = np.zeros(L.m, dtype=np.int64)
    for j, y in enumerate(L.Y):
        owners[L.G4[j]] = y
        owners[L.G5[j]] = y
    for k, z in enumerate(L.Z):
        owners[L.G3[k]] = z
        for idx in triples[k]:
            owners[L.G1[idx]] = z
    owners[L.G2] = L.w1
    owners[L.gstar] = L.w1
    return Allocation.from_owners(owners, L.n), L.w1, L.w2
