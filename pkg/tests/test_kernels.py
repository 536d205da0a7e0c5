"""Both kernel backends against direct numpy/itertools oracles."""
import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from harmratio import _kernels_py, kernels
from harmratio.model import GoodsInstance

from conftest import BACKENDS, goods_matrices, utility_tables

TOL = 1e-9


def naive_floors_argmax(U, target, floors, active):
    best, arg = -np.inf, -1
    for k, row in enumerate(U):
        if all(row[a] >= floors[a] - TOL for a in range(U.shape[1]) if active[a]):
            if row[target] > best:
                best, arg = row[target], k
    return best, arg


def naive_ihr_pairs(U, cur):
    n = U.shape[1]
    V = np.full((n, n), -np.inf)
    for i in range(n):
        for j in range(n):
            for row in U:
                if all(row[k] >= cur[k] - TOL for k in range(n) if k not in (i, j)):
                    V[i, j] = max(V[i, j], row[i])
    return V


def test_pure_python_backend_always_available():
    assert "python" in BACKENDS
    assert kernels.BACKEND in BACKENDS


@given(utility_tables(max_agents=4, max_outcomes=10), st.data())
def test_floors_argmax_matches_scan(U, data):
    n = U.shape[1]
    target = data.draw(st.integers(0, n - 1))
    active = np.array(data.draw(st.lists(st.booleans(), min_size=n, max_size=n)), dtype=np.uint8)
    floors = U[data.draw(st.integers(0, U.shape[0] - 1))]
    want = naive_floors_argmax(U, target, floors, active)
    for impl in BACKENDS.values():
        assert impl.floors_argmax(U, target, floors.copy(), active, TOL) == (want[0], want[1])


@given(utility_tables(max_agents=4, max_outcomes=10), st.data())
def test_ihr_pairs_values_match_scan(U, data):
    cur = U[data.draw(st.integers(0, U.shape[0] - 1))]
    want = naive_ihr_pairs(U, cur)
    for impl in BACKENDS.values():
        V, W = impl.ihr_pairs(U, cur, TOL)
        n = U.shape[1]
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                assert V[i, j] == want[i, j]
                assert U[int(W[i, j]), i] == want[i, j]


@given(utility_tables(max_agents=5, max_outcomes=10), st.data())
def test_ghr_sort_backends_agree(U, data):
    cur = U[data.draw(st.integers(0, U.shape[0] - 1))]
    min_k = data.draw(st.integers(1, U.shape[1]))
    results = [impl.ghr_sort(U, cur, min_k, 1.0, TOL) for impl in BACKENDS.values()]
    for r in results[1:]:
        assert r == results[0]


def test_ratio_matrix_conventions():
    r = _kernels_py.ratio_matrix(np.array([[0.0, 2.0, 3.0]]), np.array([0.0, 0.0, 1.5]))
    assert r.tolist() == [[1.0, np.inf, 2.0]]


def brute_nash(V):
    n, m = V.shape
    best = None
    for owners in itertools.product(range(n), repeat=m):
        u = np.zeros(n)
        for g, i in enumerate(owners):
            u[i] += V[i, g]
        pos = u > 0
        key = (int(pos.sum()), float(np.log(u[pos]).sum()) if pos.any() else 0.0)
        if best is None or key[0] > best[0] or (key[0] == best[0] and key[1] > best[1] + 1e-12):
            best = key
    return best


def brute_maxmin(V):
    n, m = V.shape
    best = -np.inf
    for owners in itertools.product(range(n), repeat=m):
        u = np.zeros(n)
        for g, i in enumerate(owners):
            u[i] += V[i, g]
        best = max(best, u.min())
    return best


def utils(V, owners):
    u = np.zeros(V.shape[0])
    np.add.at(u, owners, V[owners, np.arange(V.shape[1])])
    return u


@given(goods_matrices(max_agents=3, max_goods=5))
def test_bnb_nash_exact_both_backends(V):
    want = brute_nash(V)
    inc = np.zeros(V.shape[1], dtype=np.int64)
    for impl in BACKENDS.values():
        u = utils(V, impl.bnb_nash(V, inc))
        pos = u > 0
        key = (int(pos.sum()), float(np.log(u[pos]).sum()) if pos.any() else 0.0)
        assert key[0] == want[0]
        assert key[1] == pytest.approx(want[1], abs=1e-9)


@given(goods_matrices(max_agents=3, max_goods=5))
def test_bnb_maxmin_exact_both_backends(V):
    n, m = V.shape
    want = brute_maxmin(V)
    inc = np.zeros(m, dtype=np.int64)
    for impl in BACKENDS.values():
        value, owners = impl.bnb_maxmin(V, np.ones(n, dtype=bool), np.zeros(n), inc, TOL)
        assert value == pytest.approx(want, abs=1e-9)
        assert utils(V, owners).min() == pytest.approx(want, abs=1e-9)


def test_allocation_utilities_enumerates_every_assignment():
    V = np.array([[1.0, 2.0], [3.0, 4.0]])
    U = _kernels_py.allocation_utilities(V)
    assert U.shape == (4, 2)
    assert sorted(map(tuple, U.tolist())) == sorted([(3.0, 0.0), (1.0, 4.0), (2.0, 3.0), (0.0, 7.0)])


def test_goods_instance_accepts_kernel_output():
    GoodsInstance(_kernels_py.allocation_utilities(np.array([[1.0, 1.0]])))
