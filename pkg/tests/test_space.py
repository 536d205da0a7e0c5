import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from harmratio import (
    EnumeratedSpace,
    GoodsInstance,
    PBInstance,
    Project,
    ReviewInstance,
    discretize_goods,
    enumerate_allocations,
    enumerate_budget_feasible,
    enumerate_review_assignments,
    fractional_goods_polytope,
    integer_goods_space,
    review_assignment_space,
    space_for,
    table_space,
)
from harmratio.errors import CapExceededError, InvalidInstanceError
from harmratio.fixtures import example33_space, fig1_instance, thm43_instance
from harmratio.space import max_min_scaled_utility, max_utility_with_floors

from conftest import goods_matrices, utility_tables


def pb(costs, budget, ballots=((0,),)):
    projects = [Project(f"p{k}", c) for k, c in enumerate(costs)]
    return PBInstance(projects, budget, [frozenset(f"p{j}" for j in b) for b in ballots])


def test_budget_enumeration_counts():
    assert len(enumerate_budget_feasible(pb([1, 1], 1))) == 3
    assert len(enumerate_budget_feasible(pb([1, 1, 1], 3))) == 8


def test_budget_enumeration_matches_subset_scan(rng):
    costs = rng.uniform(1, 10, 15)
    budget = 0.35 * costs.sum()
    space = enumerate_budget_feasible(pb(costs, budget))
    count = sum(
        1 for code in range(2 ** 15)
        if sum(costs[j] for j in range(15) if code >> j & 1) <= budget
    )
    assert len(space) == count
    assert len(space) <= 2 ** 15


def test_budget_enumeration_cap():
    with pytest.raises(CapExceededError):
        enumerate_budget_feasible(pb([1] * 5, 2), cap=4)


def test_allocation_counts():
    assert len(enumerate_allocations(GoodsInstance(np.ones((2, 2))))) == 4
    assert len(enumerate_allocations(GoodsInstance(np.ones((3, 4))))) == 81
    assert len(enumerate_allocations(GoodsInstance(np.ones((3, 12))))) == 531441


def test_allocation_enumeration_errors():
    with pytest.raises(CapExceededError):
        enumerate_allocations(GoodsInstance(np.ones((3, 5))), cap=200)
    with pytest.raises(InvalidInstanceError):
        enumerate_allocations(GoodsInstance(np.ones((2, 2)), divisible=True))


def test_allocation_rows_decode_consistently(rng):
    inst = GoodsInstance(rng.integers(0, 5, (3, 4)).astype(float))
    space = enumerate_allocations(inst)
    for k in rng.integers(0, len(space), 20):
        A = space.decode(int(k))
        assert np.allclose(space.utilities[k], (inst.valuations * A.shares).sum(axis=1))


def test_example33_floor_queries():
    space = table_space(example33_space())
    value, row = max_utility_with_floors(space, 2, {0: 1.0, 1: 1.0})
    assert value == 0.0 and space.label(row) == "o"
    value, row = max_utility_with_floors(space, 0, {2: 0.0})
    assert value == 1.0 and space.label(row) == "o"


def test_infeasible_floors_sentinel():
    space = table_space(example33_space())
    value, row = space.max_utility_with_floors(0, {2: 5.0})
    assert value == -np.inf and row is None


def test_thm43_scaled_group_query():
    space = table_space(thm43_instance(4, 0.01))
    ref = space.utilities[0]
    value, row = max_min_scaled_utility(space, [0, 1], 0.5, {}, ref)
    assert space.label(row) == "o*"
    assert value < 1.0
    assert value == pytest.approx(0.5 / (0.5 + 0.01))


def test_fractional_polytope_shape():
    space = fractional_goods_polytope(GoodsInstance([[1.0], [2.0]], divisible=True))
    assert space.d == 2 and space.A_eq.shape == (1, 2)
    space = fractional_goods_polytope(GoodsInstance(np.ones((3, 2)), divisible=True))
    assert space.d == 6 and space.A_eq.shape == (2, 6)
    with pytest.raises(InvalidInstanceError):
        fractional_goods_polytope(GoodsInstance(np.ones((2, 2))))


def test_fig1_agent_one_max_is_one():
    inst, _, _ = fig1_instance(5)
    value, _ = fractional_goods_polytope(inst).max_utility_with_floors(0, {})
    assert value == pytest.approx(1.0)


def _scan_max(U, i, floors):
    best = -np.inf
    for row in U:
        if all(row[k] >= v - 1e-9 for k, v in floors.items()):
            best = max(best, row[i])
    return best


@given(utility_tables(max_agents=4, max_outcomes=10), st.data())
def test_enumerated_floor_queries_match_scan(U, data):
    space = EnumeratedSpace(U)
    n = U.shape[1]
    i = data.draw(st.integers(0, n - 1))
    ref = U[data.draw(st.integers(0, U.shape[0] - 1))]
    keys = data.draw(st.sets(st.integers(0, n - 1).filter(lambda k: k != i)))
    floors = {k: ref[k] for k in keys}
    value, row = space.max_utility_with_floors(i, floors)
    assert value == _scan_max(U, i, floors)
    # the reference row satisfies its own floors, so the query is never infeasible
    assert row is not None


@given(utility_tables(max_agents=4, max_outcomes=10, zeros=False), st.data())
def test_singleton_scaled_query_reduces_to_floor_query(U, data):
    space = EnumeratedSpace(U)
    n = U.shape[1]
    i = data.draw(st.integers(0, n - 1))
    ref = U[data.draw(st.integers(0, U.shape[0] - 1))]
    scale = data.draw(st.sampled_from([0.25, 0.5, 1.0]))
    floors = {k: ref[k] for k in range(n) if k != i}
    v1, _ = space.max_min_scaled_utility([i], scale, floors, ref)
    v2, _ = space.max_utility_with_floors(i, floors)
    assert v1 == pytest.approx(v2 * scale / ref[i])


@given(goods_matrices(max_agents=3, max_goods=3), st.data())
def test_polytope_singleton_scaled_query_matches(V, data):
    space = fractional_goods_polytope(GoodsInstance(V, divisible=True))
    n = V.shape[0]
    i = data.draw(st.integers(0, n - 1))
    ref = V.sum(axis=1) / n
    floors = {k: ref[k] for k in range(n) if k != i}
    v1, _ = space.max_min_scaled_utility([i], 1.0, floors, ref)
    v2, _ = space.max_utility_with_floors(i, floors)
    assert v1 == pytest.approx(v2 / ref[i], rel=1e-7)


@pytest.mark.parametrize("seed", range(4))
def test_grid_optimum_below_polytope_and_converges(seed):
    rng = np.random.default_rng(seed)
    inst = GoodsInstance(rng.random((2, 3)), divisible=True)
    poly = fractional_goods_polytope(inst)
    floors = {1: 0.3 * inst.valuations[1].sum()}
    exact, _ = poly.max_utility_with_floors(0, floors)
    gaps = []
    for res in (2, 4, 8, 16):
        v, _ = discretize_goods(inst, res).max_utility_with_floors(0, floors)
        assert v <= exact + 1e-9
        gaps.append(exact - v)
    assert gaps[-1] <= gaps[0] + 1e-12
    assert gaps[-1] <= 0.2 * exact


@pytest.mark.parametrize("seed", range(5))
def test_integer_space_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    inst = GoodsInstance(rng.integers(0, 6, (3, 4)).astype(float))
    enum = enumerate_allocations(inst)
    ip = integer_goods_space(inst)
    ref = enum.utilities[int(rng.integers(len(enum)))]
    for i in range(3):
        floors = {k: ref[k] for k in range(3) if k != i}
        assert ip.max_utility_with_floors(i, floors)[0] == pytest.approx(enum.max_utility_with_floors(i, floors)[0])


def test_review_spaces_agree():
    rng = np.random.default_rng(7)
    S = rng.random((4, 4))
    inst = ReviewInstance(S, frozenset({(0, 1)}), load=2)
    enum = enumerate_review_assignments(inst)
    ip = review_assignment_space(inst)
    for i in range(4):
        assert ip.max_utility_with_floors(i, {})[0] == pytest.approx(enum.max_utility_with_floors(i, {})[0])
    A = enum.decode(0)
    A.validate(inst)
    assert 1 not in A.assigned[0]
    assert np.allclose(ip.utility_of(A), enum.utilities[0])


def test_space_for_dispatch():
    assert space_for(GoodsInstance(np.ones((2, 2)))).kind == "enumerated"
    assert space_for(GoodsInstance(np.ones((2, 2)), divisible=True)).kind == "polytope"
    assert space_for(GoodsInstance(np.ones((2, 3))), allocation_cap=4).kind == "integer"
    assert space_for(example33_space()).kind == "enumerated"
    with pytest.raises(TypeError):
        space_for(object())
