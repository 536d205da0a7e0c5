from math import comb

import numpy as np
import pytest

from harmratio import (
    FiniteUtilityTable,
    integer_goods_space,
    fractional_goods_polytope,
    ghr,
    ihr,
    nw_ratio,
    prop_ratio,
    table_space,
)
from harmratio.criteria import envy_free_check, ghr_exhaustive_scan
from harmratio.errors import InvalidInstanceError
from harmratio.fixtures import (
    GADGET_EPSILON,
    GadgetLayout,
    example33_space,
    fig1_instance,
    find_three_partition,
    thm43_bound,
    thm43_instance,
    three_partition_gadget,
    three_partition_witness,
)
from harmratio.model import check_allocation, utility_vector


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_fig1_structure(n):
    inst, blue, red = fig1_instance(n)
    assert np.array_equal(inst.valuations, np.tril(np.ones((n, n))))
    check_allocation(inst, blue)
    check_allocation(inst, red)
    u_blue = utility_vector(inst, blue)
    assert u_blue[0] == pytest.approx(1 / n)
    assert u_blue[1:] == pytest.approx(np.full(n - 1, 1 + 1 / n))
    u_red = utility_vector(inst, red)
    assert u_red[0] == pytest.approx(1.0)
    assert u_red[1] == 0.0
    assert u_red[2:] == pytest.approx(np.full(n - 2, 1 + 1 / (n - 2)))


def test_fig1_paper_values():
    inst, blue, _ = fig1_instance(3)
    assert utility_vector(inst, blue) == pytest.approx([1 / 3, 4 / 3, 4 / 3])
    inst, _, red = fig1_instance(6)
    assert utility_vector(inst, red)[0] == pytest.approx(1.0)


def test_fig1_blue_envy_free_but_harms_agent_one():
    inst, blue, red = fig1_instance(4)
    assert envy_free_check(inst, blue).ok
    value, w = ihr(fractional_goods_polytope(inst), blue)
    assert value == pytest.approx(2.0, abs=1e-6)
    assert w.improving == (0,)


def test_fig1_rejects_small_n():
    with pytest.raises(InvalidInstanceError):
        fig1_instance(2)


def test_example33_table():
    table = example33_space()
    assert isinstance(table, FiniteUtilityTable)
    assert table.utilities.tolist() == [[1.0, 1.0, 0.0], [0.1, 0.1, 1.0]]
    space = table_space(table)
    value, _ = ihr(space, "o")
    assert np.isfinite(value)
    assert value <= 1.0
    assert prop_ratio(space, "o") == 0.0


def test_thm43_formula():
    table = thm43_instance(4, 0.01)
    assert table.utilities[0] == pytest.approx([1 / 3 + 0.01, 1 / 2 + 0.01, 1.01, 1.01])
    assert table.utilities[1].tolist() == [1.0] * 4
    assert table.labels == ("o", "o*")


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_thm43_group_ratio_and_nash_bound(n):
    space = table_space(thm43_instance(n, 1e-4))
    assert ghr_exhaustive_scan(space, "o").value <= 1.0 + 1e-9
    assert ghr(space, "o")[0] <= 1.0 + 1e-9
    r = nw_ratio(space, "o")
    assert thm43_bound(n) <= r <= thm43_bound(n) + 5e-4


def test_thm43_bound_values():
    assert thm43_bound(4) == pytest.approx(6 ** (-1 / 4))
    assert thm43_bound(6) == pytest.approx(comb(6, 3) ** (-1 / 6))


@pytest.mark.parametrize("args", [(1, 0.1), (4, 0.0), (4, 0.5)])
def test_thm43_rejects(args):
    with pytest.raises(InvalidInstanceError):
        thm43_instance(*args)


def test_gadget_counts_and_allocation_utilities():
    c = [1 / 3] * 3
    inst, A = three_partition_gadget(c)
    assert (inst.m, inst.n) == (12, 6)
    L = GadgetLayout(1)
    u = utility_vector(inst, A)
    assert u[L.w1] == pytest.approx(1.0)
    assert u[L.w2] == pytest.approx(4 * GADGET_EPSILON)
    inst2, A2 = three_partition_gadget([1 / 3] * 6)
    L2 = GadgetLayout(2)
    assert (inst2.m, inst2.n) == (23, 10)
    u2 = utility_vector(inst2, A2)
    assert u2[L2.w1] == pytest.approx(2.0)
    assert u2[L2.w2] == pytest.approx(7 * GADGET_EPSILON)


def test_gadget_witness_harms_only_w2():
    c = [1 / 3] * 6
    inst, A = three_partition_gadget(c)
    Ap, i, j = three_partition_witness(c)
    check_allocation(inst, Ap)
    u, up = utility_vector(inst, A), utility_vector(inst, Ap)
    others = [k for k in range(inst.n) if k not in (i, j)]
    assert np.all(up[others] >= u[others] - 1e-12)
    assert up[i] > 2 * u[i]


def test_gadget_d1_ihr_violation_found_by_search():
    inst, A = three_partition_gadget([0.3, 0.3, 0.4])
    value, w = ihr(integer_goods_space(inst), A)
    assert value > 1.0
    assert w.improving == (GadgetLayout(1).w1,)


def test_gadget_input_validation():
    with pytest.raises(InvalidInstanceError):
        three_partition_gadget([0.3, 0.3])
    with pytest.raises(InvalidInstanceError):
        three_partition_gadget([0.2, 0.4, 0.4])
    with pytest.raises(InvalidInstanceError):
        three_partition_witness([0.26, 0.26, 0.27])


def test_find_three_partition():
    assert find_three_partition([0.3, 0.3, 0.4]) == [(0, 1, 2)]
    assert find_three_partition([0.26, 0.26, 0.27]) is None
    triples = find_three_partition([0.3, 0.26, 0.4, 0.3, 0.44, 0.3])
    assert triples is not None
    c = [0.3, 0.26, 0.4, 0.3, 0.44, 0.3]
    assert all(abs(sum(c[k] for k in t) - 1) < 1e-9 for t in triples)
