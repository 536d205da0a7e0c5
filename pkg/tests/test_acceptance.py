"""End-to-end acceptance checks with pinned tolerances and time limits.

Each test records one ``criterion N: PASS/FAIL`` line; the lines are
repeated in the terminal summary.
"""
import csv
import math
import time

import numpy as np
import pytest

from conftest import record_acceptance
from harmratio import (
    FiniteUtilityTable,
    GoodsInstance,
    PolytopeSpace,
    approx_pf_solve,
    cli,
    core_check,
    dataio,
    eisenberg_gale_mnw,
    enumerate_allocations,
    envy_free_check,
    fractional_goods_polytope,
    ghr_exhaustive_scan,
    ghr_scan,
    ihr,
    integer_goods_space,
    nw_ratio,
    pareto_check,
    pf_value,
    private_envy_ratio,
    prop_ratio,
    table_space,
)
from harmratio.fixtures import (
    example33_space,
    fig1_instance,
    thm43_bound,
    thm43_instance,
    three_partition_gadget,
    three_partition_witness,
)
from harmratio.model import utility_vector
from harmratio.rules import mes, nash_rule, phragmen_rule, round_robin_goods, util_rule

HIERARCHY_TOL = 1e-6


def _finish(number, ok, detail, elapsed, limit):
    in_time = elapsed < limit
    record_acceptance(number, ok and in_time, f"{detail}; {elapsed:.1f}s of {limit:g}s")
    assert ok, detail
    assert in_time, f"took {elapsed:.1f}s, limit {limit}s"


# ---------------------------------------------------------------------------


def test_criterion_01_staircase_envy_free_but_harmful():
    t0 = time.perf_counter()
    problems = []
    for n in (3, 4, 5, 6):
        inst, blue, _ = fig1_instance(n)
        per = private_envy_ratio(inst, blue)
        if abs(per - 1.0) > 1e-9:
            problems.append(f"n={n} per={per}")
        space = fractional_goods_polytope(inst)
        value, wit = ihr(space, blue)
        if abs(value - n / 2) > 1e-6:
            problems.append(f"n={n} ihr={value}")
        cur = utility_vector(inst, blue)
        replay = wit.replay(space, cur)
        if abs(replay - value) > 1e-6:
            problems.append(f"n={n} replay={replay}")
    _finish(1, not problems, "blue EF, ihr = n/2 with replayed witness for n=3..6" + (f" {problems}" if problems else ""),
            time.perf_counter() - t0, 10)


def test_criterion_02_example_one_outcome():
    t0 = time.perf_counter()
    space = table_space(example33_space())
    value, _ = ihr(space, "o")
    pf = pf_value(space, "o")
    prop = prop_ratio(space, "o")
    ok = abs(value - 0.5) <= 1e-12 and pf == math.inf and prop == 0.0
    _finish(2, ok, f"ihr={value} pf={pf} prop_ratio={prop}", time.perf_counter() - t0, 1)


def test_criterion_03_nash_welfare_tight_instance():
    t0 = time.perf_counter()
    eps = 1e-3
    problems, shown = [], []
    for n in (2, 3, 4, 6):
        space = table_space(thm43_instance(n, eps))
        g = ghr_exhaustive_scan(space, "o").value
        lo = thm43_bound(n)
        r = nw_ratio(space, "o")
        shown.append(f"n={n}: ghr={g:.4f} nw={r:.5f} bound={lo:.5f}")
        if g > 1 + 1e-12:
            problems.append(f"n={n} ghr={g}")
        if not lo <= r <= lo + 5 * eps:
            problems.append(f"n={n} nw_ratio={r} outside [{lo}, {lo + 5 * eps}]")
    _finish(3, not problems, "; ".join(problems or shown), time.perf_counter() - t0, 30)


# ---------------------------------------------------------------------------
# hierarchy


def _random_table(rng):
    n = int(rng.integers(2, 7))
    K = int(rng.integers(2, 201))
    style = rng.integers(3)
    if style == 0:
        U = rng.random((K, n))
    elif style == 1:
        # few distinct values so ties and dominance occur often
        U = rng.integers(0, 4, size=(K, n)).astype(float)
    else:
        U = rng.integers(1, 6, size=(K, n)).astype(float)
    return table_space(FiniteUtilityTable(U))


def _row_picks(U, rng):
    with np.errstate(divide="ignore"):
        logs = np.where(U > 0, np.log(np.where(U > 0, U, 1.0)), -np.inf)
    pos = (U > 0).sum(axis=1)
    score = np.where(pos == U.shape[1], logs.sum(axis=1), -np.inf)
    picks = {int(np.argmax(U.sum(axis=1))), int(rng.integers(U.shape[0]))}
    if np.isfinite(score.max()):
        picks.add(int(np.argmax(score)))
    order = np.lexsort(np.sort(U, axis=1).T[::-1])
    picks.add(int(order[-1]))  # leximin row
    return sorted(picks)


class _Hierarchy:
    def __init__(self):
        self.violations = []
        self.premises = {"pf": 0, "ghr": 0, "ihr": 0, "prop": 0}

    def check(self, space, row, tag, instance=None, allocation=None):
        n = space.n
        pf = pf_value(space, row)
        scan = ghr_scan(space, row)
        g, one_ghr = scan.value, not scan.violates  # ties count only with a strict gain
        h = ihr(space, row)[0]
        prop = prop_ratio(space, row)
        if pf <= 1 + 1e-9:
            self.premises["pf"] += 1
            if g > 1 + HIERARCHY_TOL or not one_ghr:
                self.violations.append(f"{tag}: PF but ghr={g}")
        if one_ghr:
            self.premises["ghr"] += 1
            if not core_check(space, row).ok:
                self.violations.append(f"{tag}: 1-GHR but not in the core")
            if not pareto_check(space, row).ok:
                self.violations.append(f"{tag}: 1-GHR but not PO")
            if h > 1 + HIERARCHY_TOL:
                self.violations.append(f"{tag}: 1-GHR but ihr={h}")
        if instance is not None and h <= 1 + 1e-9:
            self.premises["ihr"] += 1
            if not envy_free_check(instance, allocation).ok:
                self.violations.append(f"{tag}: 1-IHR but not EF")
        if prop >= 1 - 1e-9:
            self.premises["prop"] += 1
            if h > n / 2 + HIERARCHY_TOL:
                self.violations.append(f"{tag}: Prop but ihr={h}")


def test_criterion_04_hierarchy():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240404)
    H = _Hierarchy()
    for k in range(1000):
        space = _random_table(rng)
        for row in _row_picks(space.utilities, rng):
            H.check(space, row, f"table {k} row {row}")
    goods = 0
    while goods < 500:
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 7))
        if rng.random() < 0.5:
            V = rng.integers(0, 4, size=(n, m)).astype(float)
        else:
            V = rng.random((n, m))
        if np.any(V.sum(axis=1) == 0):
            continue
        inst = GoodsInstance(V)
        space = enumerate_allocations(inst)
        for rule in (round_robin_goods, util_rule, nash_rule):
            A = rule(inst).outcome
            H.check(space, utility_vector(inst, A), f"goods {goods} {rule.__name__}", inst, A)
        goods += 1
    premises = ", ".join(f"{k}:{v}" for k, v in H.premises.items())
    detail = f"{len(H.violations)} violations (premises held {premises})"
    if H.violations:
        detail += f" first: {H.violations[:3]}"
    _finish(4, not H.violations and all(H.premises.values()), detail, time.perf_counter() - t0, 300)


# ---------------------------------------------------------------------------


def test_criterion_05_nash_welfare_is_proportionally_fair():
    t0 = time.perf_counter()
    rng = np.random.default_rng(55)
    worst = 1.0
    for _ in range(100):
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        V = rng.random((n, m)) + 1e-3
        space = fractional_goods_polytope(GoodsInstance(V, divisible=True))
        res = eisenberg_gale_mnw(space)
        worst = max(worst, pf_value(space, res.x))
    _finish(5, worst <= 1 + 1e-5, f"max pf over 100 instances = {worst:.9f}", time.perf_counter() - t0, 120)


def _random_polytope(rng):
    n = int(rng.integers(2, 5))
    if rng.random() < 0.5:
        m = int(rng.integers(1, 5))
        return fractional_goods_polytope(GoodsInstance(rng.random((n, m)) + 0.05, divisible=True))
    d = int(rng.integers(2, 5))
    U = rng.random((n, d))
    U[np.arange(n), rng.integers(d, size=n)] += 0.5  # every agent can gain somewhere
    A = rng.random((int(rng.integers(1, 4)), d)) + 0.1
    return PolytopeSpace(U, A, np.ones(A.shape[0]))


def test_criterion_06_pf_bounds_ghr():
    t0 = time.perf_counter()
    rng = np.random.default_rng(66)
    problems = []
    checked = 0
    for k in range(200):
        space = _random_table(rng)
        row = int(rng.integers(len(space)))
        pf = pf_value(space, row)
        if not math.isfinite(pf):
            continue
        checked += 1
        g = ghr_scan(space, row).value
        if g > 1 + space.n * (pf - 1) + 1e-6:
            problems.append(f"table {k}: ghr={g} pf={pf}")
    eps = 0.05
    for k in range(20):
        space = _random_polytope(rng)
        res = approx_pf_solve(space, eps)
        g = ghr_scan(space, res.x).value
        if g > 1 + space.n * eps + 1e-4:
            problems.append(f"polytope {k}: ghr={g}")
    detail = f"{checked} finite-pf tables and 20 polytopes"
    _finish(6, not problems, detail + (f" {problems[:3]}" if problems else ""), time.perf_counter() - t0, 180)


# ---------------------------------------------------------------------------


def test_criterion_07_three_partition_gadget():
    t0 = time.perf_counter()
    c = [1 / 3] * 6
    inst, A = three_partition_gadget(c)
    A2, w1, w2 = three_partition_witness(c)
    cur = utility_vector(inst, A)
    alt = utility_vector(inst, A2)
    others = [k for k in range(inst.n) if k not in (w1, w2)]
    untouched = bool(np.all(alt[others] >= cur[others] - 1e-12))
    ratio = 0.5 * alt[w1] / cur[w1]
    value, _ = ihr(integer_goods_space(inst), A)
    ok = untouched and ratio > 1 and value > 1
    _finish(7, ok, f"witness ratio {ratio:.4f}, others unharmed={untouched}, ihr(A)={value:.4f}",
            time.perf_counter() - t0, 5)


@pytest.mark.slow
def test_gadget_without_partition_is_one_ihr():
    inst, A = three_partition_gadget([0.26, 0.26, 0.26, 0.40, 0.41, 0.41])
    value, _ = ihr(integer_goods_space(inst), A)
    assert value <= 1 + 1e-9


# ---------------------------------------------------------------------------


def test_criterion_08_sort_construction_matches_exhaustive():
    t0 = time.perf_counter()
    rng = np.random.default_rng(88)
    worst = 0.0
    for k in range(300):
        n = int(rng.integers(2, 11))
        K = int(rng.integers(1, 41 if n <= 8 else 16))
        if rng.random() < 0.5:
            U = rng.integers(0, 4, size=(K, n)).astype(float)
        else:
            U = rng.random((K, n))
        cur = U[0] if rng.random() < 0.5 else rng.random(n)
        space = table_space(FiniteUtilityTable(U))
        frac = float(rng.choice([0.0, 0.3, 0.5]))
        a = ghr_scan(space, cur, frac, mode="sort").value
        b = ghr_exhaustive_scan(space, cur, frac).value
        if a == b:
            continue
        worst = max(worst, abs(a - b))
    _finish(8, worst <= 1e-9, f"max |sort - exhaustive| over 300 instances = {worst:.3g}",
            time.perf_counter() - t0, 300)


# ---------------------------------------------------------------------------


def _experiment_args(**kw):
    ns = cli.build_parser().parse_args(["experiment", "--preset", kw.pop("preset"), "--out", "unused"])
    for k, v in kw.items():
        setattr(ns, k, v)
    return ns


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_criterion_09_experiment_trends(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "1")
    t0 = time.perf_counter()
    problems = []

    goods = tmp_path / "goods"
    goods.mkdir()
    cli.experiment_goods(_experiment_args(preset="goods-fig2"), goods)
    summary = {r["rule"]: r for r in _read(goods / "summary.csv")}
    nash_avg, util_avg = float(summary["Nash"]["avg_ihr"]), float(summary["Util"]["avg_ihr"])
    nash_inf, util_inf = float(summary["Nash"]["ihr_inf_frac"]), float(summary["Util"]["ihr_inf_frac"])
    if not nash_avg <= util_avg:
        problems.append(f"avg ihr Nash {nash_avg} > Util {util_avg}")
    if not util_inf >= nash_inf:
        problems.append(f"inf fraction Util {util_inf} < Nash {nash_inf}")
    records = _read(goods / "records.csv")
    bad = [r for r in records if float(r["ihr"]) < float(r["per"]) - 1e-9]
    if bad:
        problems.append(f"{len(bad)} records with ihr < per")
    n_goods = len({r["instance"] for r in records})

    pb = tmp_path / "pb"
    pb.mkdir()
    cli.experiment_pb(_experiment_args(preset="pb-fig4"), pb)
    rows = _read(pb / "records.csv")
    curves = {}
    for r in rows:
        curves.setdefault((r["instance"], r["rule"]), []).append((float(r["min_frac"]), float(r["ghr"])))
    rising = [key for key, pts in curves.items()
              if any(b[1] > a[1] + 1e-9 for a, b in zip(sorted(pts), sorted(pts)[1:]))]
    if rising:
        problems.append(f"{len(rising)} increasing GHR curves")
    elections = {k[0] for k in curves}
    avg = {r["rule"]: float(r["avg_ghr"]) for r in _read(pb / "curves.csv") if float(r["min_frac"]) == 0.5}
    if not avg["Nash"] <= avg["Greedy-U"] + 1e-9:
        problems.append(f"at 0.5 Nash {avg['Nash']} > Greedy-U {avg['Greedy-U']}")
    if len(elections) < 20:
        problems.append(f"only {len(elections)} elections")

    detail = (f"goods {n_goods} instances: avg ihr Nash {nash_avg:.3f} <= Util {util_avg:.3f}, "
              f"inf frac Util {util_inf:.2f} >= Nash {nash_inf:.2f}; pb {len(elections)} elections: "
              f"GHR@0.5 Nash {avg['Nash']:.3f} <= Greedy-U {avg['Greedy-U']:.3f}")
    _finish(9, not problems, detail + (f" {problems}" if problems else ""), time.perf_counter() - t0, 900)


# ---------------------------------------------------------------------------


def _maximal(inst, funded):
    spent = sum(p.cost for p in inst.projects if p.id in funded)
    return all(p.id in funded or spent + p.cost > inst.budget + 1e-9 for p in inst.projects)


def test_criterion_10_pabulib_round_trip_and_completion():
    t0 = time.perf_counter()
    problems = []
    names = dataio.bundled_pabulib_names()
    for name in names:
        inst = dataio.load_bundled_pabulib(name)
        text = dataio.serialize_pabulib(inst)
        again = dataio.parse_pabulib(text)
        if dataio.serialize_pabulib(again) != text or again.ballots != inst.ballots or again.projects != inst.projects:
            problems.append(f"{name}: round trip differs")
        for rule in (mes, phragmen_rule):
            sel = rule(inst).outcome
            if sel.cost(inst) > inst.budget + 1e-9:
                problems.append(f"{name} {rule.__name__}: over budget")
            if not _maximal(inst, sel.funded):
                problems.append(f"{name} {rule.__name__}: not maximal")
    _finish(10, not problems and bool(names), f"{len(names)} bundled elections" + (f" {problems}" if problems else ""),
            time.perf_counter() - t0, 60)
