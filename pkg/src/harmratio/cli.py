"""Command-line batch driver: ``generate``, ``solve``, ``audit`` and ``experiment``.

Exit status is 0 when every requested computation finished, 1 when some
instances failed (they are listed on stderr and in ``failures.json``), and
2 for usage errors, unknown rules or criteria, and size-cap violations.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from harmratio import criteria as C
from harmratio import dataio
from harmratio.errors import CapExceededError, HarmRatioError
from harmratio.model import GoodsInstance, PBInstance, ReviewInstance, normalize_valuations
from harmratio.rules import GOODS_RULES, PB_RULES, REVIEW_RULES, goods_rules, pb_rules, review_rules
from harmratio.space import enumerate_allocations, enumerate_budget_feasible, integer_goods_space, space_for

WORKERS_ENV = "HARMRATIO_WORKERS"
DEFAULT_FRACTIONS = tuple(round(0.1 * k, 1) for k in range(11))
# goods instances with at most this many allocations are audited by enumeration
GOODS_ENUM_CAP = 200_000
# the goods grid needs exact Nash beyond the library's default goods cap
EXPERIMENT_MAX_GOODS = 24

RULES_BY_DOMAIN = {"goods": GOODS_RULES, "pb": PB_RULES, "review": REVIEW_RULES}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers


def workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def run_tasks(fn, tasks):
    """Map ``fn`` over ``tasks`` in a worker pool; results keep task order."""
    k = workers()
    if k == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, tasks))


def _split(text: str | None, cast=str):
    if not text:
        return []
    return [cast(x.strip()) for x in text.split(",") if x.strip()]


def _rules(domain: str, spec: str) -> list[str]:
    known = RULES_BY_DOMAIN[domain]
    if spec in ("all", ""):
        return list(known)
    rules = _split(spec)
    bad = [r for r in rules if r not in known]
    if bad:
        raise UsageError(f"unknown {domain} rule(s) {bad}; choose from {list(known)}")
    return rules


def _fixture(name: str):
    from harmratio import fixtures

    kind, _, arg = name.partition(":")
    if kind == "example33":
        return fixtures.example33_space()
    if kind == "fig1":
        return fixtures.fig1_instance(int(arg or 3))[0]
    if kind == "thm43":
        return fixtures.thm43_instance(int(arg or 4), 1e-3)
    raise UsageError(f"unknown fixture {name!r} (example33, fig1:N, thm43:N)")


def load_input(path: str, domain: str | None = None, utility_model: str = "approval", conflicts=None):
    if path.startswith("fixture:"):
        return _fixture(path[len("fixture:"):])
    if not Path(path).exists():
        raise UsageError(f"input file {path} does not exist")
    return dataio.load_instance(path, domain, utility_model, conflicts)


def _domain_of(instance) -> str:
    if isinstance(instance, GoodsInstance):
        return "goods"
    if isinstance(instance, PBInstance):
        return "pb"
    if isinstance(instance, ReviewInstance):
        return "review"
    return "table"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(["inf" if isinstance(x, float) and math.isinf(x) else x for x in r])


def finite_summary(values) -> tuple[float, float, int]:
    """Mean over finite values, fraction of infinite values, and count."""
    vals = [float(v) for v in values if v is not None]
    if not vals:
        return float("nan"), float("nan"), 0
    fin = [v for v in vals if math.isfinite(v)]
    mean = float(np.mean(fin)) if fin else float("nan")
    return mean, 1.0 - len(fin) / len(vals), len(vals)


def _report_failures(out_dir: Path | None, failures) -> int:
    if not failures:
        return 0
    for f in failures:
        print(f"failed: {f['instance']} [{f.get('rule', '-')}]: {f['error']}", file=sys.stderr)
    if out_dir is not None:
        _write(out_dir / "failures.json", json.dumps(failures, indent=2))
    return 1


# ---------------------------------------------------------------------------
# generate


def _sample_seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def cmd_generate(args) -> int:
    gen = {"uniform": dataio.gen_uniform_multinomial, "dirichlet": dataio.gen_dirichlet_multinomial}[args.model]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.samples):
        inst = gen(args.n, args.m, _sample_seed(args.seed, args.n, args.m, k))
        inst = GoodsInstance(inst.valuations, False, tuple(f"g{g + 1}" for g in range(args.m)))
        _write(out / f"{args.model}_n{args.n}_m{args.m}_s{k:03d}.csv", dataio.serialize_goods_csv(inst))
    return 0


# ---------------------------------------------------------------------------
# solve


def _result_json(res) -> dict:
    return dataio._json_safe({
        "rule": res.rule,
        "status": res.status,
        "runtime": res.runtime,
        "objective": res.objective,
        "utilities": np.asarray(res.utilities).tolist(),
        "outcome": dataio.outcome_to_json(res.outcome),
        "diagnostics": res.diagnostics,
    })


def cmd_solve(args) -> int:
    rules = _rules(args.domain, args.rule)
    inst = load_input(args.input, args.domain, args.utility, args.conflicts)
    if _domain_of(inst) != args.domain:
        raise UsageError(f"--in holds a {_domain_of(inst)} instance, not {args.domain}")
    runner = {"goods": goods_rules, "pb": pb_rules, "review": review_rules}[args.domain]
    results, failures = [], []
    for r in rules:
        try:
            results.append(_result_json(runner(inst, [r])[r]))
        except CapExceededError:
            raise
        except HarmRatioError as exc:
            failures.append({"instance": args.input, "rule": r, "error": str(exc)})
    doc = {"domain": args.domain, "instance": args.input, "results": results, "failures": failures}
    _write(Path(args.out), json.dumps(doc, indent=2))
    return _report_failures(None, failures)


# ---------------------------------------------------------------------------
# audit


def _outcomes_from_file(path: str, n: int):
    """``[(name, outcome)]`` from a solve output, a ``{rule, outcome}`` record, or a bare outcome."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"outcome file {path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise dataio.ParseError(f"invalid JSON in {path}: {exc.msg}", exc.lineno) from None
    if isinstance(data, dict) and "results" in data:
        items = [(r["rule"], r["outcome"]) for r in data["results"]]
    elif isinstance(data, dict) and "outcome" in data:
        items = [(data.get("rule", "outcome"), data["outcome"])]
    elif isinstance(data, list):
        items = [(d.get("rule", f"outcome{k}"), d.get("outcome", d)) for k, d in enumerate(data)]
    else:
        items = [("outcome", data)]
    return [(name, dataio.outcome_from_json(o, n)) for name, o in items]


def cmd_audit(args) -> int:
    inst = load_input(args.input, args.domain, args.utility, args.conflicts)
    crit = _split(args.criteria) or list(C.DEFAULT_CRITERIA)
    bad = [c for c in crit if c not in C.ALL_CRITERIA]
    if bad:
        raise UsageError(f"unknown criteria {bad}; choose from {list(C.ALL_CRITERIA)}")
    fractions = _split(args.min_group_frac, float) or [0.0]
    if any(not 0.0 <= f <= 1.0 for f in fractions):
        raise UsageError("--min-group-frac values must lie in [0, 1]")
    n = getattr(inst, "n", None)
    if args.outcome_label is not None:
        outcomes = [(args.outcome_label, args.outcome_label)]
    else:
        outcomes = _outcomes_from_file(args.outcome, n)
    space = space_for(inst)
    records, failures = [], []
    for name, outcome in outcomes:
        try:
            rep = C.audit(space, outcome, crit, fractions, instance=inst)
        except CapExceededError:
            raise
        except HarmRatioError as exc:
            failures.append({"instance": args.input, "rule": name, "error": str(exc)})
            continue
        records.append(dataio.report_record(args.input, name, rep))
    out = Path(args.out)
    fmt = args.format or ("csv" if out.suffix.lower() == ".csv" else "json")
    _write(out, dataio.emit_report(records, fmt))
    return _report_failures(out.parent, failures)


# ---------------------------------------------------------------------------
# experiment: goods


def _goods_space(inst: GoodsInstance):
    if inst.n ** inst.m <= GOODS_ENUM_CAP:
        return enumerate_allocations(inst, GOODS_ENUM_CAP)
    return integer_goods_space(inst)


def goods_task(task):
    """Run every goods rule on one instance and measure IHR and private envy."""
    iid, V, rules = task
    inst = GoodsInstance(np.asarray(V, dtype=float))
    rows, failures = [], []
    space = None
    for r in rules:
        try:
            res = goods_rules(inst, [r], max_goods=EXPERIMENT_MAX_GOODS)[r]
            if space is None:
                space = _goods_space(inst)
            value, witness = C.ihr(space, res.outcome)
            per = C.private_envy_ratio(inst, res.outcome)
            rows.append({
                "instance": iid, "n": inst.n, "m": inst.m, "rule": r, "ihr": value, "per": per,
                "util": float(np.sum(res.utilities)), "nw": float(res.objective) if r == "Nash" else None,
                "status": res.status, "witness": witness.to_dict() if witness else None,
            })
        except HarmRatioError as exc:
            failures.append({"instance": iid, "rule": r, "error": str(exc)})
    return rows, failures


def _goods_instances(args):
    if args.data:
        files = sorted(p for p in Path(args.data).iterdir() if p.suffix.lower() in (".csv", ".json"))
        if not files:
            raise UsageError(f"no goods instances (.csv/.json) in {args.data}")
        out = []
        for p in files:
            inst = dataio.load_instance(p, "goods")
            if args.normalize:
                inst = normalize_valuations(inst)
            out.append((p.stem, inst.valuations))
        return out
    gen = {"uniform": dataio.gen_uniform_multinomial, "dirichlet": dataio.gen_dirichlet_multinomial}[args.model]
    out = []
    rng = np.random.default_rng(args.seed)
    for n in _split(args.n_list, int):
        for k in range(args.samples):
            m = int(rng.integers(n, args.m_factor * n + 1))
            inst = gen(n, m, _sample_seed(args.seed, n, m, k))
            out.append((f"{args.model}_n{n}_m{m}_s{k:03d}", inst.valuations))
    return out


def experiment_goods(args, out: Path) -> int:
    rules = _rules("goods", args.rules)
    instances = _goods_instances(args)
    results = run_tasks(goods_task, [(iid, V, rules) for iid, V in instances])
    rows = sorted((r for rs, _ in results for r in rs), key=lambda r: (r["instance"], rules.index(r["rule"])))
    failures = [f for _, fs in results for f in fs]
    _write_csv(out / "records.csv", ["instance", "n", "m", "rule", "ihr", "per", "util", "status"],
               [[r[k] for k in ("instance", "n", "m", "rule", "ihr", "per", "util", "status")] for r in rows])
    _write(out / "records.json", json.dumps(dataio._json_safe(rows), indent=2))
    summary = []
    for r in rules:
        mine = [x for x in rows if x["rule"] == r]
        ihr_mean, ihr_inf, count = finite_summary(x["ihr"] for x in mine)
        per_mean, per_inf, _ = finite_summary(x["per"] for x in mine)
        summary.append([r, count, ihr_mean, ihr_inf, per_mean, per_inf])
    _write_csv(out / "summary.csv", ["rule", "instances", "avg_ihr", "ihr_inf_frac", "avg_per", "per_inf_frac"], summary)
    return _report_failures(out, failures)


# ---------------------------------------------------------------------------
# experiment: participatory budgeting


def pb_task(task):
    """All PB rules on one election; GHR curve of each outcome."""
    iid, text, utility, rules, fractions = task
    inst = dataio.parse_pabulib(text, utility)
    rows, failures = [], []
    try:
        space = enumerate_budget_feasible(inst)
    except HarmRatioError as exc:
        return rows, [{"instance": iid, "rule": "-", "error": str(exc)}]
    for r in rules:
        try:
            res = pb_rules(inst, [r])[r]
            curve = C.ghr_curve(space, res.outcome, fractions)
            for f, v, _ in curve:
                rows.append({"instance": iid, "voters": inst.n, "projects": len(inst.projects), "rule": r,
                             "min_frac": f, "ghr": v, "status": res.status})
        except HarmRatioError as exc:
            failures.append({"instance": iid, "rule": r, "error": str(exc)})
    return rows, failures


def _pb_elections(args):
    if args.data:
        files = sorted(Path(args.data).glob("*.pb"))
        if not files:
            raise UsageError(f"no .pb files in {args.data}")
        elections = [(p.stem, dataio.parse_pabulib(p.read_text(encoding="utf-8"))) for p in files]
    else:
        elections = [(Path(nm).stem, dataio.load_bundled_pabulib(nm)) for nm in dataio.bundled_pabulib_names()]
    out = []
    for name, e in elections:
        if len(e.projects) > args.max_projects:
            print(f"skipped {name}: {len(e.projects)} projects exceed --max-projects {args.max_projects}",
                  file=sys.stderr)
            continue
        for k in range(args.subsamples):
            sub = dataio.subsample_voters(e, args.voters, _sample_seed(args.seed, k))
            out.append((f"{name}_v{args.voters}_s{k:02d}", dataio.serialize_pabulib(sub)))
    return out


def experiment_pb(args, out: Path) -> int:
    rules = _rules("pb", args.rules)
    fractions = _split(args.min_group_frac, float) or list(DEFAULT_FRACTIONS)
    tasks = [(iid, text, args.utility, rules, fractions) for iid, text in _pb_elections(args)]
    results = run_tasks(pb_task, tasks)
    rows = sorted((r for rs, _ in results for r in rs),
                  key=lambda r: (r["instance"], rules.index(r["rule"]), r["min_frac"]))
    failures = [f for _, fs in results for f in fs]
    _write_csv(out / "records.csv", ["instance", "voters", "projects", "rule", "min_frac", "ghr", "status"],
               [[r[k] for k in ("instance", "voters", "projects", "rule", "min_frac", "ghr", "status")] for r in rows])
    curves = []
    for r in rules:
        for f in fractions:
            mean, inf, count = finite_summary(x["ghr"] for x in rows if x["rule"] == r and x["min_frac"] == f)
            curves.append([r, f, count, mean, inf])
    _write_csv(out / "curves.csv", ["rule", "min_frac", "instances", "avg_ghr", "ghr_inf_frac"], curves)
    return _report_failures(out, failures)


# ---------------------------------------------------------------------------
# experiment: reviewer assignment


def review_task(task):
    iid, inst_json, rules = task
    inst = dataio.instance_from_json(inst_json)
    rows, failures = [], []
    space = None
    for r in rules:
        try:
            res = review_rules(inst, [r])[r]
            if space is None:
                space = space_for(inst)
            value, _ = C.ihr(space, res.outcome)
            shuffle, _ = C.shuffle_envy_ratio(inst, res.outcome)
            rows.append({"instance": iid, "n": inst.n, "rule": r, "ihr": value, "shuffle_envy": shuffle,
                         "util": float(np.sum(res.utilities)), "min_utility": float(np.min(res.utilities)),
                         "status": res.status})
        except HarmRatioError as exc:
            failures.append({"instance": iid, "rule": r, "error": str(exc)})
    return rows, failures


def _review_instances(args):
    sizes = _split(args.sizes, int)
    out = []
    if args.data:
        sims = sorted(p for p in Path(args.data).glob("*.csv") if not p.stem.endswith(".conflicts"))
        if not sims:
            raise UsageError(f"no similarity CSVs in {args.data}")
        for p in sims:
            S = dataio.parse_matrix_csv(p.read_text(encoding="utf-8"))
            conf_path = p.with_name(p.stem + ".conflicts.csv")
            conflicts = dataio.parse_matrix_csv(conf_path.read_text(encoding="utf-8")) if conf_path.exists() else None
            authors = dataio.infer_authorship(conflicts) if conflicts is not None else None
            for size in sizes:
                for k in range(args.samples):
                    seed = _sample_seed(args.seed, size, k)
                    if authors is not None:
                        inst = dataio.subsample_review_instance(S, authors, size, seed, conflicts)
                    else:
                        inst = dataio.greedy_authorship_sample(S, size, seed)
                    out.append((f"{p.stem}_n{size}_s{k:02d}", dataio.instance_to_json(inst)))
    else:
        for size in sizes:
            for k in range(args.samples):
                inst = dataio.gen_review_instance(size, _sample_seed(args.seed, size, k))
                out.append((f"synthetic_n{size}_s{k:02d}", dataio.instance_to_json(inst)))
    return out


def experiment_review(args, out: Path) -> int:
    rules = _rules("review", args.rules)
    tasks = [(iid, js, rules) for iid, js in _review_instances(args)]
    results = run_tasks(review_task, tasks)
    rows = sorted((r for rs, _ in results for r in rs), key=lambda r: (r["instance"], rules.index(r["rule"])))
    failures = [f for _, fs in results for f in fs]
    cols = ["instance", "n", "rule", "ihr", "shuffle_envy", "util", "min_utility", "status"]
    _write_csv(out / "records.csv", cols, [[r[k] for k in cols] for r in rows])
    summary = []
    for r in rules:
        mine = [x for x in rows if x["rule"] == r]
        ihr_mean, ihr_inf, count = finite_summary(x["ihr"] for x in mine)
        sh_mean, sh_inf, _ = finite_summary(x["shuffle_envy"] for x in mine)
        summary.append([r, count, ihr_mean, ihr_inf, sh_mean, sh_inf])
    _write_csv(out / "summary.csv", ["rule", "instances", "avg_ihr", "ihr_inf_frac", "avg_shuffle_envy",
                                     "shuffle_inf_frac"], summary)
    return _report_failures(out, failures)


PRESETS = {"goods-fig2": experiment_goods, "pb-fig4": experiment_pb, "review-fig3": experiment_review}


def cmd_experiment(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return PRESETS[args.preset](args, out)


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="harmratio", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write random goods instances as CSV")
    g.add_argument("--model", choices=("uniform", "dirichlet"), default="uniform")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--samples", type=int, default=10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    def instance_args(sp):
        sp.add_argument("--in", dest="input", required=True,
                        help="instance file (.pb, .csv, .json) or fixture:example33|fig1:N|thm43:N")
        sp.add_argument("--utility", choices=("approval", "cost"), default="approval",
                        help="PB utility model")
        sp.add_argument("--conflicts", help="review conflict matrix CSV")

    s = sub.add_parser("solve", help="run decision rules on one instance")
    s.add_argument("--domain", choices=("goods", "pb", "review"), required=True)
    s.add_argument("--rule", default="all", help="rule name, comma list, or 'all'")
    instance_args(s)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_solve)

    a = sub.add_parser("audit", help="evaluate fairness criteria of given outcomes")
    instance_args(a)
    a.add_argument("--domain", choices=("goods", "pb", "review"), help="needed for review CSV input")
    grp = a.add_mutually_exclusive_group(required=True)
    grp.add_argument("--outcome", help="outcome JSON (or the output of solve)")
    grp.add_argument("--outcome-label", help="row label of a finite utility table")
    a.add_argument("--criteria", default=",".join(C.DEFAULT_CRITERIA))
    a.add_argument("--min-group-frac", default="0")
    a.add_argument("--format", choices=("json", "csv"))
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_audit)

    e = sub.add_parser("experiment", help="desk-scale experiment pipelines with plot-ready CSV output")
    e.add_argument("--preset", choices=sorted(PRESETS), required=True)
    e.add_argument("--data", help="input directory (generated or bundled data when omitted)")
    e.add_argument("--out", required=True)
    e.add_argument("--rules", default="all")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--samples", type=int, default=10, help="samples per configuration")
    e.add_argument("--model", choices=("uniform", "dirichlet"), default="uniform", help="goods generator")
    e.add_argument("--n-list", default="3,4,5,6,7,8", help="goods agent counts")
    e.add_argument("--m-factor", type=int, default=3, help="goods counts are drawn from [n, m_factor*n]")
    e.add_argument("--normalize", action="store_true", help="rescale goods valuations to a common total")
    e.add_argument("--utility", choices=("approval", "cost"), default="approval")
    e.add_argument("--voters", type=int, default=200, help="voters sampled per PB election")
    e.add_argument("--subsamples", type=int, default=4, help="voter samples per PB election")
    e.add_argument("--max-projects", type=int, default=12)
    e.add_argument("--min-group-frac", default=",".join(f"{f:g}" for f in DEFAULT_FRACTIONS))
    e.add_argument("--sizes", default="6,9", help="review instance sizes")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, dataio.ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
