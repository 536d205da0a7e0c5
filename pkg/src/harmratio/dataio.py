"""Reading and writing instances, synthetic generators, and report export."""
from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np

from harmratio.errors import InvalidInstanceError, ParseError
from harmratio.model import (
    MULTINOMIAL_POINTS,
    REVIEW_LOAD,
    REVIEW_SCORE_FLOOR,
    Allocation,
    BudgetSelection,
    FiniteUtilityTable,
    GoodsInstance,
    PBInstance,
    Project,
    ReviewAssignment,
    ReviewInstance,
)

# ---------------------------------------------------------------------------
# Pabulib


_SECTIONS = ("META", "PROJECTS", "VOTES")


def _number(text: str, what: str, line: int) -> float:
    t = text.strip()
    try:
        v = float(t)
    except ValueError:
        raise ParseError(f"{what} must be a number, got {text!r}", line) from None
    if not math.isfinite(v):
        raise ParseError(f"{what} must be finite", line)
    return v


def parse_pabulib(text: str, utility_model: str = "approval", epsilon_floor: float | None = None) -> PBInstance:
    """Parse a Pabulib ``.pb`` file (approval ballots).

    Sections META, PROJECTS and VOTES are semicolon-separated tables whose
    first row is a header. META must give ``budget``; PROJECTS needs
    ``project_id`` and ``cost``; VOTES needs ``voter_id`` and ``vote`` (a
    comma-separated project list). Other columns are kept as metadata.
    Every ballot is read as the set of projects it lists, whatever the
    declared ``vote_type``.
    """
    lines = text.splitlines()
    section = None
    header: list[str] | None = None
    meta: dict[str, str] = {}
    meta_keys: list[str] = []
    projects: list[Project] = []
    votes: list[tuple[str, frozenset, dict]] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip("\r\n").lstrip("﻿")
        if not line.strip():
            continue
        key = line.strip()
        if key.upper() in _SECTIONS and ";" not in key:
            section = key.upper()
            if section in seen:
                raise ParseError(f"section {section} repeated", lineno)
            seen.add(section)
            header = None
            continue
        if section is None:
            raise ParseError("content before the first section header", lineno)
        cells = line.split(";")
        if header is None:
            header = [c.strip() for c in cells]
            if section == "META":
                if header[:2] != ["key", "value"]:
                    raise ParseError("META header must be 'key;value'", lineno)
            elif section == "PROJECTS":
                if "project_id" not in header or "cost" not in header:
                    raise ParseError("PROJECTS header needs project_id and cost", lineno)
            else:
                if "voter_id" not in header or "vote" not in header:
                    raise ParseError("VOTES header needs voter_id and vote", lineno)
            continue
        if len(cells) != len(header):
            if section == "META" and len(cells) > 2:
                cells = [cells[0], ";".join(cells[1:])]
            else:
                raise ParseError(f"expected {len(header)} fields, got {len(cells)}", lineno)
        row = dict(zip(header, cells))
        if section == "META":
            k = cells[0].strip()
            meta[k] = cells[1].strip()
            meta_keys.append(k)
            if k == "budget":
                _number(cells[1], "budget", lineno)
        elif section == "PROJECTS":
            pid = row["project_id"].strip()
            cost = _number(row["cost"], "cost", lineno)
            if cost < 0:
                raise ParseError("cost must be non-negative", lineno)
            extra = {k: v for k, v in row.items() if k not in ("project_id", "cost")}
            if any(p.id == pid for p in projects):
                raise ParseError(f"duplicate project id {pid!r}", lineno)
            projects.append(Project(pid, cost, extra))
        else:
            vid = row["voter_id"].strip()
            ballot = frozenset(x.strip() for x in row["vote"].split(",") if x.strip())
            known = {p.id for p in projects}
            unknown = sorted(ballot - known)
            if unknown:
                raise ParseError(f"vote references unknown projects {unknown}", lineno)
            if not ballot:
                raise ParseError("empty ballot", lineno)
            extra = {k: v for k, v in row.items() if k not in ("voter_id", "vote")}
            votes.append((vid, ballot, extra))
    for s in _SECTIONS:
        if s not in seen:
            raise ParseError(f"missing section {s}")
    if "budget" not in meta:
        raise ParseError("META lacks a budget entry")
    if not votes:
        raise ParseError("VOTES section is empty")
    ordered_meta = {k: meta[k] for k in meta_keys}
    try:
        return PBInstance(
            tuple(projects), float(meta["budget"]), tuple(b for _, b, _ in votes), utility_model, epsilon_floor,
            tuple(v for v, _, _ in votes), ordered_meta, tuple(e for _, _, e in votes),
        )
    except InvalidInstanceError as exc:
        raise ParseError(str(exc)) from exc


def _fmt_number(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def serialize_pabulib(instance: PBInstance) -> str:
    """Canonical Pabulib text; ``parse_pabulib`` inverts it.

    Columns come out as id, then cost or vote, then extra columns in first-seen order.
    """
    meta = dict(instance.meta)
    extra_p: list[str] = []
    for p in instance.projects:
        extra_p += [k for k in p.meta if k not in extra_p]
    vmeta = instance.voter_meta or tuple({} for _ in instance.ballots)
    extra_v: list[str] = []
    for vm in vmeta:
        extra_v += [k for k in vm if k not in extra_v]
    meta.setdefault("vote_type", "approval")
    meta["budget"] = _fmt_number(instance.budget)
    meta["num_projects"] = str(len(instance.projects))
    meta["num_votes"] = str(len(instance.ballots))
    out = ["META", "key;value"]
    out += [f"{k};{v}" for k, v in meta.items()]
    out += ["PROJECTS", ";".join(["project_id", "cost"] + extra_p)]
    for p in instance.projects:
        out.append(";".join([p.id, _fmt_number(p.cost)] + [str(p.meta.get(c, "")) for c in extra_p]))
    out += ["VOTES", ";".join(["voter_id", "vote"] + extra_v)]
    order = {pid: k for k, pid in enumerate(instance.project_ids)}
    for vid, ballot, vm in zip(instance.voter_ids, instance.ballots, vmeta):
        vote = ",".join(sorted(ballot, key=order.__getitem__))
        out.append(";".join([vid, vote] + [str(vm.get(c, "")) for c in extra_v]))
    return "\n".join(out) + "\n"


def bundled_pabulib_names() -> list[str]:
    """Names of the sample elections shipped with the package."""
    root = resources.files("harmratio") / "data" / "pabulib"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".pb"))


def load_bundled_pabulib(name: str, utility_model: str = "approval") -> PBInstance:
    root = resources.files("harmratio") / "data" / "pabulib"
    return parse_pabulib((root / name).read_text(encoding="utf-8"), utility_model)


# ---------------------------------------------------------------------------
# CSV


def _read_rows(text: str) -> list[list[str]]:
    return [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]


def _float_cell(c: str, line: int, col: int) -> float:
    try:
        v = float(c)
    except ValueError:
        raise ParseError(f"column {col}: not a number: {c!r}", line) from None
    if not math.isfinite(v):
        raise ParseError(f"column {col}: value must be finite", line)
    return v


def parse_goods_csv(text: str, divisible: bool = False) -> GoodsInstance:
    """Header row of good labels, then one row of values per agent."""
    rows = _read_rows(text)
    if len(rows) < 2:
        raise ParseError("need a header row and at least one agent row")
    labels = [c.strip() for c in rows[0]]
    values = []
    for k, r in enumerate(rows[1:], start=2):
        if len(r) != len(labels):
            raise ParseError(f"ragged row: expected {len(labels)} values, got {len(r)}", k)
        vals = [_float_cell(c, k, j + 1) for j, c in enumerate(r)]
        if any(v < 0 for v in vals):
            raise ParseError("negative value", k)
        values.append(vals)
    try:
        return GoodsInstance(np.array(values), divisible, tuple(labels))
    except InvalidInstanceError as exc:
        raise ParseError(str(exc)) from exc


def serialize_goods_csv(instance: GoodsInstance) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(instance.good_labels or [f"g{g + 1}" for g in range(instance.m)])
    for row in instance.valuations:
        w.writerow([_fmt_number(v) for v in row])
    return buf.getvalue()


def parse_matrix_csv(text: str) -> np.ndarray:
    """Plain numeric matrix; a non-numeric first row is taken as a header and skipped."""
    rows = _read_rows(text)
    if rows:
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise ParseError("empty matrix")
    width = len(rows[0])
    out = []
    for k, r in enumerate(rows, start=1):
        if len(r) != width:
            raise ParseError(f"ragged row: expected {width} values, got {len(r)}", k)
        out.append([_float_cell(c, k, j + 1) for j, c in enumerate(r)])
    return np.array(out)


def parse_review_csv(similarity_text: str, conflicts_text: str | None = None, load: int = REVIEW_LOAD,
                     score_floor: float = REVIEW_SCORE_FLOOR) -> ReviewInstance:
    """Square similarity matrix (paper rows, reviewer columns) plus optional 0/1 conflict matrix."""
    S = parse_matrix_csv(similarity_text)
    conflicts = frozenset()
    if conflicts_text is not None:
        C = parse_matrix_csv(conflicts_text)
        if C.shape != S.shape:
            raise ParseError("conflict matrix shape differs from the similarity matrix")
        conflicts = frozenset((int(p), int(r)) for p, r in zip(*np.nonzero(C)))
    try:
        return ReviewInstance(S, conflicts, load, score_floor)
    except InvalidInstanceError as exc:
        raise ParseError(str(exc)) from exc


# ---------------------------------------------------------------------------
# outcomes as JSON


def outcome_to_json(outcome) -> dict:
    if isinstance(outcome, Allocation):
        if outcome.is_integral:
            return {"type": "allocation", "owners": [int(o) for o in outcome.owners()]}
        return {"type": "allocation", "shares": np.asarray(outcome.shares).tolist()}
    if isinstance(outcome, BudgetSelection):
        return {"type": "budget_selection", "funded": sorted(outcome.funded)}
    if isinstance(outcome, ReviewAssignment):
        return {"type": "review_assignment", "assigned": [sorted(b) for b in outcome.assigned]}
    if isinstance(outcome, (str, int, np.integer)):
        return {"type": "label", "label": str(outcome)}
    raise TypeError(f"cannot serialize {type(outcome).__name__}")


def outcome_from_json(data: Mapping, n: int | None = None):
    t = data.get("type")
    if t == "allocation":
        if "owners" in data:
            if n is None:
                raise ValueError("agent count needed to rebuild an allocation from owners")
            return Allocation.from_owners(data["owners"], n)
        return Allocation(np.array(data["shares"], dtype=float))
    if t == "budget_selection":
        return BudgetSelection(frozenset(data["funded"]))
    if t == "review_assignment":
        return ReviewAssignment(tuple(frozenset(b) for b in data["assigned"]))
    if t == "label":
        return data["label"]
    raise ParseError(f"unknown outcome type {t!r}")


# ---------------------------------------------------------------------------
# generators


def gen_uniform_multinomial(n: int, m: int, seed: int, points: int = MULTINOMIAL_POINTS) -> GoodsInstance:
    """Each agent splits ``points`` points uniformly at random over the goods."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    rng = np.random.default_rng(seed)
    V = rng.multinomial(points, np.full(m, 1.0 / m), size=n).astype(float)
    return GoodsInstance(V)


def gen_dirichlet_multinomial(n: int, m: int, seed: int, points: int = MULTINOMIAL_POINTS) -> GoodsInstance:
    """Shared market values from a uniform Dirichlet, then one multinomial draw per agent."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    rng = np.random.default_rng(seed)
    market = rng.dirichlet(np.ones(m))
    V = rng.multinomial(points, market, size=n).astype(float)
    return GoodsInstance(V)


def gen_pb_election(n_voters: int, n_projects: int, seed: int, budget_fraction: float = 0.4,
                    approval_rate: float = 0.3, utility_model: str = "approval") -> PBInstance:
    """Random approval election with integer costs; every ballot approves at least one project."""
    rng = np.random.default_rng(seed)
    costs = rng.integers(10, 101, size=n_projects) * 1000
    popularity = rng.beta(2, 5, size=n_projects) * 2 * approval_rate
    A = rng.random((n_voters, n_projects)) < np.clip(popularity, 0.02, 0.95)[None, :]
    for i in np.flatnonzero(~A.any(axis=1)):
        A[i, rng.integers(n_projects)] = True
    ids = [str(j + 1) for j in range(n_projects)]
    projects = tuple(Project(ids[j], float(costs[j])) for j in range(n_projects))
    ballots = tuple(frozenset(ids[j] for j in np.flatnonzero(A[i])) for i in range(n_voters))
    budget = float(np.floor(budget_fraction * costs.sum() / 1000) * 1000)
    return PBInstance(projects, budget, ballots, utility_model, meta={"description": f"synthetic seed {seed}"})


def subsample_voters(instance: PBInstance, k: int, seed: int) -> PBInstance:
    """Keep ``k`` voters drawn without replacement (all if fewer)."""
    if k >= instance.n:
        return instance
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(instance.n, size=k, replace=False))
    vm = instance.voter_meta
    return PBInstance(
        instance.projects, instance.budget, tuple(instance.ballots[i] for i in keep), instance.utility_model,
        None, tuple(instance.voter_ids[i] for i in keep), instance.meta,
        tuple(vm[i] for i in keep) if vm is not None else None,
    )


def gen_review_instance(n: int, seed: int, load: int = REVIEW_LOAD, sparsity: float = 0.3) -> ReviewInstance:
    """Random similarities in [0, 1] with a fraction of zeros (clamped to the floor)."""
    rng = np.random.default_rng(seed)
    S = rng.random((n, n)) ** 2
    S[rng.random((n, n)) < sparsity] = 0.0
    return ReviewInstance(S, frozenset(), load)


# ---------------------------------------------------------------------------
# authorship inference


def infer_authorship(conflicts: np.ndarray) -> dict[int, int]:
    """Paper -> author from a maximum bipartite matching on the conflict matrix (papers x reviewers)."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_bipartite_matching

    C = csr_matrix(np.asarray(conflicts, dtype=bool).astype(np.int8))
    match = maximum_bipartite_matching(C, perm_type="column")
    return {int(p): int(r) for p, r in enumerate(match) if r >= 0}


def subsample_review_instance(similarity: np.ndarray, authors: Mapping[int, int], size: int, seed: int,
                              conflicts: np.ndarray | None = None, load: int = REVIEW_LOAD) -> ReviewInstance:
    """Draw ``size`` papers that have distinct authors; agent k is paper p_k written by a_k.

    ``similarity[p, r]`` is paper p's score for reviewer r; the sub-instance
    scores agent k's paper against agent l as reviewer.
    """
    S = np.asarray(similarity, dtype=float)
    rng = np.random.default_rng(seed)
    papers = [p for p in sorted(authors)]
    rng.shuffle(papers)
    chosen, used = [], set()
    for p in papers:
        a = authors[p]
        if a not in used:
            chosen.append(p)
            used.add(a)
        if len(chosen) == size:
            break
    if len(chosen) < size:
        raise InvalidInstanceError(f"only {len(chosen)} papers with distinct authors available")
    au = [authors[p] for p in chosen]
    sub = S[np.ix_(chosen, au)]
    conf = set()
    if conflicts is not None:
        C = np.asarray(conflicts, dtype=bool)[np.ix_(chosen, au)]
        conf = {(int(k), int(l)) for k, l in zip(*np.nonzero(C))}
    return ReviewInstance(sub, frozenset(conf), load)


def greedy_authorship_sample(similarity: np.ndarray, size: int, seed: int, load: int = REVIEW_LOAD) -> ReviewInstance:
    """Pick random papers; each paper's author is its most similar reviewer not yet in the pool."""
    S = np.asarray(similarity, dtype=float)
    rng = np.random.default_rng(seed)
    order = rng.permutation(S.shape[0])
    papers, pool = [], []
    for p in order:
        cands = [r for r in np.argsort(-S[p], kind="stable") if r not in pool]
        if not cands:
            continue
        papers.append(int(p))
        pool.append(int(cands[0]))
        if len(papers) == size:
            break
    if len(papers) < size:
        raise InvalidInstanceError("not enough papers/reviewers for the requested size")
    return ReviewInstance(S[np.ix_(papers, pool)], frozenset(), load)


# ---------------------------------------------------------------------------
# reports


def _json_safe(x):
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return None
        return x
    if isinstance(x, (np.floating,)):
        return _json_safe(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, np.ndarray):
        return _json_safe(x.tolist())
    return x


def report_record(instance_id: str, rule: str, report, extra: Mapping | None = None) -> dict:
    """One report row: the audit's fields plus instance id, rule, and utilitarian welfare."""
    d = report.to_dict() if hasattr(report, "to_dict") else dict(report)
    rec = {"instance": instance_id, "rule": rule}
    rec.update(d)
    rec["util"] = float(np.sum(d.get("utilities", []))) if d.get("utilities") is not None else None
    if extra:
        rec.update(extra)
    return _json_safe(rec)


def emit_report(records: Iterable[Mapping], fmt: str = "json") -> str:
    """Serialize report records as JSON (infinity as "inf") or as flat CSV."""
    records = [_json_safe(dict(r)) for r in records]
    if fmt == "json":
        return json.dumps(records, indent=2, sort_keys=False)
    if fmt != "csv":
        raise ValueError("fmt must be json or csv")
    scalar_keys: list[str] = []
    fracs: list = []
    for r in records:
        for k, v in r.items():
            if k in ("ghr_curve", "witnesses", "utilities", "notes"):
                continue
            if isinstance(v, (dict, list)):
                continue
            if k not in scalar_keys:
                scalar_keys.append(k)
        for pt in r.get("ghr_curve") or []:
            if pt["min_frac"] not in fracs:
                fracs.append(pt["min_frac"])
    cols = scalar_keys + [f"ghr@{f:g}" for f in fracs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        curve = {pt["min_frac"]: pt["value"] for pt in r.get("ghr_curve") or []}
        w.writerow([r.get(k, "") if r.get(k) is not None else "" for k in scalar_keys]
                   + [curve.get(f, "") for f in fracs])
    return buf.getvalue()


def load_report(text: str) -> list[dict]:
    """Inverse of the JSON form of :func:`emit_report` ("inf" strings back to floats)."""
    def fix(x):
        if x == "inf":
            return float("inf")
        if x == "-inf":
            return float("-inf")
        if isinstance(x, dict):
            return {k: fix(v) for k, v in x.items()}
        if isinstance(x, list):
            return [fix(v) for v in x]
        return x

    return fix(json.loads(text))


# ---------------------------------------------------------------------------
# instance files


def instance_to_json(instance) -> dict:
    """JSON form for goods, review and finite-table instances (PB elections use ``.pb``)."""
    if isinstance(instance, GoodsInstance):
        d = {"type": "goods", "valuations": instance.valuations.tolist(), "divisible": instance.divisible}
        if instance.good_labels:
            d["good_labels"] = list(instance.good_labels)
        return d
    if isinstance(instance, ReviewInstance):
        return {"type": "review", "similarity": instance.similarity.tolist(),
                "conflicts": sorted([list(c) for c in instance.conflicts]),
                "load": instance.load, "score_floor": instance.score_floor}
    if isinstance(instance, FiniteUtilityTable):
        d = {"type": "table", "utilities": instance.utilities.tolist()}
        if instance.labels:
            d["labels"] = list(instance.labels)
        return d
    raise TypeError(f"no JSON form for {type(instance).__name__}")


def instance_from_json(data: Mapping):
    t = data.get("type")
    try:
        if t == "goods":
            labels = data.get("good_labels")
            return GoodsInstance(np.array(data["valuations"], dtype=float), bool(data.get("divisible", False)),
                                 tuple(labels) if labels else None)
        if t == "review":
            return ReviewInstance(np.array(data["similarity"], dtype=float),
                                  frozenset(tuple(c) for c in data.get("conflicts", [])),
                                  int(data.get("load", REVIEW_LOAD)), float(data.get("score_floor", REVIEW_SCORE_FLOOR)))
        if t == "table":
            labels = data.get("labels")
            return FiniteUtilityTable(np.array(data["utilities"], dtype=float), tuple(labels) if labels else None)
    except KeyError as exc:
        raise ParseError(f"missing field {exc.args[0]!r}") from None
    raise ParseError(f"unknown instance type {t!r}")


def load_instance(path, domain: str | None = None, utility_model: str = "approval", conflicts_path=None):
    """Load an instance by extension: ``.pb`` election, ``.json`` instance, ``.csv`` goods or review matrix."""
    from pathlib import Path

    path = Path(path)
    text = path.read_text(encoding="utf-8")
    suffix = path.suffix.lower()
    if suffix == ".pb":
        return parse_pabulib(text, utility_model)
    if suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
        return instance_from_json(data)
    if suffix == ".csv":
        if domain == "review":
            conf = Path(conflicts_path).read_text(encoding="utf-8") if conflicts_path else None
            return parse_review_csv(text, conf)
        return parse_goods_csv(text)
    raise ParseError(f"unrecognised instance file extension {suffix!r}")


def save_instance(instance, path) -> None:
    from pathlib import Path

    path = Path(path)
    if isinstance(instance, PBInstance):
        path.write_text(serialize_pabulib(instance), encoding="utf-8")
    elif isinstance(instance, GoodsInstance) and path.suffix.lower() == ".csv" and not instance.divisible:
        path.write_text(serialize_goods_csv(instance), encoding="utf-8")
    else:
        path.write_text(json.dumps(instance_to_json(instance)), encoding="utf-8")
