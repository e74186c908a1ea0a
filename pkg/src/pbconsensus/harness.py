"""Parameter sweeps, robustness studies and rule comparisons.

A sweep is the Cartesian product of agent counts, in-degrees and bundle
counts for every loaded district, repeated ``repetitions`` times.  Each
cell draws its seeds from the master seed and its coordinates only, so
any single cell can be rerun in isolation and sweep order never matters.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import statistics
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .agents import LearningConfig, SimulationResult, run_simulation
from .bundles import Bundle, enumerate_valid_bundles, sample_action_space
from .errors import PBError
from .metrics import compromise_cost, metrics_report, unfairness
from .model import DistrictHistory, ElectionInstance, sorted_ids
from .pabulib import history_from_instances, load_pb_dir, read_pb_file
from .rules import RULES, RuleOutcome, overlap, run_rule
from .seeding import derive_seed
from .synthetic import make_history


@dataclass(frozen=True)
class ExperimentConfig:
    pb_paths: tuple[str, ...] = ()
    district: str | None = None
    synthetic_seed: int | None = None
    synthetic_projects: int = 8
    agent_counts: tuple[int, ...] = (50,)
    in_degrees: tuple[int, ...] = (2,)
    bundle_counts: tuple[int, ...] = (5,)
    learning: LearningConfig = LearningConfig()
    repetitions: int = 1
    master_seed: int = 0
    workers: int = 1
    out: str | None = None
    format: str = "jsonl"
    record_timing: bool = False
    confirmation_window: int = 5

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if not (self.agent_counts and self.in_degrees and self.bundle_counts):
            raise ValueError("every swept parameter needs at least one value")
        if any(n < 2 for n in self.agent_counts):
            raise ValueError("agent counts must be at least 2")
        if any(d < 1 for d in self.in_degrees) or any(k < 1 for k in self.bundle_counts):
            raise ValueError("in-degrees and bundle counts must be positive")
        if self.format not in ("jsonl", "csv"):
            raise ValueError("format must be jsonl or csv")
        if self.workers < 1 or self.confirmation_window < 1:
            raise ValueError("workers and confirmation_window must be positive")


@dataclass(frozen=True)
class Cell:
    district: str
    agents: int
    in_degree: int
    bundles: int


@dataclass
class RunRecord:
    district: str
    year: int
    agents: int
    in_degree: int
    bundles: int
    repetition: int
    seed: int
    space_seed: int
    valid_bundles: int | None = None
    converged: bool = False
    iterations: int | None = None
    consensus: str | None = None
    consensus_size: int | None = None
    consensus_cost: int | None = None
    compromise_cost: float | None = None
    unfairness: float | None = None
    popularity: float | None = None
    budget_utilization: float | None = None
    overlap_greedy: float | None = None
    overlap_phragmen: float | None = None
    overlap_equal_shares: float | None = None
    size_greedy: int | None = None
    size_phragmen: int | None = None
    size_equal_shares: int | None = None
    compromise_greedy: float | None = None
    compromise_phragmen: float | None = None
    compromise_equal_shares: float | None = None
    unfairness_greedy: float | None = None
    unfairness_phragmen: float | None = None
    unfairness_equal_shares: float | None = None
    error: str | None = None
    duration_s: float | None = None

    @property
    def key(self) -> tuple:
        return (self.district, self.agents, self.in_degree, self.bundles, self.repetition)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> RunRecord:
        return cls(**{f.name: d.get(f.name) for f in fields(cls)})


COLUMNS = tuple(f.name for f in fields(RunRecord))


# ---------------------------------------------------------------- data


def load_histories(config: ExperimentConfig) -> dict[str, DistrictHistory]:
    """Histories from ``pb_paths`` (files or directories), or one synthetic district."""
    if config.synthetic_seed is not None and not config.pb_paths:
        history = make_history(seed=config.synthetic_seed, n_projects=config.synthetic_projects)
        return {history.district: history}
    groups: dict[str, list[ElectionInstance]] = {}
    for raw in config.pb_paths:
        path = Path(raw)
        if path.is_dir():
            for name, hist in load_pb_dir(path, config.district).items():
                groups.setdefault(name, []).extend(hist.instances)
        else:
            inst = read_pb_file(path)
            if config.district is None or inst.district.lower() == config.district.lower():
                groups.setdefault(inst.district, []).append(inst)
    return {name: history_from_instances(insts) for name, insts in sorted(groups.items())}


_BUNDLE_CACHE: dict[tuple, list[Bundle]] = {}
_RULE_CACHE: dict[tuple, dict[str, RuleOutcome]] = {}


def _instance_key(instance: ElectionInstance) -> tuple:
    return (instance.district, instance.year, instance.budget, instance.projects)


def valid_bundles(instance: ElectionInstance) -> list[Bundle]:
    key = _instance_key(instance)
    if key not in _BUNDLE_CACHE:
        _BUNDLE_CACHE[key] = enumerate_valid_bundles(instance.projects, instance.budget)
    return _BUNDLE_CACHE[key]


def rule_outcomes(instance: ElectionInstance) -> dict[str, RuleOutcome]:
    key = _instance_key(instance)
    if key not in _RULE_CACHE:
        _RULE_CACHE[key] = {rule: run_rule(rule, instance) for rule in RULES}
    return _RULE_CACHE[key]


# ---------------------------------------------------------------- cells


def sim_seed(master_seed: int, cell: Cell, repetition: int) -> int:
    return derive_seed(
        master_seed, "sim", cell.district, cell.agents, cell.in_degree, cell.bundles, repetition
    )


def space_seed(master_seed: int, district: str, bundles: int, repetition: int) -> int:
    # Independent of agents and in-degree, so those sweeps share action spaces.
    return derive_seed(master_seed, "space", district, bundles, repetition)


def compare_with_rules(
    instance: ElectionInstance, consensus: Bundle, outcomes: dict[str, RuleOutcome] | None = None
) -> dict[str, dict]:
    """Winners, size and Jaccard overlap with the consensus for every baseline rule."""
    outcomes = outcomes or rule_outcomes(instance)
    return {
        rule: {
            "winners": list(sorted_ids(out.winners)),
            "size": len(out.winners),
            "overlap": overlap(consensus.project_ids, out.winners),
        }
        for rule, out in outcomes.items()
    }


def summarize(
    record: RunRecord, result: SimulationResult, instance: ElectionInstance
) -> RunRecord:
    record.converged = result.converged
    record.iterations = result.iterations
    if result.consensus_bundle is None:
        return record
    b = result.consensus_bundle
    outcomes = rule_outcomes(instance)
    comparison = compare_with_rules(instance, b, outcomes)
    report = metrics_report(
        result.agents, b, instance, {r: c["overlap"] for r, c in comparison.items()}
    )
    record.consensus = ",".join(b.ids)
    record.consensus_size = len(b)
    record.consensus_cost = b.total_cost
    record.compromise_cost = report.compromise_cost
    record.unfairness = report.unfairness
    record.popularity = report.popularity
    record.budget_utilization = report.budget_utilization
    for rule, out in outcomes.items():
        setattr(record, f"overlap_{rule}", comparison[rule]["overlap"])
        setattr(record, f"size_{rule}", comparison[rule]["size"])
        if out.winners:
            winners = Bundle(out.winners, out.total_cost)
            mean, per_agent = compromise_cost(result.agents, winners)
            setattr(record, f"compromise_{rule}", mean)
            setattr(record, f"unfairness_{rule}", unfairness(per_agent))
    return record


def run_cell(
    history: DistrictHistory,
    cell: Cell,
    repetition: int,
    config: ExperimentConfig,
    space_repetition: int | None = None,
) -> RunRecord:
    """One simulation of one grid cell; failures are returned as data."""
    started = time.perf_counter()
    instance = history.latest
    rep_for_space = repetition if space_repetition is None else space_repetition
    record = RunRecord(
        district=cell.district,
        year=instance.year,
        agents=cell.agents,
        in_degree=cell.in_degree,
        bundles=cell.bundles,
        repetition=repetition,
        seed=sim_seed(config.master_seed, cell, repetition),
        space_seed=space_seed(config.master_seed, cell.district, cell.bundles, rep_for_space),
    )
    try:
        pool = valid_bundles(instance)
        record.valid_bundles = len(pool)
        space = sample_action_space(pool, cell.bundles, record.space_seed)
        cfg = LearningConfig(**{**asdict(config.learning), "seed": record.seed})
        result = run_simulation(
            instance, history, space, cfg, n_agents=cell.agents, in_degree=cell.in_degree
        )
        summarize(record, result, instance)
    except (PBError, ValueError) as exc:
        record.error = f"{type(exc).__name__}: {exc}"
    if config.record_timing:
        record.duration_s = time.perf_counter() - started
    return record


def grid(config: ExperimentConfig, districts: Iterable[str]) -> list[tuple[Cell, int]]:
    return [
        (Cell(d, n, k_in, k), rep)
        for d in districts
        for n, k_in, k in itertools.product(
            config.agent_counts, config.in_degrees, config.bundle_counts
        )
        for rep in range(config.repetitions)
    ]


def _run_task(args) -> RunRecord:
    history, cell, rep, config = args
    return run_cell(history, cell, rep, config)


def run_sweep(
    config: ExperimentConfig,
    sink: Callable[[RunRecord], None] | None = None,
    histories: dict[str, DistrictHistory] | None = None,
) -> list[RunRecord]:
    """Run the whole grid, handing each record to ``sink`` as soon as it is ready.

    With several workers, cells run in parallel but records are still
    delivered in grid order.
    """
    histories = histories if histories is not None else load_histories(config)
    if not histories:
        raise ValueError("no district data loaded")
    tasks = [(histories[c.district], c, rep, config) for c, rep in grid(config, histories)]
    records = []

    def emit(rec: RunRecord):
        records.append(rec)
        if sink is not None:
            sink(rec)

    if config.workers == 1:
        for task in tasks:
            emit(_run_task(task))
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for rec in pool.map(_run_task, tasks, chunksize=1):
                emit(rec)
    return records


# ---------------------------------------------------------------- robustness


def modal_outcome(outcomes: Sequence) -> object:
    """Most frequent outcome; among equally frequent ones the earliest seen wins."""
    counts = Counter(outcomes)
    top = max(counts.values())
    for o in outcomes:
        if counts[o] == top:
            return o
    raise ValueError("no outcomes")


def repetitions_to_stability(outcomes: Sequence, window: int = 5) -> tuple[int, bool]:
    """Smallest ``R`` whose modal outcome survives the next ``window`` runs.

    Returns ``(R, unstable)``; without such an ``R`` the run count is returned
    with ``unstable=True``.
    """
    for r in range(1, len(outcomes) - window + 1):
        mode = modal_outcome(outcomes[:r])
        if all(modal_outcome(outcomes[: r + j]) == mode for j in range(1, window + 1)):
            return r, False
    return len(outcomes), True


@dataclass
class RobustnessResult:
    cell: Cell
    repetitions_to_stability: int
    unstable: bool
    outcomes: list[str | None] = field(default_factory=list)
    iterations: list[int | None] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            **asdict(self.cell),
            "repetitions_to_stability": self.repetitions_to_stability,
            "unstable": self.unstable,
            "outcomes": self.outcomes,
            "iterations": self.iterations,
        }


def robustness_study(
    config: ExperimentConfig, cell: Cell, history: DistrictHistory | None = None
) -> RobustnessResult:
    """Repeat one cell with fresh simulation seeds on a fixed action space."""
    if history is None:
        history = load_histories(config)[cell.district]
    records = [
        run_cell(history, cell, rep, config, space_repetition=0)
        for rep in range(config.repetitions)
    ]
    outcomes = [r.consensus for r in records]
    reps, unstable = repetitions_to_stability(outcomes, config.confirmation_window)
    return RobustnessResult(cell, reps, unstable, outcomes, [r.iterations for r in records])


# ---------------------------------------------------------------- reports


def record_line(record: RunRecord) -> str:
    return json.dumps(record.to_dict(), sort_keys=True, separators=(",", ":"))


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_header() -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(COLUMNS)
    return buf.getvalue()


def csv_row(record: RunRecord) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(
        [_csv_value(getattr(record, c)) for c in COLUMNS]
    )
    return buf.getvalue()


def read_records(path: str | Path) -> list[RunRecord]:
    path = Path(path)
    if path.suffix == ".csv":
        out = []
        with path.open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                out.append(RunRecord.from_dict(_parse_csv_row(row)))
        return out
    with path.open(encoding="utf-8") as fh:
        return [RunRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def _parse_csv_row(row: dict[str, str]) -> dict:
    types = {f.name: f.type for f in fields(RunRecord)}
    out = {}
    for name, raw in row.items():
        t = str(types[name])
        if raw == "":
            out[name] = None
        elif t.startswith("bool"):
            out[name] = raw == "True"
        elif t.startswith("int"):
            out[name] = int(raw)
        elif t.startswith("float"):
            out[name] = float(raw)
        else:
            out[name] = raw
    return out


class RecordWriter:
    """Appends records to ``path`` one at a time, flushing after each."""

    def __init__(self, path: str | Path, fmt: str):
        self.path = Path(path)
        self.fmt = fmt
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            self._fh = self.path.open("w", encoding="utf-8", newline="")
        except OSError as exc:
            raise OSError(f"cannot write {self.path}: {exc}") from exc
        if fmt == "csv":
            self._fh.write(csv_header())

    def __call__(self, record: RunRecord):
        self._fh.write(csv_row(record) if self.fmt == "csv" else record_line(record) + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def aggregate(
    records: Sequence[RunRecord], keys: Sequence[str], values: Sequence[str] = ("iterations",)
) -> list[dict]:
    """Mean and sample standard deviation of ``values`` grouped by ``keys``.

    Errored records are skipped; missing values are ignored per column.
    """
    groups: dict[tuple, list[RunRecord]] = {}
    for r in records:
        if r.error is None:
            groups.setdefault(tuple(getattr(r, k) for k in keys), []).append(r)
    rows = []
    for group_key in sorted(groups, key=lambda g: tuple((x is None, str(x) if x is None else x) for x in g)):
        group = groups[group_key]
        row = dict(zip(keys, group_key))
        row["runs"] = len(group)
        row["converged"] = sum(r.converged for r in group)
        for v in values:
            xs = [getattr(r, v) for r in group if getattr(r, v) is not None]
            row[f"{v}_mean"] = statistics.fmean(xs) if xs else None
            row[f"{v}_std"] = statistics.stdev(xs) if len(xs) > 1 else (0.0 if xs else None)
        rows.append(row)
    return rows


METRIC_COLUMNS = ("compromise_cost", "unfairness", "popularity", "budget_utilization")
TABLES = {
    "iterations_by_in_degree_bundles": (("district", "in_degree", "bundles"), ("iterations",)),
    "iterations_by_agents": (("district", "agents"), ("iterations",)),
    "iterations_by_bundles": (("district", "bundles"), ("iterations",)),
    "iterations_by_in_degree": (("district", "in_degree"), ("iterations",)),
    "metrics_by_in_degree_bundles": (("district", "in_degree", "bundles"), METRIC_COLUMNS),
    "rules_by_district": (
        ("district",),
        (
            "compromise_cost",
            "unfairness",
            "overlap_equal_shares",
            "overlap_phragmen",
            "overlap_greedy",
            "consensus_size",
            "size_equal_shares",
            "size_phragmen",
            "size_greedy",
            "compromise_equal_shares",
            "compromise_phragmen",
            "compromise_greedy",
            "unfairness_equal_shares",
            "unfairness_phragmen",
            "unfairness_greedy",
        ),
    ),
}


def _write_table(path: Path, rows: list[dict]):
    with path.open("w", newline="", encoding="utf-8") as fh:
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _csv_value(v) for k, v in row.items()})


def emit_report(records: Sequence[RunRecord], out_dir: str | Path, fmt: str = "csv") -> list[Path]:
    """Write raw records, a column manifest, aggregation tables and the reference comparison."""
    if not records:
        raise ValueError("no records to report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        raw = out / ("records.csv" if fmt == "csv" else "records.jsonl")
        with RecordWriter(raw, fmt) as writer:
            for r in records:
                writer(r)
        written.append(raw)
        manifest = out / "manifest.json"
        manifest.write_text(
            json.dumps({"columns": list(COLUMNS), "tables": {k: list(v[0]) for k, v in TABLES.items()}}, indent=2)
            + "\n",
            encoding="utf-8",
        )
        written.append(manifest)
        for name, (keys, values) in TABLES.items():
            path = out / f"{name}.csv"
            _write_table(path, aggregate(records, keys, values))
            written.append(path)
        path = out / "reference_comparison.csv"
        _write_table(path, reference_comparison(records))
        written.append(path)
    except OSError as exc:
        raise OSError(f"failed writing report to {out}: {exc}") from exc
    return written


def load_reference_values() -> dict:
    path = Path(__file__).with_name("reference_values.json")
    return json.loads(path.read_text(encoding="utf-8"))


def _rel_diff(ours, theirs):
    if ours is None or theirs in (None, 0):
        return None
    return (ours - theirs) / theirs


def reference_comparison(records: Sequence[RunRecord]) -> list[dict]:
    """Measured metrics next to published reference values, for context only.

    Per-district rows compare rule overlaps and bundle sizes; the ``all``
    rows compare compromise and unfairness means across the districts that
    have references.  ``qualitative_ok`` tells whether the consensus
    compromise lies closer to equal shares / Phragmén than to greedy.
    """
    ref = load_reference_values()
    rows = []
    per_district = ref["per_district"]
    tables = {row["district"]: row for row in aggregate(records, ("district",), TABLES["rules_by_district"][1])}
    matched = []
    for district, row in tables.items():
        key = next((k for k in per_district if k.lower() == str(district).lower()), None)
        if key is None:
            continue
        matched.append(row)
        for metric, theirs in per_district[key].items():
            ours = row.get(f"{metric}_mean")
            rows.append(
                {"district": district, "metric": metric, "measured": ours, "reference": theirs,
                 "relative_difference": _rel_diff(ours, theirs)}
            )
    if matched:
        for metric, theirs in ref["across_districts"].items():
            xs = [r.get(f"{metric}_mean") for r in matched if r.get(f"{metric}_mean") is not None]
            ours = statistics.fmean(xs) if xs else None
            rows.append(
                {"district": "all", "metric": metric, "measured": ours, "reference": theirs,
                 "relative_difference": _rel_diff(ours, theirs)}
            )
        means = {
            m: statistics.fmean(xs)
            for m in ("compromise_cost", "compromise_equal_shares", "compromise_phragmen", "compromise_greedy")
            if (xs := [r[f"{m}_mean"] for r in matched if r.get(f"{m}_mean") is not None])
        }
        if len(means) == 4:
            fair = min(abs(means["compromise_cost"] - means["compromise_equal_shares"]),
                       abs(means["compromise_cost"] - means["compromise_phragmen"]))
            rows.append(
                {"district": "all", "metric": "qualitative_ok",
                 "measured": fair < abs(means["compromise_cost"] - means["compromise_greedy"]),
                 "reference": True, "relative_difference": None}
            )
    return rows
