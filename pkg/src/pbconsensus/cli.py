"""Command line entry point.

Every flag can also be set through an environment variable named
``PBC_`` plus the flag name in upper case with dashes turned into
underscores, e.g. ``PBC_IN_DEGREE=2,4,6`` or ``PBC_MAX_ITERS=500``.
Flags given on the command line win over the environment.

Exit codes: 0 success, 1 usage error, 2 data error, 3 sweep finished
with at least one failed cell.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .agents import AGGREGATIONS, LearningConfig
from .bundles import sample_action_space
from .errors import DataError, PBError
from .harness import (
    Cell,
    ExperimentConfig,
    RecordWriter,
    csv_header,
    csv_row,
    emit_report,
    load_histories,
    read_records,
    record_line,
    robustness_study,
    rule_outcomes,
    run_sweep,
    valid_bundles,
)
from .pabulib import read_pb_file

ENV_PREFIX = "PBC_"

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PARTIAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def int_list(text: str) -> tuple[int, ...]:
    """``"50,60"`` or an inclusive range ``"50:100:10"`` (step defaults to 1)."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            if len(bits) not in (2, 3) or (len(bits) == 3 and bits[2] <= 0):
                raise argparse.ArgumentTypeError(f"bad range {part!r}")
            start, stop = bits[0], bits[1]
            step = bits[2] if len(bits) == 3 else 1
            out.extend(range(start, stop + 1, step))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return tuple(out)


def _env(name: str, kind=str, default=None):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return default
    try:
        return kind(raw)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f"invalid {ENV_PREFIX}{name.upper().replace('-', '_')}: {raw!r}") from exc


def _flag(p, name, kind, default, help_text, **kw):
    p.add_argument(f"--{name}", type=kind, default=_env(name, kind, default), help=help_text, **kw)


def _data_flags(p):
    _flag(p, "pb-dir", str, None, "directory or .pb file; repeat with commas", metavar="PATH")
    _flag(p, "district", str, None, "restrict to one district")
    _flag(p, "synthetic", int, None, "use a seeded synthetic district instead of files", metavar="SEED")
    _flag(p, "synthetic-projects", int, 8, "projects per synthetic election")


def _grid_flags(p):
    _flag(p, "agents", int_list, (50,), "agent counts, e.g. 50,60 or 50:100:10")
    _flag(p, "in-degree", int_list, (2,), "gossip in-degrees")
    _flag(p, "bundles", int_list, (5,), "sampled action-space sizes")
    _flag(p, "alpha", float, 0.1, "learning rate")
    _flag(p, "delta", float, 0.1, "weight of the communication term")
    _flag(p, "epsilon0", float, 1.0, "initial exploration rate")
    _flag(p, "epsilon-decay", float, 0.1, "exponential exploration decay per round")
    _flag(p, "epsilon-min", float, 0.01, "exploration floor")
    _flag(p, "max-iters", int, 2000, "round cap per run")
    _flag(p, "stability-window", int, 10, "rounds of unanimous agreement that end a run")
    _flag(p, "aggregation", str, "max", "merge step for received messages", choices=AGGREGATIONS)
    _flag(p, "cost-sign", int, 1, "sign of the cost term in project rewards", choices=(1, -1))
    _flag(p, "reps", int, 1, "repetitions per cell")
    _flag(p, "seed", int, 0, "master seed")
    _flag(p, "workers", int, 1, "parallel worker processes")
    _flag(p, "out", str, None, "output file (or directory for report)")
    _flag(p, "format", str, "jsonl", "record format", choices=("csv", "jsonl"))
    _flag(p, "window", int, 5, "confirmation window for robustness")
    p.add_argument("--timing", action="store_true", default=_env("timing", _truthy, False),
                   help="record wall-clock duration per run (breaks byte-identical output)")


def _truthy(raw: str) -> bool:
    return raw.strip().lower() in ("1", "true", "yes", "on")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pbconsensus", description="Consensus participatory budgeting experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("parse", help="validate .pb files and print a summary")
    p.add_argument("files", nargs="+")

    p = sub.add_parser("bundles", help="enumerate valid bundles and optionally sample some")
    _data_flags(p)
    _flag(p, "bundles", int, None, "sample this many bundles")
    _flag(p, "seed", int, 0, "sampling seed")
    p.add_argument("--list", action="store_true", help="print the bundles themselves")

    p = sub.add_parser("rules", help="run the baseline rules and print JSON")
    _data_flags(p)

    for name, text in (
        ("simulate", "one run per district (first value of each list)"),
        ("sweep", "run the full grid"),
        ("robustness", "repetitions needed to reach a stable consensus, per cell"),
    ):
        p = sub.add_parser(name, help=text)
        _data_flags(p)
        _grid_flags(p)

    p = sub.add_parser("report", help="aggregate tables from a records file")
    p.add_argument("records")
    _flag(p, "out", str, "report", "output directory")
    _flag(p, "format", str, "csv", "format of the copied raw records", choices=("csv", "jsonl"))
    return parser


def config_from_args(args, single: bool = False) -> ExperimentConfig:
    firsts = (lambda xs: xs[:1]) if single else (lambda xs: xs)
    learning = LearningConfig(
        alpha=args.alpha,
        delta=args.delta,
        epsilon0=args.epsilon0,
        epsilon_decay=args.epsilon_decay,
        epsilon_min=args.epsilon_min,
        max_iterations=args.max_iters,
        stability_window=args.stability_window,
        cost_sign=args.cost_sign,
        aggregation=args.aggregation,
    )
    return ExperimentConfig(
        pb_paths=_paths(args),
        district=args.district,
        synthetic_seed=args.synthetic,
        synthetic_projects=args.synthetic_projects,
        agent_counts=firsts(args.agents),
        in_degrees=firsts(args.in_degree),
        bundle_counts=firsts(args.bundles),
        learning=learning,
        repetitions=1 if single else args.reps,
        master_seed=args.seed,
        workers=args.workers,
        out=args.out,
        format=args.format,
        record_timing=args.timing,
        confirmation_window=args.window,
    )


def _paths(args) -> tuple[str, ...]:
    paths = tuple(p for p in (args.pb_dir or "").split(",") if p)
    if not paths and args.synthetic is None:
        raise UsageError("give --pb-dir or --synthetic")
    return paths


def _histories(args):
    cfg = ExperimentConfig(
        pb_paths=_paths(args),
        district=args.district,
        synthetic_seed=args.synthetic,
        synthetic_projects=args.synthetic_projects,
    )
    histories = load_histories(cfg)
    if not histories:
        raise DataError("no matching district found")
    return histories


def _print_json(obj):
    print(json.dumps(obj, sort_keys=True, indent=2))


def cmd_parse(args) -> int:
    status = EXIT_OK
    for path in args.files:
        try:
            inst = read_pb_file(path)
        except (DataError, OSError, UnicodeDecodeError) as exc:
            print(f"{path}: {exc}", file=sys.stderr)
            status = EXIT_DATA
            continue
        _print_json(
            {
                "file": path,
                "district": inst.district,
                "year": inst.year,
                "budget": inst.budget,
                "projects": len(inst.projects),
                "ballots": len(inst.ballots),
            }
        )
    return status


def cmd_bundles(args) -> int:
    for name, history in _histories(args).items():
        pool = valid_bundles(history.latest)
        out = {"district": name, "year": history.latest.year, "valid_bundles": len(pool)}
        chosen = pool
        if args.bundles is not None:
            space = sample_action_space(pool, args.bundles, args.seed)
            chosen = list(space)
            out["sampled"] = len(space)
        if args.list:
            out["bundles"] = [{"projects": list(b.ids), "cost": b.total_cost} for b in chosen]
        _print_json(out)
    return EXIT_OK


def cmd_rules(args) -> int:
    for name, history in _histories(args).items():
        outcomes = rule_outcomes(history.latest)
        _print_json(
            {
                "district": name,
                "year": history.latest.year,
                "budget": history.latest.budget,
                "rules": {rule: out.to_dict() for rule, out in outcomes.items()},
            }
        )
    return EXIT_OK


def _record_sink(cfg: ExperimentConfig):
    if cfg.out:
        return RecordWriter(cfg.out, cfg.format)

    class _Stdout:
        def __init__(self):
            if cfg.format == "csv":
                sys.stdout.write(csv_header())

        def __call__(self, record):
            sys.stdout.write(csv_row(record) if cfg.format == "csv" else record_line(record) + "\n")
            sys.stdout.flush()

        def close(self):
            pass

    return _Stdout()


def cmd_sweep(args, single: bool = False) -> int:
    cfg = config_from_args(args, single=single)
    histories = _histories(args)
    sink = _record_sink(cfg)
    try:
        records = run_sweep(cfg, sink, histories)
    finally:
        sink.close()
    failed = [r for r in records if r.error is not None]
    for r in failed:
        print(f"cell {r.key} failed: {r.error}", file=sys.stderr)
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_robustness(args) -> int:
    cfg = config_from_args(args)
    histories = _histories(args)
    lines = []
    for name, history in histories.items():
        for n in cfg.agent_counts:
            for d in cfg.in_degrees:
                for k in cfg.bundle_counts:
                    result = robustness_study(cfg, Cell(name, n, d, k), history)
                    lines.append(json.dumps(result.to_dict(), sort_keys=True, separators=(",", ":")))
    text = "".join(line + "\n" for line in lines)
    if cfg.out:
        Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        records = read_records(args.records)
    except (OSError, ValueError, TypeError) as exc:
        raise DataError(f"cannot read records from {args.records}: {exc}") from exc
    for path in emit_report(records, args.out, args.format):
        print(path)
    return EXIT_OK


COMMANDS = {
    "parse": cmd_parse,
    "bundles": cmd_bundles,
    "rules": cmd_rules,
    "simulate": lambda a: cmd_sweep(a, single=True),
    "sweep": cmd_sweep,
    "robustness": cmd_robustness,
    "report": cmd_report,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"pbconsensus: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError, UnicodeDecodeError) as exc:
        print(f"pbconsensus: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (PBError, ValueError) as exc:
        print(f"pbconsensus: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"pbconsensus: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
