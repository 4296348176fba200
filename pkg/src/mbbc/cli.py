"""Command-line interface.

Commands: ``run`` (scenario -> JSON-lines trace), ``check`` (trace -> property
report JSON), ``sweep`` (attack grid -> CSV), ``demo`` (paired indistinguishable
histories + adapter dichotomy report), ``replay`` (re-run a scenario and diff
against a stored trace). Exit codes: 0 success / no violation, 1 violation or
failed demonstration or diverging replay, 2 invalid configuration or input,
3 unsupported setting (the message explains the impossibility).

Set ``MBBC_LOG_LEVEL`` to error, info or debug to control logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .adversary import StrategyMisconfigured
from .checker import (
    ALL_PROPERTIES,
    MBBC_PROPERTIES,
    VIOLATED,
    reports_to_json,
    run_property_checks,
)
from .demos import run_demo
from .engine import KIND_CURED, KIND_DELIVER_CALL, Trace, run
from .protocol import VariantTag
from .scenario import InvalidScenario, ScenarioConfig, UnsupportedSetting
from .sweeps import BUNDLED_STRATEGIES, rows_to_csv, run_sweep

logger = logging.getLogger("mbbc.cli")

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INVALID = 2
EXIT_UNSUPPORTED = 3


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except UnsupportedSetting as exc:
        print(f"unsupported setting: {exc.reason}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (InvalidScenario, StrategyMisconfigured) as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mbbc", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario and write its trace")
    p_run.add_argument("--config", required=True, type=Path, help="scenario JSON file")
    p_run.add_argument("--out", "--trace", dest="out", required=True, type=Path,
                       help="output trace path (JSON lines)")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.set_defaults(handler=cmd_run)

    p_check = sub.add_parser("check", help="evaluate properties over a trace")
    p_check.add_argument("--trace", required=True, type=Path, help="trace file from `mbbc run`")
    p_check.add_argument("--properties", default=None,
                         help="comma list from: " + ",".join(p.lower() for p in ALL_PROPERTIES))
    p_check.add_argument("--delta-b", type=int, default=None, help="override the config delta_b")
    p_check.add_argument("--delta-c", type=int, default=None, help="override the config delta_c")
    p_check.add_argument("--out", type=Path, default=None, help="write the JSON report here")
    p_check.set_defaults(handler=cmd_check)

    p_sweep = sub.add_parser("sweep", help="run bundled attacks over an (n, f) grid")
    p_sweep.add_argument("--variant", default="FFA_FULL",
                         choices=[v.value for v in VariantTag])
    p_sweep.add_argument("--n-range", required=True, help="e.g. 4:8 (inclusive)")
    p_sweep.add_argument("--f-range", default="1:1", help="e.g. 1:1 (inclusive)")
    p_sweep.add_argument("--delta-s", type=int, default=1)
    p_sweep.add_argument("--strategies", default=",".join(BUNDLED_STRATEGIES))
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--out", required=True, type=Path, help="output CSV path")
    p_sweep.set_defaults(handler=cmd_sweep)

    p_demo = sub.add_parser("demo", help="replay a paired impossibility construction")
    p_demo.add_argument("--kind", required=True,
                        choices=["THEOREM_3", "THEOREM_4", "SOURCE_FLIP", "WIPE_FLIP"])
    p_demo.add_argument("--params", default=None, help="JSON object of construction parameters")
    p_demo.add_argument("--out", type=Path, default=None, help="write the JSON report here")
    p_demo.add_argument("--trace-out", type=Path, default=None,
                        help="prefix for dumping the two traces (suffix -a.jsonl / -b.jsonl)")
    p_demo.set_defaults(handler=cmd_demo)

    p_replay = sub.add_parser("replay", help="re-run a scenario and diff against a stored trace")
    p_replay.add_argument("--config", type=Path, default=None,
                          help="scenario JSON (defaults to the config embedded in the trace)")
    p_replay.add_argument("--trace", required=True, type=Path)
    p_replay.set_defaults(handler=cmd_replay)

    return parser


def cmd_run(args) -> int:
    config = ScenarioConfig.from_json(args.config.read_text())
    if args.seed is not None:
        config = config.with_overrides(seed=args.seed)
    trace = run(config)
    args.out.write_text(trace.to_jsonl())
    deliveries = sum(1 for ev in trace.events if ev.kind == KIND_DELIVER_CALL)
    cured = sum(1 for ev in trace.events if ev.kind == KIND_CURED)
    print(f"rounds={config.horizon} deliveries={deliveries} cured={cured} "
          f"events={len(trace.events)} trace={args.out}")
    return EXIT_OK


def cmd_check(args) -> int:
    trace = Trace.from_jsonl(args.trace.read_text())
    config = trace.scenario()
    schedule = config.resolved_schedule()
    delta_b = args.delta_b if args.delta_b is not None else config.delta_b
    delta_c = args.delta_c if args.delta_c is not None else config.delta_c
    properties = MBBC_PROPERTIES
    if args.properties:
        wanted = [p.strip().upper() for p in args.properties.split(",") if p.strip()]
        unknown = [p for p in wanted if p not in ALL_PROPERTIES]
        if unknown:
            raise ValueError(f"unknown properties: {', '.join(unknown)}")
        properties = tuple(wanted)
    reports = run_property_checks(trace, schedule, delta_b, delta_c, config.variant, properties)
    text = reports_to_json(reports)
    if args.out is not None:
        args.out.write_text(text + "\n")
    else:
        print(text)
    for report in reports:
        print(f"{report.property}: {report.verdict}", file=sys.stderr)
    return EXIT_VIOLATION if any(r.verdict == VIOLATED for r in reports) else EXIT_OK


def cmd_sweep(args) -> int:
    n_values = _parse_range(args.n_range)
    f_values = _parse_range(args.f_range)
    strategies = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    rows = run_sweep(VariantTag(args.variant), n_values, f_values, delta_s=args.delta_s,
                     strategies=strategies, seed=args.seed)
    args.out.write_text(rows_to_csv(rows))
    violated = sum(1 for r in rows if r["verdict"] == VIOLATED)
    print(f"cells={len(rows)} violated={violated} csv={args.out}")
    return EXIT_OK


def cmd_demo(args) -> int:
    params = json.loads(args.params) if args.params else {}
    result = run_demo(args.kind, params)
    text = result.to_json()
    if args.out is not None:
        args.out.write_text(text + "\n")
    else:
        print(text)
    if args.trace_out is not None:
        base = str(args.trace_out)
        Path(base + "-a.jsonl").write_text(result.trace_first.to_jsonl())
        Path(base + "-b.jsonl").write_text(result.trace_second.to_jsonl())
    status = "holds" if result.holds else "FAILED"
    print(f"demo {args.kind}: projections_identical={result.projections_identical} "
          f"choices={len(result.choices)} demonstration {status}", file=sys.stderr)
    return EXIT_OK if result.holds else EXIT_VIOLATION


def cmd_replay(args) -> int:
    stored = Trace.from_jsonl(args.trace.read_text())
    if args.config is not None:
        config = ScenarioConfig.from_json(args.config.read_text())
    else:
        config = stored.scenario()
    fresh = run(config)
    stored_text = stored.to_jsonl()
    fresh_text = fresh.to_jsonl()
    if stored_text == fresh_text:
        print(f"replay identical: {fresh.sha256()}")
        return EXIT_OK
    print("replay diverged from the stored trace", file=sys.stderr)
    for i, (a, b) in enumerate(zip(stored_text.splitlines(), fresh_text.splitlines())):
        if a != b:
            print(f"first divergence at line {i}:\n  stored: {a}\n  fresh:  {b}", file=sys.stderr)
            break
    return EXIT_VIOLATION


def _parse_range(text: str) -> list[int]:
    sep = ":" if ":" in text else ".."
    if sep in text:
        lo, _, hi = text.partition(sep)
        return list(range(int(lo), int(hi) + 1))
    return [int(text)]


def _setup_logging() -> None:
    level_name = os.environ.get("MBBC_LOG_LEVEL", "error").lower()
    level = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        level_name, logging.ERROR)
    logging.basicConfig(level=level, format="%(name)s %(levelname)s %(message)s")


if __name__ == "__main__":
    sys.exit(main())
