"""Command-line interface: synthesis, simulation, comparisons, lint, serve,
and replay over the built-in fixtures or a workspace of JSON documents."""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from pathlib import Path

from . import fixtures
from .core import UnitRef
from .errors import CscpError
from .io import (
    canonical_json,
    open_workspace,
    replay_session,
    run_and_serialize,
    write_atomic,
)
from .metrics import CostCoefficients, relative_metrics, response_time_table
from .simulate import SetUnit
from .synthesis import (
    PanelConstraints,
    choose_panel,
    enumerate_scale,
    lint_autonomy,
    synthesize_address,
    synthesize_hierarchy,
    synthesize_matrix,
)

EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cscp", description=__doc__)
    parser.add_argument("--workspace", help="workspace config path (or $CSCP_WORKSPACE)")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="panel geometry synthesis")
    synth_sub = synth.add_subparsers(dest="problem", required=True)

    matrix = synth_sub.add_parser("matrix", help="minimal-control matrix geometry")
    matrix.add_argument("--units", type=int, required=True)
    matrix.add_argument("--fixed-select", type=int, default=None)
    matrix.add_argument("--single-state", action="store_true")

    hier = synth_sub.add_parser("hierarchy", help="minimal-key selection hierarchy")
    hier.add_argument("--units", type=int, required=True)
    hier.add_argument("--max-stages", type=int, default=None)
    hier.add_argument("--shared-keypad", action="store_true")

    addr = synth_sub.add_parser("address", help="two-stage address plan")
    addr.add_argument("--units", type=int, required=True)
    addr.add_argument("--screen", choices=["3x3", "10x10"], default="3x3")

    scale = synth_sub.add_parser("scale", help="the compression scale")
    scale.add_argument("--units", type=int, required=True)

    choose = synth_sub.add_parser("choose", help="constraint-filtered panel choice")
    choose.add_argument("--units", type=int, required=True)
    choose.add_argument("--max-controls", type=int, default=None)
    choose.add_argument("--max-indicators", type=int, default=None)
    choose.add_argument("--max-task-time", type=float, default=None)
    choose.add_argument("--g-load", action="store_true")

    sim = sub.add_parser("simulate", help="run a scenario and write a session log")
    sim.add_argument("--plant", required=True)
    sim.add_argument("--panel", required=True)
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--out", default=None, help="output .log.json path")

    cm = sub.add_parser("compare-metrics", help="relative metric table")
    cm.add_argument("--units", type=int, default=192)
    cm.add_argument("--panels", nargs="+", default=["conventional", "csf", "csd"])
    cm.add_argument("--baseline", default="csd")
    cm.add_argument("--out", default=None, help="output directory for CSV/JSON")

    ct = sub.add_parser("compare-times", help="response-time table")
    ct.add_argument("--units", type=int, default=100)
    ct.add_argument("--panels", nargs="+", default=["mm100", "csf100", "addr100"])
    ct.add_argument("--out", default=None)

    lint = sub.add_parser("lint", help="autonomy-principle layout lint")
    lint.add_argument("--fixture", default=None, help="built-in lint fixture id")
    lint.add_argument("--layout", default=None, help="layout JSON file")

    serve = sub.add_parser("serve", help="start the panel session server")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8432)

    replay = sub.add_parser("replay", help="re-run a session log and verify bytes")
    replay.add_argument("log", help="saved .log.json path")
    return parser


def _print_scale(entries, stream) -> None:
    for e in entries:
        print(
            f"{e.spec.family.value:<16} k_sig={e.profile.k_sig:<8.3f} "
            f"k_cmd={e.profile.k_cmd:.3f}",
            file=stream,
        )


def _table_csv(header: list[str], rows: list[list]) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except CscpError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN_ERROR


def _dispatch(args: argparse.Namespace) -> int:
    out = sys.stdout
    if args.command == "synth":
        return _do_synth(args, out)
    if args.command == "simulate":
        return _do_simulate(args, out)
    if args.command == "compare-metrics":
        return _do_compare_metrics(args, out)
    if args.command == "compare-times":
        return _do_compare_times(args, out)
    if args.command == "lint":
        return _do_lint(args, out)
    if args.command == "serve":
        from .service import serve

        serve(args.host, args.port)
        return EXIT_OK
    if args.command == "replay":
        return _do_replay(args, out)
    raise AssertionError(f"unhandled command {args.command}")


def _do_synth(args: argparse.Namespace, out) -> int:
    if args.problem == "matrix":
        g = synthesize_matrix(
            args.units, two_state=not args.single_state, fixed_select=args.fixed_select
        )
        print(
            f"s={g.select_count} b={g.command_count} controls={g.total_controls} "
            f"capacity={g.capacity}",
            file=out,
        )
    elif args.problem == "hierarchy":
        plan = synthesize_hierarchy(
            args.units, max_stages=args.max_stages, shared_keypad=args.shared_keypad
        )
        branching = ",".join(str(b) for b in plan.branching)
        print(
            f"branching=[{branching}] stages={plan.stages} keys={plan.total_keys} "
            f"capacity={plan.capacity} cost={plan.cost}",
            file=out,
        )
    elif args.problem == "address":
        plan = synthesize_address(args.units, screen=args.screen)
        print(
            f"screens={plan.screen_count} grid={plan.screen_rows}x{plan.screen_cols} "
            f"keypad={plan.keypad_size} edge_keypads={plan.edge_keypads}",
            file=out,
        )
    elif args.problem == "scale":
        _print_scale(enumerate_scale(args.units), out)
    elif args.problem == "choose":
        constraints = PanelConstraints(
            max_controls=args.max_controls,
            max_indicators=args.max_indicators,
            max_task_time=args.max_task_time,
            g_load_serviceable=args.g_load,
        )
        report = choose_panel(args.units, constraints)
        if report.no_feasible_panel:
            print("no feasible panel:", file=out)
            for r in report.rejected:
                print(f"  {r.spec.family.value}: {'; '.join(r.violations)}", file=out)
            return EXIT_DOMAIN_ERROR
        for rank, r in enumerate(report.feasible, start=1):
            print(
                f"{rank}. {r.spec.family.value:<16} controls={r.total_controls:<5} "
                f"indicators={r.total_indicators:<5} task_time={r.est_task_time:.2f}s",
                file=out,
            )
    return EXIT_OK


def _do_simulate(args: argparse.Namespace, out) -> int:
    ws = open_workspace(args.workspace)
    plant = ws.plant(args.plant)
    spec = ws.panel(args.panel)
    scenario = ws.scenario(args.scenario)
    params = ws.params()
    text = run_and_serialize(spec, plant, scenario, params, args.plant)
    target = args.out or f"{scenario.scenario_id}.{spec.spec_id}.log.json"
    write_atomic(target, text)
    doc = json.loads(text)
    totals = doc["totals"]
    print(
        f"wrote {target}: {len(doc['entries'])} entries "
        f"(K={totals['K']} U={totals['U']} O={totals['O']} L={totals['L']}), "
        f"{doc['total_time']:.1f}s simulated",
        file=out,
    )
    return EXIT_OK


def _do_compare_metrics(args: argparse.Namespace, out) -> int:
    ws = open_workspace(args.workspace)
    specs = [ws.panel(spec_id) for spec_id in args.panels]
    rows = relative_metrics(specs, args.units, args.baseline, CostCoefficients())
    header = ["spec_id", "nprkl", "nprsl", "g", "s_area", "w"]
    table = [
        [r.spec_id, f"{r.nprkl:.6f}", f"{r.nprsl:.6f}", f"{r.g:.6f}", f"{r.s_area:.6f}", f"{r.w:.6f}"]
        for r in rows
    ]
    print(_table_csv(header, table), end="", file=out)
    if args.out:
        out_dir = Path(args.out)
        write_atomic(out_dir / "metrics.csv", _table_csv(header, table))
        doc = {
            "format": "cscp.metrics/1",
            "baseline": args.baseline,
            "n_units": args.units,
            "rows": [
                {
                    "spec_id": r.spec_id,
                    "nprkl": r.nprkl,
                    "nprsl": r.nprsl,
                    "g": r.g,
                    "s_area": r.s_area,
                    "w": r.w,
                }
                for r in rows
            ],
        }
        write_atomic(out_dir / "metrics.json", canonical_json(doc))
        print(f"wrote {out_dir}/metrics.csv and metrics.json", file=out)
    return EXIT_OK


def _standard_tasks(n_units: int) -> list[SetUnit]:
    """Command-issuing task suite over a spread of units."""
    side = max(1, int(round(n_units ** 0.5)))
    tasks = []
    for i in range(min(10, side)):
        tasks.append(SetUnit(UnitRef(i, i % side), True))
    return tasks


def _do_compare_times(args: argparse.Namespace, out) -> int:
    ws = open_workspace(args.workspace)
    specs = [ws.panel(spec_id) for spec_id in args.panels]
    tasks = _standard_tasks(args.units)
    cells = response_time_table(specs, tasks, ws.params(), args.units)
    header = ["spec_id", "task", "seconds", "near_minimum"]
    table = [
        [c.spec_id, c.task_index, f"{c.seconds:.6f}", str(c.near_minimum).lower()]
        for c in cells
    ]
    print(_table_csv(header, table), end="", file=out)
    if args.out:
        out_dir = Path(args.out)
        write_atomic(out_dir / "times.csv", _table_csv(header, table))
        doc = {
            "format": "cscp.times/1",
            "n_units": args.units,
            "cells": [
                {
                    "spec_id": c.spec_id,
                    "task": c.task_index,
                    "seconds": c.seconds,
                    "near_minimum": c.near_minimum,
                }
                for c in cells
            ],
        }
        write_atomic(out_dir / "times.json", canonical_json(doc))
        print(f"wrote {out_dir}/times.csv and times.json", file=out)
    return EXIT_OK


def _do_lint(args: argparse.Namespace, out) -> int:
    if args.layout:
        doc = json.loads(Path(args.layout).read_text(encoding="utf-8"))
        plant = fixtures.get_plant(doc.get("plant", "lint-plant"))
        rows = [
            [UnitRef(int(u[0]), int(u[1])) for u in row] for row in doc.get("rows", [])
        ]
        from .synthesis import FunctionGroup

        functions = [
            FunctionGroup(
                f["function_id"],
                frozenset(UnitRef(int(u[0]), int(u[1])) for u in f["units"]),
                int(f["control_row"]),
            )
            for f in doc.get("functions", [])
        ]
        report = lint_autonomy(plant, rows, functions)
        fixture_id = args.layout
    else:
        fixture_id = args.fixture or "defect-split-1"
        fixture = next(
            (f for f in fixtures.lint_corpus() if f.fixture_id == fixture_id), None
        )
        if fixture is None:
            raise CscpError(f"unknown lint fixture '{fixture_id}'")
        report = lint_autonomy(fixtures.lint_plant(), fixture.rows, fixture.functions)
    if report.clean:
        print(f"{fixture_id}: layout satisfies the autonomy principle", file=out)
        return EXIT_OK
    for v in report.violations:
        print(f"{fixture_id}: {v.kind}: {v.description}", file=out)
    return EXIT_DOMAIN_ERROR


def _do_replay(args: argparse.Namespace, out) -> int:
    ws = open_workspace(args.workspace)
    text = Path(args.log).read_text(encoding="utf-8")
    identical, detail = replay_session(text, ws)
    print(f"{args.log}: {detail}", file=out)
    return EXIT_OK if identical else EXIT_DOMAIN_ERROR


if __name__ == "__main__":
    sys.exit(main())
