"""Command line entry point: ``enaqt run|preset|list-presets``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .experiments import Scenario, ScenarioError, emit_csv, emit_distance_csv, emit_svg, merge_results, run_scenario
from .presets import PRESETS, preset_scenarios


def _with_tol(scenarios: list[Scenario], tol: float | None) -> list[Scenario]:
    if tol is None:
        return scenarios
    return [replace(s, integrator=replace(s.integrator, rel_tol=tol)) for s in scenarios]


def _write(result, scenarios, out: Path, stem: str, x_axis: str, y_axis: str) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = [emit_csv(result, out / f"{stem}.csv")]
    try:
        written.append(emit_svg(result, x_axis, y_axis, out / f"{stem}.svg"))
    except ValueError as exc:
        print(f"warning: no plot for {stem}: {exc}", file=sys.stderr)
    dist = emit_distance_csv(result, out / f"{stem}_trace_distance.csv")
    if dist is not None:
        written.append(dist)
    meta = dict(result.metadata)
    meta["resolved_scenarios"] = [s.to_dict() for s in scenarios]
    meta_path = out / f"{stem}.metadata.json"
    meta_path.write_text(json.dumps(meta, indent=2, default=str) + "\n")
    written.append(meta_path)
    return written


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="enaqt", description="Transport on open qubit networks.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=1, help="worker processes for the sweep")
    common.add_argument("--tol", type=float, default=None, help="relative integrator tolerance")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common], help="run a scenario JSON file")
    p_run.add_argument("scenario", type=Path)
    p_run.add_argument("--out", type=Path, required=True)
    p_run.add_argument("--x-axis", default=None)
    p_run.add_argument("--y-axis", default="sep")

    p_pre = sub.add_parser("preset", parents=[common], help="run a built-in preset")
    p_pre.add_argument("name", choices=list(PRESETS))
    p_pre.add_argument("--out", type=Path, required=True)

    sub.add_parser("list-presets", help="list built-in presets")
    args = parser.parse_args(argv)

    if args.command == "list-presets":
        for p in PRESETS.values():
            print(f"{p.name:12s} {p.summary}")
        return 0
    if args.threads < 1:
        parser.error("--threads must be at least 1")

    try:
        if args.command == "run":
            doc = json.loads(args.scenario.read_text())
            docs = doc if isinstance(doc, list) else [doc]
            scenarios = _with_tol([Scenario.from_dict(d) for d in docs], args.tol)
            x_axis = args.x_axis or ("t" if any("t" in s.sweep for s in scenarios) else "D")
            stem, y_axis = args.scenario.stem, args.y_axis
        else:
            preset = PRESETS[args.name]
            scenarios = _with_tol(preset_scenarios(args.name), args.tol)
            stem, x_axis, y_axis = preset.name, preset.x_axis, preset.y_axis
        result = merge_results([run_scenario(s, args.threads) for s in scenarios])
    except (ScenarioError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in _write(result, scenarios, args.out, stem, x_axis, y_axis):
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
