"""Command-line entry point.

Subcommands:

* ``run <config.json> [...]``    -- execute scenarios, write series.csv and
  report.json into each scenario's output directory,
* ``verify <config.json> [...]`` -- checks only, no series emission,
* ``refine <config.json> --levels k`` -- grid refinement study,
* ``list-scenarios``             -- bundled scenario catalog.

Exit codes: 0 when every asserted check passes, 2 on a check failure,
1 on an execution error.  ``GEOFLOW_OUT`` overrides the output directory.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, parse_config
from .errors import GeoflowError
from .harness import (Report, ScenarioResult, refinement_study, run_scenario,
                      scenario_names, load_scenario_text)

CSV_HEADER = "t,I,D,U3,U4,kappa,s_bound,lambda1,slack_hamilton,slack_liyau"


def _fmt(x) -> str:
    """17-significant-digit decimal (positional) notation; empty for absent."""
    if x is None:
        return ""
    x = float(x)
    if np.isnan(x):
        return ""
    if x == 0.0:
        x = 0.0  # normalize negative zero
    return np.format_float_positional(x, precision=17, unique=False,
                                      fractional=False)


def emit_outputs(report: Report, result: ScenarioResult, out_dir) -> dict:
    """Write series.csv and report.json; returns the paths."""
    env_dir = os.environ.get("GEOFLOW_OUT")
    base = Path(env_dir) if env_dir else Path(out_dir)
    base.mkdir(parents=True, exist_ok=True)
    series = result.series

    rows = [CSV_HEADER]
    n = series.times.size
    for j in range(n):
        k = series.indices[j]
        cols = [
            _fmt(series.times[j]),
            _fmt(series.I[j]),
            _fmt(series.D[j]),
            _fmt(series.U3[j]) if series.U3 is not None else "",
            _fmt(series.U4[j]) if series.U4 is not None else "",
            _fmt(series.kappa[j]),
            _fmt(series.s_bound[j]),
            _fmt(series.lambda1[j]) if series.lambda1 is not None else "",
            _fmt(result.slack_hamilton[k]) if result.slack_hamilton is not None else "",
            # the Harnack scan starts at the first positive time
            _fmt(result.slack_liyau[k - 1])
            if result.slack_liyau is not None and k >= 1 else "",
        ]
        rows.append(",".join(cols))
    series_path = base / "series.csv"
    series_path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    report_path = base / "report.json"
    report_path.write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    return {"series": series_path, "report": report_path}


def _load_config(path: str) -> ScenarioConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _run_one(path: str, emit: bool) -> int:
    try:
        config = _load_config(path)
        result = run_scenario(config)
        if emit:
            paths = emit_outputs(result.report, result, config.output_dir)
            print(f"{config.scenario_id}: wrote {paths['series']} and {paths['report']}")
        for item in result.report.items:
            slack = "" if item.worst_slack is None else f" worst_slack={item.worst_slack:.3e}"
            tol = "" if item.tolerance is None else f" tol={item.tolerance:.3e}"
            print(f"  [{item.verdict.upper():>12}] {item.name}{slack}{tol}")
        return 2 if result.report.failed else 0
    except GeoflowError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return 1


def _cmd_run(args, emit: bool) -> int:
    paths = list(args.configs)
    if args.jobs > 1 and len(paths) > 1:
        codes = []
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
            for code in pool.map(lambda p: _run_one(p, emit), paths):
                codes.append(code)
        return max(codes)
    code = 0
    for p in paths:
        code = max(code, _run_one(p, emit))
    return code


def _cmd_refine(args) -> int:
    try:
        config = _load_config(args.config)
        study = refinement_study(config, args.levels)
    except GeoflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    env_dir = os.environ.get("GEOFLOW_OUT")
    base = Path(env_dir) if env_dir else Path(config.output_dir)
    base.mkdir(parents=True, exist_ok=True)
    out_path = base / "refinement.json"
    out_path.write_text(json.dumps(study, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    print(f"levels: {study['levels']}")
    for key in ("curvature", "heat", "bochner", "f_residual", "u3"):
        orders = study[key].get("orders")
        print(f"  {key}: orders {orders}")
    print(f"wrote {out_path}")
    return 0


def _cmd_list() -> int:
    for name in scenario_names():
        print(name)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="geoflow",
        description="geometric-flow frequency monotonicity laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run scenarios and emit series/report files")
    p_run.add_argument("configs", nargs="+", help="scenario JSON files")
    p_run.add_argument("--jobs", type=int, default=1,
                       help="run independent scenarios in parallel")

    p_verify = sub.add_parser("verify", help="run checks only, no series emission")
    p_verify.add_argument("configs", nargs="+")
    p_verify.add_argument("--jobs", type=int, default=1)

    p_refine = sub.add_parser("refine", help="grid refinement study")
    p_refine.add_argument("config")
    p_refine.add_argument("--levels", type=int, default=3)

    sub.add_parser("list-scenarios", help="print the bundled scenario names")

    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args, emit=True)
    if args.command == "verify":
        return _cmd_run(args, emit=False)
    if args.command == "refine":
        return _cmd_refine(args)
    return _cmd_list()


if __name__ == "__main__":
    sys.exit(main())
