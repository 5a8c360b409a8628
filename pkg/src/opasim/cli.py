"""Command-line scenario runner: ``simulate run | list | describe``.

Exit codes: 0 success, 2 validation error, 3 zero-probability herald,
4 truncation-health failure in ``--strict`` mode.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import yaml

from . import scenario as sc
from .fock import ZeroProbabilityHerald

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ZERO_HERALD = 3
EXIT_TRUNCATION = 4

DIM_ENV = "SIM_DIM_OVERRIDE"


def _dim_override(cli_dim: Optional[int]) -> Optional[int]:
    if cli_dim is not None:
        if cli_dim < 2:
            raise sc.ScenarioError("--dim must be >= 2", None, "<command line>")
        return cli_dim
    env = os.environ.get(DIM_ENV)
    if env is None or env.strip() == "":
        return None
    try:
        v = int(env)
    except ValueError:
        raise sc.ScenarioError(f"{DIM_ENV} must be an integer, got {env!r}", None, "<environment>") from None
    if v < 2:
        raise sc.ScenarioError(f"{DIM_ENV} must be >= 2", None, "<environment>")
    return v


def _plain(v):
    if isinstance(v, complex):
        return f"{v.real!r}{v.imag:+}i"
    if isinstance(v, float):
        return float(v)
    return v


def _inputs(point: dict) -> dict:
    out = {}
    for k in [k for k in sc.POINT_SCHEMA if k in point]:
        v = point[k]
        if k == "detector":
            out["detector"] = dict(v)
        else:
            out[k] = _plain(v)
    return out


def _csv_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, complex):
        return _plain(v)
    return str(v)


def _run_one(args):
    point, grid = args
    return sc.execute_point(point, grid)


def _write_outputs(out: Path, scen: sc.Scenario, points: list, results: list, override: Optional[int]):
    out.mkdir(parents=True, exist_ok=True)
    summary = {
        "scenario": scen.name,
        "description": scen.description,
        "dim_override": override,
        "points": [
            {"label": p["label"], "inputs": _inputs(p), "results": {k: _plain(v) for k, v in r["row"].items()}}
            for p, r in zip(points, results)
        ],
    }
    with open(out / "summary.yaml", "w") as fh:
        yaml.safe_dump(summary, fh, sort_keys=False, default_flow_style=False, allow_unicode=True)

    in_cols = [c for c in sc.INPUT_COLUMNS if any(c in p or c in p.get("detector", {}) for p in points)]
    res_cols: list = []
    for r in results:
        for k in r["row"]:
            if k not in res_cols:
                res_cols.append(k)
    header = in_cols + [c if c not in in_cols else f"result_{c}" for c in res_cols]
    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for p, r in zip(points, results):
            det = p.get("detector", {})
            row = [_csv_value(p.get(c, det.get(c, ""))) for c in in_cols]
            row += [_csv_value(r["row"].get(c, "")) for c in res_cols]
            w.writerow(row)

    if scen.wigner_grid is not None:
        xs = sc._axis(scen.wigner_grid["x"])
        ps = sc._axis(scen.wigner_grid["p"])
        for p, r in zip(points, results):
            W = r["wigner"]
            if W is None:
                continue
            with open(out / f"wigner_{p['label']}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["x", "p", "W"])
                for j, pv in enumerate(ps):
                    for i, xv in enumerate(xs):
                        w.writerow([repr(float(xv)), repr(float(pv)), repr(float(W[j, i]))])


def cmd_run(args) -> int:
    try:
        override = _dim_override(args.dim)
        scen = sc.load(args.scenario)
    except sc.ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    if args.workers is not None and args.workers < 1:
        print("error: <command line>: --workers must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    points = scen.resolved(override)
    workers = args.workers or os.cpu_count() or 1
    jobs = [(p, scen.wigner_grid) for p in points]
    try:
        if workers == 1 or len(jobs) == 1:
            results = [_run_one(j) for j in jobs]
        else:
            with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
                results = list(ex.map(_run_one, jobs))
    except ZeroProbabilityHerald as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ZERO_HERALD
    _write_outputs(Path(args.out), scen, points, results, override)
    unhealthy = [p["label"] for p, r in zip(points, results) if not r["healthy"]]
    if unhealthy:
        msg = "truncation health check failed for: " + ", ".join(unhealthy)
        if args.strict:
            print(f"error: {msg}", file=sys.stderr)
            return EXIT_TRUNCATION
        print(f"warning: {msg}", file=sys.stderr)
    print(f"{scen.name}: {len(points)} point(s) written to {args.out}")
    return EXIT_OK


def cmd_list(args) -> int:
    for name in sc.bundled_names():
        print(name)
    return EXIT_OK


def cmd_describe(args) -> int:
    matches = sc.find_bundled(args.name)
    if not matches and Path(args.name).is_file():
        matches = [args.name]
    if not matches:
        print(f"error: unknown scenario {args.name!r}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        override = _dim_override(None)
        docs = []
        for m in matches:
            s = sc.load(m)
            docs.append(
                {
                    "name": s.name,
                    "description": s.description,
                    "dim": override or s.dim,
                    "budget_seconds": s.budget_seconds,
                    "wigner": s.wigner_grid,
                    "points": [_inputs(p) for p in s.resolved(override)],
                }
            )
    except sc.ScenarioError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    yaml.safe_dump_all(docs, sys.stdout, sort_keys=False, default_flow_style=False, allow_unicode=True)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="simulate", description="Heralded non-Gaussian state scenarios.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file or bundled scenario")
    r.add_argument("scenario", help="path to a scenario YAML file or a bundled scenario name")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--strict", action="store_true", help="fail (exit 4) on truncation-health problems")
    r.add_argument("--workers", type=int, default=None, help="worker processes (default: logical cores)")
    r.add_argument("--dim", type=int, default=None, help=f"Fock dimension override (beats ${DIM_ENV})")
    r.set_defaults(func=cmd_run)
    ls = sub.add_parser("list", help="list bundled scenarios")
    ls.set_defaults(func=cmd_list)
    d = sub.add_parser("describe", help="print the resolved configuration of a bundled scenario")
    d.add_argument("name")
    d.set_defaults(func=cmd_describe)
    return ap


def main(argv: Optional[list] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_VALIDATION if e.code not in (0, None) else EXIT_OK
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
