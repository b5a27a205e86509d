"""Command-line front end.

Exit codes: 0 success, 1 gate logic failed, 2 configuration or I/O error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np
import yaml
from pydantic import ValidationError

from . import __version__
from .errors import ConfigurationError, NumericalBlowupError
from .gate import build_scenario, run_gate, verify_truth_table
from .sweep import critical_velocity, operational_window, scan_planes, scan_velocity

log = logging.getLogger("solitongate")

EXIT_OK, EXIT_GATE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

OVERRIDES = {
    "u": ("physics", "u"),
    "v": ("physics", "v"),
    "alpha": ("physics", "alpha"),
    "g12": ("physics", "g12"),
    "theta_r": ("physics", "theta_r"),
    "theta_t": ("physics", "theta_t"),
    "controls": ("scenario", "controls"),
    "target": ("scenario", "target"),
    "dt": ("numerics", "dt"),
    "t_final": ("numerics", "t_final"),
    "snapshot_stride": ("numerics", "snapshot_stride"),
    "grid_points": ("grid", "points"),
    "domain_length": ("grid", "length"),
    "workers": ("workers",),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solitongate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML (or JSON) run configuration")
    common.add_argument("--out", type=Path, help="output directory (default: results/<command>)")
    common.add_argument("--workers", type=int, help="worker processes (default: all CPUs)")
    common.add_argument("--dt", type=float)
    common.add_argument("--t-final", type=float)
    common.add_argument("--grid-points", type=int)
    common.add_argument("--domain-length", type=float)
    common.add_argument("--u", type=float, help="soliton amplitude")
    common.add_argument("--v", type=float, help="soliton velocity")
    common.add_argument("--alpha", type=float, help="depth ratio of the first well")
    common.add_argument("--g12", type=float, help="cross-component coupling")
    common.add_argument("--theta-r", type=float, help="reflection threshold")
    common.add_argument("--theta-t", type=float, help="transmission threshold")
    common.add_argument("--deterministic-order", action="store_true",
                        help="log progress in submission order (results are identical either way)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = sub.add_parser("simulate", parents=[common], help="one scenario with space-time output")
    p.add_argument("--controls", help="control bits, e.g. 11")
    p.add_argument("--target", type=int, choices=(0, 1))
    p.add_argument("--snapshot-stride", type=int, help="steps between space-time snapshots")

    sub.add_parser("truth-table", parents=[common], help="all eight Toffoli rows")
    p = sub.add_parser("scan-velocity", parents=[common], help="transport coefficients versus v")
    p.add_argument("--interpolate", action="store_true",
                   help="also report window edges interpolated between samples")
    sub.add_parser("scan-plane", parents=[common], help="operational masks over (v, u)")
    p = sub.add_parser("critical-velocity", parents=[common], help="bisect the T=0.5 crossing")
    p.add_argument("--controls", help="which wells to include, e.g. 01")
    return parser


def _load(args):
    from .config import RunConfig

    data = {}
    if args.config is not None:
        data = yaml.safe_load(Path(args.config).read_text()) or {}
        if not isinstance(data, dict):
            raise ConfigurationError(f"{args.config}: top level must be a mapping")
    for flag, path in OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        if flag == "controls" and args.command == "critical-velocity":
            path = ("critical", "controls")
        node = data
        for key in path[:-1]:
            node = node.setdefault(key, {})
        node[path[-1]] = value
    return RunConfig.model_validate(data)


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _provenance(out: Path, command: str, cfg, numerics, grid):
    resolved = cfg.model_copy(deep=True)
    resolved.numerics.dt = numerics.dt
    resolved.numerics.t_final = numerics.t_final
    resolved.numerics.snapshot_stride = numerics.snapshot_stride
    resolved.grid.points = grid.points
    resolved.grid.length = grid.length
    dump = resolved.model_dump(mode="json")
    (out / "config.yaml").write_text(yaml.safe_dump(dump, sort_keys=True))
    _write_json(out / "metadata.json", {
        "command": command,
        "version": __version__,
        "config": dump,
        "dx": grid.dx,
        "steps": numerics.steps,
    })


def cmd_simulate(cfg, out: Path, args) -> int:
    numerics, grid = cfg.single_run_numerics(), cfg.single_run_grid()
    scenario = build_scenario(cfg.scenario.controls, cfg.scenario.target, cfg.params())
    outcome = run_gate(scenario, numerics, grid, cfg.region.region())
    stride = cfg.output.space_stride
    xs = grid.x[::stride]
    for j in (1, 2):
        rows = []
        for snap in outcome.snapshots or []:
            dens = (snap.density1 if j == 1 else snap.density2)[::stride]
            rows.extend(zip([snap.time] * xs.size, xs.tolist(), dens.tolist()))
        _write_csv(out / f"spacetime_psi{j}.csv", ["t", "x", "density"], rows)
    summary = outcome.summary()
    summary["flipped"] = outcome.flipped
    _write_json(out / "summary.json", summary)
    _provenance(out, "simulate", cfg, numerics, grid)
    log.info("%s -> target %s, quality %.4f, pass=%s", scenario.label, outcome.target_out,
             outcome.quality, outcome.passed)
    print(json.dumps(summary, indent=2))
    return EXIT_OK if outcome.passed else EXIT_GATE


def cmd_truth_table(cfg, out: Path, args) -> int:
    numerics, grid = cfg.single_run_numerics(), cfg.single_run_grid()
    report = verify_truth_table(cfg.params(), numerics, grid, cfg.region.region(), workers=cfg.workers)
    records = report.to_records()
    rows = []
    for r in records:
        comps = r["components"] or [{"R": None, "L": None, "T": None}] * 2
        rows.append([r["target_in"], r["controls"], r["expected_target"], r["target_out"],
                     int(r["passed"]), r["quality"]]
                    + [comps[j][key] for j in (0, 1) for key in ("R", "L", "T")])
    _write_csv(out / "truth_table.csv",
               ["target_in", "controls", "expected_target", "target_out", "passed", "quality",
                "R1", "L1", "T1", "R2", "L2", "T2"], rows)
    _write_json(out / "truth_table.json", {"passed": report.passed, "rows": records})
    _provenance(out, "truth-table", cfg, numerics, grid)
    for r in records:
        print(f"T={r['target_in']} C={r['controls']} -> {r['target_out']} "
              f"(expected {r['expected_target']}) quality={r['quality']:.4f} "
              f"{'PASS' if r['passed'] else 'FAIL'}")
    if any(r["error"] for r in records):
        return EXIT_NUMERIC
    return EXIT_OK if report.passed else EXIT_GATE


def _progress(label, args):
    def report(done, total):
        log.info("%s: %d/%d batches", label, done, total)
    report.ordered = args.deterministic_order
    return report


def cmd_scan_velocity(cfg, out: Path, args) -> int:
    numerics, grid = cfg.sweep_numerics(), cfg.sweep_grid()
    params = cfg.params()
    scan = scan_velocity(params, cfg.sweep.velocity_axis(), numerics, grid, cfg.region.region(),
                         workers=cfg.workers, progress=_progress("scan-velocity", args))
    valid = scan.valid()
    _write_csv(out / "velocity_scan.csv", ["v", "R11", "T10", "T01", "valid"],
               [[v, r, a, b, int(ok)] for v, r, a, b, ok in
                zip(scan.v.tolist(), scan.r11.tolist(), scan.t10.tolist(), scan.t01.tolist(), valid)])
    windows = operational_window(scan, params.theta_r, params.theta_t)
    _write_json(out / "window.json", {
        "u": scan.u, "theta_r": params.theta_r, "theta_t": params.theta_t,
        "windows": [list(w) for w in windows],
        **({"interpolated": [list(w) for w in operational_window(
            scan, params.theta_r, params.theta_t, interpolate=True)]} if args.interpolate else {}),
    })
    _provenance(out, "scan-velocity", cfg, numerics, grid)
    print("operational windows:", ", ".join(f"[{a:.4f}, {b:.4f}]" for a, b in windows) or "none")
    return EXIT_OK if valid.all() else EXIT_NUMERIC


def _tag(value: float) -> str:
    return f"{value:.4f}".rstrip("0").rstrip(".")


def cmd_scan_plane(cfg, out: Path, args) -> int:
    numerics, grid = cfg.sweep_numerics(), cfg.sweep_grid()
    maps = scan_planes(cfg.params(), cfg.sweep.plane_v_axis(), cfg.sweep.u.array(),
                       cfg.sweep.alphas, cfg.sweep.g12s, numerics, grid, cfg.region.region(),
                       workers=cfg.workers, progress=_progress("scan-plane", args))
    summary = []
    for (alpha, g12), rmap in maps.items():
        stem = f"mask_alpha{_tag(alpha)}_g12{_tag(g12)}"
        rows = []
        for i, u in enumerate(rmap.u.tolist()):
            for j, v in enumerate(rmap.v.tolist()):
                rows.append([v, u, int(rmap.mask[i, j]), int(rmap.valid[i, j]),
                             rmap.r11[i, j], rmap.t10[i, j], rmap.t01[i, j]])
        _write_csv(out / f"{stem}.csv", ["v", "u", "pass", "valid", "R11", "T10", "T01"], rows)
        grid_codes = np.where(rmap.valid, rmap.mask.astype(int), -1)
        with (out / f"{stem}_grid.txt").open("w") as fh:
            fh.write(f"# rows: u = {rmap.u.tolist()}\n# cols: v = {rmap.v.tolist()}\n")
            fh.write("# 1 pass, 0 fail, -1 invalid\n")
            for row in grid_codes:
                fh.write(" ".join(str(c) for c in row) + "\n")
        _write_json(out / f"{stem}.json", rmap.metadata())
        summary.append({"alpha": alpha, "g12": g12, "passing_cells": rmap.passing_cells,
                        "area": rmap.area, "file": f"{stem}.csv"})
        print(f"alpha={alpha:g} g12={g12:g}: {rmap.passing_cells} passing cells")
    _write_json(out / "masks.json", summary)
    _provenance(out, "scan-plane", cfg, numerics, grid)
    return EXIT_OK if all(m.valid.all() for m in maps.values()) else EXIT_NUMERIC


def cmd_critical_velocity(cfg, out: Path, args) -> int:
    numerics, grid = cfg.sweep_numerics(), cfg.sweep_grid()
    vc = critical_velocity(cfg.critical_wells(), cfg.physics.u, numerics, grid,
                           tuple(cfg.critical.v_bracket), cfg.critical.tol, cfg.physics.x0,
                           cfg.region.region())
    wells = [asdict(w) for w in cfg.critical_wells().wells]
    _write_json(out / "critical_velocity.json",
                {"u": cfg.physics.u, "wells": wells, "critical_velocity": vc, "tol": cfg.critical.tol})
    _provenance(out, "critical-velocity", cfg, numerics, grid)
    print(f"critical velocity: {vc:.4f}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "truth-table": cmd_truth_table,
    "scan-velocity": cmd_scan_velocity,
    "scan-plane": cmd_scan_plane,
    "critical-velocity": cmd_critical_velocity,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _load(args)
        out = args.out or Path("results") / args.command
        out.mkdir(parents=True, exist_ok=True)
    except ValidationError as exc:
        for err in exc.errors():
            where = ".".join(str(p) for p in err["loc"]) or "config"
            print(f"configuration error: {where}: {err['msg']}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigurationError, OSError, yaml.YAMLError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, out, args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalBlowupError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
