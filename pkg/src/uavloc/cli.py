"""Command-line front end: one subcommand per analysis, each writing a CSV.

Exit codes: 0 ok, 1 bad config or arguments, 3 output not writable,
4 optimize found no feasible design.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, override, parse_config
from .crlb import localization_coverage
from .energy import power_breakdown
from .experiment import DesignPoint, optimize, sweep

EXIT_CONFIG = 1
EXIT_IO = 3
EXIT_INFEASIBLE = 4

SWEEP_HEADER = ["swept_value", "mean_pos_err_m", "mean_range_err_m", "energy_j", "coverage_m2", "covered_nodes"]
POWER_HEADER = ["v_mps", "induced_w", "parasitic_w", "blade_w", "total_w"]
OPTIMIZE_HEADER = ["h_m", "r_m", "m_waypoints", "t_h_s", "mean_pos_err_m", "energy_j", "feasible"]
COVERAGE_HEADER = ["h_m", "r_c_m", "waypoint_area_m2", "loc_area_m2"]

SWEEP_AXES = {
    "sweep-altitude": ("altitude", "h", (50.0, 2000.0, 50.0)),
    "sweep-radius": ("radius", "r", (50.0, 300.0, 10.0)),
    "sweep-hover": ("hover_time", "th", (5.0, 100.0, 5.0)),
}


def fmt(x) -> str:
    """Locale-independent shortest round-trip formatting."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def frange(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0:
        raise ConfigError("grid step must be > 0")
    if hi < lo:
        raise ConfigError("grid max must be >= grid min")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 10) for i in range(n)]


def _grid(args, prefix: str, default, cfg: RunConfig | None = None) -> list[float]:
    """Flags win over the config ``grid`` (primary axis only), which wins over ``default``."""
    if cfg is not None and cfg.run.grid_bounds() is not None:
        default = cfg.run.grid_bounds()
    lo = getattr(args, f"{prefix}_min")
    hi = getattr(args, f"{prefix}_max")
    st = getattr(args, f"{prefix}_step")
    return frange(default[0] if lo is None else lo, default[1] if hi is None else hi,
                  default[2] if st is None else st)


def _base_point(cfg: RunConfig) -> DesignPoint:
    t = cfg.trajectory
    return DesignPoint(h=t.altitude_h, R=t.radius_r, M=t.n_waypoints, t_h=t.hover_time)


def cmd_power_curve(cfg: RunConfig, args):
    rows = []
    for v in _grid(args, "v", (0.0, 30.0, 0.5), cfg):
        p = power_breakdown(v, cfg.airframe)
        rows.append([v, p.induced, p.parasitic, p.blade, p.total])
    best = min(rows, key=lambda r: r[4])
    summary = f"min power {best[4]:.1f} W at v={best[0]:g} m/s"
    return [("", POWER_HEADER, rows, summary)]


def cmd_coverage(cfg: RunConfig, args):
    rows = []
    for h in _grid(args, "h", (50.0, 2000.0, 50.0), cfg):
        traj = replace(cfg.trajectory, altitude_h=h)
        res = localization_coverage(traj, cfg.coverage, cfg.channel)
        r_c = res.per_waypoint_radius[0]
        rows.append([h, r_c, math.pi * r_c * r_c, res.area])
    best = min(rows, key=lambda r: r[3])
    summary = f"min localization coverage {best[3]:.1f} m2 at h={best[0]:g} m"
    return [("", COVERAGE_HEADER, rows, summary)]


def _series(cfg: RunConfig, args) -> list[tuple[str, int, str]]:
    """(tag, M, link_mode) per curve; the tag is empty for a single curve."""
    ms = args.m_list or cfg.run.waypoint_counts() or [cfg.trajectory.n_waypoints]
    modes = [args.link_mode] if args.link_mode else (cfg.run.link_modes() or [cfg.scenario.link_mode])
    out = []
    for m in ms:
        for mode in modes:
            parts = ([f"M{m}"] if len(ms) > 1 else []) + ([mode] if len(modes) > 1 else [])
            out.append(("_".join(parts), m, mode))
    return out


def cmd_sweep(cfg: RunConfig, args):
    axis, prefix, default = SWEEP_AXES[args.command]
    grid = _grid(args, prefix, default, cfg)
    outputs = []
    for tag, m, mode in _series(cfg, args):
        base = replace(_base_point(cfg), M=m)
        scenario = replace(cfg.scenario, link_mode=mode)
        results = sweep(axis, grid, base, scenario, cfg.channel, cfg.airframe,
                        cfg.coverage, cfg.trajectory.cruise_speed)
        rows = [[r.swept_value, r.mean_error, r.mean_range_error, r.mission_energy, r.coverage_area,
                 r.covered_nodes] for r in results]
        best = min(results, key=lambda r: r.mean_error)
        summary = (f"{tag + ': ' if tag else ''}min error {best.mean_error:.2f} m at {axis}={best.swept_value:g}, "
                   f"energy {best.mission_energy:.0f} J")
        outputs.append((tag, SWEEP_HEADER, rows, summary))
    return outputs


def cmd_evaluate(cfg: RunConfig, args):
    results = sweep("altitude", [cfg.trajectory.altitude_h], _base_point(cfg), cfg.scenario, cfg.channel,
                    cfg.airframe, cfg.coverage, cfg.trajectory.cruise_speed)
    r = results[0]
    rows = [[r.swept_value, r.mean_error, r.mean_range_error, r.mission_energy, r.coverage_area, r.covered_nodes]]
    summary = f"mean error {r.mean_error:.2f} m (+-{r.mean_error_se:.2f}), energy {r.mission_energy:.0f} J"
    return [("", SWEEP_HEADER, rows, summary)]


def cmd_optimize(cfg: RunConfig, args):
    base = _base_point(cfg)
    grids = {
        "h": _grid(args, "h", (50.0, 600.0, 50.0)),
        "R": _grid(args, "r", (50.0, 300.0, 10.0)),
        "M": args.m_list or [base.M],
        "t_h": _grid(args, "th", (base.t_h, base.t_h, 1.0)),
    }
    budget = args.budget if args.budget is not None else cfg.run.energy_budget
    res = optimize(budget, grids, cfg.scenario, cfg.channel, cfg.airframe, cfg.coverage,
                   cfg.trajectory.cruise_speed)
    rows = []
    for row in res.rows:
        err = row.result.mean_error if row.result is not None else math.nan
        rows.append([row.point.h, row.point.R, row.point.M, row.point.t_h, err, row.energy, row.feasible])
    if not res.feasible:
        return [("", OPTIMIZE_HEADER, rows, "infeasible: no grid point meets the energy budget and full coverage")]
    b = res.best
    summary = (f"min error {res.best_result.mean_error:.2f} m at h={b.h:g} R={b.R:g} M={b.M} t_h={b.t_h:g}, "
               f"energy {res.best_result.mission_energy:.0f} J")
    return [("", OPTIMIZE_HEADER, rows, summary)]


COMMANDS = {
    "power-curve": cmd_power_curve,
    "coverage": cmd_coverage,
    "sweep-altitude": cmd_sweep,
    "sweep-radius": cmd_sweep,
    "sweep-hover": cmd_sweep,
    "evaluate": cmd_evaluate,
    "optimize": cmd_optimize,
}


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uavloc", description="UAV-anchor localization trajectory analysis")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="key = value configuration file")
    ap.add_argument("--out", type=Path, help="CSV output path (overrides output_path)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--link-mode", choices=["bernoulli", "conditioned_los", "conditioned_nlos", "averaged"])
    ap.add_argument("--budget", type=float, help="energy budget in J for optimize")
    ap.add_argument("--m-list", type=lambda s: [int(x) for x in s.split(",")], help="comma separated M values: optimize grid, or one CSV per value for sweeps")
    for prefix, label in (("h", "altitude"), ("r", "radius"), ("th", "hover time"), ("v", "airspeed")):
        for end in ("min", "max", "step"):
            ap.add_argument(f"--{prefix.replace('th', 't-h')}-{end}", dest=f"{prefix}_{end}", type=float,
                            help=f"{label} grid {end}")
    return ap


def series_path(out: Path, tag: str) -> Path:
    return out if not tag else out.with_name(f"{out.stem}_{tag}{out.suffix}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text() if args.config else ""
        cfg = parse_config(text)
        changes = {k: v for k, v in (("seed", args.seed), ("n_trials", args.trials), ("workers", args.workers),
                                     ("link_mode", args.link_mode)) if v is not None}
        if changes:
            cfg = override(cfg, "scenario", **changes)
        if args.command in ("evaluate", "coverage") and args.m_list:
            if len(args.m_list) != 1:
                raise ConfigError(f"--m-list takes a single value for {args.command}")
            cfg = override(cfg, "trajectory", n_waypoints=args.m_list[0])
        if args.command in ("evaluate", "optimize") and cfg.run.grid.strip():
            raise ConfigError(f"grid has no axis to set for {args.command}; use the grid flags")
        outputs = COMMANDS[args.command](cfg, args)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = args.out or Path(cfg.output_path)
    for tag, header, rows, summary in outputs:
        path = series_path(out, tag)
        try:
            path.write_text(render_csv(header, rows), encoding="ascii")
        except OSError as exc:
            print(f"error: cannot write {path}: {exc}", file=sys.stderr)
            return EXIT_IO
        print(summary)
    if outputs[-1][3].startswith("infeasible"):
        return EXIT_INFEASIBLE
    return 0


if __name__ == "__main__":
    sys.exit(main())
