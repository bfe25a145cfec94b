"""End-to-end acceptance checks. Each test records one PASS/FAIL line.

Monte-Carlo sweeps use the library defaults (1000 trials, seed 42, 100 nodes
in a 200 m disk) and are cached so criteria sharing a sweep run it once.
"""

import math
from dataclasses import replace
from functools import lru_cache

import numpy as np
import pytest

from uavloc.channel import ChannelParams, LinkClass
from uavloc.cli import main
from uavloc.crlb import (
    CoverageSpec,
    coverage_area_numeric,
    coverage_area_three,
    crlb_sigma,
    fisher_crlb_oracle,
    localization_coverage,
)
from uavloc.energy import AirframeParams, forward_flight_power, hover_power
from uavloc.experiment import DesignPoint, Scenario, evaluate, node_positions, optimize, simulate_errors, sweep
from uavloc.trajectory import Trajectory

pytestmark = pytest.mark.slow

P = ChannelParams()
A = AirframeParams()
SCENARIO = Scenario()
ALTITUDES = [float(h) for h in range(50, 2001, 50)]
RADII = [float(r) for r in range(50, 301, 10)]
HOVER = [float(t) for t in range(5, 101, 5)]


@lru_cache(maxsize=None)
def altitude_sweep(m: int, mode: str):
    return sweep("altitude", ALTITUDES, DesignPoint(h=200, R=120, M=m, t_h=5),
                 replace(SCENARIO, link_mode=mode), P, A)


@lru_cache(maxsize=None)
def radius_sweep(m: int):
    return sweep("radius", RADII, DesignPoint(h=200, R=120, M=m, t_h=5), SCENARIO, P, A)


@lru_cache(maxsize=None)
def hover_sweep(m: int):
    origin = replace(SCENARIO, nodes=((0.0, 0.0),))
    return sweep("hover_time", HOVER, DesignPoint(h=200, R=120, M=m, t_h=5), origin, P, A)


def errors(results):
    return np.array([r.mean_error for r in results])


def single_interior_minimum(y, window=5):
    smooth = np.convolve(y, np.ones(window) / window, mode="valid")
    steps = np.sign(np.diff(smooth))
    turns = np.count_nonzero(np.diff(steps) != 0)
    k = int(np.argmin(smooth))
    return turns == 1 and 0 < k < len(smooth) - 1 and steps[0] < 0 < steps[-1]


def test_criterion_01_crlb_oracle(report):
    worst = 0.0
    count = 0
    for d in (10.0, 100.0, 350.0, 1000.0, 5000.0):
        for theta in np.linspace(0.05, math.pi / 2, 5):
            for cls in LinkClass:
                got = fisher_crlb_oracle(d, float(theta), cls, P)
                worst = max(worst, abs(got / crlb_sigma(d, theta, cls, P) - 1.0))
                count += 1
    ok = count >= 50 and worst <= 5e-3
    report(1, ok, f"{count} grid points, worst relative gap {worst:.2e} (limit 5e-3)")
    assert ok


def test_criterion_02_geometry_oracle(report):
    rng = np.random.default_rng(12345)
    worst = 0.0
    for _ in range(20):
        r_c = rng.uniform(20.0, 2000.0)
        l = rng.uniform(0.0, math.sqrt(3.0)) * r_c * 0.995
        s = l / math.sqrt(3.0)
        centers = [(s * math.cos(a), s * math.sin(a)) for a in (0.0, 2 * math.pi / 3, 4 * math.pi / 3)]
        closed = coverage_area_three(r_c, l)
        numeric = coverage_area_numeric(centers, [r_c] * 3)
        assert closed > 0
        worst = max(worst, abs(numeric / closed - 1.0))
    coincident = abs(coverage_area_three(123.4, 0.0) / (math.pi * 123.4**2) - 1.0)
    ok = worst <= 2e-3 and coincident <= 1e-9
    report(2, ok, f"worst closed-form vs grid gap {worst:.2e} (limit 2e-3); l=0 gap {coincident:.1e} (limit 1e-9)")
    assert ok


def test_criterion_03_power_identities(report):
    gap = max(abs(forward_flight_power(v, A) - hover_power(A)) for v in (0.0, 1e-9, 1e-7))
    v = np.arange(0.0, 30.0 + 1e-9, 0.01)
    p = np.array([forward_flight_power(x, A) for x in v])
    turns = np.count_nonzero(np.diff(np.sign(np.diff(p))) != 0)
    k = int(np.argmin(p))
    ok = gap <= 1e-6 and turns == 1 and 0 < k < len(v) - 1 and p[k] < hover_power(A)
    report(3, ok, f"|P_ff(0+) - P_h| = {gap:.1e} W; minimum {p[k]:.1f} W at v = {v[k]:.2f} m/s "
                  f"vs hover {hover_power(A):.1f} W; slope sign changes {turns}")
    assert ok


def test_criterion_04_noiseless(report):
    worst = 0.0
    covered = 0
    for point in (DesignPoint(), DesignPoint(h=500, R=200, M=4), DesignPoint(h=100, R=60, M=5, t_h=2)):
        traj = point.trajectory()
        sc = replace(SCENARIO, sigma_override=0.0, n_trials=20)
        mask = localization_coverage(traj, CoverageSpec(), P).covers(node_positions(sc))
        pos, _ = simulate_errors(traj, sc, P)
        per_node = pos[:, mask].mean(axis=0)
        covered += int(mask.sum())
        worst = max(worst, float(per_node.max()))
    ok = covered > 0 and worst < 1e-3
    report(4, ok, f"max per-node mean error {worst:.2e} m over {covered} covered node placements (limit 1e-3)")
    assert ok


def test_criterion_05_los_beats_nlos(report):
    los = errors(altitude_sweep(3, "conditioned_los"))
    nlos = errors(altitude_sweep(3, "conditioned_nlos"))
    bad = [h for h, a, b in zip(ALTITUDES, los, nlos) if not a < b]
    ok = not bad
    report(5, ok, f"LoS < NLoS at {len(ALTITUDES) - len(bad)}/{len(ALTITUDES)} altitudes; "
                  f"min LoS {los.min():.1f} m, min NLoS {nlos.min():.1f} m")
    assert ok


def test_criterion_06_u_shape(report):
    curves = {
        "LoS": errors(altitude_sweep(3, "conditioned_los")),
        "NLoS": errors(altitude_sweep(3, "conditioned_nlos")),
        "averaged M=3": errors(altitude_sweep(3, "averaged")),
    }
    shapes = {k: single_interior_minimum(v) for k, v in curves.items()}
    avg = curves["averaged M=3"]
    reduction = 1.0 - avg.min() / avg.max()
    ok = all(shapes.values()) and reduction >= 0.30
    shape_txt = ", ".join(f"{k} {'U' if s else 'not U'}" for k, s in shapes.items())
    report(6, ok, f"{shape_txt}; averaged M=3 best {avg.min():.1f} m at h={ALTITUDES[int(avg.argmin())]:g} "
                  f"vs worst {avg.max():.1f} m, reduction {reduction:.0%} (limit 30%)")
    assert ok


def test_criterion_07_waypoint_count(report):
    m3, m4 = altitude_sweep(3, "averaged"), altitude_sweep(4, "averaged")
    bad_alt = [a.swept_value for a, b in zip(m3, m4)
               if not b.mean_error <= a.mean_error + 2 * math.hypot(a.mean_error_se, b.mean_error_se)]
    h3, h4 = hover_sweep(3), hover_sweep(4)
    gaps = [abs(a.mean_error - b.mean_error) / max(a.mean_error, b.mean_error)
            for a, b in zip(h3, h4) if a.swept_value >= 40]
    worst_gap = max(gaps)
    ok = not bad_alt and worst_gap <= 0.10
    report(7, ok, f"M=4 <= M=3 (+2 SE) at {len(ALTITUDES) - len(bad_alt)}/{len(ALTITUDES)} altitudes; "
                  f"hover curves for t_h >= 40 s differ by up to {worst_gap:.1%} (limit 10%)")
    assert ok


def test_criterion_08_radius_tradeoff(report):
    parts, ok = [], True
    for m in (3, 4):
        res = radius_sweep(m)
        err = errors(res)
        energy = np.array([r.mission_energy for r in res])
        k = int(np.argmin(err))
        gain = 1.0 - err[k] / err[0]
        increasing = bool(np.all(np.diff(energy) > 0))
        e_k = energy[k] / 1e3
        ok &= gain >= 0.25 and increasing and 40.0 <= e_k <= 95.0
        parts.append(f"M={m}: best R={RADII[k]:g} m, error {err[0]:.1f}->{err[k]:.1f} m ({gain:.0%}, limit 25%), "
                     f"energy {e_k:.1f} kJ (range 40-95), energy increasing {increasing}")
    report(8, ok, "; ".join(parts))
    assert ok


def test_criterion_09_coverage_floor(report):
    heights = np.arange(150.0, 1900.0 + 1e-9, 10.0)
    areas = [localization_coverage(Trajectory(radius_r=120.0, altitude_h=float(h)), CoverageSpec(), P).area
             for h in heights]
    k = int(np.argmin(areas))
    floor = areas[k] / 1e6
    ok = abs(floor / 0.12 - 1.0) <= 0.35
    report(9, ok, f"minimum localization coverage {floor:.4f} km2 at h={heights[k]:g} m "
                  f"(target 0.12 km2 +-35%)")
    assert ok


def test_criterion_10_headline_optimization(report):
    grids = {"h": [float(h) for h in range(50, 601, 50)], "R": RADII,
             "M": [3], "t_h": [5.0]}
    res = optimize(100e3, grids, SCENARIO, P, A)
    base = evaluate(DesignPoint().trajectory(), SCENARIO, P, A)
    assert res.feasible
    reduction = 1.0 - res.best_result.mean_error / base.mean_error
    ok = reduction >= 0.40
    b = res.best
    report(10, ok, f"baseline (h=200, R=120) {base.mean_error:.1f} m -> optimum (h={b.h:g}, R={b.R:g}) "
                   f"{res.best_result.mean_error:.1f} m, reduction {reduction:.0%} (limit 40%)")
    assert ok


def test_criterion_11_determinism(report, tmp_path):
    quick = ["--trials", "450"]
    commands = {
        "power-curve": [],
        "coverage": [],
        "sweep-altitude": quick + ["--h-min", "100", "--h-max", "400", "--h-step", "150"],
        "sweep-radius": quick + ["--r-min", "60", "--r-max", "180", "--r-step", "60"],
        "sweep-hover": quick + ["--t-h-min", "5", "--t-h-max", "25", "--t-h-step", "10", "--m-list", "3,4"],
        "evaluate": quick,
        "optimize": quick + ["--h-min", "150", "--h-max", "250", "--h-step", "100", "--r-min", "100",
                             "--r-max", "150", "--r-step", "50"],
    }
    mismatched = []
    for name, extra in commands.items():
        outputs = []
        for run, workers in enumerate(("1", "1", "3")):
            folder = tmp_path / f"{name}-{run}"
            folder.mkdir()
            code = main([name, "--seed", "11", "--workers", workers, "--out", str(folder / "out.csv"), *extra])
            assert code == 0
            outputs.append({p.name: p.read_bytes() for p in sorted(folder.iterdir())})
        if not (outputs[0] == outputs[1] == outputs[2] and outputs[0]):
            mismatched.append(name)
    ok = not mismatched
    report(11, ok, f"{len(commands) - len(mismatched)}/{len(commands)} subcommands byte-identical "
                   f"across reruns and worker counts 1 and 3")
    assert ok
