"""Monte-Carlo evaluation of trajectories, parameter sweeps and the grid optimizer."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .channel import ChannelParams, LinkClass, free_space_constant, p_los, shadowing_sigma
from .crlb import CoverageSpec, localization_coverage
from .energy import AirframeParams
from .estimation import distance_from_rss, horizontal_range, multilaterate_batch
from .trajectory import KMH, Trajectory, ground_projections, mission_energy

LINK_MODES = ("bernoulli", "conditioned_los", "conditioned_nlos", "averaged")
AXES = ("altitude", "radius", "hover_time", "waypoints")
TRIAL_CHUNK = 200


@dataclass(frozen=True)
class Scenario:
    """Ground-node population and Monte-Carlo plan.

    ``nodes`` pins explicit node positions instead of a uniform draw in the
    disk. ``sigma_override`` forces the shadowing std (dB) of both classes.
    """

    area_radius: float = 200.0
    n_nodes: int = 100
    sample_rate: float = 2.0
    n_trials: int = 1000
    seed: int = 42
    link_mode: str = "averaged"
    estimator: str = "genie"
    resample_nodes: bool = False
    covered_only: bool = False
    workers: int = 1
    nodes: tuple[tuple[float, float], ...] | None = None
    sigma_override: float | None = None

    def __post_init__(self):
        if self.nodes is None and self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be > 0")
        if self.area_radius <= 0:
            raise ValueError("area_radius must be > 0")
        if self.link_mode not in LINK_MODES:
            raise ValueError(f"link_mode must be one of {LINK_MODES}")
        if self.estimator not in ("genie", "blind"):
            raise ValueError("estimator must be 'genie' or 'blind'")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.sigma_override is not None and self.sigma_override < 0:
            raise ValueError("sigma_override must be >= 0")

    @property
    def population(self) -> int:
        return len(self.nodes) if self.nodes is not None else self.n_nodes


@dataclass(frozen=True)
class DesignPoint:
    h: float = 200.0
    R: float = 120.0
    M: int = 3
    t_h: float = 5.0

    def __post_init__(self):
        if self.M < 3 or int(self.M) != self.M:
            raise ValueError("M must be an integer >= 3")
        if self.h <= 0 or self.R <= 0 or self.t_h <= 0:
            raise ValueError("h, R and t_h must be > 0")

    def trajectory(self, cruise_speed: float = 40.0 * KMH) -> Trajectory:
        return Trajectory(radius_r=self.R, altitude_h=self.h, n_waypoints=int(self.M),
                          hover_time=self.t_h, cruise_speed=cruise_speed)


@dataclass
class SweepResult:
    swept_value: float
    mean_error: float
    mean_range_error: float
    mission_energy: float
    coverage_area: float
    covered_nodes: int
    n_nodes: int = 0
    mean_error_se: float = 0.0
    no_coverage: bool = False


def uniform_disk(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    rad = radius * np.sqrt(rng.random(n))
    ang = 2.0 * math.pi * rng.random(n)
    return np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])


def node_positions(scenario: Scenario) -> np.ndarray:
    if scenario.nodes is not None:
        return np.asarray(scenario.nodes, dtype=float).reshape(-1, 2)
    rng = np.random.default_rng(np.random.SeedSequence(scenario.seed, spawn_key=(0x6E6F6465,)))
    return uniform_disk(rng, scenario.n_nodes, scenario.area_radius)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream per trial; results never depend on execution order."""
    return np.random.default_rng(seed + trial)


def sample_counts(traj: Trajectory, sample_rate: float) -> np.ndarray:
    n = np.floor(np.asarray(traj.per_waypoint_hover()) * sample_rate + 1e-9).astype(int)
    if np.any(n < 1):
        raise ValueError("hover time too short: every waypoint needs at least one RSS sample")
    return n


class _Geometry:
    """Per-node link geometry for one trajectory, shared by all trials."""

    def __init__(self, traj: Trajectory, nodes: np.ndarray, params: ChannelParams, scenario: Scenario):
        self.anchors = ground_projections(traj)
        self.h = traj.altitude_h
        self.nodes = nodes
        diff = nodes[:, None, :] - self.anchors[None, :, :]
        self.r = np.hypot(diff[..., 0], diff[..., 1])
        self.d = np.hypot(self.r, self.h)
        self.theta = np.arctan2(self.h, self.r)
        self.p_los = p_los(self.theta, params)
        self.n = sample_counts(traj, scenario.sample_rate)
        if scenario.sigma_override is not None:
            self.sigma = {c: np.full_like(self.r, scenario.sigma_override) for c in LinkClass}
        else:
            self.sigma = {c: shadowing_sigma(self.theta, c, params) for c in LinkClass}


def _estimate(geo: _Geometry, true_los: np.ndarray, z: dict, params: ChannelParams, estimator: str):
    """RSS draw, range inversion and multilateration for a (T, N, M) block."""
    k = free_space_constant(params)
    sqrt_n = np.sqrt(geo.n)
    psi = np.where(
        true_los,
        params.mu_los + geo.sigma[LinkClass.LOS] / sqrt_n * z[LinkClass.LOS],
        params.mu_nlos + geo.sigma[LinkClass.NLOS] / sqrt_n * z[LinkClass.NLOS],
    )
    rss = params.c_offset - 20.0 * np.log10(geo.d) - k - psi
    if estimator == "genie":
        d_hat = np.where(true_los, distance_from_rss(rss, LinkClass.LOS, params),
                         distance_from_rss(rss, LinkClass.NLOS, params))
    else:
        d_hat = distance_from_rss(rss, LinkClass.LOS, params)
    r_hat = horizontal_range(d_hat, geo.h)
    t, n, m = r_hat.shape
    xy, _, _ = multilaterate_batch(geo.anchors, r_hat.reshape(t * n, m))
    xy = xy.reshape(t, n, 2)
    pos_err = np.hypot(xy[..., 0] - geo.nodes[:, 0], xy[..., 1] - geo.nodes[:, 1])
    return pos_err, np.abs(r_hat - geo.r)


def _trial_block(geo: _Geometry, u, z, scenario: Scenario, params: ChannelParams):
    """Errors for a (T, N, M) block of draws sharing one geometry."""
    mode = scenario.link_mode
    if mode == "averaged":
        e_l, a_l = _estimate(geo, np.ones(u.shape, dtype=bool), z, params, scenario.estimator)
        e_n, a_n = _estimate(geo, np.zeros(u.shape, dtype=bool), z, params, scenario.estimator)
        # position errors weighted by the node's mean LoS probability, ranges per link
        w = geo.p_los.mean(axis=-1)
        pos = w * e_l + (1.0 - w) * e_n
        link = geo.p_los * a_l + (1.0 - geo.p_los) * a_n
    else:
        if mode == "bernoulli":
            true_los = u < geo.p_los
        else:
            true_los = np.full(u.shape, mode == "conditioned_los")
        pos, link = _estimate(geo, true_los, z, params, scenario.estimator)
    return pos, np.sqrt((link * link).sum(-1))


def _run_chunk(trials: range, traj: Trajectory, nodes, scenario: Scenario, params: ChannelParams):
    n_nodes, m = scenario.population, traj.n_waypoints
    shape = (len(trials), n_nodes, m)
    u, z_l, z_n = np.empty(shape), np.empty(shape), np.empty(shape)
    populations = []
    for i, t in enumerate(trials):
        rng = trial_rng(scenario.seed, t)
        if scenario.resample_nodes:
            populations.append(uniform_disk(rng, n_nodes, scenario.area_radius))
        u[i] = rng.random((n_nodes, m))
        z_l[i] = rng.standard_normal((n_nodes, m))
        z_n[i] = rng.standard_normal((n_nodes, m))
    if not scenario.resample_nodes:
        z = {LinkClass.LOS: z_l, LinkClass.NLOS: z_n}
        return _trial_block(_Geometry(traj, nodes, params, scenario), u, z, scenario, params)
    pos, rng_err = [], []
    for i, pop in enumerate(populations):
        z = {LinkClass.LOS: z_l[i:i + 1], LinkClass.NLOS: z_n[i:i + 1]}
        p, r = _trial_block(_Geometry(traj, pop, params, scenario), u[i:i + 1], z, scenario, params)
        pos.append(p)
        rng_err.append(r)
    return np.concatenate(pos), np.concatenate(rng_err)


def simulate_errors(traj: Trajectory, scenario: Scenario, params: ChannelParams):
    """Per-trial, per-node position and range-vector errors, each (T, N)."""
    nodes = node_positions(scenario)
    chunks = [range(s, min(s + TRIAL_CHUNK, scenario.n_trials))
              for s in range(0, scenario.n_trials, TRIAL_CHUNK)]
    if scenario.workers > 1:
        with ThreadPoolExecutor(scenario.workers) as pool:
            parts = list(pool.map(lambda c: _run_chunk(c, traj, nodes, scenario, params), chunks))
    else:
        parts = [_run_chunk(c, traj, nodes, scenario, params) for c in chunks]
    return np.concatenate([p for p, _ in parts]), np.concatenate([r for _, r in parts])


def evaluate(
    traj: Trajectory,
    scenario: Scenario,
    params: ChannelParams,
    airframe: AirframeParams,
    coverage: CoverageSpec | None = None,
    swept_value: float = math.nan,
) -> SweepResult:
    coverage = coverage or CoverageSpec()
    cov = localization_coverage(traj, coverage, params)
    nodes = node_positions(scenario)
    covered = cov.covers(nodes)
    pos, rng_err = simulate_errors(traj, scenario, params)
    no_cov = not covered.any()
    if scenario.covered_only and not no_cov and not scenario.resample_nodes:
        pos, rng_err = pos[:, covered], rng_err[:, covered]
    per_trial = pos.mean(axis=1)
    se = float(per_trial.std(ddof=1) / math.sqrt(len(per_trial))) if len(per_trial) > 1 else 0.0
    return SweepResult(
        swept_value=swept_value,
        mean_error=float(pos.mean()),
        mean_range_error=float(rng_err.mean()),
        mission_energy=mission_energy(traj, airframe),
        coverage_area=float(cov.area),
        covered_nodes=int(covered.sum()),
        n_nodes=scenario.population,
        mean_error_se=se,
        no_coverage=no_cov,
    )


_AXIS_FIELD = {"altitude": "h", "radius": "R", "hover_time": "t_h", "waypoints": "M"}


def sweep(
    axis: str,
    grid: Sequence[float],
    base: DesignPoint,
    scenario: Scenario,
    params: ChannelParams,
    airframe: AirframeParams,
    coverage: CoverageSpec | None = None,
    cruise_speed: float = 40.0 * KMH,
) -> list[SweepResult]:
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    if len(grid) == 0:
        raise ValueError("sweep grid is empty")
    out = []
    for value in grid:
        v = int(value) if axis == "waypoints" else float(value)
        point = replace(base, **{_AXIS_FIELD[axis]: v})
        out.append(evaluate(point.trajectory(cruise_speed), scenario, params, airframe, coverage, swept_value=v))
    return out


@dataclass
class GridRow:
    point: DesignPoint
    energy: float
    covered_nodes: int
    feasible: bool
    binding: str  # "", "energy", "coverage" or "energy+coverage"
    result: SweepResult | None = None


@dataclass
class OptimizationResult:
    feasible: bool
    best: DesignPoint | None
    best_result: SweepResult | None
    rows: list[GridRow] = field(default_factory=list)


def optimize(
    budget: float,
    grids: dict[str, Sequence[float]],
    scenario: Scenario,
    params: ChannelParams,
    airframe: AirframeParams,
    coverage: CoverageSpec | None = None,
    cruise_speed: float = 40.0 * KMH,
    evaluate_infeasible: bool = False,
) -> OptimizationResult:
    """Exhaustive grid search for the minimum mean position error.

    Feasible means mission energy <= budget and every node inside the
    localization coverage region. Ties go to lower energy, then lower h.
    """
    if budget <= 0:
        raise ValueError("budget must be > 0")
    keys = ("h", "R", "M", "t_h")
    for k in keys:
        if not grids.get(k):
            raise ValueError(f"grid for {k} is empty")
    coverage = coverage or CoverageSpec()
    nodes = node_positions(scenario)
    rows = []
    for h, R, M, t_h in itertools.product(*(grids[k] for k in keys)):
        point = DesignPoint(float(h), float(R), int(M), float(t_h))
        traj = point.trajectory(cruise_speed)
        energy = mission_energy(traj, airframe)
        covered = int(localization_coverage(traj, coverage, params).covers(nodes).sum())
        binding = []
        if energy > budget:
            binding.append("energy")
        if covered < len(nodes):
            binding.append("coverage")
        row = GridRow(point, energy, covered, not binding, "+".join(binding))
        if row.feasible or evaluate_infeasible:
            row.result = evaluate(traj, scenario, params, airframe, coverage)
        rows.append(row)
    feasible = [r for r in rows if r.feasible]
    if not feasible:
        return OptimizationResult(False, None, None, rows)
    best = min(feasible, key=lambda r: (r.result.mean_error, r.energy, r.point.h))
    return OptimizationResult(True, best.point, best.result, rows)
