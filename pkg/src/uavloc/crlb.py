"""Cramer-Rao bound of RSS ranging, coverage radius and localization coverage area."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import norm

from .channel import C_LIGHT, ChannelParams, LinkClass, p_los, shadowing_sigma
from .trajectory import Trajectory, ground_projections, leg_length

log = logging.getLogger(__name__)

BETA = math.log(10.0) / 20.0
MIXTURE_RULES = ("weighted", "total_variance")


@dataclass(frozen=True)
class CoverageSpec:
    """delta: allowed ratio of estimator std to the CRLB.

    resolution=None picks sqrt(box area)/1000 for numeric area integration.
    mixture: how the LoS/NLoS estimator std is combined, see :func:`mixture_std`.
    """

    delta: float = 2.0
    resolution: float | None = None
    n_samples: int = 1
    mixture: str = "total_variance"

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        if self.resolution is not None and self.resolution <= 0:
            raise ValueError("resolution must be > 0")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.mixture not in MIXTURE_RULES:
            raise ValueError(f"mixture must be one of {MIXTURE_RULES}")


@dataclass
class CoverageResult:
    per_waypoint_radius: list[float]
    area: float
    method: str  # "closed-form-3" or "numeric"
    unbounded: bool = False
    centers: list[tuple[float, float]] = field(default_factory=list)

    def covers(self, xy) -> np.ndarray:
        """Boolean mask of points lying inside every waypoint disk."""
        pts = np.atleast_2d(np.asarray(xy, dtype=float))
        inside = np.ones(len(pts), dtype=bool)
        for (cx, cy), rc in zip(self.centers, self.per_waypoint_radius):
            inside &= np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) <= rc
        return inside


def crlb_sigma(d, theta, cls: LinkClass, params: ChannelParams):
    """Closed-form CRLB (std, m) of the single-sample distance estimate."""
    return d * BETA * shadowing_sigma(theta, cls, params)


def crlb_avg(d, theta, params: ChannelParams):
    p = p_los(theta, params)
    s_l = crlb_sigma(d, theta, LinkClass.LOS, params)
    s_n = crlb_sigma(d, theta, LinkClass.NLOS, params)
    return np.sqrt(p**2 * s_l**2 + (1.0 - p) ** 2 * s_n**2)


def fisher_crlb_oracle(
    d: float,
    theta: float,
    cls: LinkClass,
    params: ChannelParams,
    n_points: int = 1_000_001,
    sigma: float | None = None,
) -> float:
    """Numerical CRLB: inverse root of the Fisher information in d.

    The received power density is evaluated on a uniform grid (+-12 std), the
    score d/dd ln f is taken by central differences and squared-score
    expectation is integrated with the trapezoid rule.
    """
    if sigma is None:
        sigma = float(shadowing_sigma(theta, cls, params))
    k = 20.0 * math.log10(4.0 * math.pi * params.f / C_LIGHT)
    mu = params.mu(cls)

    def log_pdf(w, dist):
        # P_r = C - 20 log10(dist) - K - psi, psi ~ N(mu, sigma^2)
        return norm.logpdf(-w - 20.0 * math.log10(dist) - k + params.c_offset, loc=mu, scale=sigma)

    center = params.c_offset - 20.0 * math.log10(d) - k - mu
    w = np.linspace(center - 12 * sigma, center + 12 * sigma, n_points)
    step = d * 1e-5
    score = (log_pdf(w, d + step) - log_pdf(w, d - step)) / (2 * step)
    dens = np.exp(log_pdf(w, d))
    info = trapezoid(dens * score**2, w)
    return float(1.0 / math.sqrt(info))


def estimator_std(d, theta, cls: LinkClass, n_samples: int, params: ChannelParams, sigma=None):
    """Exact std of d_hat = d 10^(X/20), X ~ N(0, sigma^2/n)."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if sigma is None:
        sigma = shadowing_sigma(theta, cls, params)
    q = (BETA * np.asarray(sigma, dtype=float)) ** 2 / n_samples
    return d * np.sqrt(np.exp(q) * np.expm1(q))


def estimator_mean(d, theta, cls: LinkClass, n_samples: int, params: ChannelParams, sigma=None):
    if sigma is None:
        sigma = shadowing_sigma(theta, cls, params)
    q = (BETA * np.asarray(sigma, dtype=float)) ** 2 / n_samples
    return d * np.exp(q / 2.0)


def mixture_std(d, theta, n_samples: int, params: ChannelParams, rule: str = "total_variance"):
    """Std of the distance estimate when the link class is LoS w.p. P_LoS.

    ``total_variance`` is the std of the class mixture (law of total
    variance). ``weighted`` mirrors the average-CRLB weighting,
    sqrt(P^2 s_LoS^2 + (1 - P)^2 s_NLoS^2).
    """
    p = p_los(theta, params)
    s_l = estimator_std(d, theta, LinkClass.LOS, n_samples, params)
    s_n = estimator_std(d, theta, LinkClass.NLOS, n_samples, params)
    if rule == "weighted":
        return np.sqrt(p**2 * s_l**2 + (1.0 - p) ** 2 * s_n**2)
    if rule == "total_variance":
        m_l = estimator_mean(d, theta, LinkClass.LOS, n_samples, params)
        m_n = estimator_mean(d, theta, LinkClass.NLOS, n_samples, params)
        var = p * s_l**2 + (1.0 - p) * s_n**2 + p * (1.0 - p) * (m_l - m_n) ** 2
        return np.sqrt(var)
    raise ValueError(f"unknown mixture rule {rule!r}")


def _coverage_margin(r, h, spec: CoverageSpec, params: ChannelParams):
    """mixture std minus delta * average CRLB; <= 0 means covered."""
    r = np.asarray(r, dtype=float)
    d = np.hypot(h, r)
    theta = np.arctan2(h, r)
    lhs = mixture_std(d, theta, spec.n_samples, params, spec.mixture)
    rhs = spec.delta * crlb_avg(d, theta, params)
    # the margin scales with d, so normalise to compare at 1e-12
    return (lhs - rhs) / d


def coverage_radius(
    h: float,
    spec: CoverageSpec,
    params: ChannelParams,
    n_samples: int | None = None,
    cap_factor: float = 100.0,
    tol: float = 0.1,
) -> float:
    """Largest r such that every r' <= r meets the CRLB coverage condition.

    Searches [0, cap_factor * h]; returning the cap means the condition never
    binds (see :func:`radius_is_unbounded`).
    """
    if h <= 0:
        raise ValueError("h must be > 0")
    if n_samples is not None and n_samples != spec.n_samples:
        spec = CoverageSpec(spec.delta, spec.resolution, n_samples, spec.mixture)
    cap = cap_factor * h

    def ok(r):
        return _coverage_margin(r, h, spec, params) <= 1e-12

    # the condition depends on elevation only; scan evenly in angle
    theta_grid = np.linspace(math.pi / 2, math.atan2(h, cap), 4001)
    r_grid = np.concatenate([[0.0], h / np.tan(theta_grid[1:-1]), [cap]])
    good = ok(r_grid)
    if not good[0]:
        return 0.0
    bad = np.flatnonzero(~good)
    if bad.size == 0:
        return cap
    lo, hi = r_grid[bad[0] - 1], r_grid[bad[0]]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return float(lo)


def radius_is_unbounded(r_c: float, h: float, cap_factor: float = 100.0) -> bool:
    return r_c >= cap_factor * h


def coverage_area_three(r_c: float, l: float) -> float:
    """Intersection area of three equal disks whose centres form an equilateral triangle of side l."""
    if r_c <= 0:
        return 0.0
    if l < 0:
        raise ValueError("l must be >= 0")
    if l >= math.sqrt(3.0) * r_c:
        if l > math.sqrt(3.0) * r_c * (1 + 1e-12):
            log.warning("empty three-disk intersection (l=%g, r_c=%g)", l, r_c)
        return 0.0
    inner = max(0.0, 3.0 * r_c**2 - 0.75 * l**2)
    c2 = max(0.0, 3.0 * r_c**2 - 0.5 * l**2 - l * math.sqrt(inner))
    c = math.sqrt(c2)
    ratio = min(1.0, c / (2.0 * r_c))
    return (math.sqrt(3.0) / 4.0) * c2 + 3.0 * (
        r_c**2 * math.asin(ratio) - (c / 4.0) * math.sqrt(max(0.0, 4.0 * r_c**2 - c2))
    )


def coverage_area_numeric(centers: Sequence, radii: Sequence[float], resolution: float | None = None) -> float:
    """Area of the intersection of disks by midpoint grid counting.

    The grid spans the bounding box of the smallest disk, clipped to every
    other disk's box (nothing outside can be inside all disks). The default
    step is sqrt(box area)/1000, i.e. r/500 for a lone disk, so slivers near
    tangency still get ~1e6 cells. Rows are processed in fixed order so the
    count is reproducible.
    """
    c = np.asarray(centers, dtype=float).reshape(-1, 2)
    rr = np.asarray(radii, dtype=float).ravel()
    if len(c) == 0 or len(c) != len(rr):
        raise ValueError("centers and radii must be nonempty and of equal length")
    if np.any(rr <= 0):
        return 0.0
    lo = (c - rr[:, None]).max(axis=0)
    hi = (c + rr[:, None]).min(axis=0)
    if np.any(hi <= lo):
        return 0.0
    if resolution is None:
        resolution = math.sqrt(float(np.prod(hi - lo))) / 1000.0
    nx, ny = (int(math.ceil(s / resolution)) for s in hi - lo)
    xs = lo[0] + (np.arange(nx) + 0.5) * resolution
    ys_all = lo[1] + (np.arange(ny) + 0.5) * resolution
    r2 = rr * rr
    count = 0
    chunk = max(1, 4_000_000 // nx)
    for start in range(0, ny, chunk):
        ys = ys_all[start:start + chunk]
        inside = np.ones((len(ys), nx), dtype=bool)
        for (cx, cy), rad2 in zip(c, r2):
            dx2 = (xs - cx) ** 2
            dy2 = (ys - cy) ** 2
            inside &= (dy2[:, None] + dx2[None, :]) <= rad2
        count += int(inside.sum())
    return count * resolution * resolution


def localization_coverage(traj: Trajectory, spec: CoverageSpec, params: ChannelParams) -> CoverageResult:
    r_c = coverage_radius(traj.altitude_h, spec, params)
    centers = [tuple(map(float, p)) for p in ground_projections(traj)]
    radii = [r_c] * traj.n_waypoints
    unbounded = radius_is_unbounded(r_c, traj.altitude_h)
    if traj.n_waypoints == 3:
        area = coverage_area_three(r_c, leg_length(traj))
        method = "closed-form-3"
    else:
        area = coverage_area_numeric(centers, radii, spec.resolution)
        method = "numeric"
    return CoverageResult(radii, area, method, unbounded, centers)
