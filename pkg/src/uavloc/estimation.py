"""RSS ranging, multilateration and localization error metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ChannelParams, LinkClass, free_space_constant, p_los


class GeometryError(ValueError):
    """Raised when the anchor set cannot determine a 2-D position."""


@dataclass
class RangeObservation:
    waypoint_index: int
    anchor_xy: tuple[float, float]
    rss_avg: float
    assumed_class: LinkClass = LinkClass.LOS
    n_samples: int = 1
    r_hat: float | None = None

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


@dataclass
class PositionEstimate:
    xy_hat: tuple[float, float]
    range_residuals: list[float]
    converged: bool
    objective: float = 0.0


def distance_from_rss(rss, cls: LinkClass, params: ChannelParams):
    """Invert the mean path-loss model: RSS (dBm) to slant distance (m)."""
    k = free_space_constant(params)
    return 10.0 ** ((params.c_offset - k - params.mu(cls) - np.asarray(rss, dtype=float)) / 20.0)


def horizontal_range(d_hat, h):
    """sqrt(d^2 - h^2), clamped at 0 when the estimate falls below the altitude."""
    d_hat = np.asarray(d_hat, dtype=float)
    return np.sqrt(np.maximum(0.0, d_hat * d_hat - h * h))


def estimate_distance(obs: RangeObservation, h: float, params: ChannelParams) -> tuple[float, float]:
    if not math.isfinite(obs.rss_avg):
        raise ValueError("rss_avg must be finite")
    d_hat = float(distance_from_rss(obs.rss_avg, obs.assumed_class, params))
    return d_hat, float(horizontal_range(d_hat, h))


# ---------------------------------------------------------------------------
# multilateration
# ---------------------------------------------------------------------------

STEP_TOL = 1e-6
MAX_ITER = 200
_EPS = 1e-12


def check_anchor_geometry(anchors: np.ndarray, rel_tol: float = 1e-9) -> None:
    anchors = np.asarray(anchors, dtype=float)
    if anchors.shape[0] < 3:
        raise GeometryError("underdetermined: need at least 3 observations")
    centred = anchors - anchors.mean(axis=0)
    sv = np.linalg.svd(centred, compute_uv=False)
    if sv[0] == 0 or sv[-1] <= rel_tol * sv[0]:
        raise GeometryError("degenerate geometry: anchors are collinear")


def linearized_fix(anchors: np.ndarray, ranges: np.ndarray) -> np.ndarray:
    """Closed-form least-squares fix from differences of squared-range equations.

    anchors: (M, 2) or (B, M, 2); ranges: (M,) or (B, M).
    """
    a = np.asarray(anchors, dtype=float)
    r = np.asarray(ranges, dtype=float)
    if a.ndim == 2:
        a = np.broadcast_to(a, r.shape + (2,)) if r.ndim == 2 else a[None]
    if r.ndim == 1:
        r = r[None]
    A = 2.0 * (a[:, 1:, :] - a[:, :1, :])
    sq = (a * a).sum(-1)
    b = sq[:, 1:] - sq[:, :1] - (r[:, 1:] ** 2 - r[:, :1] ** 2)
    return _solve2(*_normal_equations(A[..., 0], A[..., 1], b))


def _normal_equations(jx, jy, f):
    """J^T J and J^T f for a batch of (B, M) Jacobian columns.

    Row-wise sums keep every batch item independent of the batch it sits in.
    """
    m = np.empty(jx.shape[:1] + (2, 2))
    m[:, 0, 0] = (jx * jx).sum(-1)
    m[:, 0, 1] = m[:, 1, 0] = (jx * jy).sum(-1)
    m[:, 1, 1] = (jy * jy).sum(-1)
    v = np.column_stack([(jx * f).sum(-1), (jy * f).sum(-1)])
    return m, v


def _solve2(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Batched 2x2 linear solve."""
    det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    det = np.where(np.abs(det) < 1e-300, 1e-300, det)
    x = (m[:, 1, 1] * v[:, 0] - m[:, 0, 1] * v[:, 1]) / det
    y = (m[:, 0, 0] * v[:, 1] - m[:, 1, 0] * v[:, 0]) / det
    return np.column_stack([x, y])


def _residuals(p, a, r):
    diff = p[:, None, :] - a
    dist = np.sqrt((diff * diff).sum(-1))
    return dist - r, diff, dist


def _objective(p, a, r):
    res = _residuals(p, a, r)[0]
    return (res * res).sum(-1)


def _newton_system(res, diff, dist):
    """Gradient and exact Hessian of 0.5 * sum_i res_i^2 (res_i = |p - a_i| - r_i)."""
    safe = np.maximum(dist, _EPS)
    ux, uy = diff[..., 0] / safe, diff[..., 1] / safe
    jtj, grad = _normal_equations(ux, uy, res)
    # curvature of each |p - a_i|: (I - u u^T) / dist
    k = res / safe
    hess = jtj.copy()
    hess[:, 0, 0] += (k * (1.0 - ux * ux)).sum(-1)
    hess[:, 1, 1] += (k * (1.0 - uy * uy)).sum(-1)
    off = (k * ux * uy).sum(-1)
    hess[:, 0, 1] -= off
    hess[:, 1, 0] -= off
    return grad, hess


def _levenberg_marquardt(p0, a, r):
    """Damped Newton iterations on sum_i (|p - a_i| - r_i)^2, per batch item.

    The damping lam * I is raised until the shifted Hessian is positive
    definite and the step lowers the objective, and relaxed after success.
    """
    p = p0.copy()
    n = p.shape[0]
    lam = np.full(n, 1e-3)
    res, diff, dist = _residuals(p, a, r)
    obj = (res * res).sum(-1)
    active = np.ones(n, dtype=bool)
    converged = np.zeros(n, dtype=bool)
    for _ in range(MAX_ITER):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        grad, hess = _newton_system(res[idx], diff[idx], dist[idx])
        scale = 0.5 * (hess[:, 0, 0] + hess[:, 1, 1])
        scale = np.maximum(np.abs(scale), 1.0)
        shifted = hess.copy()
        shifted[:, 0, 0] += lam[idx] * scale
        shifted[:, 1, 1] += lam[idx] * scale
        det = shifted[:, 0, 0] * shifted[:, 1, 1] - shifted[:, 0, 1] * shifted[:, 1, 0]
        pd = (shifted[:, 0, 0] > 0) & (det > 0)
        step = -_solve2(shifted, grad)
        step[~pd] = 0.0
        cand = p[idx] + step
        res_c, diff_c, dist_c = _residuals(cand, a[idx], r[idx])
        obj_c = (res_c * res_c).sum(-1)
        step_norm = np.sqrt((step * step).sum(-1))
        better = pd & ((obj_c < obj[idx]) | ((obj_c <= obj[idx]) & (step_norm < STEP_TOL)))
        good = idx[better]
        p[good] = cand[better]
        res[good], diff[good], dist[good], obj[good] = (
            res_c[better], diff_c[better], dist_c[better], obj_c[better])
        lam[idx] = np.where(better, np.maximum(lam[idx] / 4.0, 1e-9), lam[idx] * 8.0)
        gnorm = np.sqrt((grad * grad).sum(-1))
        done = (better & (step_norm < STEP_TOL)) | (gnorm < 1e-12 * np.maximum(1.0, scale))
        # damping this large means no descent direction is left at float precision
        stalled = lam[idx] > 1e14
        converged[idx[done]] = True
        active[idx[done | stalled]] = False
    return p, obj, converged


def multilaterate_batch(anchors, ranges, restart_factor: float = 10.0):
    """Solve a batch of multilateration problems.

    anchors: (M, 2) shared or (B, M, 2); ranges: (B, M). Returns
    (xy (B, 2), objective (B,), converged (B,)).
    """
    r = np.atleast_2d(np.asarray(ranges, dtype=float))
    a = np.asarray(anchors, dtype=float)
    if a.ndim == 2:
        a = np.broadcast_to(a, (r.shape[0],) + a.shape)
    p0 = linearized_fix(a, r)
    p, obj, conv = _levenberg_marquardt(p0, a, r)

    # restart items whose worst residual dwarfs the typical one
    res = np.abs(_residuals(p, a, r)[0])
    med = np.median(res, axis=-1)
    worst = res.max(axis=-1)
    suspect = np.flatnonzero((worst > restart_factor * med) & (worst > 1e-6))
    if suspect.size:
        a_s, r_s = a[suspect], r[suspect]
        centroid = a_s.mean(axis=1)
        spread = np.sqrt(((a_s - centroid[:, None, :]) ** 2).sum(-1)).mean(-1)
        half = spread / 2.0
        for ox, oy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            start = centroid + np.column_stack([ox * half, oy * half])
            p_alt, obj_alt, conv_alt = _levenberg_marquardt(start, a_s, r_s)
            win = obj_alt < obj[suspect] - 1e-12
            tgt = suspect[win]
            p[tgt], obj[tgt], conv[tgt] = p_alt[win], obj_alt[win], conv_alt[win]
    return p, obj, conv


def multilaterate(observations: Sequence[RangeObservation], initial=None) -> PositionEstimate:
    """Least-squares position fix from horizontal range estimates.

    Every observation must carry ``r_hat`` (see :func:`estimate_distance`).
    """
    if len(observations) < 3:
        raise GeometryError("underdetermined: need at least 3 observations")
    anchors = np.array([o.anchor_xy for o in observations], dtype=float)
    check_anchor_geometry(anchors)
    if any(o.r_hat is None for o in observations):
        raise ValueError("observations need r_hat filled in")
    ranges = np.array([o.r_hat for o in observations], dtype=float)[None]
    if initial is None:
        xy, obj, conv = multilaterate_batch(anchors, ranges)
    else:
        a = anchors[None]
        xy, obj, conv = _levenberg_marquardt(np.asarray(initial, dtype=float).reshape(1, 2), a, ranges)
    resid = np.abs(_residuals(xy, anchors[None], ranges)[0][0])
    return PositionEstimate(
        xy_hat=(float(xy[0, 0]), float(xy[0, 1])),
        range_residuals=resid.tolist(),
        converged=bool(conv[0]),
        objective=float(obj[0]),
    )


def multilateration_objective(xy, anchors, ranges) -> float:
    p = np.asarray(xy, dtype=float).reshape(1, 2)
    return float(_objective(p, np.asarray(anchors, dtype=float)[None], np.asarray(ranges, dtype=float)[None])[0])


# ---------------------------------------------------------------------------
# error metrics
# ---------------------------------------------------------------------------

def range_error(r_true, r_hat) -> float:
    """Euclidean norm of the range-vector error."""
    r_true = np.asarray(r_true, dtype=float)
    r_hat = np.asarray(r_hat, dtype=float)
    if r_true.shape != r_hat.shape:
        raise ValueError("range vectors differ in length")
    return float(np.sqrt(((r_hat - r_true) ** 2).sum()))


def position_error(true_xy, est: PositionEstimate | Sequence[float]) -> float:
    xy = est.xy_hat if isinstance(est, PositionEstimate) else est
    return math.hypot(xy[0] - true_xy[0], xy[1] - true_xy[1])


def average_error(e_los, e_nlos, theta, params: ChannelParams):
    """LoS-probability weighted error."""
    p = p_los(theta, params)
    return p * e_los + (1.0 - p) * e_nlos
