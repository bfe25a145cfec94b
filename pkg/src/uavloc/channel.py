"""Elevation-dependent air-to-ground channel.

Angles are in radians everywhere. The LoS-probability and shadowing constants
(a_o = 47, b_o = 20, ...) only give non-degenerate curves in radians.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

C_LIGHT = 2.998e8  # m/s
HALF_PI = math.pi / 2


class LinkClass(enum.Enum):
    LOS = "los"
    NLOS = "nlos"


@dataclass(frozen=True)
class ChannelParams:
    f: float = 2e9
    a_o: float = 47.0
    b_o: float = 20.0
    a_los: float = 10.0
    b_los: float = 2.0
    a_nlos: float = 30.0
    b_nlos: float = 1.7
    mu_los: float = 1.0
    mu_nlos: float = 20.0
    c_offset: float = 20.0  # dBm, transmit power plus RSS transduction

    def __post_init__(self):
        if self.f <= 0:
            raise ValueError("f must be > 0")
        for name in ("a_o", "a_los", "a_nlos"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("b_o", "b_los", "b_nlos"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.a_nlos <= self.a_los:
            raise ValueError("a_nlos must exceed a_los")

    def mu(self, cls: LinkClass) -> float:
        return self.mu_los if cls is LinkClass.LOS else self.mu_nlos

    def shadow_consts(self, cls: LinkClass) -> tuple[float, float]:
        if cls is LinkClass.LOS:
            return self.a_los, self.b_los
        return self.a_nlos, self.b_nlos


@dataclass(frozen=True)
class LinkGeometry:
    """UAV-to-node link seen from the node: horizontal range r, altitude h."""

    r: float
    h: float

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("altitude h must be > 0")
        if self.r < 0:
            raise ValueError("horizontal range r must be >= 0")

    @property
    def d(self) -> float:
        return math.hypot(self.h, self.r)

    @property
    def theta(self) -> float:
        return math.atan2(self.h, self.r)


def _check_theta(theta):
    t = np.asarray(theta, dtype=float)
    if np.any(t < 0) or np.any(t > HALF_PI + 1e-12):
        raise ValueError("elevation angle must lie in [0, pi/2] radians")


def free_space_constant(params: ChannelParams) -> float:
    """K = 20 log10(4 pi f / c), in dB."""
    return 20.0 * math.log10(4.0 * math.pi * params.f / C_LIGHT)


def shadowing_sigma(theta, cls: LinkClass, params: ChannelParams):
    """Shadowing standard deviation in dB at elevation ``theta``."""
    _check_theta(theta)
    a, b = params.shadow_consts(cls)
    return a * np.exp(-b * np.asarray(theta, dtype=float))


def p_los(theta, params: ChannelParams):
    _check_theta(theta)
    return 1.0 / (1.0 + params.a_o * np.exp(-params.b_o * np.asarray(theta, dtype=float)))


def p_nlos(theta, params: ChannelParams):
    return 1.0 - p_los(theta, params)


def mean_path_loss(d, cls: LinkClass, params: ChannelParams):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be > 0")
    return 20.0 * np.log10(d) + free_space_constant(params) + params.mu(cls)


def mean_rss(d, cls: LinkClass, params: ChannelParams):
    """Noiseless received power in dBm."""
    return params.c_offset - mean_path_loss(d, cls, params)


def sample_rss(
    link: LinkGeometry,
    cls: LinkClass,
    n_samples: int,
    rng: np.random.Generator,
    params: ChannelParams,
    size=None,
    method: str = "aggregate",
    sigma: float | None = None,
):
    """Time-averaged RSS over ``n_samples`` i.i.d. shadowing draws.

    ``method="per_sample"`` draws every sample and averages; ``"aggregate"``
    draws the average directly with variance sigma^2 / n. Both have the same
    distribution. ``sigma`` overrides the elevation-dependent shadowing std.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if sigma is None:
        sigma = float(shadowing_sigma(link.theta, cls, params))
    base = params.c_offset - 20.0 * math.log10(link.d) - free_space_constant(params)
    mu = params.mu(cls)
    shape = () if size is None else (size if isinstance(size, tuple) else (size,))
    if method == "aggregate":
        psi = mu + sigma / math.sqrt(n_samples) * rng.standard_normal(shape)
    elif method == "per_sample":
        psi = (mu + sigma * rng.standard_normal(shape + (n_samples,))).mean(axis=-1)
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    out = base - psi
    return float(out) if size is None else out
