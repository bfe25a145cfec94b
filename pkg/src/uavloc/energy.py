"""Rotary-wing propulsion power: induced, parasitic and blade-profile terms."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy.optimize import minimize_scalar


@dataclass(frozen=True)
class AirframeParams:
    mass_kg: float = 5.0
    g: float = 9.81
    rho: float = 1.225
    c_ds: float = 0.4
    a_d: float = 0.25
    k_o: float = 570.0
    v_tip: float = 100.0

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"{f.name} must be > 0")

    @property
    def weight(self) -> float:
        return self.mass_kg * self.g


@dataclass(frozen=True)
class PowerBreakdown:
    induced: float
    parasitic: float
    blade: float

    @property
    def total(self) -> float:
        return self.induced + self.parasitic + self.blade


def induced_velocity(v, params: AirframeParams):
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("airspeed must be >= 0")
    w = params.weight / (params.rho * params.a_d)
    v2 = v * v
    # -v^2 + sqrt(v^4 + w^2) cancels badly at large v; use the conjugate form
    inner = w * w / (v2 + np.sqrt(v2 * v2 + w * w))
    return np.sqrt(inner / 2.0)


def power_breakdown(v: float, params: AirframeParams) -> PowerBreakdown:
    return PowerBreakdown(
        induced=float(params.weight * induced_velocity(v, params)),
        parasitic=0.5 * params.rho * v**3 * params.c_ds,
        blade=params.k_o * (1.0 + 3.0 * v**2 / params.v_tip**2),
    )


def forward_flight_power(v: float, params: AirframeParams) -> float:
    return power_breakdown(v, params).total


def hover_power(params: AirframeParams) -> float:
    return params.k_o + math.sqrt(params.weight**3 / (2.0 * params.rho * params.a_d))


def optimal_cruise_speed(params: AirframeParams, v_max: float = 100.0) -> float:
    """Airspeed minimising forward-flight power (bounded search to 1e-3 m/s)."""
    res = minimize_scalar(
        lambda v: forward_flight_power(v, params),
        bounds=(0.0, v_max),
        method="bounded",
        options={"xatol": 1e-4},
    )
    return float(res.x)


def max_range_speed(params: AirframeParams, v_max: float = 100.0) -> float:
    """Airspeed minimising energy per metre flown, argmin P_ff(v) / v.

    This, not :func:`optimal_cruise_speed`, minimises the cruise energy of a
    fixed-length leg.
    """
    res = minimize_scalar(
        lambda v: forward_flight_power(v, params) / v,
        bounds=(1e-3, v_max),
        method="bounded",
        options={"xatol": 1e-4},
    )
    return float(res.x)
