"""Circular waypoint paths and mission energy."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .channel import LinkGeometry
from .energy import AirframeParams, forward_flight_power, hover_power

KMH = 1000.0 / 3600.0


@dataclass(frozen=True)
class Trajectory:
    """Closed tour over ``n_waypoints`` equally spaced points on a circle.

    The home waypoint is waypoint 0; the UAV hovers ``hover_time`` seconds at
    every waypoint (``hover_times`` overrides per waypoint) and cruises the M
    chords at ``cruise_speed``.
    """

    radius_r: float = 120.0
    altitude_h: float = 200.0
    n_waypoints: int = 3
    hover_time: float = 5.0
    cruise_speed: float = 40.0 * KMH
    center: tuple[float, float] = (0.0, 0.0)
    phase: float = 0.0
    hover_times: tuple[float, ...] | None = None

    def __post_init__(self):
        if int(self.n_waypoints) != self.n_waypoints or self.n_waypoints < 3:
            raise ValueError("n_waypoints must be an integer >= 3")
        if self.radius_r <= 0:
            raise ValueError("radius_r must be > 0")
        if self.altitude_h <= 0:
            raise ValueError("altitude_h must be > 0")
        if self.hover_time < 0:
            raise ValueError("hover_time must be >= 0")
        if self.cruise_speed <= 0:
            raise ValueError("cruise_speed must be > 0")
        if self.hover_times is not None:
            if len(self.hover_times) != self.n_waypoints:
                raise ValueError("hover_times needs one entry per waypoint")
            if min(self.hover_times) < 0:
                raise ValueError("hover_times must be >= 0")

    @property
    def angular_step(self) -> float:
        return 2.0 * math.pi / self.n_waypoints

    def per_waypoint_hover(self) -> tuple[float, ...]:
        if self.hover_times is not None:
            return tuple(self.hover_times)
        return (self.hover_time,) * self.n_waypoints

    def with_(self, **changes) -> "Trajectory":
        return replace(self, **changes)


def waypoints(traj: Trajectory) -> np.ndarray:
    """(M, 3) array of waypoint positions in flight order."""
    k = np.arange(traj.n_waypoints)
    ang = traj.phase + k * traj.angular_step
    cx, cy = traj.center
    return np.column_stack(
        [
            cx + traj.radius_r * np.cos(ang),
            cy + traj.radius_r * np.sin(ang),
            np.full(traj.n_waypoints, float(traj.altitude_h)),
        ]
    )


def ground_projections(traj: Trajectory) -> np.ndarray:
    return waypoints(traj)[:, :2]


def leg_length(traj: Trajectory) -> float:
    return 2.0 * traj.radius_r * math.sin(traj.angular_step / 2.0)


def path_length(traj: Trajectory) -> float:
    return traj.n_waypoints * leg_length(traj)


def mission_energy(traj: Trajectory, airframe: AirframeParams) -> float:
    """Hover energy at every waypoint plus cruise energy over the M legs, in J."""
    p_h = hover_power(airframe)
    p_ff = forward_flight_power(traj.cruise_speed, airframe)
    hover = sum(t * p_h for t in traj.per_waypoint_hover())
    cruise = traj.n_waypoints * leg_length(traj) / traj.cruise_speed * p_ff
    return hover + cruise


def elevation_to(traj: Trajectory, waypoint_index: int, node: Sequence[float]) -> LinkGeometry:
    if not 0 <= waypoint_index < traj.n_waypoints:
        raise IndexError(f"waypoint index {waypoint_index} out of range")
    wx, wy, h = waypoints(traj)[waypoint_index]
    return LinkGeometry(r=math.hypot(node[0] - wx, node[1] - wy), h=float(h))
