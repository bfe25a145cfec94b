"""Single-UAV anchor localization: channel, energy, estimation, coverage and trajectory design."""

from .channel import ChannelParams, LinkClass, LinkGeometry
from .crlb import CoverageResult, CoverageSpec
from .energy import AirframeParams
from .estimation import PositionEstimate, RangeObservation
from .experiment import DesignPoint, Scenario, SweepResult
from .trajectory import Trajectory

__all__ = [
    "AirframeParams",
    "ChannelParams",
    "CoverageResult",
    "CoverageSpec",
    "DesignPoint",
    "LinkClass",
    "LinkGeometry",
    "PositionEstimate",
    "RangeObservation",
    "Scenario",
    "SweepResult",
    "Trajectory",
]
