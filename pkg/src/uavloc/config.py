"""Plain-text ``key = value`` run configuration.

Keys may sit under ``[channel]``, ``[airframe]``, ``[trajectory]``,
``[scenario]``, ``[coverage]`` and ``[run]`` headers, or bare at the top of
the file; every key name is unique across sections so bare keys are
resolved by name. Anything missing falls back to the dataclass defaults.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

from .channel import ChannelParams
from .crlb import CoverageSpec
from .energy import AirframeParams
from .experiment import LINK_MODES, Scenario
from .trajectory import Trajectory


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunSettings:
    """Output and comparison settings.

    ``m_series`` and ``link_mode_series`` are comma-separated lists; a sweep
    runs once per entry and writes one CSV per series. ``grid`` is
    ``min:max:step`` for the swept axis of a subcommand (empty: its default).
    """

    output_path: str = "out.csv"
    energy_budget: float = 100e3  # J
    m_series: str = ""
    link_mode_series: str = ""
    grid: str = ""

    def __post_init__(self):
        if self.energy_budget <= 0:
            raise ValueError("energy_budget must be > 0")
        for m in self.waypoint_counts():
            if m < 3:
                raise ValueError("m_series entries must be >= 3")
        for mode in self.link_modes():
            if mode not in LINK_MODES:
                raise ValueError(f"link_mode_series entries must be in {LINK_MODES}")
        g = self.grid_bounds()
        if g is not None and (g[2] <= 0 or g[1] < g[0]):
            raise ValueError("grid needs min <= max and step > 0")

    def grid_bounds(self) -> tuple[float, float, float] | None:
        if not self.grid.strip():
            return None
        parts = self.grid.split(":")
        if len(parts) != 3:
            raise ValueError("grid must look like min:max:step")
        lo, hi, step = (float(x) for x in parts)
        return lo, hi, step

    def waypoint_counts(self) -> list[int]:
        return [int(x) for x in self.m_series.split(",") if x.strip()]

    def link_modes(self) -> list[str]:
        return [x.strip() for x in self.link_mode_series.split(",") if x.strip()]


@dataclass(frozen=True)
class RunConfig:
    channel: ChannelParams = field(default_factory=ChannelParams)
    airframe: AirframeParams = field(default_factory=AirframeParams)
    trajectory: Trajectory = field(default_factory=Trajectory)
    scenario: Scenario = field(default_factory=Scenario)
    coverage: CoverageSpec = field(default_factory=CoverageSpec)
    run: RunSettings = field(default_factory=RunSettings)

    @property
    def output_path(self) -> str:
        return self.run.output_path


SECTIONS = {
    "channel": ChannelParams,
    "airframe": AirframeParams,
    "trajectory": Trajectory,
    "scenario": Scenario,
    "coverage": CoverageSpec,
    "run": RunSettings,
}
# not settable from a config document
_SKIP = {("trajectory", "hover_times"), ("trajectory", "center")}

_ROOT = "__root__"


def _keys():
    table = {}
    for sec, cls in SECTIONS.items():
        for f in dataclasses.fields(cls):
            if (sec, f.name) not in _SKIP:
                table[f.name] = sec
    return table


KEY_SECTION = _keys()


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_nodes(text: str):
    pts = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        x, y = (float(v) for v in chunk.split(","))
        pts.append((x, y))
    if not pts:
        raise ValueError("nodes needs at least one 'x, y' pair")
    return tuple(pts)


def _coerce(cls, name: str, text: str):
    default = next(f for f in dataclasses.fields(cls) if f.name == name)
    value = default.default
    if name == "nodes":
        return _parse_nodes(text)
    if text.strip().lower() == "none" and value is None:
        return None
    if isinstance(value, bool):
        return _parse_bool(text)
    if isinstance(value, int):
        f = float(text)
        if f != int(f):
            raise ValueError(f"expected an integer, got {text!r}")
        return int(f)
    if isinstance(value, float) or value is None:
        return float(text)
    return text.strip()


def parse_config(text: str) -> RunConfig:
    """Parse a configuration document into a fully defaulted :class:`RunConfig`."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                       empty_lines_in_values=False)
    parser.optionxform = str
    try:
        parser.read_string(f"[{_ROOT}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    values: dict[str, dict] = {sec: {} for sec in SECTIONS}
    for sec in parser.sections():
        if sec != _ROOT and sec not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in parser.items(sec):
            owner = KEY_SECTION.get(key)
            if owner is None or (sec != _ROOT and owner != sec):
                raise ConfigError(f"unknown key {key!r}" + ("" if sec == _ROOT else f" in [{sec}]"))
            if key in values[owner]:
                raise ConfigError(f"duplicate key {key!r}")
            try:
                values[owner][key] = _coerce(SECTIONS[owner], key, raw)
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from exc
    return build_config(values)


def build_config(values: dict[str, dict]) -> RunConfig:
    built = {}
    for sec, cls in SECTIONS.items():
        try:
            built[sec] = cls(**values.get(sec, {}))
        except ValueError as exc:
            raise ConfigError(f"[{sec}] {exc}") from exc
    return RunConfig(**built)


def override(config: RunConfig, section: str, **changes) -> RunConfig:
    """Return a copy of ``config`` with fields of one section replaced."""
    current = getattr(config, section)
    try:
        updated = dataclasses.replace(current, **changes)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from exc
    return dataclasses.replace(config, **{section: updated})
