"""Lower confidence bounds on the number of units affected by a binary treatment."""

from ._core import (
    ConfigError,
    DegenerateArmError,
    IfboundError,
    PositivityError,
    ResourceError,
    analyze,
    analyze_files,
    critical_value,
    simulate,
    variance_floor,
)

__all__ = [
    "ConfigError",
    "DegenerateArmError",
    "IfboundError",
    "PositivityError",
    "ResourceError",
    "analyze",
    "analyze_files",
    "critical_value",
    "simulate",
    "variance_floor",
]
