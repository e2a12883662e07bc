"""Uplink RSMA, NOMA and OMA rates in Poisson cellular networks.

The package combines a network simulator (:mod:`~uplink_rsma.spatial`,
:mod:`~uplink_rsma.sinr`, :mod:`~uplink_rsma.montecarlo`) with numerical
evaluation of the analytical rate expressions
(:mod:`~uplink_rsma.analytic`, :mod:`~uplink_rsma.quadrature`).
"""

from .exceptions import (
    ConfigError,
    InfeasibleMomentsError,
    InvalidParameterError,
    NonConvergenceError,
    NonFiniteIntegrandError,
)
from .sinr import SystemConfig
from .mcs import McsScheme, PRESETS, preset, rate_map

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "InfeasibleMomentsError",
    "InvalidParameterError",
    "NonConvergenceError",
    "NonFiniteIntegrandError",
    "SystemConfig",
    "McsScheme",
    "PRESETS",
    "preset",
    "rate_map",
]
