"""Hybrid energy beamforming under analog phase-shifter impairments.

Channel estimation, precoding, nonlinear harvesting and pilot allocation for
a multi-antenna RF energy transmitter with one RF chain.
"""
from .sysmodel import (
    InvalidParameter,
    NumericError,
    ScheduleInfeasible,
    SystemParams,
    dbm_to_watts,
    default_params,
    large_scale_beta,
    watts_to_dbm,
)

__all__ = [
    "InvalidParameter",
    "NumericError",
    "ScheduleInfeasible",
    "SystemParams",
    "dbm_to_watts",
    "default_params",
    "large_scale_beta",
    "watts_to_dbm",
]
__version__ = "0.1.0"
