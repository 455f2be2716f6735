"""Particle discretisations of transport with nonlinear mobility."""

from ._nlmob import (
    ConeViolation,
    ConfigError,
    DomainError,
    Measure1D,
    Mobility,
    NonConvergence,
    StepFailure,
    __version__,
    ftl_l1_error,
    geodesic,
    jko,
    run,
    sample,
    wasserstein,
)

__all__ = [
    "ConeViolation",
    "ConfigError",
    "DomainError",
    "Measure1D",
    "Mobility",
    "NonConvergence",
    "StepFailure",
    "__version__",
    "ftl_l1_error",
    "geodesic",
    "jko",
    "run",
    "sample",
    "wasserstein",
]
