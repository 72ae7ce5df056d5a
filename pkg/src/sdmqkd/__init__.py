"""Simulation and analysis of sectioned-ring entanglement QKD networks.

Subpackages:
    qstate: two-qubit states, CHSH, tomography and key-rate formulas.
    topology: splitter wiring, link derivation and Bell-state parity.
    sim: analytic rate oracle, Monte Carlo time-tag engine, power scans.
    analysis: coincidence counting, link metrics and network reports.
"""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    ConfigError,
    ContractViolationError,
    DataParseError,
    DomainError,
    IncompleteReportError,
    InsufficientDataError,
    SdmQkdError,
)

__all__ = [
    "__version__",
    "ConfigError",
    "ContractViolationError",
    "DataParseError",
    "DomainError",
    "IncompleteReportError",
    "InsufficientDataError",
    "SdmQkdError",
]
