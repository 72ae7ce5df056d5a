"""Small input checks shared by the estimators and the functional API."""

import numbers

import numpy as np

from .exceptions import ContractViolationError, DomainError


def check_unit_interval(value, name, *, open_low=False):
    """Return ``value`` as float after checking it lies in [0, 1] (or (0, 1])."""
    if not isinstance(value, numbers.Real):
        raise DomainError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    low_ok = value > 0.0 if open_low else value >= 0.0
    if not (low_ok and value <= 1.0) or np.isnan(value):
        bound = "(0, 1]" if open_low else "[0, 1]"
        raise DomainError(f"{name} must lie in {bound}, got {value!r}")
    return value


def check_non_negative(value, name):
    value = float(value)
    if not value >= 0.0:
        raise DomainError(f"{name} must be >= 0, got {value!r}")
    return value


def check_positive(value, name):
    value = float(value)
    if not value > 0.0:
        raise DomainError(f"{name} must be > 0, got {value!r}")
    return value


def check_tags(tags, name="tags"):
    """Coerce a timestamp sequence to a contiguous int64 array and check ordering.

    Non-decreasing order is required; the coincidence counter relies on it.
    """
    arr = np.ascontiguousarray(np.asarray(tags, dtype=np.int64))
    if arr.ndim != 1:
        raise ContractViolationError(f"{name} must be one-dimensional")
    if arr.size > 1 and np.any(np.diff(arr) < 0):
        raise ContractViolationError(f"{name} must be sorted ascending")
    return arr


def check_density_matrix(rho, *, atol_herm=1e-12, atol_trace=1e-12, atol_psd=1e-10):
    """Validate a 4x4 two-qubit density matrix and return it as complex128."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (4, 4):
        raise DomainError(f"density matrix must be 4x4, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, rtol=0.0, atol=atol_herm):
        raise DomainError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > atol_trace:
        raise DomainError(f"density matrix trace is {np.trace(rho).real!r}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -atol_psd:
        raise DomainError("density matrix is not positive semidefinite")
    return rho
