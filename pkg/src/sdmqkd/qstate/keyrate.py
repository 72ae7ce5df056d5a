"""Binary entropy, QBER and the two-basis secure-key-rate estimate."""

from dataclasses import dataclass

import numpy as np

from .._validation import check_non_negative, check_unit_interval
from ..exceptions import DomainError

DEFAULT_EC_INEFFICIENCY = 1.1


def binary_entropy(p):
    """Shannon entropy in bits of a Bernoulli(p) variable.

    Accepts scalars or arrays; ``H(0) = H(1) = 0``.
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError(f"probability must lie in [0, 1], got {p!r}")
    inner = (arr > 0.0) & (arr < 1.0)
    safe = np.where(inner, arr, 0.5)
    h = np.where(inner, -safe * np.log2(safe) - (1.0 - safe) * np.log2(1.0 - safe), 0.0)
    return float(h) if h.ndim == 0 else h


def qber_from_visibility(v):
    return (1.0 - check_unit_interval(v, "visibility")) / 2.0


@dataclass(frozen=True)
class KeyRateInputs:
    """Coincidence totals and visibilities in the two bases.

    ``c_hv``/``c_da`` can be counts or rates; the key rate comes out in the
    same unit. ``m`` is the error-correction inefficiency.
    """

    c_hv: float
    c_da: float
    v_hv: float
    v_da: float
    m: float = DEFAULT_EC_INEFFICIENCY

    def __post_init__(self):
        check_non_negative(self.c_hv, "c_hv")
        check_non_negative(self.c_da, "c_da")
        check_unit_interval(self.v_hv, "v_hv")
        check_unit_interval(self.v_da, "v_da")
        check_non_negative(self.m, "m")


def secure_key_rate(inputs):
    r"""Asymptotic secure key rate summed over the HV and DA bases.

    .. math::

        R = \tfrac12 C_{DA}[1 - (1+m) H(\tfrac{1-V_{DA}}{2})]
          + \tfrac12 C_{HV}[1 - (1+m) H(\tfrac{1-V_{HV}}{2})]

    The result is not clamped; it goes negative when the error rate is too
    high for the assumed error-correction cost.
    """
    bracket_da = 1.0 - (1.0 + inputs.m) * binary_entropy(qber_from_visibility(inputs.v_da))
    bracket_hv = 1.0 - (1.0 + inputs.m) * binary_entropy(qber_from_visibility(inputs.v_hv))
    return 0.5 * inputs.c_da * bracket_da + 0.5 * inputs.c_hv * bracket_hv
