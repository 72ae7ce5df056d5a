"""Two-qubit polarization states and their measurement statistics.

Basis order throughout is (HH, HV, VH, VV). Analyzer angles are polarization
angles in degrees; a half-wave plate rotates polarization by twice its own
angle, so HWP settings are half of the values used here.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .._validation import check_density_matrix, check_unit_interval
from ..exceptions import UndefinedVisibilityError

SQRT2 = np.sqrt(2.0)
TSIRELSON = 2.0 * SQRT2

# outcome order for a setting pair: (transmit, transmit), (T, R), (R, T), (R, R)
OUTCOMES = ("TT", "TR", "RT", "RR")
_CORRELATION_SIGNS = np.array([1.0, -1.0, -1.0, 1.0])


class BellKind(str, Enum):
    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"

    @property
    def sign(self):
        return 1.0 if self is BellKind.PHI_PLUS else -1.0

    def flipped(self):
        return BellKind.PHI_MINUS if self is BellKind.PHI_PLUS else BellKind.PHI_PLUS

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).replace("_", "").replace("-", "").replace("+", "plus").lower()
        for kind in cls:
            if kind.value.lower() == key or kind.name.replace("_", "").lower() == key:
                return kind
        raise ValueError(f"unknown Bell state {value!r}")


def _normalize_angle(theta):
    theta = float(theta) % 180.0
    # 179.99999999 -> 180.0 after the modulo on some inputs
    return 0.0 if np.isclose(theta, 180.0) else theta


@dataclass(frozen=True)
class AnalyzerSetting:
    """Analyzer angles for the two arms of a link.

    ``qwp_a``/``qwp_b`` insert a quarter-wave plate (fast axis horizontal)
    before the polarizer, so the transmitted state becomes
    ``cos(t)|H> + i sin(t)|V>``; at 45 degrees this is right-circular.
    """

    theta_a: float
    theta_b: float
    qwp_a: bool = False
    qwp_b: bool = False

    def __post_init__(self):
        object.__setattr__(self, "theta_a", _normalize_angle(self.theta_a))
        object.__setattr__(self, "theta_b", _normalize_angle(self.theta_b))
        object.__setattr__(self, "qwp_a", bool(self.qwp_a))
        object.__setattr__(self, "qwp_b", bool(self.qwp_b))

    def crossed(self, arm_a=False, arm_b=False):
        """Setting seen by the reflected PBS port(s): +90 degrees on the chosen arms."""
        return AnalyzerSetting(
            self.theta_a + (90.0 if arm_a else 0.0),
            self.theta_b + (90.0 if arm_b else 0.0),
            self.qwp_a,
            self.qwp_b,
        )

    def swapped(self):
        return AnalyzerSetting(self.theta_b, self.theta_a, self.qwp_b, self.qwp_a)

    def key(self):
        return (round(self.theta_a, 9), round(self.theta_b, 9), self.qwp_a, self.qwp_b)


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """Immutable, validated 4x4 density matrix."""

    rho: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = check_density_matrix(self.rho).copy()
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def purity(self):
        return float(np.real(np.trace(self.rho @ self.rho)))

    def reduced(self, arm):
        """Single-qubit reduced density matrix of arm ``"a"`` or ``"b"``."""
        r = self.rho.reshape(2, 2, 2, 2)
        if arm == "a":
            return np.einsum("ijkj->ik", r)
        if arm == "b":
            return np.einsum("jijk->ik", r)
        raise ValueError("arm must be 'a' or 'b'")

    def __eq__(self, other):
        if not isinstance(other, TwoQubitState):
            return NotImplemented
        return bool(np.array_equal(self.rho, other.rho))

    def __hash__(self):
        return hash(self.rho.tobytes())


def bell_vector(kind):
    kind = BellKind.parse(kind)
    return np.array([1.0, 0.0, 0.0, kind.sign], dtype=np.complex128) / SQRT2


def bell_state(kind):
    """Pure density matrix of ``(|HH> +/- |VV>)/sqrt(2)``."""
    psi = bell_vector(kind)
    return TwoQubitState(np.outer(psi, psi.conj()))


def werner(kind, v, *, dephasing=0.0):
    """Bell state mixed with white noise, ``v |phi><phi| + (1 - v) I/4``.

    Args:
        kind: target Bell state.
        v: visibility weight in [0, 1].
        dephasing: extra fractional decay of the HH-VV coherence only, in
            [0, 1]. Zero gives the plain Werner state; non-zero values lower
            the diagonal-basis visibility while leaving the HV basis intact.
    """
    v = check_unit_interval(v, "v")
    dephasing = check_unit_interval(dephasing, "dephasing")
    kind = BellKind.parse(kind)
    rho = v * bell_state(kind).rho + (1.0 - v) * np.eye(4) / 4.0
    rho = np.array(rho)
    rho[0, 3] *= 1.0 - dephasing
    rho[3, 0] *= 1.0 - dephasing
    return TwoQubitState(rho)


def maximally_mixed():
    return TwoQubitState(np.eye(4, dtype=np.complex128) / 4.0)


def analyzer_vector(theta_deg, qwp=False):
    t = np.deg2rad(theta_deg)
    return np.array([np.cos(t), (1j if qwp else 1.0) * np.sin(t)], dtype=np.complex128)


def projector(setting):
    """Joint transmit-transmit projector for a setting pair."""
    a = analyzer_vector(setting.theta_a, setting.qwp_a)
    b = analyzer_vector(setting.theta_b, setting.qwp_b)
    ab = np.kron(a, b)
    return np.outer(ab, ab.conj())


def coincidence_probability(state, setting):
    """Born-rule probability that both photons pass their analyzers."""
    p = np.real(np.trace(state.rho @ projector(setting)))
    return float(min(max(p, 0.0), 1.0))


def outcome_probabilities(state, setting):
    """Probabilities of the four PBS outcome pairs, ordered as :data:`OUTCOMES`."""
    p = np.array(
        [
            coincidence_probability(state, setting),
            coincidence_probability(state, setting.crossed(arm_b=True)),
            coincidence_probability(state, setting.crossed(arm_a=True)),
            coincidence_probability(state, setting.crossed(arm_a=True, arm_b=True)),
        ]
    )
    return p / p.sum()


def marginal_transmit_probability(state, arm, theta_deg, qwp=False):
    vec = analyzer_vector(theta_deg, qwp)
    p = np.real(vec.conj() @ state.reduced(arm) @ vec)
    return float(min(max(p, 0.0), 1.0))


def correlation(outcomes):
    """Correlation ``E`` from four outcome counts or probabilities."""
    outcomes = np.asarray(outcomes, dtype=float)
    total = outcomes.sum()
    if total <= 0:
        raise UndefinedVisibilityError("no coincidences at this setting")
    return float(_CORRELATION_SIGNS @ outcomes / total)


def visibility_from_outcomes(outcomes):
    """``(max - min)/(max + min)`` of the co and crossed outcome sums."""
    tt, tr, rt, rr = np.asarray(outcomes, dtype=float)
    co, cross = tt + rr, tr + rt
    hi, lo = max(co, cross), min(co, cross)
    if hi + lo <= 0:
        raise UndefinedVisibilityError("co- and cross-setting coincidences are both zero")
    return float((hi - lo) / (hi + lo))


BASIS_ANGLE = {"HV": 0.0, "DA": 45.0}


def visibility(state, basis):
    """Two-photon interference visibility in the ``"HV"`` or ``"DA"`` basis."""
    try:
        theta = BASIS_ANGLE[basis]
    except KeyError:
        raise ValueError(f"basis must be 'HV' or 'DA', got {basis!r}") from None
    p = outcome_probabilities(state, AnalyzerSetting(theta, theta))
    return visibility_from_outcomes(p)


def infer_kind(state):
    """Bell kind the state is aligned with, from the sign of its HH-VV coherence."""
    return BellKind.PHI_PLUS if state.rho[0, 3].real >= 0 else BellKind.PHI_MINUS


def chsh_settings(kind):
    """The four canonical setting pairs ``(a,b), (a,b'), (a',b), (a',b')``."""
    kind = BellKind.parse(kind)
    a, a2 = 0.0, 45.0
    b, b2 = 22.5 * kind.sign, 67.5 * kind.sign
    return [
        AnalyzerSetting(a, b),
        AnalyzerSetting(a, b2),
        AnalyzerSetting(a2, b),
        AnalyzerSetting(a2, b2),
    ]


def chsh_from_correlations(e_ab, e_ab2, e_a2b, e_a2b2):
    return e_ab - e_ab2 + e_a2b + e_a2b2


def chsh(state, kind=None):
    """CHSH parameter at fixed canonical angles (no per-state optimisation).

    ``kind`` selects the angle family; by default it is inferred from the
    state so that both Bell states reach ``2*sqrt(2)``.
    """
    kind = infer_kind(state) if kind is None else BellKind.parse(kind)
    es = [correlation(outcome_probabilities(state, s)) for s in chsh_settings(kind)]
    return float(chsh_from_correlations(*es))


def fidelity(state, target):
    """Fidelity ``<phi|rho|phi>`` to a pure Bell target."""
    psi = bell_vector(target)
    return float(np.real(psi.conj() @ state.rho @ psi))


def _psd_sqrt(rho):
    w, v = np.linalg.eigh(rho)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def state_fidelity(rho, sigma):
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2`` of two states."""
    rho = rho.rho if isinstance(rho, TwoQubitState) else np.asarray(rho)
    sigma = sigma.rho if isinstance(sigma, TwoQubitState) else np.asarray(sigma)
    s = _psd_sqrt(rho)
    m = s @ sigma @ s
    ev = np.linalg.eigvalsh((m + m.conj().T) / 2.0)
    return float(min(np.sum(np.sqrt(np.clip(ev, 0.0, None))) ** 2, 1.0))


def random_state(rng, rank=None):
    """Random two-qubit density matrix (Ginibre ensemble)."""
    rank = 4 if rank is None else rank
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2.0
    return TwoQubitState(rho / np.trace(rho).real)
