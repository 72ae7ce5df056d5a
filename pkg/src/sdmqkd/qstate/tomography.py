"""Two-qubit polarization tomography by linear inversion.

Counts are modelled as ``n_k = Tr(R M_k)`` with ``R`` an unnormalised density
matrix, so the overall brightness does not need to be known. The estimate is
then mapped to the nearest (Frobenius) unit-trace PSD matrix by projecting its
eigenvalues onto the probability simplex.
"""

import itertools

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..exceptions import IllPosedReconstructionError, NoDataError
from .states import (
    AnalyzerSetting,
    BellKind,
    TwoQubitState,
    fidelity,
    projector,
    state_fidelity,
)

_PAULI = [
    np.eye(2, dtype=np.complex128),
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
]
_PAULI2 = [np.kron(a, b) for a, b in itertools.product(_PAULI, repeat=2)]

# single-qubit measurement bases as (angle, qwp) of the transmitted port
BASES = {"Z": (0.0, False), "X": (45.0, False), "Y": (45.0, True)}

# (angle, qwp) polarizer states used by the 16-setting scheme
_POL = {"H": (0.0, False), "V": (90.0, False), "D": (45.0, False), "R": (45.0, True), "L": (135.0, True)}
_JAMES16 = "HH HV VV VH RH RV DV DH DR DD RD HD VD VL HL RL".split()


def pauli_settings():
    """36 projector settings: 9 basis pairs, each with its four PBS outcomes."""
    settings = []
    for ba, bb in itertools.product("ZXY", repeat=2):
        base = AnalyzerSetting(BASES[ba][0], BASES[bb][0], BASES[ba][1], BASES[bb][1])
        settings += [base, base.crossed(arm_b=True), base.crossed(arm_a=True), base.crossed(True, True)]
    return settings


def basis_pair_settings():
    """The nine transmit-port setting pairs behind :func:`pauli_settings`."""
    return pauli_settings()[::4]


def james16_settings():
    """Minimal 16 single-port settings (HH, HV, ..., RL)."""
    out = []
    for name in _JAMES16:
        (ta, qa), (tb, qb) = _POL[name[0]], _POL[name[1]]
        out.append(AnalyzerSetting(ta, tb, qa, qb))
    return out


def expected_counts(state, settings, total):
    """Noiseless counts proportional to the Born probabilities, summing to ``total``."""
    p = np.array([np.real(np.trace(state.rho @ projector(s))) for s in settings])
    p = np.clip(p, 0.0, None)
    return total * p / p.sum()


def poisson_counts(state, settings, total, rng):
    return rng.poisson(expected_counts(state, settings, total))


def _design_matrix(settings):
    rows = []
    for s in settings:
        m = projector(s)
        rows.append([np.real(np.trace(p @ m)) / 4.0 for p in _PAULI2])
    return np.array(rows)


def project_to_simplex(values):
    """Euclidean projection of a real vector onto the probability simplex."""
    v = np.asarray(values, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = ind[u - css / ind > 0][-1]
    theta = css[rho - 1] / rho
    return np.clip(v - theta, 0.0, None)


def nearest_density_matrix(matrix):
    """Closest unit-trace PSD matrix in Frobenius norm."""
    h = (np.asarray(matrix) + np.asarray(matrix).conj().T) / 2.0
    w, v = np.linalg.eigh(h)
    w = project_to_simplex(w)
    rho = (v * w) @ v.conj().T
    rho = (rho + rho.conj().T) / 2.0
    return rho / np.trace(rho).real


def linear_inversion(settings, counts):
    """Unprojected linear-inversion estimate (Hermitian, unit trace, maybe not PSD)."""
    counts = np.asarray(counts, dtype=float)
    if len(settings) != counts.size:
        raise ValueError("settings and counts differ in length")
    if counts.sum() <= 0:
        raise NoDataError("total counts are zero")
    a = _design_matrix(settings)
    if np.linalg.matrix_rank(a, tol=1e-9) < 16:
        raise IllPosedReconstructionError(
            "measurement settings do not span the two-qubit operator space"
        )
    r, *_ = np.linalg.lstsq(a, counts, rcond=None)
    raw = sum(c * p for c, p in zip(r, _PAULI2)) / 4.0
    trace = np.trace(raw).real
    if trace <= 0:
        raise NoDataError("reconstructed normalisation is not positive")
    return raw / trace


def tomography_reconstruct(records):
    """Reconstruct a state from ``(AnalyzerSetting, count)`` records."""
    records = list(records)
    settings = [s for s, _ in records]
    counts = [c for _, c in records]
    return TwoQubitState(nearest_density_matrix(linear_inversion(settings, counts)))


class StateTomography(BaseEstimator):
    """Estimator wrapper around :func:`tomography_reconstruct`.

    Parameters
    ----------
    project_psd : bool
        Map the linear-inversion estimate onto the physical state space.
        Disable only to inspect the raw estimate; ``state_`` is then not set.

    Attributes
    ----------
    raw_matrix_ : ndarray of shape (4, 4)
    state_ : TwoQubitState
    """

    def __init__(self, project_psd=True):
        self.project_psd = project_psd

    def fit(self, settings, counts):
        settings = list(settings)
        self.raw_matrix_ = linear_inversion(settings, counts)
        if self.project_psd:
            self.state_ = TwoQubitState(nearest_density_matrix(self.raw_matrix_))
        self.n_settings_ = len(settings)
        return self

    def score(self, target):
        """Fidelity of the fitted state to a Bell kind or to another state."""
        check_is_fitted(self, "state_")
        if isinstance(target, TwoQubitState):
            return state_fidelity(self.state_, target)
        return fidelity(self.state_, BellKind.parse(target))
