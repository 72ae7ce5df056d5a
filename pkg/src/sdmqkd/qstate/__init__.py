"""Two-qubit state algebra, key-rate estimate and tomography."""

from .keyrate import (
    DEFAULT_EC_INEFFICIENCY,
    KeyRateInputs,
    binary_entropy,
    qber_from_visibility,
    secure_key_rate,
)
from .states import (
    OUTCOMES,
    TSIRELSON,
    AnalyzerSetting,
    BellKind,
    TwoQubitState,
    bell_state,
    chsh,
    chsh_from_correlations,
    chsh_settings,
    coincidence_probability,
    correlation,
    fidelity,
    infer_kind,
    marginal_transmit_probability,
    maximally_mixed,
    outcome_probabilities,
    projector,
    random_state,
    state_fidelity,
    visibility,
    visibility_from_outcomes,
    werner,
)
from .tomography import (
    StateTomography,
    basis_pair_settings,
    expected_counts,
    james16_settings,
    linear_inversion,
    nearest_density_matrix,
    pauli_settings,
    poisson_counts,
    tomography_reconstruct,
)

__all__ = [name for name in dir() if not name.startswith("_")]
