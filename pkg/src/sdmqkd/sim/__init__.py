"""Analytic rate oracle, Monte Carlo event engine and time-tag I/O."""

from .analytic import (
    BASIS_LABELS,
    DEFAULT_WINDOW_PS,
    LinkRates,
    StateModel,
    analytic_link_rates,
    calibrate_visibilities,
    link_states,
    measured_visibility,
    outcome_rates,
    source_rates,
    true_coincidence_rate,
    user_singles,
)
from .montecarlo import FixedSetting, RandomBasis, SimConfig, config_hash, setting_from_dict, simulate
from .scan import DIRECT_LINK, ScanRow, fit_slopes, scan_power
from .timetags import (
    PORTS_PER_USER,
    TimeTagSet,
    channel_id,
    channel_owner,
    read_binary,
    read_csv,
    read_tags,
    write_binary,
    write_csv,
    write_tags,
)

__all__ = [name for name in dir() if not name.startswith("_")]
