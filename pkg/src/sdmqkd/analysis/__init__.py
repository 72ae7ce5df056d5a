"""Coincidence counting, link metrics and network reports."""

from .coincidence import CoincidenceHistogram, brute_force_coincidences, count_coincidences, delay_scan
from .metrics import (
    DA_SETTING,
    DEFAULT_BACKGROUND_DELAY_PS,
    HV_SETTING,
    SIFTED_CONVENTIONS,
    LinkAnalyzer,
    LinkMetrics,
    NetworkReport,
    SettingRecord,
    estimate_link_metrics,
    merge_records,
    network_report,
    records_from_tags,
    run_tomography,
    same_splitter_rates,
    tomography_projector_counts,
    zero_link_metrics,
)

__all__ = [name for name in dir() if not name.startswith("_")]
