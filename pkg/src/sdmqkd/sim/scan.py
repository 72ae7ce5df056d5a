"""Pump-power sweeps of coincidence rate and CHSH value."""

from dataclasses import dataclass

import numpy as np

from ..source import SourceParams, bell_s_vs_power, make_sections, pair_rate, visibility_from_s
from .analytic import DEFAULT_WINDOW_PS, StateModel, analytic_link_rates, link_states

DIRECT_LINK = "direct"


@dataclass(frozen=True)
class ScanRow:
    profile: str
    power_mw: float
    link: str
    coincidence_rate: float
    true_rate: float
    s_param: float

    def to_dict(self):
        return {
            "profile": self.profile,
            "power_mw": self.power_mw,
            "link": self.link,
            "coincidence_rate": self.coincidence_rate,
            "true_rate": self.true_rate,
            "s_param": self.s_param,
        }


def scan_power(profile, powers, topology=None, window_ps=DEFAULT_WINDOW_PS):
    """Analytic coincidence rate and S at each pump power.

    Without a topology the sweep models the characterization bench: one
    section pair read out directly by two lossless detectors, so the
    coincidence rate is the profile's pair rate plus ``mu**2 * tau``
    accidentals. With a topology every direct link gets a row.

    Args:
        profile: :class:`TempProfile`.
        powers: pump powers in mW, non-empty.
        topology: optional network to evaluate instead of the bench.
        window_ps: coincidence window.

    Returns:
        list of :class:`ScanRow`, ordered by power then link.
    """
    powers = [float(p) for p in powers]
    if not powers:
        raise ValueError("powers must be non-empty")
    if any(p < 0 for p in powers):
        raise ValueError("pump powers must be non-negative")
    tau = window_ps * 1e-12
    layout = make_sections(1) if topology is None else topology.layout
    rows = []
    for p in powers:
        params = SourceParams(p, profile, layout)
        s = bell_s_vs_power(params)
        if topology is None:
            mu = pair_rate(params)
            rows.append(ScanRow(profile.name, p, DIRECT_LINK, mu + mu * mu * tau, mu, s))
            continue
        states = link_states(topology, StateModel(visibility_from_s(s)))
        for name, r in analytic_link_rates(topology, params, states, window_ps).items():
            rows.append(ScanRow(profile.name, p, name, r.total_coincidence, r.true_coincidence, s))
    return rows


def fit_slopes(rows, link=DIRECT_LINK):
    """Least-squares slopes of (coincidence in MHz, S) against power for one link.

    Returns:
        (coincidence slope in MHz/mW, S slope per mW).
    """
    sel = [r for r in rows if r.link == link]
    if len(sel) < 2:
        raise ValueError("need at least two powers to fit a slope")
    p = np.array([r.power_mw for r in sel])
    c = np.array([r.coincidence_rate for r in sel]) / 1e6
    s = np.array([r.s_param for r in sel])
    return float(np.polyfit(p, c, 1)[0]), float(np.polyfit(p, s, 1)[0])


__all__ = ["ScanRow", "scan_power", "fit_slopes", "DIRECT_LINK"]
