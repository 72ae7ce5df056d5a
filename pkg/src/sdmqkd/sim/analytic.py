"""Closed-form rate model for a topology; the oracle the Monte Carlo is checked against."""

from dataclasses import dataclass, field

import numpy as np

from ..qstate.states import AnalyzerSetting, BellKind, outcome_probabilities, werner
from ..source import pair_rate

DEFAULT_WINDOW_PS = 2000.0
BASIS_LABELS = {
    "HV": (AnalyzerSetting(0.0, 0.0), ("HH", "HV", "VH", "VV")),
    "DA": (AnalyzerSetting(45.0, 45.0), ("DD", "DA", "AD", "AA")),
}


@dataclass(frozen=True)
class StateModel:
    """Per-link polarization state: Werner with optional extra dephasing."""

    visibility: float = 1.0
    dephasing: float = 0.0

    def state(self, kind):
        return werner(kind, self.visibility, dephasing=self.dephasing)


def link_states(topology, model=None, overrides=None):
    """Map link name -> :class:`TwoQubitState` using each link's Bell kind."""
    model = StateModel() if model is None else model
    overrides = dict(overrides or {})
    out = {}
    for lk in topology.links:
        kind = lk.bell if lk.bell is not None else BellKind.PHI_MINUS
        m = overrides.get(lk.name, model)
        out[lk.name] = m.state(kind) if isinstance(m, StateModel) else m
    return out


@dataclass(frozen=True)
class LinkRates:
    singles_a: float
    singles_b: float
    true_coincidence: float
    accidental: float
    per_basis: dict = field(default_factory=dict)

    @property
    def total_coincidence(self):
        return self.true_coincidence + self.accidental


def source_rates(topology, params):
    """Pair rate of every source, pairs/s."""
    mu = pair_rate(params)
    return np.full(topology.layout.k_sources, mu)


def user_singles(topology, params, ports_per_user=2):
    """Detected singles per user over all its PBS ports, counts/s."""
    mu = source_rates(topology, params)
    layout = topology.layout
    out = {}
    for u in topology.users:
        total = 0.0
        for sec, route in topology.user_feeds(u.id):
            s = layout.sections[sec]
            total += mu[s.source] * s.coupling_efficiency * route * u.efficiency
        out[u.id] = total + ports_per_user * u.dark_rate
    return out


def true_coincidence_rate(topology, params, link):
    mu = source_rates(topology, params)
    layout = topology.layout
    ua, ub = topology.user(link.user_a), topology.user(link.user_b)
    total = 0.0
    for p in link.paths:
        total += (
            mu[p.source]
            * layout.sections[p.section_a].coupling_efficiency
            * layout.sections[p.section_b].coupling_efficiency
            * p.route_prob_a * p.route_prob_b
            * ua.efficiency * ub.efficiency
        )
    return total


def outcome_rates(rates, state, setting):
    """Expected rates of the four outcome pairs at ``setting``: true x Born + accidental/4."""
    return rates.true_coincidence * outcome_probabilities(state, setting) + rates.accidental / 4.0


def analytic_link_rates(topology, params, states, window_ps=DEFAULT_WINDOW_PS,
                        ports_per_user=2, include_same_splitter=False):
    """Singles, true and accidental coincidence rates for every link.

    Accidentals use ``S_u * S_v * tau`` with ``tau`` the full window width,
    matching a counter that accepts ``|dt| <= tau/2``. With
    ``include_same_splitter`` the user pairs sharing a splitter are added with
    zero true rate; their outcome rates are accidental/4 each.
    """
    tau = window_ps * 1e-12
    singles = user_singles(topology, params, ports_per_user)
    out = {}
    for lk in topology.links:
        true = true_coincidence_rate(topology, params, lk)
        acc = singles[lk.user_a] * singles[lk.user_b] * tau
        base = LinkRates(singles[lk.user_a], singles[lk.user_b], true, acc)
        per_basis = {}
        for basis, (setting, labels) in BASIS_LABELS.items():
            per_basis.update(zip(labels, outcome_rates(base, states[lk.name], setting)))
        out[lk.name] = LinkRates(base.singles_a, base.singles_b, true, acc, per_basis)
    if include_same_splitter:
        for a, b in topology.same_splitter_pairs():
            acc = singles[a.id] * singles[b.id] * tau
            per_basis = {lab: acc / 4.0 for _, labels in BASIS_LABELS.values() for lab in labels}
            out[topology.pair_name(a.id, b.id)] = LinkRates(singles[a.id], singles[b.id], 0.0, acc, per_basis)
    return out


def measured_visibility(rates, state, basis="HV"):
    """Raw visibility the counter would see, accidentals included."""
    from ..qstate.states import visibility_from_outcomes

    setting, _ = BASIS_LABELS[basis]
    return visibility_from_outcomes(outcome_rates(rates, state, setting))


def calibrate_visibilities(topology, params, targets, window_ps=DEFAULT_WINDOW_PS,
                           dephasing=0.0, ports_per_user=2):
    """State models whose *raw* (accidental-diluted) visibility hits ``targets``.

    For a Werner state the raw visibility is ``v * T / (T + A)``, so
    ``v = V_target * (T + A) / T``. Targets above ``T / (T + A)`` cannot be
    reached; those links get ``v = 1`` and are listed in the second return value.
    """
    probe = link_states(topology, StateModel(1.0))
    rates = analytic_link_rates(topology, params, probe, window_ps, ports_per_user)
    models, clipped = {}, []
    for name, target in targets.items():
        r = rates[topology.link(name).name]
        if r.true_coincidence <= 0:
            raise ValueError(f"link {name} has no true coincidences to calibrate")
        v = target * r.total_coincidence / r.true_coincidence
        if v > 1.0:
            clipped.append(name)
            v = 1.0
        models[topology.link(name).name] = StateModel(v, dephasing)
    return models, clipped
