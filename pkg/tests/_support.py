"""Shared generators for Monte Carlo versus analytic comparisons."""

import numpy as np

from sdmqkd.sim.analytic import StateModel, analytic_link_rates, link_states, user_singles
from sdmqkd.source import SourceParams, TempProfile, make_sections
from sdmqkd.topology import build

DURATION = 0.05


def random_network(rng, duration=DURATION, min_counts=1e3, max_counts=1e5, max_tags=1.5e6):
    """Random topology and rates where every link expects min..max coincidences."""
    while True:
        n = int(rng.choice([4, 6, 8]))
        scheme = str(rng.choice(["cyclic", "complete"]))
        k = n // 2
        n_sections = 2 * (k if scheme == "cyclic" else k * (k - 1) // 2)
        effs = rng.uniform(0.05, 0.3, n_sections)
        detector = {"efficiency": float(rng.uniform(0.3, 0.9)), "dark_rate": float(rng.uniform(0, 2000))}
        topo = build(n, scheme, detector=detector, efficiencies=list(effs))
        states = link_states(topo, StateModel(float(rng.uniform(0.5, 1.0))))
        target = 10 ** rng.uniform(np.log10(3 * min_counts), np.log10(max_counts))
        probe = SourceParams(1.0, TempProfile(39.7, 4.95, 1.0, 0.085, 2.63, 1.0), topo.layout)
        true = [r.true_coincidence for r in analytic_link_rates(topo, probe, states).values()]
        slope = target / (max(true) * duration)
        params = SourceParams(1.0, TempProfile(39.7, 4.95, slope, 0.085, 2.63, 1.0), topo.layout)
        rates = analytic_link_rates(topo, params, states)
        counts = [r.total_coincidence * duration for r in rates.values()]
        tags = sum(user_singles(topo, params).values()) * duration
        if min(counts) >= min_counts and max(counts) <= max_counts and tags <= max_tags:
            return topo, params, states, rates
