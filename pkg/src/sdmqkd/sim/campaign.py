"""Measurement campaigns: the run list needed to characterize a network."""

from dataclasses import dataclass, replace

import numpy as np

from ..qstate.states import BellKind, chsh_settings
from ..qstate.tomography import basis_pair_settings
from .montecarlo import FixedSetting, RandomBasis, simulate
from .timetags import TimeTagSet


@dataclass(frozen=True)
class RunSpec:
    """One simulated acquisition: a label, a per-user schedule and the users read out."""

    label: str
    schedule: dict
    users: tuple | None = None


def _pair_schedule(link_a, link_b, setting):
    return {
        link_a: FixedSetting(setting.theta_a, setting.qwp_a),
        link_b: FixedSetting(setting.theta_b, setting.qwp_b),
    }


def plan_runs(topology, chsh=False, tomography=False, links=None, random_basis=None):
    """Runs covering HV and DA for every user, plus optional per-link CHSH/tomography.

    Args:
        topology: the network.
        chsh: add four runs per link at the CHSH settings of its Bell state.
        tomography: add nine basis-pair runs per link.
        links: restrict the per-link runs to these link names.
        random_basis: if a probability, replace the HV/DA pair by one passive
            random-switching run with that HV probability.
    """
    names = [u.name for u in topology.users]
    if random_basis is None:
        runs = [
            RunSpec("hv", {n: FixedSetting(0.0) for n in names}),
            RunSpec("da", {n: FixedSetting(45.0) for n in names}),
        ]
    else:
        runs = [RunSpec("random", {n: RandomBasis(random_basis) for n in names})]
    chosen = [lk for lk in topology.links if links is None or lk.name in links]
    for lk in chosen:
        ua, ub = topology.user(lk.user_a).name, topology.user(lk.user_b).name
        extra = []
        if chsh:
            kind = lk.bell if lk.bell is not None else BellKind.PHI_PLUS
            extra += [(f"chsh{i}", s) for i, s in enumerate(chsh_settings(kind))]
        if tomography:
            extra += [(f"tomo{i}", s) for i, s in enumerate(basis_pair_settings())]
        seen = set()
        for label, s in extra:
            if s.key() in seen:
                continue
            seen.add(s.key())
            runs.append(RunSpec(f"{lk.name}:{label}", _pair_schedule(ua, ub, s), (ua, ub)))
    return runs


def run_seed(seed, index):
    """Independent 63-bit seed for the ``index``-th run of a campaign."""
    state = np.random.SeedSequence([int(seed), 0xC0FFEE, int(index)]).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def run_campaign(topology, params, states, config, runs):
    """Simulate every run; each gets its own seed derived from ``config.seed``.

    Returns:
        list of TimeTagSet, with ``meta["run"]`` set to the run label.
    """
    out = []
    for i, spec in enumerate(runs):
        cfg = replace(config, seed=run_seed(config.seed, i), schedule=spec.schedule, users=spec.users)
        tags = simulate(topology, params, states, cfg)
        meta = dict(tags.meta, run=spec.label, campaign_seed=int(config.seed))
        out.append(TimeTagSet(tags.channels, meta))
    return out
