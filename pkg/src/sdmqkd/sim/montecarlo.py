"""Event-level simulation of a topology into per-channel time tags.

Each source emits pairs as a Poisson process. Every photon is independently
coupled, routed at its splitter and detected; splitting a Poisson process
this way gives independent Poisson streams per (fate of photon a, fate of
photon b) category, so the engine draws category counts with one multinomial
and only materialises detected photons. Polarization outcomes of surviving
pairs come from the link's two-qubit state under the scheduled settings.

Streams (one per source, one per dark-count channel) own child generators
seeded from ``(seed, stream id)``; results do not depend on thread count.
"""

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .._validation import check_positive, check_unit_interval
from ..qstate.states import (
    AnalyzerSetting,
    marginal_transmit_probability,
    maximally_mixed,
    outcome_probabilities,
)
from .analytic import DEFAULT_WINDOW_PS, source_rates
from .timetags import TimeTagSet, channel_id

PS = 1_000_000_000_000
_DARK_STREAM_BASE = 1_000_000


@dataclass(frozen=True)
class FixedSetting:
    """Analyzer held at one angle; the PBS ports map to channels 0 (T) and 1 (R)."""

    theta: float = 0.0
    qwp: bool = False

    def to_dict(self):
        return {"mode": "fixed", "theta": self.theta, "qwp": self.qwp}


@dataclass(frozen=True)
class RandomBasis:
    """Passive basis choice per photon: HV with probability ``p_hv``, else DA.

    Ports: H=0, V=1, D=2, A=3.
    """

    p_hv: float = 0.5

    def __post_init__(self):
        check_unit_interval(self.p_hv, "p_hv")

    def to_dict(self):
        return {"mode": "random", "p_hv": self.p_hv}


def setting_from_dict(d):
    if d.get("mode", "fixed") == "random":
        return RandomBasis(d.get("p_hv", 0.5))
    return FixedSetting(float(d.get("theta", 0.0)), bool(d.get("qwp", False)))


@dataclass(frozen=True)
class SimConfig:
    duration: float
    seed: int
    window_ps: float = DEFAULT_WINDOW_PS
    schedule: dict = field(default_factory=dict)
    noise: dict = field(default_factory=dict)
    users: tuple | None = None
    threads: int = 1

    def __post_init__(self):
        check_positive(self.duration, "duration")
        check_positive(self.window_ps, "window_ps")
        if self.seed is None or int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if self.duration * PS >= 2 ** 47:
            raise ValueError("duration too long for the tag encoding (max ~140 s)")

    def setting_for(self, user):
        s = self.schedule.get(user.name, self.schedule.get(user.id, FixedSetting()))
        return s if isinstance(s, (FixedSetting, RandomBasis)) else setting_from_dict(s)


def config_hash(obj):
    payload = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(payload).hexdigest()


def _apply_noise(topology, noise):
    if not noise:
        return topology
    users = []
    for u in topology.users:
        over = noise.get(u.name, noise.get(u.id))
        users.append(replace(u, **over) if over else u)
    return topology.with_users(users)


def _destinations(topology, section, active):
    """``(user, probability)`` for each way a photon in ``section`` is detected."""
    bs = topology.splitter_of_section(section)
    if bs is None:
        return []
    k = bs.input_sections.index(section)
    eta = topology.layout.sections[section].coupling_efficiency
    out = []
    for o, uid in enumerate(bs.output_users):
        if uid not in active:
            continue
        u = active[uid]
        out.append((u, eta * bs.route_probability(k, o) * u.efficiency))
    return out


def _draw_settings(rng, setting, n):
    """Per-event (theta, qwp, port offset) arrays for one user."""
    if isinstance(setting, FixedSetting):
        return np.full(n, setting.theta), np.full(n, setting.qwp), np.zeros(n, dtype=np.int64)
    hv = rng.random(n) < setting.p_hv
    return np.where(hv, 0.0, 45.0), np.zeros(n, dtype=bool), np.where(hv, 0, 2).astype(np.int64)


def _pair_outcomes(rng, state, sa, sb):
    """Sample port bits (0=T, 1=R) for both arms, grouping events by setting pair."""
    ta, qa, _ = sa
    tb, qb, _ = sb
    n = ta.size
    bits_a = np.zeros(n, dtype=np.int64)
    bits_b = np.zeros(n, dtype=np.int64)
    keys = np.stack([ta, tb, qa.astype(float), qb.astype(float)], axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    u = rng.random(n)
    for g, row in enumerate(uniq):
        idx = np.flatnonzero(inverse == g)
        p = outcome_probabilities(state, AnalyzerSetting(row[0], row[1], bool(row[2]), bool(row[3])))
        outcome = np.searchsorted(np.cumsum(p)[:-1], u[idx], side="right")
        bits_a[idx] = outcome // 2
        bits_b[idx] = outcome % 2
    return bits_a, bits_b


def _single_outcomes(rng, rho_state, arm, s):
    theta, qwp, _ = s
    n = theta.size
    bits = np.zeros(n, dtype=np.int64)
    u = rng.random(n)
    for key in np.unique(np.stack([theta, qwp.astype(float)], axis=1), axis=0):
        idx = np.flatnonzero((theta == key[0]) & (qwp == bool(key[1])))
        p_t = marginal_transmit_probability(rho_state, arm, key[0], bool(key[1]))
        bits[idx] = (u[idx] >= p_t).astype(np.int64)
    return bits


def _state_lookup(topology, states):
    by_pair = {}
    for lk in topology.links:
        st = states.get(lk.name)
        if st is not None:
            by_pair[(lk.user_a, lk.user_b)] = st
    return by_pair


def _marginal_state(topology, by_pair, source, uid):
    """A state (and the arm ``uid`` occupies) to draw lone-photon outcomes from."""
    for lk in topology.links:
        if source in lk.sources and uid in (lk.user_a, lk.user_b) and (lk.user_a, lk.user_b) in by_pair:
            return by_pair[(lk.user_a, lk.user_b)], ("a" if lk.user_a == uid else "b")
    return maximally_mixed(), "a"


def _simulate_source(topology, mu, source, by_pair, active, config, index_of, seed):
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), source + 1]))
    d_ps = config.duration * PS
    sec_a, sec_b = topology.layout.source_sections(source)
    dest_a = _destinations(topology, sec_a, active)
    dest_b = _destinations(topology, sec_b, active)
    pa = [1.0 - sum(p for _, p in dest_a)] + [p for _, p in dest_a]
    pb = [1.0 - sum(p for _, p in dest_b)] + [p for _, p in dest_b]
    probs = np.outer(pa, pb).ravel()
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum()
    n_pairs = rng.poisson(mu * config.duration)
    counts = rng.multinomial(n_pairs, probs).reshape(len(pa), len(pb))

    chans, times = [], []

    def emit(user, port, t):
        base = channel_id(index_of[user.id], 0)
        chans.append(base + port)
        times.append(t + rng.normal(0.0, user.jitter_sigma, t.size) if user.jitter_sigma > 0 else t)

    for i in range(len(pa)):
        for j in range(len(pb)):
            n = int(counts[i, j])
            if n == 0 or (i == 0 and j == 0):
                continue
            t0 = rng.uniform(0.0, d_ps, n)
            if i and j:
                ua, ub = dest_a[i - 1][0], dest_b[j - 1][0]
                flip = index_of[ua.id] > index_of[ub.id]
                first, second = (ub, ua) if flip else (ua, ub)
                state = by_pair.get((first.id, second.id), maximally_mixed())
                s1 = _draw_settings(rng, config.setting_for(first), n)
                s2 = _draw_settings(rng, config.setting_for(second), n)
                b1, b2 = _pair_outcomes(rng, state, s1, s2)
                emit(first, s1[2] + b1, t0)
                emit(second, s2[2] + b2, t0)
            else:
                user = dest_a[i - 1][0] if i else dest_b[j - 1][0]
                st, arm = _marginal_state(topology, by_pair, source, user.id)
                s = _draw_settings(rng, config.setting_for(user), n)
                emit(user, s[2] + _single_outcomes(rng, st, arm, s), t0)
    if not chans:
        return np.empty(0, dtype=np.int64), np.empty(0)
    return np.concatenate(chans), np.concatenate(times)


def _dark_stream(user, port, ch, config, seed):
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), _DARK_STREAM_BASE + ch]))
    n = rng.poisson(user.dark_rate * config.duration)
    return np.full(n, ch, dtype=np.int64), rng.uniform(0.0, config.duration * PS, n)


def user_ports(setting):
    return (0, 1) if isinstance(setting, FixedSetting) else (0, 1, 2, 3)


def simulate(topology, params, states, config):
    """Simulate ``config.duration`` seconds of detections.

    Args:
        topology: network wiring.
        params: :class:`SourceParams` giving the per-source pair rate.
        states: link name -> :class:`TwoQubitState`.
        config: :class:`SimConfig`; ``users`` restricts which users are detected.

    Returns:
        TimeTagSet with integer-picosecond tags on channels ``4*user + port``.
    """
    topology = _apply_noise(topology, config.noise)
    index_of = {u.id: i for i, u in enumerate(topology.users)}
    if config.users is None:
        active = {u.id: u for u in topology.users}
    else:
        wanted = set(config.users)
        active = {u.id: u for u in topology.users if u.name in wanted or u.id in wanted}
    by_pair = _state_lookup(topology, states)
    mu = source_rates(topology, params)

    jobs = [
        ("src", s) for s in range(topology.layout.k_sources)
    ] + [
        ("dark", (u, p)) for u in active.values() if u.dark_rate > 0
        for p in user_ports(config.setting_for(u))
    ]

    def run(job):
        kind, arg = job
        if kind == "src":
            return _simulate_source(topology, mu[arg], arg, by_pair, active, config, index_of, config.seed)
        user, port = arg
        return _dark_stream(user, port, channel_id(index_of[user.id], port), config, config.seed)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]

    d_ps = int(round(config.duration * PS))
    ch = np.concatenate([r[0] for r in results]) if results else np.empty(0, dtype=np.int64)
    t = np.concatenate([r[1] for r in results]) if results else np.empty(0)
    t = np.rint(t).astype(np.int64)
    keep = (t >= 0) & (t <= d_ps)
    key = np.unique((ch[keep].astype(np.int64) << 47) | t[keep])
    ch_sorted, t_sorted = key >> 47, key & ((1 << 47) - 1)

    channels = {}
    for u in active.values():
        for p in user_ports(config.setting_for(u)):
            channels[channel_id(index_of[u.id], p)] = np.empty(0, dtype=np.int64)
    if key.size:
        cuts = np.flatnonzero(np.diff(ch_sorted)) + 1
        for c_arr, t_arr in zip(np.split(ch_sorted, cuts), np.split(t_sorted, cuts)):
            channels[int(c_arr[0])] = t_arr
    meta = {
        "duration": config.duration,
        "seed": int(config.seed),
        "window_ps": config.window_ps,
        "settings": {u.name: config.setting_for(u).to_dict() for u in active.values()},
        "users": [u.name for u in topology.users],
    }
    meta["config_hash"] = config_hash({
        "meta": meta,
        "pair_rate": mu.tolist(),
        "states": {k: np.round(v.rho, 15).tolist() for k, v in sorted(states.items())},
    })
    return TimeTagSet(channels, meta)
