"""Per-link metrics from time tags and their network-level aggregation."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..exceptions import IncompleteReportError, InsufficientDataError, UndefinedVisibilityError
from ..qstate.keyrate import DEFAULT_EC_INEFFICIENCY, KeyRateInputs, secure_key_rate
from ..qstate.states import (
    AnalyzerSetting,
    BellKind,
    chsh_from_correlations,
    chsh_settings,
    correlation,
    fidelity,
    visibility_from_outcomes,
)
from ..qstate.tomography import basis_pair_settings, tomography_reconstruct
from ..sim.analytic import DEFAULT_WINDOW_PS
from ..sim.timetags import channel_id
from .coincidence import count_coincidences

DEFAULT_BACKGROUND_DELAY_PS = 20_000.0
SIFTED_CONVENTIONS = ("mean", "sum")
HV_SETTING = AnalyzerSetting(0.0, 0.0)
DA_SETTING = AnalyzerSetting(45.0, 45.0)
_PORT_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class SettingRecord:
    """Coincidence counts of one link at one analyzer setting.

    ``counts`` and ``background`` follow the outcome order TT, TR, RT, RR.
    ``background`` holds the same counts taken at a large relative delay,
    i.e. an accidental-only estimate.
    """

    setting: AnalyzerSetting
    counts: np.ndarray
    duration: float
    background: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=float))
        if self.background is not None:
            object.__setattr__(self, "background", np.asarray(self.background, dtype=float))

    def net_counts(self):
        if self.background is None:
            return self.counts
        return np.clip(self.counts - self.background, 0.0, None)


def merge_records(records):
    """Sum counts and durations of records that share a setting."""
    merged = {}
    for r in records:
        k = r.setting.key()
        if k not in merged:
            merged[k] = r
            continue
        m = merged[k]
        bg = None
        if m.background is not None and r.background is not None:
            bg = m.background + r.background
        merged[k] = SettingRecord(m.setting, m.counts + r.counts, m.duration + r.duration, bg)
    return merged


def records_from_tags(tags, topology, link, window_ps=DEFAULT_WINDOW_PS, delay_ps=0.0,
                      background_delay_ps=DEFAULT_BACKGROUND_DELAY_PS):
    """Count one link's coincidences in a run, one record per analyzer setting.

    Fixed-setting runs give one record. Random-basis runs give an HV and a DA
    record covering only the basis-matched events; their durations are scaled
    by the probability both users picked that basis, so count/duration
    estimates the rate a fixed-setting run would see.

    Returns an empty list if the run did not schedule both users.

    Raises:
        IncompleteReportError: a scheduled user's channels are absent.
    """
    ua, ub = topology.user(link.user_a), topology.user(link.user_b)
    scheduled = tags.meta.get("settings", {})
    sa, sb = scheduled.get(ua.name), scheduled.get(ub.name)
    if sa is None or sb is None:
        return []
    index = {u.id: i for i, u in enumerate(topology.users)}
    duration = tags.duration

    def chans(user, offset):
        ids = [channel_id(index[user.id], offset + p) for p in (0, 1)]
        missing = [c for c in ids if c not in tags.channels]
        if missing:
            raise IncompleteReportError([link.name])
        return [tags.channels[c] for c in ids]

    def count(ca, cb, delay):
        return np.array([count_coincidences(ca[p], cb[q], window_ps, delay) for p, q in _PORT_PAIRS])

    def record(setting, off_a, off_b, dur):
        ca, cb = chans(ua, off_a), chans(ub, off_b)
        bg = None if background_delay_ps is None else count(ca, cb, delay_ps + background_delay_ps)
        return SettingRecord(setting, count(ca, cb, delay_ps), dur, bg)

    random_a, random_b = sa.get("mode") == "random", sb.get("mode") == "random"
    if not random_a and not random_b:
        setting = AnalyzerSetting(sa.get("theta", 0.0), sb.get("theta", 0.0),
                                  sa.get("qwp", False), sb.get("qwp", False))
        return [record(setting, 0, 0, duration)]
    if not (random_a and random_b):
        raise InsufficientDataError(f"link {link.name}: mixed fixed and random schedules")
    pa, pb = sa.get("p_hv", 0.5), sb.get("p_hv", 0.5)
    out = []
    if pa * pb > 0:
        out.append(record(HV_SETTING, 0, 0, duration * pa * pb))
    if (1 - pa) * (1 - pb) > 0:
        out.append(record(DA_SETTING, 2, 2, duration * (1 - pa) * (1 - pb)))
    return out


def same_splitter_rates(tags, topology, window_ps=DEFAULT_WINDOW_PS, delay_ps=0.0):
    """Per-port-pair coincidence rates between users behind one splitter.

    Returns:
        pair name -> array of four rates (TT, TR, RT, RR), counts/s.
    """
    index = {u.id: i for i, u in enumerate(topology.users)}
    out = {}
    for a, b in topology.same_splitter_pairs():
        ca = [tags.channels.get(channel_id(index[a.id], p), np.empty(0, np.int64)) for p in (0, 1)]
        cb = [tags.channels.get(channel_id(index[b.id], p), np.empty(0, np.int64)) for p in (0, 1)]
        counts = [count_coincidences(ca[p], cb[q], window_ps, delay_ps) for p, q in _PORT_PAIRS]
        out[topology.pair_name(a.id, b.id)] = np.array(counts, dtype=float) / tags.duration
    return out


@dataclass(frozen=True)
class LinkMetrics:
    """Link-level figures of merit; rates in counts/s.

    ``secure_rate`` is clamped at zero; ``secure_rate_raw`` keeps the signed value.
    """

    link: str
    kind: BellKind
    coincidence_rate: float
    accidental_rate: float
    v_hv: float
    v_da: float
    qber: float
    sifted_rate: float
    secure_rate: float
    secure_rate_raw: float
    c_hv: float
    c_da: float
    s_param: float | None = None
    fidelity: float | None = None

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["kind"] = BellKind.parse(d["kind"])
        return cls(**d)


def _visibility(counts, label):
    try:
        return visibility_from_outcomes(counts)
    except UndefinedVisibilityError as exc:
        raise InsufficientDataError(f"{label}: {exc}") from exc


def estimate_link_metrics(records, link_name="", kind=None, m=DEFAULT_EC_INEFFICIENCY,
                          sifted_convention="mean", subtract_accidentals=False):
    """Visibilities, CHSH, fidelity and key rates from setting records.

    Args:
        records: iterable of :class:`SettingRecord`; must include the HV
            (0, 0) and DA (45, 45) settings. The four CHSH setting pairs add
            ``s_param``; the nine basis pairs of tomography add ``fidelity``.
        link_name: label carried into the result.
        kind: the link's Bell state; inferred from the DA correlation sign if None.
        m: error-correction inefficiency.
        sifted_convention: ``"mean"`` gives (C_HV + C_DA)/2, the rate the key
            rate formula reduces to at unit visibility; ``"sum"`` gives C_HV + C_DA.
        subtract_accidentals: use counts minus the delayed-window background.

    Raises:
        InsufficientDataError: a required setting is missing or has no counts.
    """
    if sifted_convention not in SIFTED_CONVENTIONS:
        raise ValueError(f"sifted_convention must be one of {SIFTED_CONVENTIONS}")
    recs = merge_records(records)
    for setting, label in ((HV_SETTING, "HV"), (DA_SETTING, "DA")):
        if setting.key() not in recs:
            raise InsufficientDataError(f"link {link_name}: no {label} record")

    def counts(r):
        if subtract_accidentals and r.background is not None:
            return r.net_counts()
        return r.counts

    hv, da = recs[HV_SETTING.key()], recs[DA_SETTING.key()]
    n_hv, n_da = counts(hv), counts(da)
    v_hv = _visibility(n_hv, f"link {link_name} HV")
    v_da = _visibility(n_da, f"link {link_name} DA")
    c_hv, c_da = n_hv.sum() / hv.duration, n_da.sum() / da.duration
    if kind is None:
        kind = BellKind.PHI_PLUS if correlation(n_da) >= 0 else BellKind.PHI_MINUS
    kind = BellKind.parse(kind)

    raw_total = 0.5 * (hv.counts.sum() / hv.duration + da.counts.sum() / da.duration)
    acc = float("nan")
    if hv.background is not None and da.background is not None:
        acc = 0.5 * (hv.background.sum() / hv.duration + da.background.sum() / da.duration)

    s_param = None
    chsh_keys = [s.key() for s in chsh_settings(kind)]
    if all(k in recs for k in chsh_keys):
        try:
            s_param = chsh_from_correlations(*(correlation(counts(recs[k])) for k in chsh_keys))
        except UndefinedVisibilityError as exc:
            raise InsufficientDataError(f"link {link_name} CHSH: {exc}") from exc

    fid = None
    if all(s.key() in recs for s in basis_pair_settings()):
        _, fid = run_tomography([recs[s.key()] for s in basis_pair_settings()], kind,
                                subtract_accidentals=subtract_accidentals)

    secure_raw = secure_key_rate(KeyRateInputs(c_hv, c_da, v_hv, v_da, m))
    sifted = 0.5 * (c_hv + c_da) if sifted_convention == "mean" else c_hv + c_da
    return LinkMetrics(
        link=link_name,
        kind=kind,
        coincidence_rate=float(raw_total),
        accidental_rate=acc,
        v_hv=v_hv,
        v_da=v_da,
        qber=(1.0 - 0.5 * (v_hv + v_da)) / 2.0,
        sifted_rate=float(sifted),
        secure_rate=max(float(secure_raw), 0.0),
        secure_rate_raw=float(secure_raw),
        c_hv=float(c_hv),
        c_da=float(c_da),
        s_param=s_param,
        fidelity=fid,
    )


def zero_link_metrics(link_name, kind):
    """Metrics of a link that recorded no coincidences at all: zero rates, no visibility."""
    kind = BellKind.PHI_PLUS if kind is None else BellKind.parse(kind)
    return LinkMetrics(link_name, kind, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0)


def tomography_projector_counts(records, subtract_accidentals=False):
    """Expand setting records into (single-projector setting, count) pairs.

    Records may have different exposures (merged runs), so counts are
    rescaled to the mean record duration before inversion.
    """
    records = list(records)
    ref = float(np.mean([r.duration for r in records])) if records else 1.0
    out = []
    for r in records:
        c = (r.net_counts() if subtract_accidentals else r.counts) * (ref / r.duration)
        s = r.setting
        out += [(s, c[0]), (s.crossed(arm_b=True), c[1]), (s.crossed(arm_a=True), c[2]),
                (s.crossed(arm_a=True, arm_b=True), c[3])]
    return out


def run_tomography(records, kind=None, subtract_accidentals=False):
    """Reconstruct a link state from tomographic setting records.

    Returns:
        (TwoQubitState, fidelity to ``kind`` or None when ``kind`` is None).
    """
    pairs = tomography_projector_counts(merge_records(records).values(), subtract_accidentals)
    state = tomography_reconstruct(pairs)
    return state, (None if kind is None else fidelity(state, BellKind.parse(kind)))


@dataclass(frozen=True)
class NetworkReport:
    links: dict
    sifted_total: float
    secure_total: float
    secure_total_raw: float
    partition: dict
    same_splitter: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "links": {k: v.to_dict() for k, v in self.links.items()},
            "sifted_total": self.sifted_total,
            "secure_total": self.secure_total,
            "secure_total_raw": self.secure_total_raw,
            "partition": {k: v.value for k, v in self.partition.items()},
            "same_splitter": {k: [float(x) for x in v] for k, v in self.same_splitter.items()},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            links={k: LinkMetrics.from_dict(v) for k, v in d["links"].items()},
            sifted_total=d["sifted_total"],
            secure_total=d["secure_total"],
            secure_total_raw=d["secure_total_raw"],
            partition={k: BellKind.parse(v) for k, v in d["partition"].items()},
            same_splitter={k: np.asarray(v) for k, v in d.get("same_splitter", {}).items()},
        )


def network_report(topology, metrics, same_splitter=None):
    """Sum link metrics over every direct link of ``topology``.

    Raises:
        IncompleteReportError: some direct link has no metrics.
    """
    names = [lk.name for lk in topology.links]
    missing = [n for n in names if n not in metrics]
    if missing:
        raise IncompleteReportError(missing)
    links = {n: metrics[n] for n in names}
    return NetworkReport(
        links=links,
        sifted_total=math.fsum(v.sifted_rate for v in links.values()),
        secure_total=math.fsum(v.secure_rate for v in links.values()),
        secure_total_raw=math.fsum(v.secure_rate_raw for v in links.values()),
        partition={lk.name: lk.bell for lk in topology.links if lk.bell is not None},
        same_splitter=dict(same_splitter or {}),
    )


class LinkAnalyzer(BaseEstimator):
    """Fit link metrics and a network report from a list of time-tag runs.

    Parameters
    ----------
    window_ps : float
    m : float
        Error-correction inefficiency.
    sifted_convention : {"mean", "sum"}
    subtract_accidentals : bool
    background_delay_ps : float
        Relative delay whose window estimates the accidental floor.
    threads : int
        Links are analyzed concurrently; results do not depend on this.

    A link with no coincidences in any run is reported with zero rates
    instead of raising; partial data with an empty basis still raises
    :class:`InsufficientDataError`.

    Attributes
    ----------
    records_ : dict of link -> list of SettingRecord
    metrics_ : dict of link -> LinkMetrics
    report_ : NetworkReport
    """

    def __init__(self, window_ps=DEFAULT_WINDOW_PS, m=DEFAULT_EC_INEFFICIENCY,
                 sifted_convention="mean", subtract_accidentals=False,
                 background_delay_ps=DEFAULT_BACKGROUND_DELAY_PS, threads=1):
        self.window_ps = window_ps
        self.m = m
        self.sifted_convention = sifted_convention
        self.subtract_accidentals = subtract_accidentals
        self.background_delay_ps = background_delay_ps
        self.threads = threads

    def fit(self, runs, topology):
        runs = list(runs)

        def one(link):
            recs = []
            for tags in runs:
                recs += records_from_tags(tags, topology, link, self.window_ps,
                                          background_delay_ps=self.background_delay_ps)
            return link.name, recs

        if self.threads > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                self.records_ = dict(pool.map(one, topology.links))
        else:
            self.records_ = dict(one(lk) for lk in topology.links)
        self.metrics_ = {}
        for lk in topology.links:
            recs = self.records_[lk.name]
            if not recs:
                continue
            if all(r.counts.sum() == 0 for r in recs):
                self.metrics_[lk.name] = zero_link_metrics(lk.name, lk.bell)
                continue
            self.metrics_[lk.name] = estimate_link_metrics(
                recs, lk.name, lk.bell, self.m, self.sifted_convention, self.subtract_accidentals
            )
        floor = {}
        for tags in runs:
            if all(s.get("mode", "fixed") == "fixed" for s in tags.meta.get("settings", {}).values()):
                floor = same_splitter_rates(tags, topology, self.window_ps)
                break
        self.report_ = network_report(topology, self.metrics_, floor)
        return self

    def transform(self, runs=None):
        """Per-link metric table: one row per link in topology order."""
        check_is_fitted(self, "report_")
        return [m.to_dict() for m in self.report_.links.values()]
