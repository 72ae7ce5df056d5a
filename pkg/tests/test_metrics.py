import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

from sdmqkd.analysis import (
    DA_SETTING,
    HV_SETTING,
    LinkAnalyzer,
    LinkMetrics,
    NetworkReport,
    SettingRecord,
    estimate_link_metrics,
    network_report,
    records_from_tags,
    run_tomography,
)
from sdmqkd.analysis.io import read_report_json, write_histogram_csv, write_link_csv, write_report_json
from sdmqkd.analysis.coincidence import delay_scan
from sdmqkd.exceptions import IncompleteReportError, InsufficientDataError
from sdmqkd.qstate import BellKind, chsh, chsh_settings, outcome_probabilities, werner
from sdmqkd.qstate.tomography import basis_pair_settings
from sdmqkd.sim import SimConfig, StateModel, link_states
from sdmqkd.sim.campaign import plan_runs, run_campaign
from sdmqkd.sim.timetags import TimeTagSet
from sdmqkd.source import SourceParams, TempProfile, make_sections
from sdmqkd.topology import build_paper_n6


def analytic_records(state, settings, true_rate=1e5, acc_rate=0.0, duration=1.0):
    """Infinite-statistics records: true rate times Born weights plus flat accidentals."""
    out = []
    for s in settings:
        counts = (true_rate * outcome_probabilities(state, s) + acc_rate / 4) * duration
        out.append(SettingRecord(s, counts, duration, np.full(4, acc_rate / 4 * duration)))
    return out


def metrics(v, kind=BellKind.PHI_PLUS, **kw):
    state = werner(kind, v)
    settings = [HV_SETTING, DA_SETTING] + chsh_settings(kind)
    return estimate_link_metrics(analytic_records(state, settings, **kw), "AC", kind)


class TestEstimator:
    @given(st.floats(0.05, 1.0), st.sampled_from(list(BellKind)))
    def test_reproduces_state_model(self, v, kind):
        m = metrics(v, kind)
        assert m.v_hv == pytest.approx(v, abs=1e-9)
        assert m.v_da == pytest.approx(v, abs=1e-9)
        assert m.s_param == pytest.approx(chsh(werner(kind, v)), abs=1e-9)

    @given(st.floats(0.05, 1.0), st.floats(0, 5e4))
    def test_subtraction_removes_accidentals(self, v, acc):
        state = werner(BellKind.PHI_MINUS, v)
        recs = analytic_records(state, [HV_SETTING, DA_SETTING], acc_rate=acc)
        m = estimate_link_metrics(recs, "AD", BellKind.PHI_MINUS, subtract_accidentals=True)
        assert m.v_hv == pytest.approx(v, abs=1e-9)
        raw = estimate_link_metrics(recs, "AD", BellKind.PHI_MINUS)
        assert raw.v_hv == pytest.approx(v * 1e5 / (1e5 + acc), abs=1e-9)
        assert raw.accidental_rate == pytest.approx(acc)

    def test_pure_bell(self):
        m = metrics(1.0)
        assert (m.v_hv, m.v_da, m.qber) == (1.0, 1.0, 0.0)
        assert m.secure_rate == m.sifted_rate == pytest.approx(1e5)

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_secure_never_exceeds_sifted(self, v1, v2):
        recs = [SettingRecord(HV_SETTING, 1e4 * outcome_probabilities(werner(BellKind.PHI_PLUS, v1), HV_SETTING), 1.0),
                SettingRecord(DA_SETTING, 1e4 * outcome_probabilities(werner(BellKind.PHI_PLUS, v2), DA_SETTING), 1.0)]
        m = estimate_link_metrics(recs, "X", BellKind.PHI_PLUS)
        assert m.secure_rate <= m.sifted_rate + 1e-9
        assert m.secure_rate_raw <= m.sifted_rate + 1e-9
        if m.secure_rate == pytest.approx(m.sifted_rate, rel=1e-12):
            assert m.v_hv == pytest.approx(1.0) and m.v_da == pytest.approx(1.0)

    def test_clamping_keeps_raw(self):
        m = metrics(0.6)
        assert m.secure_rate == 0.0 and m.secure_rate_raw < 0

    def test_sifted_conventions(self):
        recs = analytic_records(werner(BellKind.PHI_PLUS, 0.9), [HV_SETTING, DA_SETTING])
        mean = estimate_link_metrics(recs, "AC", sifted_convention="mean")
        total = estimate_link_metrics(recs, "AC", sifted_convention="sum")
        assert total.sifted_rate == pytest.approx(2 * mean.sifted_rate)
        assert total.secure_rate == mean.secure_rate
        with pytest.raises(ValueError):
            estimate_link_metrics(recs, "AC", sifted_convention="half")

    def test_kind_inferred(self):
        recs = analytic_records(werner(BellKind.PHI_MINUS, 0.9), [HV_SETTING, DA_SETTING])
        assert estimate_link_metrics(recs, "AD").kind is BellKind.PHI_MINUS

    def test_missing_basis(self):
        recs = analytic_records(werner(BellKind.PHI_PLUS, 0.9), [HV_SETTING])
        with pytest.raises(InsufficientDataError):
            estimate_link_metrics(recs, "AC")

    def test_zero_counts(self):
        recs = [SettingRecord(HV_SETTING, np.zeros(4), 1.0), SettingRecord(DA_SETTING, np.ones(4), 1.0)]
        with pytest.raises(InsufficientDataError):
            estimate_link_metrics(recs, "AC")

    def test_records_merge(self):
        recs = analytic_records(werner(BellKind.PHI_PLUS, 0.9), [HV_SETTING, DA_SETTING])
        doubled = estimate_link_metrics(recs + recs, "AC")
        single = estimate_link_metrics(recs, "AC")
        assert doubled.v_hv == pytest.approx(single.v_hv)
        assert doubled.coincidence_rate == pytest.approx(single.coincidence_rate)

    def test_fidelity_from_tomography_records(self):
        state = werner(BellKind.PHI_MINUS, 0.9)
        m = estimate_link_metrics(analytic_records(state, basis_pair_settings()), "AD", BellKind.PHI_MINUS)
        assert m.fidelity == pytest.approx((1 + 3 * 0.9) / 4, abs=1e-9)

    def test_tomography_with_unequal_exposures(self):
        state = werner(BellKind.PHI_PLUS, 0.8)
        recs = [analytic_records(state, [s], duration=1.0 + i)[0] for i, s in enumerate(basis_pair_settings())]
        _, f = run_tomography(recs, BellKind.PHI_PLUS)
        assert f == pytest.approx(0.85, abs=1e-9)

    def test_run_tomography_pure(self):
        state = werner(BellKind.PHI_PLUS, 1.0)
        _, f = run_tomography(analytic_records(state, basis_pair_settings()), BellKind.PHI_PLUS)
        assert f == pytest.approx(1.0, abs=1e-9)


def _metric(name, sifted, secure):
    return LinkMetrics(name, BellKind.PHI_PLUS, sifted, 0.0, 1.0, 1.0, 0.0, sifted, secure, secure, sifted, sifted)


class TestNetworkReport:
    def test_totals_and_partition(self, reference_topology):
        ms = {lk.name: _metric(lk.name, 1000.0 + i, 100.0 + i) for i, lk in enumerate(reference_topology.links)}
        r = network_report(reference_topology, ms)
        assert r.sifted_total == pytest.approx(sum(1000.0 + i for i in range(12)), rel=1e-9)
        assert r.secure_total == pytest.approx(sum(100.0 + i for i in range(12)), rel=1e-9)
        assert r.partition["AC"] is BellKind.PHI_PLUS and r.partition["AD"] is BellKind.PHI_MINUS

    def test_missing_links(self, reference_topology):
        ms = {lk.name: _metric(lk.name, 1.0, 1.0) for lk in reference_topology.links[2:]}
        with pytest.raises(IncompleteReportError) as err:
            network_report(reference_topology, ms)
        assert err.value.missing == ["AC", "AD"]

    def test_zero(self, reference_topology):
        r = network_report(reference_topology, {lk.name: _metric(lk.name, 0.0, 0.0) for lk in reference_topology.links})
        assert r.sifted_total == 0 and r.secure_total == 0

    @given(st.lists(st.floats(0, 1e6), min_size=12, max_size=12), st.randoms())
    def test_permutation_invariant(self, values, rnd):
        topo = build_paper_n6()
        names = [lk.name for lk in topo.links]
        items = [(n, _metric(n, v, v / 3)) for n, v in zip(names, values)]
        a = network_report(topo, dict(items))
        rnd.shuffle(items)
        b = network_report(topo, dict(items))
        assert a.sifted_total == b.sifted_total and a.secure_total == b.secure_total

    def test_json_roundtrip(self, reference_topology, tmp_path):
        ms = {lk.name: _metric(lk.name, 10.0, 1.0) for lk in reference_topology.links}
        r = network_report(reference_topology, ms, {"AB": np.array([1.0, 2.0, 3.0, 4.0])})
        write_report_json(r, tmp_path / "r.json")
        back = read_report_json(tmp_path / "r.json")
        assert back.sifted_total == r.sifted_total
        assert back.links["AC"] == r.links["AC"]
        np.testing.assert_array_equal(back.same_splitter["AB"], [1, 2, 3, 4])

    def test_link_csv(self, reference_topology, tmp_path):
        ms = {lk.name: _metric(lk.name, 10.0, 1.0) for lk in reference_topology.links}
        write_link_csv(network_report(reference_topology, ms), tmp_path / "l.csv")
        lines = (tmp_path / "l.csv").read_text().splitlines()
        assert lines[0] == "link,coinc_rate,acc_rate,v_hv,v_da,qber,s,fidelity,sifted,secure"
        assert len(lines) == 13

    def test_histogram_csv(self, tmp_path):
        write_histogram_csv(delay_scan([0, 10], [0, 10], 4, 2, 2), tmp_path / "h.csv")
        assert (tmp_path / "h.csv").read_text().splitlines()[:2] == ["delay_ps,counts", "-4.0,0"]


@pytest.fixture(scope="module")
def setup():
    layout = make_sections(3, [0.2] * 6)
    topo = build_paper_n6(detector={"efficiency": 0.6, "dark_rate": 100.0}, layout=layout)
    params = SourceParams(1.0, TempProfile(39.7, 4.95, 3.0, 0.085, 2.63, 1.0), layout)
    states = link_states(topo, StateModel(0.9))
    runs = run_campaign(topo, params, states, SimConfig(0.05, 4), plan_runs(topo, chsh=True, links=["AC"]))
    return topo, runs


class TestFromTags:
    def test_analyzer(self, setup):
        topo, runs = setup
        an = LinkAnalyzer().fit(runs, topo)
        assert set(an.metrics_) == {lk.name for lk in topo.links}
        assert an.metrics_["AC"].s_param is not None and an.metrics_["AD"].s_param is None
        assert 2.2 < an.metrics_["AC"].s_param < 2.8
        assert set(an.report_.same_splitter) == {"AB", "CD", "EF"}
        assert len(an.transform()) == 12

    def test_threads_do_not_change_result(self, setup):
        topo, runs = setup
        a = LinkAnalyzer().fit(runs, topo).report_
        b = LinkAnalyzer(threads=3).fit(runs, topo).report_
        assert a.to_dict() == b.to_dict()

    def test_sklearn_api(self):
        an = LinkAnalyzer(window_ps=1000)
        assert clone(an).get_params()["window_ps"] == 1000

    def test_missing_channels(self, setup):
        topo, runs = setup
        hv = runs[0]
        stripped = TimeTagSet({k: v for k, v in hv.channels.items() if k not in (0, 1)}, hv.meta)
        with pytest.raises(IncompleteReportError):
            records_from_tags(stripped, topo, topo.link("AC"))

    def test_empty_run_gives_no_records(self, setup):
        topo, _ = setup
        empty = TimeTagSet({}, {"duration": 1.0, "settings": {}})
        assert records_from_tags(empty, topo, topo.link("AC")) == []

    def test_random_basis_records(self):
        layout = make_sections(3, [0.2] * 6)
        topo = build_paper_n6(detector={"efficiency": 0.6}, layout=layout)
        params = SourceParams(1.0, TempProfile(39.7, 4.95, 3.0, 0.085, 2.63, 1.0), layout)
        states = link_states(topo, StateModel(0.95))
        runs = run_campaign(topo, params, states, SimConfig(0.1, 4), plan_runs(topo, random_basis=0.5))
        fixed = run_campaign(topo, params, states, SimConfig(0.1, 4), plan_runs(topo))
        r = LinkAnalyzer().fit(runs, topo).metrics_["AC"]
        f = LinkAnalyzer().fit(fixed, topo).metrics_["AC"]
        assert abs(r.c_hv - f.c_hv) <= 4 * math.sqrt(f.c_hv * 0.1 * 4) / 0.1
        assert abs(r.v_hv - f.v_hv) < 0.03
