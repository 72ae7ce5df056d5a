import numpy as np
import pytest

from sdmqkd.analysis import count_coincidences
from sdmqkd.qstate import visibility_from_outcomes
from sdmqkd.sim import (
    FixedSetting,
    RandomBasis,
    SimConfig,
    StateModel,
    analytic_link_rates,
    link_states,
    measured_visibility,
    simulate,
    user_singles,
)
from sdmqkd.sim.campaign import plan_runs, run_campaign, run_seed
from sdmqkd.sim.timetags import channel_id, write_binary
from sdmqkd.source import SourceParams, TempProfile, make_sections
from sdmqkd.topology import build_paper_n6


def network(slope=2.0, dark=200.0, eff=0.2, det=0.6, v=0.9):
    layout = make_sections(3, [eff] * 6)
    topo = build_paper_n6(detector={"efficiency": det, "dark_rate": dark}, layout=layout)
    params = SourceParams(1.0, TempProfile(39.7, 4.95, slope, 0.085, 2.63, 1.0), layout)
    return topo, params, link_states(topo, StateModel(v))


class TestSimConfig:
    @pytest.mark.parametrize("kwargs", [dict(duration=0), dict(duration=-1), dict(window_ps=0), dict(seed=-3)])
    def test_invalid(self, kwargs):
        base = dict(duration=1.0, seed=1)
        base.update(kwargs)
        with pytest.raises(ValueError):
            SimConfig(**base)

    def test_random_basis_probability(self):
        with pytest.raises(ValueError):
            RandomBasis(1.5)


class TestDeterminism:
    def test_same_seed_same_bytes(self, tmp_path):
        topo, params, states = network()
        cfg = SimConfig(0.02, 99)
        a, b = simulate(topo, params, states, cfg), simulate(topo, params, states, cfg)
        write_binary(a, tmp_path / "a.bin")
        write_binary(b, tmp_path / "b.bin")
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()
        assert a.meta["config_hash"] == b.meta["config_hash"]

    def test_thread_count_irrelevant(self):
        topo, params, states = network()
        a = simulate(topo, params, states, SimConfig(0.02, 5, threads=1))
        b = simulate(topo, params, states, SimConfig(0.02, 5, threads=4))
        assert a == b

    def test_seed_matters(self):
        topo, params, states = network()
        assert simulate(topo, params, states, SimConfig(0.02, 1)) != simulate(topo, params, states, SimConfig(0.02, 2))

    def test_run_seeds_distinct(self):
        assert len({run_seed(7, i) for i in range(50)}) == 50


class TestStatistics:
    def test_dark_counts_only(self):
        topo, params, states = network(slope=0.0, dark=1000.0)
        tags = simulate(topo, params, states, SimConfig(1.0, 3))
        assert len(tags.channels) == 12
        for arr in tags.channels.values():
            assert abs(arr.size - 1000) <= 3 * np.sqrt(1000)

    def test_tags_sorted_and_in_range(self):
        topo, params, states = network()
        tags = simulate(topo, params, states, SimConfig(0.05, 8))
        for arr in tags.channels.values():
            assert np.all(np.diff(arr) > 0)
            assert arr.min() >= 0 and arr.max() <= 0.05e12

    def test_linear_in_duration(self):
        topo, params, states = network()
        n1 = simulate(topo, params, states, SimConfig(0.02, 4)).n_tags()
        n2 = simulate(topo, params, states, SimConfig(0.06, 4)).n_tags()
        expected = 3 * n1
        assert abs(n2 - expected) <= 4 * np.sqrt(expected * 4)

    def test_singles_match_oracle(self):
        topo, params, states = network()
        d = 0.1
        tags = simulate(topo, params, states, SimConfig(d, 21))
        singles = user_singles(topo, params)
        for i, u in enumerate(topo.users):
            for port in (0, 1):
                expected = singles[u.id] / 2 * d
                assert abs(tags[channel_id(i, port)].size - expected) <= 4 * np.sqrt(expected)

    def test_visibility_converges(self):
        topo, params, states = network(slope=7.2, dark=0.0, eff=1.0, det=1.0, v=0.85)
        d = 0.2
        tags = simulate(topo, params, states, SimConfig(d, 17))
        rates = analytic_link_rates(topo, params, states)
        a, b = 0, 2  # users A and C
        counts = [count_coincidences(tags[channel_id(a, p)], tags[channel_id(b, q)], 2000)
                  for p, q in ((0, 0), (0, 1), (1, 0), (1, 1))]
        assert sum(counts) >= 1e5
        assert abs(visibility_from_outcomes(counts) - measured_visibility(rates["AC"], states["AC"])) <= 0.02
        assert abs(visibility_from_outcomes(counts) - 0.85) <= 0.02

    def test_user_subset(self):
        topo, params, states = network()
        tags = simulate(topo, params, states, SimConfig(0.02, 2, users=("A", "C")))
        assert sorted(tags.channels) == [0, 1, 8, 9]
        assert set(tags.meta["settings"]) == {"A", "C"}

    def test_random_basis_ports(self):
        topo, params, states = network()
        sched = {u.name: RandomBasis(0.5) for u in topo.users}
        tags = simulate(topo, params, states, SimConfig(0.05, 2, schedule=sched))
        assert len(tags.channels) == 24
        hv = tags[0].size + tags[1].size
        da = tags[2].size + tags[3].size
        assert abs(hv - da) <= 4 * np.sqrt(hv + da)

    def test_noise_override(self):
        topo, params, states = network(slope=0.0, dark=0.0)
        tags = simulate(topo, params, states, SimConfig(0.5, 2, noise={"A": {"dark_rate": 2000.0}}))
        assert tags[0].size > 800 and tags[4].size == 0

    def test_pure_state_has_no_errors(self):
        topo, params, states = network(dark=0.0, v=1.0)
        tags = simulate(topo, params, states, SimConfig(0.05, 1, schedule={"A": FixedSetting(0), "C": FixedSetting(0)},
                                                        users=("A", "C")))
        # phi+ on AC: no HV anticorrelated counts beyond accidentals
        cross = count_coincidences(tags[0], tags[9], 2000) + count_coincidences(tags[1], tags[8], 2000)
        co = count_coincidences(tags[0], tags[8], 2000) + count_coincidences(tags[1], tags[9], 2000)
        assert cross < 0.01 * co


class TestCampaign:
    def test_plan_runs(self, reference_topology):
        assert [r.label for r in plan_runs(reference_topology)] == ["hv", "da"]
        full = plan_runs(reference_topology, chsh=True, tomography=True, links=["AC"])
        labels = [r.label for r in full]
        assert sum(lab.startswith("AC:chsh") for lab in labels) == 4
        # HV and DA already appear among the nine tomography bases, CHSH settings do not
        assert sum(lab.startswith("AC:tomo") for lab in labels) == 9
        assert plan_runs(reference_topology, random_basis=0.5)[0].label == "random"

    def test_run_campaign_labels(self):
        topo, params, states = network()
        runs = run_campaign(topo, params, states, SimConfig(0.01, 3), plan_runs(topo))
        assert [r.meta["run"] for r in runs] == ["hv", "da"]
        assert runs[0].meta["settings"]["A"]["theta"] == 0.0
        assert runs[1].meta["settings"]["A"]["theta"] == 45.0
