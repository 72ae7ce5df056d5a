import json
from pathlib import Path

import pytest

from sdmqkd.config import RunConfig, builtin_config_path, config_schema, load_config, load_reference_config
from sdmqkd.exceptions import ConfigError

ROOT = Path(__file__).resolve().parents[1]


def reference_dict():
    return json.loads(builtin_config_path().read_text())


class TestSchema:
    def test_docs_copy_matches_package(self):
        assert json.loads((ROOT / "docs" / "config.schema.json").read_text()) == config_schema()

    def test_reference_config_valid(self, reference_config):
        assert reference_config.topology().scheme == "paper_n6"
        assert len(reference_config.topology().links) == 12

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda d: d.pop("topology"),
            lambda d: d["topology"].update(scheme="ring"),
            lambda d: d["source"].update(pump_mw=-1),
            lambda d: d.update(unknown_key=1),
            lambda d: d["detector"].update(efficiency=1.5),
            lambda d: d["sim"].update(seed=-1),
        ],
    )
    def test_schema_rejects(self, mutate):
        d = reference_dict()
        mutate(d)
        with pytest.raises(ConfigError):
            RunConfig.from_dict(d)

    def test_unknown_profile(self):
        d = reference_dict()
        d["source"]["profile"] = "T12.0"
        with pytest.raises(ConfigError, match="unknown source profile"):
            RunConfig.from_dict(d)

    def test_unknown_link_in_targets(self):
        d = reference_dict()
        d["state_model"]["measured_visibility_targets"]["AB"] = 0.8
        with pytest.raises(ConfigError, match="unknown links"):
            RunConfig.from_dict(d)

    def test_odd_n(self):
        with pytest.raises(ConfigError, match="N must be even"):
            RunConfig.from_dict({"topology": {"scheme": "cyclic", "n_users": 5},
                                 "source": {"profile": "T39.7", "pump_mw": 1.0}})


class TestBuilders:
    def test_seed_required(self):
        cfg = RunConfig.from_dict({"topology": {"scheme": "cyclic", "n_users": 4},
                                   "source": {"profile": "T39.7", "pump_mw": 1.0}})
        with pytest.raises(ConfigError, match="seed"):
            cfg.sim_config()
        assert cfg.sim_config(seed=3).seed == 3

    def test_zero_duration(self):
        d = reference_dict()
        d["sim"]["duration"] = 0
        with pytest.raises(ConfigError):
            RunConfig.from_dict(d).sim_config()

    def test_states_calibrated(self, reference_config):
        states, clipped = reference_config.states()
        assert clipped == []
        assert len(states) == 12

    def test_user_overrides(self):
        d = reference_dict()
        d["users"] = {"A": {"dark_rate": 5.0}}
        topo = RunConfig.from_dict(d).topology()
        assert topo.user("A").dark_rate == 5.0
        assert topo.user("B").dark_rate == 1000.0

    def test_phase_damped(self):
        d = reference_dict()
        d["state_model"] = {"model": "phase-damped", "visibility": 0.98, "dephasing": 0.05}
        states, _ = RunConfig.from_dict(d).states()
        rho = states["AC"].rho
        assert rho[0, 3].real == pytest.approx(0.98 * 0.95 / 2)

    def test_hash_stable(self):
        assert load_reference_config().hash == load_reference_config().hash

    def test_load_errors(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(bad)

    def test_section_singles_in_band(self, reference_config):
        from sdmqkd.source import section_singles_rate

        topo = reference_config.topology()
        params = reference_config.source_params(topo)
        for i in range(6):
            assert 1.3e6 <= section_singles_rate(topo.layout, params, i, 0.65) <= 2.0e6
