"""Run configuration: a single JSON document validated against a shipped schema."""

import copy
import json
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources

import jsonschema

from .exceptions import ConfigError
from .qstate.states import BellKind
from .sim.analytic import DEFAULT_WINDOW_PS, StateModel, calibrate_visibilities, link_states
from .sim.campaign import plan_runs
from .sim.montecarlo import SimConfig, config_hash
from .source import SourceParams, TempProfile, get_profile, make_sections
from .topology.build import build, build_paper_n6

PAPER_N6_CONFIG = "paper_n6.json"


@lru_cache(maxsize=1)
def config_schema():
    return json.loads(resources.files("sdmqkd.data").joinpath("config.schema.json").read_text())


def builtin_config_path(name=PAPER_N6_CONFIG):
    return resources.files("sdmqkd.data").joinpath(name)


def resolve_profile(spec):
    """A built-in profile by name, or an inline profile mapping."""
    try:
        return get_profile(spec) if isinstance(spec, str) else TempProfile.from_dict(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with helpers that build the model objects."""

    data: dict

    @classmethod
    def from_dict(cls, data):
        try:
            jsonschema.validate(data, config_schema())
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"invalid config at {where}: {exc.message}") from exc
        cfg = cls(copy.deepcopy(data))
        cfg._check_references()
        return cfg

    def _check_references(self):
        self.profile()
        topo = self.topology()
        names = {lk.name for lk in topo.links}
        sm = self.data.get("state_model", {})
        for key in ("link_visibilities", "measured_visibility_targets"):
            unknown = set(sm.get(key, {})) - names
            if unknown:
                raise ConfigError(f"state_model.{key} names unknown links: {sorted(unknown)}")
        users = {u.name for u in topo.users}
        unknown = set(self.data.get("users", {})) - users
        if unknown:
            raise ConfigError(f"users section names unknown users: {sorted(unknown)}")
        for p in self.data.get("scan", {}).get("profiles", []):
            resolve_profile(p)

    @property
    def hash(self):
        return config_hash(self.data)

    def section(self, name):
        return self.data.get(name, {})

    def profile(self):
        return resolve_profile(self.data["source"]["profile"])

    def topology(self):
        t = self.data["topology"]
        detector = self.section("detector")
        effs = self.data["source"].get("section_efficiencies")
        try:
            if t["scheme"] == "paper_n6":
                parity = t.get("parity_table")
                parity = None if parity is None else {k: BellKind.parse(v) for k, v in parity.items()}
                ratio = t.get("transmit_ratio")
                topo = build_paper_n6(
                    detector=detector,
                    parity_table=parity,
                    transmit_ratios=None if ratio is None else [ratio] * 3,
                    layout=make_sections(3, effs),
                )
            else:
                if "n_users" not in t:
                    raise ConfigError("topology.n_users is required for cyclic/complete schemes")
                topo = build(t["n_users"], t["scheme"], detector=detector,
                             transmit_ratio=t.get("transmit_ratio", 0.5), efficiencies=effs)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        overrides = self.section("users")
        if overrides:
            topo = topo.with_users(
                [replace(u, **overrides[u.name]) if u.name in overrides else u for u in topo.users]
            )
        return topo

    def source_params(self, topology=None):
        topology = self.topology() if topology is None else topology
        return SourceParams(float(self.data["source"]["pump_mw"]), self.profile(), topology.layout)

    @property
    def window_ps(self):
        return float(self.section("sim").get("window_ps", DEFAULT_WINDOW_PS))

    def states(self, topology=None, params=None, window_ps=None):
        """Link states and the list of links whose visibility target was clipped."""
        topology = self.topology() if topology is None else topology
        params = self.source_params(topology) if params is None else params
        sm = self.section("state_model")
        dephasing = float(sm.get("dephasing", 0.0)) if sm.get("model") == "phase-damped" else 0.0
        base = StateModel(float(sm.get("visibility", 1.0)), dephasing)
        overrides = {k: StateModel(v, dephasing) for k, v in sm.get("link_visibilities", {}).items()}
        clipped = []
        targets = sm.get("measured_visibility_targets")
        if targets:
            fitted, clipped = calibrate_visibilities(
                topology, params, targets, self.window_ps if window_ps is None else window_ps, dephasing
            )
            overrides.update(fitted)
        return link_states(topology, base, overrides), clipped

    def sim_config(self, seed=None, threads=None, window_ps=None, require_seed=True):
        s = self.section("sim")
        seed = s.get("seed") if seed is None else seed
        if seed is None and require_seed:
            raise ConfigError("a seed is required to simulate (sim.seed or --seed)")
        try:
            return SimConfig(
                duration=float(s.get("duration", 1.0)),
                seed=int(seed if seed is not None else 0),
                window_ps=self.window_ps if window_ps is None else float(window_ps),
                threads=int(s.get("threads", 1) if threads is None else threads),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def runs(self, topology=None):
        topology = self.topology() if topology is None else topology
        s = self.section("sim")
        return plan_runs(topology, chsh=s.get("chsh", False), tomography=s.get("tomography", False),
                         links=s.get("links"), random_basis=s.get("random_basis"))


def load_config(path):
    """Read and validate a config file.

    Raises:
        ConfigError: unreadable, not JSON, schema-invalid or unresolvable names.
    """
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(data)


def load_reference_config():
    return RunConfig.from_dict(json.loads(builtin_config_path().read_text()))
