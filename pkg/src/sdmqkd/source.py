"""Empirical model of a sectioned SPDC ring source.

Rates are linear in pump power with zero intercept and the Bell parameter
falls linearly from a measured anchor point. Nothing here solves
phase matching; temperature enters only through tabulated profiles.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ._validation import check_non_negative, check_positive, check_unit_interval
from .exceptions import DomainError, OutOfModelError
from .qstate.states import TSIRELSON

RING_MODEL_RANGE = (37.0, 40.5)
_ROMAN = ["I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X", "XI", "XII"]


@dataclass(frozen=True)
class TempProfile:
    """Source behaviour at one crystal temperature.

    Attributes:
        temperature: crystal temperature, deg C.
        ring_diameter: emission ring diameter, mm.
        pair_rate_slope: whole-ring pair rate per unit pump power, MHz/mW.
        s_slope: decrease of the Bell parameter per mW of pump.
        s_ref: Bell parameter measured at ``p_ref``.
        p_ref: pump power of the reference measurement, mW.
    """

    temperature: float
    ring_diameter: float
    pair_rate_slope: float
    s_slope: float
    s_ref: float
    p_ref: float
    name: str = ""

    def __post_init__(self):
        check_positive(self.ring_diameter, "ring_diameter")
        check_non_negative(self.pair_rate_slope, "pair_rate_slope")
        check_non_negative(self.s_slope, "s_slope")
        check_positive(self.p_ref, "p_ref")
        if not (2.0 < self.s_ref <= TSIRELSON + 1e-12):
            raise DomainError(f"s_ref must lie in (2, 2*sqrt(2)], got {self.s_ref!r}")

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: data[k] for k in data if k in cls.__dataclass_fields__})

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


BUILTIN_PROFILES = {
    "T39.7": TempProfile(39.7, 4.95, 0.056, 0.085, 2.63, 1.0, name="T39.7"),
    "T37.7": TempProfile(37.7, 6.55, 0.041, 0.068, 2.6, 2.1, name="T37.7"),
}


def get_profile(name):
    try:
        return BUILTIN_PROFILES[name]
    except KeyError:
        raise DomainError(
            f"unknown source profile {name!r}; built-ins are {sorted(BUILTIN_PROFILES)}"
        ) from None


@dataclass(frozen=True)
class Section:
    index: int
    label: str
    source: int
    arc_start: float
    arc_end: float
    coupling_efficiency: float = 0.10
    singles_rate: float | None = None

    @property
    def arc(self):
        return self.arc_end - self.arc_start

    @property
    def source_name(self):
        return source_name(self.source)


def source_name(index):
    return _ROMAN[index] if index < len(_ROMAN) else f"S{index + 1}"


@dataclass(frozen=True)
class SectionLayout:
    """``2K`` ring sections; section ``i`` and ``(i + K) mod 2K`` form source ``i mod K``."""

    k_sources: int
    sections: tuple = field(default=())

    def __post_init__(self):
        if self.k_sources < 1:
            raise DomainError("k_sources must be >= 1")
        object.__setattr__(self, "sections", tuple(self.sections))
        if len(self.sections) != 2 * self.k_sources:
            raise DomainError(f"expected {2 * self.k_sources} sections, got {len(self.sections)}")
        for s in self.sections:
            check_unit_interval(s.coupling_efficiency, f"coupling_efficiency[{s.label}]", open_low=True)

    def partner(self, index):
        return (index + self.k_sources) % (2 * self.k_sources)

    def by_label(self, label):
        for s in self.sections:
            if s.label == label:
                return s
        raise KeyError(label)

    def source_sections(self, source):
        """Indices of the (primary, secondary) sections of a source."""
        return source, source + self.k_sources

    def with_efficiencies(self, efficiencies):
        efficiencies = list(efficiencies)
        if len(efficiencies) != len(self.sections):
            raise DomainError(f"need {len(self.sections)} efficiencies, got {len(efficiencies)}")
        return SectionLayout(
            self.k_sources,
            [replace(s, coupling_efficiency=float(e)) for s, e in zip(self.sections, efficiencies)],
        )


def make_sections(k_sources, efficiencies=None):
    """Cut the ring into ``2K`` equal arcs labelled ``1..K`` and ``1'..K'``."""
    if int(k_sources) != k_sources or k_sources < 1:
        raise DomainError(f"k_sources must be a positive integer, got {k_sources!r}")
    k = int(k_sources)
    width = 180.0 / k
    if efficiencies is None:
        efficiencies = [0.10] * (2 * k)
    efficiencies = list(efficiencies)
    if len(efficiencies) != 2 * k:
        raise DomainError(f"need {2 * k} efficiencies, got {len(efficiencies)}")
    sections = []
    for i in range(2 * k):
        src = i % k
        start = i * width
        label = str(src + 1) + ("'" if i >= k else "")
        sections.append(Section(i, label, src, start, start + width, float(efficiencies[i])))
    return SectionLayout(k, sections)


@dataclass(frozen=True)
class SourceParams:
    pump_mw: float
    profile: TempProfile
    layout: SectionLayout

    def __post_init__(self):
        check_non_negative(self.pump_mw, "pump_mw")

    def at_power(self, pump_mw):
        return replace(self, pump_mw=pump_mw)


def ring_pair_rate(params):
    """Whole-ring pair rate in pairs/s."""
    return params.profile.pair_rate_slope * params.pump_mw * 1e6


def pair_rate(params):
    """Pair rate of one diametric source, pairs/s (ring rate shared evenly)."""
    return ring_pair_rate(params) / params.layout.k_sources


def bell_s_vs_power(params):
    p = params.profile
    s = p.s_ref + p.s_slope * (p.p_ref - params.pump_mw)
    return float(min(max(s, 0.0), TSIRELSON))


def visibility_from_s(s):
    """Werner visibility that yields CHSH value ``s`` at the canonical angles."""
    return float(min(max(s / TSIRELSON, 0.0), 1.0))


def ring_diameter(temperature):
    """Ring diameter in mm, linear through the two tabulated profiles."""
    lo, hi = RING_MODEL_RANGE
    if not (lo <= temperature <= hi):
        raise OutOfModelError(f"temperature {temperature} C outside model range [{lo}, {hi}]")
    a, b = BUILTIN_PROFILES["T39.7"], BUILTIN_PROFILES["T37.7"]
    slope = (a.ring_diameter - b.ring_diameter) / (a.temperature - b.temperature)
    return float(b.ring_diameter + slope * (temperature - b.temperature))


def section_singles_rate(layout, params, index, detector_efficiency=1.0):
    """Detected singles of one section: ring photon rate x arc fraction x efficiencies."""
    if not (0 <= index < len(layout.sections)):
        raise IndexError(f"section index {index} out of range")
    s = layout.sections[index]
    photons = 2.0 * ring_pair_rate(params)
    return photons * (s.arc / 360.0) * s.coupling_efficiency * detector_efficiency


def fit_layout_to_singles(singles, params, detector_efficiency=1.0):
    """Layout whose coupling efficiencies reproduce measured section singles."""
    layout = params.layout
    singles = np.asarray(singles, dtype=float)
    if singles.size != len(layout.sections):
        raise DomainError(f"need {len(layout.sections)} singles rates, got {singles.size}")
    photons = 2.0 * ring_pair_rate(params)
    sections = []
    for s, rate in zip(layout.sections, singles):
        eff = rate / (photons * (s.arc / 360.0) * detector_efficiency)
        sections.append(replace(s, coupling_efficiency=float(eff), singles_rate=float(rate)))
    return SectionLayout(layout.k_sources, sections)
