"""Network wiring: ring sections -> beam splitters -> users.

A link is any user pair that receives the two diametric sections of some
source through *different* splitters. Links are derived, never stored
independently, so a topology cannot drift out of sync with its wiring.
"""

import warnings
from dataclasses import dataclass, field, replace

from .._validation import check_non_negative, check_unit_interval
from ..exceptions import DomainError, UnknownParityError
from ..qstate.states import BellKind
from ..source import SectionLayout, source_name

SCHEMES = ("cyclic", "complete", "paper_n6")
DEFAULT_JITTER_PS = 150.0


class ParityConflictWarning(UserWarning):
    """A supplied parity table disagrees with the reflection-count parity."""


@dataclass(frozen=True)
class User:
    id: int
    name: str
    efficiency: float = 1.0
    dark_rate: float = 0.0
    jitter_sigma: float = DEFAULT_JITTER_PS
    path_reflections: int | None = None

    def __post_init__(self):
        check_unit_interval(self.efficiency, f"efficiency[{self.name}]", open_low=True)
        check_non_negative(self.dark_rate, f"dark_rate[{self.name}]")
        check_non_negative(self.jitter_sigma, f"jitter_sigma[{self.name}]")
        if self.path_reflections is not None and self.path_reflections < 0:
            raise DomainError("path_reflections must be non-negative")


@dataclass(frozen=True)
class BeamSplitter:
    """A 2x2 splitter, or a multiport combiner when ``input_transmission`` is set.

    For a plain splitter input ``k`` is transmitted (no reflection) to output
    ``k`` with probability ``transmit_ratio`` and reflected to the other output
    otherwise. A combiner first passes input ``k`` with probability
    ``input_transmission[k]``, then splits ``transmit_ratio : 1 - transmit_ratio``.
    """

    id: int
    input_sections: tuple
    output_users: tuple
    transmit_ratio: float = 0.5
    input_transmission: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "input_sections", tuple(self.input_sections))
        object.__setattr__(self, "output_users", tuple(self.output_users))
        if self.input_transmission is not None:
            object.__setattr__(self, "input_transmission", tuple(float(x) for x in self.input_transmission))
            if len(self.input_transmission) != len(self.input_sections):
                raise DomainError("input_transmission needs one entry per input")
        if len(self.output_users) != 2:
            raise DomainError(f"splitter {self.id} must have exactly 2 outputs")
        if not (0.0 < self.transmit_ratio < 1.0):
            raise DomainError(f"transmit_ratio must lie in (0, 1), got {self.transmit_ratio!r}")

    @property
    def is_combiner(self):
        return self.input_transmission is not None

    def route_probability(self, input_pos, output_pos):
        t = self.transmit_ratio
        if self.is_combiner:
            return self.input_transmission[input_pos] * (t if output_pos == 0 else 1.0 - t)
        return t if input_pos == output_pos else 1.0 - t

    def reflections(self, input_pos, output_pos):
        return 0 if input_pos % 2 == output_pos else 1


@dataclass(frozen=True)
class LinkPath:
    """One source's contribution to a link."""

    source: int
    section_a: int
    section_b: int
    route_prob_a: float
    route_prob_b: float
    reflections_a: int
    reflections_b: int


@dataclass(frozen=True)
class Link:
    user_a: int
    user_b: int
    name: str
    paths: tuple
    bell: BellKind | None = None

    @property
    def source(self):
        return self.paths[0].source

    @property
    def sources(self):
        return tuple(p.source for p in self.paths)

    @property
    def route_prob_a(self):
        return self.paths[0].route_prob_a

    @property
    def route_prob_b(self):
        return self.paths[0].route_prob_b


def user_names(n):
    return [chr(ord("A") + i) if i < 26 else f"U{i + 1}" for i in range(n)]


def _pair_name(a, b):
    return a.name + b.name if len(a.name) == len(b.name) == 1 else f"{a.name}-{b.name}"


@dataclass(frozen=True, eq=False)
class Topology:
    scheme: str
    layout: SectionLayout
    splitters: tuple
    users: tuple
    parity_table: dict | None = None
    claims_full_mesh: bool = False
    links: tuple = field(init=False, default=())

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        object.__setattr__(self, "splitters", tuple(self.splitters))
        object.__setattr__(self, "users", tuple(self.users))
        if self.parity_table is not None:
            table = {k: BellKind.parse(v) for k, v in dict(self.parity_table).items()}
            object.__setattr__(self, "parity_table", table)
        raw = _derive_links(self)
        object.__setattr__(self, "links", tuple(replace(lk, bell=_link_parity(self, lk)) for lk in raw))

    # lookups -----------------------------------------------------------
    def user(self, key):
        for u in self.users:
            if u.id == key or u.name == key:
                return u
        raise KeyError(key)

    def link(self, name):
        for lk in self.links:
            if lk.name == name or lk.name == name[::-1]:
                return lk
        raise KeyError(name)

    def splitter_of_user(self, user_id):
        for bs in self.splitters:
            if user_id in bs.output_users:
                return bs
        return None

    def splitter_of_section(self, section):
        for bs in self.splitters:
            if section in bs.input_sections:
                return bs
        return None

    def user_feeds(self, user_id):
        """``(section, route probability)`` pairs of every section reaching a user."""
        bs = self.splitter_of_user(user_id)
        if bs is None:
            return []
        out = bs.output_users.index(user_id)
        return [(sec, bs.route_probability(k, out)) for k, sec in enumerate(bs.input_sections)]

    def same_splitter_pairs(self):
        pairs = []
        for bs in self.splitters:
            a, b = (self.user(u) for u in bs.output_users)
            pairs.append((a, b))
        return pairs

    def pair_name(self, a, b):
        a, b = self.user(a), self.user(b)
        if self.users.index(a) > self.users.index(b):
            a, b = b, a
        return _pair_name(a, b)

    @property
    def n_sources(self):
        return self.layout.k_sources

    def with_users(self, users):
        return replace(self, users=tuple(users))

    def with_splitters(self, splitters):
        return replace(self, splitters=tuple(splitters))


def _derive_links(topo):
    layout = topo.layout
    order = {u.id: i for i, u in enumerate(topo.users)}
    found = {}
    for src in range(layout.k_sources):
        sec_p, sec_q = layout.source_sections(src)
        bs_p, bs_q = topo.splitter_of_section(sec_p), topo.splitter_of_section(sec_q)
        if bs_p is None or bs_q is None or bs_p.id == bs_q.id:
            continue
        kp, kq = bs_p.input_sections.index(sec_p), bs_q.input_sections.index(sec_q)
        for op, up in enumerate(bs_p.output_users):
            for oq, uq in enumerate(bs_q.output_users):
                if up not in order or uq not in order:
                    continue
                path = LinkPath(
                    src, sec_p, sec_q,
                    bs_p.route_probability(kp, op), bs_q.route_probability(kq, oq),
                    bs_p.reflections(kp, op), bs_q.reflections(kq, oq),
                )
                first, second = up, uq
                if order[up] > order[uq]:
                    first, second = uq, up
                    path = LinkPath(src, sec_q, sec_p, path.route_prob_b, path.route_prob_a,
                                    path.reflections_b, path.reflections_a)
                found.setdefault((first, second), []).append(path)
    links = []
    for (a, b) in sorted(found, key=lambda p: (order[p[0]], order[p[1]])):
        ua, ub = topo.user(a), topo.user(b)
        links.append(Link(a, b, _pair_name(ua, ub), tuple(found[(a, b)])))
    return links


def computed_parity(topo, link):
    """Parity from reflection counts, or ``None`` when mirror counts are unknown.

    An even difference keeps the source's ``|phi->``; an odd one flips it.
    """
    ua, ub = topo.user(link.user_a), topo.user(link.user_b)
    if ua.path_reflections is None or ub.path_reflections is None:
        return None
    path = link.paths[0]
    ra = path.reflections_a + ua.path_reflections
    rb = path.reflections_b + ub.path_reflections
    return BellKind.PHI_MINUS if (ra - rb) % 2 == 0 else BellKind.PHI_PLUS


def _table_lookup(table, name):
    if table is None:
        return None
    if name in table:
        return table[name]
    return table.get(name[::-1])


def _link_parity(topo, link):
    from_table = _table_lookup(topo.parity_table, link.name)
    computed = computed_parity(topo, link)
    if from_table is not None:
        if computed is not None and computed is not from_table:
            warnings.warn(
                f"link {link.name}: parity table says {from_table.value}, "
                f"reflection counts give {computed.value}; using the table",
                ParityConflictWarning,
                stacklevel=4,
            )
        return from_table
    return computed


def bell_parity(topo, link):
    """Bell state shared over a link; a parity table overrides reflection counts."""
    kind = _link_parity(topo, link)
    if kind is None:
        raise UnknownParityError(f"no reflection data or parity entry for link {link.name}")
    return kind


def link_graph(topo):
    return list(topo.links)


def parity_conflicts(topo):
    out = []
    for lk in topo.links:
        table = _table_lookup(topo.parity_table, lk.name)
        comp = computed_parity(topo, lk)
        if table is not None and comp is not None and table is not comp:
            out.append(lk.name)
    return out


def cross_splitter_pairs(topo):
    """All user pairs that sit on different splitters."""
    pairs = []
    users = [u for u in topo.users if topo.splitter_of_user(u.id) is not None]
    for i, a in enumerate(users):
        for b in users[i + 1:]:
            if topo.splitter_of_user(a.id).id != topo.splitter_of_user(b.id).id:
                pairs.append((a.id, b.id))
    return pairs


def validate(topo, expect_full_mesh=None):
    """Return human-readable invariant violations; an empty list means valid."""
    problems = []
    layout = topo.layout
    feeds = {}
    for bs in topo.splitters:
        if len(set(bs.input_sections)) != len(bs.input_sections):
            problems.append(f"splitter {bs.id}: repeated input section")
        for sec in bs.input_sections:
            feeds[sec] = feeds.get(sec, 0) + 1
        srcs = [layout.sections[s].source for s in bs.input_sections if 0 <= s < len(layout.sections)]
        if len(set(srcs)) != len(srcs):
            dup = sorted({s for s in srcs if srcs.count(s) > 1})
            problems.append(
                "source self-interference: both sections of source "
                + ", ".join(source_name(s) for s in dup)
                + f" feed splitter {bs.id}"
            )
        if not bs.is_combiner and len(bs.input_sections) != 2:
            problems.append(f"splitter {bs.id}: a 2x2 splitter needs exactly 2 inputs")
    for sec in layout.sections:
        n = feeds.get(sec.index, 0)
        if n != 1:
            problems.append(f"section {sec.label} feeds {n} splitter inputs (expected 1)")
    outs = {}
    for bs in topo.splitters:
        for u in bs.output_users:
            outs[u] = outs.get(u, 0) + 1
    for u in topo.users:
        if outs.get(u.id, 0) != 1:
            problems.append(f"user {u.name} sits on {outs.get(u.id, 0)} splitter outputs (expected 1)")
    for src in range(layout.k_sources):
        reached = set()
        for sec in layout.source_sections(src):
            bs = topo.splitter_of_section(sec)
            if bs is not None:
                reached.add(bs.id)
        if len(reached) != 2:
            problems.append(f"source {source_name(src)} reaches {len(reached)} splitters (expected 2)")
    for lk in topo.links:
        if topo.splitter_of_user(lk.user_a) is topo.splitter_of_user(lk.user_b):
            problems.append(f"link {lk.name} joins two users of the same splitter")
        if lk.bell is None:
            problems.append(f"link {lk.name} has undetermined Bell parity")
    if topo.scheme == "paper_n6":
        if len(topo.users) != 6:
            problems.append(f"paper_n6 needs 6 users, has {len(topo.users)}")
        if layout.k_sources != 3:
            problems.append(f"paper_n6 needs 3 sources, has {layout.k_sources}")
        if len(topo.links) != 12:
            problems.append(f"paper_n6 needs 12 links, has {len(topo.links)}")
    full = topo.claims_full_mesh if expect_full_mesh is None else expect_full_mesh
    if full:
        wanted = len(cross_splitter_pairs(topo))
        if len(topo.links) < wanted:
            problems.append(f"incomplete connectivity: {len(topo.links)} of {wanted} pairs")
    return problems


def remove_splitter(topo, splitter_id):
    """Topology after a splitter (and so its two users) drops out."""
    bs = next((b for b in topo.splitters if b.id == splitter_id), None)
    if bs is None:
        raise KeyError(splitter_id)
    users = [u for u in topo.users if u.id not in bs.output_users]
    splitters = [b for b in topo.splitters if b.id != splitter_id]
    return replace(topo, users=tuple(users), splitters=tuple(splitters), claims_full_mesh=False)
