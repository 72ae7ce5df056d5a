"""Topology constructors for the reference six-user network and general N."""

from itertools import combinations
from math import comb

from ..exceptions import DomainError
from ..qstate.states import BellKind
from ..source import make_sections
from .model import BeamSplitter, Topology, User, user_names

PAPER_N6_PARITY = {
    **{name: BellKind.PHI_PLUS for name in ("AC", "AF", "BC", "BF", "CE", "DE")},
    **{name: BellKind.PHI_MINUS for name in ("AD", "AE", "BD", "BE", "CF", "DF")},
}

# splitter inputs by section label, outputs by user name
_PAPER_N6_WIRING = ((("1", "2"), ("A", "B")), (("3", "1'"), ("C", "D")), (("2'", "3'"), ("E", "F")))


def _make_users(n, detector=None, path_reflections=None):
    detector = dict(detector or {})
    return [
        User(i, name, path_reflections=path_reflections, **detector)
        for i, name in enumerate(user_names(n))
    ]


def build_paper_n6(detector=None, parity_table=None, transmit_ratios=None, layout=None):
    """Six users, three sources, 12 links, wired as three 2x2 splitters.

    Args:
        detector: keyword defaults for every :class:`User` (efficiency,
            dark_rate, jitter_sigma).
        parity_table: link name -> Bell kind; defaults to the measured
            partition (six of each kind).
        transmit_ratios: per-splitter transmission, default 0.5 each.
        layout: a precomputed three-source :class:`SectionLayout`.
    """
    layout = make_sections(3) if layout is None else layout
    if layout.k_sources != 3:
        raise DomainError("the six-user network needs a three-source layout")
    users = _make_users(6, detector)
    by_name = {u.name: u.id for u in users}
    ratios = list(transmit_ratios) if transmit_ratios is not None else [0.5] * 3
    splitters = []
    for i, ((in_a, in_b), (out_a, out_b)) in enumerate(_PAPER_N6_WIRING):
        splitters.append(
            BeamSplitter(
                i,
                (layout.by_label(in_a).index, layout.by_label(in_b).index),
                (by_name[out_a], by_name[out_b]),
                transmit_ratio=ratios[i],
            )
        )
    table = PAPER_N6_PARITY if parity_table is None else parity_table
    return Topology("paper_n6", layout, splitters, users, parity_table=table, claims_full_mesh=True)


def sources_required(n_users, scheme):
    k = n_users // 2
    return k if scheme == "cyclic" else comb(k, 2)


def expected_link_count(n_users, scheme):
    k = n_users // 2
    if scheme == "complete":
        return n_users * (n_users - 2) // 2
    return 4 if k == 2 else 2 * n_users


def build(n_users, scheme="cyclic", detector=None, transmit_ratio=0.5,
          efficiencies=None, combiner_transmission=None, path_reflections=0):
    """General even-N network.

    ``cyclic`` uses N/2 sources on a ring of splitters: splitter ``i`` gets the
    primary section of source ``i`` and the secondary section of source
    ``i + 1``. ``complete`` uses one source per splitter pair, C(N/2, 2) in
    all, with (N/2 - 1)-input combiners in front of each user pair.
    """
    if int(n_users) != n_users or n_users < 4 or n_users % 2:
        raise DomainError(f"N must be even and >= 4, got {n_users!r}")
    if scheme not in ("cyclic", "complete"):
        raise DomainError(f"scheme must be 'cyclic' or 'complete', got {scheme!r}")
    n_users = int(n_users)
    k = n_users // 2
    users = _make_users(n_users, detector, path_reflections)
    if scheme == "cyclic":
        layout = make_sections(k, efficiencies)
        splitters = [
            BeamSplitter(i, (i, k + (i + 1) % k), (2 * i, 2 * i + 1), transmit_ratio=transmit_ratio)
            for i in range(k)
        ]
        return Topology("cyclic", layout, splitters, users, claims_full_mesh=False)

    pairs = list(combinations(range(k), 2))
    n_src = len(pairs)
    layout = make_sections(n_src, efficiencies)
    inputs = {i: [] for i in range(k)}
    for s, (i, j) in enumerate(pairs):
        inputs[i].append(s)
        inputs[j].append(n_src + s)
    splitters = []
    for i in range(k):
        n_in = len(inputs[i])
        trans = combiner_transmission[i] if combiner_transmission is not None else [1.0 / n_in] * n_in
        splitters.append(
            BeamSplitter(i, inputs[i], (2 * i, 2 * i + 1), transmit_ratio=transmit_ratio,
                         input_transmission=trans)
        )
    return Topology("complete", layout, splitters, users, claims_full_mesh=True)
