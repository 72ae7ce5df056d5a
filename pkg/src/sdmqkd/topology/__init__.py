"""Network graph construction, Bell parity and validation."""

from .build import (
    PAPER_N6_PARITY,
    build,
    build_paper_n6,
    expected_link_count,
    sources_required,
)
from .io import dump_topology, load_topology, to_dot, topology_from_dict, topology_to_dict
from .model import (
    BeamSplitter,
    Link,
    LinkPath,
    ParityConflictWarning,
    Topology,
    User,
    bell_parity,
    computed_parity,
    cross_splitter_pairs,
    link_graph,
    parity_conflicts,
    remove_splitter,
    validate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
