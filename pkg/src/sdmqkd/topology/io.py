"""JSON and DOT serialisation of topologies."""

import json

from ..exceptions import DataParseError
from ..source import Section, SectionLayout, source_name
from .model import BeamSplitter, Topology, User


def topology_to_dict(topo):
    return {
        "scheme": topo.scheme,
        "claims_full_mesh": topo.claims_full_mesh,
        "layout": {
            "k_sources": topo.layout.k_sources,
            "sections": [
                {
                    "index": s.index,
                    "label": s.label,
                    "source": s.source,
                    "arc_start": s.arc_start,
                    "arc_end": s.arc_end,
                    "coupling_efficiency": s.coupling_efficiency,
                    "singles_rate": s.singles_rate,
                }
                for s in topo.layout.sections
            ],
        },
        "splitters": [
            {
                "id": b.id,
                "input_sections": list(b.input_sections),
                "output_users": list(b.output_users),
                "transmit_ratio": b.transmit_ratio,
                "input_transmission": None if b.input_transmission is None else list(b.input_transmission),
            }
            for b in topo.splitters
        ],
        "users": [
            {
                "id": u.id,
                "name": u.name,
                "efficiency": u.efficiency,
                "dark_rate": u.dark_rate,
                "jitter_sigma": u.jitter_sigma,
                "path_reflections": u.path_reflections,
            }
            for u in topo.users
        ],
        "parity_table": None if topo.parity_table is None else {k: v.value for k, v in topo.parity_table.items()},
        # derived; informational only, recomputed on load
        "links": [
            {
                "name": lk.name,
                "users": [topo.user(lk.user_a).name, topo.user(lk.user_b).name],
                "sources": [source_name(s) for s in lk.sources],
                "bell": None if lk.bell is None else lk.bell.value,
                "route_prob_a": lk.route_prob_a,
                "route_prob_b": lk.route_prob_b,
            }
            for lk in topo.links
        ],
    }


def topology_from_dict(data):
    try:
        layout = SectionLayout(
            data["layout"]["k_sources"],
            [Section(**s) for s in data["layout"]["sections"]],
        )
        splitters = [BeamSplitter(**b) for b in data["splitters"]]
        users = [User(**u) for u in data["users"]]
        return Topology(
            data["scheme"],
            layout,
            splitters,
            users,
            parity_table=data.get("parity_table"),
            claims_full_mesh=data.get("claims_full_mesh", False),
        )
    except (KeyError, TypeError) as exc:
        raise DataParseError(f"malformed topology document: {exc}") from exc


def dump_topology(topo, path):
    with open(path, "w") as fh:
        json.dump(topology_to_dict(topo), fh, indent=2)


def load_topology(path):
    with open(path) as fh:
        return topology_from_dict(json.load(fh))


def to_dot(topo):
    """Undirected graph: users grouped by splitter, edges labelled source/state."""
    lines = ["graph network {", "  node [shape=circle];"]
    for bs in topo.splitters:
        lines.append(f"  subgraph cluster_bs{bs.id} {{")
        lines.append(f'    label="BS{bs.id + 1}";')
        for uid in bs.output_users:
            try:
                lines.append(f'    "{topo.user(uid).name}";')
            except KeyError:
                continue
        lines.append("  }")
    for lk in topo.links:
        a, b = topo.user(lk.user_a).name, topo.user(lk.user_b).name
        srcs = "+".join(source_name(s) for s in lk.sources)
        bell = "?" if lk.bell is None else ("phi+" if lk.bell.value == "PhiPlus" else "phi-")
        lines.append(f'  "{a}" -- "{b}" [label="{srcs} {bell}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
