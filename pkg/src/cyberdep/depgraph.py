"""Dependency-graph construction and noisy-OR conditional probabilities.

Traffic from device ``a`` to device ``b`` makes ``b`` depend on ``a``; the
dependency is a directed edge a -> b whose weight is the communication
frequency expressed as a probability. Nodes are binary random variables.
Given a target node and a set of active parents, the conditional probability
of the target is combined noisy-OR style: parents act as independent
sufficient causes.

Two normalization schemes are supported for turning counts into edge
probabilities:

* ``global`` (default): edge probability = edge count / total message count
  in the window, so all edge probabilities sum to 1.
* ``per-sink``: edge count / total count into that edge's sink.

Graphs loaded from external files may carry ``none``, meaning probabilities
were supplied directly and no sum constraint is enforced.
"""

import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .errors import QueryError, ValidationError
from .ingest import DNP3_SYSCALLS, CaptureWindow, Dnp3MessageType, filter_dnp3
from .topology import DeviceRole, MappedMessage, Topology, map_window

PROBABILITY_SUM_TOL = 1e-9


class Normalization(Enum):
    GLOBAL = "global"
    PER_SINK = "per-sink"
    NONE = "none"


def format_probability(p: float) -> str:
    """Render an edge probability for display: two decimals, e.g. '0.17'."""
    return f"{p:.2f}"


# ---------------------------------------------------------------------------
# Flow counting
# ---------------------------------------------------------------------------


@dataclass
class FlowCounts:
    """Per (source device, sink device) message counts with a per-type breakdown."""

    entries: dict[tuple[str, str], dict[Dnp3MessageType, int]]
    window_label: str = ""

    def entry_total(self, pair: tuple[str, str]) -> int:
        return sum(self.entries[pair].values())

    @property
    def grand_total(self) -> int:
        return sum(self.entry_total(pair) for pair in self.entries)


def count_flows(mapped: Iterable[MappedMessage], window_label: str = "") -> FlowCounts:
    """Aggregate mapped messages by (src name, dst name) and message type."""
    entries: dict[tuple[str, str], dict[Dnp3MessageType, int]] = {}
    for m in mapped:
        by_type = entries.setdefault((m.src.name, m.dst.name), {})
        by_type[m.message_type] = by_type.get(m.message_type, 0) + 1
    return FlowCounts(entries, window_label)


def merge_counts(a: FlowCounts, b: FlowCounts) -> FlowCounts:
    """Combine partial counts from independent shards (associative, commutative)."""
    entries: dict[tuple[str, str], dict[Dnp3MessageType, int]] = {
        pair: dict(by_type) for pair, by_type in a.entries.items()
    }
    for pair, by_type in b.entries.items():
        tgt = entries.setdefault(pair, {})
        for mt, n in by_type.items():
            tgt[mt] = tgt.get(mt, 0) + n
    label = a.window_label if a.window_label == b.window_label else ""
    return FlowCounts(entries, label)


def collapse_to_scada(counts: FlowCounts, topology: Topology) -> tuple[FlowCounts, int]:
    """Merge both directions of device<->SCADA traffic into one device->SCADA entry.

    Entries not involving the SCADA master are dropped; their combined total
    is returned alongside the collapsed counts.
    """
    scada = topology.scada_master.name
    entries: dict[tuple[str, str], dict[Dnp3MessageType, int]] = {}
    dropped_total = 0
    for (src, dst), by_type in counts.entries.items():
        if dst == scada:
            device = src
        elif src == scada:
            device = dst
        else:
            dropped_total += sum(by_type.values())
            continue
        tgt = entries.setdefault((device, scada), {})
        for mt, n in by_type.items():
            tgt[mt] = tgt.get(mt, 0) + n
    return FlowCounts(entries, counts.window_label), dropped_total


# ---------------------------------------------------------------------------
# Graph types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DgNode:
    """A device node; modeled as a binary random variable."""

    name: str
    role: DeviceRole = DeviceRole.OTHER


@dataclass(frozen=True, eq=True)
class DgEdge:
    """Directed dependency source -> sink with its probability weight.

    ``by_type`` is the security context: the per-message-type count breakdown
    behind this edge. It is normalized to always carry the four modeled
    function codes.
    """

    source: str
    sink: str
    probability: float
    count: int = 0
    by_type: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.source == self.sink:
            raise ValidationError(f"self-edge not allowed: {self.source!r}")
        if not (0.0 <= self.probability <= 1.0):
            raise ValidationError(
                f"edge {self.source}->{self.sink}: probability "
                f"{self.probability!r} outside [0, 1]"
            )
        if self.count < 0:
            raise ValidationError(f"edge {self.source}->{self.sink}: negative count")
        canonical = {mt: int(self.by_type.get(mt, 0)) for mt in DNP3_SYSCALLS}
        if any(n < 0 for n in canonical.values()):
            raise ValidationError(f"edge {self.source}->{self.sink}: negative type count")
        object.__setattr__(self, "by_type", canonical)

    @property
    def key(self) -> tuple[str, str]:
        return (self.source, self.sink)


@dataclass(frozen=True)
class DependencyGraph:
    """Immutable probability-weighted digraph over device nodes.

    Nodes and edges are stored sorted (by name, by (source, sink)) so every
    serialization of the same graph is byte-identical. Under GLOBAL
    normalization the edge probabilities of a nonempty graph sum to 1.
    """

    nodes: tuple[DgNode, ...]
    edges: tuple[DgEdge, ...]
    normalization: Normalization = Normalization.NONE
    grand_total: int = 0
    _in_edges: dict = field(init=False, repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        nodes = tuple(sorted(self.nodes, key=lambda n: n.name))
        edges = tuple(sorted(self.edges, key=lambda e: e.key))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)

        names = set()
        for n in nodes:
            if n.name in names:
                raise ValidationError(f"duplicate node {n.name!r}")
            names.add(n.name)

        seen = set()
        for e in edges:
            if e.key in seen:
                raise ValidationError(f"duplicate edge {e.source}->{e.sink}")
            seen.add(e.key)
            for endpoint in e.key:
                if endpoint not in names:
                    raise ValidationError(
                        f"edge {e.source}->{e.sink} references undeclared node "
                        f"{endpoint!r}"
                    )

        if self.grand_total < 0:
            raise ValidationError("grand_total must be >= 0")

        if self.normalization is not Normalization.NONE:
            for e in edges:
                if (e.probability == 0.0) != (e.count == 0):
                    raise ValidationError(
                        f"edge {e.source}->{e.sink}: zero probability must "
                        f"coincide with zero count"
                    )
        if self.normalization is Normalization.GLOBAL and edges:
            total = math.fsum(e.probability for e in edges)
            if abs(total - 1.0) > PROBABILITY_SUM_TOL:
                raise ValidationError(
                    f"global normalization violated: probabilities sum to {total!r}"
                )
        if self.normalization is Normalization.PER_SINK and edges:
            per_sink: dict[str, list[float]] = defaultdict(list)
            for e in edges:
                per_sink[e.sink].append(e.probability)
            for sink, probs in per_sink.items():
                total = math.fsum(probs)
                if abs(total - 1.0) > PROBABILITY_SUM_TOL:
                    raise ValidationError(
                        f"per-sink normalization violated at {sink!r}: sum {total!r}"
                    )

        in_edges: dict[str, list[DgEdge]] = defaultdict(list)
        for e in edges:
            in_edges[e.sink].append(e)
        object.__setattr__(self, "_in_edges", dict(in_edges))

    def has_node(self, name: str) -> bool:
        return any(n.name == name for n in self.nodes)

    def parents_of(self, name: str) -> tuple[DgEdge, ...]:
        """In-edges of a node, sorted by source name."""
        return tuple(self._in_edges.get(name, ()))

    def edge(self, source: str, sink: str) -> DgEdge | None:
        return next((e for e in self.edges if e.key == (source, sink)), None)


# ---------------------------------------------------------------------------
# Probabilities
# ---------------------------------------------------------------------------


def edge_probabilities(
    counts: FlowCounts,
    normalization: Normalization = Normalization.GLOBAL,
    roles: Mapping[str, DeviceRole] | None = None,
) -> DependencyGraph:
    """Convert flow counts to a probability-weighted dependency graph.

    Under GLOBAL normalization each edge gets entry_total / grand_total; under
    PER_SINK, entry_total / (total into that sink). Zero traffic yields an
    empty graph. ``roles`` decorates nodes for export; unlisted names get
    DeviceRole.OTHER.
    """
    if normalization is Normalization.NONE:
        raise ValidationError("edge_probabilities requires global or per-sink normalization")
    roles = roles or {}

    grand_total = counts.grand_total
    if grand_total == 0:
        return DependencyGraph((), (), normalization, 0)

    sink_totals: dict[str, int] = defaultdict(int)
    for (_, dst), by_type in counts.entries.items():
        sink_totals[dst] += sum(by_type.values())

    names = sorted({name for pair in counts.entries for name in pair})
    nodes = tuple(DgNode(name, roles.get(name, DeviceRole.OTHER)) for name in names)

    edges = []
    for (src, dst), by_type in counts.entries.items():
        total = sum(by_type.values())
        denominator = grand_total if normalization is Normalization.GLOBAL else sink_totals[dst]
        edges.append(
            DgEdge(
                source=src,
                sink=dst,
                probability=total / denominator,
                count=total,
                by_type=dict(by_type),
            )
        )
    return DependencyGraph(nodes, tuple(edges), normalization, grand_total)


def noisy_or(parent_probs: Sequence[float], active: Sequence[int | bool]) -> float:
    """Noisy-OR combination: 1 - prod_i (1 - a_i * p_i).

    ``parent_probs`` are independent per-parent influence probabilities,
    ``active`` their 0/1 evidence flags. An empty parent set yields 0.0.
    Raises ValueError on length mismatch or a probability outside [0, 1].
    """
    if len(parent_probs) != len(active):
        raise ValueError(
            f"length mismatch: {len(parent_probs)} probabilities, {len(active)} flags"
        )
    product = 1.0
    for p, a in zip(parent_probs, active):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability outside [0, 1]: {p!r}")
        if a:
            product *= 1.0 - p
    return 1.0 - product


@dataclass(frozen=True)
class ConditionalQuery:
    """Probability query for one target node given active-parent evidence.

    ``evidence`` maps parent node names to active flags; parents absent from
    the map are treated as inactive.
    """

    target: str
    evidence: Mapping[str, bool] = field(default_factory=dict)


def query(graph: DependencyGraph, q: ConditionalQuery) -> float:
    """Evaluate a noisy-OR conditional probability over the target's in-edges."""
    if not graph.has_node(q.target):
        raise QueryError(f"unknown target node: {q.target!r}")
    parents = graph.parents_of(q.target)
    parent_names = {e.source for e in parents}
    for name in q.evidence:
        if name not in parent_names:
            raise QueryError(f"{name!r} is not a parent of {q.target!r}")
    probs = [e.probability for e in parents]
    flags = [bool(q.evidence.get(e.source, False)) for e in parents]
    return noisy_or(probs, flags)


# ---------------------------------------------------------------------------
# End-to-end build
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GraphOptions:
    scada_collapse: bool = True
    normalization: Normalization = Normalization.GLOBAL
    include_topology_nodes: bool = False


def build_graph(
    window: CaptureWindow,
    topology: Topology,
    options: GraphOptions = GraphOptions(),
) -> DependencyGraph:
    """Run the full pipeline: filter, map, count, optionally collapse, normalize.

    Deterministic: identical inputs produce identical graphs. With
    ``include_topology_nodes`` the SCADA master and field devices appear as
    nodes even when they carried no traffic.
    """
    filtered = filter_dnp3(window)
    mapped, _ = map_window(topology, filtered)
    counts = count_flows(mapped, window.source_label)
    if options.scada_collapse:
        counts, _ = collapse_to_scada(counts, topology)
    graph = edge_probabilities(counts, options.normalization, topology.roles())

    if options.include_topology_nodes:
        present = {n.name for n in graph.nodes}
        extra = tuple(
            DgNode(d.name, d.role)
            for d in topology.devices
            if d.role in (DeviceRole.SCADA_MASTER, DeviceRole.FIELD_DEVICE)
            and d.name not in present
        )
        if extra:
            graph = DependencyGraph(
                graph.nodes + extra, graph.edges, graph.normalization, graph.grand_total
            )
    return graph
