"""Shared fixtures: a hand-weighted sample graph, topology factories, capture builders."""

import json

import pytest

from cyberdep.depgraph import DependencyGraph, DgEdge, DgNode, Normalization
from cyberdep.topology import Device, DeviceRole, Topology, default_topology


def jsonl_bytes(rows) -> bytes:
    return b"".join(
        json.dumps(row, separators=(",", ":")).encode() + b"\n" for row in rows
    )


def make_topology(n_field: int, scada_name: str = "scada") -> Topology:
    """One SCADA master plus n_field field devices on 10.9.1.0/24."""
    devices = [Device(scada_name, DeviceRole.SCADA_MASTER, frozenset({"10.9.0.1"}))]
    for i in range(n_field):
        devices.append(
            Device(
                f"dev-{i + 1:02d}",
                DeviceRole.FIELD_DEVICE,
                frozenset({f"10.9.1.{i + 1}"}),
            )
        )
    return Topology(tuple(devices), label=f"test-{n_field}-field")


def equal_flow_rows(topology: Topology, per_device: int) -> list[dict]:
    """Exactly per_device DNP3 messages between each field device and the master.

    Requests and responses alternate so both directions get exercised; after
    the SCADA collapse each device->master edge carries the same count.
    """
    scada_addr = min(topology.scada_master.addrs)
    fields = [d for d in topology.devices if d.role is DeviceRole.FIELD_DEVICE]
    rows = []
    ts = 0
    for dev in fields:
        addr = min(dev.addrs)
        for k in range(per_device):
            ts += 1000
            if k % 2 == 0:
                rows.append(
                    {"ts_us": ts, "src": scada_addr, "dst": addr,
                     "proto": "dnp3", "dnp3_fn": "read"}
                )
            else:
                rows.append(
                    {"ts_us": ts, "src": addr, "dst": scada_addr,
                     "proto": "dnp3", "dnp3_fn": "response"}
                )
    return rows


@pytest.fixture(scope="session")
def wscc() -> Topology:
    return default_topology()


@pytest.fixture
def sample_graph() -> DependencyGraph:
    """Two master processes feeding three field objects, hand-assigned weights.

    Weights are authored, not frequency-derived, so the graph carries no
    normalization constraint (the P->F4 pair alone sums past 1).
    """
    nodes = (
        DgNode("F2"),
        DgNode("F4"),
        DgNode("F7"),
        DgNode("P1"),
        DgNode("P9"),
    )
    edges = (
        DgEdge("P1", "F4", 0.3),
        DgEdge("P1", "F7", 0.7),
        DgEdge("P9", "F2", 0.2),
        DgEdge("P9", "F4", 0.8),
    )
    return DependencyGraph(nodes=nodes, edges=edges, normalization=Normalization.NONE)
