"""Address-to-device mapping from a declared network topology.

The topology is an explicit JSON document, never inferred from traffic:

    {"label": "<str>", "devices": [{"name": "<str>", "role": "scada|field|router|other",
                                    "substation": "<str|absent>", "addrs": ["<ipv4>", ...]}]}

A bundled fixture (``wscc9.topology.json``) models a 9-bus, three-substation
test system with a control-center SCADA master, three generators, three
loads, and four routers.
"""

import importlib.resources
import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import BinaryIO

from .errors import FormatError, ValidationError
from .ingest import CaptureWindow, Dnp3MessageType

DEFAULT_TOPOLOGY_RESOURCE = "wscc9.topology.json"


class DeviceRole(Enum):
    SCADA_MASTER = "scada"
    FIELD_DEVICE = "field"
    ROUTER = "router"
    OTHER = "other"


@dataclass(frozen=True)
class Device:
    name: str
    role: DeviceRole
    addrs: frozenset[str]
    substation: str | None = None


@dataclass(frozen=True)
class Topology:
    """Validated device inventory; immutable and safe for concurrent reads.

    Construction enforces: unique device names, address sets disjoint across
    devices, and exactly one SCADA master.
    """

    devices: tuple[Device, ...]
    label: str = ""
    _by_addr: dict = field(init=False, repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        names = Counter(d.name for d in self.devices)
        dupes = sorted(n for n, c in names.items() if c > 1)
        if dupes:
            raise ValidationError(f"duplicate device names: {', '.join(dupes)}")

        by_addr: dict[str, Device] = {}
        for dev in self.devices:
            for addr in dev.addrs:
                if addr in by_addr:
                    raise ValidationError(
                        f"address {addr} claimed by both "
                        f"{by_addr[addr].name!r} and {dev.name!r}"
                    )
                by_addr[addr] = dev

        masters = [d.name for d in self.devices if d.role is DeviceRole.SCADA_MASTER]
        if len(masters) != 1:
            raise ValidationError(
                f"topology must declare exactly one SCADA master, found "
                f"{len(masters)}: {sorted(masters)}"
            )
        object.__setattr__(self, "_by_addr", by_addr)

    @property
    def scada_master(self) -> Device:
        return next(d for d in self.devices if d.role is DeviceRole.SCADA_MASTER)

    def resolve(self, addr: str) -> Device | None:
        """Return the unique device owning addr, or None if undeclared."""
        return self._by_addr.get(addr)

    def device(self, name: str) -> Device | None:
        return next((d for d in self.devices if d.name == name), None)

    def roles(self) -> dict[str, DeviceRole]:
        return {d.name: d.role for d in self.devices}


def load_topology(stream: BinaryIO | bytes, label: str | None = None) -> Topology:
    """Parse and validate a topology document."""
    data = stream if isinstance(stream, bytes) else stream.read()
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError(f"topology is not valid json: {exc.msg}")
    if not isinstance(doc, dict) or not isinstance(doc.get("devices"), list):
        raise FormatError("topology document must be an object with a 'devices' list")

    devices = []
    for i, entry in enumerate(doc["devices"]):
        if not isinstance(entry, dict):
            raise FormatError(f"devices[{i}] is not an object")
        name = entry.get("name")
        if not isinstance(name, str) or not name:
            raise FormatError(f"devices[{i}] needs a non-empty 'name'")
        try:
            role = DeviceRole(entry.get("role"))
        except ValueError:
            raise FormatError(f"device {name!r} has unknown role {entry.get('role')!r}")
        addrs = entry.get("addrs", [])
        if not isinstance(addrs, list) or not all(isinstance(a, str) for a in addrs):
            raise FormatError(f"device {name!r}: 'addrs' must be a list of strings")
        substation = entry.get("substation")
        if substation is not None and not isinstance(substation, str):
            raise FormatError(f"device {name!r}: 'substation' must be a string")
        devices.append(Device(name, role, frozenset(addrs), substation))

    doc_label = doc.get("label", "")
    return Topology(tuple(devices), label if label is not None else doc_label)


def default_topology_bytes() -> bytes:
    return (
        importlib.resources.files("cyberdep")
        .joinpath("data", DEFAULT_TOPOLOGY_RESOURCE)
        .read_bytes()
    )


def default_topology() -> Topology:
    """The bundled 9-bus fixture topology."""
    return load_topology(default_topology_bytes())


@dataclass(frozen=True)
class MappedMessage:
    src: Device
    dst: Device
    message_type: Dnp3MessageType
    ts_us: int


@dataclass(frozen=True)
class UnmappedReport:
    """Records dropped because an endpoint address is not in the topology."""

    records: int = 0
    by_addr: dict = field(default_factory=dict)  # addr -> occurrence count


def map_window(
    topology: Topology, window: CaptureWindow
) -> tuple[tuple[MappedMessage, ...], UnmappedReport]:
    """Resolve both endpoints of every record to devices.

    Records with any unresolvable endpoint are excluded and accounted in the
    report (each unknown address counted per occurrence). Output order equals
    window record order.
    """
    mapped: list[MappedMessage] = []
    unknown: Counter = Counter()
    dropped = 0
    for r in window.records:
        src = topology.resolve(r.src_addr)
        dst = topology.resolve(r.dst_addr)
        if src is None or dst is None:
            dropped += 1
            if src is None:
                unknown[r.src_addr] += 1
            if dst is None:
                unknown[r.dst_addr] += 1
            continue
        mapped.append(MappedMessage(src, dst, r.message_type, r.ts_us))
    return tuple(mapped), UnmappedReport(records=dropped, by_addr=dict(unknown))
