"""Packet-log ingestion: JSON Lines parsing, DNP3 filtering, CSV conversion.

Input is newline-delimited JSON, one message per line:

    {"ts_us": <int>, "src": "<ipv4>", "dst": "<ipv4>", "proto": "<str>", "dnp3_fn": "<str|absent>"}

``proto == "dnp3"`` marks DNP3 traffic; ``dnp3_fn`` selects one of the four
modeled function codes (request_link_status, read, response, direct_operate).
Any other ``dnp3_fn`` value, or its absence, yields ``Dnp3MessageType.OTHER``.
Unknown extra fields are ignored. Malformed lines are rejected and counted,
never fatal; whitespace-only lines are skipped without counting.
"""

import io
import ipaddress
import json
from dataclasses import dataclass, replace
from enum import Enum
from typing import BinaryIO

from .errors import FormatError


class Protocol(Enum):
    DNP3 = "dnp3"
    OTHER = "other"


class Dnp3MessageType(Enum):
    REQUEST_LINK_STATUS = "request_link_status"
    READ = "read"
    RESPOND = "response"
    DIRECT_OPERATE = "direct_operate"
    OTHER = "other"

    @property
    def wire(self) -> str:
        return self.value


#: The four DNP3 function codes that survive filtering, in canonical order.
DNP3_SYSCALLS = (
    Dnp3MessageType.REQUEST_LINK_STATUS,
    Dnp3MessageType.READ,
    Dnp3MessageType.RESPOND,
    Dnp3MessageType.DIRECT_OPERATE,
)

CSV_HEADER = "ts_us,src,dst,message_type"


def parse_message_type(value: str) -> Dnp3MessageType:
    """Map a wire string to a message type; anything unknown is OTHER."""
    try:
        return Dnp3MessageType(value)
    except ValueError:
        return Dnp3MessageType.OTHER


@dataclass(frozen=True)
class PacketRecord:
    """One timestamped protocol message between two endpoints."""

    ts_us: int
    src_addr: str
    dst_addr: str
    protocol: Protocol
    message_type: Dnp3MessageType
    raw_index: int  # 1-based line number in the source stream


@dataclass(frozen=True)
class IngestStats:
    total: int = 0
    parsed: int = 0
    rejected: int = 0
    filtered_out: int = 0


@dataclass(frozen=True)
class RejectedLine:
    line_no: int
    reason: str


@dataclass(frozen=True)
class CaptureWindow:
    """An immutable, time-ordered batch of packet records plus ingest accounting."""

    records: tuple[PacketRecord, ...]
    source_label: str = ""
    stats: IngestStats = IngestStats()
    rejections: tuple[RejectedLine, ...] = ()


def _validate_record(obj: dict, line_no: int) -> PacketRecord:
    ts = obj.get("ts_us")
    if not isinstance(ts, int) or isinstance(ts, bool):
        raise ValueError("ts_us must be an integer")
    if ts < 0:
        raise ValueError("ts_us must be >= 0")

    addrs = {}
    for key in ("src", "dst"):
        value = obj.get(key)
        if not isinstance(value, str):
            raise ValueError(f"{key} must be a string")
        try:
            ipaddress.IPv4Address(value)
        except ipaddress.AddressValueError:
            raise ValueError(f"{key} is not a valid IPv4 address: {value!r}")
        addrs[key] = value
    if addrs["src"] == addrs["dst"]:
        raise ValueError("src and dst must differ")

    proto = obj.get("proto")
    if not isinstance(proto, str):
        raise ValueError("proto must be a string")

    fn = obj.get("dnp3_fn")
    if fn is not None and not isinstance(fn, str):
        raise ValueError("dnp3_fn must be a string when present")

    if proto.lower() == "dnp3":
        protocol = Protocol.DNP3
        message_type = parse_message_type(fn) if fn is not None else Dnp3MessageType.OTHER
    else:
        protocol = Protocol.OTHER
        message_type = Dnp3MessageType.OTHER

    return PacketRecord(
        ts_us=ts,
        src_addr=addrs["src"],
        dst_addr=addrs["dst"],
        protocol=protocol,
        message_type=message_type,
        raw_index=line_no,
    )


def parse_packet_log(stream: BinaryIO | bytes, source_label: str = "") -> CaptureWindow:
    """Parse a JSON Lines byte stream into a CaptureWindow.

    Malformed lines never abort the stream: each is recorded in the
    rejection report with its 1-based line number. Records are ordered by
    (ts_us, raw_index) so downstream output is deterministic even when the
    input is not time-sorted.
    """
    if isinstance(stream, bytes):
        stream = io.BytesIO(stream)

    records: list[PacketRecord] = []
    rejections: list[RejectedLine] = []

    for line_no, raw in enumerate(stream, start=1):
        if not raw.strip():
            continue
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            rejections.append(RejectedLine(line_no, "invalid utf-8"))
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            rejections.append(RejectedLine(line_no, f"invalid json: {exc.msg}"))
            continue
        if not isinstance(obj, dict):
            rejections.append(RejectedLine(line_no, "not a json object"))
            continue
        try:
            records.append(_validate_record(obj, line_no))
        except ValueError as exc:
            rejections.append(RejectedLine(line_no, str(exc)))

    records.sort(key=lambda r: (r.ts_us, r.raw_index))
    stats = IngestStats(
        total=len(records) + len(rejections),
        parsed=len(records),
        rejected=len(rejections),
    )
    return CaptureWindow(
        records=tuple(records),
        source_label=source_label,
        stats=stats,
        rejections=tuple(rejections),
    )


def filter_dnp3(window: CaptureWindow) -> CaptureWindow:
    """Retain only DNP3 records carrying one of the four modeled function codes.

    Idempotent; record order is preserved and the dropped count is added to
    stats.filtered_out.
    """
    keep = tuple(
        r
        for r in window.records
        if r.protocol is Protocol.DNP3 and r.message_type in DNP3_SYSCALLS
    )
    dropped = len(window.records) - len(keep)
    stats = replace(window.stats, filtered_out=window.stats.filtered_out + dropped)
    return replace(window, records=keep, stats=stats)


def export_csv(window: CaptureWindow, out: BinaryIO) -> int:
    """Write the window as CSV (header ``ts_us,src,dst,message_type``), LF endings.

    Returns the number of data rows written.
    """
    out.write(CSV_HEADER.encode("ascii") + b"\n")
    for r in window.records:
        row = f"{r.ts_us},{r.src_addr},{r.dst_addr},{r.message_type.wire}\n"
        out.write(row.encode("ascii"))
    return len(window.records)


def parse_csv(stream: BinaryIO | bytes) -> list[tuple[int, str, str, Dnp3MessageType]]:
    """Read the CSV intermediate back into (ts_us, src, dst, message_type) tuples."""
    if isinstance(stream, bytes):
        stream = io.BytesIO(stream)
    text = io.TextIOWrapper(stream, encoding="ascii", newline="")

    header = text.readline().rstrip("\n")
    if header != CSV_HEADER:
        raise FormatError(f"unexpected CSV header: {header!r}")

    rows = []
    for line_no, line in enumerate(text, start=2):
        line = line.rstrip("\n")
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 4:
            raise FormatError(f"line {line_no}: expected 4 fields, got {len(fields)}")
        try:
            ts = int(fields[0])
        except ValueError:
            raise FormatError(f"line {line_no}: bad timestamp {fields[0]!r}")
        rows.append((ts, fields[1], fields[2], parse_message_type(fields[3])))
    return rows
