"""Deterministic synthetic DNP3 traffic generation.

A TrafficProfile assigns rate weights to field devices; the generator emits
N JSON Lines records of device<->SCADA traffic whose per-device shares
converge to the normalized weights. Everything is driven by one seeded RNG,
so a fixed (profile, topology) pair always produces byte-identical output.

Five built-in profiles encode the qualitative traffic patterns of the four
disturbance scenarios (plus one divergent DOS variant): rankings, not
magnitudes.

Request-type messages (read, direct_operate, request_link_status) travel
master -> device; responses travel device -> master. Timestamps are synthetic
monotone microsecond ticks. A nonzero ``noise_fraction`` intersperses
non-DNP3 flood records from an external address, which the DNP3 filter is
expected to drop.
"""

import json
import math
import random
from dataclasses import dataclass, field
from typing import BinaryIO

from .errors import FormatError, ValidationError
from .ingest import DNP3_SYSCALLS, Dnp3MessageType, parse_message_type
from .scenario import ScenarioKind
from .topology import DeviceRole, Topology

MIX_SUM_TOL = 1e-9
DEFAULT_N_MESSAGES = 10_000
DEFAULT_SEED = 1

#: Address used as the source of injected non-DNP3 noise records (TEST-NET-3).
NOISE_SOURCE_ADDR = "203.0.113.66"

DEFAULT_MESSAGE_MIX = {
    Dnp3MessageType.READ: 0.35,
    Dnp3MessageType.RESPOND: 0.35,
    Dnp3MessageType.REQUEST_LINK_STATUS: 0.20,
    Dnp3MessageType.DIRECT_OPERATE: 0.10,
}

_MASTER_TO_DEVICE = (
    Dnp3MessageType.REQUEST_LINK_STATUS,
    Dnp3MessageType.READ,
    Dnp3MessageType.DIRECT_OPERATE,
)


@dataclass(frozen=True)
class TrafficProfile:
    """Generative description of one scenario's traffic shape."""

    scenario: ScenarioKind
    weights: dict  # device name -> nonnegative rate weight
    message_mix: dict = field(default_factory=lambda: dict(DEFAULT_MESSAGE_MIX))
    n_messages: int = DEFAULT_N_MESSAGES
    seed: int = DEFAULT_SEED
    noise_fraction: float = 0.0

    def __post_init__(self):
        if not self.weights:
            raise ValidationError("profile needs at least one weighted device")
        for name, w in self.weights.items():
            if w < 0:
                raise ValidationError(f"negative weight for {name!r}")
        if not any(w > 0 for w in self.weights.values()):
            raise ValidationError("profile weights must not all be zero")
        if set(self.message_mix) - set(DNP3_SYSCALLS):
            raise ValidationError("message mix may only contain the four DNP3 syscalls")
        if any(v < 0 for v in self.message_mix.values()):
            raise ValidationError("message mix values must be nonnegative")
        if abs(sum(self.message_mix.values()) - 1.0) > MIX_SUM_TOL:
            raise ValidationError("message mix must sum to 1")
        if self.n_messages < 0:
            raise ValidationError("n_messages must be >= 0")
        if not 0.0 <= self.noise_fraction < 1.0:
            raise ValidationError("noise_fraction must be in [0, 1)")


def _weighted_picker(pairs: list, rng: random.Random):
    # cumulative-sum sampling keyed only to rng.random(), which is stable
    # across Python versions for a fixed seed
    total = math.fsum(w for _, w in pairs)
    cumulative = []
    acc = 0.0
    for item, w in pairs:
        acc += w
        cumulative.append((acc, item))

    def pick():
        x = rng.random() * total
        for bound, item in cumulative:
            if x < bound:
                return item
        return cumulative[-1][1]

    return pick


def generate(profile: TrafficProfile, topology: Topology) -> bytes:
    """Emit the profile as a JSON Lines byte stream.

    Every weighted device must exist in the topology; the SCADA master is the
    peer of all generated DNP3 traffic and cannot itself carry a weight.
    """
    scada = topology.scada_master
    scada_addr = min(scada.addrs)

    device_addr = {}
    for name in sorted(profile.weights):
        dev = topology.device(name)
        if dev is None:
            raise ValidationError(f"profile weights unknown device {name!r}")
        if dev.role is DeviceRole.SCADA_MASTER:
            raise ValidationError("the SCADA master cannot carry a traffic weight")
        if not dev.addrs:
            raise ValidationError(f"device {name!r} has no address")
        device_addr[name] = min(dev.addrs)

    rng = random.Random(profile.seed)
    pick_device = _weighted_picker(
        [(name, profile.weights[name]) for name in sorted(profile.weights)], rng
    )
    pick_type = _weighted_picker(
        [(mt, profile.message_mix.get(mt, 0.0)) for mt in DNP3_SYSCALLS], rng
    )

    n_noise = round(profile.n_messages * profile.noise_fraction)
    stride = profile.n_messages // n_noise if n_noise else 0

    lines = []
    tick = 0

    def emit(obj) -> None:
        nonlocal tick
        tick += 1
        lines.append(json.dumps({"ts_us": tick * 1000, **obj}, separators=(",", ":")))

    noise_emitted = 0
    for i in range(profile.n_messages):
        device = pick_device()
        mt = pick_type()
        addr = device_addr[device]
        if mt in _MASTER_TO_DEVICE:
            src, dst = scada_addr, addr
        else:
            src, dst = addr, scada_addr
        emit({"src": src, "dst": dst, "proto": "dnp3", "dnp3_fn": mt.wire})
        if n_noise and noise_emitted < n_noise and (i + 1) % stride == 0:
            target = device_addr[pick_device()]
            emit({"src": NOISE_SOURCE_ADDR, "dst": target, "proto": "tcp"})
            noise_emitted += 1

    return ("\n".join(lines) + "\n").encode("ascii") if lines else b""


# ---------------------------------------------------------------------------
# Built-in profiles
# ---------------------------------------------------------------------------

# Weight boosts relative to the 1.0 default carried by every field device.
# These encode scenario rankings, deliberately not magnitudes.
_PROFILE_BOOSTS: dict[str, dict[str, float]] = {
    "baseline": {},
    "dos_only": {"load-5": 5.0, "load-6": 5.0},
    "no_mitigation": {"gen-1": 4.0, "load-5": 4.0},
    "with_mitigation": {"load-5": 5.0, "load-6": 5.0, "gen-1": 3.0},
    "dos_run3_variant": {"load-5": 0.2, "load-6": 0.2},
}

_PROFILE_SCENARIO: dict[str, ScenarioKind] = {
    "baseline": ScenarioKind.BASELINE,
    "dos_only": ScenarioKind.DOS_ONLY,
    "no_mitigation": ScenarioKind.NO_MITIGATION,
    "with_mitigation": ScenarioKind.WITH_MITIGATION,
    "dos_run3_variant": ScenarioKind.DOS_ONLY,
}

BUILTIN_PROFILES = tuple(_PROFILE_BOOSTS)


def builtin_profile(
    name: str,
    topology: Topology,
    n_messages: int = DEFAULT_N_MESSAGES,
    seed: int = DEFAULT_SEED,
    noise_fraction: float = 0.0,
) -> TrafficProfile:
    """Instantiate a built-in profile over the topology's field devices."""
    if name not in _PROFILE_BOOSTS:
        raise ValidationError(
            f"unknown profile {name!r}; built-ins: {', '.join(BUILTIN_PROFILES)}"
        )
    weights = {
        d.name: 1.0 for d in topology.devices if d.role is DeviceRole.FIELD_DEVICE
    }
    if not weights:
        raise ValidationError("topology has no field devices to weight")
    for device, weight in _PROFILE_BOOSTS[name].items():
        if device not in weights:
            raise ValidationError(
                f"profile {name!r} expects field device {device!r} in the topology"
            )
        weights[device] = weight
    return TrafficProfile(
        scenario=_PROFILE_SCENARIO[name],
        weights=weights,
        n_messages=n_messages,
        seed=seed,
        noise_fraction=noise_fraction,
    )


def load_profile(stream: BinaryIO | bytes) -> TrafficProfile:
    """Parse a profile JSON document mirroring TrafficProfile."""
    data = stream if isinstance(stream, bytes) else stream.read()
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError(f"profile is not valid json: {exc.msg}")
    if not isinstance(doc, dict):
        raise FormatError("profile document must be a json object")
    try:
        scenario = ScenarioKind(doc.get("scenario"))
    except ValueError:
        raise FormatError(f"unknown scenario {doc.get('scenario')!r}")

    weights = doc.get("weights")
    if not isinstance(weights, dict) or not all(
        isinstance(k, str) and isinstance(v, (int, float)) and not isinstance(v, bool)
        for k, v in weights.items()
    ):
        raise FormatError("'weights' must map device names to numbers")

    kwargs = {}
    if "message_mix" in doc:
        raw_mix = doc["message_mix"]
        if not isinstance(raw_mix, dict):
            raise FormatError("'message_mix' must be an object")
        mix = {}
        for key, value in raw_mix.items():
            mt = parse_message_type(key)
            if mt not in DNP3_SYSCALLS:
                raise FormatError(f"unknown message type in mix: {key!r}")
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise FormatError(f"mix value for {key!r} must be a number")
            mix[mt] = float(value)
        kwargs["message_mix"] = mix
    for key in ("n_messages", "seed"):
        if key in doc:
            if not isinstance(doc[key], int) or isinstance(doc[key], bool):
                raise FormatError(f"{key!r} must be an integer")
            kwargs[key] = doc[key]
    if "noise_fraction" in doc:
        nf = doc["noise_fraction"]
        if not isinstance(nf, (int, float)) or isinstance(nf, bool):
            raise FormatError("'noise_fraction' must be a number")
        kwargs["noise_fraction"] = float(nf)

    return TrafficProfile(
        scenario=scenario,
        weights={k: float(v) for k, v in weights.items()},
        **kwargs,
    )
