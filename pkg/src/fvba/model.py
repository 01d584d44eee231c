"""Core domain types: flow identities, flow events, windowed samples, ground truth.

All types are immutable value types; they are safe to share between
threads and to use as dictionary keys where hashable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ParameterError


class ProtocolCategory(enum.Enum):
    """Protocol category of a flow: TCP, UDP or ICMP."""

    TCP = "TCP"
    UDP = "UDP"
    ICMP = "ICMP"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, token: str) -> "ProtocolCategory":
        try:
            return cls[token.strip().upper()]
        except KeyError:
            raise ParameterError(f"unknown protocol category: {token!r}") from None


class FlowKey(NamedTuple):
    """5-tuple flow identity.

    Addresses are opaque tokens (the toolkit never interprets them).
    ICMP flows carry port 0 on both sides.
    """

    protocol: ProtocolCategory
    src_addr: str
    dst_addr: str
    src_port: int = 0
    dst_port: int = 0

    def validate(self) -> "FlowKey":
        for port in (self.src_port, self.dst_port):
            if not 0 <= port <= 65535:
                raise ParameterError(f"port out of range: {port}")
        if self.protocol is ProtocolCategory.ICMP and (self.src_port or self.dst_port):
            raise ParameterError("ICMP flow keys must use port 0 on both sides")
        return self


class FlowEvent(NamedTuple):
    """One unit of traffic: `bytes` bytes of flow `key` arriving at `timestamp`."""

    timestamp: float
    key: FlowKey
    bytes: int

    def validate(self) -> "FlowEvent":
        if self.timestamp < 0:
            raise ParameterError(f"negative timestamp: {self.timestamp}")
        if self.bytes < 1:
            raise ParameterError(f"event byte count must be >= 1, got {self.bytes}")
        return self


@dataclass(frozen=True)
class WindowSample:
    """Per-protocol traffic aggregate for one monitoring window.

    `volume` is the total byte count over the window, `flow_count` the
    number of distinct flows seen, and `per_flow_bytes` the byte total of
    each of those flows.  `protocol` is None for a sample aggregated over
    all protocol categories (see `profiler.windowize`).
    """

    window_index: int
    window_start: float
    window_length: float
    protocol: ProtocolCategory | None
    volume: int
    flow_count: int
    per_flow_bytes: dict[FlowKey, int]

    def __post_init__(self):
        if self.volume != sum(self.per_flow_bytes.values()):
            raise ParameterError("window volume must equal the sum of per-flow bytes")
        if self.flow_count != len(self.per_flow_bytes):
            raise ParameterError("flow_count must equal the number of per-flow entries")

    @classmethod
    def from_flows(
        cls,
        window_index: int,
        window_start: float,
        window_length: float,
        protocol: ProtocolCategory | None,
        per_flow_bytes: dict[FlowKey, int],
    ) -> "WindowSample":
        """Build a sample with volume and flow_count derived from the flow map."""
        return cls(
            window_index=window_index,
            window_start=window_start,
            window_length=window_length,
            protocol=protocol,
            volume=sum(per_flow_bytes.values()),
            flow_count=len(per_flow_bytes),
            per_flow_bytes=per_flow_bytes,
        )


@dataclass(frozen=True)
class GroundTruthLabel:
    """Ground truth for a flow or window: normal traffic or a named attack.

    Attack names are lowercase tokens ("smurf", "neptune", "highrate", ...).
    """

    attack: str | None = None

    def __post_init__(self):
        if self.attack is not None and self.attack != self.attack.lower():
            raise ParameterError(f"attack names are lowercase tokens: {self.attack!r}")

    @property
    def is_attack(self) -> bool:
        return self.attack is not None

    def __str__(self) -> str:
        return self.attack if self.attack is not None else "normal"

    @classmethod
    def parse(cls, token: str) -> "GroundTruthLabel":
        token = token.strip()
        return cls() if token == "normal" else cls(attack=token)


NORMAL = GroundTruthLabel()
