"""Synthetic flow-event generator for flooding-attack scenarios.

Generates the victim's inbound traffic directly (no network topology):
legitimate clients are TCP flows issuing Poisson-timed file requests,
each delivered in fixed-size chunks at the client link rate; zombies are
UDP flows emitting fixed-size packets with exponential gaps at a constant
mean bit rate inside the attack interval.

Three attack classes are supported: high-rate disruptive (every zombie at
the high rate), diluted low-rate (every zombie at the low rate) and
varied rate (a split between the two, built to evade entropy detectors).
Generation is deterministic for a fixed seed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .model import FlowEvent, FlowKey, GroundTruthLabel, NORMAL, ProtocolCategory
from .profiler import window_index_of


class ScenarioKind(enum.Enum):
    HIGH_RATE_DISRUPTIVE = "high-rate"
    DILUTED_LOW_RATE = "low-rate"
    VARIED_RATE = "varied"
    ATTACK_FREE = "attack-free"

    @classmethod
    def parse(cls, token: str) -> "ScenarioKind":
        for kind in cls:
            if kind.value == token:
                return kind
        raise ParameterError(f"unknown scenario kind: {token!r}")


# Attack labels by zombie rate class.
HIGH_RATE_LABEL = GroundTruthLabel("highrate")
LOW_RATE_LABEL = GroundTruthLabel("lowrate")


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of one synthetic scenario.

    `zombie_rate_bps` is the high-rate class (used by every zombie in a
    high-rate scenario); `zombie_low_rate_bps` the low-rate class (used
    by every zombie in a diluted scenario).  A varied-rate scenario puts
    `high_rate_fraction` of the zombies on the high rate and the rest on
    the low rate.
    """

    kind: ScenarioKind
    legit_clients: int
    legit_request_rate: float = 3.0
    legit_bytes_per_request: int = 125_000
    client_link_rate_bps: float = 8e6
    chunk_bytes: int = 12_500
    zombies: int = 0
    zombie_rate_bps: float = 3e6
    zombie_low_rate_bps: float = 1e5
    high_rate_fraction: float = 0.5
    zombie_packet_bytes: int = 1000
    attack_start: float = 25.0
    attack_end: float = 50.0
    duration: float = 75.0
    seed: int = 0

    def __post_init__(self):
        if self.legit_clients <= 0:
            raise ParameterError("at least one legitimate client is required")
        if self.legit_request_rate <= 0 or self.legit_bytes_per_request <= 0:
            raise ParameterError("legitimate request rate and size must be positive")
        if self.client_link_rate_bps <= 0 or self.chunk_bytes <= 0:
            raise ParameterError("client link rate and chunk size must be positive")
        if self.zombie_rate_bps <= 0 or self.zombie_low_rate_bps <= 0:
            raise ParameterError("zombie rates must be positive")
        if self.zombie_packet_bytes <= 0:
            raise ParameterError("zombie packet size must be positive")
        if not 0.0 <= self.high_rate_fraction <= 1.0:
            raise ParameterError("high-rate fraction must lie in [0, 1]")
        if not self.attack_start < self.attack_end <= self.duration:
            raise ParameterError("require attack_start < attack_end <= duration")
        if self.zombies < 0:
            raise ParameterError("zombie count cannot be negative")
        if (self.zombies == 0) != (self.kind is ScenarioKind.ATTACK_FREE):
            raise ParameterError("zombies == 0 exactly for attack-free scenarios")

    @classmethod
    def attack_free(cls, legit_clients: int, duration: float = 75.0, seed: int = 0, **kw) -> "ScenarioConfig":
        # No zombies, so the attack interval is irrelevant; span the run.
        return cls(kind=ScenarioKind.ATTACK_FREE, legit_clients=legit_clients,
                   zombies=0, duration=duration, seed=seed,
                   attack_start=0.0, attack_end=duration, **kw)

    @classmethod
    def high_rate(cls, legit_clients: int, zombies: int = 100, seed: int = 0, **kw) -> "ScenarioConfig":
        return cls(kind=ScenarioKind.HIGH_RATE_DISRUPTIVE, legit_clients=legit_clients,
                   zombies=zombies, seed=seed, **kw)

    @classmethod
    def diluted_low_rate(cls, legit_clients: int, zombies: int = 100, seed: int = 0, **kw) -> "ScenarioConfig":
        return cls(kind=ScenarioKind.DILUTED_LOW_RATE, legit_clients=legit_clients,
                   zombies=zombies, seed=seed, **kw)

    @classmethod
    def varied_rate(cls, legit_clients: int, zombies: int = 100, seed: int = 0, **kw) -> "ScenarioConfig":
        return cls(kind=ScenarioKind.VARIED_RATE, legit_clients=legit_clients,
                   zombies=zombies, seed=seed, **kw)


@dataclass
class LabeledEventStream:
    """A time-sorted event stream plus per-flow ground truth."""

    events: list[FlowEvent]
    truth: dict[FlowKey, GroundTruthLabel]
    attack_start: float
    attack_end: float
    _attack_keys: frozenset[FlowKey] = field(init=False, repr=False)

    def __post_init__(self):
        self._attack_keys = frozenset(k for k, label in self.truth.items() if label.is_attack)

    def attack_windows(self, window_length: float) -> set[int]:
        """Indices of windows containing at least one attack-labelled event."""
        return {
            window_index_of(e.timestamp, window_length)
            for e in self.events
            if e.key in self._attack_keys
        }

    def window_truth(self, window_length: float) -> dict[int, bool]:
        """Per-window ground truth over the stream's full window span."""
        if not self.events:
            return {}
        first = window_index_of(self.events[0].timestamp, window_length)
        last = window_index_of(self.events[-1].timestamp, window_length)
        attacked = self.attack_windows(window_length)
        return {w: w in attacked for w in range(first, last + 1)}


def _arrival_times(rng: np.random.Generator, rate: float, duration: float) -> np.ndarray:
    """Poisson-process arrival times on [0, duration)."""
    batch = max(16, int(rate * duration * 1.25) + 16)
    gaps = rng.exponential(1.0 / rate, size=batch)
    times = np.cumsum(gaps)
    while times[-1] < duration:
        gaps = rng.exponential(1.0 / rate, size=batch)
        times = np.concatenate([times, times[-1] + np.cumsum(gaps)])
    return times[times < duration]


def generate(config: ScenarioConfig) -> LabeledEventStream:
    """Generate the labelled event stream for a scenario.

    Deterministic for a fixed config (seed included): identical configs
    yield identical streams.
    """
    rng = np.random.default_rng(config.seed)
    times_parts: list[np.ndarray] = []
    flows_parts: list[np.ndarray] = []
    bytes_parts: list[np.ndarray] = []
    keys: list[FlowKey] = []
    truth: dict[FlowKey, GroundTruthLabel] = {}

    # Legitimate clients: one TCP flow per client, Poisson request times,
    # each request delivered in chunks at the client link rate.
    chunk_count = -(-config.legit_bytes_per_request // config.chunk_bytes)
    chunk_interval = config.chunk_bytes / (config.client_link_rate_bps / 8.0)
    chunk_sizes = np.full(chunk_count, config.chunk_bytes, dtype=np.int64)
    chunk_sizes[-1] = config.legit_bytes_per_request - config.chunk_bytes * (chunk_count - 1)
    chunk_offsets = np.arange(chunk_count) * chunk_interval

    for i in range(config.legit_clients):
        key = FlowKey(ProtocolCategory.TCP, f"c{i:03d}", "srv", 40000 + i, 80)
        keys.append(key)
        truth[key] = NORMAL
        starts = _arrival_times(rng, config.legit_request_rate, config.duration)
        times = (starts[:, None] + chunk_offsets[None, :]).ravel()
        sizes = np.tile(chunk_sizes, starts.size)
        inside = times < config.duration
        times_parts.append(times[inside])
        bytes_parts.append(sizes[inside])
        flows_parts.append(np.full(int(inside.sum()), len(keys) - 1, dtype=np.int64))

    # Zombies: one UDP flow each, fixed-size packets with exponential gaps
    # at the class mean rate, confined to the attack interval.
    zombie_rates = _zombie_rates(config)
    attack_span = config.attack_end - config.attack_start
    for i, rate_bps in enumerate(zombie_rates):
        key = FlowKey(ProtocolCategory.UDP, f"z{i:03d}", "srv", 50000 + i, 9)
        keys.append(key)
        truth[key] = HIGH_RATE_LABEL if rate_bps == config.zombie_rate_bps else LOW_RATE_LABEL
        packet_rate = rate_bps / 8.0 / config.zombie_packet_bytes
        times = config.attack_start + _arrival_times(rng, packet_rate, attack_span)
        times_parts.append(times)
        bytes_parts.append(np.full(times.size, config.zombie_packet_bytes, dtype=np.int64))
        flows_parts.append(np.full(times.size, len(keys) - 1, dtype=np.int64))

    if times_parts:
        all_times = np.concatenate(times_parts)
        all_flows = np.concatenate(flows_parts)
        all_bytes = np.concatenate(bytes_parts)
        order = np.argsort(all_times, kind="stable")
        events = [
            FlowEvent(t, keys[f], b)
            for t, f, b in zip(
                all_times[order].tolist(), all_flows[order].tolist(), all_bytes[order].tolist()
            )
        ]
    else:
        events = []

    return LabeledEventStream(
        events=events,
        truth=truth,
        attack_start=config.attack_start,
        attack_end=config.attack_end,
    )


def _zombie_rates(config: ScenarioConfig) -> list[float]:
    if config.kind is ScenarioKind.ATTACK_FREE:
        return []
    if config.kind is ScenarioKind.HIGH_RATE_DISRUPTIVE:
        return [config.zombie_rate_bps] * config.zombies
    if config.kind is ScenarioKind.DILUTED_LOW_RATE:
        return [config.zombie_low_rate_bps] * config.zombies
    high = round(config.zombies * config.high_rate_fraction)
    return [config.zombie_rate_bps] * high + [config.zombie_low_rate_bps] * (config.zombies - high)
