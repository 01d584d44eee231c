"""Windowed aggregation of flow events and normal-profile construction.

The profile of a protocol's attack-free traffic is the mean and population
standard deviation of the per-window byte volume and distinct-flow count,
plus the mean/std of per-flow byte totals used for flow characterization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientDataError, OrderingError, ParameterError, ParseError
from .model import FlowEvent, ProtocolCategory, WindowSample

PROFILE_FORMAT_VERSION = 1

# Guards against float-division jitter when a timestamp sits exactly on a
# window boundary (e.g. 25.0 / 0.2 evaluating just below 125).
_BIN_EPSILON = 1e-9


def window_index_of(timestamp: float, window_length: float) -> int:
    """Index w of the window [w*L, (w+1)*L) containing `timestamp`."""
    return int((timestamp + _BIN_EPSILON) / window_length)


def windowize(
    events: Sequence[FlowEvent],
    window_length: float,
    protocol: ProtocolCategory | None = None,
) -> list[WindowSample]:
    """Aggregate a time-sorted event stream into fixed-length window samples.

    One sample is returned for every window covering the span of `events`,
    empty windows included, so that all protocols of the same stream share
    one window indexing.  Only events whose key matches `protocol` are
    aggregated; `protocol=None` aggregates every event into a single
    protocol-agnostic series.

    Raises OrderingError if the events are not sorted by timestamp, and
    ParameterError for a non-positive window length.
    """
    if window_length <= 0:
        raise ParameterError(f"window length must be positive, got {window_length}")
    if not events:
        return []

    first = window_index_of(events[0].timestamp, window_length)
    last = window_index_of(events[-1].timestamp, window_length)
    buckets: dict[int, dict] = {}
    previous = events[0].timestamp
    for event in events:
        if event.timestamp < previous:
            raise OrderingError(
                f"events are not sorted by timestamp ({event.timestamp} after {previous})"
            )
        previous = event.timestamp
        if protocol is not None and event.key.protocol is not protocol:
            continue
        w = window_index_of(event.timestamp, window_length)
        flows = buckets.get(w)
        if flows is None:
            flows = buckets[w] = {}
        flows[event.key] = flows.get(event.key, 0) + event.bytes

    samples = []
    for w in range(first, last + 1):
        flows = buckets.get(w, {})
        samples.append(
            WindowSample.from_flows(
                window_index=w,
                window_start=w * window_length,
                window_length=window_length,
                protocol=protocol,
                per_flow_bytes=flows,
            )
        )
    return samples


@dataclass(frozen=True)
class NormalProfile:
    """Statistical profile of attack-free traffic for one protocol series.

    Means and standard deviations are taken over the training windows;
    `per_flow_mean`/`per_flow_std` describe per-flow byte totals and feed
    the six-sigma characterization limits.  `protocol` is None for a
    profile of the all-protocol aggregate series.
    """

    protocol: ProtocolCategory | None
    window_length: float
    training_windows: int
    volume_mean: float
    volume_std: float
    flow_mean: float
    flow_std: float
    per_flow_mean: float
    per_flow_std: float

    def __post_init__(self):
        for name in ("volume_std", "flow_std", "per_flow_std"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative")
        if self.volume_mean < 0 or self.flow_mean < 0:
            raise ParameterError("means of non-negative quantities cannot be negative")


def build_profile(
    samples: Sequence[WindowSample],
    per_flow_scope: str = "capture",
) -> NormalProfile:
    """Compute a NormalProfile from training-window samples.

    Standard deviations are population standard deviations (divide by N).
    With the default `per_flow_scope="capture"`, each flow's bytes are
    summed across all training windows before taking the per-flow
    mean/std; `"window"` instead treats every (flow, window) total as one
    observation.

    Raises InsufficientDataError for fewer than two samples and
    ParameterError for mixed protocols or window lengths.
    """
    if len(samples) < 2:
        raise InsufficientDataError(
            f"profile needs at least 2 windows, got {len(samples)}"
        )
    if per_flow_scope not in ("capture", "window"):
        raise ParameterError(f"unknown per-flow scope: {per_flow_scope!r}")
    protocol = samples[0].protocol
    window_length = samples[0].window_length
    for sample in samples:
        if sample.protocol is not protocol:
            raise ParameterError("profile samples must share one protocol")
        if sample.window_length != window_length:
            raise ParameterError("profile samples must share one window length")

    volumes = np.array([s.volume for s in samples], dtype=np.float64)
    counts = np.array([s.flow_count for s in samples], dtype=np.float64)

    if per_flow_scope == "capture":
        totals: dict = {}
        for sample in samples:
            for key, count in sample.per_flow_bytes.items():
                totals[key] = totals.get(key, 0) + count
        observations = np.array(list(totals.values()), dtype=np.float64)
    else:
        observations = np.array(
            [b for s in samples for b in s.per_flow_bytes.values()], dtype=np.float64
        )
    if observations.size:
        per_flow_mean = float(observations.mean())
        per_flow_std = float(observations.std())
    else:
        per_flow_mean = per_flow_std = 0.0

    return NormalProfile(
        protocol=protocol,
        window_length=window_length,
        training_windows=len(samples),
        volume_mean=float(volumes.mean()),
        volume_std=float(volumes.std()),
        flow_mean=float(counts.mean()),
        flow_std=float(counts.std()),
        per_flow_mean=per_flow_mean,
        per_flow_std=per_flow_std,
    )


# --- plain-text serialization -------------------------------------------------
#
# One field per line, `field=value`; one block per protocol, blocks separated
# by a blank line; a version line leads the document.  Floats are written with
# repr() and therefore round-trip exactly.

_PROTOCOL_ORDER = {ProtocolCategory.TCP: 0, ProtocolCategory.UDP: 1, ProtocolCategory.ICMP: 2, None: 3}
_AGGREGATE_TOKEN = "ALL"


def _protocol_token(protocol: ProtocolCategory | None) -> str:
    return _AGGREGATE_TOKEN if protocol is None else protocol.value


def dump_profiles(profiles: Iterable[NormalProfile]) -> str:
    """Serialize profiles to the plain-text profile document."""
    blocks = [f"version={PROFILE_FORMAT_VERSION}"]
    for profile in sorted(profiles, key=lambda p: _PROTOCOL_ORDER[p.protocol]):
        blocks.append(
            "\n".join(
                [
                    f"protocol={_protocol_token(profile.protocol)}",
                    f"window_length={profile.window_length!r}",
                    f"training_windows={profile.training_windows}",
                    f"volume_mean={profile.volume_mean!r}",
                    f"volume_std={profile.volume_std!r}",
                    f"flow_mean={profile.flow_mean!r}",
                    f"flow_std={profile.flow_std!r}",
                    f"per_flow_mean={profile.per_flow_mean!r}",
                    f"per_flow_std={profile.per_flow_std!r}",
                ]
            )
        )
    return "\n\n".join(blocks) + "\n"


def load_profiles(text: str) -> dict[ProtocolCategory | None, NormalProfile]:
    """Parse a profile document back into profiles keyed by protocol."""
    fields: dict[str, str] = {}
    blocks: list[dict[str, str]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            if fields:
                blocks.append(fields)
                fields = {}
            continue
        if "=" not in line:
            raise ParseError(f"expected field=value, got {line!r}", line=number)
        name, value = line.split("=", 1)
        fields[name.strip()] = value.strip()
    if fields:
        blocks.append(fields)

    if not blocks or blocks[0].get("version") != str(PROFILE_FORMAT_VERSION):
        raise ParseError(
            f"missing or unsupported profile version (expected {PROFILE_FORMAT_VERSION})"
        )
    version_block = blocks[0]
    profile_blocks = blocks[1:]
    # A single block may carry version plus the first profile.
    if "protocol" in version_block:
        profile_blocks.insert(0, version_block)

    profiles: dict[ProtocolCategory | None, NormalProfile] = {}
    for block in profile_blocks:
        try:
            token = block["protocol"]
            protocol = None if token == _AGGREGATE_TOKEN else ProtocolCategory.parse(token)
            profile = NormalProfile(
                protocol=protocol,
                window_length=float(block["window_length"]),
                training_windows=int(block["training_windows"]),
                volume_mean=float(block["volume_mean"]),
                volume_std=float(block["volume_std"]),
                flow_mean=float(block["flow_mean"]),
                flow_std=float(block["flow_std"]),
                per_flow_mean=float(block["per_flow_mean"]),
                per_flow_std=float(block["per_flow_std"]),
            )
        except KeyError as missing:
            raise ParseError(f"profile block missing field {missing}") from None
        if profile.protocol in profiles:
            raise ParseError(f"duplicate profile block for {token}")
        profiles[profile.protocol] = profile
    return profiles
