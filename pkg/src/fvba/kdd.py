"""KDD-99 connection-record ingestion and evaluation pipeline.

Parses the benchmark's comma-separated connection records (41 features
plus a label), filters the denial-of-service category, and maps records
onto synthetic monitoring windows of a fixed record count per protocol.
Records carry no timestamps, so consecutive groups of `record_window`
records (per protocol, in file order) form one window.

Within a window a flow is the distinct (protocol, service, flag)
combination; a record contributes src_bytes + dst_bytes to its flow.
This keeps the flow-count metric informative: port-scanning SYN floods
(neptune) spread across many services, while normal traffic concentrates
on a few.
"""

from __future__ import annotations

import gzip
import io
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .detector import DEFAULT_FACTORS, ToleranceFactors, compute_thresholds, detect_series
from .errors import ParameterError, ParseError
from .evaluation import (
    BreakdownRow,
    RecordWindowTruth,
    ScoreReport,
    per_attack_breakdown,
    score_records,
)
from .model import FlowKey, ProtocolCategory, WindowSample
from .profiler import NormalProfile, build_profile

FEATURE_COUNT = 41
# Positions of the symbolic features in the standard 41-feature layout.
PROTOCOL_INDEX, SERVICE_INDEX, FLAG_INDEX = 1, 2, 3
SRC_BYTES_INDEX, DST_BYTES_INDEX = 4, 5
SYMBOLIC_INDICES = frozenset({PROTOCOL_INDEX, SERVICE_INDEX, FLAG_INDEX})

_PROTOCOLS = {"tcp": ProtocolCategory.TCP, "udp": ProtocolCategory.UDP, "icmp": ProtocolCategory.ICMP}

NORMAL_LABEL = "normal"

TRAINING_ATTACKS = frozenset({"back", "land", "neptune", "pod", "smurf", "teardrop"})
TESTING_ATTACKS = TRAINING_ATTACKS | {"apache2", "mailbomb", "processtable", "udpstorm"}


@dataclass(frozen=True)
class KddDosFilter:
    """Attack-name sets of the denial-of-service category per split."""

    training_attacks: frozenset[str] = TRAINING_ATTACKS
    testing_attacks: frozenset[str] = TESTING_ATTACKS

    def attacks_for(self, split: str) -> frozenset[str]:
        if split == "training":
            return self.training_attacks
        if split == "testing":
            return self.testing_attacks
        raise ParameterError(f"unknown split: {split!r} (expected training or testing)")


@dataclass(frozen=True, slots=True)
class KddRecord:
    """One connection record: 41 features plus its label (trailing dot stripped)."""

    features: tuple
    label: str

    @property
    def protocol(self) -> ProtocolCategory:
        return _PROTOCOLS[self.features[PROTOCOL_INDEX]]

    @property
    def service(self) -> str:
        return self.features[SERVICE_INDEX]

    @property
    def flag(self) -> str:
        return self.features[FLAG_INDEX]

    @property
    def src_bytes(self) -> int:
        return int(self.features[SRC_BYTES_INDEX])

    @property
    def dst_bytes(self) -> int:
        return int(self.features[DST_BYTES_INDEX])


def _open_lines(source) -> Iterator[str]:
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        path = str(source)
        opener = gzip.open if path.endswith(".gz") else open
        with opener(path, "rt", encoding="utf-8") as handle:
            yield from handle
    elif isinstance(source, io.IOBase) or hasattr(source, "read"):
        yield from source
    else:
        yield from source


def parse(source) -> list[KddRecord]:
    """Parse connection records from a path (gzip or plain), file object
    or iterable of lines.

    Every line must carry 42 comma-separated fields; malformed lines
    raise ParseError naming the line number.
    """
    records = []
    symbols: dict[str, str] = {}
    numbers: dict[str, object] = {}
    for number, raw in enumerate(_open_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != FEATURE_COUNT + 1:
            raise ParseError(
                f"expected {FEATURE_COUNT + 1} fields, got {len(fields)}", line=number
            )
        if fields[PROTOCOL_INDEX] not in _PROTOCOLS:
            raise ParseError(
                f"unknown protocol_type {fields[PROTOCOL_INDEX]!r}", line=number
            )
        values = []
        for index, token in enumerate(fields[:FEATURE_COUNT]):
            if index in SYMBOLIC_INDICES:
                values.append(symbols.setdefault(token, token))
                continue
            value = numbers.get(token)
            if value is None:
                try:
                    value = float(token) if "." in token else int(token)
                except ValueError:
                    raise ParseError(
                        f"non-numeric continuous field {index}: {token!r}", line=number
                    ) from None
                numbers[token] = value
            values.append(value)
        label = fields[FEATURE_COUNT].rstrip(".").lower()
        records.append(KddRecord(features=tuple(values), label=label))
    return records


def serialize_record(record: KddRecord) -> str:
    """Canonical comma-separated form; parse(serialize(r)) == r."""
    tokens = [
        value if isinstance(value, str) else repr(value)
        for value in record.features
    ]
    tokens.append(record.label)
    return ",".join(tokens)


def filter_dos(
    records: Iterable[KddRecord], dos_filter: KddDosFilter, split: str
) -> tuple[list[KddRecord], list[KddRecord]]:
    """Split records into (DoS-labelled, normal); other categories are dropped."""
    attacks = dos_filter.attacks_for(split)
    dos, normal = [], []
    for record in records:
        if record.label in attacks:
            dos.append(record)
        elif record.label == NORMAL_LABEL:
            normal.append(record)
    return dos, normal


def select_dos_and_normal(
    records: Iterable[KddRecord], dos_filter: KddDosFilter, split: str
) -> list[KddRecord]:
    """DoS plus normal records in original file order (detection stream)."""
    attacks = dos_filter.attacks_for(split)
    return [r for r in records if r.label in attacks or r.label == NORMAL_LABEL]


def _flow_key(record: KddRecord) -> FlowKey:
    # No addresses in KDD records; flow identity is (protocol, service, flag).
    return FlowKey(record.protocol, record.service, record.flag, 0, 0)


def to_flow_windows(
    records: Sequence[KddRecord],
    record_window: int = 100,
    attack_names: frozenset[str] = frozenset(),
) -> dict[ProtocolCategory, list[tuple[WindowSample, RecordWindowTruth]]]:
    """Group records per protocol into windows of `record_window` records.

    Each record contributes src_bytes + dst_bytes to its flow's window
    total; a window's ground truth is attack when it contains at least
    one record labelled with a name in `attack_names`.  A trailing group
    shorter than `record_window` is dropped (its artificially low volume
    and flow count would skew lower-bound detection).
    """
    if record_window <= 0:
        raise ParameterError(f"record window must be positive, got {record_window}")
    grouped: dict[ProtocolCategory, list[KddRecord]] = {p: [] for p in ProtocolCategory}
    for record in records:
        grouped[record.protocol].append(record)

    windows: dict[ProtocolCategory, list[tuple[WindowSample, RecordWindowTruth]]] = {}
    for protocol, stream in grouped.items():
        series = []
        for index in range(len(stream) // record_window):
            chunk = stream[index * record_window : (index + 1) * record_window]
            flows: dict[FlowKey, int] = {}
            attack_counts: dict[str, int] = {}
            normal_count = 0
            for record in chunk:
                key = _flow_key(record)
                flows[key] = flows.get(key, 0) + record.src_bytes + record.dst_bytes
                if record.label in attack_names:
                    attack_counts[record.label] = attack_counts.get(record.label, 0) + 1
                elif record.label == NORMAL_LABEL:
                    normal_count += 1
            sample = WindowSample.from_flows(
                window_index=index,
                window_start=float(index * record_window),
                window_length=float(record_window),
                protocol=protocol,
                per_flow_bytes=flows,
            )
            series.append(
                (sample, RecordWindowTruth(attack_counts=attack_counts, normal_count=normal_count))
            )
        if series:
            windows[protocol] = series
    return windows


def build_profiles(
    normal_records: Sequence[KddRecord], record_window: int = 100
) -> dict[ProtocolCategory, NormalProfile]:
    """Per-protocol normal profiles from normal-labelled records only.

    Protocols with fewer than two full windows of normal traffic are
    skipped (no profile, no detection on that protocol).
    """
    windows = to_flow_windows(normal_records, record_window)
    profiles = {}
    for protocol, series in windows.items():
        if len(series) >= 2:
            profiles[protocol] = build_profile([sample for sample, _ in series])
    return profiles


@dataclass(frozen=True)
class KddEvaluation:
    """Per-protocol and overall record-level scores plus per-attack rows."""

    per_protocol: dict[ProtocolCategory, ScoreReport]
    overall: ScoreReport
    breakdown: list[BreakdownRow]


def evaluate_split(
    records: Sequence[KddRecord],
    attack_names: frozenset[str],
    profiles: dict[ProtocolCategory, NormalProfile],
    factors: dict[ProtocolCategory, ToleranceFactors] | None = None,
    record_window: int = 100,
) -> KddEvaluation:
    """Detect over a DoS+normal record stream and score per record.

    `records` must already be filtered to DoS plus normal (file order
    preserved).  Protocols without a profile contribute undetected
    windows.
    """
    factors = factors or {p: DEFAULT_FACTORS[p] for p in ProtocolCategory}
    windows = to_flow_windows(records, record_window, attack_names=attack_names)

    per_protocol: dict[ProtocolCategory, ScoreReport] = {}
    breakdown_input: list[tuple[ProtocolCategory, RecordWindowTruth, bool]] = []
    counts = {"detected": 0, "attacks": 0, "false": 0, "normal": 0}
    for protocol, series in windows.items():
        samples = [sample for sample, _ in series]
        truths = [truth for _, truth in series]
        profile = profiles.get(protocol)
        if profile is None:
            flags = [False] * len(series)
        else:
            thresholds = compute_thresholds(profile, factors[protocol])
            reports = detect_series(samples, profile, thresholds)
            flags = [report.is_attack for report in reports]
        report = score_records(zip(truths, flags))
        per_protocol[protocol] = report
        breakdown_input.extend(
            (protocol, truth, flag) for truth, flag in zip(truths, flags)
        )
        counts["detected"] += report.detected
        counts["attacks"] += report.actual_attacks
        counts["false"] += report.false_alarms
        counts["normal"] += report.normal_events

    overall = ScoreReport.from_counts(
        counts["detected"], counts["attacks"], counts["false"], counts["normal"]
    )
    return KddEvaluation(
        per_protocol=per_protocol,
        overall=overall,
        breakdown=per_attack_breakdown(breakdown_input),
    )
