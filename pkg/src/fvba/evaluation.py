"""Scoring of detector output against ground truth, and threshold sweeps.

Detection rate is the fraction of actual attacks detected; false-positive
rate the fraction of normal traffic flagged.  Scoring runs either per
window (simulation streams) or per record (dataset runs, where a window
verdict propagates to every record inside the window).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .detector import (
    ToleranceFactors,
    TriggerCondition,
    VerdictReport,
    compute_thresholds,
    detect_series,
    flagged_windows,
)
from .errors import ParameterError
from .model import ProtocolCategory, WindowSample
from .profiler import NormalProfile

_VOLUME_TRIGGERS = frozenset({TriggerCondition.VOLUME_UPPER, TriggerCondition.VOLUME_LOWER})


@dataclass(frozen=True)
class ScoreReport:
    """Detection/false-positive counts and rates for one run."""

    detected: int
    actual_attacks: int
    false_alarms: int
    normal_events: int
    detection_rate: float | None
    false_positive_rate: float | None

    def __post_init__(self):
        if not 0 <= self.detected <= self.actual_attacks:
            raise ParameterError("detected count must lie in [0, actual_attacks]")
        if not 0 <= self.false_alarms <= self.normal_events:
            raise ParameterError("false alarms must lie in [0, normal_events]")
        expected_rd = self.detected / self.actual_attacks if self.actual_attacks else None
        expected_fp = self.false_alarms / self.normal_events if self.normal_events else None
        if self.detection_rate != expected_rd or self.false_positive_rate != expected_fp:
            raise ParameterError("rates must equal their count ratios (None when undefined)")

    @classmethod
    def from_counts(cls, detected: int, actual_attacks: int,
                    false_alarms: int, normal_events: int) -> "ScoreReport":
        """Build a report; rates are None when their denominator is zero."""
        return cls(
            detected=detected,
            actual_attacks=actual_attacks,
            false_alarms=false_alarms,
            normal_events=normal_events,
            detection_rate=detected / actual_attacks if actual_attacks else None,
            false_positive_rate=false_alarms / normal_events if normal_events else None,
        )


@dataclass(frozen=True)
class RocPoint:
    """One operating point of a tolerance-factor sweep."""

    factors: ToleranceFactors
    detection_rate: float | None
    false_positive_rate: float | None

    def __post_init__(self):
        for rate in (self.detection_rate, self.false_positive_rate):
            if rate is not None and not 0.0 <= rate <= 1.0:
                raise ParameterError(f"rates must lie in [0, 1], got {rate}")


@dataclass(frozen=True)
class RecordWindowTruth:
    """Record-level ground truth of one synthetic dataset window."""

    attack_counts: dict[str, int]
    normal_count: int

    @property
    def is_attack(self) -> bool:
        return bool(self.attack_counts)

    @property
    def attack_total(self) -> int:
        return sum(self.attack_counts.values())


def _score_flags(flags: Mapping[int, bool], truth: Mapping[int, bool]) -> ScoreReport:
    if set(flags) != set(truth):
        raise ParameterError("verdicts and ground truth cover different window sets")
    detected = sum(1 for w, attacked in truth.items() if attacked and flags[w])
    attacks = sum(1 for attacked in truth.values() if attacked)
    false_alarms = sum(1 for w, attacked in truth.items() if not attacked and flags[w])
    normals = len(truth) - attacks
    return ScoreReport.from_counts(detected, attacks, false_alarms, normals)


def score(verdicts: Sequence[VerdictReport], truth: Mapping[int, bool]) -> ScoreReport:
    """Score per-window verdicts against per-window ground truth.

    A window counts as flagged when any of its verdicts alarms.  The
    verdict window set must equal the truth window set.
    """
    return _score_flags(flagged_windows(verdicts), truth)


def score_records(
    window_results: Iterable[tuple[RecordWindowTruth, bool]]
) -> ScoreReport:
    """Score per record: a window's verdict propagates to all its records."""
    detected = attacks = false_alarms = normals = 0
    for truth, flagged in window_results:
        attacks += truth.attack_total
        normals += truth.normal_count
        if flagged:
            detected += truth.attack_total
            false_alarms += truth.normal_count
    return ScoreReport.from_counts(detected, attacks, false_alarms, normals)


@dataclass(frozen=True)
class BreakdownRow:
    """Per-attack detection summary."""

    attack: str
    protocol: ProtocolCategory
    detected: int
    total: int

    @property
    def rate(self) -> float:
        return self.detected / self.total


def per_attack_breakdown(
    windows: Iterable[tuple[ProtocolCategory, RecordWindowTruth, bool]]
) -> list[BreakdownRow]:
    """Per-attack-name detection counts from windowed record truth.

    Returns one row per attack name present in the truth, sorted by name.
    """
    detected: dict[tuple[str, ProtocolCategory], int] = {}
    totals: dict[tuple[str, ProtocolCategory], int] = {}
    for protocol, truth, flagged in windows:
        for name, count in truth.attack_counts.items():
            entry = (name, protocol)
            totals[entry] = totals.get(entry, 0) + count
            if flagged:
                detected[entry] = detected.get(entry, 0) + count
    return [
        BreakdownRow(attack=name, protocol=protocol,
                     detected=detected.get((name, protocol), 0), total=total)
        for (name, protocol), total in sorted(totals.items(), key=lambda kv: (kv[0][0], kv[0][1].value))
    ]


def window_flags(
    reports: Sequence[VerdictReport], volume_only: bool = False
) -> dict[int, bool]:
    """Per-window flags, optionally counting only the volume conditions."""
    if not volume_only:
        return flagged_windows(reports)
    flags: dict[int, bool] = {}
    for report in reports:
        fired = bool(_VOLUME_TRIGGERS & report.triggered)
        flags[report.window_index] = flags.get(report.window_index, False) or fired
    return flags


def sweep(
    samples: Sequence[WindowSample],
    profile: NormalProfile,
    truth: Mapping[int, bool],
    grid: Sequence[ToleranceFactors],
    volume_only: bool = False,
) -> list[RocPoint]:
    """Re-threshold and re-score one sample series for every grid entry.

    The profile stays fixed; only thresholds are recomputed.  With
    `volume_only` the flow condition is ignored when flagging windows
    (single-metric sweeps).  Output order follows the grid.
    """
    if not grid:
        raise ParameterError("sweep grid must be non-empty")
    points = []
    for factors in grid:
        thresholds = compute_thresholds(profile, factors)
        reports = detect_series(samples, profile, thresholds)
        report = _score_flags(window_flags(reports, volume_only=volume_only), truth)
        points.append(
            RocPoint(
                factors=factors,
                detection_rate=report.detection_rate,
                false_positive_rate=report.false_positive_rate,
            )
        )
    return points


# --- tab-separated tables -------------------------------------------------------

SCORE_HEADER = "detected\tactual_attacks\tfalse_alarms\tnormal_events\tdetection_rate\tfalse_positive_rate"
ROC_HEADER = "r1\tr2\tr3\tdetection_rate\tfalse_positive_rate"
BREAKDOWN_HEADER = "attack\tprotocol\tdetected\ttotal\tdetection_rate"


def _rate_token(rate: float | None) -> str:
    return "undefined" if rate is None else repr(rate)


def _score_row(report: ScoreReport) -> str:
    return (
        f"{report.detected}\t{report.actual_attacks}\t{report.false_alarms}"
        f"\t{report.normal_events}\t{_rate_token(report.detection_rate)}"
        f"\t{_rate_token(report.false_positive_rate)}"
    )


def dump_score(report: ScoreReport) -> str:
    return SCORE_HEADER + "\n" + _score_row(report) + "\n"


def dump_score_table(labeled_reports: Iterable[tuple[str, ScoreReport]]) -> str:
    lines = ["series\t" + SCORE_HEADER]
    for label, report in labeled_reports:
        lines.append(f"{label}\t{_score_row(report)}")
    return "\n".join(lines) + "\n"


def dump_roc(points: Iterable[RocPoint]) -> str:
    lines = [ROC_HEADER]
    for point in points:
        f = point.factors
        r3 = "-" if f.r3 is None else repr(f.r3)
        lines.append(
            f"{f.r1!r}\t{f.r2!r}\t{r3}\t{_rate_token(point.detection_rate)}"
            f"\t{_rate_token(point.false_positive_rate)}"
        )
    return "\n".join(lines) + "\n"


def dump_breakdown(rows: Iterable[BreakdownRow]) -> str:
    lines = [BREAKDOWN_HEADER]
    for row in rows:
        lines.append(
            f"{row.attack}\t{row.protocol}\t{row.detected}\t{row.total}\t{row.rate!r}"
        )
    return "\n".join(lines) + "\n"
