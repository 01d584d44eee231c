"""Command-line pipeline: profile, detect, characterize, simulate, kdd, sweep, score.

All inputs and outputs are the plain-text interchange formats (UTF-8, LF,
tab separators).  Every subcommand is deterministic given its flags; seeds
are explicit.  Exit codes: 0 success (no attack), 2 attack detected (the
`detect` subcommand only), 1 on any error.

An optional ``--config FILE`` supplies key=value defaults (keys are the
long flag names without the leading dashes); explicit flags win.
"""

from __future__ import annotations

import argparse
import sys

from . import io as fio
from .characterizer import (
    CLASSIFICATION_HEADER,
    THROTTLE_HEADER,
    FlowBand,
    classification_line,
    classify_flows,
    sigma_limits,
    throttle_directives,
    throttle_line,
    volume_excess_ratio,
)
from .detector import (
    DEFAULT_FACTORS,
    ToleranceFactors,
    compute_thresholds,
    detect_series,
    dump_verdicts,
    flagged_windows,
    load_verdicts,
)
from .errors import Error, InsufficientDataError, ParameterError, ParseError
from .evaluation import dump_breakdown, dump_roc, dump_score, dump_score_table, score, sweep
from .kdd import (
    KddDosFilter,
    build_profiles,
    evaluate_split,
    parse as parse_kdd,
    select_dos_and_normal,
)
from .model import ProtocolCategory
from .profiler import build_profile, dump_profiles, load_profiles, windowize
from .simulator import ScenarioConfig, ScenarioKind, generate

DEFAULT_WINDOW_SECONDS = 0.2


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _resolve_factors(args) -> dict[ProtocolCategory | None, ToleranceFactors]:
    """Per-series tolerance factors: tuned defaults overridden by flags."""
    factors = dict(DEFAULT_FACTORS)
    if args.r1 is not None or args.r2 is not None or args.r3 is not None:
        base = factors[None]
        factors[None] = ToleranceFactors(
            r1=args.r1 if args.r1 is not None else base.r1,
            r2=args.r2 if args.r2 is not None else base.r2,
            r3=args.r3,
        )
    for protocol, prefix in ((ProtocolCategory.TCP, "tcp"), (ProtocolCategory.UDP, "udp"),
                             (ProtocolCategory.ICMP, "icmp")):
        r1 = getattr(args, f"{prefix}_r1")
        r2 = getattr(args, f"{prefix}_r2")
        r3 = getattr(args, f"{prefix}_r3", None)
        if r1 is not None or r2 is not None or r3 is not None:
            base = factors[protocol]
            factors[protocol] = ToleranceFactors(
                r1=r1 if r1 is not None else base.r1,
                r2=r2 if r2 is not None else base.r2,
                r3=r3 if r3 is not None else base.r3,
            )
    return factors


def _add_factor_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--r1", type=float, help="volume factor for the aggregate series")
    parser.add_argument("--r2", type=float, help="flow factor for the aggregate series")
    parser.add_argument("--r3", type=float, help="lower volume factor (UDP-style series)")
    for prefix in ("tcp", "udp", "icmp"):
        parser.add_argument(f"--{prefix}-r1", type=float, dest=f"{prefix}_r1")
        parser.add_argument(f"--{prefix}-r2", type=float, dest=f"{prefix}_r2")
        if prefix == "udp":
            parser.add_argument("--udp-r3", type=float, dest="udp_r3")


def cmd_simulate(args) -> int:
    kind = ScenarioKind.parse(args.kind)
    if kind is ScenarioKind.ATTACK_FREE:
        # No zombies, so the attack interval is irrelevant; span the run.
        args.attack_start, args.attack_end = 0.0, args.duration
    config = ScenarioConfig(
        kind=kind,
        legit_clients=args.clients,
        legit_request_rate=args.request_rate,
        legit_bytes_per_request=args.request_bytes,
        client_link_rate_bps=args.link_rate_bps,
        chunk_bytes=args.chunk_bytes,
        zombies=args.zombies,
        zombie_rate_bps=args.zombie_rate_bps,
        zombie_low_rate_bps=args.zombie_low_rate_bps,
        high_rate_fraction=args.high_rate_fraction,
        zombie_packet_bytes=args.zombie_packet_bytes,
        attack_start=args.attack_start,
        attack_end=args.attack_end,
        duration=args.duration,
        seed=args.seed,
    )
    stream = generate(config)
    _write(args.out, fio.dump_events(stream.events))
    if args.truth_out:
        _write(args.truth_out, fio.dump_truth(stream.truth))
    if args.window_truth_out:
        _write(args.window_truth_out,
               fio.dump_window_truth(stream.window_truth(args.window_seconds)))
    print(f"simulate: {len(stream.events)} events, {len(stream.truth)} flows -> {args.out}")
    return 0


def cmd_profile(args) -> int:
    events = fio.load_events(_read(args.events))
    if not events:
        raise InsufficientDataError("no events to profile")
    if args.aggregate:
        series: list[ProtocolCategory | None] = [None]
    else:
        series = sorted({e.key.protocol for e in events}, key=lambda p: p.value)
    profiles = []
    for protocol in series:
        samples = windowize(events, args.window_seconds, protocol)
        profiles.append(build_profile(samples, per_flow_scope=args.per_flow_scope))
    _write(args.out, dump_profiles(profiles))
    names = ", ".join("ALL" if p.protocol is None else p.protocol.value for p in profiles)
    print(f"profile: {len(profiles)} series ({names}) -> {args.out}")
    return 0


def _warn_unprofiled(events, profiles) -> None:
    if None in profiles:
        return
    unprofiled = {e.key.protocol for e in events} - set(profiles)
    if unprofiled:
        names = ", ".join(sorted(p.value for p in unprofiled))
        print(f"fvba: note: no profile for {names}; those windows are not evaluated"
              " (profile an aggregate series or training traffic with that protocol)",
              file=sys.stderr)


def _detect_all(events, profiles, factors):
    """Verdict reports for every profiled series, ordered by series then window."""
    reports = []
    for protocol, profile in profiles.items():
        thresholds = compute_thresholds(profile, factors[protocol])
        samples = windowize(events, profile.window_length, protocol)
        reports.extend(detect_series(samples, profile, thresholds))
    return reports


def cmd_detect(args) -> int:
    events = fio.load_events(_read(args.events))
    profiles = load_profiles(_read(args.profile))
    factors = _resolve_factors(args)
    _warn_unprofiled(events, profiles)
    reports = _detect_all(events, profiles, factors)
    _write(args.out, dump_verdicts(reports))
    flags = flagged_windows(reports)
    attacked = sum(flags.values())
    print(f"detect: {attacked}/{len(flags)} windows flagged -> {args.out}")
    return 2 if attacked else 0


def cmd_characterize(args) -> int:
    events = fio.load_events(_read(args.events))
    profiles = load_profiles(_read(args.profile))
    factors = _resolve_factors(args)
    _warn_unprofiled(events, profiles)
    classification_lines = [CLASSIFICATION_HEADER]
    throttle_lines = [THROTTLE_HEADER]
    flagged = 0
    for protocol, profile in profiles.items():
        thresholds = compute_thresholds(profile, factors[protocol])
        samples = windowize(events, profile.window_length, protocol)
        limits = sigma_limits(profile.per_flow_mean, profile.per_flow_std)
        reports = detect_series(samples, profile, thresholds)
        previous: set = set()
        for sample, report in zip(samples, reports):
            if report.is_attack:
                flagged += 1
                classifications = classify_flows(sample.per_flow_bytes, limits, previous)
                for c in classifications:
                    classification_lines.append(classification_line(sample.window_index, c))
                suspicious = [c.key for c in classifications if c.band is FlowBand.SUSPICIOUS]
                strength = volume_excess_ratio(sample.volume, profile.volume_mean)
                for directive in throttle_directives(suspicious, strength):
                    throttle_lines.append(throttle_line(sample.window_index, directive))
            previous = set(sample.per_flow_bytes)
    _write(args.out, "\n".join(classification_lines) + "\n")
    if args.throttle_out:
        _write(args.throttle_out, "\n".join(throttle_lines) + "\n")
    print(f"characterize: {flagged} flagged windows -> {args.out}")
    return 0


def cmd_kdd(args) -> int:
    dos_filter = KddDosFilter()
    factor_map = _resolve_factors(args)
    factors = {p: factor_map[p] for p in ProtocolCategory}
    sections = []

    training = parse_kdd(args.train)
    print(f"kdd: training records: {len(training)}")
    train_stream = select_dos_and_normal(training, dos_filter, "training")
    normal = [r for r in train_stream if r.label == "normal"]
    profiles = build_profiles(normal, args.record_window)
    evaluation = evaluate_split(
        train_stream, dos_filter.training_attacks, profiles, factors, args.record_window
    )
    sections.append(("training", evaluation))
    del training, train_stream

    if args.test:
        testing = parse_kdd(args.test)
        print(f"kdd: testing records: {len(testing)}")
        test_stream = select_dos_and_normal(testing, dos_filter, "testing")
        evaluation = evaluate_split(
            test_stream, dos_filter.testing_attacks, profiles, factors, args.record_window
        )
        sections.append(("testing", evaluation))
        del testing, test_stream

    rows = []
    breakdown_text = []
    for split, evaluation in sections:
        for protocol in ProtocolCategory:
            report = evaluation.per_protocol.get(protocol)
            if report is not None:
                rows.append((f"{split}/{protocol.value}", report))
        rows.append((f"{split}/overall", evaluation.overall))
        breakdown_text.append(f"# {split}\n" + dump_breakdown(evaluation.breakdown))
        rate = evaluation.overall.detection_rate
        fp = evaluation.overall.false_positive_rate
        print(f"kdd: {split} overall detection {100 * (rate or 0):.2f}%"
              f" false positives {100 * (fp or 0):.3f}%")
    _write(args.out, dump_score_table(rows))
    if args.breakdown_out:
        _write(args.breakdown_out, "\n".join(breakdown_text))
    return 0


def _load_grid(path: str) -> list[ToleranceFactors]:
    grid = []
    for number, line in enumerate(_read(path).splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise ParseError("grid rows carry r1, r2 and optionally r3", line=number)
        r3 = float(parts[2]) if len(parts) == 3 and parts[2] != "-" else None
        grid.append(ToleranceFactors(r1=float(parts[0]), r2=float(parts[1]), r3=r3))
    return grid


def cmd_sweep(args) -> int:
    events = fio.load_events(_read(args.events))
    profiles = load_profiles(_read(args.profile))
    if len(profiles) != 1:
        raise ParameterError(
            "sweep needs a single-series profile file (re-run profile with --aggregate"
            " or a single-protocol stream)"
        )
    ((protocol, profile),) = profiles.items()
    truth = fio.load_window_truth(_read(args.window_truth))
    samples = windowize(events, profile.window_length, protocol)
    grid = _load_grid(args.grid)
    points = sweep(samples, profile, truth, grid, volume_only=args.volume_only)
    _write(args.out, dump_roc(points))
    print(f"sweep: {len(points)} operating points -> {args.out}")
    return 0


def cmd_score(args) -> int:
    reports = load_verdicts(_read(args.verdicts))
    truth = fio.load_window_truth(_read(args.window_truth))
    report = score(reports, truth)
    _write(args.out, dump_score(report))
    rate = report.detection_rate
    fp = report.false_positive_rate
    print("score: detection "
          + ("undefined" if rate is None else f"{100 * rate:.2f}%")
          + ", false positives "
          + ("undefined" if fp is None else f"{100 * fp:.3f}%"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fvba",
        description="Flow-volume based flooding-DDoS detection pipeline",
    )
    parser.add_argument("--config", help="key=value defaults file; flags win")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic labelled event stream")
    p.add_argument("--kind", required=True,
                   choices=[k.value for k in ScenarioKind])
    p.add_argument("--clients", type=int, default=40)
    p.add_argument("--zombies", type=int, default=0)
    p.add_argument("--request-rate", type=float, default=3.0)
    p.add_argument("--request-bytes", type=int, default=125_000)
    p.add_argument("--link-rate-bps", type=float, default=8e6)
    p.add_argument("--chunk-bytes", type=int, default=12_500)
    p.add_argument("--zombie-rate-bps", type=float, default=3e6)
    p.add_argument("--zombie-low-rate-bps", type=float, default=1e5)
    p.add_argument("--high-rate-fraction", type=float, default=0.5)
    p.add_argument("--zombie-packet-bytes", type=int, default=1000)
    p.add_argument("--attack-start", type=float, default=25.0)
    p.add_argument("--attack-end", type=float, default=50.0)
    p.add_argument("--duration", type=float, default=75.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window-seconds", type=float, default=DEFAULT_WINDOW_SECONDS,
                   help="window length for --window-truth-out")
    p.add_argument("--out", required=True)
    p.add_argument("--truth-out")
    p.add_argument("--window-truth-out")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("profile", help="build normal profiles from an event stream")
    p.add_argument("--events", required=True)
    p.add_argument("--window-seconds", type=float, default=DEFAULT_WINDOW_SECONDS)
    p.add_argument("--aggregate", action="store_true",
                   help="one profile over all protocols (simulation-style runs)")
    p.add_argument("--per-flow-scope", choices=["capture", "window"], default="capture")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_profile)

    p = sub.add_parser("detect", help="flag attack windows against a profile")
    p.add_argument("--events", required=True)
    p.add_argument("--profile", required=True)
    _add_factor_flags(p)
    p.add_argument("--jobs", type=int, default=1, help="accepted for interface"
                   " compatibility; output is identical for any value")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_detect)

    p = sub.add_parser("characterize", help="band flows of flagged windows")
    p.add_argument("--events", required=True)
    p.add_argument("--profile", required=True)
    _add_factor_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--throttle-out")
    p.set_defaults(handler=cmd_characterize)

    p = sub.add_parser("kdd", help="KDD-99 ingestion, training and evaluation")
    p.add_argument("--train", required=True)
    p.add_argument("--test")
    p.add_argument("--record-window", type=int, default=100)
    _add_factor_flags(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--breakdown-out")
    p.set_defaults(handler=cmd_kdd)

    p = sub.add_parser("sweep", help="tolerance-factor sweep producing ROC points")
    p.add_argument("--events", required=True)
    p.add_argument("--profile", required=True)
    p.add_argument("--window-truth", required=True)
    p.add_argument("--grid", required=True, help="TSV rows: r1, r2 and optional r3")
    p.add_argument("--volume-only", action="store_true",
                   help="ignore the flow condition (single-metric sweep)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("score", help="score a verdict file against window truth")
    p.add_argument("--verdicts", required=True)
    p.add_argument("--window-truth", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_score)

    return parser


def _expand_config(argv: list[str]) -> list[str]:
    """Prepend config-file entries as flags so explicit flags win."""
    path = None
    for index, token in enumerate(argv):
        if token == "--config":
            if index + 1 >= len(argv):
                raise ParameterError("--config requires a file path")
            path = argv[index + 1]
            rest = argv[:index] + argv[index + 2 :]
            break
        if token.startswith("--config="):
            path = token.split("=", 1)[1]
            rest = argv[:index] + argv[index + 1 :]
            break
    if path is None:
        return argv
    injected = []
    for number, line in enumerate(_read(path).splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError("config lines are key=value", line=number)
        key, value = line.split("=", 1)
        injected.extend([f"--{key.strip().replace('_', '-')}", value.strip()])
    # Keep the subcommand first, then config defaults, then explicit flags.
    if rest and not rest[0].startswith("-"):
        return [rest[0]] + injected + rest[1:]
    return injected + rest


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _expand_config(argv)
        parser = build_parser()
        args = parser.parse_args(argv)
        return args.handler(args)
    except (Error, OSError) as exc:
        stage = argv[0] if argv and not argv[0].startswith("-") else "fvba"
        print(f"fvba {stage}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
