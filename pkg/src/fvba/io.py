"""Text interchange formats for event streams and ground truth.

Event files carry one event per line:

    timestamp<TAB>proto<TAB>src<TAB>sport<TAB>dst<TAB>dport<TAB>bytes

A truth sidecar maps flow keys (``proto:src:sport:dst:dport``) to labels,
one per line; a window-truth file maps window indices to labels.  All
files are UTF-8 with LF line endings.
"""

from __future__ import annotations

from typing import Iterable, Mapping

from .errors import ParseError
from .model import FlowEvent, FlowKey, GroundTruthLabel, ProtocolCategory


def format_event(event: FlowEvent) -> str:
    k = event.key
    return (
        f"{event.timestamp!r}\t{k.protocol}\t{k.src_addr}\t{k.src_port}"
        f"\t{k.dst_addr}\t{k.dst_port}\t{event.bytes}"
    )


def dump_events(events: Iterable[FlowEvent]) -> str:
    return "".join(format_event(e) + "\n" for e in events)


def load_events(text: str) -> list[FlowEvent]:
    events = []
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 7:
            raise ParseError(f"expected 7 columns, got {len(parts)}", line=number)
        ts, proto, src, sport, dst, dport, count = parts
        try:
            key = FlowKey(
                protocol=ProtocolCategory.parse(proto),
                src_addr=src,
                dst_addr=dst,
                src_port=int(sport),
                dst_port=int(dport),
            ).validate()
            event = FlowEvent(timestamp=float(ts), key=key, bytes=int(count)).validate()
        except (ValueError, ParseError) as exc:
            raise ParseError(str(exc), line=number) from None
        events.append(event)
    return events


def flow_key_token(key: FlowKey) -> str:
    return f"{key.protocol}:{key.src_addr}:{key.src_port}:{key.dst_addr}:{key.dst_port}"


def parse_flow_key(token: str) -> FlowKey:
    parts = token.split(":")
    if len(parts) != 5:
        raise ParseError(f"malformed flow key token: {token!r}")
    proto, src, sport, dst, dport = parts
    return FlowKey(
        protocol=ProtocolCategory.parse(proto),
        src_addr=src,
        dst_addr=dst,
        src_port=int(sport),
        dst_port=int(dport),
    ).validate()


def dump_truth(truth: Mapping[FlowKey, GroundTruthLabel]) -> str:
    lines = [
        f"{flow_key_token(key)}\t{label}"
        for key, label in sorted(truth.items(), key=lambda item: flow_key_token(item[0]))
    ]
    return "".join(line + "\n" for line in lines)


def load_truth(text: str) -> dict[FlowKey, GroundTruthLabel]:
    truth = {}
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError(f"expected 2 columns, got {len(parts)}", line=number)
        try:
            truth[parse_flow_key(parts[0])] = GroundTruthLabel.parse(parts[1])
        except (ValueError, ParseError) as exc:
            raise ParseError(str(exc), line=number) from None
    return truth


def dump_window_truth(truth: Mapping[int, bool]) -> str:
    lines = [
        f"{index}\t{'attack' if is_attack else 'normal'}"
        for index, is_attack in sorted(truth.items())
    ]
    return "".join(line + "\n" for line in lines)


def load_window_truth(text: str) -> dict[int, bool]:
    truth = {}
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or parts[1] not in ("attack", "normal"):
            raise ParseError(f"malformed window-truth line: {line!r}", line=number)
        truth[int(parts[0])] = parts[1] == "attack"
    return truth
