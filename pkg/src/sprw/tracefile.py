"""JSON-lines trace format and output records.

Trace lines are either messages ``{"ts": <int ms>, "type": ":tag",
"attrs": [...]}`` or clock directives ``{"advance": <int ms>}``.  Timestamps
must be non-decreasing across the whole file.

Value encoding is bijective by convention: JSON strings beginning with a
colon denote symbols, all other strings are plain strings (a plain string
that itself starts with a colon is not representable), and ints, floats and
booleans map to their native JSON types.

Output records are one JSON object per line with a fixed key order
(at, pattern, reaction, messageIds, bindings, intermediates) and sorted
binding keys, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import TraceError
from .matching import MatchResult
from .values import Symbol, Value


@dataclass(frozen=True, slots=True)
class MessageEvent:
    ts: int
    type_tag: Symbol
    attrs: tuple[Value, ...]
    line: int = 0


@dataclass(frozen=True, slots=True)
class AdvanceEvent:
    to: int
    line: int = 0


TraceEvent = MessageEvent | AdvanceEvent


def decode_value(raw) -> Value:
    if isinstance(raw, str):
        if raw.startswith(":"):
            return Symbol(raw[1:])
        return raw
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, (int, float)):
        return raw
    raise ValueError(f"unsupported attribute value {raw!r}")


def encode_value(v: Value):
    if isinstance(v, Symbol):
        return f":{v.name}"
    return v


def load_trace(text: str) -> list[TraceEvent]:
    events: list[TraceEvent] = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as err:
            raise TraceError(f"invalid JSON: {err.msg}", lineno) from None
        if not isinstance(obj, dict):
            raise TraceError("trace line must be a JSON object", lineno)
        if "advance" in obj:
            to = obj["advance"]
            if not isinstance(to, int) or isinstance(to, bool):
                raise TraceError("advance target must be an integer", lineno)
            if current is not None and to < current:
                raise TraceError(f"timestamp regression at line {lineno}", lineno)
            current = to
            events.append(AdvanceEvent(to, lineno))
            continue
        if "ts" not in obj or "type" not in obj:
            raise TraceError("message needs 'ts' and 'type'", lineno)
        ts = obj["ts"]
        if not isinstance(ts, int) or isinstance(ts, bool) or ts < 0:
            raise TraceError("'ts' must be a non-negative integer (ms)", lineno)
        if current is not None and ts < current:
            raise TraceError(f"timestamp regression at line {lineno}", lineno)
        current = ts
        tag = obj["type"]
        if not isinstance(tag, str) or not tag.startswith(":"):
            raise TraceError("'type' must be a symbol string like \":motion\"", lineno)
        try:
            attrs = tuple(decode_value(a) for a in obj.get("attrs", []))
        except ValueError as err:
            raise TraceError(str(err), lineno) from None
        events.append(MessageEvent(ts, Symbol(tag[1:]), attrs, lineno))
    return events


def output_record(match: MatchResult, reaction: str | None) -> dict:
    return {
        "at": match.at,
        "pattern": match.pattern,
        "reaction": reaction,
        "messageIds": [m.id for m in match.messages],
        "bindings": {k: encode_value(match.bindings[k]) for k in sorted(match.bindings)},
        "intermediates": {k: encode_value(v) for k, v in match.intermediates.items()},
    }


def record_line(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"), ensure_ascii=True)


def records_for(matches, reactions_of) -> list[dict]:
    """Flatten matches into output records: one record per fired reaction,
    one with a null reaction when a pattern has no bindings."""
    out = []
    for match in matches:
        labels = reactions_of(match.pattern)
        if labels:
            for label in labels:
                out.append(output_record(match, label))
        else:
            out.append(output_record(match, None))
    return out
