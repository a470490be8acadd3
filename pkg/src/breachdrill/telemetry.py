"""Append-only JSON-Lines telemetry with CSV/JSON export and session metrics.

One log file per session (`telemetry/<session_id>.jsonl`), one complete JSON
object per line, sequence numbers strictly increasing. Readers only ever see
complete lines; a truncated final line (crash mid-write) is reported, not
fatal. CSV export flattens payloads with dotted keys (`payload.raw`), one
row per event, empty cells for absent fields.

Turn duration is measured TurnResolved-to-TurnResolved: a log with n
resolved turns yields n-1 durations.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .backends import BackendError, CompletionBackend
from .scaffolding import BloomProcess


class EventKind(str, Enum):
    SESSION_START = "SessionStart"
    SESSION_END = "SessionEnd"
    CHAT_TURN = "ChatTurn"
    DICE_ROLL = "DiceRoll"
    TURN_RESOLVED = "TurnResolved"
    INJECT_FIRED = "InjectFired"
    COPILOT_QUERY = "CopilotQuery"
    COPILOT_ANSWER = "CopilotAnswer"
    SCAFFOLD_CHANGE = "ScaffoldChange"


class SequenceGap(Exception):
    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"telemetry sequence gap: expected seq {expected}, got {got}")


class ParseError(Exception):
    def __init__(self, line_no: int, detail: str = ""):
        self.line_no = line_no
        self.detail = detail
        super().__init__(f"telemetry log parse error at line {line_no}: {detail}")


class IoError(Exception):
    pass


@dataclass(frozen=True)
class TelemetryEvent:
    seq: int
    session_id: str
    timestamp: int
    kind: EventKind
    payload: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "session_id": self.session_id,
            "timestamp": self.timestamp,
            "kind": self.kind.value,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TelemetryEvent":
        return cls(
            seq=int(data["seq"]),
            session_id=str(data["session_id"]),
            timestamp=int(data["timestamp"]),
            kind=EventKind(data["kind"]),
            payload=dict(data.get("payload", {})),
        )


class TelemetrySink:
    """Single writer for one session's log file."""

    def __init__(self, session_id: str, path: str | Path):
        self.session_id = session_id
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._last_seq = 0
        self._fh = self.path.open("a", encoding="utf-8")

    @property
    def last_seq(self) -> int:
        return self._last_seq

    def next_seq(self) -> int:
        return self._last_seq + 1

    def record(self, event: TelemetryEvent) -> None:
        if event.session_id != self.session_id:
            raise ValueError(
                f"event session {event.session_id!r} does not match sink {self.session_id!r}"
            )
        if event.seq != self._last_seq + 1:
            raise SequenceGap(self._last_seq + 1, event.seq)
        try:
            self._fh.write(json.dumps(event.to_dict()) + "\n")
            self._fh.flush()
        except OSError as exc:
            raise IoError(str(exc)) from exc
        self._last_seq = event.seq
        if event.kind is EventKind.SESSION_END:
            self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def record(sink: TelemetrySink, event: TelemetryEvent) -> None:
    sink.record(event)


def read_log(path: str | Path, strict: bool = True) -> tuple[list[TelemetryEvent], Optional[int]]:
    """Parse a log file into events.

    Returns (events, truncated_line_no). A final line with no newline that
    fails to parse is treated as a crash torso: complete lines are returned
    and its line number reported. Any other bad line raises ParseError (or,
    with strict=False, is reported as the truncation point and parsing
    stops).
    """
    path = Path(path)
    events: list[TelemetryEvent] = []
    truncated: Optional[int] = None
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    ends_with_newline = raw.endswith("\n")
    lines = raw.splitlines()
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        last_line = line_no == len(lines)
        try:
            events.append(TelemetryEvent.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            if last_line and not ends_with_newline:
                truncated = line_no
                break
            if strict:
                raise ParseError(line_no, str(exc)) from exc
            truncated = line_no
            break
    return events, truncated


def export_json(log_path: str | Path, out_path: str | Path) -> Path:
    """Lossless JSON export: an array of event objects."""
    events, _ = read_log(log_path)
    out_path = Path(out_path)
    out_path.write_text(
        json.dumps([e.to_dict() for e in events], indent=2) + "\n", encoding="utf-8"
    )
    return out_path


def import_json(path: str | Path) -> list[TelemetryEvent]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return [TelemetryEvent.from_dict(rec) for rec in data]


def _flatten(payload: dict, prefix: str = "payload") -> dict[str, object]:
    flat: dict[str, object] = {}
    for key, value in payload.items():
        name = f"{prefix}.{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, name))
        elif isinstance(value, (list, tuple)):
            flat[name] = json.dumps(value)
        else:
            flat[name] = value
    return flat


BASE_CSV_COLUMNS = ["seq", "session_id", "timestamp", "kind"]


def export_csv(log_path: str | Path, out_path: str | Path) -> Path:
    """One row per event; payload fields become dotted columns
    (payload.raw, payload.roll.total, ...); absent fields are empty."""
    events, _ = read_log(log_path)
    rows = []
    payload_columns: list[str] = []
    seen = set()
    for event in events:
        flat = _flatten(event.payload)
        for col in flat:
            if col not in seen:
                seen.add(col)
                payload_columns.append(col)
        row = {
            "seq": event.seq,
            "session_id": event.session_id,
            "timestamp": event.timestamp,
            "kind": event.kind.value,
        }
        row.update(flat)
        rows.append(row)
    columns = BASE_CSV_COLUMNS + sorted(payload_columns)
    out_path = Path(out_path)
    with out_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, restval="")
        writer.writeheader()
        writer.writerows(rows)
    return out_path


def export(log_path: str | Path, fmt: str, out_path: Optional[str | Path] = None) -> Path:
    fmt = fmt.lower()
    log_path = Path(log_path)
    if out_path is None:
        out_path = log_path.with_suffix(".json" if fmt == "json" else ".csv")
    if fmt == "json":
        return export_json(log_path, out_path)
    if fmt == "csv":
        return export_csv(log_path, out_path)
    raise ValueError(f"unknown export format {fmt!r} (expected csv or json)")


def export_string(events: Sequence[TelemetryEvent], fmt: str) -> str:
    """Export an in-memory event list without touching disk."""
    fmt = fmt.lower()
    if fmt == "json":
        return json.dumps([e.to_dict() for e in events], indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        payload_columns: list[str] = []
        seen = set()
        rows = []
        for event in events:
            flat = _flatten(event.payload)
            for col in flat:
                if col not in seen:
                    seen.add(col)
                    payload_columns.append(col)
            row = {
                "seq": event.seq,
                "session_id": event.session_id,
                "timestamp": event.timestamp,
                "kind": event.kind.value,
            }
            row.update(flat)
            rows.append(row)
        writer = csv.DictWriter(buf, fieldnames=BASE_CSV_COLUMNS + sorted(payload_columns), restval="")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()
    raise ValueError(f"unknown export format {fmt!r} (expected csv or json)")


# Keyword table for the heuristic Bloom classifier, checked in this order.
# The first pattern that matches wins; nothing matching falls back to
# Remember.
BLOOM_KEYWORD_TABLE: list[tuple[BloomProcess, tuple[str, ...]]] = [
    (BloomProcess.CREATE, ("design", "devise", "create", "propose", "invent", "build a plan")),
    (BloomProcess.EVALUATE, ("critique", "is this", "evaluate", "assess", "should i", "should we", "worth it")),
    (BloomProcess.ANALYZE, ("compare", "what signals", "difference between", "distinguish", "analyze", "versus", " vs ", "correlate")),
    (BloomProcess.APPLY, ("how do i", "how can i", "how to", "how would i", "walk me through", "steps to")),
    (BloomProcess.UNDERSTAND, ("why", "explain", "what does it mean", "how does", "how did")),
    (BloomProcess.REMEMBER, ("what is", "what are", "define", "definition", "who is", "list the", "name the")),
]

_LEVEL_NAMES = {p.value.lower(): p for p in BloomProcess}


def classify_query_bloom(
    query: str, backend: Optional[CompletionBackend] = None
) -> BloomProcess:
    """Bloom cognitive level of a copilot query.

    The documented keyword table is the default; a completion backend, when
    given, may override it (its reply is scanned for a level name). Falls
    back to Remember.
    """
    if backend is not None:
        try:
            reply = backend.complete(
                "Classify the cognitive level of the learner's question as exactly one "
                "of: Remember, Understand, Apply, Analyze, Evaluate, Create. Reply with "
                "the single level name.",
                [{"sender": "learner", "content": query}],
            )
            for word in re.findall(r"[A-Za-z]+", reply):
                if word.lower() in _LEVEL_NAMES:
                    return _LEVEL_NAMES[word.lower()]
        except BackendError:
            pass
    lowered = f" {query.lower()} "
    for process, keywords in BLOOM_KEYWORD_TABLE:
        for keyword in keywords:
            if keyword in lowered:
                return process
    return BloomProcess.REMEMBER


@dataclass
class SessionMetrics:
    turn_durations: list[int] = field(default_factory=list)
    hint_frequency: float = 0.0
    max_error_streak: int = 0
    dice_outcome_histogram: dict[int, int] = field(default_factory=dict)
    bloom_query_histogram: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "turn_durations": list(self.turn_durations),
            "hint_frequency": self.hint_frequency,
            "max_error_streak": self.max_error_streak,
            "dice_outcome_histogram": {str(k): v for k, v in sorted(self.dice_outcome_histogram.items())},
            "bloom_query_histogram": dict(sorted(self.bloom_query_histogram.items())),
        }


def derive_metrics_from_events(events: Sequence[TelemetryEvent]) -> SessionMetrics:
    metrics = SessionMetrics()
    last_turn_ts: Optional[int] = None
    streak = 0
    turns = 0
    queries = 0
    for event in events:
        if event.kind is EventKind.DICE_ROLL:
            raw = int(event.payload.get("raw", 0))
            metrics.dice_outcome_histogram[raw] = metrics.dice_outcome_histogram.get(raw, 0) + 1
        elif event.kind is EventKind.TURN_RESOLVED:
            turns += 1
            if last_turn_ts is not None:
                metrics.turn_durations.append(event.timestamp - last_turn_ts)
            last_turn_ts = event.timestamp
            if event.payload.get("success"):
                streak = 0
            else:
                peak = streak + 1
                metrics.max_error_streak = max(metrics.max_error_streak, peak)
                # failures_after already reflects a consumed streak reset
                streak = int(event.payload.get("failures_after", peak))
        elif event.kind is EventKind.COPILOT_QUERY:
            queries += 1
            bloom = str(event.payload.get("bloom_class", ""))
            if bloom:
                metrics.bloom_query_histogram[bloom] = metrics.bloom_query_histogram.get(bloom, 0) + 1
    metrics.hint_frequency = (queries / turns) if turns else 0.0
    return metrics


def derive_metrics(log_path: str | Path) -> SessionMetrics:
    events, _ = read_log(log_path)
    return derive_metrics_from_events(events)
