"""Append-only session event log and exact replay.

Two kinds of line-delimited JSON records share one field set
{session_id, iteration, event_kind, coords, arm, current_won,
decision_time_ms, rng_cursor}:

  shown    - a point was presented; iteration is its index in the shown
             list, coords/arm describe it, the rest are null.
  feedback - a comparison was judged; iteration is the 1-based feedback
             count, current_won/decision_time_ms describe it.

Coordinates are serialized through repr-level floats, which round-trip
float64 exactly, so replaying a log against the same config and
subspace must reproduce byte-identical coordinates. replay() re-runs
the engine on the logged feedback and verifies every regenerated point
against the log, raising ReplayMismatch on the first divergence.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from . import engine, subspace
from .errors import ConfigMismatch, ReplayMismatch


@dataclass(frozen=True)
class EventRecord:
    session_id: str
    iteration: int
    event_kind: str  # "shown" | "feedback"
    coords: list[float] | None
    arm: int | None
    current_won: bool | None
    decision_time_ms: float | None
    rng_cursor: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "EventRecord":
        data = json.loads(line)
        return cls(**data)


def shown_record(
    session_id: str, state: engine.SessionState, idx: int
) -> EventRecord:
    point = state.shown[idx]
    return EventRecord(
        session_id=session_id,
        iteration=idx,
        event_kind="shown",
        coords=[float(v) for v in point.coords],
        arm=point.arm,
        current_won=None,
        decision_time_ms=None,
        rng_cursor=state.rng_cursor,
    )


def feedback_record(session_id: str, state: engine.SessionState) -> EventRecord:
    rec = state.history[-1]
    return EventRecord(
        session_id=session_id,
        iteration=rec.iteration,
        event_kind="feedback",
        coords=None,
        arm=None,
        current_won=rec.current_won,
        decision_time_ms=rec.decision_time_ms,
        rng_cursor=state.rng_cursor,
    )


def append_events(path: str | Path, records: list[EventRecord]) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for record in records:
            fh.write(record.to_json() + "\n")


def read_events(path: str | Path) -> list[EventRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(EventRecord.from_json(line))
    return records


class EventLogWriter:
    """Appends one session's records to a log file as they happen."""

    def __init__(self, path: str | Path, session_id: str):
        self.path = Path(path)
        self.session_id = session_id

    def log_shown(self, state: engine.SessionState, idx: int) -> None:
        append_events(self.path, [shown_record(self.session_id, state, idx)])

    def log_feedback(self, state: engine.SessionState) -> None:
        append_events(self.path, [feedback_record(self.session_id, state)])


def _match_shown(
    record: EventRecord, state: engine.SessionState, idx: int
) -> None:
    point = state.shown[idx]
    regenerated = [float(v) for v in point.coords]
    if record.iteration != idx:
        raise ReplayMismatch(
            f"shown event iteration {record.iteration} where {idx} was expected"
        )
    if record.coords != regenerated:
        raise ReplayMismatch(
            f"shown point {idx} diverged: logged {record.coords}, "
            f"regenerated {regenerated}"
        )
    if record.arm != point.arm:
        raise ReplayMismatch(
            f"shown point {idx} arm diverged: logged {record.arm}, "
            f"regenerated {point.arm}"
        )
    if record.rng_cursor != state.rng_cursor:
        raise ReplayMismatch(
            f"rng cursor diverged at shown point {idx}: logged "
            f"{record.rng_cursor}, regenerated {state.rng_cursor}"
        )


def replay(
    config: engine.SessionConfig,
    smap: subspace.SubspaceMap,
    events: list[EventRecord],
) -> engine.SessionState:
    """Reconstruct a session from its log, verifying as it goes.

    Raises ConfigMismatch when the log does not look like one session's
    record, and ReplayMismatch when the engine regenerates anything
    different from what was logged.
    """
    if not events:
        raise ConfigMismatch("empty event log")
    session_ids = {e.session_id for e in events}
    if len(session_ids) != 1:
        raise ConfigMismatch(f"log mixes sessions: {sorted(session_ids)}")
    if len(events) < 2 or any(e.event_kind == "feedback" for e in events[:2]):
        raise ConfigMismatch("log must open with the two starting points")

    state = engine.start_session(config, smap)
    _match_shown(events[0], state, 0)
    _match_shown(events[1], state, 1)

    pos = 2
    while pos < len(events):
        record = events[pos]
        if record.event_kind != "feedback":
            raise ReplayMismatch(
                f"expected feedback at log position {pos}, got {record.event_kind}"
            )
        if state.finished:
            raise ReplayMismatch("log continues past the session budget")
        if record.iteration != state.iteration + 1:
            raise ReplayMismatch(
                f"feedback iteration {record.iteration} where "
                f"{state.iteration + 1} was expected"
            )
        result = engine.submit_feedback(
            state, record.current_won, record.decision_time_ms
        )
        pos += 1
        if not result.finished:
            if pos >= len(events):
                break  # log ends mid-session; state is still valid
            if events[pos].event_kind == "shown":
                _match_shown(events[pos], state, result.next_idx)
                pos += 1
    return state
