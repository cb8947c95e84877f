"""Position and action detection over raw proximity readings.

The engine turns per-position analog readings plus door events into add /
remove / none decisions and reconciles them with asynchronously arriving
recognition results.

Filtering works on activity periods (door open to door close).  Within an
activity each position keeps a sliding window of the last W raw readings;
once W readings have arrived inside the activity, every new reading yields a
window mean and the per-activity minimum, maximum and final mean are tracked.
At door close a single pass over all positions applies the threshold rule:

* add    - the minimum mean dipped under ``it_min`` (reflective item) or the
           maximum mean rose over ``it_max`` (non-reflective item), and the
           position was empty;
* remove - the final mean before close sits inside the ``ot_min``..``ot_max``
           band and the position was occupied;
* none   - otherwise.

The add branch is evaluated first.  Decisions fire only at door close;
mid-activity threshold crossings merely update the tracked extremes.

Item identity arrives out of band: a recognition result before the position
event creates a *pending* record (no position), a position event before the
recognition creates a *placeholder* (no name), and whichever side arrives
second completes the record.  Duplicate recognitions inside one activity
within the dedup timeout collapse into one record.  Unmatched pending and
placeholder records expire when the *next* activity closes, so stale halves
cannot attach to much later interactions.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Literal

from .config import LED_COLORS, EngineConfig, ThresholdConfig

Action = Literal["add", "remove", "none"]
EVENT_KINDS = ("add", "remove", "door_open", "door_close", "item_complete", "alert")


class PositionRangeError(IndexError):
    """A reading or LED command referenced a position outside the grid."""


@dataclass(frozen=True)
class SensorReading:
    """One timestamped analog proximity sample for one position."""

    position: int
    value: float
    timestamp_ms: int

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"negative sensor value {self.value}")


@dataclass
class PositionStats:
    """Sliding-window state for one position within an activity period.

    The raw window always advances; the three tracked means only update while
    an activity is open and only once ``window_size`` readings have arrived
    since the door opened (warm-up), so stale pre-activity samples can never
    trigger a decision.
    """

    window_size: int = 5
    window: deque = field(default_factory=deque)
    readings_in_activity: int = 0
    min_mean: float | None = None
    max_mean: float | None = None
    last_mean: float | None = None

    def __post_init__(self):
        if not isinstance(self.window, deque) or self.window.maxlen != self.window_size:
            self.window = deque(self.window, maxlen=self.window_size)

    def reset_activity(self) -> None:
        self.readings_in_activity = 0
        self.min_mean = None
        self.max_mean = None
        self.last_mean = None

    def ingest(self, value: float, in_activity: bool) -> float | None:
        """Advance the window; return the new window mean when one is due."""
        self.window.append(value)
        if not in_activity:
            return None
        self.readings_in_activity += 1
        if self.readings_in_activity < self.window_size:
            return None
        mean = sum(self.window) / len(self.window)
        self.min_mean = mean if self.min_mean is None else min(self.min_mean, mean)
        self.max_mean = mean if self.max_mean is None else max(self.max_mean, mean)
        self.last_mean = mean
        return mean

    @property
    def has_mean(self) -> bool:
        return self.last_mean is not None


def decide(stats: PositionStats, thresholds: ThresholdConfig, occupied: bool) -> Action:
    """Threshold rule over one position's window-mean extremes and final mean.

    Pure function of (min, max, last, occupancy, thresholds); returns "none"
    when the activity produced no full window (insufficient data).
    """
    if not stats.has_mean:
        return "none"
    if (stats.min_mean < thresholds.it_min or stats.max_mean > thresholds.it_max) and not occupied:
        return "add"
    if thresholds.ot_min < stats.last_mean < thresholds.ot_max and occupied:
        return "remove"
    return "none"


@dataclass(frozen=True)
class ActivityPeriod:
    activity_id: int
    opened_at: int
    closed_at: int | None = None


@dataclass
class ItemRecord:
    """Lifecycle record for one tracked item.

    States: ``pending`` (recognized, no position yet), ``placeholder``
    (position known, identity unknown), ``complete`` (both), ``removed``.
    """

    item_id: str
    activity_id: int
    name: str | None = None
    position: int | None = None
    state: str = "pending"
    added_at: int | None = None
    removed_at: int | None = None
    removed_reason: str | None = None

    def check(self) -> None:
        if self.state == "complete" and (self.name is None or self.position is None):
            raise ValueError("complete record must carry name and position")
        if self.state == "pending" and self.position is not None:
            raise ValueError("pending record must not carry a position")
        if self.state == "placeholder" and self.name is not None:
            raise ValueError("placeholder record must not carry a name")

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "name": self.name,
            "state": self.state,
            "position": self.position,
            "added_at": self.added_at,
            "removed_at": self.removed_at,
            "activity_id": self.activity_id,
        }


@dataclass(frozen=True)
class DetectionEvent:
    """Totally ordered (per fridge) output event of the detection engine."""

    seq: int
    kind: str
    timestamp_ms: int
    position: int | None = None
    item: ItemRecord | None = None

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "kind": self.kind,
            "position": self.position,
            "item": self.item.to_dict() if self.item is not None else None,
            "emitted_at": self.timestamp_ms,
        }


class LedPanel:
    """Per-position LED state. Level-triggered: last write wins, no auto-off."""

    def __init__(self, position_count: int):
        self._colors = ["off"] * position_count

    def set(self, position: int, color: str) -> None:
        if not 0 <= position < len(self._colors):
            raise PositionRangeError(f"LED position {position} out of range")
        if color not in LED_COLORS:
            raise ValueError(f"unknown LED color {color!r}")
        self._colors[position] = color

    def get(self, position: int) -> str:
        if not 0 <= position < len(self._colors):
            raise PositionRangeError(f"LED position {position} out of range")
        return self._colors[position]

    def as_dict(self) -> dict[int, str]:
        return {i: c for i, c in enumerate(self._colors)}

    def clear(self) -> None:
        self._colors = ["off"] * len(self._colors)


class ItemStore:
    """Item records plus the pending/placeholder correlation logic."""

    def __init__(self, dedup_timeout_ms: int = 10_000):
        self.dedup_timeout_ms = dedup_timeout_ms
        self.records: dict[str, ItemRecord] = {}
        self._order: list[str] = []
        self._ids = 0
        # (activity_id, name) -> timestamp of the last collapsed recognition
        self._last_recognition: dict[tuple[int, str], int] = {}

    def _new_record(self, activity_id: int, **kwargs) -> ItemRecord:
        self._ids += 1
        rec = ItemRecord(item_id=f"itm-{self._ids:04d}", activity_id=activity_id, **kwargs)
        rec.check()
        self.records[rec.item_id] = rec
        self._order.append(rec.item_id)
        return rec

    def active_at(self, position: int) -> ItemRecord | None:
        for rid in reversed(self._order):
            rec = self.records[rid]
            if rec.position == position and rec.state in ("placeholder", "complete"):
                return rec
        return None

    def active_records(self) -> list[ItemRecord]:
        return [
            self.records[rid]
            for rid in self._order
            if self.records[rid].state in ("pending", "placeholder", "complete")
        ]

    def on_recognition(self, name: str, activity_id: int, now_ms: int) -> tuple[ItemRecord | None, bool]:
        """Apply one successful recognition; returns (record, completed_now).

        Returns (None, False) when the recognition collapsed into an existing
        record as a duplicate.
        """
        key = (activity_id, name)
        last = self._last_recognition.get(key)
        self._last_recognition[key] = now_ms
        if last is not None and now_ms - last <= self.dedup_timeout_ms:
            return None, False
        # Position arrived first: fill the oldest unnamed placeholder of the
        # same activity.
        for rid in self._order:
            rec = self.records[rid]
            if rec.state == "placeholder" and rec.activity_id == activity_id:
                rec.name = name
                rec.state = "complete"
                rec.check()
                return rec, True
        return self._new_record(activity_id, name=name, state="pending"), False

    def on_position_add(self, position: int, activity_id: int, now_ms: int) -> tuple[ItemRecord, ItemRecord | None]:
        """Apply a detected addition; returns (record, displaced_record)."""
        displaced = self.active_at(position)
        if displaced is not None:
            displaced.state = "removed"
            displaced.removed_at = now_ms
            displaced.removed_reason = "displaced"
        # Recognition arrived first: attach the most recent matching pending.
        for rid in reversed(self._order):
            rec = self.records[rid]
            if rec.state == "pending" and rec.activity_id <= activity_id:
                rec.position = position
                rec.state = "complete"
                if rec.added_at is None:
                    rec.added_at = now_ms
                rec.check()
                return rec, displaced
        rec = self._new_record(activity_id, position=position, state="placeholder", added_at=now_ms)
        return rec, displaced

    def on_position_remove(self, position: int, activity_id: int, now_ms: int) -> ItemRecord | None:
        rec = self.active_at(position)
        if rec is None:
            return None
        rec.state = "removed"
        rec.removed_at = now_ms
        rec.removed_reason = "removed"
        return rec

    def correlate(self, event: dict, now_ms: int):
        """Dispatch one correlation input (dict with a ``kind`` field)."""
        kind = event["kind"]
        if kind == "recognition":
            return self.on_recognition(event["name"], event["activity_id"], now_ms)
        if kind == "add":
            return self.on_position_add(event["position"], event["activity_id"], now_ms)
        if kind == "remove":
            return self.on_position_remove(event["position"], event["activity_id"], now_ms)
        raise ValueError(f"unknown correlation event kind {kind!r}")

    def expire_stale(self, before_activity_id: int, now_ms: int) -> list[ItemRecord]:
        """Expire unmatched pending/placeholder records from older activities."""
        expired = []
        for rid in self._order:
            rec = self.records[rid]
            if rec.state in ("pending", "placeholder") and rec.activity_id < before_activity_id:
                rec.state = "removed"
                rec.removed_at = now_ms
                rec.removed_reason = "expired"
                expired.append(rec)
        return expired


class DetectionEngine:
    """Single-fridge detection pipeline head.

    All inputs (readings, door events, recognition results) must arrive on one
    ordered stream; the engine itself is single-threaded.  ``snapshot`` hands
    out immutable copies safe to share across threads.
    """

    def __init__(
        self,
        position_count: int,
        thresholds: ThresholdConfig | None = None,
        engine_config: EngineConfig | None = None,
        on_event: Callable[[DetectionEvent], None] | None = None,
    ):
        cfg = engine_config or EngineConfig()
        self.position_count = position_count
        self.thresholds = thresholds or ThresholdConfig()
        self.window_size = cfg.window_size
        self.stats = [PositionStats(window_size=cfg.window_size) for _ in range(position_count)]
        self._last_reading_ms = [None] * position_count
        self.occupied = [False] * position_count
        self.leds = LedPanel(position_count)
        self.store = ItemStore(dedup_timeout_ms=cfg.dedup_timeout_ms)
        self.activity: ActivityPeriod | None = None
        self._next_activity_id = 0
        self._seq = 0
        self._on_event = on_event
        self.events: list[DetectionEvent] = []
        # activity_id -> events emitted for that activity (used by the
        # evaluation harness to extract per-step predictions)
        self.events_by_activity: dict[int, list[DetectionEvent]] = {}

    # -- event plumbing ----------------------------------------------------

    def _emit(self, kind: str, t_ms: int, position: int | None = None,
              item: ItemRecord | None = None, activity_id: int | None = None) -> DetectionEvent:
        self._seq += 1
        snap = replace(item) if item is not None else None
        ev = DetectionEvent(seq=self._seq, kind=kind, timestamp_ms=t_ms, position=position, item=snap)
        self.events.append(ev)
        if activity_id is not None:
            self.events_by_activity.setdefault(activity_id, []).append(ev)
        if self._on_event is not None:
            self._on_event(ev)
        return ev

    # -- inputs ------------------------------------------------------------

    def door_open(self, t_ms: int) -> DetectionEvent:
        if self.activity is not None:
            raise RuntimeError("door already open")
        self._next_activity_id += 1
        self.activity = ActivityPeriod(activity_id=self._next_activity_id, opened_at=t_ms)
        for st in self.stats:
            st.reset_activity()
        return self._emit("door_open", t_ms, activity_id=self.activity.activity_id)

    def door_close(self, t_ms: int) -> list[DetectionEvent]:
        if self.activity is None:
            raise RuntimeError("door is not open")
        act = self.activity.activity_id
        emitted = self._close_activity(t_ms)
        emitted.append(self._emit("door_close", t_ms, activity_id=act))
        self.activity = None
        return emitted

    def ingest_reading(self, reading: SensorReading) -> PositionStats:
        if not 0 <= reading.position < self.position_count:
            raise PositionRangeError(f"position {reading.position} out of range")
        last = self._last_reading_ms[reading.position]
        if last is not None and reading.timestamp_ms < last:
            raise ValueError(
                f"readings for position {reading.position} went back in time "
                f"({reading.timestamp_ms} < {last})"
            )
        self._last_reading_ms[reading.position] = reading.timestamp_ms
        st = self.stats[reading.position]
        st.ingest(reading.value, in_activity=self.activity is not None)
        return st

    def ingest_recognition(self, name: str, activity_id: int, t_ms: int) -> DetectionEvent | None:
        """Feed one successful, canonicalized recognition result."""
        rec, completed = self.store.on_recognition(name, activity_id, t_ms)
        if rec is not None and completed:
            return self._emit("item_complete", t_ms, position=rec.position, item=rec,
                              activity_id=activity_id)
        return None

    def set_led(self, position: int, color: str) -> str:
        self.leds.set(position, color)
        return self.leds.get(position)

    # -- decision pass -----------------------------------------------------

    def _close_activity(self, t_ms: int) -> list[DetectionEvent]:
        """Run the per-position decision pass, then expire stale records."""
        assert self.activity is not None
        act = self.activity.activity_id
        emitted: list[DetectionEvent] = []
        for pos in range(self.position_count):
            action = decide(self.stats[pos], self.thresholds, self.occupied[pos])
            if action == "add":
                rec, displaced = self.store.on_position_add(pos, act, t_ms)
                self.occupied[pos] = True
                if rec.state == "complete":
                    emitted.append(self._emit("item_complete", t_ms, position=pos, item=rec,
                                              activity_id=act))
                emitted.append(self._emit("add", t_ms, position=pos, item=rec, activity_id=act))
            elif action == "remove":
                rec = self.store.on_position_remove(pos, act, t_ms)
                self.occupied[pos] = False
                emitted.append(self._emit("remove", t_ms, position=pos, item=rec, activity_id=act))
            self.stats[pos].reset_activity()
        # expiry is silent: stale halves flip to removed/expired without events
        self.store.expire_stale(before_activity_id=act, now_ms=t_ms)
        return emitted

    # -- snapshots ----------------------------------------------------------

    def snapshot(self) -> dict:
        """Immutable-ish copy of engine state for other threads / the UI."""
        return {
            "activity": self.activity,
            "occupied": tuple(self.occupied),
            "leds": dict(self.leds.as_dict()),
            "records": [replace(r) for r in self.store.records.values()],
        }


def replay_trace(engine: DetectionEngine, records: Iterable) -> list[DetectionEvent]:
    """Replay parsed trace records (see :mod:`coldbench.trace`) into an engine.

    ``recognized`` lines carry no activity field in the trace format; they are
    attributed to the most recently opened activity.
    """
    from .trace import TraceRecord  # local import to avoid a cycle

    current_activity = 0
    out: list[DetectionEvent] = []
    for rec in records:
        if not isinstance(rec, TraceRecord):
            raise TypeError(f"expected TraceRecord, got {type(rec)!r}")
        if rec.kind == "door_open":
            current_activity += 1
            out.append(engine.door_open(rec.t_ms))
        elif rec.kind == "door_close":
            out.extend(engine.door_close(rec.t_ms))
        elif rec.kind == "reading":
            engine.ingest_reading(SensorReading(rec.position, rec.value, rec.t_ms))
        elif rec.kind == "recognized":
            ev = engine.ingest_recognition(rec.name, current_activity, rec.t_ms)
            if ev is not None:
                out.append(ev)
        else:
            raise ValueError(f"unknown trace record kind {rec.kind!r}")
    return out
