"""Per-fridge event service: append-only log, fold-derived state, long polls.

Every fridge is an isolated partition keyed by an opaque fridge id; an
envelope published to one fridge is never visible to another.  Envelopes get
a contiguous per-fridge sequence number and are immutable once appended.
Current state is a pure left-fold of the envelope log (``fold_state``), which
the hub maintains incrementally and tests verify against a from-scratch fold.

Optionally the log persists as one JSON-lines file per fridge; on startup the
hub replays the files through the same fold.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .detection import DetectionEvent, EVENT_KINDS

MAX_POLL_TIMEOUT_MS = 120_000
DEFAULT_POLL_TIMEOUT_MS = 30_000


class UnknownFridgeError(KeyError):
    pass


class BadEventError(ValueError):
    pass


@dataclass(frozen=True)
class EventEnvelope:
    """Wire-flat published event."""

    fridge_id: str
    seq: int
    kind: str
    position: int | None
    item: dict | None
    emitted_at: int

    def to_dict(self) -> dict:
        return {
            "fridge_id": self.fridge_id,
            "seq": self.seq,
            "kind": self.kind,
            "position": self.position,
            "item": self.item,
            "emitted_at": self.emitted_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EventEnvelope":
        return cls(
            fridge_id=data["fridge_id"],
            seq=int(data["seq"]),
            kind=data["kind"],
            position=data.get("position"),
            item=data.get("item"),
            emitted_at=int(data["emitted_at"]),
        )


@dataclass
class FridgeState:
    """Projection of one fridge's log: occupancy plus active item records."""

    positions: dict[int, dict | None] = field(default_factory=dict)
    items: dict[str, dict] = field(default_factory=dict)
    door_open: bool = False
    activity_count: int = 0
    last_activity_duration_ms: int | None = None
    _opened_at: int | None = None

    def to_dict(self) -> dict:
        return {
            "positions": {str(k): v for k, v in sorted(self.positions.items())},
            "items": [self.items[k] for k in sorted(self.items)],
            "door_open": self.door_open,
            "activity_count": self.activity_count,
            "last_activity_duration_ms": self.last_activity_duration_ms,
        }


def apply_event(state: FridgeState, env: EventEnvelope) -> FridgeState:
    """One fold step. Mutates and returns ``state``."""
    kind = env.kind
    item = env.item
    if kind == "door_open":
        state.door_open = True
        state.activity_count += 1
        state._opened_at = env.emitted_at
    elif kind == "door_close":
        state.door_open = False
        if state._opened_at is not None:
            state.last_activity_duration_ms = env.emitted_at - state._opened_at
        state._opened_at = None
    elif kind == "add":
        if env.position is not None:
            displaced = state.positions.get(env.position)
            if displaced is not None:
                state.items.pop(displaced["item_id"], None)
            state.positions[env.position] = item
        if item is not None:
            state.items[item["item_id"]] = item
    elif kind == "remove":
        if env.position is not None:
            state.positions[env.position] = None
        if item is not None:
            state.items.pop(item["item_id"], None)
    elif kind == "item_complete":
        if item is not None:
            state.items[item["item_id"]] = item
            if item.get("position") is not None:
                state.positions[item["position"]] = item
    elif kind == "alert":
        pass  # informational only
    else:
        raise BadEventError(f"unknown event kind {kind!r}")
    return state


def fold_state(envelopes: Iterable[EventEnvelope]) -> FridgeState:
    """Pure reducer: state equals the left-fold of the published history."""
    state = FridgeState()
    for env in envelopes:
        apply_event(state, env)
    return state


@dataclass
class HistoryEntry:
    seq: int
    action: str
    item: dict | None
    timestamp: int
    activity_id: int | None

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "action": self.action,
            "item": self.item,
            "timestamp": self.timestamp,
            "activity_id": self.activity_id,
        }


class _Fridge:
    def __init__(self, fridge_id: str):
        self.fridge_id = fridge_id
        self.lock = threading.Lock()
        self.cond = threading.Condition(self.lock)
        self.log: list[EventEnvelope] = []
        self.state = FridgeState()
        self.leds: dict[int, str] = {}
        self.tags: dict[str, list[str]] = {}


class FridgeHub:
    """Shared-nothing event hub for any number of fridges.

    Writes to one fridge serialize on that fridge's lock; reads return
    snapshots; blocked polls wait on the fridge's condition and never stall
    publishers of other fridges.
    """

    def __init__(self, data_dir: str | Path | None = None):
        self._fridges: dict[str, _Fridge] = {}
        self._registry_lock = threading.Lock()
        self._data_dir = Path(data_dir) if data_dir is not None else None
        # Millisecond clock used for recommendation queries and default
        # timestamps; a live testbed can point this at its virtual clock.
        self.now_ms = lambda: int(time.time() * 1000)
        if self._data_dir is not None:
            self._data_dir.mkdir(parents=True, exist_ok=True)
            self._load()

    # -- registry ------------------------------------------------------------

    def register_fridge(self, fridge_id: str | None = None) -> str:
        with self._registry_lock:
            fid = fridge_id or f"frg-{secrets.token_hex(6)}"
            if fid in self._fridges:
                raise ValueError(f"fridge {fid} already registered")
            self._fridges[fid] = _Fridge(fid)
        if self._data_dir is not None:
            with open(self._data_dir / "fridges.jsonl", "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"fridge_id": fid}) + "\n")
        return fid

    def fridge_ids(self) -> list[str]:
        with self._registry_lock:
            return sorted(self._fridges)

    def _get(self, fridge_id: str) -> _Fridge:
        fridge = self._fridges.get(fridge_id)
        if fridge is None:
            raise UnknownFridgeError(fridge_id)
        return fridge

    # -- publish / read --------------------------------------------------------

    def publish(self, fridge_id: str, event: DetectionEvent | dict) -> int:
        fridge = self._get(fridge_id)
        if isinstance(event, DetectionEvent):
            data = event.to_dict()
        else:
            data = dict(event)
        kind = data.get("kind")
        if kind not in EVENT_KINDS:
            raise BadEventError(f"unknown event kind {kind!r}")
        emitted_at = data.get("emitted_at")
        if emitted_at is None:
            emitted_at = self.now_ms()
        with fridge.cond:
            env = EventEnvelope(
                fridge_id=fridge_id,
                seq=len(fridge.log) + 1,
                kind=kind,
                position=data.get("position"),
                item=data.get("item"),
                emitted_at=int(emitted_at),
            )
            fridge.log.append(env)
            apply_event(fridge.state, env)
            fridge.cond.notify_all()
        if self._data_dir is not None:
            self._append_log(env)
        return env.seq

    def poll(self, fridge_id: str, cursor: int, timeout_ms: int = DEFAULT_POLL_TIMEOUT_MS) -> list[EventEnvelope]:
        """Envelopes with seq > cursor; blocks up to the (capped) timeout."""
        if cursor < 0:
            raise BadEventError("cursor must be >= 0")
        timeout_ms = max(0, min(int(timeout_ms), MAX_POLL_TIMEOUT_MS))
        fridge = self._get(fridge_id)
        deadline = time.monotonic() + timeout_ms / 1000.0
        with fridge.cond:
            while len(fridge.log) <= cursor:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return []
                fridge.cond.wait(remaining)
            return list(fridge.log[cursor:])

    def head_seq(self, fridge_id: str) -> int:
        fridge = self._get(fridge_id)
        with fridge.lock:
            return len(fridge.log)

    def get_state(self, fridge_id: str) -> FridgeState:
        fridge = self._get(fridge_id)
        with fridge.lock:
            return fold_state(fridge.log)

    def get_state_with_head(self, fridge_id: str) -> tuple[FridgeState, int]:
        """State snapshot plus the seq it covers, read atomically."""
        fridge = self._get(fridge_id)
        with fridge.lock:
            return fold_state(fridge.log), len(fridge.log)

    def get_history(
        self,
        fridge_id: str,
        since: int | None = None,
        item_name: str | None = None,
    ) -> list[HistoryEntry]:
        fridge = self._get(fridge_id)
        with fridge.lock:
            log = list(fridge.log)
        entries = []
        for env in log:
            if env.kind not in ("add", "remove"):
                continue
            if since is not None and env.emitted_at < since:
                continue
            name = (env.item or {}).get("name")
            if item_name is not None and name != item_name:
                continue
            entries.append(
                HistoryEntry(
                    seq=env.seq,
                    action=env.kind,
                    item=env.item,
                    timestamp=env.emitted_at,
                    activity_id=(env.item or {}).get("activity_id"),
                )
            )
        return entries

    def events(self, fridge_id: str) -> list[EventEnvelope]:
        fridge = self._get(fridge_id)
        with fridge.lock:
            return list(fridge.log)

    # -- LEDs and tags ------------------------------------------------------------

    def set_led(self, fridge_id: str, position: int, color: str) -> None:
        fridge = self._get(fridge_id)
        with fridge.lock:
            fridge.leds[int(position)] = color

    def set_leds(self, fridge_id: str, leds: dict[int, str]) -> None:
        fridge = self._get(fridge_id)
        with fridge.lock:
            fridge.leds = {int(k): v for k, v in leds.items()}

    def get_leds(self, fridge_id: str) -> dict[int, str]:
        fridge = self._get(fridge_id)
        with fridge.lock:
            return dict(fridge.leds)

    def set_tags(self, fridge_id: str, item_name: str, tags: Iterable[str]) -> list[str]:
        fridge = self._get(fridge_id)
        cleaned = sorted({t.strip().lower() for t in tags if t.strip()})
        with fridge.lock:
            fridge.tags[item_name] = cleaned
        if self._data_dir is not None:
            with open(self._tags_path(fridge_id), "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"name": item_name, "tags": cleaned}) + "\n")
        return cleaned

    def get_tags(self, fridge_id: str) -> dict[str, list[str]]:
        fridge = self._get(fridge_id)
        with fridge.lock:
            return {k: list(v) for k, v in fridge.tags.items()}

    # -- persistence -----------------------------------------------------------

    def _log_path(self, fridge_id: str) -> Path:
        return self._data_dir / f"events-{fridge_id}.jsonl"

    def _tags_path(self, fridge_id: str) -> Path:
        return self._data_dir / f"tags-{fridge_id}.jsonl"

    def _append_log(self, env: EventEnvelope) -> None:
        with open(self._log_path(env.fridge_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(env.to_dict()) + "\n")

    def _load(self) -> None:
        registry = self._data_dir / "fridges.jsonl"
        if not registry.exists():
            return
        for line in registry.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            fid = json.loads(line)["fridge_id"]
            if fid in self._fridges:
                continue
            fridge = _Fridge(fid)
            self._fridges[fid] = fridge
            log_path = self._log_path(fid)
            if log_path.exists():
                for raw in log_path.read_text(encoding="utf-8").splitlines():
                    if not raw.strip():
                        continue
                    env = EventEnvelope.from_dict(json.loads(raw))
                    fridge.log.append(env)
                    apply_event(fridge.state, env)
            tags_path = self._tags_path(fid)
            if tags_path.exists():
                for raw in tags_path.read_text(encoding="utf-8").splitlines():
                    if not raw.strip():
                        continue
                    rec = json.loads(raw)
                    fridge.tags[rec["name"]] = list(rec["tags"])
