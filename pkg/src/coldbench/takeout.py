"""Take-out assistant over the fridge event stream.

Tracks how long each item usually stays in the fridge and at which hours it
usually leaves, then turns that into guidance when the door opens: red LEDs
for items overdue for removal, green LEDs for items you usually grab around
this time of day or that match a search.  Red outranks green on a shared
position.

The tracker is a pure fold over the event history: replaying the same events
yields identical alerts and recommendations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable

from .service import EventEnvelope, FridgeState

log = logging.getLogger(__name__)

HOURS_PER_DAY = 24
MS_PER_HOUR = 3_600_000


@dataclass
class DwellStats:
    name: str
    dwells_s: list[float] = field(default_factory=list)

    @property
    def mean_s(self) -> float:
        return sum(self.dwells_s) / len(self.dwells_s)

    @property
    def count(self) -> int:
        return len(self.dwells_s)


@dataclass
class TimeOfDayProfile:
    name: str
    buckets: list[int] = field(default_factory=lambda: [0] * HOURS_PER_DAY)

    @property
    def total(self) -> int:
        return sum(self.buckets)

    def share(self, hour: int) -> float:
        total = self.total
        return self.buckets[hour] / total if total else 0.0


def hour_of_day(t_ms: int) -> int:
    return (t_ms // MS_PER_HOUR) % HOURS_PER_DAY


@dataclass
class TakeoutConfig:
    expiry_margin: float = 1.5   # multiple of the mean dwell before alerting
    min_history: int = 3         # removals required before guidance kicks in
    min_share: float = 0.5       # hour-bucket share needed for a recommendation


class TakeoutTracker:
    """Per-item dwell and time-of-day statistics, updated on remove events."""

    def __init__(self, config: TakeoutConfig | None = None):
        self.config = config or TakeoutConfig()
        self.dwell: dict[str, DwellStats] = {}
        self.tod: dict[str, TimeOfDayProfile] = {}

    def apply(self, env: EventEnvelope) -> None:
        if env.kind != "remove" or not env.item:
            return
        name = env.item.get("name")
        if not name:
            return
        added_at = env.item.get("added_at")
        removed_at = env.item.get("removed_at", env.emitted_at)
        if added_at is None:
            log.warning("remove event for %s without added_at; skipped", name)
            return
        self.dwell.setdefault(name, DwellStats(name)).dwells_s.append(
            (removed_at - added_at) / 1000.0
        )
        self.tod.setdefault(name, TimeOfDayProfile(name)).buckets[hour_of_day(removed_at)] += 1

    def replay(self, envelopes: Iterable[EventEnvelope]) -> "TakeoutTracker":
        for env in envelopes:
            self.apply(env)
        return self

    # -- guidance -------------------------------------------------------------

    def _stocked(self, state: FridgeState) -> list[tuple[int, dict]]:
        return [
            (pos, item)
            for pos, item in sorted(state.positions.items())
            if item is not None and item.get("name")
        ]

    def expiry_alerts(
        self, state: FridgeState, now_ms: int, margin: float | None = None
    ) -> list[tuple[int, str]]:
        """Stocked items whose current dwell exceeds margin x their mean dwell."""
        margin = self.config.expiry_margin if margin is None else margin
        if margin <= 1:
            raise ValueError("expiry margin must be > 1")
        alerts = []
        for pos, item in self._stocked(state):
            stats = self.dwell.get(item["name"])
            if stats is None or stats.count < self.config.min_history:
                continue
            added_at = item.get("added_at")
            if added_at is None:
                continue
            current_s = (now_ms - added_at) / 1000.0
            if current_s > margin * stats.mean_s:
                alerts.append((pos, item["name"]))
        return alerts

    def door_open_recommendations(
        self, state: FridgeState, now_ms: int
    ) -> list[tuple[int, str]]:
        """Stocked items usually taken out around the current hour."""
        hour = hour_of_day(now_ms)
        recs = []
        for pos, item in self._stocked(state):
            profile = self.tod.get(item["name"])
            if profile is None or profile.total < self.config.min_history:
                continue
            if profile.share(hour) >= self.config.min_share:
                recs.append((pos, item["name"]))
        return recs

    def search(
        self, query: str, state: FridgeState, tags: dict[str, list[str]] | None = None
    ) -> list[tuple[int, str]]:
        """Case-insensitive substring match over stocked item names and tags."""
        q = query.strip().lower()
        if not q:
            return []
        tags = tags or {}
        hits = []
        for pos, item in self._stocked(state):
            name = item["name"]
            haystack = [name.lower()] + [t.lower() for t in tags.get(name, [])]
            if any(q in h for h in haystack):
                hits.append((pos, name))
        return hits


def led_overlay(reds: Iterable[int], greens: Iterable[int]) -> dict[int, str]:
    """Combined LED map; red (alert) outranks green (recommendation)."""
    out: dict[int, str] = {}
    for pos in greens:
        out[int(pos)] = "green"
    for pos in reds:
        out[int(pos)] = "red"
    return out
