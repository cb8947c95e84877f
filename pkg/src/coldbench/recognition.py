"""Object-recognition back end: worker leases, frame cache, canonicalization.

A bounded pool of recognizer workers is handed out by lease; submissions
beyond the pool size wait in FIFO order.  Every submitted frame is cached
under an unguessable short-term token (so recognizers fetch by URL-like
token rather than by payload); frames that produce a hit are promoted to
permanent entries.

The bundled recognizer is simulated: it consumes a uniform latency on the
shared clock and succeeds per *presentation*, not per frame.  Frames showing
the same item within one activity are near-duplicates, so they share a single
success draw; the per-item hit probability therefore equals ``p_hit`` exactly.
Raw phrases then pass through regexp canonicalization, which maps noisy
keyword phrases onto canonical item names (optionally rejecting anything
unmatched).
"""

from __future__ import annotations

import re
import secrets
import threading
import time
from collections import OrderedDict, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .clock import Scheduler
from .config import ConfigError, RecognizerConfig
from .sim import CameraFrame, frame_content


class PipelineClosed(RuntimeError):
    pass


class LeaseError(RuntimeError):
    pass


@dataclass
class Lease:
    worker_id: int
    lease_id: int
    acquired_at: float
    released: bool = False


class LeasePool:
    """Thread-safe bounded worker pool with FIFO hand-out.

    ``acquire`` blocks until a worker frees up; waiters are served strictly in
    arrival order.  ``try_acquire`` never blocks and never jumps the queue.
    """

    def __init__(self, size: int):
        if size < 1:
            raise ValueError("pool size must be >= 1")
        self.size = size
        self._cond = threading.Condition()
        self._free = deque(range(size))
        self._tickets: deque[int] = deque()
        self._ticket_ids = 0
        self._lease_ids = 0
        self._outstanding: dict[int, Lease] = {}
        self.peak_outstanding = 0

    def _grant(self) -> Lease:
        worker = self._free.popleft()
        self._lease_ids += 1
        lease = Lease(worker_id=worker, lease_id=self._lease_ids, acquired_at=time.monotonic())
        self._outstanding[lease.lease_id] = lease
        self.peak_outstanding = max(self.peak_outstanding, len(self._outstanding))
        return lease

    def acquire(self, timeout: float | None = None) -> Lease:
        with self._cond:
            self._ticket_ids += 1
            ticket = self._ticket_ids
            self._tickets.append(ticket)
            deadline = None if timeout is None else time.monotonic() + timeout
            while not (self._tickets[0] == ticket and self._free):
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    self._tickets.remove(ticket)
                    self._cond.notify_all()
                    raise LeaseError("timed out waiting for a recognizer lease")
                self._cond.wait(remaining)
            self._tickets.popleft()
            lease = self._grant()
            self._cond.notify_all()
            return lease

    def try_acquire(self) -> Lease | None:
        with self._cond:
            if self._tickets or not self._free:
                return None
            return self._grant()

    def release(self, lease: Lease) -> None:
        with self._cond:
            if lease.released or lease.lease_id not in self._outstanding:
                raise LeaseError(f"lease {lease.lease_id} is not outstanding")
            lease.released = True
            del self._outstanding[lease.lease_id]
            self._free.append(lease.worker_id)
            self._cond.notify_all()

    def outstanding(self) -> int:
        with self._cond:
            return len(self._outstanding)


@dataclass
class CachedFrame:
    payload: object
    expires_at_ms: int
    permanent: bool = False


class FrameCache:
    """Bounded LRU cache issuing short-term tokens for frame payloads.

    Non-permanent entries become unreachable after their TTL; recognized
    frames are promoted to permanent and survive both TTL and LRU eviction.
    """

    def __init__(self, capacity: int = 1000, ttl_ms: int = 60_000,
                 now_ms: Callable[[], int] | None = None):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.ttl_ms = ttl_ms
        self._now_ms = now_ms or (lambda: int(time.monotonic() * 1000))
        self._entries: "OrderedDict[str, CachedFrame]" = OrderedDict()
        self._lock = threading.Lock()

    def store(self, payload: object, ttl_ms: int | None = None) -> str:
        token = secrets.token_urlsafe(16)
        ttl = self.ttl_ms if ttl_ms is None else ttl_ms
        with self._lock:
            self._entries[token] = CachedFrame(payload=payload, expires_at_ms=self._now_ms() + ttl)
            self._evict_locked()
        return token

    def _evict_locked(self) -> None:
        if len(self._entries) <= self.capacity:
            return
        for token in list(self._entries):
            if len(self._entries) <= self.capacity:
                break
            if not self._entries[token].permanent:
                del self._entries[token]

    def fetch(self, token: str) -> tuple[str, object | None]:
        """Returns ('ok', payload), ('expired', None) or ('not_found', None)."""
        with self._lock:
            entry = self._entries.get(token)
            if entry is None:
                return "not_found", None
            if not entry.permanent and self._now_ms() > entry.expires_at_ms:
                return "expired", None
            self._entries.move_to_end(token)
            return "ok", entry.payload

    def promote(self, token: str) -> bool:
        with self._lock:
            entry = self._entries.get(token)
            if entry is None:
                return False
            entry.permanent = True
            return True

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


@dataclass(frozen=True)
class CanonicalRule:
    pattern: re.Pattern
    canonical_name: str


class Canonicalizer:
    """First-match regexp mapping from raw recognizer phrases to item names."""

    def __init__(self, rules: Sequence[CanonicalRule]):
        self.rules = list(rules)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "Canonicalizer":
        rules = []
        for pattern, name in pairs:
            try:
                rules.append(CanonicalRule(re.compile(pattern, re.IGNORECASE), name))
            except re.error as exc:
                raise ConfigError(f"invalid canonicalization pattern {pattern!r} -> {name!r}: {exc}")
        return cls(rules)

    @classmethod
    def from_file(cls, path: str | Path) -> "Canonicalizer":
        pairs = []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "\t" not in text:
                raise ConfigError(f"rule line {lineno} is not 'pattern<TAB>name': {line!r}")
            pattern, name = text.split("\t", 1)
            pairs.append((pattern, name.strip()))
        return cls.from_pairs(pairs)

    def canonicalize(self, raw_phrase: str, strict: bool = True) -> str | None:
        """Canonical name for ``raw_phrase``; raw pass-through when lenient.

        Returns None when strict and nothing matches (rejected).
        """
        for rule in self.rules:
            if rule.pattern.search(raw_phrase):
                return rule.canonical_name
        return None if strict else raw_phrase


class SimulatedRecognizer:
    """Stochastic stand-in for an external image-search recognizer.

    Success is drawn once per (activity, presented item) and shared by all
    frames of that presentation; latency is drawn per frame.
    """

    def __init__(self, config: RecognizerConfig, raw_phrases: dict[str, str], seed: int = 0):
        self.config = config
        self.raw_phrases = dict(raw_phrases)
        self.rng = np.random.default_rng(seed)
        self._outcomes: dict[tuple[int, str], str | None] = {}

    def latency_ms(self) -> int:
        lo, hi = self.config.latency_ms_min, self.config.latency_ms_max
        return int(self.rng.integers(lo, hi + 1))

    def recognize(self, label: str, activity_id: int) -> str | None:
        """Raw keyword phrase for the frame content, or None on a miss."""
        if not label:
            return None
        key = (activity_id, label)
        if key not in self._outcomes:
            self._outcomes[key] = self._draw_outcome(label)
        return self._outcomes[key]

    def _draw_outcome(self, label: str) -> str | None:
        if self.rng.random() >= self.config.p_hit:
            return None
        name = label
        if self.config.confusion_prob > 0 and self.rng.random() < self.config.confusion_prob:
            others = sorted(n for n in self.raw_phrases if n != label)
            if others:
                name = str(self.rng.choice(others))
        return self.raw_phrases.get(name, name)


@dataclass(frozen=True)
class RecognitionResult:
    activity_id: int
    frame_token: str
    raw_phrase: str | None
    name: str | None
    completed_at_ms: int


class RecognitionPipeline:
    """Asynchronous recognition front door.

    In scheduler mode (:meth:`submit`) latency elapses on the virtual clock
    and results are delivered through ``on_result`` in completion order.  In
    blocking mode (:meth:`submit_blocking`) the calling thread holds the lease
    for a scaled real sleep; this is the path exercised by the concurrency
    stress tests.
    """

    def __init__(
        self,
        recognizer: SimulatedRecognizer,
        canonicalizer: Canonicalizer,
        config: RecognizerConfig,
        scheduler: Scheduler | None = None,
        on_result: Callable[[RecognitionResult], None] | None = None,
    ):
        self.recognizer = recognizer
        self.canonicalizer = canonicalizer
        self.config = config
        self.scheduler = scheduler
        self.pool = LeasePool(config.pool_size)
        now = scheduler.now_ms if scheduler is not None else None
        self.cache = FrameCache(config.cache_capacity, config.cache_ttl_ms, now_ms=now)
        self.on_result = on_result
        self.results: list[RecognitionResult] = []
        self._pending: deque[tuple[CameraFrame, str, int]] = deque()
        self._closed = False
        # the numpy generator inside the recognizer is not thread-safe
        self._recognizer_lock = threading.Lock()

    # -- scheduler mode ------------------------------------------------------

    def submit(self, frame: CameraFrame, activity_id: int) -> str:
        """Cache the frame and queue it for recognition; returns the cache token."""
        if self._closed:
            raise PipelineClosed("pipeline is shut down")
        if self.scheduler is None:
            raise RuntimeError("submit() needs a scheduler; use submit_blocking() instead")
        token = self.cache.store(frame)
        lease = self.pool.try_acquire()
        if lease is None:
            self._pending.append((frame, token, activity_id))
        else:
            self._dispatch(frame, token, activity_id, lease)
        return token

    def _dispatch(self, frame: CameraFrame, token: str, activity_id: int, lease: Lease) -> None:
        latency = self.recognizer.latency_ms()
        self.scheduler.schedule_in(
            latency, lambda: self._complete(frame, token, activity_id, lease)
        )

    def _complete(self, frame: CameraFrame, token: str, activity_id: int, lease: Lease) -> None:
        raw = self.recognizer.recognize(frame_content(frame), activity_id)
        name = None
        if raw is not None:
            name = self.canonicalizer.canonicalize(raw, strict=self.config.strict_canonical)
            self.cache.promote(token)
        self.pool.release(lease)
        if self._pending:
            nxt_frame, nxt_token, nxt_act = self._pending.popleft()
            nxt_lease = self.pool.try_acquire()
            if nxt_lease is None:  # pragma: no cover - pool was just released
                self._pending.appendleft((nxt_frame, nxt_token, nxt_act))
            else:
                self._dispatch(nxt_frame, nxt_token, nxt_act, nxt_lease)
        result = RecognitionResult(
            activity_id=activity_id,
            frame_token=token,
            raw_phrase=raw,
            name=name,
            completed_at_ms=self.scheduler.now_ms(),
        )
        self.results.append(result)
        if self.on_result is not None:
            self.on_result(result)

    def pending_count(self) -> int:
        return len(self._pending)

    # -- blocking mode ---------------------------------------------------------

    def submit_blocking(
        self, frame: CameraFrame, activity_id: int, realtime_scale: float = 1.0,
        timeout: float | None = None,
    ) -> RecognitionResult:
        """Synchronous submission: waits for a lease, sleeps the latency, returns."""
        if self._closed:
            raise PipelineClosed("pipeline is shut down")
        token = self.cache.store(frame)
        lease = self.pool.acquire(timeout=timeout)
        try:
            with self._recognizer_lock:
                latency = self.recognizer.latency_ms()
            if realtime_scale > 0:
                time.sleep(latency * realtime_scale / 1000.0)
            with self._recognizer_lock:
                raw = self.recognizer.recognize(frame_content(frame), activity_id)
            name = None
            if raw is not None:
                name = self.canonicalizer.canonicalize(raw, strict=self.config.strict_canonical)
                self.cache.promote(token)
        finally:
            self.pool.release(lease)
        result = RecognitionResult(
            activity_id=activity_id,
            frame_token=token,
            raw_phrase=raw,
            name=name,
            completed_at_ms=int(time.monotonic() * 1000),
        )
        self.results.append(result)
        return result

    def shutdown(self) -> None:
        self._closed = True
