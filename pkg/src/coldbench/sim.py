"""Deterministic virtual fridge: door, per-position proximity signals, camera.

The physical layer is modelled analytically.  Each position carries a
piecewise-linear signal trajectory: placing or removing an item retargets the
trajectory toward the new steady level, reached after ``settle_time_ms`` (a
hand moving an item occludes the sensor gradually).  Readings sample the
trajectory plus bounded uniform noise at the configured cadence; camera
frames are emitted only while the door is open and carry the ground-truth
label of the item presented since the door opened (consecutive frames of one
presentation are duplicates, like real video).

Sensor misbehaviour for non-reflective items is modelled at placement time:
with probability ``position_error_prob`` the signal registers on a different
free sensor and stays there until the item is removed.

Everything runs on a shared :class:`~coldbench.clock.Scheduler`, so a fixed
(config, script, seed) triple reproduces the trace byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .clock import Scheduler
from .config import ItemProfile, SimConfig
from .detection import SensorReading
from .trace import ScriptCommand, TraceRecord


class ScriptError(ValueError):
    """A script command violated occupancy or door state; names the step."""


@dataclass(frozen=True)
class CameraFrame:
    """Opaque video frame token with a ground-truth content label."""

    frame_id: int
    t_ms: int
    activity_index: int
    label: str = ""


def frame_content(frame: CameraFrame) -> str:
    """Ground-truth item name shown in the frame; empty when nothing is presented."""
    return frame.label


@dataclass(frozen=True)
class DoorEvent:
    kind: str  # door_open | door_close
    t_ms: int


@dataclass
class _Trajectory:
    """Piecewise-linear level: ramps from ``v0`` at ``t0`` to ``v1`` over ``settle``."""

    t0: int
    v0: float
    v1: float
    settle_ms: int

    def level(self, t_ms: int) -> float:
        if self.settle_ms <= 0 or t_ms >= self.t0 + self.settle_ms:
            return self.v1
        if t_ms <= self.t0:
            return self.v0
        frac = (t_ms - self.t0) / self.settle_ms
        return self.v0 + (self.v1 - self.v0) * frac


@dataclass
class _Slot:
    """Ground-truth contents of one position (item plus its signal position)."""

    item: ItemProfile
    signal_position: int


class VirtualFridge:
    """Discrete-event fridge simulation for one fridge.

    Emissions (readings, frames, door events) go to the registered callbacks
    and are also returned by :meth:`step`.  Commands are imperative and take
    effect at the scheduler's current time; use :meth:`schedule_command` to
    queue them for later.
    """

    def __init__(
        self,
        config: SimConfig,
        catalog: Iterable[ItemProfile],
        scheduler: Scheduler | None = None,
    ):
        config.validate(list(catalog))
        self.config = config
        self.catalog = {it.name: it for it in catalog}
        self.scheduler = scheduler or Scheduler()
        self.rng = np.random.default_rng(config.rng_seed)

        self.door_open_flag = False
        self.activity_index = 0
        self._opened_at: int | None = None
        self.durations_s: list[float] = []

        self.slots: dict[int, _Slot] = {}  # ground-truth occupancy
        self._signal_stack: list[list[str]] = [[] for _ in range(config.position_count)]
        self._trajectory = [
            _Trajectory(t0=0, v0=config.empty_level, v1=config.empty_level, settle_ms=0)
            for _ in range(config.position_count)
        ]
        self._presented_label = ""
        self._frame_ids = 0
        self._stopped = False

        self.on_reading: list[Callable[[SensorReading], None]] = []
        self.on_frame: list[Callable[[CameraFrame], None]] = []
        self.on_door: list[Callable[[DoorEvent], None]] = []
        self.trace: list[TraceRecord] = []
        self._sink: list | None = None

        period = int(round(1000 / config.reading_rate_hz))
        self._reading_period = max(1, period)
        self._frame_period = max(1, int(round(1000 / config.frame_rate_hz)))
        self.scheduler.schedule_in(self._reading_period, self._reading_tick)

    # -- level model ---------------------------------------------------------

    def level(self, position: int, t_ms: int | None = None) -> float:
        """Noise-free signal level at ``position`` (defaults to the current time)."""
        t = self.scheduler.now_ms() if t_ms is None else t_ms
        return self._trajectory[position].level(t)

    def _true_target(self, position: int) -> float:
        stack = self._signal_stack[position]
        if stack:
            return self.catalog[stack[-1]].steady_level
        return self.config.empty_level

    def _retarget(self, position: int, target: float) -> None:
        now = self.scheduler.now_ms()
        current = self.level(position, now)
        self._trajectory[position] = _Trajectory(
            t0=now, v0=current, v1=target, settle_ms=self.config.settle_time_ms
        )

    # -- ticks ----------------------------------------------------------------

    def _reading_tick(self) -> None:
        if self._stopped:
            return
        now = self.scheduler.now_ms()
        amp = self.config.noise_amplitude
        for pos in range(self.config.position_count):
            value = self.level(pos, now)
            if amp > 0:
                value += self.rng.uniform(-amp, amp)
            value = max(0.0, value)
            reading = SensorReading(position=pos, value=value, timestamp_ms=now)
            self.trace.append(TraceRecord(t_ms=now, kind="reading", position=pos, value=value))
            self._deliver(self.on_reading, reading)
        self.scheduler.schedule_in(self._reading_period, self._reading_tick)

    def _frame_tick(self) -> None:
        if self._stopped or not self.door_open_flag:
            return
        now = self.scheduler.now_ms()
        self._frame_ids += 1
        frame = CameraFrame(
            frame_id=self._frame_ids,
            t_ms=now,
            activity_index=self.activity_index,
            label=self._presented_label,
        )
        self._deliver(self.on_frame, frame)
        self.scheduler.schedule_in(self._frame_period, self._frame_tick)

    def _deliver(self, callbacks, emission) -> None:
        if self._sink is not None:
            self._sink.append(emission)
        for cb in callbacks:
            cb(emission)

    # -- commands ---------------------------------------------------------------

    def open_door(self) -> None:
        if self.door_open_flag:
            raise ScriptError("door already open")
        now = self.scheduler.now_ms()
        self.door_open_flag = True
        self.activity_index += 1
        self._opened_at = now
        self._presented_label = ""
        ev = DoorEvent(kind="door_open", t_ms=now)
        self.trace.append(TraceRecord(t_ms=now, kind="door_open"))
        self._deliver(self.on_door, ev)
        self.scheduler.schedule_in(self._frame_period, self._frame_tick)

    def close_door(self) -> None:
        if not self.door_open_flag:
            raise ScriptError("door is not open")
        now = self.scheduler.now_ms()
        self.door_open_flag = False
        self.durations_s.append((now - self._opened_at) / 1000.0)
        self._opened_at = None
        ev = DoorEvent(kind="door_close", t_ms=now)
        self.trace.append(TraceRecord(t_ms=now, kind="door_close"))
        self._deliver(self.on_door, ev)

    def place(self, item_name: str, position: int) -> None:
        if not self.door_open_flag:
            raise ScriptError("cannot place with the door closed")
        if not 0 <= position < self.config.position_count:
            raise ScriptError(f"position {position} out of range")
        if position in self.slots:
            raise ScriptError(f"position {position} already holds {self.slots[position].item.name}")
        item = self.catalog.get(item_name)
        if item is None:
            raise ScriptError(f"unknown item {item_name!r}")
        signal_pos = self._pick_signal_position(item, position)
        self.slots[position] = _Slot(item=item, signal_position=signal_pos)
        self._signal_stack[signal_pos].append(item.name)
        self._retarget(signal_pos, self._true_target(signal_pos))
        self._presented_label = item.name

    def remove(self, position: int) -> None:
        if not self.door_open_flag:
            raise ScriptError("cannot remove with the door closed")
        slot = self.slots.pop(position, None)
        if slot is None:
            raise ScriptError(f"position {position} is empty")
        stack = self._signal_stack[slot.signal_position]
        # drop the most recent signal entry for this item
        for i in range(len(stack) - 1, -1, -1):
            if stack[i] == slot.item.name:
                del stack[i]
                break
        self._retarget(slot.signal_position, self._true_target(slot.signal_position))

    def occlude(self, position: int, duration_ms: int) -> None:
        """Transient obstruction (a hand) over one sensor."""
        if not 0 <= position < self.config.position_count:
            raise ScriptError(f"position {position} out of range")
        self._retarget(position, self.config.occlusion_level)
        self.scheduler.schedule_in(
            duration_ms, lambda: self._retarget(position, self._true_target(position))
        )

    def _pick_signal_position(self, item: ItemProfile, position: int) -> int:
        """Where the placement registers; non-reflective items may mis-register."""
        prob = self.config.position_error_prob
        if item.reflective or prob <= 0:
            return position
        if self.rng.random() >= prob:
            return position
        candidates = [
            p
            for p in range(self.config.position_count)
            if p != position and not self._signal_stack[p]
        ]
        if not candidates:
            return position
        return int(self.rng.choice(candidates))

    # -- driving -----------------------------------------------------------------

    def schedule_command(self, at_ms: int, fn: Callable[[], None]) -> int:
        return self.scheduler.schedule(at_ms, fn)

    def step(self, dt_ms: int) -> list:
        """Advance ``dt_ms`` of virtual time; return emissions in time order."""
        if dt_ms <= 0:
            raise ValueError("dt_ms must be > 0")
        self._sink = []
        try:
            self.scheduler.run_due(self.scheduler.now_ms() + int(dt_ms))
            return self._sink
        finally:
            self._sink = None

    def stop(self) -> None:
        """Stop emitting ticks (the scheduler can then drain to idle)."""
        self._stopped = True

    def occupied_positions(self) -> dict[int, str]:
        return {pos: slot.item.name for pos, slot in sorted(self.slots.items())}


@dataclass
class ScriptResult:
    trace: list[TraceRecord]
    durations_s: list[float]
    activity_count: int


def run_script(
    sim: VirtualFridge,
    commands: Sequence[ScriptCommand],
    start_at_ms: int | None = None,
) -> ScriptResult:
    """Execute script commands sequentially and return the replayable trace.

    Commands other than ``wait`` execute back to back at the same virtual
    instant; ``wait`` advances the cursor.  Occupancy violations raise
    :class:`ScriptError` naming the offending step.
    """
    cursor = sim.scheduler.now_ms() if start_at_ms is None else start_at_ms
    failures: list[str] = []

    def runner(index: int, cmd: ScriptCommand) -> Callable[[], None]:
        def run() -> None:
            try:
                if cmd.kind == "open":
                    sim.open_door()
                elif cmd.kind == "close":
                    sim.close_door()
                elif cmd.kind == "place":
                    sim.place(cmd.item, cmd.position)
                elif cmd.kind == "remove":
                    sim.remove(cmd.position)
                elif cmd.kind == "occlude":
                    sim.occlude(cmd.position, cmd.duration_ms)
                else:
                    raise ScriptError(f"unknown command {cmd.kind!r}")
            except ScriptError as exc:
                failures.append(f"step {index}: {exc}")
                raise

        return run

    for index, cmd in enumerate(commands):
        if cmd.kind == "wait":
            cursor += cmd.duration_ms
            continue
        sim.schedule_command(cursor, runner(index, cmd))

    try:
        sim.scheduler.run_due(cursor)
    except ScriptError as exc:
        raise ScriptError(failures[-1] if failures else str(exc)) from exc
    sim.stop()
    sim.scheduler.run_until_idle()
    return ScriptResult(
        trace=list(sim.trace),
        durations_s=list(sim.durations_s),
        activity_count=sim.activity_index,
    )
