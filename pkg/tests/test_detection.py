"""Detection engine: window filtering, threshold decisions, correlation."""

import numpy as np
import pytest

from coldbench.config import ThresholdConfig
from coldbench.detection import (
    DetectionEngine,
    ItemStore,
    LedPanel,
    PositionRangeError,
    PositionStats,
    SensorReading,
    decide,
    replay_trace,
)
from coldbench.trace import TraceRecord

THRESHOLDS = ThresholdConfig(it_min=250, it_max=550, ot_min=250, ot_max=520)


def brute_force_window_stats(values, window):
    """Independent oracle: means of every full trailing window, plus extremes."""
    means = [
        sum(values[i - window + 1 : i + 1]) / window
        for i in range(window - 1, len(values))
    ]
    if not means:
        return means, None, None, None
    return means, min(means), max(means), means[-1]


class TestWindowFilter:
    def test_constant_signal(self):
        st = PositionStats(window_size=5)
        for _ in range(4):
            st.ingest(400.0, in_activity=True)
        assert st.last_mean is None
        mean = st.ingest(400.0, in_activity=True)
        assert mean == 400.0
        assert (st.min_mean, st.max_mean, st.last_mean) == (400.0, 400.0, 400.0)

    def test_descending_placement_trace(self):
        # a reflective placement: empty level 400 ramping to 150 over 2 s,
        # sampled at 1 Hz half a second out of phase
        values = [400, 400, 400, 400, 400, 337.5, 212.5, 150, 150, 150, 150, 150]
        st = PositionStats(window_size=5)
        got_means = [m for v in values if (m := st.ingest(float(v), True)) is not None]
        expected = [400.0, 387.5, 350.0, 300.0, 250.0, 200.0, 162.5, 150.0]
        assert got_means == expected
        assert st.min_mean == 150.0
        assert st.max_mean == 400.0
        assert st.last_mean == 150.0

    def test_warmup_rule(self):
        st = PositionStats(window_size=5)
        for v in [400, 390, 410, 405]:
            assert st.ingest(float(v), in_activity=True) is None
        assert not st.has_mean

    def test_out_of_activity_updates_window_only(self):
        st = PositionStats(window_size=3)
        for v in [100, 100, 100]:
            st.ingest(float(v), in_activity=False)
        assert not st.has_mean
        assert list(st.window) == [100, 100, 100]

    def test_brute_force_equivalence_random_traces(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            n = int(rng.integers(1, 60))
            values = rng.uniform(0, 800, size=n).tolist()
            st = PositionStats(window_size=5)
            means = [m for v in values if (m := st.ingest(v, True)) is not None]
            exp_means, exp_min, exp_max, exp_last = brute_force_window_stats(values, 5)
            assert means == pytest.approx(exp_means)
            if exp_means:
                assert st.min_mean == pytest.approx(exp_min)
                assert st.max_mean == pytest.approx(exp_max)
                assert st.last_mean == pytest.approx(exp_last)

    def test_reading_out_of_range_rejected(self):
        engine = DetectionEngine(4, THRESHOLDS)
        with pytest.raises(PositionRangeError):
            engine.ingest_reading(SensorReading(position=9, value=400, timestamp_ms=0))

    def test_negative_value_rejected(self):
        with pytest.raises(ValueError):
            SensorReading(position=0, value=-1.0, timestamp_ms=0)

    def test_backwards_timestamps_rejected_per_position(self):
        engine = DetectionEngine(4, THRESHOLDS)
        engine.ingest_reading(SensorReading(0, 400.0, 1000))
        with pytest.raises(ValueError, match="back in time"):
            engine.ingest_reading(SensorReading(0, 400.0, 500))
        # other positions keep their own clocks
        engine.ingest_reading(SensorReading(1, 400.0, 500))

    def test_record_state_invariants_enforced(self):
        from coldbench.detection import ItemRecord

        with pytest.raises(ValueError):
            ItemRecord(item_id="x", activity_id=1, state="complete", name="coke").check()
        with pytest.raises(ValueError):
            ItemRecord(item_id="x", activity_id=1, state="pending", position=2).check()
        with pytest.raises(ValueError):
            ItemRecord(item_id="x", activity_id=1, state="placeholder", name="coke").check()


def make_stats(min_mean, max_mean, last_mean):
    st = PositionStats(window_size=5)
    st.min_mean, st.max_mean, st.last_mean = min_mean, max_mean, last_mean
    st.readings_in_activity = 5
    return st


class TestDecide:
    def test_reflective_add(self):
        assert decide(make_stats(150, 420, 150), THRESHOLDS, occupied=False) == "add"

    def test_remove_inside_band(self):
        assert decide(make_stats(390, 410, 400), THRESHOLDS, occupied=True) == "remove"

    def test_remove_requires_occupied(self):
        assert decide(make_stats(390, 410, 400), THRESHOLDS, occupied=False) == "none"

    def test_add_gated_by_occupancy(self):
        assert decide(make_stats(150, 420, 150), THRESHOLDS, occupied=True) == "none"

    def test_nonreflective_add(self):
        assert decide(make_stats(400, 620, 650), THRESHOLDS, occupied=False) == "add"

    def test_insufficient_data_is_none(self):
        assert decide(PositionStats(window_size=5), THRESHOLDS, occupied=False) == "none"

    def test_add_branch_checked_first(self):
        # both branches would match; add wins on an empty position
        st = make_stats(150, 420, 400)
        assert decide(st, THRESHOLDS, occupied=False) == "add"


def constant_readings(t0, pos_values, count, period=1000):
    records = []
    for i in range(count):
        t = t0 + (i + 1) * period
        for pos, value in pos_values.items():
            records.append(TraceRecord(t_ms=t, kind="reading", position=pos, value=float(value)))
    return records


class TestCloseActivity:
    def test_no_readings_empty_events(self):
        engine = DetectionEngine(4, THRESHOLDS)
        engine.door_open(0)
        events = engine.door_close(3000)
        assert [e.kind for e in events] == ["door_close"]

    def test_single_placement_fires_one_add(self):
        engine = DetectionEngine(4, THRESHOLDS)
        records = [TraceRecord(t_ms=0, kind="door_open")]
        records += constant_readings(0, {0: 400, 1: 400, 2: 150, 3: 400}, count=6)
        records += [TraceRecord(t_ms=7000, kind="door_close")]
        events = replay_trace(engine, records)
        actions = [(e.kind, e.position) for e in events if e.kind in ("add", "remove")]
        assert actions == [("add", 2)]
        assert engine.occupied == [False, False, True, False]

    def test_double_removal_fires_two_removes(self):
        engine = DetectionEngine(4, THRESHOLDS)
        # activity 1: place reflective items at positions 1 and 3
        records = [TraceRecord(t_ms=0, kind="door_open")]
        records += constant_readings(0, {0: 400, 1: 150, 2: 400, 3: 150}, count=6)
        records += [TraceRecord(t_ms=7000, kind="door_close")]
        # activity 2: both positions read empty again
        records += [TraceRecord(t_ms=10000, kind="door_open")]
        records += constant_readings(10000, {0: 400, 1: 400, 2: 400, 3: 400}, count=6)
        records += [TraceRecord(t_ms=17000, kind="door_close")]
        events = replay_trace(engine, records)
        removes = [(e.kind, e.position) for e in events if e.kind == "remove"]
        assert removes == [("remove", 1), ("remove", 3)]
        assert engine.occupied == [False] * 4

    def test_at_most_one_event_per_position_per_activity(self):
        engine = DetectionEngine(4, THRESHOLDS)
        engine.door_open(0)
        for i in range(20):  # long activity; stats keep updating
            t = (i + 1) * 500
            engine.ingest_reading(SensorReading(2, 150.0 if i > 4 else 400.0, t))
        events = engine.door_close(11000)
        assert sum(1 for e in events if e.kind in ("add", "remove")) == 1

    def test_replay_determinism(self):
        records = [TraceRecord(t_ms=0, kind="door_open")]
        records += constant_readings(0, {0: 150, 1: 400, 2: 400, 3: 400}, count=6)
        records += [TraceRecord(t_ms=7000, kind="door_close")]
        runs = []
        for _ in range(2):
            engine = DetectionEngine(4, THRESHOLDS)
            events = replay_trace(engine, records)
            runs.append([(e.seq, e.kind, e.position) for e in events])
        assert runs[0] == runs[1]

    def test_occupancy_gate_invariants_random_sequences(self):
        rng = np.random.default_rng(23)
        engine = DetectionEngine(4, THRESHOLDS)
        last_action = {p: "remove" for p in range(4)}
        for _ in range(500):
            engine.door_open(engine.events[-1].timestamp_ms + 1 if engine.events else 0)
            for pos in range(4):
                kind = rng.integers(0, 3)
                if kind == 0:
                    st = make_stats(float(rng.uniform(0, 249)), 420.0, 150.0)
                elif kind == 1:
                    st = make_stats(390.0, 410.0, float(rng.uniform(251, 519)))
                else:
                    st = make_stats(390.0, 410.0, 600.0)
                st.window_size = engine.window_size
                engine.stats[pos] = st
            t = engine.events[-1].timestamp_ms + 10
            for ev in engine.door_close(t):
                if ev.kind == "add":
                    assert last_action[ev.position] == "remove", "double add"
                    last_action[ev.position] = "add"
                elif ev.kind == "remove":
                    assert last_action[ev.position] == "add", "remove when empty"
                    last_action[ev.position] = "remove"

    def test_events_totally_ordered(self):
        engine = DetectionEngine(2, THRESHOLDS)
        engine.door_open(0)
        engine.door_close(100)
        engine.door_open(200)
        engine.door_close(300)
        seqs = [e.seq for e in engine.events]
        assert seqs == sorted(seqs) and len(set(seqs)) == len(seqs)


class TestCorrelate:
    def test_recognition_then_position(self):
        store = ItemStore()
        rec, completed = store.on_recognition("coke", activity_id=7, now_ms=0)
        assert rec.state == "pending" and rec.position is None and not completed
        attached, displaced = store.on_position_add(2, activity_id=7, now_ms=3000)
        assert displaced is None
        assert attached is rec
        assert (attached.state, attached.name, attached.position) == ("complete", "coke", 2)

    def test_position_then_recognition(self):
        store = ItemStore()
        placeholder, _ = store.on_position_add(1, activity_id=8, now_ms=0)
        assert placeholder.state == "placeholder" and placeholder.name is None
        rec, completed = store.on_recognition("milk", activity_id=8, now_ms=2500)
        assert completed and rec is placeholder
        assert (rec.state, rec.name, rec.position) == ("complete", "milk", 1)

    def test_dedup_beyond_timeout_makes_new_item(self):
        store = ItemStore(dedup_timeout_ms=10_000)
        store.on_recognition("coke", activity_id=9, now_ms=0)
        store.on_recognition("coke", activity_id=9, now_ms=12_000)
        pendings = [r for r in store.records.values() if r.state == "pending"]
        assert len(pendings) == 2

    def test_dedup_within_timeout_collapses(self):
        store = ItemStore(dedup_timeout_ms=10_000)
        store.on_recognition("coke", activity_id=9, now_ms=0)
        rec, completed = store.on_recognition("coke", activity_id=9, now_ms=4_000)
        assert rec is None and not completed
        pendings = [r for r in store.records.values() if r.state == "pending"]
        assert len(pendings) == 1

    def test_same_name_different_activity_is_new_item(self):
        store = ItemStore(dedup_timeout_ms=10_000)
        store.on_recognition("coke", activity_id=1, now_ms=0)
        store.on_recognition("coke", activity_id=2, now_ms=2_000)
        assert len(store.records) == 2

    def test_add_onto_occupied_supersedes(self):
        store = ItemStore()
        first, _ = store.on_position_add(3, activity_id=1, now_ms=0)
        second, displaced = store.on_position_add(3, activity_id=2, now_ms=1000)
        assert displaced is first
        assert first.state == "removed" and first.removed_reason == "displaced"
        assert store.active_at(3) is second

    def test_pending_attaches_to_later_activity_add(self):
        store = ItemStore()
        rec, _ = store.on_recognition("coke", activity_id=3, now_ms=0)
        attached, _ = store.on_position_add(0, activity_id=4, now_ms=500)
        assert attached is rec and rec.state == "complete"

    def test_expiry_of_unmatched_pending(self):
        store = ItemStore()
        rec, _ = store.on_recognition("coke", activity_id=1, now_ms=0)
        assert store.expire_stale(before_activity_id=1, now_ms=100) == []
        expired = store.expire_stale(before_activity_id=2, now_ms=5000)
        assert expired == [rec] and rec.removed_reason == "expired"

    def test_expiry_of_unmatched_placeholder(self):
        store = ItemStore()
        rec, _ = store.on_position_add(2, activity_id=1, now_ms=100)
        expired = store.expire_stale(before_activity_id=2, now_ms=5000)
        assert expired == [rec] and rec.removed_reason == "expired"
        # an expired placeholder no longer occupies its position in the store
        assert store.active_at(2) is None

    def test_remove_on_empty_returns_none(self):
        store = ItemStore()
        assert store.on_position_remove(0, activity_id=1, now_ms=0) is None

    def test_correlate_dispatch(self):
        store = ItemStore()
        rec, _ = store.correlate({"kind": "recognition", "name": "juice", "activity_id": 1}, 0)
        assert rec.state == "pending"
        with pytest.raises(ValueError):
            store.correlate({"kind": "bogus"}, 0)


class TestLeds:
    def test_set_and_read(self):
        panel = LedPanel(4)
        panel.set(2, "red")
        assert panel.get(2) == "red"

    def test_last_write_wins(self):
        panel = LedPanel(4)
        panel.set(2, "red")
        panel.set(2, "green")
        assert panel.get(2) == "green"

    def test_off_idempotent(self):
        panel = LedPanel(4)
        panel.set(2, "off")
        panel.set(2, "off")
        assert panel.get(2) == "off"

    def test_invalid_position(self):
        panel = LedPanel(4)
        with pytest.raises(PositionRangeError):
            panel.set(7, "red")

    def test_invalid_color(self):
        panel = LedPanel(4)
        with pytest.raises(ValueError):
            panel.set(1, "blue")

    def test_engine_set_led(self):
        engine = DetectionEngine(4, THRESHOLDS)
        assert engine.set_led(2, "red") == "red"
        assert engine.snapshot()["leds"][2] == "red"
