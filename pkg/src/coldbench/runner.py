"""End-to-end experiment execution: scripted user -> sim -> engine -> pipeline.

Each ground-truth step becomes one door activity.  The scripted user opens
the door, performs the action ``place_offset_s`` in, and closes after the
action's drawn motion time; during additions the door additionally stays open
until the item has been presented for ``show_time_s`` (camera frames plus
sensor warm-up), which is where the measured overhead comes from.  The
baseline duration of a step is its motion draw - the same interaction without
the presentation dwell - so instrumented and baseline runs share per-step
draws exactly like re-running one script twice.

Readings, door events and recognition completions all interleave on one
scheduler, so a (config, flavor, seed) triple reproduces the run bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clock import Scheduler
from .config import TestbedConfig
from .detection import DetectionEngine, DetectionEvent
from .evaluation import (
    ExperimentStep,
    GroundTruthStep,
    PredictedOutcome,
    PREDICTED_NONE,
    generate_script,
)
from .recognition import (
    Canonicalizer,
    RecognitionPipeline,
    SimulatedRecognizer,
)
from .sim import VirtualFridge
from .trace import TraceRecord


@dataclass
class RunResult:
    flavor: str
    seed: int
    steps: list[ExperimentStep]
    trace: list[TraceRecord]
    engine: DetectionEngine
    sim: VirtualFridge
    events: list[DetectionEvent]
    correct_add_items: int
    total_adds: int

    @property
    def correct_item_ratio_for_adds(self) -> float | None:
        if self.total_adds == 0:
            return None
        return self.correct_add_items / self.total_adds


def draw_step_timings(
    script: list[GroundTruthStep], config: TestbedConfig, seed: int
) -> tuple[list[float], list[float]]:
    """Per-step (motion_s, gap_s) draws shared by instrumented and baseline runs."""
    rng = np.random.default_rng([seed, 1])
    inter = config.interaction
    ranges = {
        "add": inter.add_motion_s,
        "remove": inter.remove_motion_s,
        "none": inter.none_motion_s,
    }
    motions, gaps = [], []
    for step in script:
        lo, hi = ranges[step.action]
        # millisecond precision so baseline and instrumented timings agree exactly
        motions.append(round(float(rng.uniform(lo, hi)), 3))
        gaps.append(float(rng.uniform(*inter.step_gap_s)))
    return motions, gaps


class ExperimentRunner:
    """Builds one sim+engine+pipeline stack and executes a scripted run."""

    def __init__(self, config: TestbedConfig, flavor: str, seed: int):
        config.validate()
        if flavor not in config.flavors:
            raise KeyError(f"unknown flavor {flavor!r}")
        self.config = config
        self.flavor = flavor
        self.seed = seed

    def run(self, script: list[GroundTruthStep] | None = None, n_steps: int = 50) -> RunResult:
        cfg = self.config
        flavor_cfg = cfg.flavors[self.flavor]
        items = cfg.flavor_items(self.flavor)
        if script is None:
            script = generate_script(n_steps, flavor_cfg.items, cfg.sim.position_count, self.seed)

        scheduler = Scheduler()
        sim_cfg_dict = {**cfg.sim.__dict__}
        sim_cfg_dict["position_error_prob"] = flavor_cfg.position_error_prob
        sim_cfg_dict["rng_seed"] = int(np.random.default_rng([self.seed, 2]).integers(0, 2**31))
        sim_cfg = type(cfg.sim)(**sim_cfg_dict)
        sim = VirtualFridge(sim_cfg, items, scheduler)

        engine = DetectionEngine(
            position_count=cfg.sim.position_count,
            thresholds=cfg.thresholds,
            engine_config=cfg.engine,
        )

        rec_cfg_dict = {**cfg.recognizer.__dict__}
        rec_cfg_dict["p_hit"] = flavor_cfg.p_hit
        rec_cfg = type(cfg.recognizer)(**rec_cfg_dict)
        recognizer = SimulatedRecognizer(
            rec_cfg,
            cfg.raw_phrases,
            seed=int(np.random.default_rng([self.seed, 3]).integers(0, 2**31)),
        )
        canonicalizer = Canonicalizer.from_pairs(cfg.canonical_rules)

        recognized_trace: list[TraceRecord] = []

        def on_result(result):
            if result.name is not None:
                t = scheduler.now_ms()
                recognized_trace.append(TraceRecord(t_ms=t, kind="recognized", name=result.name))
                engine.ingest_recognition(result.name, result.activity_id, t)

        pipeline = RecognitionPipeline(
            recognizer, canonicalizer, rec_cfg, scheduler=scheduler, on_result=on_result
        )

        sim.on_door.append(
            lambda ev: engine.door_open(ev.t_ms) if ev.kind == "door_open" else engine.door_close(ev.t_ms)
        )
        sim.on_reading.append(engine.ingest_reading)
        sim.on_frame.append(lambda fr: pipeline.submit(fr, fr.activity_index))

        motions, gaps = draw_step_timings(script, cfg, self.seed)
        inter = cfg.interaction
        cursor = 1000  # let the sensors emit a little pre-run background
        for step, motion_s, gap_s in zip(script, motions, gaps):
            t_open = int(round(cursor))
            t_act = t_open + int(round(inter.place_offset_s * 1000))
            if step.action == "add":
                t_close = t_open + int(
                    round(max(motion_s, inter.place_offset_s + inter.show_time_s) * 1000)
                )
                sim.schedule_command(t_open, sim.open_door)
                name, pos = step.item, step.position
                sim.schedule_command(t_act, lambda n=name, p=pos: sim.place(n, p))
            elif step.action == "remove":
                t_close = t_open + int(round(motion_s * 1000))
                sim.schedule_command(t_open, sim.open_door)
                pos = step.position
                sim.schedule_command(t_act, lambda p=pos: sim.remove(p))
            else:
                t_close = t_open + int(round(motion_s * 1000))
                sim.schedule_command(t_open, sim.open_door)
            sim.schedule_command(t_close, sim.close_door)
            cursor = t_close + gap_s * 1000

        scheduler.run_due(int(round(cursor)))
        sim.stop()
        scheduler.run_until_idle()

        steps = self._collect_steps(script, motions, sim, engine)
        correct_adds = sum(
            1
            for s in steps
            if s.ground_truth.action == "add" and s.predicted.item == s.ground_truth.item
        )
        total_adds = sum(1 for s in steps if s.ground_truth.action == "add")
        trace = sorted(sim.trace + recognized_trace, key=lambda r: r.t_ms)
        return RunResult(
            flavor=self.flavor,
            seed=self.seed,
            steps=steps,
            trace=trace,
            engine=engine,
            sim=sim,
            events=list(engine.events),
            correct_add_items=correct_adds,
            total_adds=total_adds,
        )

    def _collect_steps(
        self,
        script: list[GroundTruthStep],
        motions: list[float],
        sim: VirtualFridge,
        engine: DetectionEngine,
    ) -> list[ExperimentStep]:
        durations = sim.durations_s
        if len(durations) != len(script):
            raise RuntimeError(
                f"expected {len(script)} activities, simulator recorded {len(durations)}"
            )
        steps = []
        for index, (gt, motion_s) in enumerate(zip(script, motions)):
            activity_id = index + 1
            pred = self._prediction_for_activity(engine, activity_id)
            steps.append(
                ExperimentStep(
                    ground_truth=gt,
                    predicted=pred,
                    door_open_duration_s=durations[index],
                    baseline_duration_s=motion_s,
                )
            )
        return steps

    @staticmethod
    def _prediction_for_activity(engine: DetectionEngine, activity_id: int) -> PredictedOutcome:
        """Exactly one predicted outcome per activity; no event means none.

        The predicted item is the record's *final* name so recognitions that
        complete after the door closed still count for their activity.
        """
        for ev in engine.events_by_activity.get(activity_id, ()):
            if ev.kind not in ("add", "remove"):
                continue
            name = None
            if ev.item is not None:
                live = engine.store.records.get(ev.item.item_id)
                name = live.name if live is not None else ev.item.name
            return PredictedOutcome(action=ev.kind, item=name, position=ev.position)
        return PREDICTED_NONE


def run_experiment(
    config: TestbedConfig,
    flavor: str,
    n_steps: int = 50,
    seed: int = 0,
    script: list[GroundTruthStep] | None = None,
) -> RunResult:
    return ExperimentRunner(config, flavor, seed).run(script=script, n_steps=n_steps)
