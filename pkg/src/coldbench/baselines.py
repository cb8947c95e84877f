"""Reference predictors the main system is compared against.

The random baseline emits structurally valid predictions from its own private
fridge state, fully independent of the ground truth, so it shows what the
metrics give away for free.  The barcode baseline models a hand scanner:
predictions are perfect but every addition costs a fixed extra scan time on
top of the baseline interaction.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .evaluation import (
    ExperimentStep,
    GroundTruthStep,
    PredictedOutcome,
    PREDICTED_NONE,
)


def random_baseline(
    script: Sequence[GroundTruthStep],
    item_pool: Sequence[str],
    position_count: int,
    seed: int,
    baseline_durations_s: Sequence[float],
) -> list[ExperimentStep]:
    """Uniformly random valid predictions from the predictor's own state."""
    if len(baseline_durations_s) != len(script):
        raise ValueError("one baseline duration per step required")
    rng = np.random.default_rng(seed)
    occupancy: dict[int, str] = {}
    available = list(item_pool)
    steps = []
    for gt, base_s in zip(script, baseline_durations_s):
        actions = ["none"]
        free_positions = [p for p in range(position_count) if p not in occupancy]
        if free_positions and available:
            actions.append("add")
        if occupancy:
            actions.append("remove")
        action = str(rng.choice(sorted(actions)))
        if action == "add":
            item = str(rng.choice(sorted(available)))
            position = int(rng.choice(free_positions))
            occupancy[position] = item
            available.remove(item)
            pred = PredictedOutcome("add", item=item, position=position)
        elif action == "remove":
            position = int(rng.choice(sorted(occupancy)))
            item = occupancy.pop(position)
            available.append(item)
            pred = PredictedOutcome("remove", item=item, position=position)
        else:
            pred = PREDICTED_NONE
        steps.append(
            ExperimentStep(
                ground_truth=gt,
                predicted=pred,
                door_open_duration_s=base_s,
                baseline_duration_s=base_s,
            )
        )
    return steps


def barcode_baseline(
    script: Sequence[GroundTruthStep],
    baseline_durations_s: Sequence[float],
    scan_overhead_s: float = 4.1,
) -> list[ExperimentStep]:
    """Perfect predictions; additions pay the scanning overhead."""
    if len(baseline_durations_s) != len(script):
        raise ValueError("one baseline duration per step required")
    steps = []
    for gt, base_s in zip(script, baseline_durations_s):
        pred = PredictedOutcome(gt.action, item=gt.item, position=gt.position)
        duration = base_s + scan_overhead_s if gt.action == "add" else base_s
        steps.append(
            ExperimentStep(
                ground_truth=gt,
                predicted=pred,
                door_open_duration_s=duration,
                baseline_duration_s=base_s,
            )
        )
    return steps
