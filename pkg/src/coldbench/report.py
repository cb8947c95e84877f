"""Run artifacts: summary statistics and CSV emission.

``summarize`` produces the headline numbers of a run (precision, accuracy,
correct-item ratio, overhead breakdown, and significance tests against the
random and barcode baselines) keyed by their conventional row names; the CSV
writers dump the per-step, per-subsample and overhead-curve data.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .evaluation import (
    CurvePoint,
    ExperimentStep,
    SubsampleResult,
    classify,
    summarize_subsamples,
    welch_t_test,
)


def _mean(values: Sequence[float]) -> float | None:
    return float(np.mean(values)) if len(values) else None


def proportional_overhead(steps: Sequence[ExperimentStep]) -> float:
    """Total extra door time relative to total baseline door time."""
    total_base = sum(s.baseline_duration_s for s in steps)
    total_over = sum(s.overhead_s for s in steps)
    return total_over / total_base if total_base else 0.0


def interaction_delta_vs_barcode(
    steps: Sequence[ExperimentStep], barcode_steps: Sequence[ExperimentStep]
) -> float | None:
    """Relative change in mean add-step interaction time versus the scanner."""
    ours = [s.door_open_duration_s for s in steps if s.ground_truth.action == "add"]
    theirs = [s.door_open_duration_s for s in barcode_steps if s.ground_truth.action == "add"]
    if not ours or not theirs:
        return None
    return (float(np.mean(ours)) - float(np.mean(theirs))) / float(np.mean(theirs))


def summarize(
    steps: Sequence[ExperimentStep],
    subsamples: Sequence[SubsampleResult],
    correct_item_ratio: float | None,
    random_subsamples: Sequence[SubsampleResult] | None = None,
    barcode_subsamples: Sequence[SubsampleResult] | None = None,
    barcode_steps: Sequence[ExperimentStep] | None = None,
) -> dict:
    base = summarize_subsamples(subsamples)
    add_over = [s.overhead_s for s in steps if s.ground_truth.action == "add"]
    other_over = [s.overhead_s for s in steps if s.ground_truth.action != "add"]
    summary = {
        "Mean precision": base["mean_precision"],
        "Mean accuracy": base["mean_accuracy"],
        "Correct item ratio for add action": correct_item_ratio,
        "Overhead compared to baseline": proportional_overhead(steps),
        "Add action overhead": _mean(add_over),
        "Remove and Dummy action overhead": _mean(other_over),
        "P-value of NH_p": None,
        "P-value of NH_a": None,
        "P-value of NH_b": None,
        "Overhead compared to barcode scanning": None,
    }
    if random_subsamples:
        ours_p = [r.precision for r in subsamples if r.precision is not None]
        rand_p = [0.0 if r.precision is None else r.precision for r in random_subsamples]
        summary["P-value of NH_p"] = welch_t_test(ours_p, rand_p).p_value
        summary["P-value of NH_a"] = welch_t_test(
            [r.accuracy for r in subsamples], [r.accuracy for r in random_subsamples]
        ).p_value
    if barcode_subsamples:
        summary["P-value of NH_b"] = welch_t_test(
            [r.mean_overhead_s for r in subsamples],
            [r.mean_overhead_s for r in barcode_subsamples],
        ).p_value
    if barcode_steps:
        summary["Overhead compared to barcode scanning"] = interaction_delta_vs_barcode(
            steps, barcode_steps
        )
    return summary


def write_steps_csv(path: str | Path, steps: Sequence[ExperimentStep]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "step_index", "gt_action", "gt_item", "gt_position",
                "pred_action", "pred_item", "pred_position",
                "truth", "duration_s", "baseline_s", "overhead_s",
            ]
        )
        for s in steps:
            gt, pred = s.ground_truth, s.predicted
            writer.writerow(
                [
                    gt.step_index, gt.action, gt.item or "", gt.position if gt.position is not None else "",
                    pred.action, pred.item or "", pred.position if pred.position is not None else "",
                    classify(gt, pred),
                    f"{s.door_open_duration_s:.3f}", f"{s.baseline_duration_s:.3f}",
                    f"{s.overhead_s:.3f}",
                ]
            )


def write_subsamples_csv(path: str | Path, results: Sequence[SubsampleResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subsample", "indices", "precision", "accuracy", "mean_overhead_s"])
        for i, r in enumerate(results):
            writer.writerow(
                [
                    i,
                    ";".join(str(ix) for ix in r.indices),
                    "" if r.precision is None else f"{r.precision:.4f}",
                    f"{r.accuracy:.4f}",
                    f"{r.mean_overhead_s:.4f}",
                ]
            )


def write_curve_csv(path: str | Path, points: Sequence[CurvePoint]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_s", "n_subsamples", "pe_mean", "pe_stderr", "ae_mean", "ae_stderr"])
        for p in points:
            writer.writerow(
                [
                    f"{p.x_s:g}", p.n_subsamples,
                    f"{p.pe_mean:.4f}", f"{p.pe_stderr:.4f}",
                    f"{p.ae_mean:.4f}", f"{p.ae_stderr:.4f}",
                ]
            )


def write_summary_json(path: str | Path, summary: dict) -> None:
    Path(path).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
