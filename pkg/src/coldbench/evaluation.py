"""Experiment evaluation: script generation, truth classification, metrics,
bootstrap subsampling and the overhead-vs-error curve.

Classification treats any add or remove as the positive class and a no-op
interaction as the negative class.  A predicted positive counts as a true
positive only when action, position and item all match the ground truth; for
removals the predicted item is whatever the system believes occupied that
position, so an earlier mis-recognition surfaces again when the item leaves.
Mismatched positives count as false positives; a predicted none against a
true add/remove is a false negative.

Metrics::

    precision       P  = TP / (TP + FP)        (undefined when TP+FP = 0)
    accuracy        A  = (TP + TN) / total
    precision error PE = 1 - P
    accuracy error  AE = 1 - A

The bootstrap takes ``n_subsamples`` subsamples of ``subsample_size`` distinct
steps each (without replacement within a subsample) and evaluates precision,
accuracy and mean overhead per subsample, which is what the summary statistics
and the overhead curve aggregate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as scipy_stats

Action = str  # "add" | "remove" | "none"


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class GroundTruthStep:
    """One scripted action with its ground-truth item/position."""

    action: Action
    item: str | None = None
    position: int | None = None
    step_index: int = 0


@dataclass(frozen=True)
class PredictedOutcome:
    action: Action
    item: str | None = None
    position: int | None = None


PREDICTED_NONE = PredictedOutcome(action="none")


@dataclass
class ExperimentStep:
    """Ground truth paired with the system's prediction and timings."""

    ground_truth: GroundTruthStep
    predicted: PredictedOutcome
    door_open_duration_s: float
    baseline_duration_s: float

    @property
    def overhead_s(self) -> float:
        return self.door_open_duration_s - self.baseline_duration_s


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def add(self, truth: str) -> None:
        setattr(self, truth.lower(), getattr(self, truth.lower()) + 1)


@dataclass
class Metrics:
    precision: float | None
    accuracy: float

    @property
    def precision_error(self) -> float | None:
        return None if self.precision is None else 1.0 - self.precision

    @property
    def accuracy_error(self) -> float:
        return 1.0 - self.accuracy


def generate_script(
    n_steps: int,
    item_pool: Sequence[str],
    position_count: int,
    seed: int,
) -> list[GroundTruthStep]:
    """State-aware random script of add / remove / none steps.

    Each step draws uniformly among the actions valid in the current fridge
    state: add needs a free position and an out-of-fridge item, remove needs
    an occupied position, none is always valid.  Adds pick a uniform item and
    position; removes pick a uniform occupied position (the item leaves from
    where it was put).
    """
    if n_steps < 1:
        raise EvaluationError("n_steps must be >= 1")
    if position_count < 1:
        raise EvaluationError("position_count must be >= 1")
    if not item_pool:
        raise EvaluationError("item pool is empty")
    if len(set(item_pool)) != len(item_pool):
        raise EvaluationError("item pool contains duplicates")

    rng = np.random.default_rng(seed)
    occupancy: dict[int, str] = {}
    available = list(item_pool)
    steps: list[GroundTruthStep] = []
    for index in range(n_steps):
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
            steps.append(GroundTruthStep("add", item=item, position=position, step_index=index))
        elif action == "remove":
            position = int(rng.choice(sorted(occupancy)))
            item = occupancy.pop(position)
            available.append(item)
            steps.append(GroundTruthStep("remove", item=item, position=position, step_index=index))
        else:
            steps.append(GroundTruthStep("none", step_index=index))
    return steps


def classify(gt: GroundTruthStep, pred: PredictedOutcome) -> str:
    """Map one (ground truth, prediction) pair to TP / FP / TN / FN."""
    gt_positive = gt.action in ("add", "remove")
    pred_positive = pred.action in ("add", "remove")
    if not gt_positive:
        return "TN" if not pred_positive else "FP"
    if not pred_positive:
        return "FN"
    if pred.action != gt.action:
        return "FP"
    if pred.position != gt.position:
        return "FP"
    if pred.item != gt.item:
        return "FP"
    return "TP"


def count_confusion(pairs: Iterable[tuple[GroundTruthStep, PredictedOutcome]]) -> ConfusionCounts:
    counts = ConfusionCounts()
    for gt, pred in pairs:
        counts.add(classify(gt, pred))
    return counts


def metrics(counts: ConfusionCounts) -> Metrics:
    if counts.total == 0:
        raise EvaluationError("no classified steps")
    precision = None
    if counts.tp + counts.fp > 0:
        precision = counts.tp / (counts.tp + counts.fp)
    accuracy = (counts.tp + counts.tn) / counts.total
    return Metrics(precision=precision, accuracy=accuracy)


@dataclass
class SubsampleResult:
    indices: tuple[int, ...]
    precision: float | None
    accuracy: float
    mean_overhead_s: float

    @property
    def precision_error(self) -> float | None:
        return None if self.precision is None else 1.0 - self.precision

    @property
    def accuracy_error(self) -> float:
        return 1.0 - self.accuracy


def bootstrap(
    steps: Sequence[ExperimentStep],
    n_subsamples: int = 100,
    subsample_size: int = 10,
    seed: int = 0,
) -> list[SubsampleResult]:
    """Random subsamples (without replacement) scored individually."""
    if len(steps) < subsample_size:
        raise EvaluationError(
            f"need at least {subsample_size} steps, got {len(steps)}"
        )
    rng = np.random.default_rng(seed)
    results = []
    for _ in range(n_subsamples):
        idx = rng.choice(len(steps), size=subsample_size, replace=False)
        chosen = [steps[int(i)] for i in idx]
        counts = count_confusion((s.ground_truth, s.predicted) for s in chosen)
        m = metrics(counts)
        overhead = float(np.mean([s.overhead_s for s in chosen]))
        results.append(
            SubsampleResult(
                indices=tuple(int(i) for i in idx),
                precision=m.precision,
                accuracy=m.accuracy,
                mean_overhead_s=overhead,
            )
        )
    return results


@dataclass
class CurvePoint:
    x_s: float
    n_subsamples: int
    pe_mean: float
    pe_stderr: float
    ae_mean: float
    ae_stderr: float


def _mean_stderr(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def overhead_curve(
    results: Sequence[SubsampleResult],
    x_range: Sequence[float] = tuple(range(2, 11)),
) -> list[CurvePoint]:
    """Error means over subsamples whose mean overhead stays under each x.

    Subsamples with undefined precision are skipped for the PE aggregate; an
    x with no qualifying subsamples is omitted entirely.
    """
    if not results:
        raise EvaluationError("no subsample results")
    points = []
    for x in x_range:
        qualifying = [r for r in results if r.mean_overhead_s < x]
        if not qualifying:
            continue
        pes = [r.precision_error for r in qualifying if r.precision_error is not None]
        aes = [r.accuracy_error for r in qualifying]
        if not pes:
            continue
        pe_mean, pe_se = _mean_stderr(pes)
        ae_mean, ae_se = _mean_stderr(aes)
        points.append(
            CurvePoint(
                x_s=float(x),
                n_subsamples=len(qualifying),
                pe_mean=pe_mean,
                pe_stderr=pe_se,
                ae_mean=ae_mean,
                ae_stderr=ae_se,
            )
        )
    return points


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    df: float
    p_value: float


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Two-sided Welch's two-sample t-test.

    Degenerate samples (zero variance on both sides) yield p = 1.0 for equal
    means and p = 0.0 otherwise rather than NaN.
    """
    xa = np.asarray(a, dtype=float)
    xb = np.asarray(b, dtype=float)
    if xa.size < 2 or xb.size < 2:
        raise EvaluationError("each sample needs at least two observations")
    va = xa.var(ddof=1) / xa.size
    vb = xb.var(ddof=1) / xb.size
    denom = math.sqrt(va + vb)
    diff = float(xa.mean() - xb.mean())
    if denom == 0.0:
        p = 1.0 if diff == 0.0 else 0.0
        t = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return TTestResult(statistic=t, df=float(xa.size + xb.size - 2), p_value=p)
    t = diff / denom
    df = (va + vb) ** 2 / (va**2 / (xa.size - 1) + vb**2 / (xb.size - 1))
    p = 2.0 * float(scipy_stats.t.sf(abs(t), df))
    return TTestResult(statistic=float(t), df=float(df), p_value=p)


def summarize_subsamples(results: Sequence[SubsampleResult]) -> dict:
    """Means across subsamples; precision averages only where defined."""
    precisions = [r.precision for r in results if r.precision is not None]
    accuracies = [r.accuracy for r in results]
    overheads = [r.mean_overhead_s for r in results]
    return {
        "mean_precision": float(np.mean(precisions)) if precisions else None,
        "mean_accuracy": float(np.mean(accuracies)),
        "mean_overhead_s": float(np.mean(overheads)),
        "n_subsamples": len(results),
    }
