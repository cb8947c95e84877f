"""Run the complete benchmark: scripted user, full stack, scored results.

Generates a state-aware random script, executes it against the simulated
fridge with detection and recognition live, classifies every step against
the ground truth, bootstraps the metrics, and compares against the random
and barcode baselines - the whole flow behind ``coldbench eval``.
"""

from coldbench import TestbedConfig, bootstrap, run_experiment
from coldbench.baselines import barcode_baseline, random_baseline
from coldbench.evaluation import classify, overhead_curve
from coldbench.report import summarize

config = TestbedConfig()
flavor, seed = "soda", 0

run = run_experiment(config, flavor, n_steps=50, seed=seed)
print(f"flavor={flavor} seed={seed} steps={len(run.steps)}")
print("\nfirst steps (ground truth -> prediction):")
for s in run.steps[:6]:
    gt, pred = s.ground_truth, s.predicted
    print(f"  {gt.action:6s} {str(gt.item):7s} pos={str(gt.position):4s} -> "
          f"{pred.action:6s} {str(pred.item):7s} pos={str(pred.position):4s} "
          f"[{classify(gt, pred)}]  door={s.door_open_duration_s:.1f}s "
          f"(baseline {s.baseline_duration_s:.1f}s)")

subsamples = bootstrap(run.steps, n_subsamples=100, subsample_size=10, seed=seed)
script = [s.ground_truth for s in run.steps]
bases = [s.baseline_duration_s for s in run.steps]
rand = random_baseline(script, config.flavors[flavor].items, 4, seed + 1, bases)
rand_subs = bootstrap(rand, seed=seed)
barcode = barcode_baseline(script, bases, config.interaction.barcode_overhead_s)
barcode_subs = bootstrap(barcode, seed=seed)

summary = summarize(
    run.steps, subsamples, run.correct_item_ratio_for_adds,
    random_subsamples=rand_subs, barcode_subsamples=barcode_subs, barcode_steps=barcode,
)
print("\nsummary:")
for key, value in summary.items():
    if isinstance(value, float):
        print(f"  {key:42s} {value:10.4g}")
    else:
        print(f"  {key:42s} {value}")

print("\noverhead curve (error vs overhead budget):")
for point in overhead_curve(subsamples):
    print(f"  overhead < {point.x_s:4.0f}s  n={point.n_subsamples:3d}  "
          f"PE={point.pe_mean:.3f}+/-{point.pe_stderr:.3f}  "
          f"AE={point.ae_mean:.3f}+/-{point.ae_stderr:.3f}")
