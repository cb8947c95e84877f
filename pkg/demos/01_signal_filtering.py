"""Walk through the position/action filter on a hand-made signal.

A proximity sensor reports an analog level about once a second: an empty
shelf slot reads around 400, a metal can pulls the level down toward 150, a
milk carton pushes it up toward 650.  Raw readings are noisy and a hand
passing in front of the sensor dips them briefly, so decisions are made on
sliding-window means, and only when the door closes.
"""

import numpy as np

from coldbench import PositionStats, ThresholdConfig, decide

thresholds = ThresholdConfig(it_min=250, it_max=550, ot_min=250, ot_max=520)
rng = np.random.default_rng(0)

print("=== a can is placed: level ramps 400 -> 150, noise +/-20 ===")
ramp = [400, 400, 400, 337, 212, 150, 150, 150, 150, 150]
stats = PositionStats(window_size=5)
for i, level in enumerate(ramp):
    value = level + rng.uniform(-20, 20)
    mean = stats.ingest(value, in_activity=True)
    shown = f"{mean:7.1f}" if mean is not None else "   (warming up)"
    print(f"  t={i:2d}s raw={value:6.1f}   window mean={shown}")

print(f"\n  tracked extremes: min={stats.min_mean:.1f} max={stats.max_mean:.1f} "
      f"last={stats.last_mean:.1f}")
print(f"  decision for an empty position: {decide(stats, thresholds, occupied=False)!r}")
print(f"  the same signal on an occupied position: {decide(stats, thresholds, occupied=True)!r}")

print("\n=== the can is taken out: level returns to the empty baseline ===")
stats = PositionStats(window_size=5)
for level in [150, 150, 275, 400, 400, 400, 400]:
    stats.ingest(level + rng.uniform(-20, 20), in_activity=True)
print(f"  last window mean {stats.last_mean:.1f} sits inside the removal band "
      f"({thresholds.ot_min}, {thresholds.ot_max})")
print(f"  decision for the occupied position: {decide(stats, thresholds, occupied=True)!r}")

print("\n=== a hand blocks the sensor for three seconds ===")
stats = PositionStats(window_size=5)
for level in [400, 400, 300, 300, 300, 400, 400, 400]:
    stats.ingest(level + rng.uniform(-20, 20), in_activity=True)
print(f"  min window mean {stats.min_mean:.1f} never crosses it_min={thresholds.it_min}")
print(f"  decision: {decide(stats, thresholds, occupied=False)!r}  (the window saved us)")
