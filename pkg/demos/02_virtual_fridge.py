"""Drive the virtual fridge from a script and inspect the trace it emits.

The simulator owns the physical layer: a door, one proximity channel per
shelf position, and a camera that produces labelled frames while the door is
open.  Runs are deterministic per seed; the same script replayed with the
same seed yields a byte-identical trace.
"""

from coldbench import SimConfig, VirtualFridge
from coldbench.clock import Scheduler
from coldbench.config import default_items
from coldbench.sim import run_script
from coldbench.trace import dump_trace, parse_script

SCRIPT = """
# place a can at position 1, come back later and take it out
wait 500
open
wait 1000
place coke 1
wait 6000
close
wait 8000
open
wait 1000
remove 1
wait 6000
close
"""

sim = VirtualFridge(SimConfig(rng_seed=42), default_items(), Scheduler())
result = run_script(sim, parse_script(SCRIPT.splitlines()))

print(f"activities: {result.activity_count}")
print(f"door-open durations: {result.durations_s} s")
print(f"trace records: {len(result.trace)}")
print("\nfirst 12 trace lines:")
for line in dump_trace(result.trace).splitlines()[:12]:
    print(f"  {line}")

pos1 = [r.value for r in result.trace if r.kind == "reading" and r.position == 1]
print(f"\nposition 1 signal: starts near {pos1[0]:.0f}, dips to {min(pos1):.0f}, "
      f"ends near {pos1[-1]:.0f}")

again = VirtualFridge(SimConfig(rng_seed=42), default_items(), Scheduler())
retrace = run_script(again, parse_script(SCRIPT.splitlines()))
print(f"replay with the same seed is byte-identical: "
      f"{dump_trace(result.trace) == dump_trace(retrace.trace)}")
