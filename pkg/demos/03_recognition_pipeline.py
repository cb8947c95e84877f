"""Watch frames flow through the recognition back end.

Nine recognizer workers sit behind a lease pool; each submitted frame is
cached under a short-term token, waits for a lease when the pool is busy,
burns 2-5 virtual seconds of latency, and comes back as a raw keyword phrase
that regexp rules canonicalize into an item name.
"""

from coldbench import RecognizerConfig
from coldbench.clock import Scheduler
from coldbench.config import DEFAULT_CANONICAL_RULES, DEFAULT_RAW_PHRASES
from coldbench.recognition import Canonicalizer, RecognitionPipeline, SimulatedRecognizer
from coldbench.sim import CameraFrame

config = RecognizerConfig(pool_size=9, p_hit=1.0)
scheduler = Scheduler()
pipeline = RecognitionPipeline(
    SimulatedRecognizer(config, DEFAULT_RAW_PHRASES, seed=1),
    Canonicalizer.from_pairs(DEFAULT_CANONICAL_RULES),
    config,
    scheduler=scheduler,
)

print("=== 12 frames hit a pool of 9 workers ===")
tokens = [
    pipeline.submit(CameraFrame(frame_id=i, t_ms=i * 200, activity_index=1, label="coke"), 1)
    for i in range(12)
]
print(f"  outstanding leases: {pipeline.pool.outstanding()}  queued: {pipeline.pending_count()}")

scheduler.run_until_idle()
print(f"  after the virtual clock drains: results={len(pipeline.results)} "
      f"outstanding={pipeline.pool.outstanding()}")

first = pipeline.results[0]
print(f"\nfirst result: raw={first.raw_phrase!r} -> canonical={first.name!r} "
      f"after {first.completed_at_ms / 1000:.1f}s")

print("\n=== the frame cache ===")
status, _ = pipeline.cache.fetch(tokens[0])
print(f"  recognized frames are promoted to permanent entries: fetch -> {status!r}")

print("\n=== canonicalization rules ===")
canon = Canonicalizer.from_pairs(DEFAULT_CANONICAL_RULES)
for phrase in ("coca cola 330ml can", "plain yoghurt cup 500g", "mystery smoothie"):
    strict = canon.canonicalize(phrase, strict=True)
    lenient = canon.canonicalize(phrase, strict=False)
    print(f"  {phrase!r:32s} strict={strict!r:10s} lenient={lenient!r}")
