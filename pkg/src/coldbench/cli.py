"""Command line front end.

``coldbench eval``   runs a full scripted experiment (sim + detection +
recognition), scores it against the ground truth, bootstraps the metrics,
runs the baselines and writes CSV/JSON artifacts.

``coldbench serve``  starts the HTTP service; with ``--demo`` it also spins
up a live virtual fridge driveable from the browser console.

``coldbench replay`` replays a trace file through a detection engine and
prints the emitted events.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .baselines import barcode_baseline, random_baseline
from .config import TestbedConfig
from .detection import DetectionEngine, replay_trace
from .evaluation import bootstrap, overhead_curve
from .report import (
    summarize,
    write_curve_csv,
    write_steps_csv,
    write_subsamples_csv,
    write_summary_json,
)
from .runner import run_experiment
from .trace import dump_trace, load_trace


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coldbench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="run and score a scripted experiment")
    p_eval.add_argument("--flavor", choices=["soda", "mix"], default="soda")
    p_eval.add_argument("--steps", type=int, default=50)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--config", type=Path, default=None, help="JSON config overrides")
    p_eval.add_argument("--out", type=Path, default=Path("out"))
    p_eval.add_argument(
        "--baseline", choices=["random", "barcode", "both"], default="both",
        help="baseline predictor(s) to run alongside",
    )
    p_eval.add_argument("--subsamples", type=int, default=100)
    p_eval.add_argument("--subsample-size", type=int, default=10)

    p_serve = sub.add_parser("serve", help="start the fridge HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8008)
    p_serve.add_argument("--data-dir", type=Path, default=None)
    p_serve.add_argument("--config", type=Path, default=None)
    p_serve.add_argument("--demo", action="store_true", help="attach a live virtual fridge")
    p_serve.add_argument("--demo-flavor", choices=["soda", "mix"], default="mix")
    p_serve.add_argument(
        "--console-dir", type=Path, default=None,
        help="static assets served under /console/ (defaults to frontend/dist if present)",
    )

    p_replay = sub.add_parser("replay", help="replay a trace file through the engine")
    p_replay.add_argument("trace", type=Path)
    p_replay.add_argument("--config", type=Path, default=None)

    return parser


def _load_config(path: Path | None) -> TestbedConfig:
    if path is None:
        cfg = TestbedConfig()
        cfg.validate()
        return cfg
    return TestbedConfig.from_file(path)


def cmd_eval(args) -> int:
    cfg = _load_config(args.config)
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)

    run = run_experiment(cfg, args.flavor, n_steps=args.steps, seed=args.seed)
    subsamples = bootstrap(run.steps, args.subsamples, args.subsample_size, seed=args.seed)
    curve = overhead_curve(subsamples)

    flavor_cfg = cfg.flavors[args.flavor]
    script = [s.ground_truth for s in run.steps]
    bases = [s.baseline_duration_s for s in run.steps]

    random_steps = random_subs = None
    barcode_steps = barcode_subs = None
    if args.baseline in ("random", "both"):
        random_steps = random_baseline(
            script, flavor_cfg.items, cfg.sim.position_count, args.seed + 1, bases
        )
        random_subs = bootstrap(random_steps, args.subsamples, args.subsample_size, seed=args.seed)
    if args.baseline in ("barcode", "both"):
        barcode_steps = barcode_baseline(script, bases, cfg.interaction.barcode_overhead_s)
        barcode_subs = bootstrap(barcode_steps, args.subsamples, args.subsample_size, seed=args.seed)

    summary = summarize(
        run.steps, subsamples, run.correct_item_ratio_for_adds,
        random_subsamples=random_subs,
        barcode_subsamples=barcode_subs,
        barcode_steps=barcode_steps,
    )
    summary["flavor"] = args.flavor
    summary["seed"] = args.seed
    summary["steps"] = args.steps

    write_steps_csv(out / "steps.csv", run.steps)
    write_subsamples_csv(out / "subsamples.csv", subsamples)
    write_curve_csv(out / "curve.csv", curve)
    write_summary_json(out / "summary.json", summary)
    (out / "trace.txt").write_text(dump_trace(run.trace), encoding="utf-8")
    if random_steps is not None:
        write_steps_csv(out / "random_steps.csv", random_steps)
    if barcode_steps is not None:
        write_steps_csv(out / "barcode_steps.csv", barcode_steps)
    cfg.to_file(out / "config.json")

    print(json.dumps(summary, indent=2))
    print(f"artifacts written to {out}/", file=sys.stderr)
    return 0


def cmd_serve(args) -> int:
    from .httpapi import FridgeApiServer, LiveTestbed
    from .service import FridgeHub

    cfg = _load_config(args.config)
    hub = FridgeHub(data_dir=args.data_dir)
    console_dir = args.console_dir
    if console_dir is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        console_dir = candidate if candidate.is_dir() else None
    server = FridgeApiServer(hub, host=args.host, port=args.port, console_dir=console_dir)
    if args.demo:
        testbed = LiveTestbed(hub, cfg, flavor=args.demo_flavor)
        server.add_testbed(testbed)
        testbed.start()
        print(f"demo fridge: {testbed.fridge_id}")
        if console_dir is not None:
            print(f"console: http://{args.host}:{server.port}/console/?fridge={testbed.fridge_id}")
    print(f"listening on http://{args.host}:{server.port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def cmd_replay(args) -> int:
    cfg = _load_config(args.config)
    engine = DetectionEngine(
        position_count=cfg.sim.position_count,
        thresholds=cfg.thresholds,
        engine_config=cfg.engine,
    )
    events = replay_trace(engine, load_trace(args.trace))
    for ev in events:
        print(json.dumps(ev.to_dict()))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "eval":
        return cmd_eval(args)
    if args.command == "serve":
        return cmd_serve(args)
    if args.command == "replay":
        return cmd_replay(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
