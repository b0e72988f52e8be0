"""Command-line front end: generate streams, replay them, sweep baselines,
and validate the fast paths against brute-force references.

Heavy imports happen inside the handlers so FLUXMEM_THREADS can cap BLAS
thread pools before numpy loads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path


def _apply_thread_cap() -> None:
    cap = os.environ.get("FLUXMEM_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluxmem",
        description="Streaming token-grid compression engine and benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic stream file from a scene spec")
    gen.add_argument("--spec", required=True, help="scene spec file (key = value lines)")
    gen.add_argument("--out", required=True, help="output stream file (FMTS)")

    run = sub.add_parser("run", help="replay a stream through the memory engine")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="FMTS stream file")
    src.add_argument("--spec", help="scene spec file to generate on the fly")
    run.add_argument("--events", help="query timeline: JSON lines {\"frame\": N, \"event\": \"query\"}")
    run.add_argument("--cs", type=int, default=8, help="short-tier capacity in frames (>= 2)")
    run.add_argument("--cm", type=int, default=64, help="mid-tier capacity")
    run.add_argument("--cl", type=int, default=1024, help="long-tier capacity")
    run.add_argument("--capacity-unit", choices=("frames", "tokens"), default="frames")
    run.add_argument("--gamma", type=float, default=0.3, help="trigger sensitivity in [0, 1]")
    run.add_argument("--bins", type=int, default=256)
    run.add_argument("--flat-epsilon", type=float, default=1e-6)
    run.add_argument(
        "--policy",
        default="fluxmem",
        choices=("fluxmem", "fifo", "uniform", "random", "fixed_threshold"),
        help="reduction policy at the short-to-mid boundary",
    )
    run.add_argument("--ratio", type=float, default=0.5, help="drop ratio for uniform/random")
    run.add_argument("--theta-minus", type=float, help="fixed backward threshold")
    run.add_argument("--theta-plus", type=float, help="fixed forward threshold")
    run.add_argument("--theta-sdc", type=float, help="fixed consolidation threshold")
    run.add_argument("--seed", type=int, default=0, help="seed for the random policy")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--no-timing", action="store_true", help="zero timing fields for byte-exact output")
    run.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    bench = sub.add_parser("bench", help="sweep reduction policies over a synthetic stream")
    bench.add_argument("--spec", required=True, help="scene spec file")
    bench.add_argument(
        "--policy",
        default="fluxmem,fifo,uniform,random,fixed_threshold",
        help="comma-separated policy list",
    )
    bench.add_argument("--ratios", default="0,0.25,0.5,0.75", help="drop-ratio grid for uniform/random")
    bench.add_argument(
        "--thetas", default="0,0.25,0.5,0.75,1.0,1.5,2.0", help="threshold grid for fixed_threshold"
    )
    bench.add_argument("--bins", type=int, default=256)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", required=True, help="output directory")
    bench.add_argument("--no-plot", action="store_true")

    oracle = sub.add_parser("oracle", help="validate fast paths against brute-force references")
    oracle.add_argument("--seed", type=int, default=0)
    oracle.add_argument("--otsu-trials", type=int, default=1000)
    oracle.add_argument("--tas-trials", type=int, default=200)
    oracle.add_argument("--sdc-trials", type=int, default=200)
    oracle.add_argument("--pair-trials", type=int, default=100)
    oracle.add_argument("--bins", type=int, default=256)
    return parser


def _load_frames(args):
    from .fmts import read_stream
    from .synth import generate, load_scene_file

    if getattr(args, "input", None):
        fh = open(args.input, "rb")
        return read_stream(fh), fh
    spec = load_scene_file(args.spec)
    return iter(generate(spec)), None


def _load_events(path) -> dict[int, int]:
    queries: dict[int, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec.get("event") != "query":
                raise ValueError(f"events line {lineno}: unknown event {rec.get('event')!r}")
            frame = int(rec["frame"])
            queries[frame] = queries.get(frame, 0) + 1
    return queries


def cmd_gen(args) -> int:
    from .fmts import write_stream
    from .synth import generate, load_scene_file

    spec = load_scene_file(args.spec)
    grids = generate(spec)
    with open(args.out, "wb") as fh:
        written = write_stream(grids, fh)
    print(f"wrote {len(grids)} frames ({written} bytes) to {args.out}")
    return 0


def _build_policy(args):
    from .policies import Policy

    if args.policy == "fluxmem":
        return None
    return Policy(
        kind=args.policy,
        ratio=args.ratio,
        theta_minus=args.theta_minus,
        theta_plus=args.theta_plus,
        theta_sdc=args.theta_sdc,
        seed=args.seed,
    )


def cmd_run(args) -> int:
    from .engine import MemoryConfig, StreamingMemory
    from .reports import FrameRecord, RunReport, write_frames_csv, write_summary_json

    config = MemoryConfig(
        c_s=args.cs,
        c_m=args.cm,
        c_l=args.cl,
        capacity_unit=args.capacity_unit,
        gamma=args.gamma,
        bins=args.bins,
        flat_epsilon=args.flat_epsilon,
    )
    engine = StreamingMemory(config, policy=_build_policy(args))
    queries = _load_events(args.events) if args.events else {}

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    frames, fh = _load_frames(args)
    records = []
    prev_micros = dict(engine._stage_micros)
    try:
        for grid in frames:
            t0 = time.perf_counter()
            event, _ = engine.ingest_frame(grid)
            ingest_us = (time.perf_counter() - t0) * 1e6
            queried = queries.get(grid.frame_index, 0) > 0
            for _ in range(queries.get(grid.frame_index, 0)):
                engine.handle_query(grid.frame_index)
            st = engine.stats()
            cur_micros = st.stage_micros
            records.append(
                FrameRecord(
                    frame=grid.frame_index,
                    short_frames=st.short_frames,
                    mid_entries=st.mid_entries,
                    mid_tokens=st.mid_tokens,
                    long_entries=st.long_entries,
                    long_tokens=st.long_tokens,
                    held_tokens=st.tokens_held,
                    ingested_tokens=st.tokens_ingested,
                    drop_ratio=st.drop_ratio,
                    trigger_ratio=event.ratio,
                    trigger_threshold=event.threshold_used,
                    trigger_fired=event.fired,
                    query=queried,
                    scoring_us=cur_micros["scoring"] - prev_micros["scoring"],
                    otsu_us=cur_micros["otsu"] - prev_micros["otsu"],
                    tas_us=cur_micros["tas"] - prev_micros["tas"],
                    sdc_us=cur_micros["sdc"] - prev_micros["sdc"],
                    ingest_us=ingest_us,
                )
            )
            prev_micros = cur_micros
    finally:
        if fh is not None:
            fh.close()

    config_echo = {
        "c_s": config.c_s,
        "c_m": config.c_m,
        "c_l": config.c_l,
        "capacity_unit": config.capacity_unit,
        "gamma": config.gamma,
        "bins": config.bins,
        "flat_epsilon": config.flat_epsilon,
        "policy": args.policy,
        "ratio": args.ratio,
        "seed": args.seed,
        "source": args.input or args.spec,
    }
    report = RunReport(config=config_echo, records=records)
    if args.no_timing:
        report = report.zero_timing()
    write_frames_csv(report, outdir / "run_frames.csv")
    write_summary_json(report, outdir / "run_summary.json")
    if not args.no_plot:
        from .plots import render_run_figures

        render_run_figures(report, outdir)

    agg = report.aggregates()
    print(
        f"{agg['frames']} frames, drop ratio {agg['final_drop_ratio']:.4f}, "
        f"{agg['trigger_fires']} trigger fires, {agg['queries']} queries, "
        f"mean ingest {agg['mean_ingest_us']:.0f} us"
    )
    return 0


def _bench_cells(args):
    from .policies import Policy

    ratios = [float(x) for x in args.ratios.split(",") if x.strip() != ""]
    thetas = [float(x) for x in args.thetas.split(",") if x.strip() != ""]
    for name in args.policy.split(","):
        name = name.strip()
        if name == "fluxmem":
            yield None, "adaptive", float("nan")
        elif name == "fifo":
            yield Policy(kind="fifo"), "none", float("nan")
        elif name in ("uniform", "random"):
            for r in ratios:
                yield Policy(kind=name, ratio=r, seed=args.seed), "ratio", r
        elif name == "fixed_threshold":
            for th in thetas:
                yield Policy(kind=name, theta_minus=th, theta_plus=th), "theta", th
        else:
            raise ValueError(f"unknown policy {name!r}")


def cmd_bench(args) -> int:
    import numpy as np

    from .policies import apply_policy
    from .reports import write_bench_csv
    from .scoring import ScoreField, adjacent_scores
    from .synth import generate, load_scene_file
    from .tas import tas_select

    spec = load_scene_file(args.spec)
    grids = generate(spec)
    if len(grids) < 2:
        raise ValueError("bench needs at least 2 frames")

    # score every frame once: one fused pass per adjacent pair
    backward: list = [None] * len(grids)
    forward: list = [None] * len(grids)
    for t in range(len(grids) - 1):
        forward[t], backward[t + 1] = adjacent_scores(grids[t], grids[t + 1])
    fields = [
        ScoreField(frame_index=t, backward=backward[t], forward=forward[t])
        for t in range(len(grids))
    ]

    rows = []
    for policy, param_kind, param in _bench_cells(args):
        kept = 0
        total = 0
        drop_dists: list[float] = []
        for grid, sf in zip(grids, fields):
            if policy is None:
                entry, _, _ = tas_select(grid, sf, bins=args.bins)
            else:
                entry = apply_policy(policy, grid, sf, bins=args.bins)
            n = grid.height * grid.width
            total += n
            kept += entry.token_count
            drop_dists.extend(_dropped_to_kept(grid, entry))
        rows.append(
            {
                "policy": "fluxmem" if policy is None else policy.kind,
                "param_kind": param_kind,
                "param": param,
                "frames_scored": len(grids),
                "tokens_total": total,
                "tokens_kept": kept,
                "drop_ratio": 1.0 - kept / total if total else 0.0,
                "proxy_fidelity_dropped_to_kept": (
                    float(np.mean(drop_dists)) if drop_dists else 0.0
                ),
            }
        )

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_bench_csv(rows, outdir / "bench.csv")
    if not args.no_plot:
        from .plots import render_bench_figures

        render_bench_figures(rows, outdir)
    for row in rows:
        param = "" if row["param"] != row["param"] else f" {row['param_kind']}={row['param']:g}"
        print(
            f"{row['policy']:>15}{param}: kept {row['tokens_kept']}/{row['tokens_total']} "
            f"(drop {row['drop_ratio']:.3f})"
        )
    return 0


def _dropped_to_kept(grid, entry) -> list[float]:
    """Cosine distance from each dropped token to its nearest kept one."""
    import numpy as np

    n = grid.height * grid.width
    kept_mask = np.zeros(n, dtype=bool)
    for tok in entry.tokens:
        _, h, w = tok.origin
        kept_mask[h * grid.width + w] = True
    if kept_mask.all():
        return []
    feats = grid.data.reshape(n, -1).astype(np.float64)
    norms = np.linalg.norm(feats, axis=1)
    norms[norms < 1e-12] = 1.0
    unit = feats / norms[:, None]
    dropped = unit[~kept_mask]
    if not kept_mask.any():
        return [2.0] * int(dropped.shape[0])
    kept = unit[kept_mask]
    dist = 1.0 - dropped @ kept.T
    return np.clip(dist.min(axis=1), 0.0, 2.0).tolist()


def cmd_oracle(args) -> int:
    from .oracles import check_otsu, check_pairs, check_sdc, check_tas

    results = [
        check_otsu(trials=args.otsu_trials, seed=args.seed, bins=args.bins),
        check_tas(trials=args.tas_trials, seed=args.seed, bins=args.bins),
        check_sdc(trials=args.sdc_trials, seed=args.seed, bins=args.bins),
        check_pairs(trials=args.pair_trials, seed=args.seed),
    ]
    for res in results:
        print(res.line())
    return 0 if all(r.ok for r in results) else 1


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"gen": cmd_gen, "run": cmd_run, "bench": cmd_bench, "oracle": cmd_oracle}
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
