"""Render report figures next to the delimited output.

matplotlib is imported lazily with the Agg backend so headless runs and
plain library use never pay for it.
"""

from __future__ import annotations

from pathlib import Path

from .reports import RunReport


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_run_figures(report: RunReport, outdir) -> list[Path]:
    plt = _plt()
    outdir = Path(outdir)
    written = []
    frames = [r.frame for r in report.records]
    if not frames:
        return written

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax1.plot(frames, [r.short_frames for r in report.records], label="short (frames)")
    ax1.plot(frames, [r.mid_tokens for r in report.records], label="mid (tokens)")
    ax1.plot(frames, [r.long_tokens for r in report.records], label="long (tokens)")
    ax1.set_ylabel("occupancy")
    ax1.legend(loc="upper left", fontsize=8)
    ax2.plot(frames, [r.drop_ratio for r in report.records], color="tab:red")
    fired = [r.frame for r in report.records if r.trigger_fired]
    for x in fired:
        ax2.axvline(x, color="tab:orange", alpha=0.4, lw=0.8)
    queried = [r.frame for r in report.records if r.query]
    for x in queried:
        ax2.axvline(x, color="tab:green", alpha=0.4, lw=0.8, ls="--")
    ax2.set_ylabel("drop ratio")
    ax2.set_xlabel("frame (orange: trigger, green dashed: query)")
    fig.tight_layout()
    path = outdir / "run_overview.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)

    if any(r.ingest_us > 0 for r in report.records):
        fig, ax = plt.subplots(figsize=(8, 3.2))
        for key, label in [
            ("scoring_us", "scoring"),
            ("otsu_us", "trigger threshold"),
            ("tas_us", "selection"),
            ("sdc_us", "consolidation"),
        ]:
            ax.plot(frames, [getattr(r, key) for r in report.records], label=label, lw=0.9)
        ax.set_xlabel("frame")
        ax.set_ylabel("stage time (us)")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = outdir / "run_timing.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(path)
    return written


def render_bench_figures(rows: list[dict], outdir) -> list[Path]:
    plt = _plt()
    outdir = Path(outdir)
    written = []
    if not rows:
        return written
    policies = sorted({r["policy"] for r in rows})

    fig, ax = plt.subplots(figsize=(7, 4.2))
    for pol in policies:
        pts = [r for r in rows if r["policy"] == pol]
        xs = [r["drop_ratio"] for r in pts]
        ys = [r["tokens_kept"] for r in pts]
        order = sorted(range(len(xs)), key=lambda i: xs[i])
        ax.plot([xs[i] for i in order], [ys[i] for i in order], marker="o", ms=3, label=pol)
    ax.set_xlabel("achieved drop ratio")
    ax.set_ylabel("tokens kept")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = outdir / "bench_kept.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4.2))
    for pol in policies:
        pts = [r for r in rows if r["policy"] == pol]
        xs = [r["drop_ratio"] for r in pts]
        ys = [r["proxy_fidelity_dropped_to_kept"] for r in pts]
        order = sorted(range(len(xs)), key=lambda i: xs[i])
        ax.plot([xs[i] for i in order], [ys[i] for i in order], marker="o", ms=3, label=pol)
    ax.set_xlabel("achieved drop ratio")
    ax.set_ylabel("proxy fidelity (dropped to nearest kept)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = outdir / "bench_fidelity.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)
    return written
