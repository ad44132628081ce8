"""Figure rendering for traces and batch aggregates.

The report path writes PNG figures next to the delimited output: counter
evolution with detection markers for a single trace, per-round message
sizes, and a detection-round histogram for a batch.  Rendering is
headless (Agg backend).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .engine import RunSummary, Trace, trace_csv
from .protocols import message_bytes
from .verifier import detection_rounds


def counter_figure(trace: Trace, path: Path) -> Path:
    """Per-node round counters over time, with wake-ups and detections marked."""
    fig, ax = plt.subplots(figsize=(8, 5))
    ts = range(1, trace.horizon + 1)
    detections = detection_rounds(trace)
    for i, u in enumerate(trace.node_ids):
        rs = [rec.after[i].r if rec.after[i] is not None else None for rec in trace.rounds]
        ax.plot(ts, rs, drawstyle="steps-post", label=f"node {u}")
        d = detections.get(u)
        if d is not None:
            ax.plot([d], [trace.after_state(d, u).r], "k*", markersize=10)
    ax.axvline(trace.s_max, color="gray", linestyle=":", label="last wake-up")
    ax.set_xlabel("round")
    ax.set_ylabel("counter (end of round)")
    ax.set_title("round counters")
    if len(trace.node_ids) <= 12:
        ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def message_size_figure(trace: Trace, path: Path) -> Path:
    """Max and mean transmitted message size per round."""
    fig, ax = plt.subplots(figsize=(8, 4))
    ts = list(range(1, trace.horizon + 1))
    maxima, means = [], []
    for rec in trace.rounds:
        sizes = [message_bytes(m) for m in rec.messages]
        maxima.append(max(sizes))
        means.append(sum(sizes) / len(sizes))
    ax.plot(ts, maxima, label="max bytes")
    ax.plot(ts, means, label="mean bytes", linestyle="--")
    ax.set_xlabel("round")
    ax.set_ylabel("message bytes")
    ax.set_title("message sizes")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def detection_histogram(summaries: list[RunSummary], path: Path) -> Path:
    """Distribution of common detection rounds relative to the last wake-up."""
    offsets = [
        s.common_detection - s.s_max
        for s in summaries
        if s.common_detection is not None
    ]
    fig, ax = plt.subplots(figsize=(8, 4))
    if offsets:
        lo, hi = min(offsets), max(offsets)
        ax.hist(offsets, bins=range(lo, hi + 2), align="left", rwidth=0.9)
    ax.set_xlabel("detection round - last wake-up round")
    ax.set_ylabel("runs")
    ax.set_title(f"detection rounds across {len(summaries)} runs")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_trace_report(trace: Trace, out_dir: Path, stem: str = "report") -> list[Path]:
    """Figures plus the per-round CSV, written side by side."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}.csv"
    csv_path.write_text(trace_csv(trace))
    return [
        csv_path,
        counter_figure(trace, out_dir / f"{stem}_counters.png"),
        message_size_figure(trace, out_dir / f"{stem}_message_sizes.png"),
    ]
