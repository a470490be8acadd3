"""Session reports: CSV export plus rendered figures.

For each telemetry log this writes, side by side in the output directory:
the flattened CSV of events, a JSON metrics summary, and PNG figures for
the dice-outcome histogram, the Bloom profile of copilot queries, per-turn
durations, and the scaffold-level trajectory.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .telemetry import (
    EventKind,
    derive_metrics_from_events,
    export_string,
    read_log,
)


def _save_bar(path: Path, labels, values, title: str, xlabel: str, ylabel: str) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(labels)), values, color="#3b6ea5")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=0)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_session_report(log_path: str | Path, out_dir: str | Path) -> list[Path]:
    """Render one session's report files; returns the paths written."""
    log_path = Path(log_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = log_path.stem

    events, truncated = read_log(log_path)
    metrics = derive_metrics_from_events(events)
    written: list[Path] = []

    csv_path = out_dir / f"{stem}.csv"
    csv_path.write_text(export_string(events, "csv"), encoding="utf-8")
    written.append(csv_path)

    metrics_path = out_dir / f"{stem}_metrics.json"
    payload = metrics.to_dict()
    if truncated is not None:
        payload["truncated_line"] = truncated
    metrics_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    written.append(metrics_path)

    dice_path = out_dir / f"{stem}_dice.png"
    faces = list(range(1, 21))
    counts = [metrics.dice_outcome_histogram.get(f, 0) for f in faces]
    _save_bar(dice_path, faces, counts, f"Dice outcomes — {stem}", "d20 face", "rolls")
    written.append(dice_path)

    if metrics.bloom_query_histogram:
        bloom_path = out_dir / f"{stem}_bloom.png"
        labels = list(metrics.bloom_query_histogram)
        _save_bar(
            bloom_path,
            labels,
            [metrics.bloom_query_histogram[k] for k in labels],
            f"Copilot queries by Bloom level — {stem}",
            "Bloom level",
            "queries",
        )
        written.append(bloom_path)

    if metrics.turn_durations:
        dur_path = out_dir / f"{stem}_durations.png"
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(range(2, len(metrics.turn_durations) + 2), metrics.turn_durations,
                marker="o", color="#a5533b")
        ax.set_title(f"Turn durations — {stem}")
        ax.set_xlabel("turn")
        ax.set_ylabel("ms since previous turn")
        fig.tight_layout()
        fig.savefig(dur_path, dpi=120)
        plt.close(fig)
        written.append(dur_path)

    levels = [
        (e.payload.get("to_level"), e.timestamp)
        for e in events
        if e.kind is EventKind.SCAFFOLD_CHANGE
    ]
    if levels:
        scaffold_path = out_dir / f"{stem}_scaffold.png"
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.step(range(1, len(levels) + 1), [lv for lv, _ in levels], where="post",
                color="#3b8a5a")
        ax.set_ylim(0.5, 8.5)
        ax.set_yticks(range(1, 9))
        ax.set_title(f"Support-level trajectory — {stem}")
        ax.set_xlabel("adjustment")
        ax.set_ylabel("ladder rung")
        fig.tight_layout()
        fig.savefig(scaffold_path, dpi=120)
        plt.close(fig)
        written.append(scaffold_path)

    return written
