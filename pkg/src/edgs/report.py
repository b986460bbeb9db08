"""Run-report serialization: JSON, per-view CSV, and overview figures.

Given a report target `run.json`, the writer also produces
`run_views.csv` (delimited per-view counts) and two rendered figures,
`run_counts.png` and `run_stages.png`, next to it.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .pipeline import PipelineReport


def _write_views_csv(report: PipelineReport, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ref_view_id", "matched", "eligible", "sampled"])
        for v in report.views:
            writer.writerow([v.ref_view_id, v.matched, v.eligible, v.sampled])


def _plot_counts(report: PipelineReport, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(max(6.0, 0.12 * len(report.views)), 4.0))
    x = np.arange(len(report.views))
    width = 0.28
    for offset, name in zip((-width, 0.0, width), ("matched", "eligible", "sampled")):
        ax.bar(x + offset, [getattr(v, name) for v in report.views],
               width=width, label=name)
    ax.set_xticks(x)
    ax.set_xticklabels([str(v.ref_view_id) for v in report.views],
                       rotation=90, fontsize=7)
    ax.set_xlabel("reference view id")
    ax.set_ylabel("correspondences")
    ax.set_title(f"per-view funnel ({report.total_splats} splats total)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _plot_stages(report: PipelineReport, path: Path) -> None:
    stages = list(report.stage_seconds.items())
    fig, ax = plt.subplots(figsize=(6.0, 0.6 + 0.45 * len(stages)))
    names = [s for s, _ in stages]
    ax.barh(np.arange(len(stages)), [t for _, t in stages])
    ax.set_yticks(np.arange(len(stages)))
    ax.set_yticklabels(names)
    ax.invert_yaxis()
    ax.set_xlabel("seconds (summed across views)")
    ax.set_title(f"stage timing, wall clock {report.wall_seconds:.2f}s")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_report(report: PipelineReport, path) -> list[Path]:
    """Write run.json plus the CSV and figure companions; returns paths."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    views_csv = path.with_name(path.stem + "_views.csv")
    counts_png = path.with_name(path.stem + "_counts.png")
    stages_png = path.with_name(path.stem + "_stages.png")
    _write_views_csv(report, views_csv)
    _plot_counts(report, counts_png)
    _plot_stages(report, stages_png)
    return [path, views_csv, counts_png, stages_png]
