"""Report writers: delimited tables plus rendered figures.

Each report emits a TSV that mirrors the metric fields exactly (for
machines) and a PNG figure next to it (for humans). Figures use the Agg
backend so reports work in headless runs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .metrics import ObjMCReport


def write_objmc_report(report: ObjMCReport, out_dir) -> dict:
    """Write objmc.tsv and objmc.png under out_dir; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tsv = out / "objmc.tsv"
    fig_path = out / "objmc.png"

    with open(tsv, "w", encoding="utf-8") as fh:
        fh.write("record\tindex\tradians\n")
        fh.write(f"mean\t\t{report.mean_distance!r}\n")
        fh.write(f"pooled_mean\t\t{report.pooled_mean!r}\n")
        for j, v in enumerate(report.per_trajectory):
            fh.write(f"trajectory\t{j}\t{float(v)!r}\n")
        for i, v in enumerate(report.per_frame):
            fh.write(f"frame\t{i}\t{float(v)!r}\n")

    fig, (ax_t, ax_f) = plt.subplots(1, 2, figsize=(10, 4))
    ax_t.bar(np.arange(len(report.per_trajectory)), report.per_trajectory, color="#4878cf")
    ax_t.axhline(report.mean_distance, color="#d65f5f", lw=1.0, label="mean")
    ax_t.set_xlabel("trajectory")
    ax_t.set_ylabel("mean arc (rad)")
    ax_t.set_title("per-trajectory ObjMC")
    ax_t.legend(frameon=False)
    ax_f.plot(np.arange(len(report.per_frame)), report.per_frame, color="#4878cf")
    ax_f.set_xlabel("frame")
    ax_f.set_ylabel("mean arc (rad)")
    ax_f.set_title("per-frame ObjMC")
    fig.tight_layout()
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    return {"tsv": tsv, "figure": fig_path}


def write_clip_score_report(names, scores, kept_indices, q: float, out_dir) -> dict:
    """Write scores.tsv, kept.txt, and scores.png under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tsv = out / "scores.tsv"
    kept_path = out / "kept.txt"
    fig_path = out / "scores.png"
    kept = set(kept_indices)

    with open(tsv, "w", encoding="utf-8") as fh:
        fh.write("clip\tscore_radians\tkept\n")
        for i, (name, s) in enumerate(zip(names, scores)):
            fh.write(f"{name}\t{float(s)!r}\t{int(i in kept)}\n")
    with open(kept_path, "w", encoding="utf-8") as fh:
        for i in kept_indices:
            fh.write(f"{names[i]}\n")

    order = np.argsort(scores, kind="stable")
    colors = ["#4878cf" if i in kept else "#bbbbbb" for i in order]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(np.arange(len(scores)), np.asarray(scores, dtype=float)[order], color=colors)
    cut = len(scores) - len(kept)
    if 0 < cut < len(scores):
        ax.axvline(cut - 0.5, color="#d65f5f", lw=1.0)
    ax.set_xlabel(f"clips sorted by motion score (q={q:g} dropped, gray)")
    ax.set_ylabel("motion score (rad)")
    ax.set_title("clip motion filter")
    fig.tight_layout()
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    return {"tsv": tsv, "kept": kept_path, "figure": fig_path}


def save_trajectory_figure(tset, out_path, title="trajectories") -> Path:
    """Plot trajectories over the ERP pixel plane, splitting at the seam."""
    g = tset.geometry
    fig, ax = plt.subplots(figsize=(8, 4))
    for t in tset:
        xs, ys = t.xy[:, 0], t.xy[:, 1]
        # Break the polyline wherever consecutive x differ by more than W/2
        # (a seam crossing), so no stroke spans the full frame width.
        cut = np.where(np.abs(np.diff(xs)) > g.W / 2.0)[0] + 1
        for seg_x, seg_y in zip(np.split(xs, cut), np.split(ys, cut)):
            ax.plot(seg_x, seg_y, lw=1.0)
        ax.plot(xs[0], ys[0], "o", ms=3, color="black")
    ax.set_xlim(0, g.W)
    ax.set_ylim(g.H, 0)
    ax.set_xlabel("x (px)")
    ax.set_ylabel("y (px)")
    ax.set_title(title)
    ax.set_aspect("equal")
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
