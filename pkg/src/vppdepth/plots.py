"""Figure rendering for sweep reports (Agg backend, files only)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .sweep import SweepReport  # noqa: E402


def plot_baseline_sweep(report: SweepReport, path: str | Path) -> None:
    """Relative accuracy against virtual baseline length."""
    baselines = report.column("baseline_b")
    rel = report.column("relative_accuracy")
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(baselines, rel, marker="o")
    best = baselines[rel.index(max(rel))]
    ax.axvline(best, color="gray", linestyle=":", linewidth=1)
    ax.set_xlabel("virtual baseline (m)")
    ax.set_ylabel("relative accuracy (min MAE / MAE)")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_patch_sweep(report: SweepReport, path: str | Path) -> None:
    """MAE per (patch size, adaptive, padding) cell as grouped bars."""
    sizes = report.column("patch_size")
    adaptive = report.column("adaptive")
    padding = report.column("padding")
    mae = report.column("mae")
    labels = [
        f"{s}x{s}{' A' if a else ''}{' P' if p else ''}"
        for s, a, p in zip(sizes, adaptive, padding)
    ]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.45 * len(labels)), 3.5))
    colors = ["tab:orange" if a else "tab:blue" for a in adaptive]
    ax.bar(range(len(labels)), mae, color=colors)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=8)
    ax.set_ylabel("MAE (m)")
    ax.set_title("patch study (A = adaptive, P = left padding)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
