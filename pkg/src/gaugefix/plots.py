"""Figure rendering for sweep outputs.

Figures are written to files next to the delimited data; nothing is ever
shown interactively, so the Agg backend is forced before pyplot loads.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _by_size(rows: Sequence[dict]) -> dict:
    grouped: dict[int, list[dict]] = {}
    for row in rows:
        grouped.setdefault(int(row["L"]), []).append(row)
    for sub in grouped.values():
        sub.sort(key=lambda r: float(r["eps"]))
    return grouped


def failure_rate_figure(rows: Sequence[dict], path: Path) -> Path:
    """Post-selected failure rate against error rate, one curve per size."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for L, sub in sorted(_by_size(rows).items()):
        eps = [float(r["eps"]) for r in sub]
        n_acc = [int(r["trials"]) * (1 - float(r["discard_rate"]))
                 for r in sub]
        rate = [int(r["accepted_failures"]) / n if n else 0.0
                for r, n in zip(sub, n_acc)]
        lo = [float(r["ci_lo"]) for r in sub]
        hi = [float(r["ci_hi"]) for r in sub]
        err = [[r - l for r, l in zip(rate, lo)],
               [h - r for r, h in zip(rate, hi)]]
        ax.errorbar(eps, rate, yerr=err, marker="o", capsize=3,
                    label=f"L = {L}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("physical error rate")
    ax.set_ylabel("accepted failure rate")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def discard_rate_figure(rows: Sequence[dict], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for L, sub in sorted(_by_size(rows).items()):
        eps = [float(r["eps"]) for r in sub]
        rate = [float(r["discard_rate"]) for r in sub]
        ax.plot(eps, rate, marker="s", label=f"L = {L}")
    ax.set_xscale("log")
    ax.set_xlabel("physical error rate")
    ax.set_ylabel("discard rate")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_sweep_figures(rows: Sequence[dict], out_dir: Path) -> list[Path]:
    """All standard sweep figures; returns the written paths."""
    out_dir = Path(out_dir)
    if not rows:
        return []
    return [
        failure_rate_figure(rows, out_dir / "failure_rate.png"),
        discard_rate_figure(rows, out_dir / "discard_rate.png"),
    ]
