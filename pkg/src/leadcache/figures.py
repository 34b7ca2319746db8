"""Report figures rendered next to the delimited outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIG_SIZE = (6.4, 4.0)


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_experiment_figures(out_dir, cells: list[dict], curves: dict) -> list[Path]:
    """Render hit/fetch/regret figures for one experiment run.

    Args:
        out_dir: experiment output directory; figures go to `figures/`.
        cells: per-cell summary records (errors skipped).
        curves: per-policy cumulative series of the first cell.

    Returns:
        Paths of the files written.
    """
    fig_dir = Path(out_dir) / "figures"
    fig_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    ok = [c for c in cells if c.get("error") is None]
    labels = sorted({c["policy"] for c in ok})

    if labels:
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
        hit_means = [np.mean([c["hit_rate"] for c in ok if c["policy"] == p]) for p in labels]
        fetch_means = [np.mean([c["fetch_rate"] for c in ok if c["policy"] == p]) for p in labels]
        pos = np.arange(len(labels))
        ax1.bar(pos, hit_means, color="tab:blue")
        ax1.set_xticks(pos, labels, rotation=30, ha="right")
        ax1.set_ylabel("hit rate")
        ax2.bar(pos, fetch_means, color="tab:orange")
        ax2.set_xticks(pos, labels, rotation=30, ha="right")
        ax2.set_ylabel("fetch rate")
        written.append(_save(fig, fig_dir / "rates.png"))

    if curves:
        fig, ax = plt.subplots(figsize=FIG_SIZE)
        for label in sorted(curves):
            ax.plot(np.arange(1, len(curves[label]["cum_hits"]) + 1),
                    curves[label]["cum_hits"], label=label)
        bench = next(
            (c["benchmark"] for c in curves.values() if c.get("benchmark") is not None),
            None,
        )
        if bench is not None:
            ax.plot(np.arange(1, len(bench) + 1), bench, "k--", label="best static")
        ax.set_xlabel("slot")
        ax.set_ylabel("cumulative hits")
        ax.legend()
        written.append(_save(fig, fig_dir / "cumulative_hits.png"))

        fig, ax = plt.subplots(figsize=FIG_SIZE)
        for label in sorted(curves):
            ax.plot(np.arange(1, len(curves[label]["cum_fetches"]) + 1),
                    curves[label]["cum_fetches"], label=label)
        ax.set_xlabel("slot")
        ax.set_ylabel("cumulative fetches")
        ax.legend()
        written.append(_save(fig, fig_dir / "cumulative_fetches.png"))

        regrets = {
            label: c["benchmark"] - c["cum_hits"]
            for label, c in curves.items()
            if c.get("benchmark") is not None
        }
        if regrets:
            fig, ax = plt.subplots(figsize=FIG_SIZE)
            for label in sorted(regrets):
                ax.plot(np.arange(1, len(regrets[label]) + 1), regrets[label], label=label)
            ax.set_xlabel("slot")
            ax.set_ylabel("regret vs best static")
            ax.legend()
            written.append(_save(fig, fig_dir / "regret.png"))

    return written
