"""Figure rendering for report outputs."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def render_concurrence_figure(
    dims: Sequence[int], values: Sequence[float], path: str | Path
) -> Path:
    """Plot the average squared concurrence against the local dimension."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot(dims, values, marker="o", color="tab:blue", lw=1.2)
    ax.set_xlabel("local dimension d")
    ax.set_ylabel(r"average $C^2$")
    ax.set_ylim(0.0, 1.0)
    ax.set_xticks(list(dims))
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
