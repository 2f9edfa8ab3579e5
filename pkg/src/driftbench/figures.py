"""Figure rendering: total I/O versus log2(h), one line per clusterer."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .errors import ParameterError  # noqa: E402

_STYLES = {
    "nc": dict(color="black", marker="s", linestyle="--"),
    "dstc": dict(color="tab:red", marker="o"),
    "dro": dict(color="tab:blue", marker="^"),
    "gp": dict(color="tab:green", marker="v"),
    "prp": dict(color="tab:orange", marker="D"),
}


def render_sweep_figure(rows: list[dict], path: str, title: str = "") -> str:
    """Plot total_io against log2(h) per clusterer and save to ``path``."""
    if not rows:
        raise ParameterError("no rows to plot")
    series: dict[str, list[tuple[float, int]]] = {}
    for row in rows:
        series.setdefault(row["clusterer"], []).append(
            (math.log2(row["H"]), row["total_io"]))
    fig, ax = plt.subplots(figsize=(7, 5))
    for name in sorted(series):
        pts = sorted(series[name])
        xs = [x for x, _ in pts]
        ys = [y for _, y in pts]
        ax.plot(xs, ys, label=name, markersize=4,
                **_STYLES.get(name, dict(marker=".")))
    ax.set_xlabel("rate of change H (log2 scale)")
    ax.set_ylabel("total I/O")
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
