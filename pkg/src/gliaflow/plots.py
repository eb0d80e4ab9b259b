"""Static figures from trace CSVs.

Three figure layouts, numbered after the observables they show:

  2   balance metric over time (model A traces)
  3   two panels: per-branch mean firing on top, balance metric below
  5   per-grid-row mean firing raster with the population firing fraction
      underneath (model B traces); accepts one trace or a pure/coupled pair

Functions raise KeyError naming the first required column the trace lacks;
the CLI converts that into a validation failure (exit 2).
"""

import re

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def load_trace(path) -> dict:
    """Trace CSV as {column: ndarray}."""
    with open(path) as fh:
        header = fh.readline().strip()
    names = header.split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        return {name: np.zeros(0) for name in names}
    return {name: data[:, j] for j, name in enumerate(names)}


def _require(cols: dict, *names: str) -> None:
    for name in names:
        if name not in cols:
            raise KeyError(name)


def _row_matrix(cols: dict) -> np.ndarray:
    """Stack row_mean_* columns in numeric order -> (n_rows, n_ticks)."""
    pairs = []
    for name in cols:
        m = re.fullmatch(r"row_mean_(\d+)", name)
        if m:
            pairs.append((int(m.group(1)), name))
    if not pairs:
        raise KeyError("row_mean_1")
    pairs.sort()
    return np.stack([cols[name] for _, name in pairs])


def figure_2(traces: list, out_path) -> None:
    cols = traces[0]
    _require(cols, "t", "cmp")
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.plot(cols["t"], cols["cmp"], lw=0.8, color="tab:red")
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("flow imbalance (um^3/ms)")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def figure_3(traces: list, out_path) -> None:
    cols = traces[0]
    _require(cols, "t", "firing_branch_mean", "cmp")
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax1.plot(cols["t"], cols["firing_branch_mean"], lw=0.8, color="tab:blue")
    ax1.set_ylabel("mean firing per branch")
    ax2.plot(cols["t"], cols["cmp"], lw=0.8, color="tab:red")
    ax2.set_ylabel("flow imbalance")
    ax2.set_xlabel("time (ms)")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def figure_5(traces: list, out_path) -> None:
    for cols in traces:
        _require(cols, "t", "firing_frac")
    rasters = [_row_matrix(cols) for cols in traces]
    n = len(traces)
    heights = [2.0] * n + [1.0]
    fig, axes = plt.subplots(n + 1, 1, figsize=(7, 2.2 * n + 2.2), sharex=True,
                             gridspec_kw={"height_ratios": heights})
    axes = np.atleast_1d(axes)
    im = None
    for i, (cols, rows) in enumerate(zip(traces, rasters)):
        ax = axes[i]
        im = ax.imshow(rows, aspect="auto", origin="lower", cmap="viridis",
                       extent=[cols["t"][0], cols["t"][-1], 0.5, rows.shape[0] + 0.5],
                       vmin=0.0, vmax=1.0)
        ax.set_ylabel("grid row" if n == 1 else f"grid row ({i + 1})")
    fig.colorbar(im, ax=list(axes[:-1]), label="row mean firing", pad=0.01)
    ax = axes[-1]
    for i, cols in enumerate(traces):
        ax.plot(cols["t"], cols["firing_frac"], lw=0.8,
                label=f"trace {i + 1}" if n > 1 else None)
    if n > 1:
        ax.legend(loc="upper right", fontsize=8)
    ax.set_ylabel("firing fraction")
    ax.set_xlabel("time (ms)")
    ax.set_ylim(-0.02, 1.02)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)


FIGURES = {"2": figure_2, "3": figure_3, "5": figure_5}
