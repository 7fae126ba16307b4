import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from utils import FormatError  # noqa: E402

log = logging.getLogger(__name__)

FIELDS = ("kappa", "u_ss", "h")
SVG_SALT = "csf-harnack"

# Fixed ids and no timestamp so identical inputs give identical SVG files
plt.rcParams["svg.hashsalt"] = SVG_SALT
plt.rcParams["svg.fonttype"] = "none"


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    log.info("Wrote %s", path)
    return path


def _check(trace):
    if not trace.snapshots:
        raise FormatError(f"Trace '{trace.name}' has no snapshots")


def plot_overlay(trace, path):
    """All snapshot curves on one equal-aspect axis, coloured by time."""
    _check(trace)
    fig, ax = plt.subplots(figsize=(6, 6))
    cmap = plt.get_cmap("viridis")
    t_max = max(trace.times().max(), 1e-300)
    for snap in trace.snapshots:
        closed = np.vstack([snap.curve.points, snap.curve.points[:1]])
        ax.plot(closed[:, 0], closed[:, 1], color=cmap(snap.t / t_max), linewidth=0.8)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"{trace.name}: {len(trace.snapshots)} snapshots, t <= {trace.times().max():.4g}")
    ax.grid(True, linewidth=0.3)
    return _save(fig, path)


def plot_min_h(diagnostics, path, title=""):
    """min over s of h_eps against t (spatial and, if present, time-difference form)."""
    table = diagnostics.per_snapshot
    if table.empty:
        raise FormatError("No evaluated snapshots to plot")
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(table["t"], table["min_h"], marker="o", markersize=2, label="spatial")
    if table["min_h_timediff"].notna().any():
        ax.plot(table["t"], table["min_h_timediff"], linestyle="--", label="time differences")
    ax.axhline(0.0, color="black", linewidth=0.5)
    ax.set_yscale("symlog")
    ax.set_xlabel("t")
    ax.set_ylabel("min_s h")
    ax.set_title(title or f"min h, eps = {diagnostics.epsilon:g}")
    ax.legend()
    ax.grid(True, linewidth=0.3)
    return _save(fig, path)


def plot_field(trace, path, field="kappa", diagnostics=None):
    """One line per snapshot of a pointwise field against arc length."""
    _check(trace)
    if field not in FIELDS:
        raise FormatError(f"Unknown field '{field}'; expected one of {FIELDS}")
    if field != "kappa" and diagnostics is None:
        raise FormatError(f"Field '{field}' needs Harnack diagnostics")

    fig, ax = plt.subplots(figsize=(7, 4))
    cmap = plt.get_cmap("plasma")
    t_max = max(trace.times().max(), 1e-300)
    for snap in trace.snapshots:
        if field == "kappa":
            values = snap.kappa
        else:
            rows = diagnostics.table[diagnostics.table["t"] == snap.t]
            if rows.empty:
                continue
            values = rows["u_ss" if field == "u_ss" else "h_eps_spatial"].to_numpy()
        ax.plot(snap.arclen, values, color=cmap(snap.t / t_max), linewidth=0.8)
    ax.set_xlabel("s")
    ax.set_ylabel(field)
    ax.set_title(f"{trace.name}: {field}(s) per snapshot")
    ax.grid(True, linewidth=0.3)
    return _save(fig, path)
