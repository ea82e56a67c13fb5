"""PNG figures rendered from the emitted series files.

Figures are drawn with the object-oriented matplotlib API on an Agg canvas,
so no display or global backend state is touched. Each renderer reads the
CSV files it plots back through :func:`rydberg_bohm.io.read_series`; a
figure therefore shows exactly what was written.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .io import read_series

_SAVE = {"dpi": 120, "metadata": {"Software": None}}


def _load(path):
    meta, cols, data = read_series(path)
    return meta, {c: data[:, i] for i, c in enumerate(cols)}


def _save(fig: Figure, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    return path


def _by_prefix(files, prefix):
    return [p for p in files if p.name.startswith(prefix)]


def plot_autocorr(path_csv, out_png) -> Path:
    _, d = _load(path_csv)
    fig = Figure(figsize=(7, 3.2))
    ax = fig.add_subplot()
    ax.plot(d["t_over_Tcl"], d["absC2"], lw=0.7)
    ax.set_xlabel("t / T_cl")
    ax.set_ylabel("|C(t)|²")
    ax.set_xlim(d["t_over_Tcl"][0], d["t_over_Tcl"][-1])
    ax.set_ylim(0, 1.02)
    return _save(fig, out_png)


def plot_snapshots(paths, out_png, r_limit: float | None = None) -> Path:
    fig = Figure(figsize=(7, 3.6))
    ax = fig.add_subplot()
    for p in paths:
        meta, d = _load(p)
        line = ax.plot(d["r"], d["rho2"], lw=0.8, label=f"t = {meta['t_over_Tcl']:.3g} T_cl")[0]
        rc = meta.get("classical_r")
        if rc is not None:
            ax.axvline(rc, color=line.get_color(), ls=":", lw=0.8)
    ax.set_xlabel("r (au)")
    ax.set_ylabel("|ψ|²")
    if r_limit:
        ax.set_xlim(0, r_limit)
    ax.legend(fontsize=8)
    return _save(fig, out_png)


def plot_trajectories(paths, out_png, r_tp: float | None = None, extra=None) -> Path:
    """Radius against ``t / T_cl`` for each trajectory file, main panel plus a near-core inset."""
    fig = Figure(figsize=(7, 4))
    ax = fig.add_subplot()
    series = []
    for p in paths:
        meta, d = _load(p)
        label = f"{meta['kind']} r0={meta['r0']:g}"
        ax.plot(d["t_over_Tcl"], d["r_au"], lw=0.9, label=label)
        series.append(d)
    if extra is not None:
        label, t, r = extra
        ax.plot(t, r, "k--", lw=0.9, label=label)
    top = max([np.nanmax(d["r_au"]) for d in series] + ([np.nanmax(extra[2])] if extra else []))
    if r_tp and top > 0.3 * r_tp:
        ax.axhline(r_tp, color="grey", lw=0.6, ls="--")
    elif r_tp:
        ax.set_title(f"outer turning point {r_tp:.0f} au (off scale)", fontsize=9)
    ax.set_xlabel("t / T_cl")
    ax.set_ylabel("r (au)")
    ax.legend(fontsize=8, loc="upper right")
    small = [d for d in series if np.nanmax(d["r_au"]) < 0.1 * (r_tp or np.inf)]
    if small and len(small) < len(series):
        inset = ax.inset_axes([0.08, 0.55, 0.35, 0.35])
        for d in small:
            inset.plot(d["t_over_Tcl"], d["r_au"], lw=0.7)
        inset.tick_params(labelsize=7)
    return _save(fig, out_png)


def plot_equivariance(positions_csv, snapshot_rho, out_png) -> Path:
    """Histograms of ensemble positions at the check times over ``ρ²``.

    ``snapshot_rho`` maps a column name of ``positions_csv`` to ``(r, rho2)``.
    """
    _, d = _load(positions_csv)
    cols = list(snapshot_rho)
    fig = Figure(figsize=(7, 3.2 * max(len(cols), 1)))
    for i, c in enumerate(cols):
        ax = fig.add_subplot(len(cols), 1, i + 1)
        x = d[c][np.isfinite(d[c])]
        r, rho2 = snapshot_rho[c]
        ax.hist(x, bins=80, density=True, alpha=0.5, label="trajectories")
        norm = np.sum(0.5 * (rho2[1:] + rho2[:-1]) * np.diff(r))
        ax.plot(r, rho2 / norm, lw=0.8, label="|ψ|²")
        ax.set_xlim(0, r[-1])
        ax.set_title(c, fontsize=9)
        ax.legend(fontsize=8)
    ax.set_xlabel("r (au)")
    return _save(fig, out_png)


def render(task: str, out_dir, files, summary, curves=None) -> list:
    """Draw the standard figure(s) for ``task`` next to its data files.

    ``curves`` supplies reference densities for the ensemble figure.
    """
    out = Path(out_dir)
    r_tp = summary.get("r_tp_au")
    made = []
    if task == "autocorr":
        made.append(plot_autocorr(out / "autocorr.csv", out / "autocorr.png"))
    elif task == "snapshot":
        snaps = _by_prefix(files, "snapshot_")
        if snaps:
            made.append(plot_snapshots(snaps, out / "snapshots.png"))
    elif task == "eigen":
        for p in _by_prefix(files, "eigen_"):
            meta, d = _load(p)
            fig = Figure(figsize=(7, 3))
            ax = fig.add_subplot()
            ax.plot(d["r"], d["u"], lw=0.6)
            ax.set_xlabel("r (au)")
            ax.set_ylabel(f"u_{meta['n']},{meta['l']}(r)")
            made.append(_save(fig, p.with_suffix(".png")))
    elif task in ("bohm", "classical", "comparison"):
        trajs = _by_prefix(files, "traj_")
        extra = None
        if (out / "expectation_r.csv").exists() and task == "comparison":
            _, d = _load(out / "expectation_r.csv")
            extra = ("<r>(t)", d["t_over_Tcl"], d["mean_r_au"])
        if trajs:
            made.append(plot_trajectories(trajs, out / "trajectories.png", r_tp, extra))
    elif task == "ensemble":
        pos = out / "positions.csv"
        if pos.exists() and curves:
            made.append(plot_equivariance(pos, curves, out / "equivariance.png"))
    return made
