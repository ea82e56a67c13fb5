"""Scenario orchestration: presets, task runners, file emission and manifests.

Each task builds what it needs from a validated :class:`ScenarioConfig`,
writes its series files into ``scenario.out_dir`` and finishes with
``manifest.json``: the resolved configuration, a SHA-256 per data file, a
numeric summary and any diagnostics. Nothing is written before validation
succeeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .basis import EigenstateError, build_basis, compute_eigenstate
from .config import ConfigError, ScenarioConfig
from .grid import GridError, build_grid
from .io import sha256, write_columns, write_manifest
from .kepler import integrate_classical, turning_points
from .packet import PulseModel, Wavefield, autocorrelation, classical_period
from .pilot import IntegratorConfig, equivariance_distance, run_ensemble, sample_positions

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

PRESETS = {
    "fig1a": {
        "scenario.task": "autocorr",
        "scenario.delta_n": 0.75,
        "time.t_stop": 15.0,
        "time.samples": 15001,
    },
    "fig1b": {
        "scenario.task": "autocorr",
        "scenario.delta_n": 1.5,
        "time.t_stop": 15.0,
        "time.samples": 15001,
    },
    "fig2": {
        "scenario.task": "snapshot",
        "scenario.delta_n": 1.5,
        "snapshot.times": [0.0, 0.125, 0.25, 0.375, 0.5],
        "classical.r0": 2.0,
    },
    "fig3a": {
        "scenario.task": "bohm",
        "scenario.delta_n": 0.75,
        "bohm.r0": [1.0, 2.0, 6.0, 10.0],
        "time.t_stop": 3.0,
        "time.samples": 1501,
    },
    "fig3b": {
        "scenario.task": "bohm",
        "scenario.delta_n": 1.5,
        "bohm.r0": [1.0, 2.0, 6.0, 10.0],
        "time.t_stop": 3.0,
        "time.samples": 1501,
    },
    "fig4": {
        "scenario.task": "comparison",
        "scenario.delta_n": 1.5,
        "bohm.r0": [2.0, 1000.0],
        "classical.r0": 2.0,
        "time.t_stop": 0.7,
        "time.samples": 701,
    },
    "equivariance": {
        "scenario.task": "ensemble",
        "scenario.delta_n": 1.5,
        "ensemble.count": 2000,
        "ensemble.check_times": [0.25, 0.5],
        "time.t_stop": 0.5,
        "time.samples": 51,
    },
}


class NumericalFailure(RuntimeError):
    """A computation failed after the configuration was accepted."""

    def __init__(self, module: str, message: str):
        super().__init__(f"{module}: {message}")
        self.module = module


def preset_config(name: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = base.copy() if base is not None else ScenarioConfig()
    cfg.set("scenario.name", name)
    return cfg.update(PRESETS[name])


@dataclass
class RunResult:
    status: int
    out_dir: Path
    files: list = field(default_factory=list)
    figures: list = field(default_factory=list)
    manifest: Path | None = None
    summary: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)


class _Run:
    """Shared state of one scenario run."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.out = Path(cfg.scenario.out_dir)
        self.resolved = cfg.resolved()
        self.t_cl = classical_period(cfg.scenario.n0)
        self.energy0 = -0.5 / cfg.scenario.n0**2
        l = cfg.scenario.l
        self.r_tp = turning_points(self.energy0, float(l * (l + 1)))[1]
        self.files: list[Path] = []
        self.summary: dict = {}
        self.diagnostics: list[str] = []
        self.extra: dict = {}
        self.curves: dict = {}
        self.status = EXIT_OK
        self._wavefield = None
        self._grid = None

    # --- shared objects ---------------------------------------------------

    @property
    def grid(self):
        if self._grid is None:
            g = self.cfg.grid
            try:
                self._grid = build_grid(self.cfg.resolved_r_max(), g.point_count, g.mapping)
            except GridError as exc:
                raise NumericalFailure("grid", str(exc)) from exc
        return self._grid

    @property
    def wavefield(self) -> Wavefield:
        if self._wavefield is None:
            cfg = self.cfg
            coeffs = cfg.coefficients()
            pulse = PulseModel(cfg.resolved_tau_p(), cfg.pulse.mode)
            try:
                basis = build_basis(
                    coeffs.ns, cfg.scenario.l, self.grid, include_ground=pulse.mode == "turn-on"
                )
            except EigenstateError as exc:
                raise NumericalFailure("basis", str(exc)) from exc
            self._wavefield = Wavefield(coeffs, basis, pulse)
        return self._wavefield

    def times(self, extra=()) -> np.ndarray:
        t = self.cfg.time
        ts = np.linspace(t.t_start, t.t_stop, t.samples) * self.t_cl
        if len(extra):
            ts = np.unique(np.concatenate([ts, np.asarray(extra, dtype=float) * self.t_cl]))
        return ts

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(**self.resolved["integrator"])

    # --- emission ---------------------------------------------------------

    def meta(self, **extra) -> dict:
        # output location and plotting do not affect data; keep files relocatable
        physics = {k: dict(v) for k, v in self.resolved.items()}
        for key in ("out_dir", "plots"):
            physics["scenario"].pop(key, None)
        base = {
            "scenario": self.cfg.scenario.name,
            "task": self.cfg.scenario.task,
            "T_cl_au": self.t_cl,
            "config": physics,
        }
        base.update(extra)
        return base

    def write(self, relname: str, columns: dict, **extra) -> Path:
        path = write_columns(self.out / relname, columns, self.meta(**extra))
        self.files.append(path)
        return path

    def write_trajectory(self, relname: str, traj, **extra) -> Path:
        return self.write(
            relname,
            {
                "t_au": traj.t,
                "t_over_Tcl": traj.t / self.t_cl,
                "r_au": traj.r,
                "v_au": traj.v,
            },
            kind=traj.kind,
            r0=traj.initial_r,
            t0=traj.initial_t,
            status=traj.status,
            message=traj.message,
            stats=traj.stats,
            **extra,
        )

    def fail(self, module: str, message: str) -> None:
        self.status = EXIT_NUMERICAL
        self.diagnostics.append(f"{module}: {message}")


# --- tasks ------------------------------------------------------------------


def _tag(x: float) -> str:
    return f"{x:g}".replace(".", "p").replace("-", "m")


def _task_eigen(run: _Run) -> None:
    l = run.cfg.scenario.l
    g = run.grid
    states = {}
    for n in run.cfg.eigen.n:
        try:
            st = compute_eigenstate(int(n), l, g)
        except EigenstateError as exc:
            raise NumericalFailure("basis", str(exc)) from exc
        run.write(
            f"eigen_n{n}_l{l}.csv",
            {"r": g.nodes, "u": st.samples},
            n=int(n),
            l=l,
            E_n=st.energy,
            grid={"r_max": g.r_max, "point_count": g.point_count, "mapping": g.mapping},
        )
        mean_r = st.expectation(lambda r: r)
        states[str(n)] = {
            "energy": st.energy,
            "norm": float(g.integrate(st.samples**2)),
            "mean_r": float(mean_r),
            "mean_r_closed_form": 0.5 * (3 * n * n - l * (l + 1)),
            "nodes": st.nodes_count,
        }
    run.summary["states"] = states


def _task_autocorr(run: _Run) -> None:
    ts = run.times()
    c = autocorrelation(run.cfg.coefficients(), ts)
    p = np.abs(c) ** 2
    run.write(
        "autocorr.csv",
        {"t_au": ts, "t_over_Tcl": ts / run.t_cl, "ReC": c.real, "ImC": c.imag, "absC2": p},
    )
    late = ts > 0.1 * run.t_cl
    if late.any():
        k = int(np.argmax(np.where(late, p, -np.inf)))
        run.summary["global_max_after_0.1Tcl"] = {"t_over_Tcl": ts[k] / run.t_cl, "absC2": p[k]}
    peaks = [
        k for k in range(1, p.size - 1) if p[k] >= p[k - 1] and p[k] > p[k + 1] and p[k] > 0.05
    ]
    run.summary["peaks"] = [{"t_over_Tcl": ts[k] / run.t_cl, "absC2": p[k]} for k in peaks[:40]]


def _classical(run: _Run, ts):
    c = run.cfg.classical
    return integrate_classical(c.r0, run.energy0, c.l_squared, c.direction, times=ts)


def _task_snapshot(run: _Run) -> None:
    wf = run.wavefield
    times = np.asarray(run.cfg.snapshot.times, dtype=float) * run.t_cl
    classical_r = _classical(run, np.unique(np.concatenate(([0.0], times[times > 0]))))
    r_cl = dict(zip(classical_r.t.tolist(), classical_r.r.tolist()))
    cut = 0.5 * run.r_tp
    stats = []
    for i, t in enumerate(times):
        snap = wf.snapshot(t)
        beyond = snap.mass_beyond(cut)
        rc = r_cl.get(float(t))
        run.write(
            f"snapshot_{i:02d}.csv",
            {"r": run.grid.nodes, "rho2": snap.rho2},
            t_au=float(t),
            t_over_Tcl=float(t) / run.t_cl,
            norm=snap.total_norm,
            expectation_r=snap.expectation_r,
            classical_r=rc,
        )
        stats.append(
            {
                "t_over_Tcl": float(t) / run.t_cl,
                "norm": snap.total_norm,
                "expectation_r": snap.expectation_r,
                "mass_beyond_half_tp": beyond,
                "classical_r": rc,
            }
        )
    run.summary["half_tp_au"] = cut
    run.summary["snapshots"] = stats


def _bohm_members(run: _Run, ts, label: str = "bohm"):
    wf = run.wavefield
    r0s = [float(r) for r in run.cfg.bohm.r0]
    try:
        ens = run_ensemble(wf, r0s, ts[0], ts[-1], run.integrator(), times=ts)
    except ValueError as exc:
        raise NumericalFailure("pilot", str(exc)) from exc
    rows = []
    for tr in ens:
        run.write_trajectory(f"traj_{label}_r0_{_tag(tr.initial_r)}.csv", tr)
        rows.append(
            {
                "r0": tr.initial_r,
                "status": tr.status,
                "max_r": tr.max_r if tr.r.size else math.nan,
                "time_of_max_over_Tcl": tr.time_of_max / run.t_cl if tr.r.size else math.nan,
                "final_r": float(tr.r[-1]) if tr.r.size else math.nan,
            }
        )
        if not tr.ok:
            run.fail("pilot", f"r0={tr.initial_r:g}: {tr.message}")
    run.summary["r_tp_au"] = run.r_tp
    run.summary["trajectories"] = rows
    run.summary["ordering_violations"] = ens.ordering_violations
    if not ens.ordering_preserved:
        run.fail("pilot", f"trajectory ordering violated {ens.ordering_violations} times")
    return ens


def _task_bohm(run: _Run) -> None:
    _bohm_members(run, run.times())


def _task_classical(run: _Run) -> None:
    ts = run.times()
    tr = _classical(run, ts)
    run.write_trajectory("traj_classical.csv", tr, energy=run.energy0, l_squared=run.cfg.classical.l_squared)
    run.summary["classical"] = {
        "r0": tr.initial_r,
        "max_r": tr.max_r,
        "time_of_max_over_Tcl": tr.time_of_max / run.t_cl,
    }


def _task_comparison(run: _Run) -> None:
    ts = run.times()
    _task_classical(run)
    mean_r = run.wavefield.expectation_r(ts)
    run.write("expectation_r.csv", {"t_au": ts, "t_over_Tcl": ts / run.t_cl, "mean_r_au": mean_r})
    k = int(np.argmax(mean_r))
    run.summary["expectation_r"] = {"max": float(mean_r[k]), "time_of_max_over_Tcl": ts[k] / run.t_cl}
    _bohm_members(run, ts)


def _task_ensemble(run: _Run) -> None:
    e = run.cfg.ensemble
    wf = run.wavefield
    seed = run.cfg.scenario.seed
    ts = run.times(extra=e.check_times)
    start = wf.snapshot(ts[0])
    positions = sample_positions(start, e.count, seed, e.method)
    order = np.argsort(positions, kind="stable")
    try:
        ens = run_ensemble(wf, positions, ts[0], ts[-1], run.integrator(), times=ts)
    except ValueError as exc:
        raise NumericalFailure("pilot", str(exc)) from exc
    members = []
    width = max(4, len(str(e.count - 1)))
    for k, tr in enumerate(ens):
        idx = int(order[k])
        rel = f"members/member_{idx:0{width}d}.csv"
        run.write_trajectory(rel, tr, member=idx, seed=[seed, idx])
        members.append(
            {"index": idx, "file": rel, "seed": [seed, idx], "r0": tr.initial_r, "status": tr.status,
             "message": tr.message}
        )
        if not tr.ok:
            run.fail("pilot", f"member {idx} (r0={tr.initial_r:.6g}): {tr.message}")
    members.sort(key=lambda m: m["index"])
    run.extra["members"] = members

    checks = np.asarray(e.check_times, dtype=float) * run.t_cl
    tv = []
    used = []
    for tc in checks:
        t_exact = ts[int(np.argmin(np.abs(ts - tc)))]
        snap = wf.snapshot(t_exact)
        x = ens.positions_at(t_exact)
        used.append(int(np.isfinite(x).sum()))
        tv.append(equivariance_distance(x, snap, bins=50))
    run.write(
        "equivariance.csv",
        {"t_au": checks, "t_over_Tcl": checks / run.t_cl, "tv_distance": tv, "members_used": used},
        bins=50,
        count=e.count,
        method=e.method,
        seed=seed,
    )
    final = {"index": order, "r0": ens.positions[:, 0]}
    for c, tc in zip(e.check_times, checks):
        t_exact = ts[int(np.argmin(np.abs(ts - tc)))]
        name = f"r_at_{_tag(c)}Tcl"
        final[name] = ens.positions_at(t_exact)
        run.curves[name] = (run.grid.nodes, wf.snapshot(t_exact).rho2)
    run.write("positions.csv", final)
    run.summary["equivariance"] = [
        {"t_over_Tcl": float(c), "tv_distance": float(d), "members_used": u}
        for c, d, u in zip(e.check_times, tv, used)
    ]
    run.summary["ordering_violations"] = ens.ordering_violations
    run.summary["members_ok"] = sum(m["status"] == "ok" for m in members)


TASK_RUNNERS = {
    "eigen": _task_eigen,
    "autocorr": _task_autocorr,
    "snapshot": _task_snapshot,
    "bohm": _task_bohm,
    "classical": _task_classical,
    "comparison": _task_comparison,
    "ensemble": _task_ensemble,
}


def run_scenario(cfg: ScenarioConfig, plots: bool | None = None) -> RunResult:
    """Validate ``cfg``, run its task and write data, figures and manifest.

    Raises
    ------
    ConfigError
        Before anything is written, if the configuration is invalid.
    NumericalFailure
        If building the basis or integrating fails outright. Per-trajectory
        failures do not raise; they set ``status`` to :data:`EXIT_NUMERICAL`
        and are listed in the manifest.
    """
    cfg.validate()
    run = _Run(cfg)
    run.out.mkdir(parents=True, exist_ok=True)
    TASK_RUNNERS[cfg.scenario.task](run)

    figures = []
    if cfg.scenario.plots if plots is None else plots:
        from .plotting import render

        figures = render(cfg.scenario.task, run.out, run.files, run.summary, run.curves)

    payload = {
        "scenario": cfg.scenario.name,
        "task": cfg.scenario.task,
        "code_version": __version__,
        "exit_code": run.status,
        "status": "ok" if run.status == EXIT_OK else "numerical-failure",
        "config": run.resolved,
        "files": {p.relative_to(run.out).as_posix(): sha256(p) for p in sorted(run.files)},
        "figures": [p.relative_to(run.out).as_posix() for p in figures],
        "summary": run.summary,
        "diagnostics": run.diagnostics,
    }
    payload.update(run.extra)
    manifest = write_manifest(run.out / "manifest.json", payload)
    return RunResult(run.status, run.out, run.files, figures, manifest, run.summary, run.diagnostics)
