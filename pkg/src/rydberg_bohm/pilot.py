"""De Broglie-Bohm dynamics in the radial coordinate.

The guidance law is ``dr/dt = ∂σ/∂r = Im(ψ* ∂ψ/∂r) / |ψ|²`` for the radial
field ``ψ = ρ exp(iσ)`` built by :class:`~rydberg_bohm.packet.Wavefield`.
Trajectories are integrated with the vectorized embedded 5(4) pair of
:mod:`rydberg_bohm.integrator`; a whole ensemble advances in one loop.

Close to a quasi-node the quotient blows up. Where the density drops below
``density_floor`` times the reference density the velocity is clamped to
``±(local spacing) / max_step_near_node`` and the step is capped at
``max_step_near_node``, so a particle can stall at a node but never jump it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import integrator
from .basis import effective_potential
from .packet import Wavefield, WavefieldSnapshot


class NodeProximityError(ValueError):
    """Quantity requested where ``|ψ|`` is too small for a meaningful value."""


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = 1000.0
    density_floor: float = 1e-12
    max_step_near_node: float = 10.0

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "density_floor", "max_step_near_node"):
            if not getattr(self, name) > 0:
                raise ValueError(f"IntegratorConfig.{name} must be positive")

    def step_control(self) -> integrator.StepControl:
        return integrator.StepControl(
            rel_tol=self.rel_tol,
            abs_tol=self.abs_tol,
            max_step=self.max_step,
            max_step_guarded=self.max_step_near_node,
        )


@dataclass(eq=False)
class Trajectory:
    """Time series of one particle.

    ``status`` is ``"ok"`` for a completed integration; otherwise the arrays
    stop at the last good sample and ``message`` says why.
    """

    kind: str
    t: np.ndarray
    r: np.ndarray
    v: np.ndarray
    initial_r: float
    initial_t: float
    status: str = "ok"
    message: str = ""
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def max_r(self) -> float:
        return float(np.nanmax(self.r))

    @property
    def time_of_max(self) -> float:
        return float(self.t[int(np.nanargmax(self.r))])

    def at(self, t: float) -> float:
        """Position at an output time (exact match required)."""
        idx = np.flatnonzero(np.isclose(self.t, t, rtol=0.0, atol=1e-9 * max(1.0, abs(t))))
        if idx.size == 0:
            raise KeyError(f"no sample at t={t!r}")
        return float(self.r[idx[0]])


def velocity_field(wavefield: Wavefield, r, t, config: IntegratorConfig | None = None):
    """Guidance velocity and node-guard flag at ``(r, t)``.

    Returns
    -------
    v : float or ndarray
        ``Im(ψ* ψ') / |ψ|²``, clamped to ``±v_cap`` where guarded.
    guarded : bool or ndarray
        True where ``|ψ|²`` is below ``density_floor * reference_density``.
    """
    cfg = config or IntegratorConfig()
    psi, dpsi = wavefield(r, t)
    rho2 = (psi * psi.conjugate()).real
    floor = cfg.density_floor * wavefield.reference_density
    guarded = rho2 < floor
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (psi.conjugate() * dpsi).imag / rho2
    if np.any(guarded):
        cap = wavefield.grid.spacing(np.asarray(r, dtype=float)) / cfg.max_step_near_node
        cap = np.broadcast_to(cap, v.shape)
        v = np.where(guarded, np.clip(np.nan_to_num(v, nan=0.0), -cap, cap), v)
    if np.ndim(v) == 0:
        return float(v), bool(guarded)
    return v, guarded


def quantum_potential(wavefield: Wavefield, r: float, t: float, rho_max: float | None = None) -> float:
    """``Q = -ρ''/(2ρ)`` with ``ρ = |ψ|`` from a 5-point stencil at the local grid spacing.

    ``rho_max`` is ``max_r |ψ(r, t)|``; it is computed from the grid if omitted.

    Raises
    ------
    NodeProximityError
        If ``|ψ(r, t)| <= 0.01 rho_max``.
    """
    grid = wavefield.grid
    h = float(grid.spacing(r))
    stencil = r + h * np.arange(-2, 3)
    if stencil[0] <= 0 or stencil[-1] > grid.r_max:
        raise NodeProximityError(f"stencil around r={r} leaves the grid")
    psi, _ = wavefield(stencil, t)
    rho = np.abs(psi)
    if rho_max is None:
        rho_max = float(np.abs(wavefield.on_grid(t)).max())
    if rho[2] <= 0.01 * rho_max:
        raise NodeProximityError(
            f"|psi|={rho[2]:.3e} at r={r}, t={t} is within 1% of max |psi|={rho_max:.3e}"
        )
    d2 = (-rho[0] + 16 * rho[1] - 30 * rho[2] + 16 * rho[3] - rho[4]) / (12 * h * h)
    return float(-d2 / (2 * rho[2]))


def phase_time_derivative(wavefield: Wavefield, r: float, t: float, dt: float) -> float:
    """``∂σ/∂t`` by a centered difference of the phase of ``ψ`` over ``±dt``."""
    (p_minus, p_plus), _ = wavefield(np.array([r, r]), np.array([t - dt, t + dt]))
    return float(np.angle(p_plus * np.conjugate(p_minus)) / (2 * dt))


def hamilton_jacobi_residual(wavefield: Wavefield, r: float, t: float, dt: float, l: int = 1) -> float:
    """``∂σ/∂t + (∂σ/∂r)²/2 + V_eff + Q`` at ``(r, t)``; zero for exact fields."""
    v, _ = velocity_field(wavefield, r, t)
    q = quantum_potential(wavefield, r, t)
    return phase_time_derivative(wavefield, r, t, dt) + 0.5 * v * v + effective_potential(r, l) + q


def _output_times(t0: float, t1: float, times) -> np.ndarray:
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got t0={t0}, t1={t1}")
    if times is None:
        return np.linspace(t0, t1, 501)
    times = np.unique(np.asarray(times, dtype=float))
    if times[0] < t0 or times[-1] > t1:
        raise ValueError("sample times must lie inside [t0, t1]")
    if times[-1] < t1:
        times = np.append(times, t1)
    return times


def _solve_bohm(wavefield: Wavefield, positions, t0, times, config):
    cfg = config or IntegratorConfig()
    grid = wavefield.grid
    r_hi = grid.r_max

    def rhs(t, r):
        inside = (r > 0.0) & (r <= r_hi)
        v = np.full(r.shape, np.nan)
        g = np.zeros(r.shape, dtype=bool)
        if inside.any():
            vi, gi = velocity_field(wavefield, r[inside], t[inside], cfg)
            v[inside] = vi
            g[inside] = gi
        return v, g

    def validate(r):
        return (r >= grid.nodes[0]) & (r <= r_hi)

    return integrator.solve(rhs, positions, t0, times, cfg.step_control(), validate)


def _trajectory_from(sol, i, wavefield, cfg, r0, t0) -> Trajectory:
    code = int(sol.status[i])
    good = np.isfinite(sol.y[i])
    t = sol.times[good]
    r = sol.y[i][good]
    v = np.asarray(velocity_field(wavefield, r, t, cfg)[0]) if r.size else np.empty(0)
    grid = wavefield.grid
    last = float(sol.last_y[i])
    # steps reaching past the grid are rejected, so an exit shows up as a
    # stall pinned at an edge
    at_edge = last >= grid.r_max - 4.0 * float(grid.spacing(grid.r_max)) or last <= 2.0 * grid.nodes[0]
    if code == integrator.DONE:
        status, msg = "ok", ""
    elif code == integrator.UNDERFLOW and at_edge:
        status = "failed"
        msg = f"trajectory left the grid at t={sol.last_t[i]:.6g}, r={last:.6g}"
    elif code == integrator.UNDERFLOW:
        status = "step-underflow"
        msg = f"step underflow at t={sol.last_t[i]:.6g}, r={sol.last_y[i]:.6g}"
    else:
        status = "failed"
        msg = (
            f"trajectory left the grid or hit a non-finite velocity near "
            f"t={sol.last_t[i]:.6g}, r={sol.last_y[i]:.6g}"
        )
    stats = {
        "accepted": int(sol.accepted[i]),
        "rejected": int(sol.rejected[i]),
        "guarded": int(sol.guarded[i]),
    }
    return Trajectory("bohm", t, r, v, float(r0), float(t0), status, msg, stats)


def integrate_trajectory(
    wavefield: Wavefield,
    r0: float,
    t0: float,
    t1: float,
    config: IntegratorConfig | None = None,
    times=None,
) -> Trajectory:
    """Integrate ``dr/dt = v(r, t)`` from ``(r0, t0)`` to ``t1``.

    ``times`` are the requested output instants (501 uniform samples by
    default); ``t1`` is always included.
    """
    grid = wavefield.grid
    if not grid.nodes[0] <= r0 <= grid.r_max:
        raise ValueError(f"r0={r0} outside grid [{grid.nodes[0]:.3g}, {grid.r_max:.6g}]")
    cfg = config or IntegratorConfig()
    ts = _output_times(t0, t1, times)
    sol = _solve_bohm(wavefield, [r0], t0, ts, cfg)
    return _trajectory_from(sol, 0, wavefield, cfg, r0, t0)


@dataclass(eq=False)
class Ensemble:
    """Result of :func:`run_ensemble`; members are in ascending initial order."""

    trajectories: list
    times: np.ndarray
    positions: np.ndarray = field(repr=False)
    ordering_violations: int = 0

    @property
    def ordering_preserved(self) -> bool:
        return self.ordering_violations == 0

    @property
    def statuses(self) -> list:
        return [tr.status for tr in self.trajectories]

    @property
    def all_ok(self) -> bool:
        return all(tr.ok for tr in self.trajectories)

    def __len__(self):
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def positions_at(self, t: float) -> np.ndarray:
        k = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(self.times[k], t, rel_tol=1e-12, abs_tol=1e-9):
            raise ValueError(f"ensemble has no common sample at t={t!r}")
        return self.positions[:, k]


def run_ensemble(
    wavefield: Wavefield,
    positions,
    t0: float,
    t1: float,
    config: IntegratorConfig | None = None,
    times=None,
) -> Ensemble:
    """Integrate one trajectory per initial position.

    Positions are sorted first. Non-crossing is checked at every common
    output time and the number of violating (time, neighbour pair) events
    is reported; failed members keep their status and are never dropped.
    """
    cfg = config or IntegratorConfig()
    pos = np.sort(np.asarray(positions, dtype=float).reshape(-1))
    grid = wavefield.grid
    if pos.size and (pos[0] < grid.nodes[0] or pos[-1] > grid.r_max):
        raise ValueError("initial positions must lie inside the grid")
    ts = _output_times(t0, t1, times)
    sol = _solve_bohm(wavefield, pos, t0, ts, cfg)
    members = [_trajectory_from(sol, i, wavefield, cfg, pos[i], t0) for i in range(pos.size)]
    y = sol.y
    with np.errstate(invalid="ignore"):
        viol = np.diff(y, axis=0) <= 0
    distinct = np.diff(pos) > 0
    violations = int(np.sum(viol[distinct] & np.isfinite(np.diff(y, axis=0))[distinct]))
    return Ensemble(members, ts, y, violations)


def member_variates(seed: int, count: int) -> np.ndarray:
    """One uniform variate per member from its own ``(seed, index)`` stream.

    A member's draw depends only on its index, never on ``count`` or on the
    order in which members are processed.
    """
    if seed < 0:
        raise ValueError("seed must be >= 0")
    return np.array([np.random.default_rng([seed, i]).random() for i in range(count)])


def sample_positions(snapshot: WavefieldSnapshot, count: int, seed: int, method: str = "stratified"):
    """Draw ``count`` radii distributed as ``ρ²`` by inverse-CDF sampling.

    The density is linear inside each grid cell, so the CDF is inverted
    exactly within the cell (a quadratic). ``method="stratified"`` places
    member ``i``'s variate in the ``i``-th of ``count`` equal-probability
    strata; ``method="iid"`` uses the variates directly. Either way member
    ``i`` draws from the stream ``(seed, i)`` and the result is in member
    order (ascending for stratified sampling).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    jitter = member_variates(seed, count)
    if method == "stratified":
        u = (np.arange(count) + jitter) / count
    elif method == "iid":
        u = jitter
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    return inverse_cdf(snapshot, u)


def _cell_tables(snapshot: WavefieldSnapshot):
    grid = snapshot.grid
    r = np.concatenate(([0.0], grid.nodes))
    p = np.concatenate(([0.0], snapshot.rho2))
    mass = 0.5 * (p[1:] + p[:-1]) * np.diff(r)
    cdf = np.concatenate(([0.0], np.cumsum(mass)))
    return r, p, cdf / cdf[-1], cdf[-1]


def inverse_cdf(snapshot: WavefieldSnapshot, u) -> np.ndarray:
    """Radii at cumulative probabilities ``u`` for the cell-linear density of ``snapshot``."""
    r, p, cdf, total = _cell_tables(snapshot)
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    j = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, r.size - 2)
    h = r[j + 1] - r[j]
    p0 = p[j] / total
    slope = (p[j + 1] - p[j]) / total / h
    need = u - cdf[j]
    # solve p0 s + slope s²/2 = need for s in [0, h]
    disc = np.maximum(p0 * p0 + 2.0 * slope * need, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(
            np.abs(slope) * h > 1e-12 * np.maximum(p0, 1e-300),
            2.0 * need / (p0 + np.sqrt(disc)),
            need / p0,
        )
    s = np.clip(np.nan_to_num(s, nan=0.0), 0.0, h)
    return np.clip(r[j] + s, snapshot.grid.nodes[0], snapshot.grid.r_max)


def cumulative_at(snapshot: WavefieldSnapshot, radii) -> np.ndarray:
    """Cumulative probability of the cell-linear density at ``radii``."""
    r, p, cdf, total = _cell_tables(snapshot)
    x = np.asarray(radii, dtype=float)
    j = np.clip(np.searchsorted(r, x, side="right") - 1, 0, r.size - 2)
    s = x - r[j]
    h = r[j + 1] - r[j]
    slope = (p[j + 1] - p[j]) / h
    return cdf[j] + (p[j] * s + 0.5 * slope * s * s) / total


def quantile_transport(start: WavefieldSnapshot, end: WavefieldSnapshot, r0) -> np.ndarray:
    """Position reached from ``r0`` under an order-preserving, ``ρ²``-preserving flow.

    In one dimension equivariance plus non-crossing fix the Bohmian flow map
    to ``F_end⁻¹(F_start(r0))``; this evaluates it from the two densities
    alone, without integrating any trajectory.
    """
    return inverse_cdf(end, cumulative_at(start, r0))


def equivariance_distance(ensemble, snapshot: WavefieldSnapshot, t: float | None = None, bins: int = 50) -> float:
    """Total-variation distance between ensemble positions and ``ρ²`` at the snapshot time.

    The reference is split into ``bins`` equal-probability bins, so the
    distance is ``½ Σ_b |n_b / N - 1/bins|``. ``ensemble`` may be an
    :class:`Ensemble` (positions taken at ``snapshot.t``) or an array of
    positions already at that time.
    """
    if t is not None and not math.isclose(t, snapshot.t, rel_tol=1e-12, abs_tol=1e-9):
        raise ValueError(f"snapshot is at t={snapshot.t}, not t={t}")
    if isinstance(ensemble, Ensemble):
        x = ensemble.positions_at(snapshot.t)
    else:
        x = np.asarray(ensemble, dtype=float)
    x = x[np.isfinite(x)]
    if x.size == 0:
        raise ValueError("no positions to compare")
    inner_edges = inverse_cdf(snapshot, np.arange(1, bins) / bins)
    counts = np.bincount(np.searchsorted(inner_edges, x, side="right"), minlength=bins)
    return 0.5 * float(np.sum(np.abs(counts / x.size - 1.0 / bins)))
