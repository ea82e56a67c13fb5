"""Hydrogenic bound radial eigenstates on a :class:`~rydberg_bohm.grid.RadialGrid`.

States are stored as ``u(r) = r R_{nl}(r)`` normalized to ``∫ u² dr = 1``.
They are obtained by two-sided Numerov integration at the exact energy
``E_n = -1/(2 n²)``: outward from the origin with the regular series start,
inward from ``r_max`` with a decaying start, matched at the outer classical
turning point. The closed-form Laguerre polynomial route is avoided because
it cancels catastrophically at ``n ≈ 40``.

On the square-root grid ``r = x²`` the radial equation ``u'' = 2(V_eff - E) u``
is rewritten for ``w = u / sqrt(dr/dx)``::

    w''(x) = [ ((2l+1)² - 1/4) / x² - 8 - 8 E x² ] w(x)

which is free of first-derivative terms and therefore Numerov-ready on the
uniform ``x`` mesh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .grid import GridError, RadialGrid

MATCH_TOL = 1e-5


class EigenstateError(RuntimeError):
    """Numerov construction failed (matching, node count or grid extent)."""


def effective_potential(r, l: int):
    """Coulomb plus centrifugal potential ``-1/r + l(l+1)/(2r²)`` in au."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("effective_potential needs r > 0")
    if l < 0:
        raise ValueError(f"l must be non-negative, got {l}")
    out = -1.0 / r + 0.5 * l * (l + 1) / (r * r)
    return float(out) if out.ndim == 0 else out


def eigen_energy(n: int) -> float:
    """Exact hydrogen level ``-1/(2n²)``."""
    if n < 1 or int(n) != n:
        raise ValueError(f"principal quantum number must be an integer >= 1, got {n}")
    return -0.5 / (n * n)


def outer_turning_point(n: int, l: int) -> float:
    """Largest root of ``V_eff(r) = E_n``."""
    e = eigen_energy(n)
    return (-1.0 - math.sqrt(1.0 + 2.0 * e * l * (l + 1))) / (2.0 * e)


@dataclass(frozen=True, eq=False)
class Eigenstate:
    """One normalized radial function ``u_{nl}`` sampled on ``grid``.

    ``spline`` is a C² cubic in the computational coordinate through the
    origin (``u = 0``) and every node; values and radial derivatives
    off-grid come from it, so :meth:`evaluate` is exact at the nodes.
    """

    n: int
    l: int
    energy: float
    grid: RadialGrid
    samples: np.ndarray = field(repr=False)
    spline: CubicSpline = field(repr=False)

    @property
    def nodes_count(self) -> int:
        """Interior sign changes of the sampled function."""
        u = self.samples[np.abs(self.samples) > 1e-14 * np.abs(self.samples).max()]
        return int(np.count_nonzero(np.signbit(u[1:]) != np.signbit(u[:-1])))

    def evaluate(self, r):
        return evaluate_state(self, r)

    def expectation(self, f) -> float:
        """``∫ f(r) u(r)² dr`` for a callable ``f``."""
        return self.grid.integrate(f(self.grid.nodes) * self.samples**2)


def _numerov_coefficient(grid: RadialGrid, l: int, energy: float) -> np.ndarray:
    x = grid.x
    if grid.mapping == "sqrt":
        return ((2 * l + 1) ** 2 - 0.25) / (x * x) - 8.0 - 8.0 * energy * x * x
    return 2.0 * (effective_potential(x, l) - energy)


def _numerov_sweep(f, h: float, w0: float, w1: float, stop: int) -> np.ndarray:
    """March ``w'' = f w`` from indices 0, 1 up to ``stop`` inclusive.

    The partial solution is rescaled whenever it grows past 1e200, so the
    inward sweep through long classically forbidden stretches cannot overflow.
    """
    c = h * h / 12.0
    g = (1.0 - c * np.asarray(f[: stop + 1])).tolist()
    a = (2.0 + 10.0 * c * np.asarray(f[: stop + 1])).tolist()
    w = [0.0] * (stop + 1)
    w[0], w[1] = w0, w1
    prev, cur = w0, w1
    for k in range(1, stop):
        nxt = (a[k] * cur - g[k - 1] * prev) / g[k + 1]
        w[k + 1] = nxt
        prev, cur = cur, nxt
        if abs(nxt) > 1e200:
            w[: k + 2] = [v * 1e-200 for v in w[: k + 2]]
            prev *= 1e-200
            cur *= 1e-200
    return np.array(w)


def _build_spline(grid: RadialGrid, u: np.ndarray) -> CubicSpline:
    x = np.concatenate(([0.0], grid.x))
    return CubicSpline(x, np.concatenate(([0.0], u)), bc_type="not-a-knot")


def hydrogen_1s(grid: RadialGrid) -> Eigenstate:
    """Analytic ground state ``u = 2 r exp(-r)`` through the same interface."""
    u = 2.0 * grid.nodes * np.exp(-grid.nodes)
    return Eigenstate(1, 0, -0.5, grid, _readonly(u), _build_spline(grid, u))


def compute_eigenstate(n: int, l: int, grid: RadialGrid) -> Eigenstate:
    """Bound state ``u_{nl}`` on ``grid`` by two-sided Numerov at the exact energy.

    ``(n, l) = (1, 0)`` returns the analytic ground state.

    Raises
    ------
    EigenstateError
        If ``r_max`` lies inside the classically allowed region, the two
        sweeps disagree in slope at the matching point by more than
        ``MATCH_TOL`` (relative), or the node count is not ``n - l - 1``.
    """
    if l < 0 or n < l + 1:
        raise ValueError(f"need n >= l + 1 >= 1, got n={n}, l={l}")
    if (n, l) == (1, 0):
        return hydrogen_1s(grid)
    energy = eigen_energy(n)
    r_tp = outer_turning_point(n, l)
    if grid.r_max <= r_tp:
        raise EigenstateError(
            f"r_max={grid.r_max:g} inside classically allowed region of n={n}, l={l} "
            f"(outer turning point {r_tp:.1f} au)"
        )
    f = _numerov_coefficient(grid, l, energy)
    h = grid.dx
    N = grid.point_count
    m = int(np.searchsorted(grid.nodes, r_tp))
    m = min(max(m, 2), N - 3)

    # outward: regular series u ~ r^{l+1} (1 - r/(l+1))
    r01 = grid.nodes[:2]
    u01 = r01 ** (l + 1) * (1.0 - r01 / (l + 1))
    w01 = u01 / np.sqrt(grid.jacobian(grid.x[:2]))
    w_out = _numerov_sweep(f, h, w01[0], w01[1], m + 1)

    # inward: start from zero at r_max, exponentially small neighbour
    w_in = _numerov_sweep(f[::-1], h, 0.0, 1e-30, N - 1 - (m - 1))[::-1]
    # w_in[k] corresponds to node (m - 1) + k
    offset = m - 1
    scale = w_out[m] / w_in[m - offset]
    if not np.isfinite(scale) or scale == 0.0:
        raise EigenstateError(f"degenerate matching amplitude for n={n}, l={l}, grid={grid}")
    w_in = w_in * scale

    slope_out = w_out[m + 1] - w_out[m - 1]
    slope_in = w_in[m + 1 - offset] - w_in[m - 1 - offset]
    ref = max(abs(slope_out), abs(slope_in), abs(w_out[m]) * h)
    mismatch = abs(slope_out - slope_in) / ref
    if mismatch > MATCH_TOL:
        raise EigenstateError(
            f"Numerov matching failed for n={n}, l={l}: relative slope mismatch "
            f"{mismatch:.3e} > {MATCH_TOL:g} (r_max={grid.r_max:g}, "
            f"N={grid.point_count}, mapping={grid.mapping})"
        )

    w = np.empty(N)
    w[: m + 1] = w_out[: m + 1]
    w[m + 1 :] = w_in[m + 1 - offset :]
    u = w * np.sqrt(grid.jacobian(grid.x))
    u /= math.sqrt(grid.integrate(u * u))
    # sign convention: positive next to the origin
    if u[np.argmax(np.abs(u) > 1e-300)] < 0 or u[1] < 0:
        u = -u
    state = Eigenstate(n, l, energy, grid, _readonly(u), _build_spline(grid, u))
    if state.nodes_count != n - l - 1:
        raise EigenstateError(
            f"n={n}, l={l}: found {state.nodes_count} interior nodes, expected {n - l - 1}"
        )
    return state


def evaluate_state(state: Eigenstate, r):
    """Interpolated ``(u(r), du/dr)``, exact at grid nodes.

    Raises
    ------
    GridError
        For ``r`` outside ``[r_min, r_max]``.
    """
    grid = state.grid
    r_arr = np.asarray(r, dtype=float)
    if np.any(~((r_arr >= grid.nodes[0]) & (r_arr <= grid.nodes[-1]))):
        raise GridError(f"r outside grid [{grid.nodes[0]:.6g}, {grid.r_max:.6g}]")
    x = grid.to_x(r_arr)
    val = state.spline(x)
    der = state.spline(x, 1) / grid.jacobian(x)
    if r_arr.ndim == 0:
        return float(val), float(der)
    return val, der


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


class Basis:
    """A set of eigenstates on one grid, stacked for fast joint evaluation.

    Evaluation locates the interpolation cell once and evaluates every
    member cubic there, which is what the field synthesis needs.
    """

    def __init__(self, states):
        states = list(states)
        if not states:
            raise ValueError("empty basis")
        grid = states[0].grid
        if any(s.grid != grid for s in states):
            raise ValueError("all basis states must share one grid")
        self.grid = grid
        self.states = {(s.n, s.l): s for s in states}
        self._keys = [(s.n, s.l) for s in states]
        # (N, 4, S): per-cell cubic coefficients, highest power first, states last
        self._table = np.ascontiguousarray(np.stack([s.spline.c for s in states]).transpose(2, 1, 0))

    def __contains__(self, key):
        return key in self.states

    def __getitem__(self, key) -> Eigenstate:
        return self.states[key]

    def __len__(self):
        return len(self._keys)

    def __iter__(self):
        return iter(self.states.values())

    @property
    def keys(self):
        return list(self._keys)

    def rows(self, keys):
        """Positions of ``keys`` in the stacked state axis."""
        index = {k: i for i, k in enumerate(self._keys)}
        return np.array([index[k] for k in keys], dtype=np.intp)

    def table(self, rows=None) -> np.ndarray:
        """Coefficient table restricted to ``rows`` (a copy; build once and reuse)."""
        if rows is None:
            return self._table
        return np.ascontiguousarray(self._table[:, :, rows])

    def evaluate(self, r, rows=None):
        """Values and radial derivatives of the selected states at ``r``.

        Returns two arrays of shape ``(*r.shape, S)``.
        """
        return evaluate_table(self.grid, self.table(rows), r)


def evaluate_table(grid: RadialGrid, table: np.ndarray, r):
    """Evaluate every state of a coefficient table at radii ``r``."""
    r = np.asarray(r, dtype=float)
    j, dx = grid.locate(r)
    c = table[j]  # (*r.shape, 4, S)
    dx = dx[..., None]
    c0, c1, c2, c3 = c[..., 0, :], c[..., 1, :], c[..., 2, :], c[..., 3, :]
    val = ((c0 * dx + c1) * dx + c2) * dx + c3
    dval = (3.0 * c0 * dx + 2.0 * c1) * dx + c2
    return val, dval / grid.jacobian(grid.to_x(r))[..., None]


def build_basis(ns, l: int, grid: RadialGrid, include_ground: bool = False) -> Basis:
    """Eigenstates ``(n, l)`` for every ``n`` in ``ns``, plus 1s if requested."""
    states = [compute_eigenstate(int(n), l, grid) for n in ns]
    if include_ground and (1, 0) not in {(s.n, s.l) for s in states}:
        states.append(hydrogen_1s(grid))
    return Basis(states)
