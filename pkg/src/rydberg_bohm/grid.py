"""Radial grids and quadrature.

Every field in the package lives on a :class:`RadialGrid`. The grid is
uniform in a *computational coordinate* ``x`` and maps to the physical
radius through ``r = x**2`` (``"sqrt"`` mapping, the default) or ``r = x``
(``"uniform"`` mapping). Node ``k`` (``k = 1 .. N``) sits at ``x_k = k*dx``,
so the origin itself is never a node and the last node is exactly ``r_max``.

The square-root mapping keeps the number of points per Coulomb oscillation
roughly constant: the local wavelength of a bound hydrogenic state grows
like ``sqrt(r)`` close to the core.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_POINTS = 1000

MAPPINGS = ("sqrt", "uniform")


class GridError(ValueError):
    """Raised for invalid grid parameters or out-of-range evaluations."""


@dataclass(frozen=True)
class RadialGrid:
    """Discretization of ``r`` in ``(0, r_max]``.

    Attributes
    ----------
    r_max : float
        Last node (au).
    point_count : int
        Number of nodes ``N``.
    mapping : str
        ``"sqrt"`` (uniform in sqrt(r)) or ``"uniform"`` (uniform in r).
    """

    r_max: float
    point_count: int
    mapping: str = "sqrt"
    x: np.ndarray = field(init=False, repr=False, compare=False)
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    dx: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.r_max > 0:
            raise GridError(f"r_max must be positive, got {self.r_max!r}")
        if int(self.point_count) != self.point_count or self.point_count < MIN_POINTS:
            raise GridError(
                f"point_count below minimum: got {self.point_count}, need >= {MIN_POINTS}"
            )
        if self.mapping not in MAPPINGS:
            raise GridError(f"unknown mapping {self.mapping!r}; expected one of {MAPPINGS}")
        n = int(self.point_count)
        x_max = np.sqrt(self.r_max) if self.mapping == "sqrt" else float(self.r_max)
        dx = x_max / n
        x = np.arange(1, n + 1, dtype=float) * dx
        x[-1] = x_max
        r = x * x if self.mapping == "sqrt" else x.copy()
        r[-1] = float(self.r_max)
        for arr in (x, r):
            arr.setflags(write=False)
        object.__setattr__(self, "point_count", n)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "nodes", r)
        object.__setattr__(self, "dx", dx)

    @property
    def r_min(self) -> float:
        return float(self.nodes[0])

    def __len__(self):
        return self.point_count

    # coordinate maps ---------------------------------------------------

    def to_x(self, r):
        """Computational coordinate for radius ``r``."""
        r = np.asarray(r, dtype=float)
        return np.sqrt(r) if self.mapping == "sqrt" else r

    def jacobian(self, x):
        """``dr/dx`` at computational coordinate ``x``."""
        x = np.asarray(x, dtype=float)
        return 2.0 * x if self.mapping == "sqrt" else np.ones_like(x)

    def spacing(self, r):
        """Local physical node spacing ``dr`` around radius ``r``."""
        return self.jacobian(self.to_x(r)) * self.dx

    def locate(self, r):
        """Interpolation cell for radius ``r``.

        Cells are indexed on the node set augmented with the origin
        (``x_0 = 0``): cell ``j`` spans ``[x_j, x_{j+1}]`` with ``x_j = j*dx``.
        Returns ``(j, x - x_j)``.

        Raises
        ------
        GridError
            If any ``r`` lies outside ``(0, r_max]``.
        """
        r = np.asarray(r, dtype=float)
        bad = ~((r > 0.0) & (r <= self.nodes[-1]))
        if np.any(bad):
            raise GridError(
                f"r={r[bad].flat[0]!r} outside grid (0, {self.nodes[-1]:.6g}]"
            )
        x = self.to_x(r)
        j = np.minimum(np.floor(x / self.dx).astype(np.intp), self.point_count - 1)
        return j, x - j * self.dx

    # quadrature --------------------------------------------------------

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights for ``∫_0^{r_max} f(r) dr`` from node samples.

        Composite Simpson in ``x`` (with a three-point closing panel when the
        interval count is odd), multiplied by ``dr/dx``. The origin is treated
        as an implicit extra node where the integrand vanishes, which holds
        for every integrand built from ``u = r R`` used in this package.
        """
        w = _WEIGHT_CACHE.get(self)
        if w is None:
            w = simpson_weights(self.point_count + 1, self.dx)[1:] * self.jacobian(self.x)
            w.setflags(write=False)
            _WEIGHT_CACHE[self] = w
        return w

    def integrate(self, f):
        """Integrate node samples ``f`` over ``r`` (float, or complex for complex ``f``)."""
        val = np.dot(self.weights, np.asarray(f))
        return complex(val) if np.iscomplexobj(val) else float(val)

    def cumulative(self, f) -> np.ndarray:
        """Running integral ``∫_0^{r_k} f dr`` at every node (trapezoid in x, plus the origin panel)."""
        g = np.asarray(f, dtype=float) * self.jacobian(self.x)
        out = np.empty_like(g)
        out[0] = 0.5 * g[0] * self.dx
        out[1:] = out[0] + np.cumsum(0.5 * (g[1:] + g[:-1]) * self.dx)
        return out


_WEIGHT_CACHE: dict = {}


def simpson_weights(count: int, h: float) -> np.ndarray:
    """Composite Simpson weights for ``count`` equispaced samples of spacing ``h``."""
    if count < 3:
        raise GridError("Simpson quadrature needs at least three samples")
    w = np.zeros(count)
    intervals = count - 1
    even = intervals if intervals % 2 == 0 else intervals - 1
    w[0 : even + 1 : 2] += 2.0
    w[1:even:2] += 4.0
    w[0] -= 1.0
    w[even] -= 1.0
    w[: even + 1] *= h / 3.0
    if even != intervals:
        # closing panel: exact for quadratics through the last three samples
        w[-3] += -h / 12.0
        w[-2] += 8.0 * h / 12.0
        w[-1] += 5.0 * h / 12.0
    return w


def build_grid(r_max: float, point_count: int, mapping: str = "sqrt") -> RadialGrid:
    """Build a :class:`RadialGrid`; see the class for the node layout."""
    return RadialGrid(float(r_max), point_count, mapping)


def default_r_max(n_max: int, floor: float = 5000.0) -> float:
    """Grid extent large enough for every state up to ``n_max`` to decay.

    At least ``1.5 * 2 * n_max**2`` (one and a half times the outer turning
    point scale), and never below ``floor``.
    """
    return max(float(floor), 3.0 * n_max * n_max)
