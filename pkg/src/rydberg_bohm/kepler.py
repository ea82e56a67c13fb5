"""Classical radial Coulomb motion at fixed energy and angular momentum.

The radial equation ``dr/dt = ±sqrt(2(E + 1/r - L²/(2r²)))`` has square-root
singularities at both turning points. They are removed by the usual time
reparameterization ``dt = sqrt(a) r dη`` (``a = -1/(2E)``), under which the
motion is ``r = a (1 - e cos η)`` and ``t - t_p = a^{3/2} (η - e sin η)``
with ``e = sqrt(1 + 2 E L²)``. Propagation is then a solve of Kepler's
equation per output time: no stepping error accumulates, reflections at the
turning points are exact, and forward/backward runs are mutually inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pilot import Trajectory

SLACK = 1e-9


class ClassicalError(ValueError):
    """Initial data outside the classically allowed region."""


def radial_potential(r, l_squared: float):
    r = np.asarray(r, dtype=float)
    return -1.0 / r + 0.5 * l_squared / (r * r)


def classical_energy(r, v, l_squared: float):
    """``v²/2 - 1/r + L²/(2r²)``."""
    return 0.5 * np.asarray(v) ** 2 + radial_potential(r, l_squared)


def turning_points(energy: float, l_squared: float) -> tuple[float, float]:
    """Roots of ``E r² + r - L²/2 = 0``, i.e. where ``V_eff = E``.

    Raises
    ------
    ClassicalError
        If ``energy >= 0`` (unbound) or below the minimum of ``V_eff``.
    """
    if not energy < 0:
        raise ClassicalError(f"bound motion needs energy < 0, got {energy}")
    if l_squared < 0:
        raise ClassicalError(f"l_squared must be >= 0, got {l_squared}")
    disc = 1.0 + 2.0 * energy * l_squared
    if disc < -1e-15:
        raise ClassicalError(
            f"no classical region: E={energy} lies below the potential minimum "
            f"{-0.5 / l_squared if l_squared else -math.inf}"
        )
    root = math.sqrt(max(disc, 0.0))
    r_out = (1.0 + root) / (-2.0 * energy)
    # product of roots is -L²/(2E); avoids cancellation in the small root
    r_in = -l_squared / (2.0 * energy * r_out)
    return r_in, r_out


def radial_period(energy: float) -> float:
    """``2π (-2E)^{-3/2}``; independent of ``L`` for the Coulomb problem."""
    if not energy < 0:
        raise ClassicalError("period defined for bound motion only")
    return 2.0 * math.pi * (-2.0 * energy) ** -1.5


@dataclass(frozen=True)
class ClassicalState:
    energy: float
    l_squared: float
    r: float
    radial_direction: str = "outward"

    def __post_init__(self):
        if self.radial_direction not in ("outward", "inward"):
            raise ClassicalError(f"direction must be 'outward' or 'inward', got {self.radial_direction!r}")
        r_in, r_out = turning_points(self.energy, self.l_squared)
        if not (r_in - SLACK <= self.r <= r_out + SLACK):
            raise ClassicalError(
                f"r={self.r} outside the allowed region [{r_in:.6g}, {r_out:.6g}] for E={self.energy}"
            )


def solve_kepler(mean_anomaly, e: float, iterations: int = 60) -> np.ndarray:
    """Eccentric anomaly ``η`` with ``η - e sin η = M`` for ``0 <= e <= 1``.

    Safeguarded Newton iteration on ``M`` reduced to ``[-π, π]``; the root is
    bracketed by ``[M - e, M + e]``.
    """
    m = np.asarray(mean_anomaly, dtype=float)
    turns = np.round(m / (2 * np.pi))
    mr = m - 2 * np.pi * turns
    lo = mr - e
    hi = mr + e
    eta = mr + 0.85 * e * np.sign(np.sin(mr))
    eta = np.clip(eta, lo, hi)
    for _ in range(iterations):
        g = eta - e * np.sin(eta) - mr
        lo = np.where(g < 0, eta, lo)
        hi = np.where(g > 0, eta, hi)
        dg = 1.0 - e * np.cos(eta)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = eta - g / dg
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
        new = np.where(bad, 0.5 * (lo + hi), step)
        if np.all(np.abs(new - eta) <= 1e-15 * np.maximum(1.0, np.abs(eta))):
            eta = new
            break
        eta = new
    return eta + 2 * np.pi * turns


class KeplerOrbit:
    """Radial orbit through a given state; evaluates ``r(t)``, ``v(t)`` in closed form."""

    def __init__(self, state: ClassicalState, t0: float = 0.0):
        self.state = state
        self.t0 = float(t0)
        e_ = state.energy
        self.a = -0.5 / e_
        self.e = math.sqrt(max(1.0 + 2.0 * e_ * state.l_squared, 0.0))
        self.mean_motion = self.a**-1.5
        if self.e > 0:
            c = np.clip((1.0 - state.r / self.a) / self.e, -1.0, 1.0)
            eta0 = float(np.arccos(c))
            if state.radial_direction == "inward" and 0.0 < eta0 < math.pi:
                eta0 = -eta0
        else:
            eta0 = 0.0
        self.m0 = eta0 - self.e * math.sin(eta0)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.mean_motion

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.e == 0.0:
            return np.full(t.shape, self.a), np.zeros(t.shape)
        eta = solve_kepler(self.m0 + self.mean_motion * (t - self.t0), self.e)
        denom = 1.0 - self.e * np.cos(eta)
        r = self.a * denom
        v = self.e * np.sin(eta) / (math.sqrt(self.a) * denom)
        return r, v


def integrate_classical(
    r0: float,
    energy: float,
    l_squared: float = 2.0,
    direction: str = "outward",
    times=None,
    t_range=None,
    samples: int = 501,
) -> Trajectory:
    """Classical radial trajectory from ``r0`` at ``t_range[0]``.

    Either pass explicit increasing ``times`` (the first one is the launch
    time) or ``t_range=(t0, t1)`` with ``samples`` points.
    """
    state = ClassicalState(float(energy), float(l_squared), float(r0), direction)
    if times is None:
        if t_range is None:
            raise ValueError("give times or t_range")
        times = np.linspace(t_range[0], t_range[1], samples)
    times = np.asarray(times, dtype=float)
    if times.size and np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    orbit = KeplerOrbit(state, t0=float(times[0]))
    r, v = orbit(times)
    return Trajectory("classical", times, r, v, float(r0), float(times[0]))
