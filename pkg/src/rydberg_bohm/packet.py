"""Gaussian radial wavepackets: coefficients, field synthesis, autocorrelation.

After the pulse the radial state is the superposition::

    psi(r, t) = sum_n c_n exp(-i E_n t) u_n(r)

with Gaussian amplitudes ``c_n ∝ w_n exp(-(n - n0)² / (2 Δn²))``. In
``turn-on`` mode the excited part is scaled by a smooth switch ``ζ(t)``
and the depleted ground state ``χ(t) u_1s`` is added, both treated
radially only (the angular structure of the 1s/p mixture is neglected).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .basis import Basis, evaluate_table
from .grid import RadialGrid

AU_TIME_S = 2.418884e-17
"""One atomic unit of time in seconds."""

WINDOW_THRESHOLD = 1e-8
"""Smallest Gaussian factor ``exp(-(n-n0)²/2Δn²)`` kept in a coefficient window."""

WEIGHT_MODES = ("uniform", "dipole")
PULSE_MODES = ("post-pulse", "turn-on")


class BasisMismatch(KeyError):
    """A coefficient refers to an ``n`` with no eigenstate in the basis."""


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """Real, normalized excitation amplitudes over an inclusive window of ``n``."""

    n0: int
    delta_n: float
    l: int
    weight_mode: str
    ns: np.ndarray = field(repr=False)
    amplitudes: np.ndarray = field(repr=False)

    @property
    def window(self) -> tuple[int, int]:
        return int(self.ns[0]), int(self.ns[-1])

    @property
    def energies(self) -> np.ndarray:
        return -0.5 / self.ns.astype(float) ** 2

    @property
    def probabilities(self) -> np.ndarray:
        return self.amplitudes**2

    def with_phase(self, phase: complex) -> "CoefficientSet":
        """Same set with every amplitude multiplied by ``phase``."""
        return CoefficientSet(
            self.n0, self.delta_n, self.l, self.weight_mode, self.ns, self.amplitudes * phase
        )


def gaussian_coefficients(
    n0: int, delta_n: float, weight_mode: str = "uniform", l: int = 1
) -> CoefficientSet:
    """Gaussian distribution of amplitudes centred on ``n0``.

    The window holds every ``n >= l + 1`` whose Gaussian factor is at least
    :data:`WINDOW_THRESHOLD`; ``weight_mode="dipole"`` multiplies by the
    Rydberg dipole scaling ``n^(-3/2)``.
    """
    if not delta_n > 0:
        raise ValueError(f"delta_n must be positive, got {delta_n!r}")
    if n0 < 2 or int(n0) != n0:
        raise ValueError(f"n0 must be an integer >= 2, got {n0!r}")
    if weight_mode not in WEIGHT_MODES:
        raise ValueError(f"unknown weight_mode {weight_mode!r}; expected one of {WEIGHT_MODES}")
    if n0 < l + 1:
        raise ValueError(f"n0={n0} below the lowest allowed n={l + 1} for l={l}")
    half = int(math.floor(delta_n * math.sqrt(-2.0 * math.log(WINDOW_THRESHOLD))))
    ns = np.arange(max(l + 1, n0 - half), n0 + half + 1)
    gauss = np.exp(-((ns - n0) ** 2) / (2.0 * delta_n**2))
    keep = gauss >= WINDOW_THRESHOLD
    ns, gauss = ns[keep], gauss[keep]
    if weight_mode == "dipole":
        gauss = gauss * ns.astype(float) ** -1.5
    amps = gauss / math.sqrt(float(np.sum(gauss**2)))
    for a in (ns, amps):
        a.setflags(write=False)
    return CoefficientSet(int(n0), float(delta_n), int(l), weight_mode, ns, amps)


def single_state(n: int, l: int = 1) -> CoefficientSet:
    """Coefficient set holding one eigenstate with unit amplitude."""
    ns = np.array([n])
    amps = np.array([1.0])
    return CoefficientSet(int(n), 1.0, int(l), "uniform", ns, amps)


def classical_period(n0) -> float:
    """Radial Kepler period ``2π n0³`` at ``E_0 = -1/(2 n0²)`` (au of time)."""
    if n0 < 1:
        raise ValueError(f"n0 must be >= 1, got {n0}")
    return 2.0 * math.pi * float(n0) ** 3


def au_to_ps(t_au: float) -> float:
    return t_au * AU_TIME_S * 1e12


def revival_time(n0: int) -> tuple[float, float, float]:
    """``(T_cl, half revival, full revival)`` in au.

    From the second-order expansion of ``E_n`` about ``n0`` the full
    revival is at ``(2 n0 / 3) T_cl``.
    """
    if n0 < 2:
        raise ValueError(f"n0 must be >= 2, got {n0}")
    t_cl = classical_period(n0)
    full = 2.0 * n0 / 3.0 * t_cl
    return t_cl, 0.5 * full, full


@dataclass(frozen=True)
class PulseModel:
    """Excitation pulse. ``tau_p`` is only used in ``turn-on`` mode."""

    tau_p: float = 0.0
    mode: str = "post-pulse"

    def __post_init__(self):
        if self.mode not in PULSE_MODES:
            raise ValueError(f"unknown pulse mode {self.mode!r}; expected one of {PULSE_MODES}")
        if self.mode == "turn-on" and not self.tau_p > 0:
            raise ValueError("turn-on mode needs tau_p > 0")


def fourier_limited_tau(n0: int, delta_n: float) -> float:
    """Pulse duration whose Gaussian spectrum has width ``Δn`` in ``n``.

    The energy width is ``Δn / n0³``; a Gaussian envelope of standard
    deviation ``n0³ / Δn`` has that spectral width, and ``tau_p`` is twice
    that standard deviation in the convention of :func:`turn_on_factor`.
    """
    return 2.0 * float(n0) ** 3 / delta_n


def turn_on_factor(t, pulse: PulseModel):
    """Switch-on ``ζ(t) = (1 + erf(√2 t / τ_P)) / 2`` and depletion ``χ = sqrt(1 - ζ²)``."""
    if pulse.mode != "turn-on":
        raise ValueError("turn_on_factor requires a turn-on pulse")
    t = np.asarray(t, dtype=float)
    zeta = 0.5 * (1.0 + erf(t * math.sqrt(2.0) / pulse.tau_p))
    chi = np.sqrt(np.clip(1.0 - zeta * zeta, 0.0, 1.0))
    if t.ndim == 0:
        return float(zeta), float(chi)
    return zeta, chi


class Wavefield:
    """``ψ(r, t)`` and ``∂ψ/∂r`` synthesized from a coefficient set and a basis.

    Parameters
    ----------
    coeffs : CoefficientSet
    basis : Basis
        Must contain ``(n, coeffs.l)`` for every ``n`` in the window, and the
        1s state in turn-on mode.
    pulse : PulseModel, optional
        Post-pulse mode if omitted.
    """

    def __init__(self, coeffs: CoefficientSet, basis: Basis, pulse: PulseModel | None = None):
        self.coeffs = coeffs
        self.basis = basis
        self.pulse = pulse or PulseModel()
        keys = [(int(n), coeffs.l) for n in coeffs.ns]
        for key in keys:
            if key not in basis:
                raise BasisMismatch(f"no eigenstate for n={key[0]}, l={key[1]} in basis")
        if self.pulse.mode == "turn-on":
            if (1, 0) not in basis:
                raise BasisMismatch("turn-on mode needs the 1s state (n=1, l=0) in basis")
            keys = keys + [(1, 0)]
        self._rows = basis.rows(keys)
        self._table = basis.table(self._rows)
        self._amps = np.asarray(coeffs.amplitudes, dtype=complex)
        self._energies = np.array([basis[k].energy for k in keys])
        self.grid: RadialGrid = basis.grid
        samples = np.stack([basis[k].samples for k in keys[: len(coeffs.ns)]])
        # time-averaged density; reference scale for the node guard
        incoherent = np.abs(self._amps[:, None]) ** 2 * samples**2
        self.reference_density = float(incoherent.sum(axis=0).max())
        self._samples = samples

    @property
    def ns(self):
        return self.coeffs.ns

    def time_amplitudes(self, t):
        """Expansion amplitudes at time(s) ``t``, shape ``(*t.shape, S)``."""
        t = np.asarray(t, dtype=float)
        a = np.exp(-1j * t[..., None] * self._energies)
        m = len(self.coeffs.ns)
        a[..., :m] *= self._amps
        if self.pulse.mode == "turn-on":
            zeta, chi = turn_on_factor(t, self.pulse)
            a[..., :m] *= np.asarray(zeta)[..., None]
            a[..., m] *= chi
        return a

    def __call__(self, r, t):
        """``(psi, dpsi_dr)`` at broadcastable ``r`` and ``t``."""
        r, t = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
        val, der = evaluate_table(self.grid, self._table, r)
        a = self.time_amplitudes(t)
        psi = np.einsum("...s,...s->...", a, val)
        dpsi = np.einsum("...s,...s->...", a, der)
        return psi, dpsi

    def on_grid(self, t: float) -> np.ndarray:
        """``ψ`` at every grid node at time ``t`` (exact node samples)."""
        a = self.time_amplitudes(float(t))
        rows = [self.basis[k].samples for k in self._keys()]
        return a @ np.stack(rows)

    def snapshot(self, t: float) -> WavefieldSnapshot:
        """Grid-sampled field, density, norm and ``<r>`` at time ``t``."""
        g = self.grid
        psi = self.on_grid(t)
        rho2 = np.abs(psi) ** 2
        norm = g.integrate(rho2)
        mean_r = g.integrate(g.nodes * rho2) / norm
        for a in (psi, rho2):
            a.setflags(write=False)
        return WavefieldSnapshot(float(t), g, psi, rho2, float(mean_r), float(norm))

    def _keys(self):
        keys = [(int(n), self.coeffs.l) for n in self.coeffs.ns]
        return keys + [(1, 0)] if self.pulse.mode == "turn-on" else keys

    def position_matrix(self) -> np.ndarray:
        """Matrix ``<u_n | r | u_n'>`` over the window (post-pulse part)."""
        g = self.grid
        s = self._samples
        return (s * (g.weights * g.nodes)) @ s.T

    def expectation_r(self, times) -> np.ndarray:
        """``<r>(t)`` for the post-pulse packet at each time, via the position matrix."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        m = len(self.coeffs.ns)
        a = self._amps[:, None] * np.exp(-1j * self._energies[:m, None] * times[None, :])
        mat = self.position_matrix()
        return np.real(np.einsum("it,ij,jt->t", a.conj(), mat, a))


def synthesize_field(coeffs, basis, pulse, r, t):
    """``(psi, dpsi_dr)`` at ``(r, t)``; thin functional wrapper over :class:`Wavefield`."""
    return Wavefield(coeffs, basis, pulse)(r, t)


def autocorrelation(coeffs: CoefficientSet, times) -> np.ndarray:
    """``C(t) = Σ |c_n|² exp(-i E_n t)`` for each time."""
    times = np.asarray(times, dtype=float)
    p = np.abs(np.asarray(coeffs.amplitudes)) ** 2
    e = coeffs.energies
    flat = times.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    # chunked to bound the (times x states) temporary
    step = 65536
    for i in range(0, flat.size, step):
        out[i : i + step] = np.exp(-1j * np.outer(flat[i : i + step], e)) @ p
    return out.reshape(times.shape)


@dataclass(frozen=True, eq=False)
class WavefieldSnapshot:
    """Grid-sampled field at one time."""

    t: float
    grid: RadialGrid = field(repr=False)
    psi: np.ndarray = field(repr=False)
    rho2: np.ndarray = field(repr=False)
    expectation_r: float
    total_norm: float

    def mass_beyond(self, r_cut: float) -> float:
        """Probability ``∫_{r_cut}^{r_max} |ψ|² dr``."""
        cdf = self.cdf()
        inside = np.interp(r_cut, self.grid.nodes, cdf, left=0.0)
        return float(self.total_norm - inside * self.total_norm)

    def cdf(self) -> np.ndarray:
        """Normalized cumulative distribution at the nodes (trapezoid)."""
        c = self.grid.cumulative(self.rho2)
        return c / c[-1]

    def overlap(self, other: "WavefieldSnapshot") -> float:
        """``∫ ρ²_self ρ²_other dr / ∫ ρ²_self² dr``."""
        g = self.grid
        return g.integrate(self.rho2 * other.rho2) / g.integrate(self.rho2**2)


def snapshot_density(coeffs, basis, pulse, grid, t) -> WavefieldSnapshot:
    """Sample the field on ``grid`` at time ``t``.

    ``grid`` must be the basis grid; node values are then exact sums of the
    stored eigenstate samples.
    """
    if grid != basis.grid:
        raise ValueError("snapshot grid must match the basis grid")
    return Wavefield(coeffs, basis, pulse).snapshot(t)
