import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydberg_bohm.basis import build_basis
from rydberg_bohm.grid import build_grid
from rydberg_bohm.packet import (
    BasisMismatch,
    PulseModel,
    Wavefield,
    au_to_ps,
    autocorrelation,
    classical_period,
    fourier_limited_tau,
    gaussian_coefficients,
    revival_time,
    single_state,
    snapshot_density,
    synthesize_field,
    turn_on_factor,
)


def test_classical_period_and_units():
    assert classical_period(40) == pytest.approx(2 * math.pi * 64000)
    assert au_to_ps(classical_period(40)) == pytest.approx(9.7269, rel=1e-4)
    t_cl, half, full = revival_time(40)
    assert full == pytest.approx(80 / 3 * t_cl)
    assert half == pytest.approx(full / 2)
    with pytest.raises(ValueError):
        classical_period(0)


def test_coefficient_windows_and_normalization():
    a = gaussian_coefficients(40, 0.75)
    b = gaussian_coefficients(40, 1.5)
    assert a.window == (36, 44)
    assert b.window == (31, 49)
    for c in (a, b):
        assert np.sum(c.probabilities) == pytest.approx(1.0, abs=1e-15)
        assert c.ns[np.argmax(c.amplitudes)] == 40
        # decreasing away from the centre: the exponent carries a minus sign
        mid = list(c.ns).index(40)
        assert np.all(np.diff(c.amplitudes[mid:]) < 0)
        assert np.all(np.diff(c.amplitudes[: mid + 1]) > 0)


def test_dipole_weights():
    u = gaussian_coefficients(40, 1.5)
    d = gaussian_coefficients(40, 1.5, "dipole")
    ratio = d.amplitudes / u.amplitudes
    expected = u.ns.astype(float) ** -1.5
    assert np.allclose(ratio / ratio[0], expected / expected[0], rtol=1e-12)


@pytest.mark.parametrize(
    "args", [(40, 0.0), (40, -1.0), (1, 1.0), (40.5, 1.0)]
)
def test_invalid_coefficients(args):
    with pytest.raises(ValueError):
        gaussian_coefficients(*args)


def test_unknown_weight_mode():
    with pytest.raises(ValueError):
        gaussian_coefficients(40, 1.0, "flat")


def test_autocorrelation_basic_properties(coeffs_b, t_cl):
    t = np.linspace(0, 3 * t_cl, 4001)
    c = autocorrelation(coeffs_b, t)
    assert c[0] == pytest.approx(1.0)
    assert np.all(np.abs(c) <= 1 + 1e-12)
    # C(-t) = conj C(t)
    assert np.allclose(autocorrelation(coeffs_b, -t), np.conj(c))


def test_autocorrelation_against_grid_projection(wf_b, coeffs_b, grid, t_cl):
    """``<ψ(0)|ψ(t)>`` by quadrature of the synthesized field equals the spectral sum."""
    psi0 = wf_b.on_grid(0.0)
    for t in (0.1 * t_cl, 0.5 * t_cl, 1.01 * t_cl, 7.3 * t_cl):
        proj = grid.integrate(np.conj(psi0) * wf_b.on_grid(t))
        assert abs(proj - autocorrelation(coeffs_b, t)) < 1e-8


@settings(max_examples=12, deadline=None)
@given(st.floats(min_value=0.0, max_value=20.0))
def test_norm_conserved(wf_b, t_cl, frac):
    assert wf_b.snapshot(frac * t_cl).total_norm == pytest.approx(1.0, abs=1e-8)


def test_field_matches_node_samples(wf_b, grid, t_cl):
    t = 0.3 * t_cl
    psi, _ = wf_b(grid.nodes[100:20000:97], t)
    assert np.allclose(psi, wf_b.on_grid(t)[100:20000:97], rtol=0, atol=1e-14)


def test_field_derivative_against_differences(wf_b, t_cl):
    r = np.linspace(50.0, 3000.0, 41)
    t = 0.27 * t_cl
    h = 1e-3
    _, d = wf_b(r, t)
    fp, _ = wf_b(r + h, t)
    fm, _ = wf_b(r - h, t)
    assert np.max(np.abs(d - (fp - fm) / (2 * h))) < 1e-7


def test_expectation_r_two_ways(wf_b, t_cl):
    ts = np.array([0.0, 0.2, 0.5, 0.9]) * t_cl
    via_matrix = wf_b.expectation_r(ts)
    via_grid = [wf_b.snapshot(t).expectation_r for t in ts]
    assert np.allclose(via_matrix, via_grid, rtol=1e-8)


@pytest.mark.parametrize("case", ["wf_a", "wf_b"])
def test_expectation_r_peaks_near_half_period(case, request, t_cl):
    wf = request.getfixturevalue(case)
    ts = np.linspace(0, t_cl, 2001)
    k = np.argmax(wf.expectation_r(ts))
    assert abs(ts[k] / t_cl - 0.5) < 0.05


def test_localization_at_half_period(wf_b, t_cl):
    snap = wf_b.snapshot(0.5 * t_cl)
    assert snap.mass_beyond(1600.0) > 0.99
    assert snap.expectation_r > 3000
    start = wf_b.snapshot(0.0)
    assert start.mass_beyond(1600.0) < 0.5


def test_global_phase_leaves_density_unchanged(coeffs_b, basis, t_cl):
    a = Wavefield(coeffs_b, basis).snapshot(0.21 * t_cl)
    b = Wavefield(coeffs_b.with_phase(np.exp(0.7j)), basis).snapshot(0.21 * t_cl)
    assert np.allclose(a.rho2, b.rho2, rtol=1e-13, atol=1e-20)
    assert a.overlap(b) == pytest.approx(1.0)


def test_single_state_is_stationary(basis, t_cl):
    wf = Wavefield(single_state(40), basis)
    a = wf.snapshot(0.0).rho2
    b = wf.snapshot(0.37 * t_cl).rho2
    assert np.allclose(a, b, rtol=1e-10, atol=1e-20)


def test_basis_mismatch(coeffs_b):
    g = build_grid(7203.0, 6000)
    small = build_basis([40], 1, g)
    with pytest.raises(BasisMismatch):
        Wavefield(coeffs_b, small)
    with pytest.raises(BasisMismatch):
        Wavefield(single_state(40), small, PulseModel(1e5, "turn-on"))


def test_snapshot_density_wrapper(coeffs_b, basis, grid, t_cl):
    s = snapshot_density(coeffs_b, basis, None, grid, 0.5 * t_cl)
    assert s.mass_beyond(1600.0) > 0.99
    with pytest.raises(ValueError):
        snapshot_density(coeffs_b, basis, None, build_grid(100.0, 1000), 0.0)
    psi, _ = synthesize_field(coeffs_b, basis, None, [100.0, 200.0], 0.0)
    assert psi.shape == (2,)


def test_turn_on_factor():
    pulse = PulseModel(fourier_limited_tau(40, 1.5), "turn-on")
    t = np.linspace(-5, 5, 101) * pulse.tau_p
    zeta, chi = turn_on_factor(t, pulse)
    assert np.allclose(zeta**2 + chi**2, 1.0)
    assert zeta[0] < 1e-12 and zeta[-1] == pytest.approx(1.0)
    assert turn_on_factor(0.0, pulse)[0] == pytest.approx(0.5)
    assert np.all(np.diff(zeta) >= 0)


def test_pulse_validation():
    with pytest.raises(ValueError):
        PulseModel(0.0, "turn-on")
    with pytest.raises(ValueError):
        PulseModel(1.0, "chirped")
    with pytest.raises(ValueError):
        turn_on_factor(0.0, PulseModel())


def test_turn_on_field_approaches_packet(grid, coeffs_b):
    b = build_basis(coeffs_b.ns, 1, grid, include_ground=True)
    pulse = PulseModel(fourier_limited_tau(40, 1.5), "turn-on")
    on = Wavefield(coeffs_b, b, pulse)
    post = Wavefield(coeffs_b, b)
    late = 8 * pulse.tau_p
    assert np.allclose(on.on_grid(late), post.on_grid(late), atol=1e-12)
    early = -8 * pulse.tau_p
    # before the pulse only the ground state is populated
    assert np.allclose(np.abs(on.on_grid(early)), np.abs(b[(1, 0)].samples), atol=1e-12)


def test_snapshots_are_read_only(wf_b):
    s = wf_b.snapshot(0.0)
    with pytest.raises(ValueError):
        s.rho2[0] = 1.0
