import numpy as np
import pytest
from scipy.integrate import solve_ivp

from rydberg_bohm import integrator
from rydberg_bohm.integrator import DONE, FAILED, UNDERFLOW, StepControl, solve


def unguarded(f):
    def rhs(t, y):
        return f(t, y), np.zeros(y.shape, dtype=bool)

    return rhs


def test_exponential_decay_dense_output():
    times = np.linspace(0.0, 5.0, 301)
    ctl = StepControl(rel_tol=1e-10, abs_tol=1e-14)
    for k in (0.5, 1.0, 3.0):
        sol = solve(unguarded(lambda t, y, k=k: -k * y), [1.0], 0.0, times, ctl)
        assert sol.status[0] == DONE
        assert np.max(np.abs(sol.y[0] - np.exp(-k * times))) < 1e-8


def test_members_do_not_interact():
    """A stiff-ish member must not change the trajectory of a smooth one."""
    times = np.linspace(0.0, 10.0, 51)
    f = unguarded(lambda t, y: np.cos(t) * np.ones_like(y) + 0.0 * y)
    alone = solve(f, [0.0], 0.0, times)
    g = unguarded(lambda t, y: np.where(y > 50, -200.0 * (y - 100.0), np.cos(t)))
    both = solve(g, [0.0, 100.0], 0.0, times)
    assert np.array_equal(alone.y[0], both.y[0])
    assert np.max(np.abs(alone.y[0] - np.sin(times))) < 1e-7


def test_against_scipy_reference():
    def f(t, y):
        return y * np.cos(t) - 0.1 * y**2

    times = np.linspace(0.0, 20.0, 201)
    y0 = np.array([0.5, 1.0, 2.0])
    sol = solve(unguarded(f), y0, 0.0, times, StepControl(rel_tol=1e-10, abs_tol=1e-13))
    ref = solve_ivp(f, (0, 20), y0, method="DOP853", t_eval=times, rtol=1e-13, atol=1e-15)
    assert np.all(sol.status == DONE)
    assert np.max(np.abs(sol.y - ref.y)) < 1e-7


def test_output_times_after_start():
    sol = solve(unguarded(lambda t, y: np.ones_like(y)), [0.0], 1.0, [1.0, 2.0, 3.5])
    assert np.allclose(sol.y[0], [0.0, 1.0, 2.5])


def test_invalid_output_times():
    f = unguarded(lambda t, y: y)
    with pytest.raises(ValueError):
        solve(f, [1.0], 0.0, [1.0, 0.5])
    with pytest.raises(ValueError):
        solve(f, [1.0], 1.0, [0.5, 2.0])
    with pytest.raises(ValueError):
        solve(f, [1.0], 0.0, [])


def test_step_underflow_reported_with_last_state():
    # derivative undefined beyond t = 0.5: every step across it is rejected
    def f(t, y):
        return np.where(t > 0.5, np.nan, 1.0), np.zeros(y.shape, bool)

    sol = solve(f, [0.0], 0.0, np.linspace(0, 1, 11))
    assert sol.status[0] == UNDERFLOW
    assert integrator.STATUS_NAMES[UNDERFLOW] == "step-underflow"
    assert sol.last_t[0] == pytest.approx(0.5, abs=1e-5)
    assert sol.last_y[0] == pytest.approx(sol.last_t[0], abs=1e-9)
    assert np.all(np.isfinite(sol.y[0, :6])) and np.all(np.isnan(sol.y[0, 6:]))


def test_validate_marks_failure():
    f = unguarded(lambda t, y: np.ones_like(y))
    sol = solve(f, [0.0, -10.0], 0.0, np.linspace(0, 5, 6), validate=lambda y: y < 2.0)
    assert sol.status[0] == FAILED
    assert sol.status[1] == DONE
    assert sol.last_y[0] >= 2.0


def test_guarded_step_cap():
    def f(t, y):
        return np.ones_like(y), np.ones(y.shape, dtype=bool)

    ctl = StepControl(max_step_guarded=0.01)
    sol = solve(f, [0.0], 0.0, [1.0], ctl)
    assert sol.status[0] == DONE
    assert sol.accepted[0] >= 100
    assert sol.guarded[0] > 0


def test_max_step_respected():
    sol = solve(unguarded(lambda t, y: 0.0 * y), [1.0], 0.0, [100.0], StepControl(max_step=1.0))
    assert sol.accepted[0] >= 100


def test_deterministic():
    f = unguarded(lambda t, y: np.sin(y) + np.cos(3 * t))
    times = np.linspace(0, 10, 101)
    a = solve(f, [0.1, 0.2, 0.3], 0.0, times)
    b = solve(f, [0.1, 0.2, 0.3], 0.0, times)
    assert np.array_equal(a.y, b.y)
