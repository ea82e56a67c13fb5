"""Vectorized adaptive Dormand-Prince 5(4) integration of scalar ODEs.

Many independent scalar problems ``dy/dt = f(t, y)`` are advanced in one
loop, each member with its own time and step size, so that a stalled
member near a quasi-node never slows the step of the others. Every loop
iteration evaluates the right-hand side once per stage for all members
that are still running.

The right-hand side receives arrays ``(t, y)`` of equal length and returns
``(f, guarded)``: the derivative (non-finite where undefined, which rejects
the step) and a boolean flag that caps the member's step at
``max_step_guarded``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
# fifth-order weights minus embedded fourth-order weights
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

RUNNING = 0
DONE = 1
UNDERFLOW = 2
FAILED = 3

STATUS_NAMES = {RUNNING: "running", DONE: "ok", UNDERFLOW: "step-underflow", FAILED: "failed"}


@dataclass
class StepControl:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = np.inf
    max_step_guarded: float = np.inf
    min_step: float = 1e-6
    underflow_attempts: int = 1000
    safety: float = 0.9
    # PI exponents (Gustafsson); alpha on the current, beta on the previous error
    alpha: float = 0.7 / 5
    beta: float = 0.4 / 5
    max_iterations: int = 10_000_000


@dataclass
class Solution:
    """Dense samples ``y[m, k]`` at ``times[k]`` plus per-member bookkeeping."""

    times: np.ndarray
    y: np.ndarray
    status: np.ndarray
    accepted: np.ndarray
    rejected: np.ndarray
    guarded: np.ndarray
    last_t: np.ndarray
    last_y: np.ndarray


# continuous extension of the pair (Shampine): y(t + θh) = y + h Σ_i k_i P_i(θ),
# with P_i(θ) = Σ_j _P[i, j] θ^(j+1)
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)


def _dense(theta, h, y0, ks):
    """Interpolated state at fraction ``theta`` of a step; ``ks`` has shape (7, n)."""
    powers = theta[None, :] ** np.arange(1, 5)[:, None]  # (4, n)
    weights = _P @ powers  # (7, n)
    return y0 + h * np.sum(ks * weights, axis=0)


def solve(rhs, y0, t0: float, times, control: StepControl | None = None, validate=None) -> Solution:
    """Integrate every member of ``y0`` from ``t0`` through the sorted output ``times``.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y) -> (f, guarded)`` on 1-d arrays.
    y0 : array_like
        Initial values, one per member.
    t0 : float
        Common initial time; ``times`` must satisfy ``t0 <= times[0]``.
    times : array_like
        Increasing output times; the last one is the end of integration.
    validate : callable, optional
        ``validate(y) -> bool array``; accepted states failing it mark the
        member ``FAILED`` (e.g. leaving the grid).
    """
    ctl = control or StepControl()
    y = np.array(y0, dtype=float).reshape(-1)
    times = np.asarray(times, dtype=float).reshape(-1)
    if times.size == 0 or np.any(np.diff(times) <= 0) or times[0] < t0:
        raise ValueError("output times must be strictly increasing and start at or after t0")
    m = y.size
    k_out = times.size
    t_end = float(times[-1])
    out = np.full((m, k_out), np.nan)
    nxt = np.zeros(m, dtype=np.intp)
    at_start = times <= t0
    if at_start.any():
        out[:, at_start] = y[:, None]
        nxt[:] = int(at_start.sum())

    t = np.full(m, float(t0))
    status = np.full(m, RUNNING, dtype=np.int8)
    if t0 >= t_end:
        status[:] = DONE
    f, guard = rhs(t, y)
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        bad = ~np.isfinite(f)
        status[bad] = FAILED
    accepted = np.zeros(m, dtype=np.int64)
    rejected = np.zeros(m, dtype=np.int64)
    guarded = np.zeros(m, dtype=np.int64)
    tiny = np.zeros(m, dtype=np.int64)
    err_prev = np.ones(m)

    # initial step from the local time scale |y| / |f|
    scale = ctl.abs_tol + ctl.rel_tol * np.abs(y)
    d0 = np.abs(y) / scale
    d1 = np.abs(f) / scale
    with np.errstate(divide="ignore", invalid="ignore"):
        h = np.where((d0 > 1e-5) & (d1 > 1e-5), 0.01 * d0 / d1, 1e-3 * max(t_end - t0, 1.0))
    h = np.where(np.isfinite(h), h, ctl.max_step)
    h = np.minimum(h, ctl.max_step)
    h = np.where(np.asarray(guard, dtype=bool), np.minimum(h, ctl.max_step_guarded), h)

    for _ in range(ctl.max_iterations):
        act = np.flatnonzero(status == RUNNING)
        if act.size == 0:
            break
        ta, ya, fa = t[act], y[act], f[act]
        ha = np.minimum(h[act], t_end - ta)
        ks = [fa]
        gflag = np.zeros(act.size, dtype=bool)
        finite = np.ones(act.size, dtype=bool)
        for s in range(1, 7):
            ys = ya + ha * sum(a * k for a, k in zip(_A[s], ks) if a != 0.0)
            ks_s, g_s = rhs(ta + _C[s] * ha, ys)
            ks_s = np.asarray(ks_s, dtype=float)
            finite &= np.isfinite(ks_s)
            gflag |= np.asarray(g_s, dtype=bool)
            ks.append(np.where(np.isfinite(ks_s), ks_s, 0.0))
        y_new = ya + ha * sum(a * k for a, k in zip(_A[6], ks[:6]) if a != 0.0)
        err_vec = ha * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
        sc = ctl.abs_tol + ctl.rel_tol * np.maximum(np.abs(ya), np.abs(y_new))
        err = np.abs(err_vec) / sc
        err = np.where(finite, err, np.inf)

        too_long_for_guard = gflag & (ha > ctl.max_step_guarded * (1 + 1e-12))
        ok = (err <= 1.0) & ~too_long_for_guard

        # step-size update
        with np.errstate(divide="ignore", over="ignore"):
            fac = np.where(
                ok,
                ctl.safety * np.maximum(err, 1e-10) ** -ctl.alpha * err_prev[act] ** ctl.beta,
                ctl.safety * np.maximum(err, 1e-10) ** -(1 / 5),
            )
        fac = np.where(np.isfinite(fac), fac, 0.1)
        fac = np.clip(fac, 0.1, np.where(ok, 5.0, 1.0))
        h_new = ha * fac
        h_new = np.where(too_long_for_guard, np.minimum(h_new, ctl.max_step_guarded), h_new)
        h_new = np.where(gflag, np.minimum(h_new, ctl.max_step_guarded), h_new)
        h_new = np.minimum(h_new, ctl.max_step)

        # bookkeeping of attempts below the minimum step
        small = ha < ctl.min_step
        tiny[act] = np.where(small, tiny[act] + 1, 0)
        guarded[act] += gflag

        acc = act[ok]
        rej = act[~ok]
        rejected[rej] += 1
        h[act] = h_new
        if acc.size:
            o = ok
            t_old, y_old = ta[o], ya[o]
            hh = ha[o]
            t_acc = np.where(t_end - (t_old + hh) <= 1e-12 * max(abs(t_end), 1.0), t_end, t_old + hh)
            y_acc = y_new[o]
            f_acc = ks[6][o]
            # dense output for every requested time in (t_old, t_acc]
            hi = np.searchsorted(times, t_acc, side="right")
            lo = nxt[acc]
            cnt = hi - lo
            if cnt.any():
                sel = np.repeat(np.arange(acc.size), cnt)
                idx = np.concatenate([np.arange(a, b) for a, b in zip(lo[cnt > 0], hi[cnt > 0])])
                theta = (times[idx] - t_old[sel]) / hh[sel]
                kstack = np.stack(ks)[:, o][:, sel]
                out[acc[sel], idx] = _dense(theta, hh[sel], y_old[sel], kstack)
                nxt[acc] = hi
            t[acc] = t_acc
            y[acc] = y_acc
            f[acc] = f_acc
            err_prev[acc] = np.maximum(err[o], 1e-4)
            accepted[acc] += 1
            if validate is not None:
                good = np.asarray(validate(y_acc), dtype=bool)
                status[acc[~good]] = FAILED
            finished = acc[(t_acc >= t_end) & (status[acc] == RUNNING)]
            status[finished] = DONE
        status[act[(tiny[act] >= ctl.underflow_attempts) & (status[act] == RUNNING)]] = UNDERFLOW
    else:
        status[status == RUNNING] = FAILED

    return Solution(times, out, status, accepted, rejected, guarded, t.copy(), y.copy())
