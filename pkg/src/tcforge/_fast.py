"""Compiled integration fast path for parameter sweeps.

Sweeps integrate thousands of small ODE systems for 10^3 time units each;
the scipy stepper's per-step overhead dominates there, so this module
provides a numba-compiled Dormand-Prince 5(4) driver with cubic Hermite
output sampling, specialized to the three right-hand sides used by sweeps
(full 6-vector, symmetric 3-vector, two-phase system).

The precision path (``meanfield.integrate`` and friends) stays on scipy;
tests cross-validate the two on random problems.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Dormand-Prince 5(4) tableau; row s-1 feeds stage s, the last row equals
# the 5th-order weights (FSAL)
_A = np.array([
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                -92097 / 339200, 187 / 2100, 1 / 40])

# parameter vector layout shared by all compiled right-hand sides
P_OMEGA1, P_OMEGA2, P_JXY, P_JZ, P_KAPPA, P_DELTA = range(6)

SQRT2 = np.sqrt(2.0)


@njit(cache=True)
def _rhs_full6(y, pars, out):
    x1, y1, z1, x2, y2, z2 = y[0], y[1], y[2], y[3], y[4], y[5]
    o1, o2, j, jz, k, d = pars[0], pars[1], pars[2], pars[3], pars[4], pars[5]
    s2 = SQRT2
    out[0] = -jz * s2 * y1 * z2 + j * s2 * y2 * z1 - d * y1 + k * s2 * x1 * z1
    out[1] = -j * s2 * z1 * x2 + jz * s2 * x1 * z2 - o1 * z1 + d * x1 + k * s2 * y1 * z1
    out[2] = j * s2 * (y1 * x2 - y2 * x1) + o1 * y1 - k * s2 * (x1 * x1 + y1 * y1)
    out[3] = -jz * s2 * y2 * z1 + j * s2 * y1 * z2 - d * y2 + k * s2 * x2 * z2
    out[4] = -j * s2 * z2 * x1 + jz * s2 * x2 * z1 - o2 * z2 + d * x2 + k * s2 * y2 * z2
    out[5] = j * s2 * (y2 * x1 - y1 * x2) + o2 * y2 - k * s2 * (x2 * x2 + y2 * y2)


@njit(cache=True)
def _rhs_sym3(y, pars, out):
    x, yy, z = y[0], y[1], y[2]
    o, j, jz, k = pars[0], pars[2], pars[3], pars[4]
    s2 = SQRT2
    out[0] = (j - jz) * s2 * yy * z + k * s2 * x * z
    out[1] = (jz - j) * s2 * x * z + k * s2 * yy * z - o * z
    out[2] = -k * s2 * (x * x + yy * yy) + o * yy


@njit(cache=True)
def _rhs_phase2(y, pars, out):
    f1, f2 = y[0], y[1]
    o, j, k = pars[1], pars[2], pars[4]
    out[0] = -j * np.sin(f2) - k * np.sin(f1)
    out[1] = j * np.sin(f1) - k * np.sin(f2) - o


def _make_driver(rhs):
    @njit(cache=True)
    def driver(y0, pars, t0, t1, dt_out, rtol, atol):
        ndim = y0.shape[0]
        n_out = int(np.floor((t1 - t0) / dt_out + 1e-9)) + 1
        ts = t0 + dt_out * np.arange(n_out)
        ys = np.empty((n_out, ndim))
        ys[0] = y0
        k = np.empty((7, ndim))
        y = y0.copy()
        ytmp = np.empty(ndim)
        yerr = np.empty(ndim)
        ynew = np.empty(ndim)
        t = t0
        h = dt_out
        hmin = 1e-13 * (t1 - t0)
        rhs(y, pars, k[0])
        out_idx = 1
        while t < t1:
            if t + h > t1:
                h = t1 - t
            # stages
            for s in range(1, 7):
                for i in range(ndim):
                    acc = 0.0
                    for q in range(s):
                        acc += _A[s - 1][q] * k[q][i]
                    ytmp[i] = y[i] + h * acc
                rhs(ytmp, pars, k[s])
            for i in range(ndim):
                acc5 = 0.0
                acc4 = 0.0
                for q in range(7):
                    acc5 += _B5[q] * k[q][i]
                    acc4 += _B4[q] * k[q][i]
                ynew[i] = y[i] + h * acc5
                yerr[i] = h * (acc5 - acc4)
            # weighted RMS error
            err = 0.0
            for i in range(ndim):
                sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
                e = yerr[i] / sc
                err += e * e
            err = np.sqrt(err / ndim)
            if err <= 1.0:
                # accept: fill output samples in (t, t+h] by cubic Hermite
                tnew = t + h
                # FSAL: k[6] is f(tnew, ynew)
                while out_idx < n_out and ts[out_idx] <= tnew + 1e-12:
                    tau = (ts[out_idx] - t) / h
                    h00 = (1.0 + 2.0 * tau) * (1.0 - tau) ** 2
                    h10 = tau * (1.0 - tau) ** 2
                    h01 = tau * tau * (3.0 - 2.0 * tau)
                    h11 = tau * tau * (tau - 1.0)
                    for i in range(ndim):
                        ys[out_idx][i] = (h00 * y[i] + h10 * h * k[0][i]
                                          + h01 * ynew[i] + h11 * h * k[6][i])
                    out_idx += 1
                t = tnew
                for i in range(ndim):
                    y[i] = ynew[i]
                    k[0][i] = k[6][i]
                fac = 1.25 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                h = h * fac
            else:
                h = h * max(0.2, 0.9 * err ** -0.2)
            if h < hmin:
                return ts, ys, t  # failure: report time reached
        return ts, ys, t1
    return driver


_drive_full6 = _make_driver(_rhs_full6)
_drive_sym3 = _make_driver(_rhs_sym3)
_drive_phase2 = _make_driver(_rhs_phase2)

_DRIVERS = {"full6": (_drive_full6, 6), "sym3": (_drive_sym3, 3),
            "phase2": (_drive_phase2, 2)}


def pack_params(p) -> np.ndarray:
    """ModelParams -> compiled parameter vector."""
    return np.array([p.omega1, p.omega2, p.j_xy, p.j_z, p.kappa, p.delta])


def integrate_fast(kind: str, y0, p, t0: float, t1: float, dt_out: float,
                   rtol: float = 1e-8, atol: float = 1e-10):
    """Adaptive DP54 integration of one of the sweep systems.

    kind: "full6" | "sym3" | "phase2".  Returns (times, samples); raises on
    step-size underflow with the failure time.
    """
    driver, ndim = _DRIVERS[kind]
    y0 = np.asarray(y0, float)
    if y0.shape != (ndim,):
        raise ValueError(f"{kind} expects y0 of shape ({ndim},)")
    pars = pack_params(p) if not isinstance(p, np.ndarray) else p
    ts, ys, t_end = driver(y0, pars, float(t0), float(t1), float(dt_out),
                           float(rtol), float(atol))
    if t_end < t1:
        from .meanfield import IntegrationError
        raise IntegrationError(f"fast integration step underflow at t={t_end:.6g}")
    return ts, ys


def warmup():
    """Trigger numba compilation of all drivers (cheap after first run)."""
    for kind, (_, ndim) in _DRIVERS.items():
        integrate_fast(kind, np.zeros(ndim), np.array([1.0, 1.0, 0.0, 0.0, 1.0, 0.0]),
                       0.0, 0.1, 0.05)
