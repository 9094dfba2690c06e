"""Explicit adaptive ODE integration with dense sampling.

Dormand-Prince 5(4) embedded pair (the ode45 family) with PI stepsize
control and FSAL, plus a fixed-step classic RK4.  Sampling uses cubic
Hermite interpolation on accepted steps (fourth-order accurate), so the
sample grid never perturbs step selection.  Everything is deterministic:
identical inputs give bit-identical trajectories.

The per-step linear algebra (stage combinations, error norm) runs through a
small numba-compiled kernel when numba is importable, falling back to
numpy otherwise; wall-clock comparisons between runs are meaningful either
way because both sides of a comparison share one kernel.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "IntegrationError",
    "StiffnessError",
    "DivergenceError",
    "integrate",
]


class IntegrationError(RuntimeError):
    pass


class StiffnessError(IntegrationError):
    """Step size underflow; carries the worst-error component index."""

    def __init__(self, msg, t=None, component=None):
        super().__init__(msg)
        self.t = t
        self.component = component


class DivergenceError(IntegrationError):
    """Non-finite state; carries the last good time."""

    def __init__(self, msg, t_last=None):
        super().__init__(msg)
        self.t_last = t_last


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-8
    atol: float = 1e-10
    h_init: float = 1e-4
    h_max: float = 1e-3
    method: str = "rk45_adaptive"

    def __post_init__(self):
        if not self.atol > 0.0:
            raise ValueError("atol must be positive")
        if not 0.0 < self.rtol < 1.0:
            raise ValueError("rtol must lie in (0, 1)")
        if not 0.0 < self.h_init <= self.h_max:
            raise ValueError("need 0 < h_init <= h_max")
        if self.method not in ("rk45_adaptive", "rk4_fixed"):
            raise ValueError(f"unknown method {self.method!r}")


@dataclass
class Trajectory:
    """Sampled record of one integration.

    ``states`` has one row per sample time.  ``outputs`` (one row of model
    outputs per sample) is attached by the simulation layer, not here.
    ``meta`` carries step/evaluation counts and wall-clock nanoseconds.
    """

    times: np.ndarray
    states: np.ndarray
    outputs: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("sample times must be strictly increasing")


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = [
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
]
# difference between the 5th-order weights and the embedded 4th-order ones
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

_H_FLOOR = 1e-14
_MAX_STEPS = 50_000_000

_KERNELS = None


def _numpy_kernels():
    A = [np.array(row) for row in _A]
    E = np.array(_E)

    def stage(K, y, h, i, out):
        np.dot(A[i], K[:i], out=out)
        out *= h
        out += y

    def err_norm(K, y0, y1, h, atol, rtol):
        # componentwise bound: the accepted step satisfies
        # |e_i| <= atol + rtol*|x_i| for every component
        ev = h * np.dot(E, K)
        sc = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
        q = np.abs(ev) / sc
        j = int(np.argmax(q))
        return float(q[j]), j

    return stage, err_norm


def _numba_kernels():
    from numba import njit

    a21, = _A[1]
    a31, a32 = _A[2]
    a41, a42, a43 = _A[3]
    a51, a52, a53, a54 = _A[4]
    a61, a62, a63, a64, a65 = _A[5]
    a71, _z, a73, a74, a75, a76 = _A[6]
    e1, _z2, e3, e4, e5, e6, e7 = _E

    @njit(cache=True, fastmath=False)
    def stage(K, y, h, i, out):
        n = y.shape[0]
        if i == 1:
            for j in range(n):
                out[j] = y[j] + h * (a21 * K[0, j])
        elif i == 2:
            for j in range(n):
                out[j] = y[j] + h * (a31 * K[0, j] + a32 * K[1, j])
        elif i == 3:
            for j in range(n):
                out[j] = y[j] + h * (a41 * K[0, j] + a42 * K[1, j] + a43 * K[2, j])
        elif i == 4:
            for j in range(n):
                out[j] = y[j] + h * (a51 * K[0, j] + a52 * K[1, j] + a53 * K[2, j] + a54 * K[3, j])
        elif i == 5:
            for j in range(n):
                out[j] = y[j] + h * (a61 * K[0, j] + a62 * K[1, j] + a63 * K[2, j]
                                     + a64 * K[3, j] + a65 * K[4, j])
        else:
            for j in range(n):
                out[j] = y[j] + h * (a71 * K[0, j] + a73 * K[2, j] + a74 * K[3, j]
                                     + a75 * K[4, j] + a76 * K[5, j])

    @njit(cache=True, fastmath=False)
    def err_norm(K, y0, y1, h, atol, rtol):
        # componentwise bound: the accepted step satisfies
        # |e_i| <= atol + rtol*|x_i| for every component
        n = y0.shape[0]
        worst = 0.0
        wj = 0
        for j in range(n):
            ev = h * (e1 * K[0, j] + e3 * K[2, j] + e4 * K[3, j]
                      + e5 * K[4, j] + e6 * K[5, j] + e7 * K[6, j])
            a0 = abs(y0[j])
            a1 = abs(y1[j])
            sc = atol + rtol * (a0 if a0 > a1 else a1)
            q = abs(ev) / sc
            if q != q:  # NaN must poison the estimate, not vanish in the max
                return q, j
            if q > worst:
                worst = q
                wj = j
        return worst, wj

    # trigger compilation once so run timings never include it
    _k = np.zeros((7, 2))
    _y = np.zeros(2)
    stage(_k, _y, 1e-3, 1, np.zeros(2))
    err_norm(_k, _y, _y, 1e-3, 1e-10, 1e-8)
    return stage, err_norm


def _get_kernels():
    global _KERNELS
    if _KERNELS is None:
        try:
            _KERNELS = _numba_kernels()
        except Exception:
            _KERNELS = _numpy_kernels()
    return _KERNELS


def _hermite(t, t0, h, y0, y1, f0, f1):
    th = (t - t0) / h
    th2 = th * th
    th3 = th2 * th
    h00 = 2.0 * th3 - 3.0 * th2 + 1.0
    h10 = th3 - 2.0 * th2 + th
    h01 = -2.0 * th3 + 3.0 * th2
    h11 = th3 - th2
    return h00 * y0 + (h10 * h) * f0 + h01 * y1 + (h11 * h) * f1


def _sample_grid(t0, t1, sample_dt):
    k = int(np.floor((t1 - t0) / sample_dt + 1e-9))
    return t0 + sample_dt * np.arange(k + 1)


def integrate(
    f: Callable[[float, np.ndarray], np.ndarray],
    x0,
    t0: float,
    t1: float,
    cfg: IntegratorConfig,
    sample_dt: float,
    sample_times: Optional[np.ndarray] = None,
) -> Trajectory:
    """Integrate ``x' = f(t, x)`` over [t0, t1], sampling at t0 + k*sample_dt.

    ``sample_times`` overrides the implied grid (used when stitching
    segments onto a shared global grid).  Raises ``StiffnessError`` on step
    underflow and ``DivergenceError`` on non-finite states.
    """
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    y = np.array(x0, dtype=float)
    if not np.all(np.isfinite(f(t0, y))):
        raise DivergenceError("vector field non-finite at the initial state", t_last=t0)

    if sample_times is None:
        sample_times = _sample_grid(t0, t1, sample_dt)
    else:
        sample_times = np.asarray(sample_times, dtype=float)

    _get_kernels()  # kernel compilation must stay out of the run timing
    wall0 = time.perf_counter_ns()
    if cfg.method == "rk4_fixed":
        traj = _run_rk4(f, y, t0, t1, cfg, sample_times)
    else:
        traj = _run_dopri(f, y, t0, t1, cfg, sample_times)
    traj.meta["wall_ns"] = time.perf_counter_ns() - wall0
    traj.meta["method"] = cfg.method
    return traj


def _run_dopri(f, y, t0, t1, cfg, sample_times):
    stage, err_norm = _get_kernels()
    atol, rtol = cfg.atol, cfg.rtol
    t = t0
    h = min(cfg.h_init, cfg.h_max, t1 - t0)
    n = y.size
    K = np.empty((7, n))
    K[0] = f(t, y)
    nfev = 1
    nsteps = 0
    nrej = 0
    err_prev = 1.0
    worst_j = 0
    yi = np.empty(n)   # scratch for stage arguments
    y1 = np.empty(n)   # step-end candidate; swapped with y on accept

    out = np.empty((len(sample_times), n))
    si = 0
    if si < len(sample_times) and sample_times[si] <= t0 + 1e-15 * max(1.0, abs(t0)):
        out[si] = y
        si += 1

    t_eps = 1e-14 * max(1.0, abs(t1))
    while t < t1 - t_eps:
        h = min(h, cfg.h_max, t1 - t)
        if h < _H_FLOOR:
            raise StiffnessError(
                f"step size underflow at t={t:.6g} (worst local error in component {worst_j}); "
                "the problem is too stiff for the explicit method",
                t=t, component=worst_j,
            )

        for i in range(1, 6):
            stage(K, y, h, i, yi)
            K[i] = f(t + _C[i] * h, yi)
        stage(K, y, h, 6, y1)  # 5th-order step end
        K[6] = f(t + h, y1)
        nfev += 6
        err, worst_j = err_norm(K, y, y1, h, atol, rtol)
        # a non-finite K row poisons err through the downstream stages

        if not math.isfinite(err):
            raise DivergenceError(f"state became non-finite; last good time t={t:.6g}", t_last=t)

        if err <= 1.0:
            # accept; fill samples inside (t, t+h] by cubic Hermite
            t_new = t + h
            s_eps = 1e-12 * max(1.0, abs(t_new))
            while si < len(sample_times) and sample_times[si] <= t_new + s_eps:
                ts = sample_times[si]
                if ts >= t_new:
                    out[si] = y1
                else:
                    out[si] = _hermite(ts, t, h, y, y1, K[0], K[6])
                si += 1
            K[0] = K[6]  # FSAL
            y, y1 = y1, y
            t = t_new
            nsteps += 1
            if nsteps > _MAX_STEPS:
                raise IntegrationError(f"exceeded {_MAX_STEPS} steps at t={t:.6g}")
            # PI controller (dopri5-style stabilization, beta = 0.04)
            if err == 0.0:
                fac = 10.0
            else:
                fac = 0.9 * err ** -0.17 * err_prev ** 0.04
                fac = min(10.0, max(0.2, fac))
            err_prev = max(err, 1e-4)
            h *= fac
        else:
            nrej += 1
            fac = max(0.2, 0.9 * err ** -0.2)
            h *= min(1.0, fac)

    if not np.all(np.isfinite(y)):
        raise DivergenceError(f"state became non-finite; last good time t={t:.6g}", t_last=t)
    return Trajectory(
        times=np.asarray(sample_times[:si]),
        states=out[:si],
        meta={"steps": nsteps, "rejected": nrej, "rhs_evals": nfev, "x_final": y.copy(), "t_final": t},
    )


def _run_rk4(f, y, t0, t1, cfg, sample_times):
    h = cfg.h_init
    t = t0
    nfev = 0
    nsteps = 0
    out = np.empty((len(sample_times), y.size))
    si = 0
    eps = 1e-9 * max(1.0, abs(t1))
    if si < len(sample_times) and abs(sample_times[si] - t) <= eps:
        out[si] = y
        si += 1
    total = int(round((t1 - t0) / h))
    for step in range(total):
        k1 = f(t, y)
        k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = f(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t0 + (step + 1) * h
        nfev += 4
        nsteps += 1
        if not np.all(np.isfinite(y)):
            raise DivergenceError(f"state became non-finite; last good time t={t - h:.6g}", t_last=t - h)
        while si < len(sample_times) and sample_times[si] <= t + eps:
            # fixed-step sampling is on-grid: the sample lands on a step end
            out[si] = y
            si += 1
    return Trajectory(
        times=np.asarray(sample_times[:si]),
        states=out[:si],
        meta={"steps": nsteps, "rejected": 0, "rhs_evals": nfev, "x_final": y, "t_final": t},
    )
