"""Scenario construction, steady states, farm/aggregate runs, equivalence checks.

The brute-force farm stacks N identical replicas (27N states) sharing the
grid and wind inputs; the aggregate run integrates one 27-state model with
the rescaled parameter set.  Both start from the same single-turbine
equilibrium (the aggregate from its psi-lifted copy) and use identical
integrator settings and sample grids, so any difference between the
aggregate trajectory and the psi-scaled replica trajectory is solver noise.

``verify_equivalence`` quantifies that difference per state and wall-clocks
both runs.  The relative-error denominator is ``1 + max_t |psi*x|`` so
signals crossing zero do not blow the metric up; the Park angle is compared
modulo 2*pi since it grows without bound.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import model
from .aggregation import lift_state, psi, scale_inputs, scale_params
from .integrator import IntegratorConfig, Trajectory, integrate
from .model import (
    N_STATES,
    OUTPUT_NAMES,
    STATE_NAMES,
    InputSignals,
    State,
    make_farm_rhs,
    make_outputs_fn,
    make_rhs,
)
from .params import ConfigError, TurbineParams, derive

__all__ = [
    "ScenarioConfig",
    "EquivalenceReport",
    "SteadyStateError",
    "scenario_from_dict",
    "default_scenario_dict",
    "build_inputs",
    "find_steady_state",
    "simulate_single",
    "simulate_farm",
    "simulate_aggregate",
    "verify_equivalence",
    "linear_stability",
    "fd_jacobian",
    "trajectory_to_csv",
    "report_to_json_dict",
]

_TWO_PI_3 = 2.0 * math.pi / 3.0
_DELTA = STATE_NAMES.index("delta")
_E_C = STATE_NAMES.index("E_C")
E_C_NOMINAL = 1.0  # the DC-link energy is a pure integrator; its level is a convention


class SteadyStateError(RuntimeError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


# ---------------------------------------------------------------------------
# Scenario configuration
# ---------------------------------------------------------------------------

_WIND_KINDS = ("constant", "ramp", "steps", "filtered_random")


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation scenario (shared by single, farm and aggregate runs)."""

    n_turbines: int = 8
    t_end: float = 20.0
    sample_dt: float = 0.01
    seed: int = 2024
    q_star: float = 0.0
    wind: dict = field(default_factory=lambda: {"type": "filtered_random", "mean": 8.0, "amplitude": 1.0})
    grid: dict = field(default_factory=lambda: {"magnitude": 1.0, "steps": [[10.0, 0.95]]})
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    def __post_init__(self):
        if self.n_turbines < 1:
            raise ConfigError(f"scenario.n_turbines must be >= 1, got {self.n_turbines}")
        if not self.t_end > 0.0:
            raise ConfigError(f"scenario.t_end must be positive, got {self.t_end}")
        if not self.sample_dt > 0.0:
            raise ConfigError(f"scenario.sample_dt must be positive, got {self.sample_dt}")
        kind = self.wind.get("type")
        if kind not in _WIND_KINDS:
            raise ConfigError(f"scenario.wind.type must be one of {_WIND_KINDS}, got {kind!r}")
        for t_ev, _v in self.grid.get("steps", []):
            if not 0.0 <= t_ev <= self.t_end:
                raise ConfigError(f"grid step event at t={t_ev} outside [0, t_end]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["integrator"] = asdict(self.integrator)
        return d


def default_scenario_dict() -> dict:
    return ScenarioConfig().to_dict()


_SCEN_KEYS = {"n_turbines", "t_end", "sample_dt", "seed", "q_star", "wind", "grid", "integrator"}
_WIND_KEYS = {
    "constant": {"type", "value"},
    "ramp": {"type", "t_start", "t_end", "v_start", "v_end"},
    "steps": {"type", "events"},
    "filtered_random": {"type", "mean", "amplitude", "n_modes", "band"},
}
_GRID_KEYS = {"magnitude", "steps"}
_INTEG_KEYS = {"rtol", "atol", "h_init", "h_max", "method"}


def scenario_from_dict(d: dict) -> ScenarioConfig:
    """Validate and build a scenario from its JSON dict; unknown keys error."""
    if not isinstance(d, dict):
        raise ConfigError("scenario section must be an object")
    unknown = sorted(set(d) - _SCEN_KEYS)
    if unknown:
        raise ConfigError(f"unknown scenario keys: {', '.join(unknown)}")
    wind = dict(d.get("wind", {"type": "filtered_random", "mean": 8.0, "amplitude": 1.0}))
    kind = wind.get("type")
    if kind not in _WIND_KINDS:
        raise ConfigError(f"scenario.wind.type must be one of {_WIND_KINDS}, got {kind!r}")
    unknown = sorted(set(wind) - _WIND_KEYS[kind])
    if unknown:
        raise ConfigError(f"unknown scenario.wind keys for type {kind!r}: {', '.join(unknown)}")
    grid = dict(d.get("grid", {"magnitude": 1.0, "steps": [[10.0, 0.95]]}))
    unknown = sorted(set(grid) - _GRID_KEYS)
    if unknown:
        raise ConfigError(f"unknown scenario.grid keys: {', '.join(unknown)}")
    integ = dict(d.get("integrator", {}))
    unknown = sorted(set(integ) - _INTEG_KEYS)
    if unknown:
        raise ConfigError(f"unknown scenario.integrator keys: {', '.join(unknown)}")
    try:
        icfg = IntegratorConfig(**integ)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"scenario.integrator: {e}") from e
    kw = {k: d[k] for k in ("n_turbines", "t_end", "sample_dt", "seed", "q_star") if k in d}
    if "n_turbines" in kw:
        kw["n_turbines"] = int(kw["n_turbines"])
    return ScenarioConfig(wind=wind, grid=grid, integrator=icfg, **kw)


# ---------------------------------------------------------------------------
# Input signal builders
# ---------------------------------------------------------------------------


def _magnitude_fn(grid_spec):
    v0 = float(grid_spec.get("magnitude", 1.0))
    events = sorted((float(t), float(v)) for t, v in grid_spec.get("steps", []))

    def mag(t):
        v = v0
        for te, ve in events:
            if t >= te:
                v = ve
            else:
                break
        return v

    return mag, [te for te, _ in events]


def make_grid_abc(grid_spec: dict, omega_s: float = 1.0):
    """Balanced three-phase carrier with piecewise-constant magnitude.

    The phase-a angle advances at ``omega_s`` per second (per-unit angle
    convention: a locked PLL tracks it with d(delta)/dt = omega_s).
    """
    mag, breakpoints = _magnitude_fn(grid_spec)

    def grid(t):
        v = mag(t)
        th = omega_s * t
        return (v * math.cos(th), v * math.cos(th - _TWO_PI_3), v * math.cos(th + _TWO_PI_3))

    grid.omega = omega_s
    grid.phase0 = 0.0
    grid.breakpoints = breakpoints
    return grid


def make_wind(wind_spec: dict, seed: int):
    """Wind-speed profile v_w(t); returns (callable, list of breakpoints)."""
    kind = wind_spec["type"]
    if kind == "constant":
        v = float(wind_spec.get("value", 8.0))
        return (lambda t: v), []
    if kind == "ramp":
        t0 = float(wind_spec.get("t_start", 0.0))
        t1 = float(wind_spec.get("t_end", 10.0))
        v0 = float(wind_spec.get("v_start", 8.0))
        v1 = float(wind_spec.get("v_end", 9.0))

        def ramp(t):
            if t <= t0:
                return v0
            if t >= t1:
                return v1
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0)

        return ramp, [t0, t1]
    if kind == "steps":
        events = sorted((float(t), float(v)) for t, v in wind_spec.get("events", []))
        if not events or events[0][0] > 0.0:
            raise ConfigError("wind steps must define a value at t = 0")

        def steps(t):
            v = events[0][1]
            for te, ve in events:
                if t >= te:
                    v = ve
                else:
                    break
            return v

        return steps, [te for te, _ in events[1:]]
    # filtered_random: band-limited sum of seeded sinusoids, bounded by
    # mean +/- amplitude (the weights sum to the amplitude)
    mean = float(wind_spec.get("mean", 8.0))
    amp = float(wind_spec.get("amplitude", 1.0))
    n_modes = int(wind_spec.get("n_modes", 12))
    band = wind_spec.get("band", [0.05, 1.5])
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(band[0], band[1], size=n_modes)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=n_modes)
    w_raw = rng.uniform(0.2, 1.0, size=n_modes)
    weights = amp * w_raw / np.sum(w_raw)
    return _make_mode_sum(mean, weights, freqs, phases), []


def _cosine_sum_python(t, mean, wt, fr, ph):
    s = mean
    for w, f, p in zip(wt, fr, ph):
        s += w * math.cos(f * t + p)
    return s


_COSINE_SUM = None  # None: not probed; False: numba unavailable


def _get_cosine_sum():
    global _COSINE_SUM
    if _COSINE_SUM is None:
        try:
            from numba import njit

            @njit(cache=True, fastmath=False)
            def fast(t, mean, wt, fr, ph):
                s = mean
                for i in range(wt.size):
                    s += wt[i] * math.cos(fr[i] * t + ph[i])
                return s

            fast(0.0, 8.0, np.ones(2), np.ones(2), np.ones(2))
            _COSINE_SUM = fast
        except Exception:
            _COSINE_SUM = False
    return _COSINE_SUM or None


def _make_mode_sum(mean, weights, freqs, phases):
    fast = _get_cosine_sum()
    if fast is not None:
        wt = np.ascontiguousarray(weights, dtype=float)
        fr = np.ascontiguousarray(freqs, dtype=float)
        ph = np.ascontiguousarray(phases, dtype=float)
        return lambda t: fast(t, mean, wt, fr, ph)
    wt = [float(x) for x in weights]
    fr = [float(x) for x in freqs]
    ph = [float(x) for x in phases]
    return lambda t: _cosine_sum_python(t, mean, wt, fr, ph)


def build_inputs(scenario: ScenarioConfig, params: TurbineParams):
    """InputSignals for the scenario plus the segment breakpoints.

    Segment boundaries (grid steps, wind discontinuities) split the
    integration so the solver never straddles a jump.
    """
    grid = make_grid_abc(scenario.grid, params.omega_s)
    wind, wind_bp = make_wind(scenario.wind, scenario.seed)
    u = InputSignals(q_star=scenario.q_star, grid_abc=grid, wind=wind)
    breakpoints = sorted({t for t in (list(grid.breakpoints) + wind_bp) if 0.0 < t < scenario.t_end})
    return u, breakpoints


# ---------------------------------------------------------------------------
# Steady state
# ---------------------------------------------------------------------------


def _equilibrium_guess(params: TurbineParams, derived, u: InputSignals) -> np.ndarray:
    """Analytic near-equilibrium construction used to seed the Newton solve."""
    p, d = params, derived
    v_w = u.wind(0.0)
    va, vb, vc = u.grid_abc(0.0)
    v_mag = math.sqrt((2.0 / 3.0) * (va * va + vb * vb + vc * vc))
    # stable PLL lock: delta = phase-a angle + pi, so v_g_q = -V, v_g_d = 0
    delta = math.pi
    v_g_q, v_g_d = -v_mag, 0.0

    v_rated = (2.0 * p.P_rated / (p.rho * math.pi * p.R_blade**2 * p.Cp_max)) ** (1.0 / 3.0)
    omega = min(max(v_w / v_rated, 0.2), 1.2)
    t_e = p.K_opt * omega * omega
    theta_tw = t_e / p.k_sh
    i_s_q = t_e * p.omega_s / v_g_q
    i_s_d = 0.0

    # stator and rotor-voltage equilibrium: 4 linear equations in
    # (e_s_d, e_s_q, v_r_d, v_r_q) from the DFIG rows at di/dt = de/dt = 0
    ws = p.omega_s
    a = np.zeros((4, 4))
    b = np.zeros(4)
    # d i_s_d = 0
    a[0] = [omega / ws, 1.0 / (d.T_r * ws), d.K_mrr, 0.0]
    b[0] = d.R_1 * i_s_d + ws * d.L_s_prime * i_s_q + v_g_d
    # d i_s_q = 0
    a[1] = [-1.0 / (d.T_r * ws), omega / ws, 0.0, d.K_mrr]
    b[1] = d.R_1 * i_s_q - ws * d.L_s_prime * i_s_d + v_g_q
    # d e_s_d = 0
    a[2] = [-1.0 / (d.T_r * ws), -(1.0 - omega / ws), 0.0, d.K_mrr]
    b[2] = d.R_2 * i_s_q
    # d e_s_q = 0
    a[3] = [(1.0 - omega / ws), -1.0 / (d.T_r * ws), -d.K_mrr, 0.0]
    b[3] = -d.R_2 * i_s_d
    try:
        e_s_d, e_s_q, v_r_d, v_r_q = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        e_s_d = e_s_q = v_r_d = v_r_q = 0.0

    i_r_d = e_s_q / d.X_m - d.K_mrr * i_s_d
    i_r_q = e_s_d / d.X_m - d.K_mrr * i_s_q
    p_r = v_r_d * i_r_d + v_r_q * i_r_q

    i_g_d = u.q_star / v_g_q * (-1.0) if v_g_q else 0.0  # q_g = -v_g_q*i_g_d = q*
    i_g_q = p_r / v_g_q if v_g_q else 0.0                # p_g = v_g_q*i_g_q = p_r
    v_f_d = v_g_d - p.L_g * i_g_q
    v_f_q = v_g_q + p.L_g * i_g_d
    i_i_d = i_g_d - p.C_f * v_f_q
    i_i_q = i_g_q + p.C_f * v_f_d

    x = np.zeros(N_STATES)
    s = dict(zip(STATE_NAMES, range(N_STATES)))
    x[s["i_s_d"]] = i_s_d
    x[s["i_s_q"]] = i_s_q
    x[s["phi_r_q"]] = i_r_d / p.k_i_RPC if p.k_i_RPC else 0.0
    x[s["phi_r_t"]] = i_r_q / p.k_i_RTC if p.k_i_RTC else 0.0
    x[s["phi_r_id"]] = v_r_d / p.k_id_RCC if p.k_id_RCC else 0.0
    x[s["phi_r_iq"]] = v_r_q / p.k_iq_RCC if p.k_iq_RCC else 0.0
    x[s["i_i_d"]] = i_i_d
    x[s["i_i_q"]] = i_i_q
    x[s["i_g_d"]] = i_g_d
    x[s["i_g_q"]] = i_g_q
    x[s["p_avg"]] = p_r
    x[s["q_avg"]] = u.q_star
    x[s["phi_g_q"]] = i_i_d / p.k_i_GPC if p.k_i_GPC else 0.0
    x[s["phi_g_p"]] = -i_i_q / p.k_i_GPC if p.k_i_GPC else 0.0
    v_i_d = v_f_d - p.L_i * i_i_q
    v_i_q = v_f_q + p.L_i * i_i_d
    x[s["phi_g_id"]] = v_i_d / p.k_i_GCC if p.k_i_GCC else 0.0
    x[s["phi_g_iq"]] = v_i_q / p.k_i_GCC if p.k_i_GCC else 0.0
    x[s["omega_r"]] = omega
    x[s["omega_t"]] = omega
    x[s["theta_tw"]] = theta_tw
    x[s["e_s_d"]] = e_s_d
    x[s["e_s_q"]] = e_s_q
    x[s["v_f_d"]] = v_f_d
    x[s["v_f_q"]] = v_f_q
    x[s["delta"]] = delta
    x[s["E_C"]] = E_C_NOMINAL
    return x


def _newton(f, x, free, n_iter=60, tol=1e-12):
    """Damped Newton on the components ``free`` of f; returns (x, ok)."""
    def res(xv):
        return f(xv)[free]

    r = res(x)
    for _ in range(n_iter):
        nr = float(np.max(np.abs(r)))
        if nr <= tol:
            return x, True
        jac = np.empty((len(free), len(free)))
        for col, j in enumerate(free):
            h = 1e-7 * max(1.0, abs(x[j]))
            xp = x.copy()
            xm = x.copy()
            xp[j] += h
            xm[j] -= h
            jac[:, col] = (res(xp) - res(xm)) / (2.0 * h)
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            return x, False
        lam = 1.0
        base = float(np.linalg.norm(r))
        for _ls in range(30):
            xt = x.copy()
            xt[free] += lam * step
            rt = res(xt)
            if np.all(np.isfinite(rt)) and float(np.linalg.norm(rt)) < base:
                x, r = xt, rt
                break
            lam *= 0.5
        else:
            return x, False
    return x, float(np.max(np.abs(res(x)))) <= tol


def find_steady_state(
    params: TurbineParams,
    derived,
    u_frozen: InputSignals,
    guess: Optional[State] = None,
) -> State:
    """Synchronously rotating equilibrium: rhs(x_eq) = omega_s * e_delta.

    Solved by damped Newton on all components except the DC-link energy
    (a pure integrator whose level is a convention, pinned at the guess) at
    the frozen-input time origin; the Park angle is an ordinary unknown
    there since the carrier phase is zero.  Falls back to a 30 s
    pre-simulation followed by a Newton polish.  The residual on every
    non-delta component of the returned state is below 1e-10.
    """
    v_w = u_frozen.wind(0.0)
    if v_w < 3.0:
        raise SteadyStateError(f"frozen wind speed {v_w:.2f} m/s is below cut-in (3 m/s)")
    f = make_rhs(params, derived, u_frozen)
    target = np.zeros(N_STATES)
    target[_DELTA] = params.omega_s

    def residual(xv):
        return f(0.0, xv) - target

    x0 = guess.vec.copy() if guess is not None else _equilibrium_guess(params, derived, u_frozen)
    free = [i for i in range(N_STATES) if i != _E_C]

    x, ok = _newton(residual, x0.copy(), free)
    if not ok:
        # pre-simulate towards the attractor, then polish
        cfg = IntegratorConfig()
        traj = integrate(f, x0, 0.0, 30.0, cfg, sample_dt=30.0)
        x1 = traj.states[-1].copy()
        x1[_DELTA] = math.remainder(x1[_DELTA], 2.0 * math.pi)
        x1[_E_C] = x0[_E_C]
        x, ok = _newton(residual, x1, free)
        if not ok:
            r = residual(x)
            raise SteadyStateError(
                f"Newton failed after pre-simulation fallback; residual inf-norm "
                f"{float(np.max(np.abs(r[free]))):.3e}",
                residual=r,
            )
    return State(x)


# ---------------------------------------------------------------------------
# Jacobian and linear stability
# ---------------------------------------------------------------------------


def fd_jacobian(params, derived, x_eq: State, u: InputSignals, t: float = 0.0, step: float = 1e-6):
    """Central finite-difference Jacobian of rhs at (x_eq, t)."""
    f = make_rhs(params, derived, u)
    x = x_eq.vec
    jac = np.empty((N_STATES, N_STATES))
    for j in range(N_STATES):
        h = step * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        jac[:, j] = (f(t, xp) - f(t, xm)) / (2.0 * h)
    return jac


def linear_stability(params, derived, x_eq: State, u_frozen: InputSignals):
    """Eigenvalues of the frozen-input Jacobian at the equilibrium, sorted by
    descending real part.

    In the co-rotating chart (Park angle measured relative to the carrier)
    the frozen system is autonomous, and this Jacobian is its linearization.
    Exactly one neutral eigenvalue is structural: the DC-link energy column
    is zero (nothing feeds back from it).  Shipped default gains must place
    every other eigenvalue strictly in the left half plane.
    """
    jac = fd_jacobian(params, derived, x_eq, u_frozen)
    eig = np.linalg.eigvals(jac)
    return eig[np.argsort(-eig.real)]


# ---------------------------------------------------------------------------
# Simulation drivers
# ---------------------------------------------------------------------------


def _segmented_integrate(f, x0, scenario: ScenarioConfig, breakpoints: Sequence[float]) -> Trajectory:
    grid = np.round(np.arange(0.0, scenario.t_end + 0.5 * scenario.sample_dt, scenario.sample_dt), 12)
    grid = grid[grid <= scenario.t_end + 1e-12]
    bounds = [0.0] + [float(b) for b in breakpoints] + [scenario.t_end]
    times = []
    states = []
    meta = {"steps": 0, "rejected": 0, "rhs_evals": 0, "wall_ns": 0}
    x = np.asarray(x0, dtype=float)
    first = True
    for a, b in zip(bounds[:-1], bounds[1:]):
        if first:
            sel = grid[(grid >= a) & (grid <= b + 1e-12)]
        else:
            sel = grid[(grid > a + 1e-12) & (grid <= b + 1e-12)]
        seg = integrate(f, x, a, b, scenario.integrator, scenario.sample_dt, sample_times=sel)
        times.append(seg.times)
        states.append(seg.states)
        for k in ("steps", "rejected", "rhs_evals", "wall_ns"):
            meta[k] += seg.meta[k]
        x = seg.meta["x_final"]
        first = False
    traj = Trajectory(times=np.concatenate(times), states=np.vstack(states), meta=meta)
    return traj


def _attach_outputs(traj: Trajectory, params, derived, u):
    fn = make_outputs_fn(params, derived, u)
    rows = [fn(t, traj.states[i]) for i, t in enumerate(traj.times)]
    traj.outputs = np.array(rows)
    return traj


def _resolve_equilibrium(params, derived, u, x_eq):
    if x_eq is None:
        return find_steady_state(params, derived, u.frozen_at(0.0))
    return x_eq


def simulate_single(params: TurbineParams, scenario: ScenarioConfig, x_eq: Optional[State] = None) -> Trajectory:
    """One turbine from its synchronous equilibrium under the scenario inputs."""
    derived = derive(params)
    u, breakpoints = build_inputs(scenario, params)
    x_eq = _resolve_equilibrium(params, derived, u, x_eq)
    f = make_rhs(params, derived, u)
    traj = _segmented_integrate(f, x_eq.vec, scenario, breakpoints)
    _attach_outputs(traj, params, derived, u)
    traj.meta.update(_run_meta(params, scenario, mode="single", n=1))
    return traj


def simulate_farm(params: TurbineParams, scenario: ScenarioConfig, x_eq: Optional[State] = None) -> Trajectory:
    """Brute-force farm: N identical replicas stacked into one 27N-state system.

    Every replica is initialized at the single-turbine equilibrium and sees
    the same grid and wind.  The trajectory stores the stacked state
    (replica-major); outputs are those of replica 0, and farm totals are in
    ``meta['farm_totals']`` (active/reactive power and grid currents summed
    over replicas).
    """
    n = scenario.n_turbines
    derived = derive(params)
    u, breakpoints = build_inputs(scenario, params)
    x_eq = _resolve_equilibrium(params, derived, u, x_eq)
    f = make_farm_rhs(params, derived, u, n)
    x0 = np.tile(x_eq.vec, n)
    traj = _segmented_integrate(f, x0, scenario, breakpoints)

    fn = make_outputs_fn(params, derived, u)
    rows = []
    totals = np.zeros((len(traj.times), 4))  # p_tot, q_tot, i_g_d, i_g_q
    ip, iq = OUTPUT_NAMES.index("p_tot"), OUTPUT_NAMES.index("q_tot")
    igd, igq = STATE_NAMES.index("i_g_d"), STATE_NAMES.index("i_g_q")
    for i, t in enumerate(traj.times):
        rows.append(fn(t, traj.states[i, :N_STATES]))
        for k in range(n):
            block = traj.states[i, 27 * k: 27 * k + 27]
            o = fn(t, block)
            totals[i, 0] += o[ip]
            totals[i, 1] += o[iq]
            totals[i, 2] += block[igd]
            totals[i, 3] += block[igq]
    traj.outputs = np.array(rows)
    traj.meta["farm_totals"] = totals
    traj.meta.update(_run_meta(params, scenario, mode="farm", n=n))
    return traj


def simulate_aggregate(params: TurbineParams, scenario: ScenarioConfig, x_eq: Optional[State] = None) -> Trajectory:
    """Aggregate equivalent: one 27-state model with N-scaled parameters.

    Initialized at the psi-lifted single-turbine equilibrium with the
    reactive setpoint scaled by N; grid and wind are shared unchanged.
    """
    n = scenario.n_turbines
    derived = derive(params)
    u, breakpoints = build_inputs(scenario, params)
    x_eq = _resolve_equilibrium(params, derived, u, x_eq)
    p_agg, d_agg = scale_params(params, derived, n)
    u_agg = scale_inputs(u, n)
    f = make_rhs(p_agg, d_agg, u_agg)
    x0 = lift_state(x_eq, n).vec
    traj = _segmented_integrate(f, x0, scenario, breakpoints)
    _attach_outputs(traj, p_agg, d_agg, u_agg)
    traj.meta.update(_run_meta(params, scenario, mode="aggregate", n=n))
    return traj


def _run_meta(params, scenario, mode, n):
    lam_opt = model.cp_lambda_opt()
    v_rated = (2.0 * params.P_rated / (params.rho * math.pi * params.R_blade**2 * params.Cp_max)) ** (1.0 / 3.0)
    return {
        "mode": mode,
        "n_turbines": n,
        "seed": scenario.seed,
        "v_rated": v_rated,
        "lambda_opt": lam_opt,
        "omega_t_base": params.omega_t_base,
    }


# ---------------------------------------------------------------------------
# Equivalence verification
# ---------------------------------------------------------------------------


@dataclass
class EquivalenceReport:
    """Pointwise comparison of the aggregate run against the scaled farm run."""

    n: int
    state_names: tuple
    max_abs_error: np.ndarray       # per state, over all samples
    max_rel_error: np.ndarray       # per state; denominator 1 + max_t |psi*x|
    global_max_rel_error: float
    threshold: float
    passed: bool
    farm_wall_ns: int
    aggregate_wall_ns: int
    speedup: float


def verify_equivalence(farm: Trajectory, aggregate: Trajectory, n: int, threshold: float = 1e-5) -> EquivalenceReport:
    """Compare aggregate states against psi * (replica-0 states) samplewise.

    The Park angle difference is wrapped to (-pi, pi].  Wall-clock times and
    their ratio come from the two runs' metadata.
    """
    if len(farm.times) != len(aggregate.times) or not np.allclose(farm.times, aggregate.times, rtol=0, atol=1e-12):
        raise ValueError("farm and aggregate sample grids do not match")
    ref = farm.states[:, :N_STATES] * psi(n).psi
    diff = aggregate.states - ref
    diff[:, _DELTA] = np.remainder(diff[:, _DELTA] + math.pi, 2.0 * math.pi) - math.pi
    max_abs = np.max(np.abs(diff), axis=0)
    scale = 1.0 + np.max(np.abs(ref), axis=0)
    max_rel = max_abs / scale
    global_rel = float(np.max(max_rel))
    farm_ns = int(farm.meta.get("wall_ns", 0))
    agg_ns = int(aggregate.meta.get("wall_ns", 0))
    return EquivalenceReport(
        n=n,
        state_names=STATE_NAMES,
        max_abs_error=max_abs,
        max_rel_error=max_rel,
        global_max_rel_error=global_rel,
        threshold=threshold,
        passed=bool(global_rel <= threshold),
        farm_wall_ns=farm_ns,
        aggregate_wall_ns=agg_ns,
        speedup=(farm_ns / agg_ns) if agg_ns > 0 else float("inf"),
    )


def report_to_json_dict(rep: EquivalenceReport) -> dict:
    return {
        "n": rep.n,
        "per_state": [
            {
                "index": i + 1,
                "name": rep.state_names[i],
                "max_abs_error": float(rep.max_abs_error[i]),
                "max_rel_error": float(rep.max_rel_error[i]),
            }
            for i in range(N_STATES)
        ],
        "global_max_rel_error": rep.global_max_rel_error,
        "threshold": rep.threshold,
        "passed": rep.passed,
        "timing": {
            "farm_wall_s": rep.farm_wall_ns / 1e9,
            "aggregate_wall_s": rep.aggregate_wall_ns / 1e9,
            "speedup": rep.speedup,
        },
    }


# ---------------------------------------------------------------------------
# Trajectory export
# ---------------------------------------------------------------------------


def _write_atomic(path, writer):
    tmp = str(path) + ".partial"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer(fh)
    os.replace(tmp, path)


def trajectory_to_csv(traj: Trajectory, path, farm: bool = False) -> None:
    """CSV export: header ``t,<states...>,<outputs...>``.

    Farm trajectories emit one row per (time, replica) with a ``replica``
    column and the farm totals repeated on each row.
    """
    def fmt(v):
        return repr(float(v))

    if not farm:
        def write(fh):
            w = csv.writer(fh)
            w.writerow(["t", *STATE_NAMES, *OUTPUT_NAMES])
            out = traj.outputs if traj.outputs is not None else np.zeros((len(traj.times), 0))
            for i, t in enumerate(traj.times):
                w.writerow([fmt(t)] + [fmt(v) for v in traj.states[i]] + [fmt(v) for v in out[i]])
        _write_atomic(path, write)
        return

    n = traj.states.shape[1] // N_STATES
    totals = traj.meta.get("farm_totals")

    def write(fh):
        w = csv.writer(fh)
        w.writerow(
            ["t", "replica", *STATE_NAMES, *OUTPUT_NAMES,
             "farm_total_p_tot", "farm_total_q_tot", "farm_total_i_g_d", "farm_total_i_g_q"]
        )
        out = traj.outputs if traj.outputs is not None else np.zeros((len(traj.times), 0))
        for i, t in enumerate(traj.times):
            tot = [fmt(v) for v in totals[i]] if totals is not None else ["", "", "", ""]
            for k in range(n):
                block = traj.states[i, 27 * k: 27 * k + 27]
                orow = [fmt(v) for v in out[i]] if k == 0 else [""] * len(OUTPUT_NAMES)
                w.writerow([fmt(t), k] + [fmt(v) for v in block] + orow + tot)

    _write_atomic(path, write)
