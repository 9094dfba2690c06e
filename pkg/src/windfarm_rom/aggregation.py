"""Parametric scalings and state maps relating one turbine to an N-turbine farm.

A parallel farm of N identical turbines is equivalent to a single fictitious
turbine with rescaled parameters: currents, powers and the controller states
that integrate them scale by N, while voltages, speeds, angles and the
DC-link energy are unchanged.  ``psi`` is the diagonal of that state map;
``scale_params`` produces the aggregate parameter set.

The scalings act on the stator-referred quantities (R_1, R_2, L_s', X_m)
directly rather than on the primitive machine constants; re-deriving those
from scaled primitives is underdetermined.  The rotor time constant is a
ratio of two 1/N-scaled quantities and stays put, as do the coupling factor
and every outer-loop and PLL gain.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import N_STATES, InputSignals, State
from .params import DerivedParams, TurbineParams

__all__ = ["ScalingVector", "psi", "scale_params", "lift_state", "project_state", "scale_inputs"]

N_SCALED_STATES = 16  # leading block: currents, powers, and their integrators

# TurbineParams fields multiplied by N / divided by N in the aggregate model
_TIMES_N = ("H_t", "H_g", "c_sh", "k_sh", "K_opt", "C_f", "C")
_OVER_N = (
    "T_m_base",
    "k_pd_RCC", "k_id_RCC", "k_pq_RCC", "k_iq_RCC",
    "L_i", "L_g",
    "k_p_GCC", "k_i_GCC",
)


@dataclass(frozen=True)
class ScalingVector:
    """Diagonal of the individual-to-aggregate state map for n turbines."""

    n: int
    psi: np.ndarray

    def __post_init__(self):
        if self.psi.shape != (N_STATES,):
            raise ValueError("psi must have one entry per state")


def psi(n) -> ScalingVector:
    """Scaling vector: n on the first 16 states, 1 on the last 11."""
    if n < 1:
        raise ValueError(f"turbine count must be >= 1, got {n}")
    v = np.ones(N_STATES)
    v[:N_SCALED_STATES] = n
    return ScalingVector(n=n, psi=v)


def scale_params(params: TurbineParams, derived: DerivedParams, n, skip=()):
    """Aggregate parameter set for n parallel turbines.

    Returns a new ``(TurbineParams, DerivedParams)`` pair.  The derived
    fields are overridden in place (not re-derived): R_1, R_2, L_s' and X_m
    divide by n; K_mrr and T_r are n-invariant.  n may be any positive
    scalar; physical use restricts it to integers.

    ``skip`` names fields to leave unscaled.  That deliberately breaks the
    equivalence and exists as a negative control for the verification
    machinery; it has no physical meaning.
    """
    if n < 1:
        raise ValueError(f"turbine count must be >= 1, got {n}")
    scalable = set(_TIMES_N) | set(_OVER_N) | {"L_s_prime", "R_1", "R_2", "X_m"}
    bad = set(skip) - scalable
    if bad:
        raise ValueError(f"skip names non-scaled fields: {sorted(bad)}")
    nf = float(n)
    kw = {name: getattr(params, name) * nf for name in _TIMES_N if name not in skip}
    kw.update({name: getattr(params, name) / nf for name in _OVER_N if name not in skip})
    p_agg = replace(params, **kw)

    def d_scale(name, value):
        return value if name in skip else value / nf

    d_agg = DerivedParams(
        K_mrr=derived.K_mrr,
        L_s_prime=d_scale("L_s_prime", derived.L_s_prime),
        R_2=d_scale("R_2", derived.R_2),
        R_1=d_scale("R_1", derived.R_1),
        T_r=derived.T_r,
        X_m=d_scale("X_m", derived.X_m),
    )
    return p_agg, d_agg


def lift_state(x: State, n) -> State:
    """Individual-turbine state to aggregate state: componentwise psi multiply."""
    return State(x.vec * psi(n).psi)


def project_state(x_r: State, n) -> State:
    """Aggregate state back to the individual turbine: componentwise divide."""
    return State(x_r.vec / psi(n).psi)


def scale_inputs(u: InputSignals, n) -> InputSignals:
    """Aggregate inputs: the reactive setpoint scales by n, grid and wind do not."""
    if n < 1:
        raise ValueError(f"turbine count must be >= 1, got {n}")
    return InputSignals(q_star=float(n) * u.q_star, grid_abc=u.grid_abc, wind=u.wind)
