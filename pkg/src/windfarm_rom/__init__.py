"""Structure-preserving reduced-order modeling of parallel Type-3 wind farms.

An N-turbine farm of identical parallel-connected machines is bit-for-bit
captured (up to integrator noise) by a single 27-state turbine model with
rescaled parameters.  This package ships the componentwise turbine model,
the parameter scalings and state maps, an adaptive integrator, scenario
drivers for the brute-force farm and its aggregate equivalent, and the
numerical certification of their equivalence and relative speed.
"""

from .aggregation import ScalingVector, lift_state, project_state, psi, scale_inputs, scale_params
from .integrator import IntegratorConfig, Trajectory, integrate
from .model import (
    InputSignals,
    Outputs,
    State,
    cp_curve,
    mechanical_torque,
    outputs,
    park,
    rhs,
    rhs_appendix,
)
from .params import DerivedParams, TurbineParams, default_params, derive, load_config
from .simulation import (
    EquivalenceReport,
    ScenarioConfig,
    find_steady_state,
    linear_stability,
    simulate_aggregate,
    simulate_farm,
    simulate_single,
    verify_equivalence,
)

__version__ = "0.1.0"

__all__ = [
    "TurbineParams", "DerivedParams", "default_params", "derive", "load_config",
    "State", "InputSignals", "Outputs", "park", "cp_curve", "mechanical_torque",
    "rhs", "outputs", "rhs_appendix",
    "ScalingVector", "psi", "scale_params", "lift_state", "project_state", "scale_inputs",
    "IntegratorConfig", "Trajectory", "integrate",
    "ScenarioConfig", "EquivalenceReport", "find_steady_state", "simulate_single",
    "simulate_farm", "simulate_aggregate", "verify_equivalence", "linear_stability",
    "__version__",
]
