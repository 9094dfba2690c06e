"""Model constants, per-unit conventions, derived parameters, and config I/O.

The published parameter table pins the machine, drivetrain and aerodynamic
constants; converter/controller gains, filter elements and the DC-link
capacitance carry no published values.  The defaults shipped here were
chosen so the nominal operating point (8 m/s wind, 1 p.u. grid voltage) is
locally asymptotically stable; the eigenvalue gate in
``simulation.linear_stability`` checks exactly that.

Two per-unit conventions are fixed here and reported in run metadata:

* torque base: 1 p.u. mechanical torque at rated wind speed with the
  turbine at its power-optimal tip-speed ratio, i.e.
  ``T_m_base = rho*pi*R^2*Cp_max*v_rated^3 / (2*omega_t_rated)`` with
  ``v_rated`` backed out of the rated power;
* turbine-speed base: ``omega_t_base = lambda_opt*v_rated/R`` (1 p.u.
  turbine speed at the rated operating point).

With these bases the optimal-torque constant is 1.0 p.u. to within the
resolution of the tip-speed-ratio scan.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace

from .model import cp_lambda_opt

__all__ = [
    "TurbineParams",
    "DerivedParams",
    "ParamError",
    "ConfigError",
    "derive",
    "default_params",
    "rated_wind_speed",
    "load_config",
    "params_to_dict",
    "params_from_dict",
    "config_to_json",
]

BETZ_LIMIT = 16.0 / 27.0


class ParamError(ValueError):
    """Invariant violation; the message names the offending field."""


class ConfigError(ValueError):
    """Configuration file could not be parsed or validated."""


@dataclass(frozen=True)
class TurbineParams:
    """All constants of one turbine (electrical quantities in p.u.)."""

    omega_nom: float        # synchronous base speed [rad/s]
    omega_s: float          # synchronous speed [p.u.]
    L_m: float              # mutual inductance [p.u.]
    L_s: float              # stator inductance [p.u.]
    L_r: float              # rotor inductance [p.u.]
    R_s: float              # stator resistance [p.u.]
    R_r: float              # rotor resistance [p.u.]
    H_t: float              # turbine inertia [s]
    H_g: float              # generator inertia [s]
    k_sh: float             # shaft stiffness [p.u./el.rad]
    c_sh: float             # shaft damping [p.u. s/el.rad]
    beta: float             # blade pitch [deg]
    Cp_max: float           # peak performance coefficient
    P_rated: float          # rated power [W]
    R_blade: float          # blade length [m]
    rho: float              # air density [kg/m^3]
    T_m_base: float         # turbine torque base [N m]
    omega_t_base: float     # turbine speed base [rad/s]
    K_opt: float            # optimal-torque constant [p.u.]
    k_p_RPC: float          # rotor-side reactive-power PI
    k_i_RPC: float
    k_p_RTC: float          # rotor-side torque PI
    k_i_RTC: float
    k_pd_RCC: float         # rotor current PI, d axis
    k_id_RCC: float
    k_pq_RCC: float         # rotor current PI, q axis
    k_iq_RCC: float
    k_p_GPC: float          # grid-side power PI
    k_i_GPC: float
    k_p_GCC: float          # grid-side current PI
    k_i_GCC: float
    k_p_PLL: float          # PLL PI
    k_i_PLL: float
    omega_c_PLL: float      # PLL low-pass cutoff [rad/s]
    omega_c_PC: float       # power-measurement low-pass cutoff [rad/s]
    L_i: float              # LCL inverter-side inductor [p.u.]
    L_g: float              # LCL grid-side inductor [p.u.]
    C_f: float              # LCL filter capacitor [p.u.]
    C: float                # DC-link capacitance [p.u.]


@dataclass(frozen=True)
class DerivedParams:
    """Stator-referred quantities computed from the machine constants."""

    K_mrr: float        # mutual coupling factor L_m/L_r
    L_s_prime: float    # transient inductance referred to the stator
    R_2: float          # rotor resistance referred to the stator
    R_1: float          # total resistance referred to the stator
    T_r: float          # rotor time constant [s, in p.u. impedance units]
    X_m: float          # magnetizing impedance


_POSITIVE_FIELDS = (
    "omega_nom", "omega_s", "L_m", "L_s", "L_r", "R_s", "R_r", "H_t", "H_g",
    "omega_c_PLL", "omega_c_PC", "L_i", "L_g", "C_f", "C",
    "T_m_base", "omega_t_base", "rho", "R_blade", "P_rated",
)


def validate(p: TurbineParams) -> None:
    """Check the parameter invariants, raising ``ParamError`` on the first hit."""
    for name in _POSITIVE_FIELDS:
        if not getattr(p, name) > 0.0:
            raise ParamError(f"{name} must be strictly positive, got {getattr(p, name)!r}")
    if not (0.0 < p.Cp_max <= BETZ_LIMIT):
        raise ParamError(f"Cp_max must lie in (0, 16/27], got {p.Cp_max!r}")


def derive(p: TurbineParams) -> DerivedParams:
    """Stator-referred derived quantities (pure, deterministic)."""
    validate(p)
    k_mrr = p.L_m / p.L_r
    l_s_prime = p.L_s - p.L_m * k_mrr
    if l_s_prime <= 0.0:
        raise ParamError(
            f"L_s_prime = L_s - L_m^2/L_r must be positive, got {l_s_prime!r} "
            "(non-physical machine inductances)"
        )
    r_2 = k_mrr**2 * p.R_r
    return DerivedParams(
        K_mrr=k_mrr,
        L_s_prime=l_s_prime,
        R_2=r_2,
        R_1=p.R_s + r_2,
        T_r=p.L_r / p.R_r,
        X_m=p.omega_s * p.L_m,
    )


def rated_wind_speed(p_rated: float, rho: float, r_blade: float, cp_max: float) -> float:
    """Wind speed at which the optimally tracking turbine captures rated power."""
    return (2.0 * p_rated / (rho * math.pi * r_blade**2 * cp_max)) ** (1.0 / 3.0)


def default_params() -> TurbineParams:
    """Published table values plus the documented defaults for the rest.

    Controller gain signs follow the loop-gain signs of the printed
    conventions at the PLL's stable lock: the rotor current and
    reactive-power loops see a negative plant gain and take negative PI
    constants; the torque and grid-side loops take positive ones.
    """
    omega_nom = 2.0 * math.pi * 60.0
    l_m = 4.0
    l_s = 1.101 * l_m
    r_s = 0.005
    h_t = 4.0
    cp_max = 0.4382
    p_rated = 5.0e6
    r_blade = 58.6
    rho = 1.225

    v_rated = rated_wind_speed(p_rated, rho, r_blade, cp_max)
    lam_opt = cp_lambda_opt()
    omega_t_base = lam_opt * v_rated / r_blade
    t_m_base = rho * math.pi * r_blade**2 * cp_max * v_rated**3 / (2.0 * omega_t_base)
    # MPPT constant on the machine base; identically 1 by the base choice
    k_opt = cp_max * rho * math.pi * r_blade**5 / (2.0 * lam_opt**3) \
        * omega_t_base**2 / t_m_base

    return TurbineParams(
        omega_nom=omega_nom,
        omega_s=1.0,
        L_m=l_m,
        L_s=l_s,
        L_r=1.005 * l_s,
        R_s=r_s,
        R_r=1.1 * r_s,
        H_t=h_t,
        H_g=0.1 * h_t,
        k_sh=0.3,
        c_sh=0.01,
        beta=0.0,
        Cp_max=cp_max,
        P_rated=p_rated,
        R_blade=r_blade,
        rho=rho,
        T_m_base=t_m_base,
        omega_t_base=omega_t_base,
        K_opt=k_opt,
        k_p_RPC=-0.5,
        k_i_RPC=-15.0,
        k_p_RTC=0.5,
        k_i_RTC=15.0,
        k_pd_RCC=-0.4,
        k_id_RCC=-30.0,
        k_pq_RCC=-0.6,
        k_iq_RCC=-45.0,
        k_p_GPC=0.25,
        k_i_GPC=6.0,
        k_p_GCC=0.25,
        k_i_GCC=60.0,
        k_p_PLL=60.0,
        k_i_PLL=1400.0,
        omega_c_PLL=250.0,
        omega_c_PC=60.0,
        L_i=0.15,
        L_g=0.15,
        C_f=0.066,
        C=0.2,
    )


_FIELD_NAMES = tuple(f.name for f in fields(TurbineParams))


def params_to_dict(p: TurbineParams) -> dict:
    return asdict(p)


def params_from_dict(d: dict) -> TurbineParams:
    """Merge ``d`` over the defaults; unknown keys or bad values are errors."""
    unknown = sorted(set(d) - set(_FIELD_NAMES))
    if unknown:
        raise ConfigError(f"unknown params keys: {', '.join(unknown)}")
    cleaned = {}
    for k, v in d.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"params.{k} must be a number, got {v!r}")
        cleaned[k] = float(v)
    p = replace(default_params(), **cleaned)
    validate(p)
    return p


def load_config(path):
    """Load a JSON config with top-level ``params`` and ``scenario`` sections.

    Either section may be absent (defaults apply); an empty or
    whitespace-only file is treated as the empty config.  Returns
    ``(TurbineParams, ScenarioConfig)``.  Unknown keys at any level are
    rejected; parse failures carry the line/column from the decoder.
    """
    from .simulation import scenario_from_dict  # deferred: simulation imports params

    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if not text.strip():
        raw = {}
    else:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = sorted(set(raw) - {"params", "scenario"})
    if unknown:
        raise ConfigError(f"{path}: unknown top-level keys: {', '.join(unknown)}")

    try:
        p = params_from_dict(raw.get("params", {}))
        scen = scenario_from_dict(raw.get("scenario", {}))
    except (ParamError, ConfigError) as e:
        raise type(e)(f"{path}: {e}") from e
    # derived invariants must hold for a loadable config
    try:
        derive(p)
    except ParamError as e:
        raise ConfigError(f"{path}: {e}") from e
    return p, scen


def config_to_json(p: TurbineParams, scenario_dict: dict) -> str:
    """Serialize params + scenario to the config format (bit-exact floats)."""
    return json.dumps({"params": params_to_dict(p), "scenario": scenario_dict}, indent=2)
