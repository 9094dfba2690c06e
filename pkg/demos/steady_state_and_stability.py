"""Equilibrium anatomy and the small-signal spectrum.

Solves for the synchronously rotating operating point at a chosen wind
speed, prints the interesting state values and power flows, and lists the
eigenvalues of the frozen-input Jacobian.  Exactly one neutral mode is
expected: the DC-link energy is a pure integrator.
"""

import numpy as np

import windfarm_rom as w
from windfarm_rom.model import STATE_NAMES, outputs
from windfarm_rom.simulation import (
    ScenarioConfig,
    build_inputs,
    find_steady_state,
    linear_stability,
)

params = w.default_params()
derived = w.derive(params)

for v_wind in (6.0, 8.0, 11.0):
    scen = ScenarioConfig(
        n_turbines=1, t_end=1.0,
        wind={"type": "constant", "value": v_wind},
        grid={"magnitude": 1.0, "steps": []},
    )
    u, _ = build_inputs(scen, params)
    uf = u.frozen_at(0.0)
    x_eq = find_steady_state(params, derived, uf)
    o = outputs(x_eq, 0.0, uf, params, derived)
    print(f"v_w = {v_wind:4.1f} m/s: omega_r = {x_eq.omega_r:.4f} p.u., "
          f"lambda = {o.lam:.3f}, C_p = {o.C_p:.4f}, "
          f"p_tot = {o.p_tot:+.4f}, p_r = {o.p_r:+.4f} p.u.")

# spectrum at the 8 m/s point
scen = ScenarioConfig(n_turbines=1, t_end=1.0,
                      wind={"type": "constant", "value": 8.0},
                      grid={"magnitude": 1.0, "steps": []})
u, _ = build_inputs(scen, params)
uf = u.frozen_at(0.0)
x_eq = find_steady_state(params, derived, uf)
eig = linear_stability(params, derived, x_eq, uf)

print("\neigenvalues (sorted by real part):")
for e in eig:
    tag = "   <- neutral (DC-link energy integrator)" if abs(e) < 1e-6 else ""
    print(f"  {e.real:+12.4f} {e.imag:+12.4f}j{tag}")

n_unstable = int(np.sum(eig.real > 1e-9))
print(f"\nmodes with positive real part: {n_unstable}")
