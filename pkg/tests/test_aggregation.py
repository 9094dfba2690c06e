import dataclasses
import math

import numpy as np
import pytest

from windfarm_rom import model as M
from windfarm_rom.aggregation import (
    lift_state,
    project_state,
    psi,
    scale_inputs,
    scale_params,
)


class TestPsi:
    def test_unit_fleet_is_identity(self):
        assert np.array_equal(psi(1).psi, np.ones(27))

    def test_eight_turbines(self):
        v = psi(8).psi
        assert np.array_equal(v[:16], 8.0 * np.ones(16))
        assert np.array_equal(v[16:], np.ones(11))

    def test_boundary_indices(self):
        v = psi(3).psi
        assert v[15] == 3.0  # the last power-integrator state scales
        assert v[16] == 1.0  # the generator speed does not

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            psi(0)


class TestScaleParams:
    def test_identity_at_one(self, params, derived):
        p1, d1 = scale_params(params, derived, 1)
        assert p1 == params
        assert d1 == derived

    def test_eight_turbine_values(self, params, derived):
        p8, d8 = scale_params(params, derived, 8)
        assert p8.H_t == 32.0
        assert p8.H_g == 8 * params.H_g
        assert p8.k_sh == 8 * params.k_sh
        assert p8.c_sh == 8 * params.c_sh
        assert p8.K_opt == 8 * params.K_opt
        assert p8.C_f == 8 * params.C_f
        assert p8.C == 8 * params.C
        assert p8.T_m_base == params.T_m_base / 8
        assert p8.L_i == params.L_i / 8
        assert p8.L_g == params.L_g / 8
        for name in ("k_pd_RCC", "k_id_RCC", "k_pq_RCC", "k_iq_RCC", "k_p_GCC", "k_i_GCC"):
            assert getattr(p8, name) == getattr(params, name) / 8, name
        # referred quantities scale directly
        assert d8.R_1 == pytest.approx(0.009492167 / 8, rel=1e-6)
        assert d8.R_2 == derived.R_2 / 8
        assert d8.L_s_prime == derived.L_s_prime / 8
        assert d8.X_m == derived.X_m / 8
        # and the invariant ones do not
        assert d8.K_mrr == derived.K_mrr
        assert d8.T_r == derived.T_r

    def test_outer_loops_and_pll_unscaled(self, params, derived):
        p8, _ = scale_params(params, derived, 8)
        for name in ("k_p_RPC", "k_i_RPC", "k_p_RTC", "k_i_RTC", "k_p_GPC", "k_i_GPC",
                     "k_p_PLL", "k_i_PLL", "omega_c_PLL", "omega_c_PC", "omega_t_base"):
            assert getattr(p8, name) == getattr(params, name), name

    def test_composition_law(self, params, derived):
        a, b = 1.7, 2.3
        p_ab, d_ab = scale_params(*scale_params(params, derived, a), b)
        p_c, d_c = scale_params(params, derived, a * b)
        for f in dataclasses.fields(type(params)):
            x, y = getattr(p_ab, f.name), getattr(p_c, f.name)
            assert x == pytest.approx(y, rel=1e-12), f.name
        for f in dataclasses.fields(type(derived)):
            x, y = getattr(d_ab, f.name), getattr(d_c, f.name)
            assert x == pytest.approx(y, rel=1e-12), f.name

    def test_rejects_zero(self, params, derived):
        with pytest.raises(ValueError):
            scale_params(params, derived, 0)

    def test_skip_is_a_negative_control(self, params, derived):
        p8, d8 = scale_params(params, derived, 8, skip=("R_1",))
        assert d8.R_1 == derived.R_1
        assert d8.R_2 == derived.R_2 / 8
        with pytest.raises(ValueError):
            scale_params(params, derived, 8, skip=("K_mrr",))


class TestStateMaps:
    def test_lift_identity_at_one(self):
        x = M.State(np.linspace(-1, 1, 27))
        assert np.array_equal(lift_state(x, 1).vec, x.vec)

    def test_lift_project_inverse(self):
        rng = np.random.default_rng(0)
        x = M.State(rng.normal(size=27))
        back = project_state(lift_state(x, 8), 8)
        assert np.allclose(back.vec, x.vec, rtol=0, atol=1e-16)

    def test_lift_scales_currents_not_speeds(self):
        x = M.State(np.full(27, 0.5))
        lifted = lift_state(x, 8)
        assert lifted.i_s_d == 8 * x.i_s_d
        assert lifted.omega_r == x.omega_r


class TestScaleInputs:
    def make_u(self, q_star):
        return M.InputSignals(q_star=q_star, grid_abc=lambda t: (1.0, -0.5, -0.5), wind=lambda t: 8.0)

    def test_zero_setpoint_stays_zero(self):
        assert scale_inputs(self.make_u(0.0), 8).q_star == 0.0

    def test_setpoint_scales(self):
        assert scale_inputs(self.make_u(0.1), 8).q_star == pytest.approx(0.8)

    def test_grid_and_wind_shared(self):
        u = self.make_u(0.0)
        s = scale_inputs(u, 5)
        assert s.grid_abc is u.grid_abc
        assert s.wind is u.wind
        for t in (0.0, 1.3, 9.9):
            assert s.wind(t) == u.wind(t)


class TestCommutation:
    """diag(psi) . f(x) == f_aggregate(diag(psi) . x): the vector-field form
    of the trajectory equivalence (checked exhaustively in acceptance)."""

    def test_commutation_on_random_states(self, params, derived, calm_inputs):
        u = calm_inputs
        f = lambda t, x, p, d, uu: M.rhs(x, t, uu, p, d)
        worst = 0.0
        for n in (2, 3, 8):
            pv = psi(n).psi
            pa, da = scale_params(params, derived, n)
            ua = scale_inputs(u, n)
            xs = M._random_states(100, seed=12)
            for i, x in enumerate(xs):
                t = 0.13 * i
                a = pv * M.rhs(x, t, u, params, derived)
                b = M.rhs(pv * x, t, ua, pa, da)
                rel = np.max(np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b))))
                worst = max(worst, float(rel))
        assert worst <= 1e-12

    def test_commutation_breaks_without_scaling(self, params, derived, calm_inputs):
        # leaving one referred parameter unscaled must destroy the identity
        u = calm_inputs
        pv = psi(8).psi
        pa, da = scale_params(params, derived, 8, skip=("R_1",))
        ua = scale_inputs(u, 8)
        x = M._random_states(1, seed=3)[0]
        a = pv * M.rhs(x, 0.0, u, params, derived)
        b = M.rhs(pv * x, 0.0, ua, pa, da)
        rel = np.max(np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b))))
        assert rel > 1e-6
