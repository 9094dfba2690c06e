import dataclasses
import json
import math

import pytest

from windfarm_rom import params as P
from windfarm_rom.model import cp_lambda_opt, mechanical_torque


def table_oracle():
    """Independent arithmetic straight from the parameter-table formulas."""
    l_m = 4.0
    l_s = 1.101 * l_m
    l_r = 1.005 * l_s
    r_s = 0.005
    r_r = 1.1 * r_s
    k_mrr = l_m / l_r
    return {
        "K_mrr": k_mrr,
        "L_s_prime": l_s - l_m * k_mrr,
        "R_2": k_mrr**2 * r_r,
        "R_1": r_s + k_mrr**2 * r_r,
        "T_r": l_r / r_r,
        "X_m": 1.0 * l_m,
    }


def test_derive_matches_table_formulas(params, derived):
    oracle = table_oracle()
    for name, want in oracle.items():
        assert getattr(derived, name) == pytest.approx(want, rel=1e-14), name
    # magnitudes quoted to a few significant digits
    assert derived.K_mrr == pytest.approx(0.90375, abs=5e-5)
    assert derived.L_s_prime == pytest.approx(0.78900, abs=5e-5)
    assert derived.R_2 == pytest.approx(0.004492, abs=5e-6)
    assert derived.R_1 == pytest.approx(0.009492, abs=5e-6)


def test_derived_invariants(derived, params):
    assert derived.L_s_prime > 0.0
    assert derived.R_1 > params.R_s
    assert derived.T_r > 0.0
    assert 0.0 < derived.K_mrr < 1.0


def test_derive_is_pure(params):
    assert P.derive(params) == P.derive(params)


def test_default_params_table_values(params):
    assert params.omega_nom == 2.0 * math.pi * 60.0
    assert params.omega_s == 1.0
    assert params.L_m == 4.0
    assert params.L_s == 1.101 * 4.0
    assert params.L_r == 1.005 * params.L_s
    assert params.R_s == 0.005
    assert params.R_r == 1.1 * 0.005
    assert params.H_t == 4.0
    assert params.H_g == 0.4
    assert params.k_sh == 0.3
    assert params.c_sh == 0.01
    assert params.beta == 0.0
    assert params.Cp_max == 0.4382
    assert params.P_rated == 5.0e6
    assert params.R_blade == 58.6
    assert params.rho == 1.225


def test_torque_base_gives_unit_torque_at_rated(params):
    v_rated = P.rated_wind_speed(params.P_rated, params.rho, params.R_blade, params.Cp_max)
    assert v_rated == pytest.approx(12.0, abs=0.1)
    t_m = mechanical_torque(1.0, v_rated, params)
    assert t_m == pytest.approx(1.0, abs=1e-6)


def test_optimal_torque_constant_is_unity_on_this_base(params):
    assert params.K_opt == pytest.approx(1.0, abs=1e-9)


def test_speed_base_matches_rated_point(params):
    v_rated = P.rated_wind_speed(params.P_rated, params.rho, params.R_blade, params.Cp_max)
    assert params.omega_t_base == pytest.approx(cp_lambda_opt() * v_rated / params.R_blade, rel=1e-14)


@pytest.mark.parametrize("field,value", [("H_t", -1.0), ("L_i", 0.0), ("R_s", -0.005)])
def test_positivity_violation_names_field(params, field, value):
    bad = dataclasses.replace(params, **{field: value})
    with pytest.raises(P.ParamError, match=field):
        P.validate(bad)


def test_cp_max_beyond_betz_rejected(params):
    bad = dataclasses.replace(params, Cp_max=0.7)
    with pytest.raises(P.ParamError, match="Cp_max"):
        P.validate(bad)


def test_nonphysical_inductances_name_L_s_prime(params):
    bad = dataclasses.replace(params, L_r=4.0, L_s=4.0, L_m=4.0)
    with pytest.raises(P.ParamError, match="L_s_prime"):
        P.derive(bad)


def test_load_config_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"params": {"H_t": 8.0}}))
    p, _ = P.load_config(cfg)
    assert p.H_t == 8.0
    assert p.H_g == 0.4  # not re-derived from the override


def test_load_config_empty_file_is_defaults(tmp_path):
    cfg = tmp_path / "empty.json"
    cfg.write_text("")
    p, scen = P.load_config(cfg)
    assert p == P.default_params()


def test_load_config_unknown_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"params": {"H_tt": 8.0}}))
    with pytest.raises(P.ConfigError, match="H_tt"):
        P.load_config(cfg)


def test_load_config_unknown_toplevel_key(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"parms": {}}))
    with pytest.raises(P.ConfigError, match="parms"):
        P.load_config(cfg)


def test_load_config_parse_error_has_location(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"params": {,}}')
    with pytest.raises(P.ConfigError, match="line 1"):
        P.load_config(cfg)


def test_load_config_nonphysical_machine(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"params": {"L_s": 4.0, "L_r": 4.0}}))
    with pytest.raises(P.ConfigError, match="L_s_prime"):
        P.load_config(cfg)


def test_load_config_non_numeric_value(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"params": {"H_t": "big"}}))
    with pytest.raises(P.ConfigError, match="H_t"):
        P.load_config(cfg)


def test_config_roundtrip_bit_identical(tmp_path, params):
    text = P.config_to_json(params, {"t_end": 2.0, "grid": {"magnitude": 1.0, "steps": []}})
    cfg = tmp_path / "c.json"
    cfg.write_text(text)
    p2, _ = P.load_config(cfg)
    for f in dataclasses.fields(P.TurbineParams):
        assert getattr(p2, f.name) == getattr(params, f.name), f.name
