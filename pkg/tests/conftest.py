import pytest

import windfarm_rom as w
from windfarm_rom.simulation import ScenarioConfig, build_inputs, find_steady_state


def calm_scenario(**kw):
    """Constant 8 m/s wind, flat 1 p.u. grid; short and event-free."""
    base = dict(
        n_turbines=1,
        t_end=1.0,
        sample_dt=0.01,
        seed=7,
        wind={"type": "constant", "value": 8.0},
        grid={"magnitude": 1.0, "steps": []},
    )
    base.update(kw)
    return ScenarioConfig(**base)


@pytest.fixture(scope="session")
def params():
    return w.default_params()


@pytest.fixture(scope="session")
def derived(params):
    return w.derive(params)


@pytest.fixture(scope="session")
def calm_inputs(params):
    u, _ = build_inputs(calm_scenario(), params)
    return u


@pytest.fixture(scope="session")
def x_eq(params, derived, calm_inputs):
    return find_steady_state(params, derived, calm_inputs.frozen_at(0.0))
