"""Shared fixtures and converters for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from chpdispatch.data import HourRecord, Scenario, SyntheticSpec, generate_synthetic
from chpdispatch.environment import HiddenState, ObservableState, decision_dim
from chpdispatch.grid_model import MicrogridConfig, default_config
from chpdispatch.policy import InputNormalization, PolicyNetwork, weight_count


@pytest.fixture(scope="session")
def winter_config() -> MicrogridConfig:
    return default_config("winter")


@pytest.fixture(scope="session")
def summer_config() -> MicrogridConfig:
    return default_config("summer")


@pytest.fixture(scope="session")
def winter_scenarios():
    return generate_synthetic(SyntheticSpec(seed=101, days=5))


@pytest.fixture(scope="session")
def summer_scenarios():
    return generate_synthetic(SyntheticSpec(seed=202, days=5, season="summer"))


def make_policy(
    rng: np.random.Generator,
    config: MicrogridConfig,
    scenarios,
    hidden_dim: int = 15,
    scale: float = 1.0,
) -> PolicyNetwork:
    """Random policy with normalization fitted to the given scenarios."""
    k = decision_dim(config)
    norm = InputNormalization.from_scenarios(scenarios)
    n = weight_count(6, hidden_dim, k)
    return PolicyNetwork.decode(rng.uniform(-scale, scale, n), 6, hidden_dim, k, norm)


def constant_scenario(
    label: str = "2019-01-10",
    temperature: float = 2.0,
    wind: float = 5.0,
    solar_rad: float = 100.0,
    streamflow: float = 12.0,
    prior_price: float = 0.04,
    load: float = 24000.0,
    heat_load: float = 150.0,
    solar_kw: float = 50.0,
    hydro_kw: float = 1000.0,
    rt_price: float = 0.05,
    gas_price: float = 3.5,
) -> Scenario:
    hours = tuple(
        HourRecord(
            observable=ObservableState(
                temperature=temperature,
                wind_speed=wind,
                solar_radiation=solar_rad,
                streamflow=streamflow,
                prior_day_rt_price=prior_price,
                hour_of_day=t,
            ),
            hidden=HiddenState(
                electric_load=load,
                heat_load=heat_load,
                solar_output=solar_kw,
                hydro_output=hydro_kw,
                rt_price=rt_price,
            ),
            gas_price=gas_price,
        )
        for t in range(24)
    )
    return Scenario(label=label, hours=hours)


def scenario_to_plain(scenario: Scenario, config: MicrogridConfig) -> dict:
    """Strip a scenario to plain lists for the independent oracle."""
    from chpdispatch.environment import default_initial_action

    start = scenario.initial_action or default_initial_action(config)
    return {
        "obs": [list(rec.observable.as_vector()) for rec in scenario.hours],
        "load": [rec.hidden.electric_load for rec in scenario.hours],
        "heat_load": [rec.hidden.heat_load for rec in scenario.hours],
        "solar": [rec.hidden.solar_output for rec in scenario.hours],
        "hydro": [rec.hidden.hydro_output for rec in scenario.hours],
        "rt_price": [rec.hidden.rt_price for rec in scenario.hours],
        "gas_price": [rec.gas_price for rec in scenario.hours],
        "init_power": [
            p if (on and p > 0.0) else 0.0
            for p, on in zip(start.chp_power, start.chp_on)
        ],
    }


def config_to_plain(config: MicrogridConfig) -> dict:
    return {
        "chp": [
            {
                "a_c": c.a_c,
                "b_c": c.b_c,
                "c_c": c.c_c,
                "a_q": c.a_q,
                "b_q": c.b_q,
                "p_min": c.p_min,
                "p_max": c.p_max,
                "ramp_down": c.ramp_down,
                "ramp_up": c.ramp_up,
                "q_min": c.q_min,
                "q_max": c.q_max,
                "heating_value": c.heating_value,
            }
            for c in config.chp
        ],
        "boiler": {
            "a_b": config.boiler.a_b,
            "b_b": config.boiler.b_b,
            "c_b": config.boiler.c_b,
            "q_min": config.boiler.q_min,
            "q_max": config.boiler.q_max,
        },
        "steam_turbine": {
            "a1_s": config.steam_turbine.a1_s,
            "b1_s": config.steam_turbine.b1_s,
            "a2_s": config.steam_turbine.a2_s,
            "b2_s": config.steam_turbine.b2_s,
            "c_s": config.steam_turbine.c_s,
        },
        "gas_emission_rate": config.emission.gas_emission_rate,
        "grid_emission_factor": config.emission.grid_emission_factor,
        "heat_waste_threshold": config.emission.heat_waste_threshold,
        "commit_units": list(config.commitment_units),
    }


def policy_to_plain(policy: PolicyNetwork) -> dict:
    return {
        "input_dim": policy.input_dim,
        "hidden_dim": policy.hidden_dim,
        "output_dim": policy.output_dim,
        "offsets": list(policy.normalization.offsets),
        "scales": list(policy.normalization.scales),
    }
