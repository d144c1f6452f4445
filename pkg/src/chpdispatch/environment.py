"""Hourly dispatch environment for the microgrid.

Wires the component models into a sequential decision process: a policy
emits normalized decisions in [0, 1], which are mapped onto the feasible
window of each unit (ramp limits anchored at the previous hour), the grid
exchange closes the electric balance exactly, and three per-hour rewards
(cost, emissions, heat-waste indicator) plus the heat-reliability
constraint are accumulated over a 24-hour day.

Decision-vector layout for ``nc`` CHP units (see :func:`decision_names`):

    [0 .. nc)            CHP electric power
    [nc .. 2 nc)         CHP steam
    [2 nc]               boiler steam
    [2 nc + 1 ..]        commitment flags, one per switchable unit
                         (CHPs in index order, then boiler); >= 0.5 is on

Everything here is a pure function of its arguments; simulations of
different policies or scenarios can run concurrently without shared state.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .grid_model import (
    LB_PER_METRIC_TON,
    MicrogridConfig,
    grid_exchange_cost,
    steam_turbine_power,
    total_gas,
)

#: Exogenous signals a policy can observe, in decision-vector order.
OBSERVABLE_SIGNALS = (
    "temperature",
    "wind_speed",
    "solar_radiation",
    "streamflow",
    "prior_day_rt_price",
)

#: Hours that must satisfy >= 95 % of heat load each day.
RELIABLE_HOURS_REQUIRED = 22
HEAT_SATISFACTION_FLOOR = 0.95
HOURS_PER_DAY = 24


@dataclass(frozen=True)
class ObservableState:
    """Signals available to the agent before it acts: weather, streamflow,
    the previous day's real-time price, and the hour of day."""

    temperature: float  # degC
    wind_speed: float  # m/s
    solar_radiation: float  # W/m^2
    streamflow: float  # m^3/s
    prior_day_rt_price: float  # $/kWh
    hour_of_day: int

    def __post_init__(self) -> None:
        if not 0 <= self.hour_of_day <= 23:
            raise ValueError(f"hour_of_day must be in [0, 23], got {self.hour_of_day}")

    def as_vector(self) -> np.ndarray:
        return np.array(
            [
                self.temperature,
                self.wind_speed,
                self.solar_radiation,
                self.streamflow,
                self.prior_day_rt_price,
                float(self.hour_of_day),
            ]
        )


@dataclass(frozen=True)
class HiddenState:
    """Realizations the agent never sees before acting: loads, renewable
    outputs, and the real-time price."""

    electric_load: float  # kW
    heat_load: float  # klb/h
    solar_output: float  # kW
    hydro_output: float  # kW
    rt_price: float  # $/kWh, may be negative

    def __post_init__(self) -> None:
        if self.electric_load <= 0.0:
            raise ValueError(f"electric_load must be > 0, got {self.electric_load}")
        if self.heat_load < 0.0:
            raise ValueError(f"heat_load must be >= 0, got {self.heat_load}")
        if self.solar_output < 0.0 or self.hydro_output < 0.0:
            raise ValueError("renewable outputs must be >= 0")


@dataclass(frozen=True)
class Action:
    """One hour's dispatch decision; off units hold their outputs at zero."""

    chp_power: tuple[float, ...]
    chp_steam: tuple[float, ...]
    boiler_steam: float
    chp_on: tuple[bool, ...]
    boiler_on: bool

    def __post_init__(self) -> None:
        if len(self.chp_power) != len(self.chp_steam) or len(self.chp_power) != len(
            self.chp_on
        ):
            raise ValueError("chp_power, chp_steam and chp_on must have equal length")
        for i, on in enumerate(self.chp_on):
            if not on and (self.chp_power[i] != 0.0 or self.chp_steam[i] != 0.0):
                raise ValueError(f"off CHP {i + 1} must have zero power and steam")
        if not self.boiler_on and self.boiler_steam != 0.0:
            raise ValueError("off boiler must have zero steam")

    @property
    def steam_total(self) -> float:
        total = 0.0
        for q in self.chp_steam:
            total += q
        return total + self.boiler_steam


@dataclass(frozen=True)
class HourOutcome:
    """Everything the simulator records about one dispatched hour."""

    action: Action
    st_power: float  # kW recovered by the steam turbine
    exchange: float  # kW at the grid tie, positive = purchase
    cost: float  # $
    emission_lb: float
    heat_waste_flag: int
    heat_satisfaction: float  # steam delivered / heat load
    reliability_flag: int


class DayResult(NamedTuple):
    objectives: np.ndarray  # (cost $, emission MT, heat-waste indicator sum)
    violation: float
    trace: list[HourOutcome]


@dataclass(frozen=True)
class EvaluationResult:
    """Objectives averaged over a scenario ensemble.

    ``violation`` is zero exactly when the heat-reliability constraint held
    on every scenario.
    """

    objectives: np.ndarray
    violation: float
    per_hour_trace: list[list[HourOutcome]] | None = None


def decision_dim(config: MicrogridConfig) -> int:
    return 2 * len(config.chp) + 1 + len(config.commitment_units)


def decision_names(config: MicrogridConfig) -> list[str]:
    nc = len(config.chp)
    names = [f"chp{i + 1}_power" for i in range(nc)]
    names += [f"chp{i + 1}_steam" for i in range(nc)]
    names.append("boiler_steam")
    names += [f"{unit}_commit" for unit in config.commitment_units]
    return names


def default_initial_action(config: MicrogridConfig) -> Action:
    """Warm start for hour 0 when a scenario does not supply one: every unit
    on, CHPs at the midpoint of their power range, no steam."""
    nc = len(config.chp)
    return Action(
        chp_power=tuple(0.5 * (c.p_min + c.p_max) for c in config.chp),
        chp_steam=(0.0,) * nc,
        boiler_steam=0.0,
        chp_on=(True,) * nc,
        boiler_on=True,
    )


def clamp_action(u: Sequence[float], prev: Action, config: MicrogridConfig) -> Action:
    """Convert normalized decisions into a feasible :class:`Action`.

    CHP power maps affinely onto the ramp-and-capacity window anchored at
    the previous hour; a unit that was off re-enters through the window
    anchored at p_min (ramping across an off period is waived).  Steam maps
    onto the static steam limits.  Commitment outputs at or above 0.5 turn a
    switchable unit on; an off unit's continuous outputs are forced to zero.
    """
    u = np.asarray(u, dtype=float)
    k = decision_dim(config)
    if u.shape != (k,):
        raise ValueError(f"expected {k} decisions, got shape {u.shape}")
    if np.any(u < 0.0) or np.any(u > 1.0):
        raise ValueError("decisions must lie in [0, 1]")

    nc = len(config.chp)
    commit_units = config.commitment_units
    on = {unit: bool(u[2 * nc + 1 + j] >= 0.5) for j, unit in enumerate(commit_units)}

    chp_power = []
    chp_steam = []
    chp_on = []
    for i, params in enumerate(config.chp):
        unit = f"chp{i + 1}"
        unit_on = on.get(unit, True)
        chp_on.append(unit_on)
        if not unit_on:
            chp_power.append(0.0)
            chp_steam.append(0.0)
            continue
        if prev.chp_on[i] and prev.chp_power[i] > 0.0:
            lo = max(params.p_min, prev.chp_power[i] + params.ramp_down)
            hi = min(params.p_max, prev.chp_power[i] + params.ramp_up)
        else:
            lo = params.p_min
            hi = min(params.p_max, params.p_min + params.ramp_up)
        assert lo <= hi, "feasible power window collapsed"
        p = lo + u[i] * (hi - lo)
        chp_power.append(float(min(max(p, lo), hi)))
        q = params.q_min + u[nc + i] * (params.q_max - params.q_min)
        chp_steam.append(float(min(max(q, params.q_min), params.q_max)))

    boiler_on = on.get("boiler", True)
    if boiler_on:
        b = config.boiler
        qb = b.q_min + u[2 * nc] * (b.q_max - b.q_min)
        boiler_steam = float(min(max(qb, b.q_min), b.q_max))
    else:
        boiler_steam = 0.0

    return Action(
        chp_power=tuple(chp_power),
        chp_steam=tuple(chp_steam),
        boiler_steam=boiler_steam,
        chp_on=tuple(chp_on),
        boiler_on=boiler_on,
    )


def close_load_balance(action: Action, st_power: float, hidden: HiddenState) -> float:
    """Grid exchange (kW) that balances the electric load exactly.

    Positive means purchasing from the utility, negative means selling.
    """
    chp_sum = 0.0
    for p in action.chp_power:
        chp_sum += p
    return (
        hidden.electric_load
        - chp_sum
        - st_power
        - hidden.hydro_output
        - hidden.solar_output
    )


def hour_rewards(
    action: Action,
    p_e: float,
    hidden: HiddenState,
    gas_price: float,
    config: MicrogridConfig,
) -> tuple[float, float, int]:
    """Per-hour (cost $, emission lb, heat-waste flag).

    Cost is gas burned at the gas price plus the signed grid exchange at the
    real-time price.  Emissions combine local combustion with purchased
    power; exports earn no emission credit.  The heat-waste flag trips when
    steam production exceeds the heat load by more than the threshold
    ratio; with zero heat load, any steam at all is waste.
    """
    gas = total_gas(action, config)
    cost = gas * gas_price + grid_exchange_cost(p_e, hidden.rt_price)
    emission = gas * config.emission.gas_emission_rate + (
        config.emission.grid_emission_factor * max(p_e, 0.0)
    )
    steam = action.steam_total
    if hidden.heat_load > 0.0:
        waste = steam / hidden.heat_load > config.emission.heat_waste_threshold
    else:
        waste = steam > 0.0
    return cost, emission, int(waste)


def heat_reliability(day_trace: Sequence[HourOutcome]) -> tuple[float, float]:
    """Fraction of hours meeting the 95 % heat-satisfaction floor, and the
    shortfall below the required 22-of-24 hours (zero when satisfied)."""
    if len(day_trace) != HOURS_PER_DAY:
        raise ValueError(f"expected {HOURS_PER_DAY} hours, got {len(day_trace)}")
    passed = sum(outcome.reliability_flag for outcome in day_trace)
    fraction = passed / HOURS_PER_DAY
    return fraction, max(0.0, RELIABLE_HOURS_REQUIRED / HOURS_PER_DAY - fraction)


def simulate_day(policy, scenario, config: MicrogridConfig) -> DayResult:
    """Run one policy through one 24-hour scenario.

    Deterministic: the same (policy, scenario, config) triple always yields
    bit-identical outcomes.
    """
    if len(scenario.hours) != HOURS_PER_DAY:
        raise ValueError(f"scenario must have {HOURS_PER_DAY} hours")
    prev = scenario.initial_action or default_initial_action(config)
    trace: list[HourOutcome] = []
    day_cost = 0.0
    day_emission_lb = 0.0
    day_waste = 0
    for record in scenario.hours:
        u = policy.forward(record.observable)
        action = clamp_action(u, prev, config)
        st_power = steam_turbine_power(action.steam_total, config.steam_turbine)
        p_e = close_load_balance(action, st_power, record.hidden)
        cost, emission_lb, waste = hour_rewards(
            action, p_e, record.hidden, record.gas_price, config
        )
        steam = action.steam_total
        heat_load = record.hidden.heat_load
        if heat_load > 0.0:
            satisfaction = steam / heat_load
        else:
            satisfaction = math.inf if steam > 0.0 else 1.0
        reliable = satisfaction >= HEAT_SATISFACTION_FLOOR
        trace.append(
            HourOutcome(
                action=action,
                st_power=st_power,
                exchange=p_e,
                cost=cost,
                emission_lb=emission_lb,
                heat_waste_flag=waste,
                heat_satisfaction=satisfaction,
                reliability_flag=int(reliable),
            )
        )
        day_cost += cost
        day_emission_lb += emission_lb
        day_waste += waste
        prev = action
    _, violation = heat_reliability(trace)
    objectives = np.array([day_cost, day_emission_lb / LB_PER_METRIC_TON, float(day_waste)])
    return DayResult(objectives=objectives, violation=violation, trace=trace)


def evaluate_policy(
    policy, scenarios: Sequence, config: MicrogridConfig, keep_traces: bool = False
) -> EvaluationResult:
    """Average the three daily objectives and the reliability violation over
    a scenario ensemble (unweighted means)."""
    if len(scenarios) == 0:
        raise ValueError("scenario list must be nonempty")
    results = [simulate_day(policy, s, config) for s in scenarios]
    objectives = np.mean([r.objectives for r in results], axis=0)
    violation = float(np.mean([r.violation for r in results]))
    traces = [r.trace for r in results] if keep_traces else None
    return EvaluationResult(objectives=objectives, violation=violation, per_hour_trace=traces)


def trace_columns(nc: int) -> list[str]:
    cols = ["hour"]
    cols += [f"chp{i + 1}_power_kw" for i in range(nc)]
    cols += [f"chp{i + 1}_steam_klbh" for i in range(nc)]
    cols.append("boiler_steam_klbh")
    cols += [f"chp{i + 1}_on" for i in range(nc)]
    cols += [
        "boiler_on",
        "st_power_kw",
        "exchange_kw",
        "cost_usd",
        "emission_lb",
        "heat_waste_flag",
        "heat_satisfaction",
        "reliability_flag",
    ]
    return cols


def export_trace(trace: Sequence[HourOutcome], path: str | Path) -> None:
    """Write one day's hourly dispatch to CSV (full float precision)."""
    nc = len(trace[0].action.chp_power)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(trace_columns(nc))
        for hour, o in enumerate(trace):
            row: list = [hour]
            row += [repr(float(p)) for p in o.action.chp_power]
            row += [repr(float(q)) for q in o.action.chp_steam]
            row.append(repr(float(o.action.boiler_steam)))
            row += [int(on) for on in o.action.chp_on]
            row += [
                int(o.action.boiler_on),
                repr(float(o.st_power)),
                repr(float(o.exchange)),
                repr(float(o.cost)),
                repr(float(o.emission_lb)),
                o.heat_waste_flag,
                repr(float(o.heat_satisfaction)),
                o.reliability_flag,
            ]
            writer.writerow(row)
