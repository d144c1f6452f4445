"""Scenario ingestion, validation, and synthetic generation.

A scenario is one day of 24 hourly records: the observable signals a policy
may use, the hidden realizations the simulator needs, and the gas price.
Scenarios arrive as CSV with this fixed header (one row per hour, rows of a
day contiguous and in hour order):

    datetime, temperature_c, wind_mps, solar_wm2, streamflow_cms,
    price_prior_rt_usd_mwh, price_rt_usd_mwh, gas_usd_dth,
    load_kw, heat_load_klbh, solar_kw, hydro_kw

Prices are ingested in $/MWh and held internally in $/kWh; all other
columns are already in internal units.  The writer renders floats at full
precision so ``load_scenarios(write_scenarios(s))`` reproduces every value
bit-exactly (scaled price columns fall back to an exact decimal expansion
when the short form would not invert exactly).

The synthetic generator exists for tests and desk-scale studies: each
signal is a deterministic seeded sinusoid-plus-noise, and the hidden loads
are tied to temperature by a documented affine rule so a policy has
structure to learn.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from decimal import Decimal, localcontext
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .environment import Action, HiddenState, ObservableState

SCHEMA = (
    "datetime",
    "temperature_c",
    "wind_mps",
    "solar_wm2",
    "streamflow_cms",
    "price_prior_rt_usd_mwh",
    "price_rt_usd_mwh",
    "gas_usd_dth",
    "load_kw",
    "heat_load_klbh",
    "solar_kw",
    "hydro_kw",
)

WINTER_MONTHS = frozenset({10, 11, 12, 1, 2, 3, 4})


class ScenarioLoadError(ValueError):
    """Raised when a scenario file violates the documented schema."""


@dataclass(frozen=True)
class HourRecord:
    observable: ObservableState
    hidden: HiddenState
    gas_price: float  # $/dth


@dataclass(frozen=True)
class Scenario:
    """One day of hourly signals, optionally with the dispatch state the
    day starts from (hour 0 ramps against it)."""

    label: str
    hours: tuple[HourRecord, ...]
    initial_action: Action | None = None

    def __post_init__(self) -> None:
        if len(self.hours) != 24:
            raise ValueError(f"scenario {self.label!r} has {len(self.hours)} hours, expected 24")
        for t, rec in enumerate(self.hours):
            if rec.observable.hour_of_day != t:
                raise ValueError(
                    f"scenario {self.label!r}: record {t} carries hour "
                    f"{rec.observable.hour_of_day}"
                )
            values = rec.observable.as_vector().tolist() + [
                rec.hidden.electric_load,
                rec.hidden.heat_load,
                rec.hidden.solar_output,
                rec.hidden.hydro_output,
                rec.hidden.rt_price,
                rec.gas_price,
            ]
            if not all(math.isfinite(v) for v in values):
                raise ValueError(f"scenario {self.label!r}: non-finite value at hour {t}")


def _parse_price_mwh(text: str) -> float:
    """$/MWh column text to $/kWh, with a decimal-exact scale so the writer
    can always produce an exactly inverting representation."""
    with localcontext() as ctx:
        ctx.prec = 400
        return float(Decimal(text).scaleb(-3))


def _format_price_mwh(price_kwh: float) -> str:
    price_kwh = float(price_kwh)
    short = repr(price_kwh * 1000.0)
    if _parse_price_mwh(short) == price_kwh:
        return short
    with localcontext() as ctx:
        ctx.prec = 400
        return format(Decimal(price_kwh).scaleb(3), "f")


def _row_float(row: Mapping[str, str], column: str, line: int) -> float:
    text = row[column]
    try:
        value = float(text)
    except (TypeError, ValueError) as exc:
        raise ScenarioLoadError(f"row {line}: column {column!r} is not numeric: {text!r}") from exc
    if not math.isfinite(value):
        raise ScenarioLoadError(f"row {line}: column {column!r} is not finite: {text!r}")
    return value


def load_scenarios(path: str | Path) -> list[Scenario]:
    """Read and validate a scenario CSV; any schema violation raises
    :class:`ScenarioLoadError` naming the offending column and row."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"scenario file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ScenarioLoadError(f"{path}: empty file")
        missing = [c for c in SCHEMA if c not in reader.fieldnames]
        if missing:
            raise ScenarioLoadError(f"{path}: missing column(s): {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise ScenarioLoadError(f"{path}: no data rows")

    scenarios: list[Scenario] = []
    label: str | None = None
    records: list[HourRecord] = []
    first_line = 0

    def flush(line: int) -> None:
        if label is None:
            return
        if len(records) != 24:
            raise ScenarioLoadError(
                f"rows {first_line}-{line}: day {label} has {len(records)} rows, "
                "expected 24 (partial day)"
            )
        scenarios.append(Scenario(label=label, hours=tuple(records)))

    for line, row in enumerate(rows, start=2):
        text = row.get("datetime")
        try:
            stamp = datetime.fromisoformat(text)
        except (TypeError, ValueError) as exc:
            raise ScenarioLoadError(f"row {line}: bad datetime {text!r}") from exc
        day = stamp.date().isoformat()
        if day != label:
            flush(line - 1)
            label, records, first_line = day, [], line
        if len(records) > 23:
            raise ScenarioLoadError(f"row {line}: day {day} has more than 24 rows")
        if stamp.hour != len(records):
            raise ScenarioLoadError(
                f"row {line}: expected hour {len(records)} of day {day}, got {stamp.hour}"
            )
        try:
            observable = ObservableState(
                temperature=_row_float(row, "temperature_c", line),
                wind_speed=_row_float(row, "wind_mps", line),
                solar_radiation=_row_float(row, "solar_wm2", line),
                streamflow=_row_float(row, "streamflow_cms", line),
                prior_day_rt_price=_parse_price_mwh(row["price_prior_rt_usd_mwh"]),
                hour_of_day=stamp.hour,
            )
            hidden = HiddenState(
                electric_load=_row_float(row, "load_kw", line),
                heat_load=_row_float(row, "heat_load_klbh", line),
                solar_output=_row_float(row, "solar_kw", line),
                hydro_output=_row_float(row, "hydro_kw", line),
                rt_price=_parse_price_mwh(row["price_rt_usd_mwh"]),
            )
        except ScenarioLoadError:
            raise
        except (ValueError, ArithmeticError) as exc:
            raise ScenarioLoadError(f"row {line}: {exc}") from exc
        records.append(
            HourRecord(
                observable=observable,
                hidden=hidden,
                gas_price=_row_float(row, "gas_usd_dth", line),
            )
        )
    flush(len(rows) + 1)
    return scenarios


def write_scenarios(scenarios: Sequence[Scenario], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCHEMA)
        for scenario in scenarios:
            for t, rec in enumerate(scenario.hours):
                obs, hid = rec.observable, rec.hidden
                writer.writerow(
                    [
                        f"{scenario.label}T{t:02d}:00",
                        repr(float(obs.temperature)),
                        repr(float(obs.wind_speed)),
                        repr(float(obs.solar_radiation)),
                        repr(float(obs.streamflow)),
                        _format_price_mwh(obs.prior_day_rt_price),
                        _format_price_mwh(hid.rt_price),
                        repr(float(rec.gas_price)),
                        repr(float(hid.electric_load)),
                        repr(float(hid.heat_load)),
                        repr(float(hid.solar_output)),
                        repr(float(hid.hydro_output)),
                    ]
                )


def split_by_season(scenarios: Sequence[Scenario]) -> tuple[list[Scenario], list[Scenario]]:
    """October-April days are winter, May-September days are summer."""
    winter: list[Scenario] = []
    summer: list[Scenario] = []
    for scenario in scenarios:
        try:
            month = date.fromisoformat(scenario.label).month
        except ValueError as exc:
            raise ValueError(f"unparseable scenario date label {scenario.label!r}") from exc
        (winter if month in WINTER_MONTHS else summer).append(scenario)
    return winter, summer


@dataclass(frozen=True)
class SignalSpec:
    """Daily sinusoid: mean + amplitude * sin(2 pi (t - phase) / 24) plus
    Gaussian noise of the given scale (peak lands at phase + 6 h)."""

    mean: float
    amplitude: float
    phase: float
    noise: float

    def __post_init__(self) -> None:
        if self.noise < 0.0:
            raise ValueError(f"noise scale must be >= 0, got {self.noise}")

    def value(self, hour: int, shock: float) -> float:
        angle = 2.0 * math.pi * (hour - self.phase) / 24.0
        return float(self.mean + self.amplitude * math.sin(angle) + self.noise * shock)


#: Base-signal generation order; fixed so a seed pins every draw.
SIGNAL_ORDER = (
    "temperature",
    "wind_speed",
    "solar_radiation",
    "streamflow",
    "rt_price",
    "gas_price",
    "electric_load",
    "heat_load",
    "hydro_output",
)

WINTER_SIGNALS: dict[str, SignalSpec] = {
    "temperature": SignalSpec(0.0, 5.0, 9.0, 1.5),
    "wind_speed": SignalSpec(6.0, 2.0, 0.0, 0.8),
    "solar_radiation": SignalSpec(120.0, 220.0, 6.5, 25.0),
    "streamflow": SignalSpec(14.0, 3.0, 18.0, 1.0),
    "rt_price": SignalSpec(0.045, 0.018, 12.0, 0.004),
    "gas_price": SignalSpec(3.5, 0.0, 0.0, 0.05),
    "electric_load": SignalSpec(22000.0, 3500.0, 12.0, 600.0),
    "heat_load": SignalSpec(170.0, 35.0, 1.0, 8.0),
    "hydro_output": SignalSpec(1100.0, 150.0, 18.0, 60.0),
}

SUMMER_SIGNALS: dict[str, SignalSpec] = {
    "temperature": SignalSpec(22.0, 6.0, 9.0, 1.8),
    "wind_speed": SignalSpec(4.5, 1.5, 0.0, 0.7),
    "solar_radiation": SignalSpec(260.0, 340.0, 6.5, 35.0),
    "streamflow": SignalSpec(8.0, 2.0, 18.0, 0.8),
    "rt_price": SignalSpec(0.038, 0.022, 9.0, 0.006),
    "gas_price": SignalSpec(2.8, 0.0, 0.0, 0.05),
    "electric_load": SignalSpec(20000.0, 4500.0, 9.0, 700.0),
    "heat_load": SignalSpec(60.0, 12.0, 1.0, 4.0),
    "hydro_output": SignalSpec(800.0, 120.0, 18.0, 50.0),
}

# Affine couplings from temperature deviation into the hidden loads, and
# from the other observables into the renewable outputs.
LOAD_TEMP_SLOPE = {"winter": -180.0, "summer": 250.0}  # kW per degC
HEAT_TEMP_SLOPE = {"winter": -4.0, "summer": -1.5}  # klb/h per degC
HYDRO_FLOW_SLOPE = 25.0  # kW per m^3/s
SOLAR_KW_PER_WM2 = 0.2
SOLAR_CAP_KW = 200.0


@dataclass(frozen=True)
class SyntheticSpec:
    """Deterministic recipe for an ensemble of synthetic days."""

    seed: int
    days: int
    season: str = "winter"
    overrides: Mapping[str, SignalSpec] | None = None

    def __post_init__(self) -> None:
        if self.days < 1:
            raise ValueError(f"days must be >= 1, got {self.days}")
        if self.season not in ("winter", "summer"):
            raise ValueError(f"season must be 'winter' or 'summer', got {self.season!r}")
        if self.overrides:
            unknown = set(self.overrides) - set(SIGNAL_ORDER)
            if unknown:
                raise ValueError(f"unknown signals in overrides: {sorted(unknown)}")

    def signals(self) -> dict[str, SignalSpec]:
        base = dict(WINTER_SIGNALS if self.season == "winter" else SUMMER_SIGNALS)
        if self.overrides:
            base.update(self.overrides)
        return base


def synthetic_spec_to_dict(spec: SyntheticSpec) -> dict:
    doc: dict = {"seed": spec.seed, "days": spec.days, "season": spec.season}
    if spec.overrides:
        doc["overrides"] = {
            name: {"mean": s.mean, "amplitude": s.amplitude, "phase": s.phase, "noise": s.noise}
            for name, s in spec.overrides.items()
        }
    return doc


def synthetic_spec_from_dict(doc: Mapping) -> SyntheticSpec:
    overrides = None
    if "overrides" in doc:
        overrides = {name: SignalSpec(**params) for name, params in doc["overrides"].items()}
    return SyntheticSpec(
        seed=int(doc["seed"]),
        days=int(doc["days"]),
        season=doc.get("season", "winter"),
        overrides=overrides,
    )


def generate_synthetic(spec: SyntheticSpec) -> list[Scenario]:
    """Generate ``spec.days`` scenarios; identical specs give identical data.

    The previous-day price forecast is an independent draw of the same
    price process, so it predicts the real-time price through the shared
    daily shape without revealing it.
    """
    signals = spec.signals()
    season = spec.season
    rng = np.random.default_rng(spec.seed)
    start = date(2019, 1, 1) if season == "winter" else date(2019, 7, 1)
    scenarios: list[Scenario] = []
    for day in range(spec.days):
        label = (start + timedelta(days=day)).isoformat()
        shocks = {name: rng.standard_normal(24) for name in SIGNAL_ORDER}
        prior_shocks = rng.standard_normal(24)
        records: list[HourRecord] = []
        for t in range(24):
            base = {name: signals[name].value(t, shocks[name][t]) for name in SIGNAL_ORDER}
            temp_dev = base["temperature"] - signals["temperature"].mean
            solar_rad = max(base["solar_radiation"], 0.0)
            streamflow = max(base["streamflow"], 0.01)
            electric_load = max(
                base["electric_load"] + LOAD_TEMP_SLOPE[season] * temp_dev, 1000.0
            )
            heat_load = max(base["heat_load"] + HEAT_TEMP_SLOPE[season] * temp_dev, 0.0)
            solar_kw = min(SOLAR_KW_PER_WM2 * solar_rad, SOLAR_CAP_KW)
            hydro_kw = max(
                base["hydro_output"]
                + HYDRO_FLOW_SLOPE * (streamflow - signals["streamflow"].mean),
                0.0,
            )
            records.append(
                HourRecord(
                    observable=ObservableState(
                        temperature=base["temperature"],
                        wind_speed=max(base["wind_speed"], 0.0),
                        solar_radiation=solar_rad,
                        streamflow=streamflow,
                        prior_day_rt_price=signals["rt_price"].value(t, prior_shocks[t]),
                        hour_of_day=t,
                    ),
                    hidden=HiddenState(
                        electric_load=electric_load,
                        heat_load=heat_load,
                        solar_output=solar_kw,
                        hydro_output=hydro_kw,
                        rt_price=base["rt_price"],
                    ),
                    gas_price=max(base["gas_price"], 0.5),
                )
            )
        scenarios.append(Scenario(label=label, hours=tuple(records)))
    return scenarios
