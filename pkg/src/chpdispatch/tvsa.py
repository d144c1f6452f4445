"""Time-varying sensitivity analysis of a trained policy.

For each decision output and each hour of the day, the variance of the
decision across a scenario ensemble is attributed to the five exogenous
inputs by a second-order Taylor expansion around the ensemble mean:

    first_order[a]    = (du/da)^2 * Var(a)
    second_order[a,b] = (du/da) * (du/db) * Cov(a, b)   for a != b

First-order terms are nonnegative; interaction terms keep their sign and
are reported as positive and negative groups separately.  For an exactly
linear policy the terms sum to the ensemble variance of the decision
exactly; for the sigmoid policy they approximate it.  Shares are
normalized by the sum of absolute contributions so each (decision, hour)
cell's absolute shares sum to one.

The hour-of-day input is deterministic within a cell and is excluded.
Decisions a commitment flag forces to zero in every scenario of an hour
are flagged as empty cells rather than reported as zero variance shares.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .environment import HOURS_PER_DAY, OBSERVABLE_SIGNALS, decision_names
from .grid_model import MicrogridConfig

N_SIGNALS = len(OBSERVABLE_SIGNALS)

GRADIENT_AT_MEAN = "mean"
GRADIENT_PER_SCENARIO = "per_scenario"


def ensemble_moments(scenarios: Sequence, hour: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and unbiased covariance of the five exogenous signals at
    one hour, across the scenario ensemble."""
    if len(scenarios) < 2:
        raise ValueError("ensemble moments need at least 2 scenarios")
    signals = np.array(
        [sc.hours[hour].observable.as_vector()[:N_SIGNALS] for sc in scenarios]
    )
    mean = signals.mean(axis=0)
    cov = np.cov(signals.T, ddof=1)
    return mean, np.atleast_2d(cov)


def _signal_gradient(policy, scenarios: Sequence, hour: int, gradient_at: str) -> np.ndarray:
    """d(decisions)/d(signals) at the chosen evaluation point, (k, 5)."""
    if gradient_at == GRADIENT_AT_MEAN:
        mean, _ = ensemble_moments(scenarios, hour)
        point = np.append(mean, float(hour))
        return policy.input_gradient(point)[:, :N_SIGNALS]
    if gradient_at == GRADIENT_PER_SCENARIO:
        grads = [
            policy.input_gradient(sc.hours[hour].observable)[:, :N_SIGNALS]
            for sc in scenarios
        ]
        return np.mean(grads, axis=0)
    raise ValueError(f"gradient_at must be 'mean' or 'per_scenario', got {gradient_at!r}")


def decompose(
    policy,
    scenarios: Sequence,
    hour: int,
    decision: int,
    gradient_at: str = GRADIENT_AT_MEAN,
) -> tuple[np.ndarray, np.ndarray]:
    """Taylor decomposition of one decision's variance at one hour.

    Returns the first-order vector over the five signals and the signed,
    symmetric, zero-diagonal interaction matrix.
    """
    _, cov = ensemble_moments(scenarios, hour)
    grad = _signal_gradient(policy, scenarios, hour, gradient_at)[decision]
    first = grad * grad * np.diag(cov)
    second = np.outer(grad, grad) * cov
    np.fill_diagonal(second, 0.0)
    return first, second


def normalize_cell(
    first: np.ndarray, second: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Shares of absolute contribution: each first-order term counts once,
    each pair counts its full (doubled) interaction.  Returns the absolute
    total and the signed normalized terms (zeros when the total is zero)."""
    upper = np.triu(second, k=1)
    total = float(np.abs(first).sum() + np.abs(2.0 * upper).sum())
    if total == 0.0:
        return 0.0, np.zeros_like(first), np.zeros_like(second)
    return total, first / total, 2.0 * second / total


@dataclass(frozen=True)
class TvsaCell:
    """One (decision, hour) cell of the report.

    ``normalized_second`` holds per-pair shares (already doubled); the
    matrix is symmetric, so read the upper triangle.
    """

    first_order: np.ndarray
    second_order: np.ndarray
    empirical_variance: float
    forced_off: bool
    total_abs: float
    normalized_first: np.ndarray
    normalized_second: np.ndarray

    @property
    def degenerate(self) -> bool:
        return self.forced_off or self.total_abs == 0.0


@dataclass(frozen=True)
class TvsaReport:
    decision_labels: tuple[str, ...]
    input_names: tuple[str, ...]
    gradient_at: str
    cells: dict[tuple[int, int], TvsaCell]

    def cell(self, decision: int, hour: int) -> TvsaCell:
        return self.cells[(decision, hour)]


def forced_off_mask(policy, scenarios: Sequence, config: MicrogridConfig) -> np.ndarray:
    """(decision, hour) mask: True where a commitment output switches the
    decision's unit off in every scenario, emptying that cell."""
    nc = len(config.chp)
    k = 2 * nc + 1 + len(config.commitment_units)
    commit_index = {
        unit: 2 * nc + 1 + j for j, unit in enumerate(config.commitment_units)
    }
    owner: list[str | None] = [None] * k
    for i in range(nc):
        owner[i] = f"chp{i + 1}"
        owner[nc + i] = f"chp{i + 1}"
    owner[2 * nc] = "boiler"

    off_all = {}
    for unit, j in commit_index.items():
        flags = np.array(
            [
                [policy.forward(sc.hours[t].observable)[j] < 0.5 for t in range(HOURS_PER_DAY)]
                for sc in scenarios
            ]
        )
        off_all[unit] = flags.all(axis=0)

    mask = np.zeros((k, HOURS_PER_DAY), dtype=bool)
    for d in range(k):
        unit = owner[d]
        if unit in off_all:
            mask[d] = off_all[unit]
    return mask


def build_report(
    policy,
    scenarios: Sequence,
    decision_labels: Sequence[str] | None = None,
    gradient_at: str = GRADIENT_AT_MEAN,
    config: MicrogridConfig | None = None,
) -> TvsaReport:
    """Full report over every (decision, hour) cell.

    Passing the microgrid config enables the forced-off flagging of
    commitment-controlled decisions; labels default to the config's
    decision names or generic indices.
    """
    if len(scenarios) < 2:
        raise ValueError("TVSA needs at least 2 scenarios")
    k = policy.output_dim
    if decision_labels is None:
        decision_labels = (
            decision_names(config) if config is not None else [f"u{i}" for i in range(k)]
        )
    if len(decision_labels) != k:
        raise ValueError("decision label count must match policy outputs")
    off = (
        forced_off_mask(policy, scenarios, config)
        if config is not None
        else np.zeros((k, HOURS_PER_DAY), dtype=bool)
    )

    outputs = np.array(
        [
            [policy.forward(sc.hours[t].observable) for t in range(HOURS_PER_DAY)]
            for sc in scenarios
        ]
    )  # (S, 24, k)

    cells: dict[tuple[int, int], TvsaCell] = {}
    for t in range(HOURS_PER_DAY):
        _, cov = ensemble_moments(scenarios, t)
        grads = _signal_gradient(policy, scenarios, t, gradient_at)
        variances = outputs[:, t, :].var(axis=0, ddof=1)
        for d in range(k):
            grad = grads[d]
            first = grad * grad * np.diag(cov)
            second = np.outer(grad, grad) * cov
            np.fill_diagonal(second, 0.0)
            total, norm_first, norm_second = normalize_cell(first, second)
            cells[(d, t)] = TvsaCell(
                first_order=first,
                second_order=second,
                empirical_variance=float(variances[d]),
                forced_off=bool(off[d, t]),
                total_abs=total,
                normalized_first=norm_first,
                normalized_second=norm_second,
            )
    return TvsaReport(
        decision_labels=tuple(decision_labels),
        input_names=OBSERVABLE_SIGNALS,
        gradient_at=gradient_at,
        cells=cells,
    )


def export_report_csv(report: TvsaReport, path: str | Path) -> None:
    """Long-format export: one row per term, empty cells marked explicitly.

    Columns: decision, hour, term_type (first | second_pos | second_neg |
    empty), inputs ("a" or "a*b"), raw value, normalized value.
    """
    names = report.input_names
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["decision", "hour", "term_type", "inputs", "raw", "normalized"])
        for (d, t), cell in report.cells.items():
            label = report.decision_labels[d]
            if cell.degenerate:
                writer.writerow([label, t, "empty", "", repr(0.0), repr(0.0)])
                continue
            for a in range(N_SIGNALS):
                writer.writerow(
                    [
                        label,
                        t,
                        "first",
                        names[a],
                        repr(float(cell.first_order[a])),
                        repr(float(cell.normalized_first[a])),
                    ]
                )
            for a in range(N_SIGNALS):
                for b in range(a + 1, N_SIGNALS):
                    pair_total = 2.0 * float(cell.second_order[a, b])
                    if pair_total == 0.0:
                        continue
                    term = "second_pos" if pair_total > 0.0 else "second_neg"
                    writer.writerow(
                        [
                            label,
                            t,
                            term,
                            f"{names[a]}*{names[b]}",
                            repr(pair_total),
                            repr(float(cell.normalized_second[a, b])),
                        ]
                    )
