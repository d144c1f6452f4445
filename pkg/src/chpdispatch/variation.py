"""Real-coded variation operators for the evolutionary search.

Six operators produce one child genome each, every gene clipped to the
symmetric search box [-bound, bound]:

    sbx   simulated binary crossover (distribution index 15) followed by
          polynomial mutation (index 20, rate 1/L unless set)
    de    differential evolution rand/1/bin, step 0.5, crossover 0.1
    pcx   parent-centric crossover, 3 parents, sigma_eta = sigma_zeta = 0.1
    spx   simplex crossover, 3 parents, expansion 2.0
    undx  unimodal normal distribution crossover, 3 parents,
          sigma_zeta = 0.5, sigma_eta = 0.35 / sqrt(L)
    um    uniform mutation, single parent, per-gene rate 1/L unless set

All randomness comes from the generator handed in, so runs replay exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

OPERATOR_NAMES = ("sbx", "de", "pcx", "spx", "undx", "um")
OPERATOR_ARITY = {"sbx": 2, "de": 3, "pcx": 3, "spx": 3, "undx": 3, "um": 1}

_GENE_EPS = 1e-14  # genes closer than this do not cross in SBX


@dataclass(frozen=True)
class VariationSettings:
    """Operator hyperparameters; ``None`` rates resolve to 1/L at call time."""

    sbx_distribution_index: float = 15.0
    pm_distribution_index: float = 20.0
    pm_rate: float | None = None
    de_step: float = 0.5
    de_crossover: float = 0.1
    pcx_eta: float = 0.1
    pcx_zeta: float = 0.1
    spx_expansion: float = 2.0
    undx_zeta: float = 0.5
    undx_eta: float = 0.35
    um_rate: float | None = None


def _polynomial_mutation(
    rng: np.random.Generator, child: np.ndarray, bound: float, index: float, rate: float
) -> np.ndarray:
    if rate <= 0.0:
        return child
    lo, hi = -bound, bound
    span = hi - lo
    mask = rng.random(child.size) < rate
    if not mask.any():
        return child
    x = child[mask]
    u = rng.random(x.size)
    d1 = (x - lo) / span
    d2 = (hi - x) / span
    exp = 1.0 / (index + 1.0)
    low_side = u < 0.5
    delta = np.empty_like(x)
    delta[low_side] = (
        2.0 * u[low_side]
        + (1.0 - 2.0 * u[low_side]) * (1.0 - d1[low_side]) ** (index + 1.0)
    ) ** exp - 1.0
    hs = ~low_side
    delta[hs] = 1.0 - (
        2.0 * (1.0 - u[hs]) + 2.0 * (u[hs] - 0.5) * (1.0 - d2[hs]) ** (index + 1.0)
    ) ** exp
    child[mask] = x + delta * span
    return child


def sbx(
    rng: np.random.Generator,
    p1: np.ndarray,
    p2: np.ndarray,
    bound: float,
    settings: VariationSettings,
) -> np.ndarray:
    """SBX + polynomial mutation.  Identical parents are a fixed point of
    the crossover (genes only cross when they differ)."""
    n = p1.size
    child = p1.copy()
    cross = (rng.random(n) < 0.5) & (np.abs(p1 - p2) > _GENE_EPS)
    if cross.any():
        u = rng.random(int(cross.sum()))
        eta = settings.sbx_distribution_index
        beta = np.where(
            u <= 0.5,
            (2.0 * u) ** (1.0 / (eta + 1.0)),
            (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0)),
        )
        sign = np.where(rng.random(int(cross.sum())) < 0.5, 1.0, -1.0)
        a, b = p1[cross], p2[cross]
        child[cross] = 0.5 * ((a + b) + sign * beta * (b - a))
    rate = settings.pm_rate if settings.pm_rate is not None else 1.0 / n
    child = _polynomial_mutation(
        rng, child, bound, settings.pm_distribution_index, rate
    )
    return np.clip(child, -bound, bound)


def de(
    rng: np.random.Generator,
    base: np.ndarray,
    x2: np.ndarray,
    x3: np.ndarray,
    bound: float,
    settings: VariationSettings,
) -> np.ndarray:
    """rand/1/bin: base plus a scaled difference on the crossed genes; one
    gene always crosses so the child is not a pure copy."""
    n = base.size
    mask = rng.random(n) < settings.de_crossover
    mask[rng.integers(n)] = True
    child = base.copy()
    child[mask] = base[mask] + settings.de_step * (x2[mask] - x3[mask])
    return np.clip(child, -bound, bound)


def _orthogonal_noise(
    rng: np.random.Generator, direction: np.ndarray, scale: float
) -> np.ndarray:
    """Isotropic Gaussian restricted to the hyperplane orthogonal to
    ``direction`` (projection trick; avoids building a full basis)."""
    noise = rng.standard_normal(direction.size) * scale
    norm2 = float(direction @ direction)
    if norm2 > 0.0:
        noise -= (noise @ direction) / norm2 * direction
    return noise


def pcx(
    rng: np.random.Generator,
    parents: Sequence[np.ndarray],
    bound: float,
    settings: VariationSettings,
) -> np.ndarray:
    stack = np.array(parents)
    centroid = stack.mean(axis=0)
    pick = int(rng.integers(len(parents)))
    anchor = stack[pick]
    d = anchor - centroid
    others = [stack[j] for j in range(len(parents)) if j != pick]
    norm2 = float(d @ d)
    if norm2 > 0.0:
        dists = []
        for p in others:
            v = p - anchor
            perp = v - (v @ d) / norm2 * d
            dists.append(float(np.sqrt(perp @ perp)))
        mean_dist = float(np.mean(dists))
    else:
        mean_dist = float(np.mean([np.linalg.norm(p - anchor) for p in others]))
    child = (
        anchor
        + rng.standard_normal() * settings.pcx_zeta * d
        + _orthogonal_noise(rng, d, settings.pcx_eta * mean_dist)
    )
    return np.clip(child, -bound, bound)


def spx(
    rng: np.random.Generator,
    parents: Sequence[np.ndarray],
    bound: float,
    settings: VariationSettings,
) -> np.ndarray:
    stack = np.array(parents)
    centroid = stack.mean(axis=0)
    expanded = centroid + settings.spx_expansion * (stack - centroid)
    child = expanded[0].copy()
    accum = np.zeros_like(child)
    # r_k = u^(1/k) samples uniformly over the expanded simplex and keeps
    # the children centered on the parents' centroid.
    for k in range(1, len(parents)):
        r = rng.random() ** (1.0 / k)
        accum = r * (expanded[k - 1] - expanded[k] + accum)
        child = expanded[k] + accum
    return np.clip(child, -bound, bound)


def undx(
    rng: np.random.Generator,
    parents: Sequence[np.ndarray],
    bound: float,
    settings: VariationSettings,
) -> np.ndarray:
    p1, p2, p3 = parents
    midpoint = 0.5 * (p1 + p2)
    d = p2 - p1
    norm2 = float(d @ d)
    if norm2 > 0.0:
        v = p3 - p1
        perp = v - (v @ d) / norm2 * d
        span = float(np.sqrt(perp @ perp))
    else:
        span = float(np.linalg.norm(p3 - p1))
    child = (
        midpoint
        + rng.standard_normal() * settings.undx_zeta * d
        + _orthogonal_noise(
            rng, d, settings.undx_eta / np.sqrt(p1.size) * span
        )
    )
    return np.clip(child, -bound, bound)


def um(
    rng: np.random.Generator,
    parent: np.ndarray,
    bound: float,
    settings: VariationSettings,
) -> np.ndarray:
    """Resample each gene uniformly in the box with the configured rate;
    rate 0 returns an exact copy."""
    n = parent.size
    rate = settings.um_rate if settings.um_rate is not None else 1.0 / n
    child = parent.copy()
    if rate <= 0.0:
        return child
    mask = rng.random(n) < rate
    child[mask] = rng.uniform(-bound, bound, int(mask.sum()))
    return child


def vary(
    rng: np.random.Generator,
    operator: str,
    parents: Sequence[np.ndarray],
    bound: float,
    settings: VariationSettings = VariationSettings(),
) -> np.ndarray:
    """Apply ``operator`` to ``parents`` and return one clipped child."""
    if operator not in OPERATOR_NAMES:
        raise ValueError(f"unknown operator {operator!r}")
    if len(parents) != OPERATOR_ARITY[operator]:
        raise ValueError(
            f"{operator} needs {OPERATOR_ARITY[operator]} parents, got {len(parents)}"
        )
    parents = [np.asarray(p, dtype=float) for p in parents]
    if operator == "sbx":
        return sbx(rng, parents[0], parents[1], bound, settings)
    if operator == "de":
        return de(rng, parents[0], parents[1], parents[2], bound, settings)
    if operator == "pcx":
        return pcx(rng, parents, bound, settings)
    if operator == "spx":
        return spx(rng, parents, bound, settings)
    if operator == "undx":
        return undx(rng, parents, bound, settings)
    return um(rng, parents[0], bound, settings)
