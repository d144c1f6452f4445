"""Steady-state multi-objective evolutionary optimizer.

The search maintains a working population plus an epsilon-box archive of
non-dominated solutions.  Dominance is feasibility-first: any feasible
solution beats any infeasible one, infeasible solutions compare by their
violation scalar, and feasibility ties compare objective boxes
floor(objective / epsilon).  Two solutions in the same box contest it by
Euclidean distance to the box's lower corner (in epsilon-normalized space),
with ties kept by the incumbent.

Each offspring comes from one of six real-coded operators chosen with
probability proportional to (archive members produced by that operator + 1),
so operators that fill the archive get used more, while every operator
keeps nonzero probability.  When no insertion has claimed a previously
empty box for a full window of evaluations, the search restarts: the
population is rebuilt from the archive plus uniformly mutated archive
copies and resized to max(archive size / injection ratio, the configured
population size).

Runs are driven by a single seeded generator and a pure evaluation
callback, so a (config, seed) pair always reproduces its archive exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np

from .variation import (
    OPERATOR_ARITY,
    OPERATOR_NAMES,
    VariationSettings,
    um,
    vary,
)


class Objectives(NamedTuple):
    """The dispatch problem's objective triple (all minimized)."""

    cost: float  # $/day
    emission: float  # metric tonnes/day
    heat_waste: float  # expected daily indicator sum


class Dominance(Enum):
    A_DOMINATES = "a"
    B_DOMINATES = "b"
    SAME_BOX = "same_box"
    NEITHER = "neither"


@dataclass
class Solution:
    genome: np.ndarray
    objectives: np.ndarray
    violation: float
    operator_tag: str

    def __post_init__(self) -> None:
        if self.violation < 0.0:
            raise ValueError(f"violation must be >= 0, got {self.violation}")
        if not np.all(np.isfinite(self.objectives)):
            raise ValueError("objectives must be finite")

    @property
    def feasible(self) -> bool:
        return self.violation == 0.0


def box_index(objectives: Sequence[float], epsilons: Sequence[float]) -> tuple[int, ...]:
    """Epsilon-box coordinates floor(objective / epsilon), per dimension."""
    return tuple(
        math.floor(float(o) / float(e)) for o, e in zip(objectives, epsilons)
    )


def corner_distance(objectives: Sequence[float], epsilons: Sequence[float]) -> float:
    """Distance to the occupied box's lower corner, in units of epsilon."""
    total = 0.0
    for o, e in zip(objectives, epsilons):
        r = float(o) / float(e)
        frac = r - math.floor(r)
        total += frac * frac
    return math.sqrt(total)


def _compare_boxes(a: tuple[int, ...], b: tuple[int, ...]) -> Dominance:
    better = worse = False
    for ai, bi in zip(a, b):
        if ai < bi:
            better = True
        elif ai > bi:
            worse = True
    if better and not worse:
        return Dominance.A_DOMINATES
    if worse and not better:
        return Dominance.B_DOMINATES
    if not better and not worse:
        return Dominance.SAME_BOX
    return Dominance.NEITHER


def eps_dominates(a: Solution, b: Solution, epsilons: Sequence[float]) -> Dominance:
    """Constrained epsilon-box domination between two evaluated solutions."""
    if a.violation == 0.0 and b.violation > 0.0:
        return Dominance.A_DOMINATES
    if b.violation == 0.0 and a.violation > 0.0:
        return Dominance.B_DOMINATES
    if a.violation > 0.0 and b.violation > 0.0 and a.violation != b.violation:
        return (
            Dominance.A_DOMINATES
            if a.violation < b.violation
            else Dominance.B_DOMINATES
        )
    return _compare_boxes(box_index(a.objectives, epsilons), box_index(b.objectives, epsilons))


class EpsilonArchive:
    """Bounded-diversity archive: at most one solution per epsilon box.

    ``insert`` reports (accepted, eps_progress); progress means the
    candidate claimed a previously empty box, the stagnation signal the
    optimizer's restart trigger watches.
    """

    def __init__(self, epsilons: Sequence[float]):
        eps = tuple(float(e) for e in epsilons)
        if len(eps) == 0 or any(e <= 0.0 for e in eps):
            raise ValueError("epsilons must be strictly positive")
        self._eps = eps
        self._boxes: dict[tuple[int, ...], Solution] = {}

    @property
    def epsilons(self) -> tuple[float, ...]:
        return self._eps

    @property
    def members(self) -> list[Solution]:
        return list(self._boxes.values())

    def __len__(self) -> int:
        return len(self._boxes)

    def __iter__(self) -> Iterator[Solution]:
        return iter(self._boxes.values())

    def operator_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for sol in self._boxes.values():
            counts[sol.operator_tag] = counts.get(sol.operator_tag, 0) + 1
        return counts

    def insert(self, candidate: Solution) -> tuple[bool, bool]:
        eps = self._eps
        key = box_index(candidate.objectives, eps)
        occupied_before = key in self._boxes
        cv = candidate.violation
        to_remove: list[tuple[int, ...]] = []
        for bkey, member in self._boxes.items():
            mv = member.violation
            if cv == 0.0 and mv > 0.0:
                to_remove.append(bkey)
                continue
            if mv == 0.0 and cv > 0.0:
                return False, False
            if cv > 0.0 and mv > 0.0 and cv != mv:
                if cv < mv:
                    to_remove.append(bkey)
                    continue
                return False, False
            if bkey == key:
                # Same box: keep whichever sits nearer the lower corner,
                # the incumbent on an exact tie.
                if corner_distance(candidate.objectives, eps) < corner_distance(
                    member.objectives, eps
                ):
                    to_remove.append(bkey)
                    continue
                return False, False
            outcome = _compare_boxes(key, bkey)
            if outcome is Dominance.A_DOMINATES:
                to_remove.append(bkey)
            elif outcome is Dominance.B_DOMINATES:
                return False, False
        for bkey in to_remove:
            del self._boxes[bkey]
        self._boxes[key] = candidate
        return True, not occupied_before


def merge_archives(archives: Sequence[EpsilonArchive]) -> EpsilonArchive:
    """Joint non-dominated frontier of several runs; idempotent, and every
    archive must use the same epsilon vector."""
    if len(archives) == 0:
        raise ValueError("need at least one archive to merge")
    eps = archives[0].epsilons
    for other in archives[1:]:
        if other.epsilons != eps:
            raise ValueError(
                f"epsilon vectors differ: {eps} vs {other.epsilons}"
            )
    merged = EpsilonArchive(eps)
    for archive in archives:
        for member in archive:
            merged.insert(member)
    return merged


def select_operator(rng: np.random.Generator, archive: EpsilonArchive) -> str:
    """Sample an operator with probability proportional to its current
    archive membership plus one (so an empty archive gives uniform 1/6)."""
    counts = archive.operator_counts()
    weights = np.array(
        [counts.get(name, 0) + 1 for name in OPERATOR_NAMES], dtype=float
    )
    probs = weights / weights.sum()
    return OPERATOR_NAMES[int(rng.choice(len(OPERATOR_NAMES), p=probs))]


@dataclass(frozen=True)
class MoeaConfig:
    """Run settings.  Only the epsilon vector, evaluation budget and seed
    count come from the study design; everything else is a documented
    default of this implementation.

    ``restart_window`` of None means the current population size; restarts
    resize the population to max(|archive| / injection_ratio,
    population_size).
    """

    genome_length: int
    epsilons: tuple[float, ...]
    max_nfe: int
    population_size: int = 100
    bound: float = 10.0
    tournament_size: int = 2
    restart_window: int | None = None
    injection_ratio: float = 0.25
    variation: VariationSettings = field(default_factory=VariationSettings)

    def __post_init__(self) -> None:
        if self.genome_length < 1:
            raise ValueError("genome_length must be >= 1")
        if any(e <= 0.0 for e in self.epsilons):
            raise ValueError("epsilons must be strictly positive")
        if self.max_nfe < self.population_size:
            raise ValueError("max_nfe must be at least the population size")
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.bound <= 0.0:
            raise ValueError("bound must be > 0")
        if not 0.0 < self.injection_ratio <= 1.0:
            raise ValueError("injection_ratio must be in (0, 1]")


Evaluator = Callable[[np.ndarray], tuple[Sequence[float], float]]


def _tournament(
    rng: np.random.Generator,
    population: list[Solution],
    epsilons: tuple[float, ...],
    size: int,
) -> Solution:
    best = population[int(rng.integers(len(population)))]
    for _ in range(size - 1):
        challenger = population[int(rng.integers(len(population)))]
        outcome = eps_dominates(challenger, best, epsilons)
        if outcome is Dominance.A_DOMINATES:
            best = challenger
        elif outcome is not Dominance.B_DOMINATES and rng.random() < 0.5:
            best = challenger
    return best


def _replace_in_population(
    rng: np.random.Generator,
    population: list[Solution],
    child: Solution,
    epsilons: tuple[float, ...],
) -> None:
    dominated = [
        i
        for i, member in enumerate(population)
        if eps_dominates(child, member, epsilons) is Dominance.A_DOMINATES
    ]
    if dominated:
        index = dominated[int(rng.integers(len(dominated)))]
    else:
        index = int(rng.integers(len(population)))
    population[index] = child


def run(config: MoeaConfig, evaluator: Evaluator, seed: int) -> EpsilonArchive:
    """Optimize until the evaluation budget is spent and return the archive.

    The evaluator must be a pure function of the genome returning
    (objectives, violation); given that, runs replay bit-identically for a
    fixed seed.
    """
    rng = np.random.default_rng(seed)
    eps = config.epsilons
    archive = EpsilonArchive(eps)
    population: list[Solution] = []
    nfe = 0

    def evaluate(genome: np.ndarray, tag: str) -> Solution:
        nonlocal nfe
        objectives, violation = evaluator(genome)
        nfe += 1
        return Solution(
            genome=genome,
            objectives=np.asarray(objectives, dtype=float),
            violation=float(violation),
            operator_tag=tag,
        )

    for _ in range(min(config.population_size, config.max_nfe)):
        sol = evaluate(
            rng.uniform(-config.bound, config.bound, config.genome_length), "init"
        )
        population.append(sol)
        archive.insert(sol)

    stall = 0
    while nfe < config.max_nfe:
        name = select_operator(rng, archive)
        parents = [
            _tournament(rng, population, eps, config.tournament_size).genome
            for _ in range(OPERATOR_ARITY[name])
        ]
        child = evaluate(vary(rng, name, parents, config.bound, config.variation), name)
        _, progress = archive.insert(child)
        _replace_in_population(rng, population, child, eps)
        stall = 0 if progress else stall + 1

        window = (
            config.restart_window
            if config.restart_window is not None
            else len(population)
        )
        if stall >= window and nfe < config.max_nfe:
            members = archive.members
            target = max(
                math.ceil(len(members) / config.injection_ratio),
                config.population_size,
            )
            population = list(members)
            while len(population) < target and nfe < config.max_nfe:
                base = members[int(rng.integers(len(members)))]
                injected = evaluate(
                    um(rng, base.genome, config.bound, config.variation), "um"
                )
                archive.insert(injected)
                population.append(injected)
            stall = 0
    return archive


def write_archive_csv(
    archive: EpsilonArchive,
    path: str | Path,
    objective_names: Sequence[str] = ("cost", "emission", "heat_waste"),
) -> None:
    """One row per solution: objectives, violation, producing operator,
    then the genome, all floats at full round-trip precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        members = archive.members
        genome_length = len(members[0].genome) if members else 0
        writer.writerow(
            [*objective_names, "violation", "operator"]
            + [f"w{i}" for i in range(genome_length)]
        )
        for sol in members:
            writer.writerow(
                [repr(float(o)) for o in sol.objectives]
                + [repr(sol.violation), sol.operator_tag]
                + [repr(float(w)) for w in sol.genome]
            )


def read_archive_csv(path: str | Path, epsilons: Sequence[float]) -> EpsilonArchive:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty archive file")
        try:
            violation_col = header.index("violation")
            operator_col = header.index("operator")
        except ValueError as exc:
            raise ValueError(f"{path}: missing archive columns") from exc
        n_objectives = violation_col
        if len(epsilons) != n_objectives:
            raise ValueError(
                f"{path}: {n_objectives} objectives but {len(epsilons)} epsilons"
            )
        archive = EpsilonArchive(epsilons)
        for row in reader:
            archive.insert(
                Solution(
                    genome=np.array([float(x) for x in row[operator_col + 1 :]]),
                    objectives=np.array([float(x) for x in row[:n_objectives]]),
                    violation=float(row[violation_col]),
                    operator_tag=row[operator_col],
                )
            )
    return archive
