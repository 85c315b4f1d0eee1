"""Pareto dominance, fast non-dominated sorting, crowding distance, and
environmental selection over evaluated individuals."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import InsufficientPopulation, UnevaluatedIndividual
from .expressions import NarxExpression
from .grammar import DerivationTree
from .model import NarxModel
from .objectives import FitnessVector


@dataclass(frozen=True, eq=False)
class Individual:
    """A population member: genotype, its canonical expression, and, once
    evaluated, the fitted model plus fitness."""

    genotype: DerivationTree
    expression: NarxExpression
    id: int
    model: NarxModel | None = None
    fitness: FitnessVector | None = None

    def __post_init__(self):
        if self.fitness is not None and self.model is None:
            raise ValueError("fitness without a model")


def dominates(a: FitnessVector, b: FitnessVector) -> bool:
    """True iff `a` is no worse in every objective and better in at least one.

    Infinities compare naturally: any finite value beats +inf, two +inf tie.
    """
    av, bv = a.as_tuple(), b.as_tuple()
    return all(x <= y for x, y in zip(av, bv)) and any(x < y for x, y in zip(av, bv))


def _fitness(individual: Individual) -> FitnessVector:
    if individual.fitness is None:
        raise UnevaluatedIndividual(f"individual {individual.id} has no fitness")
    return individual.fitness


def fast_non_dominated_sort(population: Sequence[Individual]) -> list[list[Individual]]:
    """Partition into successive non-dominated fronts, stable within fronts."""
    n = len(population)
    fitnesses = [_fitness(ind) for ind in population]
    dominated_by: list[list[int]] = [[] for _ in range(n)]
    domination_count = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if dominates(fitnesses[i], fitnesses[j]):
                dominated_by[i].append(j)
                domination_count[j] += 1
            elif dominates(fitnesses[j], fitnesses[i]):
                dominated_by[j].append(i)
                domination_count[i] += 1
    fronts: list[list[Individual]] = []
    current = [i for i in range(n) if domination_count[i] == 0]
    while current:
        fronts.append([population[i] for i in current])
        upcoming: list[int] = []
        for i in current:
            for j in dominated_by[i]:
                domination_count[j] -= 1
                if domination_count[j] == 0:
                    upcoming.append(j)
        current = sorted(upcoming)
    return fronts


def crowding_distance(front: Sequence[Individual]) -> list[float]:
    """Diversity score within one front.

    Boundary members of each objective get +inf; interior members accumulate
    normalized neighbor gaps.  Objectives with zero or non-finite spread
    contribute nothing, keeping +inf sentinels from poisoning the scores.
    """
    n = len(front)
    if n == 0:
        raise ValueError("crowding distance of an empty front")
    if n <= 2:
        return [math.inf] * n
    values = [_fitness(ind).as_tuple() for ind in front]
    distance = [0.0] * n
    for objective in range(3):
        order = sorted(range(n), key=lambda i: values[i][objective])
        distance[order[0]] = math.inf
        distance[order[-1]] = math.inf
        span = values[order[-1]][objective] - values[order[0]][objective]
        if not math.isfinite(span) or span <= 0:
            continue
        for rank in range(1, n - 1):
            i = order[rank]
            if math.isinf(distance[i]):
                continue
            gap = values[order[rank + 1]][objective] - values[order[rank - 1]][objective]
            distance[i] += gap / span
    return distance


def select(
    previous: Sequence[Individual], current: Sequence[Individual], size: int
) -> list[Individual]:
    """NSGA-II style environmental selection over the combined populations.

    Whole fronts are taken in rank order; the front straddling the cut is
    truncated by descending crowding distance (stable on ties).
    """
    combined = list(previous) + list(current)
    if len(combined) < size:
        raise InsufficientPopulation(f"{len(combined)} individuals for selection size {size}")
    selected: list[Individual] = []
    for front in fast_non_dominated_sort(combined):
        if len(selected) + len(front) <= size:
            selected.extend(front)
            if len(selected) == size:
                break
            continue
        remaining = size - len(selected)
        distances = crowding_distance(front)
        order = sorted(range(len(front)), key=lambda i: -distances[i])
        selected.extend(front[i] for i in order[:remaining])
        break
    return selected


@dataclass(frozen=True, eq=False)
class ParetoFront:
    """The rank-1 set of a population, with a per-complexity best lookup."""

    members: tuple[Individual, ...]

    def __post_init__(self):
        for a in self.members:
            for b in self.members:
                if a is not b and dominates(_fitness(a), _fitness(b)):
                    raise ValueError("a front member dominates another")

    @classmethod
    def from_population(cls, population: Sequence[Individual]) -> "ParetoFront":
        if not population:
            return cls(())
        first = fast_non_dominated_sort(population)[0]
        ordered = sorted(
            first,
            key=lambda ind: (
                _fitness(ind).complexity,
                _fitness(ind).rms_simulation,
                _fitness(ind).rms_prediction,
                ind.id,
            ),
        )
        # distinct genotypes can encode the same model; report each model once
        seen = set()
        unique = []
        for ind in ordered:
            if ind.expression not in seen:
                seen.add(ind.expression)
                unique.append(ind)
        return cls(tuple(unique))

    def best_by_complexity(self) -> dict[int, Individual]:
        """Per complexity level, the member with the best (simulation,
        prediction) errors."""
        table: dict[int, Individual] = {}
        for member in self.members:
            fitness = _fitness(member)
            incumbent = table.get(fitness.complexity)
            if incumbent is None:
                table[fitness.complexity] = member
                continue
            held = _fitness(incumbent)
            if (fitness.rms_simulation, fitness.rms_prediction) < (
                held.rms_simulation,
                held.rms_prediction,
            ):
                table[fitness.complexity] = member
        return table
