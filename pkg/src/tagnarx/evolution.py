"""Genetic operators over derivation trees and the multi-objective search loop.

The loop follows the classic pattern: evaluate the proposals, merge with the
previous population, keep the best fronts, and propose offspring by subtree
crossover and regrowing mutation on the derivation genotypes.  All randomness
is drawn from one sequential generator owned by the loop, so runs are
reproducible regardless of how evaluation is parallelized.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .data import as_records
from .errors import ConfigError
from .expressions import NarxExpression
from .grammar import (
    ADD_DELAY,
    DerivationPath,
    DerivationTree,
    Grammar,
    _MutableNode,
    _delay_providers,
    _grow,
    expression_of,
    g_narx,
    random_derivation,
    replace_subtree,
    required_delay_sites,
)
from .model import NarxModel
from .moo import Individual, ParetoFront, crowding_distance, fast_non_dominated_sort, select
from .objectives import FitnessVector, evaluate


@dataclass(frozen=True)
class GpConfig:
    """Search hyper-parameters; defaults follow the benchmark settings."""

    population_size: int = 100
    iterations: int = 150
    max_adjunctions: int = 150
    p_crossover: float = 1.0
    p_mutation: float = 0.8
    seed: int = 0
    grammar: Grammar = field(default_factory=g_narx)
    early_stop_simulation_rms: float | None = None

    def __post_init__(self):
        if self.population_size <= 0:
            raise ConfigError("population_size must be positive")
        if self.iterations <= 0:
            raise ConfigError("iterations must be positive")
        if self.max_adjunctions < 0:
            raise ConfigError("max_adjunctions must be nonnegative")
        for name, value in (("p_crossover", self.p_crossover), ("p_mutation", self.p_mutation)):
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class IterationStats:
    """Per-iteration summary of the selected population."""

    iteration: int
    min_rms_prediction: float
    mean_rms_prediction: float
    min_rms_simulation: float
    mean_rms_simulation: float
    min_complexity: int
    mean_complexity: float
    front_size: int


Observer = Callable[[IterationStats, Sequence[Individual]], None]


def _root_label(grammar: Grammar, tree_id: str):
    return grammar.elementary(tree_id).tree.label


def _is_sole_delay(grammar: Grammar, derivation: DerivationTree, path: DerivationPath) -> bool:
    """A leaf delay node whose removal would leave an output factor undelayed."""
    node = derivation.node_at(path)
    if node.tree_id != ADD_DELAY or node.children:
        return False
    parent = derivation.node_at(path[:-1])
    return path[-1] in required_delay_sites(grammar, parent.tree_id)


def prune_to_budget(
    derivation: DerivationTree, grammar: Grammar, max_adjunctions: int
) -> DerivationTree:
    """Drop deepest adjunctions until within budget, preserving causality.

    A delay that is the sole one guarding an output factor is never pruned
    alone; when only such leaves remain, the output subtree that needs it is
    pruned as a unit.
    """
    while derivation.adjunction_count() > max_adjunctions:
        leaves = [path for path, node in derivation.nodes() if path and not node.children]
        removable = [p for p in leaves if not _is_sole_delay(grammar, derivation, p)]
        if removable:
            target = max(removable, key=lambda p: (len(p), p))
        else:
            deepest = max(leaves, key=lambda p: (len(p), p))
            target = deepest[:-1]
        derivation = replace_subtree(derivation, target, None)
    return derivation


def crossover(
    a: DerivationTree,
    b: DerivationTree,
    grammar: Grammar,
    max_adjunctions: int,
    rng: np.random.Generator,
) -> tuple[DerivationTree, DerivationTree]:
    """Swap a uniformly chosen derivation subtree of `a` with a compatible one
    of `b` (compatible: their roots adjoin at equally labeled sites); offspring
    over budget are pruned back.  Without any compatible pair the parents
    come back unchanged."""
    paths_a = [(path, node) for path, node in a.nodes() if path]
    paths_b = [(path, node) for path, node in b.nodes() if path]
    if not paths_a or not paths_b:
        return a, b
    groups_b: dict = {}
    for path, node in paths_b:
        groups_b.setdefault(_root_label(grammar, node.tree_id), []).append(path)
    candidates_a = [
        (path, node)
        for path, node in paths_a
        if _root_label(grammar, node.tree_id) in groups_b
    ]
    if not candidates_a:
        return a, b
    path_a, node_a = candidates_a[int(rng.integers(len(candidates_a)))]
    partners = groups_b[_root_label(grammar, node_a.tree_id)]
    path_b = partners[int(rng.integers(len(partners)))]
    node_b = b.node_at(path_b)
    child_a = replace_subtree(a, path_a, node_b)
    child_b = replace_subtree(b, path_b, node_a)
    return (
        prune_to_budget(child_a, grammar, max_adjunctions),
        prune_to_budget(child_b, grammar, max_adjunctions),
    )


def _repair_causality(grammar: Grammar, root: _MutableNode) -> int:
    """Fill every empty required delay site; returns adjunctions added."""
    added = 0

    def walk(node: _MutableNode):
        nonlocal added
        for site in required_delay_sites(grammar, node.tree_id):
            if site not in node.children:
                providers = _delay_providers(grammar, node.tree_id, site)
                node.children[site] = _MutableNode(providers[0])
                added += 1
        for address in sorted(node.children):
            walk(node.children[address])

    walk(root)
    return added


# Regrowth after a mutation deletion scales with the deleted subtree plus a
# little slack, keeping replacements local edits.  Root picks delete nothing
# and grow anywhere; they are the only move that inserts fresh structure into
# existing terms, so they get a larger allowance.
_MUTATION_GROWTH_SLACK = 4
_ROOT_GROWTH_CAP = 10
_MUTATION_DELETE_PROB = 0.5


def mutate(
    a: DerivationTree,
    grammar: Grammar,
    max_adjunctions: int,
    rng: np.random.Generator,
) -> DerivationTree:
    """Delete a uniformly chosen derivation subtree and regrow a random one at
    the freed site within the remaining budget.

    Picking the root deletes nothing and grows anywhere; an exhausted budget
    makes the mutation deletion-only.  Deleting the sole delay guarding an
    output factor is repaired by re-adding one delay before regrowth.
    """
    paths = [path for path, _ in a.nodes()]
    picked = paths[int(rng.integers(len(paths)))]
    if picked:
        cap = a.node_at(picked).size() + _MUTATION_GROWTH_SLACK
        pruned = replace_subtree(a, picked, None)
        region: DerivationPath | None = picked
    else:
        cap = _ROOT_GROWTH_CAP
        pruned = a
        region = None
    root = _MutableNode.thaw(pruned.root)
    used = pruned.adjunction_count() + _repair_causality(grammar, root)
    remaining = max_adjunctions - used
    if remaining <= 0:
        return DerivationTree(root.freeze())
    # Half of the non-root mutations are pure deletions; the rest regrow a
    # subtree of comparable size.  Root picks always grow (a zero draw would
    # reproduce the parent).
    if region is not None and rng.random() < _MUTATION_DELETE_PROB:
        return DerivationTree(root.freeze())
    target = int(rng.integers(1, min(remaining, cap) + 1))
    _grow(grammar, root, target, rng, region=region)
    return DerivationTree(root.freeze())



def _mean(values) -> float:
    values = list(values)
    if any(math.isinf(v) for v in values):
        return math.inf
    return float(np.mean(values))


def _stats(iteration: int, population: Sequence[Individual], front_size: int) -> IterationStats:
    fs = [ind.fitness for ind in population]
    return IterationStats(
        iteration=iteration,
        min_rms_prediction=min(f.rms_prediction for f in fs),
        mean_rms_prediction=_mean(f.rms_prediction for f in fs),
        min_rms_simulation=min(f.rms_simulation for f in fs),
        mean_rms_simulation=_mean(f.rms_simulation for f in fs),
        min_complexity=min(f.complexity for f in fs),
        mean_complexity=float(np.mean([f.complexity for f in fs])),
        front_size=front_size,
    )


class _Evaluator:
    """Caches fits by canonical expression: distinct derivations yielding the
    same expression share one least-squares solution."""

    def __init__(self, estimation, validation, threads: int = 1):
        self.estimation = as_records(estimation)
        self.validation = as_records(validation)
        self.threads = max(1, int(threads))
        self.cache: dict[NarxExpression, tuple[NarxModel, FitnessVector]] = {}

    def evaluate_population(self, population: list[Individual]) -> list[Individual]:
        pending = [ind for ind in population if ind.fitness is None]
        missing: list[NarxExpression] = []
        for ind in pending:
            if ind.expression not in self.cache and ind.expression not in missing:
                missing.append(ind.expression)
        if missing:
            if self.threads > 1:
                with ThreadPoolExecutor(max_workers=self.threads) as pool:
                    results = list(
                        pool.map(lambda e: evaluate(e, self.estimation, self.validation), missing)
                    )
            else:
                results = [evaluate(e, self.estimation, self.validation) for e in missing]
            for expression, result in zip(missing, results):
                self.cache[expression] = result
        out = []
        for ind in population:
            if ind.fitness is None:
                model, fitness = self.cache[ind.expression]
                ind = replace(ind, model=model, fitness=fitness)
            out.append(ind)
        return out


def _tournament(
    rng: np.random.Generator,
    population: Sequence[Individual],
    rank: dict[int, int],
    crowd: dict[int, float],
) -> Individual:
    i = int(rng.integers(len(population)))
    j = int(rng.integers(len(population)))
    a, b = population[i], population[j]
    key_a = (rank[id(a)], -crowd[id(a)])
    key_b = (rank[id(b)], -crowd[id(b)])
    return b if key_b < key_a else a


# Operator-produced offspring duplicating an already-scored model are redrawn;
# proposal slots are too scarce to spend on models the loop has already seen.
_DUPLICATE_RETRIES = 30


def _propose(
    selected: Sequence[Individual],
    cfg: GpConfig,
    rng: np.random.Generator,
    make: Callable[[DerivationTree], Individual],
    already_scored: set[NarxExpression] | None = None,
) -> list[Individual]:
    """Offspring population: per pair, with probability p_crossover recombine
    two tournament-chosen parents, otherwise pass the next two members through
    unchanged; then mutate each offspring with probability p_mutation."""
    rank: dict[int, int] = {}
    crowd: dict[int, float] = {}
    for front_index, front in enumerate(fast_non_dominated_sort(selected)):
        distances = crowding_distance(front)
        for ind, dist in zip(front, distances):
            rank[id(ind)] = front_index
            crowd[id(ind)] = dist
    seen = {ind.expression for ind in selected}
    if already_scored:
        seen |= already_scored
    offspring: list[Individual] = []
    cursor = 0
    size = cfg.population_size

    def generate() -> tuple[DerivationTree, ...]:
        nonlocal cursor
        if rng.random() < cfg.p_crossover:
            parent_a = _tournament(rng, selected, rank, crowd)
            parent_b = _tournament(rng, selected, rank, crowd)
            genotypes = crossover(
                parent_a.genotype, parent_b.genotype, cfg.grammar, cfg.max_adjunctions, rng
            )
            varied = True
        else:
            genotypes = (
                selected[cursor % len(selected)].genotype,
                selected[(cursor + 1) % len(selected)].genotype,
            )
            varied = False
        cursor += 2
        out = []
        for genotype in genotypes:
            if rng.random() < cfg.p_mutation:
                genotype = mutate(genotype, cfg.grammar, cfg.max_adjunctions, rng)
                varied = True
            out.append((genotype, varied))
        return tuple(out)

    while len(offspring) < size:
        accepted: list[Individual] = []
        for attempt in range(_DUPLICATE_RETRIES):
            accepted = []
            retry = False
            for genotype, varied in generate():
                individual = make(genotype)
                if varied and individual.expression in seen and attempt < _DUPLICATE_RETRIES - 1:
                    retry = True
                    break
                accepted.append(individual)
            if not retry:
                break
        for individual in accepted:
            seen.add(individual.expression)
            offspring.append(individual)
            if len(offspring) == size:
                break
    return offspring


def run(
    cfg: GpConfig,
    estimation,
    validation,
    observer: Observer | None = None,
    threads: int = 1,
) -> tuple[ParetoFront, tuple[IterationStats, ...]]:
    """Run the full structure-and-parameter search.

    Executes exactly `cfg.iterations` iterations (fewer when the optional
    early-stop threshold is hit) and returns the final rank-1 front plus the
    per-iteration history of min/mean objectives.  Fully deterministic given
    the configuration seed.
    """
    rng = np.random.default_rng(cfg.seed)
    counter = itertools.count()
    evaluator = _Evaluator(estimation, validation, threads=threads)

    def make(genotype: DerivationTree) -> Individual:
        return Individual(genotype, expression_of(genotype, cfg.grammar), next(counter))

    population = [
        make(random_derivation(cfg.grammar, cfg.max_adjunctions, rng))
        for _ in range(cfg.population_size)
    ]
    previous: list[Individual] = []
    history: list[IterationStats] = []
    for iteration in range(cfg.iterations):
        population = evaluator.evaluate_population(population)
        selected = select(previous, population, cfg.population_size)
        front_size = len(fast_non_dominated_sort(selected)[0])
        stats = _stats(iteration, selected, front_size)
        history.append(stats)
        if observer is not None:
            observer(stats, selected)
        previous = selected
        threshold = cfg.early_stop_simulation_rms
        if threshold is not None and stats.min_rms_simulation <= threshold:
            break
        if iteration < cfg.iterations - 1:
            population = _propose(
                selected, cfg, rng, make, already_scored=set(evaluator.cache)
            )
    front = ParetoFront.from_population(previous)
    return front, tuple(history)
