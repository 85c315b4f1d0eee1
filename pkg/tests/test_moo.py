import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import tagnarx as tn
from tagnarx import FitnessVector, crowding_distance, dominates, fast_non_dominated_sort, select
from tagnarx.errors import InsufficientPopulation, UnevaluatedIndividual

from conftest import make_individual


def fv(p, s, c):
    return FitnessVector(float(p), float(s), int(c))


def population(vectors):
    return [make_individual(fv(*v), ident=i) for i, v in enumerate(vectors)]


objective = st.one_of(
    st.integers(0, 4).map(float),
    st.just(math.inf),
)
vector = st.tuples(objective, objective, st.integers(0, 4))


class TestDominates:
    def test_one_strict_improvement(self):
        assert dominates(fv(1, 1, 3), fv(2, 1, 3))

    def test_incomparable(self):
        assert not dominates(fv(1, 2, 3), fv(2, 1, 3))
        assert not dominates(fv(2, 1, 3), fv(1, 2, 3))

    def test_equal_vectors_tie(self):
        assert not dominates(fv(1, 1, 3), fv(1, 1, 3))

    def test_finite_beats_infinite(self):
        assert dominates(fv(1, 1, 3), fv(1, math.inf, 3))
        assert not dominates(fv(1, math.inf, 3), fv(1, math.inf, 3))

    @given(vector)
    def test_irreflexive(self, v):
        assert not dominates(fv(*v), fv(*v))

    @given(vector, vector)
    def test_asymmetric(self, a, b):
        if dominates(fv(*a), fv(*b)):
            assert not dominates(fv(*b), fv(*a))

    @given(vector, vector, vector)
    def test_transitive(self, a, b, c):
        if dominates(fv(*a), fv(*b)) and dominates(fv(*b), fv(*c)):
            assert dominates(fv(*a), fv(*c))


def brute_force_fronts(pop):
    remaining = list(pop)
    fronts = []
    while remaining:
        front = [
            a
            for a in remaining
            if not any(dominates(b.fitness, a.fitness) for b in remaining if b is not a)
        ]
        fronts.append(front)
        remaining = [a for a in remaining if a not in front]
    return fronts


class TestFastNonDominatedSort:
    def test_single_individual(self):
        pop = population([(1, 1, 1)])
        assert fast_non_dominated_sort(pop) == [pop]

    def test_three_level_example(self):
        pop = population([(1, 1, 1), (2, 2, 2), (1, 2, 2)])
        fronts = fast_non_dominated_sort(pop)
        assert [[ind.id for ind in front] for front in fronts] == [[0], [2], [1]]

    def test_unevaluated_rejected(self):
        bare = tn.Individual(
            tn.DerivationTree(tn.DerivationNode(tn.NOISE_SEED)), tn.NarxExpression(), 0
        )
        with pytest.raises(UnevaluatedIndividual):
            fast_non_dominated_sort([bare])

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(100)
        for _ in range(60):
            n = int(rng.integers(1, 120))
            vectors = []
            for _ in range(n):
                p = float(rng.integers(0, 5))
                s = float(rng.integers(0, 5))
                c = int(rng.integers(0, 4))
                if rng.random() < 0.1:
                    s = math.inf
                if rng.random() < 0.05:
                    p = math.inf
                vectors.append((p, s, c))
            pop = population(vectors)
            fast = fast_non_dominated_sort(pop)
            brute = brute_force_fronts(pop)
            assert [set(id(i) for i in f) for f in fast] == [
                set(id(i) for i in f) for f in brute
            ]

    def test_every_front_dominated_by_previous(self):
        rng = np.random.default_rng(5)
        vectors = [tuple(rng.integers(0, 4, size=3)) for _ in range(80)]
        fronts = fast_non_dominated_sort(population(vectors))
        for earlier, later in zip(fronts, fronts[1:]):
            for ind in later:
                assert any(dominates(prev.fitness, ind.fitness) for prev in earlier)


def brute_force_crowding(front):
    n = len(front)
    if n <= 2:
        return [math.inf] * n
    values = [ind.fitness.as_tuple() for ind in front]
    out = [0.0] * n
    for m in range(3):
        order = sorted(range(n), key=lambda i: values[i][m])
        out[order[0]] = math.inf
        out[order[-1]] = math.inf
        span = values[order[-1]][m] - values[order[0]][m]
        if span <= 0 or not math.isfinite(span):
            continue
        for pos in range(1, n - 1):
            i = order[pos]
            if math.isinf(out[i]):
                continue
            out[i] += (values[order[pos + 1]][m] - values[order[pos - 1]][m]) / span
    return out


class TestCrowdingDistance:
    def test_small_fronts_all_infinite(self):
        assert crowding_distance(population([(1, 1, 1)])) == [math.inf]
        assert crowding_distance(population([(1, 1, 1), (2, 2, 2)])) == [math.inf] * 2

    def test_collinear_points(self):
        front = population([(0, 0, 0), (1, 1, 1), (2, 2, 2)])
        distances = crowding_distance(front)
        assert distances[0] == math.inf
        assert distances[2] == math.inf
        assert math.isfinite(distances[1])

    def test_matches_recomputation_oracle(self):
        rng = np.random.default_rng(200)
        for _ in range(50):
            n = int(rng.integers(1, 40))
            vectors = [
                (float(rng.integers(0, 6)), float(rng.integers(0, 6)), int(rng.integers(0, 5)))
                for _ in range(n)
            ]
            front = population(vectors)
            assert crowding_distance(front) == brute_force_crowding(front)


class TestSelect:
    def test_first_iteration_identity(self):
        current = population([(1, 2, 3), (2, 1, 3), (3, 3, 3)])
        assert select([], current, 3) == current

    def test_whole_population_identity(self):
        current = population([(1, 2, 3), (2, 1, 3)])
        assert select([], current, 2) == current

    def test_truncation_by_crowding(self):
        # all mutually non-dominated along a line; extremes must survive
        vectors = [(i, 10 - i, 0) for i in range(11)]
        current = population(vectors)
        chosen = select([], current, 4)
        values = {ind.fitness.rms_prediction for ind in chosen}
        assert {0.0, 10.0} <= values
        assert len(chosen) == 4

    def test_rank_one_front_fully_kept_when_it_fits(self):
        rng = np.random.default_rng(7)
        vectors = [tuple(rng.integers(0, 5, size=3)) for _ in range(40)]
        pop = population(vectors)
        fronts = fast_non_dominated_sort(pop)
        if len(fronts[0]) <= 20:
            chosen = select([], pop, 20)
            for member in fronts[0]:
                assert member in chosen

    def test_insufficient_population(self):
        with pytest.raises(InsufficientPopulation):
            select([], population([(1, 1, 1)]), 5)


class TestParetoFront:
    def test_members_mutually_non_dominated(self):
        pop = population([(1, 1, 1), (0, 2, 2), (2, 0, 2), (3, 3, 3)])
        front = tn.ParetoFront.from_population(pop)
        ids = {m.id for m in front.members}
        assert ids == {0, 1, 2}

    def test_best_by_complexity(self):
        pop = population([(1.0, 1.0, 1), (0.5, 2.0, 1), (0.2, 0.2, 2)])
        front = tn.ParetoFront.from_population(pop)
        table = front.best_by_complexity()
        assert table[1].fitness.rms_simulation == 1.0
        assert table[2].fitness.rms_simulation == 0.2

    def test_duplicate_expressions_reported_once(self):
        # same expression under two distinct individuals: one front row
        a = make_individual(fv(1, 1, 0), ident=0)
        b = make_individual(fv(1, 1, 0), ident=0)
        front = tn.ParetoFront.from_population([a, b])
        assert len(front.members) == 1
