from collections import Counter

import numpy as np
import pytest

import tagnarx as tn
from tagnarx.errors import ConfigError
from tagnarx.evolution import prune_to_budget

from conftest import DAMPED_COEFFICIENTS, M1_STRUCTURE


@pytest.fixture(scope="module")
def small_problem():
    gen = tn.NarxModel.from_structure(M1_STRUCTURE, DAMPED_COEFFICIENTS)
    est = tn.synthesize(
        gen, tn.gaussian_input(1024, 0.8, seed=1, smooth=1), noise_std=1e-3, seed=100
    )
    val = tn.synthesize(
        gen, tn.gaussian_input(256, 0.8, seed=2, smooth=1), noise_std=1e-3, seed=101
    )
    return est, val


class TestGpConfig:
    def test_defaults_follow_benchmark_settings(self):
        cfg = tn.GpConfig()
        assert cfg.population_size == 100
        assert cfg.iterations == 150
        assert cfg.max_adjunctions == 150
        assert cfg.p_crossover == 1.0
        assert cfg.p_mutation == 0.8

    def test_validation(self):
        with pytest.raises(ConfigError):
            tn.GpConfig(population_size=0)
        with pytest.raises(ConfigError):
            tn.GpConfig(iterations=0)
        with pytest.raises(ConfigError):
            tn.GpConfig(p_crossover=1.5)
        with pytest.raises(ConfigError):
            tn.GpConfig(p_mutation=-0.1)
        with pytest.raises(ConfigError):
            tn.GpConfig(max_adjunctions=-1)


class TestCrossover:
    def test_bare_parents_unchanged(self, grammar):
        rng = np.random.default_rng(0)
        bare = tn.DerivationTree(tn.DerivationNode(tn.NOISE_SEED))
        a, b = tn.crossover(bare, bare, grammar, 10, rng)
        assert a == bare
        assert b == bare

    def test_self_crossover_valid(self, grammar):
        rng = np.random.default_rng(1)
        parent = tn.random_derivation(grammar, 20, np.random.default_rng(3))
        for _ in range(50):
            a, b = tn.crossover(parent, parent, grammar, 20, rng)
            assert not tn.derivation_violations(a, grammar, 20)
            assert not tn.derivation_violations(b, grammar, 20)

    def test_offspring_within_budget(self, grammar):
        rng = np.random.default_rng(2)
        pool = [tn.random_derivation(grammar, 25, rng) for _ in range(40)]
        for _ in range(500):
            pa = pool[int(rng.integers(len(pool)))]
            pb = pool[int(rng.integers(len(pool)))]
            a, b = tn.crossover(pa, pb, grammar, 25, rng)
            for child in (a, b):
                assert child.adjunction_count() <= 25
                assert not tn.derivation_violations(child, grammar, 25)

    def test_deterministic(self, grammar):
        pa = tn.random_derivation(grammar, 15, np.random.default_rng(5))
        pb = tn.random_derivation(grammar, 15, np.random.default_rng(6))
        out1 = tn.crossover(pa, pb, grammar, 15, np.random.default_rng(7))
        out2 = tn.crossover(pa, pb, grammar, 15, np.random.default_rng(7))
        assert out1 == out2


class TestMutate:
    def test_bare_root_grows(self, grammar):
        bare = tn.DerivationTree(tn.DerivationNode(tn.NOISE_SEED))
        grew = 0
        rng = np.random.default_rng(8)
        for _ in range(50):
            child = tn.mutate(bare, grammar, 10, rng)
            assert not tn.derivation_violations(child, grammar, 10)
            grew += child.adjunction_count() > 0
        assert grew > 0

    def test_exhausted_budget_allows_deletion_only(self, grammar):
        rng = np.random.default_rng(9)
        parent = tn.random_derivation(grammar, 12, np.random.default_rng(10))
        budget = parent.adjunction_count()
        for _ in range(50):
            child = tn.mutate(parent, grammar, budget, rng)
            assert child.adjunction_count() <= budget
            assert not tn.derivation_violations(child, grammar, budget)

    def test_validity_sweep(self, grammar):
        rng = np.random.default_rng(11)
        parent = tn.random_derivation(grammar, 20, np.random.default_rng(12))
        for _ in range(1000):
            child = tn.mutate(parent, grammar, 20, rng)
            assert not tn.derivation_violations(child, grammar, 20)
            parent = child

    def test_deterministic(self, grammar):
        parent = tn.random_derivation(grammar, 15, np.random.default_rng(13))
        a = tn.mutate(parent, grammar, 15, np.random.default_rng(14))
        b = tn.mutate(parent, grammar, 15, np.random.default_rng(14))
        assert a == b


class TestPruneToBudget:
    def test_within_budget_untouched(self, grammar):
        parent = tn.random_derivation(grammar, 10, np.random.default_rng(15))
        assert prune_to_budget(parent, grammar, 10) == parent

    def test_prunes_to_budget_and_stays_causal(self, grammar):
        rng = np.random.default_rng(16)
        for _ in range(100):
            parent = tn.random_derivation(grammar, 30, rng)
            for budget in (0, 1, 3, 7, 15):
                pruned = prune_to_budget(parent, grammar, budget)
                assert pruned.adjunction_count() <= budget
                assert not tn.derivation_violations(pruned, grammar, budget)


class TestRun:
    def test_deterministic_rerun(self, small_problem):
        est, val = small_problem
        cfg = tn.GpConfig(population_size=10, iterations=3, max_adjunctions=15, seed=7)
        front1, history1 = tn.run(cfg, est, val)
        front2, history2 = tn.run(cfg, est, val)
        assert history1 == history2
        assert [m.expression for m in front1.members] == [m.expression for m in front2.members]

    def test_thread_count_does_not_change_results(self, small_problem):
        est, val = small_problem
        cfg = tn.GpConfig(population_size=10, iterations=3, max_adjunctions=15, seed=8)
        front1, history1 = tn.run(cfg, est, val, threads=1)
        front2, history2 = tn.run(cfg, est, val, threads=4)
        assert history1 == history2
        assert [m.expression for m in front1.members] == [m.expression for m in front2.members]

    def test_single_iteration_returns_evaluated_front(self, small_problem):
        est, val = small_problem
        cfg = tn.GpConfig(population_size=5, iterations=1, max_adjunctions=10, seed=3)
        front, history = tn.run(cfg, est, val)
        assert len(history) == 1
        assert front.members
        for member in front.members:
            assert member.fitness is not None
            assert member.model is not None

    def test_noop_operators_preserve_population_multiset(self, small_problem, grammar):
        from tagnarx.evolution import _propose
        from tagnarx.moo import Individual

        est, val = small_problem
        cfg = tn.GpConfig(
            population_size=8,
            iterations=3,
            max_adjunctions=10,
            p_crossover=0.0,
            p_mutation=0.0,
            seed=4,
        )
        rng = np.random.default_rng(4)
        genotypes = [tn.random_derivation(grammar, 10, rng) for _ in range(8)]
        selected = []
        for i, genotype in enumerate(genotypes):
            expression = tn.expression_of(genotype, grammar)
            model, fitness = tn.evaluate(expression, est, val)
            selected.append(Individual(genotype, expression, i, model=model, fitness=fitness))
        offspring = _propose(selected, cfg, rng, lambda g: Individual(g, tn.expression_of(g, grammar), 0))
        assert Counter(ind.genotype for ind in offspring) == Counter(
            ind.genotype for ind in selected
        )

    def test_elitism_monotone_history(self, small_problem):
        est, val = small_problem
        cfg = tn.GpConfig(population_size=15, iterations=8, max_adjunctions=20, seed=5)
        _, history = tn.run(cfg, est, val)
        for earlier, later in zip(history, history[1:]):
            assert later.min_rms_prediction <= earlier.min_rms_prediction
            assert later.min_rms_simulation <= earlier.min_rms_simulation
            assert later.min_complexity <= earlier.min_complexity

    def test_every_genotype_valid(self, small_problem, grammar):
        est, val = small_problem
        cfg = tn.GpConfig(population_size=10, iterations=5, max_adjunctions=12, seed=6)
        seen = []
        tn.run(cfg, est, val, observer=lambda stats, pop: seen.extend(pop))
        assert seen
        for individual in seen:
            assert not tn.derivation_violations(
                individual.genotype, cfg.grammar, cfg.max_adjunctions
            )

    def test_early_stop_threshold(self, small_problem):
        est, val = small_problem
        cfg = tn.GpConfig(
            population_size=10,
            iterations=50,
            max_adjunctions=15,
            seed=9,
            early_stop_simulation_rms=1.0,
        )
        _, history = tn.run(cfg, est, val)
        assert len(history) < 50

    def test_observer_receives_stats(self, small_problem):
        est, val = small_problem
        cfg = tn.GpConfig(population_size=6, iterations=2, max_adjunctions=10, seed=10)
        calls = []
        tn.run(cfg, est, val, observer=lambda stats, pop: calls.append((stats, len(pop))))
        assert [stats.iteration for stats, _ in calls] == [0, 1]
        assert all(size == 6 for _, size in calls)
        assert all(stats.front_size >= 1 for stats, _ in calls)
