"""
Tests for budget arithmetic, GA operators, the evolution engine and minimize
"""
import itertools
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
import orjson
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from apps.corpus.services import write_corpus
from apps.minimizer.budget import (
    InfeasibleBudget,
    MinimizerError,
    NoValidIndividual,
    adequate_budget,
    budget_size,
    checked_budget_size,
    round_half_up,
)
from apps.minimizer.engine import EvolutionEngine, has_converged
from apps.minimizer.operators import (
    crossover,
    init_population,
    mutate,
    proportional_quotas,
    repair,
    select_parents,
)
from apps.minimizer.services import fitness, minimize
from apps.minimizer.types import GaConfig, InitStrategy, Objective, SubsetSolution, ga_config
from apps.similarity.services import export_matrix
from tests.factories import random_similarity, similarity_matrix, traced_corpus


class ScriptedRng:
    """Replays fixed draws for operators that read ``random`` and ``integers``."""

    def __init__(self, randoms=(), integers=()):
        self.randoms = list(randoms)
        self.integer_draws = list(integers)

    def random(self):
        return self.randoms.pop(0)

    def integers(self, high, size=None):
        return np.array(self.integer_draws.pop(0))


def six_case_corpus():
    return traced_corpus([['R1'], ['R1'], ['R2'], ['R2'], ['R3'], ['R3']])


def wide_corpus(m=40, n_req=5):
    return traced_corpus([[f'R{i % n_req}'] for i in range(m)])


def exhaustive_optimum(corpus, sim, k):
    m = corpus.m
    return min(
        fitness(bits, sim)
        for bits in (np.isin(np.arange(m), chosen) for chosen in itertools.combinations(range(m), k))
        if corpus.covers_all(bits)
    )


def optimum_sweep(instances, m_range, population_size, max_generations, seed=7):
    """GA runs that hit the exhaustive optimum, and runs that beat it, over random small instances."""
    picker = np.random.default_rng(seed)
    matches = below = 0
    for number in range(instances):
        m = int(picker.integers(*m_range))
        n_req = int(picker.integers(2, 5))
        corpus = traced_corpus([[f'R{i % n_req}'] for i in range(m)])
        sim = random_similarity(m, picker)
        budget = max(float(picker.choice([0.3, 0.4, 0.5, 0.6])), adequate_budget(corpus))
        optimum = exhaustive_optimum(corpus, sim, budget_size(m, budget))
        found = minimize(corpus, sim, GaConfig(
            budget=budget, population_size=population_size, mutation_rate=0.2,
            convergence_epsilon=0.0, max_generations=max_generations, seed=number,
        )).best.fitness
        matches += bool(np.isclose(found, optimum))
        below += bool(found < optimum - 1e-12)
    return matches, below


class FitnessTests(SimpleTestCase):
    """Test the minimization objectives"""

    sims = similarity_matrix([
        [1.0, 0.5, 0.2],
        [0.5, 1.0, 0.4],
        [0.2, 0.4, 1.0],
    ])

    def test_max_squared(self):
        self.assertAlmostEqual(fitness(np.ones(3, dtype=bool), self.sims), 0.22)

    def test_pairwise(self):
        self.assertAlmostEqual(fitness(np.ones(3, dtype=bool), self.sims, Objective.PAIRWISE), 1.1 / 3)

    def test_extremes(self):
        bits = np.ones(4, dtype=bool)
        self.assertEqual(fitness(bits, similarity_matrix(np.zeros((4, 4)))), 0.0)
        self.assertEqual(fitness(bits, similarity_matrix(np.ones((4, 4)))), 1.0)

    def test_single_case(self):
        self.assertEqual(fitness(np.array([False, True, False]), self.sims), 0.0)

    def test_accepts_solution(self):
        solution = SubsetSolution(bits=[True, True, False])
        self.assertAlmostEqual(fitness(solution, self.sims), 0.25)


class BudgetTests(SimpleTestCase):
    """Test budget sizes and feasibility"""

    def test_budget_size(self):
        self.assertEqual(budget_size(736, 0.5), 368)
        self.assertEqual(budget_size(10, 0.25), 3)
        self.assertEqual(budget_size(10, 0.35), 4)
        self.assertEqual(round_half_up(2.5), 3)

    def test_infeasible_budget(self):
        corpus = traced_corpus([[f'R{i % 55}'] for i in range(100)])
        with self.assertRaises(InfeasibleBudget) as ctx:
            checked_budget_size(corpus, 0.54)
        self.assertEqual((ctx.exception.size, ctx.exception.n_req), (54, 55))
        self.assertEqual(checked_budget_size(corpus, 0.55), 55)

    def test_adequate_budget_is_minimal(self):
        corpus = wide_corpus(m=37, n_req=7)
        budget = adequate_budget(corpus)
        self.assertEqual(checked_budget_size(corpus, budget), 7)
        with self.assertRaises(InfeasibleBudget):
            checked_budget_size(corpus, budget - 0.01)

    def test_config_validation(self):
        with self.assertRaises(ValueError):
            GaConfig(budget=1.5)
        with self.assertRaises(ValueError):
            GaConfig(budget=0.0)

    @override_settings(MINIMIZER_DEFAULTS={'population_size': 12})
    def test_settings_defaults(self):
        config = ga_config(budget=0.5, max_generations=None, seed=3)
        self.assertEqual(config.population_size, 12)
        self.assertEqual(config.max_generations, 1000)
        self.assertEqual(config.seed, 3)


class InitializationTests(SimpleTestCase):
    """Test the three initialization strategies"""

    def test_strategies_are_budget_exact_and_valid(self):
        corpus = wide_corpus()
        for strategy in InitStrategy:
            config = GaConfig(budget=0.3, population_size=20, init_strategy=strategy, seed=4)
            population = init_population(corpus, config)
            self.assertEqual(len(population), 20)
            for solution in population:
                self.assertEqual(solution.selected_count, 12)
                self.assertTrue(solution.valid, strategy)

    def test_proportional_quotas(self):
        corpus = traced_corpus([['A']] * 6 + [['B']] * 2 + [['C']] * 2)
        quotas = proportional_quotas(corpus, 0.5, 5)
        self.assertEqual(quotas.tolist(), [3, 1, 1])

    def test_quotas_adjust_to_budget(self):
        corpus = traced_corpus([['A']] * 5 + [['B']] * 5 + [['C']] * 5)
        quotas = proportional_quotas(corpus, 0.3, round_half_up(15 * 0.3))
        self.assertEqual(int(quotas.sum()), 5)
        self.assertTrue((quotas >= 1).all())
        # ties go to the lowest requirement index
        self.assertEqual(quotas.tolist(), [1, 2, 2])

    def test_seeded_population(self):
        corpus = wide_corpus()
        config = GaConfig(budget=0.25, population_size=5, seed=9)
        first = init_population(corpus, config)
        second = init_population(corpus, config)
        for a, b in zip(first, second):
            self.assertTrue(a.same_selection(b))


class OperatorTests(SimpleTestCase):
    """Test selection, crossover, mutation and repair"""

    def test_tournament_prefers_valid(self):
        population = [
            SubsetSolution(bits=[1, 0], valid=False, fitness=0.1),
            SubsetSolution(bits=[0, 1], valid=True, fitness=0.9),
        ]
        first, second = select_parents(population, np.random.default_rng(0))
        self.assertIs(first, population[1])
        self.assertIs(second, population[1])

    def test_tournament_prefers_lower_fitness(self):
        population = [
            SubsetSolution(bits=[1, 0], valid=True, fitness=0.6),
            SubsetSolution(bits=[0, 1], valid=True, fitness=0.2),
        ]
        first, _ = select_parents(population, np.random.default_rng(1))
        self.assertIs(first, population[1])

    def test_tournament_tie_goes_to_lower_index(self):
        population = [
            SubsetSolution(bits=[1, 0], valid=True, fitness=0.5),
            SubsetSolution(bits=[0, 1], valid=True, fitness=0.5),
        ]
        first, second = select_parents(population, np.random.default_rng(2))
        self.assertIs(first, population[0])
        self.assertIs(second, population[0])

    def test_parents_come_from_population(self):
        rng = np.random.default_rng(5)
        population = [
            SubsetSolution(bits=rng.permutation([True] * 3 + [False] * 5), valid=True, fitness=float(value))
            for value in rng.random(6)
        ]
        for _ in range(20):
            for parent in select_parents(population, rng):
                self.assertIsInstance(parent, SubsetSolution)
                self.assertTrue(any(parent is member for member in population))

    def test_crossover_keeps_shared_cases(self):
        p1 = SubsetSolution(bits=[1, 1, 0, 0, 1, 0])
        p2 = SubsetSolution(bits=[1, 0, 1, 0, 0, 1])
        rng = np.random.default_rng(3)
        for _ in range(50):
            child = crossover(p1, p2, rng)
            self.assertEqual(child.selected_count, 3)
            self.assertTrue(child.bits[0])
            self.assertFalse(child.bits[3])

    def test_crossover_skipped(self):
        p1 = SubsetSolution(bits=[1, 1, 0, 0])
        child = crossover(p1, SubsetSolution(bits=[0, 0, 1, 1]), np.random.default_rng(0), rate=0.0)
        self.assertTrue(child.same_selection(p1))

    def test_inversion(self):
        solution = SubsetSolution(bits=[1, 0, 0, 1, 1])
        mutated = mutate(solution, ScriptedRng(randoms=[0.0], integers=[[3, 1]]))
        self.assertEqual(mutated.bits.astype(int).tolist(), [1, 1, 0, 0, 1])

    def test_inversion_skipped(self):
        solution = SubsetSolution(bits=[1, 0, 0, 1, 1])
        self.assertIs(mutate(solution, ScriptedRng(randoms=[0.5]), rate=0.01), solution)

    def test_operators_preserve_size(self):
        rng = np.random.default_rng(8)
        for _ in range(500):
            p1 = SubsetSolution(bits=rng.permutation([True] * 7 + [False] * 13))
            p2 = SubsetSolution(bits=rng.permutation([True] * 7 + [False] * 13))
            child = mutate(crossover(p1, p2, rng), rng)
            self.assertEqual(child.selected_count, 7)
            self.assertEqual(sorted(mutate(p1, rng).bits.tolist()), sorted(p1.bits.tolist()))

    def test_repair_restores_coverage(self):
        corpus = six_case_corpus()
        solution = SubsetSolution(bits=[1, 1, 1, 0, 0, 0])
        for seed in range(5):
            repaired, ok = repair(solution, corpus, np.random.default_rng(seed))
            self.assertTrue(ok)
            self.assertTrue(repaired.valid)
            self.assertEqual(repaired.selected_count, 3)
            self.assertTrue(corpus.covers_all(repaired.bits))

    def test_repair_valid_input_unchanged(self):
        corpus = six_case_corpus()
        solution = SubsetSolution(bits=[1, 0, 1, 0, 1, 0])
        repaired, ok = repair(solution, corpus, np.random.default_rng(0))
        self.assertTrue(ok)
        self.assertIs(repaired, solution)

    def test_repair_infeasible(self):
        corpus = six_case_corpus()
        solution = SubsetSolution(bits=[1, 0, 0, 0, 0, 0])
        repaired, ok = repair(solution, corpus, np.random.default_rng(0))
        self.assertFalse(ok)
        self.assertIs(repaired, solution)


class EngineTests(SimpleTestCase):
    """Test the generational loop"""

    def test_windowed_convergence(self):
        self.assertFalse(has_converged([1.0, 0.9], 2, 0.01))
        self.assertTrue(has_converged([1.0, 0.5, 0.5, 0.499], 2, 0.01))
        self.assertFalse(has_converged([1.0, 0.5, 0.4, 0.4], 2, 0.01))

    def test_survivors_prefer_distinct_selections(self):
        engine = EvolutionEngine(lambda bits: (True, 0.0), np.random.default_rng(0), population_size=3)
        best = SubsetSolution(bits=np.array([True, True, False, False]), valid=True, fitness=0.1)
        other = SubsetSolution(bits=np.array([False, True, True, False]), valid=True, fitness=0.5)
        worst = SubsetSolution(bits=np.array([False, False, True, True]), valid=True, fitness=0.9)
        survivors = engine._survivors([best, best, other, best, worst])
        self.assertEqual([s.fitness for s in survivors], [0.1, 0.5, 0.9])
        padded = engine._survivors([best, best, other])
        self.assertEqual([s.fitness for s in padded], [0.1, 0.5, 0.1])

    def test_no_valid_individual(self):
        rng = np.random.default_rng(0)
        engine = EvolutionEngine(lambda bits: (False, 0.0), rng, population_size=4, max_generations=3)
        initial = [SubsetSolution(bits=rng.permutation([True, True, False, False])) for _ in range(4)]
        with self.assertRaises(NoValidIndividual):
            engine.run(initial)


class MinimizeTests(SimpleTestCase):
    """Test the GA minimizer end to end"""

    def test_small_population(self):
        corpus = traced_corpus([['R1'], ['R1'], ['R2'], ['R2']])
        sim = random_similarity(4, np.random.default_rng(3))
        result = minimize(corpus, sim, GaConfig(budget=0.5, population_size=4, seed=0))
        self.assertTrue(result.best.valid)
        self.assertEqual(len(result.selected_ids), 2)
        self.assertTrue(corpus.covers_all(result.best.bits))

    def test_zero_similarity_converges_fast(self):
        corpus = wide_corpus()
        config = GaConfig(budget=0.5, population_size=10, seed=1)
        result = minimize(corpus, similarity_matrix(np.zeros((40, 40))), config)
        self.assertEqual(result.best.fitness, 0.0)
        self.assertLessEqual(result.generations_run, config.convergence_window + 1)
        self.assertEqual(len(result.selected_ids), 20)

    def test_result_is_valid_and_monotone(self):
        corpus = wide_corpus()
        sim = random_similarity(40, np.random.default_rng(6))
        result = minimize(corpus, sim, GaConfig(budget=0.3, population_size=20, max_generations=30, seed=2))
        self.assertTrue(result.best.valid)
        self.assertTrue(corpus.covers_all(result.best.bits))
        self.assertEqual(result.best.selected_count, 12)
        history = np.array(result.fitness_history)
        self.assertTrue((np.diff(history) <= 0).all())
        self.assertAlmostEqual(result.best.fitness, fitness(result.best, sim))

    def test_deterministic(self):
        corpus = wide_corpus()
        sim = random_similarity(40, np.random.default_rng(7))
        config = GaConfig(budget=0.3, population_size=16, max_generations=20, seed=5, repair_enabled=True)
        first = minimize(corpus, sim, config)
        second = minimize(corpus, sim, config)
        self.assertEqual(first.selected_ids, second.selected_ids)
        self.assertEqual(first.fitness_history, second.fitness_history)
        self.assertEqual(first.to_payload(), second.to_payload())

    def test_finds_exhaustive_optimum(self):
        corpus = traced_corpus([['R1'], ['R1'], ['R1'], ['R1'], ['R2'], ['R2'], ['R2'], ['R2']])
        sim = random_similarity(8, np.random.default_rng(12))
        optimum = min(
            fitness(np.isin(np.arange(8), chosen), sim)
            for chosen in itertools.combinations(range(8), 4)
            if corpus.covers_all(np.isin(np.arange(8), chosen))
        )
        config = GaConfig(
            budget=0.5, population_size=40, mutation_rate=0.5, convergence_epsilon=0.0,
            max_generations=200, seed=0,
        )
        self.assertAlmostEqual(minimize(corpus, sim, config).best.fitness, optimum)

    def test_matches_exhaustive_optimum_on_small_instances(self):
        matches, below = optimum_sweep(12, (6, 10), population_size=30, max_generations=60)
        self.assertGreaterEqual(matches, 11)
        self.assertEqual(below, 0)

    @pytest.mark.slow
    def test_matches_exhaustive_optimum_sweep(self):
        matches, below = optimum_sweep(100, (8, 16), population_size=100, max_generations=200)
        self.assertGreaterEqual(matches, 95)
        self.assertEqual(below, 0)

    def test_matrix_size_mismatch(self):
        with self.assertRaises(MinimizerError):
            minimize(wide_corpus(), similarity_matrix(np.zeros((3, 3))), GaConfig(budget=0.5))


class MinimizeCommandTests(SimpleTestCase):
    """Test the minimize command"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)
        write_corpus(wide_corpus(m=20, n_req=4), self.dir / 'corpus.jsonl')
        export_matrix(random_similarity(20, np.random.default_rng(1)), self.dir / 'sim.txt')

    def run_command(self, out, **options):
        call_command(
            'minimize', corpus=str(self.dir / 'corpus.jsonl'), sim_matrix=str(self.dir / 'sim.txt'),
            out=str(out), population_size=10, max_generations=15, seed=3, stdout=StringIO(), **options,
        )
        return Path(out).read_bytes()

    def test_reruns_are_byte_identical(self):
        first = self.run_command(self.dir / 'a.json', budget=0.5)
        second = self.run_command(self.dir / 'b.json', budget=0.5)
        self.assertEqual(first, second)
        payload = orjson.loads(first)
        self.assertEqual(payload['technique'], 'ga')
        self.assertEqual(payload['selected_count'], 10)
        self.assertNotIn('wall_time', payload)

    def test_infeasible_budget_exit_code(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_command(self.dir / 'c.json', budget=0.1)
        self.assertEqual(ctx.exception.returncode, 2)
