"""
Tests for the random and greedy baselines
"""
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
import orjson
import pytest
from django.core.management import call_command
from django.test import SimpleTestCase

from apps.baselines.services import greedy_diversity, random_minimize
from apps.corpus.services import write_corpus
from apps.harness.metrics import coverage
from apps.minimizer.budget import InfeasibleBudget
from apps.oracle.synth import SynthConfig, synth_corpus
from apps.similarity.services import export_matrix
from tests.factories import random_similarity, similarity_matrix, traced_corpus


def skewed_corpus():
    """Nineteen cases for R0 and a single case for the rare requirement."""
    return traced_corpus([['R0']] * 19 + [['RARE']])


class RandomBaselineTests(SimpleTestCase):
    """Test random minimization with and without the coverage constraint"""

    def test_full_budget_keeps_everything(self):
        corpus = skewed_corpus()
        for constrained in (True, False):
            solution = random_minimize(corpus, 1.0, constrained=constrained, seed=0)
            self.assertEqual(solution.selected_count, 20)
            self.assertTrue(solution.valid)

    def test_constrained_always_valid(self):
        corpus = skewed_corpus()
        for seed in range(30):
            solution = random_minimize(corpus, 0.2, constrained=True, seed=seed)
            self.assertEqual(solution.selected_count, 4)
            self.assertTrue(solution.valid)

    def test_unconstrained_can_miss_requirements(self):
        corpus = skewed_corpus()
        solutions = [random_minimize(corpus, 0.2, constrained=False, seed=seed) for seed in range(50)]
        self.assertTrue(all(s.selected_count == 4 for s in solutions))
        self.assertFalse(all(s.valid for s in solutions))

    @pytest.mark.slow
    def test_unconstrained_coverage_on_synthetic_corpus(self):
        corpus, _ = synth_corpus(SynthConfig())
        ids = corpus.ids
        values = np.array([
            coverage([ids[i] for i in random_minimize(corpus, 0.07, constrained=False, seed=seed).selected], corpus)
            for seed in range(1000)
        ])
        self.assertLess(abs(values.mean() - 0.39), 0.05)
        self.assertLess(values.mean() + 1.96 * values.std(ddof=1) / np.sqrt(len(values)), 1.0)

    def test_seeded(self):
        corpus = skewed_corpus()
        first = random_minimize(corpus, 0.3, constrained=False, seed=4)
        second = random_minimize(corpus, 0.3, constrained=False, seed=4)
        self.assertTrue(first.same_selection(second))

    def test_infeasible_constrained_budget(self):
        corpus = traced_corpus([['A'], ['B'], ['C'], ['D']])
        with self.assertRaises(InfeasibleBudget):
            random_minimize(corpus, 0.5, constrained=True, seed=0)


class GreedyBaselineTests(SimpleTestCase):
    """Test the greedy maximin baseline"""

    def test_picks_farthest_case(self):
        corpus = traced_corpus([['R1']] * 4)
        sim = similarity_matrix([
            [1.0, 0.9, 0.1, 0.5],
            [0.9, 1.0, 0.2, 0.6],
            [0.1, 0.2, 1.0, 0.3],
            [0.5, 0.6, 0.3, 1.0],
        ])
        solution = greedy_diversity(corpus, sim, 0.5)
        self.assertEqual(solution.selected.tolist(), [0, 2])

    def test_ties_go_to_lowest_index(self):
        corpus = traced_corpus([['R1'], ['R1'], ['R2'], ['R2'], ['R3'], ['R3']])
        sim = similarity_matrix(np.zeros((6, 6)))
        self.assertEqual(greedy_diversity(corpus, sim, 0.5).selected.tolist(), [0, 2, 4])
        self.assertEqual(greedy_diversity(corpus, sim, 4 / 6).selected.tolist(), [0, 1, 2, 4])

    def test_valid_and_budget_exact(self):
        corpus = traced_corpus([[f'R{i % 6}'] for i in range(30)])
        solution = greedy_diversity(corpus, random_similarity(30, np.random.default_rng(3)), 0.4)
        self.assertEqual(solution.selected_count, 12)
        self.assertTrue(solution.valid)


class BaselineCommandTests(SimpleTestCase):
    """Test the baseline command output"""

    def test_greedy_result_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            corpus = traced_corpus([[f'R{i % 3}'] for i in range(12)])
            write_corpus(corpus, tmp / 'corpus.jsonl')
            export_matrix(random_similarity(12, np.random.default_rng(0)), tmp / 'sim.txt')
            call_command(
                'baseline', kind='greedy', corpus=str(tmp / 'corpus.jsonl'), sim_matrix=str(tmp / 'sim.txt'),
                budget=0.5, out=str(tmp / 'greedy.json'), stdout=StringIO(),
            )
            payload = orjson.loads((tmp / 'greedy.json').read_bytes())
            self.assertEqual(payload['technique'], 'greedy')
            self.assertEqual(payload['selected_count'], 6)
            self.assertEqual(payload['generations'], 0)
            self.assertTrue(payload['valid'])
