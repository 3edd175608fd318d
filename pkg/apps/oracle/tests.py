"""
Tests for the best-FDR oracle, corpus synthesis and redundancy suites
"""
import itertools
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
import orjson
import pytest
from django.core.management import call_command
from django.test import SimpleTestCase

from apps.corpus.services import (
    jaccard,
    parse_corpus,
    parse_faults,
    redundancy_level,
    validate_corpus,
    write_corpus,
    write_faults,
)
from apps.harness.metrics import fdr
from apps.minimizer.budget import adequate_budget, budget_size
from apps.oracle.branch_bound import best_fdr
from apps.oracle.errors import OracleError, SuiteGenerationError, UnsatisfiableSynthConfig
from apps.oracle.suites import REDUNDANCY_LEVELS, generate_redundancy_suites, select_diverse, suite_corpus
from apps.oracle.synth import SynthConfig, synth_corpus
from tests.factories import fault_matrix, paired_corpus, traced_corpus


def random_instance(seed, m=10, n_req=3, n_faults=8):
    rng = np.random.default_rng(seed)
    corpus = traced_corpus([[f'R{i % n_req}'] for i in range(m)])
    detections = {
        case_id: [f'F{j}' for j in range(n_faults) if rng.random() < 0.25]
        for case_id in corpus.ids
    }
    return corpus, fault_matrix(detections)


def brute_force_fdr(corpus, faults, k):
    best = 0.0
    for chosen in itertools.combinations(corpus.ids, k):
        bits = np.isin(corpus.ids, chosen)
        if corpus.covers_all(bits):
            best = max(best, fdr(chosen, faults))
    return best


class BestFdrTests(SimpleTestCase):
    """Test the branch-and-bound oracle"""

    def test_full_budget(self):
        corpus, faults = random_instance(0)
        result = best_fdr(corpus, faults, 1.0)
        self.assertEqual(result.fdr, 1.0)
        self.assertTrue(result.exact)
        self.assertEqual(len(result.subset), 10)

    def test_matches_exhaustive_search(self):
        for seed in range(6):
            corpus, faults = random_instance(seed)
            for budget in (0.3, 0.5, 0.7):
                k = int(np.floor(10 * budget + 0.5))
                result = best_fdr(corpus, faults, budget)
                self.assertAlmostEqual(result.fdr, brute_force_fdr(corpus, faults, k), msg=f'seed {seed}')
                self.assertEqual(len(result.subset), k)
                self.assertTrue(corpus.covers_all(np.isin(corpus.ids, result.subset)))
                self.assertAlmostEqual(fdr(result.subset, faults), result.fdr)

    def test_matches_exhaustive_search_on_many_instances(self):
        picker = np.random.default_rng(2024)
        for seed in range(100):
            m = int(picker.integers(6, 13))
            corpus, faults = random_instance(seed, m=m, n_req=int(picker.integers(1, 4)))
            detections = {c: set(faults.faults_of(c)) for c in corpus.ids}
            detections[corpus.ids[0]].add('F0')
            faults = fault_matrix({c: sorted(found) for c, found in detections.items()})
            budget = max(float(picker.choice([0.2, 0.3, 0.5, 0.7])), adequate_budget(corpus))
            result = best_fdr(corpus, faults, budget)
            expected = brute_force_fdr(corpus, faults, budget_size(m, budget))
            self.assertAlmostEqual(result.fdr, expected, msg=f'seed {seed}, m {m}, budget {budget}')
            self.assertTrue(result.exact)

    def test_monotone_in_budget(self):
        corpus, faults = random_instance(3, m=14)
        values = [best_fdr(corpus, faults, k / 14).fdr for k in range(3, 15)]
        self.assertEqual(values, sorted(values))

    def test_no_faults(self):
        corpus = traced_corpus([['R1'], ['R1']])
        with self.assertRaises(OracleError):
            best_fdr(corpus, fault_matrix({}), 0.5)

    def test_payload(self):
        corpus, faults = random_instance(1)
        payload = best_fdr(corpus, faults, 0.5).to_payload()
        self.assertEqual(payload['selected_count'], 5)
        self.assertNotIn('nodes', payload)


class SynthTests(SimpleTestCase):
    """Test the synthetic corpus generator"""

    config = SynthConfig(n_req=5, n_cases=40, n_faults=20, target_rl=4.0, seed=2)

    def test_shape_and_identifiers(self):
        corpus, faults = synth_corpus(self.config)
        self.assertEqual(corpus.m, 40)
        self.assertEqual(corpus.n_req, 5)
        self.assertEqual(corpus.ids[0], 'TC-0001')
        self.assertEqual(corpus.requirements[0], 'REQ-001')
        self.assertEqual(faults.f_unique, 20)
        self.assertTrue(validate_corpus(corpus, faults).ok)

    def test_redundancy_near_target(self):
        corpus, faults = synth_corpus(self.config)
        self.assertLessEqual(abs(redundancy_level(corpus, faults) - 4.0), 0.05 * 4.0)

    def test_deterministic(self):
        first_corpus, first_faults = synth_corpus(self.config)
        second_corpus, second_faults = synth_corpus(self.config)
        self.assertEqual(first_corpus, second_corpus)
        self.assertEqual(dict(first_faults.detects), dict(second_faults.detects))

    def test_steps_follow_templates(self):
        corpus, _ = synth_corpus(self.config)
        for case in corpus.test_cases:
            self.assertTrue(case.steps[0].startswith('Set Global Preconditions:'))
            self.assertTrue(case.steps[-1].startswith('Check '))
            self.assertTrue(4 <= len(case.steps) <= 8)

    def test_unreachable_redundancy(self):
        config = SynthConfig(n_req=2, n_cases=10, n_faults=5, target_rl=50.0)
        with self.assertRaises(UnsatisfiableSynthConfig):
            synth_corpus(config)

    def test_config_rejects_too_few_cases(self):
        with self.assertRaises(ValueError):
            SynthConfig(n_req=10, n_cases=5)

    @pytest.mark.slow
    def test_default_scale(self):
        corpus, faults = synth_corpus(SynthConfig())
        self.assertEqual((corpus.m, corpus.n_req, faults.f_unique), (736, 54, 220))
        self.assertLessEqual(abs(redundancy_level(corpus, faults) - 11.86), 0.05 * 11.86)


class RedundancySuiteTests(SimpleTestCase):
    """Test redundancy-controlled suite generation"""

    def test_levels(self):
        self.assertEqual(len(REDUNDANCY_LEVELS), 15)
        self.assertEqual((REDUNDANCY_LEVELS[0], REDUNDANCY_LEVELS[-1]), (4.5, 11.5))

    def test_suites_meet_constraints(self):
        corpus, faults = paired_corpus()
        suites = generate_redundancy_suites(corpus, faults, 3.0, count=3, pool_size=10, seed=1)
        self.assertEqual(len(suites), 3)
        self.assertEqual(len(set(suites)), 3)
        for suite in suites:
            self.assertEqual(list(suite), [c for c in corpus.ids if c in suite])
            sub_corpus, sub_faults = suite_corpus(corpus, faults, suite)
            self.assertTrue(validate_corpus(sub_corpus).ok)
            self.assertEqual(sub_faults.f_unique, 4)
            self.assertLessEqual(abs(redundancy_level(sub_corpus, sub_faults) - 3.0), 0.25)

    def test_full_suite_qualifies(self):
        corpus, faults = paired_corpus()
        suites = generate_redundancy_suites(corpus, faults, 6.0, count=1, pool_size=1)
        self.assertEqual(suites, [corpus.ids])

    def test_unreachable_level(self):
        corpus, faults = paired_corpus()
        with self.assertRaises(SuiteGenerationError) as ctx:
            generate_redundancy_suites(corpus, faults, 0.5, count=2, pool_size=5, max_attempts=20)
        self.assertIsNotNone(ctx.exception.closest_rl)
        self.assertGreaterEqual(ctx.exception.closest_rl, 1.0)

    def test_select_diverse(self):
        pool = [frozenset({'a', 'b'}), frozenset({'a', 'b', 'c'}), frozenset({'x', 'y'})]
        chosen = select_diverse(pool, 2, np.random.default_rng(0), population_size=6, max_generations=20)
        self.assertEqual(len(chosen), 2)
        self.assertIn(2, chosen)
        self.assertEqual(jaccard(pool[chosen[0]], pool[chosen[1]]), 0.0)


class OracleCommandTests(SimpleTestCase):
    """Test the oracle, synth and redundancy-suites commands"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def test_synth_then_oracle(self):
        call_command(
            'synth', n_req=4, n_cases=24, n_faults=10, target_rl=4.0, seed=5,
            out=str(self.dir / 'data'), stdout=StringIO(),
        )
        corpus = parse_corpus(self.dir / 'data' / 'corpus.jsonl')
        faults = parse_faults(self.dir / 'data' / 'faults.jsonl')
        self.assertEqual(corpus.m, 24)
        call_command(
            'oracle', corpus=str(self.dir / 'data' / 'corpus.jsonl'), faults=str(self.dir / 'data' / 'faults.jsonl'),
            budget=0.5, out=str(self.dir / 'oracle.json'), stdout=StringIO(),
        )
        payload = orjson.loads((self.dir / 'oracle.json').read_bytes())
        self.assertEqual(payload['technique'], 'oracle')
        self.assertEqual(payload['selected_count'], 12)
        self.assertEqual(payload['total_faults'], faults.f_unique)

    def test_redundancy_suites_written(self):
        corpus, faults = paired_corpus()
        write_corpus(corpus, self.dir / 'corpus.jsonl')
        write_faults(faults, self.dir / 'faults.jsonl', corpus)
        call_command(
            'redundancy_suites', corpus=str(self.dir / 'corpus.jsonl'), faults=str(self.dir / 'faults.jsonl'),
            rl=3.0, count=2, pool_size=6, out=str(self.dir / 'suites'), stdout=StringIO(),
        )
        written = sorted(p.name for p in (self.dir / 'suites').iterdir())
        self.assertEqual(written, [
            'suite_01.corpus.jsonl', 'suite_01.faults.jsonl', 'suite_02.corpus.jsonl', 'suite_02.faults.jsonl',
        ])
