"""
Comprehensive Test Suite for Reqmin
Runs the command-line pipeline end to end: synthesize, validate, build a
similarity matrix, minimize, run baselines and the oracle, evaluate.
The slow class checks the qualitative findings on a full-scale synthetic corpus
"""
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
import orjson
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from apps.baselines.services import random_minimize
from apps.corpus.services import parse_corpus, parse_faults, write_corpus, write_faults
from apps.embed.tfidf import tfidf_embed
from apps.harness.config import ExperimentConfig
from apps.harness.metrics import coverage, fdr
from apps.harness.services import run_redundancy_study
from apps.minimizer.budget import adequate_budget
from apps.minimizer.services import minimize
from apps.minimizer.types import ga_config
from apps.oracle.synth import SynthConfig, synth_corpus
from apps.preprocess.services import PreprocessMethod, preprocess_corpus
from apps.similarity.services import Metric, build_similarity_matrix


def run(command, **options):
    stdout = StringIO()
    call_command(command, stdout=stdout, **options)
    return stdout.getvalue()


class PipelineTests(SimpleTestCase):
    """Test the commands chained the way an experiment uses them"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.TemporaryDirectory()
        cls.dir = Path(cls.tmp.name)
        run('synth', n_req=6, n_cases=48, n_faults=24, target_rl=4.0, seed=11, out=str(cls.dir / 'data'))
        cls.corpus_path = cls.dir / 'data' / 'corpus.jsonl'
        cls.faults_path = cls.dir / 'data' / 'faults.jsonl'
        run('sim', corpus=str(cls.corpus_path), out=str(cls.dir / 'sim.txt'))

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    def minimize(self, name, **options):
        run(
            'minimize', corpus=str(self.corpus_path), sim_matrix=str(self.dir / 'sim.txt'),
            population_size=12, max_generations=10, out=str(self.dir / name), **options,
        )
        return (self.dir / name).read_bytes()

    def test_synthetic_corpus_validates(self):
        output = run('validate', corpus=str(self.corpus_path), faults=str(self.faults_path))
        self.assertIn('Corpus is valid', output)

    def test_minimized_suite_keeps_coverage(self):
        payload = orjson.loads(self.minimize('ga.json', budget=0.25, seed=1))
        corpus = parse_corpus(self.corpus_path)
        faults = parse_faults(self.faults_path)
        self.assertEqual(payload['selected_count'], 12)
        self.assertEqual(coverage(payload['selected_ids'], corpus), 1.0)
        self.assertGreater(fdr(payload['selected_ids'], faults), 0.0)

    def test_seeded_reruns_are_byte_identical(self):
        first = self.minimize('first.json', budget=0.3, seed=4, init='s3')
        second = self.minimize('second.json', budget=0.3, seed=4, init='s3')
        self.assertEqual(first, second)

    def test_oracle_bounds_every_technique(self):
        common = dict(corpus=str(self.corpus_path), budget=0.5)
        run('oracle', faults=str(self.faults_path), out=str(self.dir / 'oracle.json'), time_cap=20.0, **common)
        run('baseline', kind='random-c', seed=2, out=str(self.dir / 'random.json'), **common)
        run('baseline', kind='greedy', sim_matrix=str(self.dir / 'sim.txt'), out=str(self.dir / 'greedy.json'),
            **common)
        self.minimize('bounded.json', budget=0.5, seed=0)

        faults = parse_faults(self.faults_path)
        oracle = orjson.loads((self.dir / 'oracle.json').read_bytes())
        if not oracle['exact']:
            self.skipTest('oracle stopped at its time cap')
        best = oracle['fdr']
        for name in ('random.json', 'greedy.json', 'bounded.json'):
            selected = orjson.loads((self.dir / name).read_bytes())['selected_ids']
            self.assertLessEqual(fdr(selected, faults), best + 1e-12, name)

    def test_infeasible_budget_exit_code(self):
        with self.assertRaises(CommandError) as ctx:
            self.minimize('infeasible.json', budget=0.05)
        self.assertEqual(ctx.exception.returncode, 2)

    def test_missing_file_exit_code(self):
        with self.assertRaises(CommandError) as ctx:
            run('validate', corpus=str(self.dir / 'nope.jsonl'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_incompatible_metric_exit_code(self):
        with self.assertRaises(CommandError) as ctx:
            run('sim', corpus=str(self.corpus_path), metric='wmd', out=str(self.dir / 'wmd.txt'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_eval_writes_reports(self):
        config = self.dir / 'grid.env'
        config.write_text(
            f'CORPUS={self.corpus_path}\nFAULTS={self.faults_path}\n'
            'METRICS=cosine,euclidean\nBUDGETS=0.5\nREPEATS=2\nORACLE_TIME_CAP=5\n'
            'GA_POPULATION_SIZE=10\nGA_MAX_GENERATIONS=5\n'
        )
        run('eval', config=str(config), out=str(self.dir / 'reports'), adequate=True)
        for name in ('runs.csv', 'runs.json', 'summary.csv', 'grid.csv', 'budget_sweep.csv', 'adequate.csv'):
            self.assertTrue((self.dir / 'reports' / name).exists(), name)


@pytest.mark.slow
class CbowPipelineTests(SimpleTestCase):
    """Test word vectors and WMD through the commands"""

    def test_cbow_wmd_matrix(self):
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            run('synth', n_req=3, n_cases=15, n_faults=6, target_rl=3.0, seed=2, out=str(tmp))
            corpus = str(tmp / 'corpus.jsonl')
            run('embed', corpus=corpus, representation='cbow', dim=10, epochs=3, window=3,
                out=str(tmp / 'words.txt'))
            run('sim', corpus=corpus, representation='imported', metric='wmd',
                vectors=str(tmp / 'words.txt'), out=str(tmp / 'wmd.txt'))
            header = (tmp / 'wmd.txt').read_text().splitlines()[0]
            self.assertEqual(header, '15 wmd imported/pm2')


@pytest.mark.slow
class SyntheticCorpusFindingsTests(SimpleTestCase):
    """Test the qualitative findings on a full-scale synthetic corpus"""

    budgets = (0.3, 0.4, 0.5, 0.6)

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.TemporaryDirectory()
        cls.dir = Path(cls.tmp.name)
        cls.corpus, cls.faults = synth_corpus(SynthConfig())
        write_corpus(cls.corpus, cls.dir / 'corpus.jsonl')
        write_faults(cls.faults, cls.dir / 'faults.jsonl', corpus=cls.corpus)
        docs = preprocess_corpus(cls.corpus, PreprocessMethod.PM2)
        cls.sim = build_similarity_matrix(cls.corpus, tfidf_embed(docs), Metric.COSINE, docs=docs)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    def mean_random_fdr(self, budget, constrained, seeds=100):
        ids = self.corpus.ids
        return float(np.mean([
            fdr([ids[i] for i in random_minimize(self.corpus, budget, constrained=constrained, seed=seed).selected],
                self.faults)
            for seed in range(seeds)
        ]))

    def test_ga_beats_random_at_every_budget(self):
        for budget in self.budgets:
            ga = float(np.mean([
                fdr(minimize(self.corpus, self.sim, ga_config(budget=budget, seed=seed)).selected_ids, self.faults)
                for seed in range(10)
            ]))
            constrained = self.mean_random_fdr(budget, constrained=True)
            unconstrained = self.mean_random_fdr(budget, constrained=False)
            self.assertGreater(ga, constrained, f'budget {budget}')
            self.assertGreater(constrained, unconstrained, f'budget {budget}')
            if budget in (0.4, 0.5):
                self.assertGreaterEqual(ga - constrained, 0.05, f'budget {budget}')

    def test_adequate_budget(self):
        budget = adequate_budget(self.corpus)
        for seed in range(3):
            result = minimize(self.corpus, self.sim, ga_config(budget=budget, seed=seed))
            self.assertEqual(coverage(result.selected_ids, self.corpus), 1.0)
        ids = self.corpus.ids
        unconstrained = np.mean([
            coverage([ids[i] for i in random_minimize(self.corpus, budget, constrained=False, seed=seed).selected],
                     self.corpus)
            for seed in range(1000)
        ])
        self.assertLess(unconstrained, 0.6)

    def test_fdr_grows_with_redundancy(self):
        config = ExperimentConfig(
            corpus_path=self.dir / 'corpus.jsonl',
            faults_path=self.dir / 'faults.jsonl',
            output_dir=self.dir / 'redundancy',
            budgets=(0.3, 0.4, 0.5),
            repeats=5,
            include_oracle=False,
        )
        levels = (4.5, 6.5, 8.5, 10.5)
        outcome = run_redundancy_study(config, levels=levels, count=10)
        self.assertTrue(all(record.ok for record in outcome.records))

        table = {(row['technique'], row['budget'], row['rl']): row['mean_fdr'] for row in outcome.summary}
        ga_label = 'ga:pm2/tfidf/cosine/s2'
        for technique in (ga_label, 'random-c', 'random-u'):
            for budget in config.budgets:
                values = [table[technique, budget, level] for level in levels]
                for lower, higher in zip(values, values[1:]):
                    self.assertGreaterEqual(higher, lower - 0.02, f'{technique} at budget {budget}: {values}')

        cells = [(budget, level) for budget in config.budgets for level in levels]
        dominated = sum(
            table[ga_label, budget, level] > max(table['random-c', budget, level], table['random-u', budget, level])
            for budget, level in cells
        )
        self.assertGreaterEqual(dominated, 0.9 * len(cells))
