"""
Tests for evaluation metrics, experiment configuration and the harness
"""
import csv
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import orjson
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from pydantic import ValidationError

from apps.corpus.services import write_corpus, write_faults
from apps.harness.config import ExperimentConfig, compatible
from apps.harness.metrics import coverage, fdr
from apps.harness.reports import ExperimentReports, technique_label
from apps.harness import services
from apps.harness.services import ExperimentError, RunRecord, run_experiment, run_redundancy_study
from apps.minimizer.types import InitStrategy
from apps.similarity.services import Metric
from tests.factories import fault_matrix, paired_corpus, traced_corpus


def read_csv(path):
    with open(path, newline='', encoding='utf-8') as handle:
        return list(csv.DictReader(handle))


class MetricTests(SimpleTestCase):
    """Test FDR and requirement coverage"""

    def test_fdr(self):
        faults = fault_matrix({'T1': ['a', 'b'], 'T2': ['b'], 'T3': ['c']})
        self.assertEqual(fdr(['T1', 'T3'], faults), 1.0)
        self.assertAlmostEqual(fdr(['T2'], faults), 1 / 3)
        self.assertEqual(fdr([], faults), 0.0)

    def test_fdr_without_faults(self):
        self.assertEqual(fdr(['T1'], fault_matrix({})), 0.0)

    def test_coverage(self):
        corpus = traced_corpus([[f'R{i}'] for i in range(54)])
        self.assertEqual(coverage(corpus.ids[:27], corpus), 0.5)
        self.assertEqual(coverage(corpus.ids, corpus), 1.0)


class ExperimentConfigTests(SimpleTestCase):
    """Test grid configuration"""

    def test_compatibility(self):
        self.assertTrue(compatible('tfidf', Metric.COSINE))
        self.assertTrue(compatible('tfidf', Metric.EUCLIDEAN))
        self.assertFalse(compatible('tfidf', Metric.WMD))
        self.assertTrue(compatible('cbow', Metric.WMD))
        self.assertFalse(compatible('skipgram', Metric.COSINE))
        self.assertTrue(compatible('imported', Metric.WMD, imported_kind='word'))
        self.assertFalse(compatible('imported', Metric.WMD, imported_kind='sentence'))

    def test_techniques_skip_incompatible_cells(self):
        config = ExperimentConfig(
            corpus_path='c.jsonl', faults_path='f.jsonl',
            representations=('tfidf', 'cbow'), metrics=(Metric.COSINE, Metric.WMD),
        )
        cells = [(m.value, r, x.value) for m, r, x in config.techniques()]
        self.assertEqual(cells, [('pm2', 'tfidf', 'cosine'), ('pm2', 'cbow', 'wmd')])

    def test_invalid_values(self):
        with self.assertRaises(ValidationError):
            ExperimentConfig(corpus_path='c', faults_path='f', budgets=(0.5, 1.2))
        with self.assertRaises(ValidationError):
            ExperimentConfig(corpus_path='c', faults_path='f', representations=('bert',))
        with self.assertRaises(ValidationError):
            ExperimentConfig(corpus_path='c', faults_path='f', repeats=0)

    def test_seed_list(self):
        config = ExperimentConfig(corpus_path='c', faults_path='f', repeats=3)
        self.assertEqual(config.seed_list, (0, 1, 2))
        self.assertEqual(config.model_copy(update={'seeds': (7, 9)}).seed_list, (7, 9))

    def test_from_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'experiment.env'
            path.write_text(
                'CORPUS=data/corpus.jsonl\nFAULTS=data/faults.jsonl\n'
                'PREPROCESSING=pm1,pm3\nMETRICS=cosine,euclidean\nINIT_STRATEGIES=s1,s3\n'
                'BUDGETS=0.25,0.5\nREPEATS=4\nINCLUDE_ORACLE=False\nGA_POPULATION_SIZE=20\n'
            )
            config = ExperimentConfig.from_file(path, repeats=2)
        self.assertEqual(config.corpus_path, Path('data/corpus.jsonl'))
        self.assertEqual([m.value for m in config.preprocessing], ['pm1', 'pm3'])
        self.assertEqual(config.init_strategies, (InitStrategy.ITERATIVE, InitStrategy.PROPORTIONAL))
        self.assertEqual(config.budgets, (0.25, 0.5))
        self.assertEqual(config.repeats, 2)
        self.assertFalse(config.include_oracle)
        self.assertEqual(config.population_size, 20)


class ReportTests(SimpleTestCase):
    """Test report aggregation"""

    def records(self):
        base = dict(preprocessing='pm2', representation='tfidf', metric='cosine', init='s2', budget=0.5)
        return [
            RunRecord('ga', seed=0, fdr=0.5, coverage=1.0, **base),
            RunRecord('ga', seed=1, fdr=0.7, coverage=1.0, **base),
            RunRecord('ga', seed=2, error='NoValidIndividual: none', **base),
        ]

    def test_summary_means_over_successful_repeats(self):
        [row] = ExperimentReports.summarize(self.records())
        self.assertAlmostEqual(row['mean_fdr'], 0.6)
        self.assertEqual(row['mean_coverage'], 1.0)
        self.assertEqual(row['repeats'], 2)

    def test_labels(self):
        record = self.records()[0]
        self.assertEqual(technique_label(record), 'ga:pm2/tfidf/cosine/s2')
        self.assertEqual(technique_label(RunRecord('oracle', '-', '-', '-', '-', 0.5, 0)), 'oracle')

    def test_missing_values_written_as_na(self):
        with tempfile.TemporaryDirectory() as tmp:
            rows = [{'technique': 'ga', 'mean_fdr': None}]
            path = ExperimentReports.write_csv(Path(tmp) / 'x.csv', rows, ['technique', 'mean_fdr'])
            self.assertEqual(path.read_text(), 'technique,mean_fdr\nga,NA\n')


class RunExperimentTests(SimpleTestCase):
    """Test the experiment grid end to end on a small corpus"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)
        corpus = traced_corpus([[f'R{i % 3}'] for i in range(12)])
        faults = fault_matrix({case_id: [f'F{i % 5}', f'F{(i * 7) % 5}'] for i, case_id in enumerate(corpus.ids)})
        write_corpus(corpus, self.dir / 'corpus.jsonl')
        write_faults(faults, self.dir / 'faults.jsonl', corpus)

    def config(self, **values):
        defaults = dict(
            corpus_path=self.dir / 'corpus.jsonl',
            faults_path=self.dir / 'faults.jsonl',
            output_dir=self.dir / 'reports',
            metrics=(Metric.COSINE, Metric.EUCLIDEAN),
            budgets=(0.5,),
            repeats=2,
            population_size=8,
            max_generations=5,
        )
        defaults.update(values)
        return ExperimentConfig(**defaults)

    def test_grid_records_and_files(self):
        outcome = run_experiment(self.config(include_adequate=True))
        techniques = [record.technique for record in outcome.records]
        # 2 cells x 2 seeds x 2 budgets, plus baselines and the oracle
        self.assertEqual(techniques.count('ga'), 8)
        self.assertEqual(techniques.count('greedy'), 4)
        self.assertEqual(techniques.count('random-c'), 4)
        self.assertEqual(techniques.count('random-u'), 4)
        self.assertEqual(techniques.count('oracle'), 2)
        self.assertTrue(all(record.ok for record in outcome.records))
        self.assertEqual(
            sorted(outcome.files),
            ['adequate', 'budget_sweep', 'grid', 'runs_csv', 'runs_json', 'summary'],
        )
        oracle = [r for r in outcome.records if r.technique == 'oracle' and not r.adequate][0]
        for record in outcome.records:
            if record.technique in ('ga', 'greedy', 'random-c') and not record.adequate:
                self.assertLessEqual(record.fdr, oracle.fdr + 1e-12)
                self.assertEqual(record.coverage, 1.0)

    def test_summary_is_mean_of_repeats(self):
        outcome = run_experiment(self.config())
        runs = [r for r in outcome.records if r.technique == 'ga' and r.metric == 'cosine']
        row = next(
            r for r in read_csv(self.dir / 'reports' / 'summary.csv')
            if r['technique'] == 'ga' and r['metric'] == 'cosine'
        )
        self.assertAlmostEqual(float(row['mean_fdr']), sum(r.fdr for r in runs) / 2, places=5)
        self.assertEqual(row['repeats'], '2')

    def test_reruns_are_identical(self):
        run_experiment(self.config())
        first = {name: (self.dir / 'reports' / name).read_bytes() for name in ('runs.csv', 'runs.json', 'summary.csv')}
        run_experiment(self.config())
        for name, content in first.items():
            self.assertEqual((self.dir / 'reports' / name).read_bytes(), content, name)
        self.assertNotIn(b'wall_time', first['runs.json'])

    def test_failed_cell_is_recorded(self):
        outcome = run_experiment(self.config(
            representations=('tfidf', 'imported'), metrics=(Metric.COSINE,), include_oracle=False,
        ))
        failed = [r for r in outcome.records if not r.ok]
        self.assertTrue(failed)
        self.assertTrue(all(r.representation == 'imported' for r in failed))
        self.assertTrue(any(r.ok and r.technique == 'ga' for r in outcome.records))
        rows = read_csv(self.dir / 'reports' / 'runs.csv')
        self.assertIn('ExperimentError', next(r['error'] for r in rows if r['representation'] == 'imported'))

    def test_unexpected_error_is_recorded(self):
        """Test a crash outside the engine's error types fails one run, not the grid"""
        real_minimize = services.minimize

        def crash_on_second_seed(corpus, sim, config):
            if config.seed == 1:
                raise ValueError('similarity values are not finite')
            return real_minimize(corpus, sim, config)

        with mock.patch('apps.harness.services.minimize', side_effect=crash_on_second_seed):
            outcome = run_experiment(self.config(metrics=(Metric.COSINE,), include_oracle=False))

        ga = [r for r in outcome.records if r.technique == 'ga']
        self.assertEqual([r.ok for r in ga], [True, False])
        self.assertEqual(ga[1].error, 'ValueError: similarity values are not finite')
        self.assertTrue(all(r.ok for r in outcome.records if r.technique != 'ga'))
        rows = read_csv(self.dir / 'reports' / 'runs.csv')
        self.assertEqual(
            [r['error'] for r in rows if r['technique'] == 'ga'],
            ['NA', 'ValueError: similarity values are not finite'],
        )

    def test_crashing_baseline_keeps_reports(self):
        with mock.patch('apps.harness.services.greedy_diversity', side_effect=FloatingPointError('overflow')):
            outcome = run_experiment(self.config(metrics=(Metric.COSINE,), include_oracle=False))
        greedy = [r for r in outcome.records if r.technique == 'greedy']
        self.assertEqual([r.error for r in greedy], ['FloatingPointError: overflow'])
        self.assertTrue((self.dir / 'reports' / 'summary.csv').exists())

    def test_invalid_corpus(self):
        bad = traced_corpus([['R1'], []])
        write_corpus(bad, self.dir / 'bad.jsonl')
        with self.assertRaises(ExperimentError):
            run_experiment(self.config(corpus_path=self.dir / 'bad.jsonl'))

    def test_redundancy_study(self):
        corpus, faults = paired_corpus()
        write_corpus(corpus, self.dir / 'paired.jsonl')
        write_faults(faults, self.dir / 'paired_faults.jsonl', corpus)
        config = self.config(
            corpus_path=self.dir / 'paired.jsonl', faults_path=self.dir / 'paired_faults.jsonl',
            metrics=(Metric.COSINE,), repeats=1, include_oracle=False,
        )
        outcome = run_redundancy_study(config, levels=(3.0, 0.5), count=2, pool_size=4)
        rows = read_csv(outcome.files['redundancy'])
        self.assertEqual({row['rl'] for row in rows}, {'3.0', '0.5'})
        unreachable = [row for row in rows if row['rl'] == '0.5']
        self.assertEqual(unreachable[0]['runs'], '0')
        suites = {r.suite for r in outcome.records if r.rl == 3.0}
        self.assertEqual(suites, {1, 2})


class EvalCommandTests(SimpleTestCase):
    """Test the eval command"""

    def test_config_file_and_seed(self):
        with tempfile.TemporaryDirectory() as tmp:
            tmp = Path(tmp)
            corpus = traced_corpus([[f'R{i % 2}'] for i in range(8)])
            write_corpus(corpus, tmp / 'corpus.jsonl')
            write_faults(fault_matrix({c: [f'F{i % 3}'] for i, c in enumerate(corpus.ids)}), tmp / 'faults.jsonl', corpus)
            (tmp / 'grid.env').write_text(
                f'CORPUS={tmp / "corpus.jsonl"}\nFAULTS={tmp / "faults.jsonl"}\n'
                'BUDGETS=0.5\nREPEATS=2\nGA_POPULATION_SIZE=6\nGA_MAX_GENERATIONS=3\n'
            )
            call_command(
                'eval', config=str(tmp / 'grid.env'), out=str(tmp / 'reports'), seed=10, stdout=StringIO(),
            )
            payload = orjson.loads((tmp / 'reports' / 'runs.json').read_bytes())
            seeds = sorted({row['seed'] for row in payload if row['technique'] == 'ga'})
            self.assertEqual(seeds, [10, 11])

    def test_missing_corpus_is_usage_error(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('eval', stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)
