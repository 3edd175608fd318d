"""
Tests for corpus parsing, serialization, validation and redundancy
"""
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from apps.corpus.services import (
    DuplicateId,
    EmptySetsError,
    MalformedRecord,
    RedundancyUndefined,
    UnknownRequirement,
    jaccard,
    parse_corpus_text,
    parse_faults_text,
    redundancy_level,
    serialize_corpus,
    serialize_faults,
    validate_corpus,
    write_corpus,
    write_faults,
)
from tests.factories import CorpusFactory, fault_matrix, traced_corpus

CORPUS_TEXT = '\n'.join([
    '{"requirements": ["R1", "R2"]}',
    '{"id": "TC1", "requirement_ids": ["R1"], "steps": ["Set A = 1", "Check B == 1"]}',
    '',
    '{"id": "TC2", "requirement_ids": ["R2"], "steps": ["Set C = 0"]}',
    '{"id": "TC3", "requirement_ids": ["R1", "R2"], "steps": ["Read D"]}',
])


class CorpusParsingTests(SimpleTestCase):
    """Test the corpus and fault interchange formats"""

    def test_parse_keeps_file_order(self):
        """Test case positions follow file order"""
        corpus = parse_corpus_text(CORPUS_TEXT)
        self.assertEqual(corpus.requirements, ('R1', 'R2'))
        self.assertEqual(corpus.ids, ('TC1', 'TC2', 'TC3'))
        self.assertEqual(corpus.case('TC1').raw_text, 'Set A = 1\nCheck B == 1')
        self.assertEqual(corpus.cases_by_requirement, ((0, 2), (1, 2)))

    def test_coverage_matrix(self):
        """Test the case x requirement incidence matrix"""
        corpus = parse_corpus_text(CORPUS_TEXT)
        expected = np.array([[True, False], [False, True], [True, True]])
        np.testing.assert_array_equal(corpus.coverage_matrix, expected)
        self.assertTrue(corpus.covers_all(np.array([False, False, True])))
        self.assertFalse(corpus.covers_all(np.array([True, False, False])))

    def test_invalid_json_reports_line(self):
        """Test malformed JSON names its line"""
        text = '{"requirements": ["R1"]}\n{"id": "TC1", '
        with self.assertRaises(MalformedRecord) as ctx:
            parse_corpus_text(text)
        self.assertEqual(ctx.exception.line_no, 2)

    def test_missing_steps_is_malformed(self):
        """Test a record without steps is rejected"""
        text = '{"requirements": ["R1"]}\n{"id": "TC1", "requirement_ids": ["R1"], "steps": []}'
        with self.assertRaises(MalformedRecord):
            parse_corpus_text(text)

    def test_duplicate_id(self):
        """Test a repeated test case id"""
        text = CORPUS_TEXT + '\n{"id": "TC2", "requirement_ids": ["R2"], "steps": ["x"]}'
        with self.assertRaises(DuplicateId) as ctx:
            parse_corpus_text(text)
        self.assertEqual(ctx.exception.case_id, 'TC2')

    def test_unknown_requirement(self):
        """Test tracing to an undeclared requirement"""
        text = '{"requirements": ["R1"]}\n{"id": "TC1", "requirement_ids": ["R9"], "steps": ["x"]}'
        with self.assertRaises(UnknownRequirement) as ctx:
            parse_corpus_text(text)
        self.assertEqual(ctx.exception.requirement_id, 'R9')

    def test_corpus_round_trip(self):
        """Test serialize then parse returns the same corpus"""
        corpus = parse_corpus_text(CORPUS_TEXT)
        again = parse_corpus_text(serialize_corpus(corpus))
        self.assertEqual(again, corpus)

    def test_fault_round_trip(self):
        """Test fault files keep fault order and corpus order"""
        corpus = parse_corpus_text(CORPUS_TEXT)
        faults = parse_faults_text(
            '{"test_case_id": "TC2", "fault_ids": ["F2"]}\n'
            '{"test_case_id": "TC1", "fault_ids": ["F1", "F2"]}\n'
        )
        self.assertEqual(faults.fault_ids, ('F2', 'F1'))
        text = serialize_faults(faults, corpus)
        self.assertTrue(text.startswith('{"test_case_id":"TC1"'))
        self.assertEqual(parse_faults_text(text).detects, faults.detects)

    def test_duplicate_fault_record(self):
        """Test a test case listed twice in the fault file"""
        with self.assertRaises(DuplicateId):
            parse_faults_text(
                '{"test_case_id": "TC1", "fault_ids": ["F1"]}\n'
                '{"test_case_id": "TC1", "fault_ids": ["F2"]}\n'
            )


class RedundancyTests(SimpleTestCase):
    """Test redundancy level and Jaccard similarity"""

    def test_worked_example(self):
        """Test eleven detections over four unique faults gives 2.75"""
        corpus = traced_corpus([['R1']] * 5)
        faults = fault_matrix({
            'T0': ['F1', 'F2', 'F3'],
            'T1': ['F1', 'F2', 'F3', 'F4'],
            'T2': ['F1', 'F2'],
            'T3': ['F2'],
            'T4': ['F2'],
        })
        self.assertEqual(faults.f_unique, 4)
        self.assertAlmostEqual(redundancy_level(corpus, faults), 2.75)

    def test_no_redundancy(self):
        """Test one distinct fault per test case gives RL 1"""
        corpus = traced_corpus([['R1'], ['R1'], ['R2']])
        faults = fault_matrix({'T0': ['F1'], 'T1': ['F2'], 'T2': ['F3']})
        self.assertEqual(redundancy_level(corpus, faults), 1.0)

    def test_subset_uses_own_union(self):
        """Test RL over a subset divides by the subset's fault union"""
        corpus = traced_corpus([['R1'], ['R1'], ['R2']])
        faults = fault_matrix({'T0': ['F1', 'F2'], 'T1': ['F1'], 'T2': ['F3']})
        self.assertEqual(redundancy_level(corpus, faults, {'T0', 'T1'}), 1.5)

    def test_empty_union_is_undefined(self):
        """Test a selection detecting nothing raises"""
        corpus = traced_corpus([['R1'], ['R1']])
        faults = fault_matrix({'T0': ['F1']})
        with self.assertRaises(RedundancyUndefined):
            redundancy_level(corpus, faults, {'T1'})

    def test_jaccard(self):
        """Test Jaccard similarity"""
        self.assertEqual(jaccard({'a', 'b'}, {'b', 'c', 'a'}), 2 / 3)
        self.assertEqual(jaccard({'a'}, {'a'}), 1.0)
        self.assertEqual(jaccard({'a', 'b'}, {'b', 'c'}), jaccard({'b', 'c'}, {'a', 'b'}))
        self.assertEqual(jaccard({'a', 'b'}, {'c'}), 0.0)
        with self.assertRaises(EmptySetsError):
            jaccard(set(), set())


class ValidationTests(SimpleTestCase):
    """Test corpus validation findings"""

    def test_clean_corpus(self):
        """Test a fully covered corpus has no errors"""
        corpus = CorpusFactory()
        report = validate_corpus(corpus)
        self.assertTrue(report.ok)
        self.assertEqual(report.stats['m'], 4)
        self.assertEqual(report.stats['n_req'], 2)

    def test_uncovered_requirement(self):
        """Test a declared requirement without test cases"""
        corpus = parse_corpus_text(
            '{"requirements": ["R1", "R2"]}\n{"id": "TC1", "requirement_ids": ["R1"], "steps": ["x"]}'
        )
        report = validate_corpus(corpus)
        self.assertFalse(report.ok)
        self.assertEqual([f.code for f in report.errors], ['UncoveredRequirement'])

    def test_empty_coverage_rejected(self):
        """Test a test case tracing to no requirement"""
        corpus = parse_corpus_text(
            '{"requirements": ["R1"]}\n'
            '{"id": "TC1", "requirement_ids": ["R1"], "steps": ["x"]}\n'
            '{"id": "TC2", "requirement_ids": [], "steps": ["y"]}'
        )
        self.assertIn('EmptyCoverage', [f.code for f in validate_corpus(corpus).errors])

    def test_dangling_fault_reference(self):
        """Test a fault record for an unknown test case"""
        corpus = traced_corpus([['R1']])
        faults = fault_matrix({'T0': ['F1'], 'T9': ['F2']})
        codes = [f.code for f in validate_corpus(corpus, faults).errors]
        self.assertEqual(codes, ['DanglingFaultRef'])

    def test_multi_requirement_warning_and_stats(self):
        """Test multi-requirement cases warn and stats include RL"""
        corpus = parse_corpus_text(CORPUS_TEXT)
        faults = fault_matrix({'TC1': ['F1'], 'TC3': ['F1', 'F2']})
        report = validate_corpus(corpus, faults)
        self.assertTrue(report.ok)
        self.assertEqual([f.code for f in report.warnings], ['MultiRequirementCase'])
        self.assertEqual(report.stats['F_unique'], 2)
        self.assertEqual(report.stats['RL'], 1.5)


class CorpusCommandTests(SimpleTestCase):
    """Test the ingest and validate commands"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def test_validate_exit_code_on_errors(self):
        """Test validation errors exit with status 2"""
        path = self.dir / 'bad.jsonl'
        path.write_text('{"requirements": ["R1", "R2"]}\n{"id": "TC1", "requirement_ids": ["R1"], "steps": ["x"]}\n')
        with self.assertRaises(CommandError) as ctx:
            call_command('validate', corpus=str(path), stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)

    def test_malformed_file_exit_code(self):
        """Test parse failures map to status 2"""
        path = self.dir / 'broken.jsonl'
        path.write_text('not json\n')
        with self.assertRaises(CommandError) as ctx:
            call_command('ingest', corpus=str(path))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_ingest_writes_canonical_files(self):
        """Test ingest re-serializes corpus and faults"""
        corpus = parse_corpus_text(CORPUS_TEXT)
        write_corpus(corpus, self.dir / 'in.jsonl')
        write_faults(fault_matrix({'TC1': ['F1']}), self.dir / 'faults.jsonl', corpus)
        call_command(
            'ingest', corpus=str(self.dir / 'in.jsonl'), faults=str(self.dir / 'faults.jsonl'),
            out=str(self.dir / 'canon'), stdout=StringIO(),
        )
        self.assertEqual(
            (self.dir / 'canon' / 'corpus.jsonl').read_text(), serialize_corpus(corpus)
        )
        self.assertTrue((self.dir / 'canon' / 'faults.jsonl').exists())
