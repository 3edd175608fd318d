"""
Tests for similarity kernels, the transportation simplex and matrix files
"""
import itertools
import math
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.test import SimpleTestCase

from apps.corpus.services import write_corpus
from apps.embed.tfidf import tfidf_embed
from apps.embed.types import SentenceVectors, VectorSource, WordVectors
from apps.preprocess.services import PreprocessMethod, TokenizedDoc, preprocess_corpus
from apps.similarity.services import (
    EmptyDistribution,
    IncompatibleMetric,
    MatrixFormatError,
    Metric,
    ScoreKind,
    ZeroVector,
    bow_distribution,
    build_similarity_matrix,
    cosine,
    euclidean,
    import_matrix,
    normalize_scores,
    parse_matrix_text,
    serialize_matrix,
    wmd,
)
from apps.similarity.transport import (
    TransportError,
    certify_transport,
    northwest_corner,
    transport_simplex,
)
from tests.factories import traced_corpus

WORDS = WordVectors(
    keys=('brake', 'pedal', 'door', 'lock', 'light'),
    matrix=np.array([
        [1.0, 0.0, 0.0],
        [0.9, 0.1, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.8, 0.3],
        [0.5, 0.5, 0.5],
    ]),
)


class KernelTests(SimpleTestCase):
    """Test cosine and Euclidean kernels"""

    def test_cosine(self):
        self.assertAlmostEqual(cosine([1, 2, 3], [4, 5, 6]), 32 / (math.sqrt(14) * math.sqrt(77)))
        self.assertAlmostEqual(cosine([1, 2, 3], [4, 5, 6]), 0.974631846, places=8)

    def test_cosine_zero_vector(self):
        with self.assertRaises(ZeroVector):
            cosine([0, 0], [1, 2])

    def test_euclidean(self):
        self.assertEqual(euclidean([0, 0], [3, 4]), 5.0)


class TransportTests(SimpleTestCase):
    """Test the exact transportation simplex"""

    def test_northwest_corner_is_spanning(self):
        plan, basis = northwest_corner([0.5, 0.5], [0.25, 0.25, 0.5])
        self.assertEqual(len(basis), 2 + 3 - 1)
        np.testing.assert_allclose(plan.sum(axis=1), [0.5, 0.5])
        np.testing.assert_allclose(plan.sum(axis=0), [0.25, 0.25, 0.5])

    def test_degenerate_northwest_corner(self):
        """Test equal partial sums still give a tree basis"""
        plan, basis = northwest_corner([0.5, 0.5], [0.5, 0.5])
        self.assertEqual(len(basis), 3)

    def test_matches_assignment_optimum(self):
        """Test uniform 3x3 problems against every permutation"""
        rng = np.random.default_rng(11)
        weights = np.full(3, 1 / 3)
        for _ in range(20):
            cost = rng.random((3, 3))
            solution = transport_simplex(weights, weights, cost)
            best = min(cost[range(3), list(p)].sum() / 3 for p in itertools.permutations(range(3)))
            self.assertAlmostEqual(solution.cost, best, places=10)

    def test_matches_basic_solution_enumeration(self):
        """Test non-uniform 3x3 problems against every basic feasible plan"""
        rng = np.random.default_rng(23)
        constraints = np.zeros((6, 9))
        for i in range(3):
            constraints[i, 3 * i:3 * i + 3] = 1
            constraints[3 + i, i::3] = 1
        for _ in range(20):
            supply = rng.random(3) + 0.05
            supply /= supply.sum()
            demand = rng.random(3) + 0.05
            demand /= demand.sum()
            cost = rng.random((3, 3))
            target = np.concatenate([supply, demand])
            best = math.inf
            for basis in itertools.combinations(range(9), 5):
                columns = constraints[:, basis]
                if np.linalg.matrix_rank(columns) < 5:
                    continue
                values = np.linalg.lstsq(columns, target, rcond=None)[0]
                if not np.allclose(columns @ values, target, atol=1e-12) or (values < -1e-12).any():
                    continue
                best = min(best, float(cost.ravel()[list(basis)] @ values))
            solution = transport_simplex(supply, demand, cost)
            self.assertAlmostEqual(solution.cost, best, delta=1e-9)

    def test_certificate(self):
        rng = np.random.default_rng(5)
        for n, m in [(2, 5), (4, 4), (6, 3)]:
            supply = rng.random(n)
            supply /= supply.sum()
            demand = rng.random(m)
            demand /= demand.sum()
            cost = rng.random((n, m))
            solution = transport_simplex(supply, demand, cost)
            violation = certify_transport(cost, solution.plan, solution.u, solution.v, supply, demand)
            self.assertLess(violation, 1e-9)

    def test_unbalanced(self):
        with self.assertRaises(TransportError):
            transport_simplex([0.5, 0.5], [0.7, 0.7], np.ones((2, 2)))

    def test_shape_mismatch(self):
        with self.assertRaises(TransportError):
            transport_simplex([1.0], [1.0], np.ones((2, 2)))


class WmdTests(SimpleTestCase):
    """Test Word Mover's Distance"""

    def test_identical_documents(self):
        a = bow_distribution(['brake', 'pedal', 'brake'], WORDS)
        self.assertAlmostEqual(wmd(a, a, WORDS), 0.0, places=12)

    def test_single_words(self):
        a = bow_distribution(['brake'], WORDS)
        b = bow_distribution(['door'], WORDS)
        self.assertAlmostEqual(wmd(a, b, WORDS), math.sqrt(2.0))

    def test_symmetry_and_triangle_inequality(self):
        docs = [['brake', 'pedal'], ['door', 'lock', 'lock'], ['light', 'brake', 'door']]
        dist = [bow_distribution(tokens, WORDS) for tokens in docs]
        for a, b in itertools.permutations(dist, 2):
            self.assertAlmostEqual(wmd(a, b, WORDS), wmd(b, a, WORDS), places=12)
        for a, b, c in itertools.permutations(dist, 3):
            self.assertLessEqual(wmd(a, c, WORDS), wmd(a, b, WORDS) + wmd(b, c, WORDS) + 1e-12)

    def test_out_of_vocabulary_tokens_dropped(self):
        distribution = bow_distribution(['brake', 'unknown', 'brake', 'door'], WORDS)
        self.assertEqual(distribution.tokens, (0, 2))
        np.testing.assert_allclose(distribution.weights, [2 / 3, 1 / 3])

    def test_empty_distribution(self):
        with self.assertRaises(EmptyDistribution):
            bow_distribution(['unknown'], WORDS)


class NormalizeTests(SimpleTestCase):
    """Test min-max normalization of raw scores"""

    raw = np.array([
        [0.0, 2.0, 5.0],
        [2.0, 0.0, 3.0],
        [5.0, 3.0, 0.0],
    ])

    def test_distance_endpoints(self):
        matrix = normalize_scores(self.raw, ScoreKind.DISTANCE)
        self.assertEqual(matrix.values[0, 1], 1.0)
        self.assertEqual(matrix.values[0, 2], 0.0)
        self.assertAlmostEqual(matrix.values[1, 2], 2 / 3)
        np.testing.assert_array_equal(np.diag(matrix.values), 1.0)

    def test_similarity_endpoints(self):
        matrix = normalize_scores(self.raw, ScoreKind.SIMILARITY)
        self.assertEqual(matrix.values[0, 2], 1.0)
        self.assertEqual(matrix.values[2, 0], 1.0)
        self.assertEqual(matrix.values[0, 1], 0.0)

    def test_affine_invariance(self):
        base = normalize_scores(self.raw, ScoreKind.DISTANCE).values
        shifted = normalize_scores(2.5 * self.raw + 7.0, ScoreKind.DISTANCE).values
        np.testing.assert_allclose(base, shifted)

    def test_constant_scores(self):
        matrix = normalize_scores(np.full((3, 3), 0.4), ScoreKind.SIMILARITY)
        np.testing.assert_array_equal(matrix.values, np.eye(3))

    def test_read_only(self):
        matrix = normalize_scores(self.raw, ScoreKind.DISTANCE)
        with self.assertRaises(ValueError):
            matrix.values[0, 1] = 0.5


class MatrixBuildTests(SimpleTestCase):
    """Test end-to-end matrix construction"""

    corpus = traced_corpus(
        [['R1'], ['R1'], ['R2']],
        texts=['Set brake pedal', 'Set brake light', 'Check door lock'],
    )

    def test_tfidf_cosine(self):
        docs = preprocess_corpus(self.corpus, PreprocessMethod.PM2)
        matrix = build_similarity_matrix(self.corpus, tfidf_embed(docs), Metric.COSINE, provenance='tfidf/pm2')
        values = matrix.values
        np.testing.assert_array_equal(values, values.T)
        np.testing.assert_array_equal(np.diag(values), 1.0)
        self.assertTrue(((values >= 0) & (values <= 1)).all())
        # the two brake cases are the closest pair
        self.assertEqual(values[1, 0], 1.0)
        self.assertEqual(matrix.provenance, 'tfidf/pm2')

    def test_euclidean(self):
        vectors = SentenceVectors(
            keys=self.corpus.ids, matrix=np.array([[0.0, 0.0], [1.0, 0.0], [4.0, 0.0]]),
            source=VectorSource.IMPORTED,
        )
        values = build_similarity_matrix(self.corpus, vectors, Metric.EUCLIDEAN).values
        self.assertEqual(values[0, 1], 1.0)
        self.assertEqual(values[0, 2], 0.0)
        self.assertAlmostEqual(values[1, 2], 1 / 3)

    def test_wmd(self):
        docs = [
            TokenizedDoc('T0', ('brake', 'pedal'), ''),
            TokenizedDoc('T1', ('brake', 'light'), ''),
            TokenizedDoc('T2', ('door', 'lock'), ''),
        ]
        values = build_similarity_matrix(self.corpus, WORDS, Metric.WMD, docs=docs).values
        self.assertGreater(values[0, 1], values[0, 2])
        np.testing.assert_array_equal(values, values.T)

    def test_incompatible_representations(self):
        docs = preprocess_corpus(self.corpus, PreprocessMethod.PM2)
        with self.assertRaises(IncompatibleMetric):
            build_similarity_matrix(self.corpus, WORDS, Metric.COSINE)
        with self.assertRaises(IncompatibleMetric):
            build_similarity_matrix(self.corpus, tfidf_embed(docs), Metric.WMD, docs=docs)


class MatrixFileTests(SimpleTestCase):
    """Test the lower-triangle matrix format"""

    def test_round_trip(self):
        rng = np.random.default_rng(2)
        raw = rng.random((5, 5))
        matrix = normalize_scores(raw + raw.T, ScoreKind.SIMILARITY, Metric.COSINE, 'tfidf/pm1')
        again = parse_matrix_text(serialize_matrix(matrix))
        np.testing.assert_array_equal(again.values, matrix.values)
        self.assertEqual(again.metric, Metric.COSINE)
        self.assertEqual(again.provenance, 'tfidf/pm1')

    def test_header_format(self):
        matrix = normalize_scores(np.zeros((2, 2)), ScoreKind.DISTANCE)
        self.assertEqual(serialize_matrix(matrix), '2 - -\n0.0\n')

    def test_bad_rows(self):
        for text in ['3 cosine x\n0.5\n', '3 cosine x\n0.5\n0.1\n', '2 cosine x\n1.5\n',
                     '2 manhattan x\n0.5\n', '2 cosine\n0.5\n', '2 cosine x\nabc\n', '']:
            with self.assertRaises(MatrixFormatError):
                parse_matrix_text(text)

    def test_sim_command_writes_matrix(self):
        with tempfile.TemporaryDirectory() as tmp:
            write_corpus(self.corpus_for_command(), Path(tmp) / 'corpus.jsonl')
            out = Path(tmp) / 'sim.txt'
            call_command('sim', corpus=str(Path(tmp) / 'corpus.jsonl'), out=str(out), stdout=StringIO())
            matrix = import_matrix(out)
            self.assertEqual(matrix.m, 3)
            self.assertEqual(matrix.provenance, 'tfidf/pm2')

    @staticmethod
    def corpus_for_command():
        return traced_corpus([['R1'], ['R1'], ['R2']], texts=['Set A', 'Set B', 'Check C'])
