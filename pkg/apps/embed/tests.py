"""
Tests for TF-IDF, word-vector training and vector file interchange
"""
import math
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from apps.corpus.services import write_corpus
from apps.embed.errors import (
    CorpusTooSmall,
    DimensionMismatch,
    EmptyVocabulary,
    InsufficientCoverage,
    MissingVector,
    VectorFileError,
    VocabularyTooSmall,
)
from apps.embed.tfidf import tfidf_embed
from apps.embed.types import VectorSource, WordVectors
from apps.embed.vectors import (
    export_sentence_vectors,
    export_word_vectors,
    import_sentence_vectors,
    import_word_vectors,
    vocabulary_coverage,
)
from apps.embed.word2vec import (
    Architecture,
    CbowConfig,
    build_vocabulary,
    draw_negatives,
    make_cum_table,
    train_cbow,
)
from apps.preprocess.services import TokenizedDoc
from tests.factories import traced_corpus


def docs_of(*texts):
    return [TokenizedDoc(f'T{i}', tuple(text.split()), text) for i, text in enumerate(texts)]


GROUPED_TEXTS = [
    'brake pedal light pressed brake light',
    'pedal brake light on pedal pressed',
    'door lock window open door window',
    'lock door window closed lock open',
] * 6


def cosine(u, v):
    return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))


class TfidfTests(SimpleTestCase):
    """Test native TF-IDF sentence vectors"""

    def test_idf_weights(self):
        vectors = tfidf_embed(docs_of('a b', 'a c', 'a d'))
        self.assertEqual(vectors.vocabulary, ('a', 'b', 'c', 'd'))
        self.assertEqual(vectors.source, VectorSource.TFIDF)
        row = vectors.vector('T0')
        # idf(a) = 1, idf(b) = 1 + ln 2 before normalization
        self.assertAlmostEqual(row[1] / row[0], 1.0 + math.log(2.0))
        self.assertEqual(row[2], 0.0)

    def test_rows_are_unit_length(self):
        vectors = tfidf_embed(docs_of('a b b', 'c d', 'a c e e e'))
        np.testing.assert_allclose(np.linalg.norm(vectors.matrix, axis=1), 1.0)

    def test_rows_follow_doc_order(self):
        vectors = tfidf_embed(docs_of('x y', 'y z'))
        self.assertEqual(vectors.keys, ('T0', 'T1'))
        np.testing.assert_array_equal(vectors.rows(['T1', 'T0']), vectors.matrix[[1, 0]])

    def test_single_document(self):
        with self.assertRaises(CorpusTooSmall):
            tfidf_embed(docs_of('a b'))

    def test_empty_document(self):
        docs = docs_of('a b', 'c')
        docs.append(TokenizedDoc('T2', (), ''))
        with self.assertRaises(EmptyVocabulary):
            tfidf_embed(docs)


class Word2VecTests(SimpleTestCase):
    """Test CBOW and Skip-Gram training"""

    config = CbowConfig(window=2, dim=8, epochs=20, seed=3)

    def test_vocabulary_order(self):
        keys, counts = build_vocabulary([['b', 'a', 'a'], ['c', 'b']])
        self.assertEqual(keys, ['b', 'a', 'c'])
        self.assertEqual(counts.tolist(), [2, 2, 1])

    def test_negatives_exclude_target(self):
        rng = np.random.default_rng(0)
        table = make_cum_table([10, 1, 1, 1])
        negatives = draw_negatives(rng, table, 0, 50)
        self.assertEqual(len(negatives), 50)
        self.assertNotIn(0, negatives.tolist())
        self.assertTrue(set(negatives.tolist()) <= {1, 2, 3})

    def test_shape_and_determinism(self):
        docs = docs_of(*GROUPED_TEXTS[:4])
        first = train_cbow(docs, self.config)
        second = train_cbow(docs, self.config)
        self.assertEqual(first.dim, 8)
        self.assertEqual(first.vocab_size, 10)
        self.assertEqual(len(first.training_loss), 20)
        np.testing.assert_array_equal(first.matrix, second.matrix)

    def test_seed_changes_vectors(self):
        docs = docs_of(*GROUPED_TEXTS[:4])
        first = train_cbow(docs, self.config)
        other = train_cbow(docs, self.config.model_copy(update={'seed': 4}))
        self.assertFalse(np.array_equal(first.matrix, other.matrix))

    def test_loss_decreases(self):
        for architecture in Architecture:
            config = self.config.model_copy(update={'architecture': architecture})
            vectors = train_cbow(docs_of(*GROUPED_TEXTS), config)
            self.assertLess(vectors.training_loss[-1], vectors.training_loss[0])

    def test_corpus_too_small(self):
        with self.assertRaises(CorpusTooSmall):
            train_cbow(docs_of('a b c'), CbowConfig(window=10, dim=4))

    def test_vocabulary_too_small(self):
        with self.assertRaises(VocabularyTooSmall):
            train_cbow(docs_of('a b c a b c a b c'), CbowConfig(window=2, dim=4))

    @pytest.mark.slow
    def test_cooccurring_words_are_closer(self):
        """Test words sharing contexts end up more similar than unrelated words"""
        config = CbowConfig(window=3, dim=16, epochs=60, seed=1)
        vectors = train_cbow(docs_of(*GROUPED_TEXTS), config)
        related = cosine(vectors.vector('brake'), vectors.vector('pedal'))
        unrelated = cosine(vectors.vector('brake'), vectors.vector('window'))
        self.assertGreater(related, unrelated)


class VectorFileTests(SimpleTestCase):
    """Test the word2vec text interchange format"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def test_word_vectors_round_trip_exactly(self):
        rng = np.random.default_rng(7)
        vectors = WordVectors(keys=('brake', 'light'), matrix=rng.normal(size=(2, 5)))
        path = export_word_vectors(vectors, self.dir / 'words.txt')
        loaded = import_word_vectors(path)
        self.assertEqual(loaded.keys, vectors.keys)
        np.testing.assert_array_equal(loaded.matrix, vectors.matrix)

    def test_sentence_vectors_round_trip(self):
        vectors = tfidf_embed(docs_of('a b', 'b c', 'c d'))
        path = export_sentence_vectors(vectors, self.dir / 'sentences.txt')
        loaded = import_sentence_vectors(path, traced_corpus([['R1']] * 3))
        self.assertEqual(loaded.source, VectorSource.IMPORTED)
        np.testing.assert_array_equal(loaded.matrix, vectors.matrix)

    def test_dimension_mismatch(self):
        path = self.dir / 'bad.txt'
        path.write_text('2 3\nA 1 2 3\nB 1 2\n')
        with self.assertRaises(DimensionMismatch) as ctx:
            import_word_vectors(path)
        self.assertEqual((ctx.exception.key, ctx.exception.expected, ctx.exception.found), ('B', 3, 2))

    def test_count_mismatch_and_duplicates(self):
        path = self.dir / 'bad.txt'
        path.write_text('3 1\nA 1\nB 2\n')
        with self.assertRaises(VectorFileError):
            import_word_vectors(path)
        path.write_text('2 1\nA 1\nA 2\n')
        with self.assertRaises(VectorFileError):
            import_word_vectors(path)

    def test_missing_sentence_vector(self):
        corpus = traced_corpus([['R1']] * 8, prefix='TC')
        path = self.dir / 'sentences.txt'
        path.write_text('7 2\n' + ''.join(f'TC{i} 0.5 0.5\n' for i in range(7)))
        with self.assertRaises(MissingVector) as ctx:
            import_sentence_vectors(path, corpus)
        self.assertEqual(str(ctx.exception), 'MissingVector("TC7")')

    def test_word_coverage(self):
        path = self.dir / 'words.txt'
        path.write_text('1 2\na 1.0 0.0\n')
        docs = docs_of('a b', 'a a')
        coverage = vocabulary_coverage(import_word_vectors(path), docs)
        self.assertEqual(coverage.ratio, 0.75)
        self.assertEqual(coverage.missing, ('b',))
        with self.assertRaises(InsufficientCoverage):
            import_word_vectors(path, docs)
        self.assertEqual(import_word_vectors(path, docs, min_coverage=0.5).vocab_size, 1)


class EmbedCommandTests(SimpleTestCase):
    """Test the embed command"""

    def test_tfidf_export(self):
        with tempfile.TemporaryDirectory() as tmp:
            corpus = traced_corpus([['R1'], ['R1'], ['R2']])
            write_corpus(corpus, Path(tmp) / 'corpus.jsonl')
            out = Path(tmp) / 'vectors.txt'
            call_command('embed', corpus=str(Path(tmp) / 'corpus.jsonl'), out=str(out), stdout=StringIO())
            self.assertEqual(import_sentence_vectors(out, corpus).keys, corpus.ids)

    def test_out_is_required(self):
        with tempfile.TemporaryDirectory() as tmp:
            write_corpus(traced_corpus([['R1'], ['R1']]), Path(tmp) / 'corpus.jsonl')
            with self.assertRaises(CommandError):
                call_command('embed', corpus=str(Path(tmp) / 'corpus.jsonl'))
