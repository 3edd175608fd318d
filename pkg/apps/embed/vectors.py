"""
Word2Vec-style text interchange for word and sentence vectors.

First line ``<count> <dim>``, then one ``<key> <f1> ... <f_dim>`` line per
vector. Floats are written with ``repr`` so they round-trip exactly.
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from django.conf import settings

from .errors import DimensionMismatch, InsufficientCoverage, MissingVector, VectorFileError
from .types import SentenceVectors, VectorSource, WordVectors

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VocabularyCoverage:
    covered_tokens: int
    total_tokens: int
    missing: tuple[str, ...]

    @property
    def ratio(self) -> float:
        return self.covered_tokens / self.total_tokens if self.total_tokens else 1.0


def vocabulary_coverage(word_vectors: WordVectors, docs) -> VocabularyCoverage:
    """Share of token occurrences in ``docs`` that have a vector."""
    covered = total = 0
    missing = set()
    for doc in docs:
        for token in doc.tokens:
            total += 1
            if token in word_vectors:
                covered += 1
            else:
                missing.add(token)
    return VocabularyCoverage(covered, total, tuple(sorted(missing)))


def _format(keys, matrix) -> str:
    lines = [f'{len(keys)} {matrix.shape[1]}']
    for key, row in zip(keys, matrix):
        lines.append(' '.join([key, *(repr(float(x)) for x in row)]))
    return '\n'.join(lines) + '\n'


def _parse(text: str, source: str):
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise VectorFileError(f'{source}: empty vector file')
    header = lines[0].split()
    try:
        count, dim = int(header[0]), int(header[1])
    except (IndexError, ValueError):
        raise VectorFileError(f'{source}: header must be "<count> <dim>"')
    if count != len(lines) - 1:
        raise VectorFileError(f'{source}: header announces {count} vectors, found {len(lines) - 1}')

    keys = []
    matrix = np.empty((count, dim), dtype=np.float64)
    seen = set()
    for row, line in enumerate(lines[1:]):
        parts = line.split()
        key, values = parts[0], parts[1:]
        if len(values) != dim:
            raise DimensionMismatch(key, dim, len(values))
        if key in seen:
            raise VectorFileError(f'{source}: duplicate key "{key}"')
        seen.add(key)
        try:
            matrix[row] = [float(v) for v in values]
        except ValueError:
            raise VectorFileError(f'{source}: non-numeric component for "{key}"')
        keys.append(key)
    return tuple(keys), matrix


def export_word_vectors(word_vectors: WordVectors, path) -> Path:
    path = Path(path)
    path.write_text(_format(word_vectors.keys, word_vectors.matrix), encoding='utf-8')
    logger.info(f'Exported {word_vectors.vocab_size} word vectors to {path}')
    return path


def export_sentence_vectors(sentence_vectors: SentenceVectors, path) -> Path:
    path = Path(path)
    path.write_text(_format(sentence_vectors.keys, sentence_vectors.matrix), encoding='utf-8')
    logger.info(f'Exported {len(sentence_vectors.keys)} sentence vectors to {path}')
    return path


def import_word_vectors(path, docs=None, min_coverage=None) -> WordVectors:
    """
    Load word vectors; when ``docs`` are given, require that at least
    ``min_coverage`` of their token occurrences have a vector.
    """
    keys, matrix = _parse(Path(path).read_text(encoding='utf-8'), str(path))
    word_vectors = WordVectors(keys=keys, matrix=matrix)
    if docs is not None:
        if min_coverage is None:
            min_coverage = getattr(settings, 'WORD_VECTOR_MIN_COVERAGE', 0.95)
        coverage = vocabulary_coverage(word_vectors, docs)
        if coverage.ratio < min_coverage:
            raise InsufficientCoverage(
                f'Word vectors cover {coverage.ratio:.1%} of corpus tokens '
                f'(minimum {min_coverage:.0%}); missing e.g. {list(coverage.missing[:5])}'
            )
        if coverage.missing:
            logger.warning(
                f'{len(coverage.missing)} corpus tokens have no vector and will be dropped'
            )
    return word_vectors


def import_sentence_vectors(path, corpus=None) -> SentenceVectors:
    """Load precomputed sentence vectors; every corpus case must have one."""
    keys, matrix = _parse(Path(path).read_text(encoding='utf-8'), str(path))
    vectors = SentenceVectors(keys=keys, matrix=matrix, source=VectorSource.IMPORTED)
    if corpus is not None:
        for case_id in corpus.ids:
            if case_id not in vectors:
                raise MissingVector(case_id)
    return vectors
