"""
Similarity kernels and the normalized m x m matrix the minimizer consumes.

Raw pair scores are always computed with the lower-indexed case as the
first operand, then min-max normalized over off-diagonal entries so that
higher means more similar and every metric lands on [0, 1].
"""
import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from apps.common.errors import EngineError, ValidationFailure
from apps.common.logging_config import performance_logger
from apps.embed.errors import MissingVector
from apps.embed.types import SentenceVectors, WordVectors

from .transport import transport_simplex

logger = logging.getLogger(__name__)


class SimilarityError(EngineError):
    """Base exception for similarity errors."""
    pass


class ZeroVector(SimilarityError):
    pass


class IncompatibleMetric(ValidationFailure):
    pass


class EmptyDistribution(SimilarityError):
    pass


class MatrixFormatError(ValidationFailure):
    pass


class Metric(str, Enum):
    COSINE = 'cosine'
    EUCLIDEAN = 'euclidean'
    WMD = 'wmd'


class ScoreKind(str, Enum):
    SIMILARITY = 'similarity'
    DISTANCE = 'distance'


SCORE_KIND = {
    Metric.COSINE: ScoreKind.SIMILARITY,
    Metric.EUCLIDEAN: ScoreKind.DISTANCE,
    Metric.WMD: ScoreKind.DISTANCE,
}


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """Symmetric normalized scores with a unit diagonal."""

    values: np.ndarray
    metric: Optional[Metric] = None
    provenance: str = ''

    @property
    def m(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True, eq=False)
class BowDistribution:
    """Normalized bag of words over ``WordVectors`` row indices."""

    tokens: tuple[int, ...]
    weights: np.ndarray


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    norm_u = np.linalg.norm(u)
    norm_v = np.linalg.norm(v)
    if norm_u == 0 or norm_v == 0:
        raise ZeroVector('Cosine similarity is undefined for a zero vector.')
    return float(np.dot(u, v) / (norm_u * norm_v))


def euclidean(u, v) -> float:
    return float(np.linalg.norm(np.asarray(u, dtype=np.float64) - np.asarray(v, dtype=np.float64)))


def bow_distribution(tokens, word_vectors: WordVectors, label: str = '') -> BowDistribution:
    """nBOW weights over in-vocabulary tokens; out-of-vocabulary tokens are dropped."""
    counts = Counter()
    dropped = []
    for token in tokens:
        if token in word_vectors:
            counts[word_vectors.index[token]] += 1
        else:
            dropped.append(token)
    if dropped:
        logger.warning(f'{label or "document"}: dropped {len(dropped)} out-of-vocabulary token(s)')
    if not counts:
        raise EmptyDistribution(f'{label or "document"} has no in-vocabulary tokens.')
    indices = tuple(counts)
    weights = np.array([counts[i] for i in indices], dtype=np.float64)
    return BowDistribution(tokens=indices, weights=weights / weights.sum())


def wmd(a: BowDistribution, b: BowDistribution, word_vectors: WordVectors) -> float:
    """Exact Word Mover's Distance with Euclidean ground cost."""
    if not a.tokens or not b.tokens:
        raise EmptyDistribution('Word Mover\'s Distance needs two non-empty distributions.')
    left = word_vectors.matrix[list(a.tokens)]
    right = word_vectors.matrix[list(b.tokens)]
    ground = np.linalg.norm(left[:, None, :] - right[None, :, :], axis=2)
    return transport_simplex(a.weights, b.weights, ground).cost


def _sentence_rows(corpus, representation: SentenceVectors) -> np.ndarray:
    for case_id in corpus.ids:
        if case_id not in representation:
            raise MissingVector(case_id)
    return representation.rows(corpus.ids)


def _raw_sentence_scores(rows: np.ndarray, metric: Metric) -> np.ndarray:
    m = rows.shape[0]
    raw = np.zeros((m, m))
    if metric is Metric.COSINE:
        norms = np.linalg.norm(rows, axis=1)
        if (norms == 0).any():
            raise ZeroVector(f'Test case at position {int(np.argmin(norms))} has a zero vector.')
        for i in range(1, m):
            raw[i, :i] = (rows[:i] @ rows[i]) / (norms[:i] * norms[i])
        np.fill_diagonal(raw, 1.0)
    else:
        for i in range(1, m):
            raw[i, :i] = np.linalg.norm(rows[:i] - rows[i], axis=1)
    upper = np.triu_indices(m, 1)
    raw[upper] = raw.T[upper]
    return raw


def _raw_wmd_scores(corpus, word_vectors: WordVectors, docs) -> np.ndarray:
    tokens_by_id = {doc.test_case_id: doc.tokens for doc in docs}
    distributions = []
    for case_id in corpus.ids:
        if case_id not in tokens_by_id:
            raise IncompatibleMetric(f'No tokenized document for test case {case_id}.')
        distributions.append(bow_distribution(tokens_by_id[case_id], word_vectors, label=case_id))

    m = corpus.m
    raw = np.zeros((m, m))
    with performance_logger.stage('wmd-matrix', m=m, pairs=m * (m - 1) // 2):
        for i in range(1, m):
            for j in range(i):
                raw[i, j] = raw[j, i] = wmd(distributions[j], distributions[i], word_vectors)
    return raw


def build_similarity_matrix(corpus, representation, metric: Metric, docs=None, provenance: str = '') -> SimilarityMatrix:
    """
    Raw pairwise scores for every i < j, normalized into a similarity
    matrix. Cosine and Euclidean need ``SentenceVectors``; WMD needs
    ``WordVectors`` plus the tokenized ``docs``.
    """
    metric = Metric(metric)
    if metric is Metric.WMD:
        if not isinstance(representation, WordVectors):
            raise IncompatibleMetric('WMD requires word vectors.')
        if docs is None:
            raise IncompatibleMetric('WMD requires the tokenized documents.')
        raw = _raw_wmd_scores(corpus, representation, docs)
    else:
        if not isinstance(representation, SentenceVectors):
            raise IncompatibleMetric(f'{metric.value} requires sentence vectors.')
        raw = _raw_sentence_scores(_sentence_rows(corpus, representation), metric)

    matrix = normalize_scores(raw, SCORE_KIND[metric], metric=metric, provenance=provenance)
    logger.info(f'Built {metric.value} similarity matrix for {corpus.m} test cases ({provenance or "-"})')
    return matrix


def normalize_scores(raw, kind: ScoreKind, metric: Optional[Metric] = None, provenance: str = '') -> SimilarityMatrix:
    """
    Min-max scale the off-diagonal entries to [0, 1]; distances are
    flipped so that 1 means most similar. A constant matrix maps to zero.
    """
    raw = np.asarray(raw, dtype=np.float64)
    m = raw.shape[0]
    values = np.zeros((m, m))
    if m > 1:
        lower = np.tril_indices(m, -1)
        scores = raw[lower]
        low, high = scores.min(), scores.max()
        if high > low:
            scaled = np.clip((scores - low) / (high - low), 0.0, 1.0)
            if ScoreKind(kind) is ScoreKind.DISTANCE:
                scaled = 1.0 - scaled
            values[lower] = scaled
            values.T[lower] = scaled
    np.fill_diagonal(values, 1.0)
    values.setflags(write=False)
    return SimilarityMatrix(values=values, metric=metric, provenance=provenance)


def serialize_matrix(matrix: SimilarityMatrix) -> str:
    """Header line "m metric provenance", then one line per row of the strict lower triangle."""
    metric = matrix.metric.value if matrix.metric else '-'
    provenance = (matrix.provenance or '-').replace(' ', '_')
    lines = [f'{matrix.m} {metric} {provenance}']
    for i in range(1, matrix.m):
        lines.append(' '.join(repr(float(x)) for x in matrix.values[i, :i]))
    return '\n'.join(lines) + '\n'


def export_matrix(matrix: SimilarityMatrix, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_matrix(matrix), encoding='utf-8')
    logger.info(f'Exported {matrix.m}x{matrix.m} matrix to {path}')
    return path


def parse_matrix_text(text: str, source: str = 'matrix') -> SimilarityMatrix:
    lines = text.splitlines()
    if not lines:
        raise MatrixFormatError(f'{source}: empty matrix file')
    header = lines[0].split()
    if len(header) != 3:
        raise MatrixFormatError(f'{source}: header must be "m metric provenance"')
    try:
        m = int(header[0])
        metric = None if header[1] == '-' else Metric(header[1])
    except ValueError as exc:
        raise MatrixFormatError(f'{source}: bad header ({exc})')
    provenance = '' if header[2] == '-' else header[2]

    rows = lines[1:]
    while rows and not rows[-1].strip():
        rows.pop()
    if len(rows) != max(m - 1, 0):
        raise MatrixFormatError(f'{source}: expected {m - 1} rows, found {len(rows)}')

    values = np.eye(m)
    for i, line in enumerate(rows, start=1):
        parts = line.split()
        if len(parts) != i:
            raise MatrixFormatError(f'{source}: row {i} has {len(parts)} entries, expected {i}')
        try:
            row = np.array([float(x) for x in parts])
        except ValueError:
            raise MatrixFormatError(f'{source}: row {i} is not numeric')
        if (row < 0).any() or (row > 1).any():
            raise MatrixFormatError(f'{source}: row {i} has entries outside [0, 1]')
        values[i, :i] = row
        values[:i, i] = row
    values.setflags(write=False)
    return SimilarityMatrix(values=values, metric=metric, provenance=provenance)


def import_matrix(path) -> SimilarityMatrix:
    return parse_matrix_text(Path(path).read_text(encoding='utf-8'), source=str(path))
