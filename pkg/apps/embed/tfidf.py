"""
Native TF-IDF sentence vectors.

tf is the raw count, idf = ln((1 + N) / (1 + df)) + 1, rows are L2
normalized and components follow first-appearance order of terms.
"""
import logging

import numpy as np

from .errors import CorpusTooSmall, EmptyVocabulary
from .types import SentenceVectors, VectorSource

logger = logging.getLogger(__name__)


def tfidf_embed(docs) -> SentenceVectors:
    docs = list(docs)
    if len(docs) < 2:
        raise CorpusTooSmall('TF-IDF needs at least two documents.')

    vocabulary: dict[str, int] = {}
    for doc in docs:
        if not doc.tokens:
            raise EmptyVocabulary(f'Document {doc.test_case_id} has no tokens.')
        for token in doc.tokens:
            vocabulary.setdefault(token, len(vocabulary))

    counts = np.zeros((len(docs), len(vocabulary)), dtype=np.float64)
    for row, doc in enumerate(docs):
        columns = [vocabulary[token] for token in doc.tokens]
        np.add.at(counts[row], columns, 1.0)

    n_docs = len(docs)
    document_frequency = np.count_nonzero(counts, axis=0)
    idf = np.log((1.0 + n_docs) / (1.0 + document_frequency)) + 1.0
    weights = counts * idf
    weights /= np.linalg.norm(weights, axis=1, keepdims=True)

    logger.info(f'TF-IDF: {n_docs} documents, {len(vocabulary)} terms')
    return SentenceVectors(
        keys=tuple(doc.test_case_id for doc in docs),
        matrix=weights,
        source=VectorSource.TFIDF,
        vocabulary=tuple(vocabulary),
    )
