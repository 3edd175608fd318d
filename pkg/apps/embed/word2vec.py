"""
Word2Vec training with negative sampling.

CBOW averages the context vectors to predict the centre word; Skip-Gram
predicts every context word from the centre word. Both share the
unigram sampling table and a linearly decaying learning rate.
"""
import logging
from collections import Counter
from enum import Enum

import numpy as np
from django.conf import settings
from pydantic import BaseModel, ConfigDict, Field

from apps.common.logging_config import performance_logger

from .errors import CorpusTooSmall, VocabularyTooSmall
from .types import WordVectors

logger = logging.getLogger(__name__)

MAX_EXP = 6.0
TABLE_DOMAIN = 2 ** 31 - 1
_LOG_FLOOR = 1e-12


class Architecture(str, Enum):
    CBOW = 'cbow'
    SKIPGRAM = 'skipgram'


class CbowConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    window: int = Field(10, ge=1)
    dim: int = Field(300, ge=2)
    epochs: int = Field(50, ge=1)
    negative_samples: int = Field(5, ge=1)
    learning_rate: float = Field(0.025, gt=0)
    min_learning_rate: float = Field(0.0001, ge=0)
    ns_exponent: float = 0.75
    seed: int = 1
    architecture: Architecture = Architecture.CBOW


def cbow_config(**overrides) -> CbowConfig:
    """Project defaults from ``settings.CBOW_DEFAULTS`` with non-None overrides."""
    values = dict(getattr(settings, 'CBOW_DEFAULTS', {}))
    values.update({key: value for key, value in overrides.items() if value is not None})
    return CbowConfig(**values)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -MAX_EXP, MAX_EXP)))


def make_cum_table(counts, exponent=0.75, domain=TABLE_DOMAIN):
    """Cumulative unigram^exponent table scaled to ``domain``."""
    weights = np.asarray(counts, dtype=np.float64) ** exponent
    cumulative = np.cumsum(weights) / weights.sum()
    return np.round(cumulative * domain).astype(np.int64)


def draw_negatives(rng, cum_table, target, k):
    """Draw ``k`` word indices from the table, never ``target``."""
    negatives = []
    while len(negatives) < k:
        draws = rng.integers(cum_table[-1], size=k - len(negatives))
        picked = np.searchsorted(cum_table, draws, side='right')
        negatives.extend(int(w) for w in picked if w != target)
    return np.asarray(negatives, dtype=np.int64)


def _negative_step(l1, target, negatives, syn1neg, alpha):
    """One logistic update of the output layer; returns (input error, loss)."""
    indices = np.concatenate(([target], negatives))
    labels = np.zeros(len(indices))
    labels[0] = 1.0
    outputs = syn1neg[indices]
    f = _sigmoid(outputs @ l1)
    loss = -np.log(max(f[0], _LOG_FLOOR)) - np.log(np.maximum(1.0 - f[1:], _LOG_FLOOR)).sum()
    gradient = (labels - f) * alpha
    neu1e = gradient @ outputs
    np.add.at(syn1neg, indices, np.outer(gradient, l1))
    return neu1e, float(loss)


def build_vocabulary(sentences):
    """Vocabulary ordered by descending count, ties by first appearance."""
    counts = Counter()
    first_seen = {}
    for sentence in sentences:
        for token in sentence:
            counts[token] += 1
            first_seen.setdefault(token, len(first_seen))
    keys = sorted(counts, key=lambda t: (-counts[t], first_seen[t]))
    return keys, np.array([counts[k] for k in keys], dtype=np.int64)


def train_cbow(docs, config: CbowConfig | None = None) -> WordVectors:
    """
    Train word vectors on the token sequences of ``docs``.

    Runs single-threaded from ``config.seed`` so repeated calls return
    identical vectors. ``config.architecture`` selects CBOW or Skip-Gram.
    """
    config = config or CbowConfig()
    sentences = [list(doc.tokens) for doc in docs]
    total_tokens = sum(len(s) for s in sentences)
    if total_tokens < config.window + 1:
        raise CorpusTooSmall(
            f'{total_tokens} tokens is too few for a window of {config.window}.'
        )

    keys, counts = build_vocabulary(sentences)
    if len(keys) < config.negative_samples + 1:
        raise VocabularyTooSmall(
            f'{len(keys)} distinct tokens cannot supply {config.negative_samples} negatives.'
        )
    index = {key: i for i, key in enumerate(keys)}
    encoded = [np.array([index[t] for t in s], dtype=np.int64) for s in sentences]

    rng = np.random.default_rng(config.seed)
    syn0 = (rng.random((len(keys), config.dim)) - 0.5) / config.dim
    syn1neg = np.zeros((len(keys), config.dim))
    cum_table = make_cum_table(counts, config.ns_exponent)

    total_words = total_tokens * config.epochs
    span = config.learning_rate - config.min_learning_rate
    processed = 0
    history = []

    with performance_logger.stage(
        f'word2vec-{config.architecture.value}', vocab=len(keys), epochs=config.epochs
    ):
        for epoch in range(config.epochs):
            epoch_loss = 0.0
            updates = 0
            for sentence in encoded:
                length = len(sentence)
                for pos in range(length):
                    alpha = config.learning_rate - span * processed / total_words
                    processed += 1
                    reduced = int(rng.integers(config.window))
                    start = max(0, pos - config.window + reduced)
                    end = min(length, pos + config.window + 1 - reduced)
                    context = np.concatenate((sentence[start:pos], sentence[pos + 1:end]))
                    if context.size == 0:
                        continue
                    word = int(sentence[pos])

                    if config.architecture is Architecture.CBOW:
                        l1 = syn0[context].mean(axis=0)
                        negatives = draw_negatives(rng, cum_table, word, config.negative_samples)
                        neu1e, loss = _negative_step(l1, word, negatives, syn1neg, alpha)
                        np.add.at(syn0, context, neu1e)
                        epoch_loss += loss
                        updates += 1
                    else:
                        for ctx in context:
                            negatives = draw_negatives(rng, cum_table, word, config.negative_samples)
                            neu1e, loss = _negative_step(syn0[ctx].copy(), word, negatives, syn1neg, alpha)
                            syn0[ctx] += neu1e
                            epoch_loss += loss
                            updates += 1

            history.append(epoch_loss / max(updates, 1))
            logger.debug(f'word2vec epoch {epoch + 1}/{config.epochs} loss={history[-1]:.4f}')

    logger.info(
        f'Trained {config.architecture.value} vectors: vocab={len(keys)}, '
        f'dim={config.dim}, final loss={history[-1]:.4f}'
    )
    return WordVectors(keys=tuple(keys), matrix=syn0, training_loss=tuple(history))
