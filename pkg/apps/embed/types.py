"""
Vector stores shared by the embedding and similarity apps.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np


class VectorSource(str, Enum):
    TFIDF = 'tfidf'
    IMPORTED = 'imported'


@dataclass(frozen=True, eq=False)
class SentenceVectors:
    """One dense vector per test case; row i belongs to ``keys[i]``."""

    keys: tuple[str, ...]
    matrix: np.ndarray
    source: VectorSource
    # TF-IDF component names, in first-appearance order
    vocabulary: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    @cached_property
    def index(self) -> dict[str, int]:
        return {key: i for i, key in enumerate(self.keys)}

    @property
    def vectors(self) -> dict[str, np.ndarray]:
        return {key: self.matrix[i] for i, key in enumerate(self.keys)}

    def __contains__(self, key) -> bool:
        return key in self.index

    def vector(self, key: str) -> np.ndarray:
        return self.matrix[self.index[key]]

    def rows(self, keys) -> np.ndarray:
        """Stack the vectors of ``keys`` in the given order."""
        return self.matrix[[self.index[key] for key in keys]]


@dataclass(frozen=True, eq=False)
class WordVectors:
    """Token vectors; row i belongs to ``keys[i]``."""

    keys: tuple[str, ...]
    matrix: np.ndarray
    # mean loss per training epoch; empty for imported vectors
    training_loss: tuple[float, ...] = ()

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def vocab_size(self) -> int:
        return len(self.keys)

    @cached_property
    def index(self) -> dict[str, int]:
        return {key: i for i, key in enumerate(self.keys)}

    @property
    def vectors(self) -> dict[str, np.ndarray]:
        return {key: self.matrix[i] for i, key in enumerate(self.keys)}

    def __contains__(self, token) -> bool:
        return token in self.index

    def vector(self, token: str) -> np.ndarray:
        return self.matrix[self.index[token]]
