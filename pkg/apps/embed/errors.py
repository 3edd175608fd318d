"""
Exceptions raised while building or loading vector representations.
"""
from apps.common.errors import EngineError, ValidationFailure


class EmbeddingError(EngineError):
    """Base exception for representation errors."""
    pass


class EmptyVocabulary(EmbeddingError):
    """Raised when the documents contain no token at all."""
    pass


class CorpusTooSmall(EmbeddingError):
    """Raised when there is too little text to train or weight terms."""
    pass


class VocabularyTooSmall(EmbeddingError):
    """Raised when negative sampling cannot draw enough distinct words."""
    pass


class VectorFileError(ValidationFailure):
    """Raised when a vector interchange file is malformed."""
    pass


class DimensionMismatch(VectorFileError):
    def __init__(self, key, expected, found):
        self.key = key
        self.expected = expected
        self.found = found
        super().__init__(f'DimensionMismatch: "{key}" has {found} components, expected {expected}')


class MissingVector(VectorFileError):
    def __init__(self, key):
        self.key = key
        super().__init__(f'MissingVector("{key}")')


class InsufficientCoverage(VectorFileError):
    """Raised when imported word vectors miss too many corpus tokens."""
    pass
