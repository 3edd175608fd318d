"""
Base exceptions shared by every Reqmin app.
"""


class EngineError(Exception):
    """Base exception for engine errors."""
    pass


class ValidationFailure(EngineError):
    """Raised when input artifacts are unusable (CLI exit code 2)."""
    pass
