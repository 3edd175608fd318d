"""
Exceptions raised by the oracle, the suite generator and the synthesizer.
"""
from apps.common.errors import EngineError, ValidationFailure


class OracleError(EngineError):
    """Base exception for oracle errors."""
    pass


class UnsatisfiableSynthConfig(ValidationFailure):
    pass


class SuiteGenerationError(OracleError):
    def __init__(self, target_rl, closest_rl, message=None):
        self.target_rl = target_rl
        self.closest_rl = closest_rl
        closest = 'none' if closest_rl is None else f'{closest_rl:.4f}'
        super().__init__(
            message or f'No suite reaches RL {target_rl} (closest achieved: {closest})'
        )
