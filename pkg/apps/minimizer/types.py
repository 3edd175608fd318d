"""
Types for fixed-size, coverage-constrained subset search.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np
from django.conf import settings
from pydantic import BaseModel, ConfigDict, Field


class InitStrategy(str, Enum):
    ITERATIVE = 's1'
    REQUIREMENT_RANDOM = 's2'
    PROPORTIONAL = 's3'


class Objective(str, Enum):
    MAX_SQUARED = 'max_squared'
    PAIRWISE = 'pairwise'


class GaConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    budget: float = Field(gt=0, le=1)
    population_size: int = Field(100, ge=2)
    crossover_rate: float = Field(0.90, ge=0, le=1)
    # per individual: chance that one segment inversion is applied
    mutation_rate: float = Field(0.01, ge=0, le=1)
    convergence_epsilon: float = Field(0.0025, ge=0)
    convergence_window: int = Field(10, ge=1)
    max_generations: int = Field(1000, ge=1)
    init_strategy: InitStrategy = InitStrategy.REQUIREMENT_RANDOM
    seed: int = 0
    repair_enabled: bool = False
    objective: Objective = Objective.MAX_SQUARED


def ga_config(**overrides) -> GaConfig:
    """``settings.MINIMIZER_DEFAULTS`` with non-None overrides applied."""
    values = dict(getattr(settings, 'MINIMIZER_DEFAULTS', {}))
    values.update({key: value for key, value in overrides.items() if value is not None})
    return GaConfig(**values)


@dataclass(frozen=True, eq=False)
class SubsetSolution:
    """Selection vector over corpus positions plus its evaluation."""

    bits: np.ndarray
    valid: bool = False
    fitness: Optional[float] = None

    def __post_init__(self):
        bits = np.array(self.bits, dtype=bool)
        bits.setflags(write=False)
        object.__setattr__(self, 'bits', bits)

    @property
    def selected_count(self) -> int:
        return int(np.count_nonzero(self.bits))

    @property
    def selected(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def evaluated(self, valid: bool, fitness: float) -> SubsetSolution:
        return replace(self, valid=bool(valid), fitness=float(fitness))

    def same_selection(self, other: SubsetSolution) -> bool:
        return bool(np.array_equal(self.bits, other.bits))


@dataclass(frozen=True)
class MinimizationResult:
    best: SubsetSolution
    generations_run: int
    fitness_history: tuple[float, ...]
    selected_ids: tuple[str, ...]
    config: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_payload(self) -> dict:
        """Result document; wall time is left out so seeded runs are reproducible byte for byte."""
        return {
            'selected_ids': list(self.selected_ids),
            'selected_count': self.best.selected_count,
            'valid': self.best.valid,
            'fitness': self.best.fitness,
            'generations': self.generations_run,
            'fitness_history': list(self.fitness_history),
            'config': self.config,
        }
