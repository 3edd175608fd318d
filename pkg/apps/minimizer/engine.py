"""
Generational search over fixed-size bit vectors.

The engine knows nothing about test suites: it is driven by an
``evaluate(bits) -> (valid, fitness)`` callback and an optional repair
callback. Survival is elitist over the union of parents and offspring,
with identical selections counted once, so the best fitness never gets
worse from one generation to the next.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .budget import NoValidIndividual
from .operators import crossover, mutate, select_parents
from .types import SubsetSolution

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvolutionOutcome:
    best: SubsetSolution
    generations: int
    history: tuple[float, ...]
    population: tuple[SubsetSolution, ...]


def survival_key(indexed):
    index, solution = indexed
    return (not solution.valid, solution.fitness, index)


def has_converged(history, window, epsilon) -> bool:
    """Best fitness improved by less than ``epsilon`` over the last ``window`` generations."""
    if len(history) <= window:
        return False
    return history[-window - 1] - history[-1] < epsilon


class EvolutionEngine:
    def __init__(
        self,
        evaluate: Callable[[np.ndarray], tuple[bool, float]],
        rng: np.random.Generator,
        population_size: int = 100,
        crossover_rate: float = 0.90,
        mutation_rate: float = 0.01,
        convergence_epsilon: float = 0.0025,
        convergence_window: int = 10,
        max_generations: int = 1000,
        repair: Optional[Callable] = None,
    ):
        self.evaluate = evaluate
        self.rng = rng
        self.population_size = population_size
        self.crossover_rate = crossover_rate
        self.mutation_rate = mutation_rate
        self.convergence_epsilon = convergence_epsilon
        self.convergence_window = convergence_window
        self.max_generations = max_generations
        self.repair = repair

    def _evaluated(self, solution: SubsetSolution) -> SubsetSolution:
        valid, fitness = self.evaluate(solution.bits)
        return solution.evaluated(valid, fitness)

    def _survivors(self, candidates):
        """Best distinct selections first; repeats only fill a population that would otherwise shrink."""
        distinct, repeated, seen = [], [], set()
        for _, solution in sorted(enumerate(candidates), key=survival_key):
            key = solution.bits.tobytes()
            (repeated if key in seen else distinct).append(solution)
            seen.add(key)
        return (distinct + repeated)[:self.population_size]

    def _offspring(self, population):
        children = []
        while len(children) < self.population_size:
            first, second = select_parents(population, self.rng)
            child = crossover(first, second, self.rng, self.crossover_rate)
            child = mutate(child, self.rng, self.mutation_rate)
            if self.repair is not None:
                child, _ = self.repair(child, self.rng)
            children.append(self._evaluated(child))
        return children

    def run(self, initial) -> EvolutionOutcome:
        population = self._survivors([self._evaluated(solution) for solution in initial])
        history = [population[0].fitness]
        generations = 0

        while generations < self.max_generations:
            population = self._survivors(population + self._offspring(population))
            generations += 1
            history.append(population[0].fitness)
            if has_converged(history, self.convergence_window, self.convergence_epsilon):
                logger.debug(f'Converged after {generations} generations at fitness {history[-1]:.6f}')
                break

        best = population[0]
        if not best.valid:
            raise NoValidIndividual('No valid individual survived the search.')
        return EvolutionOutcome(
            best=best, generations=generations, history=tuple(history), population=tuple(population)
        )
