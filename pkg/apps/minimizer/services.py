"""
GA-based test suite minimization.

The minimizer only reads requirement traceability and the similarity
matrix; fault data never reaches it.
"""
import logging
import time

import numpy as np

from apps.common.logging_config import performance_logger

from .budget import MinimizerError, checked_budget_size
from .engine import EvolutionEngine
from .operators import init_population, repair
from .types import GaConfig, MinimizationResult, Objective

logger = logging.getLogger(__name__)


def fitness(selection, sim, objective: Objective = Objective.MAX_SQUARED) -> float:
    """
    MAX_SQUARED: mean over selected cases of the squared similarity to
    their most similar selected neighbour. PAIRWISE: mean similarity over
    all selected pairs. Both are 0 for a single case.
    """
    bits = getattr(selection, 'bits', selection)
    values = getattr(sim, 'values', sim)
    chosen = np.flatnonzero(bits)
    n = len(chosen)
    if n < 2:
        return 0.0
    block = np.array(values[np.ix_(chosen, chosen)], dtype=np.float64)
    if Objective(objective) is Objective.PAIRWISE:
        return float(block[np.triu_indices(n, 1)].mean())
    np.fill_diagonal(block, -np.inf)
    nearest = block.max(axis=1)
    return float(np.mean(nearest ** 2))


def minimize(corpus, sim, config: GaConfig) -> MinimizationResult:
    """Search for the budget-exact covering subset with the lowest fitness."""
    if sim.m != corpus.m:
        raise MinimizerError(f'Similarity matrix is {sim.m}x{sim.m} but the corpus has {corpus.m} test cases.')
    k = checked_budget_size(corpus, config.budget)
    rng = np.random.default_rng(config.seed)

    def evaluate(bits):
        return corpus.covers_all(bits), fitness(bits, sim, config.objective)

    engine = EvolutionEngine(
        evaluate=evaluate,
        rng=rng,
        population_size=config.population_size,
        crossover_rate=config.crossover_rate,
        mutation_rate=config.mutation_rate,
        convergence_epsilon=config.convergence_epsilon,
        convergence_window=config.convergence_window,
        max_generations=config.max_generations,
        repair=(lambda child, r: repair(child, corpus, r)) if config.repair_enabled else None,
    )

    start_time = time.perf_counter()
    with performance_logger.stage('ga-minimize', m=corpus.m, k=k, init=config.init_strategy.value):
        population = init_population(corpus, config, rng)
        outcome = engine.run(population)
    wall_time = time.perf_counter() - start_time

    best = outcome.best
    logger.info(
        f'GA finished: k={k}, generations={outcome.generations}, fitness={best.fitness:.6f}'
    )
    return MinimizationResult(
        best=best,
        generations_run=outcome.generations,
        fitness_history=outcome.history,
        selected_ids=tuple(corpus.ids[i] for i in best.selected),
        config=config.model_dump(mode='json'),
        wall_time=wall_time,
    )
