"""
Reference strategies the GA is compared against.
"""
import logging
from enum import Enum

import numpy as np

from apps.minimizer.budget import InfeasibleBudget, budget_size, checked_budget_size
from apps.minimizer.operators import requirement_random
from apps.minimizer.types import SubsetSolution

logger = logging.getLogger(__name__)


class BaselineKind(str, Enum):
    RANDOM_CONSTRAINED = 'random-c'
    RANDOM_UNCONSTRAINED = 'random-u'
    GREEDY_DIVERSITY = 'greedy'


def random_minimize(corpus, budget: float, constrained: bool, seed: int) -> SubsetSolution:
    """
    Constrained: one draw of the requirement-first initialization.
    Unconstrained: a uniform random subset of the same size.
    """
    rng = np.random.default_rng(seed)
    if constrained:
        bits = requirement_random(corpus, checked_budget_size(corpus, budget), rng)
    else:
        k = min(budget_size(corpus.m, budget), corpus.m)
        if k < 1:
            raise InfeasibleBudget(budget, k, 1, 0.5 / corpus.m)
        bits = np.zeros(corpus.m, dtype=bool)
        bits[rng.choice(corpus.m, size=k, replace=False)] = True
    return SubsetSolution(bits=bits, valid=corpus.covers_all(bits))


def greedy_diversity(corpus, sim, budget: float) -> SubsetSolution:
    """
    Maximin selection on distance 1 - Norm_Sim: first one case per
    uncovered requirement, then the case farthest from everything chosen.
    Ties go to the lowest index.
    """
    k = checked_budget_size(corpus, budget)
    values = np.asarray(getattr(sim, 'values', sim), dtype=np.float64)
    bits = np.zeros(corpus.m, dtype=bool)
    nearest = np.full(corpus.m, np.inf)

    def take(index):
        bits[index] = True
        np.minimum(nearest, 1.0 - values[index], out=nearest)

    for cases in corpus.cases_by_requirement:
        if not cases or bits[list(cases)].any():
            continue
        candidates = np.array(cases)
        take(int(candidates[np.argmax(nearest[candidates])]))

    while bits.sum() < k:
        scores = np.where(bits, -np.inf, nearest)
        take(int(np.argmax(scores)))

    logger.debug(f'Greedy diversity picked {k} of {corpus.m} test cases')
    return SubsetSolution(bits=bits, valid=corpus.covers_all(bits))
