"""
Population initialization and variation operators.

Every operator keeps the number of selected test cases fixed: crossover
fills back to the parents' size, inversion only permutes bits and repair
trades one removal for each addition.
"""
import logging

import numpy as np

from .budget import checked_budget_size, round_half_up
from .types import InitStrategy, SubsetSolution

logger = logging.getLogger(__name__)


def _fill_uniform(bits, k, rng):
    remaining = np.flatnonzero(~bits)
    missing = k - int(bits.sum())
    if missing > 0:
        bits[rng.choice(remaining, size=missing, replace=False)] = True
    return bits


def iterative_selection(corpus, k, rng):
    """Passes over the requirements in random order, one new case per requirement per pass."""
    bits = np.zeros(corpus.m, dtype=bool)
    chosen = 0
    while chosen < k:
        progress = False
        for r in rng.permutation(corpus.n_req):
            if chosen == k:
                break
            candidates = [i for i in corpus.cases_by_requirement[r] if not bits[i]]
            if not candidates:
                continue
            bits[rng.choice(candidates)] = True
            chosen += 1
            progress = True
        if not progress:
            return _fill_uniform(bits, k, rng)
    return bits


def requirement_random(corpus, k, rng):
    """One random case for every requirement not yet covered, then a uniform fill."""
    bits = np.zeros(corpus.m, dtype=bool)
    for cases in corpus.cases_by_requirement:
        if not bits[list(cases)].any():
            bits[rng.choice(cases)] = True
    return _fill_uniform(bits, k, rng)


def proportional_quotas(corpus, budget, k):
    """Per-requirement quotas near budget * cases, at least one each, summing to k when possible."""
    sizes = np.array([len(cases) for cases in corpus.cases_by_requirement], dtype=np.int64)
    ideal = budget * sizes
    quotas = np.clip([round_half_up(x) for x in ideal], 1, sizes).astype(np.int64)

    while quotas.sum() > k:
        excess = np.where(quotas > 1, quotas - ideal, -np.inf)
        if not np.isfinite(excess).any():
            break
        quotas[int(np.argmax(excess))] -= 1
    while quotas.sum() < k:
        deficit = np.where(quotas < sizes, ideal - quotas, -np.inf)
        if not np.isfinite(deficit).any():
            break
        quotas[int(np.argmax(deficit))] += 1
    return quotas


def proportional_selection(corpus, budget, k, rng, quotas=None):
    """Draw each requirement's quota of cases, then top up to k uniformly."""
    if quotas is None:
        quotas = proportional_quotas(corpus, budget, k)
    bits = np.zeros(corpus.m, dtype=bool)
    for cases, quota in zip(corpus.cases_by_requirement, quotas):
        free = [i for i in cases if not bits[i]]
        already = len(cases) - len(free)
        take = max(min(int(quota) - already, len(free)), 0)
        if take:
            bits[rng.choice(free, size=take, replace=False)] = True
    return _fill_uniform(bits, k, rng)


def init_population(corpus, config, rng=None):
    """``config.population_size`` budget-exact, covering selections."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    k = checked_budget_size(corpus, config.budget)
    strategy = InitStrategy(config.init_strategy)
    quotas = proportional_quotas(corpus, config.budget, k) if strategy is InitStrategy.PROPORTIONAL else None

    population = []
    for _ in range(config.population_size):
        if strategy is InitStrategy.ITERATIVE:
            bits = iterative_selection(corpus, k, rng)
        elif strategy is InitStrategy.REQUIREMENT_RANDOM:
            bits = requirement_random(corpus, k, rng)
        else:
            bits = proportional_selection(corpus, config.budget, k, rng, quotas)
        population.append(SubsetSolution(bits=bits, valid=corpus.covers_all(bits)))
    return population


def _tournament(population, rng):
    if len(population) == 1:
        return population[0]
    a, b = (int(x) for x in rng.choice(len(population), size=2, replace=False))
    winner = min((a, b), key=lambda i: (not population[i].valid, population[i].fitness, i))
    return population[winner]


def select_parents(population, rng):
    """Two independent binary tournaments; valid first, then lower fitness, then lower index."""
    return _tournament(population, rng), _tournament(population, rng)


def crossover(p1, p2, rng, rate=1.0):
    """Keep the shared cases, complete from the symmetric difference without replacement."""
    if rng.random() >= rate:
        return SubsetSolution(bits=p1.bits)
    shared = p1.bits & p2.bits
    pool = np.flatnonzero(p1.bits ^ p2.bits)
    missing = p1.selected_count - int(shared.sum())
    bits = shared.copy()
    if missing > 0:
        bits[rng.choice(pool, size=missing, replace=False)] = True
    return SubsetSolution(bits=bits)


def mutate(solution, rng, rate=1.0):
    """Inversion mutation: reverse one random segment of the bit vector."""
    if rng.random() >= rate:
        return solution
    a, b = sorted(int(x) for x in rng.integers(len(solution.bits), size=2))
    bits = solution.bits.copy()
    bits[a:b + 1] = bits[a:b + 1][::-1]
    return SubsetSolution(bits=bits)


def repair(solution, corpus, rng):
    """
    Add a random case for each uncovered requirement, then drop random
    cases whose requirements are all covered twice until the original
    size is restored. Returns ``(solution, ok)``; when the size cannot be
    restored the input comes back unchanged with ``ok`` False.
    """
    bits = solution.bits.copy()
    target = solution.selected_count
    coverage = corpus.coverage_matrix
    if corpus.covers_all(bits):
        return solution, True

    for cases in corpus.cases_by_requirement:
        if cases and not bits[list(cases)].any():
            bits[rng.choice(cases)] = True

    while bits.sum() > target:
        counts = coverage[bits].sum(axis=0)
        selected = np.flatnonzero(bits)
        removable = [i for i in selected if (counts[coverage[i]] > 1).all()]
        if not removable:
            logger.debug('Repair cannot restore the budget without uncovering a requirement')
            return solution, False
        bits[rng.choice(removable)] = False

    return SubsetSolution(bits=bits, valid=corpus.covers_all(bits)), True
