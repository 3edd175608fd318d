"""
Redundancy-controlled sub-suites.

Candidate suites keep every requirement and every detected fault covered
and sit within ``tol`` of a target redundancy level. A genetic search
over the candidate pool then picks the ``count`` suites with the lowest
total pairwise Jaccard similarity.
"""
import logging
from itertools import combinations

import numpy as np

from apps.corpus.services import jaccard
from apps.corpus.types import Corpus, FaultMatrix
from apps.minimizer.engine import EvolutionEngine
from apps.minimizer.types import SubsetSolution

from .errors import SuiteGenerationError

logger = logging.getLogger(__name__)

REDUNDANCY_LEVELS = tuple(4.5 + 0.5 * step for step in range(15))
DEFAULT_POOL_SIZE = 100
DEFAULT_TOLERANCE = 0.25


class _SuiteState:
    """Incremental requirement counts, fault counts and total detections of a selection."""

    def __init__(self, coverage, fault_incidence):
        self.coverage = coverage
        self.incidence = fault_incidence
        self.detections = fault_incidence.sum(axis=1)
        self.bits = np.zeros(coverage.shape[0], dtype=bool)
        self.req_counts = np.zeros(coverage.shape[1], dtype=np.int64)
        self.fault_counts = np.zeros(fault_incidence.shape[1], dtype=np.int64)
        self.total = 0

    def add(self, i):
        self.bits[i] = True
        self.req_counts += self.coverage[i]
        self.fault_counts += self.incidence[i]
        self.total += int(self.detections[i])

    def remove(self, i):
        self.bits[i] = False
        self.req_counts -= self.coverage[i]
        self.fault_counts -= self.incidence[i]
        self.total -= int(self.detections[i])

    def removable(self, i):
        return (
            (self.req_counts[self.coverage[i]] > 1).all()
            and (self.fault_counts[self.incidence[i]] > 1).all()
        )


def _incidence(corpus, faults):
    position = {fault_id: j for j, fault_id in enumerate(faults.fault_ids)}
    incidence = np.zeros((corpus.m, len(faults.fault_ids)), dtype=bool)
    for i, case_id in enumerate(corpus.ids):
        for fault_id in faults.faults_of(case_id):
            if fault_id in position:
                incidence[i, position[fault_id]] = True
    detected = incidence.any(axis=0)
    return incidence[:, detected]


def _construct(corpus, incidence, target_total, slack, rng, max_moves):
    """One randomized covering suite nudged towards the target detection count."""
    state = _SuiteState(corpus.coverage_matrix, incidence)
    n_faults = incidence.shape[1]

    for fault in rng.permutation(n_faults):
        if state.fault_counts[fault] == 0:
            state.add(int(rng.choice(np.flatnonzero(incidence[:, fault]))))
    for r in rng.permutation(corpus.n_req):
        if state.req_counts[r] == 0:
            candidates = np.flatnonzero(corpus.coverage_matrix[:, r])
            lightest = candidates[state.detections[candidates] == state.detections[candidates].min()]
            state.add(int(rng.choice(lightest)))

    for _ in range(max_moves):
        gap = target_total - state.total
        if abs(gap) <= slack:
            return state.bits.copy(), state.total
        if gap > 0:
            outside = np.flatnonzero(~state.bits & (state.detections > 0))
            if outside.size == 0:
                break
            fitting = outside[state.detections[outside] <= gap + slack]
            state.add(int(rng.choice(fitting if fitting.size else outside)))
            continue
        inside = np.flatnonzero(state.bits & (state.detections > 0))
        victim = next((int(i) for i in rng.permutation(inside) if state.removable(i)), None)
        if victim is not None:
            state.remove(victim)
            continue
        # swap a heavy member for a lighter outsider covering the same ground
        heavy = int(max(np.flatnonzero(state.bits), key=lambda i: (state.detections[i], -i)))
        lighter = np.flatnonzero(~state.bits & (state.detections < state.detections[heavy]))
        if lighter.size == 0:
            break
        state.add(int(rng.choice(lighter)))
        if state.removable(heavy):
            state.remove(heavy)
        else:
            break
    return state.bits.copy(), state.total


def select_diverse(pool, count, rng, population_size=50, max_generations=200):
    """Indices of ``count`` pool members with the lowest total pairwise Jaccard."""
    size = len(pool)
    similarity = np.zeros((size, size))
    for a, b in combinations(range(size), 2):
        similarity[a, b] = similarity[b, a] = jaccard(pool[a], pool[b])

    def evaluate(bits):
        chosen = np.flatnonzero(bits)
        block = similarity[np.ix_(chosen, chosen)]
        return True, float(block[np.triu_indices(len(chosen), 1)].sum())

    initial = []
    for _ in range(population_size):
        bits = np.zeros(size, dtype=bool)
        bits[rng.choice(size, size=count, replace=False)] = True
        initial.append(SubsetSolution(bits=bits))

    engine = EvolutionEngine(
        evaluate=evaluate,
        rng=rng,
        population_size=population_size,
        crossover_rate=0.90,
        mutation_rate=0.1,
        convergence_epsilon=1e-9,
        convergence_window=20,
        max_generations=max_generations,
    )
    outcome = engine.run(initial)
    return [int(i) for i in outcome.best.selected]


def generate_redundancy_suites(
    corpus,
    faults,
    target_rl: float,
    count: int = 10,
    tol: float = DEFAULT_TOLERANCE,
    pool_size: int = DEFAULT_POOL_SIZE,
    seed: int = 0,
    max_attempts=None,
):
    """
    Up to ``count`` diverse suites (tuples of case ids in corpus order)
    with full requirement and fault coverage and RL within ``tol`` of
    ``target_rl``.
    """
    rng = np.random.default_rng(seed)
    incidence = _incidence(corpus, faults)
    n_faults = incidence.shape[1]
    if n_faults == 0:
        raise SuiteGenerationError(target_rl, None, 'The corpus detects no faults.')

    target_total = target_rl * n_faults
    slack = tol * n_faults
    max_attempts = max_attempts or 5 * pool_size
    max_moves = 4 * corpus.m

    seen = set()
    pool = []
    closest = None
    full_total = int(incidence.sum())
    if abs(full_total - target_total) <= slack:
        seen.add(tuple(range(corpus.m)))
        pool.append(frozenset(corpus.ids))

    for _ in range(max_attempts):
        if len(pool) >= pool_size:
            break
        bits, total = _construct(corpus, incidence, target_total, slack, rng, max_moves)
        rl = total / n_faults
        if closest is None or abs(rl - target_rl) < abs(closest - target_rl):
            closest = rl
        if abs(total - target_total) > slack:
            continue
        key = tuple(int(i) for i in np.flatnonzero(bits))
        if key in seen:
            continue
        seen.add(key)
        pool.append(frozenset(corpus.ids[i] for i in key))

    if not pool:
        raise SuiteGenerationError(target_rl, closest)
    if len(pool) <= count:
        if len(pool) < count:
            logger.warning(f'Only {len(pool)} distinct suites reach RL {target_rl}; {count} requested')
        chosen = list(range(len(pool)))
    else:
        chosen = select_diverse(pool, count, rng)

    order = corpus.positions
    suites = [tuple(sorted(pool[i], key=order.__getitem__)) for i in chosen]
    logger.info(f'Generated {len(suites)} suites at RL {target_rl} from a pool of {len(pool)}')
    return suites


def suite_corpus(corpus, faults, case_ids):
    """Restrict a corpus and its fault matrix to ``case_ids``."""
    keep = set(case_ids)
    sub_corpus = Corpus(
        requirements=corpus.requirements,
        test_cases=tuple(case for case in corpus.test_cases if case.id in keep),
    )
    sub_faults = FaultMatrix(
        fault_ids=tuple(f for f in faults.fault_ids if any(f in faults.faults_of(c) for c in keep)),
        detects={c: faults.faults_of(c) for c in sub_corpus.ids if faults.faults_of(c)},
    )
    return sub_corpus, sub_faults
