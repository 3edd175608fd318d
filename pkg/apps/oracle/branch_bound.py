"""
Exact best fault detection under the budget and coverage constraints.

Depth-first branch and bound over test cases sorted by fault count.
Selections, covered requirements and detected faults are Python int
bitmasks. A node is pruned when the remaining slots cannot cover the
open requirements or when its fault bound (current faults plus the r
largest marginal gains) cannot beat the incumbent.
"""
import logging
import time
from dataclasses import dataclass

from django.conf import settings

from apps.common.logging_config import performance_logger
from apps.minimizer.budget import checked_budget_size

from .errors import OracleError

logger = logging.getLogger(__name__)

_CLOCK_EVERY = 1024


@dataclass(frozen=True)
class OracleResult:
    subset: tuple[str, ...]
    fdr: float
    exact: bool
    detected: int = 0
    total_faults: int = 0
    nodes: int = 0

    def to_payload(self) -> dict:
        return {
            'selected_ids': list(self.subset),
            'selected_count': len(self.subset),
            'fdr': self.fdr,
            'exact': self.exact,
            'detected_faults': self.detected,
            'total_faults': self.total_faults,
        }


def _masks(corpus, faults):
    fault_bit = {fault_id: 1 << i for i, fault_id in enumerate(faults.fault_ids)}
    fault_masks = []
    requirement_masks = []
    for case in corpus.test_cases:
        mask = 0
        for fault_id in faults.faults_of(case.id):
            mask |= fault_bit.get(fault_id, 0)
        fault_masks.append(mask)
        req = 0
        for requirement in case.requirement_ids:
            position = corpus.requirement_positions.get(requirement)
            if position is not None:
                req |= 1 << position
        requirement_masks.append(req)
    return fault_masks, requirement_masks


def _greedy_incumbent(order, fault_masks, requirement_masks, all_requirements, k):
    """Cover requirements by best fault gain, then fill by best fault gain."""
    chosen, detected, covered = [], 0, 0
    for bit_position in range(all_requirements.bit_length()):
        bit = 1 << bit_position
        if covered & bit:
            continue
        candidates = [i for i in order if requirement_masks[i] & bit and i not in chosen]
        if not candidates:
            return None
        best = max(candidates, key=lambda i: (fault_masks[i] & ~detected).bit_count())
        chosen.append(best)
        detected |= fault_masks[best]
        covered |= requirement_masks[best]
    if len(chosen) > k:
        return None
    rest = [i for i in order if i not in chosen]
    while len(chosen) < k:
        best = max(rest, key=lambda i: (fault_masks[i] & ~detected).bit_count())
        rest.remove(best)
        chosen.append(best)
        detected |= fault_masks[best]
    return chosen, detected


def best_fdr(corpus, faults, budget: float, time_cap=None) -> OracleResult:
    """
    Highest achievable FDR of a budget-exact subset covering every
    requirement. ``exact`` is False when the search stopped at
    ``time_cap`` seconds and the incumbent is returned unproven.
    """
    k = checked_budget_size(corpus, budget)
    if time_cap is None:
        time_cap = getattr(settings, 'ORACLE_TIME_CAP', 60.0)

    fault_masks, requirement_masks = _masks(corpus, faults)
    full_faults = 0
    for mask in fault_masks:
        full_faults |= mask
    total = full_faults.bit_count()
    if total == 0:
        raise OracleError('The full suite detects no faults; FDR is undefined.')
    all_requirements = (1 << corpus.n_req) - 1

    order = sorted(range(corpus.m), key=lambda i: (-fault_masks[i].bit_count(), i))
    L = len(order)
    ordered_faults = [fault_masks[i] for i in order]
    ordered_reqs = [requirement_masks[i] for i in order]

    suffix_faults = [0] * (L + 1)
    suffix_reqs = [0] * (L + 1)
    suffix_width = [0] * (L + 1)
    for pos in range(L - 1, -1, -1):
        suffix_faults[pos] = suffix_faults[pos + 1] | ordered_faults[pos]
        suffix_reqs[pos] = suffix_reqs[pos + 1] | ordered_reqs[pos]
        suffix_width[pos] = max(suffix_width[pos + 1], ordered_reqs[pos].bit_count())

    incumbent = _greedy_incumbent(order, fault_masks, requirement_masks, all_requirements, k)
    if incumbent is None:
        best_cases, best_count = None, -1
    else:
        best_cases, best_detected = incumbent
        best_count = best_detected.bit_count()

    start = time.perf_counter()
    exact = True
    nodes = 0
    # (position, selected, covered requirements, detected faults, chosen case bitmask)
    stack = [(0, 0, 0, 0, 0)]
    while stack and best_count < total:
        pos, count, covered, detected, chosen = stack.pop()
        nodes += 1
        if nodes % _CLOCK_EVERY == 0 and time.perf_counter() - start > time_cap:
            exact = False
            logger.warning(f'Oracle hit the {time_cap}s time cap after {nodes} nodes; result not proven optimal')
            break

        slots = k - count
        if slots == 0:
            if covered == all_requirements and detected.bit_count() > best_count:
                best_count = detected.bit_count()
                best_cases = [order[p] for p in range(L) if chosen >> p & 1]
            continue
        if slots > L - pos:
            continue
        open_requirements = all_requirements & ~covered
        if open_requirements & ~suffix_reqs[pos]:
            continue
        if open_requirements.bit_count() > slots * suffix_width[pos]:
            continue
        if (detected | suffix_faults[pos]).bit_count() <= best_count:
            continue
        gains = sorted(((f & ~detected).bit_count() for f in ordered_faults[pos:]), reverse=True)
        if detected.bit_count() + sum(gains[:slots]) <= best_count:
            continue

        # exclude pushed first so the include branch is explored first
        stack.append((pos + 1, count, covered, detected, chosen))
        stack.append((
            pos + 1,
            count + 1,
            covered | ordered_reqs[pos],
            detected | ordered_faults[pos],
            chosen | (1 << pos),
        ))

    if best_cases is None:
        raise OracleError('No budget-exact subset covers every requirement.')
    subset = tuple(corpus.ids[i] for i in sorted(best_cases))
    performance_logger.log_stage_time(
        'oracle-search', time.perf_counter() - start, k=k, nodes=nodes, exact=exact,
    )
    logger.info(f'Oracle k={k}: {best_count}/{total} faults, exact={exact}, nodes={nodes}')
    return OracleResult(
        subset=subset,
        fdr=best_count / total,
        exact=exact,
        detected=best_count,
        total_faults=total,
        nodes=nodes,
    )
