"""
Budget arithmetic: k = round-half-up(m * budget) must reach n_req.
"""
import math

from apps.common.errors import EngineError, ValidationFailure

# absorbs float error in m * budget near .5 boundaries
_ROUNDING_SLACK = 1e-9


class MinimizerError(EngineError):
    """Base exception for minimization errors."""
    pass


class InfeasibleBudget(ValidationFailure):
    def __init__(self, budget, size, n_req, min_budget):
        self.budget = budget
        self.size = size
        self.n_req = n_req
        self.min_budget = min_budget
        super().__init__(
            f'InfeasibleBudget: budget {budget} keeps {size} test cases but {n_req} '
            f'requirements must be covered; minimum feasible budget is {min_budget:.6f}'
        )


class NoValidIndividual(MinimizerError):
    pass


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + _ROUNDING_SLACK))


def budget_size(m: int, budget: float) -> int:
    return round_half_up(m * budget)


def adequate_budget(corpus) -> float:
    """Smallest budget whose size equals the number of requirements."""
    if corpus.m == 0:
        raise MinimizerError('Empty corpus has no budget.')
    return (corpus.n_req - 0.5) / corpus.m


def checked_budget_size(corpus, budget: float) -> int:
    size = budget_size(corpus.m, budget)
    if size < corpus.n_req or size < 1:
        raise InfeasibleBudget(budget, size, corpus.n_req, max(adequate_budget(corpus), 0.0))
    return min(size, corpus.m)
