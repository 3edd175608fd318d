"""
Exact transportation simplex.

Balanced problems only: supply and demand must carry the same total mass.
The basis is kept as a spanning tree of n + m - 1 cells; potentials are
read off the tree, the entering cell is the most negative reduced cost
(Bland's rule once degenerate pivots start to repeat) and the leaving
cell closes the unique cycle through the tree.
"""
import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

from apps.common.errors import EngineError

logger = logging.getLogger(__name__)

REDUCED_COST_TOL = 1e-12


class TransportError(EngineError):
    pass


@dataclass(frozen=True, eq=False)
class TransportSolution:
    cost: float
    plan: np.ndarray
    u: np.ndarray
    v: np.ndarray
    pivots: int


def northwest_corner(supply, demand):
    """Initial basic feasible plan; returns (plan, basic cells)."""
    n, m = len(supply), len(demand)
    remaining_supply = np.array(supply, dtype=np.float64)
    remaining_demand = np.array(demand, dtype=np.float64)
    plan = np.zeros((n, m))
    basis = []
    i = j = 0
    while True:
        amount = min(remaining_supply[i], remaining_demand[j])
        plan[i, j] = amount
        basis.append((i, j))
        remaining_supply[i] -= amount
        remaining_demand[j] -= amount
        if i == n - 1 and j == m - 1:
            break
        # advance exactly one index so the basis stays a tree
        if j == m - 1:
            i += 1
        elif i == n - 1:
            j += 1
        elif remaining_supply[i] <= remaining_demand[j]:
            i += 1
        else:
            j += 1
    return plan, basis


def _potentials(cost, basis, n, m):
    rows = [[] for _ in range(n)]
    cols = [[] for _ in range(m)]
    for i, j in basis:
        rows[i].append(j)
        cols[j].append(i)

    u = np.full(n, np.nan)
    v = np.full(m, np.nan)
    u[0] = 0.0
    queue = deque([('row', 0)])
    while queue:
        kind, k = queue.popleft()
        if kind == 'row':
            for j in rows[k]:
                if np.isnan(v[j]):
                    v[j] = cost[k, j] - u[k]
                    queue.append(('col', j))
        else:
            for i in cols[k]:
                if np.isnan(u[i]):
                    u[i] = cost[i, k] - v[k]
                    queue.append(('row', i))
    if np.isnan(u).any() or np.isnan(v).any():
        raise TransportError('Basis is not a spanning tree.')
    return u, v


def _tree_path(basis, n, m, start_row, end_col):
    """Basic cells on the tree path from row ``start_row`` to column ``end_col``."""
    adjacency = [[] for _ in range(n + m)]
    for i, j in basis:
        adjacency[i].append(n + j)
        adjacency[n + j].append(i)

    parent = {start_row: None}
    queue = deque([start_row])
    target = n + end_col
    while queue:
        node = queue.popleft()
        if node == target:
            break
        for neighbour in adjacency[node]:
            if neighbour not in parent:
                parent[neighbour] = node
                queue.append(neighbour)
    if target not in parent:
        raise TransportError('Entering cell does not close a cycle.')

    cells = []
    node = target
    while parent[node] is not None:
        prev = parent[node]
        row, col = (prev, node - n) if prev < n else (node, prev - n)
        cells.append((row, col))
        node = prev
    # ordered from the entering column back to the entering row
    return cells


def transport_simplex(supply, demand, cost, max_pivots=None) -> TransportSolution:
    """
    Minimize ``sum(plan * cost)`` subject to row sums ``supply`` and
    column sums ``demand``. Returns the optimal plan and dual potentials.
    """
    supply = np.asarray(supply, dtype=np.float64)
    demand = np.asarray(demand, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    n, m = len(supply), len(demand)
    if n == 0 or m == 0:
        raise TransportError('Empty supply or demand.')
    if cost.shape != (n, m):
        raise TransportError(f'Cost matrix shape {cost.shape} does not match ({n}, {m}).')
    if (supply < 0).any() or (demand < 0).any():
        raise TransportError('Negative mass.')
    if not np.isclose(supply.sum(), demand.sum(), rtol=0, atol=1e-9):
        raise TransportError(f'Unbalanced problem: {supply.sum()} != {demand.sum()}.')
    # absorb rounding drift in the last demand entry
    demand = demand.copy()
    demand[-1] = max(0.0, demand[-1] + supply.sum() - demand.sum())

    plan, basis = northwest_corner(supply, demand)
    if max_pivots is None:
        max_pivots = 50 * (n + m) * n * m + 100

    bland = False
    degenerate_run = 0
    pivots = 0
    while True:
        u, v = _potentials(cost, basis, n, m)
        reduced = cost - u[:, None] - v[None, :]
        for i, j in basis:
            reduced[i, j] = 0.0

        if bland:
            candidates = np.flatnonzero(reduced.ravel() < -REDUCED_COST_TOL)
            if candidates.size == 0:
                break
            flat = int(candidates[0])
        else:
            flat = int(np.argmin(reduced))
            if reduced.flat[flat] >= -REDUCED_COST_TOL:
                break
        p, q = divmod(flat, m)

        path = _tree_path(basis, n, m, p, q)
        losing = path[0::2]
        gaining = path[1::2]
        theta = min(plan[c] for c in losing)
        tied = [c for c in losing if plan[c] == theta]
        leaving = min(tied) if bland else tied[0]

        plan[p, q] += theta
        for cell in losing:
            plan[cell] -= theta
        for cell in gaining:
            plan[cell] += theta
        plan[leaving] = 0.0
        basis.remove(leaving)
        basis.append((p, q))

        pivots += 1
        degenerate_run = degenerate_run + 1 if theta == 0 else 0
        if not bland and degenerate_run > n + m:
            bland = True
        if pivots > max_pivots:
            raise TransportError(f'No convergence after {pivots} pivots.')

    np.clip(plan, 0.0, None, out=plan)
    return TransportSolution(
        cost=float((plan * cost).sum()), plan=plan, u=u, v=v, pivots=pivots
    )


def certify_transport(cost, plan, u, v, supply=None, demand=None, support_tol=1e-12) -> float:
    """
    Largest optimality violation of a transport solution: dual
    infeasibility ``u_i + v_j - c_ij``, complementary slackness on cells
    carrying mass and, when the margins are given, primal feasibility.
    Zero (up to rounding) certifies an optimal plan.
    """
    cost = np.asarray(cost, dtype=np.float64)
    plan = np.asarray(plan, dtype=np.float64)
    slack = cost - np.asarray(u)[:, None] - np.asarray(v)[None, :]
    violation = max(0.0, float(-slack.min()))
    support = plan > support_tol
    if support.any():
        violation = max(violation, float(np.abs(slack[support]).max()))
    violation = max(violation, float(-plan.min()))
    if supply is not None:
        violation = max(violation, float(np.abs(plan.sum(axis=1) - supply).max()))
    if demand is not None:
        violation = max(violation, float(np.abs(plan.sum(axis=0) - demand).max()))
    return violation
