"""
非平衡最小代价指派：代价矩阵 M 行 N 列（M >= N），每列选一个元素且所选元素互不同行，
使总和最小。

最优值由 scipy 的 linear_sum_assignment 求得。多个最优解并存时返回行号向量字典序最小的
那个，便于复现：逐列尝试更小的行号并最优补全其余列，用对偶势剪去不可能最优的位置。
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse.csgraph import csgraph_from_dense, shortest_path

from .errors import InfeasibleAssignmentError, InvalidCostError, OracleTooLargeError

# 穷举校验器允许的最大行数。
BRUTE_FORCE_MAX_ROWS = 10


@dataclass(frozen=True, eq=False)
class AssignmentProblem:
    """非负代价矩阵 G（M x N）。"""

    cost: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return int(self.cost.shape[0]), int(self.cost.shape[1])


@dataclass(frozen=True)
class AssignmentResult:
    """每列对应的行号（0 起始）与总代价。"""

    row_of_column: tuple[int, ...]
    total_cost: float


def _validated_cost(problem: AssignmentProblem) -> np.ndarray:
    cost = np.asarray(problem.cost, dtype=float)
    if cost.ndim != 2:
        raise InvalidCostError(f"cost matrix must be 2-D, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise InvalidCostError("cost matrix contains NaN or infinite entries")
    if np.any(cost < 0):
        raise InvalidCostError("cost matrix contains negative entries")
    m, n = cost.shape
    if m < n:
        raise InfeasibleAssignmentError(f"need at least as many rows as columns ({m} < {n})")
    return cost


def _total(cost: np.ndarray, rows: list[int] | tuple[int, ...]) -> float:
    return float(sum(float(cost[r, j]) for j, r in enumerate(rows)))


def _rows_of_columns(cost: np.ndarray) -> list[int]:
    """linear_sum_assignment 的结果整理成每列对应的行号。"""
    rows, cols = linear_sum_assignment(cost)
    out = [0] * cost.shape[1]
    for r, c in zip(rows, cols):
        out[int(c)] = int(r)
    return out


def _reduced_costs(cost: np.ndarray, rows: list[int], slack: float) -> np.ndarray:
    """
    由一个最优指派求满足互补松弛的对偶势，返回约化代价矩阵。

    先用零代价虚列补成 M x M，在残量图上从虚拟源点求最短路：
    非匹配边 列 j -> 行 r 权重 c[r, j] + slack，匹配边 行 r -> 列 j 权重 -c[r, j]，
    源点只连向各行。slack 使浮点舍入下不出现负环，约化代价因此最多偏低 slack。
    """
    m, n = cost.shape
    square = np.zeros((m, m))
    square[:, :n] = cost
    taken = set(rows)
    col_row = list(rows) + [r for r in range(m) if r not in taken]

    # 节点：0..m-1 为行，m..2m-1 为列，2m 为源点。
    size = 2 * m + 1
    graph = np.full((size, size), np.inf)
    graph[m : 2 * m, :m] = square.T + slack
    for j, r in enumerate(col_row):
        graph[m + j, r] = np.inf
        graph[r, m + j] = -square[r, j]
    graph[2 * m, :m] = 0.0
    dist = shortest_path(
        csgraph_from_dense(graph, null_value=np.inf), method="BF", indices=2 * m
    )
    return cost + dist[m : m + n][None, :] - dist[:m][:, None]


def _complete_prefix(cost: np.ndarray, prefix: list[int]) -> list[int]:
    """固定前若干列的行号后，最优地补全其余列。"""
    m, n = cost.shape
    start = len(prefix)
    if start == n:
        return list(prefix)
    taken = set(prefix)
    avail = [r for r in range(m) if r not in taken]
    sub = cost[np.ix_(avail, list(range(start, n)))]
    sub_rows = _rows_of_columns(sub)
    return list(prefix) + [avail[r] for r in sub_rows]


def solve_unbalanced(problem: AssignmentProblem) -> AssignmentResult:
    """精确求解非平衡指派问题；并列最优时取字典序最小的行号向量。"""
    cost = _validated_cost(problem)
    m, n = cost.shape
    if n == 0:
        return AssignmentResult(row_of_column=(), total_cost=0.0)

    current = _rows_of_columns(cost)
    best = _total(cost, current)
    tol = 1e-10 * max(1.0, abs(best))
    slack = 1e-12 * max(1.0, float(np.max(cost)))
    # 约化代价超过 bound 的位置不会出现在任何最优解中。
    reduced = _reduced_costs(cost, current, slack)
    bound = tol + m * slack

    used: set[int] = set()
    for j in range(n):
        for r in range(current[j]):
            if r in used or reduced[r, j] > bound:
                continue
            cand = _complete_prefix(cost, current[:j] + [r])
            if _total(cost, cand) <= best + tol:
                current = cand
                break
        used.add(current[j])

    return AssignmentResult(row_of_column=tuple(current), total_cost=_total(cost, current))


def brute_force_assignment(problem: AssignmentProblem) -> AssignmentResult:
    """穷举所有单射的精确解，仅用于校验（M <= 10）。"""
    cost = _validated_cost(problem)
    m, n = cost.shape
    if m > BRUTE_FORCE_MAX_ROWS:
        raise OracleTooLargeError(
            f"brute force limited to {BRUTE_FORCE_MAX_ROWS} rows, got {m}"
        )
    if n == 0:
        return AssignmentResult(row_of_column=(), total_cost=0.0)

    best = min(_total(cost, rows) for rows in itertools.permutations(range(m), n))
    tol = 1e-10 * max(1.0, abs(best))
    # permutations 按字典序生成，第一个满足条件的即为字典序最小的最优解。
    for rows in itertools.permutations(range(m), n):
        total = _total(cost, rows)
        if total <= best + tol:
            return AssignmentResult(row_of_column=tuple(rows), total_cost=total)
    raise AssertionError("unreachable")
