import numpy as np
import pytest

from mmwave_hbf.assignment import (
    AssignmentProblem,
    brute_force_assignment,
    solve_unbalanced,
)
from mmwave_hbf.errors import InfeasibleAssignmentError, InvalidCostError, OracleTooLargeError


def _solve(cost) -> tuple[tuple[int, ...], float]:
    r = solve_unbalanced(AssignmentProblem(np.asarray(cost, dtype=float)))
    return r.row_of_column, r.total_cost


def test_single_entry() -> None:
    assert _solve([[0.0]]) == ((0,), 0.0)


def test_three_by_two_example() -> None:
    rows, cost = _solve([[1, 2], [3, 0], [5, 4]])
    assert rows == (0, 1)
    assert cost == 1.0


def test_brute_force_examples() -> None:
    assert brute_force_assignment(AssignmentProblem(np.array([[0.0]]))).total_cost == 0.0
    r = brute_force_assignment(AssignmentProblem(np.array([[1.0, 2.0], [3.0, 0.0], [5.0, 4.0]])))
    assert r.total_cost == 1.0
    assert r.row_of_column == (0, 1)


def test_square_with_zero_diagonal() -> None:
    cost = np.ones((4, 4)) * 5.0
    np.fill_diagonal(cost, 0.0)
    rows, total = _solve(cost)
    assert rows == (0, 1, 2, 3)
    assert total == 0.0
    assert brute_force_assignment(AssignmentProblem(cost)).row_of_column == (0, 1, 2, 3)


def test_empty_column_set() -> None:
    assert _solve(np.zeros((3, 0))) == ((), 0.0)


def test_matches_brute_force_on_integer_5x3() -> None:
    rng = np.random.default_rng(0)
    for _ in range(1000):
        cost = rng.integers(0, 10, (5, 3)).astype(float)
        got = solve_unbalanced(AssignmentProblem(cost))
        ref = brute_force_assignment(AssignmentProblem(cost))
        assert got.total_cost == ref.total_cost
        # 并列最优时两者都取字典序最小的行号向量。
        assert got.row_of_column == ref.row_of_column


def test_matches_brute_force_up_to_8x4() -> None:
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(n, 9))
        cost = rng.uniform(0.0, 3.0, (m, n))
        got = solve_unbalanced(AssignmentProblem(cost))
        ref = brute_force_assignment(AssignmentProblem(cost))
        assert got.total_cost == ref.total_cost
        assert len(set(got.row_of_column)) == n


def test_result_rows_are_distinct_and_in_range() -> None:
    rng = np.random.default_rng(2)
    cost = rng.uniform(0.0, 1.0, (12, 5))
    rows, total = _solve(cost)
    assert len(set(rows)) == 5
    assert all(0 <= r < 12 for r in rows)
    assert total == sum(cost[r, j] for j, r in enumerate(rows))


def test_uniform_shift_keeps_assignment() -> None:
    rng = np.random.default_rng(3)
    cost = rng.uniform(0.0, 1.0, (4, 4))
    rows, total = _solve(cost)
    shifted = cost + 2.0
    rows2, total2 = _solve(shifted)
    assert rows2 == rows
    assert abs(total2 - (total + 8.0)) < 1e-12


def test_column_shift_keeps_assignment() -> None:
    rng = np.random.default_rng(4)
    for _ in range(50):
        cost = rng.uniform(0.0, 1.0, (7, 3))
        rows, total = _solve(cost)
        j = int(rng.integers(0, 3))
        shifted = cost.copy()
        shifted[:, j] += 5.0
        rows2, total2 = _solve(shifted)
        assert rows2 == rows
        assert abs(total2 - (total + 5.0)) < 1e-12


def test_row_permutation_permutes_solution() -> None:
    rng = np.random.default_rng(5)
    for _ in range(50):
        cost = rng.uniform(0.0, 1.0, (8, 4))
        rows, total = _solve(cost)
        perm = rng.permutation(8)
        # 新矩阵第 i 行是原矩阵第 perm[i] 行。
        new_index = np.argsort(perm)
        rows2, total2 = _solve(cost[perm])
        assert rows2 == tuple(int(new_index[r]) for r in rows)
        assert abs(total2 - total) < 1e-12


def test_ties_resolved_to_smallest_rows_on_large_matrix() -> None:
    cost = np.zeros((40, 6))
    rows, total = _solve(cost)
    assert rows == (0, 1, 2, 3, 4, 5)
    assert total == 0.0

    cost = np.ones((30, 3))
    cost[[4, 9, 20, 25], :] = 0.0
    rows, _total = _solve(cost)
    assert rows == (4, 9, 20)


def test_rejects_invalid_costs() -> None:
    with pytest.raises(InvalidCostError):
        _solve([[-1.0]])
    with pytest.raises(InvalidCostError):
        _solve([[np.nan, 1.0], [1.0, 1.0]])
    with pytest.raises(InfeasibleAssignmentError):
        _solve([[1.0, 2.0]])


def test_brute_force_size_guard() -> None:
    with pytest.raises(OracleTooLargeError):
        brute_force_assignment(AssignmentProblem(np.zeros((11, 2))))
