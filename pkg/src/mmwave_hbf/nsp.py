"""
第三阶段：零空间投影（NSP）消除用户间干扰。

对用户 k，把其余用户的等效信道 W_i^H H_i F_RF 按用户顺序纵向堆叠，
求其零空间的正交基 B_k，再把 F_BBk 投影到 span(B_k) 上并重新按 P_k 归一化。
模拟波束成形矩阵保持不变。
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelRealization
from .dynamic_hybrid import AnalogBeamformer, HybridSolution, normalize_digitals
from .errors import DegenerateProjectionError, InterferenceUncancellableError

# 奇异值低于 NULL_TOL·σ_max 视为零。
NULL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EquivalentChannelStack:
    """每个用户的等效信道，以及对每个 k 去掉第 k 块后的堆叠矩阵。"""

    per_user_equivalent: tuple[np.ndarray, ...]
    stacked_excluding: tuple[np.ndarray, ...]


def equivalent_channels(
    channels: ChannelRealization,
    combiners: Sequence[np.ndarray],
    analog: AnalogBeamformer,
) -> EquivalentChannelStack:
    """H_eq,i = W_i^H H_i F_RF，以及各用户的 H̃_eq,k。"""
    eq = tuple(
        w.conj().T @ h @ analog.matrix for w, h in zip(combiners, channels.per_user_matrix)
    )
    n_rf = analog.n_rf
    stacked: list[np.ndarray] = []
    for k in range(len(eq)):
        others = [eq[i] for i in range(len(eq)) if i != k]
        stacked.append(np.vstack(others) if others else np.zeros((0, n_rf), dtype=complex))
    return EquivalentChannelStack(per_user_equivalent=eq, stacked_excluding=tuple(stacked))


def null_space_basis(mat: np.ndarray, tol: float = NULL_TOL) -> np.ndarray:
    """返回 mat 零空间的正交基（按列），维数为列数减去数值秩。"""
    a = np.asarray(mat, dtype=complex)
    cols = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(cols, dtype=complex)
    _u, s, vh = np.linalg.svd(a, full_matrices=True)
    if s.size == 0 or s[0] == 0:
        return np.eye(cols, dtype=complex)
    rank = int(np.sum(s > tol * s[0]))
    return vh[rank:].conj().T


def projector(basis: np.ndarray) -> np.ndarray:
    """Q = B (B^H B)^{-1} B^H。"""
    gram = basis.conj().T @ basis
    return basis @ np.linalg.solve(gram, basis.conj().T)


def project_digital(
    solution: HybridSolution,
    channels: ChannelRealization,
    combiners: Sequence[np.ndarray],
    user_powers: Sequence[float],
    *,
    tol: float = NULL_TOL,
) -> HybridSolution:
    """把每个用户的数字波束成形矩阵投影到其余用户等效信道的零空间并重新归一化。"""
    stack = equivalent_channels(channels, combiners, solution.analog)
    projected: list[np.ndarray] = []
    for k, (h_tilde, d) in enumerate(zip(stack.stacked_excluding, solution.digital)):
        basis = null_space_basis(h_tilde, tol)
        if basis.shape[1] == 0:
            raise InterferenceUncancellableError(
                f"null space of the other users' equivalent channels is empty for user {k}",
                user=k,
            )
        projected.append(projector(basis) @ d)
    digital = normalize_digitals(
        solution.analog, projected, user_powers, error=DegenerateProjectionError
    )
    return replace(solution, digital=digital)
