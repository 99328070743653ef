"""
三阶段混合波束成形的端到端流程：

1) 全数字 SVD + 联合注水，得到目标 F̃_k、合并器 W_k 与功率 P_k；
2) 动态子阵列（或固定子阵列基线）交替最小化，得到 F_RF 与 F_BBk；
3) 零空间投影消除用户间干扰并重新归一化。
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .dynamic_hybrid import (
    DEFAULT_MAX_ITERS,
    DEFAULT_TOL,
    HybridSolution,
    alternate_stage2,
    fixed_subarray_stage2,
)
from .fully_digital import FullyDigitalSolution, svd_stage
from .nsp import project_digital
from .types import SystemConfig

METHODS = ("dynamic", "fixed", "fully_digital")


@dataclass(frozen=True, eq=False)
class Design:
    """一种方法在一次信道实现上的设计结果。"""

    method: str
    combiners: tuple[np.ndarray, ...]
    # 每用户整体波束成形矩阵（混合方法为 F_RF F_BBk）。
    beamformers: tuple[np.ndarray, ...]
    stage1: FullyDigitalSolution
    # 第二阶段结果（归一化后、投影前）与投影后结果；全数字方法为 None。
    stage2: HybridSolution | None = None
    hybrid: HybridSolution | None = None


def design_hybrid(
    channels: ChannelRealization,
    cfg: SystemConfig,
    *,
    method: str = "dynamic",
    rng: np.random.Generator,
    noise_power: float | None = None,
    stage1: FullyDigitalSolution | None = None,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    dynamic_init: str = "random",
) -> Design:
    """对一次信道实现运行指定方法；可传入已算好的第一阶段结果以便多方法复用。"""
    if method not in METHODS:
        raise ValueError(f"unknown method: {method} (expected one of {', '.join(METHODS)})")
    fd = stage1 if stage1 is not None else svd_stage(channels, cfg, noise_power=noise_power)

    if method == "fully_digital":
        return Design(
            method=method,
            combiners=fd.combiners,
            beamformers=fd.beamformers,
            stage1=fd,
        )

    if method == "dynamic":
        stage2 = alternate_stage2(
            fd.beamformers,
            fd.user_powers,
            cfg,
            tol=tol,
            max_iters=max_iters,
            rng=rng,
            init=dynamic_init,
        )
    else:
        stage2 = fixed_subarray_stage2(
            fd.beamformers, fd.user_powers, cfg, tol=tol, max_iters=max_iters, rng=rng
        )
    hybrid = project_digital(stage2, channels, fd.combiners, fd.user_powers)
    return Design(
        method=method,
        combiners=fd.combiners,
        beamformers=tuple(hybrid.overall()),
        stage1=fd,
        stage2=stage2,
        hybrid=hybrid,
    )
