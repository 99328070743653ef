"""
第一阶段：假设无用户间干扰时的全数字波束成形。

对每个用户信道做 SVD，取前 N_s 个右/左奇异向量作为波束成形器/合并器，
再在全部 K·N_s 个数据流上做联合注水功率分配，使总功率恰为 P。
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .errors import DegenerateChannelError, InvalidNoiseError, NoUsableStreamError
from .metrics import resolve_noise_power
from .types import SystemConfig

# 奇异值低于 RANK_TOL·σ_max 视为零。
RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class FullyDigitalSolution:
    """第一阶段输出。"""

    beamformers: tuple[np.ndarray, ...]
    combiners: tuple[np.ndarray, ...]
    stream_powers: tuple[np.ndarray, ...]
    user_powers: tuple[float, ...]
    singular_values: tuple[np.ndarray, ...]
    noise_power: float
    water_level: float


def _waterfill(
    gains: np.ndarray, total_power: float, noise_power: float
) -> tuple[np.ndarray, float]:
    g = np.asarray(gains, dtype=float).ravel()
    if not total_power > 0:
        raise ValueError(f"total power must be positive, got {total_power}")
    if not noise_power > 0:
        raise InvalidNoiseError(f"noise power must be positive, got {noise_power}")
    if np.any(~np.isfinite(g)) or np.any(g < 0):
        raise ValueError("gains must be finite and nonnegative")

    active = np.flatnonzero(g > 0)
    if active.size == 0:
        raise NoUsableStreamError("all stream gains are zero")

    order = active[np.argsort(-g[active], kind="stable")]
    floor = noise_power / g[order]

    # 从全部激活开始，逐个剔除最弱的流，直到最弱流的功率为正。
    n = order.size
    mu = (total_power + float(np.sum(floor[:n]))) / n
    while n > 1 and mu <= floor[n - 1]:
        n -= 1
        mu = (total_power + float(np.sum(floor[:n]))) / n

    p = np.zeros_like(g)
    p[order[:n]] = mu - floor[:n]
    return p, mu


def waterfill(gains: np.ndarray, total_power: float, noise_power: float) -> np.ndarray:
    """注水功率分配：p_i = max(0, μ − σ²/g_i)，Σ p_i = total_power。"""
    p, _mu = _waterfill(gains, total_power, noise_power)
    return p


def _fix_phase(v: np.ndarray, u: np.ndarray) -> None:
    """使每个右奇异向量中模最大的元素为正实数；左奇异向量同步旋转。"""
    for i in range(v.shape[1]):
        idx = int(np.argmax(np.abs(v[:, i])))
        pivot = v[idx, i]
        rot = np.conj(pivot) / abs(pivot)
        v[:, i] *= rot
        u[:, i] *= rot


def svd_stage(
    channels: ChannelRealization,
    cfg: SystemConfig,
    *,
    noise_power: float | None = None,
) -> FullyDigitalSolution:
    """按 SVD + 联合注水求每个用户的最优全数字波束成形器与合并器。"""
    if channels.n_users != cfg.n_users or channels.n_rx != cfg.n_rx or channels.n_tx != cfg.n_tx:
        raise ValueError(
            f"channel dimensions (K={channels.n_users}, N_R={channels.n_rx}, "
            f"N_T={channels.n_tx}) do not match configuration"
        )
    sigma2 = resolve_noise_power(cfg, channels) if noise_power is None else noise_power
    ns = cfg.n_streams

    v_list: list[np.ndarray] = []
    u_list: list[np.ndarray] = []
    s_list: list[np.ndarray] = []
    for k, h in enumerate(channels.per_user_matrix):
        u, s, vh = np.linalg.svd(h, full_matrices=False)
        if s.size < ns or s[0] <= 0 or s[ns - 1] <= RANK_TOL * s[0]:
            raise DegenerateChannelError(
                f"channel of user {k} has rank below {ns} streams", user=k
            )
        v_s = vh[:ns].conj().T.copy()
        u_s = u[:, :ns].copy()
        _fix_phase(v_s, u_s)
        v_list.append(v_s)
        u_list.append(u_s)
        s_list.append(s[:ns].copy())

    gains = np.concatenate([s**2 for s in s_list])
    p_all, mu = _waterfill(gains, cfg.total_power_w, sigma2)
    stream_powers = tuple(p_all[k * ns : (k + 1) * ns].copy() for k in range(cfg.n_users))

    beamformers = tuple(v * np.sqrt(p)[None, :] for v, p in zip(v_list, stream_powers))
    return FullyDigitalSolution(
        beamformers=beamformers,
        combiners=tuple(u_list),
        stream_powers=stream_powers,
        user_powers=tuple(float(np.sum(p)) for p in stream_powers),
        singular_values=tuple(s_list),
        noise_power=float(sigma2),
        water_level=float(mu),
    )
