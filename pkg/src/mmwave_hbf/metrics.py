"""
频谱效率评估。

R_k = log2 det(I + C_k^{-1} W_k^H H_k F_k F_k^H H_k^H W_k)，其中
C_k = W_k^H H_k (Σ_{i≠k} F_i F_i^H) H_k^H W_k + σ² W_k^H W_k 为干扰加噪声协方差。
行列式通过 Cholesky 分解计算：C = L L^H，R = log2 det(I + L^{-1} S L^{-H})。
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .channel import ChannelRealization
from .errors import InvalidNoiseError
from .types import SystemConfig, db_to_linear, dbm_to_watt


@dataclass(frozen=True)
class RateReport:
    """每用户频谱效率（bit/s/Hz）及其均值、总和，外加每用户收到的干扰功率。"""

    per_user_se: tuple[float, ...]
    mean_se: float
    sum_se: float
    iui_power: tuple[float, ...]


def _check_noise(noise_power: float) -> None:
    if not noise_power > 0:
        raise InvalidNoiseError(f"noise power must be positive, got {noise_power}")


def interference_plus_noise_cov(
    user: int,
    combiners: Sequence[np.ndarray],
    channels: ChannelRealization,
    beamformers: Sequence[np.ndarray],
    noise_power: float,
    *,
    include_interference: bool = True,
) -> np.ndarray:
    """用户 k 的干扰加噪声协方差 C_k（N_s x N_s）。"""
    _check_noise(noise_power)
    w = combiners[user]
    g = w.conj().T @ channels.per_user_matrix[user]
    c = noise_power * (w.conj().T @ w)
    if include_interference:
        for i, f in enumerate(beamformers):
            if i == user:
                continue
            x = g @ f
            c = c + x @ x.conj().T
    # 消除舍入带来的非厄米分量。
    return 0.5 * (c + c.conj().T)


def spectral_efficiency(
    user: int,
    combiners: Sequence[np.ndarray],
    channels: ChannelRealization,
    beamformers: Sequence[np.ndarray],
    noise_power: float,
    *,
    include_interference: bool = True,
) -> float:
    """用户 k 的可达频谱效率 R_k。"""
    c = interference_plus_noise_cov(
        user,
        combiners,
        channels,
        beamformers,
        noise_power,
        include_interference=include_interference,
    )
    w = combiners[user]
    x = w.conj().T @ channels.per_user_matrix[user] @ beamformers[user]
    low = linalg.cholesky(c, lower=True)
    y = linalg.solve_triangular(low, x, lower=True)
    m = np.eye(c.shape[0]) + y @ y.conj().T
    m = 0.5 * (m + m.conj().T)
    lm = linalg.cholesky(m, lower=True)
    rate = 2.0 * float(np.sum(np.log2(np.real(np.diag(lm)))))
    return max(0.0, rate)


def evaluate(
    channels: ChannelRealization,
    combiners: Sequence[np.ndarray],
    beamformers: Sequence[np.ndarray],
    noise_power: float,
    *,
    include_interference: bool = True,
) -> RateReport:
    """计算所有用户的频谱效率；include_interference=False 即无干扰口径。"""
    _check_noise(noise_power)
    k_users = len(beamformers)
    per_user = tuple(
        spectral_efficiency(
            k,
            combiners,
            channels,
            beamformers,
            noise_power,
            include_interference=include_interference,
        )
        for k in range(k_users)
    )
    iui: list[float] = []
    for k in range(k_users):
        g = combiners[k].conj().T @ channels.per_user_matrix[k]
        iui.append(
            float(sum(np.linalg.norm(g @ beamformers[i]) ** 2 for i in range(k_users) if i != k))
        )
    total = float(sum(per_user))
    return RateReport(
        per_user_se=per_user,
        mean_se=total / k_users,
        sum_se=total,
        iui_power=tuple(iui),
    )


def received_power(cfg: SystemConfig, channels: ChannelRealization) -> float:
    """各向同性发射下每根接收天线的平均接收功率 (P/N_T)·(1/K)Σ‖H_k‖²/N_R。"""
    energy = sum(float(np.linalg.norm(h) ** 2) for h in channels.per_user_matrix)
    return cfg.total_power_w / cfg.n_tx * energy / (channels.n_users * cfg.n_rx)


def resolve_noise_power(cfg: SystemConfig, channels: ChannelRealization) -> float:
    """按配置得到噪声功率 σ²（瓦）。"""
    if cfg.noise_power_dbm is not None:
        return dbm_to_watt(cfg.noise_power_dbm)
    assert cfg.target_snr_db is not None
    snr = db_to_linear(cfg.target_snr_db)
    if cfg.snr_mode == "rx_power":
        sigma2 = received_power(cfg, channels) / snr
    else:
        sigma2 = cfg.total_power_w / snr
    _check_noise(sigma2)
    return sigma2
