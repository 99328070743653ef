"""
窄带毫米波簇信道生成。

每个用户的信道由若干簇、每簇若干射线叠加而成：

    H_k = sqrt(N_T N_R ρ_k / (N_c N_ray)) Σ_c Σ_r α_cr a_r(θ_cr) a_t(φ_cr)^H

阵列采用均匀线阵（ULA），簇内角度在簇均值附近按拉普拉斯分布扩展。
生成时保留全部射线参数，便于复现和导出。
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .types import ClusterChannelParams, SystemConfig

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True, eq=False)
class UserRays:
    """单个用户的射线记录：复增益、离开角（AoD）与到达角（AoA）。"""

    path_loss_linear: float
    # 以下三个数组形状均为 (n_clusters, n_rays)。
    gains: np.ndarray
    aod: np.ndarray
    aoa: np.ndarray

    @property
    def n_clusters(self) -> int:
        return int(self.gains.shape[0])

    @property
    def n_rays(self) -> int:
        return int(self.gains.shape[1])


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """一次信道实现：K 个 N_R x N_T 复矩阵及其射线参数。"""

    per_user_matrix: tuple[np.ndarray, ...]
    per_user_rays: tuple[UserRays, ...]
    antenna_spacing: float = 0.5
    seed: int | None = None

    @property
    def n_users(self) -> int:
        return len(self.per_user_matrix)

    @property
    def n_rx(self) -> int:
        return int(self.per_user_matrix[0].shape[0])

    @property
    def n_tx(self) -> int:
        return int(self.per_user_matrix[0].shape[1])


def array_response(
    n_antennas: int, angle_rad: float, spacing_wavelengths: float = 0.5
) -> np.ndarray:
    """ULA 归一化阵列响应向量 (1/√N)[1, e^{j2πd sinθ}, ...]。"""
    if n_antennas < 1:
        raise ConfigError(f"n_antennas must be >= 1, got {n_antennas}", key="n_antennas")
    n = np.arange(n_antennas)
    phase = 2.0 * np.pi * spacing_wavelengths * math.sin(angle_rad) * n
    return np.exp(1j * phase) / math.sqrt(n_antennas)


def array_response_matrix(
    n_antennas: int,
    angles_rad: np.ndarray,
    spacing_wavelengths: float = 0.5,
) -> np.ndarray:
    """按列堆叠多个角度的阵列响应，返回 N x L 矩阵。"""
    angles = np.asarray(angles_rad, dtype=float).ravel()
    n = np.arange(n_antennas)[:, None]
    phase = 2.0 * np.pi * spacing_wavelengths * n * np.sin(angles)[None, :]
    return np.exp(1j * phase) / math.sqrt(n_antennas)


def reconstruct_matrix(
    rays: UserRays,
    n_rx: int,
    n_tx: int,
    spacing_wavelengths: float = 0.5,
) -> np.ndarray:
    """由射线参数重建信道矩阵 H_k。"""
    scale = math.sqrt(n_tx * n_rx * rays.path_loss_linear / (rays.n_clusters * rays.n_rays))
    a_r = array_response_matrix(n_rx, rays.aoa, spacing_wavelengths)
    a_t = array_response_matrix(n_tx, rays.aod, spacing_wavelengths)
    return scale * (a_r * rays.gains.ravel()[None, :]) @ a_t.conj().T


def _complex_normal(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    # 实部与虚部独立同分布于 N(0, 1/2)。
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * math.sqrt(0.5)


def _draw_user_rays(params: ClusterChannelParams, rng: np.random.Generator) -> UserRays:
    shape = (params.n_clusters, params.n_rays)
    lo, hi = params.mean_angle_range
    aod_mean = rng.uniform(lo, hi, params.n_clusters)
    aoa_mean = rng.uniform(lo, hi, params.n_clusters)
    # 标准差为 s 的拉普拉斯分布，尺度参数 b = s / √2。
    b = params.angular_spread_rad / math.sqrt(2.0)
    aod = aod_mean[:, None] + rng.laplace(0.0, b, shape)
    aoa = aoa_mean[:, None] + rng.laplace(0.0, b, shape)
    gains = _complex_normal(rng, shape)
    return UserRays(path_loss_linear=params.path_loss_linear, gains=gains, aod=aod, aoa=aoa)


def generate_channel(
    cfg: SystemConfig,
    params: ClusterChannelParams | Sequence[ClusterChannelParams],
    rng: np.random.Generator,
    *,
    seed: int | None = None,
) -> ChannelRealization:
    """按簇信道模型为 K 个用户生成一次信道实现。"""
    per_user = [params] * cfg.n_users if isinstance(params, ClusterChannelParams) else list(params)
    if len(per_user) != cfg.n_users:
        raise ConfigError(
            f"expected {cfg.n_users} per-user channel parameter sets, got {len(per_user)}",
            key="n_users",
        )

    spacing = cfg.antenna_spacing_wavelengths
    rays: list[UserRays] = []
    mats: list[np.ndarray] = []
    for p in per_user:
        r = _draw_user_rays(p, rng)
        rays.append(r)
        mats.append(reconstruct_matrix(r, cfg.n_rx, cfg.n_tx, spacing))
    return ChannelRealization(
        per_user_matrix=tuple(mats),
        per_user_rays=tuple(rays),
        antenna_spacing=spacing,
        seed=seed,
    )


def free_space_reference_loss_db(carrier_hz: float, reference_distance_m: float = 1.0) -> float:
    """参考距离处的自由空间路径损耗（dB）。"""
    return 20.0 * math.log10(4.0 * math.pi * reference_distance_m * carrier_hz / SPEED_OF_LIGHT)


@dataclass(frozen=True)
class PathLossModel:
    """对数距离路径损耗模型；用户距离在 (0, cell_radius] 上均匀分布。"""

    exponent: float = 2.0
    reference_loss_db: float = 61.4
    cell_radius_m: float = 40.0
    reference_distance_m: float = 1.0

    def loss_db(self, distance_m: float) -> float:
        return self.reference_loss_db + 10.0 * self.exponent * math.log10(
            distance_m / self.reference_distance_m
        )

    def sample(self, rng: np.random.Generator) -> float:
        """抽取一个用户距离并返回线性路径增益 ρ_k。"""
        # 1 - U 落在 (0, 1]，保证距离严格为正。
        distance = self.cell_radius_m * (1.0 - rng.random())
        return 10.0 ** (-self.loss_db(distance) / 10.0)


def draw_user_params(
    cfg: SystemConfig,
    base: ClusterChannelParams,
    path_loss: PathLossModel | None,
    rng: np.random.Generator,
) -> list[ClusterChannelParams]:
    """为每个用户生成信道参数；未配置路径损耗模型时 ρ_k 保持不变。"""
    if path_loss is None:
        return [base] * cfg.n_users
    return [replace(base, path_loss_linear=path_loss.sample(rng)) for _ in range(cfg.n_users)]
