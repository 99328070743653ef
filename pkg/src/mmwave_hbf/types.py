"""
各模块共享的轻量配置类型。
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

SNR_MODES = ("tx_power", "rx_power")


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """系统维度与物理参数。"""

    n_tx: int
    n_rf: int
    n_rx: int
    n_users: int
    n_streams: int
    total_power_dbm: float = 30.0
    # 两者必须恰好设置一个。
    noise_power_dbm: float | None = None
    target_snr_db: float | None = None
    carrier_hz: float = 28e9
    antenna_spacing_wavelengths: float = 0.5
    # `tx_power`：σ² = P / SNR；`rx_power`：σ² = P_rx / SNR（按实际信道计算 P_rx）。
    snr_mode: str = "tx_power"

    def __post_init__(self) -> None:
        for key in ("n_tx", "n_rf", "n_rx", "n_users", "n_streams"):
            value = getattr(self, key)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{key} must be a positive integer, got {value!r}", key=key)
        if self.n_users * self.n_streams > self.n_rf:
            raise ConfigError(
                f"n_users * n_streams must not exceed n_rf "
                f"({self.n_users} * {self.n_streams} > {self.n_rf})",
                key="n_users",
            )
        if self.n_rf > self.n_tx:
            raise ConfigError(f"n_rf must not exceed n_tx ({self.n_rf} > {self.n_tx})", key="n_rf")
        if self.n_streams > self.n_rx:
            raise ConfigError(
                f"n_streams must not exceed n_rx ({self.n_streams} > {self.n_rx})",
                key="n_streams",
            )
        if (self.noise_power_dbm is None) == (self.target_snr_db is None):
            raise ConfigError(
                "exactly one of noise_power_dbm and target_snr_db must be set",
                key="noise_power_dbm" if self.noise_power_dbm is not None else "target_snr_db",
            )
        if self.snr_mode not in SNR_MODES:
            raise ConfigError(
                f"snr_mode must be one of {', '.join(SNR_MODES)}, got {self.snr_mode!r}",
                key="snr_mode",
            )
        if not self.antenna_spacing_wavelengths > 0:
            raise ConfigError("antenna_spacing must be positive", key="antenna_spacing")

    @property
    def total_power_w(self) -> float:
        return dbm_to_watt(self.total_power_dbm)

    @property
    def n_total_streams(self) -> int:
        return self.n_users * self.n_streams


@dataclass(frozen=True)
class ClusterChannelParams:
    """单个用户的簇信道参数。"""

    n_clusters: int = 6
    n_rays: int = 15
    # 拉普拉斯分布的标准差（弧度）。
    angular_spread_rad: float = math.radians(10.0)
    path_loss_linear: float = 1.0
    mean_angle_range: tuple[float, float] = (0.0, 2.0 * math.pi)

    def __post_init__(self) -> None:
        if self.n_clusters < 1:
            raise ConfigError("n_clusters must be >= 1", key="n_clusters")
        if self.n_rays < 1:
            raise ConfigError("n_rays must be >= 1", key="n_rays")
        if not self.angular_spread_rad >= 0:
            raise ConfigError("angular spread must be >= 0", key="angular_spread_deg")
        # 允许 ρ = 0（退化的全零信道）；配置层要求 ρ > 0。
        if not self.path_loss_linear >= 0 or math.isinf(self.path_loss_linear):
            raise ConfigError("path loss must be finite and >= 0", key="path_loss")
        lo, hi = self.mean_angle_range
        if not lo <= hi:
            raise ConfigError("mean angle range must satisfy min <= max", key="mean_angle_min_deg")
