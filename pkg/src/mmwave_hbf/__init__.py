"""
`mmwave-hbf` 包入口。

毫米波多用户 MIMO 的动态子阵列混合波束成形：全数字 SVD/注水、KM 辅助的天线重分配、
零空间投影消除用户间干扰，以及可复现的蒙特卡洛仿真器。
"""

from .channel import ChannelRealization, generate_channel
from .errors import HbfError
from .pipeline import METHODS, Design, design_hybrid
from .types import ClusterChannelParams, SystemConfig

__all__ = [
    "METHODS",
    "ChannelRealization",
    "ClusterChannelParams",
    "Design",
    "HbfError",
    "SystemConfig",
    "design_hybrid",
    "generate_channel",
]
