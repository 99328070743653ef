"""
库内统一的异常类型。

数值模块只抛出这里定义的异常；CLI 层负责把它们转换成 `SystemExit("Error: ...")`。
"""

from __future__ import annotations


class HbfError(Exception):
    """所有库内异常的基类。"""


class ConfigError(HbfError, ValueError):
    """配置缺失、类型错误或违反维度约束。"""

    def __init__(self, message: str, *, key: str = "") -> None:
        super().__init__(message)
        self.key = key


class DegenerateChannelError(HbfError):
    """用户信道秩不足，无法支撑 N_s 个数据流。"""

    def __init__(self, message: str, *, user: int) -> None:
        super().__init__(message)
        self.user = user


class NoUsableStreamError(HbfError):
    """注水时所有增益均为零。"""


class InfeasibleAssignmentError(HbfError):
    """代价矩阵行数少于列数，无法为每列选出不同的行。"""


class InvalidCostError(HbfError, ValueError):
    """代价矩阵含负数、NaN 或无穷。"""


class OracleTooLargeError(HbfError):
    """穷举校验器的输入维度超过阶乘保护上限。"""


class InfeasibleReallocationError(HbfError):
    """可迁移天线数不足以填满所有空 RF 链。"""


class ConstraintViolationError(HbfError):
    """模拟波束成形矩阵违反单位模、每行一个非零元或每列至少一个非零元约束。"""


class InterferenceUncancellableError(HbfError):
    """某用户的零空间为空，无法消除用户间干扰。"""

    def __init__(self, message: str, *, user: int) -> None:
        super().__init__(message)
        self.user = user


class DegenerateHybridError(HbfError):
    """第二阶段结束时某用户的 F_RF F_BBk 范数过小，无法按 P_k 归一化。"""

    def __init__(self, message: str, *, user: int) -> None:
        super().__init__(message)
        self.user = user


class DegenerateProjectionError(DegenerateHybridError):
    """投影后的数字波束成形矩阵范数过小，无法归一化。"""


class InvalidNoiseError(HbfError, ValueError):
    """噪声功率必须为正。"""


class ChannelFormatError(HbfError):
    """信道导出文件格式错误。"""

    def __init__(self, message: str, *, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class PlotInputError(HbfError):
    """绘图脚本输入的 CSV 格式错误。"""

    def __init__(self, message: str, *, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line
