"""
信道实现的导出、导入与只读查看。

文件为逐行文本格式，便于跨实现回放同一组试验：

    # mmwave-hbf channel v1
    seed = 7
    users = 2
    n_rx = 4
    n_tx = 64
    spacing = 0.5
    user = 0
    path_loss = 1
    clusters = 6
    rays = 15
    ray = <c> <r> <gain_re> <gain_im> <aod> <aoa>
    ...
    row = <re> <im> <re> <im> ...      （每行 N_T 个复数，行优先）
    ...
    end

浮点数统一以 17 位有效数字输出，保证往返无损。
"""

from __future__ import annotations

import os
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, UserRays
from .errors import ChannelFormatError

MAGIC = "# mmwave-hbf channel v1"


def _f(x: float) -> str:
    return format(float(x), ".17g")


def dump_channel(realization: ChannelRealization) -> str:
    """将信道实现序列化为文本。"""
    lines = [MAGIC]
    seed = realization.seed
    lines.append(f"seed = {seed if seed is not None else 'none'}")
    lines.append(f"users = {realization.n_users}")
    lines.append(f"n_rx = {realization.n_rx}")
    lines.append(f"n_tx = {realization.n_tx}")
    lines.append(f"spacing = {_f(realization.antenna_spacing)}")
    for k, (h, rays) in enumerate(zip(realization.per_user_matrix, realization.per_user_rays)):
        lines.append(f"user = {k}")
        lines.append(f"path_loss = {_f(rays.path_loss_linear)}")
        lines.append(f"clusters = {rays.n_clusters}")
        lines.append(f"rays = {rays.n_rays}")
        for c in range(rays.n_clusters):
            for r in range(rays.n_rays):
                g = rays.gains[c, r]
                lines.append(
                    f"ray = {c} {r} {_f(g.real)} {_f(g.imag)} "
                    f"{_f(rays.aod[c, r])} {_f(rays.aoa[c, r])}"
                )
        for row in h:
            vals = " ".join(f"{_f(z.real)} {_f(z.imag)}" for z in row)
            lines.append(f"row = {vals}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_channel(path: str, realization: ChannelRealization) -> None:
    """写出信道实现文件。"""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(dump_channel(realization))


class _Lines:
    """带行号的顺序读取器。"""

    def __init__(self, text: str) -> None:
        self._it: Iterator[tuple[int, str]] = (
            (i, line.strip()) for i, line in enumerate(text.splitlines(), start=1)
        )
        self.line = 0

    def next_raw(self) -> str:
        for i, line in self._it:
            self.line = i
            if line:
                return line
        raise ChannelFormatError("unexpected end of file", line=self.line + 1)

    def expect(self, key: str) -> str:
        raw = self.next_raw()
        if "=" not in raw:
            raise ChannelFormatError(f"expected '{key} = ...', got: {raw}", line=self.line)
        k, v = raw.split("=", 1)
        if k.strip() != key:
            raise ChannelFormatError(f"expected key {key!r}, got {k.strip()!r}", line=self.line)
        return v.strip()

    def expect_int(self, key: str) -> int:
        v = self.expect(key)
        try:
            return int(v)
        except ValueError as e:
            raise ChannelFormatError(f"invalid integer for {key}: {v}", line=self.line) from e

    def expect_floats(self, key: str, count: int) -> list[float]:
        v = self.expect(key)
        parts = v.split()
        if len(parts) != count:
            raise ChannelFormatError(
                f"expected {count} values for {key}, got {len(parts)}", line=self.line
            )
        try:
            return [float(x) for x in parts]
        except ValueError as e:
            raise ChannelFormatError(f"invalid number in {key}: {e}", line=self.line) from e


def parse_channel(text: str) -> ChannelRealization:
    """解析 `dump_channel` 产生的文本。"""
    rd = _Lines(text)
    if rd.next_raw() != MAGIC:
        raise ChannelFormatError("missing channel header", line=rd.line)

    raw_seed = rd.expect("seed")
    try:
        seed = None if raw_seed == "none" else int(raw_seed)
    except ValueError as e:
        raise ChannelFormatError(f"invalid seed: {raw_seed}", line=rd.line) from e
    n_users = rd.expect_int("users")
    n_rx = rd.expect_int("n_rx")
    n_tx = rd.expect_int("n_tx")
    spacing = rd.expect_floats("spacing", 1)[0]
    if n_users < 1 or n_rx < 1 or n_tx < 1:
        raise ChannelFormatError("dimensions must be positive", line=rd.line)

    mats: list[np.ndarray] = []
    rays: list[UserRays] = []
    for k in range(n_users):
        if rd.expect_int("user") != k:
            raise ChannelFormatError(f"expected user {k}", line=rd.line)
        path_loss = rd.expect_floats("path_loss", 1)[0]
        n_c = rd.expect_int("clusters")
        n_r = rd.expect_int("rays")
        gains = np.zeros((n_c, n_r), dtype=complex)
        aod = np.zeros((n_c, n_r))
        aoa = np.zeros((n_c, n_r))
        for c in range(n_c):
            for r in range(n_r):
                vals = rd.expect_floats("ray", 6)
                if (int(vals[0]), int(vals[1])) != (c, r):
                    raise ChannelFormatError(f"expected ray {c} {r}", line=rd.line)
                gains[c, r] = complex(vals[2], vals[3])
                aod[c, r] = vals[4]
                aoa[c, r] = vals[5]
        h = np.zeros((n_rx, n_tx), dtype=complex)
        for i in range(n_rx):
            vals = np.asarray(rd.expect_floats("row", 2 * n_tx))
            h[i] = vals[0::2] + 1j * vals[1::2]
        mats.append(h)
        rays.append(UserRays(path_loss_linear=path_loss, gains=gains, aod=aod, aoa=aoa))

    if rd.next_raw() != "end":
        raise ChannelFormatError("expected 'end'", line=rd.line)
    return ChannelRealization(
        per_user_matrix=tuple(mats),
        per_user_rays=tuple(rays),
        antenna_spacing=spacing,
        seed=seed,
    )


def load_channel(path: str) -> ChannelRealization:
    """读取信道实现文件。"""
    with open(path, encoding="utf-8") as f:
        return parse_channel(f.read())


@dataclass(frozen=True)
class UserChannelInfo:
    """单个用户信道的摘要。"""

    user: int
    frobenius_norm: float
    rank: int
    singular_values: list[float]
    path_loss_linear: float
    n_paths: int


@dataclass(frozen=True)
class ChannelInfo:
    """信道文件摘要。"""

    path: str
    seed: int | None
    n_users: int
    n_rx: int
    n_tx: int
    spacing: float
    users: list[UserChannelInfo]


def inspect_channel(path: str, *, rank_tol: float = 1e-10) -> ChannelInfo:
    """读取信道文件并返回结构化摘要。"""
    if not os.path.isfile(path):
        raise FileNotFoundError(path)
    ch = load_channel(path)
    users: list[UserChannelInfo] = []
    for k, (h, rays) in enumerate(zip(ch.per_user_matrix, ch.per_user_rays)):
        s = np.linalg.svd(h, compute_uv=False)
        rank = int(np.sum(s > rank_tol * s[0])) if s.size and s[0] > 0 else 0
        users.append(
            UserChannelInfo(
                user=k,
                frobenius_norm=float(np.linalg.norm(h)),
                rank=rank,
                singular_values=[float(x) for x in s],
                path_loss_linear=rays.path_loss_linear,
                n_paths=rays.n_clusters * rays.n_rays,
            )
        )
    return ChannelInfo(
        path=path,
        seed=ch.seed,
        n_users=ch.n_users,
        n_rx=ch.n_rx,
        n_tx=ch.n_tx,
        spacing=ch.antenna_spacing,
        users=users,
    )


def print_channel_info(info: ChannelInfo) -> None:
    """打印信道文件摘要。"""
    print("Channel Info:")
    print(f"  File        : {info.path}")
    print(f"  Seed        : {info.seed if info.seed is not None else '-'}")
    print(f"  Users       : {info.n_users}")
    print(f"  Antennas    : N_R={info.n_rx}, N_T={info.n_tx}")
    print(f"  Spacing     : {info.spacing:g} wavelengths")
    for u in info.users:
        sv = ", ".join(f"{x:.4g}" for x in u.singular_values)
        print(
            f"    - user {u.user} | ||H||_F={u.frobenius_norm:.4g} | rank={u.rank} | "
            f"rho={u.path_loss_linear:.4g} | paths={u.n_paths} | sv=[{sv}]"
        )
