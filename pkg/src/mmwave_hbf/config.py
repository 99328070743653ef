"""
实验配置解析。

配置文件为扁平的 `key = value` 文本，`#` 开头为注释。最终取值按以下顺序逐层覆盖：
内置默认值 < 预设（--preset） < 配置文件 < 专用命令行参数 < `--set KEY=VALUE`。
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, replace
from typing import Union

from .channel import PathLossModel, free_space_reference_loss_db
from .dynamic_hybrid import INIT_MODES
from .errors import ConfigError
from .pipeline import METHODS
from .types import ClusterChannelParams, SystemConfig

SweepValue = Union[int, float]

DEFAULTS: dict[str, str] = {
    "n_tx": "64",
    "n_rf": "16",
    "n_rx": "4",
    "n_users": "6",
    "n_streams": "2",
    "total_power_dbm": "30",
    "noise_power_dbm": "",
    "target_snr_db": "",
    "snr_mode": "tx_power",
    "carrier_hz": "28e9",
    "antenna_spacing": "0.5",
    "n_clusters": "6",
    "n_rays": "15",
    "angular_spread_deg": "10",
    "mean_angle_min_deg": "0",
    "mean_angle_max_deg": "360",
    "path_loss": "none",
    "path_loss_exponent": "2.0",
    "reference_loss_db": "",
    "cell_radius_m": "40",
    "methods": ",".join(METHODS),
    "sweep": "none",
    "trials": "500",
    "seed": "0",
    "tol": "1e-4",
    "max_iters": "200",
    "dynamic_init": "random",
    "workers": "1",
    "record_timing": "false",
    "out": "",
    "trace_dir": "",
    "plot_script": "",
    "channel_dir": "",
}

# 未显式给出任何噪声参数时使用的目标 SNR。
DEFAULT_SNR_DB = "10"

PRESETS: dict[str, dict[str, str]] = {
    "convergence": {"sweep": "none", "target_snr_db": "10", "methods": "dynamic", "trials": "100"},
    "snr": {"sweep": "snr=-10:5:20"},
    "single-antenna": {
        "n_rx": "1",
        "n_streams": "1",
        "n_users": "16",
        "sweep": "snr=-10:5:20",
    },
    "users": {"sweep": "users=2,4,6,8", "target_snr_db": "10"},
}

_SWEEP_ALIASES = {
    "snr": "snr_db",
    "snr_db": "snr_db",
    "users": "n_users",
    "n_users": "n_users",
    "tx": "n_tx",
    "n_tx": "n_tx",
}


@dataclass(frozen=True)
class Sweep:
    """扫描维度：`none`、`snr_db`、`n_users` 或 `n_tx`。"""

    key: str = "none"
    values: tuple[SweepValue, ...] = ()
    text: str = "none"

    def points(self) -> list[SweepValue | None]:
        return [None] if self.key == "none" else list(self.values)


@dataclass(frozen=True)
class ExperimentSpec:
    """完全解析后的实验描述。"""

    base: SystemConfig
    channel: ClusterChannelParams
    path_loss: PathLossModel | None
    methods: tuple[str, ...]
    sweep: Sweep
    trials: int
    master_seed: int
    output_path: str
    tol: float = 1e-4
    max_iters: int = 200
    dynamic_init: str = "random"
    workers: int = 1
    record_timing: bool = False
    trace_dir: str = ""
    plot_script: str = ""
    channel_dir: str = ""
    # 解析后的全部键值，用于回显到 CSV 头部。
    resolved: tuple[tuple[str, str], ...] = ()

    def config_at(self, value: SweepValue | None) -> SystemConfig:
        """返回某个扫描点的系统配置。"""
        if value is None or self.sweep.key == "none":
            return self.base
        if self.sweep.key == "snr_db":
            return replace(self.base, target_snr_db=float(value), noise_power_dbm=None)
        return replace(self.base, **{self.sweep.key: int(value)})


def _bool_from_str(key: str, s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "1", "yes", "y"):
        return True
    if v in ("false", "0", "no", "n"):
        return False
    raise ConfigError(f"invalid bool for {key}: {s}", key=key)


def _int(key: str, s: str) -> int:
    try:
        return int(s)
    except ValueError as e:
        raise ConfigError(f"invalid integer for {key}: {s}", key=key) from e


def _float(key: str, s: str) -> float:
    try:
        v = float(s)
    except ValueError as e:
        raise ConfigError(f"invalid number for {key}: {s}", key=key) from e
    if not math.isfinite(v):
        raise ConfigError(f"{key} must be finite, got {s}", key=key)
    return v


def parse_assignment(spec: str) -> tuple[str, str]:
    """把 `KEY=VALUE` 拆成键和值。"""
    if "=" not in spec:
        raise ConfigError(f"expected KEY=VALUE, got: {spec}")
    k, v = spec.split("=", 1)
    k = k.strip()
    if not k:
        raise ConfigError(f"empty KEY in: {spec}")
    return k, v.strip()


def read_config_file(path: str) -> dict[str, str]:
    """读取扁平 `key = value` 配置文件；重复键和格式错误均报错。"""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got: {line}")
            k, v = parse_assignment(line)
            if k in out:
                raise ConfigError(f"{path}:{lineno}: duplicate key {k}", key=k)
            out[k] = v
    return out


def _parse_range(key: str, text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"invalid sweep range for {key}: {text}", key="sweep")
    start, step, stop = (_float("sweep", p) for p in parts)
    if step == 0 or (stop - start) / step < 0:
        raise ConfigError(f"sweep range never reaches its end: {text}", key="sweep")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(count)]


def parse_sweep(text: str) -> Sweep:
    """解析 `none`、`snr=-10:5:20`、`snr=0,10`、`users=2,4,6`、`tx=32,64`。"""
    t = text.strip()
    if t in ("", "none"):
        return Sweep()
    k, v = parse_assignment(t)
    key = _SWEEP_ALIASES.get(k)
    if key is None:
        raise ConfigError(f"unknown sweep dimension: {k} (expected snr, users or tx)", key="sweep")
    if ":" in v:
        raw: list[float] = _parse_range(key, v)
    else:
        raw = [_float("sweep", x) for x in v.split(",") if x.strip()]
    if not raw:
        raise ConfigError(f"empty sweep: {text}", key="sweep")
    values: tuple[SweepValue, ...]
    if key == "snr_db":
        values = tuple(raw)
    else:
        if any(x != int(x) for x in raw):
            raise ConfigError(f"sweep over {key} needs integers: {text}", key="sweep")
        values = tuple(int(x) for x in raw)
    return Sweep(key=key, values=values, text=t)


def parse_methods(text: str) -> tuple[str, ...]:
    out: list[str] = []
    for m in (x.strip() for x in text.split(",")):
        if not m:
            continue
        if m not in METHODS:
            raise ConfigError(
                f"unknown method: {m} (expected {', '.join(METHODS)})", key="methods"
            )
        if m not in out:
            out.append(m)
    if not out:
        raise ConfigError("at least one method is required", key="methods")
    return tuple(out)


def _merge(layers: Sequence[Mapping[str, str]]) -> dict[str, str]:
    merged = dict(DEFAULTS)
    for layer in layers:
        for k, v in layer.items():
            if k not in DEFAULTS:
                raise ConfigError(f"unknown configuration key: {k}", key=k)
            merged[k] = v
    return merged


def resolve_spec(layers: Sequence[Mapping[str, str]]) -> ExperimentSpec:
    """合并各层键值并校验，得到 `ExperimentSpec`。"""
    v = _merge(layers)
    get: Callable[[str], str] = lambda key: v[key].strip()  # noqa: E731

    if not get("out"):
        raise ConfigError("missing required key: out (pass --out)", key="out")

    sweep = parse_sweep(get("sweep"))
    noise = get("noise_power_dbm")
    snr = get("target_snr_db")
    if noise and snr:
        raise ConfigError(
            "noise_power_dbm and target_snr_db cannot both be set", key="noise_power_dbm"
        )
    if noise and sweep.key == "snr_db":
        raise ConfigError("an SNR sweep cannot be combined with noise_power_dbm", key="sweep")
    if not noise and not snr:
        snr = DEFAULT_SNR_DB
        v["target_snr_db"] = snr

    base = SystemConfig(
        n_tx=_int("n_tx", get("n_tx")),
        n_rf=_int("n_rf", get("n_rf")),
        n_rx=_int("n_rx", get("n_rx")),
        n_users=_int("n_users", get("n_users")),
        n_streams=_int("n_streams", get("n_streams")),
        total_power_dbm=_float("total_power_dbm", get("total_power_dbm")),
        noise_power_dbm=_float("noise_power_dbm", noise) if noise else None,
        target_snr_db=_float("target_snr_db", snr) if snr else None,
        carrier_hz=_float("carrier_hz", get("carrier_hz")),
        antenna_spacing_wavelengths=_float("antenna_spacing", get("antenna_spacing")),
        snr_mode=get("snr_mode"),
    )
    if not base.carrier_hz > 0:
        raise ConfigError("carrier_hz must be positive", key="carrier_hz")

    channel = ClusterChannelParams(
        n_clusters=_int("n_clusters", get("n_clusters")),
        n_rays=_int("n_rays", get("n_rays")),
        angular_spread_rad=math.radians(_float("angular_spread_deg", get("angular_spread_deg"))),
        path_loss_linear=1.0,
        mean_angle_range=(
            math.radians(_float("mean_angle_min_deg", get("mean_angle_min_deg"))),
            math.radians(_float("mean_angle_max_deg", get("mean_angle_max_deg"))),
        ),
    )

    path_loss: PathLossModel | None = None
    pl_kind = get("path_loss")
    if pl_kind == "log_distance":
        ref = get("reference_loss_db")
        radius = _float("cell_radius_m", get("cell_radius_m"))
        if not radius > 0:
            raise ConfigError("cell_radius_m must be positive", key="cell_radius_m")
        path_loss = PathLossModel(
            exponent=_float("path_loss_exponent", get("path_loss_exponent")),
            reference_loss_db=(
                _float("reference_loss_db", ref)
                if ref
                else free_space_reference_loss_db(base.carrier_hz)
            ),
            cell_radius_m=radius,
        )
    elif pl_kind != "none":
        raise ConfigError(f"path_loss must be none or log_distance, got {pl_kind}", key="path_loss")

    trials = _int("trials", get("trials"))
    if trials < 1:
        raise ConfigError("trials must be >= 1", key="trials")
    seed = _int("seed", get("seed"))
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer", key="seed")
    tol = _float("tol", get("tol"))
    if not tol > 0:
        raise ConfigError("tol must be positive", key="tol")
    max_iters = _int("max_iters", get("max_iters"))
    if max_iters < 1:
        raise ConfigError("max_iters must be >= 1", key="max_iters")
    workers = _int("workers", get("workers"))
    if workers < 1:
        raise ConfigError("workers must be >= 1", key="workers")
    dynamic_init = get("dynamic_init")
    if dynamic_init not in INIT_MODES:
        raise ConfigError(
            f"dynamic_init must be one of {', '.join(INIT_MODES)}, got {dynamic_init}",
            key="dynamic_init",
        )

    methods = parse_methods(get("methods"))
    spec = ExperimentSpec(
        base=base,
        channel=channel,
        path_loss=path_loss,
        methods=methods,
        sweep=sweep,
        trials=trials,
        master_seed=seed,
        output_path=get("out"),
        tol=tol,
        max_iters=max_iters,
        dynamic_init=dynamic_init,
        workers=workers,
        record_timing=_bool_from_str("record_timing", get("record_timing")),
        trace_dir=get("trace_dir"),
        plot_script=get("plot_script"),
        channel_dir=get("channel_dir"),
        resolved=tuple(sorted((k, x.strip()) for k, x in v.items())),
    )

    for point in sweep.points():
        try:
            cfg = spec.config_at(point)
        except ConfigError as e:
            raise ConfigError(f"sweep {sweep.key}={point}: {e}", key=sweep.key) from e
        if cfg.n_tx % cfg.n_rf == 0:
            continue
        if "fixed" in methods:
            raise ConfigError(
                f"method fixed needs n_tx divisible by n_rf ({cfg.n_tx} % {cfg.n_rf} != 0)",
                key="n_tx",
            )
        if "dynamic" in methods and dynamic_init == "block":
            raise ConfigError(
                f"dynamic_init = block needs n_tx divisible by n_rf "
                f"({cfg.n_tx} % {cfg.n_rf} != 0)",
                key="n_tx",
            )
    return spec


def parse_config(
    path: str | None = None,
    *,
    overrides: Mapping[str, str] | None = None,
    preset: str = "",
) -> ExperimentSpec:
    """读取配置文件（可选）并叠加预设与命令行覆盖。"""
    layers: list[Mapping[str, str]] = []
    if preset:
        if preset not in PRESETS:
            raise ConfigError(
                f"unknown preset: {preset} (expected {', '.join(sorted(PRESETS))})", key="preset"
            )
        layers.append(PRESETS[preset])
    if path:
        layers.append(read_config_file(path))
    if overrides:
        layers.append(overrides)
    return resolve_spec(layers)
