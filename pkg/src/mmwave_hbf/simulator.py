"""
蒙特卡洛仿真：对 (扫描点 × 试验 × 方法) 逐一运行设计流程并写出 CSV。

每次试验的随机数流由 (master_seed, 扫描点下标, 试验下标) 通过 SeedSequence 派生，
与执行顺序和进程数无关；汇总在主进程内按固定顺序进行，因此输出只取决于实验配置。
"""

from __future__ import annotations

import csv
import math
import os
import time
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .channel import ChannelRealization, draw_user_params, generate_channel
from .channel_io import save_channel
from .config import ExperimentSpec, SweepValue
from .dynamic_hybrid import IterationRecord, write_trace_csv
from .errors import HbfError
from .fully_digital import svd_stage
from .metrics import evaluate, resolve_noise_power
from .pipeline import METHODS, design_hybrid
from .types import SystemConfig

SCHEMA = "mmwave-hbf-trials/1"

COLUMNS = (
    "kind",
    "sweep_value",
    "trial_index",
    "method",
    "snr_mode",
    "mean_se",
    "sum_se",
    "per_user_se",
    "approx_error_final",
    "iterations_used",
    "n_rf0_first_iter",
    "wall_time_ms",
    "error",
)

# 试验内捕获并记录、不中断扫描的异常。
TRIAL_ERRORS = (HbfError, np.linalg.LinAlgError)

LogFn = Callable[[str], None]


@dataclass(frozen=True)
class TrialRecord:
    """一次 (扫描点, 试验, 方法) 的结果；error 非空表示该试验失败。"""

    sweep_index: int
    sweep_value: SweepValue | None
    trial_index: int
    method: str
    snr_mode: str
    mean_se: float = math.nan
    sum_se: float = math.nan
    per_user_se: tuple[float, ...] = ()
    approx_error_final: float = math.nan
    iterations_used: int = 0
    n_rf0_first_iter: int = 0
    wall_time_ms: float = math.nan
    error: str = ""
    trace: tuple[IterationRecord, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.error


@dataclass(frozen=True)
class AggregateRow:
    """某扫描点上某方法的均值（失败试验不计入）。"""

    sweep_index: int
    sweep_value: SweepValue | None
    method: str
    snr_mode: str
    mean_se: float
    sum_se: float
    approx_error_final: float
    iterations_used: float
    n_rf0_first_iter: float
    included: int
    excluded: int


@dataclass(frozen=True, eq=False)
class TrialOutcome:
    records: tuple[TrialRecord, ...]
    channel: ChannelRealization | None = None


@dataclass(frozen=True)
class SweepResult:
    records: tuple[TrialRecord, ...]
    aggregates: tuple[AggregateRow, ...]
    csv_path: str
    trace_files: tuple[str, ...] = ()
    channel_files: tuple[str, ...] = ()


def trial_streams(
    master_seed: int, sweep_index: int, trial_index: int
) -> list[np.random.Generator]:
    """返回 [路径损耗流, 信道流, 各方法初始化流...]，方法流按 METHODS 顺序排列。"""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(sweep_index, trial_index))
    return [np.random.Generator(np.random.Philox(c)) for c in seq.spawn(2 + len(METHODS))]


# rx_power 模式下 P_rx 按各向同性发射计算，CSV 中用该标签区分。
RX_POWER_ISOTROPIC = "rx_power_isotropic"


def snr_mode_label(cfg: SystemConfig) -> str:
    if cfg.noise_power_dbm is not None:
        return "noise_power"
    return RX_POWER_ISOTROPIC if cfg.snr_mode == "rx_power" else cfg.snr_mode


def _error_tag(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {exc}"


def _trial_outcome(
    spec: ExperimentSpec,
    sweep_index: int,
    trial_index: int,
    keep_channel: bool = False,
) -> TrialOutcome:
    value = spec.sweep.points()[sweep_index]
    cfg = spec.config_at(value)
    pl_rng, ch_rng, *init_rngs = trial_streams(spec.master_seed, sweep_index, trial_index)
    mode = snr_mode_label(cfg)

    def failed(method: str, exc: BaseException) -> TrialRecord:
        return TrialRecord(
            sweep_index=sweep_index,
            sweep_value=value,
            trial_index=trial_index,
            method=method,
            snr_mode=mode,
            error=_error_tag(exc),
        )

    channels: ChannelRealization | None = None
    try:
        params = draw_user_params(cfg, spec.channel, spec.path_loss, pl_rng)
        channels = generate_channel(cfg, params, ch_rng, seed=spec.master_seed)
        noise = resolve_noise_power(cfg, channels)
        t0 = time.perf_counter()
        fd = svd_stage(channels, cfg, noise_power=noise)
        stage1_ms = (time.perf_counter() - t0) * 1e3
    except TRIAL_ERRORS as e:
        return TrialOutcome(
            records=tuple(failed(m, e) for m in spec.methods),
            channel=channels if keep_channel else None,
        )

    records: list[TrialRecord] = []
    for method in spec.methods:
        t0 = time.perf_counter()
        try:
            design = design_hybrid(
                channels,
                cfg,
                method=method,
                rng=init_rngs[METHODS.index(method)],
                noise_power=noise,
                stage1=fd,
                tol=spec.tol,
                max_iters=spec.max_iters,
                dynamic_init=spec.dynamic_init,
            )
            # 全数字参考按无干扰口径评估，混合方法计入残余干扰。
            report = evaluate(
                channels,
                design.combiners,
                design.beamformers,
                noise,
                include_interference=method != "fully_digital",
            )
        except TRIAL_ERRORS as e:
            records.append(failed(method, e))
            continue
        elapsed = stage1_ms + (time.perf_counter() - t0) * 1e3
        stage2 = design.stage2
        trace = stage2.trace if stage2 is not None else ()
        records.append(
            TrialRecord(
                sweep_index=sweep_index,
                sweep_value=value,
                trial_index=trial_index,
                method=method,
                snr_mode=mode,
                mean_se=report.mean_se,
                sum_se=report.sum_se,
                per_user_se=report.per_user_se,
                approx_error_final=(
                    stage2.approximation_error if stage2 is not None else math.nan
                ),
                iterations_used=len(trace),
                n_rf0_first_iter=trace[0].n_rf0 if trace else 0,
                wall_time_ms=elapsed,
                trace=trace,
            )
        )
    return TrialOutcome(records=tuple(records), channel=channels if keep_channel else None)


def run_trial(spec: ExperimentSpec, sweep_index: int, trial_index: int) -> list[TrialRecord]:
    """运行一次试验的全部方法；结果只取决于 (spec, sweep_index, trial_index)。"""
    return list(_trial_outcome(spec, sweep_index, trial_index).records)


def _mean(xs: Sequence[float]) -> float:
    return math.fsum(xs) / len(xs) if xs else math.nan


def aggregate(spec: ExperimentSpec, records: Iterable[TrialRecord]) -> list[AggregateRow]:
    """按 (扫描点, 方法) 求均值；失败试验计入 excluded。"""
    groups: dict[tuple[int, str], list[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.sweep_index, r.method), []).append(r)

    out: list[AggregateRow] = []
    for si, value in enumerate(spec.sweep.points()):
        mode = snr_mode_label(spec.config_at(value))
        for method in spec.methods:
            rows = sorted(groups.get((si, method), []), key=lambda r: r.trial_index)
            ok = [r for r in rows if r.ok]
            out.append(
                AggregateRow(
                    sweep_index=si,
                    sweep_value=value,
                    method=method,
                    snr_mode=mode,
                    mean_se=_mean([r.mean_se for r in ok]),
                    sum_se=_mean([r.sum_se for r in ok]),
                    approx_error_final=_mean([r.approx_error_final for r in ok]),
                    iterations_used=_mean([float(r.iterations_used) for r in ok]),
                    n_rf0_first_iter=_mean([float(r.n_rf0_first_iter) for r in ok]),
                    included=len(ok),
                    excluded=len(rows) - len(ok),
                )
            )
    return out


def _fmt(x: float | int | None) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def csv_header_lines(spec: ExperimentSpec) -> list[str]:
    lines = [f"# schema = {SCHEMA}"]
    lines.extend(f"# {k} = {v}" for k, v in spec.resolved)
    return lines


def write_csv(
    path: str,
    spec: ExperimentSpec,
    records: Sequence[TrialRecord],
    aggregates: Sequence[AggregateRow],
) -> None:
    """写出结果 CSV：`#` 注释头、列名行、逐试验行，最后是汇总行。"""
    with open(path, "w", encoding="utf-8", newline="") as f:
        for line in csv_header_lines(spec):
            f.write(line + "\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in records:
            w.writerow(
                [
                    "trial",
                    _fmt(r.sweep_value),
                    r.trial_index,
                    r.method,
                    r.snr_mode,
                    _fmt(r.mean_se),
                    _fmt(r.sum_se),
                    ";".join(_fmt(x) for x in r.per_user_se),
                    _fmt(r.approx_error_final),
                    r.iterations_used,
                    r.n_rf0_first_iter,
                    _fmt(r.wall_time_ms) if spec.record_timing else "",
                    r.error,
                ]
            )
        for a in aggregates:
            w.writerow(
                [
                    "aggregate",
                    _fmt(a.sweep_value),
                    "",
                    a.method,
                    a.snr_mode,
                    _fmt(a.mean_se),
                    _fmt(a.sum_se),
                    "",
                    _fmt(a.approx_error_final),
                    _fmt(a.iterations_used),
                    _fmt(a.n_rf0_first_iter),
                    "",
                    f"excluded={a.excluded}",
                ]
            )


def run_sweep(spec: ExperimentSpec, *, log: LogFn | None = None) -> SweepResult:
    """运行整个扫描，写出 CSV 以及（可选的）迭代轨迹与信道文件。"""
    # 先确认输出路径可写，避免长时间仿真后才失败。
    with open(spec.output_path, "w", encoding="utf-8"):
        pass
    if spec.trace_dir:
        os.makedirs(spec.trace_dir, exist_ok=True)
    if spec.channel_dir:
        os.makedirs(spec.channel_dir, exist_ok=True)

    points = spec.sweep.points()
    keep = bool(spec.channel_dir)
    tasks = [(spec, si, ti, keep) for si in range(len(points)) for ti in range(spec.trials)]

    records: list[TrialRecord] = []
    trace_files: list[str] = []
    channel_files: list[str] = []

    def consume(outcomes: Iterable[TrialOutcome]) -> None:
        for (_spec, si, ti, _keep), outcome in zip(tasks, outcomes):
            records.extend(outcome.records)
            if spec.trace_dir:
                for r in outcome.records:
                    if not r.trace:
                        continue
                    p = os.path.join(spec.trace_dir, f"trace_{r.method}_s{si}_t{ti}.csv")
                    write_trace_csv(p, r.trace)
                    trace_files.append(p)
            if outcome.channel is not None:
                p = os.path.join(spec.channel_dir, f"channel_s{si}_t{ti}.txt")
                save_channel(p, outcome.channel)
                channel_files.append(p)
            if log is not None and ti == spec.trials - 1:
                label = "single point" if points[si] is None else f"{spec.sweep.key}={points[si]}"
                failed = sum(1 for r in records if r.sweep_index == si and not r.ok)
                log(f"sweep point {si + 1}/{len(points)} ({label}) done, failed records: {failed}")

    if spec.workers > 1 and len(tasks) > 1:
        consume(
            Parallel(n_jobs=spec.workers)(delayed(_trial_outcome)(*t) for t in tasks)
        )
    else:
        consume(_trial_outcome(*t) for t in tasks)

    aggregates = aggregate(spec, records)
    write_csv(spec.output_path, spec, records, aggregates)
    return SweepResult(
        records=tuple(records),
        aggregates=tuple(aggregates),
        csv_path=spec.output_path,
        trace_files=tuple(trace_files),
        channel_files=tuple(channel_files),
    )


def print_sweep_summary(spec: ExperimentSpec, result: SweepResult) -> None:
    """打印汇总表。"""
    print("Sweep Summary:")
    print(f"  Output      : {result.csv_path}")
    print(f"  Sweep       : {spec.sweep.text}")
    print(f"  Methods     : {', '.join(spec.methods)}")
    print(f"  Trials      : {spec.trials} per point")
    print(f"  Records     : {len(result.records)}")
    if result.trace_files:
        print(f"  Traces      : {len(result.trace_files)} file(s) in {spec.trace_dir}")
    if result.channel_files:
        print(f"  Channels    : {len(result.channel_files)} file(s) in {spec.channel_dir}")
    for a in result.aggregates:
        point = "-" if a.sweep_value is None else f"{spec.sweep.key}={_fmt(a.sweep_value)}"
        print(
            f"    - {point:<16} {a.method:<14} | mean SE {a.mean_se:8.4f} | "
            f"sum SE {a.sum_se:8.4f} | excluded {a.excluded}"
        )
