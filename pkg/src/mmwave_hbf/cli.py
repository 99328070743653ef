"""
`simulate` 的命令行入口模块。

负责收集配置文件、预设与命令行覆盖项，解析成 `ExperimentSpec` 后调用
`mmwave_hbf.simulator.run_sweep`，并按需生成绘图脚本或查看信道文件。
"""

from __future__ import annotations

import argparse
import os
from collections.abc import Sequence

from .channel_io import inspect_channel, print_channel_info
from .config import PRESETS, ExperimentSpec, parse_assignment, parse_config
from .errors import ConfigError, HbfError
from .plot_script import emit_plot_script
from .simulator import print_sweep_summary, run_sweep

# 专用参数与配置键的对应关系。
_FLAG_KEYS = (
    ("trials", "trials"),
    ("seed", "seed"),
    ("sweep", "sweep"),
    ("methods", "methods"),
    ("out", "out"),
    ("trace_dir", "trace_dir"),
    ("plot_script", "plot_script"),
    ("workers", "workers"),
    ("export_channels", "channel_dir"),
)


def _log_step(message: str) -> None:
    """输出简洁的流程阶段提示。"""
    print(f"[simulate] {message}")


def _collect_overrides(ns: argparse.Namespace) -> dict[str, str]:
    """把专用参数与 `--set` 合并成一层覆盖；`--set` 优先。"""
    out: dict[str, str] = {}
    for attr, key in _FLAG_KEYS:
        v = getattr(ns, attr)
        if v is not None:
            out[key] = str(v)
    for spec in ns.set:
        try:
            k, v = parse_assignment(spec)
        except ConfigError as e:
            raise SystemExit(f"Error: {e}") from e
        out[k] = v
    return out


def _print_plan(spec: ExperimentSpec) -> None:
    """打印解析后的实验配置与计划输出行数。"""
    points = spec.sweep.points()
    n_methods = len(spec.methods)
    detail = len(points) * spec.trials * n_methods
    cfg = spec.base
    print("Experiment Plan:")
    print(f"  Output      : {spec.output_path}")
    print(f"  Antennas    : N_T={cfg.n_tx}, N_RF={cfg.n_rf}, N_R={cfg.n_rx}")
    print(f"  Users       : K={cfg.n_users}, N_s={cfg.n_streams}")
    print(f"  Methods     : {', '.join(spec.methods)}")
    print(f"  Sweep       : {spec.sweep.text} ({len(points)} point(s))")
    print(f"  Trials      : {spec.trials} per point, seed={spec.master_seed}")
    print(f"  Workers     : {spec.workers}")
    print(f"  Rows        : {detail} trial + {len(points) * n_methods} aggregate")
    print("  Resolved    :")
    for k, v in spec.resolved:
        print(f"    - {k} = {v}")


def build_parser() -> argparse.ArgumentParser:
    """构建并返回 `simulate` 命令行参数解析器。"""
    p = argparse.ArgumentParser(
        prog="simulate",
        formatter_class=argparse.RawTextHelpFormatter,
        description=(
            "Monte-Carlo simulator for dynamic-subarray hybrid beamforming in mmWave MU-MIMO.\n"
            "Compares the dynamic (KM reallocation) design with the fixed-subarray baseline\n"
            "and the fully-digital reference, and writes a CSV of per-trial and mean results."
        ),
    )
    p.add_argument("--config", default="", help="Flat key = value configuration file")
    p.add_argument(
        "--preset",
        default="",
        choices=[""] + sorted(PRESETS),
        help="Built-in experiment preset (below the config file in precedence)",
    )
    p.add_argument("--trials", type=int, default=None, help="Trials per sweep point")
    p.add_argument("--seed", type=int, default=None, help="Master seed (64-bit unsigned)")
    p.add_argument(
        "--sweep",
        default=None,
        help="Sweep: none | snr=-10:5:20 | snr=0,10 | users=2,4,6,8 | tx=32,64",
    )
    p.add_argument(
        "--methods",
        default=None,
        help="Comma separated subset of dynamic,fixed,fully_digital",
    )
    p.add_argument("--out", default=None, help="Output CSV path")
    p.add_argument("--trace-dir", default=None, help="Write per-trial iteration traces here")
    p.add_argument(
        "--plot-script",
        default=None,
        help="Write a standalone matplotlib script for the output CSV",
    )
    p.add_argument(
        "--plot-from",
        default="",
        help="Only generate --plot-script from an existing result or trace CSV",
    )
    p.add_argument("--workers", type=int, default=None, help="Worker processes (default 1)")
    p.add_argument(
        "--export-channels",
        default=None,
        metavar="DIR",
        help="Save every channel realization as a text file under DIR",
    )
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override any configuration key (repeatable, highest precedence)",
    )
    p.add_argument(
        "--inspect-channel",
        default="",
        metavar="PATH",
        help="Only print a summary of an exported channel file",
    )
    p.add_argument(
        "--dry-run",
        action="store_true",
        help="Resolve the configuration and print the plan without running trials",
    )
    p.add_argument("--verbose", action="store_true", help="Verbose logging")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    """CLI 入口：解析配置并运行仿真。"""
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.inspect_channel and ns.dry_run:
        raise SystemExit("Error: --inspect-channel and --dry-run cannot be used together.")

    if ns.inspect_channel:
        _log_step("Inspecting channel file")
        try:
            info = inspect_channel(ns.inspect_channel)
        except FileNotFoundError as e:
            raise SystemExit(f"Error: channel file not found: {ns.inspect_channel}") from e
        except HbfError as e:
            raise SystemExit(f"Error: {e}") from e
        print_channel_info(info)
        return 0

    if ns.plot_from:
        if not ns.plot_script:
            raise SystemExit("Error: --plot-from needs --plot-script PATH.")
        _log_step(f"Generating plot script from {ns.plot_from}")
        try:
            emit_plot_script(ns.plot_from, ns.plot_script)
        except FileNotFoundError as e:
            raise SystemExit(f"Error: CSV not found: {ns.plot_from}") from e
        except HbfError as e:
            raise SystemExit(f"Error: {ns.plot_from}: {e}") from e
        _log_step(f"Plot script: {ns.plot_script}")
        return 0

    _log_step("Resolving configuration")
    if ns.config and not os.path.isfile(ns.config):
        raise SystemExit(f"Error: config file not found: {ns.config}")
    try:
        spec = parse_config(ns.config or None, overrides=_collect_overrides(ns), preset=ns.preset)
    except ConfigError as e:
        raise SystemExit(f"Error: {e}") from e

    if ns.dry_run:
        _log_step("Dry-run mode enabled (no trials are run)")
        _print_plan(spec)
        return 0

    if ns.verbose:
        for k, v in spec.resolved:
            print(f"  {k} = {v}")

    points = len(spec.sweep.points())
    _log_step(
        f"Running {points} sweep point(s) x {spec.trials} trial(s) x "
        f"{len(spec.methods)} method(s)"
    )
    log = _log_step if ns.verbose or points > 1 else None
    try:
        result = run_sweep(spec, log=log)
    except OSError as e:
        target = e.filename or spec.output_path
        raise SystemExit(f"Error: cannot write output {target}: {e.strerror or e}") from e
    _log_step(f"Results written to {result.csv_path}")
    print_sweep_summary(spec, result)

    if spec.plot_script:
        _log_step(f"Generating plot script: {spec.plot_script}")
        try:
            emit_plot_script(result.csv_path, spec.plot_script)
        except OSError as e:
            raise SystemExit(f"Error: cannot write plot script {spec.plot_script}: {e}") from e
    return 0
