"""
根据仿真 CSV 生成独立的 matplotlib 绘图脚本。

生成的脚本只包含数据和绘图命令，不做任何数值计算。支持两类输入：
- 扫描结果 CSV（`simulate --out`）：每种方法一条 SE 曲线；
- 迭代轨迹 CSV（`--trace-dir` 下的 trace_*.csv）：一条收敛曲线。
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

from .config import parse_sweep
from .errors import ConfigError, PlotInputError

TRACE_COLUMNS = ("iter", "delta1", "delta2")
SWEEP_COLUMNS = ("kind", "sweep_value", "method", "mean_se", "sum_se")

_X_LABELS = {
    "snr_db": "SNR (dB)",
    "n_users": "Number of users K",
    "n_tx": "Number of transmit antennas N_T",
    "none": "Sweep point",
}


@dataclass
class PlotData:
    """从 CSV 中提取的绘图数据。"""

    kind: str
    title: str
    x_label: str
    y_label: str
    series: dict[str, tuple[list[float], list[float]]] = field(default_factory=dict)


def _number(text: str, *, line: int, column: str) -> float:
    try:
        return float(text)
    except ValueError as e:
        raise PlotInputError(f"invalid number in column {column}: {text!r}", line=line) from e


def _read_rows(path: str) -> tuple[dict[str, str], list[tuple[int, list[str]]]]:
    header: dict[str, str] = {}
    rows: list[tuple[int, list[str]]] = []
    with open(path, encoding="utf-8", newline="") as f:
        body: list[tuple[int, str]] = []
        for lineno, raw in enumerate(f, start=1):
            text = raw.rstrip("\r\n")
            if text.startswith("#"):
                k, sep, v = text[1:].partition("=")
                if sep:
                    header[k.strip()] = v.strip()
                continue
            if text.strip():
                body.append((lineno, text))
    for lineno, text in body:
        parsed = next(csv.reader([text]))
        rows.append((lineno, parsed))
    return header, rows


def _trace_data(path: str, columns: list[str], rows: list[tuple[int, list[str]]]) -> PlotData:
    idx = {c: columns.index(c) for c in TRACE_COLUMNS}
    xs: list[float] = []
    ys: list[float] = []
    for lineno, row in rows:
        if len(row) != len(columns):
            raise PlotInputError(
                f"expected {len(columns)} fields, got {len(row)}", line=lineno
            )
        xs.append(_number(row[idx["iter"]], line=lineno, column="iter"))
        ys.append(_number(row[idx["delta2"]], line=lineno, column="delta2"))
    data = PlotData(
        kind="trace",
        title=f"Convergence ({os.path.basename(path)})",
        x_label="Iteration",
        y_label="Approximation error",
    )
    if xs:
        data.series["objective"] = (xs, ys)
    return data


def _sweep_data(
    header: dict[str, str], columns: list[str], rows: list[tuple[int, list[str]]]
) -> PlotData:
    sweep_key = "none"
    if "sweep" in header:
        try:
            sweep_key = parse_sweep(header["sweep"]).key
        except ConfigError:
            sweep_key = "none"
    # 用户数扫描看总频谱效率，其余看每用户平均频谱效率。
    y_col = "sum_se" if sweep_key == "n_users" else "mean_se"
    idx = {c: columns.index(c) for c in SWEEP_COLUMNS}

    data = PlotData(
        kind="sweep",
        title="Spectral efficiency",
        x_label=_X_LABELS.get(sweep_key, "Sweep point"),
        y_label=(
            "Sum spectral efficiency (bit/s/Hz)"
            if y_col == "sum_se"
            else "Average spectral efficiency per user (bit/s/Hz)"
        ),
    )
    for lineno, row in rows:
        if len(row) != len(columns):
            raise PlotInputError(f"expected {len(columns)} fields, got {len(row)}", line=lineno)
        if row[idx["kind"]] != "aggregate":
            continue
        raw_x = row[idx["sweep_value"]]
        x = 0.0 if raw_x == "" else _number(raw_x, line=lineno, column="sweep_value")
        y = _number(row[idx[y_col]], line=lineno, column=y_col)
        if math.isnan(y):
            continue
        xs, ys = data.series.setdefault(row[idx["method"]], ([], []))
        xs.append(x)
        ys.append(y)
    return data


def load_plot_data(csv_path: str) -> PlotData:
    """解析扫描结果或迭代轨迹 CSV。"""
    header, rows = _read_rows(csv_path)
    if not rows:
        raise PlotInputError("missing column row", line=1)
    first_line, columns = rows[0]
    body = rows[1:]
    if all(c in columns for c in TRACE_COLUMNS):
        return _trace_data(csv_path, columns, body)
    missing = [c for c in SWEEP_COLUMNS if c not in columns]
    if missing:
        raise PlotInputError(f"missing column(s): {', '.join(missing)}", line=first_line)
    return _sweep_data(header, columns, body)


def _series_literal(series: dict[str, tuple[list[float], list[float]]]) -> str:
    if not series:
        return "{}"
    lines = ["{"]
    for name, (xs, ys) in series.items():
        lines.append(f"    {name!r}: (")
        lines.append(f"        {[float(x) for x in xs]!r},")
        lines.append(f"        {[float(y) for y in ys]!r},")
        lines.append("    ),")
    lines.append("}")
    return "\n".join(lines)


def render_plot_script(data: PlotData, image_path: str) -> str:
    """生成绘图脚本源码。"""
    marker = "" if data.kind == "trace" else ', marker="o"'
    return f'''#!/usr/bin/env python3
"""Plot generated by `simulate`; edit labels freely, the data below is fixed."""

import matplotlib.pyplot as plt

TITLE = {data.title!r}
X_LABEL = {data.x_label!r}
Y_LABEL = {data.y_label!r}
OUTPUT = {image_path!r}

SERIES = {_series_literal(data.series)}

fig, ax = plt.subplots(figsize=(7, 4.5))
for name, (xs, ys) in SERIES.items():
    ax.plot(xs, ys{marker}, label=name)
if SERIES:
    ax.legend(loc="best")
else:
    ax.text(0.5, 0.5, "no data", ha="center", va="center", transform=ax.transAxes)
ax.set_title(TITLE)
ax.set_xlabel(X_LABEL)
ax.set_ylabel(Y_LABEL)
ax.grid(True, alpha=0.3)
fig.savefig(OUTPUT, dpi=200, bbox_inches="tight")
print(f"saved {{OUTPUT}}")
'''


def emit_plot_script(csv_path: str, script_path: str, *, image_path: str = "") -> PlotData:
    """读取 CSV 并写出绘图脚本；返回解析到的数据。"""
    if not os.path.isfile(csv_path):
        raise FileNotFoundError(csv_path)
    data = load_plot_data(csv_path)
    image = image_path or os.path.splitext(script_path)[0] + ".png"
    with open(script_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(render_plot_script(data, image))
    return data
