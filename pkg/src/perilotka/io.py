"""CSV, SVG and run-record output."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def write_csv(path: str | Path, header: Sequence[str], columns: Sequence[np.ndarray]) -> Path:
    """Write equal-length columns with full double precision and LF line endings."""
    path = Path(path)
    cols = [np.asarray(c, dtype=float) for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(format_float(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def write_svg(path: str | Path, t: np.ndarray, series: dict[str, np.ndarray], title: str = "",
              xlabel: str = "t", width: int = 800, height: int = 450) -> Path:
    """Line chart of several series against ``t`` with linear axes and a legend."""
    path = Path(path)
    t = np.asarray(t, dtype=float)
    left, right, top, bottom = 70, 130, 40, 50
    pw, ph = width - left - right, height - top - bottom
    ys = np.concatenate([np.asarray(v, float)[np.isfinite(v)] for v in series.values()] or [np.zeros(1)])
    y0, y1 = float(ys.min()), float(ys.max())
    if y1 - y0 < 1e-300:
        y0, y1 = y0 - 1.0, y1 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    x0, x1 = float(t.min()), float(t.max()) if t.max() > t.min() else float(t.min()) + 1.0

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{title}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for v in _ticks(x0, x1):
        out.append(f'<line x1="{sx(v):.2f}" y1="{top + ph}" x2="{sx(v):.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(v):.2f}" y="{top + ph + 18}" text-anchor="middle">{v:g}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<line x1="{left - 5}" y1="{sy(v):.2f}" x2="{left}" y2="{sy(v):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{sy(v) + 4:.2f}" text-anchor="end">{v:.4g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
    for i, (name, vals) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        vals = np.asarray(vals, dtype=float)
        ok = np.isfinite(vals)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(t[ok], vals[ok]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = top + 15 + 18 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 35}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 40}" y="{ly + 4}">{name}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("-inf" if v < 0 else "inf" if v > 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class RunRecord:
    """What a CLI command did: config echo, outputs, key scalars, timing."""

    command: str
    config: dict
    outputs: list[str] = field(default_factory=list)
    scalars: dict = field(default_factory=dict)
    reports: dict = field(default_factory=dict)
    text: str = ""
    wall_time: float = 0.0
    status: str = "ok"

    def to_dict(self) -> dict:
        return _jsonable({
            "command": self.command, "status": self.status, "wall_time": self.wall_time,
            "config": self.config, "outputs": self.outputs, "scalars": self.scalars,
            "reports": self.reports, "text": self.text,
        })

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        self.outputs.append(str(path))
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        return path
