"""2-d projections of flowpipe CSVs and trajectory CSVs.

Flowpipe rows project to outlined rectangles (the segment box hulls),
trajectories to a polyline. The SVG writer is hand-rolled so output is a
pure function of the input bytes: no timestamps, no generated ids.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ModelFormatError
from .expressions import format_number

_CANVAS_W = 800.0
_CANVAS_H = 600.0
_MARGIN = 60.0


@dataclass
class Projection:
    kind: str  # "flowpipe" | "trajectory"
    x_name: str
    y_name: str
    rects: list  # (x_lo, x_hi, y_lo, y_hi)
    points: list  # (x, y)


def _parse_csv(text: str) -> tuple:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ModelFormatError("empty CSV input")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def project_csv(text: str, x_name: str, y_name: str) -> Projection:
    header, rows = _parse_csv(text)
    if header[:4] == ["time_lo", "time_hi", "location", "jump_depth"]:
        try:
            xlo = header.index(f"lo_{x_name}")
            xhi = header.index(f"hi_{x_name}")
            ylo = header.index(f"lo_{y_name}")
            yhi = header.index(f"hi_{y_name}")
        except ValueError as exc:
            raise ModelFormatError(f"variable not present in flowpipe CSV: {exc}") from exc
        rects = [
            (float(r[xlo]), float(r[xhi]), float(r[ylo]), float(r[yhi])) for r in rows
        ]
        return Projection("flowpipe", x_name, y_name, rects, [])
    if header[:2] == ["time", "location"] or header[:3] == ["run", "time", "location"]:
        try:
            xi = header.index(x_name)
            yi = header.index(y_name)
        except ValueError as exc:
            raise ModelFormatError(f"variable not present in trajectory CSV: {exc}") from exc
        # multi-run exports break the polyline between runs
        points = []
        last_run = None
        for r in rows:
            if header[0] == "run" and r[0] != last_run:
                if last_run is not None:
                    points.append(None)
                last_run = r[0]
            points.append((float(r[xi]), float(r[yi])))
        return Projection("trajectory", x_name, y_name, [], points)
    raise ModelFormatError("unrecognized CSV header; expected a flowpipe or trajectory export")


def projection_to_csv(proj: Projection) -> str:
    if proj.kind == "flowpipe":
        lines = [f"lo_{proj.x_name},hi_{proj.x_name},lo_{proj.y_name},hi_{proj.y_name}"]
        for xl, xh, yl, yh in proj.rects:
            lines.append(",".join(format_number(v) for v in (xl, xh, yl, yh)))
    else:
        lines = [f"{proj.x_name},{proj.y_name}"]
        for point in proj.points:
            if point is None:
                continue
            lines.append(f"{format_number(point[0])},{format_number(point[1])}")
    return "\n".join(lines) + "\n"


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def projection_to_svg(proj: Projection) -> str:
    xs: list = []
    ys: list = []
    for xl, xh, yl, yh in proj.rects:
        xs.extend((xl, xh))
        ys.extend((yl, yh))
    for point in proj.points:
        if point is not None:
            xs.append(point[0])
            ys.append(point[1])
    if not xs:
        xs = [0.0, 1.0]
        ys = [0.0, 1.0]
    x_min, x_max = min(xs), max(xs)
    y_min, y_max = min(ys), max(ys)
    if x_max == x_min:
        x_max = x_min + 1.0
    if y_max == y_min:
        y_max = y_min + 1.0
    pad_x = 0.05 * (x_max - x_min)
    pad_y = 0.05 * (y_max - y_min)
    x_min -= pad_x
    x_max += pad_x
    y_min -= pad_y
    y_max += pad_y
    sx = (_CANVAS_W - 2 * _MARGIN) / (x_max - x_min)
    sy = (_CANVAS_H - 2 * _MARGIN) / (y_max - y_min)

    def px(x: float) -> float:
        return _MARGIN + (x - x_min) * sx

    def py(y: float) -> float:
        return _CANVAS_H - _MARGIN - (y - y_min) * sy

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(_CANVAS_W)}" height="{int(_CANVAS_H)}" '
        f'viewBox="0 0 {int(_CANVAS_W)} {int(_CANVAS_H)}">',
        f'<rect x="0" y="0" width="{int(_CANVAS_W)}" height="{int(_CANVAS_H)}" fill="white"/>',
        f'<line x1="{_fmt(_MARGIN)}" y1="{_fmt(_CANVAS_H - _MARGIN)}" x2="{_fmt(_CANVAS_W - _MARGIN)}" '
        f'y2="{_fmt(_CANVAS_H - _MARGIN)}" stroke="black" stroke-width="1"/>',
        f'<line x1="{_fmt(_MARGIN)}" y1="{_fmt(_MARGIN)}" x2="{_fmt(_MARGIN)}" '
        f'y2="{_fmt(_CANVAS_H - _MARGIN)}" stroke="black" stroke-width="1"/>',
        f'<text x="{_fmt(_CANVAS_W / 2)}" y="{_fmt(_CANVAS_H - 15)}" text-anchor="middle" '
        f'font-family="monospace" font-size="14">{proj.x_name}</text>',
        f'<text x="18" y="{_fmt(_CANVAS_H / 2)}" text-anchor="middle" font-family="monospace" '
        f'font-size="14" transform="rotate(-90 18 {_fmt(_CANVAS_H / 2)})">{proj.y_name}</text>',
        f'<text x="{_fmt(_MARGIN)}" y="{_fmt(_CANVAS_H - _MARGIN + 18)}" text-anchor="middle" '
        f'font-family="monospace" font-size="11">{format_number(round(x_min, 6))}</text>',
        f'<text x="{_fmt(_CANVAS_W - _MARGIN)}" y="{_fmt(_CANVAS_H - _MARGIN + 18)}" text-anchor="middle" '
        f'font-family="monospace" font-size="11">{format_number(round(x_max, 6))}</text>',
        f'<text x="{_fmt(_MARGIN - 8)}" y="{_fmt(_CANVAS_H - _MARGIN)}" text-anchor="end" '
        f'font-family="monospace" font-size="11">{format_number(round(y_min, 6))}</text>',
        f'<text x="{_fmt(_MARGIN - 8)}" y="{_fmt(_MARGIN + 4)}" text-anchor="end" '
        f'font-family="monospace" font-size="11">{format_number(round(y_max, 6))}</text>',
    ]
    for xl, xh, yl, yh in proj.rects:
        x = px(xl)
        y = py(yh)
        w = max(px(xh) - px(xl), 0.2)
        h = max(py(yl) - py(yh), 0.2)
        out.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" height="{_fmt(h)}" '
            f'fill="steelblue" fill-opacity="0.25" stroke="steelblue" stroke-width="0.5"/>'
        )
    if proj.points:
        runs: list = [[]]
        for point in proj.points:
            if point is None:
                runs.append([])
            else:
                runs[-1].append(point)
        for run in runs:
            if not run:
                continue
            coords = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in run)
            out.append(
                f'<polyline points="{coords}" fill="none" stroke="firebrick" stroke-width="1.2"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"
