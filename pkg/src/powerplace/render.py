"""Vector rendering of a placement: one SVG user unit per length unit.

Component rectangles get solid outlines, subsystem bounding boxes dashed
ones, mechanical connections straight black shafts and electrical connections
orange polylines. The geometry written to the file equals the solution
coordinates exactly; display flipping (SVG's y axis points down) happens in a
group transform.
"""

from __future__ import annotations

from pathlib import Path as FsPath

from .solution import SolutionDocument


class RenderError(ValueError):
    pass


def _f(value: float) -> str:
    return f"{value:.9g}"


def render_layout(doc: SolutionDocument, path=None) -> str:
    if doc.status not in ("optimal", "gap-limit", "node-limit"):
        raise RenderError(f"rendering refused: solution status is {doc.status!r}")
    W, L = doc.design_space
    pad = 0.03 * max(W, L)
    view = (f"{_f(-W / 2 - pad)} {_f(-L / 2 - pad)} "
            f"{_f(W + 2 * pad)} {_f(L + 2 * pad)}")
    stroke = max(W, L) / 400
    dot = max(W, L) / 150
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{view}">',
        f'<g class="layout" transform="scale(1 -1)" stroke-width="{_f(stroke)}">',
        f'<rect class="design-space" x="{_f(-W / 2)}" y="{_f(-L / 2)}" '
        f'width="{_f(W)}" height="{_f(L)}" fill="none" stroke="#444444"/>',
    ]
    for elem in sorted(doc.elements, key=lambda e: e.level):
        x0 = elem.x - elem.width / 2
        y0 = elem.y - elem.length / 2
        if elem.kind == "subsystem":
            style = (f'fill="none" stroke="#333333" '
                     f'stroke-dasharray="{_f(3 * stroke)} {_f(2 * stroke)}"')
            cls = "subsystem"
        else:
            style = 'fill="#d8e4f0" fill-opacity="0.85" stroke="#1f3a5f"'
            cls = "component"
        lines.append(
            f'<rect class="{cls}" data-path="{elem.path}" x="{_f(x0)}" y="{_f(y0)}" '
            f'width="{_f(elem.width)}" height="{_f(elem.length)}" {style}/>')
    port_pos = {p.port: (p.x, p.y) for p in doc.ports}
    for conn in doc.connections:
        sx, sy = port_pos[conn.source]
        tx, ty = port_pos[conn.target]
        if conn.domain == "mechanical":
            lines.append(
                f'<line class="mech-connection" x1="{_f(sx)}" y1="{_f(sy)}" '
                f'x2="{_f(tx)}" y2="{_f(ty)}" stroke="#000000"/>')
        else:
            lines.append(
                f'<polyline class="elec-connection" '
                f'points="{_f(sx)},{_f(sy)} {_f(tx)},{_f(ty)}" '
                f'fill="none" stroke="#e8820c"/>')
    for port in doc.ports:
        color = "#000000" if port.domain == "mechanical" else "#e8820c"
        lines.append(
            f'<circle class="port" cx="{_f(port.x)}" cy="{_f(port.y)}" '
            f'r="{_f(dot)}" fill="{color}"/>')
    lines.append("</g>")
    lines.append("</svg>")
    text = "\n".join(lines) + "\n"
    if path is not None:
        FsPath(path).write_text(text, encoding="utf-8")
    return text
