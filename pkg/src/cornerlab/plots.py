"""Standalone SVG and CSV emitters (no plotting dependency)."""
from __future__ import annotations

from xml.sax.saxutils import escape


def _frame(width: int, height: int, body: list[str], title: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">')
    return "\n".join([head, f"<title>{escape(title)}</title>",
                      f'<rect width="{width}" height="{height}" fill="white"/>', *body, "</svg>\n"])


def grid_svg(points, window, title: str = "set", cell: int = 8) -> str:
    """Filled cells for the points of a grid set; y grows upward."""
    x_lo, x_hi, y_lo, y_hi = window
    w = (x_hi - x_lo + 1) * cell
    h = (y_hi - y_lo + 1) * cell
    body = [f'<rect x="{(x - x_lo) * cell}" y="{(y_hi - y) * cell}" width="{cell}" height="{cell}" '
            f'fill="black"/>' for x, y in points]
    body.append(f'<rect width="{w}" height="{h}" fill="none" stroke="gray"/>')
    return _frame(w, h, body, title)


def line_svg(xs, ys, title: str = "series", width: int = 480, height: int = 320) -> str:
    """Polyline with markers, axes scaled to the data range."""
    pad = 40
    if not len(xs):
        return _frame(width, height, [], title)
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(min(ys), 0.0), max(max(ys), 1e-12)
    sx = (width - 2 * pad) / (x1 - x0 or 1)
    sy = (height - 2 * pad) / (y1 - y0 or 1)
    pts = [(pad + (x - x0) * sx, height - pad - (y - y0) * sy) for x, y in zip(xs, ys)]
    body = [f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
            f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
            '<polyline fill="none" stroke="navy" points="' + " ".join(f"{a:.2f},{b:.2f}" for a, b in pts) + '"/>']
    body += [f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3" fill="navy"/>' for a, b in pts]
    body.append(f'<text x="{pad}" y="{pad - 10}" font-size="12">{escape(title)}  '
                f'[{y0:.4g}, {y1:.4g}]</text>')
    return _frame(width, height, body, title)


def bars_svg(values, title: str = "histogram", bins: int = 20, width: int = 480, height: int = 320) -> str:
    pad = 40
    if not len(values):
        return _frame(width, height, [], title)
    lo, hi = min(values), max(values)
    span = (hi - lo) or 1
    counts = [0] * bins
    for v in values:
        counts[min(int((v - lo) / span * bins), bins - 1)] += 1
    top = max(counts)
    bw = (width - 2 * pad) / bins
    body = [f'<rect x="{pad + i * bw:.2f}" y="{height - pad - c / top * (height - 2 * pad):.2f}" '
            f'width="{bw - 1:.2f}" height="{c / top * (height - 2 * pad):.2f}" fill="steelblue"/>'
            for i, c in enumerate(counts)]
    body.append(f'<text x="{pad}" y="{pad - 10}" font-size="12">{escape(title)}  [{lo:.4g}, {hi:.4g}]</text>')
    return _frame(width, height, body, title)


def to_csv(header, rows) -> str:
    lines = [",".join(str(h) for h in header)]
    lines += [",".join(str(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"
