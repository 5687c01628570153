"""Minimal deterministic SVG writer.

Coordinates are formatted with a fixed precision so that identical inputs give
byte-identical documents.  No external fonts or resources are referenced.
"""

from __future__ import annotations

from xml.sax.saxutils import escape, quoteattr


def _num(v) -> str:
    s = f"{float(v):.2f}"
    return "0.00" if s == "-0.00" else s


def _attrs(attrs: dict) -> str:
    parts = []
    for k, v in attrs.items():
        if v is None:
            continue
        if isinstance(v, float):
            v = _num(v)
        parts.append(f"{k.rstrip('_').replace('_', '-')}={quoteattr(str(v))}")
    return " ".join(parts)


class Svg:
    def __init__(self, width: float, height: float, title: str = ""):
        self.width = width
        self.height = height
        self.items = []
        if title:
            self.items.append(f"<title>{escape(title)}</title>")
        self.items.append(
            f'<rect x="0" y="0" width="{_num(width)}" height="{_num(height)}" fill="white"/>'
        )

    def add(self, tag: str, text: str = None, **attrs):
        a = _attrs(attrs)
        if text is None:
            self.items.append(f"<{tag} {a}/>")
        else:
            self.items.append(f"<{tag} {a}>{escape(str(text))}</{tag}>")

    def line(self, x1, y1, x2, y2, **attrs):
        self.add("line", x1=float(x1), y1=float(y1), x2=float(x2), y2=float(y2), **attrs)

    def rect(self, x, y, w, h, **attrs):
        self.add("rect", x=float(x), y=float(y), width=float(w), height=float(h), **attrs)

    def circle(self, cx, cy, r, **attrs):
        self.add("circle", cx=float(cx), cy=float(cy), r=float(r), **attrs)

    def polygon(self, points, **attrs):
        pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in points)
        self.add("polygon", points=pts, **attrs)

    def polyline(self, points, **attrs):
        pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in points)
        self.add("polyline", points=pts, fill="none", **attrs)

    def text(self, x, y, s, size=11, anchor="start", **attrs):
        self.add("text", s, x=float(x), y=float(y), font_size=size,
                 font_family="sans-serif", text_anchor=anchor, **attrs)

    def render(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(self.width)}" '
            f'height="{_num(self.height)}" viewBox="0 0 {_num(self.width)} {_num(self.height)}">\n'
        )
        return head + "\n".join(self.items) + "\n</svg>\n"


def diverging_color(value: float, limit: float) -> str:
    """Blue (negative) through white to red (positive), clipped at +-limit."""
    if limit <= 0:
        t = 0.0
    else:
        t = max(-1.0, min(1.0, value / limit))
    if t >= 0:
        r, g, b = 255, round(255 * (1 - t)), round(255 * (1 - t))
    else:
        r, g, b = round(255 * (1 + t)), round(255 * (1 + t)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(values, row_labels, col_labels, title: str = "", fmt: str = "{:+.0f}%") -> str:
    """Annotated heatmap of a matrix with a symmetric diverging colour scale."""
    rows, cols = len(row_labels), len(col_labels)
    cell_w, cell_h = 70.0, 24.0
    left = 12.0 + 7.0 * max(len(str(s)) for s in row_labels)
    top = 60.0 + 5.0 * max(len(str(s)) for s in col_labels)
    svg = Svg(left + cols * cell_w + 20, top + rows * cell_h + 20, title)
    if title:
        svg.text(10, 20, title, size=14)
    flat = [abs(float(v)) for row in values for v in row]
    limit = max(flat) if flat else 0.0
    for j, lab in enumerate(col_labels):
        x = left + (j + 0.5) * cell_w
        svg.text(x, top - 8, lab, anchor="start",
                 transform=f"rotate(-45 {_num(x)} {_num(top - 8)})")
    for i, lab in enumerate(row_labels):
        y = top + i * cell_h
        svg.text(left - 6, y + cell_h * 0.65, lab, anchor="end")
        for j in range(cols):
            v = float(values[i][j])
            x = left + j * cell_w
            svg.rect(x, y, cell_w, cell_h, fill=diverging_color(v, limit), stroke="#999999")
            svg.text(x + cell_w / 2, y + cell_h * 0.65, fmt.format(v), size=10, anchor="middle")
    return svg.render()
