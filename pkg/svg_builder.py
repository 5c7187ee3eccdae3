"""Minimal deterministic SVG writer for heatmaps and line charts."""

import math
from html import escape

FONT = 'font-family="Arial"'


def _fmt(value: float) -> str:
    return f"{value:.2f}"


class SVG:
    """Accumulates SVG elements; coordinates are formatted with fixed precision."""

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self._parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            '<rect x="0" y="0" width="100%" height="100%" fill="#ffffff"/>',
        ]

    def rect(self, x, y, width, height, fill, stroke="none"):
        self._parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(width)}" height="{_fmt(height)}" '
            f'fill="{fill}" stroke="{stroke}"/>'
        )

    def line(self, x1, y1, x2, y2, stroke="#000000", width=1.0, dash=None):
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ''
        self._parts.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{stroke}" stroke-width="{width:g}"{dash_attr}/>'
        )

    def polyline(self, points, stroke, width=1.5):
        coords = ' '.join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        self._parts.append(
            f'<polyline fill="none" stroke="{stroke}" stroke-width="{width:g}" points="{coords}"/>'
        )

    def text(self, x, y, string, size=12, anchor="middle", rotate=None):
        transform = f' transform="rotate({rotate} {_fmt(x)} {_fmt(y)})"' if rotate is not None else ''
        self._parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" text-anchor="{anchor}" font-size="{size}" '
            f'{FONT}{transform}>{escape(str(string))}</text>'
        )

    def group_start(self, title=None):
        self._parts.append('<g>')
        if title:
            self._parts.append(f'<title>{escape(title)}</title>')

    def group_end(self):
        self._parts.append('</g>')

    def get_svg(self) -> str:
        return '\n'.join(self._parts) + '\n</svg>\n'

    def save(self, path: str):
        with open(path, 'w', newline='\n') as f:
            f.write(self.get_svg())


def nice_ticks(low: float, high: float, count: int = 5):
    """Evenly spaced tick values covering [low, high] with a 1/2/5 step."""
    if high <= low:
        high = low + 1.0
    raw = (high - low) / max(count, 1)
    magnitude = 10 ** math.floor(math.log10(raw))
    step = next(m * magnitude for m in (1, 2, 5, 10) if m * magnitude >= raw)
    start = math.floor(low / step) * step
    ticks = []
    value = start
    while value <= high + 1e-12 * step:
        ticks.append(round(value, 10))
        value += step
    if ticks[-1] < high:
        ticks.append(round(value, 10))
    return ticks

