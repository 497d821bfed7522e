"""SVG glyph fields of SH functions.

Each glyph is the polar curve of the function in the axial (x-y) plane,
``r(theta) ~ max(f(cos theta, sin theta, 0), 0)``, drawn in its own grid
cell. Negative lobes are clamped for display only. Colour follows the
absolute components of the function's peak direction on the full sphere,
mapped to RGB.
"""
from dataclasses import dataclass

import numpy as np

from . import sh
from .errors import EmptyScene

MIN_DENSITY = 64
_PEAK_DIRS = 2000


@dataclass
class GlyphScene:
    cells: list
    cols: int
    normalization: str = "voxel"
    density: int = 128
    cell_size: float = 60.0

    def __post_init__(self):
        if not self.cells:
            raise EmptyScene("nothing to render")
        if self.cols < 1:
            raise ValueError("grid needs at least one column")
        if self.density < MIN_DENSITY:
            raise ValueError(f"glyph density must be >= {MIN_DENSITY}")
        if self.normalization not in ("voxel", "global"):
            raise ValueError("normalization is 'voxel' or 'global'")

    @property
    def rows(self):
        return -(-len(self.cells) // self.cols)


def slice_directions(density):
    theta = 2.0 * np.pi * np.arange(density) / density
    return theta, np.column_stack([np.cos(theta), np.sin(theta), np.zeros(density)])


def glyph_radii(coeffs, density):
    """Clamped amplitudes along ``density`` equally spaced in-plane angles."""
    _, dirs = slice_directions(density)
    return np.maximum(sh.evaluate(coeffs, dirs), 0.0)


def peak_color(coeffs):
    dirs = sh.fibonacci_sphere(_PEAK_DIRS)
    peak = dirs[np.argmax(sh.evaluate(coeffs, dirs))]
    rgb = np.rint(255 * np.abs(peak)).astype(int)
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def render_svg(scene):
    """Serialise ``scene`` as an SVG document string."""
    coeffs = [c.coeffs if isinstance(c, sh.SHCoeffs) else np.asarray(c, float) for c in scene.cells]
    theta, _ = slice_directions(scene.density)
    radii = [glyph_radii(c, scene.density) for c in coeffs]
    global_max = max((r.max() for r in radii), default=0.0)
    size = scene.cell_size
    half = 0.45 * size
    width, height = scene.cols * size, scene.rows * size
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="#000000"/>',
    ]
    for k, (c, r) in enumerate(zip(coeffs, radii)):
        row, col = divmod(k, scene.cols)
        cx, cy = (col + 0.5) * size, (row + 0.5) * size
        scale = r.max() if scene.normalization == "voxel" else global_max
        rr = half * r / scale if scale > 0 else np.zeros_like(r)
        xs = cx + rr * np.cos(theta)
        ys = cy - rr * np.sin(theta)
        path = "M" + " L".join(f"{x:.3f},{y:.3f}" for x, y in zip(xs, ys)) + " Z"
        out.append(
            f'<path id="glyph-{k}" d="{path}" fill="{peak_color(c)}" stroke="none"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
