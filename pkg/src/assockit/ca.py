"""Correspondence analysis of a two-way contingency table."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionUnavailable, InvalidDomain, TooManyDimensions
from .numerics import svd
from .svg import Svg
from .table import ContingencyTable, expected_matrix

__all__ = [
    "CaSolution",
    "standardized_residuals",
    "fit_ca",
    "export_biplot",
    "biplot_svg",
    "coordinates_csv",
    "RANK_TOL",
]

# singular values below RANK_TOL * largest are treated as exact zeros
RANK_TOL = 1e-12


def standardized_residuals(table: ContingencyTable) -> np.ndarray:
    """``(O - E) / sqrt(N * E)``; the squares sum to chi2 / N."""
    expected = expected_matrix(table)
    out = (table.counts - expected) / np.sqrt(table.n * expected)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class CaSolution:
    """Principal coordinates and inertia decomposition.

    ``singular_values`` and ``variance_explained`` cover all
    ``min(r, c) - 1`` dimensions; the coordinate matrices hold the first
    ``ndim`` of them.
    """

    singular_values: np.ndarray
    row_coords: np.ndarray = field(repr=False)
    col_coords: np.ndarray = field(repr=False)
    variance_explained: np.ndarray
    row_labels: tuple
    col_labels: tuple
    row_masses: np.ndarray = field(repr=False)
    col_masses: np.ndarray = field(repr=False)

    @property
    def ndim(self) -> int:
        return self.row_coords.shape[1]

    @property
    def max_dims(self) -> int:
        return len(self.singular_values)

    @property
    def total_inertia(self) -> float:
        return float(np.sum(self.singular_values ** 2))

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.singular_values))

    def summary(self) -> dict:
        return {
            "ndim": self.ndim,
            "max_dims": self.max_dims,
            "rank": self.rank,
            "singular_values": [float(s) for s in self.singular_values],
            "principal_inertias": [float(s * s) for s in self.singular_values],
            "variance_explained": [float(v) for v in self.variance_explained],
            "total_inertia": self.total_inertia,
        }


def fit_ca(table: ContingencyTable, ndim: Optional[int] = None) -> CaSolution:
    """Fit CA with principal coordinates for both rows and columns.

    Rows get ``D_R^{-1/2} U Delta`` and columns ``D_C^{-1/2} V Delta``, where
    ``D_R``/``D_C`` hold the marginal row/column proportions.  ``ndim``
    defaults to every available dimension.
    """
    k = min(table.shape) - 1
    if ndim is None:
        ndim = k
    if ndim != int(ndim) or ndim < 1:
        raise InvalidDomain(f"ndim must be a positive integer, got {ndim}")
    if ndim > k:
        raise TooManyDimensions(f"a {table.shape[0]}x{table.shape[1]} table has at most {k} dimension(s), asked for {ndim}")
    s_mat = standardized_residuals(table)
    dec = svd(s_mat)
    sv = dec.singular_values[:k].copy()
    top = sv[0] if sv.size else 0.0
    sv[sv < RANK_TOL * top] = 0.0
    if top == 0.0:
        sv[:] = 0.0
    n = float(table.n)
    row_mass = table.row_totals / n
    col_mass = table.col_totals / n
    rows = (dec.left_vectors[:, :ndim] * sv[:ndim]) / np.sqrt(row_mass)[:, None]
    cols = (dec.right_vectors[:, :ndim] * sv[:ndim]) / np.sqrt(col_mass)[:, None]
    sq = sv ** 2
    var = sq / sq.sum() if sq.sum() > 0 else np.zeros_like(sq)
    for arr in (sv, rows, cols, var, row_mass, col_mass):
        arr.setflags(write=False)
    return CaSolution(
        singular_values=sv,
        row_coords=rows,
        col_coords=cols,
        variance_explained=var,
        row_labels=table.row_labels,
        col_labels=table.col_labels,
        row_masses=row_mass,
        col_masses=col_mass,
    )


def _check_dims(solution: CaSolution, dims: Sequence[int]):
    dims = tuple(int(d) for d in dims)
    if not 1 <= len(dims) <= 2:
        raise DimensionUnavailable("a biplot takes one or two dimensions")
    for d in dims:
        if d < 1 or d > solution.ndim:
            raise DimensionUnavailable(
                f"dimension {d} unavailable; solution has {solution.ndim} dimension(s)"
            )
    return dims


def coordinates_csv(solution: CaSolution) -> str:
    """CSV dump: one line per category, ``label,axis,kind,coord1..coordk``.

    ``axis`` is 0 for row categories and 1 for column categories.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "axis", "kind"] + [f"coord{d + 1}" for d in range(solution.ndim)])
    for axis, kind, labels, coords in (
        (0, "row", solution.row_labels, solution.row_coords),
        (1, "col", solution.col_labels, solution.col_coords),
    ):
        for lab, xy in zip(labels, coords):
            w.writerow([lab, axis, kind] + [repr(float(v)) for v in xy])
    return buf.getvalue()


def biplot_svg(solution: CaSolution, dims=(1, 2), title: str = "") -> str:
    dims = _check_dims(solution, dims)
    size, margin = 640.0, 80.0
    svg = Svg(size, size, title or "Correspondence analysis biplot")
    idx = [d - 1 for d in dims]
    pts_r = solution.row_coords[:, idx]
    pts_c = solution.col_coords[:, idx]
    extent = float(np.max(np.abs(np.vstack([pts_r, pts_c])))) if pts_r.size else 0.0
    extent = extent * 1.1 if extent > 0 else 1.0
    half = (size - 2 * margin) / 2.0
    cx = cy = size / 2.0

    def to_px(p):
        x = cx + p[0] / extent * half
        y = cy - (p[1] / extent * half if len(p) > 1 else 0.0)
        return x, y

    pct = [100.0 * solution.variance_explained[i] for i in idx]
    svg.line(margin, cy, size - margin, cy, stroke="#888888", stroke_dasharray="4 3")
    svg.text(cx, size - 30, f"Dimension {dims[0]} ({pct[0]:.1f}%)", size=13, anchor="middle")
    if len(dims) == 2:
        svg.line(cx, margin, cx, size - margin, stroke="#888888", stroke_dasharray="4 3")
        svg.text(30, cy, f"Dimension {dims[1]} ({pct[1]:.1f}%)", size=13, anchor="middle",
                 transform=f"rotate(-90 30 {cy:.2f})")
    if title:
        svg.text(cx, 30, title, size=15, anchor="middle")

    one_axis = len(dims) == 1
    for lab, p in zip(solution.row_labels, pts_r):
        x, y = to_px(p)
        if one_axis:
            y -= 12.0
        svg.circle(x, y, 4.5, fill="#1f5fa8", class_="row-point")
        svg.text(x + 7, y - 6, lab, fill="#1f5fa8")
    for lab, p in zip(solution.col_labels, pts_c):
        x, y = to_px(p)
        if one_axis:
            y += 12.0
        svg.polygon([(x, y - 6), (x - 5.5, y + 4), (x + 5.5, y + 4)], fill="#c0392b", class_="col-point")
        svg.text(x + 7, y + 14, lab, fill="#c0392b")
    return svg.render()


def export_biplot(solution: CaSolution, dims=(1, 2), output_format: str = "svg", title: str = "") -> str:
    """Render the biplot (``svg``) or dump coordinates (``csv``)."""
    dims = _check_dims(solution, dims)
    if output_format == "svg":
        return biplot_svg(solution, dims, title)
    if output_format == "csv":
        return coordinates_csv(solution)
    raise ValueError(f"unknown output format {output_format!r}")
