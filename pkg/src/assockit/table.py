"""Contingency-table model: validation, margins, expected counts, 2x2 collapses
and minimum-expected-count diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateLabel,
    EmptyTable,
    IndexOutOfRange,
    NegativeCount,
    ZeroMargin,
)

__all__ = [
    "ContingencyTable",
    "CriteriaReport",
    "build_table",
    "expected_matrix",
    "collapse_cell",
    "criteria_report",
    "prune_empty",
    "ANDRES_N_SWITCH",
]

# Andres et al. minimum-expected thresholds switch above this grand total.
ANDRES_N_SWITCH = 500


def _check_labels(labels, axis):
    labels = tuple(str(x) for x in labels)
    seen = set()
    for lab in labels:
        if lab in seen:
            raise DuplicateLabel(f"duplicate {axis} label {lab!r}")
        seen.add(lab)
    return labels


@dataclass(frozen=True)
class ContingencyTable:
    """Labeled r x c table of nonnegative integer counts.

    Build through :func:`build_table` (or the constructor, which runs the same
    validation).  ``counts`` is stored as a read-only int64 array.
    """

    row_labels: tuple
    col_labels: tuple
    counts: np.ndarray = field(repr=False)
    split_label: Optional[str] = None

    def __post_init__(self):
        rows = _check_labels(self.row_labels, "row")
        cols = _check_labels(self.col_labels, "column")
        raw = np.asarray(self.counts)
        if raw.ndim != 2:
            raise DimensionMismatch(f"counts must be a 2-d matrix, got {raw.ndim} dimension(s)")
        if raw.shape != (len(rows), len(cols)):
            raise DimensionMismatch(
                f"counts shape {raw.shape} does not match {len(rows)} row and {len(cols)} column labels"
            )
        if len(rows) < 2 or len(cols) < 2:
            raise DimensionMismatch("a contingency table needs at least 2 rows and 2 columns")
        if raw.dtype.kind == "b":
            raise DimensionMismatch("boolean counts are not accepted")
        if raw.dtype.kind not in "iu":
            if raw.dtype.kind != "f" or not np.all(np.isfinite(raw)) or np.any(raw != np.round(raw)):
                raise DimensionMismatch("counts must be integers")
        counts = raw.astype(np.int64)
        if np.any(counts < 0):
            i, j = np.argwhere(counts < 0)[0]
            raise NegativeCount(f"negative count {counts[i, j]} at ({rows[i]!r}, {cols[j]!r})")
        if counts.sum() == 0:
            raise EmptyTable("table has grand total N = 0")
        counts.setflags(write=False)
        object.__setattr__(self, "row_labels", rows)
        object.__setattr__(self, "col_labels", cols)
        object.__setattr__(self, "counts", counts)
        if self.split_label is not None:
            object.__setattr__(self, "split_label", str(self.split_label))

    @property
    def shape(self):
        return self.counts.shape

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def is_2x2(self) -> bool:
        return self.counts.shape == (2, 2)

    @property
    def df(self) -> int:
        r, c = self.counts.shape
        return (r - 1) * (c - 1)

    def check_margins(self):
        """Raise :class:`ZeroMargin` naming the first empty row or column."""
        for lab, tot in zip(self.row_labels, self.row_totals):
            if tot == 0:
                raise ZeroMargin("row", lab)
        for lab, tot in zip(self.col_labels, self.col_totals):
            if tot == 0:
                raise ZeroMargin("column", lab)

    def __eq__(self, other):
        if not isinstance(other, ContingencyTable):
            return NotImplemented
        return (
            self.row_labels == other.row_labels
            and self.col_labels == other.col_labels
            and self.split_label == other.split_label
            and np.array_equal(self.counts, other.counts)
        )

    def __hash__(self):
        return hash((self.row_labels, self.col_labels, self.split_label, self.counts.tobytes()))


def build_table(row_labels: Sequence, col_labels: Sequence, counts, split_label: Optional[str] = None) -> ContingencyTable:
    """Validate inputs and return an immutable :class:`ContingencyTable`."""
    return ContingencyTable(tuple(row_labels), tuple(col_labels), np.asarray(counts), split_label)


def expected_matrix(table: ContingencyTable) -> np.ndarray:
    """Expected counts under independence, ``R_i * C_j / N``.

    Raises ZeroMargin if any row or column is empty.
    """
    table.check_margins()
    rows = table.row_totals.astype(np.float64)
    cols = table.col_totals.astype(np.float64)
    # products of integer margins are exact in float64 for any realistic N
    out = np.outer(rows, cols) / float(table.n)
    out.setflags(write=False)
    return out


def collapse_cell(table: ContingencyTable, i: int, j: int) -> ContingencyTable:
    """Collapse ``table`` to the 2x2 table of cell (i, j) against everything else."""
    r, c = table.shape
    if not (0 <= i < r and 0 <= j < c):
        raise IndexOutOfRange(f"cell ({i}, {j}) outside a {r}x{c} table")
    o = int(table.counts[i, j])
    ri = int(table.row_totals[i])
    cj = int(table.col_totals[j])
    n = table.n
    counts = [[o, ri - o], [cj - o, n - ri - cj + o]]
    row_lab = table.row_labels[i]
    col_lab = table.col_labels[j]
    return ContingencyTable(
        (row_lab, f"not {row_lab}"),
        (col_lab, f"not {col_lab}"),
        np.array(counts, dtype=np.int64),
        table.split_label,
    )


@dataclass(frozen=True)
class CriteriaReport:
    """Share of cells meeting each minimum-expected-count rule.

    standard: E >= 5.  haber: E >= max(5, N/10).  andres: E > 3.9 when
    N <= 500, else E > 6.2.
    """

    prop_standard: float
    prop_haber: float
    prop_andres: float
    standard_flags: np.ndarray = field(repr=False)
    haber_flags: np.ndarray = field(repr=False)
    andres_flags: np.ndarray = field(repr=False)

    def as_dict(self) -> dict:
        return {
            "prop_standard": self.prop_standard,
            "prop_haber": self.prop_haber,
            "prop_andres": self.prop_andres,
        }


def _flags(expected: np.ndarray, n: int):
    standard = expected >= 5.0
    haber = expected >= max(5.0, n / 10.0)
    andres_cut = 3.9 if n <= ANDRES_N_SWITCH else 6.2
    andres = expected > andres_cut
    return standard, haber, andres


def criteria_report(table: ContingencyTable) -> CriteriaReport:
    expected = expected_matrix(table)
    flags = _flags(expected, table.n)
    for f in flags:
        f.setflags(write=False)
    standard, haber, andres = flags
    return CriteriaReport(
        prop_standard=float(standard.mean()),
        prop_haber=float(haber.mean()),
        prop_andres=float(andres.mean()),
        standard_flags=standard,
        haber_flags=haber,
        andres_flags=andres,
    )


def prune_empty(table: ContingencyTable):
    """Drop empty rows and columns.

    Returns ``(pruned_table, dropped)`` where ``dropped`` lists
    ``(axis, label)`` pairs.  Raises DimensionMismatch if fewer than two rows
    or columns survive.
    """
    keep_r = table.row_totals > 0
    keep_c = table.col_totals > 0
    dropped = [("row", lab) for lab, k in zip(table.row_labels, keep_r) if not k]
    dropped += [("column", lab) for lab, k in zip(table.col_labels, keep_c) if not k]
    if not dropped:
        return table, []
    pruned = ContingencyTable(
        tuple(lab for lab, k in zip(table.row_labels, keep_r) if k),
        tuple(lab for lab, k in zip(table.col_labels, keep_c) if k),
        table.counts[np.ix_(keep_r, keep_c)],
        table.split_label,
    )
    return pruned, dropped
