"""CSV readers for tables, configurations, codings and mention lists, plus an
atomic file writer."""

from __future__ import annotations

import csv
import os
import tempfile
from collections import OrderedDict
from pathlib import Path

import numpy as np

from .compare import Configuration
from .errors import AssocError, ParseError
from .reliability import CodingMatrix, MentionLists
from .table import ContingencyTable

__all__ = [
    "read_tables",
    "parse_wide",
    "parse_long",
    "read_configuration",
    "read_codings",
    "read_mentions",
    "write_atomic",
]


def _rows(path):
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            rows = [r for r in csv.reader(fh) if any(cell.strip() for cell in r)]
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror or exc}") from exc
    if not rows:
        raise ParseError(f"{path}: file is empty")
    return [[cell.strip() for cell in r] for r in rows]


def _int(value, where):
    try:
        f = float(value)
    except ValueError:
        raise ParseError(f"{where}: {value!r} is not a count") from None
    if not f.is_integer():
        raise ParseError(f"{where}: {value!r} is not an integer count")
    return int(f)


def parse_wide(rows, source="<input>") -> ContingencyTable:
    header = rows[0]
    col_labels = header[1:]
    row_labels, counts = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"{source}:{lineno}: expected {len(header)} fields, got {len(row)}")
        row_labels.append(row[0])
        counts.append([_int(v, f"{source}:{lineno}") for v in row[1:]])
    try:
        return ContingencyTable(tuple(row_labels), tuple(col_labels), np.array(counts, dtype=np.int64))
    except AssocError as exc:
        raise ParseError(f"{source}: {exc}") from exc


def parse_long(rows, source="<input>") -> list:
    header = [h.lower() for h in rows[0]]
    if header[:3] != ["row", "col", "count"] or len(header) not in (3, 4) or (
        len(header) == 4 and header[3] != "split"
    ):
        raise ParseError(f"{source}: long format header must be row,col,count[,split]")
    has_split = len(header) == 4
    groups = OrderedDict()
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"{source}:{lineno}: expected {len(header)} fields, got {len(row)}")
        split = row[3] if has_split else None
        g = groups.setdefault(split, {"rows": [], "cols": [], "cells": {}})
        r, c = row[0], row[1]
        count = _int(row[2], f"{source}:{lineno}")
        if r not in g["rows"]:
            g["rows"].append(r)
        if c not in g["cols"]:
            g["cols"].append(c)
        g["cells"][(r, c)] = g["cells"].get((r, c), 0) + count
    if not groups:
        raise ParseError(f"{source}: no data rows")
    tables = []
    for split, g in groups.items():
        counts = np.array([[g["cells"].get((r, c), 0) for c in g["cols"]] for r in g["rows"]], dtype=np.int64)
        try:
            tables.append(ContingencyTable(tuple(g["rows"]), tuple(g["cols"]), counts, split))
        except AssocError as exc:
            where = f"{source} (split {split!r})" if has_split else source
            raise ParseError(f"{where}: {exc}") from exc
    return tables


def read_tables(path) -> list:
    """Read a wide or long CSV; returns one table per split level.

    Wide: the first header cell is blank.  Long: header ``row,col,count`` with
    an optional ``split`` column; repeated (row, col, split) triples are summed.
    """
    rows = _rows(path)
    if len(rows) < 2:
        raise ParseError(f"{path}: no data rows")
    if rows[0][0] == "":
        return [parse_wide(rows, str(path))]
    if [h.lower() for h in rows[0][:3]] == ["row", "col", "count"]:
        return parse_long(rows, str(path))
    raise ParseError(f"{path}: unrecognised layout (wide needs a blank first header cell; "
                     "long needs a row,col,count header)")


def read_configuration(path) -> Configuration:
    """Configuration CSV with header ``label,x1,x2,...``."""
    rows = _rows(path)
    header = rows[0]
    if header[0].lower() != "label" or len(header) < 2:
        raise ParseError(f"{path}: header must be label,x1,x2,...")
    labels, coords = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        labels.append(row[0])
        try:
            coords.append([float(v) for v in row[1:]])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: non-numeric coordinate") from None
    try:
        return Configuration(tuple(labels), np.array(coords))
    except AssocError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _triples(path, expected):
    rows = _rows(path)
    header = [h.lower() for h in rows[0]]
    if header != expected:
        raise ParseError(f"{path}: header must be {','.join(expected)}")
    if len(rows) < 2:
        raise ParseError(f"{path}: no data rows")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise ParseError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        out.append((lineno, row))
    return out


def read_codings(path) -> CodingMatrix:
    """Coding CSV ``unit,coder,label``; absent (unit, coder) pairs are missing."""
    recs = [tuple(row) for _, row in _triples(path, ["unit", "coder", "label"])]
    try:
        return CodingMatrix.from_records(recs)
    except AssocError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def read_mentions(path) -> MentionLists:
    """Mentions CSV ``subject,rank,category``."""
    recs = []
    for lineno, (subject, rank, cat) in _triples(path, ["subject", "rank", "category"]):
        recs.append((subject, _int(rank, f"{path}:{lineno}"), cat))
    try:
        return MentionLists.from_ranked(recs)
    except AssocError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def write_atomic(path, text: str):
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
