"""Per-table analysis reports and batch summaries across many tables."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .association import (
    cellwise_tests,
    chi_squared_test,
    fisher_exact_2x2,
    fisher_exact_montecarlo,
    pct_diff_matrix,
)
from .ca import fit_ca
from .power import OMEGA_GRID, PowerQuery, chi2_power, effect_sizes, omega_label
from .table import ContingencyTable, criteria_report, prune_empty

__all__ = [
    "SCHEMA_VERSION",
    "analyze_table",
    "summarize_reports",
    "summary_csv",
    "dumps",
    "SUMMARY_COLUMNS",
]

SCHEMA_VERSION = 1
SUMMARY_COLUMNS = ("min", "p10", "p25", "median", "mean", "p75", "p90", "max")


def warning(module: str, message: str) -> dict:
    return {"module": module, "message": message}


def dumps(obj) -> str:
    """Stable JSON: sorted keys, no NaN (non-finite floats become null)."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _power_grid(n, df, alpha):
    return [
        {"omega": w, "label": omega_label(w), "power": chi2_power(PowerQuery(w, float(n), df, alpha))}
        for w in OMEGA_GRID
    ]


def analyze_table(table: ContingencyTable, *, source: str = "", alpha: float = 0.05, yates: str = "auto",
                  replicates: int = 100_000, seed: int = 0, correction: str = "none",
                  fisher: bool = True, prune: bool = False, workers: int = 1) -> dict:
    """Run the full association pipeline on one table and return a report dict."""
    warnings = []
    if prune:
        table, dropped = prune_empty(table)
        for axis, lab in dropped:
            warnings.append(warning("tabular_core", f"pruned empty {axis} {lab!r}"))
    table.check_margins()
    r, c = table.shape
    n = table.n

    use_yates = table.is_2x2 if yates == "auto" else yates == "on"
    omni = chi_squared_test(table, yates=False)
    omnibus = {"chi2": omni.chi2, "df": omni.df, "p_chi2": omni.p_chi2}
    if use_yates:
        corrected = chi_squared_test(table, yates=True)
        omnibus["chi2_yates"] = corrected.chi2
        omnibus["p_chi2_yates"] = corrected.p_chi2

    if not fisher:
        fisher_block = {"mode": "none", "p": None}
    elif table.is_2x2:
        fisher_block = {"mode": "exact", "p": fisher_exact_2x2(table)}
    else:
        p, se = fisher_exact_montecarlo(table, replicates=replicates, seed=seed, workers=workers)
        fisher_block = {"mode": "montecarlo", "p": p, "se": se, "replicates": replicates, "seed": seed}

    eff = effect_sizes(omni.chi2, n, r, c)
    crit = criteria_report(table)
    if crit.prop_standard < 1.0:
        warnings.append(warning(
            "tabular_core",
            f"{1.0 - crit.prop_standard:.1%} of cells have expected count below 5",
        ))

    cells = cellwise_tests(table, correction=correction)
    if correction == "none" and len(cells) > 1:
        warnings.append(warning(
            "assoc_tests",
            f"{len(cells)} cellwise tests reported without multiple-comparison correction; "
            "Type I error compounds across cells",
        ))
    failing = sum(1 for cell in cells if not cell.meets_standard)
    if failing:
        warnings.append(warning(
            "assoc_tests",
            f"{failing} of {len(cells)} collapsed 2x2 tables have an expected count below 5",
        ))

    sol = fit_ca(table)
    if sol.rank == 0:
        warnings.append(warning("correspondence", "table is exactly independent; all CA coordinates are zero"))

    return {
        "schema_version": SCHEMA_VERSION,
        "input": {
            "file": source,
            "split": table.split_label,
            "shape": [r, c],
            "n": n,
            "row_labels": list(table.row_labels),
            "col_labels": list(table.col_labels),
        },
        "settings": {
            "alpha": alpha,
            "yates": use_yates,
            "replicates": replicates if fisher_block["mode"] == "montecarlo" else None,
            "seed": seed,
            "correction": correction,
        },
        "omnibus": omnibus,
        "fisher": fisher_block,
        "effect_sizes": eff.as_dict(),
        "power": _power_grid(n, omni.df, alpha),
        "criteria": crit.as_dict(),
        "cellwise": {
            "correction": correction,
            "power": _power_grid(n, 1, alpha),
            "cells": [cell.as_dict() for cell in cells],
        },
        "pct_diff": pct_diff_matrix(table).tolist(),
        "ca": sol.summary(),
        "warnings": warnings,
    }


def _describe(values):
    vals = np.array([v for v in values if v is not None], dtype=np.float64)
    if vals.size == 0:
        return {k: None for k in SUMMARY_COLUMNS}
    q = np.percentile(vals, [10, 25, 50, 75, 90])
    return {
        "min": float(vals.min()),
        "p10": float(q[0]),
        "p25": float(q[1]),
        "median": float(q[2]),
        "mean": float(vals.mean()),
        "p75": float(q[3]),
        "p90": float(q[4]),
        "max": float(vals.max()),
    }


def _table_row(rep):
    power = {p["label"]: p["power"] for p in rep["power"]}
    return {
        "chi2": rep["omnibus"]["chi2"],
        "p_chi2": rep["omnibus"]["p_chi2"],
        "p_fisher": rep["fisher"]["p"],
        "prop_e_ge_5": rep["criteria"]["prop_standard"],
        "omega": rep["effect_sizes"]["omega"],
        "cramers_v": rep["effect_sizes"]["cramers_v"],
        "power_small": power["small"],
        "power_medium": power["medium"],
        "power_large": power["large"],
    }


def _cell_row(rep):
    cells = rep["cellwise"]["cells"]
    alpha = rep["settings"]["alpha"]
    power = {p["label"]: p["power"] for p in rep["cellwise"]["power"]}

    def mean(key):
        return float(np.mean([float(c[key]) for c in cells]))

    return {
        "chi2": mean("chi2_yates"),
        "prop_sig": float(np.mean([c["p"] < alpha for c in cells])),
        "prop_sig_fisher": float(np.mean([c["p_fisher"] < alpha for c in cells])),
        "p": mean("p"),
        "p_fisher": mean("p_fisher"),
        "phi": mean("phi"),
        "prop_e_ge_5": mean("meets_standard"),
        "haber": mean("meets_haber"),
        "andres": mean("meets_andres"),
        "power_small": power["small"],
        "power_medium": power["medium"],
        "power_large": power["large"],
    }


def summarize_reports(reports) -> dict:
    """Distribution summaries over a batch of table reports.

    ``tables`` summarizes the omnibus statistics of each table; ``cells``
    summarizes the per-table means of the cellwise statistics.
    """
    reports = list(reports)
    table_rows = [_table_row(r) for r in reports]
    cell_rows = [_cell_row(r) for r in reports]
    return {
        "schema_version": SCHEMA_VERSION,
        "n_tables": len(reports),
        "tables": {k: _describe([row[k] for row in table_rows]) for k in table_rows[0]} if reports else {},
        "cells": {k: _describe([row[k] for row in cell_rows]) for k in cell_rows[0]} if reports else {},
    }


def summary_csv(block: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["statistic", *SUMMARY_COLUMNS])
    for stat, desc in block.items():
        w.writerow([stat] + ["" if desc[k] is None else f"{desc[k]:.4f}" for k in SUMMARY_COLUMNS])
    return buf.getvalue()
