"""Omnibus and cellwise association tests for contingency tables."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import NotTwoByTwo, TooFewReplicates, YatesOnNon2x2
from .numerics import chi2_sf, log_factorials
from .table import ContingencyTable, _flags, collapse_cell, expected_matrix

__all__ = [
    "OmnibusResult",
    "CellResult",
    "chi_squared_statistic",
    "chi_squared_test",
    "fisher_exact_2x2",
    "fisher_exact_montecarlo",
    "cellwise_tests",
    "adjust_pvalues",
    "pct_diff_matrix",
    "MC_CHUNK",
    "FISHER_REL_TOL",
]

# relative tolerance on point probabilities when deciding "no more probable"
FISHER_REL_TOL = 1e-7
# replicates per independently seeded substream; fixed so results never
# depend on how chunks are scheduled
MC_CHUNK = 8192
CORRECTIONS = ("none", "bonferroni", "holm")


@dataclass(frozen=True)
class OmnibusResult:
    chi2: float
    df: int
    p_chi2: float
    yates: bool = False
    p_fisher: Optional[float] = None
    fisher_mode: str = "none"
    mc_replicates: Optional[int] = None
    mc_se: Optional[float] = None
    seed: Optional[int] = None

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CellResult:
    row: int
    col: int
    row_label: str
    col_label: str
    observed: int
    expected: float
    chi2_yates: float
    p: float
    phi: float
    direction: str
    meets_standard: bool
    meets_haber: bool
    meets_andres: bool
    p_fisher: float
    p_adjusted: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)


def _direction_sign(table: ContingencyTable) -> np.ndarray:
    # compares O*N with R*C in integers, so exact ties are detected exactly
    prod = np.outer(table.row_totals, table.col_totals)
    return np.sign(table.counts * table.n - prod)


def chi_squared_statistic(table: ContingencyTable, yates: bool = False) -> float:
    expected = expected_matrix(table)
    dev = np.abs(table.counts - expected)
    if yates:
        if not table.is_2x2:
            raise YatesOnNon2x2(f"Yates correction applies to 2x2 tables, got {table.shape[0]}x{table.shape[1]}")
        dev = np.maximum(dev - 0.5, 0.0)
    return float(np.sum(dev * dev / expected))


def chi_squared_test(table: ContingencyTable, yates: bool = False) -> OmnibusResult:
    """Pearson chi-squared test of independence (optionally Yates-corrected)."""
    stat = chi_squared_statistic(table, yates=yates)
    df = table.df
    return OmnibusResult(chi2=stat, df=df, p_chi2=chi2_sf(stat, df), yates=yates)


def fisher_exact_2x2(table: ContingencyTable) -> float:
    """Two-sided Fisher exact p-value for a 2x2 table.

    Sums the hypergeometric probabilities of every table sharing the observed
    margins whose point probability does not exceed the observed one (up to a
    relative tolerance of 1e-7).
    """
    if not table.is_2x2:
        raise NotTwoByTwo(f"expected a 2x2 table, got {table.shape[0]}x{table.shape[1]}")
    table.check_margins()
    (a, b), (c, d) = table.counts.tolist()
    r1, c1, n = a + b, a + c, a + b + c + d
    lo, hi = max(0, r1 + c1 - n), min(r1, c1)
    lf = log_factorials(n)
    xs = np.arange(lo, hi + 1)
    logw = -(lf[xs] + lf[r1 - xs] + lf[c1 - xs] + lf[n - r1 - c1 + xs])
    w = np.exp(logw - logw.max())
    obs = w[a - lo]
    p = w[w <= obs * (1.0 + FISHER_REL_TOL)].sum() / w.sum()
    return float(min(p, 1.0))


def _seed_sequence(seed: int, chunk: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, chunk])


def _sample_tables(row_totals, col_totals, size, rng) -> np.ndarray:
    """Draw ``size`` tables with the given margins under independence.

    Rows are filled one at a time; each row is a multivariate hypergeometric
    draw from the column totals still unassigned, decomposed into a chain of
    univariate hypergeometric draws.  Returns an array (size, r, c).
    """
    r, c = len(row_totals), len(col_totals)
    out = np.zeros((size, r, c), dtype=np.int64)
    remaining_cols = np.tile(np.asarray(col_totals, dtype=np.int64), (size, 1))
    for i in range(r - 1):
        need = np.full(size, int(row_totals[i]), dtype=np.int64)
        pool_left = remaining_cols.sum(axis=1)
        for j in range(c - 1):
            good = remaining_cols[:, j]
            bad = pool_left - good
            x = rng.hypergeometric(good, bad, need)
            out[:, i, j] = x
            need = need - x
            pool_left = bad
        out[:, i, c - 1] = need
        remaining_cols -= out[:, i, :]
    out[:, r - 1, :] = remaining_cols
    return out


def _mc_chunk(row_totals, col_totals, size, seed, chunk, threshold, lf) -> int:
    rng = np.random.Generator(np.random.PCG64(_seed_sequence(seed, chunk)))
    tables = _sample_tables(row_totals, col_totals, size, rng)
    # only -sum(log x_ij!) varies between tables with fixed margins
    score = -lf[tables].sum(axis=(1, 2))
    return int(np.count_nonzero(score <= threshold))


def fisher_exact_montecarlo(table: ContingencyTable, replicates: int = 100_000, seed: int = 0,
                            workers: int = 1):
    """Monte Carlo Fisher test for an r x c table.

    Simulates ``replicates`` tables with the observed margins and counts the
    ones whose point log-probability is at most the observed value + 1e-7.
    Returns ``(p, standard_error)`` with ``p = (count + 1) / (replicates + 1)``.

    Replicates are generated in fixed-size chunks, each with its own stream
    derived from ``(seed, chunk index)``; ``workers`` only changes how chunks
    are scheduled, never the result.
    """
    if replicates < 1000:
        raise TooFewReplicates(f"need at least 1000 replicates, got {replicates}")
    table.check_margins()
    rows = table.row_totals
    cols = table.col_totals
    lf = log_factorials(table.n)
    observed = -lf[table.counts].sum()
    threshold = observed + 1e-7

    sizes = [MC_CHUNK] * (replicates // MC_CHUNK)
    if replicates % MC_CHUNK:
        sizes.append(replicates % MC_CHUNK)
    jobs = [(rows, cols, size, seed, k, threshold, lf) for k, size in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda args: _mc_chunk(*args), jobs))
    else:
        counts = [_mc_chunk(*args) for args in jobs]
    hits = sum(counts)
    p = (hits + 1) / (replicates + 1)
    se = math.sqrt(p * (1.0 - p) / replicates)
    return p, se


def adjust_pvalues(pvalues, method: str = "none"):
    """Bonferroni or Holm step-down adjustment; ``none`` returns the input."""
    p = np.asarray(pvalues, dtype=np.float64)
    if method == "none":
        return p.copy()
    k = p.size
    if method == "bonferroni":
        return np.minimum(1.0, k * p)
    if method == "holm":
        order = np.argsort(p, kind="stable")
        scaled = (k - np.arange(k)) * p[order]
        stepped = np.minimum(1.0, np.maximum.accumulate(scaled))
        out = np.empty(k)
        out[order] = stepped
        return out
    raise ValueError(f"unknown correction {method!r}; expected one of {CORRECTIONS}")


def cellwise_tests(table: ContingencyTable, correction: str = "none"):
    """Yates-corrected 2x2 test for every cell against the rest of the table.

    Each cell also carries the exact Fisher p-value of its collapsed table and
    the three minimum-expected-count checks, which hold when every expected
    count of the collapsed table passes.
    """
    if correction not in CORRECTIONS:
        raise ValueError(f"unknown correction {correction!r}; expected one of {CORRECTIONS}")
    expected = expected_matrix(table)
    signs = _direction_sign(table)
    r, c = table.shape
    n = table.n
    raw = []
    for i in range(r):
        for j in range(c):
            sub = collapse_cell(table, i, j)
            stat = chi_squared_statistic(sub, yates=True)
            std, haber, andres = _flags(expected_matrix(sub), n)
            raw.append(dict(
                row=i,
                col=j,
                row_label=table.row_labels[i],
                col_label=table.col_labels[j],
                observed=int(table.counts[i, j]),
                expected=float(expected[i, j]),
                chi2_yates=stat,
                p=chi2_sf(stat, 1),
                phi=math.sqrt(stat / n),
                direction={1: "+", -1: "-", 0: "0"}[int(signs[i, j])],
                meets_standard=bool(std.all()),
                meets_haber=bool(haber.all()),
                meets_andres=bool(andres.all()),
                p_fisher=fisher_exact_2x2(sub),
            ))
    if correction == "none":
        return [CellResult(**d) for d in raw]
    adjusted = adjust_pvalues([d["p"] for d in raw], correction)
    return [CellResult(p_adjusted=float(q), **d) for d, q in zip(raw, adjusted)]


def pct_diff_matrix(table: ContingencyTable) -> np.ndarray:
    """Percent deviation of observed from expected, ``100 * (O - E) / E``."""
    table.check_margins()
    prod = np.outer(table.row_totals, table.col_totals).astype(np.float64)
    # (O*N - R*C) is an exact integer, so O == E gives exactly 0
    out = 100.0 * (table.counts * table.n - prod) / prod
    out.setflags(write=False)
    return out
