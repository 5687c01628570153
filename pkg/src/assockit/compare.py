"""Comparing two labeled point configurations.

Symmetric Procrustes analysis with a permutation test, k-nearest-neighbour
agreement rates, average-linkage clustering and tanglegrams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    AsymmetricDistances,
    DegenerateConfiguration,
    DimensionMismatch,
    DuplicateLabel,
    InvalidDomain,
    KOutOfRange,
    LabelMismatch,
    NonFiniteInput,
    TooFewItems,
)
from .svg import Svg

__all__ = [
    "Configuration",
    "ProcrustesResult",
    "AgreementResult",
    "Dendrogram",
    "procrustes_fit",
    "procrustes_test",
    "agreement_rates",
    "hcluster",
    "cophenetic_correlation",
    "tanglegram_export",
    "PERM_CHUNK",
]

PERM_CHUNK = 1024
_TIE_REL = 1e-12


@dataclass(frozen=True)
class Configuration:
    labels: tuple
    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if len(set(labels)) != len(labels):
            dup = next(l for l in labels if labels.count(l) > 1)
            raise DuplicateLabel(f"duplicate label {dup!r}")
        coords = np.array(self.coords, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[0] != len(labels):
            raise DimensionMismatch(f"coords shape {coords.shape} does not match {len(labels)} labels")
        if len(labels) < 3:
            raise TooFewItems("a configuration needs at least 3 points")
        if not np.all(np.isfinite(coords)):
            raise NonFiniteInput("configuration has non-finite coordinates")
        coords.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return len(self.labels)

    def aligned_to(self, labels: Sequence[str]) -> "Configuration":
        """Reorder rows to follow ``labels``; the label sets must coincide."""
        _check_label_sets(labels, self.labels)
        pos = {lab: i for i, lab in enumerate(self.labels)}
        return Configuration(tuple(labels), self.coords[[pos[l] for l in labels]])


def _check_label_sets(a_labels, b_labels):
    a_set, b_set = set(a_labels), set(b_labels)
    for lab in a_labels:
        if lab not in b_set:
            raise LabelMismatch(f"label {lab!r} missing from the second configuration", lab)
    for lab in b_labels:
        if lab not in a_set:
            raise LabelMismatch(f"label {lab!r} missing from the first configuration", lab)


def _check_aligned(a: Configuration, b: Configuration):
    _check_label_sets(a.labels, b.labels)
    for la, lb in zip(a.labels, b.labels):
        if la != lb:
            raise LabelMismatch(f"labels out of order: {la!r} vs {lb!r}; align by label first", la)


def _pad(x: np.ndarray, k: int) -> np.ndarray:
    if x.shape[1] == k:
        return x
    return np.hstack([x, np.zeros((x.shape[0], k - x.shape[1]))])


def _standardize(x: np.ndarray, name: str):
    mean = x.mean(axis=0)
    xc = x - mean
    norm = math.sqrt(float(np.sum(xc * xc)))
    if norm == 0.0 or norm <= 1e-14 * max(1.0, float(np.max(np.abs(x)))):
        raise DegenerateConfiguration(f"all points of configuration {name} coincide")
    return xc / norm, mean, norm


@dataclass(frozen=True)
class ProcrustesResult:
    """``m2`` is the residual sum of squares after fitting the unit-normalized
    first configuration onto the unit-normalized second one.  ``rotation``,
    ``scale`` and ``translation`` map the original first configuration
    onto the second: ``b ~ scale * a @ rotation + translation``."""

    m2: float
    rotation: np.ndarray
    scale: float
    translation: np.ndarray

    def as_dict(self) -> dict:
        return {
            "m2": self.m2,
            "rotation": self.rotation.tolist(),
            "scale": self.scale,
            "translation": self.translation.tolist(),
        }


def procrustes_fit(a: Configuration, b: Configuration) -> ProcrustesResult:
    _check_aligned(a, b)
    k = max(a.coords.shape[1], b.coords.shape[1])
    x, mean_a, norm_a = _standardize(_pad(a.coords, k), "a")
    y, mean_b, norm_b = _standardize(_pad(b.coords, k), "b")
    u, s, vt = np.linalg.svd(x.T @ y)
    rot = u @ vt
    trace = float(s.sum())
    m2 = min(1.0, max(0.0, 1.0 - trace * trace))
    scale = trace * norm_b / norm_a
    translation = mean_b - scale * (mean_a @ rot)
    return ProcrustesResult(m2=m2, rotation=rot, scale=scale, translation=translation)


def _m2_batch(x: np.ndarray, y: np.ndarray, perms: np.ndarray) -> np.ndarray:
    # x, y standardized; perms (m, n) row orders applied to y
    cross = np.einsum("ik,mil->mkl", x, y[perms])
    s = np.linalg.svd(cross, compute_uv=False)
    tr = s.sum(axis=1)
    return np.clip(1.0 - tr * tr, 0.0, 1.0)


def procrustes_test(a: Configuration, b: Configuration, permutations: int = 999, seed: int = 0):
    """Permutation test for Procrustes similarity.

    Rows of ``b`` are shuffled ``permutations`` times; the p-value is the
    share of shuffles (plus the observed fit) fitting at least as well as the
    observed configuration.  Returns ``(p, observed_m2)``.
    """
    if permutations < 99:
        raise InvalidDomain(f"need at least 99 permutations, got {permutations}")
    fit = procrustes_fit(a, b)
    k = max(a.coords.shape[1], b.coords.shape[1])
    x, _, _ = _standardize(_pad(a.coords, k), "a")
    y, _, _ = _standardize(_pad(b.coords, k), "b")
    n = a.n
    threshold = fit.m2 + _TIE_REL
    hits = 0
    done = 0
    chunk = 0
    while done < permutations:
        size = min(PERM_CHUNK, permutations - done)
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, chunk])))
        perms = rng.permuted(np.tile(np.arange(n), (size, 1)), axis=1)
        hits += int(np.count_nonzero(_m2_batch(x, y, perms) <= threshold))
        done += size
        chunk += 1
    return (hits + 1) / (permutations + 1), fit.m2


@dataclass(frozen=True)
class AgreementResult:
    ar: float
    adjusted_ar: float
    per_k: tuple
    adjusted_per_k: tuple
    max_k: int

    def as_dict(self) -> dict:
        return {
            "ar": self.ar,
            "adjusted_ar": self.adjusted_ar,
            "per_k": list(self.per_k),
            "adjusted_per_k": list(self.adjusted_per_k),
            "max_k": self.max_k,
        }


def _neighbor_ranks(conf: Configuration) -> np.ndarray:
    """ranks[i, j] = position of j in i's neighbour order (self excluded).

    Distances are compared after rounding to 1e-12 of the largest distance,
    so isometries and rescalings cannot reorder exact ties; ties go to the
    lexicographically smaller label.
    """
    x = conf.coords
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    scale = float(dist.max())
    q = np.round(dist / scale / _TIE_REL) if scale > 0 else np.zeros_like(dist)
    label_rank = np.argsort(np.argsort(np.array(conf.labels), kind="stable"), kind="stable")
    n = conf.n
    ranks = np.empty((n, n), dtype=np.int64)
    for i in range(n):
        others = np.array([j for j in range(n) if j != i])
        order = others[np.lexsort((label_rank[others], q[i, others]))]
        ranks[i, order] = np.arange(n - 1)
        ranks[i, i] = n  # never inside a neighbourhood
    return ranks


def agreement_rates(a: Configuration, b: Configuration, max_k: Optional[int] = None) -> AgreementResult:
    """Neighbourhood agreement between two configurations.

    For each neighbourhood size k = 1..max_k the k nearest neighbours of
    every item are found in both configurations; the rate is the mean share
    of shared neighbours.  The adjusted rate removes the chance level
    k / (n - 1).  Both are averaged over k.
    """
    _check_aligned(a, b)
    n = a.n
    if max_k is None:
        max_k = n - 2
    if max_k != int(max_k) or not (1 <= max_k <= n - 2):
        raise KOutOfRange(f"max_k must lie in 1..{n - 2}, got {max_k}")
    worst = np.maximum(_neighbor_ranks(a), _neighbor_ranks(b))
    per_k, adj = [], []
    for k in range(1, max_k + 1):
        overlap = np.count_nonzero(worst < k, axis=1) / k
        ar_k = float(overlap.mean())
        chance = k / (n - 1)
        per_k.append(ar_k)
        adj.append((ar_k - chance) / (1.0 - chance))
    return AgreementResult(
        ar=float(np.mean(per_k)),
        adjusted_ar=float(np.mean(adj)),
        per_k=tuple(per_k),
        adjusted_per_k=tuple(adj),
        max_k=max_k,
    )


@dataclass(frozen=True)
class Dendrogram:
    """Agglomerative merge history.

    Leaves are numbered 0..n-1 and the cluster formed at step s gets id
    n + s.  Each merge is ``(left, right, height, size)``.
    """

    labels: tuple
    merges: tuple

    @property
    def n(self) -> int:
        return len(self.labels)

    def children(self):
        return {self.n + s: (m[0], m[1]) for s, m in enumerate(self.merges)}

    def leaf_order(self) -> list:
        kids = self.children()
        out = []
        stack = [self.n + len(self.merges) - 1] if self.merges else list(range(self.n))
        while stack:
            node = stack.pop()
            if node < self.n:
                out.append(node)
            else:
                left, right = kids[node]
                stack.extend([right, left])
        return out

    def cophenetic(self) -> np.ndarray:
        """Matrix of merge heights at which each pair of leaves first joins."""
        n = self.n
        members = {i: [i] for i in range(n)}
        out = np.zeros((n, n))
        for s, (left, right, height, _) in enumerate(self.merges):
            la, lb = members.pop(left), members.pop(right)
            out[np.ix_(la, lb)] = height
            out[np.ix_(lb, la)] = height
            members[n + s] = la + lb
        return out

    def as_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "merges": [[int(a), int(b), float(h), int(sz)] for a, b, h, sz in self.merges],
        }


def _distance_matrix(points_or_distances, labels, distances: bool):
    arr = np.asarray(points_or_distances, dtype=np.float64)
    if distances:
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise AsymmetricDistances("distance matrix must be square")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteInput("distance matrix has non-finite entries")
        if not np.allclose(arr, arr.T, rtol=0, atol=1e-12 * max(1.0, float(np.max(np.abs(arr))))):
            raise AsymmetricDistances("distance matrix is not symmetric")
        if np.any(arr < 0):
            raise AsymmetricDistances("distance matrix has negative entries")
        d = 0.5 * (arr + arr.T)
        np.fill_diagonal(d, 0.0)
        return d
    if arr.ndim == 1:
        arr = arr[:, None]
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("points have non-finite coordinates")
    diff = arr[:, None, :] - arr[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def hcluster(points_or_distances, labels: Optional[Sequence[str]] = None, linkage: str = "average",
             distances: bool = False) -> Dendrogram:
    """Average-linkage agglomerative clustering.

    Accepts a :class:`Configuration`, an (n, k) array of points, or with
    ``distances=True`` a symmetric (n, n) distance matrix.  Among equally
    close pairs the one whose cluster keys (smallest member label) sort
    first is merged.
    """
    if linkage != "average":
        raise InvalidDomain(f"only average linkage is supported, got {linkage!r}")
    if isinstance(points_or_distances, Configuration):
        labels = points_or_distances.labels if labels is None else labels
        points_or_distances = points_or_distances.coords
        distances = False
    d = _distance_matrix(points_or_distances, labels, distances)
    n = d.shape[0]
    if labels is None:
        labels = tuple(str(i) for i in range(n))
    labels = tuple(str(x) for x in labels)
    if len(labels) != n:
        raise DimensionMismatch(f"{len(labels)} labels for {n} items")
    if n < 3:
        raise TooFewItems("clustering needs at least 3 items")
    if len(set(labels)) != n:
        raise DuplicateLabel("labels must be unique")

    scale = float(d.max()) if d.size else 0.0
    tie = _TIE_REL * scale
    active = {i: (labels[i], 1) for i in range(n)}  # id -> (key, size)
    dist = {}
    for i in range(n):
        for j in range(i + 1, n):
            dist[(i, j)] = float(d[i, j])
    merges = []
    last_height = 0.0
    for step in range(n - 1):
        best = None
        for (i, j), dij in dist.items():
            ki, kj = active[i][0], active[j][0]
            pair_key = (ki, kj) if ki <= kj else (kj, ki)
            if best is None or dij < best[0] - tie or (abs(dij - best[0]) <= tie and pair_key < best[1]):
                best = (dij, pair_key, i, j)
        height, _, i, j = best
        if active[j][0] < active[i][0]:
            i, j = j, i
        si, sj = active[i][1], active[j][1]
        new = n + step
        height = max(height, last_height)
        last_height = height
        merges.append((i, j, height, si + sj))
        key = min(active[i][0], active[j][0])
        del active[i], active[j]
        new_dist = {}
        for (p, q), v in dist.items():
            if p in (i, j) or q in (i, j):
                continue
            new_dist[(p, q)] = v
        for other in active:
            dio = dist[(min(i, other), max(i, other))]
            djo = dist[(min(j, other), max(j, other))]
            new_dist[(other, new)] = (si * dio + sj * djo) / (si + sj)
        active[new] = (key, si + sj)
        dist = new_dist
    return Dendrogram(labels=labels, merges=tuple(merges))


def cophenetic_correlation(d1: Dendrogram, d2: Dendrogram) -> float:
    """Pearson correlation of the two trees' cophenetic distances."""
    if set(d1.labels) != set(d2.labels):
        _check_label_sets(d1.labels, d2.labels)
    pos2 = {lab: i for i, lab in enumerate(d2.labels)}
    order = [pos2[lab] for lab in d1.labels]
    c1 = d1.cophenetic()
    c2 = d2.cophenetic()[np.ix_(order, order)]
    iu = np.triu_indices(d1.n, k=1)
    v1, v2 = c1[iu], c2[iu]
    if np.array_equal(v1, v2):
        return 1.0
    s1, s2 = v1.std(), v2.std()
    if s1 == 0 or s2 == 0:
        return float("nan")
    return float(np.mean((v1 - v1.mean()) * (v2 - v2.mean())) / (s1 * s2))


def _tree_paths(tree: Dendrogram, y_of_leaf, x_of_height):
    """Elbow segments for each merge; returns (polylines, node positions)."""
    pos = {leaf: (x_of_height(0.0), y_of_leaf[leaf]) for leaf in range(tree.n)}
    lines = []
    for s, (left, right, height, _) in enumerate(tree.merges):
        (xl, yl), (xr, yr) = pos[left], pos[right]
        xh = x_of_height(height)
        lines.append([(xl, yl), (xh, yl), (xh, yr), (xr, yr)])
        pos[tree.n + s] = (xh, 0.5 * (yl + yr))
    return lines


def tanglegram_svg(d1: Dendrogram, d2: Dendrogram, title: str = "") -> str:
    _check_label_sets(d1.labels, d2.labels)
    n = d1.n
    row_h = 24.0
    top = 50.0
    width = 900.0
    tree_w = 250.0
    label_w = 110.0
    height = top + n * row_h + 30.0
    svg = Svg(width, height, title or "Tanglegram")
    if title:
        svg.text(width / 2, 25, title, size=14, anchor="middle")

    def place(tree):
        order = tree.leaf_order()
        return {leaf: top + (k + 0.5) * row_h for k, leaf in enumerate(order)}

    y1, y2 = place(d1), place(d2)
    h1 = max([m[2] for m in d1.merges] + [0.0]) or 1.0
    h2 = max([m[2] for m in d2.merges] + [0.0]) or 1.0
    left_leaf_x = 20.0 + tree_w
    right_leaf_x = width - 20.0 - tree_w

    for pts in _tree_paths(d1, y1, lambda h: left_leaf_x - h / h1 * tree_w):
        svg.polyline(pts, stroke="#333333", class_="tree-left")
    for pts in _tree_paths(d2, y2, lambda h: right_leaf_x + h / h2 * tree_w):
        svg.polyline(pts, stroke="#333333", class_="tree-right")

    pos2 = {lab: i for i, lab in enumerate(d2.labels)}
    for leaf, lab in enumerate(d1.labels):
        ya, yb = y1[leaf], y2[pos2[lab]]
        svg.text(left_leaf_x + 6, ya + 4, lab, size=10)
        svg.text(right_leaf_x - 6, yb + 4, lab, size=10, anchor="end")
        svg.line(left_leaf_x + label_w, ya, right_leaf_x - label_w, yb,
                 stroke="#7f8c8d", class_="connector")
    return svg.render()


def tanglegram_export(d1: Dendrogram, d2: Dendrogram, output_format: str = "svg", title: str = ""):
    """Side-by-side rendering of two trees over the same labels.

    Returns ``(document, cophenetic_correlation)``.  Leaf order follows each
    tree's merge structure; crossings are not minimized.
    """
    if output_format != "svg":
        raise ValueError(f"unknown output format {output_format!r}")
    doc = tanglegram_svg(d1, d2, title)
    return doc, cophenetic_correlation(d1, d2)
