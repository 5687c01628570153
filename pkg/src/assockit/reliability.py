"""Cognitive salience of free-listed categories and inter-coder reliability."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .errors import DegenerateMarginals, DimensionMismatch, DuplicateLabel, EmptyInput, NoPairableValues

__all__ = [
    "MentionLists",
    "CodingMatrix",
    "cognitive_salience",
    "cohens_kappa",
    "krippendorff_alpha",
]


@dataclass(frozen=True)
class MentionLists:
    """Per-subject ordered category mentions (first element = rank 1)."""

    subjects: tuple
    lists: tuple

    def __post_init__(self):
        lists = tuple(tuple(str(c) for c in seq) for seq in self.lists)
        subjects = tuple(str(s) for s in self.subjects)
        if len(subjects) != len(lists):
            raise DimensionMismatch("one mention list per subject is required")
        if len(set(subjects)) != len(subjects):
            raise DuplicateLabel("subject ids must be unique")
        for subj, seq in zip(subjects, lists):
            dup = [c for c, k in Counter(seq).items() if k > 1]
            if dup:
                raise DuplicateLabel(f"subject {subj!r} mentions {dup[0]!r} more than once")
        object.__setattr__(self, "subjects", subjects)
        object.__setattr__(self, "lists", lists)

    @classmethod
    def from_lists(cls, lists: Sequence[Sequence[str]]) -> "MentionLists":
        return cls(tuple(str(i) for i in range(len(lists))), tuple(lists))

    @classmethod
    def from_ranked(cls, records) -> "MentionLists":
        """Build from ``(subject, rank, category)`` triples.

        Ranks within a subject must run 1..m without gaps or repeats.
        """
        by_subject = defaultdict(dict)
        order = []
        for subject, rank, category in records:
            subject = str(subject)
            rank = int(rank)
            if subject not in by_subject:
                order.append(subject)
            if rank in by_subject[subject]:
                raise DuplicateLabel(f"subject {subject!r} has rank {rank} twice")
            by_subject[subject][rank] = str(category)
        lists = []
        for subject in order:
            ranks = sorted(by_subject[subject])
            if ranks != list(range(1, len(ranks) + 1)):
                raise DimensionMismatch(f"subject {subject!r} ranks {ranks} are not 1..{len(ranks)}")
            lists.append([by_subject[subject][r] for r in ranks])
        return cls(tuple(order), tuple(lists))

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)


def cognitive_salience(mentions: MentionLists) -> dict:
    """Sutrop's cognitive salience index per category.

    ``CSI_j = n_j / (N * mean_rank_j)`` with N the number of subjects, n_j the
    number of subjects mentioning j and mean_rank_j averaged over those
    mentions only.  Returns ``{category: {"n", "mean_rank", "csi"}}`` sorted
    by decreasing CSI, then by category.
    """
    if isinstance(mentions, (list, tuple)):
        mentions = MentionLists.from_lists(mentions)
    n_subj = mentions.n_subjects
    if n_subj == 0:
        raise EmptyInput("no subjects")
    counts = Counter()
    rank_sum = Counter()
    for seq in mentions.lists:
        for rank, cat in enumerate(seq, start=1):
            counts[cat] += 1
            rank_sum[cat] += rank
    if not counts:
        raise EmptyInput("no mentions")
    out = {}
    for cat, n_j in counts.items():
        # n_j / (N * (rank_sum / n_j)) rearranged to a single division
        out[cat] = {
            "n": n_j,
            "mean_rank": rank_sum[cat] / n_j,
            "csi": (n_j * n_j) / (n_subj * rank_sum[cat]),
        }
    return dict(sorted(out.items(), key=lambda kv: (-kv[1]["csi"], kv[0])))


@dataclass(frozen=True)
class CodingMatrix:
    """Units x coders grid of categorical codes; ``None`` marks missing."""

    units: tuple
    coders: tuple
    values: tuple

    def __post_init__(self):
        values = tuple(tuple(None if v is None else str(v) for v in row) for row in self.values)
        units = tuple(str(u) for u in self.units)
        coders = tuple(str(c) for c in self.coders)
        if len(values) != len(units) or any(len(row) != len(coders) for row in values):
            raise DimensionMismatch("values must be a units x coders grid")
        if len(coders) < 2:
            raise DimensionMismatch("at least two coders are required")
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "coders", coders)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_rows(cls, rows, coders: Optional[Sequence[str]] = None) -> "CodingMatrix":
        rows = [list(r) for r in rows]
        width = len(rows[0]) if rows else 0
        coders = tuple(coders) if coders is not None else tuple(f"c{i + 1}" for i in range(width))
        return cls(tuple(str(i) for i in range(len(rows))), coders, tuple(tuple(r) for r in rows))

    @classmethod
    def from_records(cls, records) -> "CodingMatrix":
        """Build from ``(unit, coder, label)`` triples; absent pairs are missing."""
        units, coders = [], []
        cells: Mapping = {}
        for unit, coder, label in records:
            unit, coder = str(unit), str(coder)
            if unit not in cells:
                units.append(unit)
                cells[unit] = {}
            if coder not in coders:
                coders.append(coder)
            if coder in cells[unit]:
                raise DuplicateLabel(f"coder {coder!r} coded unit {unit!r} twice")
            cells[unit][coder] = label
        values = tuple(tuple(cells[u].get(c) for c in coders) for u in units)
        return cls(tuple(units), tuple(coders), values)

    @property
    def has_missing(self) -> bool:
        return any(v is None for row in self.values for v in row)


def _as_matrix(matrix) -> CodingMatrix:
    if isinstance(matrix, CodingMatrix):
        return matrix
    return CodingMatrix.from_rows(matrix)


def cohens_kappa(matrix) -> float:
    """Cohen's kappa for two coders with complete codings.

    Computed from integer counts, ``(N*agree - S) / (N^2 - S)`` with S the
    sum over labels of the product of both coders' label counts.
    """
    m = _as_matrix(matrix)
    if len(m.coders) != 2:
        raise DimensionMismatch(f"Cohen's kappa needs exactly 2 coders, got {len(m.coders)}")
    if m.has_missing:
        raise DimensionMismatch("Cohen's kappa needs complete codings")
    n = len(m.values)
    if n == 0:
        raise EmptyInput("no units")
    agree = sum(1 for a, b in m.values if a == b)
    c1 = Counter(a for a, _ in m.values)
    c2 = Counter(b for _, b in m.values)
    chance = sum(c1[lab] * c2[lab] for lab in c1)
    denom = n * n - chance
    if denom == 0:
        raise DegenerateMarginals("expected agreement is 1 (both coders use one label)")
    return (n * agree - chance) / denom


def krippendorff_alpha(matrix, metric: str = "nominal") -> float:
    """Krippendorff's alpha with the nominal metric.

    Units with fewer than two codes are dropped.  Built from the coincidence
    matrix: ``alpha = 1 - (n - 1) * D_o / sum_{c != k} n_c n_k``.
    """
    if metric != "nominal":
        raise ValueError(f"only the nominal metric is supported, got {metric!r}")
    m = _as_matrix(matrix)
    observed_off = 0.0
    totals = Counter()
    for row in m.values:
        codes = [v for v in row if v is not None]
        mu = len(codes)
        if mu < 2:
            continue
        cnt = Counter(codes)
        for lab, k in cnt.items():
            totals[lab] += k
        # ordered pairs of differing values in this unit, weighted 1/(mu - 1)
        diff_pairs = mu * mu - sum(k * k for k in cnt.values())
        observed_off += diff_pairs / (mu - 1)
    n = sum(totals.values())
    if n == 0:
        raise NoPairableValues("no unit has two or more codes")
    expected_off = n * n - sum(k * k for k in totals.values())
    if expected_off == 0:
        raise DegenerateMarginals("all pairable values are identical; alpha is undefined")
    return 1.0 - (n - 1) * observed_off / expected_off
