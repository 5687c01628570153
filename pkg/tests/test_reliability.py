import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from assockit.errors import DegenerateMarginals, DimensionMismatch, DuplicateLabel, NoPairableValues
from assockit.reliability import CodingMatrix, MentionLists, cognitive_salience, cohens_kappa, krippendorff_alpha


def test_csi_fixture_point_one():
    # N = 50 subjects, 10 mention X at rank 2 -> CSI = 10 / (50 * 2) = 0.1
    lists = [["Y", "X"] for _ in range(10)] + [["Y"] for _ in range(40)]
    csi = cognitive_salience(lists)
    assert csi["X"]["csi"] == 0.1
    assert csi["X"]["mean_rank"] == 2.0
    assert csi["Y"]["csi"] == 1.0
    assert list(csi) == ["Y", "X"]


def test_csi_always_first():
    assert cognitive_salience([["A", "B"], ["A"], ["A", "C", "B"]])["A"]["csi"] == 1.0


def test_csi_hand_tally():
    lists = [["a", "b", "c"], ["b", "a"], ["c"], ["a", "d", "b"], ["d", "a"]]
    out = cognitive_salience(lists)
    # a: mentioned 4 times at ranks 1,2,1,2 -> 4 / (5 * 1.5)
    assert out["a"]["csi"] == pytest.approx(4 / 7.5, abs=1e-15)
    # b: ranks 2,1,3 -> 3 / (5 * 2)
    assert out["b"]["csi"] == pytest.approx(0.3, abs=1e-15)
    # c: ranks 3,1 -> 2 / (5 * 2)
    assert out["c"]["csi"] == pytest.approx(0.2, abs=1e-15)
    # d: ranks 2,1 -> 2 / (5 * 1.5)
    assert out["d"]["csi"] == pytest.approx(2 / 7.5, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.permutations(list("abcdef")).flatmap(lambda p: st.integers(0, 6).map(lambda k: p[:k])),
                min_size=1, max_size=25))
def test_csi_bounds(lists):
    if not any(lists):
        return
    for row in cognitive_salience(lists).values():
        assert 0 < row["csi"] <= 1


def test_mentions_validation():
    with pytest.raises(DuplicateLabel):
        MentionLists.from_lists([["a", "a"]])
    with pytest.raises(DimensionMismatch):
        MentionLists.from_ranked([("s1", 1, "a"), ("s1", 3, "b")])
    m = MentionLists.from_ranked([("s1", 2, "b"), ("s1", 1, "a"), ("s2", 1, "b")])
    assert m.lists == (("a", "b"), ("b",))


def kappa_fixture():
    rows = [("A", "A")] * 7 + [("A", "B")] * 3 + [("B", "A")] * 3 + [("B", "B")] * 7
    return CodingMatrix.from_rows(rows)


def test_kappa_fixture_exact():
    # p_o = 0.7, p_e = 0.5
    assert cohens_kappa(kappa_fixture()) == 0.4


def test_perfect_agreement():
    rows = [(x, x) for x in "ABCABBCA"]
    assert cohens_kappa(rows) == 1.0
    assert krippendorff_alpha(rows) == 1.0


def test_kappa_errors():
    with pytest.raises(DegenerateMarginals):
        cohens_kappa([("A", "A"), ("A", "A")])
    with pytest.raises(DimensionMismatch):
        cohens_kappa([("A", "B", "A")])
    with pytest.raises(DimensionMismatch):
        cohens_kappa([("A", None), ("B", "B")])


def test_kappa_random_near_zero():
    rng = np.random.default_rng(5)
    rows = rng.choice(["x", "y", "z"], size=(20_000, 2)).tolist()
    assert abs(cohens_kappa(rows)) < 0.03


def alpha_oracle(rows):
    """Nominal alpha from explicit pairs of pairable values (exact rationals)."""
    units = [[v for v in r if v is not None] for r in rows]
    units = [u for u in units if len(u) >= 2]
    values = [v for u in units for v in u]
    n = len(values)
    d_o = Fraction(0)
    for u in units:
        m = len(u)
        diff = sum(1 for i, j in itertools.permutations(range(m), 2) if u[i] != u[j])
        d_o += Fraction(diff, m - 1)
    d_o /= n
    d_e = Fraction(sum(1 for i, j in itertools.permutations(range(n), 2) if values[i] != values[j]), n * (n - 1))
    return 1 - d_o / d_e


def test_alpha_against_pair_oracle():
    rng = np.random.default_rng(6)
    for _ in range(40):
        grid = rng.choice(["a", "b", "c", None], p=[0.35, 0.3, 0.2, 0.15], size=(12, 3)).tolist()
        try:
            ref = alpha_oracle(grid)
        except ZeroDivisionError:
            continue
        assert krippendorff_alpha(grid) == pytest.approx(float(ref), abs=1e-12)


def test_alpha_known_value():
    # classic 2-coder example: two units agree on different labels, one disagrees
    rows = [("a", "a"), ("b", "b"), ("a", "b")]
    assert krippendorff_alpha(rows) == pytest.approx(float(alpha_oracle(rows)), abs=1e-15)
    # n = 6 pairable values, 3 of each label; D_o = 2/6, D_e = 18/30
    assert krippendorff_alpha(rows) == pytest.approx(4 / 9, abs=1e-15)


def test_alpha_relabel_invariant():
    rng = np.random.default_rng(7)
    grid = rng.choice(["a", "b", "c"], size=(30, 4)).tolist()
    mapping = {"a": "q", "b": "z", "c": "m"}
    other = [[mapping[v] for v in row] for row in grid]
    assert krippendorff_alpha(grid) == pytest.approx(krippendorff_alpha(other), abs=1e-15)


def test_alpha_close_to_kappa_for_large_n():
    rng = np.random.default_rng(8)
    truth = rng.choice(["a", "b", "c"], size=10_000)
    noisy = np.where(rng.random(10_000) < 0.3, rng.choice(["a", "b", "c"], size=10_000), truth)
    rows = list(zip(truth.tolist(), noisy.tolist()))
    assert abs(krippendorff_alpha(rows) - cohens_kappa(rows)) < 0.01


def test_alpha_errors():
    with pytest.raises(NoPairableValues):
        krippendorff_alpha([("a", None), (None, "b")])
    with pytest.raises(DegenerateMarginals):
        krippendorff_alpha([("a", "a"), ("a", "a")])


def test_coding_from_records():
    m = CodingMatrix.from_records([("u1", "c1", "a"), ("u1", "c2", "a"), ("u2", "c1", "b")])
    assert m.values == (("a", "a"), ("b", None))
    assert m.has_missing
    with pytest.raises(DuplicateLabel):
        CodingMatrix.from_records([("u1", "c1", "a"), ("u1", "c1", "b")])
