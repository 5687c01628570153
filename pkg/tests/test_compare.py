import itertools

import numpy as np
import pytest
from scipy import stats

from assockit.compare import (
    Configuration,
    agreement_rates,
    cophenetic_correlation,
    hcluster,
    procrustes_fit,
    procrustes_test,
    tanglegram_export,
)
from assockit.errors import (
    DegenerateConfiguration,
    DuplicateLabel,
    KOutOfRange,
    LabelMismatch,
    TooFewItems,
)


def conf(coords, prefix="p"):
    coords = np.asarray(coords, dtype=float)
    return Configuration([f"{prefix}{i:02d}" for i in range(len(coords))], coords)


def random_rotation(rng, k):
    q, r = np.linalg.qr(rng.normal(size=(k, k)))
    return q * np.sign(np.diag(r))


def test_configuration_validation():
    with pytest.raises(TooFewItems):
        conf([[0, 0], [1, 1]])
    with pytest.raises(DuplicateLabel):
        Configuration(["a", "a", "b"], np.eye(3))


def test_procrustes_identity():
    a = conf([[0, 0], [1, 0], [0, 1], [2, 3]])
    res = procrustes_fit(a, a)
    assert res.m2 <= 1e-12
    np.testing.assert_allclose(res.rotation, np.eye(2), atol=1e-12)
    assert res.scale == pytest.approx(1.0)


def test_procrustes_similarity_transform():
    rng = np.random.default_rng(10)
    for _ in range(100):
        n, k = rng.integers(3, 30), rng.integers(1, 5)
        x = rng.normal(size=(n, k))
        rot = random_rotation(rng, k)
        s, t = rng.uniform(0.1, 10), rng.normal(size=k) * 5
        a, b = conf(x), conf(s * x @ rot + t)
        res = procrustes_fit(a, b)
        assert res.m2 <= 1e-9
        np.testing.assert_allclose(res.scale * x @ res.rotation + res.translation, b.coords, atol=1e-8)


def test_procrustes_random_pairs_are_dissimilar():
    rng = np.random.default_rng(11)
    vals = [procrustes_fit(conf(rng.normal(size=(20, 2))), conf(rng.normal(size=(20, 2)))).m2 for _ in range(200)]
    assert np.median(vals) > 0.7
    assert all(0 <= v <= 1 for v in vals)


def test_procrustes_symmetric_and_relabel_invariant():
    rng = np.random.default_rng(12)
    x, y = rng.normal(size=(12, 3)), rng.normal(size=(12, 2))
    assert procrustes_fit(conf(x), conf(y)).m2 == pytest.approx(procrustes_fit(conf(y), conf(x)).m2, abs=1e-12)
    perm = rng.permutation(12)
    a2, b2 = conf(x[perm]), conf(y[perm])
    assert procrustes_fit(a2, b2).m2 == pytest.approx(procrustes_fit(conf(x), conf(y)).m2, abs=1e-12)


def test_procrustes_errors():
    a = conf([[0, 0], [1, 0], [0, 1]])
    with pytest.raises(DegenerateConfiguration):
        procrustes_fit(a, conf([[1, 1], [1, 1], [1, 1]]))
    with pytest.raises(LabelMismatch):
        procrustes_fit(a, conf([[0, 0], [1, 0], [0, 1]], prefix="q"))
    with pytest.raises(LabelMismatch):
        procrustes_fit(a, Configuration(["p01", "p00", "p02"], a.coords))


def test_permutation_test_identical():
    rng = np.random.default_rng(13)
    a = conf(rng.normal(size=(15, 2)))
    p, m2 = procrustes_test(a, a, permutations=999, seed=1)
    assert p == 0.001
    assert m2 <= 1e-12


def test_permutation_test_deterministic():
    rng = np.random.default_rng(14)
    a, b = conf(rng.normal(size=(10, 2))), conf(rng.normal(size=(10, 2)))
    assert procrustes_test(a, b, 199, seed=3) == procrustes_test(a, b, 199, seed=3)


def test_permutation_test_matches_serial_refits():
    # oracle: refit each permuted configuration one at a time
    rng = np.random.default_rng(15)
    x, y = rng.normal(size=(8, 2)), rng.normal(size=(8, 2))
    a, b = conf(x), conf(y)
    p, m2 = procrustes_test(a, b, permutations=150, seed=9)
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([9, 0])))
    perms = gen.permuted(np.tile(np.arange(8), (150, 1)), axis=1)
    hits = sum(procrustes_fit(a, conf(y[pp])).m2 <= m2 + 1e-12 for pp in perms)
    assert p == (hits + 1) / 151


def test_permutation_null_uniform():
    rng = np.random.default_rng(16)
    ps = [procrustes_test(conf(rng.normal(size=(12, 2))), conf(rng.normal(size=(12, 2))),
                          permutations=199, seed=i)[0] for i in range(100)]
    assert stats.kstest(ps, "uniform").statistic < 0.15


def test_agreement_identity_and_mirror():
    rng = np.random.default_rng(17)
    x = rng.normal(size=(15, 2))
    res = agreement_rates(conf(x), conf(x))
    assert res.ar == 1.0 and res.adjusted_ar == 1.0
    assert agreement_rates(conf(x), conf(x * [-1, 1])).ar == 1.0


def test_agreement_isometry_invariance():
    rng = np.random.default_rng(18)
    x, y = rng.normal(size=(14, 3)), rng.normal(size=(14, 3))
    base = agreement_rates(conf(x), conf(y))
    moved = conf(3.7 * y @ random_rotation(rng, 3) + 11.0)
    other = agreement_rates(conf(x), moved)
    assert other.per_k == base.per_k


def brute_agreement(x, y, k):
    n = len(x)

    def knn(z, i):
        d = [(np.linalg.norm(z[i] - z[j]), j) for j in range(n) if j != i]
        return {j for _, j in sorted(d)[:k]}

    return np.mean([len(knn(x, i) & knn(y, i)) / k for i in range(n)])


def test_agreement_against_brute_force():
    rng = np.random.default_rng(19)
    x, y = rng.normal(size=(11, 2)), rng.normal(size=(11, 2))
    res = agreement_rates(conf(x), conf(y))
    for k in range(1, 10):
        assert res.per_k[k - 1] == pytest.approx(brute_agreement(x, y, k), abs=1e-15)


def test_agreement_k_range():
    x = conf(np.random.default_rng(0).normal(size=(6, 2)))
    with pytest.raises(KOutOfRange):
        agreement_rates(x, x, max_k=5)
    with pytest.raises(KOutOfRange):
        agreement_rates(x, x, max_k=0)
    assert agreement_rates(x, x, max_k=4).max_k == 4


def test_agreement_null_centered():
    rng = np.random.default_rng(20)
    vals = [agreement_rates(conf(rng.normal(size=(20, 2))), conf(rng.normal(size=(20, 2)))).adjusted_ar
            for _ in range(300)]
    assert abs(np.mean(vals)) < 0.05


def test_hcluster_examples():
    d = hcluster([[0.0], [1.0], [5.0]], labels=["a", "b", "c"])
    assert d.merges[0][:3] == (0, 1, 1.0)
    assert d.merges[1][2] == pytest.approx(4.5)
    # 6 points in two well separated groups: first split separates them
    pts = [[0, 0], [0, 1], [1, 0], [10, 10], [10, 11], [11, 10]]
    tree = hcluster(pts)
    coph = tree.cophenetic()
    top = tree.merges[-1][2]
    assert np.all(coph[:3, 3:] == top)
    assert np.all(coph[:3, :3] < top)


def brute_average_linkage(d):
    """Average linkage from the definition: cluster distance = mean pairwise distance."""
    clusters = [frozenset([i]) for i in range(len(d))]
    out = []
    while len(clusters) > 1:
        best = min(
            (np.mean([d[i, j] for i in a for j in b]), a, b)
            for a, b in itertools.combinations(clusters, 2)
        )
        h, a, b = best
        out.append((a | b, h))
        clusters = [c for c in clusters if c not in (a, b)] + [a | b]
    return out


def test_hcluster_against_definition():
    rng = np.random.default_rng(21)
    for _ in range(20):
        x = rng.normal(size=(9, 2))
        d = np.linalg.norm(x[:, None] - x[None], axis=2)
        tree = hcluster(d, distances=True)
        members = {i: frozenset([i]) for i in range(9)}
        for s, (l, r, h, size) in enumerate(tree.merges):
            members[9 + s] = members[l] | members[r]
        ref = brute_average_linkage(d)
        for s, (cl, h) in enumerate(ref):
            assert members[9 + s] == cl
            assert tree.merges[s][2] == pytest.approx(h, abs=1e-12)


def test_hcluster_tie_break_by_label():
    # equilateral points: every pair ties; the pair with the smallest labels merges first
    pts = [[0, 0], [1, 0], [0.5, np.sqrt(3) / 2]]
    tree = hcluster(pts, labels=["z", "b", "a"])
    assert {tree.merges[0][0], tree.merges[0][1]} == {1, 2}


def test_cophenetic_and_tanglegram():
    rng = np.random.default_rng(22)
    x = rng.normal(size=(8, 2))
    labs = [f"item{i}" for i in range(8)]
    d1 = hcluster(x, labels=labs)
    doc, coph = tanglegram_export(d1, d1)
    assert coph == 1.0
    assert doc.count('class="connector"') == 8
    assert doc == tanglegram_export(d1, d1)[0]
    d2 = hcluster(rng.normal(size=(8, 2)), labels=labs)
    c = cophenetic_correlation(d1, d2)
    assert -1.0 <= c <= 1.0
    with pytest.raises(LabelMismatch):
        tanglegram_export(d1, hcluster(x, labels=[f"other{i}" for i in range(8)]))
