import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings

from assockit.association import chi_squared_test
from assockit.ca import coordinates_csv, export_biplot, fit_ca, standardized_residuals
from assockit.errors import DimensionUnavailable, TooManyDimensions
from assockit.table import build_table

from test_table import labels, positive_tables


def T(counts):
    counts = np.asarray(counts)
    return build_table(labels(counts.shape[0], "r"), labels(counts.shape[1], "c"), counts)


def chi2_row_distances(counts):
    """Chi-squared distances between row profiles, written out longhand."""
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    col_mass = counts.sum(axis=0) / n
    prof = counts / counts.sum(axis=1, keepdims=True)
    r = len(counts)
    d = np.zeros((r, r))
    for i in range(r):
        for k in range(r):
            d[i, k] = np.sqrt(np.sum((prof[i] - prof[k]) ** 2 / col_mass))
    return d


def test_residual_examples():
    s = standardized_residuals(T([[10, 10], [10, 10]]))
    assert np.all(s == 0)
    s = standardized_residuals(T([[20, 5], [5, 20]]))
    np.testing.assert_allclose(s, [[0.3, -0.3], [-0.3, 0.3]], rtol=1e-12)
    assert np.sum(s ** 2) == pytest.approx(0.36, rel=1e-12)


def test_two_column_table_is_one_dimensional():
    sol = fit_ca(T([[20, 5], [5, 20], [9, 9]]))
    assert sol.max_dims == 1
    np.testing.assert_array_equal(sol.variance_explained, [1.0])


def test_independent_table_zero_inertia():
    sol = fit_ca(T(np.outer([1, 2, 3], [2, 1, 4, 1])))
    assert sol.rank == 0
    assert np.all(sol.singular_values == 0)
    assert np.all(sol.variance_explained == 0)
    assert np.all(sol.row_coords == 0)


def test_too_many_dimensions():
    with pytest.raises(TooManyDimensions):
        fit_ca(T([[1, 2, 3], [4, 5, 7]]), ndim=2)


@settings(max_examples=150, deadline=None)
@given(positive_tables(max_r=6, max_c=6))
def test_inertia_identity(t):
    sol = fit_ca(t)
    chi2 = chi_squared_test(t).chi2
    assert abs(sol.total_inertia - chi2 / t.n) <= 1e-9 * max(chi2 / t.n, 1e-300) + 1e-15


@settings(max_examples=150, deadline=None)
@given(positive_tables(max_r=6, max_c=6))
def test_row_distances_are_chi2_distances(t):
    sol = fit_ca(t)
    coords = sol.row_coords
    d = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=2)
    ref = chi2_row_distances(t.counts)
    scale = max(1.0, ref.max())
    assert np.max(np.abs(d - ref)) <= 1e-9 * scale


@settings(max_examples=100, deadline=None)
@given(positive_tables(max_r=6, max_c=6))
def test_variance_explained_properties(t):
    sol = fit_ca(t)
    v = sol.variance_explained
    assert np.all(v >= 0)
    assert np.all(np.diff(sol.singular_values) <= 0)
    if sol.rank > 0:
        assert abs(v.sum() - 1.0) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(positive_tables(max_r=6, max_c=6))
def test_weighted_centroid_at_origin(t):
    sol = fit_ca(t)
    assert np.all(np.abs(sol.row_masses @ sol.row_coords) <= 1e-10)
    assert np.all(np.abs(sol.col_masses @ sol.col_coords) <= 1e-10)


def test_row_permutation_equivariance():
    rng = np.random.default_rng(4)
    for _ in range(30):
        counts = rng.integers(1, 30, size=(5, 4))
        perm = rng.permutation(5)
        a = fit_ca(T(counts))
        b = fit_ca(build_table([f"r{i}" for i in perm], labels(4, "c"), counts[perm]))
        np.testing.assert_allclose(a.singular_values, b.singular_values, rtol=1e-10)
        # coordinates agree up to a sign flip per axis
        for d in range(a.ndim):
            x, y = a.row_coords[perm, d], b.row_coords[:, d]
            assert min(np.max(np.abs(x - y)), np.max(np.abs(x + y))) <= 1e-9


def test_biplot_dimension_errors():
    sol = fit_ca(T([[5, 1, 2], [1, 6, 2], [2, 2, 9]]), ndim=2)
    with pytest.raises(DimensionUnavailable):
        export_biplot(sol, dims=(1, 3))
    with pytest.raises(DimensionUnavailable):
        export_biplot(sol, dims=(0, 1))


def test_biplot_svg_content_and_determinism():
    t = T([[12, 3, 5, 1], [2, 14, 4, 6], [5, 5, 11, 2], [3, 1, 2, 13], [8, 7, 1, 1]])
    svg1 = export_biplot(fit_ca(t, 2), dims=(1, 2))
    svg2 = export_biplot(fit_ca(t, 2), dims=(1, 2))
    assert svg1 == svg2
    assert svg1.startswith("<svg") or svg1.startswith("<?xml")
    assert svg1.count('class="row-point"') == 5
    assert svg1.count('class="col-point"') == 4


def test_biplot_single_axis():
    sol = fit_ca(T([[20, 5], [5, 20], [9, 9]]))
    svg = export_biplot(sol, dims=(1,))
    assert svg.count('class="row-point"') == 3


def test_coordinates_csv_shape():
    t = T([[12, 3, 5], [2, 14, 4], [5, 5, 11], [3, 1, 2]])
    sol = fit_ca(t)
    text = export_biplot(sol, dims=(1, 2), output_format="csv")
    assert text == coordinates_csv(sol)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["label", "axis", "kind", "coord1", "coord2"]
    assert len(rows) == 1 + 4 + 3
    assert [r[2] for r in rows[1:]] == ["row"] * 4 + ["col"] * 3
    np.testing.assert_allclose([[float(v) for v in r[3:]] for r in rows[1:5]], sol.row_coords, rtol=0, atol=0)
