import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ohmscope.errors import ConfigError, DatasetError, FitError, UndefinedCorrelationError
from ohmscope.featsel import (INTEGER_CODES, FrequencyMask, FrequencySelector, correlate_columns,
                              label_scores, pearson, screen_by_label, select_dominant)
from ohmscope.pca import PcaModel, VariancePCA, pca_fit, pca_transform


def two_pass(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    dx, dy = x - x.mean(), y - y.mean()
    return (dx @ dy) / np.sqrt((dx @ dx) * (dy @ dy))


def test_pearson_examples():
    assert pearson([1, 2, 3], [2, 4, 6]) == 1.0
    assert pearson([1, 2, 3], [3, 2, 1]) == -1.0
    assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == 0.8
    with pytest.raises(UndefinedCorrelationError):
        pearson([1, 1, 1], [1, 2, 3])


def test_pearson_matches_two_pass_oracle():
    rng = np.random.default_rng(3)
    for _ in range(300):
        n = int(rng.integers(2, 200))
        x = rng.normal(rng.normal(0, 100), rng.uniform(0.1, 50), n)
        y = 0.3 * x + rng.normal(0, rng.uniform(0.1, 50), n)
        assert abs(pearson(x, y) - two_pass(x, y)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(arrays(float, (30, 4), elements=st.floats(-1e3, 1e3)))
def test_vectorized_correlation_agrees(a):
    r = correlate_columns(a)
    for i in range(4):
        for j in range(4):
            if np.ptp(a[:, i]) > 1e-6 and np.ptp(a[:, j]) > 1e-6:
                assert r[i, j] == pytest.approx(two_pass(a[:, i], a[:, j]), abs=1e-8)
    assert np.all(np.abs(r) <= 1.0)


def test_screening_examples():
    rng = np.random.default_rng(0)
    y = np.repeat(np.arange(3), 40)
    X = np.column_stack([(y == 0).astype(float), np.full(120, 2.0), rng.normal(size=120)])
    scores = label_scores(X, y)
    assert scores[0] == pytest.approx(1.0) and scores[1] == 0.0
    idx, _ = screen_by_label(X, y, 0.5)
    assert idx.tolist() == [0]
    idx, _ = screen_by_label(X, y, 0.0)
    assert sorted(idx.tolist()) == [0, 2]
    with pytest.raises(ConfigError):
        screen_by_label(X, y, 1.0)


def test_pure_noise_mostly_rejected():
    rng = np.random.default_rng(1)
    y = rng.integers(0, 12, 1000)
    X = rng.normal(size=(1000, 400))
    idx, _ = screen_by_label(X, y, 0.3)
    assert len(idx) <= 4


def test_integer_code_mode_depends_on_ordering():
    y = np.repeat(np.arange(3), 10)
    col = np.where(y == 1, 1.0, 0.0)[:, None]
    assert label_scores(col, y, INTEGER_CODES)[0] == pytest.approx(0.0, abs=1e-12)
    assert label_scores(col, y)[0] == pytest.approx(1.0)


def test_dominant_examples():
    rng = np.random.default_rng(2)
    base = rng.normal(size=200)
    X = np.column_stack([base, base, base])
    assert select_dominant(X, [0, 1, 2]).tolist() == [0]
    Y = rng.normal(size=(1000, 6))
    assert select_dominant(Y, range(6)).tolist() == list(range(6))
    assert select_dominant(Y, []).tolist() == []


def test_dominant_ignores_duplicates():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(300, 5))
    X[:, 2] = X[:, 0] + 0.1 * rng.normal(size=300)
    plain = select_dominant(X, [0, 1, 2, 3, 4])
    dup = select_dominant(np.column_stack([X, X[:, 1]]), [0, 1, 5, 2, 3, 4])
    assert plain.tolist() == dup.tolist()


def assert_mask_properties(X, candidates, selected, tau2=0.85):
    r = np.abs(correlate_columns(X[:, selected]))
    np.fill_diagonal(r, 0)
    assert np.all(r < tau2)
    rejected = np.setdiff1d(candidates, selected)
    if len(rejected):
        cross = np.abs(correlate_columns(X[:, rejected], X[:, selected]))
        assert np.all(cross.max(axis=1) >= tau2)


def test_selector_on_synthetic_dataset(small_dataset):
    data = small_dataset.magnitudes()
    sel = FrequencySelector().fit(data.magnitudes, data.labels)
    selected = np.array(sel.mask_.selected)
    assert 0 < len(selected) < data.magnitudes.shape[1]
    assert_mask_properties(data.magnitudes, sel.candidates_, selected)
    assert sel.transform(data.magnitudes).shape == (len(data.labels), len(selected))
    with pytest.raises(DatasetError):
        sel.transform(data.magnitudes[:, :-1])


def test_mask_serialization_roundtrip():
    mask = FrequencyMask((1, 5, 9), (0.5, 0.25, 0.125), 10)
    assert FrequencyMask.loads(mask.dumps()) == mask
    with pytest.raises(DatasetError):
        FrequencyMask((5, 1), (0.1, 0.2), 10)


def test_pca_rank_one_line():
    t = np.linspace(-1, 1, 50)
    model = pca_fit(np.column_stack([t, 2 * t + 1]))
    assert model.n_components == 1
    assert model.variance_fraction == pytest.approx(1.0)


def test_pca_isotropic_keeps_all():
    X = np.random.default_rng(5).normal(size=(10_000, 3))
    assert pca_fit(X, 0.95).n_components == 3


def test_pca_properties_and_projection():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(400, 6)) @ rng.normal(size=(6, 6))
    model = pca_fit(X, 0.95)
    c = model.components
    assert np.allclose(c @ c.T, np.eye(model.n_components), atol=1e-9)
    assert np.all(np.diff(model.explained_variance) <= 0)
    ratios = model.explained_variance_ratio
    assert ratios.sum() >= 0.95 and ratios[:-1].sum() < 0.95
    proj = pca_transform(model, X)
    assert np.allclose(proj.var(axis=0, ddof=1), model.explained_variance, rtol=1e-9)
    assert np.allclose(pca_transform(model, model.mean), 0, atol=1e-12)
    for row in c:
        assert row[np.argmax(np.abs(row))] > 0
    with pytest.raises(DatasetError):
        pca_transform(model, X[:, :3])


def test_pca_reconstruction_error_non_increasing():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(200, 5)) * np.array([5, 4, 3, 2, 1])
    full = pca_fit(X, 1.0)
    errs = []
    for k in range(1, 6):
        comps = full.components[:k]
        recon = (X - full.mean) @ comps.T @ comps + full.mean
        errs.append(float(((X - recon) ** 2).sum()))
    assert all(a >= b - 1e-9 for a, b in zip(errs, errs[1:]))


def test_pca_errors_and_zero_variance_columns():
    with pytest.raises(FitError):
        pca_fit(np.ones((1, 3)))
    with pytest.raises(FitError):
        pca_fit(np.ones((5, 3)), 1.5)
    rng = np.random.default_rng(8)
    X = np.column_stack([rng.normal(size=50), np.full(50, 3.0), rng.normal(size=50)])
    model = pca_fit(X, 1.0)
    assert np.all(model.components[:, 1] == 0)
    assert pca_fit(np.empty((5, 0))).n_components == 0


def test_pca_serialization_roundtrip():
    X = np.random.default_rng(9).normal(size=(30, 4))
    model = pca_fit(X, 0.9)
    back = PcaModel.loads(model.dumps())
    assert back.n_components == model.n_components
    assert np.array_equal(back.components, model.components)
    assert np.array_equal(back.mean, model.mean)
    assert back.total_variance == model.total_variance


def test_variance_pca_estimator_does_not_refit_on_transform():
    X = np.random.default_rng(10).normal(size=(60, 4))
    est = VariancePCA(0.9).fit(X)
    before = est.model_.dumps()
    est.transform(np.random.default_rng(11).normal(size=(20, 4)))
    assert est.model_.dumps() == before
    assert est.get_params() == {"variance_target": 0.9}
