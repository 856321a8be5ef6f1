import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from _oracles import random_design, surface_oracle
from fdasmooth.dataset import FunctionalDataset, make_grid
from fdasmooth.exceptions import DegenerateSurfaceWindow, GridMismatch, NoPairableCurves
from fdasmooth.kernels import EPANECHNIKOV
from fdasmooth.simgen import DesignSpec, KLModelSpec, derive_seed, generate, simulation1_spec
from fdasmooth.smooth1d import MeanEstimate, estimate_mean
from fdasmooth.smooth2d import (
    ErrorVarianceEstimate,
    RawCovarianceEstimate,
    estimate_covariance,
    estimate_raw_covariance,
    estimate_sigma2,
    local_linear_surface_fit,
    surface_at_points,
)


def _one(t):
    return np.ones_like(np.asarray(t, dtype=float))


def _zero(t):
    return np.zeros_like(np.asarray(t, dtype=float))


def _random_dataset(seed, n=25, m=6):
    rng = np.random.default_rng(seed)
    times = [rng.uniform(0, 1, m) for _ in range(n)]
    values = [np.sin(3 * t) + rng.normal(0, 0.5, m) for t in times]
    return times, values, FunctionalDataset.from_curves(times, values, domain=(0, 1))


def affine_pair_dataset(rng, n, a0, a1):
    """Curves with m in {2, 3} whose within-curve products equal a0 + a1 (T_j + T_k) exactly."""
    times, values = [], []
    for _ in range(n):
        m = int(rng.integers(2, 4))
        t = rng.uniform(0, 1, m)
        f = lambda j, k: a0 + a1 * (t[j] + t[k])  # noqa: E731
        if m == 2:
            y = np.array([1.0, f(0, 1)])
        else:
            y0 = np.sqrt(f(0, 1) * f(0, 2) / f(1, 2))
            y = np.array([y0, f(0, 1) / y0, f(0, 2) / y0])
        times.append(t)
        values.append(y)
    return times, values, FunctionalDataset.from_curves(times, values, domain=(0, 1))


def test_constant_surface_reproduced():
    rng = np.random.default_rng(0)
    times = [rng.uniform(0, 1, 5) for _ in range(30)]
    d = FunctionalDataset.from_curves(times, [np.full(5, 2.0) for _ in times], domain=(0, 1))
    raw = estimate_raw_covariance(d, EPANECHNIKOV, 0.25, make_grid((0, 1), 51))
    np.testing.assert_allclose(raw.values, 4.0, rtol=0, atol=1e-9)


def test_affine_surface_reproduced():
    rng = np.random.default_rng(1)
    times, values, d = affine_pair_dataset(rng, 60, 2.0, 0.7)
    g = make_grid((0, 1), 26)
    raw = estimate_raw_covariance(d, EPANECHNIKOV, 0.3, g)
    expected = 2.0 + 0.7 * (g.points[:, None] + g.points[None, :])
    assert np.max(np.abs(raw.values - expected)) < 1e-9


def test_eight_pair_example_against_dense_solve():
    times = [[0.3, 0.5, 0.7], [0.4, 0.6]]
    values = [[1.0, 2.0, 1.0], [0.0, 1.0]]
    d = FunctionalDataset.from_curves(times, values)
    assert len(d.pairs[0]) == 8
    expected = surface_oracle(times, values, 0.5, 0.5, 0.35)
    assert local_linear_surface_fit(d, EPANECHNIKOV, 0.35, 0.5, 0.5) == pytest.approx(expected, rel=1e-12)
    assert surface_at_points(d, EPANECHNIKOV, 0.35, [0.5], [0.5])[0] == pytest.approx(expected, rel=1e-12)


def test_full_grid_matches_dense_oracle():
    rng = np.random.default_rng(2)
    times = [rng.uniform(0, 1, 8) for _ in range(5)]
    values = [rng.normal(size=8) for _ in range(5)]
    d = FunctionalDataset.from_curves(times, values, domain=(0, 1))
    g = make_grid((0, 1), 51)
    raw = estimate_raw_covariance(d, EPANECHNIKOV, 0.45, g)
    oracle = np.array([[surface_oracle(times, values, s, t, 0.45) for t in g.points] for s in g.points])
    assert np.max(np.abs(raw.values - oracle)) < 1e-9


def test_grid_direct_and_pointwise_paths_agree():
    _, _, d = _random_dataset(3)
    g = make_grid((0, 1), 21)
    raw = estimate_raw_covariance(d, EPANECHNIKOV, 0.2, g)
    S, T = np.meshgrid(g.points, g.points, indexing="ij")
    pw = surface_at_points(d, EPANECHNIKOV, 0.2, S.ravel(), T.ravel()).reshape(S.shape)
    direct = np.array([[local_linear_surface_fit(d, EPANECHNIKOV, 0.2, s, t) for t in g.points] for s in g.points])
    np.testing.assert_allclose(raw.values, direct, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(pw, direct, rtol=1e-10, atol=1e-12)


def test_covariance_subtracts_mean_product():
    g = make_grid((0, 1), 11)
    raw = RawCovarianceEstimate(g, np.full((11, 11), 4.0), 0.1)
    cov = estimate_covariance(raw, MeanEstimate(g, np.full(11, 2.0), 0.1))
    np.testing.assert_array_equal(cov.values, 0.0)
    _, _, d = _random_dataset(4)
    raw = estimate_raw_covariance(d, EPANECHNIKOV, 0.2, g)
    cov = estimate_covariance(raw, MeanEstimate(g, np.zeros(11), 0.1))
    np.testing.assert_array_equal(cov.values, raw.values)
    mean = estimate_mean(d, EPANECHNIKOV, 0.2, g)
    cov = estimate_covariance(raw, mean)
    np.testing.assert_array_equal(cov.values, raw.values - np.outer(mean.values, mean.values))
    np.testing.assert_array_equal(cov.values, cov.values.T)


def test_covariance_grid_mismatch():
    g1, g2 = make_grid((0, 1), 11), make_grid((0, 1), 12)
    raw = RawCovarianceEstimate(g1, np.zeros((11, 11)), 0.1)
    with pytest.raises(GridMismatch):
        estimate_covariance(raw, MeanEstimate(g2, np.zeros(12), 0.1))


def test_singleton_curves_are_excluded_from_pairs():
    times, values, d = _random_dataset(5)
    with_singles = FunctionalDataset.from_curves(
        times + [[0.5], [0.2]], values + [[100.0], [-50.0]], domain=(0, 1)
    )
    g = make_grid((0, 1), 21)
    a = estimate_raw_covariance(d, EPANECHNIKOV, 0.2, g).values
    b = estimate_raw_covariance(with_singles, EPANECHNIKOV, 0.2, g).values
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)


def test_no_pairable_curves():
    d = FunctionalDataset.from_curves([[0.1], [0.5], [0.9]], [[1], [2], [3]])
    with pytest.raises(NoPairableCurves):
        estimate_raw_covariance(d, EPANECHNIKOV, 0.5, make_grid(d.domain, 5))
    with pytest.raises(NoPairableCurves):
        local_linear_surface_fit(d, EPANECHNIKOV, 0.5, 0.5, 0.5)


def test_degenerate_surface_window_reports_location():
    d = FunctionalDataset.from_curves([[0.1, 0.15, 0.2], [0.12, 0.18]], [[1, 2, 3], [2, 1]], domain=(0, 1))
    with pytest.raises(DegenerateSurfaceWindow) as info:
        estimate_raw_covariance(d, EPANECHNIKOV, 0.2, make_grid((0, 1), 11))
    s, t = info.value.location
    assert max(s, t) >= 0.3


def test_sigma2_zero_when_smooths_agree():
    rng = np.random.default_rng(6)
    times = [rng.uniform(0, 1, 6) for _ in range(40)]
    d = FunctionalDataset.from_curves(times, [np.full(6, 1.5) for _ in times], domain=(0, 1))
    est = estimate_sigma2(d, EPANECHNIKOV, 0.2, 0.2, make_grid((0, 1), 101))
    assert est.integral_v == pytest.approx(2.25, rel=1e-12)
    assert est.integral_c_diag == pytest.approx(2.25, rel=1e-12)
    assert abs(est.sigma2) < 1e-10


def test_sigma2_is_the_quadrature_difference():
    _, _, d = _random_dataset(7, n=60)
    g = make_grid((0, 1), 101)
    est = estimate_sigma2(d, EPANECHNIKOV, 0.2, 0.2, g)
    assert est.sigma2 == pytest.approx(est.integral_v - est.integral_c_diag, rel=1e-14)
    assert ErrorVarianceEstimate(-0.1, 1.0, 1.1).negative
    assert not ErrorVarianceEstimate(0.1, 1.1, 1.0).negative


def test_sigma2_noiseless_scalar_curves_monte_carlo():
    model = KLModelSpec(mean_fn=_zero, components=((1.0, _one),), sigma2=0.0)
    g = make_grid((0, 1), 101)
    s2 = [
        estimate_sigma2(generate(model, DesignSpec(200, 10), derive_seed(5, r)), EPANECHNIKOV, 0.103, 0.107, g).sigma2
        for r in range(50)
    ]
    assert abs(np.mean(s2)) < 0.02


@pytest.mark.slow
def test_sim1_covariance_diagonal_m50():
    model = simulation1_spec()
    g = make_grid((0, 1), 51)
    diags = []
    for r in range(50):
        d = generate(model, DesignSpec(200, 50), derive_seed(11, r))
        cov = estimate_covariance(
            estimate_raw_covariance(d, EPANECHNIKOV, 0.077, g), estimate_mean(d, EPANECHNIKOV, 0.107, g)
        )
        diags.append(np.diag(cov.values))
    truth = np.diag(model.covariance(g.points, g.points))
    interior = (g.points >= 0.077) & (g.points <= 1 - 0.077)
    rel = np.abs(np.mean(diags, axis=0) / truth - 1)
    assert rel[interior].max() < 0.15


# Invariants


@pytest.mark.invariant
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_surfaces_are_exactly_symmetric(seed):
    _, _, d = _random_dataset(seed, n=int(seed % 20) + 10)
    g = make_grid((0, 1), 31)
    try:
        raw = estimate_raw_covariance(d, EPANECHNIKOV, 0.3, g)
    except DegenerateSurfaceWindow:
        # A sparse draw can leave a corner window with too few pairs; there is
        # no surface to compare there.
        assume(False)
    cov = estimate_covariance(raw, estimate_mean(d, EPANECHNIKOV, 0.3, g))
    assert np.array_equal(raw.values, raw.values.T)
    assert np.array_equal(cov.values, cov.values.T)
    assert np.all(np.isfinite(raw.values))


@pytest.mark.invariant
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 0.25))
def test_duplicating_observations_leaves_off_diagonal_surface_unchanged(seed, h):
    # Duplicates add self-products Y_j^2 at (T_j, T_j); they reach (s, t) only when |s - t| < 2h.
    times, values, d = _random_dataset(seed, n=30, m=5)
    dup = FunctionalDataset.from_curves(
        [np.tile(t, 2) for t in times], [np.tile(v, 2) for v in values], domain=(0, 1)
    )
    rng = np.random.default_rng(seed)
    s = rng.uniform(0, 1, 40)
    t = rng.uniform(0, 1, 40)
    far = np.abs(s - t) >= 2 * h
    if not far.any():
        return
    try:
        a = surface_at_points(d, EPANECHNIKOV, h, s[far], t[far])
    except DegenerateSurfaceWindow:
        return
    b = surface_at_points(dup, EPANECHNIKOV, h, s[far], t[far])
    np.testing.assert_allclose(b, a, rtol=1e-10, atol=1e-10)


@pytest.mark.invariant
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.15, 0.3), st.floats(0, 1), st.floats(0, 1))
def test_observations_outside_both_windows_have_no_effect(seed, h, s, t):
    times, values, d = _random_dataset(seed, n=20, m=5)
    try:
        before = local_linear_surface_fit(d, EPANECHNIKOV, h, s, t)
    except DegenerateSurfaceWindow:
        return
    rng = np.random.default_rng(seed)
    far = [(np.abs(ti - s) >= h) & (np.abs(ti - t) >= h) for ti in times]
    moved = [np.where(f, v + rng.normal(0, 100, len(v)), v) for f, v in zip(far, values)]
    d2 = FunctionalDataset.from_curves(times, moved, domain=(0, 1))
    assert local_linear_surface_fit(d2, EPANECHNIKOV, h, s, t) == before
    assert surface_at_points(d2, EPANECHNIKOV, h, [s], [t])[0] == surface_at_points(d, EPANECHNIKOV, h, [s], [t])[0]


@pytest.mark.invariant
@pytest.mark.parametrize("seed", range(100))
def test_closed_form_matches_dense_solve(seed):
    rng = np.random.default_rng(seed)
    times = random_design(rng, n_max=10, m_max=6, m_min=2)
    values = [rng.normal(size=len(t)) for t in times]
    d = FunctionalDataset.from_curves(times, values, domain=(0, 1))
    checked = 0
    for s, t in rng.uniform(0, 1, (5, 2)):
        try:
            value = local_linear_surface_fit(d, EPANECHNIKOV, 0.5, s, t)
        except DegenerateSurfaceWindow:
            continue
        oracle = surface_oracle(times, values, s, t, 0.5)
        assert abs(value - oracle) <= 1e-9 * abs(oracle)
        checked += 1
    assert checked > 0


@pytest.mark.invariant
def test_diagonal_consistency_for_scalar_curves():
    model = KLModelSpec(mean_fn=_zero, components=((0.5, _one),), sigma2=0.0)
    pts = np.linspace(0.1, 0.9, 9)
    diag = []
    for r in range(100):
        d = generate(model, DesignSpec(500, 3), derive_seed(6, r))
        C = surface_at_points(d, EPANECHNIKOV, 0.2, pts, pts)
        mu = estimate_mean(d, EPANECHNIKOV, 0.2, make_grid((0, 1), 11)).values[1:10]
        diag.append(C - mu * mu)
    np.testing.assert_allclose(np.mean(diag, axis=0), 0.5, rtol=0.10)
