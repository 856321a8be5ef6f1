import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdasmooth.dataset import EvaluationGrid, make_grid
from fdasmooth.exceptions import (
    AsymmetricInput,
    GridMismatch,
    LengthMismatch,
    NoPositiveEigenvalues,
    TooManyComponents,
)
from fdasmooth.fpca import EigenSystem, align_sign, decompose, eigen_errors, reconstruct
from fdasmooth.simgen import brownian_spec, true_eigensystem

BROWNIAN_OMEGA = [4 / ((2 * k - 1) ** 2 * math.pi**2) for k in (1, 2, 3)]


def _min_surface(G):
    g = make_grid((0, 1), G)
    return g, np.minimum.outer(g.points, g.points)


def _random_psd(seed, G=41, rank=6, negative=False):
    rng = np.random.default_rng(seed)
    g = make_grid((0, 1), G)
    B = rng.normal(size=(rank, G))
    lam = np.sort(rng.uniform(0.1, 2, rank))[::-1]
    if negative:
        lam[-2:] *= -1
    R = (B.T * lam) @ B
    return g, 0.5 * (R + R.T)


def test_constant_surface_is_rank_one():
    g = make_grid((0, 1), 51)
    eig = decompose(np.ones((51, 51)), grid=g)
    assert eig.eigenvalues[0] == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(np.abs(eig.eigenfunctions[0]), 1.0, atol=1e-10)
    assert eig.n_components == 1


def test_brownian_surface_on_201_points():
    g, R = _min_surface(201)
    eig = decompose(R, 3, grid=g)
    np.testing.assert_allclose(eig.eigenvalues, BROWNIAN_OMEGA, rtol=0.01)
    # The printed triple is rounded to three decimals (4 / (25 pi^2) = 0.01621).
    np.testing.assert_array_equal(np.round(eig.eigenvalues, 3), [0.405, 0.045, 0.016])
    for k in range(3):
        truth = math.sqrt(2) * np.sin((k + 0.5) * math.pi * g.points)
        psi = align_sign(eig.eigenfunctions[k], truth, g.weights)
        assert np.max(np.abs(psi - truth)) < 0.02


def test_three_by_three_against_characteristic_polynomial():
    # W^1/2 R W^1/2 = diag(2, 1, 0) / 3, so det(M - x I) = (2/3 - x)(1/3 - x)(-x).
    g = EvaluationGrid(np.array([0.0, 0.5, 1.0]), np.full(3, 1 / 3))
    eig = decompose(np.diag([2.0, 1.0, 0.0]), grid=g)
    roots = sorted(np.roots([-1, 1, -2 / 9, 0]).real, reverse=True)
    np.testing.assert_allclose(eig.eigenvalues, roots[:2], atol=1e-14)
    np.testing.assert_allclose(eig.eigenvalues / eig.eigenvalues[1], [2, 1], atol=1e-14)
    np.testing.assert_allclose(eig.eigenfunctions, [[math.sqrt(3), 0, 0], [0, math.sqrt(3), 0]], atol=1e-12)


def test_accepts_covariance_estimate_like_objects():
    g, R = _random_psd(0)

    class Cov:
        grid = g
        values = R

    a = decompose(Cov(), 2)
    b = decompose(R, 2, grid=g)
    np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)


def test_decompose_errors():
    g, R = _random_psd(1)
    bad = R.copy()
    bad[0, 1] += 1e-6
    with pytest.raises(AsymmetricInput):
        decompose(bad, grid=g)
    with pytest.raises(NoPositiveEigenvalues):
        decompose(-np.eye(g.size), grid=g)
    with pytest.raises(GridMismatch):
        decompose(R[:-1, :-1], grid=g)


def test_orientation_is_deterministic():
    g, R = _random_psd(2)
    eig = decompose(R, grid=g)
    for psi in eig.eigenfunctions:
        assert psi[np.argmax(np.abs(psi))] > 0


def test_align_sign_cases():
    w = np.full(4, 0.25)
    ref = np.array([1.0, 2.0, -1.0, 0.5])
    np.testing.assert_array_equal(align_sign(-ref, ref, w), ref)
    np.testing.assert_array_equal(align_sign(ref, ref, w), ref)
    ortho = np.array([2.0, -1.0, 0.0, 0.0])
    assert ortho @ (w * ref) == 0
    np.testing.assert_array_equal(align_sign(ortho, ref, w), ortho)
    with pytest.raises(LengthMismatch):
        align_sign(ref[:3], ref, w)


def test_reconstruct_rank_cases():
    g, R = _random_psd(3, rank=4)
    eig = decompose(R, grid=g)
    assert eig.n_components == 4
    np.testing.assert_allclose(reconstruct(eig), R, atol=1e-8 * np.abs(R).max())
    f = np.cos(g.points)
    rank1 = np.outer(f, f)
    np.testing.assert_allclose(reconstruct(decompose(rank1, grid=g), 1), rank1, atol=1e-12)
    with pytest.raises(TooManyComponents):
        reconstruct(eig, 5)


def test_reconstruct_brownian_tail():
    g, R = _min_surface(201)
    full = decompose(R, grid=g)
    sw = np.sqrt(g.weights)
    err = np.linalg.norm(sw[:, None] * (R - reconstruct(full, 2)) * sw[None, :])
    discrete_tail = math.sqrt(np.sum(full.eigenvalues[2:] ** 2))
    assert err == pytest.approx(discrete_tail, rel=1e-8)
    k = np.arange(3, 20001)
    analytic_tail = math.sqrt(np.sum((4 / ((2 * k - 1) ** 2 * math.pi**2)) ** 2))
    assert err == pytest.approx(analytic_tail, rel=0.05)


def test_eigen_errors():
    g = make_grid((0, 1), 51)
    truth = true_eigensystem(brownian_spec(), g, 3)
    for e in eigen_errors(truth, truth):
        assert e.eigenvalue_error == 0 and e.l2_error == 0 and e.sup_error == 0
    flipped = EigenSystem(g, truth.eigenvalues, truth.eigenfunctions * np.array([[-1], [1], [1]]))
    assert all(e.l2_error == 0 and e.sup_error == 0 for e in eigen_errors(flipped, truth))
    with pytest.raises(GridMismatch):
        eigen_errors(truth, true_eigensystem(brownian_spec(), make_grid((0, 1), 21), 3))


# Invariants


@pytest.mark.invariant
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_eigenfunctions_are_orthonormal(seed, negative):
    g, R = _random_psd(seed, negative=negative)
    eig = decompose(R, grid=g)
    assert np.all(np.diff(eig.eigenvalues) <= 0) and np.all(eig.eigenvalues > 0)
    gram = (eig.eigenfunctions * g.weights) @ eig.eigenfunctions.T
    np.testing.assert_allclose(np.diag(gram), 1.0, atol=1e-8)
    off = gram - np.diag(np.diag(gram))
    assert np.max(np.abs(off)) < 1e-6


@pytest.mark.invariant
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_reconstruction_recovers_psd_part(seed, negative):
    g, R = _random_psd(seed, negative=negative)
    sw = np.sqrt(g.weights)
    vals, vecs = np.linalg.eigh(sw[:, None] * R * sw[None, :])
    pos = vals > 1e-10 * vals.max()
    psd = (vecs[:, pos] * vals[pos]) @ vecs[:, pos].T / np.outer(sw, sw)
    rec = reconstruct(decompose(R, grid=g))
    assert np.linalg.norm(rec - psd) <= 1e-6 * np.linalg.norm(psd)


@pytest.mark.invariant
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_eigenvalue_sum_matches_quadrature_trace(seed):
    g, R = _random_psd(seed)
    eig = decompose(R, grid=g)
    trace = g.weights @ np.diag(R)
    assert eig.eigenvalues.sum() <= trace + 1e-6
    assert eig.eigenvalues.sum() == pytest.approx(trace, rel=1e-9)
    assert decompose(R, 2, grid=g).eigenvalues.sum() <= trace + 1e-6


@pytest.mark.invariant
def test_grid_refinement_stability():
    w101 = decompose(_min_surface(101)[1], 1, grid=_min_surface(101)[0]).eigenvalues[0]
    w201 = decompose(_min_surface(201)[1], 1, grid=_min_surface(201)[0]).eigenvalues[0]
    assert abs(w101 - w201) < 1e-3


@pytest.mark.invariant
@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3), st.lists(st.floats(-10, 10), min_size=3, max_size=3))
def test_align_sign_is_idempotent(e, r):
    w = np.array([0.25, 0.5, 0.25])
    once = align_sign(e, r, w)
    np.testing.assert_array_equal(align_sign(once, r, w), once)
