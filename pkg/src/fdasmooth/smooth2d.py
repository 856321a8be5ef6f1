"""Bivariate local-linear smoothing of within-curve cross products.

The raw second-moment surface ``C(s, t) = E[X(s) X(t)]`` is estimated by a
local-plane fit to the products ``Y_ij Y_ik`` over all ordered pairs
``j != k`` of the same curve, each curve weighted by ``1 / N_i`` with
``N_i = m_i (m_i - 1)``. Subtracting the rank-one mean product gives the
covariance surface; comparing the diagonal with the smoothed squared
responses gives the measurement error variance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import EvaluationGrid, FunctionalDataset
from .exceptions import DegenerateSurfaceWindow, GridMismatch, NoPairableCurves, NonpositiveBandwidth
from .kernels import KernelSpec, get_kernel
from .smooth1d import MeanEstimate, estimate_variance_function

DET_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class RawCovarianceEstimate:
    grid: EvaluationGrid
    values: np.ndarray
    bandwidth: float
    kernel: str = "epanechnikov"


@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    raw: RawCovarianceEstimate
    mean: MeanEstimate
    values: np.ndarray

    @property
    def grid(self) -> EvaluationGrid:
        return self.raw.grid


@dataclass(frozen=True, eq=False)
class ErrorVarianceEstimate:
    """Measurement error variance and the two integrals it was formed from.

    ``sigma2`` is never truncated; check :attr:`negative` before using it as
    a variance.
    """

    sigma2: float
    integral_v: float
    integral_c_diag: float

    @property
    def negative(self) -> bool:
        return self.sigma2 < 0


def _check_bandwidth(h):
    if not h > 0:
        raise NonpositiveBandwidth(f"bandwidth must be positive, got {h}")


def _pairable(dataset: FunctionalDataset):
    """Observation arrays restricted to curves with at least two observations.

    Returns times, responses, per-curve weights ``1 / (n_eff N_i)``,
    per-observation weights and reduceat offsets.
    """
    m = dataset.m
    keep = m >= 2
    if not np.any(keep):
        raise NoPairableCurves("covariance estimation needs at least one curve with two or more observations")
    obs_keep = np.repeat(keep, m)
    mk = m[keep].astype(float)
    w_curve = 1.0 / (np.count_nonzero(keep) * mk * (mk - 1.0))
    w_obs = np.repeat(w_curve, m[keep])
    starts = np.concatenate([[0], np.cumsum(m[keep])[:-1]]).astype(np.int64)
    return dataset.t[obs_keep], dataset.y[obs_keep], w_curve, w_obs, starts


def _solve(S00, S10, S01, S20, S02, S11, R00, R10, R01, n_pairs, locate):
    A1 = S20 * S02 - S11 * S11
    A2 = S10 * S02 - S01 * S11
    A3 = S01 * S20 - S10 * S11
    B = A1 * S00 - A2 * S10 - A3 * S01
    tol = DET_RTOL * np.maximum(np.abs(A1 * S00), 1.0)
    bad = (n_pairs < 3) | (np.abs(B) < tol)
    if np.any(bad):
        idx = np.unravel_index(int(np.argmax(bad)), np.shape(bad))
        s, t = locate(idx)
        raise DegenerateSurfaceWindow(
            f"surface window at (s, t)=({s:.6g}, {t:.6g}) is degenerate "
            f"({int(np.asarray(n_pairs)[idx])} pairs in window, B={np.asarray(B)[idx]:.3g})",
            location=(s, t),
        )
    return (A1 * R00 - A2 * R10 - A3 * R01) / B


def local_linear_surface_fit(
    dataset: FunctionalDataset,
    kernel: KernelSpec,
    h_R: float,
    s: float,
    t: float,
) -> float:
    """Intercept of the local-plane fit at ``(s, t)``, by a direct pass over pairs."""
    _check_bandwidth(h_R)
    kernel = get_kernel(kernel)
    _pairable(dataset)
    j, k = dataset.pairs
    m = dataset.m.astype(float)
    n_eff = np.count_nonzero(dataset.m >= 2)
    w_pair = 1.0 / (n_eff * m * (m - 1.0))[dataset.curve_index[j]]
    u = (dataset.t[j] - s) / h_R
    v = (dataset.t[k] - t) / h_R
    kk = kernel._fn(u) * kernel._fn(v) / (h_R * h_R) * w_pair
    yy = dataset.y[j] * dataset.y[k]
    S = {(p, q): np.sum(kk * u ** p * v ** q) for p, q in [(0, 0), (1, 0), (0, 1), (2, 0), (0, 2), (1, 1)]}
    R = {(p, q): np.sum(kk * u ** p * v ** q * yy) for p, q in [(0, 0), (1, 0), (0, 1)]}
    value = _solve(
        S[0, 0], S[1, 0], S[0, 1], S[2, 0], S[0, 2], S[1, 1],
        R[0, 0], R[1, 0], R[0, 1],
        np.count_nonzero(kk > 0),
        lambda idx: (float(s), float(t)),
    )
    return float(value)


def _basis(t, points, kernel, h):
    U = (t[:, None] - points[None, :]) / h
    K = kernel._fn(U) / h
    return K, K * U, K * U * U


def surface_at_points(dataset, kernel, h_R, s, t) -> np.ndarray:
    """Local-plane intercepts at the paired points ``(s[g], t[g])``.

    Uses ``sum_{j != k} a_j b_k = (sum_j a_j)(sum_k b_k) - sum_j a_j b_j`` per
    curve, which needs one pass over observations instead of over pairs.
    """
    _check_bandwidth(h_R)
    kernel = get_kernel(kernel)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    T, Y, w_curve, w_obs, starts = _pairable(dataset)
    A = _basis(T, s, kernel, h_R)
    Bt = _basis(T, t, kernel, h_R)
    csum = lambda M: np.add.reduceat(M, starts, axis=0)  # noqa: E731
    PA = [csum(M) for M in A]
    PB = [csum(M) for M in Bt]
    YA = [csum(Y[:, None] * M) for M in A[:2]]
    YB = [csum(Y[:, None] * M) for M in Bt[:2]]

    def pair_sum(P1, P2, D1, D2, wo):
        return (w_curve[:, None] * P1 * P2).sum(axis=0) - (wo[:, None] * D1 * D2).sum(axis=0)

    S = {(p, q): pair_sum(PA[p], PB[q], A[p], Bt[q], w_obs) for p, q in [(0, 0), (1, 0), (0, 1), (2, 0), (0, 2), (1, 1)]}
    wy2 = w_obs * Y * Y
    R = {(p, q): pair_sum(YA[p], YB[q], A[p], Bt[q], wy2) for p, q in [(0, 0), (1, 0), (0, 1)]}
    IA = [csum((A[0] > 0).astype(float))]
    IB = [csum((Bt[0] > 0).astype(float))]
    n_pairs = (IA[0] * IB[0]).sum(axis=0) - ((A[0] > 0) & (Bt[0] > 0)).sum(axis=0)
    return _solve(
        S[0, 0], S[1, 0], S[0, 1], S[2, 0], S[0, 2], S[1, 1],
        R[0, 0], R[1, 0], R[0, 1],
        np.rint(n_pairs),
        lambda idx: (float(s[idx[0]]), float(t[idx[0]])),
    )


def estimate_raw_covariance(dataset, kernel, h_R, grid: EvaluationGrid) -> RawCovarianceEstimate:
    """Raw second-moment surface on ``grid x grid``.

    Surface moments are assembled with matrix products over per-curve sums;
    the upper triangle is kept and mirrored so the result is exactly
    symmetric.
    """
    _check_bandwidth(h_R)
    kernel = get_kernel(kernel)
    T, Y, w_curve, w_obs, starts = _pairable(dataset)
    pts = grid.points
    Phi = _basis(T, pts, kernel, h_R)
    P = [np.add.reduceat(M, starts, axis=0) for M in Phi]
    PY = [np.add.reduceat(Y[:, None] * M, starts, axis=0) for M in Phi[:2]]

    def pair_sum(P1, P2, D1, D2, wo):
        return (P1.T * w_curve) @ P2 - (D1.T * wo) @ D2

    S00 = pair_sum(P[0], P[0], Phi[0], Phi[0], w_obs)
    S10 = pair_sum(P[1], P[0], Phi[1], Phi[0], w_obs)
    S20 = pair_sum(P[2], P[0], Phi[2], Phi[0], w_obs)
    S11 = pair_sum(P[1], P[1], Phi[1], Phi[1], w_obs)
    wy2 = w_obs * Y * Y
    R00 = pair_sum(PY[0], PY[0], Phi[0], Phi[0], wy2)
    R10 = pair_sum(PY[1], PY[0], Phi[1], Phi[0], wy2)
    ind = (Phi[0] > 0).astype(float)
    cnt = np.add.reduceat(ind, starts, axis=0)
    n_pairs = np.rint(cnt.T @ cnt - ind.T @ ind)

    iu = np.triu_indices(grid.size)
    up = lambda M: M[iu]  # noqa: E731
    vals_up = _solve(
        up(S00), up(S10), up(S10.T), up(S20), up(S20.T), up(S11),
        up(R00), up(R10), up(R10.T),
        up(n_pairs),
        lambda idx: (float(pts[iu[0][idx[0]]]), float(pts[iu[1][idx[0]]])),
    )
    values = np.zeros((grid.size, grid.size))
    values[iu] = vals_up
    values.T[iu] = vals_up
    return RawCovarianceEstimate(grid, values, float(h_R), kernel.family)


def estimate_covariance(raw: RawCovarianceEstimate, mean: MeanEstimate) -> CovarianceEstimate:
    """Covariance surface: raw second moment minus the mean product."""
    if not raw.grid.same_as(mean.grid):
        raise GridMismatch("raw covariance and mean were evaluated on different grids")
    values = raw.values - np.outer(mean.values, mean.values)
    return CovarianceEstimate(raw, mean, values)


def estimate_sigma2(dataset, kernel, h_R, h_V, grid: EvaluationGrid) -> ErrorVarianceEstimate:
    """Measurement error variance from the smoothed squares and the surface diagonal."""
    kernel = get_kernel(kernel)
    V = estimate_variance_function(dataset, kernel, h_V, grid).values
    C_diag = surface_at_points(dataset, kernel, h_R, grid.points, grid.points)
    a, b = grid.domain
    iv = float(grid.weights @ V)
    ic = float(grid.weights @ C_diag)
    return ErrorVarianceEstimate((iv - ic) / (b - a), iv, ic)
