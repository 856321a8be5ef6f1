"""Curve-weighted local-linear smoothing in one dimension.

Each observation of curve ``i`` carries weight ``1 / (n m_i)`` so that every
curve contributes the same total mass regardless of how densely it was
sampled. The same smoother gives the mean function (responses ``Y``) and the
variance function ``V(t) = C(t, t) + sigma^2`` (responses ``Y**2``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import EvaluationGrid, FunctionalDataset
from .exceptions import DegenerateWindow, NonpositiveBandwidth
from .kernels import KernelSpec, get_kernel

DET_RTOL = 1e-12
TRANSFORMS = ("identity", "square")


@dataclass(frozen=True, eq=False)
class MeanEstimate:
    grid: EvaluationGrid
    values: np.ndarray
    bandwidth: float
    kernel: str = "epanechnikov"


@dataclass(frozen=True, eq=False)
class VarianceFunctionEstimate:
    grid: EvaluationGrid
    values: np.ndarray
    bandwidth: float
    kernel: str = "epanechnikov"


def observation_weights(dataset: FunctionalDataset) -> np.ndarray:
    """Per-observation weight ``1 / (n m_i)``."""
    m = dataset.m.astype(float)
    return np.repeat(1.0 / (dataset.n_curves * m), dataset.m)


def _responses(dataset, transform):
    if transform == "identity":
        return dataset.y
    if transform == "square":
        return dataset.y ** 2
    raise ValueError(f"transform must be one of {TRANSFORMS}, got {transform!r}")


def _check_bandwidth(h):
    if not h > 0:
        raise NonpositiveBandwidth(f"bandwidth must be positive, got {h}")


def _solve(S0, S1, S2, R0, R1, in_window, points):
    det = S0 * S2 - S1 * S1
    tol = DET_RTOL * np.maximum(S0 * S2, 1.0)
    bad = (in_window < 2) | (np.abs(det) < tol)
    if np.any(bad):
        g = int(np.argmax(bad))
        where = float(points[g])
        raise DegenerateWindow(
            f"local-linear window at t={where:.6g} is degenerate "
            f"({int(in_window[g])} observations in window, S0*S2-S1^2={det[g]:.3g})",
            location=where,
        )
    return (R0 * S2 - R1 * S1) / det


def local_linear_fit(
    dataset: FunctionalDataset,
    kernel: KernelSpec,
    h: float,
    t: float,
    transform: str = "identity",
) -> float:
    """Intercept of the curve-weighted local-linear fit at a single point ``t``."""
    _check_bandwidth(h)
    kernel = get_kernel(kernel)
    y = _responses(dataset, transform)
    u = (dataset.t - t) / h
    kw = kernel._fn(u) / h * observation_weights(dataset)
    S = [np.sum(kw), np.sum(kw * u), np.sum(kw * u * u)]
    R = [np.sum(kw * y), np.sum(kw * u * y)]
    in_window = np.count_nonzero(kw > 0)
    out = _solve(*(np.atleast_1d(v) for v in (*S, *R, in_window)), np.atleast_1d(t))
    return float(out[0])


def local_linear_smooth(
    dataset: FunctionalDataset,
    kernel: KernelSpec,
    h: float,
    points,
    transform: str = "identity",
) -> np.ndarray:
    """Vectorized :func:`local_linear_fit` over an array of evaluation points."""
    _check_bandwidth(h)
    kernel = get_kernel(kernel)
    points = np.asarray(points, dtype=float)
    y = _responses(dataset, transform)
    w = observation_weights(dataset)
    U = (dataset.t[:, None] - points[None, :]) / h
    KW = kernel._fn(U) / h * w[:, None]
    KWU = KW * U
    S0 = KW.sum(axis=0)
    S1 = KWU.sum(axis=0)
    S2 = (KWU * U).sum(axis=0)
    R0 = y @ KW
    R1 = y @ KWU
    in_window = np.count_nonzero(KW > 0, axis=0)
    return _solve(S0, S1, S2, R0, R1, in_window, points)


def estimate_mean(dataset, kernel, h_mu, grid: EvaluationGrid) -> MeanEstimate:
    """Local-linear mean function on ``grid``."""
    kernel = get_kernel(kernel)
    values = local_linear_smooth(dataset, kernel, h_mu, grid.points, "identity")
    return MeanEstimate(grid, values, float(h_mu), kernel.family)


def estimate_variance_function(dataset, kernel, h_V, grid: EvaluationGrid) -> VarianceFunctionEstimate:
    """Local-linear smooth of the squared responses on ``grid``."""
    kernel = get_kernel(kernel)
    values = local_linear_smooth(dataset, kernel, h_V, grid.points, "square")
    return VarianceFunctionEstimate(grid, values, float(h_V), kernel.family)
