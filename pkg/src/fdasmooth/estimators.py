"""scikit-learn style estimators wrapping the functional routines.

``fit`` accepts anything :func:`~fdasmooth.dataset.check_functional_data`
understands: a :class:`FunctionalDataset`, a long-format ``(n_obs, 3)``
array of ``(curve_id, t, y)`` rows, a DataFrame with those columns, or a
``(times, values)`` pair of per-curve sequences.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .dataset import check_functional_data, make_grid
from .fpca import decompose, reconstruct
from .kernels import get_kernel
from .smooth1d import estimate_mean, local_linear_smooth
from .smooth2d import estimate_covariance, estimate_raw_covariance, estimate_sigma2, surface_at_points


def _positive(name, value):
    if value is None or not value > 0:
        raise ValueError(f"{name} must be a positive number, got {value!r}")


class LocalLinearMean(BaseEstimator):
    """Curve-weighted local-linear estimate of the mean function.

    Parameters
    ----------
    bandwidth : float
        Smoothing bandwidth ``h_mu``.
    kernel : str, default="epanechnikov"
        Kernel name.
    n_grid : int, default=101
        Size of the grid on which ``mean_`` is tabulated.

    Attributes
    ----------
    grid_ : EvaluationGrid
    mean_ : MeanEstimate
        The fitted mean on ``grid_``.
    """

    def __init__(self, bandwidth=0.153, kernel="epanechnikov", n_grid=101):
        self.bandwidth = bandwidth
        self.kernel = kernel
        self.n_grid = n_grid

    def fit(self, X, y=None):
        _positive("bandwidth", self.bandwidth)
        self.dataset_ = check_functional_data(X)
        self.grid_ = make_grid(self.dataset_.domain, self.n_grid)
        self.mean_ = estimate_mean(self.dataset_, get_kernel(self.kernel), self.bandwidth, self.grid_)
        return self

    def predict(self, t):
        """Mean estimate at arbitrary times (evaluated exactly, not interpolated)."""
        check_is_fitted(self, "mean_")
        t = np.asarray(t, dtype=float)
        out = local_linear_smooth(self.dataset_, get_kernel(self.kernel), self.bandwidth, t.ravel())
        return out.reshape(t.shape)


class LocalLinearCovariance(BaseEstimator):
    """Local-linear covariance surface and error variance.

    Parameters
    ----------
    bandwidth_mean, bandwidth_cov : float
        ``h_mu`` and ``h_R``.
    bandwidth_var : float, optional
        ``h_V``; the error variance is only estimated when given.
    kernel : str, default="epanechnikov"
    n_grid : int, default=51
        Grid size per axis of the tabulated surface.
    n_grid_sigma2 : int, default=101
        Grid used for the error-variance integrals.

    Attributes
    ----------
    covariance_ : CovarianceEstimate
    sigma2_ : ErrorVarianceEstimate or None
    """

    def __init__(
        self,
        bandwidth_mean=0.153,
        bandwidth_cov=0.116,
        bandwidth_var=None,
        kernel="epanechnikov",
        n_grid=51,
        n_grid_sigma2=101,
    ):
        self.bandwidth_mean = bandwidth_mean
        self.bandwidth_cov = bandwidth_cov
        self.bandwidth_var = bandwidth_var
        self.kernel = kernel
        self.n_grid = n_grid
        self.n_grid_sigma2 = n_grid_sigma2

    def fit(self, X, y=None):
        _positive("bandwidth_mean", self.bandwidth_mean)
        _positive("bandwidth_cov", self.bandwidth_cov)
        kernel = get_kernel(self.kernel)
        self.dataset_ = check_functional_data(X)
        self.grid_ = make_grid(self.dataset_.domain, self.n_grid)
        mean = estimate_mean(self.dataset_, kernel, self.bandwidth_mean, self.grid_)
        raw = estimate_raw_covariance(self.dataset_, kernel, self.bandwidth_cov, self.grid_)
        self.covariance_ = estimate_covariance(raw, mean)
        self.sigma2_ = None
        if self.bandwidth_var is not None:
            _positive("bandwidth_var", self.bandwidth_var)
            g = make_grid(self.dataset_.domain, self.n_grid_sigma2)
            self.sigma2_ = estimate_sigma2(self.dataset_, kernel, self.bandwidth_cov, self.bandwidth_var, g)
        return self

    def predict(self, s, t):
        """Covariance estimate at the paired points ``(s[i], t[i])``."""
        check_is_fitted(self, "covariance_")
        kernel = get_kernel(self.kernel)
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        s, t = np.broadcast_arrays(s, t)
        C = surface_at_points(self.dataset_, kernel, self.bandwidth_cov, s.ravel(), t.ravel())
        ms = local_linear_smooth(self.dataset_, kernel, self.bandwidth_mean, s.ravel())
        mt = local_linear_smooth(self.dataset_, kernel, self.bandwidth_mean, t.ravel())
        return (C - ms * mt).reshape(s.shape)


class FunctionalPCA(BaseEstimator):
    """Functional principal components of the local-linear covariance surface.

    Parameters
    ----------
    n_components : int or None, default=3
        Maximum number of retained components; None keeps every component
        above the truncation threshold.
    bandwidth_mean, bandwidth_cov, bandwidth_var, kernel, n_grid
        Passed to :class:`LocalLinearCovariance`.

    Attributes
    ----------
    eigenvalues_ : ndarray of shape (J,)
    components_ : ndarray of shape (J, n_grid)
        Eigenfunctions sampled on ``grid_``, L2-orthonormal under the grid's
        quadrature weights.
    mean_ : ndarray of shape (n_grid,)
    sigma2_ : float or None
    """

    def __init__(
        self,
        n_components=3,
        bandwidth_mean=0.153,
        bandwidth_cov=0.116,
        bandwidth_var=None,
        kernel="epanechnikov",
        n_grid=51,
    ):
        self.n_components = n_components
        self.bandwidth_mean = bandwidth_mean
        self.bandwidth_cov = bandwidth_cov
        self.bandwidth_var = bandwidth_var
        self.kernel = kernel
        self.n_grid = n_grid

    def fit(self, X, y=None):
        cov = LocalLinearCovariance(
            bandwidth_mean=self.bandwidth_mean,
            bandwidth_cov=self.bandwidth_cov,
            bandwidth_var=self.bandwidth_var,
            kernel=self.kernel,
            n_grid=self.n_grid,
        ).fit(X)
        self.covariance_estimator_ = cov
        self.grid_ = cov.grid_
        self.eigensystem_ = decompose(cov.covariance_, self.n_components)
        self.eigenvalues_ = self.eigensystem_.eigenvalues
        self.components_ = self.eigensystem_.eigenfunctions
        self.mean_ = cov.covariance_.mean.values
        self.sigma2_ = None if cov.sigma2_ is None else cov.sigma2_.sigma2
        return self

    def transform(self, X):
        """Principal component scores of curves tabulated on ``grid_``.

        ``X`` has shape ``(n_curves, n_grid)``; scores are quadrature
        projections of the centred curves on the components.
        """
        check_is_fitted(self, "components_")
        X = check_array(X)
        if X.shape[1] != self.grid_.size:
            raise ValueError(f"expected {self.grid_.size} columns (one per grid point), got {X.shape[1]}")
        return ((X - self.mean_) * self.grid_.weights) @ self.components_.T

    def inverse_transform(self, scores):
        check_is_fitted(self, "components_")
        scores = check_array(scores)
        return self.mean_ + scores @ self.components_[: scores.shape[1]]

    def reconstruct_covariance(self, n_components=None):
        check_is_fitted(self, "eigensystem_")
        return reconstruct(self.eigensystem_, n_components)
