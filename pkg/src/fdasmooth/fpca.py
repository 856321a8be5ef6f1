"""Spectral decomposition of an estimated covariance surface.

The integral operator with kernel ``R(s, t)`` is discretized with the grid's
trapezoid weights ``W``; the symmetric matrix ``W^1/2 R W^1/2`` shares its
eigenvalues with the discretized operator and its eigenvectors map back to
L2-orthonormal eigenfunction samples through ``W^-1/2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np

from .dataset import EvaluationGrid
from .exceptions import AsymmetricInput, GridMismatch, LengthMismatch, NoPositiveEigenvalues, TooManyComponents

SYMMETRY_TOL = 1e-8
RELATIVE_CUTOFF = 1e-10


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Eigenvalues (nonincreasing) and grid-sampled eigenfunctions, one per row."""

    grid: EvaluationGrid
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray

    @property
    def n_components(self) -> int:
        return len(self.eigenvalues)


class ComponentError(NamedTuple):
    component: int
    eigenvalue_error: float
    l2_error: float
    sup_error: float


def _orient(psi):
    # deterministic representative: the largest-magnitude sample is positive
    i = int(np.argmax(np.abs(psi)))
    return -psi if psi[i] < 0 else psi


def decompose(cov, n_components: Optional[int] = None, grid: Optional[EvaluationGrid] = None) -> EigenSystem:
    """Eigen-decompose a covariance surface sampled on a grid.

    Parameters
    ----------
    cov : CovarianceEstimate or ndarray of shape (G, G)
        The surface. A bare matrix needs ``grid``.
    n_components : int, optional
        Upper bound on the number of retained components. All components
        above the truncation threshold are kept when omitted.
    grid : EvaluationGrid, optional
        Grid of a bare matrix; ignored for a :class:`CovarianceEstimate`.

    Returns
    -------
    EigenSystem
        Only eigenvalues greater than ``1e-10`` times the largest one are
        kept; negative eigenvalues are always dropped.
    """
    if hasattr(cov, "values") and hasattr(cov, "grid"):
        grid, R = cov.grid, np.asarray(cov.values, dtype=float)
    else:
        if grid is None:
            raise ValueError("a bare covariance matrix needs its grid")
        R = np.asarray(cov, dtype=float)
    if R.shape != (grid.size, grid.size):
        raise GridMismatch(f"matrix shape {R.shape} does not match grid of size {grid.size}")
    if not np.all(np.isfinite(R)):
        raise ValueError("covariance surface has non-finite entries")
    asym = np.max(np.abs(R - R.T))
    if asym > SYMMETRY_TOL:
        raise AsymmetricInput(f"covariance surface is not symmetric (max |R - R^T| = {asym:.3g})")
    if n_components is not None and n_components < 1:
        raise ValueError("n_components must be a positive integer")

    sw = np.sqrt(grid.weights)
    M = sw[:, None] * R * sw[None, :]
    M = 0.5 * (M + M.T)
    vals, vecs = np.linalg.eigh(M)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    if not vals[0] > 0:
        raise NoPositiveEigenvalues("the covariance surface has no positive eigenvalues")
    keep = vals > RELATIVE_CUTOFF * vals[0]
    J = int(np.count_nonzero(keep))
    if n_components is not None:
        J = min(J, int(n_components))
    psi = (vecs[:, :J] / sw[:, None]).T
    psi = np.array([_orient(p) for p in psi]).reshape(J, grid.size)
    return EigenSystem(grid, vals[:J].copy(), psi)


def align_sign(estimated, reference, weights) -> np.ndarray:
    """Flip ``estimated`` when that brings it closer to ``reference`` in weighted L2.

    Ties keep the original sign.
    """
    e = np.asarray(estimated, dtype=float)
    r = np.asarray(reference, dtype=float)
    w = np.asarray(weights, dtype=float)
    if not (e.shape == r.shape == w.shape):
        raise LengthMismatch(f"shapes differ: {e.shape}, {r.shape}, {w.shape}")
    d_plus = w @ (e - r) ** 2
    d_minus = w @ (e + r) ** 2
    return -e if d_minus < d_plus else e


def reconstruct(eig: EigenSystem, n_components: Optional[int] = None) -> np.ndarray:
    """Rank-``n_components`` surface ``sum_j w_j psi_j(s) psi_j(t)`` on the grid."""
    J = eig.n_components if n_components is None else int(n_components)
    if J > eig.n_components:
        raise TooManyComponents(f"asked for {J} components, only {eig.n_components} retained")
    if J < 1:
        raise ValueError("n_components must be a positive integer")
    psi = eig.eigenfunctions[:J]
    out = (psi.T * eig.eigenvalues[:J]) @ psi
    return 0.5 * (out + out.T)


def eigen_errors(eig: EigenSystem, truth: EigenSystem, n_components: int = 3) -> List[ComponentError]:
    """Per-component eigenvalue, L2 and sup-norm eigenfunction errors.

    Eigenfunctions are sign-aligned to the truth before measuring.
    """
    if not eig.grid.same_as(truth.grid):
        raise GridMismatch("estimated and true eigen-systems live on different grids")
    J = min(n_components, eig.n_components, truth.n_components)
    w = eig.grid.weights
    out = []
    for j in range(J):
        ref = truth.eigenfunctions[j]
        est = align_sign(eig.eigenfunctions[j], ref, w)
        diff = est - ref
        out.append(
            ComponentError(
                j + 1,
                float(abs(eig.eigenvalues[j] - truth.eigenvalues[j])),
                float(np.sqrt(w @ diff ** 2)),
                float(np.max(np.abs(diff))),
            )
        )
    return out
