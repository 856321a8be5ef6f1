"""Brute-force reference implementations used as test oracles.

Each estimator is recomputed by assembling the weighted design matrix
explicitly and solving the normal equations with a dense solver, with no
shared code beyond the kernel function itself.
"""

import numpy as np

from fdasmooth.kernels import get_kernel


def local_linear_oracle(times, values, t, h, kernel="epanechnikov"):
    """Intercept of the weighted line fit at ``t`` with weights ``K_h(T - t) / m_i``."""
    K = get_kernel(kernel)
    rows, w, z = [], [], []
    for ti, yi in zip(times, values):
        ti, yi = np.asarray(ti, float), np.asarray(yi, float)
        for tij, yij in zip(ti, yi):
            rows.append([1.0, tij - t])
            w.append(K(np.array((tij - t) / h)) / h / len(ti))
            z.append(yij)
    X, w, z = np.array(rows), np.array(w), np.array(z)
    beta = np.linalg.solve(X.T @ (w[:, None] * X), X.T @ (w * z))
    return beta[0]


def surface_oracle(times, values, s, t, h, kernel="epanechnikov"):
    """Intercept of the weighted plane fit at ``(s, t)`` over within-curve ordered pairs."""
    K = get_kernel(kernel)
    rows, w, z = [], [], []
    for ti, yi in zip(times, values):
        ti, yi = np.asarray(ti, float), np.asarray(yi, float)
        m = len(ti)
        if m < 2:
            continue
        for j in range(m):
            for k in range(m):
                if j == k:
                    continue
                rows.append([1.0, ti[j] - s, ti[k] - t])
                w.append(K(np.array((ti[j] - s) / h)) * K(np.array((ti[k] - t) / h)) / h**2 / (m * (m - 1)))
                z.append(yi[j] * yi[k])
    X, w, z = np.array(rows), np.array(w), np.array(z)
    beta = np.linalg.solve(X.T @ (w[:, None] * X), X.T @ (w * z))
    return beta[0]


def random_design(rng, n_max=10, m_max=6, m_min=1):
    n = int(rng.integers(2, n_max + 1))
    ms = rng.integers(m_min, m_max + 1, size=n)
    times = [rng.uniform(0, 1, size=m) for m in ms]
    return times
