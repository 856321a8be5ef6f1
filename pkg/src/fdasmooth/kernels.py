"""Compactly supported smoothing kernels on [-1, 1]."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import NonpositiveBandwidth


def _epanechnikov(u):
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def _triangular(u):
    return np.where(np.abs(u) <= 1.0, 1.0 - np.abs(u), 0.0)


def _uniform(u):
    return np.where(np.abs(u) <= 1.0, 0.5, 0.0)


@dataclass(frozen=True)
class KernelSpec:
    """A symmetric probability density supported on [-1, 1].

    Attributes
    ----------
    family : str
        One of ``"epanechnikov"``, ``"triangular"``, ``"uniform"``.
    nu2 : float
        Second moment of the kernel.
    """

    family: str
    nu2: float
    _fn: Callable = field(default=None, repr=False, compare=False)

    def __call__(self, u):
        return evaluate(self, u)


EPANECHNIKOV = KernelSpec("epanechnikov", 0.2, _epanechnikov)
TRIANGULAR = KernelSpec("triangular", 1.0 / 6.0, _triangular)
UNIFORM = KernelSpec("uniform", 1.0 / 3.0, _uniform)

KERNELS = {k.family: k for k in (EPANECHNIKOV, TRIANGULAR, UNIFORM)}


def get_kernel(kernel="epanechnikov") -> KernelSpec:
    """Look up a kernel by name; a :class:`KernelSpec` is passed through."""
    if isinstance(kernel, KernelSpec):
        return kernel
    try:
        return KERNELS[str(kernel).lower()]
    except KeyError:
        raise ValueError(f"unknown kernel {kernel!r}; choose from {sorted(KERNELS)}") from None


def evaluate(kernel: KernelSpec, u):
    """``K(u)``, zero outside [-1, 1]. Scalars in, scalars out."""
    out = kernel._fn(np.asarray(u, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def scaled(kernel: KernelSpec, h: float, v):
    """``K_h(v) = K(v / h) / h``."""
    if not h > 0:
        raise NonpositiveBandwidth(f"bandwidth must be positive, got {h}")
    out = kernel._fn(np.asarray(v, dtype=float) / h) / h
    return float(out) if np.ndim(out) == 0 else out
