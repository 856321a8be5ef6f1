"""Reproducible generators for Karhunen-Loeve processes and Brownian motion.

Randomness comes from the counter-based Philox generator. A dataset-level key
is derived from ``(seed, purpose)`` and curve ``i`` reads from counter block
``i`` under that key, so each curve's draws depend only on the seed and its
index. Normal variates are produced by inverting the normal CDF on uniform
draws, which keeps the number of consumed draws fixed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import ndtri

from .dataset import EvaluationGrid, FunctionalDataset, make_grid
from .fpca import EigenSystem

# purpose tags mixed into the stream key
_TIMES = 1
_SCORES = 2


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed for the sub-task identified by ``keys`` (e.g. ``(n, replicate)``)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def _stream_key(seed: int, purpose: int) -> np.ndarray:
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(purpose,)).generate_state(2, np.uint64)


def curve_stream(key: np.ndarray, curve: int) -> np.random.Generator:
    """Generator for one curve: counter block ``curve`` of the Philox stream ``key``."""
    counter = np.array([0, 0, curve, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


@dataclass(frozen=True)
class KLModelSpec:
    """Finite Karhunen-Loeve model ``X(t) = mu(t) + sum_k xi_k psi_k(t)``.

    ``xi_k ~ N(0, omega_k)`` independently and responses carry additive
    ``N(0, sigma2)`` noise.
    """

    mean_fn: Callable
    components: Tuple[Tuple[float, Callable], ...]
    sigma2: float
    domain: Tuple[float, float] = (0.0, 1.0)
    name: str = "custom"

    def __post_init__(self):
        omegas = [c[0] for c in self.components]
        if any(o <= 0 for o in omegas):
            raise ValueError("component variances must be positive")
        if any(a < b for a, b in zip(omegas, omegas[1:])):
            raise ValueError("component variances must be nonincreasing")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        g = make_grid(self.domain, 1001)
        Psi = np.array([psi(g.points) * np.ones_like(g.points) for _, psi in self.components])
        gram = (Psi * g.weights) @ Psi.T
        if np.max(np.abs(gram - np.eye(len(omegas)))) > 1e-3:
            raise ValueError("component functions are not orthonormal in L2")

    @property
    def omegas(self) -> np.ndarray:
        return np.array([c[0] for c in self.components])

    def psi(self, t) -> np.ndarray:
        """Component functions at ``t``, shape ``(K, len(t))``."""
        t = np.asarray(t, dtype=float)
        return np.array([psi(t) * np.ones_like(t) for _, psi in self.components])

    def mean(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.mean_fn(t) * np.ones_like(t)

    def covariance(self, s, t) -> np.ndarray:
        return (self.psi(s).T * self.omegas) @ self.psi(t)


@dataclass(frozen=True)
class BrownianModel:
    """Standard Brownian motion on [0, 1] observed with ``N(0, sigma2)`` noise."""

    sigma2: float = 0.01
    domain: Tuple[float, float] = field(default=(0.0, 1.0), init=False)
    name: str = field(default="brownian", init=False)

    def mean(self, t) -> np.ndarray:
        return np.zeros_like(np.asarray(t, dtype=float))

    def covariance(self, s, t) -> np.ndarray:
        return np.minimum.outer(np.asarray(s, dtype=float), np.asarray(t, dtype=float))


def _sim1_mean(t):
    return 5.0 * (t - 0.6) ** 2


def _const_one(t):
    return np.ones_like(np.asarray(t, dtype=float))


def _sqrt2_sin_2pi(t):
    return math.sqrt(2.0) * np.sin(2.0 * np.pi * t)


def _sqrt2_cos_2pi(t):
    return math.sqrt(2.0) * np.cos(2.0 * np.pi * t)


def simulation1_spec(sigma2: float = 0.2) -> KLModelSpec:
    """Three-component model on [0, 1] with quadratic mean."""
    return KLModelSpec(
        mean_fn=_sim1_mean,
        components=((0.6, _const_one), (0.3, _sqrt2_sin_2pi), (0.1, _sqrt2_cos_2pi)),
        sigma2=sigma2,
        domain=(0.0, 1.0),
        name="sim1",
    )


def brownian_spec(sigma2: float = 0.01) -> BrownianModel:
    return BrownianModel(sigma2=sigma2)


MODELS = {"sim1": simulation1_spec, "brownian": brownian_spec}


def model_from_json(obj) -> Union[KLModelSpec, BrownianModel]:
    """Model from ``{"model": key, "sigma2": ...}`` (a dict, a JSON string or a path)."""
    if isinstance(obj, (str, Path)) and Path(obj).exists():
        obj = json.loads(Path(obj).read_text(encoding="utf-8"))
    elif isinstance(obj, str):
        obj = json.loads(obj)
    key = obj["model"]
    if key not in MODELS:
        raise ValueError(f"unknown model {key!r}; choose from {sorted(MODELS)}")
    kwargs = {"sigma2": float(obj["sigma2"])} if "sigma2" in obj else {}
    return MODELS[key](**kwargs)


def model_to_json(model) -> dict:
    if model.name not in MODELS:
        raise ValueError("only registry models can be serialized")
    return {"model": model.name, "sigma2": model.sigma2}


@dataclass(frozen=True)
class RandomM:
    """Per-curve observation count drawn uniformly from ``{low, ..., high}``."""

    low: int
    high: int

    def __post_init__(self):
        if not 1 <= self.low <= self.high:
            raise ValueError("need 1 <= low <= high")


@dataclass(frozen=True)
class DesignSpec:
    """Sampling design: ``n`` curves, ``m`` observations each, uniform times.

    ``m`` is an int (same for every curve), a sequence of length ``n``, or a
    :class:`RandomM`.
    """

    n: int
    m: Union[int, Sequence[int], RandomM] = 5

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if isinstance(self.m, RandomM):
            return
        if np.ndim(self.m) == 0:
            if int(self.m) < 1:
                raise ValueError("m must be positive")
        else:
            object.__setattr__(self, "m", tuple(int(v) for v in self.m))
            if len(self.m) != self.n or min(self.m) < 1:
                raise ValueError("per-curve m needs n positive entries")

    def m_for(self, i: int, rng: np.random.Generator) -> int:
        if isinstance(self.m, RandomM):
            return int(self.m.low + rng.integers(0, self.m.high - self.m.low + 1))
        if np.ndim(self.m) == 0:
            return int(self.m)
        return self.m[i]


def _raw_blocks(key, design: DesignSpec, per_obs: int):
    """One draw per curve: ``per_obs * m_i`` uniforms, laid out block by block.

    Returns the per-curve counts and a list of ``(per_obs, m_i)`` arrays.
    """
    ms, blocks = [], []
    for i in range(design.n):
        rng = curve_stream(key, i)
        m = design.m_for(i, rng)
        ms.append(m)
        blocks.append(rng.integers(0, 1 << 53, size=(per_obs, m), dtype=np.int64))
    return np.array(ms), blocks


def _to_uniform(raw):
    return (raw + 0.5) * 2.0 ** -53


def draw_scores(model: KLModelSpec, n: int, seed: int) -> np.ndarray:
    """Principal component scores, shape ``(n, K)``; row ``i`` uses curve stream ``i``."""
    key = _stream_key(seed, _SCORES)
    K = len(model.components)
    raw = np.array([curve_stream(key, i).integers(0, 1 << 53, size=K, dtype=np.int64) for i in range(n)])
    return ndtri(_to_uniform(raw.reshape(n, K))) * np.sqrt(model.omegas)


def _dataset(ms, times, values, domain):
    offsets = np.concatenate([[0], np.cumsum(ms)])
    ids = tuple(f"c{i}" for i in range(len(ms)))
    return FunctionalDataset(ids=ids, t=times, y=values, offsets=offsets, domain=domain)


def generate_kl(model: KLModelSpec, design: DesignSpec, seed: int, score_seed: Optional[int] = None) -> FunctionalDataset:
    """Sample a dataset from a finite Karhunen-Loeve model.

    Scores come from ``score_seed`` (``seed`` when omitted); observation
    times and noise always come from ``seed``. Passing the same
    ``score_seed`` with different designs observes the same latent curves.
    """
    a, b = model.domain
    scores = draw_scores(model, design.n, seed if score_seed is None else score_seed)
    ms, blocks = _raw_blocks(_stream_key(seed, _TIMES), design, 2)
    u = _to_uniform(np.concatenate(blocks, axis=1))
    t = a + (b - a) * u[0]
    noise = ndtri(u[1])
    owner = np.repeat(np.arange(design.n), ms)
    x = model.mean(t) + np.einsum("ik,ki->i", scores[owner], model.psi(t))
    return _dataset(ms, t, x + math.sqrt(model.sigma2) * noise, model.domain)


def _brownian_paths(t, z, ms):
    """Exact Brownian motion at unsorted times ``t`` from standard normals ``z``.

    Times are sorted within each curve, paths accumulate independent
    ``N(0, dt)`` increments, and values are returned in the original order.
    """
    if len(ms) and np.all(ms == ms[0]):
        T = t.reshape(len(ms), ms[0])
        order = np.argsort(T, axis=1, kind="stable")
        ts = np.take_along_axis(T, order, axis=1)
        steps = np.diff(ts, axis=1, prepend=0.0)
        path = np.cumsum(np.sqrt(steps) * z.reshape(T.shape), axis=1)
        x = np.empty_like(T)
        np.put_along_axis(x, order, path, axis=1)
        return x.ravel()
    x = np.empty_like(t)
    starts = np.concatenate([[0], np.cumsum(ms)])
    for lo, hi in zip(starts[:-1], starts[1:]):
        order = np.argsort(t[lo:hi], kind="stable")
        ts = t[lo:hi][order]
        steps = np.diff(ts, prepend=0.0)
        x[lo + order] = np.cumsum(np.sqrt(steps) * z[lo:hi])
    return x


def generate_brownian(design: DesignSpec, sigma2: float, seed: int) -> FunctionalDataset:
    """Sample noisy standard Brownian motion at uniform random times on [0, 1]."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    ms, blocks = _raw_blocks(_stream_key(seed, _TIMES), design, 3)
    u = _to_uniform(np.concatenate(blocks, axis=1))
    t = u[0]
    x = _brownian_paths(t, ndtri(u[1]), ms)
    return _dataset(ms, t, x + math.sqrt(sigma2) * ndtri(u[2]), (0.0, 1.0))


def generate(model, design: DesignSpec, seed: int, score_seed: Optional[int] = None) -> FunctionalDataset:
    """Dispatch to the generator matching ``model``."""
    if isinstance(model, BrownianModel):
        return generate_brownian(design, model.sigma2, seed)
    return generate_kl(model, design, seed, score_seed=score_seed)


def generate_dense(model, n: int, points, seed: int) -> np.ndarray:
    """Noise-free curves evaluated at fixed ``points``, shape ``(n, len(points))``.

    For Karhunen-Loeve models the scores match :func:`generate_kl` called with
    ``score_seed=seed``.
    """
    points = np.asarray(points, dtype=float)
    if isinstance(model, BrownianModel):
        ms, blocks = _raw_blocks(_stream_key(seed, _SCORES), DesignSpec(n, len(points)), 1)
        z = ndtri(_to_uniform(np.concatenate(blocks, axis=1)[0]))
        return _brownian_paths(np.tile(points, n), z, ms).reshape(n, len(points))
    scores = draw_scores(model, n, seed)
    return model.mean(points)[None, :] + scores @ model.psi(points)


def true_eigensystem(model, grid: EvaluationGrid, n_components: int = 3) -> EigenSystem:
    """Analytic eigenvalues and grid-sampled eigenfunctions of ``model``."""
    if n_components < 1:
        raise ValueError("n_components must be positive")
    t = grid.points
    if isinstance(model, BrownianModel):
        k = np.arange(1, n_components + 1)
        omegas = 4.0 / ((2 * k - 1) ** 2 * np.pi ** 2)
        psi = math.sqrt(2.0) * np.sin(np.outer(k - 0.5, np.pi * t))
        return EigenSystem(grid, omegas, psi)
    J = min(n_components, len(model.components))
    return EigenSystem(grid, model.omegas[:J], model.psi(t)[:J])
