"""Monte Carlo reproduction of the two simulation studies.

Study ``sim1`` uses the three-component model with quadratic mean and
compares designs ``m = 5, 10, 50`` and fully observed curves (``inf``);
within a replicate every arm observes the same latent curves. Study ``sim2``
uses noisy Brownian motion with ``m = 5, 10, 50``. Each replicate records the
mean estimate, sign-aligned eigenfunctions, eigenvalues, the error variance
and per-component L2 eigenfunction errors; :func:`write_outputs` turns those
into band, box-plot and per-replicate CSV files plus a JSON manifest.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from ._parallel import run_tasks
from .dataset import make_grid
from .exceptions import FDAError
from .fpca import align_sign, decompose, eigen_errors
from .kernels import get_kernel
from .simgen import DesignSpec, brownian_spec, derive_seed, generate, generate_dense, simulation1_spec, true_eigensystem
from .smooth1d import estimate_mean
from .smooth2d import estimate_covariance, estimate_raw_covariance, estimate_sigma2

# (h_mu, h_R, h_V) per observations-per-curve
STUDY_BANDWIDTHS = {
    5: (0.153, 0.116, 0.138),
    10: (0.138, 0.103, 0.107),
    50: (0.107, 0.077, 0.084),
}
M1_BANDWIDTH = 0.153
INF = math.inf
N_COMPONENTS = 3


def arm_label(m) -> str:
    return "inf" if m == INF else str(int(m))


@dataclass
class ArmResult:
    """Per-replicate outputs for one design arm; failed replicates hold NaN."""

    m: float
    mean: np.ndarray
    eigenfunctions: Optional[np.ndarray]
    eigenvalues: Optional[np.ndarray]
    sigma2: Optional[np.ndarray]
    l2_errors: Optional[np.ndarray]
    failures: int = 0

    @property
    def label(self) -> str:
        return arm_label(self.m)

    def mean_band(self):
        return _band(self.mean)

    def eigenfunction_band(self, j: int):
        return _band(self.eigenfunctions[:, j])


def _band(samples):
    ok = samples[~np.isnan(samples).any(axis=1)]
    p01, p99 = np.percentile(ok, [1, 99], axis=0)
    return ok.mean(axis=0), p01, p99


@dataclass
class StudyResult:
    study: str
    n: int
    replicates: int
    seed: int
    grid: np.ndarray
    surface_grid: np.ndarray
    truth_mean: np.ndarray
    truth_eigenvalues: np.ndarray
    truth_eigenfunctions: np.ndarray
    arms: Dict[str, ArmResult] = field(default_factory=dict)
    bandwidths: Dict[str, list] = field(default_factory=dict)


def _nan(shape):
    return np.full(shape, np.nan)


def _replicate(study, arms, n, seed, r, kernel, grid_size, surface_grid_size):
    model = simulation1_spec() if study == "sim1" else brownian_spec()
    kernel = get_kernel(kernel)
    grid = make_grid(model.domain, grid_size)
    sgrid = make_grid(model.domain, surface_grid_size)
    truth = true_eigensystem(model, sgrid, N_COMPONENTS)
    score_seed = derive_seed(seed, r, 0)
    out = {}
    for m in arms:
        rec = {
            "mean": _nan(grid.size),
            "psi": _nan((N_COMPONENTS, sgrid.size)),
            "omega": _nan(N_COMPONENTS),
            "sigma2": math.nan,
            "l2": _nan(N_COMPONENTS),
            "failed": False,
        }
        try:
            if m == INF:
                X = generate_dense(model, n, grid.points, score_seed)
                rec["mean"] = X.mean(axis=0)
                Xs = generate_dense(model, n, sgrid.points, score_seed)
                Xc = Xs - Xs.mean(axis=0)
                R = Xc.T @ Xc / n
                eig = decompose(0.5 * (R + R.T), N_COMPONENTS, grid=sgrid)
            elif m == 1:
                data = generate(model, DesignSpec(n, 1), derive_seed(seed, r, 1), score_seed=score_seed)
                rec["mean"] = estimate_mean(data, kernel, M1_BANDWIDTH, grid).values
                eig = None
            else:
                h_mu, h_R, h_V = STUDY_BANDWIDTHS[int(m)]
                data = generate(model, DesignSpec(n, int(m)), derive_seed(seed, r, int(m)), score_seed=score_seed)
                rec["mean"] = estimate_mean(data, kernel, h_mu, grid).values
                cov = estimate_covariance(
                    estimate_raw_covariance(data, kernel, h_R, sgrid),
                    estimate_mean(data, kernel, h_mu, sgrid),
                )
                eig = decompose(cov, N_COMPONENTS)
                rec["sigma2"] = estimate_sigma2(data, kernel, h_R, h_V, grid).sigma2
            if eig is not None:
                J = eig.n_components
                rec["omega"][:J] = eig.eigenvalues
                for j in range(J):
                    rec["psi"][j] = align_sign(eig.eigenfunctions[j], truth.eigenfunctions[j], sgrid.weights)
                for e in eigen_errors(eig, truth, N_COMPONENTS):
                    rec["l2"][e.component - 1] = e.l2_error
        except FDAError:
            rec["failed"] = True
        out[m] = rec
    return out


def run_study(
    study: str = "sim1",
    replicates: int = 50,
    seed: int = 2010,
    n: int = 200,
    arms: Optional[Sequence[float]] = None,
    workers: Optional[int] = None,
    kernel: str = "epanechnikov",
    grid_size: int = 101,
    surface_grid_size: int = 51,
) -> StudyResult:
    """Run ``replicates`` Monte Carlo replicates of ``study`` (``"sim1"`` or ``"sim2"``).

    ``arms`` defaults to ``(5, 10, 50, inf)`` for sim1 and ``(5, 10, 50)``
    for sim2. An arm ``1`` (sim1 only) estimates the mean alone.
    """
    if study not in ("sim1", "sim2"):
        raise ValueError("study must be 'sim1' or 'sim2'")
    if replicates < 1:
        raise ValueError("replicates must be positive")
    if arms is None:
        arms = (5, 10, 50, INF) if study == "sim1" else (5, 10, 50)
    arms = tuple(INF if (isinstance(a, str) and a == "inf") or a == INF else int(a) for a in arms)
    for a in arms:
        if a not in STUDY_BANDWIDTHS and a != INF and not (a == 1 and study == "sim1"):
            raise ValueError(f"arm m={a} has no bandwidths; choose from 5, 10, 50, inf (sim1) or 1 (sim1)")
        if a == INF and study != "sim1":
            raise ValueError("the fully observed arm is only defined for sim1")
    model = simulation1_spec() if study == "sim1" else brownian_spec()
    grid = make_grid(model.domain, grid_size)
    sgrid = make_grid(model.domain, surface_grid_size)
    truth = true_eigensystem(model, sgrid, N_COMPONENTS)

    tasks = [(study, arms, n, seed, r, kernel, grid_size, surface_grid_size) for r in range(replicates)]
    reps = run_tasks(_replicate, tasks, workers)

    result = StudyResult(
        study=study,
        n=n,
        replicates=replicates,
        seed=seed,
        grid=grid.points.copy(),
        surface_grid=sgrid.points.copy(),
        truth_mean=model.mean(grid.points),
        truth_eigenvalues=truth.eigenvalues.copy(),
        truth_eigenfunctions=truth.eigenfunctions.copy(),
    )
    for m in arms:
        recs = [rep[m] for rep in reps]
        has_cov = m != 1
        result.arms[arm_label(m)] = ArmResult(
            m=m,
            mean=np.array([rec["mean"] for rec in recs]),
            eigenfunctions=np.array([rec["psi"] for rec in recs]) if has_cov else None,
            eigenvalues=np.array([rec["omega"] for rec in recs]) if has_cov else None,
            sigma2=np.array([rec["sigma2"] for rec in recs]) if has_cov else None,
            l2_errors=np.array([rec["l2"] for rec in recs]) if has_cov else None,
            failures=sum(rec["failed"] for rec in recs),
        )
        if m == INF:
            result.bandwidths[arm_label(m)] = None
        elif m == 1:
            result.bandwidths[arm_label(m)] = [M1_BANDWIDTH, None, None]
        else:
            result.bandwidths[arm_label(m)] = list(STUDY_BANDWIDTHS[m])
    return result


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _f(x) -> str:
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def _box(values):
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if len(v) == 0:
        return [math.nan] * 6
    q = np.percentile(v, [0, 25, 50, 75, 100])
    return [*q, v.mean()]


def write_outputs(result: StudyResult, outdir) -> Dict[str, str]:
    """Write the plot-ready CSV files and a manifest; returns ``{role: filename}``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = {}

    rows = [("arm", "t", "truth", "mean", "p01", "p99")]
    for label, arm in result.arms.items():
        mean, lo, hi = arm.mean_band()
        for k, t in enumerate(result.grid):
            rows.append((label, _f(t), _f(result.truth_mean[k]), _f(mean[k]), _f(lo[k]), _f(hi[k])))
    if result.study == "sim1":
        files["mean_band"] = "mean_band.csv"
        (outdir / files["mean_band"]).write_text(_csv(rows), encoding="utf-8")

    rows = [("arm", "component", "t", "truth", "mean", "p01", "p99")]
    for label, arm in result.arms.items():
        if arm.eigenfunctions is None:
            continue
        for j in range(N_COMPONENTS):
            mean, lo, hi = arm.eigenfunction_band(j)
            for k, t in enumerate(result.surface_grid):
                truth = result.truth_eigenfunctions[j, k]
                rows.append((label, j + 1, _f(t), _f(truth), _f(mean[k]), _f(lo[k]), _f(hi[k])))
    files["eigenfunction_band"] = "eigenfunction_band.csv"
    (outdir / files["eigenfunction_band"]).write_text(_csv(rows), encoding="utf-8")

    rows = [("arm", "quantity", "truth", "min", "q1", "median", "q3", "max", "mean")]
    for label, arm in result.arms.items():
        if arm.eigenvalues is None:
            continue
        for j in range(N_COMPONENTS):
            truth = result.truth_eigenvalues[j]
            rows.append((label, f"omega_{j + 1}", _f(truth), *map(_f, _box(arm.eigenvalues[:, j]))))
        sigma2 = 0.2 if result.study == "sim1" else 0.01
        if arm.m == INF:
            sigma2 = 0.0
        rows.append((label, "sigma2", _f(sigma2), *map(_f, _box(arm.sigma2))))
    files["box_summary"] = "box_summary.csv"
    (outdir / files["box_summary"]).write_text(_csv(rows), encoding="utf-8")

    header = ["arm", "replicate", "omega_1", "omega_2", "omega_3", "sigma2", "l2_error_1", "l2_error_2", "l2_error_3"]
    rows = [header]
    for label, arm in result.arms.items():
        if arm.eigenvalues is None:
            continue
        for r in range(result.replicates):
            rows.append(
                (label, r, *map(_f, arm.eigenvalues[r]), _f(arm.sigma2[r]), *map(_f, arm.l2_errors[r]))
            )
    files["replicates"] = "replicates.csv"
    (outdir / files["replicates"]).write_text(_csv(rows), encoding="utf-8")

    manifest = {
        "study": result.study,
        "n": result.n,
        "replicates": result.replicates,
        "seed": result.seed,
        "arms": list(result.arms),
        "bandwidths": result.bandwidths,
        "failures": {label: arm.failures for label, arm in result.arms.items()},
        "true_eigenvalues": [float(v) for v in result.truth_eigenvalues],
        "files": files,
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n", encoding="utf-8")
    return files
