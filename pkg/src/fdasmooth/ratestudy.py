"""Uniform-rate formulas and a Monte Carlo harness for convergence slopes.

A :class:`Scenario` fixes a model, a design rule ``n -> m_i``, bandwidth
rules ``h = c (n / n_ref)^(-alpha)`` and an error target. :func:`run_scenario`
averages the target error over replicates at each ``n`` and fits the slope of
``log(error)`` on ``log(n)``, to be compared with
:func:`theoretical_exponent`.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._parallel import run_tasks
from .dataset import FunctionalDataset, harmonic_mean, make_grid
from .exceptions import FDAError, NonpositiveBandwidth, UnknownCombination
from .fpca import decompose, eigen_errors
from .kernels import get_kernel
from .simgen import DesignSpec, MODELS, derive_seed, generate, true_eigensystem
from .smooth1d import estimate_mean
from .smooth2d import estimate_covariance, estimate_raw_covariance, estimate_sigma2

REGIMES = ("sparse", "dense", "mixed")
TARGETS = ("mean_sup", "cov_sup", "sigma2", "eigval", "eigfun_sup", "eigfun_l2")
_TARGET_ALIASES = {
    "MeanSup": "mean_sup",
    "CovSup": "cov_sup",
    "Sigma2": "sigma2",
    "EigvalJ": "eigval",
    "EigfunSupJ": "eigfun_sup",
    "EigfunL2J": "eigfun_l2",
}


@dataclass(frozen=True)
class RateFormulas:
    """Sample size and harmonic means of the per-curve counts."""

    n: int
    gamma1: float
    gamma2: float

    @classmethod
    def from_dataset(cls, dataset: FunctionalDataset) -> "RateFormulas":
        return cls(dataset.n_curves, harmonic_mean(dataset, 1), harmonic_mean(dataset, 2))


def _check(f: RateFormulas, h: float):
    if not h > 0:
        raise NonpositiveBandwidth(f"bandwidth must be positive, got {h}")
    if f.n < 2:
        raise ValueError("rate formulas need n >= 2")


def delta_n1(f: RateFormulas, h: float) -> float:
    """One-dimensional uniform rate ``[{1 + (h g1)^-1} log n / n]^(1/2)``."""
    _check(f, h)
    return math.sqrt((1.0 + 1.0 / (h * f.gamma1)) * math.log(f.n) / f.n)


def delta_n2(f: RateFormulas, h: float) -> float:
    """Two-dimensional uniform rate ``[{1 + (h g1)^-1 + (h^2 g2)^-1} log n / n]^(1/2)``."""
    _check(f, h)
    return math.sqrt((1.0 + 1.0 / (h * f.gamma1) + 1.0 / (h * h * f.gamma2)) * math.log(f.n) / f.n)


@dataclass(frozen=True)
class MRule:
    """Observations per curve: ``max(minimum, ceil(scale * n^exponent))``.

    With ``sparse_fraction > 0`` the leading ``floor(sparse_fraction * n)``
    curves get ``sparse_m`` observations instead (a mixed design).
    """

    scale: float = 5.0
    exponent: float = 0.0
    minimum: int = 2
    sparse_m: int = 2
    sparse_fraction: float = 0.0

    def __call__(self, n: int):
        dense = max(self.minimum, math.ceil(self.scale * n ** self.exponent - 1e-9))
        k = int(math.floor(self.sparse_fraction * n))
        if k == 0:
            return dense
        return tuple([self.sparse_m] * k + [dense] * (n - k))


@dataclass(frozen=True)
class BandwidthRule:
    """``h = c * (n / n_ref)^(-alpha)`` for each of the three bandwidths.

    Each entry is a ``(c, alpha)`` pair.
    """

    h_mu: Tuple[float, float] = (0.153, 0.2)
    h_R: Tuple[float, float] = (0.116, 1.0 / 6.0)
    h_V: Tuple[float, float] = (0.138, 0.2)
    n_ref: float = 200.0

    def __call__(self, n: int) -> Tuple[float, float, float]:
        r = n / self.n_ref
        return tuple(float(c * r ** (-a)) for c, a in (self.h_mu, self.h_R, self.h_V))


@dataclass(frozen=True)
class Scenario:
    name: str
    regime: str
    target: str
    n_list: Tuple[int, ...] = (100, 200, 400, 800, 1600)
    m_rule: MRule = field(default_factory=MRule)
    bandwidths: BandwidthRule = field(default_factory=BandwidthRule)
    replicates: int = 50
    model: str = "sim1"
    sigma2: Optional[float] = None
    component: int = 1
    kernel: str = "epanechnikov"
    grid_size: int = 101
    surface_grid_size: int = 51
    trim_boundary: bool = False

    def __post_init__(self):
        object.__setattr__(self, "target", _TARGET_ALIASES.get(self.target, self.target))
        object.__setattr__(self, "regime", str(self.regime).lower())
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        if self.replicates < 1:
            raise ValueError("replicates must be positive")
        if list(self.n_list) != sorted(set(self.n_list)):
            raise ValueError("n_list must be strictly increasing")
        for n in self.n_list:
            if min(self.bandwidths(n)) <= 0:
                raise NonpositiveBandwidth(f"bandwidth rule gives a nonpositive bandwidth at n={n}")

    def build_model(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        return MODELS[self.model]() if self.sigma2 is None else MODELS[self.model](sigma2=self.sigma2)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        if "m_rule" in d:
            d["m_rule"] = MRule(**d["m_rule"])
        if "bandwidths" in d:
            bw = dict(d["bandwidths"])
            for key in ("h_mu", "h_R", "h_V"):
                if key in bw:
                    bw[key] = tuple(bw[key])
            d["bandwidths"] = BandwidthRule(**bw)
        return cls(**d)


def _rate_exponents(alpha: float, beta: float):
    """Exponents of ``n`` for bias ``h^2``, ``delta_n1(h)`` and ``delta_n2(h)``.

    ``h ~ n^-alpha`` and ``gamma_n1 ~ n^beta`` (so ``gamma_n2 ~ n^2beta``);
    logarithmic factors are ignored.
    """
    bias = -2.0 * alpha
    d1 = max(-0.5, (alpha - beta - 1.0) / 2.0)
    d2 = max(d1, (2.0 * alpha - 2.0 * beta - 1.0) / 2.0)
    return bias, d1, d2


def theoretical_exponent(scenario: Scenario) -> Optional[float]:
    """Predicted slope of ``log(error)`` against ``log(n)``.

    Returns ``None`` for mixed designs, for which no single exponent is
    predicted.
    """
    if scenario.regime not in REGIMES:
        raise UnknownCombination(f"unknown regime {scenario.regime!r}")
    if scenario.target not in TARGETS:
        raise UnknownCombination(f"unknown target {scenario.target!r}")
    if scenario.regime == "mixed":
        return None
    beta = scenario.m_rule.exponent if scenario.regime == "dense" else 0.0
    if scenario.regime == "dense" and beta <= 0:
        raise UnknownCombination("a dense regime needs m growing with n (positive m exponent)")
    bw = scenario.bandwidths
    b_mu, d1_mu, _ = _rate_exponents(bw.h_mu[1], beta)
    b_R, d1_R, d2_R = _rate_exponents(bw.h_R[1], beta)
    b_V, d1_V, _ = _rate_exponents(bw.h_V[1], beta)
    t = scenario.target
    if t == "mean_sup":
        terms = [b_mu, d1_mu]
    elif t == "cov_sup":
        terms = [b_mu, d1_mu, b_R, d2_R]
    elif t == "sigma2":
        terms = [b_R, d1_R, 2 * d2_R, b_V, 2 * d1_V]
    elif t == "eigval":
        terms = [-0.5, b_mu, b_R, 2 * d1_mu, 2 * d2_R]
    else:
        terms = [b_mu, d1_mu, b_R, d1_R, 2 * d2_R]
    return float(max(terms))


def check_bandwidth_window(scenario: Scenario) -> List[str]:
    """Warnings for bandwidth rules outside the regime's admissible window."""
    msgs = []
    bw = scenario.bandwidths
    used = {"mean_sup": ("h_mu",), "cov_sup": ("h_mu", "h_R"), "sigma2": ("h_R", "h_V")}.get(
        scenario.target, ("h_mu", "h_R")
    )
    for name in used:
        alpha = getattr(bw, name)[1]
        if scenario.regime == "sparse" and alpha <= 0:
            msgs.append(f"{name} does not shrink with n (alpha={alpha})")
        if scenario.regime == "dense":
            beta = scenario.m_rule.exponent
            if alpha < 0.25:
                msgs.append(f"{name} shrinks slower than (log n / n)^(1/4) (alpha={alpha} < 1/4)")
            if alpha > beta:
                msgs.append(f"{name} shrinks faster than 1/m (alpha={alpha} > m exponent {beta})")
    for m in msgs:
        warnings.warn(f"scenario {scenario.name}: {m}", stacklevel=2)
    return msgs


def _trim_mask(points, a, b, h, trim):
    if not trim:
        return np.ones(len(points), dtype=bool)
    return (points >= a + h) & (points <= b - h)


def replicate_error(scenario: Scenario, n: int, seed: int) -> float:
    """Target error for one simulated dataset of ``n`` curves."""
    model = scenario.build_model()
    kernel = get_kernel(scenario.kernel)
    h_mu, h_R, h_V = scenario.bandwidths(n)
    data = generate(model, DesignSpec(n, scenario.m_rule(n)), seed)
    a, b = model.domain
    t = scenario.target
    if t == "mean_sup":
        grid = make_grid(model.domain, scenario.grid_size)
        mu = estimate_mean(data, kernel, h_mu, grid).values
        keep = _trim_mask(grid.points, a, b, h_mu, scenario.trim_boundary)
        return float(np.max(np.abs(mu - model.mean(grid.points))[keep]))
    if t == "sigma2":
        grid = make_grid(model.domain, scenario.grid_size)
        return abs(estimate_sigma2(data, kernel, h_R, h_V, grid).sigma2 - model.sigma2)
    grid = make_grid(model.domain, scenario.surface_grid_size)
    cov = estimate_covariance(
        estimate_raw_covariance(data, kernel, h_R, grid), estimate_mean(data, kernel, h_mu, grid)
    )
    if t == "cov_sup":
        keep = _trim_mask(grid.points, a, b, h_R, scenario.trim_boundary)
        err = np.abs(cov.values - model.covariance(grid.points, grid.points))
        return float(np.max(err[np.ix_(keep, keep)]))
    j = scenario.component
    eig = decompose(cov, n_components=j)
    if eig.n_components < j:
        raise FDAError(f"only {eig.n_components} positive components, component {j} requested")
    res = eigen_errors(eig, true_eigensystem(model, grid, j), n_components=j)[j - 1]
    return {"eigval": res.eigenvalue_error, "eigfun_l2": res.l2_error, "eigfun_sup": res.sup_error}[t]


def _safe_error(scenario, n, seed, error_fn):
    try:
        if error_fn is not None:
            return float(error_fn(n, seed))
        return float(replicate_error(scenario, n, seed))
    except FDAError:
        return None


@dataclass
class RateStudyReport:
    scenario: str
    regime: str
    target: str
    n_list: List[int]
    mean_errors: List[float]
    sd_errors: List[float]
    failures: List[int]
    slope: float
    slope_se: float
    theoretical_exponent: Optional[float]
    replicates: int

    def to_json(self) -> str:
        d = asdict(self)
        if d["theoretical_exponent"] is None:
            d["theoretical_exponent"] = "interpolated/unknown"
        return json.dumps(d, indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("n", "mean_error", "sd_error", "failures"))
        for row in zip(self.n_list, self.mean_errors, self.sd_errors, self.failures):
            w.writerow((row[0], repr(row[1]), repr(row[2]), row[3]))
        return buf.getvalue()

    def write(self, directory, stem: Optional[str] = None) -> Tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        stem = stem or self.scenario
        pj, pc = directory / f"{stem}.json", directory / f"{stem}.csv"
        pj.write_text(self.to_json(), encoding="utf-8")
        pc.write_text(self.to_csv(), encoding="utf-8")
        return pj, pc


def fit_loglog_slope(n_list: Sequence[float], errors: Sequence[float]) -> Tuple[float, float]:
    """OLS slope of ``log(errors)`` on ``log(n)`` and its standard error."""
    x = np.log(np.asarray(n_list, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    if len(x) < 2:
        raise ValueError("need at least two points to fit a slope")
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    if len(x) < 3:
        return slope, float("nan")
    resid = y - y.mean() - slope * xc
    se = math.sqrt(float(resid @ resid) / (len(x) - 2) / float(xc @ xc))
    return slope, se


def run_scenario(
    scenario: Scenario,
    seed: int,
    workers: Optional[int] = None,
    error_fn: Optional[Callable[[int, int], float]] = None,
) -> RateStudyReport:
    """Monte Carlo mean error at each ``n`` and the fitted log-log slope.

    Replicate ``r`` at sample size ``n`` uses the seed derived from
    ``(seed, n, r)``. Replicates whose estimation fails are dropped and
    counted in ``failures``. ``error_fn(n, seed)`` replaces the simulation
    when given.
    """
    if len(scenario.n_list) < 4:
        raise ValueError("a slope fit needs at least four sample sizes")
    if error_fn is None:
        check_bandwidth_window(scenario)
    tasks = [
        (scenario, n, derive_seed(seed, n, r), error_fn)
        for n in scenario.n_list
        for r in range(scenario.replicates)
    ]
    results = run_tasks(_safe_error, tasks, workers if error_fn is None else 1)
    means, sds, failures = [], [], []
    R = scenario.replicates
    for k, n in enumerate(scenario.n_list):
        vals = np.array([v for v in results[k * R:(k + 1) * R] if v is not None])
        failures.append(R - len(vals))
        if len(vals) == 0:
            raise FDAError(f"every replicate failed at n={n}")
        means.append(float(vals.mean()))
        sds.append(float(vals.std(ddof=1)) if len(vals) > 1 else 0.0)
    slope, se = fit_loglog_slope(scenario.n_list, means)
    return RateStudyReport(
        scenario=scenario.name,
        regime=scenario.regime,
        target=scenario.target,
        n_list=list(scenario.n_list),
        mean_errors=means,
        sd_errors=sds,
        failures=failures,
        slope=slope,
        slope_se=se,
        theoretical_exponent=theoretical_exponent(scenario),
        replicates=R,
    )


def load_scenario(path) -> Scenario:
    return Scenario.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


SHIPPED_SCENARIOS: Dict[str, Scenario] = {
    s.name: s
    for s in (
        Scenario(
            name="sparse_mean",
            regime="sparse",
            target="mean_sup",
            m_rule=MRule(scale=5),
            bandwidths=BandwidthRule(h_mu=(0.153, 0.2)),
        ),
        Scenario(
            name="sparse_cov",
            regime="sparse",
            target="cov_sup",
            m_rule=MRule(scale=5),
            bandwidths=BandwidthRule(h_mu=(0.153, 0.2), h_R=(0.116, 1.0 / 6.0)),
        ),
        Scenario(
            name="dense_mean",
            regime="dense",
            target="mean_sup",
            m_rule=MRule(scale=2.0, exponent=0.25),
            bandwidths=BandwidthRule(h_mu=(1.0, 0.25), h_R=(1.0, 0.25), h_V=(1.0, 0.25), n_ref=1.0),
        ),
        Scenario(
            name="sparse_eigval",
            regime="sparse",
            target="eigval",
            m_rule=MRule(scale=5),
            bandwidths=BandwidthRule(h_mu=(0.153, 0.25), h_R=(0.116, 0.25)),
        ),
    )
}
