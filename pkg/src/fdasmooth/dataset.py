"""Containers and ingestion for irregularly observed longitudinal curves.

A :class:`FunctionalDataset` stores ``n`` curves, curve ``i`` carrying
``m_i`` observations ``(T_ij, Y_ij)``. Internally the observations are kept
concatenated in curve order with an offsets vector, which is the layout the
vectorized smoothers consume.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .exceptions import EmptyFile, InvalidGridSize, MalformedRow, TimeOutOfDomain

CSV_HEADER = ("curve_id", "t", "y")


class Curve(NamedTuple):
    id: str
    times: np.ndarray
    values: np.ndarray

    @property
    def m(self) -> int:
        return len(self.times)


def _readonly(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FunctionalDataset:
    """Immutable collection of observed curves on a closed interval.

    Parameters
    ----------
    ids : tuple of str
        Curve identifiers, one per curve.
    t, y : ndarray of shape (n_obs,)
        Concatenated observation times and responses, grouped by curve.
    offsets : ndarray of shape (n_curves + 1,)
        Curve ``i`` owns ``t[offsets[i]:offsets[i + 1]]``.
    domain : (float, float)
        The interval ``[a, b]`` containing every time.
    """

    ids: tuple
    t: np.ndarray
    y: np.ndarray
    offsets: np.ndarray
    domain: tuple = field(default=(0.0, 1.0))

    def __post_init__(self):
        t = _readonly(self.t)
        y = _readonly(self.y)
        offsets = np.ascontiguousarray(self.offsets, dtype=np.int64)
        offsets.setflags(write=False)
        a, b = (float(v) for v in self.domain)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "domain", (a, b))
        object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))

        if t.ndim != 1 or t.shape != y.shape:
            raise ValueError("t and y must be 1-D arrays of equal length")
        if not (np.isfinite(a) and np.isfinite(b) and a < b):
            raise ValueError(f"domain must satisfy a < b, got [{a}, {b}]")
        if len(self.ids) < 1:
            raise ValueError("a dataset needs at least one curve")
        if len(offsets) != len(self.ids) + 1 or offsets[0] != 0 or offsets[-1] != len(t):
            raise ValueError("offsets inconsistent with the observation arrays")
        if np.any(np.diff(offsets) < 1):
            raise ValueError("every curve needs at least one observation")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
            raise ValueError("times and values must be finite")
        if np.any(t < a) or np.any(t > b):
            raise TimeOutOfDomain(f"observation times fall outside [{a}, {b}]")

    @classmethod
    def from_curves(
        cls,
        times: Sequence[Sequence[float]],
        values: Sequence[Sequence[float]],
        ids: Optional[Sequence] = None,
        domain: Optional[tuple] = None,
    ) -> "FunctionalDataset":
        """Build a dataset from per-curve time and value sequences.

        When ``domain`` is omitted it is taken as ``[min t, max t]``.
        """
        if len(times) != len(values):
            raise ValueError("times and values must list the same number of curves")
        times = [np.atleast_1d(np.asarray(ti, dtype=float)) for ti in times]
        values = [np.atleast_1d(np.asarray(yi, dtype=float)) for yi in values]
        for ti, yi in zip(times, values):
            if ti.shape != yi.shape:
                raise ValueError("each curve needs as many values as times")
        if ids is None:
            ids = [str(i) for i in range(len(times))]
        lengths = [len(ti) for ti in times]
        offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
        t = np.concatenate(times) if times else np.empty(0)
        y = np.concatenate(values) if values else np.empty(0)
        if domain is None:
            if len(t) == 0:
                raise ValueError("cannot infer a domain from an empty dataset")
            domain = (float(t.min()), float(t.max()))
        return cls(ids=tuple(ids), t=t, y=y, offsets=offsets, domain=domain)

    @property
    def n_curves(self) -> int:
        return len(self.ids)

    @property
    def n_obs(self) -> int:
        return len(self.t)

    @cached_property
    def m(self) -> np.ndarray:
        """Observation counts ``m_i``."""
        m = np.diff(self.offsets)
        m.setflags(write=False)
        return m

    @property
    def N(self) -> np.ndarray:
        """Ordered within-curve pair counts ``m_i (m_i - 1)``."""
        return self.m * (self.m - 1)

    @cached_property
    def curve_index(self) -> np.ndarray:
        """Curve number of each concatenated observation."""
        idx = np.repeat(np.arange(self.n_curves), self.m)
        idx.setflags(write=False)
        return idx

    def curve(self, i: int) -> Curve:
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return Curve(self.ids[i], self.t[lo:hi], self.y[lo:hi])

    def __iter__(self) -> Iterator[Curve]:
        return (self.curve(i) for i in range(self.n_curves))

    def __len__(self) -> int:
        return self.n_curves

    def __repr__(self):
        a, b = self.domain
        return f"FunctionalDataset(n_curves={self.n_curves}, n_obs={self.n_obs}, domain=[{a:g}, {b:g}])"

    @cached_property
    def pairs(self) -> tuple:
        """Indices ``(j, k)`` into ``t`` of all ordered within-curve pairs with ``j != k``.

        Curves with a single observation contribute no pairs.
        """
        first, second = [], []
        for lo, hi in zip(self.offsets[:-1], self.offsets[1:]):
            if hi - lo < 2:
                continue
            idx = np.arange(lo, hi)
            jj, kk = np.meshgrid(idx, idx, indexing="ij")
            keep = jj != kk
            first.append(jj[keep])
            second.append(kk[keep])
        if not first:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty
        return np.concatenate(first), np.concatenate(second)


@dataclass(frozen=True, eq=False)
class EvaluationGrid:
    """Strictly increasing evaluation points with trapezoid quadrature weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", _readonly(self.points))
        object.__setattr__(self, "weights", _readonly(self.weights))
        if self.points.shape != self.weights.shape:
            raise ValueError("points and weights must have equal length")

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def domain(self) -> tuple:
        return float(self.points[0]), float(self.points[-1])

    def __len__(self):
        return self.size

    def same_as(self, other: "EvaluationGrid") -> bool:
        return self.size == other.size and np.array_equal(self.points, other.points)


def make_grid(domain, G: int = 101) -> EvaluationGrid:
    """Equally spaced grid of ``G`` points on ``domain`` with trapezoid weights."""
    if int(G) != G or G < 2:
        raise InvalidGridSize(f"grid size must be an integer >= 2, got {G}")
    G = int(G)
    a, b = (float(v) for v in domain)
    points = np.linspace(a, b, G)
    points[-1] = b
    delta = (b - a) / (G - 1)
    weights = np.full(G, delta)
    weights[0] = weights[-1] = delta / 2
    return EvaluationGrid(points, weights)


def harmonic_mean(dataset: FunctionalDataset, k: int = 1) -> float:
    """``k``-th order harmonic mean of the per-curve observation counts."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    m = np.asarray(dataset.m, dtype=float)
    return float(1.0 / np.mean(m ** (-k)))


def load_csv(path, domain=None) -> FunctionalDataset:
    """Read a ``curve_id,t,y`` file into a dataset.

    Rows are grouped by ``curve_id`` in order of first appearance; row order is
    kept within a curve.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise EmptyFile(f"{path} is empty")
    header = [cell.strip() for cell in rows[0]]
    if tuple(header) != CSV_HEADER:
        raise MalformedRow(f"{path}: expected header {','.join(CSV_HEADER)}, got {','.join(header)}")
    if len(rows) == 1:
        raise EmptyFile(f"{path} has a header but no observations")

    groups: dict = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise MalformedRow(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        cid, t_raw, y_raw = (cell.strip() for cell in row)
        try:
            t, y = float(t_raw), float(y_raw)
        except ValueError:
            raise MalformedRow(f"{path}:{lineno}: non-numeric t or y in {row!r}") from None
        if not (np.isfinite(t) and np.isfinite(y)):
            raise MalformedRow(f"{path}:{lineno}: non-finite t or y in {row!r}")
        groups.setdefault(cid, ([], []))
        groups[cid][0].append(t)
        groups[cid][1].append(y)

    if domain is not None:
        a, b = (float(v) for v in domain)
        for cid, (ts, _) in groups.items():
            bad = [t for t in ts if t < a or t > b]
            if bad:
                raise TimeOutOfDomain(f"curve {cid}: time {bad[0]!r} outside [{a}, {b}]")
    ids = list(groups)
    return FunctionalDataset.from_curves(
        [groups[c][0] for c in ids], [groups[c][1] for c in ids], ids=ids, domain=domain
    )


def save_csv(dataset: FunctionalDataset, path) -> None:
    """Write the dataset in the ``curve_id,t,y`` schema, losslessly."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for curve in dataset:
            for t, y in zip(curve.times, curve.values):
                writer.writerow((curve.id, repr(float(t)), repr(float(y))))


def save_json(dataset: FunctionalDataset, path) -> None:
    """JSON mirror of the CSV schema: a list of ``{curve_id, t, y}`` records."""
    records = [
        {"curve_id": c.id, "t": float(t), "y": float(y)}
        for c in dataset
        for t, y in zip(c.times, c.values)
    ]
    payload = {"domain": list(dataset.domain), "observations": records}
    Path(path).write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def check_functional_data(X, domain=None) -> FunctionalDataset:
    """Coerce supported inputs to a :class:`FunctionalDataset`.

    Accepted forms are a dataset (returned as-is), a pandas DataFrame with
    ``curve_id``, ``t`` and ``y`` columns, a ``(times, values)`` pair of
    per-curve sequences, or an array-like of shape ``(n_obs, 3)`` in long
    format with columns ``(curve_id, t, y)``.
    """
    if isinstance(X, FunctionalDataset):
        if domain is not None and tuple(map(float, domain)) != X.domain:
            return FunctionalDataset(X.ids, X.t, X.y, X.offsets, domain)
        return X
    if hasattr(X, "columns") and all(c in X.columns for c in CSV_HEADER):
        return _from_long(X["curve_id"].to_numpy(), X["t"].to_numpy(), X["y"].to_numpy(), domain)
    if isinstance(X, tuple) and len(X) == 2:
        return FunctionalDataset.from_curves(X[0], X[1], domain=domain)
    arr = np.asarray(X, dtype=object)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(
            "expected a FunctionalDataset, a DataFrame with curve_id/t/y columns, "
            f"a (times, values) pair or an (n_obs, 3) array; got shape {arr.shape}"
        )
    if arr.shape[0] == 0:
        raise ValueError("no observations supplied")
    return _from_long(arr[:, 0], arr[:, 1].astype(float), arr[:, 2].astype(float), domain)


def _from_long(cid, t, y, domain):
    groups: dict = {}
    for c, ti, yi in zip(cid, t, y):
        groups.setdefault(str(c), ([], []))
        groups[str(c)][0].append(float(ti))
        groups[str(c)][1].append(float(yi))
    ids = list(groups)
    return FunctionalDataset.from_curves(
        [groups[c][0] for c in ids], [groups[c][1] for c in ids], ids=ids, domain=domain
    )
