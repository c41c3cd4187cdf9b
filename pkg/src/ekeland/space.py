"""Complete metric spaces: finite point sets and finite-dimensional normed spaces.

Points are plain Python/numpy values. A point of a :class:`FiniteSpace` is an
``int`` index; a point of a :class:`NormedSpace` is a 1-D float array.
Both space kinds are immutable once built.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any, Sequence

import numpy as np

from .errors import DomainError, SpaceValidationError, UnsupportedOperation

NORM_KINDS = ("l1", "l2", "linf")
_DUAL = {"l1": "linf", "l2": "l2", "linf": "l1"}

# relative slack for the triangle inequality; shortest-path completions round
TRIANGLE_RTOL = 1e-12


def vector_norm(x: np.ndarray, kind: str) -> np.ndarray | float:
    """Norm of ``x`` along its last axis."""
    x = np.asarray(x, dtype=float)
    if kind == "l2":
        # scale by the largest entry so tiny or huge vectors do not under/overflow
        m = np.max(np.abs(x), axis=-1, keepdims=True)
        safe = np.where(m > 0, m, 1.0)
        y = x / safe
        return np.squeeze(safe, -1) * np.sqrt(np.sum(y * y, axis=-1))
    if kind == "l1":
        return np.sum(np.abs(x), axis=-1)
    if kind == "linf":
        return np.max(np.abs(x), axis=-1)
    raise DomainError(f"unknown norm {kind!r}")


@dataclass(frozen=True, eq=False)
class FiniteSpace:
    """Finite metric space given by an explicit distance matrix.

    The matrix is validated once, at construction: zero diagonal, exact
    symmetry, strictly positive off-diagonal entries and the triangle
    inequality over all triples.
    """

    labels: tuple[str, ...]
    dist: np.ndarray
    metric_scale: float = 1.0

    kind = "finite"

    def __post_init__(self) -> None:
        d = np.array(self.dist, dtype=float)
        n = len(self.labels)
        if d.ndim != 2 or d.shape != (n, n):
            raise SpaceValidationError(
                f"dist must be a {n}x{n} matrix, got shape {d.shape}")
        if n == 0:
            raise SpaceValidationError("a finite space needs at least one point")
        if len(set(self.labels)) != n:
            raise SpaceValidationError("labels must be unique")
        if not np.all(np.isfinite(d)):
            raise SpaceValidationError("dist entries must be finite")
        if np.any(np.diag(d) != 0.0):
            raise SpaceValidationError("dist[i][i] must be 0")
        if not np.array_equal(d, d.T):
            i, j = np.argwhere(d != d.T)[0]
            raise SpaceValidationError(f"dist is not symmetric at ({i}, {j})")
        off = ~np.eye(n, dtype=bool)
        if np.any(d[off] <= 0.0):
            raise SpaceValidationError("distinct points must have positive distance")
        _check_triangle(d)
        if not (np.isfinite(self.metric_scale) and self.metric_scale > 0):
            raise SpaceValidationError("metric_scale must be positive")
        d.setflags(write=False)
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "metric_scale", float(self.metric_scale))

    @property
    def n_points(self) -> int:
        return len(self.labels)

    def points(self) -> range:
        return range(self.n_points)

    def check_point(self, p: Any) -> int:
        if isinstance(p, (bool, np.bool_)) or not isinstance(p, (int, np.integer)):
            raise DomainError(f"finite-space point must be an integer index, got {p!r}")
        if not 0 <= p < self.n_points:
            raise DomainError(f"index {p} outside [0, {self.n_points})")
        return int(p)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DomainError(f"no point labelled {label!r}") from None

    def distance(self, a: int, b: int) -> float:
        a, b = self.check_point(a), self.check_point(b)
        return self.metric_scale * float(self.dist[a, b])

    def distances_from(self, a: int) -> np.ndarray:
        """Scaled distances from ``a`` to every point, as one row."""
        return self.metric_scale * self.dist[self.check_point(a)]

    def dual_norm(self, g: Any) -> float:
        raise UnsupportedOperation("dual norm is only defined on normed spaces")

    def sample_directions(self, count: int, seed: int) -> list[np.ndarray]:
        raise UnsupportedOperation("directions are only defined on normed spaces")

    def with_scale(self, scale: float) -> "FiniteSpace":
        return replace(self, metric_scale=scale)

    def point_to_json(self, p: int) -> int:
        return int(p)

    def to_dict(self) -> dict:
        out = {"kind": "finite", "labels": list(self.labels),
               "dist": self.dist.tolist()}
        if self.metric_scale != 1.0:
            out["metric_scale"] = self.metric_scale
        return out


def _check_triangle(d: np.ndarray) -> None:
    # one pass per intermediate point k keeps memory at O(n^2)
    scale = float(d.max()) if d.size else 0.0
    slack = TRIANGLE_RTOL * scale
    for k in range(d.shape[0]):
        bad = d > d[:, k, None] + d[None, k, :] + slack
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise SpaceValidationError(
                f"triangle inequality fails: d({i},{j}) > d({i},{k}) + d({k},{j})")


@dataclass(frozen=True)
class NormedSpace:
    """``R^dim`` with the l1, l2 or linf norm, distances multiplied by ``metric_scale``."""

    dim: int
    norm_kind: str = "l2"
    metric_scale: float = 1.0

    kind = "normed"

    def __post_init__(self) -> None:
        if isinstance(self.dim, bool) or not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise SpaceValidationError(f"dim must be a positive integer, got {self.dim!r}")
        if self.norm_kind not in NORM_KINDS:
            raise SpaceValidationError(
                f"norm must be one of {NORM_KINDS}, got {self.norm_kind!r}")
        if not (np.isfinite(self.metric_scale) and self.metric_scale > 0):
            raise SpaceValidationError("metric_scale must be positive")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "metric_scale", float(self.metric_scale))

    def check_point(self, p: Any) -> np.ndarray:
        x = np.asarray(p, dtype=float)
        if x.shape != (self.dim,):
            raise DomainError(f"expected a point of dimension {self.dim}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DomainError("point coordinates must be finite")
        return x

    def norm(self, x: Any) -> float:
        """Unscaled norm of a vector."""
        return float(vector_norm(self.check_point(x), self.norm_kind))

    def distance(self, a: Any, b: Any) -> float:
        base = vector_norm(self.check_point(a) - self.check_point(b), self.norm_kind)
        return self.metric_scale * float(base)

    def distances_from(self, a: Any, others: np.ndarray) -> np.ndarray:
        """Scaled distances from ``a`` to each row of ``others``."""
        a = self.check_point(a)
        return self.metric_scale * vector_norm(np.asarray(others, float) - a, self.norm_kind)

    def dual_norm(self, g: Any) -> float:
        """Norm dual to ``norm_kind``. ``metric_scale`` is not applied."""
        g = np.asarray(g, dtype=float)
        if g.shape != (self.dim,):
            raise DomainError(f"expected a vector of dimension {self.dim}, got shape {g.shape}")
        return float(vector_norm(g, _DUAL[self.norm_kind]))

    def steepest_direction(self, g: Any) -> np.ndarray:
        """Unit vector ``phi`` with ``<g, phi> = -dual_norm(g)``."""
        g = np.asarray(g, dtype=float)
        if not np.any(g):
            return np.zeros(self.dim)
        if self.norm_kind == "l2":
            return -g / np.linalg.norm(g)
        if self.norm_kind == "linf":
            return -np.sign(g)
        phi = np.zeros(self.dim)
        i = int(np.argmax(np.abs(g)))
        phi[i] = -np.sign(g[i])
        return phi

    def random_unit(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """``count`` random rows of unit norm (Gaussian directions, renormalized)."""
        z = rng.standard_normal((count, self.dim))
        nz = vector_norm(z, self.norm_kind)
        # a zero draw has probability 0 but would poison the division
        z[nz == 0.0, 0] = 1.0
        nz = vector_norm(z, self.norm_kind)
        return z / nz[:, None]

    def sample_directions(self, count: int, seed: int) -> list[np.ndarray]:
        """Deterministic unit directions.

        The first ``min(count, 2*dim)`` entries are the signed coordinate
        axes ``+e1, -e1, +e2, ...``; the rest are seeded random unit vectors.
        """
        if count < 1:
            raise DomainError("count must be >= 1")
        axes = []
        for i in range(self.dim):
            for sign in (1.0, -1.0):
                e = np.zeros(self.dim)
                e[i] = sign
                axes.append(e)
        out = axes[:count]
        extra = count - len(out)
        if extra > 0:
            rng = np.random.default_rng(seed)
            out.extend(self.random_unit(rng, extra))
        return out

    def with_scale(self, scale: float) -> "NormedSpace":
        return replace(self, metric_scale=scale)

    def point_to_json(self, p: Any) -> list[float]:
        return [float(c) for c in np.asarray(p, dtype=float)]

    def to_dict(self) -> dict:
        out = {"kind": "normed", "dim": self.dim, "norm": self.norm_kind}
        if self.metric_scale != 1.0:
            out["metric_scale"] = self.metric_scale
        return out


MetricSpace = FiniteSpace | NormedSpace


def space_from_dict(d: dict) -> MetricSpace:
    """Build a space from its JSON section."""
    kind = d.get("kind")
    scale = d.get("metric_scale", 1.0)
    if kind == "finite":
        dist = d.get("dist")
        if dist is None:
            raise SpaceValidationError("finite space needs 'dist'")
        labels: Sequence[Any] = d.get("labels") or [str(i) for i in range(len(dist))]
        return FiniteSpace(tuple(labels), np.asarray(dist, dtype=float), scale)
    if kind == "normed":
        return NormedSpace(d.get("dim"), d.get("norm", "l2"), scale)
    raise SpaceValidationError(f"unknown space kind {kind!r}")


def shortest_path_metric(weights: np.ndarray) -> np.ndarray:
    """Complete a symmetric positive weight matrix to a metric (Floyd-Warshall)."""
    d = np.array(weights, dtype=float)
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    for k in range(d.shape[0]):
        d = np.minimum(d, d[:, k, None] + d[None, k, :])
    # keep exact symmetry; min over both orientations is order independent
    d = np.minimum(d, d.T)
    return d
