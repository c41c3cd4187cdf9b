"""Brute-force ground truth on finite metric spaces."""
from __future__ import annotations

import numpy as np

from .errors import DomainError, NoFiniteValue
from .functional import INF, Functional, table_values
from .space import FiniteSpace

MAX_POINTS = 500


def _values(f: Functional, s: FiniteSpace) -> np.ndarray:
    if not isinstance(s, FiniteSpace):
        raise DomainError("the oracle only handles finite spaces")
    if s.n_points > MAX_POINTS:
        raise DomainError(f"oracle limited to {MAX_POINTS} points, got {s.n_points}")
    return table_values(f, s)


def exact_inf(f: Functional, s: FiniteSpace) -> tuple[float, int]:
    """Minimum of F and the lowest index attaining it."""
    vals = _values(f, s)
    if not np.any(np.isfinite(vals)):
        raise NoFiniteValue("F is +inf everywhere")
    i = int(np.argmin(vals))
    return float(vals[i]), i


def ekeland_set(f: Functional, s: FiniteSpace, eps: float) -> list[int]:
    """Sorted indices ``v`` with F(v) finite and ``F(v) <= F(w) + eps d(v, w)`` for all w."""
    vals = _values(f, s)
    d = s.metric_scale * s.dist
    ok = np.all(vals[:, None] <= vals[None, :] + eps * d, axis=1) & np.isfinite(vals)
    return [int(i) for i in np.flatnonzero(ok)]


def verify_against_oracle(f: Functional, s: FiniteSpace, u: int, eps: float, v: int) -> bool:
    """Exact check of the three metric conclusions for ``v`` obtained from ``u``."""
    vals = _values(f, s)
    u, v = s.check_point(u), s.check_point(v)
    if vals[v] == INF:
        return False
    return (v in ekeland_set(f, s, eps)
            and vals[v] <= vals[u]
            and s.distance(u, v) <= 1.0)
