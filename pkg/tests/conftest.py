import math

import numpy as np
import pytest

from ekeland import functional as fz
from ekeland.space import FiniteSpace, shortest_path_metric

F1_DIST = [[0.0, 1.0, 2.0, 0.5, 1.3],
           [1.0, 0.0, 1.5, 1.2, 0.3],
           [2.0, 1.5, 0.0, 1.8, 1.6],
           [0.5, 1.2, 1.8, 0.0, 1.4],
           [1.3, 0.3, 1.6, 1.4, 0.0]]
F1_VALUES = [3.0, 1.0, math.inf, 2.5, 1.2]


@pytest.fixture
def f1():
    """The five-point fixture: labels a..e, value table [3, 1, inf, 2.5, 1.2]."""
    space = FiniteSpace(tuple("abcde"), np.array(F1_DIST))
    return space, fz.table(F1_VALUES, lower_bound=1.0)


def random_finite_problem(rng, n, eps):
    """Random metric (shortest-path completion), value table with some +inf, valid start."""
    w = rng.uniform(0.05, 3.0, size=(n, n))
    w = np.triu(w, 1)
    w = w + w.T
    dist = shortest_path_metric(w)
    space = FiniteSpace(tuple(str(i) for i in range(n)), dist)
    vals = rng.uniform(0.0, 5.0, size=n)
    vals[rng.random(n) < 0.1] = math.inf
    if not np.isfinite(vals).any():
        vals[0] = 1.0
    lb = float(vals[np.isfinite(vals)].min())
    f = fz.table(vals.tolist(), lower_bound=lb)
    ok = np.flatnonzero(vals <= lb + eps)
    u = int(rng.choice(ok))
    return space, f, u


def brute_ekeland_set(vals, dist, eps):
    """Pure-Python double loop, independent of the package's vectorized oracle."""
    n = len(vals)
    out = []
    for v in range(n):
        if vals[v] == math.inf:
            continue
        if all(vals[v] <= vals[w] + eps * dist[v][w] for w in range(n)):
            out.append(v)
    return out


def point_at_level(f, center, level, rng):
    """A point on a random ray from ``center`` with F close to (below) ``level``."""
    d = rng.standard_normal(len(center))
    d /= np.linalg.norm(d)
    lo, hi = 0.0, 1.0
    while fz.evaluate(f, center + hi * d) <= level:
        hi *= 2
        if hi > 1e6:
            return center + d  # F never exceeds the level along this ray
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if fz.evaluate(f, center + mid * d) <= level:
            lo = mid
        else:
            hi = mid
    return center + lo * d


def audit_trace(space, trace, slack=1e-12):
    """Descent per step and its telescoped form along the whole trace."""
    eps, vals, pts = trace.epsilon, trace.values, trace.points
    for n in range(len(pts) - 1):
        assert vals[n + 1] < vals[n]
        assert eps * trace.step_dists[n] <= vals[n] - vals[n + 1] + slack * (1 + abs(vals[n]))
    for n in range(len(pts)):
        for m in range(1, len(pts) - n):
            lhs = eps * space.distance(pts[n], pts[n + m])
            assert lhs <= vals[n] - vals[n + m] + m * slack * (1 + abs(vals[n]))
