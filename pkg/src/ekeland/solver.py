"""Constructive Ekeland iteration.

Starting from an approximate minimizer ``u``, build ``u_1 = u`` and pick
``u_{n+1}`` inside the descent set

    S_n = {w : F(w) + eps * d(u_n, w) <= F(u_n)}

with ``F(u_{n+1})`` no larger than the midpoint between ``F(u_n)`` and the
infimum of ``F`` over ``S_n``.  On finite spaces the exact minimizer over
``S_n`` is taken; on normed spaces the infimum is estimated by sampling a
ball that contains every reachable point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Union

import numpy as np

from .errors import DomainError, RejectedStart
from .functional import INF, Functional, evaluate, evaluate_many, gradient, table_values
from .space import FiniteSpace, MetricSpace, NormedSpace

STATIONARY = "stationary"
STEP_TOLERANCE = "step_tolerance"
MAX_ITERS = "max_iters"


@dataclass(frozen=True)
class Exhaustive:
    """Scan every point of a finite space."""

    kind = "exhaustive"


@dataclass(frozen=True)
class LocalBall:
    """Sample ``u_n + r * phi`` for seeded unit directions ``phi``.

    Radii halve from ``radius_factor * (F(u_n) - lower_bound) / (eps * scale)``
    over ``radius_levels`` levels.  When ``use_gradient`` is set and the
    functional has an analytic gradient, the steepest-descent direction of
    the norm is added to the sampled directions; the previous step direction
    is always added.
    """

    radius_factor: float = 1.0
    samples_per_iter: int = 32
    seed: int = 0
    radius_levels: int = 48
    use_gradient: bool = True

    kind = "local_ball"


Sampler = Union[Exhaustive, LocalBall]


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float
    max_iters: int = 10_000
    step_tolerance: Optional[float] = None
    sampler: Optional[Sampler] = None
    second_order_mode: bool = False

    def __post_init__(self) -> None:
        if not (isinstance(self.epsilon, (int, float)) and math.isfinite(self.epsilon)
                and self.epsilon > 0):
            raise ValueError(f"epsilon must be a positive real, got {self.epsilon!r}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.step_tolerance is not None and self.step_tolerance < 0:
            raise ValueError("step_tolerance must be >= 0")

    def resolved(self, space: MetricSpace, epsilon: float) -> "SolverConfig":
        """Fill space-dependent defaults and check the sampler/space pairing."""
        sampler = self.sampler
        if sampler is None:
            sampler = Exhaustive() if isinstance(space, FiniteSpace) else LocalBall()
        if isinstance(sampler, Exhaustive) and not isinstance(space, FiniteSpace):
            raise ValueError("the exhaustive sampler needs a finite space")
        if isinstance(sampler, LocalBall) and not isinstance(space, NormedSpace):
            raise ValueError("the local-ball sampler needs a normed space")
        tol = self.step_tolerance
        if tol is None:
            tol = 0.0 if isinstance(space, FiniteSpace) else 1e-10 * epsilon
        return replace(self, sampler=sampler, step_tolerance=tol)


@dataclass
class IterationTrace:
    points: list
    values: list[float]
    step_dists: list[float] = field(default_factory=list)
    inf_estimates: list[float] = field(default_factory=list)
    terminated_by: str = MAX_ITERS
    epsilon: float = 0.0

    @property
    def last(self):
        return self.points[-1]

    def to_dict(self, space: MetricSpace) -> dict:
        return {
            "epsilon": self.epsilon,
            "points": [space.point_to_json(p) for p in self.points],
            "values": [float(v) for v in self.values],
            "step_dists": [float(d) for d in self.step_dists],
            "inf_estimates": [float(v) for v in self.inf_estimates],
            "terminated_by": self.terminated_by,
        }

    @classmethod
    def from_dict(cls, d: dict, space: MetricSpace) -> "IterationTrace":
        if isinstance(space, FiniteSpace):
            pts = [int(p) for p in d["points"]]
        else:
            pts = [np.asarray(p, dtype=float) for p in d["points"]]
        return cls(pts, list(d["values"]), list(d["step_dists"]),
                   list(d["inf_estimates"]), d["terminated_by"], d["epsilon"])


def in_descent_set(f: Functional, s: MetricSpace, eps: float, u_n: Any, w: Any) -> bool:
    """Whether ``F(w) <= F(u_n) - eps * d(u_n, w)``; ``+inf`` values never qualify."""
    fu = evaluate(f, u_n)
    if fu == INF:
        raise DomainError("F(u_n) must be finite")
    fw = evaluate(f, w)
    if fw == INF:
        return False
    # written as F(w) + eps*d <= F(u_n): the exact float negation of the Ekeland test
    return fw + eps * s.distance(u_n, w) <= fu


def _derived_seed(seed: int, iteration: int) -> int:
    return int(np.random.SeedSequence([seed, iteration]).generate_state(1)[0])


def select_next(f: Functional, s: MetricSpace, eps: float, u_n: Any, sampler: Sampler,
                iteration: int = 0, previous: Any = None,
                values: Optional[np.ndarray] = None) -> tuple[Any, float]:
    """One step of the iteration: the lowest-valued eligible point and the infimum estimate.

    ``values`` may carry the precomputed table of a finite functional.
    ``previous`` is ``u_{n-1}`` on normed spaces, used as an extra direction.
    Returns ``u_n`` itself when no eligible point improves on it.
    """
    if isinstance(sampler, Exhaustive):
        if not isinstance(s, FiniteSpace):
            raise ValueError("the exhaustive sampler needs a finite space")
        u_n = s.check_point(u_n)
        vals = table_values(f, s) if values is None else values
        fu = float(vals[u_n])
        if fu == INF:
            raise DomainError("F(u_n) must be finite")
        member = vals + eps * s.distances_from(u_n) <= fu
        masked = np.where(member, vals, INF)
        idx = int(np.argmin(masked))  # first occurrence: lowest index wins ties
        return idx, float(masked[idx])

    if not isinstance(s, NormedSpace):
        raise ValueError("the local-ball sampler needs a normed space")
    u_n = s.check_point(u_n)
    fu = evaluate(f, u_n)
    if fu == INF:
        raise DomainError("F(u_n) must be finite")
    radius = sampler.radius_factor * (fu - f.lower_bound) / (eps * s.metric_scale)
    if not radius > 0:
        return u_n, fu

    dirs = list(s.sample_directions(sampler.samples_per_iter,
                                    _derived_seed(sampler.seed, iteration)))
    if sampler.use_gradient and f.grad is not None:
        dirs.append(s.steepest_direction(gradient(f, u_n)))
    if previous is not None:
        step = u_n - s.check_point(previous)
        n = s.norm(step)
        if n > 0:
            dirs.append(step / n)
    dirs = np.array([d for d in dirs if np.any(d)])
    radii = radius * 0.5 ** np.arange(sampler.radius_levels)
    # row order: direction-major, radius-minor; argmin ties go to the first row
    cands = (u_n[None, None, :] + radii[None, :, None] * dirs[:, None, :]).reshape(-1, s.dim)
    vals = evaluate_many(f, cands)
    member = vals + eps * s.distances_from(u_n, cands) <= fu
    masked = np.where(member, vals, INF)
    k = int(np.argmin(masked))
    if masked[k] < fu:
        return cands[k], float(masked[k])
    return u_n, fu


def _same(s: MetricSpace, a: Any, b: Any) -> bool:
    if isinstance(s, FiniteSpace):
        return a == b
    return a is b or np.array_equal(a, b)


def check_hypothesis(f: Functional, s: MetricSpace, u: Any, level: float, strict: bool = False) -> float:
    """Return ``F(u)`` if ``F(u) <= lower_bound + level`` (``<`` when strict), else raise."""
    u = s.check_point(u)
    fu = evaluate(f, u)
    if fu == INF:
        raise RejectedStart("F(u) is +inf; the start must have a finite value")
    bound = f.lower_bound + level
    if (fu >= bound) if strict else (fu > bound):
        rel = "<" if strict else "<="
        raise RejectedStart(
            f"hypothesis F(u) {rel} lower_bound + {level!r} fails: "
            f"F(u) = {fu!r}, lower_bound = {f.lower_bound!r}")
    return fu


def _iterate(f: Functional, s: MetricSpace, u: Any, eps: float,
             cfg: SolverConfig) -> IterationTrace:
    sampler = cfg.sampler
    values = table_values(f, s) if isinstance(s, FiniteSpace) else None
    u = s.check_point(u)
    trace = IterationTrace([u], [evaluate(f, u)], epsilon=eps)
    previous = None
    for it in range(cfg.max_iters):
        u_n = trace.points[-1]
        nxt, inf_est = select_next(f, s, eps, u_n, sampler, it, previous, values)
        trace.inf_estimates.append(inf_est)
        if _same(s, nxt, u_n):
            trace.terminated_by = STATIONARY
            return trace
        step = s.distance(u_n, nxt)
        trace.points.append(nxt)
        trace.values.append(float(values[nxt]) if values is not None else evaluate(f, nxt))
        trace.step_dists.append(step)
        previous = u_n
        if step <= cfg.step_tolerance:
            trace.terminated_by = STEP_TOLERANCE
            return trace
    trace.terminated_by = MAX_ITERS
    return trace


def run(f: Functional, s: MetricSpace, u: Any, cfg: SolverConfig) -> tuple[Any, IterationTrace]:
    """Run the iteration at tolerance ``cfg.epsilon`` from a start with ``F(u) <= lb + eps``.

    Raises :class:`RejectedStart` when the start fails that hypothesis.
    """
    if cfg.second_order_mode:
        return run_second_order(f, s, u, replace(cfg, second_order_mode=False))
    eps = float(cfg.epsilon)
    check_hypothesis(f, s, u, eps)
    trace = _iterate(f, s, u, eps, cfg.resolved(s, eps))
    return trace.last, trace


def run_second_order(f: Functional, s: MetricSpace, u: Any,
                     cfg: SolverConfig) -> tuple[Any, IterationTrace]:
    """Same iteration with ``eps**2`` in place of ``eps``; start needs ``F(u) <= lb + eps**2``."""
    eps2 = float(cfg.epsilon) ** 2
    check_hypothesis(f, s, u, eps2)
    trace = _iterate(f, s, u, eps2, replace(cfg, second_order_mode=False).resolved(s, eps2))
    return trace.last, trace


def run_rescaled(f: Functional, s: MetricSpace, u: Any,
                 cfg: SolverConfig) -> tuple[Any, IterationTrace]:
    """Iteration at ``eps`` in the metric ``sqrt(eps) * d``, from ``F(u) < lb + eps**2``.

    The returned trace records distances in the rescaled metric.
    """
    eps = float(cfg.epsilon)
    check_hypothesis(f, s, u, eps * eps, strict=True)
    scaled = s.with_scale(s.metric_scale * math.sqrt(eps))
    trace = _iterate(f, scaled, u, eps, replace(cfg, second_order_mode=False).resolved(scaled, eps))
    return trace.last, trace
