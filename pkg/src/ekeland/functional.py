"""Extended-real-valued functionals, finite-difference derivatives and a test zoo.

Values are Python floats; ``math.inf`` stands for ``+inf`` and NaN is never
allowed through :func:`evaluate`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .errors import (DerivativeUndefined, EvaluationError, NoFiniteValue,
                     SpecError, UnsupportedOperation)
from .space import FiniteSpace, MetricSpace, NormedSpace

INF = math.inf


@dataclass(frozen=True, eq=False)
class Functional:
    """``F: U -> R u {+inf}`` with a known finite lower bound.

    ``batch`` evaluates many points at once (rows of an array, or an index
    array on finite spaces) and is optional; it must agree with ``fn``.
    ``grad`` and ``hess_form`` are analytic derivatives, absent for
    nonsmooth members.
    """

    name: str
    fn: Callable[[Any], float]
    lower_bound: float
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess_form: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], float]] = None
    batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    params: dict = field(default_factory=dict)

    @property
    def smooth(self) -> bool:
        return self.grad is not None

    @property
    def twice_smooth(self) -> bool:
        return self.grad is not None and self.hess_form is not None

    def to_dict(self) -> dict:
        out = {"name": self.name, "params": _jsonable(self.params),
               "lower_bound": self.lower_bound}
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return "inf" if obj == INF else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _check_value(f: Functional, value: float, where: Any) -> float:
    value = float(value)
    if math.isnan(value):
        raise EvaluationError(f"{f.name} returned NaN at {where!r}")
    if value == -INF or value < f.lower_bound:
        raise EvaluationError(
            f"{f.name}({where!r}) = {value!r} is below its lower bound {f.lower_bound!r}")
    return value


def evaluate(f: Functional, p: Any) -> float:
    return _check_value(f, f.fn(p), p)


def evaluate_many(f: Functional, points: Any) -> np.ndarray:
    """Vectorized :func:`evaluate`, with the same NaN and lower-bound checks."""
    if f.batch is not None:
        vals = np.asarray(f.batch(points), dtype=float)
    else:
        vals = np.array([f.fn(p) for p in points], dtype=float)
    bad = np.isnan(vals) | (vals < f.lower_bound)
    if bad.any():
        k = int(np.argmax(bad))
        _check_value(f, vals[k], points[k])
    return vals


def gradient(f: Functional, p: np.ndarray) -> np.ndarray:
    if f.grad is None:
        raise UnsupportedOperation(f"{f.name} has no analytic gradient")
    if evaluate(f, p) == INF:
        raise DerivativeUndefined(f"{f.name} is +inf at {p!r}")
    return np.asarray(f.grad(np.asarray(p, float)), dtype=float)


def hessian_form(f: Functional, p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    if f.hess_form is None:
        raise UnsupportedOperation(f"{f.name} has no analytic second variation")
    if evaluate(f, p) == INF:
        raise DerivativeUndefined(f"{f.name} is +inf at {p!r}")
    return float(f.hess_form(np.asarray(p, float), np.asarray(a, float), np.asarray(b, float)))


def _probe(f: Functional, p: np.ndarray, phi: np.ndarray, t: float) -> tuple[float, float, float]:
    p = np.asarray(p, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if not t > 0:
        raise ValueError("step t must be positive")
    fp = evaluate(f, p + t * phi)
    f0 = evaluate(f, p)
    fm = evaluate(f, p - t * phi)
    if INF in (fp, f0, fm):
        raise DerivativeUndefined(f"{f.name} is +inf at a probe point around {p!r}")
    return fp, f0, fm


def gateaux_fd(f: Functional, p: np.ndarray, phi: np.ndarray, t: float = 1e-5) -> float:
    """Central difference ``(F(p + t phi) - F(p - t phi)) / 2t``."""
    fp, _, fm = _probe(f, p, phi, t)
    return (fp - fm) / (2.0 * t)


def second_variation_fd(f: Functional, p: np.ndarray, phi: np.ndarray, t: float = 1e-4) -> float:
    """Second central difference ``(F(p + t phi) - 2F(p) + F(p - t phi)) / t^2``."""
    fp, f0, fm = _probe(f, p, phi, t)
    return (fp - 2.0 * f0 + fm) / (t * t)


def taylor_remainder(f: Functional, p: np.ndarray, phi: np.ndarray, eps: float) -> float:
    """Exact second-order Taylor remainder of ``F`` at ``p`` along ``eps * phi``.

    ``F(p + eps phi) - F(p) - eps <grad, phi> - eps^2/2 * hess(phi, phi)``,
    using the analytic derivatives.
    """
    if not f.twice_smooth:
        raise UnsupportedOperation(f"{f.name} lacks analytic first/second derivatives")
    p = np.asarray(p, dtype=float)
    phi = np.asarray(phi, dtype=float)
    f0 = evaluate(f, p)
    f1 = evaluate(f, p + eps * phi)
    if f0 == INF or f1 == INF:
        raise DerivativeUndefined(f"{f.name} is +inf at p or p + eps*phi")
    g = gradient(f, p)
    h = hessian_form(f, p, phi, phi)
    return f1 - f0 - eps * float(g @ phi) - 0.5 * eps * eps * h


# ---------------------------------------------------------------------------
# zoo

def _single(batch):
    # one code path for single and batched evaluation keeps them bit-identical
    def fn(x):
        return float(batch(np.asarray(x, dtype=float)[None, :])[0])
    return fn


def constant(value: float = 0.0) -> Functional:
    value = float(value)

    def batch(pts):
        return np.full(len(pts), value)

    return Functional(
        "constant", lambda p: value, value,
        grad=lambda x: np.zeros_like(x),
        hess_form=lambda x, a, b: 0.0,
        batch=batch, params={"value": value})


def quadratic(center: Sequence[float]) -> Functional:
    """``||x - c||_2^2``."""
    c = np.asarray(center, dtype=float)

    def batch(pts):
        r = np.asarray(pts, float) - c
        return np.einsum("ij,ij->i", r, r)

    return Functional(
        "quadratic", _single(batch), 0.0,
        grad=lambda x: 2.0 * (x - c),
        hess_form=lambda x, a, b: 2.0 * float(a @ b),
        batch=batch, params={"center": c.tolist()})


def quartic(center: Sequence[float]) -> Functional:
    """``sum_i (x_i - c_i)^4``."""
    c = np.asarray(center, dtype=float)

    def batch(pts):
        return np.sum((np.asarray(pts, float) - c) ** 4, axis=1)

    return Functional(
        "quartic", _single(batch), 0.0,
        grad=lambda x: 4.0 * (x - c) ** 3,
        hess_form=lambda x, a, b: 12.0 * float(np.sum((x - c) ** 2 * a * b)),
        batch=batch,
        params={"center": c.tolist()})


def _rosen_batch(pts: np.ndarray) -> np.ndarray:
    x = np.asarray(pts, dtype=float)
    if x.shape[1] == 1:
        return (1.0 - x[:, 0]) ** 2
    a, b = x[:, :-1], x[:, 1:]
    return np.sum(100.0 * (b - a * a) ** 2 + (1.0 - a) ** 2, axis=1)


def _rosen_grad(x: np.ndarray) -> np.ndarray:
    if x.size == 1:
        return np.array([-2.0 * (1.0 - x[0])])
    g = np.zeros_like(x)
    a, b = x[:-1], x[1:]
    g[:-1] += -400.0 * a * (b - a * a) - 2.0 * (1.0 - a)
    g[1:] += 200.0 * (b - a * a)
    return g


def _rosen_hess(x: np.ndarray) -> np.ndarray:
    n = x.size
    if n == 1:
        return np.array([[2.0]])
    h = np.zeros((n, n))
    a, b = x[:-1], x[1:]
    i = np.arange(n - 1)
    h[i, i] += 1200.0 * a * a - 400.0 * b + 2.0
    h[i + 1, i + 1] += 200.0
    h[i, i + 1] = h[i + 1, i] = -400.0 * a
    return h


def rosenbrock(dim: int) -> Functional:
    """Chained Rosenbrock function, minimum 0 at ``(1, ..., 1)``.

    In one dimension there is no coupling term and it reduces to ``(1 - x)^2``.
    """
    return Functional(
        "rosenbrock", _single(_rosen_batch), 0.0,
        grad=_rosen_grad,
        hess_form=lambda x, a, b: float(a @ _rosen_hess(x) @ b),
        batch=_rosen_batch, params={"dim": int(dim)})


def abs_sum(center: Sequence[float]) -> Functional:
    """``sum_i |x_i - c_i|``; nonsmooth, so no derivatives are attached."""
    c = np.asarray(center, dtype=float)

    def batch(pts):
        return np.sum(np.abs(np.asarray(pts, float) - c), axis=1)

    return Functional(
        "abs_sum", _single(batch), 0.0,
        batch=batch,
        params={"center": c.tolist()})


def box_quadratic(center: Sequence[float], lo: Sequence[float], hi: Sequence[float],
                  coeff: float = 1.0) -> Functional:
    """``coeff * ||x - c||_2^2`` on the box ``[lo, hi]``, ``+inf`` outside.

    Derivatives are those of the quadratic part; they are meaningful in the
    interior of the box only.
    """
    c = np.asarray(center, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    coeff = float(coeff)
    if np.any(lo > hi):
        raise ValueError("box needs lo <= hi")
    if coeff >= 0:
        nearest = np.clip(c, lo, hi)
        lb = coeff * float(np.sum((nearest - c) ** 2))
    else:
        far = np.maximum((lo - c) ** 2, (hi - c) ** 2)
        lb = coeff * float(np.sum(far))
        # the bound is attained at a corner; keep clear of rounding there
        lb -= 1e-12 * (1.0 + abs(lb))

    def batch(pts):
        x = np.asarray(pts, float)
        r = x - c
        vals = coeff * np.einsum("ij,ij->i", r, r)
        inside = np.all((x >= lo) & (x <= hi), axis=1)
        return np.where(inside, vals, INF)

    return Functional(
        "box_quadratic", _single(batch), lb,
        grad=lambda x: 2.0 * coeff * (x - c),
        hess_form=lambda x, a, b: 2.0 * coeff * float(a @ b),
        batch=batch,
        params={"center": c.tolist(), "lo": lo.tolist(), "hi": hi.tolist(), "coeff": coeff})


def table(values: Sequence[Any], lower_bound: Optional[float] = None) -> Functional:
    """Functional on a finite space given by a value per point (``"inf"`` allowed)."""
    vals = np.array([_parse_ext(v) for v in values], dtype=float)
    if np.any(np.isnan(vals)):
        raise EvaluationError("table values must not be NaN")
    finite = vals[np.isfinite(vals)]
    if finite.size == 0:
        raise NoFiniteValue("every table value is +inf")
    if np.any(vals == -INF):
        raise EvaluationError("table values must not be -inf")
    lb = float(finite.min()) if lower_bound is None else float(lower_bound)
    if lb > finite.min():
        raise EvaluationError(f"lower_bound {lb!r} exceeds the table value {finite.min()!r}")
    vals.setflags(write=False)

    def fn(i):
        return float(vals[i])

    return Functional("table", fn, lb, batch=lambda idx: vals[np.asarray(idx, dtype=int)],
                      params={"values": vals.tolist()})


def table_values(f: Functional, space: FiniteSpace) -> np.ndarray:
    """All values of ``f`` on a finite space, as one array."""
    return evaluate_many(f, np.arange(space.n_points))


def _parse_ext(v: Any) -> float:
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "+inf", "infinity"):
            return INF
        raise ValueError(f"unrecognized value token {v!r}")
    return float(v)


_ZOO = {"constant", "quadratic", "quartic", "rosenbrock", "abs_sum", "box_quadratic", "table"}


def functional_from_dict(d: dict, space: MetricSpace) -> Functional:
    """Build a functional from its JSON section, checked against ``space``."""
    name = d.get("name")
    params = dict(d.get("params") or {})
    if name not in _ZOO:
        raise SpecError("functional.name", f"unknown functional {name!r}")
    try:
        if name == "table":
            if not isinstance(space, FiniteSpace):
                raise SpecError("functional.name", "table functionals need a finite space")
            values = d.get("values", params.get("values"))
            if values is None or len(values) != space.n_points:
                raise SpecError("functional.values",
                                f"need exactly {space.n_points} values")
            f = table(values, d.get("lower_bound"))
        elif name == "constant":
            f = constant(params.get("value", 0.0))
        else:
            if not isinstance(space, NormedSpace):
                raise SpecError("functional.name", f"{name} needs a normed space")
            dim = space.dim
            center = params.get("center", [0.0] * dim)
            if len(center) != dim:
                raise SpecError("functional.params.center", f"length must be {dim}")
            if name == "quadratic":
                f = quadratic(center)
            elif name == "quartic":
                f = quartic(center)
            elif name == "abs_sum":
                f = abs_sum(center)
            elif name == "rosenbrock":
                f = rosenbrock(dim)
            else:
                lo = params.get("lo", [-1.0] * dim)
                hi = params.get("hi", [1.0] * dim)
                if len(lo) != dim or len(hi) != dim:
                    raise SpecError("functional.params", f"lo/hi must have length {dim}")
                f = box_quadratic(center, lo, hi, params.get("coeff", 1.0))
    except SpecError:
        raise
    except (TypeError, ValueError, EvaluationError, NoFiniteValue) as exc:
        raise SpecError("functional", str(exc)) from exc
    if name != "table" and "lower_bound" in d:
        lb = float(d["lower_bound"])
        # a user bound may only weaken the exact one
        f = Functional(f.name, f.fn, min(lb, f.lower_bound), f.grad, f.hess_form,
                       f.batch, f.params)
    return f
