"""Numeric certificates for the conclusions of the Ekeland principle at a point ``v``.

Every check returns a :class:`CertItem` whose ``margin`` is the signed slack
of one inequality (negative means violated).  An item passes when
``margin >= -tol`` with ``tol = 1e-9 * (1 + |F(v)|)``.

Item ids:

========  ====================================================================
C1 / R1   ``d(u, v) <= 1``  /  ``d(u, v) <= sqrt(eps)``
C2        ``F(v) <= F(u)``
C3 / R3   ``F(v) <= F(w) + eps d(v, w)`` for all w  /  slope ``eps**1.5``
C4 / R4   dual norm of the gradient ``<= eps``  /  ``<= eps**1.5``
C5 / R5   ``hess(v)(phi, phi) >= -4 c ||phi|| - 2 R / eps**2`` with ``c = eps``
          / ``c = sqrt(eps)`` and ``R`` the Taylor remainder at step ``eps``
========  ====================================================================
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .errors import DerivativeUndefined, RejectedStart
from .functional import (INF, Functional, evaluate, evaluate_many, gradient,
                         hessian_form, taylor_remainder, table_values)
from .space import FiniteSpace, MetricSpace, NormedSpace

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not_applicable"

STANDARD = "standard"
SECOND_ORDER = "second_order"
REMARK = "remark"
MODES = (STANDARD, SECOND_ORDER, REMARK)

DEFAULT_SAMPLES = 10_000
FD_STEP = 1e-5
DECAY_FACTORS = (1.0, 0.1, 0.01)
_ROUNDOFF = 8 * np.finfo(float).eps


def tolerance(fv: float) -> float:
    return 1e-9 * (1.0 + abs(fv))


@dataclass
class CertItem:
    id: str
    status: str
    margin: Optional[float] = None
    witnesses: list[dict] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "status": self.status,
            "margin": self.margin,
            "worst_witness": self.witnesses[0] if self.witnesses else None,
            "witnesses": self.witnesses,
            "details": self.details,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CertItem":
        return cls(d["id"], d["status"], d["margin"], list(d.get("witnesses", [])),
                   dict(d.get("details", {})))


@dataclass
class Certificate:
    items: list[CertItem]
    epsilon: float
    mode: str = STANDARD
    overall: str = field(init=False)

    def __post_init__(self) -> None:
        self.overall = overall_status(self.items)

    def item(self, item_id: str) -> CertItem:
        for it in self.items:
            if it.id == item_id:
                return it
        raise KeyError(item_id)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "epsilon": self.epsilon,
                "items": [it.to_dict() for it in self.items], "overall": self.overall}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Certificate":
        cert = cls([CertItem.from_dict(it) for it in d["items"]], d["epsilon"], d["mode"])
        if cert.overall != d["overall"]:
            raise ValueError(f"overall {d['overall']!r} disagrees with items ({cert.overall!r})")
        return cert


def overall_status(items: Sequence[CertItem]) -> str:
    applicable = [it for it in items if it.status != NOT_APPLICABLE]
    if any(it.status == FAIL for it in applicable):
        return FAIL
    if len(applicable) < len(items):
        return "partial"
    return PASS


def _item(item_id: str, margin: float, fv: float, witnesses=(), **details) -> CertItem:
    margin = float(margin)
    status = PASS if margin >= -tolerance(fv) else FAIL
    return CertItem(item_id, status, margin, list(witnesses), details)


def _na(item_id: str, reason: str) -> CertItem:
    return CertItem(item_id, NOT_APPLICABLE, None, [], {"reason": reason})


def _num(x: float) -> Optional[float]:
    x = float(x)
    return x if math.isfinite(x) else None


# ---------------------------------------------------------------------------
# individual items

def check_C1(s: MetricSpace, u: Any, v: Any, eps: float, mode: str = STANDARD,
             fv: float = 0.0) -> CertItem:
    d = s.distance(u, v)
    if mode == REMARK:
        return _item("R1", math.sqrt(eps) - d, fv, bound=math.sqrt(eps), distance=d)
    return _item("C1", 1.0 - d, fv, bound=1.0, distance=d)


def check_C2(f: Functional, u: Any, v: Any) -> CertItem:
    fu, fv = evaluate(f, u), evaluate(f, v)
    return _item("C2", fu - fv, fv, f_u=fu, f_v=fv)


def _ball_samples(s: NormedSpace, v: np.ndarray, radius: float, count: int,
                  seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    dirs = s.random_unit(rng, count)
    half = count // 2
    # log-uniform radii probe small scales, uniform radii fill the ball
    r = np.empty(count)
    r[:half] = radius * 10.0 ** rng.uniform(-12.0, 0.0, half)
    r[half:] = radius * rng.uniform(0.0, 1.0, count - half)
    return v[None, :] + r[:, None] * dirs


def check_C3(f: Functional, s: MetricSpace, v: Any, eps: float,
             extra_points: Iterable[Any] = (), samples: int = DEFAULT_SAMPLES,
             seed: int = 0, item_id: str = "C3") -> CertItem:
    """Minimum over tested ``w`` of ``F(w) + eps d(v, w) - F(v)``.

    Finite spaces: every point is tested and the result is exact.  Normed
    spaces: ``extra_points`` (typically the solver trace) plus ``samples``
    seeded points of the ball outside of which no violation can exist.
    ``w = v`` is always among the tested points, so a passing margin is 0
    up to rounding; ``details["strict_margin"]`` excludes ``w = v``.
    """
    fv = evaluate(f, v)
    if isinstance(s, FiniteSpace):
        v = s.check_point(v)
        vals = table_values(f, s)
        contrib = vals + eps * s.distances_from(v) - fv
        pts = np.arange(s.n_points)
        radius = None
    else:
        v = s.check_point(v)
        radius = (fv - f.lower_bound) / (eps * s.metric_scale)
        if not radius > 0:
            radius = 1.0
        extra = [s.check_point(p) for p in extra_points]
        parts = [v[None, :]]
        if extra:
            parts.append(np.array(extra))
        if samples > 0:
            parts.append(_ball_samples(s, v, radius, samples, seed))
        pts = np.concatenate(parts)
        vals = evaluate_many(f, pts)
        contrib = vals + eps * s.distances_from(v, pts) - fv
    order = np.argsort(contrib, kind="stable")
    margin = float(contrib[order[0]])
    witnesses = [{"point": s.point_to_json(pts[k]), "value": _num(contrib[k])}
                 for k in order[:3]]
    is_v = (pts == v) if isinstance(s, FiniteSpace) else np.all(pts == v, axis=1)
    others = contrib[~is_v]
    strict = _num(others.min()) if others.size else None
    details = {"tested": int(len(pts)), "slope": eps * s.metric_scale,
               "strict_margin": strict, "exhaustive": isinstance(s, FiniteSpace)}
    if radius is not None:
        details["sample_radius"] = float(radius)
        details["seed"] = int(seed)
    return _item(item_id, margin, fv, witnesses, **details)


def check_C4(f: Functional, s: MetricSpace, v: Any, eps: float,
             directions: Optional[Sequence[np.ndarray]] = None, t: float = FD_STEP,
             item_id: str = "C4") -> CertItem:
    """Dual-norm bound on the gradient, cross-checked by difference quotients.

    The bound is ``eps * metric_scale``, the slope of the perturbation in the
    space's metric.  For each direction ``phi`` the one-sided quotients
    ``(F(v) - F(v +- t phi)) / t`` must not exceed ``slope * ||phi||``; the
    analytic bound and the quotients are both folded into the margin.
    """
    if not isinstance(s, NormedSpace):
        return _na(item_id, "derivatives need a normed space")
    if not f.smooth:
        return _na(item_id, "functional has no analytic gradient")
    v = s.check_point(v)
    fv = evaluate(f, v)
    slope = eps * s.metric_scale
    g = gradient(f, v)
    dn = s.dual_norm(g)
    analytic = slope - dn
    if directions is None:
        directions = s.sample_directions(2 * s.dim + 16, 0)
    fd_margin = INF
    central_worst = -INF
    worst = None
    skipped = 0
    for phi in directions:
        phi = np.asarray(phi, dtype=float)
        fp, fm = evaluate(f, v + t * phi), evaluate(f, v - t * phi)
        if fp == INF or fm == INF:
            skipped += 1
            continue
        bound = slope * s.norm(phi)
        q = max((fv - fp) / t, (fv - fm) / t)
        if bound - q < fd_margin:
            fd_margin = bound - q
            worst = phi
        central_worst = max(central_worst, abs(fp - fm) / (2 * t) - bound)
    margin = min(analytic, fd_margin)
    witnesses = []
    if worst is not None:
        witnesses.append({"direction": [float(x) for x in worst], "value": _num(fd_margin)})
    return _item(item_id, margin, fv, witnesses, bound=slope, dual_norm=dn,
                 analytic_margin=analytic, fd_margin=_num(fd_margin),
                 central_fd_excess=_num(central_worst), fd_step=t,
                 directions=len(directions), skipped_directions=skipped)


def check_C5(f: Functional, s: MetricSpace, v: Any, eps: float,
             directions: Optional[Sequence[np.ndarray]] = None, mode: str = SECOND_ORDER,
             decay_factors: Sequence[float] = DECAY_FACTORS) -> CertItem:
    """Lower bound on the second variation, carrying the measured Taylor remainder.

    ``margin = min_phi hess(phi, phi) + 4 c ||phi|| + 2 R(eps) / eps**2`` with
    ``c = eps`` (``c = sqrt(eps)`` and id R5 in remark mode).  The remainder
    ratio ``|R| / e**2`` is measured along ``e = eps * decay_factors``; the
    item fails when the ratio at the finest scale exceeds every coarser one.
    ``details["remainder_monotone"]`` reports whether the whole sequence was
    nonincreasing.
    """
    item_id = "R5" if mode == REMARK else "C5"
    if mode == STANDARD:
        return _na(item_id, "second-order bound needs a point from the eps**2 run")
    if not isinstance(s, NormedSpace):
        return _na(item_id, "derivatives need a normed space")
    if not f.twice_smooth:
        return _na(item_id, "functional lacks analytic second derivatives")
    v = s.check_point(v)
    fv = evaluate(f, v)
    c = math.sqrt(eps) if mode == REMARK else eps
    if directions is None:
        directions = s.sample_directions(2 * s.dim + 16, 0)
    g = gradient(f, v)
    margin = INF
    worst = None
    worst_ratio = 0.0
    decay_ok = monotone = True
    used = skipped = 0
    for phi in directions:
        phi = np.asarray(phi, dtype=float)
        try:
            rems = [taylor_remainder(f, v, phi, eps * k) for k in decay_factors]
        except DerivativeUndefined:
            skipped += 1
            continue
        used += 1
        h = hessian_form(f, v, phi, phi)
        m = h + 4.0 * c * s.norm(phi) + 2.0 * rems[0] / eps ** 2
        if m < margin:
            margin, worst = m, phi
        ratios = []
        for k, r in zip(decay_factors, rems):
            e = eps * k
            scale = abs(fv) + abs(evaluate(f, v + e * phi)) + e * abs(float(g @ phi)) + e * e * abs(h)
            ratios.append((abs(r) / e ** 2, _ROUNDOFF * scale / e ** 2))
        worst_ratio = max(worst_ratio, ratios[0][0])
        slack = tolerance(fv)
        for (prev, prev_err), (cur, cur_err) in zip(ratios, ratios[1:]):
            if cur > prev + prev_err + cur_err + slack:
                monotone = False
        # a sign change of R can lift one coarse ratio above its neighbour; growth
        # toward the finest scale is what contradicts R = o(e**2)
        fine, fine_err = ratios[-1]
        peak, peak_err = max(ratios[:-1])
        if fine > peak + peak_err + fine_err + slack:
            decay_ok = False
    if used == 0:
        return _na(item_id, "every probe v + eps*phi has F = +inf")
    witnesses = [{"direction": [float(x) for x in worst], "value": _num(margin)}]
    item = _item(item_id, margin, fv, witnesses, coefficient=c, remainder_ratio=worst_ratio,
                 remainder_decay=decay_ok, remainder_monotone=monotone,
                 directions=used, skipped_directions=skipped)
    if not decay_ok:
        item.status = FAIL
    return item


# ---------------------------------------------------------------------------
# whole certificates

def check_remark(f: Functional, s: MetricSpace, u: Any, v: Any, eps: float,
                 extra_points: Iterable[Any] = (), samples: int = DEFAULT_SAMPLES,
                 seed: int = 0, directions: Optional[Sequence[np.ndarray]] = None) -> list[CertItem]:
    """Items R1, C2, R3, R4, R5 for a point from the rescaled run.

    ``s`` is the unscaled space.  R3 and R4 are evaluated in the metric
    ``sqrt(eps) * d`` at level ``eps``, i.e. with slope ``eps**1.5`` in ``d``.
    """
    fu = evaluate(f, u)
    if not fu < f.lower_bound + eps * eps:
        raise RejectedStart(
            f"hypothesis F(u) < lower_bound + eps**2 fails: F(u) = {fu!r}, "
            f"lower_bound = {f.lower_bound!r}, eps = {eps!r}")
    fv = evaluate(f, v)
    scaled = s.with_scale(s.metric_scale * math.sqrt(eps))
    items = [check_C1(s, u, v, eps, REMARK, fv), check_C2(f, u, v),
             check_C3(f, scaled, v, eps, extra_points, samples, seed, item_id="R3")]
    if isinstance(s, NormedSpace):
        items.append(check_C4(f, scaled, v, eps, directions, item_id="R4"))
        items.append(check_C5(f, s, v, eps, directions, mode=REMARK))
    return items


def certify(f: Functional, s: MetricSpace, u: Any, v: Any, eps: float,
            mode: str = STANDARD, extra_points: Iterable[Any] = (),
            samples: int = DEFAULT_SAMPLES, seed: int = 0,
            n_directions: Optional[int] = None) -> Certificate:
    """Build the certificate for ``v`` (reached from ``u``) in the given mode.

    standard:      C1, C2, C3 at eps, and C4 at eps on normed spaces.
    second_order:  C1, C2, C3 and C4 at eps**2, C5 at eps (normed only).
    remark:        R1, C2, R3, and R4, R5 on normed spaces.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    extra_points = list(extra_points)
    directions = None
    if isinstance(s, NormedSpace):
        n = n_directions if n_directions is not None else 2 * s.dim + 16
        directions = s.sample_directions(n, seed)
    if mode == REMARK:
        items = check_remark(f, s, u, v, eps, extra_points, samples, seed, directions)
        return Certificate(items, eps, mode)
    level = eps * eps if mode == SECOND_ORDER else eps
    fv = evaluate(f, v)
    items = [check_C1(s, u, v, level, mode, fv), check_C2(f, u, v),
             check_C3(f, s, v, level, extra_points, samples, seed)]
    if isinstance(s, NormedSpace):
        items.append(check_C4(f, s, v, level, directions))
        if mode == SECOND_ORDER:
            items.append(check_C5(f, s, v, eps, directions, mode=SECOND_ORDER))
    return Certificate(items, eps, mode)
