"""Problem files: one JSON document describing space, functional, start and settings.

Example::

    {
      "name": "f1",
      "space": {"kind": "finite", "labels": ["a", "b"], "dist": [[0, 1], [1, 0]]},
      "functional": {"name": "table", "values": [1.0, 0.5], "lower_bound": 0.5},
      "start": "a",
      "epsilon": 0.4,
      "mode": "standard",
      "solver": {"max_iters": 100, "sampler": {"kind": "exhaustive"}},
      "certificate": {"samples": 10000, "seed": 0},
      "expect": "pass"
    }

``candidate`` (optional) skips the solver and certifies the given point
directly, which is how negative controls are written.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .certificate import DEFAULT_SAMPLES, MODES
from .errors import DomainError, EkelandError, SpaceValidationError, SpecError
from .functional import Functional, functional_from_dict
from .solver import Exhaustive, LocalBall, SolverConfig
from .space import FiniteSpace, MetricSpace, space_from_dict

EXPECTATIONS = ("pass", "partial", "fail", "reject", "invalid")
_SECTIONS = {"name", "space", "functional", "start", "epsilon", "mode", "solver",
             "certificate", "candidate", "expect", "description"}


@dataclass
class Problem:
    name: str
    space: MetricSpace
    functional: Functional
    start: Any
    epsilon: float
    mode: str = "standard"
    solver: SolverConfig = None
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    directions: Optional[int] = None
    candidate: Any = None
    expect: str = "pass"
    source: dict = field(default_factory=dict, repr=False)


def _point(space: MetricSpace, raw: Any, where: str) -> Any:
    try:
        if isinstance(space, FiniteSpace):
            if isinstance(raw, str):
                return space.index_of(raw)
            return space.check_point(raw)
        return space.check_point(np.asarray(raw, dtype=float))
    except (DomainError, TypeError, ValueError) as exc:
        raise SpecError(where, str(exc)) from exc


def _sampler(raw: Any) -> Any:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise SpecError("solver.sampler", "must be an object")
    kind = raw.get("kind")
    if kind == "exhaustive":
        return Exhaustive()
    if kind == "local_ball":
        try:
            return LocalBall(
                radius_factor=float(raw.get("radius_factor", 1.0)),
                samples_per_iter=int(raw.get("samples_per_iter", 32)),
                seed=int(raw.get("seed", 0)),
                radius_levels=int(raw.get("radius_levels", 48)),
                use_gradient=bool(raw.get("use_gradient", True)))
        except (TypeError, ValueError) as exc:
            raise SpecError("solver.sampler", str(exc)) from exc
    raise SpecError("solver.sampler.kind", f"unknown sampler {kind!r}")


def problem_from_dict(d: Any, default_name: str = "problem") -> Problem:
    """Validate a parsed problem document. Raises :class:`SpecError` naming the bad field."""
    if not isinstance(d, dict):
        raise SpecError("<root>", "problem must be a JSON object")
    unknown = sorted(set(d) - _SECTIONS)
    if unknown:
        raise SpecError(unknown[0], "unknown section")
    for key in ("space", "functional", "start", "epsilon"):
        if key not in d:
            raise SpecError(key, "missing section")
    if not isinstance(d["space"], dict):
        raise SpecError("space", "must be an object")
    try:
        space = space_from_dict(d["space"])
    except (SpaceValidationError, TypeError, ValueError) as exc:
        raise SpecError("space", str(exc)) from exc
    if not isinstance(d["functional"], dict):
        raise SpecError("functional", "must be an object")
    f = functional_from_dict(d["functional"], space)

    eps = d["epsilon"]
    if isinstance(eps, bool) or not isinstance(eps, (int, float)) or not math.isfinite(eps) or eps <= 0:
        raise SpecError("epsilon", f"must be a positive number, got {eps!r}")
    mode = str(d.get("mode", "standard")).replace("-", "_")
    if mode not in MODES:
        raise SpecError("mode", f"must be one of {MODES}")
    expect = d.get("expect", "pass")
    if expect not in EXPECTATIONS:
        raise SpecError("expect", f"must be one of {EXPECTATIONS}")

    sol = d.get("solver") or {}
    if not isinstance(sol, dict):
        raise SpecError("solver", "must be an object")
    try:
        cfg = SolverConfig(float(eps), max_iters=int(sol.get("max_iters", 10_000)),
                           step_tolerance=sol.get("step_tolerance"),
                           sampler=_sampler(sol.get("sampler")))
        cfg.resolved(space, float(eps))
    except SpecError:
        raise
    except (TypeError, ValueError) as exc:
        raise SpecError("solver", str(exc)) from exc

    cert = d.get("certificate") or {}
    if not isinstance(cert, dict):
        raise SpecError("certificate", "must be an object")
    try:
        samples = int(cert.get("samples", DEFAULT_SAMPLES))
        seed = int(cert.get("seed", 0))
        directions = cert.get("directions")
        directions = None if directions is None else int(directions)
    except (TypeError, ValueError) as exc:
        raise SpecError("certificate", str(exc)) from exc

    start = _point(space, d["start"], "start")
    candidate = None
    if d.get("candidate") is not None:
        candidate = _point(space, d["candidate"], "candidate")
    return Problem(str(d.get("name", default_name)), space, f, start, float(eps), mode, cfg,
                   samples, seed, directions, candidate, expect, d)


def load_problem(path: str | Path) -> Problem:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError("<file>", str(exc)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError("<json>", f"line {exc.lineno}: {exc.msg}") from exc
    try:
        return problem_from_dict(doc, default_name=path.stem)
    except SpecError:
        raise
    except EkelandError as exc:
        raise SpecError("<problem>", str(exc)) from exc
