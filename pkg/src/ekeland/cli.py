"""Command-line front end.

    ekeland run PROBLEM.json [--mode ...] [--epsilon E] [--seed S] [--samples N] [--out DIR]
    ekeland suite DIR [same flags]

Exit codes: 0 certificate passes (or is partial with ``--allow-partial``),
1 certificate fails, 2 the start point fails the hypothesis, 3 malformed input.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from . import solver
from .certificate import MODES, REMARK, SECOND_ORDER, Certificate, certify
from .errors import EkelandError, RejectedStart, SpecError
from .oracle import ekeland_set, verify_against_oracle
from .problem import Problem, load_problem
from .solver import LocalBall
from .space import FiniteSpace

EXIT_PASS, EXIT_FAIL, EXIT_REJECTED, EXIT_INVALID = 0, 1, 2, 3


@dataclass
class Outcome:
    name: str
    label: str  # pass | partial | fail | reject | invalid
    exit_code: int
    message: str = ""
    certificate: Optional[Certificate] = None
    expect: Optional[str] = None

    @property
    def worst_margin(self) -> Optional[float]:
        if self.certificate is None:
            return None
        margins = [it.margin for it in self.certificate.items if it.margin is not None]
        return min(margins) if margins else None


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _apply_flags(p: Problem, args: argparse.Namespace) -> Problem:
    if args.epsilon is not None:
        p = replace(p, epsilon=args.epsilon, solver=replace(p.solver, epsilon=args.epsilon))
    if args.mode is not None:
        p = replace(p, mode=args.mode)
    if args.samples is not None:
        p = replace(p, samples=args.samples)
    if args.seed is not None:
        p = replace(p, seed=args.seed)
        if isinstance(p.solver.sampler, LocalBall):
            p = replace(p, solver=replace(p.solver, sampler=replace(p.solver.sampler, seed=args.seed)))
    return p


def solve(p: Problem):
    """Run the solver in the problem's mode; returns ``(v, trace)``."""
    if p.candidate is not None:
        level = {SECOND_ORDER: p.epsilon ** 2, REMARK: p.epsilon ** 2}.get(p.mode, p.epsilon)
        solver.check_hypothesis(p.functional, p.space, p.start, level, strict=p.mode == REMARK)
        return p.candidate, None
    if p.mode == SECOND_ORDER:
        return solver.run_second_order(p.functional, p.space, p.start, p.solver)
    if p.mode == REMARK:
        return solver.run_rescaled(p.functional, p.space, p.start, p.solver)
    return solver.run(p.functional, p.space, p.start, p.solver)


def _oracle_report(p: Problem, v) -> dict:
    s = p.space
    if p.mode == SECOND_ORDER:
        level = p.epsilon ** 2
    elif p.mode == REMARK:
        level, s = p.epsilon, s.with_scale(s.metric_scale * math.sqrt(p.epsilon))
    else:
        level = p.epsilon
    return {"level": level, "ekeland_set": ekeland_set(p.functional, s, level),
            "verified": verify_against_oracle(p.functional, s, p.start, level, v)}


def _raw_expect(path: Path) -> Optional[str]:
    # a file that fails validation may still declare itself a negative test
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError):
        return None
    return doc.get("expect") if isinstance(doc, dict) else None


def run_problem(problem_path: str | Path, args: argparse.Namespace, out: Optional[Path] = None) -> Outcome:
    problem_path = Path(problem_path)
    try:
        p = _apply_flags(load_problem(problem_path), args)
    except SpecError as exc:
        return Outcome(problem_path.stem, "invalid", EXIT_INVALID, f"invalid problem: {exc}",
                       expect=_raw_expect(problem_path))
    try:
        v, trace = solve(p)
        cert = certify(p.functional, p.space, p.start, v, p.epsilon, p.mode,
                       extra_points=trace.points if trace else (),
                       samples=p.samples, seed=p.seed, n_directions=p.directions)
    except RejectedStart as exc:
        return Outcome(p.name, "reject", EXIT_REJECTED, f"rejected start: {exc}", expect=p.expect)
    except EkelandError as exc:
        return Outcome(p.name, "invalid", EXIT_INVALID, f"{type(exc).__name__}: {exc}",
                       expect=p.expect)

    out = Path(out if out is not None else args.out)
    write_atomic(out / f"{p.name}.certificate.json", cert.to_json())
    if trace is not None:
        write_atomic(out / f"{p.name}.trace.json",
                     json.dumps(trace.to_dict(p.space), indent=2, allow_nan=False) + "\n")
    if isinstance(p.space, FiniteSpace):
        write_atomic(out / f"{p.name}.oracle.json",
                     json.dumps(_oracle_report(p, v), indent=2) + "\n")

    if cert.overall == "pass":
        code = EXIT_PASS
    elif cert.overall == "partial":
        code = EXIT_PASS if args.allow_partial else EXIT_FAIL
    else:
        code = EXIT_FAIL
    failed = [it.id for it in cert.items if it.status == "fail"]
    msg = f"{p.name}: {cert.overall}" + (f" (failed: {', '.join(failed)})" if failed else "")
    return Outcome(p.name, cert.overall, code, msg, cert, p.expect)


def run_suite(directory: str | Path, args: argparse.Namespace) -> int:
    directory = Path(directory)
    files = sorted(directory.glob("*.json")) if directory.is_dir() else []
    if not files:
        print(f"no problem files in {directory}", file=sys.stderr)
        return EXIT_INVALID
    unexpected = 0
    print(f"{'problem':<32} {'expect':<8} {'outcome':<8} {'worst margin':>14}  result")
    for path in files:
        o = run_problem(path, args, Path(args.out) / path.stem)
        expect = o.expect or "pass"
        ok = o.label == expect
        unexpected += not ok
        wm = "" if o.worst_margin is None else f"{o.worst_margin:.6g}"
        print(f"{o.name:<32} {expect:<8} {o.label:<8} {wm:>14}  {'ok' if ok else 'UNEXPECTED'}")
        if not ok and o.message:
            print(f"    {o.message}")
    print(f"{len(files) - unexpected}/{len(files)} problems met their expectation")
    return EXIT_FAIL if unexpected else EXIT_PASS


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--epsilon", type=float, help="override the problem's epsilon")
    common.add_argument("--mode", choices=MODES, type=lambda m: m.replace("-", "_"),
                        help="standard, second-order or remark")
    common.add_argument("--seed", type=int, help="seed for sampled witnesses and directions")
    common.add_argument("--samples", type=int, help="sampled C3 witnesses on normed spaces")
    common.add_argument("--out", default="reports", help="report directory (default: reports)")
    common.add_argument("--allow-partial", action="store_true",
                        help="exit 0 when some items are not applicable")
    ap = argparse.ArgumentParser(
        prog="ekeland", description="Find an Ekeland point and certify it numerically.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="solve and certify one problem")
    r.add_argument("problem", help="problem file (JSON)")
    s = sub.add_parser("suite", parents=[common], help="run every problem in a directory")
    s.add_argument("directory")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "suite":
        return run_suite(args.directory, args)
    o = run_problem(args.problem, args)
    print(o.message, file=sys.stdout if o.exit_code in (EXIT_PASS, EXIT_FAIL) else sys.stderr)
    return o.exit_code


if __name__ == "__main__":
    sys.exit(main())
