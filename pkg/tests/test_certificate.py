import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_finite_problem
from ekeland import functional as fz
from ekeland.certificate import (FAIL, NOT_APPLICABLE, PASS, REMARK, SECOND_ORDER, CertItem,
                                 Certificate, certify, check_C1, check_C2, check_C3,
                                 check_C4, check_C5, check_remark, overall_status)
from ekeland.errors import RejectedStart
from ekeland.oracle import ekeland_set
from ekeland.solver import SolverConfig, run, run_rescaled, run_second_order
from ekeland.space import FiniteSpace, NormedSpace


def test_c1_same_point(f1):
    space, _ = f1
    it = check_C1(space, 1, 1, 0.4)
    assert it.passed and it.margin == 1.0


def test_c1_short_hop(f1):
    space, _ = f1
    assert check_C1(space, 4, 1, 0.4).margin == pytest.approx(0.7)


def test_c1_remark_bound():
    s = NormedSpace(1)
    it = check_C1(s, np.array([0.0]), np.array([0.6]), 0.25, mode=REMARK)
    assert it.id == "R1" and it.status == FAIL
    assert it.margin == pytest.approx(-0.1)


def test_c2(f1):
    space, f = f1
    assert check_C2(f, 1, 1).margin == 0.0
    assert check_C2(f, 4, 1).margin == pytest.approx(0.2)
    assert check_C2(f, 1, 4).status == FAIL


def test_c3_finite_is_exact(f1):
    space, f = f1
    vals = [3.0, 1.0, math.inf, 2.5, 1.2]
    for eps in (0.1, 0.4, 1.0):
        for v in (0, 1, 3, 4):
            it = check_C3(f, space, v, eps)
            expected = min(vals[w] + eps * space.dist[v][w] - vals[v] for w in range(5))
            assert it.margin == pytest.approx(expected, abs=1e-15)
            assert it.details["exhaustive"] and it.details["tested"] == 5
            assert it.passed == (v in ekeland_set(f, space, eps))


def test_c3_witness_is_the_violator(f1):
    space, f = f1
    it = check_C3(f, space, 4, 0.4)
    # F(b) + 0.4*0.3 - F(e) = -0.08
    assert it.margin == pytest.approx(-0.08)
    assert it.witnesses[0]["point"] == 1
    assert it.to_dict()["worst_witness"]["point"] == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.sampled_from([1e-2, 0.1, 1.0]), st.integers(0, 2 ** 32 - 1))
def test_c3_sound_on_random_finite(n, eps, seed):
    space, f, _ = random_finite_problem(np.random.default_rng(seed), n, eps)
    members = set(ekeland_set(f, space, eps))
    for v in range(n):
        if fz.evaluate(f, v) == math.inf:
            continue
        assert check_C3(f, space, v, eps).passed == (v in members)


def test_c3_minimizer_passes_on_normed():
    s = NormedSpace(3, "l1")
    f = fz.quadratic([0.5, 0.0, -1.0])
    it = check_C3(f, s, np.array([0.5, 0.0, -1.0]), 0.1, samples=3000, seed=4)
    assert it.passed and it.details["tested"] == 3001
    assert it.details["strict_margin"] > 0


def test_c3_detects_bad_candidate():
    s = NormedSpace(1)
    f = fz.quadratic([0.0])
    it = check_C3(f, s, np.array([1.0]), 0.1, samples=1000)
    assert it.status == FAIL and it.margin < -0.5


def test_c4_quadratic_by_hand():
    s = NormedSpace(1)
    it = check_C4(fz.quadratic([0.0]), s, np.array([0.04]), 0.1)
    assert it.details["dual_norm"] == pytest.approx(0.08)
    assert it.margin == pytest.approx(0.02, abs=1e-9)
    assert it.passed


def test_c4_minimizer_margin_is_eps():
    s = NormedSpace(2, "linf")
    it = check_C4(fz.rosenbrock(2), s, np.array([1.0, 1.0]), 0.05)
    assert it.details["analytic_margin"] == 0.05
    assert it.margin == pytest.approx(0.05, abs=1e-3)


def test_c4_not_applicable(f1):
    space, f = f1
    assert check_C4(f, space, 1, 0.4).status == NOT_APPLICABLE
    it = check_C4(fz.abs_sum([0.0]), NormedSpace(1), np.array([0.0]), 0.1)
    assert it.status == NOT_APPLICABLE and it.margin is None


def test_c4_failure():
    it = check_C4(fz.quadratic([0.0, 0.0]), NormedSpace(2), np.array([0.5, 0.0]), 0.1)
    assert it.status == FAIL and it.margin == pytest.approx(-0.9, abs=1e-6)


def test_c5_convex_passes():
    s = NormedSpace(2)
    it = check_C5(fz.quadratic([0.0, 0.0]), s, np.array([0.0, 0.0]), 0.1)
    assert it.passed and it.details["remainder_decay"]
    assert abs(it.details["remainder_ratio"]) <= 1e-12


def test_c5_concave_box_margin():
    s = NormedSpace(1)
    f = fz.box_quadratic([0.0], [-1.0], [1.0], -1.0)
    it = check_C5(f, s, np.array([0.0]), 0.1, directions=[np.array([1.0]), np.array([-1.0])])
    # -2 + 4 * 0.1 * 1 + 0
    assert it.margin == pytest.approx(-1.6, abs=1e-12)
    assert it.status == FAIL


def test_c5_quartic_remainder_decays():
    s = NormedSpace(2)
    it = check_C5(fz.quartic([0.0, 0.0]), s, np.array([0.1, -0.05]), 0.3)
    assert it.details["remainder_decay"] and it.passed


def test_c5_mode_gating(f1):
    s = NormedSpace(1)
    assert check_C5(fz.quadratic([0.0]), s, np.zeros(1), 0.1, mode="standard").status == NOT_APPLICABLE
    assert check_C5(fz.abs_sum([0.0]), s, np.zeros(1), 0.1).status == NOT_APPLICABLE
    space, f = f1
    assert check_C5(f, space, 1, 0.1).status == NOT_APPLICABLE
    assert check_C5(fz.quadratic([0.0]), s, np.zeros(1), 0.1, mode=REMARK).id == "R5"


def test_c5_skips_directions_leaving_domain():
    s = NormedSpace(1)
    f = fz.box_quadratic([0.0], [0.0], [1.0])
    it = check_C5(f, s, np.array([0.0]), 0.1, directions=[np.array([1.0]), np.array([-1.0])])
    assert it.details["skipped_directions"] == 1 and it.details["directions"] == 1


def test_remark_at_minimizer():
    s = NormedSpace(2)
    f = fz.quadratic([1.0, -1.0])
    x = np.array([1.0, -1.0])
    items = check_remark(f, s, x, x, 0.25, samples=2000)
    assert [it.id for it in items] == ["R1", "C2", "R3", "R4", "R5"]
    assert all(it.passed for it in items)


def test_remark_after_rescaled_run():
    s = NormedSpace(1)
    f = fz.quadratic([0.0])
    eps = 0.09
    u = np.array([0.2 * eps])
    v, tr = run_rescaled(f, s, u, SolverConfig(eps))
    cert = certify(f, s, u, v, eps, mode=REMARK, extra_points=tr.points, samples=2000)
    assert cert.overall == PASS
    # R3 is C3 in the metric sqrt(eps) * d
    r3 = check_C3(f, s.with_scale(math.sqrt(eps)), v, eps, tr.points, samples=2000)
    assert cert.item("R3").margin == r3.margin
    assert cert.item("R3").details["slope"] == pytest.approx(eps ** 1.5)


def test_remark_rejects_weak_start():
    s = NormedSpace(1)
    with pytest.raises(RejectedStart):
        check_remark(fz.quadratic([0.0]), s, np.array([0.3]), np.array([0.0]), 0.09)


def test_margins_monotone_in_eps(f1):
    space, f = f1
    for v in (0, 1, 3, 4):
        assert check_C3(f, space, v, 0.8).margin >= check_C3(f, space, v, 0.4).margin
    s = NormedSpace(2)
    g = fz.rosenbrock(2)
    p = np.array([0.9, 0.8])
    assert check_C4(g, s, p, 0.2).margin >= check_C4(g, s, p, 0.1).margin


@pytest.mark.parametrize("kind", ["l1", "l2", "linf"])
def test_c4_pass_implies_directional_bound(kind):
    s = NormedSpace(3, kind)
    f = fz.quadratic([0.0, 0.0, 0.0])
    v = np.array([0.01, -0.02, 0.015])
    it = check_C4(f, s, v, 0.1)
    assert it.passed
    g = f.grad(v)
    for phi in s.sample_directions(40, 9):
        assert -float(g @ phi) <= 0.1 * s.norm(phi) + 1e-12


def test_certify_standard_finite(f1):
    space, f = f1
    cert = certify(f, space, 4, 1, 0.4)
    assert [it.id for it in cert.items] == ["C1", "C2", "C3"]
    assert cert.overall == PASS


def test_certify_second_order_items():
    s = NormedSpace(2)
    f = fz.quadratic([0.0, 0.0])
    u = np.array([0.05, 0.0])
    v, tr = run_second_order(f, s, u, SolverConfig(0.3))
    cert = certify(f, s, u, v, 0.3, mode=SECOND_ORDER, extra_points=tr.points, samples=2000)
    assert [it.id for it in cert.items] == ["C1", "C2", "C3", "C4", "C5"]
    assert cert.item("C3").details["slope"] == pytest.approx(0.09)
    assert cert.item("C4").details["bound"] == pytest.approx(0.09)
    assert cert.overall == PASS


def test_certify_is_idempotent():
    s = NormedSpace(2)
    f = fz.rosenbrock(2)
    u = np.array([1.02, 1.03])
    v, tr = run(f, s, u, SolverConfig(0.1))
    a = certify(f, s, u, v, 0.1, extra_points=tr.points, samples=3000, seed=5)
    b = certify(f, s, u, v, 0.1, extra_points=tr.points, samples=3000, seed=5)
    assert a.to_json() == b.to_json()


def test_json_roundtrip():
    s = NormedSpace(2)
    f = fz.abs_sum([0.0, 0.0])
    u = np.array([0.02, 0.01])
    v, tr = run(f, s, u, SolverConfig(0.1))
    cert = certify(f, s, u, v, 0.1, extra_points=tr.points, samples=500)
    assert cert.overall == "partial"
    again = Certificate.from_dict(json.loads(cert.to_json()))
    assert again.to_json() == cert.to_json()
    bad = json.loads(cert.to_json())
    bad["overall"] = PASS
    with pytest.raises(ValueError):
        Certificate.from_dict(bad)


def test_overall_status_rules():
    p = CertItem("C1", PASS, 1.0)
    f = CertItem("C2", FAIL, -1.0)
    na = CertItem("C4", NOT_APPLICABLE)
    assert overall_status([p]) == PASS
    assert overall_status([p, na]) == "partial"
    assert overall_status([p, na, f]) == FAIL
    assert overall_status([na]) == "partial"


def test_tolerance_absorbs_roundoff():
    s = FiniteSpace(("a", "b"), np.array([[0.0, 1.0], [1.0, 0.0]]))
    # F(a) + eps*d - F(b) is -1e-12, inside 1e-9 * (1 + |F|)
    f = fz.table([1.0, 1.1 + 1e-12])
    it = check_C3(f, s, 1, 0.1)
    assert it.margin < 0 and it.passed


def test_c5_decay_catches_inconsistent_derivatives():
    # gradient claimed to be 0 for x**2: R(e) = 2 e x phi + e**2 phi**2 grows like 1/e after division
    f = fz.Functional("wrong_grad", lambda x: float(x[0] ** 2), 0.0,
                      grad=lambda x: np.zeros(1), hess_form=lambda x, a, b: 2.0 * float(a @ b))
    it = check_C5(f, NormedSpace(1), np.array([1.0]), 0.1, directions=[np.array([1.0])])
    assert not it.details["remainder_decay"] and it.status == FAIL


def test_c5_decay_tolerates_sign_change_of_remainder():
    # quartic at x - c = -0.05, phi = 1: R/e**2 = e (-0.2 + e) vanishes near e = 0.2
    s = NormedSpace(1)
    it = check_C5(fz.quartic([0.0]), s, np.array([-0.05]), 0.2, directions=[np.array([1.0])])
    assert it.details["remainder_decay"] and not it.details["remainder_monotone"]
    assert it.passed
