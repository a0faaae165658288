import math

import numpy as np
import pytest

import lawbound as lb


def test_random_field_is_divergence_free_and_deterministic():
    u = lb.random_divfree(32, 2.0, 8, 5)
    assert u.shape == (2, 32, 32)
    assert lb.divergence_norm(u) < 1e-10
    assert np.array_equal(u, lb.random_divfree(32, 2.0, 8, 5))


def test_leray_is_idempotent():
    rng = np.random.default_rng(0)
    f = rng.standard_normal((2, 16, 16))
    p = lb.leray_project(f)
    assert np.allclose(lb.leray_project(p), p, atol=1e-12)
    assert lb.l2_norm(p) <= lb.l2_norm(f) + 1e-12


def test_projection_monotone_and_coverage():
    a = [lb.random_divfree(16, 2.0, 6, s) for s in range(6)]
    b = [lb.random_divfree(16, 2.0, 6, 100 + s) for s in range(6)]
    pa = [lb.project_leq(u, 3) for u in a]
    pb = [lb.project_leq(u, 3) for u in b]
    assert lb.w2(pa, pb) <= lb.w2(a, b) + 1e-9
    assert lb.w1(a, b) <= lb.w2(a, b) + 1e-12
    m = lb.capacity_coverage(a, b, 3)
    assert m["satisfied"] and m["W2"] <= m["bound"] + 1e-9


def test_taylor_green_is_steady():
    u = lb.taylor_green(32)
    v = lb.evolve(u, 0.1, dt=0.01, K_init=8)
    assert np.max(np.abs(u - v)) < 1e-8


def test_gronwall_forms():
    d = lb.gronwall_recursion(1.0, [2.0, 0.5], [1.0, 0.0])
    assert d == [1.0, 3.0, 1.5]
    assert lb.rollout_bound(0.5, [0.0, 0.0, 0.0], [0.1, 0.1, 0.1])[-1] == pytest.approx(0.8)
    assert lb.constant_coefficient_bound(0.5, 0.0, 0.1, 3) == pytest.approx(0.8)


def test_scores():
    assert lb.crps_point([0.0, 1.0], 0.0) == pytest.approx(0.25)
    assert lb.crps([0.0], [1.0]) == pytest.approx(1.0)
    assert lb.w1_1d([0.0], [1.0]) == pytest.approx(1.0)
    p = [[0.0], [1.0], [3.0]]
    q = [[0.5], [2.0]]
    assert lb.energy_score(p, q) == pytest.approx(lb.crps([0.0, 1.0, 3.0], [0.5, 2.0]), abs=1e-12)


def test_pf_identity_gap():
    r = lb.pf_identity(4, "vp", 2.0, 0.1, 3, [0.0, 0.5, 1.0])
    assert r["max_rel_gap"] <= 1e-10
    assert all(x >= 0 for x in r["score_side"])


def test_errors_become_python_exceptions():
    with pytest.raises(lb.LawboundError):
        lb.pf_identity(4, "other", 1.0, 0.1, 1, [0.0])
    with pytest.raises(lb.LawboundError):
        lb.w2([lb.random_divfree(16, 2.0, 4, 1)], [lb.random_divfree(32, 2.0, 4, 1)])


def test_quick_criterion_report():
    r = lb.run_criterion(6, quick=True, seed=1)
    assert r["satisfied"]
    assert lb.criterion_name(6)
    assert all(math.isfinite(c["value"]) for c in r["checks"])
