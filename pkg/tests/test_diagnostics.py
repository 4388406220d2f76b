import json
import math

import numpy as np
import pytest

from wlra import datagen
from wlra.diagnostics import (
    AssumptionReport,
    alpha_beta,
    angles,
    check_assumptions,
    dist,
    rho,
    theory_bounds,
)
from wlra.errors import OrthogonalSubspaces
from wlra.instance import GroundTruth, WlraInstance

from conftest import orthonormal


def test_rho_examples():
    n = 9
    assert rho(np.ones((n, 1)) / math.sqrt(n)) == pytest.approx(1.0, abs=1e-15)
    # k = n: one row of ones has squared norm n, scaled by n/k = 1
    a = np.zeros((4, 4))
    a[0] = 1.0
    assert rho(a) == 4.0
    assert rho(np.eye(5)[:, :2]) == pytest.approx(5 / 2)


def test_rho_range_orthonormal():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n, k = int(rng.integers(2, 30)), 0
        k = int(rng.integers(1, n + 1))
        r = rho(orthonormal(n, k, rng))
        assert 1 - 1e-12 <= r <= n / k + 1e-12


def test_angles_identical_and_rotated(rng):
    y = orthonormal(10, 3, rng)
    a = angles(y, y)
    assert a.sin <= 1e-12 and a.cos == pytest.approx(1) and a.tan <= 1e-12 and a.dist <= 1e-12
    q = orthonormal(3, 3, rng)
    a = angles(y, y @ q)
    assert a.sin <= 1e-12 and a.cos == pytest.approx(1) and a.dist <= 1e-12


def test_angles_identities():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        y, x = orthonormal(10, 2, rng), orthonormal(10, 2, rng)
        a = angles(y, x)
        assert abs(a.sin ** 2 + a.cos ** 2 - 1) <= 1e-10
        assert abs(a.tan * a.cos - a.sin) <= 1e-10
        assert a.sin <= a.dist + 1e-12
        if a.tan <= 1:
            assert a.dist <= 2 * a.tan + 1e-10


def test_angles_known_plane():
    th = 0.3
    y = np.array([[1.0], [0.0]])
    x = np.array([[math.cos(th)], [math.sin(th)]])
    a = angles(y, x)
    assert a.sin == pytest.approx(math.sin(th), abs=1e-14)
    assert a.cos == pytest.approx(math.cos(th), abs=1e-14)
    assert a.dist == pytest.approx(2 * math.sin(th / 2), abs=1e-14)


def test_angles_orthogonal_raises():
    e = np.eye(4)
    with pytest.raises(OrthogonalSubspaces):
        angles(e[:, :2], e[:, 2:])
    assert dist(e[:, :2], e[:, 2:]) == pytest.approx(math.sqrt(2))


def test_angles_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        angles(np.ones((3, 1)), np.eye(3)[:, :1])


def test_dist_rotation_invariant(rng):
    for _ in range(20):
        y, x = orthonormal(12, 3, rng), orthonormal(12, 3, rng)
        q = orthonormal(3, 3, rng)
        assert abs(dist(y @ q, x) - dist(y, x)) <= 1e-10


def test_check_assumptions_all_ones(rng):
    n, k = 16, 2
    gt = GroundTruth(orthonormal(n, k, rng), np.array([2.0, 1.0]), orthonormal(n, k, rng))
    rep = check_assumptions(WlraInstance(gt.m_star(), np.ones((n, n)), k, gt))
    assert rep.gamma == 0.0
    assert rep.alpha == pytest.approx(1.0, abs=1e-12) and rep.beta == pytest.approx(1.0, abs=1e-12)
    assert rep.w_inf1 == n
    assert rep.tau == 2.0 and rep.sigma_min == 1.0
    assert rep.bounds_ok and rep.estimated == []


def test_check_assumptions_planted_gamma(rng):
    n, gamma = 32, 1e-3
    a, b = np.abs(rng.standard_normal(n)), np.abs(rng.standard_normal(n))
    w = np.ones((n, n)) + gamma * n * np.outer(a / np.linalg.norm(a), b / np.linalg.norm(b))
    rep = check_assumptions(WlraInstance(rng.standard_normal((n, n)), w, 2))
    assert abs(rep.gamma - gamma) <= 1e-8
    assert set(rep.estimated) == {"mu", "tau", "sigma_min", "alpha", "beta"}


def test_gamma_condition_on_datagen():
    # k = 1 sign bases have mu = 1, so the threshold is about alpha / 200 at n = 64
    inst = datagen.generate(datagen.GenSpec(64, 1, 1.0, 1e-3, 0.0, seed=0))
    rep = check_assumptions(inst)
    assert rep.gamma <= rep.gamma_threshold
    assert rep.gamma_condition_ok


def test_alpha_beta_against_loop(rng):
    n, k = 7, 2
    u, v = orthonormal(n, k, rng), orthonormal(n, k, rng)
    w = rng.random((n, n))
    lo, hi = math.inf, -math.inf
    for f in (u, v):
        for i in range(n):
            for d in (w[i], w[:, i]):
                e = np.linalg.eigvalsh(f.T @ np.diag(d) @ f)
                lo, hi = min(lo, e[0]), max(hi, e[-1])
    a, b = alpha_beta(u, v, w)
    assert a == pytest.approx(lo, abs=1e-14) and b == pytest.approx(hi, abs=1e-14)


def test_report_serialization(rng):
    inst = datagen.generate(datagen.GenSpec(16, 1, 1.0, 0.0, 1e-3, seed=1))
    rep = check_assumptions(inst)
    d = json.loads(rep.to_json())
    assert d["n"] == 16 and d["delta_noise"] == pytest.approx(1e-3)
    assert AssumptionReport(**d) == rep
    text = rep.to_text()
    assert "gamma = 0\n" in text and "estimated = -\n" in text


def _report(**kw):
    base = dict(n=100, k=2, mu=1.0, tau=1.0, gamma=0.0, alpha=1.0, beta=1.0, w_inf1=100.0,
                w_frob=100.0, sigma_min=1.0, delta_noise=1e-3)
    base.update(kw)
    return AssumptionReport(**base)


def test_theory_bounds_closed_forms():
    tb = theory_bounds(_report(), 2, eta_mode="svd")
    assert tb.eta == 1.0
    assert tb.delta_f == pytest.approx(2e5)
    assert tb.delta_d == 0.0
    tb = theory_bounds(_report(mu=3.0), 2)
    assert tb.eta == 6.0
    with pytest.raises(ValueError):
        theory_bounds(_report(), 2, eta_mode="other")


def test_delta_g_small_relative_to_delta_u():
    inst = datagen.generate(datagen.GenSpec(64, 2, 2.0, 1e-4, 1e-3, seed=2))
    rep = check_assumptions(inst)
    plain = theory_bounds(rep, 2)
    eps_sk = 1e-4 * plain.delta_f ** 2 * rep.delta_noise ** 2
    for d in (0.0, 0.1, 0.5):
        tb = theory_bounds(rep, 2, dist_yv=d, eps_sk=eps_sk)
        assert tb.delta_g <= 0.1 * tb.delta_u * (1 + 1e-12)
