"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wlra import backend, datagen
from wlra.altmin import SolveConfig, clip, initial_factor, solve
from wlra.cli import bench_cell
from wlra.diagnostics import angles, check_assumptions, dist
from wlra.linalg import spectral_norm
from wlra.multiresponse import MultiResponseProblem, objective, solve_exact
from wlra.regression import RegressionProblem, high_precision_solve
from wlra.sketch import SrhtSketch, embedding_distortion

from conftest import orthonormal
from oracles import backward_error, lstsq_normal, per_row_exact


def _slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


# 1 -------------------------------------------------------------------------
def test_c01_subspace_embedding(criterion):
    n, k, eps = 512, 8, 0.5
    m = math.ceil(eps ** -2 * k * math.log(n))
    start = time.perf_counter()
    good = 0
    for seed in range(100):
        u = orthonormal(n, k, np.random.default_rng(10_000 + seed))
        lo, hi = embedding_distortion(SrhtSketch.draw(n, m, seed).apply(u))
        good += 0.4 <= lo and hi <= 1.6
    secs = time.perf_counter() - start
    ok = good >= 95 and secs < 10
    criterion("1 subspace embedding", ok, f"{good}/100 draws in [0.4,1.6], m={m}, {secs:.2f}s")
    assert ok


# 2, 3 ----------------------------------------------------------------------
@pytest.fixture(scope="module")
def regression_suite():
    eps = 1e-8
    start = time.perf_counter()
    runs = []
    for seed in range(50):
        rng = np.random.default_rng(20_000 + seed)
        a = rng.standard_normal((512, 16))
        b = a @ rng.standard_normal(16) + rng.standard_normal(512)
        rep = high_precision_solve(RegressionProblem(a, b), eps, 0.01, seed=seed)
        runs.append((a, b, rep))
    return eps, runs, time.perf_counter() - start


def test_c02_backward_error(criterion, regression_suite):
    eps, runs, secs = regression_suite
    cap = 4 * math.log2(1 / eps) + 8
    worst, most = 0.0, 0
    ok = secs < 30
    for a, b, rep in runs:
        e = backward_error(a, b, rep.solution, lstsq_normal(a, b))
        worst, most = max(worst, e), max(most, rep.iterations)
        ok &= e <= eps and rep.iterations <= cap
    criterion("2 high-precision backward error", ok,
              f"max ratio-1={worst:.3g} (eps={eps:g}), max iters={most} (cap {cap:.1f}), {secs:.2f}s")
    assert ok


def test_c03_forward_error(criterion, regression_suite):
    _, runs, _ = regression_suite
    passed = 0
    worst = 0.0
    for a, b, rep in runs:
        x_opt = lstsq_normal(a, b)
        eps_real = max(backward_error(a, b, rep.solution, x_opt), 0.0)
        r_opt = float(np.linalg.norm(np.asarray(a, np.longdouble) @ x_opt - b))
        sig_min = np.linalg.svd(a, compute_uv=False)[-1]
        bound = 2 * math.sqrt(eps_real) * r_opt / sig_min
        err = float(np.linalg.norm(np.asarray(rep.solution, np.longdouble) - x_opt))
        passed += err <= bound
        if bound > 0:
            worst = max(worst, err / bound)
    ok = passed == 50
    criterion("3 forward-error envelope", ok, f"{passed}/50 within bound, max err/bound={worst:.3g}")
    assert ok


# 4 -------------------------------------------------------------------------
def test_c04_trig_identities(criterion):
    start = time.perf_counter()
    bad = 0
    for seed in range(100):
        rng = np.random.default_rng(40_000 + seed)
        y, x = orthonormal(20, 3, rng), orthonormal(20, 3, rng)
        a = angles(y, x)
        bad += abs(a.sin ** 2 + a.cos ** 2 - 1) > 1e-10
        bad += abs(a.tan * a.cos - a.sin) > 1e-10
        bad += a.sin > a.dist + 1e-12
        bad += a.tan <= 1 and a.dist > 2 * a.tan + 1e-10
    secs = time.perf_counter() - start
    ok = bad == 0 and secs < 5
    criterion("4 trig identities", ok, f"{bad} violations over 100 pairs, {secs:.2f}s")
    assert ok


# 5, 6, 7 -------------------------------------------------------------------
N5, K5, TAU5, GAMMA5 = 128, 3, 2.0, 1e-4


def _instance(seed, noise):
    return datagen.generate(datagen.GenSpec(N5, K5, TAU5, GAMMA5, noise, seed=seed))


@pytest.fixture(scope="module")
def noisy_suite():
    start = time.perf_counter()
    out = []
    for seed in range(10):
        inst = _instance(seed, 1e-3)
        cfg = SolveConfig(k=K5, seed=seed)
        out.append((inst, cfg, solve(inst, cfg)))
    return out, time.perf_counter() - start


def test_c05_geometric_convergence(criterion, noisy_suite):
    start = time.perf_counter()
    worst_ratio, reached, notes = 0.0, 0, []
    for seed in range(10):
        inst = _instance(seed, 0.0)
        cfg = SolveConfig(k=K5, seed=seed)
        res = solve(inst, cfg)
        d = [dist(initial_factor(inst, cfg.resolved(N5)), inst.ground_truth.v)]
        d += list(res.trace.column("dist_y"))
        for prev, cur in zip(d, d[1:]):
            if prev < 1e-8:
                break
            worst_ratio = max(worst_ratio, cur / prev)
        reached += min(d) < 1e-8
    clean_ok = worst_ratio <= 0.75 and reached == 10

    suite, suite_secs = noisy_suite
    plateau_ok = True
    worst_frac = 0.0
    for inst, cfg, res in suite:
        rep = check_assumptions(inst)
        eta = rep.mu * K5
        envelope = 200 / rep.sigma_min * (eta * K5 / rep.alpha) * rep.delta_noise
        final = res.trace[-1].dist_y
        worst_frac = max(worst_frac, final / envelope)
        plateau_ok &= final <= envelope
    secs = time.perf_counter() - start + suite_secs
    ok = clean_ok and plateau_ok and secs < 120
    criterion("5 geometric convergence", ok,
              f"max contraction={worst_ratio:.3g}, {reached}/10 below 1e-8, "
              f"noisy plateau/envelope max={worst_frac:.3g}, {secs:.1f}s")
    assert ok


def test_c06_final_error(criterion, noisy_suite):
    suite, _ = noisy_suite
    ok, worst = True, 0.0
    for inst, cfg, res in suite:
        rep = check_assumptions(inst)
        err = spectral_norm(res.m_tilde - inst.ground_truth.m_star())
        bound = 50 / rep.alpha * K5 * rep.tau * rep.delta_noise + cfg.eps
        worst = max(worst, err / bound)
        ok &= err <= bound
    criterion("6 final error", ok, f"max ||M~ - M*|| / bound = {worst:.3g}")
    assert ok


def test_c07_exact_vs_fast(criterion):
    worst = 0.0
    for seed in range(10):
        inst = _instance(seed, 1e-3)
        base = dict(k=K5, seed=seed, eps_sk=1e-12, t_override=20)
        a = solve(inst, SolveConfig(exact_mode=True, **base)).trace[-1].residual_w
        b = solve(inst, SolveConfig(**base)).trace[-1].residual_w
        worst = max(worst, abs(a - b) / a)
    ok = worst <= 1e-6
    criterion("7 exact vs fast", ok, f"max relative residual gap={worst:.3g}")
    assert ok


# 8 -------------------------------------------------------------------------
@pytest.fixture
def one_thread(monkeypatch):
    monkeypatch.setenv("WLRA_THREADS", "1")


def test_c08a_runtime_scaling_n(criterion, one_thread):
    ns = [128, 256, 512]
    ms = [bench_cell(n, 4, repeats=5, iters=5) for n in ns]
    s = _slope(ns, ms)
    ok = 1.6 <= s <= 2.4
    criterion("8a runtime slope in n", ok,
              f"slope={s:.3f} ({', '.join(f'{t:.1f}' for t in ms)} ms/iter, {backend.name()})")
    assert ok


def test_c08b_runtime_scaling_k(criterion, one_thread):
    ks = [2, 4, 8]
    ms = [bench_cell(512, k, repeats=5, iters=5) for k in ks]
    s = _slope(ks, ms)
    ok = s >= 0.8
    criterion("8b runtime slope in k", ok,
              f"slope={s:.3f} ({', '.join(f'{t:.1f}' for t in ms)} ms/iter, {backend.name()})")
    assert ok


def test_c08c_sketched_speedup(criterion, one_thread):
    exact = bench_cell(1024, 32, repeats=1, iters=2, exact=True)
    fast = bench_cell(1024, 32, repeats=1, iters=2)
    speedup = exact / fast
    ok = speedup >= 2.0
    criterion("8c sketched vs exact at n=1024, k=32", ok,
              f"exact={exact:.0f} ms/iter, sketched={fast:.0f} ms/iter, speedup={speedup:.2f}x")
    assert ok


# 9 -------------------------------------------------------------------------
_clip_failures = []


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 40), k=st.integers(1, 5),
       xi=st.sampled_from([0.0625, 0.25, 1.0, 0.1, 0.37]), boundary=st.integers(0, 3))
def _clip_property(seed, n, k, xi, boundary):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, k)) * rng.choice([0.2, 1.0, 3.0], size=(n, 1))
    # rows sitting exactly on the threshold (exact in binary for these xi)
    for i in range(min(boundary, n)):
        x[i] = 0.0
        x[i, 0] = 2 * math.sqrt(xi) if xi in (0.0625, 0.25, 1.0) else 0.0
    out, dropped = clip(x, xi)
    limit = 4 * Fraction(xi)
    expected = [i for i in range(n) if not sum(Fraction(v) ** 2 for v in x[i]) <= limit]
    ok = dropped == expected
    for i in range(n):
        same = np.array_equal(out[i], x[i])
        zero = not out[i].any()
        ok &= (same and i not in expected) or (zero and i in expected)
    if not ok:
        _clip_failures.append((seed, n, k, xi))


def test_c09_clip_semantics(criterion):
    _clip_failures.clear()
    _clip_property()
    ok = not _clip_failures
    criterion("9 clipping semantics", ok, f"300 generated inputs, {len(_clip_failures)} mismatches")
    assert ok


# 10 ------------------------------------------------------------------------
def test_c10_weighted_reduction(criterion):
    worst_x, worst_obj, count = 0.0, 0.0, 0
    for n in range(2, 11):
        for k in range(1, min(3, n - 1) + 1):
            for seed in range(3):
                rng = np.random.default_rng(100 * n + 10 * k + seed)
                m = rng.standard_normal((n, n))
                y = orthonormal(n, k, rng)
                w = rng.random((n, n)) + 0.05
                p = MultiResponseProblem(m, y, w)
                x = solve_exact(p).x
                oracle = per_row_exact(m, y, w)
                worst_x = max(worst_x, float(np.max(np.abs(x - oracle))))
                row_minima = sum(
                    float(np.sum(w[i] * (m[i] - y @ oracle[i]) ** 2)) for i in range(n)
                )
                worst_obj = max(worst_obj, abs(objective(p, x) - row_minima))
                count += 1
    ok = worst_x <= 1e-10 and worst_obj <= 1e-10
    criterion("10 weighted-reduction oracle", ok,
              f"{count} instances, max |X - oracle|={worst_x:.3g}, "
              f"max objective gap={worst_obj:.3g}")
    assert ok
