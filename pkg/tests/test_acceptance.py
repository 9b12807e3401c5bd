"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Every test records a one-line verdict (printed in the terminal summary and
to stdout) before asserting, so a failing criterion still reports numbers.
"""

import json
import math
import time

import numpy as np
import pytest

from catnet.cli import main
from catnet.cnot import (
    cnot_benchmark,
    compile_gates,
    disentangling_protocol,
    echoing_protocol,
    fit_exponents,
    protocol_cost,
)
from catnet.core import analytic_qfim, average_entanglement, normalize
from catnet.partition import brute_force_partition, optimal_partition
from catnet.rpe import BOUND_CONSTANT, mse_benchmark
from catnet.solver import (
    GENERAL,
    NON_ECHOED,
    design_protocol,
    enumerate_families,
    farkas_certificate,
    random_vertex_schedule,
    solve_columns,
)
from catnet.verify import (
    check_saturability,
    probabilistic_bound,
    probabilistic_objective,
    qfim_finite_difference,
    qfim_generator_sum,
    sample_allocations,
)

from conftest import random_alpha, record_acceptance

pytestmark = pytest.mark.acceptance


def verdict(number, ok, detail, elapsed, limit):
    within = elapsed <= limit
    ok = bool(ok and within)
    limit_txt = "no time limit" if math.isinf(limit) else f"limit {limit:g}s"
    detail = f"{detail}; {elapsed:.1f}s ({limit_txt})"
    record_acceptance(number, ok, detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def test_criterion_01_two_sensor_example():
    t0 = time.perf_counter()
    fc = normalize([1, 0.5])
    s = design_protocol(fc)
    ok = s.residual < 1e-9 and abs(s.p.sum() - 1) < 1e-12 and np.all(s.p >= 0)
    cs = enumerate_families(fc, 2, GENERAL)
    order = [f.tau for f in cs.columns]
    assert order == [(1, 1), (1, -1), (1, 0)]
    p = solve_columns(cs, fc, [0, 1, 0])
    ok &= abs(p[0] - p[1] - 0.5) < 1e-9 and np.allclose(p, [0.5, 0, 0.5], atol=1e-12)
    fm = normalize([1, -0.5])
    pm = solve_columns(enumerate_families(fm, 2, GENERAL), fm, [1, 0, 0])
    ok &= np.allclose(pm, [0, 0.5, 0.5], atol=1e-12)
    detail = f"default p={s.p.tolist()} residual={s.residual:.1e}; min p2 -> {p.tolist()}; mirror -> {pm.tolist()}"
    assert verdict(1, ok, detail, time.perf_counter() - t0, 1.0)


def test_criterion_02_theorem_both_directions():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    fails, checked_k1 = [], 0
    for d in range(2, 9):
        for _ in range(1000):
            fc = normalize(random_alpha(rng, d, zeros=True))
            s = design_protocol(fc)
            if not (s.optimal and s.max_weight <= fc.k):
                fails.append(("solve", fc.alpha))
            if fc.k > 1 and fc.ratio > fc.k - 1:
                checked_k1 += 1
                cert = farkas_certificate(fc, fc.k - 1)
                if cert is None or not cert.check(fc):
                    fails.append(("farkas", fc.alpha))
    detail = f"7000 instances, {checked_k1} certificates at k-1, {len(fails)} counterexamples"
    assert verdict(2, not fails, detail, time.perf_counter() - t0, 120)


def test_criterion_03_qfim_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst_rel, worst_row = 0.0, 0.0
    for i in range(100):
        d = 1 + i % 6
        fc = normalize(random_alpha(rng, d, zeros=True))
        optimal = i % 2 == 0
        s = random_vertex_schedule(fc, int(rng.integers(fc.k, d + 1)), GENERAL, seed=i)
        if not optimal:
            p = s.p * rng.uniform(0.5, 1.5, len(s))
            s = type(s)(fc, s.families, p / p.sum())
        t = rng.uniform(0.5, 3.0)
        A = np.asarray(analytic_qfim(s, t))
        G = np.asarray(qfim_generator_sum(s, t))
        F = np.asarray(qfim_finite_difference(compile_gates(s), s, rng.normal(size=d), t))
        scale = np.abs(A).max()
        worst_rel = max(worst_rel, np.abs(A - G).max() / scale, np.abs(A - F).max() / scale)
        if s.optimal:
            rep = check_saturability(A, fc, t, tol=1e-8 * t * t)
            worst_row = max(worst_row, rep.max_residual / (t * t))
            assert rep.passed
    ok = worst_rel <= 1e-6 and worst_row < 1e-8
    detail = f"max relative disagreement {worst_rel:.1e}; max row residual / t^2 {worst_row:.1e}"
    assert verdict(3, ok, detail, time.perf_counter() - t0, 300)


def test_criterion_04_average_entanglement():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    worst_eq, worst_ge = 0.0, math.inf
    for i in range(1000):
        fc = normalize(random_alpha(rng, int(rng.integers(1, 9)), zeros=True))
        ne = random_vertex_schedule(fc, fc.k, NON_ECHOED, seed=i) if i % 2 else design_protocol(fc)
        assert ne.non_echoed and ne.optimal
        worst_eq = max(worst_eq, abs(average_entanglement(ne) - fc.ratio))
        k = int(rng.integers(fc.k, fc.d + 1))
        gen = random_vertex_schedule(fc, k, GENERAL, seed=i)
        worst_ge = min(worst_ge, average_entanglement(gen) - fc.ratio)
    ok = worst_eq <= 1e-9 and worst_ge >= -1e-9
    detail = f"non-echoed max |w.p - ratio| {worst_eq:.1e}; general min (w.p - ratio) {worst_ge:.3g}"
    assert verdict(4, ok, detail, time.perf_counter() - t0, math.inf)


def test_criterion_05_cnot_scaling():
    t0 = time.perf_counter()
    rows = cnot_benchmark(3, 10, 20, seed=0, greedy_retries=100_000)
    exps = fit_exponents(rows)
    greedy = [r for r in rows if r["method"] == "greedy"]
    bounded = all(r["cnot_intermediate"] <= 2 * (r["d"] - 1) for r in greedy if not r["failed"])
    filled = not any(r["failed"] for r in greedy)
    ok = 1.6 <= exps["random_vertex"] <= 2.4 and 0.8 <= exps["greedy"] <= 1.2 and bounded and filled
    detail = (f"random-vertex exponent {exps['random_vertex']:.3f} (need [1.6, 2.4]); "
              f"greedy exponent {exps['greedy']:.3f} (need [0.8, 1.2]); greedy <= 2(d-1): {bounded}")
    assert verdict(5, ok, detail, time.perf_counter() - t0, 1800)


def test_criterion_06_cnot_golden():
    t0 = time.perf_counter()
    a = [1, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3]
    dis = disentangling_protocol(a)
    counts = (
        protocol_cost(dis).intermediate,
        protocol_cost(dis.reordered([0, 7, 1, 6, 2, 5, 3, 4])).intermediate,
        protocol_cost(echoing_protocol(a)).intermediate,
    )
    assert verdict(6, counts == (7, 28, 0), f"(disentangling, scrambled, echoing) = {counts}",
                   time.perf_counter() - t0, math.inf)


def test_criterion_07_rpe_bound():
    t0 = time.perf_counter()
    fc = normalize([1, 0.5])
    curve = mse_benchmark(None, fc, range(4, 11), 10_000, seed=7)
    scaled = [r["mse"] * r["t_total"] ** 2 / fc.inf_norm**2 for r in curve.rows]
    ok = max(scaled) <= BOUND_CONSTANT**2 and -2.2 <= curve.slope <= -1.8
    detail = (f"max MSE t^2/|a|^2 = {max(scaled):.1f} (bound {BOUND_CONSTANT**2:.1f}); "
              f"slope {curve.slope:.3f} (need [-2.2, -1.8])")
    assert verdict(7, ok, detail, time.perf_counter() - t0, 600)


def test_criterion_08_probabilistic_bound():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    t = 1.0
    worst = {}
    attained = True
    for n in range(1, 6):
        p, tn = sample_allocations(n, t, 100_000, rng)
        worst[n] = float(np.max(probabilistic_objective(p, tn)) - probabilistic_bound(n, t))
        u = np.full(n, 1 / n)
        attained &= abs(probabilistic_objective(u, u * t) - probabilistic_bound(n, t)) <= 1e-12
    ok = all(v <= 1e-12 for v in worst.values()) and attained
    excess = ", ".join(f"N={n}: {v:+.3g}" for n, v in worst.items())
    detail = f"max sampled value minus t^2/N^2: {excess}; uniform attains: {attained}"
    assert verdict(8, ok, detail, time.perf_counter() - t0, math.inf)


def test_criterion_09_partition_dp():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    worst, single_ok = 0.0, True
    for d in range(1, 13):
        for _ in range(100):
            a = random_alpha(rng, d, zeros=True)
            k = int(rng.integers(1, d + 1))
            worst = max(worst, abs(optimal_partition(a, k).variance - brute_force_partition(a, k).variance))
            fc = normalize(a)
            single_ok &= abs(optimal_partition(fc, fc.k).variance - fc.inf_norm**2) <= 1e-12
    ok = worst <= 1e-12 and single_ok
    detail = f"1200 instances, max |DP - brute| {worst:.1e}; k >= k_min single block: {single_ok}"
    assert verdict(9, ok, detail, time.perf_counter() - t0, math.inf)


def test_criterion_10_round_trip(tmp_path, capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    failures = 0
    for i in range(200):
        a = random_alpha(rng, int(rng.integers(1, 7)), zeros=True)
        path = tmp_path / f"p{i}.json"
        assert main(["design", "--alpha", json.dumps(a.tolist()), "--out", str(path)]) == 0
        code = main(["verify", str(path), "--method", "all", "--out", str(tmp_path / f"r{i}.json")])
        failures += code != 0
    capsys.readouterr()
    assert verdict(10, failures == 0, f"200 designs, {failures} verify failures",
                   time.perf_counter() - t0, math.inf)
