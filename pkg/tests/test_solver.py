import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from catnet.core import average_entanglement, minimum_entanglement_k, normalize
from catnet.errors import Infeasible, TooLarge
from catnet.solver import (
    GENERAL,
    NON_ECHOED,
    count_families,
    design_protocol,
    enumerate_families,
    farkas_certificate,
    pricing_oracle,
    random_vertex_schedule,
    solve_by_column_generation,
    solve_columns,
    solve_schedule,
)

from conftest import alphas, random_alpha


def taus(cs):
    return [f.tau for f in cs.columns]


class TestEnumerate:
    def test_two_sensor_general(self, fc_half):
        assert set(taus(enumerate_families(fc_half, 2, GENERAL))) == {(1, 1), (1, -1), (1, 0)}

    def test_two_sensor_non_echoed(self, fc_half):
        assert set(taus(enumerate_families(fc_half, 2, NON_ECHOED))) == {(1, 1), (1, 0)}

    def test_single(self):
        assert taus(enumerate_families(normalize([2.0]), 1)) == [(1,)]

    def test_matches_bruteforce_definition(self, rng):
        for _ in range(30):
            fc = normalize(random_alpha(rng, int(rng.integers(1, 6)), zeros=True))
            for k in range(1, fc.d + 1):
                for mode in (GENERAL, NON_ECHOED):
                    expect = set()
                    for tau in itertools.product((-1, 0, 1), repeat=fc.d):
                        t = np.array(tau)
                        if np.count_nonzero(t) > k:
                            continue
                        if any(t[j] != fc.signs[j] for j in fc.L):
                            continue
                        if any(t[j] != 0 for j in range(fc.d) if fc.alpha[j] == 0):
                            continue
                        if mode == NON_ECHOED and any(t[j] not in (0, fc.signs[j]) for j in range(fc.d)):
                            continue
                        expect.add(tau)
                    got = taus(enumerate_families(fc, k, mode))
                    assert len(got) == len(set(got)) == count_families(fc, k, mode)
                    assert set(got) == expect

    def test_cap(self):
        with pytest.raises(TooLarge):
            enumerate_families(normalize(np.linspace(1, 0.1, 10)), 10, GENERAL, cap=100)


class TestSolve:
    def test_two_sensor_any_vertex(self, fc_half):
        s = solve_schedule(enumerate_families(fc_half, 2, GENERAL), fc_half)
        assert s.optimal and s.residual < 1e-9

    def test_two_sensor_minimize_p2(self, fc_half):
        cs = enumerate_families(fc_half, 2, GENERAL)
        order = taus(cs)
        cost = [1.0 if t == (1, -1) else 0.0 for t in order]
        p = solve_columns(cs, fc_half, cost)
        got = dict(zip(order, p))
        assert got[(1, 1)] == pytest.approx(0.5) and got[(1, 0)] == pytest.approx(0.5)
        assert got[(1, -1)] == 0.0

    def test_two_sensor_mirror(self):
        fc = normalize([1, -0.5])
        cs = enumerate_families(fc, 2, GENERAL)
        got = dict(zip(taus(cs), solve_columns(cs, fc, [1.0 if t == (1, 1) else 0.0 for t in taus(cs)])))
        assert got[(1, 1)] == 0.0
        assert got[(1, -1)] == pytest.approx(0.5) and got[(1, 0)] == pytest.approx(0.5)

    def test_infeasible_weight_one(self):
        fc = normalize([1, 1])
        with pytest.raises(Infeasible):
            solve_schedule(enumerate_families(fc, 1, GENERAL), fc)

    def test_random_vertex_deterministic(self, fc_half):
        a = random_vertex_schedule(fc_half, 2, seed=7)
        b = random_vertex_schedule(fc_half, 2, seed=7)
        assert a.families == b.families and np.array_equal(a.p, b.p)

    def test_random_vertex_always_feasible(self, fc_half):
        for seed in range(1000):
            assert random_vertex_schedule(fc_half, 2, seed=seed).residual < 1e-9

    def test_average_forces_ghz(self):
        fc = normalize([1 / 3] * 3)
        for seed in range(20):
            s = random_vertex_schedule(fc, 3, GENERAL, seed=seed)
            assert s.families[0].tau == (1, 1, 1) and len(s) == 1


class TestPricing:
    def test_example(self):
        fc = normalize([1, 0.9])
        assert pricing_oracle(np.array([0.0, -1.0]), 2, GENERAL, fc).tau == (1, 1)

    def test_zero_y(self):
        fc = normalize([1, 0.3, -0.2])
        tau = pricing_oracle(np.zeros(3), 2, GENERAL, fc)
        assert tau is None or tau.tau == (1, 0, 0)

    def test_matches_enumeration(self, rng):
        for _ in range(1000):
            d = int(rng.integers(1, 7))
            fc = normalize(random_alpha(rng, d, zeros=True))
            k = int(rng.integers(fc.k if rng.random() < 0.5 else 1, d + 1))
            mode = GENERAL if rng.random() < 0.5 else NON_ECHOED
            y = rng.normal(size=d)
            cs = enumerate_families(fc, k, mode)
            tau = pricing_oracle(y, k, mode, fc)
            if len(cs) == 0:
                assert tau is None and k < len(fc.L)
                continue
            best = min(f.as_array() @ y for f in cs.columns)
            assert tau.as_array() @ y == pytest.approx(best, abs=1e-12)


class TestFarkas:
    def test_two_equal(self):
        cert = farkas_certificate(normalize([1, 1]), 1)
        assert cert is not None
        y = cert.y / abs(cert.y[1])
        np.testing.assert_allclose(y, [0, -1], atol=1e-12)
        assert cert.check(normalize([1, 1]))

    def test_feasible_none(self, fc_half):
        assert farkas_certificate(fc_half, 2) is None

    def test_exclusive_with_schedule(self, rng):
        for _ in range(300):
            fc = normalize(random_alpha(rng, int(rng.integers(2, 7)), zeros=True))
            k = int(rng.integers(1, fc.d + 1))
            mode = GENERAL if rng.random() < 0.5 else NON_ECHOED
            cert = farkas_certificate(fc, k, mode)
            try:
                s = solve_schedule(enumerate_families(fc, k, mode), fc)
            except Infeasible:
                s = None
            assert (cert is None) != (s is None), (fc.alpha, k, mode)
            if cert is not None:
                assert cert.check(fc)
                T = enumerate_families(fc, k, mode).matrix() if count_families(fc, k, mode) else np.zeros((fc.d, 0))
                assert np.all(T.T @ cert.y >= -1e-9)
            else:
                assert k >= fc.k


class TestDesign:
    def test_two_sensor(self, fc_half):
        s = design_protocol(fc_half)
        assert s.max_weight == 2 and s.non_echoed
        assert average_entanglement(s) == pytest.approx(1.5)

    def test_unentangled(self):
        s = design_protocol([1, 0, 0, 0])
        assert len(s) == 1 and s.families[0].tau == (1, 0, 0, 0)

    def test_infeasible_carries_certificate(self):
        with pytest.raises(Infeasible) as exc:
            design_protocol([1, 1], k=1)
        assert exc.value.certificate is not None

    def test_total_time(self, fc_half):
        assert design_protocol(fc_half, total_time=3.0).total_time == 3.0

    @given(alphas(1, 7))
    @settings(max_examples=80, deadline=None)
    def test_theorem_both_directions(self, a):
        fc = normalize(a)
        for mode in (GENERAL, NON_ECHOED):
            s = design_protocol(fc, non_echoed=mode == NON_ECHOED)
            assert s.optimal and s.max_weight <= fc.k
            if fc.k > 1 and fc.ratio > fc.k - 1:
                assert farkas_certificate(fc, fc.k - 1, mode) is not None

    @given(alphas(1, 7))
    @settings(max_examples=60, deadline=None)
    def test_lemma_average_entanglement(self, a):
        fc = normalize(a)
        assert average_entanglement(design_protocol(fc)) == pytest.approx(fc.ratio, abs=1e-9)
        assert average_entanglement(design_protocol(fc, non_echoed=False)) >= fc.ratio - 1e-9


class TestColumnGeneration:
    def test_matches_enumeration_feasibility(self, rng):
        for _ in range(40):
            fc = normalize(random_alpha(rng, int(rng.integers(2, 8)), zeros=True))
            for mode in (GENERAL, NON_ECHOED):
                s = solve_by_column_generation(fc, fc.k, mode)
                assert s.optimal and s.max_weight <= fc.k
                if mode == NON_ECHOED:
                    assert s.non_echoed

    def test_large_dimension(self, rng):
        a = rng.uniform(0.1, 1, 24)
        fc = normalize(a)
        s = design_protocol(fc, cap=1000)
        assert s.optimal and s.max_weight <= fc.k and s.non_echoed
        assert minimum_entanglement_k(a) == fc.k
        assert average_entanglement(s) == pytest.approx(fc.ratio, abs=1e-9)
