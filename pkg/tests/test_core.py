import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catnet.core import (
    GateSequence,
    ProtocolSchedule,
    QFIMatrix,
    StateFamily,
    analytic_qfim,
    average_entanglement,
    branch_phase,
    cnot,
    is_non_echoed,
    minimum_entanglement_k,
    normalize,
    schedule_from_json,
    schedule_to_json,
)
from catnet.errors import AllZero, DimensionMismatch

from conftest import alphas


class TestNormalize:
    def test_two_sensor(self):
        fc = normalize([1, 0.5])
        assert fc.pivot == 0 and fc.L == (0,)
        assert fc.ratio == pytest.approx(1.5)
        assert fc.k == 2

    def test_average(self):
        fc = normalize([1 / 3] * 3)
        assert fc.L == (0, 1, 2)
        assert fc.ratio == pytest.approx(3.0)
        assert fc.k == 3

    def test_all_zero(self):
        with pytest.raises(AllZero):
            normalize([0, 0])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            normalize([1, np.nan])

    def test_negative_pivot_signed(self):
        fc = normalize([0.2, -1.0, 0.5])
        assert fc.pivot == 1
        assert fc.alpha_prime[1] == 1.0
        np.testing.assert_allclose(fc.alpha_prime, [-0.2, 1.0, -0.5])

    def test_pivot_is_smallest_maximizer(self):
        fc = normalize([0.5, -1.0, 1.0])
        assert fc.pivot == 1 and fc.L == (1, 2)


class TestMinimumK:
    @pytest.mark.parametrize(
        "alpha, k",
        [([1, 0, 0], 1), ([0.25] * 4, 4), ([1, 0.95, 0.95, 0.1], 3), ([1, 1e-6], 2)],
    )
    def test_values(self, alpha, k):
        assert minimum_entanglement_k(alpha) == k

    def test_integer_boundary_inclusive(self):
        # ratio 2 up to rounding stays at k = 2
        assert minimum_entanglement_k([1, 0.7, 0.3]) == 2
        # within the 1e-9 tolerance the ratio counts as the integer below
        assert minimum_entanglement_k([1, 1e-12]) == 1

    @given(alphas(), st.floats(0.01, 100), st.randoms(use_true_random=False))
    @settings(max_examples=60, deadline=None)
    def test_scale_and_permutation_invariant(self, a, lam, r):
        perm = list(range(len(a)))
        r.shuffle(perm)
        k = minimum_entanglement_k(a)
        assert minimum_entanglement_k(-lam * a) == k
        assert minimum_entanglement_k(a[perm]) == k


class TestStateFamily:
    def test_rejects_bad_entries(self):
        with pytest.raises(ValueError):
            StateFamily((1, 2))

    def test_weight_support(self):
        f = StateFamily((1, 0, -1))
        assert f.weight == 2 and f.support == frozenset({0, 2})


class TestSchedule:
    def test_drops_zero_fractions(self, fc_half):
        s = ProtocolSchedule(fc_half, ((1, 1), (1, -1), (1, 0)), [0.5, 0.0, 0.5])
        assert len(s) == 2 and s.optimal

    def test_sum_must_be_one(self, fc_half):
        with pytest.raises(ValueError):
            ProtocolSchedule(fc_half, ((1, 1),), [0.9])
        assert not ProtocolSchedule(fc_half, ((1, 1),), [0.9], strict=False).optimal

    def test_dimension_mismatch(self, fc_half):
        with pytest.raises(DimensionMismatch):
            ProtocolSchedule(fc_half, ((1, 1, 0),), [1.0])

    def test_average_entanglement(self, fc_half):
        s = ProtocolSchedule(fc_half, ((1, 1), (1, 0)), [0.5, 0.5])
        assert average_entanglement(s) == pytest.approx(1.5)

    def test_single_family(self):
        s = ProtocolSchedule(normalize([1, 0, 0]), ((1, 0, 0),), [1.0])
        assert average_entanglement(s) == 1.0

    def test_non_echoed(self, fc_half):
        assert is_non_echoed(ProtocolSchedule(fc_half, ((1, 1), (1, 0)), [0.5, 0.5]), fc_half)
        assert not is_non_echoed(ProtocolSchedule(fc_half, ((1, 1), (1, -1)), [0.75, 0.25]), fc_half)

    def test_reordered(self, fc_half):
        s = ProtocolSchedule(fc_half, ((1, 1), (1, 0)), [0.5, 0.5]).reordered([1, 0])
        assert s.families[0].tau == (1, 0)
        with pytest.raises(ValueError):
            s.reordered([0, 0])


class TestBranchPhase:
    def test_hand_value(self, fc_half):
        s = ProtocolSchedule(fc_half, ((1, 1), (1, 0)), [0.5, 0.5])
        assert branch_phase(s, [1, 1], 2) == pytest.approx(3.0)
        assert branch_phase(s, [0, 0], 2) == 0.0

    def test_optimal_gives_q_over_pivot(self, rng):
        fc = normalize([-0.5, 1.0, 0.25])
        s = ProtocolSchedule(fc, ((-1, 1, 0), (0, 1, 1), (0, 1, 0)), [0.5, 0.25, 0.25])
        assert s.optimal
        theta = rng.normal(size=3)
        assert branch_phase(s, theta, 1.7) == pytest.approx(1.7 * fc.alpha @ theta / fc.alpha_pivot)

    def test_linear(self, fc_half, rng):
        s = ProtocolSchedule(fc_half, ((1, 1), (1, -1)), [0.6, 0.4])
        a, b = rng.normal(size=2), rng.normal(size=2)
        assert branch_phase(s, a + 2 * b, 1.0) == pytest.approx(branch_phase(s, a, 1) + 2 * branch_phase(s, b, 1))
        assert branch_phase(s, a, 3.0) == pytest.approx(3 * branch_phase(s, a, 1.0))


class TestAnalyticQFIM:
    def test_two_sensor(self, fc_half):
        s = ProtocolSchedule(fc_half, ((1, 1), (1, 0)), [0.5, 0.5])
        np.testing.assert_allclose(np.asarray(analytic_qfim(s, 1.0)), [[1, 0.5], [0.5, 0.25]])

    def test_single_qubit(self):
        s = ProtocolSchedule(normalize([1.0]), ((1,),), [1.0])
        assert np.asarray(analytic_qfim(s, 2.0))[0, 0] == pytest.approx(4.0)

    def test_rank_one(self, rng):
        fc = normalize(rng.uniform(-1, 1, 5))
        fams = [tuple(int(v) for v in rng.integers(-1, 2, 5)) for _ in range(4)]
        fams = [(1,) + f[1:] for f in fams]
        fc = normalize([1, *fc.alpha[1:] * 0.5])
        s = ProtocolSchedule(fc, fams, rng.dirichlet(np.ones(4)))
        ev = np.linalg.eigvalsh(np.asarray(analytic_qfim(s, 2.0)))
        assert ev[-2] < 1e-10 * 4 and ev[0] > -1e-10

    def test_qfim_validation(self):
        with pytest.raises(ValueError):
            QFIMatrix([[1, 2], [0, 1]])
        with pytest.raises(ValueError):
            QFIMatrix([[-1.0]])


class TestJson:
    def test_round_trip_exact(self, rng):
        fc = normalize(rng.uniform(-1, 1, 3))
        s = ProtocolSchedule(fc, ((1, 0, 0), (1, 1, 1)), [1 / 3, 2 / 3], total_time=2.5)
        back = schedule_from_json(schedule_to_json(s))
        np.testing.assert_array_equal(back.p, s.p)
        np.testing.assert_array_equal(back.fc.alpha, fc.alpha)
        assert back.families == s.families and back.total_time == 2.5

    def test_pivot_mismatch(self):
        doc = {"alpha": [1, 0.5], "pivot": 1, "families": [[1, 1]], "p": [1.0]}
        with pytest.raises(ValueError):
            schedule_from_json(doc)


class TestGates:
    def test_counts(self):
        g = GateSequence(2, 0, (cnot(0, 1),), ((cnot(0, 1),),), ())
        assert GateSequence.count_cnots(g) == 2
