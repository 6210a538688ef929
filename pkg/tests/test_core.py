import numpy as np
import pytest

from banditlab import core
from banditlab.errors import (
    DuplicateArm,
    LengthMismatch,
    MeanOutOfRange,
    NonUniqueOptimum,
    NormViolation,
    RankDeficient,
)

E1 = [1.0, 0.0]
E2 = [0.0, 1.0]


def basis(d):
    return core.validate_action_set(np.eye(d))


class TestValidateActionSet:
    def test_orthonormal_basis_valid(self):
        xs = core.validate_action_set([E1, E2])
        assert xs.d == 2 and xs.n_arms == 2

    def test_norm_violation(self):
        with pytest.raises(NormViolation):
            core.validate_action_set([E1, [2.0, 0.0]])

    def test_rank_deficient(self):
        v = [1 / np.sqrt(2), 1 / np.sqrt(2), 0.0]
        with pytest.raises(RankDeficient):
            core.validate_action_set([[1.0, 0.0, 0.0], v])

    def test_duplicate_arm(self):
        with pytest.raises(DuplicateArm):
            core.validate_action_set([E1, E1])

    def test_single_arm_rejected(self):
        with pytest.raises(RankDeficient):
            core.validate_action_set([[1.0]])


class TestMakeInstance:
    def test_two_arm_gaps(self):
        inst = core.make_instance(basis(2), [-0.5, 0.1])
        assert inst.optimal_index == 0
        assert np.allclose(inst.gaps, [0.0, 0.6])
        assert inst.delta_min == pytest.approx(0.6)

    def test_tie_rejected(self):
        with pytest.raises(NonUniqueOptimum):
            core.make_instance(basis(2), [0.0, 0.0])

    def test_mean_out_of_range(self):
        with pytest.raises(MeanOutOfRange):
            core.make_instance(basis(2), [-1.5, 0.0])

    def test_third_arm_gap_hand_value(self):
        s = 1 / np.sqrt(2)
        xs = core.validate_action_set([E1, E2, [s, s]])
        inst = core.make_instance(xs, [-0.5, 0.1])
        # <x - e1, theta> = (-0.5 + 0.1)/sqrt(2) + 0.5
        assert inst.gaps[2] == pytest.approx(0.21715728752538097, abs=1e-12)

    def test_constant_shift_leaves_gaps(self):
        # shift v with <x, v> equal across arms: arms (1,0),(0,1) -> v=(c,c)
        xs = basis(2)
        a = core.make_instance(xs, [-0.5, 0.1])
        b = core.make_instance(xs, [-0.5 + 0.3, 0.1 + 0.3])
        assert np.allclose(a.gaps, b.gaps)


class TestRegret:
    def test_pseudo_regret_optimal_play(self):
        inst = core.make_instance(basis(2), [-0.5, 0.1])
        assert np.allclose(core.pseudo_regret([0, 0, 0], inst), [0.0, 0.0, 0.0])

    def test_pseudo_regret_one_bad_pull(self):
        inst = core.make_instance(basis(2), [-0.5, 0.1])
        assert np.allclose(core.pseudo_regret([0, 1], inst), [0.0, 0.6])

    def test_pseudo_regret_hundred_pulls(self):
        inst = core.make_instance(basis(2), [-0.25, 0.0])
        series = core.pseudo_regret([1] * 100, inst)
        assert series[-1] == pytest.approx(25.0)
        assert np.all(np.diff(series) >= 0)

    def test_adversarial_regret_constant_losses(self):
        xs = basis(2)
        losses = np.tile([1.0, 0.0], (2, 1))
        # playing the best fixed arm (e2) gives zero regret
        assert core.adversarial_regret([1, 1], losses, xs) == pytest.approx(0.0)

    def test_adversarial_regret_two_rounds(self):
        xs = basis(2)
        losses = np.tile([1.0, 0.0], (2, 1))
        assert core.adversarial_regret([0, 0], losses, xs) == pytest.approx(2.0)

    def test_adversarial_regret_alternating(self):
        xs = basis(2)
        losses = np.array([[1.0, 0.0], [0.0, 1.0]])
        # learner eats 1 + 1; each comparator eats 1
        assert core.adversarial_regret([0, 1], losses, xs) == pytest.approx(1.0)

    def test_adversarial_regret_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            core.adversarial_regret([0, 1], np.zeros((3, 2)), basis(2))

    def test_adversarial_regret_constant_shift_invariant(self):
        # add v with <x, v> constant over arms: leaves regret unchanged
        xs = basis(2)
        rng = np.random.default_rng(7)
        losses = rng.uniform(-1, 1, size=(20, 2))
        arms = rng.integers(0, 2, size=20)
        shifted = losses + np.array([0.37, 0.37])
        a = core.adversarial_regret(arms, losses, xs)
        b = core.adversarial_regret(arms, shifted, xs)
        assert a == pytest.approx(b, abs=1e-9)


class TestRngStream:
    def test_equal_seeds_equal_draws(self):
        a = core.RngStream(123).child("trial", 4)
        b = core.RngStream(123).child("trial", 4)
        assert np.array_equal(a.uniform(size=100), b.uniform(size=100))

    def test_different_children_differ(self):
        root = core.RngStream(123)
        assert root.child("a").uniform() != root.child("b").uniform()

    def test_child_independent_of_draw_order(self):
        root = core.RngStream(9)
        first = root.child("x").uniform()
        root.child("y").uniform(size=10)
        again = core.RngStream(9).child("x").uniform()
        assert first == again


class TestArmDistribution:
    def test_inverse_cdf_corner(self):
        p = core.ArmDistribution(np.array([0.5, 0.5]))
        assert p.sample(0.25) == 0
        assert p.sample(0.75) == 1

    def test_point_mass(self):
        p = core.ArmDistribution(np.array([1.0, 0.0]))
        assert all(p.sample(u) == 0 for u in (0.0, 0.3, 0.999))

    def test_rejects_non_simplex(self):
        with pytest.raises(ValueError):
            core.ArmDistribution(np.array([0.5, 0.4]))

    def test_empirical_frequencies(self):
        p = core.ArmDistribution(np.array([0.2, 0.3, 0.5]))
        us = core.RngStream(5).uniform(size=100_000)
        draws = np.searchsorted(np.cumsum(p.weights), us, side="right")
        freqs = np.bincount(draws, minlength=3) / us.size
        assert np.all(np.abs(freqs - p.weights) < 0.01)
