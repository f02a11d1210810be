"""
Tests for the synthetic problem families
"""

import numpy as np
import pytest
from pydantic import ValidationError

from dssa.core.service import empirical_mean, evaluate_batch
from dssa.diagnostics.service import (
    check_holder_continuity,
    check_pseudo_monotonicity,
    check_solution_certificate,
    check_unbiasedness,
)
from dssa.exceptions import ProblemConstructionError
from dssa.problems.models import AffineSviSpec, BlockConstraint, HolderSpec, NoiseLaw, SaddlePointSpec
from dssa.problems.oracles import rademacher_signs
from dssa.problems.service import FAMILIES, build_problem, make_affine, make_holder, make_saddle
from dssa.projections.models import box
from dssa.projections.service import natural_residual
from dssa.sampling.models import RngPlan, StreamTag
from dssa.sampling.service import draw_batch

MATCHING_PENNIES = [[1.0, -1.0], [-1.0, 1.0]]


class TestAffine:

    def test_identity_solution(self):
        target = [1.0, -2.0, 3.0]
        problem = make_affine(AffineSviSpec(d=3, matrix=np.eye(3).tolist(), offset=[-1.0, 2.0, -3.0]))
        np.testing.assert_allclose(problem.solution, target)
        assert problem.solution_certificate == pytest.approx(0.0, abs=1e-14)

    def test_rotation_has_origin_solution(self):
        problem = make_affine(AffineSviSpec(d=2, matrix=[[0.0, 1.0], [-1.0, 0.0]], offset=[0.0, 0.0]))
        np.testing.assert_allclose(problem.solution, [0.0, 0.0], atol=1e-15)
        assert problem.holder_modulus == pytest.approx(1.0)

    def test_box_constrained_certificate(self):
        spec = AffineSviSpec(d=4, seed=5, feasible_set=box(-0.5, 0.5, 4))
        problem = make_affine(spec)
        assert problem.solution_certificate <= 1e-10
        assert np.all(np.abs(problem.solution) <= 0.5)

    def test_singular_without_solution(self):
        spec = AffineSviSpec(d=2, matrix=[[1.0, 0.0], [0.0, 0.0]], offset=[0.0, 1.0])
        with pytest.raises(ProblemConstructionError):
            make_affine(spec)

    def test_non_monotone_rejected(self):
        with pytest.raises(ProblemConstructionError, match="monotone"):
            make_affine(AffineSviSpec(d=2, matrix=[[-1.0, 0.0], [0.0, 1.0]], offset=[0.0, 0.0]))

    def test_shape_validation(self):
        with pytest.raises(ValidationError):
            AffineSviSpec(d=2, offset=[1.0, 2.0, 3.0])

    def test_zero_noise_is_deterministic(self):
        problem = make_affine(AffineSviSpec(d=3, seed=2))
        x = np.array([0.3, -1.0, 2.0])
        batch = draw_batch(problem.oracle, RngPlan(1), 0, StreamTag.XI, 5)
        values = evaluate_batch(problem.oracle, batch, x)
        for row in values:
            np.testing.assert_allclose(row, problem.mean(x))

    def test_noise_profile_closed_form(self):
        problem = make_affine(AffineSviSpec(d=4, matrix_noise=0.2, vector_noise=0.1, seed=3))
        x = np.array([1.0, 0.0, -1.0, 2.0])
        expected = np.sqrt(4 * (0.04 * 6.0 + 0.01))
        assert problem.noise_profile(x) == pytest.approx(expected)

    def test_same_seed_same_instance(self):
        first = make_affine(AffineSviSpec(d=3, seed=9))
        second = make_affine(AffineSviSpec(d=3, seed=9))
        np.testing.assert_array_equal(first.oracle.matrix, second.oracle.matrix)
        np.testing.assert_array_equal(first.solution, second.solution)


class TestSaddle:

    def test_matching_pennies(self):
        problem = make_saddle(SaddlePointSpec(m=2, n=2, coupling=MATCHING_PENNIES))
        np.testing.assert_allclose(problem.solution, [0.5, 0.5, 0.5, 0.5], atol=1e-9)
        assert problem.metadata["game_value"] == pytest.approx(0.0, abs=1e-9)
        assert problem.solution_certificate <= 1e-9

    def test_decoupled_game(self):
        """B = 0: each player picks the vertex minimizing its own linear term."""
        spec = SaddlePointSpec(m=3, n=2, coupling=[[0.0, 0.0]] * 3, c=[1.0, 0.0, 2.0], d_vec=[0.5, -1.0])
        problem = make_saddle(spec)
        np.testing.assert_allclose(problem.solution, [0.0, 1.0, 0.0, 0.0, 1.0], atol=1e-9)

    def test_box_blocks_use_deterministic_solve(self):
        spec = SaddlePointSpec(m=2, n=2, coupling=[[2.0, 1.0], [-1.0, 2.0]], c=[0.3, -0.2], d_vec=[0.1, 0.0],
                               u_set=BlockConstraint(kind="box"), v_set=BlockConstraint(kind="box"))
        problem = make_saddle(spec)
        assert natural_residual(problem.feasible_set, problem.mean(problem.solution), problem.solution) <= 1e-10
        assert "game_value" not in problem.metadata

    def test_operator_is_skew_in_the_coupling(self):
        problem = make_saddle(SaddlePointSpec(m=3, n=4, seed=1))
        x, y = np.linspace(0, 1, 7), np.linspace(1, 0, 7)
        assert float((problem.mean(x) - problem.mean(y)) @ (x - y)) == pytest.approx(0.0, abs=1e-12)


class TestHolder:

    def test_zero_at_target_for_every_sample(self):
        problem = make_holder(HolderSpec(d=3, exponent=0.5, modulus_spread=0.5, seed=4))
        batch = draw_batch(problem.oracle, RngPlan(2), 0, StreamTag.XI, 50)
        assert not np.any(evaluate_batch(problem.oracle, batch, problem.solution))

    def test_hand_evaluated_value(self):
        """d = 1, delta = 1/2, x* = 0, no spread: T(4) = 2."""
        problem = make_holder(HolderSpec(d=1, exponent=0.5, target=[0.0]))
        np.testing.assert_allclose(problem.mean(np.array([4.0])), [2.0])
        np.testing.assert_allclose(problem.mean(np.array([-9.0])), [-3.0])
        assert problem.oracle.mean_modulus == 1.0

    @pytest.mark.parametrize("exponent", [0.0, 1.0, 1.5])
    def test_exponent_range(self, exponent):
        with pytest.raises(ValidationError):
            HolderSpec(d=2, exponent=exponent)

    def test_declared_modulus_holds(self, rng):
        problem = make_holder(HolderSpec(d=4, exponent=0.3, modulus_spread=0.2, seed=8))
        assert check_holder_continuity(problem, rng, n_pairs=300).passed


class TestNoiseLaw:

    def test_rademacher_entries_are_signs(self):
        signs = rademacher_signs(np.random.default_rng(7), (40, 3, 3))
        assert signs.shape == (40, 3, 3)
        assert set(np.unique(signs)) == {-1, 1}
        again = rademacher_signs(np.random.default_rng(7), (40, 3, 3))
        np.testing.assert_array_equal(signs, again)

    @pytest.mark.parametrize("spec", [
        AffineSviSpec(d=4, matrix_noise=0.3, vector_noise=0.2, noise_law=NoiseLaw.RADEMACHER, seed=1),
        AffineSviSpec(d=4, matrix_noise=0.3, vector_noise=0.2, seed=1),
        HolderSpec(d=4, modulus_spread=0.5, additive_noise=0.1, noise_law=NoiseLaw.RADEMACHER, seed=2),
        HolderSpec(d=4, modulus_spread=0.5, additive_noise=0.1, seed=2),
    ], ids=["affine-rademacher", "affine-gaussian", "holder-rademacher", "holder-gaussian"])
    def test_batch_mean_matches_stacked_rows(self, spec):
        problem = build_problem(spec)
        batch = draw_batch(problem.oracle, RngPlan(5), 0, StreamTag.XI, 64)
        x = problem.solution + 0.7
        rows = evaluate_batch(problem.oracle, batch, x)
        np.testing.assert_allclose(empirical_mean(problem.oracle, batch, x), rows.mean(axis=0),
                                   rtol=1e-10, atol=1e-12)

    def test_rademacher_noise_is_unbiased(self):
        spec = AffineSviSpec(d=3, matrix_noise=0.3, vector_noise=0.3, noise_law=NoiseLaw.RADEMACHER, seed=4)
        problem = build_problem(spec)
        assert check_unbiasedness(problem, problem.solution + 0.5, RngPlan(6)).passed

    def test_law_parsed_from_text(self):
        assert HolderSpec(d=2, noise_law="rademacher").noise_law == NoiseLaw.RADEMACHER
        with pytest.raises(ValidationError):
            HolderSpec(d=2, noise_law="uniform")


class TestPropertyChecks:

    @pytest.mark.parametrize("spec", [
        AffineSviSpec(d=3, matrix_noise=0.3, vector_noise=0.3, seed=1),
        SaddlePointSpec(m=2, n=3, coupling_noise=0.2, linear_noise=0.1, seed=2),
        HolderSpec(d=3, exponent=0.5, modulus_spread=0.5, additive_noise=0.1, seed=3),
    ], ids=["affine", "saddle", "holder"])
    def test_family_passes_checks(self, spec, rng):
        problem = build_problem(spec)
        x = problem.solution + 0.5
        assert check_unbiasedness(problem, x, RngPlan(6)).passed
        assert check_holder_continuity(problem, rng, n_pairs=200).passed
        assert check_pseudo_monotonicity(problem, rng, n_pairs=200).passed
        assert check_solution_certificate(problem).passed

    def test_every_family_listed(self):
        assert set(FAMILIES) == {"affine", "saddle", "holder"}
