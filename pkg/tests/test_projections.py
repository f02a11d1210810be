"""
Tests for feasible sets, projections and the natural residual
"""

import numpy as np
import pytest
from pydantic import ValidationError

from dssa.exceptions import DimensionMismatchError
from dssa.projections.models import (
    EXACT_KINDS,
    FeasibleSet,
    SetKind,
    ball,
    box,
    from_callback,
    halfspace,
    nonnegative_orthant,
    product,
    simplex,
    whole_space,
)
from dssa.projections.service import (
    as_point,
    feasibility_residual,
    is_feasible,
    natural_residual,
    project,
    sample_feasible,
)


class TestFeasibleSetModel:

    def test_box_requires_both_bounds(self):
        """A box without upper bounds is rejected."""
        with pytest.raises(ValidationError):
            FeasibleSet(kind=SetKind.BOX, dimension=2, lower=0.0)

    def test_box_requires_ordered_bounds(self):
        with pytest.raises(ValidationError):
            box([0.0, 2.0], [1.0, 1.0], 2)

    def test_ball_requires_positive_radius(self):
        with pytest.raises(ValidationError):
            ball(0.0, 3)

    def test_halfspace_requires_nonzero_normal(self):
        with pytest.raises(ValidationError):
            halfspace([0.0, 0.0], 1.0)

    def test_product_dimensions_must_add_up(self):
        with pytest.raises(ValidationError):
            FeasibleSet(kind=SetKind.PRODUCT, dimension=4, blocks=[simplex(2), simplex(3)])

    def test_unknown_keys_rejected(self):
        """Strict parsing catches typos in set parameters."""
        with pytest.raises(ValidationError):
            FeasibleSet.model_validate({"kind": "ball", "dimension": 2, "radius": 1.0, "radious": 2.0})

    def test_compactness(self):
        assert box(0.0, 1.0, 2).is_compact
        assert simplex(3).is_compact
        assert not whole_space(2).is_compact
        assert not nonnegative_orthant(2).is_compact
        assert product(simplex(2), box(0.0, 1.0, 1)).is_compact
        assert from_callback(lambda x: x, 2, compact=True).is_compact


class TestProjection:

    def test_whole_space_is_identity(self):
        x = np.array([3.0, -7.5, 1e6])
        np.testing.assert_array_equal(project(whole_space(3), x), x)

    def test_unit_simplex_symmetric_point(self):
        np.testing.assert_allclose(project(simplex(3), [1.0, 1.0, 1.0]), [1 / 3, 1 / 3, 1 / 3], atol=1e-15)

    def test_unit_simplex_matches_brute_force_grid(self):
        """(2, 0, 0) projects to (1, 0, 0), also the best point of a 0.001-grid over the simplex."""
        x = np.array([2.0, 0.0, 0.0])
        projected = project(simplex(3), x)
        np.testing.assert_allclose(projected, [1.0, 0.0, 0.0], atol=1e-15)

        steps = np.arange(0, 1001) / 1000.0
        a, b = np.meshgrid(steps, steps, indexing="ij")
        mask = a + b <= 1.0 + 1e-12
        grid = np.stack([a[mask], b[mask], 1.0 - a[mask] - b[mask]], axis=1)
        best = grid[np.argmin(np.sum((grid - x) ** 2, axis=1))]
        np.testing.assert_allclose(best, projected, atol=1e-9)

    def test_box_clamps_componentwise(self):
        np.testing.assert_array_equal(project(box(0.0, 1.0, 2), [2.0, -1.0]), [1.0, 0.0])

    def test_ball_scales_onto_sphere(self):
        projected = project(ball(2.0, 2, center=[1.0, 0.0]), [4.0, 4.0])
        np.testing.assert_allclose(projected, [1.0 + 1.2, 1.6])

    def test_halfspace_projects_onto_boundary(self):
        projected = project(halfspace([1.0, 1.0], 1.0), [2.0, 2.0])
        np.testing.assert_allclose(projected, [0.5, 0.5])
        np.testing.assert_array_equal(project(halfspace([1.0, 1.0], 1.0), [0.0, 0.0]), [0.0, 0.0])

    def test_product_projects_per_block(self):
        feasible_set = product(simplex(2), box(-1.0, 1.0, 1))
        np.testing.assert_allclose(project(feasible_set, [2.0, 0.0, 5.0]), [1.0, 0.0, 1.0])

    def test_callback_shape_checked(self):
        feasible_set = from_callback(lambda x: x[:1], 2)
        with pytest.raises(DimensionMismatchError):
            project(feasible_set, [1.0, 2.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            project(box(0.0, 1.0, 2), [1.0, 2.0, 3.0])

    def test_as_point_rejects_nan(self):
        with pytest.raises(ValueError):
            as_point([1.0, np.nan], 2)


PROPERTY_SETS = [
    box([-1.0, 0.0, 0.5], [1.0, 0.2, 3.0], 3),
    ball(1.5, 3, center=[0.5, -0.5, 0.0]),
    simplex(3, scale=2.0),
    nonnegative_orthant(3),
    halfspace([1.0, -2.0, 0.5], 0.3),
]


class TestProjectionProperties:

    @pytest.mark.parametrize("feasible_set", PROPERTY_SETS, ids=[s.kind.value for s in PROPERTY_SETS])
    def test_projection_properties_on_random_pairs(self, feasible_set, rng):
        """Obtuse-angle inequality, nonexpansiveness and idempotence on 200 random pairs."""
        for _ in range(200):
            x, y = 3.0 * rng.standard_normal(3), 3.0 * rng.standard_normal(3)
            px, py = project(feasible_set, x), project(feasible_set, y)
            assert np.sum((px - py) ** 2) + np.sum((px - x) ** 2) <= np.sum((x - py) ** 2) + 1e-9
            assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-12
            assert float((px - y) @ (px - py)) >= np.sum((px - py) ** 2) - 1e-9
            np.testing.assert_allclose(project(feasible_set, px), px, atol=1e-12)

    def test_exact_kinds_cover_five_shapes(self):
        assert len(EXACT_KINDS) == 5
        assert SetKind.CALLBACK not in EXACT_KINDS

    def test_sampled_points_are_feasible(self, rng):
        for feasible_set in PROPERTY_SETS:
            for point in sample_feasible(feasible_set, 20, rng):
                assert is_feasible(feasible_set, point)


class TestNaturalResidual:

    def test_hand_evaluated_box_case(self):
        """1-d box [0, 1], x = 0.5, H = 1, alpha = 0.25 gives 0.25."""
        assert natural_residual(box(0.0, 1.0, 1), [1.0], [0.5], alpha=0.25) == pytest.approx(0.25)

    def test_zero_at_solution(self):
        # T(x) = x - 3 on [0, 10]: solution 3
        assert natural_residual(box(0.0, 10.0, 1), [0.0], [3.0]) == 0.0
        # T(x) = x + 1 on [0, 10]: solution 0 at the boundary
        assert natural_residual(box(0.0, 10.0, 1), [1.0], [0.0]) == 0.0

    @pytest.mark.parametrize("alpha", [0.0, -1.0])
    def test_nonpositive_alpha_rejected(self, alpha):
        with pytest.raises(ValueError):
            natural_residual(whole_space(1), [1.0], [0.0], alpha=alpha)

    def test_ratio_nonincreasing_in_alpha(self, rng):
        """alpha -> r_alpha / alpha does not increase on a dyadic grid."""
        alphas = [2.0**-i for i in range(10, -1, -1)]
        for feasible_set in PROPERTY_SETS:
            x, h = 3.0 * rng.standard_normal(3), 3.0 * rng.standard_normal(3)
            ratios = [natural_residual(feasible_set, h, x, a) / a for a in alphas]
            assert all(b <= a + 1e-12 * (1.0 + a) for a, b in zip(ratios, ratios[1:]))

    def test_feasibility_residual(self):
        assert feasibility_residual(box(0.0, 1.0, 2), [2.0, 0.5]) == pytest.approx(1.0)
