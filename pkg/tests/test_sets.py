import numpy as np
import pytest

from hyra.errors import DimensionMismatch, MatrixOverflow
from hyra.ir import Condition, LinearConstraint
from hyra.sets import (
    Box,
    TemplatePolytope,
    Zonotope,
    box_hull,
    box_octagon_directions,
    exp_with_integral,
    hull_zonotope,
    intersect_condition,
    linear_map,
    matrix_exponential,
    minkowski_sum,
    reduce_order,
    support,
)


def taylor_expm(a, t, terms=60):
    """Raw truncated Taylor series; the independent oracle."""
    a = np.asarray(a, dtype=float) * t
    n = a.shape[0]
    acc = np.eye(n)
    term = np.eye(n)
    for k in range(1, terms + 1):
        term = term @ a / k
        acc = acc + term
    return acc


def unit_square():
    return Zonotope([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]])


# ---------------------------------------------------------------------------
# matrix exponential


def test_expm_of_zero_is_identity():
    assert np.array_equal(matrix_exponential(np.zeros((3, 3)), 1.0), np.eye(3))


def test_expm_nilpotent_closed_form():
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.allclose(matrix_exponential(a, 1.0), [[1.0, 1.0], [0.0, 1.0]], atol=1e-15)


def test_expm_matches_taylor_oracle():
    rng = np.random.default_rng(7)
    for _ in range(10):
        a = rng.uniform(-1.0, 1.0, size=(4, 4))
        got = matrix_exponential(a, 1.0)
        want = taylor_expm(a, 1.0)
        assert np.max(np.abs(got - want)) <= 1e-9 * max(1.0, np.max(np.abs(want)))


def test_expm_semigroup_and_inverse():
    rng = np.random.default_rng(11)
    for _ in range(5):
        a = rng.uniform(-1.0, 1.0, size=(3, 3))
        s, t = 0.7, 0.9  # ||A||_1 (s+t) stays below 5
        left = matrix_exponential(a, s + t)
        right = matrix_exponential(a, s) @ matrix_exponential(a, t)
        assert np.max(np.abs(left - right)) <= 1e-9
        prod = matrix_exponential(a, 1.0) @ matrix_exponential(a, -1.0)
        assert np.max(np.abs(prod - np.eye(3))) <= 1e-9


def test_expm_overflow_guard():
    with pytest.raises(MatrixOverflow):
        matrix_exponential(np.eye(2) * 2e6, 1.0)


def test_exp_with_integral_matches_quadrature():
    a = np.array([[0.0, 1.0], [-2.0, -0.5]])
    t = 0.3
    _, integral = exp_with_integral(a, t)
    # trapezoid quadrature of e^(A s) over [0, t] as an independent check
    grid = np.linspace(0.0, t, 2001)
    vals = np.array([taylor_expm(a, s) for s in grid])
    quad = np.trapezoid(vals, grid, axis=0)
    assert np.max(np.abs(integral - quad)) <= 1e-8


# ---------------------------------------------------------------------------
# zonotope operations


def test_linear_map_identity_and_scaling():
    z = unit_square()
    same = linear_map(np.eye(2), z)
    assert np.array_equal(same.center, z.center)
    assert np.array_equal(same.generators, z.generators)
    doubled = linear_map(2.0 * np.eye(2), z)
    assert np.array_equal(doubled.generators, 2.0 * z.generators)


def test_linear_map_sampling_oracle():
    rng = np.random.default_rng(3)
    z = Zonotope(rng.normal(size=3), rng.normal(size=(3, 5)))
    m = rng.normal(size=(2, 3))
    mapped_box = box_hull(linear_map(m, z))
    for point in z.sample(1000, seed=99):
        assert mapped_box.contains(m @ point, slack=1e-9)


def test_linear_map_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        linear_map(np.eye(3), unit_square())


def test_minkowski_identity_element():
    z = unit_square()
    summed = minkowski_sum(z, Zonotope.point([0.0, 0.0]))
    assert np.array_equal(summed.center, z.center)
    assert np.array_equal(summed.generators, z.generators)


def test_minkowski_two_segments_make_square():
    seg_x = Zonotope([0.0, 0.0], [[1.0], [0.0]])
    seg_y = Zonotope([0.0, 0.0], [[0.0], [1.0]])
    square = box_hull(minkowski_sum(seg_x, seg_y))
    assert np.array_equal(square.lo, [-1.0, -1.0])
    assert np.array_equal(square.hi, [1.0, 1.0])


def test_minkowski_support_additivity():
    rng = np.random.default_rng(5)
    z1 = Zonotope(rng.normal(size=3), rng.normal(size=(3, 4)))
    z2 = Zonotope(rng.normal(size=3), rng.normal(size=(3, 2)))
    total = minkowski_sum(z1, z2)
    for _ in range(100):
        d = rng.normal(size=3)
        assert support(total, d) == pytest.approx(support(z1, d) + support(z2, d), abs=1e-12)


def test_support_of_unit_square():
    assert support(unit_square(), [1.0, 0.0]) == 1.0


def test_box_hull_contains_samples_exactly():
    rng = np.random.default_rng(17)
    z = Zonotope(rng.normal(size=4), rng.normal(size=(4, 7)))
    box = box_hull(z)
    for point in z.sample(1000, seed=23):
        assert box.contains(point)  # no tolerance: interval arithmetic is exact here


def test_hull_zonotope_contains_both_operands():
    rng = np.random.default_rng(31)
    z1 = Zonotope(rng.normal(size=2), rng.normal(size=(2, 3)))
    z2 = Zonotope(rng.normal(size=2), rng.normal(size=(2, 3)))
    hull = hull_zonotope(z1, z2)
    dirs = box_octagon_directions(2)
    for d in dirs:
        assert support(hull, d) >= support(z1, d) - 1e-12
        assert support(hull, d) >= support(z2, d) - 1e-12


def test_reduce_order_noop_when_within_cap():
    z = Zonotope(np.zeros(2), np.ones((2, 3)))
    assert reduce_order(z, 3) is z


def test_reduce_order_containment_oracle():
    rng = np.random.default_rng(41)
    directions = rng.normal(size=(16, 3))
    for _ in range(100):
        z = Zonotope(rng.normal(size=3), rng.normal(size=(3, 12)))
        reduced = reduce_order(z, 4)
        assert reduced.order <= max(4, 3)
        for d in directions:
            assert support(reduced, d) >= support(z, d) - 1e-12


def test_intersect_axis_aligned_clamp():
    box = Box([0.0, 0.0], [2.0, 2.0])
    cond = Condition((LinearConstraint([1.0, 0.0], "<=", 1.0),))
    clamped = intersect_condition(box, cond)
    assert np.array_equal(clamped.lo, [0.0, 0.0])
    assert np.array_equal(clamped.hi, [1.0, 2.0])


def test_intersect_reports_empty():
    box = Box([0.0], [1.0])
    cond = Condition((LinearConstraint([1.0], ">=", 2.0),))
    assert intersect_condition(box, cond) is None


def test_intersect_general_row_tightens_soundly():
    box = Box([0.0, 0.0], [2.0, 2.0])
    cond = Condition((LinearConstraint([1.0, 1.0], "<=", 1.0),))
    clamped = intersect_condition(box, cond)
    assert np.array_equal(clamped.hi, [1.0, 1.0])
    # sound: every point of the true intersection stays inside
    rng = np.random.default_rng(2)
    pts = rng.uniform(0.0, 2.0, size=(500, 2))
    for p in pts[pts.sum(axis=1) <= 1.0]:
        assert clamped.contains(p)


def test_intersect_equality_is_two_sided():
    box = Box([-1.0, -1.0], [1.0, 1.0])
    cond = Condition((LinearConstraint([1.0, 0.0], "==", 0.25),))
    clamped = intersect_condition(box, cond)
    assert clamped.lo[0] == clamped.hi[0] == 0.25


def test_strict_relations_treated_as_closed():
    box = Box([0.0], [2.0])
    lt = intersect_condition(box, Condition((LinearConstraint([1.0], "<", 1.0),)))
    assert lt.hi[0] == 1.0


def test_template_polytope_from_zonotope():
    z = unit_square()
    directions = box_octagon_directions(2)
    assert directions.shape[0] >= 2 * z.dim
    poly = TemplatePolytope.from_zonotope(z, directions)
    for point in z.sample(200, seed=1):
        assert poly.contains(point, slack=1e-12)
    assert not poly.contains([3.0, 0.0])
