"""
Reference element tests.

Critical tests:
1. Lagrange property and partition of unity of P1, P2, Q1
2. Analytic gradients against central differences
3. Quadrature exactness on monomials
4. Face restriction: a face trace only depends on the face nodes
"""
import math

import numpy as np
import pytest

from engine.errors import OutOfCell, UnsupportedDegree
from engine.reference_elements import (
    HEX_FACES,
    P1_BASIS,
    P2_BASIS,
    Q1_BASIS,
    REFERENCE_VOLUME,
    TET_EDGES,
    TET_FACES,
    BasisOrder,
    CellKind,
    FaceKind,
    basis_for,
    eval_basis,
    eval_grad,
    face_quadrature_for,
    quadrature_for,
)

ALL_BASES = [P1_BASIS, P2_BASIS, Q1_BASIS]


def random_points(kind: CellKind, n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if kind is CellKind.HEX:
        return rng.random((n, 3))
    # uniform in the reference tet via sorted uniforms
    u = np.sort(rng.random((n, 3)), axis=1)
    return np.column_stack([u[:, 0], u[:, 1] - u[:, 0], u[:, 2] - u[:, 1]])


class TestBasisValues:
    """Closed-form values at nodes and special points."""

    @pytest.mark.parametrize("basis", ALL_BASES, ids=lambda b: b.order_tag.value)
    def test_lagrange_property(self, basis):
        """Basis i at node j is the Kronecker delta."""
        values = eval_basis(basis, basis.node_coords)
        np.testing.assert_allclose(values, np.eye(basis.node_count), atol=1e-14)

    @pytest.mark.parametrize("basis", ALL_BASES, ids=lambda b: b.order_tag.value)
    def test_partition_of_unity(self, basis):
        pts = random_points(basis.cell_kind, 200)
        np.testing.assert_allclose(eval_basis(basis, pts).sum(axis=1), 1.0, atol=1e-13)

    def test_q1_at_vertex(self):
        """Q1 at q2 = (1,0,0) selects the second function."""
        expected = np.zeros(8)
        expected[1] = 1.0
        np.testing.assert_allclose(eval_basis(Q1_BASIS, [1.0, 0.0, 0.0]), expected, atol=1e-15)

    def test_q1_at_center(self):
        np.testing.assert_allclose(eval_basis(Q1_BASIS, [0.5, 0.5, 0.5]), np.full(8, 0.125))

    def test_q1_fourth_and_eighth_functions(self):
        """psi_4 = (1-u) v (1-w) and psi_8 = (1-u) v w."""
        u, v, w = 0.3, 0.6, 0.2
        values = eval_basis(Q1_BASIS, [u, v, w])
        assert values[3] == pytest.approx((1 - u) * v * (1 - w))
        assert values[7] == pytest.approx((1 - u) * v * w)

    def test_p2_edge_function_at_midpoint(self):
        """4 l1 l2 = 1 at the midpoint of the first edge."""
        values = eval_basis(P2_BASIS, [0.5, 0.0, 0.0])
        assert values[4] == pytest.approx(1.0)
        assert TET_EDGES[0] == (0, 1)

    def test_single_point_shape(self):
        assert eval_basis(P2_BASIS, [0.1, 0.1, 0.1]).shape == (10,)
        assert eval_grad(Q1_BASIS, [0.1, 0.1, 0.1]).shape == (8, 3)

    def test_bad_shape_rejected(self):
        with pytest.raises(ValueError):
            eval_basis(P1_BASIS, [0.1, 0.2])

    def test_basis_for_lookup(self):
        assert basis_for(CellKind.TET, BasisOrder.P2) is P2_BASIS
        with pytest.raises(ValueError):
            basis_for(CellKind.HEX, BasisOrder.P2)


class TestOutOfCell:
    """Points outside the closed reference cell are rejected."""

    def test_outside_tet(self):
        with pytest.raises(OutOfCell):
            eval_basis(P2_BASIS, [0.6, 0.6, 0.0])

    def test_outside_hex(self):
        with pytest.raises(OutOfCell):
            eval_grad(Q1_BASIS, [1.1, 0.0, 0.0])

    def test_boundary_tolerance(self):
        """Points within 1e-12 of the boundary are accepted."""
        eval_basis(P1_BASIS, [1.0 + 5e-13, 0.0, 0.0])
        eval_basis(Q1_BASIS, [-5e-13, 0.0, 1.0])


class TestBasisGradients:
    """Analytic gradients."""

    def test_p1_gradients_constant(self):
        for p in random_points(CellKind.TET, 5):
            grads = eval_grad(P1_BASIS, p)
            np.testing.assert_allclose(grads[1], [1.0, 0.0, 0.0])
            np.testing.assert_allclose(grads[0], [-1.0, -1.0, -1.0])

    @pytest.mark.parametrize("basis", ALL_BASES, ids=lambda b: b.order_tag.value)
    def test_gradients_sum_to_zero(self, basis):
        grads = eval_grad(basis, random_points(basis.cell_kind, 50))
        np.testing.assert_allclose(grads.sum(axis=1), 0.0, atol=1e-13)

    def test_q1_seventh_gradient_at_far_corner(self):
        """grad(uvw) at (1,1,1) is (1,1,1)."""
        np.testing.assert_allclose(eval_grad(Q1_BASIS, [1.0, 1.0, 1.0])[6], [1.0, 1.0, 1.0])

    @pytest.mark.parametrize("basis", ALL_BASES, ids=lambda b: b.order_tag.value)
    def test_gradients_match_central_differences(self, basis):
        h = 1e-6
        # keep p +- h inside the cell
        pts = 0.05 + 0.8 * random_points(basis.cell_kind, 20, seed=3)
        grads = eval_grad(basis, pts)
        for axis in range(3):
            e = np.zeros(3)
            e[axis] = h
            fd = (eval_basis(basis, pts + e) - eval_basis(basis, pts - e)) / (2 * h)
            scale = np.maximum(np.abs(grads[:, :, axis]), 1.0)
            assert np.max(np.abs(fd - grads[:, :, axis]) / scale) < 1e-6


class TestFaceRestriction:
    """A face trace is reproduced by the face nodes alone."""

    def test_p2_trace_on_tet_face(self):
        rng = np.random.default_rng(11)
        coeffs = rng.normal(size=10)
        # face opposite vertex 3 is w = 0
        face = TET_FACES[3]
        on_face = set(face) | {4 + e for e, (i, j) in enumerate(TET_EDGES) if i in face and j in face}
        trimmed = np.where([k in on_face for k in range(10)], coeffs, 0.0)
        st = random_points(CellKind.TET, 30, seed=5)[:, :2]
        st = st[st.sum(axis=1) <= 1.0]
        pts = np.column_stack([st, np.zeros(len(st))])
        values = eval_basis(P2_BASIS, pts)
        np.testing.assert_allclose(values @ coeffs, values @ trimmed, atol=1e-13)

    def test_q1_trace_on_hex_face(self):
        rng = np.random.default_rng(12)
        coeffs = rng.normal(size=8)
        face = HEX_FACES[0]  # w = 0
        trimmed = np.where([k in face for k in range(8)], coeffs, 0.0)
        pts = np.column_stack([rng.random((30, 2)), np.zeros(30)])
        values = eval_basis(Q1_BASIS, pts)
        np.testing.assert_allclose(values @ coeffs, values @ trimmed, atol=1e-13)


class TestQuadrature:
    """Quadrature rules and their exactness."""

    def test_hex_degree_3_is_2x2x2(self):
        rule = quadrature_for(CellKind.HEX, 3)
        assert rule.size == 8
        assert rule.weights.sum() == pytest.approx(1.0)

    def test_tet_degree_2_has_4_points(self):
        rule = quadrature_for(CellKind.TET, 2)
        assert rule.size == 4
        assert rule.weights.sum() == pytest.approx(1.0 / 6.0)

    def test_tet_degree_4_on_x2y2(self):
        """x^2 y^2 integrates to 2! 2! / 7! over the reference tet."""
        rule = quadrature_for(CellKind.TET, 4)
        x, y = rule.points[:, 0], rule.points[:, 1]
        exact = 2 * 2 / math.factorial(7)
        assert np.sum(rule.weights * x ** 2 * y ** 2) == pytest.approx(exact, abs=1e-14)

    @pytest.mark.parametrize("degree", [1, 2, 3, 4, 5, 6])
    def test_tet_monomial_exactness(self, degree):
        rule = quadrature_for(CellKind.TET, degree)
        x, y, z = rule.points.T
        for i in range(degree + 1):
            for j in range(degree + 1 - i):
                for k in range(degree + 1 - i - j):
                    exact = math.factorial(i) * math.factorial(j) * math.factorial(k) / math.factorial(i + j + k + 3)
                    approx = np.sum(rule.weights * x ** i * y ** j * z ** k)
                    assert approx == pytest.approx(exact, abs=1e-12)

    @pytest.mark.parametrize("degree", [3, 5, 9])
    def test_hex_per_axis_exactness(self, degree):
        rule = quadrature_for(CellKind.HEX, degree)
        x, y, z = rule.points.T
        for i in (0, degree // 2, degree):
            exact = 1.0 / (i + 1) / (degree + 1)
            assert np.sum(rule.weights * x ** i * y ** degree) == pytest.approx(exact, abs=1e-12)
            assert np.sum(rule.weights * z ** i) == pytest.approx(1.0 / (i + 1), abs=1e-12)

    @pytest.mark.parametrize("kind", [CellKind.TET, CellKind.HEX])
    def test_weights_positive_and_volume(self, kind):
        for degree in range(0, 7):
            rule = quadrature_for(kind, degree)
            assert np.all(rule.weights > 0.0)
            assert rule.weights.sum() == pytest.approx(REFERENCE_VOLUME[kind], abs=1e-14)

    def test_unsupported_degrees(self):
        with pytest.raises(UnsupportedDegree):
            quadrature_for(CellKind.TET, 7)
        with pytest.raises(UnsupportedDegree):
            quadrature_for(CellKind.HEX, 10)

    def test_triangle_face_rule(self):
        rule = face_quadrature_for(FaceKind.TRI, 4)
        s, t = rule.points.T
        assert rule.weights.sum() == pytest.approx(0.5)
        # s^2 t^2 over the unit triangle = 2! 2! / 6!
        assert np.sum(rule.weights * s ** 2 * t ** 2) == pytest.approx(4 / 720, abs=1e-14)

    def test_square_face_rule(self):
        rule = face_quadrature_for(FaceKind.QUAD, 3)
        s, t = rule.points.T
        assert np.sum(rule.weights * s ** 3 * t) == pytest.approx(0.125)
