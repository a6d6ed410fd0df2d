"""
Analytics engine tests.

Critical tests:
1. Rates and matched-dof comparisons on synthetic power laws
2. L2 error of an in-space interpolant is zero
3. L2 error against a stratified Monte-Carlo oracle
"""
import math

import numpy as np
import pytest

from application.analytics_engine import AnalyticsEngine
from application.mesh_generator import MeshGenSpec, MeshMode, generate_mesh
from application.problems import poisson_exact
from engine.function_spaces import SpaceKind, build_space
from engine.reference_elements import CellKind

from sample_meshes import make_single_hex, mesh_pipeline


def space_on(mesh, kind):
    interfaces, mappings = mesh_pipeline(mesh)
    return mappings, build_space(mesh, mappings, interfaces, kind)


def trilinear_on_grid(values: np.ndarray, n: int, x: np.ndarray) -> np.ndarray:
    """Q1 field on the uniform n^3 grid evaluated at points x."""
    m = n + 1
    cell = np.minimum(np.floor(x * n).astype(int), n - 1)
    local = x * n - cell
    out = np.zeros(x.shape[0])
    for dk in (0, 1):
        for dj in (0, 1):
            for di in (0, 1):
                idx = (cell[:, 0] + di) + m * ((cell[:, 1] + dj) + m * (cell[:, 2] + dk))
                w = (
                    np.where(di, local[:, 0], 1 - local[:, 0])
                    * np.where(dj, local[:, 1], 1 - local[:, 1])
                    * np.where(dk, local[:, 2], 1 - local[:, 2])
                )
                out += w * values[idx]
    return out


class TestRates:
    """Synthetic error curves."""

    def test_pairwise_rates(self):
        rates = AnalyticsEngine.pairwise_rates([1000, 8000, 64000], [1e-2, 2.5e-3, 6.25e-4])
        np.testing.assert_allclose(rates, [2.0, 2.0])

    def test_fit_rate(self):
        dofs = [125, 1000, 3375, 8000]
        errors = [d ** (-2.0 / 3.0) * 3.0 for d in dofs]
        assert AnalyticsEngine.fit_rate(dofs, errors) == pytest.approx(2.0)

    def test_fit_rate_uses_last_points(self):
        dofs = [8, 1000, 8000]
        errors = [1.0, 1e-2, 2.5e-3]
        assert AnalyticsEngine.fit_rate(dofs, errors, last=2) == pytest.approx(2.0)

    def test_fit_rate_needs_two_points(self):
        assert AnalyticsEngine.fit_rate([1000], [1e-3]) is None

    def test_mesh_size(self):
        assert AnalyticsEngine.mesh_size(1000) == pytest.approx(0.1)


class TestComparisons:
    def test_error_at_dofs_interpolates(self):
        dofs, errors = [1000, 8000], [1e-2, 2.5e-3]
        assert AnalyticsEngine.error_at_dofs(dofs, errors, 8000) == pytest.approx(2.5e-3)
        mid = math.sqrt(1000 * 8000)
        assert AnalyticsEngine.error_at_dofs(dofs, errors, mid) == pytest.approx(5e-3)

    def test_error_at_dofs_extrapolates(self):
        assert AnalyticsEngine.error_at_dofs([1000, 8000], [1e-2, 2.5e-3], 64000) == pytest.approx(6.25e-4)

    def test_matched_dof_ratio(self):
        dofs = [100, 800, 2700]
        errors = [0.1, 0.025, 0.011]
        ratio = AnalyticsEngine.matched_dof_ratio(dofs, errors, dofs, [3 * e for e in errors])
        assert ratio == pytest.approx(3.0)

    def test_matched_dof_ratio_shifted_curves(self):
        """Same rate, b needs 8x the dofs for the same error: ratio 2^2."""
        dofs_a = [1000, 8000, 64000]
        errs_a = [d ** (-2.0 / 3.0) for d in dofs_a]
        dofs_b = [8000, 64000, 512000]
        errs_b = [(d / 8.0) ** (-2.0 / 3.0) for d in dofs_b]
        assert AnalyticsEngine.matched_dof_ratio(dofs_a, errs_a, dofs_b, errs_b) == pytest.approx(4.0)


class TestL2Error:
    """Quadrature-based relative L2 error."""

    def test_in_space_field_on_hex(self):
        mesh = make_single_hex()
        mappings, dofs = space_on(mesh, SpaceKind.Q1)

        def f(x):
            return 1.0 + x[:, 0] * x[:, 1] * x[:, 2] - x[:, 1]

        u = dofs.interpolate(f)
        assert AnalyticsEngine.l2_relative_error(mesh, mappings, dofs, u, f) <= 1e-12

    @pytest.mark.parametrize("kind", [SpaceKind.HYB1, SpaceKind.HYB12])
    def test_in_space_field_on_hybrid(self, kind):
        mesh = generate_mesh(MeshGenSpec(n=3, d=0.0, tet_fraction=0.4, seed=6))
        mappings, dofs = space_on(mesh, kind)

        def f(x):
            return 2.0 + x[:, 0] - 3.0 * x[:, 2]

        u = dofs.interpolate(f)
        assert AnalyticsEngine.l2_relative_error(mesh, mappings, dofs, u, f) <= 1e-12

    def test_vector_field(self, junction_mesh):
        mappings, dofs = space_on(junction_mesh, SpaceKind.HYB1)

        def f(x):
            return np.column_stack([np.ones(x.shape[0]), x[:, 0], np.zeros(x.shape[0])])

        u = np.concatenate([np.ones(dofs.n_free), np.zeros(dofs.n_free), np.zeros(dofs.n_free)])
        err_sq, ref_sq = AnalyticsEngine.integrate_error(mappings, dofs, u, f)
        # u_h - f = (0, -x, 0); reference |f|^2 = 1 + x^2
        assert err_sq > 0.0
        assert ref_sq > err_sq

    def test_zero_exact_field_returns_absolute(self, single_hex):
        mappings, dofs = space_on(single_hex, SpaceKind.Q1)
        u = np.full(8, 2.0)
        err = AnalyticsEngine.l2_relative_error(single_hex, mappings, dofs, u, lambda x: np.zeros(x.shape[0]))
        assert err == pytest.approx(2.0)

    def test_matches_monte_carlo_oracle(self):
        n = 4
        mesh = generate_mesh(MeshGenSpec(n=n, d=0.0, mode=MeshMode.ALL_HEX))
        mappings, dofs = space_on(mesh, SpaceKind.Q1)
        u = dofs.interpolate(poisson_exact)
        quad = AnalyticsEngine.l2_relative_error(mesh, mappings, dofs, u, poisson_exact)

        # stratified: the same number of uniform samples in every cell
        rng = np.random.default_rng(2024)
        per_cell = 1_000_000 // n ** 3
        corners = np.stack(np.meshgrid(*(np.arange(n),) * 3, indexing="ij"), axis=-1).reshape(-1, 3)
        x = (np.repeat(corners, per_cell, axis=0) + rng.random((corners.shape[0] * per_cell, 3))) / n
        exact = poisson_exact(x)
        approx = trilinear_on_grid(u, n, x)
        oracle = math.sqrt(np.mean((approx - exact) ** 2) / np.mean(exact ** 2))
        assert quad == pytest.approx(oracle, rel=5e-3)

    def test_q1_interpolation_error_ratio(self):
        errors = []
        for n in (4, 8):
            mesh = generate_mesh(MeshGenSpec(n=n, d=0.0, mode=MeshMode.ALL_HEX))
            mappings, dofs = space_on(mesh, SpaceKind.Q1)
            u = dofs.interpolate(poisson_exact)
            errors.append(AnalyticsEngine.l2_relative_error(mesh, mappings, dofs, u, poisson_exact))
        assert 3.3 <= errors[0] / errors[1] <= 4.8

    def test_explicit_degrees_keyed_by_cell_kind(self):
        mesh = generate_mesh(MeshGenSpec(n=3, d=0.0, tet_fraction=0.4, seed=6))
        mappings, dofs = space_on(mesh, SpaceKind.HYB1)
        u = dofs.interpolate(poisson_exact)
        default = AnalyticsEngine.integrate_error(mappings, dofs, u, poisson_exact)
        explicit = AnalyticsEngine.integrate_error(
            mappings, dofs, u, poisson_exact, {CellKind.TET: 6, CellKind.HEX: 7}
        )
        np.testing.assert_allclose(explicit, default, rtol=1e-12)

    def test_partial_degrees_fall_back_to_default(self):
        mesh = generate_mesh(MeshGenSpec(n=3, d=0.0, tet_fraction=0.4, seed=6))
        mappings, dofs = space_on(mesh, SpaceKind.HYB1)
        u = dofs.interpolate(poisson_exact)
        err = AnalyticsEngine.l2_relative_error(mesh, mappings, dofs, u, poisson_exact, {CellKind.HEX: 5})
        assert math.isfinite(err) and 0.0 < err < 1.0
