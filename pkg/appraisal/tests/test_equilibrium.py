import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from appraisal.dynamics import alpha_threshold, vector_field
from appraisal.equilibrium import (
    MuOutOfRangeError,
    balance_residual,
    equilibrium_points,
    jacobian,
    mu_upper,
    psi,
    root_block,
    root_block_equilibrium,
    scaled_coefficients,
    solve_equilibrium,
    stability_report,
    stationary_vector,
    vertex_equilibria,
)
from appraisal.simulation import IntegratorConfig, integrate
from appraisal.verify import GeneratorSpec, random_network

from .builders import four_roots, k3, k3_leaf


class StationaryVectorTests(SimpleTestCase):
    def test_k3_is_uniform(self):
        np.testing.assert_allclose(stationary_vector(k3()).v, np.full(3, 1 / 3), atol=1e-15)

    def test_leaf_gets_zero_weight(self):
        v = stationary_vector(k3_leaf()).v
        np.testing.assert_allclose(v, [1 / 3, 1 / 3, 1 / 3, 0.0], atol=1e-15)
        self.assertEqual(v[3], 0.0)

    def test_mu_upper(self):
        self.assertAlmostEqual(stationary_vector(k3()).mu_upper, 0.75)


class PsiTests(SimpleTestCase):
    def test_zero_multiplier(self):
        self.assertEqual(psi(stationary_vector(k3()), 0.0), 0.0)

    def test_k3_hits_one_at_two_thirds(self):
        self.assertAlmostEqual(psi(stationary_vector(k3()), 2 / 3), 1.0, delta=1e-12)

    def test_above_upper_bound_rejected(self):
        with self.assertRaises(MuOutOfRangeError):
            psi(stationary_vector(k3()), 0.8)
        with self.assertRaises(MuOutOfRangeError):
            psi(stationary_vector(k3()), -0.1)

    def test_strictly_increasing_and_exceeds_one(self):
        v = stationary_vector(four_roots())
        upper = mu_upper(v)
        grid = [psi(v, mu) for mu in np.linspace(0.0, upper, 100)]
        self.assertTrue(np.all(np.diff(grid) > 0))
        self.assertGreater(grid[-1], 1.0)


class SolveEquilibriumTests(SimpleTestCase):
    def test_k3(self):
        report = solve_equilibrium(k3())
        self.assertLessEqual(np.max(np.abs(report.x_star - 1 / 3)), 1e-12)
        self.assertLessEqual(abs(report.mu - 2 / 3), 1e-12)
        self.assertTrue(report.stable)
        self.assertEqual(report.zero_eig_count, 1)
        np.testing.assert_allclose(report.jacobian_spectrum.real, [-0.5, -0.5, 0.0], atol=1e-12)

    def test_leaf_is_zero_at_equilibrium(self):
        report = solve_equilibrium(k3_leaf())
        np.testing.assert_allclose(report.x_star, [1 / 3, 1 / 3, 1 / 3, 0.0], atol=1e-12)
        self.assertTrue(report.stable)

    def test_report_dict(self):
        payload = solve_equilibrium(k3()).as_dict()
        self.assertEqual(
            sorted(payload),
            ["max_other_real_part", "mu", "residual", "spectrum", "stable", "x_star", "zero_eig_count"],
        )
        self.assertEqual(len(payload["spectrum"][0]), 2)

    def test_root_block_gives_the_same_point(self):
        model = k3_leaf()
        np.testing.assert_allclose(root_block_equilibrium(model), solve_equilibrium(model).x_star, atol=1e-10)
        blocks = root_block(model)
        self.assertEqual(blocks.c11.shape, (3, 3))
        self.assertFalse(np.any(blocks.c12))

    def test_perturbation_decays(self):
        model = four_roots()
        report = solve_equilibrium(model)
        delta = np.array([1.0, -1.0, 0.5, -0.5]) * 1e-3 / 3.0
        traj = integrate(model, report.x_star + delta, IntegratorConfig(horizon=100.0))
        self.assertLess(np.abs(traj.final_state - report.x_star).sum(), 1e-6)

    @settings(max_examples=25, deadline=None)
    @given(
        n=st.integers(min_value=3, max_value=12),
        leaves=st.integers(min_value=0, max_value=9),
        seed=st.integers(min_value=0, max_value=2**32),
    )
    def test_random_networks(self, n, leaves, seed):
        model = random_network(GeneratorSpec(n=n, non_root_count=min(leaves, n - 3), seed=seed))
        report = solve_equilibrium(model)
        roots = model.root_mask
        self.assertLessEqual(report.residual, 1e-10)
        self.assertTrue(np.all(report.x_star[~roots] == 0.0))
        self.assertTrue(np.all(report.x_star[roots] > 0.0))
        self.assertTrue(np.all(report.x_star <= alpha_threshold(n)))
        self.assertTrue(report.stable)
        self.assertLessEqual(float(np.max(report.stationary.v)), 1 / 3 + 1e-12)
        self.assertLessEqual(balance_residual(model, report.x_star), 1e-10)
        for i in model.roots:
            total = sum(c for (j, target), c in scaled_coefficients(model, report.x_star).items() if target == i)
            self.assertAlmostEqual(total, 1.0, delta=1e-10)


class JacobianTests(SimpleTestCase):
    def test_zero_state_gives_transposed_coefficients(self):
        model = four_roots()
        np.testing.assert_array_equal(jacobian(model, np.zeros(4)), model.coefficient_matrix.T)

    def test_central_differences(self):
        model = four_roots()
        x = np.array([0.4, 0.3, 0.2, 0.1])
        h = 1e-6
        exact = jacobian(model, x)
        for j in range(4):
            step = np.zeros(4)
            step[j] = h
            column = (vector_field(model, x + step) - vector_field(model, x - step)) / (2 * h)
            np.testing.assert_allclose(column, exact[:, j], atol=1e-8)

    def test_columns_sum_to_zero_at_equilibrium(self):
        model = k3()
        np.testing.assert_allclose(jacobian(model, solve_equilibrium(model).x_star).sum(axis=0), 0.0, atol=1e-15)

    def test_vertices_are_unstable(self):
        for found in vertex_equilibria(four_roots()):
            self.assertTrue(found.unstable)
            self.assertGreater(found.max_real_part, 0.0)

    def test_vertex_is_not_reported_stable(self):
        self.assertFalse(stability_report(k3(), [1.0, 0.0, 0.0]).stable)


class ScaledCoefficientTests(SimpleTestCase):
    def test_symmetric_k3_keeps_weights(self):
        scaled = scaled_coefficients(k3(), solve_equilibrium(k3()).x_star)
        self.assertEqual(len(scaled), 6)
        for value in scaled.values():
            self.assertAlmostEqual(value, 0.5, delta=1e-12)

    def test_asymmetric_roots(self):
        model = four_roots()
        x_star = solve_equilibrium(model).x_star
        scaled = scaled_coefficients(model, x_star)
        for i in range(4):
            total = sum(value for (j, target), value in scaled.items() if target == i)
            self.assertAlmostEqual(total, 1.0, delta=1e-10)
        self.assertTrue(any(abs(value - model.weight(j, i)) > 1e-3 for (j, i), value in scaled.items()))


class EquilibriumCountTests(SimpleTestCase):
    def test_k3_has_vertices_plus_one(self):
        points = equilibrium_points(k3(), samples=40, seed=1)
        self.assertEqual(len(points), 4)
        self.assertTrue(any(np.allclose(point, 1 / 3) for point in points))

    def test_leaf_network(self):
        points = equilibrium_points(k3_leaf(), samples=40, seed=2)
        self.assertEqual(len(points), 5)
