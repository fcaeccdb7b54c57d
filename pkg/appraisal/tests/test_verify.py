import json
from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from appraisal.network import WEIGHT_CAP, support_structure
from appraisal.simulation import integrate
from appraisal.verify import (
    GeneratorError,
    GeneratorSpec,
    InfeasibleSpecError,
    SuiteReport,
    UnknownSuiteError,
    _run_case,
    alpha_by_paths,
    case_seeds,
    chain_into_triad,
    random_network,
    reachability_oracle,
    run_suite,
    sample_boundary_state,
    sample_simplex,
)

from .builders import k3_leaf


class GeneratorTests(SimpleTestCase):
    def test_three_vertices_give_k3(self):
        model = random_network(GeneratorSpec.strongly_connected(3, seed=5))
        self.assertEqual(sorted((s, d) for s, d, _ in model.edges), [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)])
        self.assertTrue(all(w == 0.5 for _, _, w in model.edges))

    def test_rooted_with_leaves(self):
        spec = GeneratorSpec.rooted_with_leaves(8, 3, seed=42)
        model = random_network(spec)
        self.assertEqual(len(model.roots), 5)
        self.assertEqual(reachability_oracle(model), model.root_set)
        self.assertEqual(spec.topology, "RootedWithLeaves(3)")

    def test_deterministic(self):
        spec = GeneratorSpec(n=10, non_root_count=4, seed=9)
        self.assertEqual(random_network(spec).edges, random_network(spec).edges)

    def test_infeasible_specs(self):
        for spec in (
            GeneratorSpec(n=2),
            GeneratorSpec(n=5, non_root_count=3),
            GeneratorSpec(n=4, min_out_degree=4),
            GeneratorSpec(n=4, min_out_degree=1),
        ):
            with self.assertRaises(InfeasibleSpecError):
                random_network(spec)

    @settings(max_examples=60, deadline=None)
    @given(
        n=st.integers(min_value=3, max_value=12),
        leaves=st.integers(min_value=0, max_value=9),
        min_out=st.integers(min_value=2, max_value=3),
        seed=st.integers(min_value=0, max_value=2**64 - 1),
    )
    def test_generated_networks_are_admissible(self, n, leaves, min_out, seed):
        leaves = min(leaves, n - 3)
        if min_out > n - leaves - 1:
            min_out = 2
        model = random_network(GeneratorSpec(n=n, non_root_count=leaves, seed=seed, min_out_degree=min_out))
        self.assertEqual(len(model.roots), n - leaves)
        self.assertTrue(all(0.0 < w <= WEIGHT_CAP for _, _, w in model.edges))
        self.assertTrue(all(len(row) >= min_out for row in model.out_adjacency))


class SamplerTests(SimpleTestCase):
    def test_simplex_sample(self):
        x = sample_simplex(np.random.default_rng(0), 6)
        self.assertAlmostEqual(x.sum(), 1.0, places=14)
        self.assertTrue(np.all(x > 0))

    def test_boundary_sample(self):
        x = sample_boundary_state(np.random.default_rng(0), k3_leaf(), [0, 3])
        self.assertEqual(x[0], 0.0)
        self.assertEqual(x[3], 0.0)
        self.assertAlmostEqual(x.sum(), 1.0, places=14)

    def test_boundary_sample_cannot_be_a_vertex(self):
        with self.assertRaises(GeneratorError):
            sample_boundary_state(np.random.default_rng(0), k3_leaf(), [0, 1, 2])


class SuiteTests(SimpleTestCase):
    def test_case_seeds_are_reproducible(self):
        self.assertEqual(case_seeds(11, 4), case_seeds(11, 4))
        self.assertNotEqual(case_seeds(11, 4), case_seeds(12, 4))
        with self.assertRaises(GeneratorError):
            case_seeds(-1, 1)

    def test_unknown_suite(self):
        with self.assertRaises(UnknownSuiteError):
            run_suite("nope", 1)

    def test_support_oracle_passes(self):
        report = run_suite("support_oracle", 10, seed=3)
        self.assertTrue(report.passed, report.to_json())
        self.assertEqual(report.cases, 10)

    def test_equilibrium_suite_passes(self):
        self.assertTrue(run_suite("equilibrium", 5, seed=4).passed)

    def test_repeller_suite_passes(self):
        self.assertTrue(run_suite("repeller", 3, seed=5).passed)

    def test_invariance_suite_passes(self):
        self.assertTrue(run_suite("invariance", 2, seed=6, horizon=50.0).passed)

    def test_convergence_suite_passes(self):
        report = run_suite("convergence", 2, seed=7)
        self.assertTrue(report.passed, report.to_json())

    def test_boundary_suite_passes(self):
        self.assertTrue(run_suite("boundary", 3, seed=8, horizon=20.0).passed)

    def test_reports_are_byte_identical_across_workers(self):
        serial = run_suite("support_oracle", 6, seed=21).to_json()
        threaded = run_suite("support_oracle", 6, seed=21, workers=3).to_json()
        self.assertEqual(serial, threaded)
        self.assertEqual(json.loads(serial)["suite"], "support_oracle")

    def test_convergence_suite_runs_five_starts(self):
        with mock.patch("appraisal.verify.integrate", wraps=integrate) as spy:
            self.assertTrue(run_suite("convergence", 1, seed=7).passed)
        self.assertEqual(spy.call_count, 5)

    def test_invariance_suite_checks_every_trajectory(self):
        with mock.patch("appraisal.verify.integrate", wraps=integrate) as spy:
            report = run_suite("invariance", 1, seed=6, horizon=50.0)
        self.assertTrue(report.passed, report.to_json())
        self.assertGreaterEqual(spy.call_count, 4)

    def test_drifting_trajectory_is_reported(self):
        def drifting(model, x0, cfg=None):
            traj = integrate(model, x0, cfg)
            traj.max_simplex_drift = 1e-6
            return traj

        with mock.patch("appraisal.verify.integrate", side_effect=drifting):
            report = run_suite("invariance", 1, seed=6, horizon=20.0)
        drifts = [f for f in report.failures if f.invariant == "simplex sum drift"]
        self.assertGreaterEqual(len(drifts), 4)

    def test_leaf_chain_reaches_fourth_layer(self):
        model = chain_into_triad(4).model
        structure = support_structure(model, 3)
        self.assertEqual(structure.differences[4], frozenset({7}))
        self.assertAlmostEqual(structure.alpha[7], alpha_by_paths(model, 7, 3, 4), places=15)
        self.assertAlmostEqual(structure.alpha[7], 0.0625, places=15)

    def test_support_oracle_reaches_deep_layers(self):
        with mock.patch("appraisal.verify.alpha_by_paths", wraps=alpha_by_paths) as spy:
            self.assertTrue(run_suite("support_oracle", 2, seed=3).passed)
        depths = {call.args[3] for call in spy.call_args_list}
        self.assertTrue({3, 4} <= depths)

    def test_raised_errors_keep_the_report_valid_json(self):
        def broken(case):
            raise GeneratorError("no network today")

        failures = _run_case(broken, 0, 5, 10.0)
        self.assertIsNone(failures[0].magnitude)
        text = SuiteReport(suite="invariance", cases=1, seed=5, failures=failures).to_json()

        def reject(token):
            raise ValueError(token)

        document = json.loads(text, parse_constant=reject)
        self.assertIsNone(document["failures"][0]["magnitude"])
        self.assertIn("no network today", document["failures"][0]["invariant"])
