import io

import numpy as np
from django.test import SimpleTestCase

from appraisal.dynamics import NotInSimplexError
from appraisal.formats import (
    NetworkFileError,
    NetworkParseError,
    dump_network,
    load_network,
    parse_network,
    parse_opinions,
    parse_raw_network,
    parse_state,
    read_trajectory_csv,
    write_trajectory_csv,
)
from appraisal.network import InvalidNetworkError
from appraisal.simulation import IntegratorConfig, integrate
from appraisal.verify import GeneratorSpec, random_network, sample_simplex

from .builders import DATA_DIR, k3


class NetworkFileTests(SimpleTestCase):
    def test_load_fixture(self):
        model = load_network(DATA_DIR / "k3leaf.json")
        self.assertEqual(model.n, 4)
        self.assertEqual(model.roots, (0, 1, 2))

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            load_network(DATA_DIR / "missing.json")

    def test_syntax_error_is_positioned(self):
        with self.assertRaises(NetworkParseError) as ctx:
            parse_raw_network('{"n": 3,\n "edges": [[0, 1, 0.5],]}')
        self.assertEqual(ctx.exception.line, 2)
        self.assertIsNotNone(ctx.exception.column)

    def test_nan_rejected_with_position(self):
        text = '{"n": 3,\n  "edges": [[0, 1, NaN]]}'
        with self.assertRaises(NetworkParseError) as ctx:
            parse_raw_network(text)
        self.assertEqual((ctx.exception.line, ctx.exception.column), (2, 20))
        self.assertIn("NaN", str(ctx.exception))

    def test_overflowing_weight_rejected(self):
        with self.assertRaises(NetworkParseError) as ctx:
            parse_raw_network('{"n": 3, "edges": [[0, 1, 1e999]]}')
        self.assertEqual(ctx.exception.line, 1)
        self.assertEqual(ctx.exception.column, 27)

    def test_huge_integer_weight_rejected(self):
        with self.assertRaisesMessage(NetworkParseError, "edges[0][2] is too large for a float"):
            parse_raw_network('{"n": 3, "edges": [[0, 1, 1' + "0" * 400 + "]]}")

    def test_missing_fields_named(self):
        with self.assertRaisesMessage(NetworkParseError, "missing field 'edges'"):
            parse_raw_network('{"n": 3}')
        with self.assertRaisesMessage(NetworkParseError, "missing field edges[1][2]"):
            parse_raw_network('{"n": 3, "edges": [[0, 1, 0.5], [0, 2]]}')

    def test_boolean_weight_rejected(self):
        with self.assertRaisesMessage(NetworkParseError, "edges[0][2] must be a number"):
            parse_raw_network('{"n": 3, "edges": [[0, 1, true]]}')

    def test_invalid_model_surfaces_validation_errors(self):
        with self.assertRaises(InvalidNetworkError):
            parse_network('{"n": 3, "edges": [[0, 1, 0.5], [0, 2, 0.5]]}')

    def test_generated_network_round_trips(self):
        model = random_network(GeneratorSpec(n=8, non_root_count=3, seed=42))
        self.assertEqual(parse_network(dump_network(model)), model)


class StateParsingTests(SimpleTestCase):
    def test_uniform(self):
        np.testing.assert_allclose(parse_state("uniform", 4), np.full(4, 0.25))

    def test_random_uses_simplex_sampler(self):
        expected = sample_simplex(np.random.default_rng(7), 5)
        np.testing.assert_array_equal(parse_state("random:7", 5), expected)

    def test_explicit_values(self):
        np.testing.assert_allclose(parse_state("0.5, 0.25, 0.25", 3), [0.5, 0.25, 0.25])

    def test_explicit_values_must_sum_to_one(self):
        with self.assertRaises(NotInSimplexError):
            parse_state("0.5,0.5,0.5", 3)

    def test_bad_seed(self):
        with self.assertRaises(NetworkFileError):
            parse_state("random:abc", 3)

    def test_opinions_length_checked(self):
        with self.assertRaises(NetworkFileError):
            parse_opinions("0,1", 3)


class TrajectoryCsvTests(SimpleTestCase):
    def test_header_rows_and_events(self):
        traj = integrate(k3(), [0.9, 0.05, 0.05], IntegratorConfig(horizon=1.0, record_every=10))
        buffer = io.StringIO()
        write_trajectory_csv(traj, buffer)
        lines = buffer.getvalue().splitlines()
        self.assertEqual(lines[0], "t,x0,x1,x2")
        self.assertEqual(len([line for line in lines[1:] if not line.startswith("#")]), len(traj))

        parsed = read_trajectory_csv(io.StringIO(buffer.getvalue()))
        np.testing.assert_array_equal(parsed["states"], traj.states)
        np.testing.assert_array_equal(parsed["times"], traj.times)
