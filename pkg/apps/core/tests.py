"""
Tests for the core app.

Covers the error records, RNG lanes, the order-preserving parallel map
and the JSON/CSV file helpers.
"""
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from django.test.runner import DiscoverRunner

from apps.core.exceptions import (
    BudgetExceededError,
    ConfigurationError,
    NumericDivergenceError,
    ScalarizationDomainError,
)
from apps.core.rng import Phase, RngStream, categorical
from apps.core.utils.files import (
    parse_json_text,
    read_json,
    render_csv,
    render_json,
    write_atomic,
)
from apps.core.utils.parallel import chunk_ranges, map_chunks


class ErrorRecordTestCase(SimpleTestCase):
    """Test cases for the error hierarchy."""

    def test_exit_codes(self):
        """Test each error family maps to its exit code."""
        self.assertEqual(ConfigurationError('x').exit_code, 2)
        self.assertEqual(ScalarizationDomainError('x').exit_code, 2)
        self.assertEqual(NumericDivergenceError('x').exit_code, 3)
        self.assertEqual(BudgetExceededError('x').exit_code, 4)

    def test_record_carries_context(self):
        """Test the structured record includes kind and context."""
        record = BudgetExceededError(
            'too many', required=10, budget=5
        ).as_record()

        self.assertFalse(record['success'])
        self.assertEqual(record['error'], 'budget')
        self.assertEqual(record['exit_code'], 4)
        self.assertEqual(record['required'], 10)
        self.assertEqual(record['budget'], 5)


class RngStreamTestCase(SimpleTestCase):
    """Test cases for lane-addressed random streams."""

    def test_same_lane_replays(self):
        """Test a lane yields identical draws on every call."""
        stream = RngStream(master_seed=42, outer_iteration=3,
                           phase=Phase.INNER, sub_index=2)
        np.testing.assert_array_equal(
            stream.uniforms(16), stream.uniforms(16)
        )

    def test_distinct_lanes_differ(self):
        """Test neighbouring lanes are independent streams."""
        base = RngStream(master_seed=42)
        draws = {
            base.trajectory(0).uniforms(4).tobytes(),
            base.trajectory(1).uniforms(4).tobytes(),
            base.for_iteration(1).uniforms(4).tobytes(),
            base.with_phase(Phase.J_BATCH).uniforms(4).tobytes(),
        }
        self.assertEqual(len(draws), 4)

    def test_with_phase_resets_indices(self):
        """Test changing phase clears the sub and trajectory index."""
        stream = RngStream(master_seed=1, sub_index=4, trajectory_index=9)
        moved = stream.with_phase(Phase.MLMC_DRAW)

        self.assertEqual(moved.lane, (0, int(Phase.MLMC_DRAW), 0, 0))

    def test_negative_index_rejected(self):
        """Test lanes refuse negative coordinates."""
        with self.assertRaises(ConfigurationError):
            RngStream(master_seed=0, outer_iteration=-1)

    def test_categorical_boundaries(self):
        """Test inversion picks the right-hand category on a boundary."""
        cdf = np.array([0.25, 0.75, 1.0])
        picked = categorical(cdf, np.array([0.0, 0.25, 0.5, 0.75, 0.999]))

        np.testing.assert_array_equal(picked, [0, 1, 1, 2, 2])


class ParallelTestCase(SimpleTestCase):
    """Test cases for chunked parallel map."""

    def test_chunks_cover_range(self):
        """Test chunks are contiguous and cover every index once."""
        ranges = chunk_ranges(10, 3)
        flat = [i for r in ranges for i in r]

        self.assertEqual(flat, list(range(10)))
        self.assertEqual([len(r) for r in ranges], [4, 3, 3])

    def test_results_keep_order(self):
        """Test thread count does not change the result order."""
        single = map_chunks(list, 17, threads=1)
        many = map_chunks(list, 17, threads=8)

        self.assertEqual(
            [i for part in single for i in part],
            [i for part in many for i in part],
        )


class FileHelperTestCase(SimpleTestCase):
    """Test cases for the JSON and CSV helpers."""

    def setUp(self):
        """Set up a scratch directory."""
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_missing_file(self):
        """Test a missing file names its label."""
        with self.assertRaises(ConfigurationError) as ctx:
            read_json(self.root / 'absent.json', label='mdp_path')

        self.assertEqual(ctx.exception.message, 'config: mdp_path not found')

    def test_invalid_json(self):
        """Test malformed JSON becomes a configuration error."""
        path = write_atomic(self.root / 'bad.json', '{"a": ')

        with self.assertRaises(ConfigurationError):
            read_json(path)
        with self.assertRaises(ConfigurationError):
            parse_json_text('[1, 2')

    def test_json_round_trip_and_atomic_write(self):
        """Test written JSON parses back and leaves no temp files."""
        path = write_atomic(
            self.root / 'sub' / 'out.json', render_json({'a': [1, 2.5]})
        )

        self.assertEqual(read_json(path), {'a': [1, 2.5]})
        self.assertEqual(
            sorted(p.name for p in path.parent.iterdir()), ['out.json']
        )

    def test_render_csv(self):
        """Test CSV rendering writes the header first."""
        text = render_csv(['k', 'v'], [[0, 'x'], [1, '']]).decode('utf-8')

        self.assertEqual(text, 'k,v\n0,x\n1,\n')


class TestDiscoveryTestCase(SimpleTestCase):
    """Test cases for the test-runner entry point."""

    def test_apps_label_finds_fast_tests(self):
        """Test ``manage.py test apps --exclude-tag slow`` collects tests."""
        runner = DiscoverRunner(verbosity=0, exclude_tags=['slow'])
        suite = runner.build_suite(['apps'])
        labels = {test.id().split('.')[1] for test in suite}

        self.assertGreater(suite.countTestCases(), 0)
        self.assertTrue({
            'core', 'mdp', 'policy', 'scalarization', 'estimators',
            'npg', 'oracle', 'harness',
        } <= labels)
