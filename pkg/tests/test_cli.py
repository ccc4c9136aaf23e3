"""
Tests for the command implementations, result writer and entry point.
"""

import json
import os
import sys
import tempfile
import unittest

import numpy as np
import pandas as pd

# Add repository root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import main as entry_point
from src.cli import (KERNEL_COLUMNS, SPECTRUM_COLUMNS, cmd_kernel, cmd_nonrel, cmd_propagate, cmd_spectrum,
                     cmd_verify)
from src.result_writer import ResultWriter, split_complex
from src.run_config import RunConfig


class TestCommands(unittest.TestCase):
    """Tables and reports produced by each command."""

    def test_spectrum_table(self):
        """Default grid: fixed header, one zero mode."""
        columns, rows = cmd_spectrum(RunConfig())
        self.assertEqual(columns, SPECTRUM_COLUMNS)
        self.assertEqual(len(rows), 4 * 4 * 2)
        zeros = [(row["m"], row["l"], row["sigma"]) for row in rows if row["omega"] == 0]
        self.assertEqual(zeros, [(0, 0, -1)])
        self.assertTrue(all(row["eps_minus"] == -row["eps_plus"] for row in rows))

    def test_spectrum_sweep_columns(self):
        """Swept parameters lead the header."""
        run = RunConfig.from_dict({"sweep": [{"parameter": "eB", "start": 1.0, "stop": -1.0, "steps": 2}]})
        columns, rows = cmd_spectrum(run, threads=2)
        self.assertEqual(columns, ["eB"] + SPECTRUM_COLUMNS)
        self.assertEqual(len(rows), 64)
        self.assertEqual({row["sgnB"] for row in rows[32:]}, {-1})

    def test_kernel_integer_flux(self):
        """At mu = 0 the full kernel table equals the uniform-field table."""
        data = {"field": {"mu": 0.0}, "kernel": {"s_steps": 3}}
        columns, rows = cmd_kernel(RunConfig.from_dict(data))
        _, uniform_rows = cmd_kernel(RunConfig.from_dict({**data, "kernel": {"s_steps": 3, "uniform": True}}))
        self.assertEqual(columns, KERNEL_COLUMNS)
        self.assertEqual(len(rows), 3 * 4)
        for row, uniform in zip(rows, uniform_rows):
            value = complex(row["value_re"], row["value_im"])
            expected = complex(uniform["value_re"], uniform["value_im"])
            self.assertLess(abs(value - expected), 1e-10 * max(1.0, abs(expected)))

    def test_scalar_kernel_rows(self):
        """Scalar kernels give one entry per s."""
        _, rows = cmd_kernel(RunConfig.from_dict({"kernel": {"field": "scalar", "s_steps": 2}}))
        self.assertEqual(len(rows), 2)
        self.assertTrue(all(row["i"] == 0 and row["j"] == 0 and row["flag"] == "" for row in rows))

    def test_pole_rows_flagged(self):
        """s on a pole of 1/sin(gamma s) yields NaN rows flagged 'pole'."""
        run = RunConfig.from_dict({"kernel": {"s_start": np.pi, "s_steps": 1, "s_imag": 0.0}})
        _, rows = cmd_kernel(run)
        self.assertTrue(all(row["flag"] == "pole" and np.isnan(row["value_re"]) for row in rows))

    def test_propagate_advanced_vanishes_in_future(self):
        """For dx0 > 0 the advanced function is zero and S^c = S^cbar on a spacelike pair."""
        run = RunConfig.from_dict({
            "points": [{"x": [0.3, 1.5, 0.5], "x_prime": [0.0, 0.6, 0.0]}],
            "propagate": {"kinds": ["causal", "anticausal", "advanced"]},
        })
        _, rows = cmd_propagate(run)
        table = pd.DataFrame(rows)
        advanced = table[table["kind"] == "advanced"]
        self.assertTrue((advanced["value_re"] == 0).all() and (advanced["value_im"] == 0).all())
        causal = table[table["kind"] == "causal"][["value_re", "value_im"]].to_numpy()
        anticausal = table[table["kind"] == "anticausal"][["value_re", "value_im"]].to_numpy()
        self.assertLess(np.abs(causal - anticausal).max(), 1e-5 * np.abs(causal).max())

    def test_propagate_equal_times_flagged(self):
        """Step-function kinds at dx0 = 0 are NaN rows flagged 'undefined'."""
        run = RunConfig.from_dict({"propagate": {"kinds": ["retarded"]}})
        _, rows = cmd_propagate(run)
        self.assertTrue(all(row["flag"] == "undefined" and np.isnan(row["value_re"]) for row in rows))

    def test_propagate_retarded_inside_light_cone(self):
        """A timelike pair with dx0 > |dx| gets a nonzero retarded and a vanishing advanced function."""
        run = RunConfig.from_dict({
            "points": [{"x": [3.0, 0.6, 0.4], "x_prime": [0.0, 0.5, 0.0]}],
            "propagate": {"kinds": ["retarded", "advanced"], "quantity": "delta"},
        })
        _, rows = cmd_propagate(run)
        table = pd.DataFrame(rows)
        self.assertTrue((table["flag"] == "").all())
        retarded = table[table["kind"] == "retarded"]
        advanced = table[table["kind"] == "advanced"]
        self.assertGreater(np.hypot(retarded["value_re"], retarded["value_im"]).max(), 1e-6)
        self.assertTrue((advanced["value_re"] == 0).all() and (advanced["value_im"] == 0).all())

    def test_propagate_spin_down(self):
        """Spin-down and spin-up propagators differ by 2M sigma1 Delta sigma1 after conjugation with sigma1."""
        sigma1 = np.array([[0, 1], [1, 0]], dtype=complex)
        base = {"points": [{"x": [0.0, 1.2, 0.7], "x_prime": [0.0, 0.8, 0.0]}]}

        def causal_matrix(propagate):
            run = RunConfig.from_dict({**base, "propagate": {"kinds": ["causal"], "euclidean_time": 1.0,
                                                             **propagate}})
            _, rows = cmd_propagate(run)
            matrix = np.zeros((2, 2), dtype=complex)
            for row in rows:
                matrix[row["i"], row["j"]] = complex(row["value_re"], row["value_im"])
            return matrix

        delta = causal_matrix({"quantity": "delta"})
        spin_up = causal_matrix({"quantity": "propagator"})
        spin_down = causal_matrix({"quantity": "propagator", "spin": "down"})
        np.testing.assert_allclose(spin_down + sigma1 @ spin_up @ sigma1, 2 * sigma1 @ delta @ sigma1,
                                   atol=1e-8 * np.abs(spin_up).max())

    def test_nonrel_radial_scan(self):
        """The scan rows follow the main row; the antiparticle S_0 grows towards the axis."""
        run = RunConfig.from_dict({
            "points": [{"x": [0.0, 1.0, 0.5], "x_prime": [0.0, 1.0, 0.0]}],
            "nonrel": {"species": "antiparticle", "tau": 0.3, "radial_scan": [0.05, 0.2]},
        })
        _, rows = cmd_nonrel(run)
        self.assertEqual([row["scan"] for row in rows], [0, 1, 1])
        self.assertGreater(rows[1]["abs_s0"], rows[2]["abs_s0"])

    def test_verify_report(self):
        """A selected check produces a passing report."""
        report = cmd_verify(RunConfig(), only=["sum-identity"])
        self.assertTrue(report["pass"])
        self.assertEqual(report["checks"], 27)
        self.assertEqual(report["failed_ids"], [])
        self.assertEqual(report["truncation"]["m_max"], 300)


class TestResultWriter(unittest.TestCase):
    """CSV and JSON emission."""

    def setUp(self):
        """Scratch output directory."""
        self.temp_dir = tempfile.TemporaryDirectory()
        self.addCleanup(self.temp_dir.cleanup)
        self.writer = ResultWriter(os.path.join(self.temp_dir.name, "out"))

    def test_deterministic_csv(self):
        """Repeated writes give identical bytes."""
        columns, rows = cmd_spectrum(RunConfig())
        first = self.writer.save_table(rows, columns, "a")
        second = self.writer.save_table(rows, columns, "b")
        with open(first, "rb") as f, open(second, "rb") as g:
            self.assertEqual(f.read(), g.read())

    def test_empty_table_keeps_header(self):
        """An empty grid still writes the header."""
        columns, rows = cmd_spectrum(RunConfig.from_dict({"spectrum": {"m_max": -1}}))
        self.assertEqual(rows, [])
        path = self.writer.save_table(rows, columns, "empty")
        with open(path) as f:
            self.assertEqual(f.read().strip(), ",".join(SPECTRUM_COLUMNS))

    def test_json_table_and_report(self):
        """JSON tables carry columns and rows; complex values split into re/im."""
        path = self.writer.save_table([{"a": 1, **split_complex("v", 1 - 2j)}], ["a", "v_re", "v_im"], "t", "json")
        with open(path) as f:
            data = json.load(f)
        self.assertEqual(data["columns"], ["a", "v_re", "v_im"])
        self.assertEqual(data["rows"][0], {"a": 1, "v_re": 1.0, "v_im": -2.0})
        report = self.writer.save_report({"value": np.float64(0.5), "z": 1j}, "report")
        with open(report) as f:
            self.assertEqual(json.load(f), {"value": 0.5, "z": {"re": 0.0, "im": 1.0}})

    def test_json_maps_non_finite_to_null(self):
        """NaN and infinities become null, so the file is strict JSON."""
        path = self.writer.save_table([{"a": float("nan"), **split_complex("v", complex(np.inf, 1.0))}],
                                      ["a", "v_re", "v_im"], "nan", "json")
        with open(path) as f:
            data = json.load(f, parse_constant=lambda name: self.fail(f"non-standard constant {name}"))
        self.assertEqual(data["rows"][0], {"a": None, "v_re": None, "v_im": 1.0})
        report = self.writer.save_report({"residual": np.float64("nan"), "z": complex(1.0, np.nan)}, "nan_report")
        with open(report) as f:
            self.assertEqual(json.load(f), {"residual": None, "z": {"re": 1.0, "im": None}})

    def test_unsupported_format(self):
        """Only csv and json are written."""
        with self.assertRaises(ValueError):
            self.writer.save_table([], ["a"], "t", "xlsx")


class TestEntryPoint(unittest.TestCase):
    """main() exit codes and output files."""

    def setUp(self):
        """Scratch output directory."""
        self.temp_dir = tempfile.TemporaryDirectory()
        self.addCleanup(self.temp_dir.cleanup)

    def test_verify_exit_code(self):
        """A passing selection exits 0 and writes a versioned report."""
        with self.assertRaises(SystemExit) as ctx:
            entry_point.main(["verify", "--only", "sum-identity", "--out", self.temp_dir.name])
        self.assertEqual(ctx.exception.code, 0)
        with open(os.path.join(self.temp_dir.name, "verify_report.json")) as f:
            report = json.load(f)
        self.assertIn("version", report)
        self.assertTrue(report["pass"])

    def test_spectrum_json(self):
        """Table commands honour --format."""
        with self.assertRaises(SystemExit) as ctx:
            entry_point.main(["spectrum", "--out", self.temp_dir.name, "--format", "json"])
        self.assertEqual(ctx.exception.code, 0)
        self.assertTrue(os.path.exists(os.path.join(self.temp_dir.name, "spectrum.json")))

    def test_bad_config_exit_code(self):
        """Configuration errors exit 1."""
        path = os.path.join(self.temp_dir.name, "bad.json")
        with open(path, "w") as f:
            f.write('{"field": {"mu": 2.0}}')
        with self.assertRaises(SystemExit) as ctx:
            entry_point.main(["spectrum", "--config", path, "--out", self.temp_dir.name])
        self.assertEqual(ctx.exception.code, 1)

    def test_verify_output_is_reproducible(self):
        """Two verify runs write byte-identical reports."""
        paths = []
        for name in ("first", "second"):
            out = os.path.join(self.temp_dir.name, name)
            with self.assertRaises(SystemExit):
                entry_point.main(["verify", "--only", "sum-identity", "--only", "y-equivalence", "--out", out])
            paths.append(os.path.join(out, "verify_report.json"))
        with open(paths[0], "rb") as f, open(paths[1], "rb") as g:
            self.assertEqual(f.read(), g.read())

    def test_kernel_pole_rows_in_json(self):
        """Pole rows are written as null values in strict JSON."""
        path = os.path.join(self.temp_dir.name, "pole.json")
        with open(path, "w") as f:
            json.dump({"kernel": {"s_start": np.pi, "s_steps": 1, "s_imag": 0.0}}, f)
        with self.assertRaises(SystemExit) as ctx:
            entry_point.main(["kernel", "--config", path, "--out", self.temp_dir.name, "--format", "json"])
        self.assertEqual(ctx.exception.code, 0)
        with open(os.path.join(self.temp_dir.name, "kernel.json")) as f:
            data = json.load(f, parse_constant=lambda name: self.fail(f"non-standard constant {name}"))
        self.assertTrue(data["rows"])
        for row in data["rows"]:
            self.assertEqual(row["flag"], "pole")
            self.assertIsNone(row["value_re"])
            self.assertIsNone(row["value_im"])


if __name__ == '__main__':
    unittest.main()
