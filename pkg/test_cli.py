import contextlib
import io
import json
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

import app

SIMULATE_CIRCLE = ["simulate", "circle:R=1,N=64", "--n-points", "64", "--dt", "1e-3",
                   "--t-end", "0.05", "--snapshot-every", "5"]


def run_cli(argv):
    stdout, stderr = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
        code = app.main(argv)
    return code, stdout.getvalue(), stderr.getvalue()


class CliTestCase(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name) / "out"

    def tearDown(self):
        self.tmp.cleanup()

    def cli(self, *argv, out=None):
        return run_cli(["--out", str(out or self.out), *argv])


class TestDerive(CliTestCase):

    def test_derivation_passes(self):
        code, stdout, _ = self.cli("derive")
        self.assertEqual(code, app.EXIT_OK)
        self.assertEqual(stdout.count("[PASS]"), 8)
        self.assertNotIn("[FAIL]", stdout)
        self.assertIn("u_ss + E + (epsilon + 1/2)/t", stdout)

    def test_writes_report(self):
        code, _, _ = self.cli("derive")
        self.assertEqual(code, app.EXIT_OK)
        report = pd.read_csv(self.out / "derivation.csv")
        self.assertEqual(list(report.columns), ["step", "title", "expected", "computed", "verdict"])
        self.assertEqual(len(report), 8)
        self.assertTrue((report["verdict"] == "PASS").all())

    def test_writes_report_as_json_lines(self):
        code, _, _ = self.cli("--format", "json-lines", "derive")
        self.assertEqual(code, app.EXIT_OK)
        report = pd.read_json(self.out / "derivation.jsonl", orient="records", lines=True)
        self.assertEqual(report["step"].tolist(), list(range(1, 9)))

    def test_show_remainder(self):
        code, stdout, _ = self.cli("derive", "--show-remainder")
        self.assertEqual(code, app.EXIT_OK)
        self.assertIn("u_ss", stdout)
        self.assertIn("phi_t", stdout)

    def test_infeasible_params(self):
        code, stdout, _ = self.cli("derive", "--params", "2,1,3")
        self.assertEqual(code, app.EXIT_FAIL)
        self.assertIn("is infeasible. Violated:", stdout)

    def test_feasible_params(self):
        code, _, _ = self.cli("derive", "--params", "1,0,1", "--alpha", "51/100")
        self.assertEqual(code, app.EXIT_OK)

    def test_bad_params(self):
        code, _, stderr = self.cli("derive", "--params", "1,zero,1")
        self.assertEqual(code, app.EXIT_INVALID)
        self.assertIn("Invalid input", stderr)

    def test_graph(self):
        code, _, _ = self.cli("derive", "--graph")
        self.assertEqual(code, app.EXIT_OK)
        dot = (self.out / "derivation.dot").read_text()
        self.assertIn("digraph derivation", dot)


class TestSearch(CliTestCase):

    def test_deterministic(self):
        first, second = Path(self.tmp.name) / "a", Path(self.tmp.name) / "b"
        for out in (first, second):
            code, _, _ = self.cli("--seed", "3", "search", "--count", "5", out=out)
            self.assertEqual(code, app.EXIT_OK)
        self.assertEqual((first / "search.csv").read_bytes(), (second / "search.csv").read_bytes())
        self.assertEqual(len(pd.read_csv(first / "search.csv")), 5)


class TestSimulateVerifyPlot(CliTestCase):

    def test_pipeline(self):
        code, stdout, _ = self.cli(*SIMULATE_CIRCLE)
        self.assertEqual(code, app.EXIT_OK, stdout)
        for name in ("circle_trace.csv", "circle_summary.csv", "circle_diagnostics.csv"):
            self.assertTrue((self.out / name).exists(), name)

        trace = self.out / "circle_trace.csv"
        code, stdout, _ = self.cli("verify", str(trace))
        self.assertEqual(code, app.EXIT_OK, stdout)
        table = pd.read_csv(self.out / "circle_trace_harnack.csv")
        self.assertEqual(list(table.columns), ["t", "s_index", "kappa", "u_ss", "h_eps_spatial", "h_eps_timediff"])
        self.assertTrue((table["h_eps_spatial"] > 0).all())
        self.assertTrue((self.out / "circle_trace_harnack_summary.csv").exists())

        code, _, _ = self.cli("plot", str(trace), "--field", "h")
        self.assertEqual(code, app.EXIT_OK)
        for name in ("circle_trace_overlay.svg", "circle_trace_min_h.svg", "circle_trace_h.svg"):
            self.assertTrue((self.out / name).exists(), name)

    def test_simulate_is_deterministic(self):
        first, second = Path(self.tmp.name) / "a", Path(self.tmp.name) / "b"
        for out in (first, second):
            code, _, _ = self.cli(*SIMULATE_CIRCLE, out=out)
            self.assertEqual(code, app.EXIT_OK)
        self.assertEqual((first / "circle_trace.csv").read_bytes(), (second / "circle_trace.csv").read_bytes())

    def test_json_lines(self):
        code, _, _ = self.cli("--format", "json-lines", *SIMULATE_CIRCLE)
        self.assertEqual(code, app.EXIT_OK)
        trace = self.out / "circle_trace.jsonl"
        self.assertTrue(trace.exists())
        code, _, _ = self.cli("--format", "json-lines", "verify", str(trace))
        self.assertEqual(code, app.EXIT_OK)
        self.assertTrue((self.out / "circle_trace_harnack.jsonl").exists())

    def test_config_file(self):
        path = Path(self.tmp.name) / "flow.yaml"
        path.write_text("simulate:\n  t_end: 0.02\n  n_points: 32\n  snapshot_every: 5\n")
        code, _, _ = self.cli("--config", str(path), "simulate", "circle:R=1,N=32")
        self.assertEqual(code, app.EXIT_OK)
        trace = pd.read_csv(self.out / "circle_trace.csv")
        self.assertEqual(trace["index"].max(), 31)
        self.assertAlmostEqual(trace["t"].max(), 0.02)


class TestInvalidInput(CliTestCase):

    def test_non_convex_curve(self):
        theta = 2 * np.pi * np.arange(128) / 128
        r = 1 + 0.3 * np.cos(5 * theta)
        path = Path(self.tmp.name) / "star.json"
        path.write_text(json.dumps({"name": "star", "points": np.column_stack(
            [r * np.cos(theta), r * np.sin(theta)]).tolist()}))
        code, _, stderr = self.cli("simulate", str(path))
        self.assertEqual(code, app.EXIT_INVALID)
        self.assertIn("not strictly convex", stderr)

    def test_unknown_generator(self):
        code, _, _ = self.cli("simulate", "hexagon:R=1")
        self.assertEqual(code, app.EXIT_INVALID)

    def test_stability_refusal(self):
        code, _, stderr = self.cli("simulate", "circle:R=1,N=64", "--n-points", "64", "--dt", "0.1", "--fixed-dt")
        self.assertEqual(code, app.EXIT_STABILITY)
        self.assertIn("Stability refusal", stderr)

    def test_missing_columns(self):
        path = Path(self.tmp.name) / "broken.csv"
        pd.DataFrame({"t": [0.1], "index": [0], "x": [1.0], "y": [0.0]}).to_csv(path, index=False)
        code, _, stderr = self.cli("verify", str(path))
        self.assertEqual(code, app.EXIT_INVALID)
        self.assertIn("Missing required columns: kappa, arclen", stderr)

    def test_bad_config(self):
        path = Path(self.tmp.name) / "bad.yaml"
        path.write_text("simulate:\n  timestep: 0.1\n")
        code, _, _ = self.cli("--config", str(path), *SIMULATE_CIRCLE)
        self.assertEqual(code, app.EXIT_INVALID)

    def test_non_positive_epsilon(self):
        self.assertEqual(self.cli(*SIMULATE_CIRCLE)[0], app.EXIT_OK)
        code, _, _ = self.cli("verify", str(self.out / "circle_trace.csv"), "--epsilon", "0")
        self.assertEqual(code, app.EXIT_INVALID)


if __name__ == '__main__':
    unittest.main()
