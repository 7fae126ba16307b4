import json
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

import curve_io
import flow_engine
from flow_engine import FlowConfig
from utils import FormatError, validate_columns, validate_numeric, REQUIRED_COLUMNS_TRACE


class TestGenerators(unittest.TestCase):

    def test_parse_defaults(self):
        name, params = curve_io.parse_generator("circle:R=2")
        self.assertEqual(name, "circle")
        self.assertEqual(params, {"R": 2.0, "N": 256})

    def test_parse_full(self):
        name, params = curve_io.parse_generator("rounded_square:R=1,delta=0.02,N=128")
        self.assertEqual(name, "rounded_square")
        self.assertEqual(params["delta"], 0.02)
        self.assertEqual(params["N"], 128)

    def test_parse_errors(self):
        for spec in ("circle", "square:R=1", "circle:Q=1", "circle:R=abc", "circle:R", "circle:N=10.5"):
            with self.assertRaises(FormatError, msg=spec):
                curve_io.parse_generator(spec)

    def test_generate(self):
        curve = curve_io.generate("ellipse:a=3,b=1,N=128")
        self.assertEqual(curve.n_points, 128)
        self.assertEqual(curve.name, "ellipse")
        flow_engine.validate_curve(curve)

    def test_circle_is_exact(self):
        curve = curve_io.circle(2.0, 64)
        np.testing.assert_allclose(np.hypot(*curve.points.T), 2.0, rtol=1e-15)

    def test_rounded_square_delta_range(self):
        with self.assertRaises(FormatError):
            curve_io.rounded_square(1.0, 0.1, 64)
        curve = curve_io.rounded_square(1.0, 0.05, 64)
        self.assertTrue(np.all(flow_engine.discrete_curvature(curve) > 0))

    def test_bad_ellipse(self):
        with self.assertRaises(FormatError):
            curve_io.ellipse(0.0, 1.0, 64)


class TestCurveJson(unittest.TestCase):

    def test_save_and_load(self):
        curve = curve_io.ellipse(2.0, 1.0, 64)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "ellipse.json"
            curve_io.save_curve_json(curve, path)
            loaded = curve_io.load_curve(str(path))
        np.testing.assert_array_equal(loaded.points, curve.points)
        self.assertEqual(loaded.name, "ellipse")

    def test_malformed(self):
        with tempfile.TemporaryDirectory() as tmp:
            bad = Path(tmp) / "bad.json"
            bad.write_text("{not json")
            with self.assertRaises(FormatError):
                curve_io.load_curve_json(bad)
            bad.write_text(json.dumps({"name": "x"}))
            with self.assertRaises(FormatError):
                curve_io.load_curve_json(bad)
            bad.write_text(json.dumps({"points": [[0, 1, 2]]}))
            with self.assertRaises(FormatError):
                curve_io.load_curve_json(bad)
            with self.assertRaises(FormatError):
                curve_io.load_curve_json(Path(tmp) / "missing.json")

    def test_name_defaults_to_stem(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "blob.json"
            path.write_text(json.dumps({"points": curve_io.circle(1.0, 16).points.tolist()}))
            self.assertEqual(curve_io.load_curve(path).name, "blob")


class TestTraceFiles(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        config = FlowConfig(dt=1e-3, t_end=0.01, n_points=32, snapshot_every=5)
        cls.trace = flow_engine.run(curve_io.circle(1.0, 32), config)

    def test_csv_keeps_full_precision(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "circle_trace.csv"
            curve_io.write_trace(self.trace, path)
            loaded = curve_io.read_trace(path)
        self.assertEqual(loaded.name, "circle_trace")
        np.testing.assert_array_equal(loaded.times(), self.trace.times())
        for a, b in zip(loaded.snapshots, self.trace.snapshots):
            np.testing.assert_array_equal(a.curve.points, b.curve.points)
            np.testing.assert_array_equal(a.kappa, b.kappa)

    def test_json_lines(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "circle_trace.jsonl"
            curve_io.write_trace(self.trace, path, "json-lines")
            loaded = curve_io.read_trace(path, name="circle")
        self.assertEqual(len(loaded.snapshots), len(self.trace.snapshots))
        np.testing.assert_allclose(loaded.snapshots[-1].curve.points,
                                   self.trace.snapshots[-1].curve.points, rtol=1e-13, atol=1e-14)

    def test_unknown_format(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(FormatError):
                curve_io.write_trace(self.trace, Path(tmp) / "x.parquet", "parquet")

    def test_missing_column(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "trace.csv"
            self.trace.to_frame().drop(columns=["kappa"]).to_csv(path, index=False)
            with self.assertRaises(FormatError) as ctx:
                curve_io.read_trace(path)
        self.assertIn("Missing required columns: kappa", str(ctx.exception))

    def test_non_numeric(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "trace.csv"
            df = self.trace.to_frame().astype({"x": object})
            df.loc[3, "x"] = "oops"
            df.to_csv(path, index=False)
            with self.assertRaises(FormatError) as ctx:
                curve_io.read_trace(path)
        self.assertIn("Row 5", str(ctx.exception))

    def test_empty_and_missing_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "trace.csv"
            path.write_text(",".join(REQUIRED_COLUMNS_TRACE) + "\n")
            with self.assertRaises(FormatError):
                curve_io.read_trace(path)
            with self.assertRaises(FormatError):
                curve_io.read_trace(Path(tmp) / "nope.csv")


class TestValidationUtils(unittest.TestCase):

    def test_columns(self):
        df = pd.DataFrame({"t": [0.0]})
        errors = validate_columns(df, ["t", "x"], "f.csv")
        self.assertEqual(errors, ["f.csv: Missing required columns: x"])

    def test_numeric_errors_capped(self):
        df = pd.DataFrame({"x": ["a"] * 15})
        errors = validate_numeric(df, ["x"], "f.csv")
        self.assertEqual(len(errors), 11)
        self.assertIn("5 more", errors[-1])


if __name__ == '__main__':
    unittest.main()
