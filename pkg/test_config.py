import tempfile
import unittest
from pathlib import Path

import config
from flow_engine import ConfigError, FlowConfig


class TestConfig(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, text):
        path = self.dir / "flow.yaml"
        path.write_text(text)
        return path

    def test_load_sections(self):
        path = self.write("simulate:\n  t_end: 0.2\n  n_points: 128\nverify:\n  epsilon: 0.05\n")
        values = config.load_config(path)
        self.assertEqual(values["simulate"], {"t_end": 0.2, "n_points": 128})
        self.assertEqual(values["verify"], {"epsilon": 0.05})
        self.assertEqual(values["search"], {})

    def test_empty_file(self):
        values = config.load_config(self.write(""))
        self.assertEqual(set(values), set(config.CONFIG_SECTIONS))

    def test_unknown_key(self):
        path = self.write("simulate:\n  timestep: 0.1\n")
        with self.assertRaises(ConfigError) as ctx:
            config.load_config(path)
        self.assertIn("timestep", str(ctx.exception))

    def test_unknown_section(self):
        with self.assertRaises(ConfigError):
            config.load_config(self.write("render:\n  dpi: 300\n"))

    def test_not_a_mapping(self):
        with self.assertRaises(ConfigError):
            config.load_config(self.write("- 1\n- 2\n"))
        with self.assertRaises(ConfigError):
            config.load_config(self.write("simulate: [1, 2]\n"))

    def test_invalid_yaml_and_missing_file(self):
        with self.assertRaises(ConfigError):
            config.load_config(self.write("simulate: {t_end: \n"))
        with self.assertRaises(ConfigError):
            config.load_config(self.dir / "missing.yaml")

    def test_flags_override_file(self):
        merged = config.merge({"t_end": 0.2, "dt": 1e-3}, t_end=0.1, dt=None)
        self.assertEqual(merged, {"t_end": 0.1, "dt": 1e-3})

    def test_flow_config_coerces_strings(self):
        # PyYAML 1.1 reads 1e-3 without a dot as a string
        values = config.load_config(self.write("simulate:\n  dt: 1e-3\n  n_points: 64\n"))
        self.assertEqual(values["simulate"]["dt"], "1e-3")
        flow = config.flow_config(values["simulate"], t_end=0.05)
        self.assertEqual(flow.dt, 1e-3)
        self.assertEqual(flow.n_points, 64)
        self.assertEqual(flow.t_end, 0.05)
        self.assertEqual(flow.scheme, FlowConfig().scheme)

    def test_flow_config_rejects_garbage(self):
        with self.assertRaises(ConfigError):
            config.flow_config({"dt": "fast"})
        with self.assertRaises(ConfigError):
            config.flow_config({"n_points": 4})


if __name__ == '__main__':
    unittest.main()
