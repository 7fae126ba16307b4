import logging
from pathlib import Path

import yaml

from flow_engine import FlowConfig, ConfigError

log = logging.getLogger(__name__)

# --- Defaults ---

DEFAULT_FLOW = FlowConfig()
DEFAULT_EPSILON = 0.01
DEFAULT_SEED = 0
DEFAULT_SEARCH_COUNT = 20
DEFAULT_OUT_DIR = "out"

# Verification passes when global min h >= -VERIFY_TOLERANCE
VERIFY_TOLERANCE = 1e-2
SPATIAL_GAP_TOLERANCE = 1e-10
TIME_GAP_TOLERANCE = 1e-3

CSV_FLOAT_FORMAT = "%.17g"

# Keys accepted per section of the YAML config file.
CONFIG_SECTIONS = {
    "simulate": {"dt", "resample_every", "t_end", "kappa_max", "n_points", "snapshot_every", "scheme", "adaptive"},
    "verify": {"epsilon", "tolerance"},
    "search": {"count", "seed"},
    "plot": {"field"},
}


def load_config(path):
    """
    Reads a YAML config file with optional sections simulate / verify /
    search / plot. Unknown sections or keys raise ConfigError.
    Returns a dict of section -> dict (missing sections are empty).
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML ({e})")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping of sections")

    errors = []
    config = {section: {} for section in CONFIG_SECTIONS}
    for section, values in data.items():
        if section not in CONFIG_SECTIONS:
            errors.append(f"unknown section '{section}'")
            continue
        if values is None:
            continue
        if not isinstance(values, dict):
            errors.append(f"section '{section}' must be a mapping")
            continue
        unknown = sorted(set(values) - CONFIG_SECTIONS[section])
        if unknown:
            errors.append(f"unknown keys in '{section}': {', '.join(unknown)}")
        config[section] = {k: v for k, v in values.items() if k in CONFIG_SECTIONS[section]}
    if errors:
        raise ConfigError(f"{path}: " + "; ".join(errors))
    log.debug("Loaded config %s: %s", path, config)
    return config


def merge(file_values, **flags):
    """Flags win over file values; None flags are ignored."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in flags.items() if v is not None})
    return merged


_FLOAT_FIELDS = ("dt", "t_end", "kappa_max")
_INT_FIELDS = ("resample_every", "n_points", "snapshot_every")


def flow_config(file_values=None, **flags):
    """Builds a FlowConfig from defaults, the simulate section and flag overrides."""
    values = merge(file_values, **flags)
    try:
        # PyYAML reads "1e-3" as a string
        for key in _FLOAT_FIELDS:
            if key in values:
                values[key] = float(values[key])
        for key in _INT_FIELDS:
            if key in values:
                values[key] = int(values[key])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid simulate setting: {e}")
    return DEFAULT_FLOW.with_overrides(**values)
