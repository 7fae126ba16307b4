"""
Curve and trace input/output.

Curves come either from a generator spec such as ``circle:R=1,N=256``,
``ellipse:a=2,b=1,N=256`` or ``rounded_square:R=1,delta=0.05,N=256``, or
from a JSON document ``{"name": ..., "points": [[x, y], ...]}``.
Traces are written in long format (one row per snapshot point) as CSV with
17 significant digits, or as JSON lines.
"""

import json
import logging
import re
from pathlib import Path

import numpy as np
import pandas as pd

from config import CSV_FLOAT_FORMAT
from flow_engine import Curve, FlowTrace, resample, TRACE_COLUMNS
from utils import FormatError, REQUIRED_COLUMNS_TRACE, validate_frame

log = logging.getLogger(__name__)

FORMATS = ("csv", "json-lines")
DENSE_FACTOR = 16
MAX_CONVEX_DELTA = 1 / 17

# <name>:<key>=<value>,<key>=<value>...
GENERATOR_REGEX = re.compile(r"^(?P<name>[a-z_]+):(?P<args>[^:]*)$")
GENERATOR_DEFAULTS = {
    "circle": {"R": 1.0, "N": 256},
    "ellipse": {"a": 2.0, "b": 1.0, "N": 256},
    "rounded_square": {"R": 1.0, "delta": 0.05, "N": 256},
}


# --- Generators ---

def circle(radius=1.0, n_points=256, name="circle"):
    """Exactly uniform polygon inscribed in the circle of the given radius."""
    theta = 2 * np.pi * np.arange(n_points) / n_points
    return Curve(radius * np.column_stack([np.cos(theta), np.sin(theta)]), name)


def _polar_dense(radius_fn, n_points, name):
    theta = 2 * np.pi * np.arange(DENSE_FACTOR * n_points) / (DENSE_FACTOR * n_points)
    r = radius_fn(theta)
    dense = Curve(np.column_stack([r * np.cos(theta), r * np.sin(theta)]), name)
    return resample(dense, n_points)


def ellipse(a=2.0, b=1.0, n_points=256, name="ellipse"):
    """(a cos theta, b sin theta), resampled to equal arc length."""
    if a <= 0 or b <= 0:
        raise FormatError(f"Ellipse semi-axes must be positive, got a={a}, b={b}")
    theta = 2 * np.pi * np.arange(DENSE_FACTOR * n_points) / (DENSE_FACTOR * n_points)
    dense = Curve(np.column_stack([a * np.cos(theta), b * np.sin(theta)]), name)
    return resample(dense, n_points)


def rounded_square(radius=1.0, delta=0.05, n_points=256, name="rounded_square"):
    """Polar curve r = R (1 + delta cos 4 theta); strictly convex for delta < 1/17."""
    if radius <= 0:
        raise FormatError(f"Radius must be positive, got {radius}")
    if not 0 <= delta < MAX_CONVEX_DELTA:
        raise FormatError(f"delta must be in [0, 1/17) for a convex curve, got {delta}")
    return _polar_dense(lambda theta: radius * (1 + delta * np.cos(4 * theta)), n_points, name)


def _parse_args(args, spec):
    values = {}
    for part in [p.strip() for p in args.split(",") if p.strip()]:
        key, sep, raw = part.partition("=")
        if not sep:
            raise FormatError(f"Malformed generator argument '{part}' in '{spec}'")
        try:
            values[key.strip()] = float(raw)
        except ValueError:
            raise FormatError(f"Non-numeric generator argument '{part}' in '{spec}'")
    return values


def parse_generator(spec):
    """
    Parses 'circle:R=1,N=256' into (name, params dict).
    Raises FormatError on unknown generators or keys.
    """
    match = GENERATOR_REGEX.match(spec.strip())
    if not match:
        raise FormatError(f"Malformed generator spec: '{spec}'")
    name = match.group("name")
    if name not in GENERATOR_DEFAULTS:
        raise FormatError(f"Unknown generator '{name}'; expected one of {sorted(GENERATOR_DEFAULTS)}")
    params = dict(GENERATOR_DEFAULTS[name])
    given = _parse_args(match.group("args"), spec)
    unknown = sorted(set(given) - set(params))
    if unknown:
        raise FormatError(f"Unknown keys for '{name}': {', '.join(unknown)}")
    params.update(given)
    n = params["N"]
    if n != int(n):
        raise FormatError(f"N must be an integer, got {n}")
    params["N"] = int(n)
    return name, params


def generate(spec):
    name, params = parse_generator(spec)
    if name == "circle":
        return circle(params["R"], params["N"])
    if name == "ellipse":
        return ellipse(params["a"], params["b"], params["N"])
    return rounded_square(params["R"], params["delta"], params["N"])


def is_generator_spec(source):
    return bool(GENERATOR_REGEX.match(str(source).strip())) and not Path(str(source)).exists()


# --- JSON curves ---

def load_curve_json(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise FormatError(f"{path}: cannot read curve ({e})")
    if not isinstance(data, dict) or "points" not in data:
        raise FormatError(f"{path}: expected an object with a 'points' field")
    try:
        points = np.asarray(data["points"], dtype=float)
    except (TypeError, ValueError):
        raise FormatError(f"{path}: 'points' must be a list of [x, y] pairs")
    if points.ndim != 2 or points.shape[1] != 2 or not np.all(np.isfinite(points)):
        raise FormatError(f"{path}: 'points' must be a list of finite [x, y] pairs")
    return Curve(points, str(data.get("name", path.stem)))


def save_curve_json(curve, path):
    payload = {"name": curve.name, "points": curve.points.tolist()}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_curve(source):
    """Generator spec or path to a JSON curve."""
    if is_generator_spec(source):
        return generate(source)
    return load_curve_json(source)


# --- Traces ---

def write_frame(df, path, fmt="csv"):
    if fmt == "csv":
        df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    elif fmt == "json-lines":
        df.to_json(path, orient="records", lines=True, double_precision=15)
    else:
        raise FormatError(f"Unknown output format '{fmt}'; expected one of {FORMATS}")
    log.info("Wrote %d rows to %s", len(df), path)
    return Path(path)


def write_trace(trace, path, fmt="csv"):
    return write_frame(trace.to_frame(), path, fmt)


def read_trace(path, name=None):
    """Reads a CSV or JSON-lines trace; validates columns and values."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"Trace file not found: {path}")
    try:
        if path.suffix in (".jsonl", ".json"):
            df = pd.read_json(path, orient="records", lines=True)
        else:
            df = pd.read_csv(path, float_precision="round_trip")
    except (ValueError, pd.errors.EmptyDataError) as e:
        raise FormatError(f"{path}: cannot parse trace ({e})")
    validate_frame(df, REQUIRED_COLUMNS_TRACE, path.name)
    df = df[TRACE_COLUMNS].astype(float)
    df["index"] = df["index"].astype(int)
    return FlowTrace.from_frame(df, name=name or path.stem)
