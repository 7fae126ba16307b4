"""
Curve shortening flow simulator.

Closed planar curves are stored as counter-clockwise point lists. Each point
moves by kappa * N, with N the inward normal, using explicit time stepping
under a CFL cap dt <= 0.4 * ds_min^2. The curve is periodically resampled to
equal chord lengths through a periodic cubic spline, so arc length s stays
the native coordinate of every snapshot.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline

log = logging.getLogger(__name__)

MIN_POINTS = 16
CFL_FACTOR = 0.4
RESOLUTION_LIMIT = 0.5  # max kappa * ds before the stencils stop resolving the curve
RESAMPLE_TOL = 1e-14
RESAMPLE_MAX_ITER = 100
SCHEMES = ("euler", "heun")

STOP_T_END = "t_end"
STOP_KAPPA_MAX = "kappa_max"
STOP_RESOLUTION = "resolution"
STOP_CONVEXITY = "convexity_lost"
STOP_SELF_INTERSECTION = "self_intersection"

TRACE_COLUMNS = ["t", "index", "x", "y", "kappa", "arclen"]


class GeometryError(ValueError):
    """Invalid curve geometry (too few points, duplicates, self-intersection, orientation)."""


class ConvexityError(GeometryError):
    """Curve is not strictly convex (some kappa <= 0)."""


class ConfigError(ValueError):
    """Invalid flow configuration."""


class StabilityError(ValueError):
    """Requested time step exceeds the explicit stability cap."""

    def __init__(self, message, required_dt):
        super().__init__(message)
        self.required_dt = required_dt


@dataclass(frozen=True)
class Curve:
    points: np.ndarray
    name: str = "curve"

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise GeometryError(f"Curve points must have shape (N, 2), got {pts.shape}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n_points(self):
        return len(self.points)

    def segments(self):
        """Vectors from point i to point i+1 (closing segment last)."""
        return np.roll(self.points, -1, axis=0) - self.points

    def segment_lengths(self):
        return np.hypot(*self.segments().T)

    @property
    def length(self):
        return float(self.segment_lengths().sum())

    @property
    def area(self):
        # Shoelace formula; positive for counter-clockwise curves
        x, y = self.points[:, 0], self.points[:, 1]
        return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def arclength(self):
        """Arc length at each point, starting at 0 for point 0."""
        return np.concatenate([[0.0], np.cumsum(self.segment_lengths()[:-1])])

    @property
    def isoperimetric_ratio(self):
        return self.length ** 2 / (4 * np.pi * self.area)

    def with_points(self, points):
        return Curve(points, self.name)


# --- Geometry checks ---

def _check_spacing(curve):
    if curve.n_points < MIN_POINTS:
        raise GeometryError(f"Curve needs at least {MIN_POINTS} points, got {curve.n_points}")
    lengths = curve.segment_lengths()
    if np.any(lengths <= 0) or not np.all(np.isfinite(lengths)):
        bad = int(np.argmin(lengths))
        raise GeometryError(f"Degenerate spacing: points {bad} and {(bad + 1) % curve.n_points} coincide")
    return lengths


def _orient(p, q, r):
    return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])


def is_simple(curve):
    """
    True if no two non-adjacent segments intersect.
    O(N^2) vectorised check; used on ingestion only, see turning_number.
    """
    p = curve.points
    q = np.roll(p, -1, axis=0)
    n = len(p)
    i, j = np.triu_indices(n, k=2)
    # Segment 0 and segment n-1 share point 0
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    d1 = _orient(p[i], q[i], p[j])
    d2 = _orient(p[i], q[i], q[j])
    d3 = _orient(p[j], q[j], p[i])
    d4 = _orient(p[j], q[j], q[i])
    crossing = (d1 * d2 < 0) & (d3 * d4 < 0)
    return not bool(np.any(crossing))


def turning_number(curve):
    """
    Total exterior angle over 2 pi, rounded. O(N); a locally convex curve
    with turning number 1 is simple, so this is the per-snapshot check.
    """
    edges = np.roll(curve.points, -1, axis=0) - curve.points
    following = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * following[:, 1] - edges[:, 1] * following[:, 0]
    dot = np.einsum("ij,ij->i", edges, following)
    return int(round(np.arctan2(cross, dot).sum() / (2 * np.pi)))


def validate_curve(curve, require_convex=True):
    """
    Ingestion checks: N >= 16, distinct consecutive points, simple polygon,
    counter-clockwise orientation and (optionally) kappa > 0 everywhere.
    Returns the curve unchanged or raises GeometryError / ConvexityError.
    """
    _check_spacing(curve)
    if not is_simple(curve):
        raise GeometryError(f"Curve '{curve.name}' intersects itself")
    if curve.area <= 0:
        raise GeometryError(f"Curve '{curve.name}' must be counter-clockwise (signed area {curve.area:.6g})")
    if require_convex:
        kappa = discrete_curvature(curve)
        if np.any(kappa <= 0):
            idx = int(np.argmin(kappa))
            raise ConvexityError(
                f"Curve '{curve.name}' is not strictly convex: kappa[{idx}] = {kappa[idx]:.6g}")
    return curve


# --- Discrete differential geometry ---

def menger_curvature(prev, cur, nxt):
    """
    Signed curvature of the circle through three points (vectorised).
    Positive for left turns.
    """
    a = cur - prev
    b = nxt - cur
    c = nxt - prev
    cross = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    denom = np.hypot(*np.moveaxis(a, -1, 0)) * np.hypot(*np.moveaxis(b, -1, 0)) * np.hypot(*np.moveaxis(c, -1, 0))
    if np.any(denom == 0):
        raise GeometryError("Degenerate spacing: coincident points in curvature stencil")
    return 2.0 * cross / denom


def discrete_curvature(curve):
    """Signed curvature per point; kappa > 0 on a convex counter-clockwise curve."""
    _check_spacing(curve)
    pts = curve.points
    return menger_curvature(np.roll(pts, 1, axis=0), pts, np.roll(pts, -1, axis=0))


def inward_normals(curve):
    """Unit tangent from the centred difference, rotated by +90 degrees."""
    pts = curve.points
    chord = np.roll(pts, -1, axis=0) - np.roll(pts, 1, axis=0)
    tangent = chord / np.hypot(*chord.T)[:, None]
    return np.column_stack([-tangent[:, 1], tangent[:, 0]])


def velocity(curve):
    """kappa * N at each point."""
    return discrete_curvature(curve)[:, None] * inward_normals(curve)


def cfl_limit(curve):
    return CFL_FACTOR * float(curve.segment_lengths().min()) ** 2


# --- Time stepping ---

def step(curve, dt, scheme="euler"):
    """
    One explicit step of gamma_t = kappa N.
    Refuses with StabilityError (carrying the required dt) when dt exceeds
    0.4 * ds_min^2.
    """
    if dt <= 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    limit = cfl_limit(curve)
    if dt > limit * (1 + 1e-12):
        raise StabilityError(f"dt={dt:.6g} exceeds stability cap {limit:.6g}", required_dt=limit)
    k1 = velocity(curve)
    if scheme == "euler":
        return curve.with_points(curve.points + dt * k1)
    if scheme == "heun":
        predictor = curve.with_points(curve.points + dt * k1)
        k2 = velocity(predictor)
        return curve.with_points(curve.points + 0.5 * dt * (k1 + k2))
    raise ConfigError(f"Unknown scheme '{scheme}'; expected one of {SCHEMES}")


# --- Resampling ---

def resample(curve, n_points):
    """
    Resamples to n_points with equal chord lengths along the periodic cubic
    spline through the current points (chord-length parametrised).
    Point 0 stays fixed. Equal spacing is refined iteratively to ~1e-14 relative.
    """
    if n_points < MIN_POINTS:
        raise ConfigError(f"Resample needs at least {MIN_POINTS} points, got {n_points}")
    lengths = _check_spacing(curve)
    knots = np.concatenate([[0.0], np.cumsum(lengths)])
    period = knots[-1]
    closed = np.vstack([curve.points, curve.points[:1]])
    spline = CubicSpline(knots, closed, bc_type="periodic")

    deltas = np.full(n_points, period / n_points)
    for iteration in range(RESAMPLE_MAX_ITER):
        params = np.concatenate([[0.0], np.cumsum(deltas[:-1])])
        points = spline(params)
        chords = np.hypot(*(np.roll(points, -1, axis=0) - points).T)
        mean = chords.mean()
        spread = np.max(np.abs(chords - mean)) / mean
        if spread < RESAMPLE_TOL:
            break
        deltas = deltas * mean / chords
        deltas *= period / deltas.sum()
    else:
        log.debug("Resample stopped after %d iterations (spread %.3g)", RESAMPLE_MAX_ITER, spread)
    return curve.with_points(points)


# --- Flow driver ---

@dataclass(frozen=True)
class FlowConfig:
    dt: float = 1e-3
    resample_every: int = 10
    t_end: float = 0.4
    kappa_max: float = 1e3
    n_points: int = 256
    snapshot_every: int = 50
    scheme: str = "euler"
    adaptive: bool = True  # cap dt by the CFL limit; False refuses with StabilityError

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if int(self.resample_every) < 1:
            raise ConfigError(f"resample_every must be >= 1, got {self.resample_every}")
        if not self.t_end > 0:
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        if not self.kappa_max > 0:
            raise ConfigError(f"kappa_max must be positive, got {self.kappa_max}")
        if int(self.n_points) < MIN_POINTS:
            raise ConfigError(f"n_points must be >= {MIN_POINTS}, got {self.n_points}")
        if int(self.snapshot_every) < 1:
            raise ConfigError(f"snapshot_every must be >= 1, got {self.snapshot_every}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"Unknown scheme '{self.scheme}'; expected one of {SCHEMES}")

    def with_overrides(self, **overrides):
        """Returns a copy with the non-None overrides applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


@dataclass
class Snapshot:
    t: float
    curve: Curve
    kappa: np.ndarray
    arclen: np.ndarray

    @classmethod
    def of(cls, t, curve):
        return cls(t=float(t), curve=curve, kappa=discrete_curvature(curve), arclen=curve.arclength())

    @property
    def length(self):
        return self.curve.length

    @property
    def area(self):
        return self.curve.area


@dataclass
class FlowTrace:
    snapshots: list = field(default_factory=list)
    name: str = "curve"
    stop_reason: str = STOP_T_END
    steps: int = 0
    violations: list = field(default_factory=list)

    def times(self):
        return np.array([snap.t for snap in self.snapshots])

    def to_frame(self):
        """Long format: one row per (snapshot, point)."""
        frames = []
        for snap in self.snapshots:
            n = snap.curve.n_points
            frames.append(pd.DataFrame({
                "t": np.full(n, snap.t),
                "index": np.arange(n),
                "x": snap.curve.points[:, 0],
                "y": snap.curve.points[:, 1],
                "kappa": snap.kappa,
                "arclen": snap.arclen,
            }))
        if not frames:
            return pd.DataFrame(columns=TRACE_COLUMNS)
        return pd.concat(frames, ignore_index=True)[TRACE_COLUMNS]

    @classmethod
    def from_frame(cls, df, name="curve"):
        """Rebuilds a trace from the long CSV format (kappa is taken from the file)."""
        snapshots = []
        for t, group in df.sort_values(["t", "index"]).groupby("t", sort=True):
            curve = Curve(group[["x", "y"]].to_numpy(), name)
            snapshots.append(Snapshot(t=float(t), curve=curve,
                                      kappa=group["kappa"].to_numpy(dtype=float),
                                      arclen=group["arclen"].to_numpy(dtype=float)))
        return cls(snapshots=snapshots, name=name)

    def diagnostics(self):
        """Per-snapshot table of length, area, isoperimetric ratio and curvature range."""
        return pd.DataFrame([{
            "t": snap.t,
            "length": snap.length,
            "area": snap.area,
            "isoperimetric_ratio": snap.curve.isoperimetric_ratio,
            "min_kappa": float(snap.kappa.min()),
            "max_kappa": float(snap.kappa.max()),
        } for snap in self.snapshots])

    def summary(self):
        table = self.diagnostics()
        if table.empty:
            return {}
        area_rate = float(np.polyfit(table["t"], table["area"], 1)[0]) if len(table) > 1 else float("nan")
        return {
            "name": self.name,
            "t_end": float(table["t"].iloc[-1]),
            "steps": int(self.steps),
            "snapshots": int(len(table)),
            "stop_reason": self.stop_reason,
            "min_kappa": float(table["min_kappa"].min()),
            "max_kappa": float(table["max_kappa"].max()),
            "area_rate": area_rate,
            "length_final": float(table["length"].iloc[-1]),
            "area_final": float(table["area"].iloc[-1]),
            "isoperimetric_final": float(table["isoperimetric_ratio"].iloc[-1]),
            "violations": len(self.violations),
        }


def run(initial, config=None):
    """
    Flows a closed convex curve until t_end, until max kappa reaches
    kappa_max, or until max kappa * ds exceeds the resolution limit.
    Snapshots are taken on freshly resampled curves at t = 0, every
    snapshot_every steps and at the stopping time.
    Loss of convexity, length growth or a snapshot whose turning number
    is not 1 is recorded as a violation.
    """
    config = config or FlowConfig()
    curve = validate_curve(initial)
    curve = resample(curve, config.n_points)

    trace = FlowTrace(name=curve.name)
    trace.snapshots.append(Snapshot.of(0.0, curve))
    t = 0.0
    steps = 0
    last_snapshot_step = 0
    log.info("Flow '%s': N=%d, t_end=%g, scheme=%s", curve.name, config.n_points, config.t_end, config.scheme)

    while t < config.t_end * (1 - 1e-12):
        kappa = discrete_curvature(curve)
        if kappa.min() <= 0:
            trace.stop_reason = STOP_CONVEXITY
            trace.violations.append(f"t={t:.6g}: min kappa {kappa.min():.3g} <= 0")
            log.warning("Convexity lost at t=%g", t)
            break
        if kappa.max() >= config.kappa_max:
            trace.stop_reason = STOP_KAPPA_MAX
            break
        if kappa.max() * curve.segment_lengths().mean() > RESOLUTION_LIMIT:
            trace.stop_reason = STOP_RESOLUTION
            log.warning("Stopping at t=%g: curvature no longer resolved", t)
            break

        dt = min(config.dt, config.t_end - t)
        if config.adaptive:
            dt = min(dt, cfl_limit(curve))
        new_curve = step(curve, dt, config.scheme)
        if not new_curve.length < curve.length:
            trace.violations.append(f"t={t:.6g}: length did not decrease")
        curve = new_curve
        t += dt
        steps += 1

        if steps % config.snapshot_every == 0:
            curve = resample(curve, config.n_points)
            trace.snapshots.append(Snapshot.of(t, curve))
            last_snapshot_step = steps
            winding = turning_number(curve)
            if winding != 1:
                trace.stop_reason = STOP_SELF_INTERSECTION
                trace.violations.append(f"t={t:.6g}: turning number {winding}")
                log.warning("Curve no longer simple at t=%g", t)
                break
        elif steps % config.resample_every == 0:
            curve = resample(curve, config.n_points)

    if steps != last_snapshot_step:
        curve = resample(curve, config.n_points)
        trace.snapshots.append(Snapshot.of(t, curve))
    trace.steps = steps
    log.info("Flow '%s' stopped (%s) at t=%g after %d steps", curve.name, trace.stop_reason, t, steps)
    return trace
