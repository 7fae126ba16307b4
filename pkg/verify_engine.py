"""
Harnack quantity along a simulated flow.

For each snapshot with t > 0 the engine evaluates

    h_eps = u_ss + e^{2u} + (1/2 + eps)/t,    u = log kappa,

on the uniform arc-length grid with periodic centred differences, and the
equivalent curvature form

    kappa * h_eps = kappa_t + (1/2 + eps) kappa / t - kappa_s^2 / kappa,

where kappa_t is either taken from the evolution identity
kappa_t = kappa_ss + kappa^3 or differenced across snapshots by tracking
foot points on the neighbouring curves.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import pandas as pd
import sympy as sp
from scipy.spatial import cKDTree

import diffpoly_engine as dp
from flow_engine import menger_curvature
from harnack_engine import EPS_SYM, ParameterError, solve_family, to_exact
from utils import REQUIRED_COLUMNS_DIAGNOSTICS

log = logging.getLogger(__name__)

PATH_SPATIAL = "spatial"
PATH_TIME = "time"
PATHS = (PATH_SPATIAL, PATH_TIME)

DIAGNOSTIC_COLUMNS = REQUIRED_COLUMNS_DIAGNOSTICS
EARLY_FRACTION = 0.1
MIN_ORACLE_POINTS = 8


class DomainError(ValueError):
    """Quantity undefined on the input (kappa <= 0, t <= 0, window >= pi/2)."""


@dataclass(frozen=True)
class HarnackParams:
    epsilon: float = 0.01

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be > 0, got {self.epsilon}")

    @property
    def p(self):
        """Coefficient of 1/t."""
        return 0.5 + self.epsilon


@lru_cache(maxsize=1)
def harnack_expression():
    """The rescaled quantity found by the parameter search: spatial part and 1/t coefficient."""
    return solve_family().rescaled


def time_coefficient(epsilon):
    return float(harnack_expression().time_coeff.subs(EPS_SYM, to_exact(epsilon)))


# --- Periodic stencils ---

def periodic_d1(f, ds):
    return (np.roll(f, -1) - np.roll(f, 1)) / (2 * ds)


def periodic_d2(f, ds):
    return (np.roll(f, -1) - 2 * f + np.roll(f, 1)) / ds ** 2


@dataclass
class SnapshotFields:
    """Pointwise quantities of one snapshot on its arc-length grid."""
    t: float
    kappa: np.ndarray
    kappa_s: np.ndarray
    kappa_ss: np.ndarray
    u_s: np.ndarray
    u_ss: np.ndarray
    u_ss_alg: np.ndarray

    @property
    def kappa_t_spatial(self):
        return self.kappa_ss + self.kappa ** 3


def snapshot_fields(snap):
    kappa = np.asarray(snap.kappa, dtype=float)
    if np.any(kappa <= 0):
        idx = int(np.argmin(kappa))
        raise DomainError(f"kappa[{idx}] = {kappa[idx]:.6g} <= 0 at t={snap.t:.6g}; log kappa undefined")
    ds = snap.curve.length / snap.curve.n_points
    u = np.log(kappa)
    kappa_s = periodic_d1(kappa, ds)
    kappa_ss = periodic_d2(kappa, ds)
    return SnapshotFields(
        t=snap.t,
        kappa=kappa,
        kappa_s=kappa_s,
        kappa_ss=kappa_ss,
        u_s=periodic_d1(u, ds),
        u_ss=periodic_d2(u, ds),
        u_ss_alg=(kappa * kappa_ss - kappa_s ** 2) / kappa ** 2,
    )


def h_values(fields, params, u_ss=None):
    """h_eps evaluated through the expression returned by the parameter search."""
    expr = harnack_expression()
    u_ss = fields.u_ss if u_ss is None else u_ss
    spatial = dp.evaluate(expr.spatial, {dp.u_gen(2): u_ss, dp.E_GEN: fields.kappa ** 2})
    return spatial + time_coefficient(params.epsilon) / fields.t


def curvature_form(fields, kappa_t, p):
    """kappa_t + p kappa / t - kappa_s^2 / kappa."""
    return kappa_t + p * fields.kappa / fields.t - fields.kappa_s ** 2 / fields.kappa


def limit_form(fields, kappa_t):
    """The eps -> 0 form kappa_t + kappa/(2t) - kappa_s^2/kappa."""
    return curvature_form(fields, kappa_t, 0.5)


# --- Time differences ---

def foot_point_kappa(query, snap, tree=None):
    """
    Curvature of `snap` at the closest point to each query point: nearest
    vertex, projection on its two adjacent segments, linear interpolation.
    """
    pts = snap.curve.points
    n = len(pts)
    tree = tree or cKDTree(pts)
    _, nearest = tree.query(query)
    best_dist = np.full(len(query), np.inf)
    best_kappa = np.zeros(len(query))
    for offset in (-1, 0):
        i0 = (nearest + offset) % n
        i1 = (i0 + 1) % n
        seg = pts[i1] - pts[i0]
        lam = np.einsum("ij,ij->i", query - pts[i0], seg) / np.einsum("ij,ij->i", seg, seg)
        lam = np.clip(lam, 0.0, 1.0)
        foot = pts[i0] + lam[:, None] * seg
        dist = np.hypot(*(query - foot).T)
        better = dist < best_dist
        best_dist[better] = dist[better]
        best_kappa[better] = ((1 - lam) * snap.kappa[i0] + lam * snap.kappa[i1])[better]
    return best_kappa


def kappa_t_timediff(snapshots, k):
    """
    kappa_t at the points of snapshot k from neighbouring snapshots: centred
    when both exist, one-sided at the ends. None for a single snapshot.
    """
    if len(snapshots) < 2:
        return None
    here = snapshots[k]
    query = here.curve.points
    if 0 < k < len(snapshots) - 1:
        before, after = snapshots[k - 1], snapshots[k + 1]
        return (foot_point_kappa(query, after) - foot_point_kappa(query, before)) / (after.t - before.t)
    if k == 0:
        after = snapshots[1]
        return (foot_point_kappa(query, after) - here.kappa) / (after.t - here.t)
    before = snapshots[k - 1]
    return (here.kappa - foot_point_kappa(query, before)) / (here.t - before.t)


# --- Evaluation ---

@dataclass
class HarnackDiagnostics:
    epsilon: float
    table: pd.DataFrame  # pointwise, DIAGNOSTIC_COLUMNS
    per_snapshot: pd.DataFrame
    global_min: float
    global_min_t: float
    global_min_index: int
    residuals: dict = field(default_factory=dict)
    time_path: bool = True

    @property
    def negative_part(self):
        return max(0.0, -self.global_min)

    def passed(self, tolerance):
        return self.global_min >= -tolerance

    def summary(self):
        record = {
            "epsilon": self.epsilon,
            "global_min_h": self.global_min,
            "global_min_t": self.global_min_t,
            "global_min_index": self.global_min_index,
            "snapshots": int(len(self.per_snapshot)),
            "time_path": self.time_path,
        }
        record.update(self.residuals)
        return record


def _evaluated_snapshots(trace):
    indices = [k for k, snap in enumerate(trace.snapshots) if snap.t > 0]
    skipped = len(trace.snapshots) - len(indices)
    if skipped:
        log.debug("Skipping %d snapshot(s) at t <= 0", skipped)
    if not indices:
        raise DomainError("No snapshot with t > 0; h_eps is undefined at t = 0")
    return indices


def evaluate_h(trace, params=None):
    """
    Evaluates h_eps on every snapshot with t > 0.
    Raises DomainError when kappa <= 0 anywhere or no snapshot has t > 0.
    With a single snapshot only the spatial form is computed.
    """
    params = params or HarnackParams()
    snaps = trace.snapshots
    for snap in snaps:
        if np.any(np.asarray(snap.kappa) <= 0):
            raise DomainError(f"kappa <= 0 in snapshot t={snap.t:.6g}")
    indices = _evaluated_snapshots(trace)
    time_path = len(snaps) >= 2
    if not time_path:
        log.warning("Single snapshot: time-difference form unavailable")

    rows, frames = [], []
    stencil_gap = spatial_gap = time_gap = residual = 0.0
    for k in indices:
        fields = snapshot_fields(snaps[k])
        h = h_values(fields, params)
        h_alg = h_values(fields, params, u_ss=fields.u_ss_alg)
        rhs_spatial = curvature_form(fields, fields.kappa_t_spatial, params.p)
        spatial_gap = max(spatial_gap, _scaled_gap(fields.kappa * h_alg, rhs_spatial))
        stencil_gap = max(stencil_gap, float(np.max(np.abs(fields.u_ss - fields.u_ss_alg))))

        kappa_t = kappa_t_timediff(snaps, k)
        if kappa_t is not None:
            h_time = curvature_form(fields, kappa_t, params.p) / fields.kappa
            time_gap = max(time_gap, float(np.max(np.abs(fields.kappa * h - fields.kappa * h_time))))
            residual = max(residual, float(np.max(np.abs(kappa_t - fields.kappa_t_spatial))))
        else:
            h_time = np.full_like(h, np.nan)

        n = len(h)
        frames.append(pd.DataFrame({
            "t": np.full(n, fields.t),
            "s_index": np.arange(n),
            "kappa": fields.kappa,
            "u_ss": fields.u_ss,
            "h_eps_spatial": h,
            "h_eps_timediff": h_time,
        }))
        idx = int(np.argmin(h))
        rows.append({
            "t": fields.t,
            "min_h": float(h[idx]),
            "argmin_index": idx,
            "min_h_alg": float(h_alg.min()),
            "min_h_timediff": float(np.nanmin(h_time)) if kappa_t is not None else np.nan,
            "min_limit_form": float((limit_form(fields, fields.kappa_t_spatial) / fields.kappa).min()),
        })

    per_snapshot = pd.DataFrame(rows)
    best = int(per_snapshot["min_h"].idxmin())
    residuals = {
        "stencil_agreement": stencil_gap,
        "spatial_gap": spatial_gap,
        "time_gap": time_gap if time_path else np.nan,
        "curvature_residual": residual if time_path else np.nan,
    }
    diagnostics = HarnackDiagnostics(
        epsilon=params.epsilon,
        table=pd.concat(frames, ignore_index=True)[DIAGNOSTIC_COLUMNS],
        per_snapshot=per_snapshot,
        global_min=float(per_snapshot["min_h"].iloc[best]),
        global_min_t=float(per_snapshot["t"].iloc[best]),
        global_min_index=int(per_snapshot["argmin_index"].iloc[best]),
        residuals=residuals,
        time_path=time_path,
    )
    log.info("h_eps (eps=%g): global min %.6g at t=%.6g, index %d",
             params.epsilon, diagnostics.global_min, diagnostics.global_min_t, diagnostics.global_min_index)
    return diagnostics


def _scaled_gap(lhs, rhs):
    return float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))))


def equivalence_check(trace, params=None, path=PATH_SPATIAL):
    """
    Max pointwise gap between kappa * h_eps and the curvature form.

    spatial: kappa_t = kappa_ss + kappa^3 and u_ss from the algebraic stencil,
             so the gap is rounding only (scaled by max(1, |rhs|)).
    time:    kappa_t from snapshot differences against h_eps with the
             log-difference u_ss; the gap is O(dt + ds^2).
    """
    params = params or HarnackParams()
    if path not in PATHS:
        raise ValueError(f"Unknown path '{path}'; expected one of {PATHS}")
    snaps = trace.snapshots
    if path == PATH_TIME and len(snaps) < 2:
        raise DomainError("Time-difference path needs at least two snapshots")
    gap = 0.0
    for k in _evaluated_snapshots(trace):
        fields = snapshot_fields(snaps[k])
        if path == PATH_SPATIAL:
            lhs = fields.kappa * h_values(fields, params, u_ss=fields.u_ss_alg)
            gap = max(gap, _scaled_gap(lhs, curvature_form(fields, fields.kappa_t_spatial, params.p)))
        else:
            lhs = fields.kappa * h_values(fields, params)
            rhs = curvature_form(fields, kappa_t_timediff(snaps, k), params.p)
            gap = max(gap, float(np.max(np.abs(lhs - rhs))))
    return gap


def early_window_positive(diagnostics, fraction=EARLY_FRACTION):
    """min_s h_eps > 0 on the first `fraction` of the evaluated time span."""
    table = diagnostics.per_snapshot
    cutoff = table["t"].min() + fraction * (table["t"].max() - table["t"].min())
    return bool((table.loc[table["t"] <= cutoff, "min_h"] > 0).all())


# --- Grim reaper oracle ---

def grim_reaper(n_points, window):
    """
    Points of y = -log cos x, x in [-window, window], equally spaced in arc
    length s = asinh(tan x). Returns (points, x, ds).
    """
    if not 0 < window < np.pi / 2:
        raise DomainError(f"window must be in (0, pi/2), got {window}; curvature vanishes at pi/2")
    if n_points < MIN_ORACLE_POINTS:
        raise DomainError(f"Oracle needs at least {MIN_ORACLE_POINTS} points, got {n_points}")
    half = np.arcsinh(np.tan(window))
    s = np.linspace(-half, half, n_points)
    x = np.arctan(np.sinh(s))
    y = -np.log(np.cos(x))
    return np.column_stack([x, y]), x, s[1] - s[0]


def soliton_stencil_oracle(n_points, window, curvature="analytic"):
    """
    Max residual of kappa_ss + kappa^3 - kappa_s^2/kappa on the grim reaper,
    with centred differences in s. ``curvature="analytic"`` samples
    kappa = cos x on the arc-length grid so only the stencils are tested;
    ``"menger"`` takes kappa from three-point circles through the sampled
    points. The residual vanishes in the continuum and is O(ds^2) here.
    """
    points, x, ds = grim_reaper(n_points, window)
    if curvature == "analytic":
        kappa = np.cos(x)
    elif curvature == "menger":
        kappa = np.concatenate([[np.nan], menger_curvature(points[:-2], points[1:-1], points[2:]), [np.nan]])
    else:
        raise ValueError(f"Unknown curvature source: {curvature}")
    kappa_s = (kappa[2:] - kappa[:-2]) / (2 * ds)
    kappa_ss = (kappa[2:] - 2 * kappa[1:-1] + kappa[:-2]) / ds ** 2
    k = kappa[1:-1]
    residual = kappa_ss + k ** 3 - kappa_s ** 2 / k
    return float(np.nanmax(np.abs(residual)))


def soliton_identity_exact(x_value):
    """
    Both sides of kappa_ss + kappa^3 = kappa_s^2/kappa with kappa = cos x,
    d/ds = cos x d/dx, evaluated exactly at x_value.
    """
    x = sp.Symbol("x", real=True)
    kappa = sp.cos(x)

    def d_s(f):
        return sp.cos(x) * sp.diff(f, x)

    lhs = d_s(d_s(kappa)) + kappa ** 3
    rhs = d_s(kappa) ** 2 / kappa
    x_value = sp.sympify(x_value)
    return sp.simplify(lhs.subs(x, x_value)), sp.simplify(rhs.subs(x, x_value))


# --- Refinement ---

def refinement_study(factory, sizes):
    """
    Evaluates factory(n) for each n and the ratio of consecutive errors
    (previous / current); a second-order quantity gives ratios near 4.
    """
    rows = []
    previous = None
    for n in sizes:
        error = float(factory(n))
        ratio = previous / error if previous is not None and error != 0 else np.nan
        rows.append({"n": int(n), "error": error, "ratio": ratio})
        log.debug("refinement n=%d error=%.6g ratio=%.4g", n, error, ratio)
        previous = error
    return pd.DataFrame(rows)
