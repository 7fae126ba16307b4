"""
Harnack quantity search.

Starting from the ansatz h = a u_ss + b u_s^2 + c E + phi, this engine
computes the heat remainder of h, substitutes the critical-point relation
a u_ss = -(b Y + c X + phi) with X = E, Y = u_s^2, reads off the quadratic
form in (X, Y, phi), turns each coefficient into a condition on (a, b, c),
adds the conditions on the potential phi = alpha/t + beta/s^2, and solves
the resulting family.

Explicit time only appears here (symbol T_SYM); the differential polynomial
algebra stays time-free.
"""

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import pandas as pd
import sympy as sp

import diffpoly_engine as dp

log = logging.getLogger(__name__)

A_SYM, B_SYM, C_SYM = sp.symbols("a b c", real=True)
ALPHA_SYM, BETA_SYM = sp.symbols("alpha beta", nonnegative=True)
EPS_SYM = sp.Symbol("epsilon", positive=True)
T_SYM = sp.Symbol("t", positive=True)
S_SYM = sp.Symbol("s", positive=True)

PARAM_SYMBOLS = {"a": A_SYM, "b": B_SYM, "c": C_SYM, "alpha": ALPHA_SYM,
                 "beta": BETA_SYM, "epsilon": EPS_SYM, "t": T_SYM, "s": S_SYM}

# Condition statuses
HOLDS = "holds"
FAILS = "fails"
VACUOUS = "vacuous"

# Quadratic form monomials: X = E, Y = u_s^2
QF_MONOMIALS = {
    "cYY": {dp.u_gen(1): 4},
    "cXX": {dp.E_GEN: 2},
    "cXY": {dp.E_GEN: 1, dp.u_gen(1): 2},
    "cPhiX": {dp.phi_gen(): 1, dp.E_GEN: 1},
    "cPhiY": {dp.phi_gen(): 1, dp.u_gen(1): 2},
    "cPhiPhi": {dp.phi_gen(): 2},
}


class ParameterError(ValueError):
    """Raised when ansatz parameters violate a precondition."""


def to_exact(value):
    """
    Converts user input (int, str like '3/2', Fraction, sympy) to an exact sympy number.
    Floats go through their decimal string so 0.1 becomes 1/10.
    """
    if isinstance(value, sp.Basic):
        return value
    if isinstance(value, float):
        return sp.Rational(repr(value))
    try:
        return sp.Rational(str(value).strip())
    except (TypeError, ValueError, sp.SympifyError):
        raise ParameterError(f"Not an exact rational: '{value}'")


@dataclass(frozen=True)
class AnsatzParams:
    a: sp.Expr
    b: sp.Expr
    c: sp.Expr = sp.Integer(0)

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, to_exact(getattr(self, name)))

    @classmethod
    def symbolic(cls):
        return cls(A_SYM, B_SYM, C_SYM)

    @classmethod
    def from_string(cls, text):
        """Parses 'a,b,c' (c optional), e.g. '2,1,3' or '1,0,1'."""
        parts = [p.strip() for p in str(text).split(",") if p.strip()]
        if len(parts) not in (2, 3):
            raise ParameterError(f"Expected 'a,b[,c]', got '{text}'")
        return cls(*parts)

    @property
    def is_symbolic(self):
        return any(sp.sympify(v).free_symbols for v in (self.a, self.b, self.c))

    def substitution(self):
        return {A_SYM: self.a, B_SYM: self.b, C_SYM: self.c}

    def scaled(self, factor):
        factor = to_exact(factor)
        return AnsatzParams(self.a * factor, self.b * factor, self.c * factor)


@dataclass(frozen=True)
class PhiAnsatz:
    alpha: sp.Expr
    beta: sp.Expr = sp.Integer(0)

    def __post_init__(self):
        for name in ("alpha", "beta"):
            value = to_exact(getattr(self, name))
            if value.is_number and value < 0:
                raise ParameterError(f"{name} must be >= 0, got {value}")
            object.__setattr__(self, name, value)

    def phi(self):
        """phi(s, t) = alpha/t + beta/s^2 as an explicit sympy expression."""
        return self.alpha / T_SYM + self.beta / S_SYM ** 2


def coefficient_A(params):
    return 2 * (params.a - params.b) / params.a ** 2


def coefficient_B(params):
    """B = a^2 / (4 b (a - b)); undefined at b = 0 or a = b."""
    denominator = 4 * params.b * (params.a - params.b)
    if denominator == 0:
        raise ParameterError("B undefined at b=0 (or a=b)")
    return params.a ** 2 / denominator


# --- Ansatz and remainder ---

def general_ansatz(params):
    """h = a u_ss + b u_s^2 + c E + phi."""
    return (dp.scale(dp.U_SS, params.a) + dp.scale(dp.U_S ** 2, params.b)
            + dp.scale(dp.E, params.c) + dp.PHI)


def expected_remainder(params):
    """
    Closed form of the heat remainder of the general ansatz:
    2(a-b) u_ss^2 + (6a+2b-6c) E u_s^2 - 2c E^2 - 4 phi E - phi_ss + phi_t - 2 phi_s u_s
    """
    a, b, c = params.a, params.b, params.c
    return (dp.scale(dp.U_SS ** 2, 2 * (a - b))
            + dp.scale(dp.E * dp.U_S ** 2, 6 * a + 2 * b - 6 * c)
            + dp.scale(dp.E ** 2, -2 * c)
            + dp.scale(dp.PHI * dp.E, -4)
            - dp.PHI_SS + dp.PHI_T
            + dp.scale(dp.PHI_S * dp.U_S, -2))


def general_remainder(params=None):
    params = params or AnsatzParams.symbolic()
    return dp.heat_remainder(general_ansatz(params))


@lru_cache(maxsize=1)
def symbolic_remainder():
    return general_remainder(AnsatzParams.symbolic())


# --- Critical substitution ---

@dataclass
class QuadForm:
    cYY: sp.Expr
    cXX: sp.Expr
    cXY: sp.Expr
    cPhiX: sp.Expr
    cPhiY: sp.Expr
    cPhiPhi: sp.Expr
    residual: dp.DiffPoly
    # u_ss^2 and u_ss^1 parts of the remainder, kept for unsubstitute()
    lead: dp.DiffPoly = field(default=dp.ZERO)
    linear: dp.DiffPoly = field(default=dp.ZERO)

    def coefficients(self):
        return {name: getattr(self, name) for name in QF_MONOMIALS}

    @property
    def is_symbolic(self):
        return any(sp.sympify(v).free_symbols for v in self.coefficients().values())

    def as_diffpoly(self):
        """Rebuilds the substituted remainder with X = E and Y = u_s^2."""
        total = self.residual
        for name, powers in QF_MONOMIALS.items():
            total = total + dp.monomial(powers, getattr(self, name))
        return total


def critical_linear_part(params):
    """L = b Y + c X + phi, so that the critical point reads a u_ss = -L."""
    return dp.scale(dp.U_S ** 2, params.b) + dp.scale(dp.E, params.c) + dp.PHI


def critical_substitute(remainder, params):
    """
    Substitutes u_ss = -(b u_s^2 + c E + phi)/a into the remainder and
    extracts the quadratic form in X = E, Y = u_s^2 and phi.
    Raises ParameterError if a = 0 or the remainder is more than quadratic in u_ss.
    """
    if params.a == 0:
        raise ParameterError("a = 0: the critical-point relation cannot be solved for u_ss")
    u_ss = dp.u_gen(2)
    parts = dp.collect(remainder, u_ss)
    degree = max(parts, default=0)
    if degree > 2:
        raise ParameterError(f"Remainder has degree {degree} in u_ss; expected <= 2")

    replacement = dp.scale(critical_linear_part(params), -1 / params.a)
    substituted = dp.substitute(remainder, u_ss, replacement)

    coefficients = {name: dp.coefficient(substituted, powers) for name, powers in QF_MONOMIALS.items()}
    residual = substituted
    for name, powers in QF_MONOMIALS.items():
        residual = residual - dp.monomial(powers, coefficients[name])

    log.debug("Quadratic form coefficients: %s", coefficients)
    return QuadForm(residual=residual, lead=parts.get(2, dp.ZERO), linear=parts.get(1, dp.ZERO),
                    **coefficients)


def unsubstitute(qf, params):
    """
    Inverts critical_substitute: with w = u_ss and L the critical linear part,
    R = Q + (a w + L) * (lead (a w - L) / a^2 + linear / a).
    """
    a = params.a
    w = dp.U_SS
    L = critical_linear_part(params)
    factor = dp.scale(w, a) + L
    correction = dp.scale(qf.lead * (dp.scale(w, a) - L), 1 / a ** 2) + dp.scale(qf.linear, 1 / a)
    return qf.as_diffpoly() + factor * correction


def expected_residual():
    """Terms of the remainder outside the quadratic form: phi_t - phi_ss - 2 phi_s u_s."""
    return dp.PHI_T - dp.PHI_SS + dp.scale(dp.PHI_S * dp.U_S, -2)


def expected_quadform(params):
    """Closed forms of the quadratic form coefficients."""
    a, b, c = params.a, params.b, params.c
    k = 2 * (a - b) / a ** 2
    return {
        "cYY": k * b ** 2,
        "cXX": k * c ** 2 - 2 * c,
        "cXY": 6 * a + 2 * b - 6 * c + 4 * (a - b) * b * c / a ** 2,
        "cPhiX": 4 * c * (a - b) / a ** 2 - 4,
        "cPhiY": 4 * b * (a - b) / a ** 2,
        "cPhiPhi": k,
    }


# --- Conditions on (a, b, c) ---

@dataclass
class Condition:
    name: str
    inequality: str
    status: str
    detail: str = ""


@dataclass
class ConstraintReport:
    conditions: list = field(default_factory=list)

    @property
    def feasible(self):
        return all(cond.status in (HOLDS, VACUOUS) for cond in self.conditions)

    def failed(self):
        return [cond for cond in self.conditions if cond.status == FAILS]

    def to_frame(self):
        return pd.DataFrame([vars(cond) for cond in self.conditions],
                            columns=["name", "inequality", "status", "detail"])


@dataclass(frozen=True)
class ConditionBounds:
    cxx_roots: tuple   # roots in c of the X^2 coefficient
    lower: sp.Expr     # from the phi X coefficient
    upper: sp.Expr     # from the X Y coefficient


def _root_in_c(expr):
    roots = sp.solve(sp.numer(sp.together(expr)), C_SYM)
    return [sp.factor(r) for r in roots]


@lru_cache(maxsize=1)
def symbolic_quadform():
    return critical_substitute(symbolic_remainder(), AnsatzParams.symbolic())


def bounds_from_quadform(qf):
    """
    Derives the bounds on c from a quadratic form symbolic in (a, b, c):
    the X^2 coefficient has roots 0 and a^2/(a-b), the X Y coefficient is
    decreasing in c, the phi X coefficient is increasing in c.
    """
    cxx_roots = tuple(sorted(_root_in_c(qf.cXX), key=lambda r: 0 if r == 0 else 1))
    (upper,) = _root_in_c(qf.cXY)
    (lower,) = _root_in_c(qf.cPhiX)
    return ConditionBounds(cxx_roots=cxx_roots, lower=sp.factor(lower), upper=sp.factor(upper))


@lru_cache(maxsize=1)
def condition_bounds():
    return bounds_from_quadform(symbolic_quadform())


def _at(expr, params):
    return sp.simplify(sp.sympify(expr).subs(params.substitution()))


def _bound_defined(params):
    return params.a != params.b and params.a != 0


def derive_conditions(qf, params):
    """
    Emits the conditions that make each quadratic form term non-negative:
      (i)   a > b >= 0
      (ii)  c <= 0 or c >= a^2/(a-b)
      (iii) c <= (3a+b)a^2/(3a^2-2ab+2b^2)
      (iv)  c >= a^2/(a-b)
      (v)   a^2/(a-b) <= c <= (3a+b)a^2/(3a^2-2ab+2b^2)
    Bounds come from the symbolic quadratic form; when qf is numeric its
    coefficients are cross-checked against the symbolic ones.
    Boundary values count as holding.
    """
    if params.is_symbolic:
        raise ParameterError("derive_conditions evaluates numeric (a, b, c); got symbols")
    if qf.is_symbolic:
        bounds = bounds_from_quadform(qf)
    else:
        bounds = condition_bounds()
        symbolic = symbolic_quadform()
        for name, value in qf.coefficients().items():
            if sp.simplify(_at(getattr(symbolic, name), params) - value) != 0:
                raise ParameterError(f"Quadratic form coefficient {name} does not match params")

    a, b, c = params.a, params.b, params.c
    report = ConstraintReport()

    order_ok = bool(a > b) and bool(b >= 0)
    report.conditions.append(Condition(
        "(i) a > b >= 0", str(sp.And(sp.Gt(A_SYM, B_SYM), sp.Ge(B_SYM, 0))),
        HOLDS if order_ok else FAILS,
        "" if order_ok else f"a={a}, b={b}"))

    root = bounds.cxx_roots[-1]
    upper = bounds.upper
    lower = bounds.lower
    ineq_ii = str(sp.Or(sp.Le(C_SYM, 0), sp.Ge(C_SYM, root)))
    ineq_iii = str(sp.Le(C_SYM, upper))
    ineq_iv = str(sp.Ge(C_SYM, lower))
    ineq_v = f"{sp.sstr(lower)} <= c <= {sp.sstr(upper)}"

    if not _bound_defined(params):
        detail = "a = b leaves a^2/(a-b) undefined"
        report.conditions.append(Condition("(ii) X^2 term", ineq_ii, VACUOUS, detail))
    else:
        root_val = _at(root, params)
        ok = bool(c <= 0) or bool(c >= root_val)
        report.conditions.append(Condition(
            "(ii) X^2 term", ineq_ii, HOLDS if ok else FAILS,
            f"c={c}, a^2/(a-b)={root_val}"))

    upper_val = _at(upper, params)
    ok = bool(c <= upper_val)
    detail = f"c={c}, upper={upper_val}"
    if ok and c <= 0:
        detail += " (free for c <= 0)"
    report.conditions.append(Condition("(iii) XY term", ineq_iii, HOLDS if ok else FAILS, detail))

    if not _bound_defined(params):
        report.conditions.append(Condition("(iv) phi X term", ineq_iv, VACUOUS, "a = b"))
        report.conditions.append(Condition("(v) c interval", ineq_v, VACUOUS, "a = b"))
    else:
        lower_val = _at(lower, params)
        ok = bool(c >= lower_val)
        report.conditions.append(Condition(
            "(iv) phi X term", ineq_iv, HOLDS if ok else FAILS, f"c={c}, lower={lower_val}"))
        if lower_val > upper_val:
            status, detail = FAILS, f"empty interval: lower={lower_val} > upper={upper_val}"
        elif lower_val <= c <= upper_val:
            status, detail = HOLDS, f"[{lower_val}, {upper_val}]"
        else:
            status, detail = FAILS, f"c={c} outside [{lower_val}, {upper_val}]"
        report.conditions.append(Condition("(v) c interval", ineq_v, status, detail))

    log.info("Conditions for (a,b,c)=(%s,%s,%s): feasible=%s", a, b, c, report.feasible)
    return report


def c_interval(a, b):
    """Exact (lower, upper) bounds on c for given (a, b) with a != b."""
    params = AnsatzParams(a, b, 0)
    if not _bound_defined(params):
        raise ParameterError("c interval undefined for a = b")
    bounds = condition_bounds()
    return _at(bounds.lower, params), _at(bounds.upper, params)


def interval_is_empty(a, b):
    lower, upper = c_interval(a, b)
    return bool(lower > upper)


# --- Conditions on phi ---

def phi_conditions(params, phi):
    """
    Conditions on phi = alpha/t + beta/s^2.
    b > 0: alpha >= 1/A, beta >= (6+4B)/A, at least one strict.
    b = 0: beta = 0 (B undefined) and alpha > a/2 strictly.
    """
    report = ConstraintReport()
    a, b = params.a, params.b
    alpha, beta = phi.alpha, phi.beta

    if not (a > b and b >= 0):
        report.conditions.append(Condition(
            "a > b >= 0", "a > b >= 0", FAILS, "A = 2(a-b)/a^2 must be positive"))
        return report

    A = coefficient_A(params)
    alpha_min = sp.simplify(1 / A)

    if b == 0:
        beta_ok = beta == 0
        report.conditions.append(Condition(
            "beta = 0", "beta = 0", HOLDS if beta_ok else FAILS,
            "" if beta_ok else "B undefined at b=0"))
        alpha_ok = bool(alpha > alpha_min)
        report.conditions.append(Condition(
            "alpha > a/2", f"alpha > {alpha_min}", HOLDS if alpha_ok else FAILS,
            f"alpha={alpha}" + ("" if alpha_ok else " (strict inequality required)")))
        return report

    B = coefficient_B(params)
    beta_min = sp.simplify((6 + 4 * B) / A)
    alpha_ok = bool(alpha >= alpha_min)
    beta_ok = bool(beta >= beta_min)
    report.conditions.append(Condition(
        "alpha >= 1/A", f"alpha >= {alpha_min}", HOLDS if alpha_ok else FAILS, f"alpha={alpha}"))
    report.conditions.append(Condition(
        "beta >= (6+4B)/A", f"beta >= {beta_min}", HOLDS if beta_ok else FAILS, f"beta={beta}"))
    strict = bool(alpha > alpha_min) or bool(beta > beta_min)
    report.conditions.append(Condition(
        "one strict", "alpha > 1/A or beta > (6+4B)/A", HOLDS if strict else FAILS,
        "" if strict else "both bounds attained with equality"))
    return report


def phi_lower_bound(params, phi=None):
    """
    Lower bound of phi_t - phi_ss - B phi_s^2/phi + A phi^2 after using
    phi_s^2/phi <= 4 beta/s^4. Returns the coefficients of 1/t^2, 1/(t s^2)
    and 1/s^4, i.e. (A alpha^2 - alpha, 2 A alpha beta, A beta^2 - 6 beta - 4 beta B).
    With b = 0 the B term is dropped and beta must be zero.
    """
    phi = phi or PhiAnsatz(ALPHA_SYM, BETA_SYM)
    expr = phi.phi()
    A = coefficient_A(params)
    phi_t = sp.diff(expr, T_SYM)
    phi_ss = sp.diff(expr, S_SYM, 2)
    if params.b == 0:
        if phi.beta != 0:
            raise ParameterError("B undefined at b=0: beta must be 0")
        bound = phi_t - phi_ss + A * expr ** 2
    else:
        B = coefficient_B(params)
        bound = phi_t - phi_ss - B * 4 * phi.beta / S_SYM ** 4 + A * expr ** 2
    x, y = sp.symbols("x y", positive=True)  # x = 1/t, y = 1/s^2
    bound = bound.subs({T_SYM: 1 / x, S_SYM: 1 / sp.sqrt(y)})
    numerator, denominator = sp.fraction(sp.cancel(sp.together(bound)))
    if denominator.has(x) or denominator.has(y):
        raise ParameterError(f"Lower bound is not a quadratic form in 1/t and 1/s^2: {bound}")
    poly = sp.Poly(sp.expand(numerator), x, y)
    return {
        "1/t^2": sp.simplify(poly.coeff_monomial(x ** 2) / denominator),
        "1/(t s^2)": sp.simplify(poly.coeff_monomial(x * y) / denominator),
        "1/s^4": sp.simplify(poly.coeff_monomial(y ** 2) / denominator),
    }


def phi_ratio_gap(phi=None):
    """
    4 beta/s^4 - phi_s^2/phi, which must be non-negative for the bound
    phi_s^2/phi <= 4 beta/s^4. Returned factored: 4 alpha beta/(s^2 (alpha s^2 + beta t)).
    """
    phi = phi or PhiAnsatz(ALPHA_SYM, BETA_SYM)
    expr = phi.phi()
    return sp.factor(sp.simplify(4 * phi.beta / S_SYM ** 4 - sp.diff(expr, S_SYM) ** 2 / expr))


def cauchy_schwarz_gap(params):
    """
    For b > 0, returns k phi Y - 2 phi_s u_s + phi_s^2/(k phi) - k phi (u_s - phi_s/(k phi))^2
    with k = 4b(a-b)/a^2; this is identically zero, which proves
    k phi u_s^2 - 2 phi_s u_s >= -a^2 phi_s^2 / (4 b (a-b) phi).
    """
    if params.b == 0:
        raise ParameterError("B undefined at b=0")
    us, ph, phs = sp.symbols("u_s phi phi_s")
    k = 4 * params.b * (params.a - params.b) / params.a ** 2
    lhs = k * ph * us ** 2 - 2 * phs * us + params.a ** 2 * phs ** 2 / (4 * params.b * (params.a - params.b) * ph)
    square = k * ph * (us - phs / (k * ph)) ** 2
    return sp.simplify(lhs - square)


def summary_conditions():
    """
    The summarised conditions with closed forms for alpha and beta.
    'beta_matches' checks beta_min == (6 + 4B)/A symbolically.
    """
    params = AnsatzParams.symbolic()
    bounds = condition_bounds()
    alpha_min = params.a ** 2 / (2 * (params.a - params.b))
    beta_min = params.a ** 2 * (params.a ** 2 + 6 * params.b * (params.a - params.b)) / (
        2 * params.b * (params.a - params.b) ** 2)
    A = coefficient_A(params)
    B = coefficient_B(params)
    return {
        "order": "a > b >= 0",
        "c_lower": bounds.lower,
        "c_upper": bounds.upper,
        "phi": PhiAnsatz(ALPHA_SYM, BETA_SYM).phi(),
        "alpha_min": alpha_min,
        "beta_min": beta_min,
        "alpha_matches": sp.simplify(alpha_min - 1 / A) == 0,
        "beta_matches": sp.simplify(beta_min - (6 + 4 * B) / A) == 0,
    }


# --- Solving the family ---

@dataclass
class HarnackExpression:
    spatial: dp.DiffPoly
    time_coeff: sp.Expr  # coefficient of 1/t

    def pretty(self):
        parts = []
        for powers, coeff in self.spatial.items():
            name = " * ".join(g.name if e == 1 else f"{g.name}^{e}" for g, e in powers)
            parts.append(name if coeff == 1 else f"{sp.sstr(coeff)}*{name}")
        parts.append(f"({sp.sstr(self.time_coeff)})/t")
        return " + ".join(parts)

    def __str__(self):
        return self.pretty()


@dataclass
class FamilySolution:
    constraints: dict
    emptiness_numerator: sp.Expr
    harnack: HarnackExpression
    rescaled: HarnackExpression
    grid_feasible: int
    grid_size: int


def solve_family(grid=None):
    """
    Solves the combined conditions: lower <= upper on the c interval reduces
    to 3 a^2 b^2 <= 0, hence b = 0, c = a, beta = 0 and alpha = a/2 + epsilon.
    Also checks exactly that the interval is empty on a grid of (a, b) with a > b > 0
    (default a = 1, b = 1/10 ... 9/10).
    """
    bounds = condition_bounds()
    gap = sp.factor(sp.together(bounds.lower - bounds.upper))
    numerator, denominator = sp.fraction(gap)
    log.debug("lower - upper = %s", gap)

    b_values = [v for v in sp.solve(sp.Eq(numerator, 0), B_SYM)]
    if b_values != [0]:
        raise ParameterError(f"Unexpected solution set for b: {b_values}")

    at_b0 = {B_SYM: 0}
    c_lower = sp.simplify(bounds.lower.subs(at_b0))
    c_upper = sp.simplify(bounds.upper.subs(at_b0))
    if sp.simplify(c_lower - c_upper) != 0:
        raise ParameterError("c interval does not collapse at b = 0")

    alpha_min = sp.simplify((1 / coefficient_A(AnsatzParams(A_SYM, 0, c_lower))))
    constraints = {
        "b": sp.Integer(0),
        "c": c_lower,
        "beta": sp.Integer(0),
        "alpha": alpha_min + EPS_SYM,
    }

    params = AnsatzParams(A_SYM, 0, c_lower)
    spatial = dp.scale(dp.U_SS, params.a) + dp.scale(dp.E, params.c)
    harnack = HarnackExpression(spatial, constraints["alpha"])
    rescaled = HarnackExpression(dp.substitute_params(spatial, {A_SYM: 1}),
                                 constraints["alpha"].subs(A_SYM, 1))

    if grid is None:
        grid = [(sp.Integer(1), sp.Rational(k, 10)) for k in range(1, 10)]
    feasible = sum(0 if interval_is_empty(a, b) else 1 for a, b in grid)

    log.info("Family solved: %s; rescaled h = %s", constraints, rescaled)
    return FamilySolution(
        constraints=constraints,
        emptiness_numerator=sp.factor(numerator * sp.sign(denominator.subs({A_SYM: 2, B_SYM: 1}))),
        harnack=harnack,
        rescaled=rescaled,
        grid_feasible=feasible,
        grid_size=len(grid),
    )


# --- Specialised remainder ---

@dataclass
class SpecializationCheck:
    epsilon: sp.Expr
    remainder: dp.DiffPoly
    expected: dp.DiffPoly
    matches_expected: bool
    matches_general: bool
    contradiction: sp.Expr  # coefficient of 1/t^2 at the critical point

    @property
    def holds(self):
        target = 2 * self.epsilon ** 2 + self.epsilon
        return (self.matches_expected and self.matches_general
                and sp.simplify(self.contradiction - target) == 0)


def specialize_phi(poly, phi_value):
    """
    Replaces phi by an explicit function of t only: phi -> phi_value,
    phi_t -> d/dt phi_value, phi_s, phi_ss -> 0.
    """
    result = dp.substitute(poly, dp.phi_gen(), dp.DiffPoly.constant(phi_value))
    result = dp.substitute(result, dp.phi_gen(t_order=1), dp.DiffPoly.constant(sp.diff(phi_value, T_SYM)))
    for gen in result.generators():
        if gen.kind == dp.KIND_PHI and gen.s_order >= 1:
            result = dp.substitute(result, gen, dp.ZERO)
    return result


def verify_specialized_remainder(epsilon):
    """
    For h = u_ss + E + (1/2 + eps)/t checks
        R = 2 u_ss^2 - 2 E^2 - (4/t)(1/2 + eps) E - (1/2 + eps)/t^2
    both directly and from the general remainder at (a, b, c) = (1, 0, 1),
    and evaluates R at the critical point u_ss = -E - (1/2 + eps)/t,
    which equals (2 eps^2 + eps)/t^2.
    """
    epsilon = to_exact(epsilon)
    if epsilon.is_number and epsilon < 0:
        raise ParameterError(f"epsilon must be >= 0, got {epsilon}")
    p = sp.Rational(1, 2) + epsilon
    phi_value = p / T_SYM
    params = AnsatzParams(1, 0, 1)

    direct = specialize_phi(dp.heat_remainder(general_ansatz(params)), phi_value)
    general = specialize_phi(dp.substitute_params(symbolic_remainder(), params.substitution()), phi_value)
    expected = (dp.scale(dp.U_SS ** 2, 2) + dp.scale(dp.E ** 2, -2)
                + dp.scale(dp.E, -4 * p / T_SYM) + dp.DiffPoly.constant(-p / T_SYM ** 2))

    at_critical = dp.substitute(direct, dp.u_gen(2), dp.scale(dp.E, -1) + dp.DiffPoly.constant(-p / T_SYM))
    if at_critical.generators():
        raise ParameterError(f"Critical value is not constant: {at_critical}")
    value = dp.coefficient(at_critical, {})
    contradiction = sp.simplify(value * T_SYM ** 2)

    return SpecializationCheck(
        epsilon=epsilon,
        remainder=direct,
        expected=expected,
        matches_expected=direct == expected,
        matches_general=direct == general,
        contradiction=contradiction,
    )


# --- Parameter search ---

def search_samples(seed=0, count=20):
    """
    Random exact samples of (a, b, c) and (alpha, beta) for the search command.
    Roughly half the samples sit on the b = 0 branch.
    """
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(count):
        a = sp.Rational(int(rng.integers(1, 20)), int(rng.integers(1, 6)))
        if rng.random() < 0.5:
            b = sp.Integer(0)
        else:
            b = a * sp.Rational(int(rng.integers(0, 10)), 10)
        c = a * sp.Rational(int(rng.integers(0, 31)), 10)
        alpha = a * sp.Rational(int(rng.integers(0, 21)), 20)
        beta = sp.Integer(0) if rng.random() < 0.5 else sp.Rational(int(rng.integers(0, 200)), 4)
        samples.append((AnsatzParams(a, b, c), PhiAnsatz(alpha, beta)))
    return samples


def evaluate_sample(params, phi):
    """Runs both condition sets for one sample; returns a flat record dict."""
    qf = critical_substitute(general_remainder(params), params)
    abc = derive_conditions(qf, params)
    phi_report = phi_conditions(params, phi)
    failed = [cond.name for cond in abc.failed() + phi_report.failed()]
    return {
        "a": str(params.a),
        "b": str(params.b),
        "c": str(params.c),
        "alpha": str(phi.alpha),
        "beta": str(phi.beta),
        "abc_feasible": abc.feasible,
        "phi_feasible": phi_report.feasible,
        "feasible": abc.feasible and phi_report.feasible,
        "failed": "; ".join(failed),
    }


def search(seed=0, count=20):
    return pd.DataFrame([evaluate_sample(p, phi) for p, phi in search_samples(seed, count)])
