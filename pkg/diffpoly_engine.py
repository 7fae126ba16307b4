"""
Differential polynomial engine.

Exact polynomial algebra over the generators u_s, u_ss, u_s3, ..., E = e^{2u},
phi, phi_s, phi_ss, ..., phi_t, where u = log(curvature) along a curve moving
by curve shortening. Spatial (d_s) and temporal (d_t) derivatives follow the
flow's rewrite rules, including the commutator [d_t, d_s] = E d_s.

Coefficients are sympy expressions: exact Rationals for numeric work, or
rational functions of parameter symbols (a, b, c, ...) for symbolic work.
"""

import logging
import re
from dataclasses import dataclass
from functools import lru_cache

import sympy as sp

log = logging.getLogger(__name__)

KIND_U = "u"
KIND_E = "E"
KIND_PHI = "phi"

# Generator names as they appear in the golden-file format
GENERATOR_REGEX = re.compile(r"^(?:u_(?P<u>s+|s\d+)|(?P<e>E)|phi(?:_(?P<phi>t|s+|s\d+))?)$")
POWER_REGEX = re.compile(r"^(?P<name>[A-Za-z_0-9]+)(?:\^(?P<exp>\d+))?$")


class DiffPolyError(ValueError):
    """Raised for operations outside the generator algebra."""


@dataclass(frozen=True)
class Generator:
    kind: str
    s_order: int = 0
    t_order: int = 0

    def __post_init__(self):
        if self.kind == KIND_U:
            if self.s_order < 1 or self.t_order != 0:
                raise DiffPolyError(f"u generator needs spatial order >= 1, got {self.s_order}")
        elif self.kind == KIND_E:
            if self.s_order or self.t_order:
                raise DiffPolyError("E carries no derivative orders")
        elif self.kind == KIND_PHI:
            if self.t_order not in (0, 1) or self.s_order < 0:
                raise DiffPolyError(f"Invalid phi orders (s={self.s_order}, t={self.t_order})")
            if self.t_order == 1 and self.s_order != 0:
                raise DiffPolyError("Mixed phi derivatives are not part of the algebra")
        else:
            raise DiffPolyError(f"Unknown generator kind '{self.kind}'")

    @property
    def sort_key(self):
        if self.kind == KIND_U:
            return (0, self.s_order, 0)
        if self.kind == KIND_E:
            return (1, 0, 0)
        return (2, self.t_order, self.s_order)

    @property
    def name(self):
        if self.kind == KIND_E:
            return "E"
        prefix = "u" if self.kind == KIND_U else "phi"
        if self.t_order:
            return "phi_t"
        if self.s_order == 0:
            return prefix
        if self.s_order <= 2:
            return f"{prefix}_{'s' * self.s_order}"
        return f"{prefix}_s{self.s_order}"

    def __str__(self):
        return self.name


def u_gen(order):
    return Generator(KIND_U, s_order=order)


def phi_gen(s_order=0, t_order=0):
    return Generator(KIND_PHI, s_order=s_order, t_order=t_order)


E_GEN = Generator(KIND_E)


def generator_from_name(name):
    """
    Parses a generator name ('u_ss', 'u_s3', 'E', 'phi_t', ...).
    Raises DiffPolyError on unknown names.
    """
    match = GENERATOR_REGEX.match(name)
    if not match:
        raise DiffPolyError(f"Unknown generator '{name}'")
    data = match.groupdict()
    if data["e"]:
        return E_GEN
    if data["u"]:
        order = data["u"]
        return u_gen(len(order) if set(order) == {"s"} else int(order[1:]))
    order = data["phi"]
    if order is None:
        return phi_gen()
    if order == "t":
        return phi_gen(t_order=1)
    return phi_gen(len(order) if set(order) == {"s"} else int(order[1:]))


@dataclass(frozen=True)
class Monomial:
    coeff: sp.Expr
    powers: tuple  # ((Generator, exponent), ...) in generator order

    @property
    def degree(self):
        return sum(exp for _, exp in self.powers)


def _powers_key(powers):
    # Generators are totally ordered by sort_key; exponent vectors over that
    # order compare graded-lexicographically (lower total degree first, then
    # the larger exponent on the earlier generator).
    degree = sum(exp for _, exp in powers)
    return (degree, tuple((gen.sort_key, -exp) for gen, exp in powers))


def _make_powers(mapping):
    items = [(gen, int(exp)) for gen, exp in mapping.items() if exp]
    for gen, exp in items:
        if exp < 0:
            raise DiffPolyError(f"Negative exponent on {gen}")
    return tuple(sorted(items, key=lambda item: item[0].sort_key))


def normalize_coeff(value):
    """
    Brings a coefficient to canonical exact form.
    Rationals stay Rationals; symbolic coefficients are cancelled to p/q.
    Floats are refused since they would break exact identities.
    """
    if isinstance(value, float):
        raise DiffPolyError(f"Floating point coefficient {value!r}; use exact rationals")
    coeff = sp.sympify(value)
    if coeff.is_Rational:
        return coeff
    if coeff.has(sp.Float):
        raise DiffPolyError(f"Floating point coefficient {coeff}; use exact rationals")
    return sp.cancel(sp.together(coeff))


class DiffPoly:
    """
    Immutable differential polynomial in canonical form.
    Terms are kept in canonical order with like terms merged and zero
    coefficients dropped.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        # terms: mapping powers-tuple -> coefficient
        merged = {}
        for powers, coeff in (terms or {}).items():
            merged[powers] = merged.get(powers, 0) + coeff
        clean = {}
        for powers, coeff in merged.items():
            coeff = normalize_coeff(coeff)
            if coeff != 0:
                clean[powers] = coeff
        self._terms = tuple(sorted(clean.items(), key=lambda item: _powers_key(item[0])))

    # --- construction helpers ---

    @classmethod
    def constant(cls, value):
        return cls({(): value})

    @classmethod
    def from_generator(cls, gen, exp=1):
        return cls({_make_powers({gen: exp}): 1})

    # --- inspection ---

    @property
    def terms(self):
        return [Monomial(coeff, powers) for powers, coeff in self._terms]

    def items(self):
        return list(self._terms)

    def is_zero(self):
        return not self._terms

    def generators(self):
        gens = {gen for powers, _ in self._terms for gen, _ in powers}
        return sorted(gens, key=lambda g: g.sort_key)

    def free_symbols(self):
        symbols = set()
        for _, coeff in self._terms:
            symbols |= coeff.free_symbols
        return symbols

    def __len__(self):
        return len(self._terms)

    # --- arithmetic ---

    def __add__(self, other):
        return add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    __rmul__ = __mul__

    def __pow__(self, n):
        return power(self, n)

    def __eq__(self, other):
        try:
            other = _coerce(other)
        except DiffPolyError:
            return NotImplemented
        return sub(self, other).is_zero()

    def __hash__(self):
        return hash(tuple((powers, str(coeff)) for powers, coeff in self._terms))

    def __str__(self):
        return serialize(self)

    def __repr__(self):
        return f"DiffPoly({serialize(self)})"


def _coerce(value):
    if isinstance(value, DiffPoly):
        return value
    if isinstance(value, Generator):
        return DiffPoly.from_generator(value)
    if isinstance(value, (int, sp.Expr)) or hasattr(value, "numerator"):
        return DiffPoly.constant(value)
    raise DiffPolyError(f"Cannot use {type(value).__name__} as a DiffPoly")


def var(gen):
    return DiffPoly.from_generator(gen)


def monomial(powers, coeff=1):
    """Single-term DiffPoly from a mapping Generator -> exponent."""
    return DiffPoly({_make_powers(powers): coeff})


ZERO = DiffPoly()
ONE = DiffPoly.constant(1)
U_S = var(u_gen(1))
U_SS = var(u_gen(2))
U_SSS = var(u_gen(3))
U_SSSS = var(u_gen(4))
E = var(E_GEN)
PHI = var(phi_gen())
PHI_S = var(phi_gen(1))
PHI_SS = var(phi_gen(2))
PHI_T = var(phi_gen(t_order=1))


# --- Ring operations ---

def add(p, q):
    """Canonical sum of two DiffPolys."""
    terms = dict(p.items())
    for powers, coeff in q.items():
        terms[powers] = terms.get(powers, 0) + coeff
    return DiffPoly(terms)


def neg(p):
    return DiffPoly({powers: -coeff for powers, coeff in p.items()})


def sub(p, q):
    return add(p, neg(q))


def scale(p, value):
    value = normalize_coeff(value)
    return DiffPoly({powers: coeff * value for powers, coeff in p.items()})


def _mul_powers(left, right):
    combined = dict(left)
    for gen, exp in right:
        combined[gen] = combined.get(gen, 0) + exp
    return _make_powers(combined)


def mul(p, q):
    """Distributive product in canonical form."""
    terms = {}
    for lp, lc in p.items():
        for rp, rc in q.items():
            key = _mul_powers(lp, rp)
            terms[key] = terms.get(key, 0) + lc * rc
    return DiffPoly(terms)


def power(p, n):
    if not isinstance(n, int) or n < 0:
        raise DiffPolyError(f"Exponent must be a non-negative integer, got {n!r}")
    result = ONE
    base = p
    while n:
        if n & 1:
            result = mul(result, base)
        base = mul(base, base)
        n >>= 1
    return result


def partial(p, gen):
    """Formal partial derivative with respect to a single generator."""
    terms = {}
    for powers, coeff in p.items():
        exps = dict(powers)
        exp = exps.get(gen, 0)
        if not exp:
            continue
        exps[gen] = exp - 1
        key = _make_powers(exps)
        terms[key] = terms.get(key, 0) + coeff * exp
    return DiffPoly(terms)


def substitute(p, gen, replacement):
    """
    Replaces every occurrence of `gen` in p with the DiffPoly `replacement`.
    """
    replacement = _coerce(replacement)
    result = ZERO
    cache = {}
    for powers, coeff in p.items():
        term = DiffPoly.constant(coeff)
        for g, exp in powers:
            if g == gen:
                if exp not in cache:
                    cache[exp] = power(replacement, exp)
                term = mul(term, cache[exp])
            else:
                term = mul(term, DiffPoly.from_generator(g, exp))
        result = add(result, term)
    return result


def substitute_params(p, mapping):
    """Applies a sympy substitution (e.g. {a: 1}) to every coefficient."""
    return DiffPoly({powers: sp.sympify(coeff).subs(mapping) for powers, coeff in p.items()})


def coefficient(p, powers):
    """
    Coefficient of the monomial described by `powers` (mapping Generator -> exponent).
    Returns sympy zero when the monomial is absent.
    """
    key = _make_powers(powers)
    for term_powers, coeff in p.items():
        if term_powers == key:
            return coeff
    return sp.Integer(0)


def degree_in(p, gen):
    return max((dict(powers).get(gen, 0) for powers, _ in p.items()), default=0)


def collect(p, gen):
    """
    Splits p by powers of `gen`.
    Returns a dict exponent -> DiffPoly free of `gen`.
    """
    parts = {}
    for powers, coeff in p.items():
        exps = dict(powers)
        exp = exps.pop(gen, 0)
        parts.setdefault(exp, {})
        key = _make_powers(exps)
        parts[exp][key] = parts[exp].get(key, 0) + coeff
    return {exp: DiffPoly(terms) for exp, terms in parts.items()}


# --- Derivative operators ---

def u_t():
    """Evolution of u = log(curvature): u_t = u_ss + u_s^2 + E."""
    return U_SS + U_S * U_S + E


def _ds_generator(gen):
    if gen.kind == KIND_U:
        return var(u_gen(gen.s_order + 1))
    if gen.kind == KIND_E:
        # E = kappa^2 and kappa_s = kappa * u_s
        return scale(mul(U_S, E), 2)
    if gen.t_order:
        raise DiffPolyError("d_s of phi_t is not part of the algebra")
    return var(phi_gen(gen.s_order + 1))


@lru_cache(maxsize=None)
def _dt_u(order):
    # [d_t, d_s] = E d_s applied to u^(order-1), with u_t eliminated eagerly
    lower = u_t() if order == 1 else _dt_u(order - 1)
    return add(d_s(lower), mul(E, var(u_gen(order))))


def _dt_generator(gen):
    if gen.kind == KIND_U:
        return _dt_u(gen.s_order)
    if gen.kind == KIND_E:
        return scale(mul(E, u_t()), 2)
    if gen.t_order or gen.s_order:
        raise DiffPolyError(
            f"d_t of {gen.name} is undefined: only phi itself may be differentiated in time"
        )
    return PHI_T


def _derivation(p, rule):
    result = ZERO
    for gen in p.generators():
        dp = partial(p, gen)
        if dp.is_zero():
            continue
        result = add(result, mul(dp, rule(gen)))
    return result


def d_s(p):
    """Arc-length derivative; linear and Leibniz."""
    return _derivation(_coerce(p), _ds_generator)


def d_t(p):
    """
    Time derivative along the flow.
    Uses d_t(u_s) = d_s(u_t) + E u_s recursively, d_t(E) = 2 E u_t and
    d_t(phi) = phi_t. Raises DiffPolyError on phi spatial derivatives.
    """
    return _derivation(_coerce(p), _dt_generator)


def heat_remainder(h, coupling=None):
    """
    Remainder of h against the linearised heat operator:
        R = d_t(h) - d_s(d_s(h)) - coupling * d_s(h) - 4 E h
    The coupling defaults to 2 u_s, which is the drift term of the
    Harnack quantity's evolution.
    """
    h = _coerce(h)
    if coupling is None:
        coupling = scale(U_S, 2)
    dh = d_s(h)
    return d_t(h) - d_s(dh) - mul(_coerce(coupling), dh) - scale(mul(E, h), 4)


# --- Numeric evaluation ---

def evaluate(p, values):
    """
    Evaluates p numerically.
    `values` maps Generator -> float or numpy array. Coefficients must be
    free of symbols.
    """
    if p.free_symbols():
        names = ", ".join(sorted(str(s) for s in p.free_symbols()))
        raise DiffPolyError(f"Cannot evaluate with free parameters: {names}")
    total = 0.0
    for powers, coeff in p.items():
        term = float(coeff)
        for gen, exp in powers:
            if gen not in values:
                raise DiffPolyError(f"No value supplied for {gen.name}")
            term = term * values[gen] ** exp
        total = total + term
    return total


# --- Text serialization (golden-file format) ---

def _format_coeff(coeff):
    if coeff.is_Rational:
        return str(coeff)
    return f"({sp.sstr(coeff)})"


def serialize(p):
    """
    Canonical text form, e.g. '1 * u_s4 + 2 * u_s * u_s3 + -3/2 * E^2'.
    Terms are joined by ' + ' and each term starts with its coefficient.
    """
    if p.is_zero():
        return "0"
    parts = []
    for powers, coeff in p.items():
        factors = [_format_coeff(coeff)]
        for gen, exp in powers:
            factors.append(gen.name if exp == 1 else f"{gen.name}^{exp}")
        parts.append(" * ".join(factors))
    return " + ".join(parts)


def _split_top_level(text, sep):
    parts = []
    depth = 0
    start = 0
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif depth == 0 and text.startswith(sep, i):
            parts.append(text[start:i])
            i += len(sep)
            start = i
            continue
        i += 1
    if depth != 0:
        raise DiffPolyError(f"Unbalanced parentheses in '{text}'")
    parts.append(text[start:])
    return parts


def _parse_coeff(text, symbols):
    text = text.strip()
    try:
        if text.startswith("(") and text.endswith(")"):
            return sp.sympify(text[1:-1], locals=symbols)
        return sp.Rational(text)
    except (TypeError, ValueError, sp.SympifyError):
        raise DiffPolyError(f"Malformed coefficient '{text}'")


def parse(text, symbols=None):
    """
    Parses the canonical text form back into a DiffPoly.
    `symbols` optionally maps names to sympy Symbols for symbolic coefficients.
    """
    text = text.strip()
    if not text:
        raise DiffPolyError("Empty polynomial text")
    if text == "0":
        return ZERO
    symbols = symbols or {}
    terms = {}
    for raw_term in _split_top_level(text, " + "):
        factors = _split_top_level(raw_term.strip(), " * ")
        coeff = sp.Integer(1)
        exps = {}
        for position, factor in enumerate(factors):
            factor = factor.strip()
            match = POWER_REGEX.match(factor)
            if match and GENERATOR_REGEX.match(match.group("name")):
                gen = generator_from_name(match.group("name"))
                exps[gen] = exps.get(gen, 0) + int(match.group("exp") or 1)
            elif position == 0:
                coeff = _parse_coeff(factor, symbols)
            else:
                raise DiffPolyError(f"Malformed factor '{factor}' in '{raw_term}'")
        key = _make_powers(exps)
        terms[key] = terms.get(key, 0) + coeff
    return DiffPoly(terms)
