# Exact sparse multivariate polynomials over the rationals.
#
# A Polynomial is an immutable map monomial -> Fraction over a VarTable.
# Monomials are plain tuples of exponents indexed by the VarTable order,
# compared in graded reverse-lexicographic order (grevlex).

from collections import namedtuple
from fractions import Fraction
from functools import reduce
from math import prod, sqrt
from operator import add
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from pyparsing import (Forward, ParseException, ParserElement, Regex, Suppress,
                       Word, ZeroOrMore, alphanums, alphas, one_of)

from hilbert.Helpers import exponent_vectors, to_fraction
from hilbert.utils import (HilbertError, PolynomialSyntaxError,
                           UnknownVariableError, VariableTableMismatch)

ParserElement.enable_packrat()

Monomial = Tuple[int, ...]
Scalar = Fraction


class VarTable:
    """Ordered, immutable list of variable names."""

    __slots__ = ('_names', '_index')

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        for name in names:
            if not isinstance(name, str) or not name:
                raise HilbertError(f"invalid variable name {name!r}")
        if len(set(names)) != len(names):
            raise HilbertError(f"duplicate variable names in {', '.join(names)}")
        self._names = names
        self._index = {name: i for i, name in enumerate(names)}

    @property
    def names(self):
        return self._names

    def index(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise UnknownVariableError(name) from None

    def capsVector(self, caps, default):
        # caps: None, a mapping name -> cap, or a sequence aligned with the table
        if caps is None:
            return None
        if isinstance(caps, dict):
            for name in caps:
                self.index(name)
            return tuple(int(caps.get(name, default)) for name in self._names)
        caps = tuple(default if c is None else int(c) for c in caps)
        if len(caps) != len(self._names):
            raise VariableTableMismatch(f"expected {len(self._names)} per-variable caps, got {len(caps)}")
        return caps

    def __contains__(self, name):
        return name in self._index

    def __len__(self):
        return len(self._names)

    def __iter__(self):
        return iter(self._names)

    def __eq__(self, other):
        return isinstance(other, VarTable) and self._names == other._names

    def __hash__(self):
        return hash(self._names)

    def __repr__(self):
        return f"VarTable({', '.join(self._names)})"


def grevlexKey(mono):
    # ascending sort key: total degree first, then the monomial with the
    # smaller exponent in the last variable is the bigger one
    return (sum(mono), tuple(-e for e in reversed(mono)))

def monomialString(mono, names):
    factors = []
    for name, e in zip(names, mono):
        if e == 1:
            factors.append(name)
        elif e > 1:
            factors.append(f"{name}^{e}")
    return '*'.join(factors) if factors else '1'

def _checkVars(a, b):
    if a._vars != b._vars:
        raise VariableTableMismatch(f"{a._vars!r} vs {b._vars!r}")


class Polynomial:

    __slots__ = ('_vars', '_terms', '_order', '_string', '_hash')

    def __init__(self, vars: VarTable, terms: Optional[Dict[Sequence[int], object]] = None):
        self._vars = vars
        clean = {}
        n = len(vars)
        for mono, coeff in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != n:
                raise VariableTableMismatch(f"monomial {mono} does not match {vars!r}")
            if any(e < 0 for e in mono):
                raise HilbertError(f"negative exponent in monomial {mono}")
            c = to_fraction(coeff)
            if c:
                clean[mono] = clean.get(mono, 0) + c
        self._terms = {m: c for m, c in clean.items() if c}
        # lazy
        self._order = None
        self._string = None
        self._hash = None

    @classmethod
    def _raw(cls, vars, terms):
        # terms already canonical: tuple keys, nonzero Fractions
        p = cls.__new__(cls)
        p._vars = vars
        p._terms = terms
        p._order = None
        p._string = None
        p._hash = None
        return p

    @classmethod
    def zero(cls, vars):
        return cls._raw(vars, {})

    @classmethod
    def constant(cls, vars, c):
        c = to_fraction(c)
        return cls._raw(vars, {(0,) * len(vars): c} if c else {})

    @classmethod
    def variable(cls, vars, name):
        mono = [0] * len(vars)
        mono[vars.index(name)] = 1
        return cls._raw(vars, {tuple(mono): Fraction(1)})

    @classmethod
    def monomial(cls, vars, mono, c=1):
        c = to_fraction(c)
        return cls._raw(vars, {tuple(mono): c} if c else {})

    @classmethod
    def fromString(cls, text, vars):
        return parse_polynomial(text, vars)

    @property
    def vars(self):
        return self._vars

    @property
    def terms(self):
        return dict(self._terms)

    def isZero(self):
        return not self._terms

    def isConstant(self):
        return all(sum(m) == 0 for m in self._terms)

    @property
    def degree(self):
        if not self._terms:
            return -1
        return max(sum(m) for m in self._terms)

    def degreeIn(self, name):
        i = self._vars.index(name)
        return max((m[i] for m in self._terms), default=-1)

    def coefficient(self, mono):
        return self._terms.get(tuple(mono), Fraction(0))

    def monomials(self) -> List[Monomial]:
        # descending grevlex
        if self._order is None:
            self._order = sorted(self._terms, key=grevlexKey, reverse=True)
        return list(self._order)

    def items(self):
        return [(m, self._terms[m]) for m in self.monomials()]

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self.monomials())

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            _checkVars(self, other)
            return other
        if isinstance(other, (int, Fraction, float, str)):
            return Polynomial.constant(self._vars, other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        terms = dict(self._terms)
        for m, c in other._terms.items():
            s = terms.get(m, 0) + c
            if s:
                terms[m] = s
            else:
                terms.pop(m, None)
        return Polynomial._raw(self._vars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self._vars, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def scale(self, c):
        c = to_fraction(c)
        if not c:
            return Polynomial.zero(self._vars)
        return Polynomial._raw(self._vars, {m: v * c for m, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, float, str)):
            return self.scale(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        _checkVars(self, other)
        acc = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                key = tuple(map(add, m1, m2))
                acc[key] = acc.get(key, 0) + c1 * c2
        return Polynomial._raw(self._vars, {m: c for m, c in acc.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise HilbertError(f"negative or non-integer exponent {k!r}")
        result = Polynomial.constant(self._vars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self._vars == other._vars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == Polynomial.constant(self._vars, other)._terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._vars, frozenset(self._terms.items())))
        return self._hash

    def evaluate(self, point):
        if len(point) != len(self._vars):
            raise VariableTableMismatch(f"point of length {len(point)} for {len(self._vars)} variables")
        total = 0
        for mono, c in self._terms.items():
            total += c * prod(x ** e for x, e in zip(point, mono) if e)
        return total

    def differentiate(self, name):
        i = self._vars.index(name)
        terms = {}
        for mono, c in self._terms.items():
            e = mono[i]
            if e:
                m = list(mono)
                m[i] = e - 1
                terms[tuple(m)] = c * e
        return Polynomial._raw(self._vars, terms)

    def substitute(self, name, replacement):
        i = self._vars.index(name)
        _checkVars(self, replacement)
        powers = {0: Polynomial.constant(self._vars, 1)}
        result = Polynomial.zero(self._vars)
        for mono, c in self._terms.items():
            e = mono[i]
            if e not in powers:
                powers[e] = replacement ** e
            rest = list(mono)
            rest[i] = 0
            result = result + Polynomial._raw(self._vars, {tuple(rest): c}) * powers[e]
        return result

    def coeffNorm(self, order=1):
        if order == 1:
            return float(sum(abs(c) for c in self._terms.values()))
        if order == 2:
            return sqrt(sum(c * c for c in self._terms.values()))
        raise HilbertError(f"unsupported coefficient norm {order}")

    def usesOnly(self, names):
        allowed = {self._vars.index(n) for n in names}
        return all(i in allowed for m in self._terms for i, e in enumerate(m) if e)

    def toString(self):
        if self._string is None:
            self._string = print_polynomial(self)
        return self._string

    def __str__(self):
        return self.toString()

    def __repr__(self):
        return f"Polynomial({self.toString()!r})"


### grammar

_Node = namedtuple('_Node', ['kind', 'value', 'loc'])

def _grammar():
    expr = Forward()
    factor = Forward()

    number = Regex(r"\d+/\d+|(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?")
    number.set_parse_action(lambda s, loc, t: _Node('num', t[0], loc))

    identifier = Word(alphas + '_', alphanums + '_')
    identifier.set_parse_action(lambda s, loc, t: _Node('var', t[0], loc))

    exponent = Regex(r"[+-]?\d+")
    exponent.set_parse_action(lambda s, loc, t: _Node('exp', t[0], loc))

    atom = number | identifier | (Suppress('(') + expr + Suppress(')'))

    power = atom + ZeroOrMore(Suppress('^') + exponent)
    power.set_parse_action(lambda s, loc, t: t[0] if len(t) == 1 else _Node('pow', list(t), loc))

    signed = one_of('+ -') + factor
    signed.set_parse_action(lambda s, loc, t: _Node('neg', t[1], loc) if t[0] == '-' else t[1])
    factor <<= signed | power

    term = factor + ZeroOrMore(Suppress('*') + factor)
    term.set_parse_action(lambda s, loc, t: t[0] if len(t) == 1 else _Node('mul', list(t), loc))

    expr <<= term + ZeroOrMore(one_of('+ -') + term)
    expr.set_parse_action(lambda s, loc, t: t[0] if len(t) == 1 else _Node('sum', list(t), loc))
    return expr

_GRAMMAR = _grammar()

def _build(node, vars):
    kind = node.kind
    if kind == 'num':
        try:
            return Polynomial.constant(vars, Fraction(node.value))
        except ZeroDivisionError:
            raise PolynomialSyntaxError("division by zero in literal", node.loc) from None
    if kind == 'var':
        if node.value not in vars:
            raise UnknownVariableError(node.value, node.loc)
        return Polynomial.variable(vars, node.value)
    if kind == 'neg':
        return -_build(node.value, vars)
    if kind == 'pow':
        base = _build(node.value[0], vars)
        # x^a^b is read left to right as (x^a)^b
        for exp in node.value[1:]:
            k = int(exp.value)
            if k < 0:
                raise PolynomialSyntaxError("negative exponent", exp.loc)
            base = base ** k
        return base
    if kind == 'mul':
        return reduce(lambda a, b: a * b, (_build(n, vars) for n in node.value))
    if kind == 'sum':
        items = node.value
        result = _build(items[0], vars)
        for sign, n in zip(items[1::2], items[2::2]):
            result = result + _build(n, vars) if sign == '+' else result - _build(n, vars)
        return result
    raise PolynomialSyntaxError(f"unexpected token {kind}", node.loc)


### operations

def parse_polynomial(text: str, vars: VarTable) -> Polynomial:
    if not text or not text.strip():
        raise PolynomialSyntaxError("empty polynomial", 0, text)
    try:
        tree = _GRAMMAR.parse_string(text, parse_all=True)[0]
    except ParseException as e:
        raise PolynomialSyntaxError(f"syntax error: {e.msg}", e.loc, text) from None
    return _build(tree, vars)

def print_polynomial(p: Polynomial) -> str:
    if p.isZero():
        return '0'
    names = p.vars.names
    out = []
    for i, (mono, c) in enumerate(p.items()):
        sign = '-' if c < 0 else '+'
        a = abs(c)
        if sum(mono) == 0:
            body = str(a)
        elif a == 1:
            body = monomialString(mono, names)
        else:
            body = f"{a}*{monomialString(mono, names)}"
        if i == 0:
            out.append(body if sign == '+' else '-' + body)
        else:
            out.append(f" {sign} {body}")
    return ''.join(out)

def mul(a: Polynomial, b: Polynomial) -> Polynomial:
    _checkVars(a, b)
    return a * b

def evaluate(p: Polynomial, point):
    return p.evaluate(point)

def differentiate(p: Polynomial, var: str) -> Polynomial:
    return p.differentiate(var)

def substitute(p: Polynomial, var: str, replacement: Polynomial) -> Polynomial:
    return p.substitute(var, replacement)

def coeff_norm(p: Polynomial, order: int = 1) -> float:
    return p.coeffNorm(order)

def monomial_basis(vars: VarTable, total_degree_cap: int, per_var_caps=None) -> List[Monomial]:
    """All monomials of total degree <= total_degree_cap that respect the
    per-variable caps, in ascending grevlex order."""
    if total_degree_cap < 0:
        return []
    caps = vars.capsVector(per_var_caps, total_degree_cap)
    if caps is not None and any(c < 0 for c in caps):
        raise HilbertError("per-variable caps must be nonnegative")
    basis = []
    for d in range(total_degree_cap + 1):
        block = list(exponent_vectors(len(vars), d, caps))
        block.sort(key=grevlexKey)
        basis.extend(block)
    return basis
