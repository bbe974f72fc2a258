# Positivstellensatz certificates: q = alpha0 + sum alpha_i g_i + sum beta_j h_j.
#
# Multipliers are keyed by axiom label. SOS multipliers are stored as
# weighted squares so that checking a certificate is pure rational algebra.

import configparser
import logging
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, Optional

from hilbert.Encoding import ProblemBuilder
from hilbert.Helpers import to_fraction
from hilbert.Polynomial import Polynomial, monomial_basis, parse_polynomial
from hilbert.Simplex import solve_exact
from hilbert.Solution import OPTIMAL, UNBOUNDED
from hilbert.Sos import SosWitness
from hilbert.utils import (CertificateFormatError, HilbertError, PolynomialSyntaxError,
                           UnknownVariableError, VariableTableMismatch)

log = logging.getLogger(__name__)

EXACT = 'Exact'
APPROXIMATE = 'Approximate'
INVALID = 'Invalid'

_EXIT_CODES = {EXACT: 0, APPROXIMATE: 2, INVALID: 1}


@dataclass(frozen=True)
class Certificate:
    q: Polynomial
    beta: Dict[str, Polynomial] = field(default_factory=dict)
    alpha0: SosWitness = SosWitness()
    alpha: Dict[str, SosWitness] = field(default_factory=dict)
    selection: Dict[str, bool] = field(default_factory=dict)
    kind: str = 'eq'

    @property
    def vars(self):
        return self.q.vars

    def multiplier(self, label):
        return self.beta.get(label, Polynomial.zero(self.vars))

    def witness(self, label):
        return self.alpha.get(label, SosWitness())

    def isSelected(self, label):
        return self.selection.get(label, True)

    def usedLabels(self):
        used = [l for l, b in self.beta.items() if not b.isZero()]
        return used + [l for l, a in self.alpha.items() if not a.isEmpty()]

    def scale(self, c):
        c = to_fraction(c)
        if c == 0:
            raise HilbertError("cannot scale a certificate by 0")
        if c < 0 and (self.kind == 'ineq' or any(not a.isEmpty() for a in self.alpha.values())
                      or not self.alpha0.isEmpty()):
            raise HilbertError("inequality certificates only scale by positive factors")
        return replace(self,
                       q=self.q.scale(c),
                       beta={l: b.scale(c) for l, b in self.beta.items()},
                       alpha0=self.alpha0.scale(c) if c > 0 else self.alpha0,
                       alpha={l: a.scale(c) for l, a in self.alpha.items()} if c > 0 else dict(self.alpha))

    @classmethod
    def trivial(cls, vars, kind='eq'):
        return cls(Polynomial.zero(vars), kind=kind)


@dataclass(frozen=True)
class Residual:
    r: Polynomial
    l1: float
    l2: float

    def isZero(self):
        return self.r.isZero()


@dataclass(frozen=True)
class Verdict:
    status: str
    norm: Optional[float] = None
    reason: str = ''
    residual: Optional[Residual] = None

    @property
    def exact(self):
        return self.status == EXACT

    @property
    def exit_code(self):
        return _EXIT_CODES[self.status]

    def __str__(self):
        if self.status == EXACT:
            return EXACT
        if self.status == APPROXIMATE:
            return f"{APPROXIMATE} (||r||_2 = {self.norm:.6g})"
        return f"{INVALID}: {self.reason}"


def residual(cert, theory):
    vars = theory.vars
    if cert.vars != vars:
        raise VariableTableMismatch("certificate and theory use different variables")
    r = cert.q - cert.alpha0.expand(vars)
    for axiom in theory.inequalities:
        w = cert.witness(axiom.label)
        if not w.isEmpty():
            r = r - w.expand(vars) * axiom.polynomial
    for axiom in theory.equalities:
        b = cert.multiplier(axiom.label)
        if not b.isZero():
            r = r - b * axiom.polynomial
    return Residual(r, r.coeffNorm(1), r.coeffNorm(2))

def _structure(cert, theory):
    # reason the certificate is malformed, or None
    if cert.vars != theory.vars:
        return "certificate and theory use different variables"
    if cert.kind not in ('eq', 'ineq'):
        return f"unknown law kind `{cert.kind}`"
    eq = {a.label for a in theory.equalities}
    ineq = {a.label for a in theory.inequalities}
    for label, b in cert.beta.items():
        if label not in eq:
            return f"multiplier for `{label}`, which is not an equality axiom"
        if b.vars != theory.vars:
            return f"multiplier for `{label}` uses different variables"
    for label in cert.alpha:
        if label not in ineq:
            return f"SOS multiplier for `{label}`, which is not an inequality axiom"
    for label in cert.selection:
        if label not in eq | ineq:
            return f"selection flag for unknown axiom `{label}`"
    witnesses = [('alpha0', cert.alpha0)] + list(cert.alpha.items())
    for label, w in witnesses:
        if not w.weightsNonnegative():
            return f"negative weight in the SOS multiplier `{label}`"
        if any(root.vars != theory.vars for _, root in w.squares):
            return f"SOS multiplier `{label}` uses different variables"
    if cert.kind == 'eq' and any(not w.isEmpty() for _, w in witnesses):
        return "an equality law cannot use SOS multipliers"
    for label, selected in cert.selection.items():
        if not selected and (not cert.multiplier(label).isZero() or not cert.witness(label).isEmpty()):
            return f"deselected axiom `{label}` has a nonzero multiplier"
    return None

def verify(cert, theory):
    reason = _structure(cert, theory)
    if reason is not None:
        return Verdict(INVALID, reason=reason)
    res = residual(cert, theory)
    if res.isZero():
        return Verdict(EXACT, 0.0, residual=res)
    return Verdict(APPROXIMATE, res.l2, reason='nonzero residual', residual=res)


def _shortLabel(label):
    return f"[{label}]"

def render_proof(cert, theory):
    vars = theory.vars
    relation = '=' if cert.kind == 'eq' else '>='
    lines = [f"Law: {cert.q} {relation} 0", ""]
    used = 0
    for axiom in theory.equalities:
        b = cert.multiplier(axiom.label)
        if b.isZero():
            continue
        used += 1
        lines.append(f"  {_shortLabel(axiom.label)} ({axiom.polynomial}) = 0   times   {b}")
    positive = cert.alpha0.expand(vars)
    for axiom in theory.inequalities:
        w = cert.witness(axiom.label)
        if w.isEmpty():
            continue
        used += 1
        lines.append(f"  {_shortLabel(axiom.label)} ({axiom.polynomial}) >= 0   times   {w}")
        positive = positive + w.expand(vars) * axiom.polynomial
    if not cert.alpha0.isEmpty():
        lines.append(f"  sum of squares: {cert.alpha0}")
    if used == 0 and cert.alpha0.isEmpty():
        lines.append("  (no axioms needed)")
    lines.append("")
    ideal = cert.q - positive
    if cert.kind == 'ineq' or not positive.isZero():
        lines.append(f"Nonnegative combination: {positive} >= 0")
        if not ideal.isZero():
            lines.append(f"Shift by the equality axioms: {ideal}")
    deselected = [l for l, s in cert.selection.items() if not s]
    if deselected:
        lines.append(f"Deselected axioms: {', '.join(deselected)}")
    verdict = verify(cert, theory)
    lines.append(f"Identity check: {verdict}")
    lines.append("")
    lines.append("--- certificate ---")
    lines.append(format_certificate(cert))
    return '\n'.join(lines)


## certificate files

def _reader():
    config = configparser.ConfigParser(interpolation=None, delimiters=('=',))
    config.optionxform = str
    return config

def _toConfig(cert):
    config = _reader()
    config['law'] = {'q': cert.q.toString(), 'kind': cert.kind}
    for label, b in cert.beta.items():
        config[f"beta.{label}"] = {'multiplier': b.toString()}
    for name, w in [('alpha0', cert.alpha0)] + [(f"alpha.{l}", a) for l, a in cert.alpha.items()]:
        if name != 'alpha0' or not w.isEmpty():
            section = {}
            for i, (c, root) in enumerate(w.squares):
                section[f"weight{i}"] = str(c)
                section[f"root{i}"] = root.toString()
            config[name] = section
    if cert.selection:
        config['selection'] = {l: 'true' if s else 'false' for l, s in cert.selection.items()}
    return config

def format_certificate(cert):
    out = []
    for name, section in _toConfig(cert).items():
        if name == 'DEFAULT':
            continue
        out.append(f"[{name}]")
        out.extend(f"{k} = {v}" for k, v in section.items())
        out.append("")
    return '\n'.join(out).rstrip() + '\n'

def save_certificate(cert, path):
    with open(path, 'w') as handle:
        handle.write(format_certificate(cert))

def _witness(section, where, vars):
    squares = []
    indices = sorted(int(m.group(1)) for k in section if (m := re.fullmatch(r'root(\d+)', k)))
    for i in indices:
        weight = section.get(f"weight{i}", '1')
        try:
            c = Fraction(weight.strip())
        except (ValueError, ZeroDivisionError):
            raise CertificateFormatError(f"[{where}] weight{i}: not a rational `{weight}`") from None
        squares.append((c, parse_polynomial(section[f"root{i}"], vars)))
    return SosWitness(tuple(squares), True)

def load_certificate(path, vars):
    config = _reader()
    try:
        with open(path) as handle:
            config.read_file(handle)
    except configparser.Error as e:
        raise CertificateFormatError(f"{path}: {e}") from None
    if not config.has_section('law') or 'q' not in config['law']:
        raise CertificateFormatError(f"{path}: missing [law] q")
    try:
        q = parse_polynomial(config['law']['q'], vars)
        kind = config['law'].get('kind', 'eq').strip()
        beta, alpha, selection = {}, {}, {}
        alpha0 = SosWitness()
        for name in config.sections():
            section = config[name]
            if name.startswith('beta.'):
                beta[name[5:]] = parse_polynomial(section.get('multiplier', '0'), vars)
            elif name == 'alpha0':
                alpha0 = _witness(section, name, vars)
            elif name.startswith('alpha.'):
                alpha[name[6:]] = _witness(section, name, vars)
            elif name == 'selection':
                for label, text in section.items():
                    value = text.strip().lower()
                    if value not in ('true', 'false'):
                        raise CertificateFormatError(f"[selection] {label}: expected true or false")
                    selection[label] = value == 'true'
            elif name != 'law':
                raise CertificateFormatError(f"{path}: unknown section [{name}]")
    except (PolynomialSyntaxError, UnknownVariableError) as e:
        raise CertificateFormatError(f"{path}: {e}") from None
    return Certificate(q, beta, alpha0, alpha, selection, kind)


## law equivalence

def equivalent_mod(q1, q2, modulus_axioms, caps):
    """True when q1 - k*q2 lies in the ideal of modulus_axioms truncated at
    total degree caps, for some rational k != 0."""
    vars = q1.vars
    degree = int(caps)
    builder = ProblemBuilder()
    k = builder.column('k', 0)
    expansion = {}
    for mono, c in q1.items():
        expansion.setdefault(mono, [Fraction(0), {}])[0] += c
    for mono, c in q2.items():
        row = expansion.setdefault(mono, [Fraction(0), {}])
        row[1][k] = row[1].get(k, 0) - c
    for i, h in enumerate(modulus_axioms):
        if h.degree > degree:
            continue
        template = builder.template(f"beta{i}", monomial_basis(vars, degree - h.degree))
        for mono, col in zip(template.basis, template.columns):
            for m, c in h.items():
                key = tuple(a + b for a, b in zip(mono, m))
                row = expansion.setdefault(key, [Fraction(0), {}])
                row[1][col] = row[1].get(col, 0) - c
    for mono in sorted(expansion):
        const, coeffs = expansion[mono]
        # const + sum coeffs * x = 0
        coeffs = {j: c for j, c in coeffs.items() if c}
        if not coeffs:
            if const:
                return False
            continue
        builder.addRow(coeffs, '=', -const, 'match')
    spec = builder.build()
    for sign in (1, -1):
        solution = solve_exact(spec.withObjective({k: -sign}))
        if solution.status == UNBOUNDED:
            return True
        if solution.status != OPTIMAL:
            return False
        if solution.values[k] * sign > 0:
            return True
    return False
