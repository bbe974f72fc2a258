# Background theories, variable roles, datasets and hyperparameters,
# together with their file formats (INI-style theory files, CSV data).

import configparser
import logging
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from hilbert.Helpers import to_fraction
from hilbert.Polynomial import Polynomial, VarTable, parse_polynomial
from hilbert.utils import (DatasetError, HilbertError, PolynomialSyntaxError,
                           TheoryError, UnknownVariableError)

log = logging.getLogger(__name__)

MAX_RETRIES = 100


def _reader():
    # case-sensitive keys (axiom labels, variable names), no % interpolation
    config = configparser.ConfigParser(interpolation=None, delimiters=('=',))
    config.optionxform = str
    return config

def _splitList(text, sep=','):
    return [item.strip() for item in (text or '').split(sep) if item.strip()]


@dataclass(frozen=True)
class Axiom:
    label: str
    polynomial: Polynomial

    def __str__(self):
        return f"[{self.label}] {self.polynomial}"


class BackgroundTheory:
    """Equality axioms h_j = 0 and inequality axioms g_i >= 0 over one VarTable."""

    def __init__(self, vars: VarTable, equalities=(), inequalities=()):
        self.vars = vars
        self.equalities = tuple(equalities)
        self.inequalities = tuple(inequalities)
        seen = set()
        for axiom in self.equalities + self.inequalities:
            if axiom.label in seen:
                raise TheoryError("duplicate axiom label", axiom.label)
            seen.add(axiom.label)
            if axiom.polynomial.vars != vars:
                raise TheoryError("axiom is not over the theory variables", axiom.label)
            if axiom.polynomial.isZero():
                raise TheoryError("axiom is the zero polynomial", axiom.label)

    @classmethod
    def fromStrings(cls, vars, equalities=None, inequalities=None):
        def parse(items):
            out = []
            for label, text in (items or {}).items():
                try:
                    out.append(Axiom(label, parse_polynomial(text, vars)))
                except (PolynomialSyntaxError, UnknownVariableError) as e:
                    raise TheoryError(str(e), label) from None
            return out
        return cls(vars, parse(equalities), parse(inequalities))

    def labels(self):
        return [a.label for a in self.equalities + self.inequalities]

    def axiom(self, label):
        for a in self.equalities + self.inequalities:
            if a.label == label:
                return a
        raise TheoryError("no such axiom", label)

    def isEmpty(self):
        return not self.equalities and not self.inequalities

    def without(self, labels):
        labels = set(labels)
        for label in labels:
            self.axiom(label)
        return BackgroundTheory(self.vars,
                                [a for a in self.equalities if a.label not in labels],
                                [a for a in self.inequalities if a.label not in labels])

    def restrict(self, labels):
        labels = set(labels)
        return self.without(l for l in self.labels() if l not in labels)

    def __eq__(self, other):
        return (isinstance(other, BackgroundTheory) and self.vars == other.vars
                and self.equalities == other.equalities and self.inequalities == other.inequalities)

    def __repr__(self):
        return f"BackgroundTheory({len(self.vars)} vars, l={len(self.equalities)}, k={len(self.inequalities)})"


@dataclass(frozen=True)
class VariableRoles:
    dependent: Optional[str]
    measurable: Tuple[str, ...]
    unobservable: Tuple[str, ...]

    @classmethod
    def build(cls, vars, dependent=None, unobservable=(), measurable=None):
        for name in list(unobservable) + list(measurable or []) + ([dependent] if dependent else []):
            if name not in vars:
                raise TheoryError(f"role refers to unknown variable `{name}`")
        unobservable = set(unobservable)
        if measurable is None:
            measurable = [n for n in vars if n not in unobservable]
        else:
            measurable = set(measurable)
            if unobservable and measurable & unobservable:
                raise TheoryError("measurable and unobservable variables overlap")
            if not unobservable:
                unobservable = {n for n in vars if n not in measurable}
            if measurable | unobservable != set(vars.names):
                raise TheoryError("every variable must be measurable or unobservable")
        roles = cls(dependent,
                    tuple(n for n in vars if n in set(measurable)),
                    tuple(n for n in vars if n in unobservable))
        if dependent is not None and dependent not in roles.measurable:
            raise TheoryError(f"dependent variable `{dependent}` must be measurable")
        return roles

    def isMeasurable(self, name):
        return name in self.measurable


# config key -> dataclass field, for keys that are not valid identifiers
_KEY_ALIASES = {'lambda': 'lambda_'}

@dataclass(frozen=True)
class Hyperparameters:
    q_total_degree: Optional[int] = None
    q_per_var_caps: Optional[Tuple[Tuple[str, int], ...]] = None
    multiplier_total_degree: Optional[int] = None
    multiplier_per_var_caps: Optional[Tuple[Tuple[str, int], ...]] = None
    certificate_degree: Optional[int] = None
    lambda_: float = 1.0
    lambda1: float = 0.9
    lambda2: float = 0.01
    tau: Optional[int] = None
    epsilon: float = 1e-7
    data_weight: float = 100.0
    complexity_weight: float = 1.0
    big_M: float = 1000.0
    normalization: str = 'dependent'
    normalization_monomials: Tuple[str, ...] = ()
    normalization_value: Fraction = Fraction(1)
    rho: Fraction = Fraction(1, 10)
    objective: str = 'feasibility'
    distance: str = 'hard-zero'
    data_cap: bool = False
    law: str = 'eq'
    sos: str = 'sdp'
    solver: str = 'auto'
    exclusive: Tuple[Tuple[str, ...], ...] = ()
    degree_start: int = 2
    degree_step: int = 2
    degree_max: int = 8
    tie_break: bool = True
    node_limit: int = 10**6
    max_denominator: int = 10**6
    rationalize_tol: float = 1e-6
    sdp_block_cap: int = 50
    sdp_max_iterations: int = 200

    CHOICES = {
        'normalization': ('dependent', 'selected', 'disjunction'),
        'objective': ('feasibility', 'penalized', 'weighted', 'convex'),
        'distance': ('hard-zero', 'l1', 'l2', 'subset'),
        'law': ('eq', 'ineq'),
        'sos': ('sdp', 'dsos'),
        'solver': ('auto', 'exact', 'float'),
    }

    def validate(self):
        for name in ('q_total_degree', 'multiplier_total_degree', 'certificate_degree', 'tau'):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise TheoryError(f"{name} must be >= 0")
        for name in ('q_per_var_caps', 'multiplier_per_var_caps'):
            for var, cap in getattr(self, name) or ():
                if cap < 0:
                    raise TheoryError(f"{name}: cap of `{var}` must be >= 0")
        if self.lambda_ < 0:
            raise TheoryError("lambda must be >= 0")
        if self.lambda1 < 0 or self.lambda2 < 0 or self.lambda1 + self.lambda2 > 1:
            raise TheoryError("need 0 <= lambda1, lambda2 and lambda1 + lambda2 <= 1")
        if self.epsilon < 0:
            raise TheoryError("epsilon must be >= 0")
        if self.big_M <= 0:
            raise TheoryError("big_M must be > 0")
        if self.degree_step <= 0 or self.degree_start < 0 or self.degree_max < self.degree_start:
            raise TheoryError("degree range must satisfy 0 <= start <= max and step > 0")
        for name, options in self.CHOICES.items():
            if getattr(self, name) not in options:
                raise TheoryError(f"{name} must be one of {', '.join(options)}")
        return self

    def qCaps(self):
        return None if self.q_per_var_caps is None else dict(self.q_per_var_caps)

    def multiplierCaps(self):
        return None if self.multiplier_per_var_caps is None else dict(self.multiplier_per_var_caps)

    def override(self, **changes):
        changes = {_KEY_ALIASES.get(k, k): v for k, v in changes.items() if v is not None}
        return replace(self, **changes).validate()


## hyperparameter (de)serialisation

def _optInt(text):
    text = text.strip()
    return None if text.lower() in ('', 'none') else int(text)

def _caps(text):
    if text.strip().lower() in ('', 'none'):
        return None
    out = []
    for item in _splitList(text):
        name, _, cap = item.partition(':')
        if not cap:
            raise ValueError(f"expected name:cap, got `{item}`")
        out.append((name.strip(), int(cap)))
    return tuple(out)

def _bool(text):
    value = text.strip().lower()
    if value in ('1', 'yes', 'true', 'on'):
        return True
    if value in ('0', 'no', 'false', 'off'):
        return False
    raise ValueError(f"not a boolean: `{text}`")

def _groups(text):
    return tuple(tuple(_splitList(group, '|')) for group in _splitList(text, ';'))

def _formatCaps(caps):
    return 'none' if caps is None else ', '.join(f"{n}:{c}" for n, c in caps)

_PARSERS = {
    'q_total_degree': _optInt, 'multiplier_total_degree': _optInt,
    'certificate_degree': _optInt, 'tau': _optInt,
    'q_per_var_caps': _caps, 'multiplier_per_var_caps': _caps,
    'lambda_': float, 'lambda1': float, 'lambda2': float, 'epsilon': float,
    'data_weight': float, 'complexity_weight': float, 'big_M': float,
    'rationalize_tol': float,
    'normalization': str.strip, 'objective': str.strip, 'distance': str.strip,
    'law': str.strip, 'sos': str.strip, 'solver': str.strip,
    'normalization_monomials': lambda t: tuple(_splitList(t)),
    'normalization_value': to_fraction, 'rho': to_fraction,
    'data_cap': _bool, 'tie_break': _bool,
    'exclusive': _groups,
    'degree_start': int, 'degree_step': int, 'degree_max': int,
    'node_limit': int, 'max_denominator': int,
    'sdp_block_cap': int, 'sdp_max_iterations': int,
}

_FORMATTERS = {
    'q_per_var_caps': _formatCaps, 'multiplier_per_var_caps': _formatCaps,
    'normalization_monomials': ', '.join,
    'exclusive': lambda groups: '; '.join('|'.join(g) for g in groups),
    'data_cap': lambda b: 'true' if b else 'false',
    'tie_break': lambda b: 'true' if b else 'false',
    'lambda_': repr, 'lambda1': repr, 'lambda2': repr, 'epsilon': repr,
    'data_weight': repr, 'complexity_weight': repr, 'big_M': repr, 'rationalize_tol': repr,
}

def parse_hyperparameters(section, vars=None):
    values = {}
    for key, text in section.items():
        name = _KEY_ALIASES.get(key, key)
        if name not in _PARSERS:
            raise TheoryError(f"unknown hyperparameter `{key}`")
        try:
            values[name] = _PARSERS[name](text)
        except (ValueError, ZeroDivisionError) as e:
            raise TheoryError(f"hyperparameter `{key}`: {e}") from None
    hyper = Hyperparameters(**values).validate()
    if vars is not None:
        for caps in (hyper.q_per_var_caps, hyper.multiplier_per_var_caps):
            for name, _ in caps or ():
                if name not in vars:
                    raise TheoryError(f"per-variable cap for unknown variable `{name}`")
    return hyper

def format_hyperparameters(hyper):
    default = Hyperparameters()
    out = {}
    for f in fields(Hyperparameters):
        value = getattr(hyper, f.name)
        if value == getattr(default, f.name):
            continue
        key = 'lambda' if f.name == 'lambda_' else f.name
        out[key] = _FORMATTERS.get(f.name, str)(value)
    return out


## theory files

def load_theory(path):
    """Read a theory file. Returns (BackgroundTheory, VariableRoles, Hyperparameters)."""
    config = _reader()
    try:
        with open(path) as handle:
            config.read_file(handle)
    except configparser.Error as e:
        raise TheoryError(f"{path}: {e}") from None
    if not config.has_section('variables'):
        raise TheoryError(f"{path}: missing [variables] section")
    section = config['variables']
    try:
        vars = VarTable(_splitList(section.get('names', '')))
    except HilbertError as e:
        raise TheoryError(str(e)) from None
    measurable = section.get('measurable')
    roles = VariableRoles.build(vars,
                                dependent=section.get('dependent', '').strip() or None,
                                unobservable=_splitList(section.get('unobservable', '')),
                                measurable=None if measurable is None else _splitList(measurable))
    theory = BackgroundTheory.fromStrings(
        vars,
        dict(config['axioms.eq']) if config.has_section('axioms.eq') else {},
        dict(config['axioms.ineq']) if config.has_section('axioms.ineq') else {})
    hyper = parse_hyperparameters(config['hyperparameters'], vars) \
        if config.has_section('hyperparameters') else Hyperparameters()
    log.debug(f"Loaded {path}: {theory!r}, dependent={roles.dependent}")
    return theory, roles, hyper

def save_theory(theory, roles, hyper, path):
    config = _reader()
    config['variables'] = {
        'names': ', '.join(theory.vars.names),
        'dependent': roles.dependent or '',
        'unobservable': ', '.join(roles.unobservable),
    }
    config['axioms.eq'] = {a.label: a.polynomial.toString() for a in theory.equalities}
    config['axioms.ineq'] = {a.label: a.polynomial.toString() for a in theory.inequalities}
    config['hyperparameters'] = format_hyperparameters(hyper)
    with open(path, 'w') as handle:
        config.write(handle)


@dataclass(frozen=True)
class SyntheticConfig:
    ground_truth: Polynomial
    ranges: Dict[str, Tuple[float, float]]
    derived: Tuple[Tuple[str, Polynomial], ...] = ()
    rows: int = 10
    noise: float = 0.0
    seed: int = 0

def load_synthetic(path, vars):
    config = _reader()
    with open(path) as handle:
        config.read_file(handle)
    if not config.has_section('synthetic'):
        raise TheoryError(f"{path}: missing [synthetic] section")
    section = config['synthetic']
    try:
        truth = parse_polynomial(section['ground_truth'], vars)
        derived = tuple((name.strip(), parse_polynomial(text, vars))
                        for name, text in (config['synthetic.derived'].items()
                                           if config.has_section('synthetic.derived') else []))
    except (KeyError, PolynomialSyntaxError, UnknownVariableError) as e:
        raise TheoryError(f"[synthetic] {e}") from None
    ranges = {}
    if config.has_section('synthetic.ranges'):
        for name, text in config['synthetic.ranges'].items():
            bounds = [float(v) for v in _splitList(text)]
            if name not in vars or len(bounds) != 2 or bounds[0] > bounds[1]:
                raise TheoryError(f"bad range `{name} = {text}`")
            ranges[name] = (bounds[0], bounds[1])
    return SyntheticConfig(truth, ranges, derived,
                           rows=int(section.get('rows', 10)),
                           noise=float(section.get('noise', 0.0)),
                           seed=int(section.get('seed', 0)))

def load_objective(path, vars):
    config = _reader()
    with open(path) as handle:
        config.read_file(handle)
    if not config.has_section('objective'):
        raise TheoryError(f"{path}: missing [objective] section")
    section = config['objective']
    sense = section.get('sense', 'min').strip()
    if sense not in ('min', 'max'):
        raise TheoryError("objective sense must be min or max")
    try:
        return parse_polynomial(section['expression'], vars), sense
    except (KeyError, PolynomialSyntaxError, UnknownVariableError) as e:
        raise TheoryError(f"[objective] {e}") from None


## datasets

@dataclass(frozen=True)
class Dataset:
    vars: VarTable
    values: np.ndarray = field(compare=False)     # m x n floats
    exact: Tuple[Tuple[Fraction, ...], ...] = ()  # same rows, exact decimals

    @classmethod
    def fromRows(cls, vars, rows, roles=None):
        exact = tuple(tuple(to_fraction(v) for v in row) for row in rows)
        for row in exact:
            if len(row) != len(vars):
                raise DatasetError(f"row of length {len(row)} for {len(vars)} variables")
            if roles is not None:
                for name in roles.unobservable:
                    if row[vars.index(name)] != 0:
                        raise DatasetError(f"unobservable variable `{name}` has a nonzero entry")
        values = np.array([[float(v) for v in row] for row in exact], dtype=float).reshape(len(exact), len(vars))
        return cls(vars, values, exact)

    @classmethod
    def empty(cls, vars):
        return cls(vars, np.zeros((0, len(vars))), ())

    @property
    def m(self):
        return len(self.exact)

    def __len__(self):
        return len(self.exact)

    def head(self, m):
        return Dataset(self.vars, self.values[:m], self.exact[:m])

def load_dataset(path, vars, roles):
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DatasetError(f"{path}: empty file") from None
    except pd.errors.ParserError as e:
        raise DatasetError(f"{path}: {e}") from None
    columns = [c.strip() for c in frame.columns]
    for name in columns:
        if name not in vars:
            raise UnknownVariableError(name)
        if name in roles.unobservable:
            raise DatasetError(f"{path}: column `{name}` is an unobservable variable")
    if len(set(columns)) != len(columns):
        raise DatasetError(f"{path}: duplicate columns")
    rows = []
    for r, record in enumerate(frame.itertuples(index=False), start=1):
        row = [Fraction(0)] * len(vars)
        for name, cell in zip(columns, record):
            try:
                row[vars.index(name)] = Fraction(str(cell).strip())
            except (ValueError, ZeroDivisionError):
                raise DatasetError(f"{path}: row {r}, column `{name}`: non-numeric cell `{cell}`") from None
        rows.append(row)
    log.info(f"Loaded {len(rows)} data rows from {path}")
    return Dataset.fromRows(vars, rows, roles)

def save_dataset(dataset, path, columns=None):
    names = list(columns) if columns is not None else list(dataset.vars.names)
    idx = [dataset.vars.index(n) for n in names]
    frame = pd.DataFrame(dataset.values[:, idx] if dataset.m else np.zeros((0, len(idx))), columns=names)
    frame.to_csv(path, index=False)


## synthetic data

def _solveFor(poly, name, point, bounds=None):
    # real root of poly in the variable `name`, other variables fixed at point
    vars = poly.vars
    i = vars.index(name)
    degree = max(0, poly.degreeIn(name))
    coeffs = np.zeros(degree + 1)
    for mono, c in poly.items():
        rest = float(c)
        for j, e in enumerate(mono):
            if e and j != i:
                rest *= point[j] ** e
        coeffs[degree - mono[i]] += rest
    nz = np.flatnonzero(np.abs(coeffs) > 0)
    if len(nz) == 0 or nz[0] == degree:
        return None
    roots = np.roots(coeffs[nz[0]:])
    real = [r.real for r in roots if abs(r.imag) <= 1e-9 * max(1.0, abs(r))]
    if bounds is not None:
        real = [r for r in real if bounds[0] <= r <= bounds[1]]
    else:
        real = [r for r in real if r > 0]
    return max(real) if real else None

def generate_synthetic_data(ground_truth, roles, ranges, m, noise=0.01, seed=0, derived=()):
    """Sample m rows: independent variables uniform in their ranges, derived
    variables then the dependent one solved from their implicit polynomials,
    and the dependent column perturbed by a factor (1 + noise * N(0, 1))."""
    vars = ground_truth.vars
    if noise < 0:
        raise DatasetError("noise must be >= 0")
    dependent = roles.dependent
    if dependent is None:
        raise DatasetError("synthetic data needs a dependent variable")
    solved = {name for name, _ in derived} | {dependent}
    missing = [n for n in roles.measurable if n not in solved and n not in ranges]
    if missing:
        raise DatasetError(f"no sampling range for {', '.join(missing)}")
    rng = np.random.default_rng(seed)
    dep = vars.index(dependent)
    rows = np.zeros((m, len(vars)))
    for r in range(m):
        for attempt in range(MAX_RETRIES):
            x = np.zeros(len(vars))
            for name in vars:
                if name in ranges and name not in solved:
                    lo, hi = ranges[name]
                    x[vars.index(name)] = rng.uniform(lo, hi)
            ok = True
            for name, poly in tuple(derived) + ((dependent, ground_truth),):
                value = _solveFor(poly, name, x, ranges.get(name))
                if value is None:
                    ok = False
                    break
                x[vars.index(name)] = value
            if ok:
                break
            log.debug(f"row {r}: dependent not computable, resampling")
        else:
            raise DatasetError(f"could not compute `{dependent}` after {MAX_RETRIES} attempts")
        x[dep] *= 1.0 + noise * rng.standard_normal()
        rows[r] = x
    return Dataset.fromRows(vars, [list(row) for row in rows], roles)
