# This file handles the linear-programming side of a discovery problem:
# naming unknowns, collecting rows, and dumping the result.

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Dict, FrozenSet, Optional, Tuple

import numpy as np

from hilbert.Helpers import to_fraction
from hilbert.Polynomial import Polynomial
from hilbert.utils import FormulationError

SENSES = ('=', '<=', '>=')


class DecisionVector:
    """Mapping (group, key) --> column index. Indices are handed out in
    insertion order, so the layout is a pure function of the build order."""

    def __init__(self):
        self._groups = {}
        self._owners = []
        self._positions = []

    def add(self, group, key):
        members = self._groups.setdefault(group, {})
        if key in members:
            raise FormulationError(f"column {group}[{key}] allocated twice")
        members[key] = len(self._owners)
        self._owners.append((group, key))
        self._positions.append(len(members) - 1)
        return members[key]

    def addGroup(self, group, keys):
        return [self.add(group, key) for key in keys]

    def index(self, group, key):
        return self._groups[group][key]

    def hasGroup(self, group):
        return group in self._groups

    def group(self, group):
        return dict(self._groups.get(group, {}))

    def groups(self):
        return list(self._groups)

    def owner(self, index):
        return self._owners[index]

    def name(self, index):
        # name usable in LP files: group plus position inside the group
        group, key = self._owners[index]
        position = self._positions[index] if len(self._groups[group]) > 1 else None
        base = re.sub(r'[^A-Za-z0-9_]', '_', group)
        return base if position is None else f"{base}_{position}"

    def __len__(self):
        return len(self._owners)


@dataclass(frozen=True)
class Template:
    """A polynomial whose coefficients are unknowns: one column per basis monomial."""
    group: str
    basis: Tuple[Tuple[int, ...], ...]
    columns: Tuple[int, ...]

    def column(self, mono):
        return self.columns[self.basis.index(mono)]

    def toPolynomial(self, values, vars, drop=1e-9):
        terms = {}
        for mono, col in zip(self.basis, self.columns):
            v = values[col]
            if isinstance(v, float) and abs(v) < drop:
                continue
            if v:
                terms[mono] = to_fraction(v)
        return Polynomial(vars, terms)

    @property
    def degree(self):
        return max((sum(m) for m in self.basis), default=-1)

    def __len__(self):
        return len(self.basis)


@dataclass(frozen=True)
class PsdBlock:
    """Symmetric matrix of column indices constrained to be PSD (upper triangle stored)."""
    owner: str
    size: int
    entries: Tuple[Tuple[Tuple[int, int], int], ...]

    def entry(self, i, j):
        if i > j:
            i, j = j, i
        return dict(self.entries)[(i, j)]

    def matrix(self, values):
        out = np.zeros((self.size, self.size))
        for (i, j), col in self.entries:
            out[i, j] = out[j, i] = float(values[col])
        return out


@dataclass
class Row:
    coeffs: Dict[int, Fraction]
    sense: str
    rhs: Fraction
    name: str = ''

    def activity(self, values):
        return sum(c * values[j] for j, c in self.coeffs.items())

    def satisfied(self, values, tol=0):
        lhs = self.activity(values)
        if self.sense == '=':
            return abs(lhs - self.rhs) <= tol
        if self.sense == '<=':
            return lhs <= self.rhs + tol
        return lhs >= self.rhs - tol


@dataclass(frozen=True)
class LinearProgramSpec:
    layout: DecisionVector = field(compare=False)
    objective: Dict[int, Fraction]
    rows: Tuple[Row, ...]
    lower: Tuple[Optional[Fraction], ...]
    upper: Tuple[Optional[Fraction], ...]
    binaries: FrozenSet[int] = frozenset()
    psd_blocks: Tuple[PsdBlock, ...] = ()
    objective_constant: Fraction = Fraction(0)

    @property
    def nCols(self):
        return len(self.lower)

    @property
    def nRows(self):
        return len(self.rows)

    def isPureLP(self):
        return not self.binaries and not self.psd_blocks

    def objectiveValue(self, values):
        return self.objective_constant + sum(c * values[j] for j, c in self.objective.items())

    def withRows(self, rows):
        return replace(self, rows=self.rows + tuple(rows))

    def withBounds(self, changes):
        lower, upper = list(self.lower), list(self.upper)
        for j, (lo, hi) in changes.items():
            lower[j], upper[j] = lo, hi
        return replace(self, lower=tuple(lower), upper=tuple(upper))

    def withObjective(self, objective, constant=Fraction(0)):
        return replace(self, objective=dict(objective), objective_constant=constant)

    def relaxed(self):
        return replace(self, binaries=frozenset())

    def feasible(self, values, tol=0):
        for j, v in enumerate(values):
            if self.lower[j] is not None and v < self.lower[j] - tol:
                return False
            if self.upper[j] is not None and v > self.upper[j] + tol:
                return False
        return all(row.satisfied(values, tol) for row in self.rows)


class ProblemBuilder:
    """Collects columns, rows, objective terms and PSD blocks while the
    constraint blocks run, then freezes them into a LinearProgramSpec."""

    def __init__(self):
        self.layout = DecisionVector()
        self.rows = []
        self.objective = {}
        self.constant = Fraction(0)
        self.lower = []
        self.upper = []
        self.binaries = set()
        self.psd = []

    def column(self, group, key, lower=None, upper=None, binary=False):
        j = self.layout.add(group, key)
        if binary:
            lower, upper = 0, 1
            self.binaries.add(j)
        self.lower.append(None if lower is None else to_fraction(lower))
        self.upper.append(None if upper is None else to_fraction(upper))
        return j

    def columns(self, group, keys, lower=None, upper=None):
        return [self.column(group, key, lower, upper) for key in keys]

    def template(self, group, basis):
        basis = tuple(basis)
        return Template(group, basis, tuple(self.columns(group, basis)))

    def addRow(self, coeffs, sense, rhs=0, name=''):
        if sense not in SENSES:
            raise FormulationError(f"unknown row sense {sense!r}")
        coeffs = {j: to_fraction(c) for j, c in coeffs.items() if c}
        rhs = to_fraction(rhs)
        if not coeffs:
            ok = (rhs == 0) if sense == '=' else (0 <= rhs if sense == '<=' else 0 >= rhs)
            if not ok:
                raise FormulationError(f"row {name or '?'} reads 0 {sense} {rhs}")
            return None
        row = Row(coeffs, sense, rhs, name)
        self.rows.append(row)
        return row

    def addObjective(self, j, c):
        c = to_fraction(c)
        if c:
            self.objective[j] = self.objective.get(j, 0) + c

    def addPsd(self, block):
        self.psd.append(block)

    def dropEmptyRows(self):
        self.rows = [row for row in self.rows if row.coeffs]

    def build(self):
        self.dropEmptyRows()
        return LinearProgramSpec(
            layout=self.layout,
            objective={j: c for j, c in self.objective.items() if c},
            rows=tuple(self.rows),
            lower=tuple(self.lower),
            upper=tuple(self.upper),
            binaries=frozenset(self.binaries),
            psd_blocks=tuple(self.psd),
            objective_constant=self.constant)


def _num(c):
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else repr(float(c))

def _linear(coeffs, layout, width=8):
    parts = []
    for k, (j, c) in enumerate(sorted(coeffs.items())):
        sign = '-' if c < 0 else '+'
        parts.append(f"{sign} {_num(abs(c))} {layout.name(j)}")
        if (k + 1) % width == 0:
            parts.append('\n   ')
    return ' '.join(parts) if parts else '0 ' + layout.name(0)

def dump_lp(spec, path, title='hilbert problem'):
    """Write spec in CPLEX LP format (diagnostic only)."""
    layout = spec.layout
    op = {'=': '=', '<=': '<=', '>=': '>='}
    with open(path, 'w') as file:
        file.write(f"\\ {title}\n")
        for block in spec.psd_blocks:
            names = ' '.join(layout.name(col) for _, col in block.entries)
            file.write(f"\\ PSD block {block.owner} ({block.size}x{block.size}): {names}\n")
        file.write("Minimize\n")
        file.write(f" obj: {_linear(spec.objective, layout)}\n")
        file.write("Subject To\n")
        for r, row in enumerate(spec.rows):
            name = re.sub(r'[^A-Za-z0-9_]', '_', row.name) or 'r'
            file.write(f" {name}_{r}: {_linear(row.coeffs, layout)} {op[row.sense]} {_num(row.rhs)}\n")
        file.write("Bounds\n")
        for j in range(spec.nCols):
            if j in spec.binaries:
                continue
            lo, hi = spec.lower[j], spec.upper[j]
            name = layout.name(j)
            if lo is None and hi is None:
                file.write(f" {name} free\n")
            elif lo is None:
                file.write(f" -inf <= {name} <= {_num(hi)}\n")
            elif hi is None:
                if lo != 0:
                    file.write(f" {name} >= {_num(lo)}\n")
            else:
                file.write(f" {_num(lo)} <= {name} <= {_num(hi)}\n")
        if spec.binaries:
            file.write("Binaries\n")
            for j in sorted(spec.binaries):
                file.write(f" {layout.name(j)}\n")
        file.write("End\n")
