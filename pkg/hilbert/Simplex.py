# Exact two-phase revised simplex over the rationals.
#
# The LinearProgramSpec is moved to standard form (A x = b, x >= 0, b >= 0):
# finite lower bounds are shifted out, upper-bounded-only columns are
# negated, free columns are split, two-sided bounds become extra rows and
# inequality rows get slacks. The basis inverse is kept dense as Fractions.

import logging
from fractions import Fraction

from hilbert.Solution import INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED, DualCertificate, Solution
from hilbert.utils import SolverError, Statistics

log = logging.getLogger(__name__)

MAX_ITERATIONS = 50000
# consecutive degenerate pivots before switching from Dantzig to Bland's rule
BLAND_AFTER = 50

_ZERO = Fraction(0)
_ONE = Fraction(1)


class CrossedBounds(SolverError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column} has lower bound above upper bound")


class StandardForm:

    def __init__(self, spec):
        self.spec = spec
        self.columns = []           # std column -> {row: coefficient}
        self.mapping = []           # original column -> (constant, [(std column, sign)])
        for j in range(spec.nCols):
            lo, hi = spec.lower[j], spec.upper[j]
            if lo is not None and hi is not None and lo > hi:
                raise CrossedBounds(j)
            if lo is not None:
                self.mapping.append((Fraction(lo), [(self._new(), 1)]))
            elif hi is not None:
                self.mapping.append((Fraction(hi), [(self._new(), -1)]))
            else:
                self.mapping.append((_ZERO, [(self._new(), 1), (self._new(), -1)]))
        self.nStructural = len(self.columns)

        pending = []
        for r, row in enumerate(spec.rows):
            coeffs, rhs = {}, Fraction(row.rhs)
            for j, a in row.coeffs.items():
                const, parts = self.mapping[j]
                rhs -= a * const
                for s, sign in parts:
                    coeffs[s] = coeffs.get(s, 0) + a * sign
            pending.append((coeffs, row.sense, rhs, ('row', r)))
        for j in range(spec.nCols):
            lo, hi = spec.lower[j], spec.upper[j]
            if lo is not None and hi is not None:
                pending.append(({self.mapping[j][1][0][0]: _ONE}, '<=', Fraction(hi - lo), ('upper', j)))

        self.b = []
        self.origin = []
        self.rowSign = []
        self.slackOf = {}           # std row -> slack column with +1 after the flip
        for i, (coeffs, sense, rhs, origin) in enumerate(pending):
            slack = None
            if sense != '=':
                slack = self._new()
                coeffs[slack] = _ONE if sense == '<=' else -_ONE
            sign = -1 if rhs < 0 else 1
            for s, a in coeffs.items():
                if a:
                    self.columns[s][i] = a * sign
            if slack is not None and self.columns[slack][i] == 1:
                self.slackOf[i] = slack
            self.b.append(rhs * sign)
            self.origin.append(origin)
            self.rowSign.append(sign)
        self.nColumns = len(self.columns)

        self.cost = [_ZERO] * self.nColumns
        self.constant = Fraction(spec.objective_constant)
        for j, c in spec.objective.items():
            const, parts = self.mapping[j]
            self.constant += c * const
            for s, sign in parts:
                self.cost[s] += c * sign

    def _new(self):
        self.columns.append({})
        return len(self.columns) - 1

    @property
    def m(self):
        return len(self.b)

    def original(self, std):
        # std vector -> original column values (slack and artificial entries ignored)
        out = []
        for const, parts in self.mapping:
            out.append(const + sum(sign * std[s] for s, sign in parts))
        return out

    def direction(self, std):
        return [sum(sign * std[s] for s, sign in parts) for _, parts in self.mapping]

    def rowMultipliers(self, y):
        duals = [_ZERO] * self.spec.nRows
        bounds = {}
        for i, (kind, index) in enumerate(self.origin):
            if kind == 'row':
                duals[index] = self.rowSign[i] * y[i]
            else:
                bounds[index] = self.rowSign[i] * y[i]
        return duals, bounds


class RevisedSimplex:
    """Dense revised simplex on a StandardForm with an identity starting basis."""

    def __init__(self, form, stats=None, max_iterations=MAX_ITERATIONS):
        self.form = form
        self.stats = stats if stats is not None else Statistics()
        self.max_iterations = max_iterations
        self.columns = list(form.columns)
        self.artificial = set()
        m = form.m
        self.basis = []
        for i in range(m):
            if i in form.slackOf:
                self.basis.append(form.slackOf[i])
            else:
                self.columns.append({i: _ONE})
                self.artificial.add(len(self.columns) - 1)
                self.basis.append(len(self.columns) - 1)
        self.Binv = [[_ONE if r == i else _ZERO for r in range(m)] for i in range(m)]
        self.xB = list(form.b)
        self.iterations = 0

    def duals(self, cost):
        m = self.form.m
        y = [_ZERO] * m
        for i, j in enumerate(self.basis):
            c = cost[j]
            if c:
                for k, v in enumerate(self.Binv[i]):
                    if v:
                        y[k] += c * v
        return y

    def reducedCost(self, cost, y, j):
        return cost[j] - sum(y[r] * a for r, a in self.columns[j].items())

    def ftran(self, column):
        return [sum(row[r] * a for r, a in column.items()) for row in self.Binv]

    def pivot(self, p, q, u):
        up = u[p]
        rowp = [v / up for v in self.Binv[p]]
        self.Binv[p] = rowp
        nz = [(k, v) for k, v in enumerate(rowp) if v]
        xp = self.xB[p] / up
        for i, ui in enumerate(u):
            if i == p or not ui:
                continue
            row = self.Binv[i]
            for k, v in nz:
                row[k] -= ui * v
            self.xB[i] -= ui * xp
        self.xB[p] = xp
        self.basis[p] = q
        self.iterations += 1
        self.stats.increment_counter('simplex_pivots')

    def iterate(self, cost):
        """Run to optimality for cost. Returns (status, y, (q, u)) where the
        pair is the unbounded column and its direction when status is
        UNBOUNDED."""
        degenerate = 0
        while True:
            y = self.duals(cost)
            inBasis = set(self.basis)
            bland = degenerate > BLAND_AFTER
            q, best = None, _ZERO
            for j in range(len(self.columns)):
                if j in inBasis or j in self.artificial:
                    continue
                d = self.reducedCost(cost, y, j)
                if d < best:
                    q, best = j, d
                    if bland:
                        break
            if q is None:
                return OPTIMAL, y, None
            if self.iterations >= self.max_iterations:
                return LIMIT, y, None
            u = self.ftran(self.columns[q])
            p, ratio = None, None
            for i, ui in enumerate(u):
                if ui > 0:
                    t = self.xB[i] / ui
                    if ratio is None or t < ratio or (t == ratio and self.basis[i] < self.basis[p]):
                        p, ratio = i, t
            if p is None:
                return UNBOUNDED, y, (q, u)
            degenerate = degenerate + 1 if ratio == 0 else 0
            self.pivot(p, q, u)

    def driveOutArtificials(self):
        # after a zero Phase I: swap basic artificials for structural columns.
        # rows where none can enter are redundant and their artificial stays at 0
        for p, j in enumerate(self.basis):
            if j not in self.artificial:
                continue
            inBasis = set(self.basis)
            row = self.Binv[p]
            for k in range(len(self.columns)):
                if k in inBasis or k in self.artificial:
                    continue
                if sum(row[r] * a for r, a in self.columns[k].items()):
                    self.pivot(p, k, self.ftran(self.columns[k]))
                    break

    def point(self):
        x = [_ZERO] * len(self.columns)
        for i, j in enumerate(self.basis):
            x[j] = self.xB[i]
        return x


def solve_exact(spec, stats=None, max_iterations=MAX_ITERATIONS):
    """Solve a pure LP exactly. Optimal solutions carry row duals with
    c - A^T y equal to the reduced costs (y <= 0 on <= rows, y >= 0 on >=
    rows) and strong duality holds exactly. Infeasible solutions carry a
    Farkas combination of the rows, Unbounded ones an improving ray."""
    if spec.binaries or spec.psd_blocks:
        raise SolverError("exact simplex only handles pure linear programs")
    stats = stats if stats is not None else Statistics()
    try:
        form = StandardForm(spec)
    except CrossedBounds as e:
        return Solution(INFEASIBLE, exact=True, message=str(e), stats=stats.asDict())
    simplex = RevisedSimplex(form, stats, max_iterations)
    log.debug(f"exact simplex: {form.m} rows, {form.nColumns} columns, {len(simplex.artificial)} artificials")

    with stats.time('simplex'):
        if simplex.artificial:
            phase1 = [_ZERO] * len(simplex.columns)
            for j in simplex.artificial:
                phase1[j] = _ONE
            status, y, _ = simplex.iterate(phase1)
            if status == LIMIT:
                return Solution(LIMIT, exact=True, message='iteration limit in phase I', stats=stats.asDict())
            infeasibility = sum(simplex.xB[i] for i, j in enumerate(simplex.basis) if j in simplex.artificial)
            if infeasibility > 0:
                duals, bounds = form.rowMultipliers(y)
                farkas = {r: -v for r, v in enumerate(duals) if v}
                farkas.update({('upper', j): -v for j, v in bounds.items() if v})
                log.debug(f"phase I infeasibility {infeasibility}")
                return Solution(INFEASIBLE, exact=True, farkas=farkas,
                                message='phase I optimum is positive', stats=stats.asDict())
            simplex.driveOutArtificials()

        cost = form.cost + [_ZERO] * (len(simplex.columns) - form.nColumns)
        status, y, unbounded = simplex.iterate(cost)

    if status == LIMIT:
        return Solution(LIMIT, exact=True, values=form.original(simplex.point()),
                        message='iteration limit', stats=stats.asDict())
    if status == UNBOUNDED:
        q, u = unbounded
        direction = [_ZERO] * len(simplex.columns)
        direction[q] = _ONE
        for i, j in enumerate(simplex.basis):
            direction[j] -= u[i]
        return Solution(UNBOUNDED, exact=True, ray=form.direction(direction),
                        message='improving ray found', stats=stats.asDict())

    values = form.original(simplex.point())
    objective = spec.objectiveValue(values)
    duals, _ = form.rowMultipliers(y)
    reduced = []
    for const, parts in form.mapping:
        s, sign = parts[0]
        reduced.append(sign * simplex.reducedCost(cost, y, s))
    return Solution(OPTIMAL, values=values, objective=objective, exact=True,
                    dual=DualCertificate(duals, reduced, objective),
                    stats=stats.asDict(), message=f"{simplex.iterations} pivots")
