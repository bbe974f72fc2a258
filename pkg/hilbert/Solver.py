# Solve step: dispatch a LinearProgramSpec to the exact simplex, HiGHS,
# branch and bound or the SDP interior-point method, then turn solutions
# back into certificates.

import logging
from collections import namedtuple
from fractions import Fraction
from functools import partial

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from hilbert import BranchAndBound
from hilbert.Certificate import Certificate, verify
from hilbert.Encoding import LinearProgramSpec, Row
from hilbert.Helpers import rationalize, simplest_rational, to_fraction
from hilbert.Simplex import solve_exact
from hilbert.Solution import (FEASIBLE, INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED,
                              DualCertificate, Solution)
from hilbert.Sos import SosWitness, exact_witness, extract_witness, gram_form, project_gram, solve_sdp
from hilbert.utils import FormulationError, SolverError, Statistics

log = logging.getLogger(__name__)

EXACT_COLUMN_LIMIT = 5000
EXACT_ROW_LIMIT = 400
DROP_TOLERANCE = 1e-9
BIG_M_WARNING = 0.99

_HIGHS_STATUS = {0: OPTIMAL, 1: LIMIT, 2: INFEASIBLE, 3: UNBOUNDED, 4: LIMIT}


### presolve

class Presolved:
    """Zero pinning: columns fixed to 0 by [0, 0] bounds or by a single-entry
    homogeneous equality are removed; restore() maps solutions back."""

    def __init__(self, spec):
        self.spec = spec
        self.order = []             # (column, pinning row or None) in fixing order
        fixed = {}
        for j in range(spec.nCols):
            if spec.lower[j] == 0 and spec.upper[j] == 0:
                fixed[j] = None
                self.order.append((j, None))
        pinning = set()
        changed = True
        while changed:
            changed = False
            for r, row in enumerate(spec.rows):
                if r in pinning or row.sense != '=' or row.rhs != 0:
                    continue
                live = [j for j in row.coeffs if j not in fixed]
                if len(live) != 1:
                    continue
                j = live[0]
                lo, hi = spec.lower[j], spec.upper[j]
                if (lo is not None and lo > 0) or (hi is not None and hi < 0):
                    continue
                fixed[j] = r
                pinning.add(r)
                self.order.append((j, r))
                changed = True
        self.fixed = fixed
        self.kept = [j for j in range(spec.nCols) if j not in fixed]
        self.newIndex = {j: k for k, j in enumerate(self.kept)}
        self.keptRows = []
        rows = []
        for r, row in enumerate(spec.rows):
            if r in pinning:
                continue
            coeffs = {self.newIndex[j]: c for j, c in row.coeffs.items() if j not in fixed}
            if not coeffs and row.satisfied([0] * spec.nCols):
                continue
            self.keptRows.append(r)
            rows.append(Row(coeffs, row.sense, row.rhs, row.name))
        self.reduced = LinearProgramSpec(
            layout=spec.layout,
            objective={self.newIndex[j]: c for j, c in spec.objective.items() if j not in fixed},
            rows=tuple(rows),
            lower=tuple(spec.lower[j] for j in self.kept),
            upper=tuple(spec.upper[j] for j in self.kept),
            binaries=frozenset(self.newIndex[j] for j in spec.binaries if j not in fixed),
            objective_constant=spec.objective_constant)

    def _expand(self, values, zero):
        out = [zero] * self.spec.nCols
        for k, j in enumerate(self.kept):
            out[j] = values[k]
        return out

    def restore(self, solution):
        spec = self.spec
        zero = Fraction(0) if solution.exact else 0.0
        values = None if solution.values is None else self._expand(solution.values, zero)
        ray = None if solution.ray is None else self._expand(solution.ray, zero)
        dual, farkas = None, None
        if solution.dual is not None:
            duals = [zero] * spec.nRows
            for k, r in enumerate(self.keptRows):
                duals[r] = solution.dual.duals[k]
            reduced = None
            if solution.dual.reduced_costs is not None:
                reduced = self._expand(solution.dual.reduced_costs, zero)
            for j, r in reversed(self.order):
                d = spec.objective.get(j, 0) - sum(duals[s] * row.coeffs.get(j, 0)
                                                   for s, row in enumerate(spec.rows) if duals[s])
                if r is None:
                    if reduced is not None:
                        reduced[j] = d
                else:
                    duals[r] = d / spec.rows[r].coeffs[j]
                    if reduced is not None:
                        reduced[j] = zero
            dual = DualCertificate(duals, reduced, solution.dual.objective)
        if solution.farkas is not None:
            farkas = {}
            for key, v in solution.farkas.items():
                if isinstance(key, tuple):
                    farkas[(key[0], self.kept[key[1]])] = v
                else:
                    farkas[self.keptRows[key]] = v
            for j, r in reversed(self.order):
                if r is None:
                    continue
                c = sum(v * spec.rows[s].coeffs.get(j, 0) for s, v in farkas.items() if not isinstance(s, tuple))
                if c:
                    farkas[r] = farkas.get(r, 0) - c / spec.rows[r].coeffs[j]
        return Solution(solution.status, values=values, objective=solution.objective,
                        binaries=solution.binaries, dual=dual, farkas=farkas, ray=ray,
                        exact=solution.exact, stats=solution.stats, message=solution.message)

def presolve(spec):
    return Presolved(spec)


### linear programs

def solve_float(spec, stats=None):
    """HiGHS dual simplex through scipy; row duals from the marginals."""
    stats = stats if stats is not None else Statistics()
    n = spec.nCols
    if n == 0:
        ok = all(row.satisfied([]) for row in spec.rows)
        return Solution(OPTIMAL if ok else INFEASIBLE, values=[] if ok else None,
                        objective=float(spec.objective_constant) if ok else None,
                        dual=DualCertificate([0.0] * spec.nRows, [], None) if ok else None)
    c = np.zeros(n)
    for j, v in spec.objective.items():
        c[j] = float(v)
    ub, eq = ([], [], [], []), ([], [], [], [])
    where = []
    for r, row in enumerate(spec.rows):
        target = eq if row.sense == '=' else ub
        sign = -1.0 if row.sense == '>=' else 1.0
        k = len(target[3])
        for j, a in row.coeffs.items():
            target[0].append(sign * float(a))
            target[1].append(k)
            target[2].append(j)
        target[3].append(sign * float(row.rhs))
        where.append((target is eq, k, sign))

    def matrix(part):
        if not part[3]:
            return None, None
        return coo_matrix((part[0], (part[1], part[2])), shape=(len(part[3]), n)).tocsr(), np.array(part[3])

    A_ub, b_ub = matrix(ub)
    A_eq, b_eq = matrix(eq)
    bounds = [(None if lo is None else float(lo), None if hi is None else float(hi))
              for lo, hi in zip(spec.lower, spec.upper)]
    with stats.time('highs'):
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method='highs-ds',
                      options={'primal_feasibility_tolerance': 1e-9, 'dual_feasibility_tolerance': 1e-9})
    stats.increment_counter('highs_calls')
    status = _HIGHS_STATUS.get(res.status, LIMIT)
    if status != OPTIMAL:
        return Solution(status, message=res.message, stats=stats.asDict())
    duals = []
    for is_eq, k, sign in where:
        marginals = res.eqlin.marginals if is_eq else res.ineqlin.marginals
        duals.append(float(sign * marginals[k]))
    objective = float(res.fun) + float(spec.objective_constant)
    return Solution(OPTIMAL, values=[float(v) for v in res.x], objective=objective,
                    dual=DualCertificate(duals, None, objective), exact=False,
                    stats=stats.asDict(), message=res.message)

def resolve_mode(spec, mode='auto'):
    if mode in ('exact', 'float'):
        return mode
    if mode != 'auto':
        raise SolverError(f"unknown solver mode `{mode}`")
    reduced = presolve(spec).reduced
    if reduced.nCols < EXACT_COLUMN_LIMIT and reduced.nRows <= EXACT_ROW_LIMIT:
        return 'exact'
    return 'float'

def solve_lp(spec, mode='auto', stats=None):
    if spec.binaries or spec.psd_blocks:
        raise SolverError("solve_lp needs a pure linear program")
    stats = stats if stats is not None else Statistics()
    stats.increment_counter('lps')
    info = presolve(spec)
    reduced = info.reduced
    if mode == 'auto':
        mode = 'exact' if reduced.nCols < EXACT_COLUMN_LIMIT and reduced.nRows <= EXACT_ROW_LIMIT else 'float'
    log.debug(f"LP ({mode}): {reduced.nCols} columns, {reduced.nRows} rows after pinning "
              f"{spec.nCols - reduced.nCols} columns")
    if mode == 'exact':
        solution = solve_exact(reduced, stats)
    elif mode == 'float':
        solution = solve_float(reduced, stats)
    else:
        raise SolverError(f"unknown solver mode `{mode}`")
    return info.restore(solution)

def solve_milp(spec, mode='auto', node_limit=BranchAndBound.NODE_LIMIT, stats=None):
    if spec.psd_blocks:
        raise SolverError("PSD blocks combined with binaries are not supported")
    stats = stats if stats is not None else Statistics()
    mode = resolve_mode(spec, mode)
    return BranchAndBound.solve_milp(spec, partial(solve_lp, mode=mode, stats=stats), node_limit, stats)

def solve(spec, mode='auto', stats=None, node_limit=BranchAndBound.NODE_LIMIT,
          sdp_block_cap=50, sdp_max_iterations=200):
    stats = stats if stats is not None else Statistics()
    with stats.time('solve'):
        if spec.psd_blocks:
            return solve_sdp(spec, sdp_max_iterations, sdp_block_cap, stats=stats)
        if spec.binaries:
            return solve_milp(spec, mode, node_limit, stats)
        return solve_lp(spec, mode, stats)


### tie breaking

def lex_cleanup(spec, solution, columns, stats=None):
    """Among the optimal points, the lexicographically smallest one over
    `columns`: bound the objective by its optimum, then minimise and fix
    each column in turn. Exact mode only; binaries stay at their values."""
    if not solution.exact or not solution.hasPoint:
        return solution
    fixed = spec.withBounds({j: (v, v) for j, v in solution.binaries.items()}).relaxed() \
        if solution.binaries else spec
    if spec.objective:
        bound = Row(dict(spec.objective), '<=', solution.objective - spec.objective_constant, 'optimum')
        fixed = fixed.withRows([bound])
    values = solution.values
    for j in columns:
        step = solve_lp(fixed.withObjective({j: 1}), 'exact', stats)
        if step.status == UNBOUNDED:
            continue
        if step.status != OPTIMAL:
            log.debug(f"lexicographic clean-up stopped at column {j}: {step.status}")
            break
        values = step.values
        fixed = fixed.withBounds({j: (values[j], values[j])})
    return Solution(solution.status, values=values, objective=spec.objectiveValue(values),
                    binaries=solution.binaries, dual=solution.dual, exact=True,
                    stats=solution.stats, message=solution.message + ', lex clean-up')


### rationalisation

Rationalized = namedtuple('Rationalized', ['values', 'verified', 'passes'])

def _snap(values, snap, max_denominator, tol):
    out = []
    for v in values:
        if isinstance(v, Fraction):
            out.append(v)
        elif abs(v) < DROP_TOLERANCE:
            out.append(Fraction(0))
        else:
            f = snap(v, max_denominator, tol)
            out.append(f if f is not None else to_fraction(v))
    return out

def rationalize_solution(solution, tol=1e-6, max_denominator=10**6, check=None):
    """Snap float values to rationals. Pass 1 takes the nearest fraction with
    bounded denominator; when check rejects it, pass 2 takes the first
    continued-fraction convergent within tol. verified is check's verdict
    on the returned values (None without a check)."""
    if solution.values is None:
        return Rationalized(None, False, 0)
    if solution.exact:
        values = list(solution.values)
        return Rationalized(values, None if check is None else bool(check(values)), 0)
    first = _snap(solution.values, rationalize, max_denominator, tol)
    if check is None:
        return Rationalized(first, None, 1)
    if check(first):
        return Rationalized(first, True, 1)
    second = _snap(solution.values, simplest_rational, max_denominator, tol)
    if second != first and check(second):
        return Rationalized(second, True, 2)
    return Rationalized(first, False, 2)


### decoding

def _gramMatrix(block, values):
    n = block.size
    G = [[values[0] * 0 for _ in range(n)] for _ in range(n)] if values else []
    for (i, j), col in block.entries:
        G[i][j] = G[j][i] = values[col]
    return G

def decode(values, formulation, binaries=None, tol=1e-6, max_denominator=10**6):
    """Certificate from a point of formulation.spec (exact or float values)."""
    f = formulation
    vars = f.vars
    if values is None or len(values) != f.spec.nCols:
        raise FormulationError("solution does not match the problem layout")
    binaries = binaries or {}
    selection = {}
    for label, z in f.selection.items():
        v = binaries.get(z, values[z])
        selection[label] = float(v) > 0.5
    if f.law is not None:
        q = f.law
    else:
        q = f.q.toPolynomial(values, vars, DROP_TOLERANCE)
    beta = {}
    for label, template in f.beta.items():
        if selection.get(label, True):
            p = template.toPolynomial(values, vars, DROP_TOLERANCE)
            if not p.isZero():
                beta[label] = p
    alpha = {}
    for label, block in f.alpha.items():
        if block is None or not selection.get(label, True):
            continue
        w = extract_witness(_gramMatrix(block, values), block.basis, vars, tol, max_denominator)
        if not w.isEmpty():
            alpha[label] = w
    alpha0 = SosWitness()
    if f.alpha0 is not None:
        alpha0 = extract_witness(_gramMatrix(f.alpha0, values), f.alpha0.basis, vars, tol, max_denominator)
    return Certificate(q, beta, alpha0, alpha, selection, f.kind)

def repair_alpha0(cert, formulation, values):
    """Re-fit the alpha0 Gram matrix exactly to the rest of a rationalised
    certificate. None when the projected matrix is not PSD."""
    f = formulation
    if f.alpha0 is None:
        return None
    target = cert.q
    for axiom in f.theory.inequalities:
        w = cert.witness(axiom.label)
        if not w.isEmpty():
            target = target - w.expand(f.vars) * axiom.polynomial
    for axiom in f.theory.equalities:
        b = cert.multiplier(axiom.label)
        if not b.isZero():
            target = target - b * axiom.polynomial
    G = [[to_fraction(v) for v in row] for row in _gramMatrix(f.alpha0, values)]
    projected = project_gram(G, f.alpha0.basis, target)
    if projected is None:
        return None
    witness = exact_witness(projected, f.alpha0.basis, f.vars)
    if witness is None or witness.expand(f.vars) != gram_form(projected, f.alpha0.basis, f.vars):
        return None
    return Certificate(cert.q, cert.beta, witness, cert.alpha, cert.selection, cert.kind)

def certify(solution, formulation, hyper=None, stats=None):
    """Decode a solution into a certificate whose verdict is as good as the
    rationalisation allows: exact values decode directly; float values go
    through the two rationalisation passes and, for inequality laws, the
    alpha0 repair."""
    f = formulation
    hyper = hyper or f.hyper
    tol, max_den = hyper.rationalize_tol, hyper.max_denominator
    stats = stats if stats is not None else Statistics()
    with stats.time('verify'):
        if solution.exact:
            cert = decode(solution.values, f, solution.binaries, tol, max_den)
            return cert, verify(cert, f.theory), True

        def check(values):
            return verify(decode(values, f, solution.binaries, tol, max_den), f.theory).exact

        result = rationalize_solution(solution, tol, max_den, check)
        cert = decode(result.values, f, solution.binaries, tol, max_den)
        verdict = verify(cert, f.theory)
        if not verdict.exact and f.alpha0 is not None:
            repaired = repair_alpha0(cert, f, result.values)
            if repaired is not None:
                repaired_verdict = verify(repaired, f.theory)
                if repaired_verdict.exact:
                    return repaired, repaired_verdict, True
        return cert, verdict, bool(result.verified)

def big_m_warnings(formulation, values):
    """Multiplier coefficients within 1% of big-M: likely artifacts of the bound."""
    f = formulation
    if not f.selection:
        return []
    M = f.hyper.big_M
    out = []
    for label in f.selection:
        for col in f.multiplierColumns(label):
            if abs(float(values[col])) >= BIG_M_WARNING * M:
                out.append(f"{label}: coefficient {float(values[col]):.6g} near big-M {M}")
    return out
