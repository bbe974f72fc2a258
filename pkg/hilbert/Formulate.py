# Formulate step: turn (theory, roles, hyperparameters, data) into a
# solver-agnostic LinearProgramSpec.
#
# Templates for q, the beta_j and the Gram matrices of the alpha_i are
# allocated first; the constraint blocks chosen by the block iterator then
# add their rows, auxiliaries and objective terms.

import logging
from math import sqrt

from hilbert.Blocks.CoefficientMatching import CoefficientMatching
from hilbert.Blocks.DataFit import DataFit
from hilbert.Blocks.Distance import Distance
from hilbert.Blocks.Exclusion import Exclusion
from hilbert.Blocks.Normalization import Normalization
from hilbert.Blocks.Utils.blockIterator import blocks
from hilbert.Certificate import Certificate
from hilbert.Encoding import ProblemBuilder
from hilbert.Helpers import to_fraction
from hilbert.Polynomial import Polynomial, monomial_basis
from hilbert.Solution import OPTIMAL
from hilbert.Sos import SosWitness, gram_parametrize
from hilbert.utils import DegreeOverflowError, FormulationError

log = logging.getLogger(__name__)


class Formulation:
    """Everything known about one assembled problem: the templates, the
    auxiliary column groups the blocks created, and the built spec."""

    def __init__(self, theory, roles, hyper, dataset=None, degree=None, law=None):
        self.theory = theory
        self.vars = theory.vars
        self.roles = roles
        self.hyper = hyper
        self.dataset = dataset
        self.degree = degree
        self.law = law
        self.builder = ProblemBuilder()
        self.q = None
        self.beta = {}
        self.alpha = {}
        self.alpha0 = None
        self.slack = {}
        self.selection = {}
        self.disjunction = None
        self.parts = {'misfit': [], 'distance': [], 'complexity': []}
        self.blocks = []
        self.spec = None
        self._expansion = None
        self._unobservable = [self.vars.index(n) for n in roles.unobservable]

    @property
    def kind(self):
        return self.hyper.law

    def qTerms(self):
        if self.q is None:
            return []
        return list(zip(self.q.basis, self.q.columns))

    def excluded(self, mono):
        return any(mono[i] for i in self._unobservable)

    def gramBlocks(self):
        out = [self.alpha0] if self.alpha0 is not None else []
        return out + [b for b in self.alpha.values() if b is not None]

    def multiplierColumns(self, label):
        if label in self.beta:
            return list(self.beta[label].columns)
        if self.alpha.get(label) is not None:
            return [col for _, col in self.alpha[label].entries]
        return []

    def matchingApplies(self):
        # empty theory, equality law, nothing fixed: q is only shaped by data
        return not (self.theory.isEmpty() and self.alpha0 is None and self.law is None)

    def weight(self, part):
        hyper = self.hyper
        objective = hyper.objective
        if part == 'misfit':
            if objective == 'penalized':
                return 1
            if objective == 'weighted':
                return hyper.data_weight
            if objective == 'convex':
                m = self.dataset.m if self.dataset is not None else 0
                return hyper.lambda1 / sqrt(m) if m else 0
            return 0
        if part == 'distance':
            return hyper.lambda2 if objective == 'convex' else hyper.lambda_
        if part == 'complexity':
            if objective == 'weighted':
                return hyper.complexity_weight
            if objective == 'convex':
                return 1 - hyper.lambda1 - hyper.lambda2
            return 0
        raise FormulationError(f"unknown objective part {part}")

    def residualExpansion(self):
        """Coefficients of q - alpha0 - sum alpha_i g_i - sum beta_j h_j:
        (monomial -> {column: coefficient}, monomial -> constant)."""
        if self._expansion is not None:
            return self._expansion
        linear, constant = {}, {}

        def add(mono, col, c):
            row = linear.setdefault(mono, {})
            row[col] = row.get(col, 0) + c

        if self.law is not None:
            for mono, c in self.law.items():
                constant[mono] = c
        for mono, col in self.qTerms():
            add(mono, col, 1)
        for axiom in self.theory.equalities:
            template = self.beta.get(axiom.label)
            if template is None:
                continue
            for mono, col in zip(template.basis, template.columns):
                for m, c in axiom.polynomial.items():
                    add(tuple(a + b for a, b in zip(mono, m)), col, -c)
        for axiom in self.theory.inequalities:
            block = self.alpha.get(axiom.label)
            if block is None:
                continue
            for mono, cols in block.expansion().items():
                for m, c in axiom.polynomial.items():
                    key = tuple(a + b for a, b in zip(mono, m))
                    for col, w in cols:
                        add(key, col, -w * c)
        if self.alpha0 is not None:
            for mono, cols in self.alpha0.expansion().items():
                for col, w in cols:
                    add(mono, col, -w)
        self._expansion = (linear, constant)
        return self._expansion


### templates

def multiplier_template(builder, label, axiom, degree, vars, caps=None, total_cap=None):
    """Unknown-coefficient multiplier for an equality axiom, of degree at most
    degree - deg(axiom) (and total_cap when given). None when the axiom alone
    already exceeds the certificate degree."""
    cap = degree - axiom.degree
    if total_cap is not None:
        cap = min(cap, total_cap)
    if cap < 0:
        return None
    return builder.template(f"beta.{label}", monomial_basis(vars, cap, caps))

def _checkCaps(hyper, theory, degree):
    if hyper.q_total_degree is not None and hyper.q_total_degree > degree:
        raise DegreeOverflowError(f"q_total_degree {hyper.q_total_degree} exceeds certificate degree {degree}")
    if hyper.multiplier_total_degree is not None:
        for axiom in theory.equalities + theory.inequalities:
            if hyper.multiplier_total_degree + axiom.polynomial.degree > degree:
                raise DegreeOverflowError(
                    f"multiplier of [{axiom.label}] would reach degree "
                    f"{hyper.multiplier_total_degree + axiom.polynomial.degree} > {degree}")

def allocate(formulation):
    f = formulation
    hyper, vars, builder, degree = f.hyper, f.vars, f.builder, f.degree
    if f.law is None:
        q_cap = degree if hyper.q_total_degree is None else min(hyper.q_total_degree, degree)
        f.q = builder.template('q', monomial_basis(vars, q_cap, hyper.qCaps()))
    caps = hyper.multiplierCaps()
    for axiom in f.theory.equalities:
        template = multiplier_template(builder, axiom.label, axiom.polynomial, degree, vars,
                                       caps, hyper.multiplier_total_degree)
        if template is not None:
            f.beta[axiom.label] = template
    psd = hyper.sos == 'sdp'
    if hyper.law != 'ineq':
        # SOS multipliers only certify inequality laws
        return
    for axiom in f.theory.inequalities:
        room = degree - axiom.polynomial.degree
        if hyper.multiplier_total_degree is not None:
            room = min(room, hyper.multiplier_total_degree)
        f.alpha[axiom.label] = gram_parametrize(builder, 2 * (room // 2), vars, caps,
                                                f"alpha.{axiom.label}", psd) if room >= 0 else None
    f.alpha0 = gram_parametrize(builder, 2 * (degree // 2), vars, caps, 'alpha0', psd)

def assemble(formulation, blocks_to_use=None):
    """Run the active constraint blocks and freeze the problem."""
    f = formulation
    for block_class in blocks(f, blocks_to_use):
        block = block_class(f)
        block.getRows(f.builder)
        f.blocks.append(block)
        log.debug(block.getExplanation())
    f.spec = f.builder.build()
    return f.spec


### the operations, one per constraint family

def coefficient_matching(formulation):
    return CoefficientMatching(formulation).getRows(formulation.builder)

def normalization_constraint(formulation):
    return Normalization(formulation).getRows(formulation.builder)

def exclusion_constraints(formulation):
    return Exclusion(formulation).getRows(formulation.builder)

def data_fit_rows(formulation):
    return DataFit(formulation).getRows(formulation.builder)

def distance_block(formulation):
    return Distance(formulation).getRows(formulation.builder)


def formulate(theory, roles, hyper, dataset=None, degree=None, law=None, blocks_to_use=None):
    """Formulation for certificate degree `degree`. Without one the
    hyperparameters' certificate_degree is used and caps above it are an
    error instead of being clipped."""
    if degree is None:
        degree = hyper.certificate_degree
        if degree is None:
            raise FormulationError("no certificate degree given")
        _checkCaps(hyper, theory, degree)
    if degree < 0:
        raise FormulationError("certificate degree must be >= 0")
    f = Formulation(theory, roles, hyper, dataset, degree, law)
    allocate(f)
    assemble(f, blocks_to_use)
    log.debug(f"formulated degree {degree}: {f.spec.nCols} columns, {f.spec.nRows} rows, "
              f"{len(f.spec.binaries)} binaries, {len(f.spec.psd_blocks)} PSD blocks")
    return f


### linear bound problems

class BoundProblem:

    def __init__(self, theory, objective, sense, spec, rows):
        self.theory = theory
        self.objective = objective
        self.sense = sense
        self.spec = spec
        self.rows = rows            # spec row index -> axiom

def _linear(poly, what):
    if poly.degree > 1:
        raise FormulationError(f"{what} is not linear: {poly}")
    n = len(poly.vars)
    const = poly.coefficient((0,) * n)
    coeffs = {}
    for mono, c in poly.items():
        if sum(mono) == 1:
            coeffs[mono.index(1)] = c
    return coeffs, const

def bound_problem(theory, objective, sense='min'):
    """LP over the theory variables: optimise a linear objective subject to
    linear axioms. Its row duals decode into a certificate of the bound."""
    if sense not in ('min', 'max'):
        raise FormulationError("sense must be min or max")
    builder = ProblemBuilder()
    for name in theory.vars:
        builder.column('x', name)
    rows = {}
    for axiom in theory.equalities + theory.inequalities:
        coeffs, const = _linear(axiom.polynomial, f"axiom [{axiom.label}]")
        sense_row = '=' if axiom in theory.equalities else '>='
        row = builder.addRow(coeffs, sense_row, -const, axiom.label)
        if row is not None:
            rows[len(builder.rows) - 1] = axiom
    coeffs, const = _linear(objective, "objective")
    sign = 1 if sense == 'min' else -1
    for j, c in coeffs.items():
        builder.addObjective(j, sign * c)
    builder.constant = sign * const
    return BoundProblem(theory, objective, sense, builder.build(), rows)

def decode_bound(problem, solution):
    """(gamma, certificate of q = f - gamma >= 0, or gamma - f for max)."""
    if solution.status != OPTIMAL or solution.dual is None:
        raise FormulationError(f"bound problem not solved to optimality ({solution.status})")
    vars = problem.theory.vars
    sign = 1 if problem.sense == 'min' else -1
    gamma = sign * solution.objective
    q = (problem.objective - gamma).scale(sign)
    beta, alpha = {}, {}
    one = Polynomial.constant(vars, 1)
    for r, axiom in problem.rows.items():
        y = to_fraction(solution.dual.duals[r])
        if not y:
            continue
        if axiom in problem.theory.equalities:
            beta[axiom.label] = Polynomial.constant(vars, y)
        else:
            alpha[axiom.label] = SosWitness(((y, one),), True)
    return gamma, Certificate(q, beta, SosWitness(), alpha, {}, 'ineq')
