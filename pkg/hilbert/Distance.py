# Degree-capped coefficient distance between a polynomial and the set of
# polynomials derivable from a background theory.
#
# Every value is "within certificate degree D": multipliers are capped at
# `caps` total degree, and D is the smallest degree that holds both q and
# every capped product beta_j h_j.

import logging
from dataclasses import dataclass, field, replace
from math import sqrt
from typing import Dict, Optional

from hilbert.Certificate import Certificate, verify
from hilbert.Formulate import formulate
from hilbert.Helpers import powerset, to_fraction
from hilbert.Polynomial import Polynomial
from hilbert.Solution import FEASIBLE, OPTIMAL
from hilbert.Solver import decode, rationalize_solution, solve
from hilbert.Theory import Hyperparameters, VariableRoles
from hilbert.utils import FormulationError, SolverError, Statistics

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DistanceResult:
    value: float
    projection: Optional[Certificate] = None
    selection: Dict[str, bool] = field(default_factory=dict)
    status: str = OPTIMAL


@dataclass(frozen=True)
class ConsistentUpToDegree:
    degree: int

    def __str__(self):
        return f"consistent up to degree {self.degree} (no certificate of 1 = 0 found)"


@dataclass(frozen=True)
class InconsistentWitness:
    certificate: Certificate
    degree: int

    def __str__(self):
        return f"inconsistent: certificate found at degree {self.degree}"


def certificate_degree(q, theory, caps):
    # smallest D covering q and every multiplier of total degree caps
    degrees = [a.polynomial.degree for a in theory.equalities + theory.inequalities]
    return max([q.degree, 0] + [caps + d for d in degrees])

def _hyper(norm, kind, caps, tau=None, hyper=None):
    if norm not in (1, 2):
        raise FormulationError(f"norm must be 1 or 2, got {norm}")
    base = hyper or Hyperparameters()
    return replace(base, objective='penalized', distance=f"l{norm}", lambda_=1.0, law=kind,
                   multiplier_total_degree=caps, tau=tau, exclusive=(),
                   q_total_degree=None).validate()

def _value(formulation, values, norm):
    slacks = [float(values[e]) for e in formulation.slack.values()]
    if norm == 1:
        return sum(abs(v) for v in slacks)
    return sqrt(sum(v * v for v in slacks))

def _projection(formulation, solution, hyper):
    """Certificate for q - r, r the residual left by the optimal multipliers."""
    values = solution.values
    if not solution.exact:
        values = rationalize_solution(solution, hyper.rationalize_tol, hyper.max_denominator).values
    cert = decode(values, formulation, solution.binaries, hyper.rationalize_tol, hyper.max_denominator)
    vars = formulation.vars
    r = Polynomial(vars, {mono: to_fraction(values[e]) for mono, e in formulation.slack.items()})
    return replace(cert, q=cert.q - r)

def _distance(q, theory, caps, norm, kind, tau, hyper, mode, stats):
    vars = theory.vars
    if q.vars != vars:
        raise FormulationError("polynomial and theory use different variables")
    hyper = _hyper(norm, kind, caps, tau, hyper)
    degree = certificate_degree(q, theory, caps)
    f = formulate(theory, VariableRoles.build(vars), hyper, degree=degree, law=q)
    solution = solve(f.spec, mode, stats, hyper.node_limit, hyper.sdp_block_cap, hyper.sdp_max_iterations)
    if not solution.hasPoint:
        raise SolverError(f"distance problem ended {solution.status}: {solution.message}")
    selection = {label: bool(solution.binaries.get(z, round(float(solution.values[z]))))
                 for label, z in f.selection.items()}
    value = _value(f, solution.values, norm)
    log.debug(f"distance {value:.6g} at degree {degree} ({solution.status})")
    return DistanceResult(value, _projection(f, solution, hyper), selection, solution.status)

def distance_incomplete(q, theory, caps, norm=2, kind='eq', hyper=None, mode='auto', stats=None):
    """min ||q - alpha0 - sum alpha_i g_i - sum beta_j h_j|| over multipliers
    of total degree at most caps: an LP for norm 1, an SDP for norm 2."""
    return _distance(q, theory, caps, norm, kind, None, hyper, mode, stats or Statistics())

def distance_inconsistent(q, theory, caps, tau, norm=1, kind='eq', hyper=None, mode='auto', stats=None):
    """The same minimisation when at most tau axioms may be used. With the
    l1 norm this is one MILP; l2 needs a PSD cone, so the axiom subsets of
    size tau are enumerated instead."""
    if tau is None or tau < 0:
        raise FormulationError("tau must be >= 0")
    stats = stats or Statistics()
    labels = theory.labels()
    if norm == 1:
        return _distance(q, theory, caps, norm, kind, tau, hyper, mode, stats)
    # subsets of size min(tau, #axioms) dominate smaller ones
    size = min(tau, len(labels))
    best = None
    for subset in powerset(labels):
        if len(subset) != size:
            continue
        result = _distance(q, theory.restrict(subset), caps, norm, kind, None, hyper, mode, stats)
        if best is None or result.value < best.value:
            selection = {label: label in subset for label in labels}
            best = DistanceResult(result.value, replace(result.projection, selection=selection),
                                  selection, result.status)
    return best

def check_consistency(theory, caps, hyper=None, mode='auto', stats=None):
    """Search for multipliers writing 1 (equality theories) or -1 as
    alpha0 + sum alpha_i g_i + sum beta_j h_j. A failed search is only a
    verdict at this degree."""
    vars = theory.vars
    stats = stats or Statistics()
    kind = 'ineq' if theory.inequalities else 'eq'
    law = Polynomial.constant(vars, -1 if kind == 'ineq' else 1)
    base = hyper or Hyperparameters()
    hyper = replace(base, objective='feasibility', distance='hard-zero', law=kind,
                    multiplier_total_degree=caps, tau=None, exclusive=(), q_total_degree=None).validate()
    degree = certificate_degree(law, theory, caps)
    f = formulate(theory, VariableRoles.build(vars), hyper, degree=degree, law=law)
    solution = solve(f.spec, mode, stats, hyper.node_limit, hyper.sdp_block_cap, hyper.sdp_max_iterations)
    log.debug(f"consistency search at degree {degree}: {solution.status}")
    if solution.status not in (OPTIMAL, FEASIBLE) or solution.values is None:
        return ConsistentUpToDegree(degree)
    values = solution.values
    if not solution.exact:
        values = rationalize_solution(solution, hyper.rationalize_tol, hyper.max_denominator).values
    cert = decode(values, f, solution.binaries, hyper.rationalize_tol, hyper.max_denominator)
    if not verify(cert, theory).exact:
        log.warning("consistency search found an approximate witness only")
    return InconsistentWitness(cert, degree)
