# This file contains the main "engine" of the code: the degree loop of
# discovery and one run_* function per subcommand.

import configparser
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import pandas as pd

from hilbert.Certificate import (Certificate, Verdict, equivalent_mod, load_certificate, render_proof,
                                 save_certificate, verify)
from hilbert.Distance import (InconsistentWitness, check_consistency, distance_inconsistent,
                              distance_incomplete)
from hilbert.Encoding import dump_lp
from hilbert.Formulate import bound_problem, decode_bound, formulate
from hilbert.Polynomial import parse_polynomial
from hilbert.Solver import big_m_warnings, certify, lex_cleanup, solve, solve_lp
from hilbert.Theory import (format_hyperparameters, generate_synthetic_data, load_dataset,
                            load_objective, load_synthetic, load_theory, save_dataset)
from hilbert.utils import DegreeOverflowError, FormulationError, HilbertError, Statistics

log = logging.getLogger(__name__)

# --mode presets: hyperparameter overrides
MODES = {
    'feas': {'objective': 'feasibility', 'distance': 'hard-zero'},
    'fit': {'objective': 'weighted', 'distance': 'hard-zero'},
    'subset': {'objective': 'penalized', 'distance': 'subset'},
    'noiseless': {'objective': 'convex', 'distance': 'hard-zero', 'data_cap': True,
                  'normalization': 'disjunction'},
}

EXIT_EXACT = 0
EXIT_USAGE = 1
EXIT_APPROXIMATE = 2
EXIT_NOT_FOUND = 3


@dataclass
class RunConfig:
    subcommand: str
    theory: Optional[str] = None
    data: Optional[str] = None
    cert: Optional[str] = None
    output: Optional[str] = None
    mode: Optional[str] = None
    overrides: Dict[str, object] = field(default_factory=dict)
    poly: Optional[str] = None
    caps: Optional[int] = None
    norm: int = 2
    rows: Optional[int] = None
    noise: Optional[float] = None
    seed: Optional[int] = None
    dump_lp: Optional[str] = None
    remove: Tuple[str, ...] = ()
    modulo: Tuple[str, ...] = ()
    grid: Tuple[int, ...] = ()
    verbose: bool = True

    def require(self, *names):
        for name in names:
            if getattr(self, name) is None:
                raise HilbertError(f"`{self.subcommand}` needs --{name}")


@dataclass
class DiscoveryReport:
    law: Optional[object] = None
    certificate: Optional[Certificate] = None
    verdict: Optional[Verdict] = None
    degree: Optional[int] = None
    misfit: float = 0.0
    distance: float = 0.0
    complexity: float = 0.0
    selected: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    stats: Dict[str, object] = field(default_factory=dict)
    status: str = 'not found'
    seed: Optional[int] = None

    @property
    def found(self):
        return self.certificate is not None

    @property
    def exit_code(self):
        if not self.found:
            return EXIT_NOT_FOUND
        return EXIT_EXACT if self.verdict.exact else EXIT_APPROXIMATE

    def toText(self, theory):
        if not self.found:
            return f"No law found ({self.status}).\n"
        relation = '=' if self.certificate.kind == 'eq' else '>='
        lines = [
            f"Law: {self.law} {relation} 0",
            f"Verdict: {self.verdict}",
            f"Certificate degree: {self.degree}",
            f"Objective: misfit {self.misfit:.6g}, distance {self.distance:.6g}, complexity {self.complexity:.6g}",
            f"Axioms used: {', '.join(self.selected) if self.selected else '(none)'}",
        ]
        lines += [f"Warning: {w}" for w in self.warnings]
        lines += ["", render_proof(self.certificate, theory)]
        return '\n'.join(lines) + '\n'

    def toConfig(self):
        config = configparser.ConfigParser(interpolation=None)
        config.optionxform = str
        config['report'] = {
            'status': self.status,
            'verdict': self.verdict.status if self.found else 'none',
            'residual_l1': repr(self.verdict.residual.l1) if self.found and self.verdict.residual else 'none',
            'residual_l2': repr(self.verdict.residual.l2) if self.found and self.verdict.residual else 'none',
            'degree': str(self.degree),
            'law': self.law.toString() if self.found else 'none',
            'misfit': repr(self.misfit),
            'distance': repr(self.distance),
            'complexity': repr(self.complexity),
            'selected': ', '.join(self.selected),
            'warnings': '; '.join(self.warnings),
        }
        if self.seed is not None:
            config['report']['seed'] = str(self.seed)
        return config

    # wall-clock timings differ run to run; they stay out of report.cfg
    def statsConfig(self):
        config = configparser.ConfigParser(interpolation=None)
        config.optionxform = str
        config['statistics'] = {k: str(v) for k, v in self.stats.items()}
        return config


## discovery

def apply_mode(hyper, mode, dataset=None):
    if mode is not None:
        if mode not in MODES:
            raise HilbertError(f"unknown mode `{mode}`; choose from {', '.join(MODES)}")
        hyper = hyper.override(**MODES[mode])
    if (dataset is None or dataset.m == 0) and hyper.objective in ('weighted', 'convex'):
        log.info("No data given: falling back to the feasibility objective.")
        hyper = hyper.override(objective='feasibility')
    return hyper

def misfit(law, dataset):
    if dataset is None:
        return 0.0
    return float(sum(abs(law.evaluate(row)) for row in dataset.exact))

def _lpPath(path, degree):
    root, ext = os.path.splitext(path)
    return f"{root}.deg{degree}{ext or '.lp'}"

def _report(formulation, solution, cert, verdict, dataset):
    hyper = formulation.hyper
    residual = verdict.residual
    distance = 0.0
    if residual is not None:
        distance = residual.l2 if hyper.distance == 'l2' else residual.l1
    if cert.selection:
        selected = [l for l in formulation.theory.labels() if cert.isSelected(l)]
    else:
        selected = cert.usedLabels()
    return DiscoveryReport(law=cert.q, certificate=cert, verdict=verdict, degree=formulation.degree,
                           misfit=misfit(cert.q, dataset), distance=distance,
                           complexity=cert.q.coeffNorm(1), selected=selected,
                           warnings=big_m_warnings(formulation, solution.values),
                           status=solution.status)

def iterdiscover(theory, roles, hyper, dataset=None, verbose=True, stats=None, dump=None):
    """Raise the certificate degree from degree_start by degree_step up to
    degree_max; stop at the first level whose law verifies exactly, else
    return the best approximate law seen (smallest residual)."""
    stats = stats if stats is not None else Statistics()
    best = DiscoveryReport()
    degree = hyper.degree_start
    while degree <= hyper.degree_max:
        if verbose:
            print(f"Formulating degree {degree}...", end=' ', flush=True)
        try:
            with stats.time('formulate'):
                f = formulate(theory, roles, hyper, dataset, degree=degree)
        except (DegreeOverflowError, FormulationError) as e:
            if verbose:
                print(f"Skipped: {e}")
            degree += hyper.degree_step
            continue
        spec = f.spec
        if dump is not None:
            dump_lp(spec, _lpPath(dump, degree), f"hilbert degree {degree}")
        if verbose:
            print(f"Done: {spec.nCols} columns, {spec.nRows} rows. Solving...", end='', flush=True)
        solution = solve(spec, hyper.solver, stats, hyper.node_limit, hyper.sdp_block_cap,
                         hyper.sdp_max_iterations)
        if not solution.hasPoint:
            if verbose:
                print(f" No law found ({solution.status}).")
            if not best.found:
                best.status = solution.status
            degree += hyper.degree_step
            continue
        if hyper.tie_break and solution.exact and f.q is not None:
            solution = lex_cleanup(spec, solution, sorted(f.q.columns), stats)
        cert, verdict, _ = certify(solution, f, hyper, stats)
        if cert.q.isZero():
            if verbose:
                print(" Only the zero law.")
            degree += hyper.degree_step
            continue
        report = _report(f, solution, cert, verdict, dataset)
        if verbose:
            print(f" {verdict}.")
        if verdict.exact:
            best = report
            break
        if not best.found or (report.verdict.norm or 0) < (best.verdict.norm or 0):
            best = report
        degree += hyper.degree_step
    best.stats = stats.asDict()
    return best

def write_report(report, theory, directory):
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, 'report.txt'), 'w') as handle:
        handle.write(report.toText(theory))
    with open(os.path.join(directory, 'report.cfg'), 'w') as handle:
        report.toConfig().write(handle)
    with open(os.path.join(directory, 'stats.cfg'), 'w') as handle:
        report.statsConfig().write(handle)
    if report.found:
        save_certificate(report.certificate, os.path.join(directory, 'certificate.cfg'))
    log.info(f"Report written to {directory}")


## data-versus-theory sweep

@dataclass
class SweepPoint:
    m: int
    recovered: bool
    verdict: str
    law: str

def recovers(law, target, modulus=()):
    """True when the nonzero law lies in the ideal of target and `modulus`,
    truncated at the larger of the two degrees. The normalization must keep
    laws out of the ideal of `modulus` alone."""
    if law is None or law.isZero():
        return False
    return equivalent_mod(law, target, [target, *modulus], max(law.degree, target.degree))

def phase_transition(theory, roles, hyper, dataset, target, counts, modulus=(), mode=None, verbose=False):
    """Discovery on the first m rows of dataset for each m in counts; m = 0
    runs on the theory alone. Returns one SweepPoint per m."""
    points = []
    for m in counts:
        if m < 0 or m > dataset.m:
            raise HilbertError(f"cannot take {m} rows of a dataset with {dataset.m}")
        data = dataset.head(m) if m else None
        report = iterdiscover(theory, roles, apply_mode(hyper, mode, data), data, verbose=False)
        recovered = report.found and recovers(report.law, target, modulus)
        point = SweepPoint(m, recovered, report.verdict.status if report.found else 'none',
                           report.law.toString() if report.found else 'none')
        log.info(f"m = {m}: {'recovered' if recovered else 'not recovered'} ({point.law})")
        if verbose:
            print(f"{m:6d}  {'yes' if recovered else 'no ':3s}  {point.verdict:12s}  {point.law}")
        points.append(point)
    return points

def threshold(points):
    """Smallest m from which every later point of the sweep recovers the law;
    None when the last one does not."""
    found = None
    for point in sorted(points, key=lambda p: p.m):
        if not point.recovered:
            found = None
        elif found is None:
            found = point.m
    return found

def save_sweep(points, path):
    pd.DataFrame([asdict(p) for p in points], columns=['m', 'recovered', 'verdict', 'law']).to_csv(path, index=False)
    log.info(f"Sweep written to {path}")


## subcommands; each returns (result, exit code)

def _load(config):
    config.require('theory')
    theory, roles, hyper = load_theory(config.theory)
    if config.overrides:
        hyper = hyper.override(**config.overrides)
    return theory, roles, hyper

def run_discover(config):
    theory, roles, hyper = _load(config)
    dataset = load_dataset(config.data, theory.vars, roles) if config.data else None
    hyper = apply_mode(hyper, config.mode, dataset)
    log.debug(f"hyperparameters: {format_hyperparameters(hyper)}")
    report = iterdiscover(theory, roles, hyper, dataset, config.verbose, dump=config.dump_lp)
    report.seed = config.seed
    print(report.toText(theory))
    if config.output:
        write_report(report, theory, config.output)
    return report, report.exit_code

def run_verify(config):
    config.require('theory', 'cert')
    theory, _, _ = _load(config)
    cert = load_certificate(config.cert, theory.vars)
    verdict = verify(cert, theory)
    print(f"Verdict: {verdict}")
    if verdict.residual is not None:
        print(f"Residual: ||r||_1 = {verdict.residual.l1:.6g}, ||r||_2 = {verdict.residual.l2:.6g}")
        if not verdict.exact:
            print(f"r = {verdict.residual.r}")
    if config.verbose:
        print()
        print(render_proof(cert, theory))
    return verdict, verdict.exit_code

def run_distance(config):
    config.require('theory', 'poly')
    theory, _, hyper = _load(config)
    q = parse_polynomial(config.poly, theory.vars)
    caps = config.caps
    if caps is None:
        caps = hyper.multiplier_total_degree if hyper.multiplier_total_degree is not None else 2
    if hyper.tau is not None:
        result = distance_inconsistent(q, theory, caps, hyper.tau, config.norm, hyper.law, hyper, hyper.solver)
    else:
        result = distance_incomplete(q, theory, caps, config.norm, hyper.law, hyper, hyper.solver)
    print(f"Distance (l{config.norm}, multipliers up to degree {caps}): {result.value:.10g}")
    if result.selection:
        chosen = [l for l, s in result.selection.items() if s]
        print(f"Selected axioms: {', '.join(chosen) if chosen else '(none)'}")
    print(f"Projection: {result.projection.q} = 0")
    if config.output:
        save_certificate(result.projection, config.output)
        log.info(f"Projection certificate written to {config.output}")
    return result, EXIT_EXACT

def run_gen_data(config):
    theory, roles, _ = _load(config)
    synthetic = load_synthetic(config.theory, theory.vars)
    m = synthetic.rows if config.rows is None else config.rows
    noise = synthetic.noise if config.noise is None else config.noise
    seed = synthetic.seed if config.seed is None else config.seed
    dataset = generate_synthetic_data(synthetic.ground_truth, roles, synthetic.ranges, m, noise, seed,
                                      synthetic.derived)
    if config.output:
        save_dataset(dataset, config.output, roles.measurable)
        print(f"Wrote {dataset.m} rows to {config.output}")
    else:
        frame_columns = list(roles.measurable)
        print(','.join(frame_columns))
        idx = [theory.vars.index(n) for n in frame_columns]
        for row in dataset.values:
            print(','.join(repr(float(row[i])) for i in idx))
    return dataset, EXIT_EXACT

def run_check_theory(config):
    theory, roles, hyper = _load(config)
    print(f"Variables: {', '.join(theory.vars.names)}")
    print(f"Dependent: {roles.dependent or '(none)'}")
    print(f"Unobservable: {', '.join(roles.unobservable) or '(none)'}")
    for axiom in theory.equalities:
        print(f"  [{axiom.label}] {axiom.polynomial} = 0   (degree {axiom.polynomial.degree})")
    for axiom in theory.inequalities:
        print(f"  [{axiom.label}] {axiom.polynomial} >= 0   (degree {axiom.polynomial.degree})")
    caps = config.caps
    if caps is None:
        caps = hyper.multiplier_total_degree if hyper.multiplier_total_degree is not None else 2
    verdict = check_consistency(theory, caps, hyper, hyper.solver)
    print(f"Consistency: {verdict}")
    if isinstance(verdict, InconsistentWitness):
        print(render_proof(verdict.certificate, theory))
        return verdict, EXIT_APPROXIMATE
    return verdict, EXIT_EXACT

def run_bound(config):
    theory, _, hyper = _load(config)
    objective, sense = load_objective(config.theory, theory.vars)
    problem = bound_problem(theory, objective, sense)
    mode = 'exact' if hyper.solver == 'auto' else hyper.solver
    solution = solve_lp(problem.spec, mode)
    if not solution.hasPoint:
        print(f"No bound: the problem is {solution.status}.")
        return solution, EXIT_NOT_FOUND
    gamma, cert = decode_bound(problem, solution)
    relation = '>=' if sense == 'min' else '<='
    print(f"Bound: {objective} {relation} {gamma}")
    print()
    print(render_proof(cert, theory))
    return (gamma, cert), verify(cert, theory).exit_code

def run_sweep(config):
    config.require('theory')
    theory, roles, hyper = _load(config)
    counts = sorted(set(config.grid)) or [0, 1, 2, 5, 10, 20, 50, 100]
    modulus = [theory.axiom(label).polynomial for label in config.modulo]
    if config.data:
        config.require('poly')
        dataset = load_dataset(config.data, theory.vars, roles)
    else:
        synthetic = load_synthetic(config.theory, theory.vars)
        noise = 0.0 if config.noise is None else config.noise
        seed = synthetic.seed if config.seed is None else config.seed
        dataset = generate_synthetic_data(synthetic.ground_truth, roles, synthetic.ranges, max(counts), noise,
                                          seed, synthetic.derived)
    target = parse_polynomial(config.poly, theory.vars) if config.poly else synthetic.ground_truth
    remove = theory.labels() if config.remove == ('all',) else config.remove
    theory = theory.without(remove)
    print(f"Axioms: {', '.join(theory.labels()) or '(none)'}")
    print(f"Target: {target} = 0")
    points = phase_transition(theory, roles, hyper, dataset, target, counts, modulus, config.mode,
                              config.verbose)
    m = threshold(points)
    print(f"Recovered from m = {m} on." if m is not None else "Not recovered within the sweep.")
    if config.output:
        save_sweep(points, config.output)
    return points, EXIT_EXACT if m is not None else EXIT_NOT_FOUND

RUNNERS = {
    'discover': run_discover,
    'verify': run_verify,
    'distance': run_distance,
    'gen-data': run_gen_data,
    'check-theory': run_check_theory,
    'bound': run_bound,
    'sweep': run_sweep,
}
