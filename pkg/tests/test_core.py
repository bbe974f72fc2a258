import configparser
import io
import os
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from dataclasses import replace
from unittest import mock

import pandas as pd

from common import fixture, is_multiple, slow
from hilbert.Certificate import EXACT, load_certificate, save_certificate, verify
from hilbert.Distance import ConsistentUpToDegree, InconsistentWitness
from hilbert.Polynomial import parse_polynomial
from hilbert.Theory import Dataset, generate_synthetic_data, load_dataset, load_synthetic, load_theory
from hilbert.core import (EXIT_APPROXIMATE, EXIT_EXACT, EXIT_NOT_FOUND, RunConfig, SweepPoint, apply_mode,
                          iterdiscover, phase_transition, recovers, run_check_theory, run_discover, run_distance,
                          run_sweep, run_verify, threshold, write_report)
from hilbert.main import main
from hilbert.utils import HilbertError

INCONSISTENT = """\
[variables]
names = x

[axioms.eq]
a = x - 1
b = x - 2
"""


def quietly(runner, config):
    with redirect_stdout(io.StringIO()) as out:
        result = runner(config)
    return result, out.getvalue()


class VerifyCommandTest(unittest.TestCase):
    def test_fixtures(self):
        for name in ('toy', 'pion', 'escape'):
            with self.subTest(name=name):
                config = RunConfig('verify', theory=fixture(f"{name}.cfg"),
                                   cert=fixture(f"{name}_cert.cfg"), verbose=False)
                (verdict, code), out = quietly(run_verify, config)
                self.assertEqual(code, EXIT_EXACT)
                self.assertIn("Verdict: Exact", out)

    def test_tampered(self):
        theory, _, _ = load_theory(fixture('pion.cfg'))
        cert = load_certificate(fixture('pion_cert.cfg'), theory.vars)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'cert.cfg')
            save_certificate(replace(cert, q=cert.q + 1), path)
            config = RunConfig('verify', theory=fixture('pion.cfg'), cert=path, verbose=False)
            (verdict, code), out = quietly(run_verify, config)
        self.assertEqual(code, EXIT_APPROXIMATE)
        self.assertIn("r = 1", out)

    def test_missing_argument(self):
        with self.assertRaises(HilbertError):
            run_verify(RunConfig('verify', theory=fixture('pion.cfg')))


class DiscoverCommandTest(unittest.TestCase):
    def test_pion(self):
        config = RunConfig('discover', theory=fixture('pion.cfg'), verbose=False)
        (report, code), out = quietly(run_discover, config)
        self.assertEqual(code, EXIT_EXACT)
        self.assertEqual(report.degree, 2)
        vars = report.law.vars
        self.assertTrue(is_multiple(report.law, parse_polynomial('mpi^2 - 2*mpi*pnu - mmu^2', vars)))
        self.assertTrue(report.law.usesOnly(('pnu', 'mpi', 'mmu')))
        self.assertIn("Law:", out)
        self.assertIn("muon", report.selected)

    def test_toy_with_data(self):
        config = RunConfig('discover', theory=fixture('toy.cfg'), data=fixture('toy.csv'),
                           verbose=False)
        (report, code), _ = quietly(run_discover, config)
        self.assertEqual(code, EXIT_EXACT)
        self.assertTrue(report.verdict.exact)
        self.assertLessEqual(report.law.degree, 3)

    def test_nothing_found(self):
        theory, roles, hyper = load_theory(fixture('toy.cfg'))
        hyper = hyper.override(degree_start=0, degree_max=0)
        with redirect_stdout(io.StringIO()):
            report = iterdiscover(theory, roles, hyper, verbose=False)
        self.assertFalse(report.found)
        self.assertEqual(report.exit_code, EXIT_NOT_FOUND)
        self.assertIn("No law found", report.toText(theory))

    def test_apply_mode(self):
        _, _, hyper = load_theory(fixture('toy.cfg'))
        self.assertEqual(apply_mode(hyper, None).objective, 'feasibility')
        vars = load_theory(fixture('toy.cfg'))[0].vars
        data = Dataset.fromRows(vars, [(1, 1)])
        self.assertEqual(apply_mode(hyper, None, data).objective, 'weighted')
        subset = apply_mode(hyper, 'subset', data)
        self.assertEqual((subset.objective, subset.distance), ('penalized', 'subset'))
        noiseless = apply_mode(hyper, 'noiseless', data)
        self.assertTrue(noiseless.data_cap)
        self.assertEqual(noiseless.normalization, 'disjunction')
        with self.assertRaises(HilbertError):
            apply_mode(hyper, 'sloppy')

    def test_write_report(self):
        theory, roles, hyper = load_theory(fixture('pion.cfg'))
        report = iterdiscover(theory, roles, hyper, verbose=False)
        with tempfile.TemporaryDirectory() as tmp:
            write_report(report, theory, tmp)
            self.assertTrue(os.path.exists(os.path.join(tmp, 'report.txt')))
            parser = configparser.ConfigParser(interpolation=None)
            parser.read(os.path.join(tmp, 'report.cfg'))
            self.assertEqual(parser['report']['verdict'], EXACT)
            self.assertEqual(parser['report']['degree'], '2')
            cert = load_certificate(os.path.join(tmp, 'certificate.cfg'), theory.vars)
            self.assertTrue(verify(cert, theory).exact)

    def test_dump_lp(self):
        theory, roles, hyper = load_theory(fixture('pion.cfg'))
        with tempfile.TemporaryDirectory() as tmp:
            iterdiscover(theory, roles, hyper, verbose=False, dump=os.path.join(tmp, 'pion.lp'))
            self.assertTrue(os.path.exists(os.path.join(tmp, 'pion.deg2.lp')))

    def test_reports_repeat(self):
        theory, roles, hyper = load_theory(fixture('pion.cfg'))
        contents = []
        for _ in range(2):
            report = iterdiscover(theory, roles, hyper, verbose=False)
            with tempfile.TemporaryDirectory() as tmp:
                write_report(report, theory, tmp)
                self.assertTrue(os.path.exists(os.path.join(tmp, 'stats.cfg')))
                files = {}
                for name in ('report.txt', 'report.cfg', 'certificate.cfg'):
                    with open(os.path.join(tmp, name)) as handle:
                        files[name] = handle.read()
                contents.append(files)
        self.assertEqual(contents[0], contents[1])
        self.assertNotIn('[statistics]', contents[0]['report.cfg'])

    def test_seed_recorded(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = RunConfig('discover', theory=fixture('pion.cfg'), seed=11, output=tmp, verbose=False)
            (report, code), _ = quietly(run_discover, config)
            parser = configparser.ConfigParser(interpolation=None)
            parser.read(os.path.join(tmp, 'report.cfg'))
        self.assertEqual(report.seed, 11)
        self.assertEqual(parser['report']['seed'], '11')
        self.assertFalse(parser.has_section('statistics'))


class SlowDiscoveryTest(unittest.TestCase):

    def discover(self, name):
        config = RunConfig('discover', theory=fixture(f"{name}.cfg"), verbose=False)
        (report, code), _ = quietly(run_discover, config)
        self.assertEqual(code, EXIT_EXACT, f"{name}: {report.verdict}")
        return report

    @slow
    def test_escape(self):
        report = self.discover('escape')
        self.assertTrue(is_multiple(report.law, parse_polynomial('2*G*M - ve^2*r', report.law.vars)))

    @slow
    def test_hagen(self):
        report = self.discover('hagen')
        target = parse_polynomial('4*L*mu*u - Dp*R^2 + Dp*r^2', report.law.vars)
        self.assertTrue(is_multiple(report.law, target))

    @slow
    def test_hall(self):
        report = self.discover('hall')
        self.assertTrue(is_multiple(report.law, parse_polynomial('qe*N*UH - B*h*I*L', report.law.vars)))

    def discover_with_data(self, name):
        theory, roles, hyper = load_theory(fixture(f"{name}.cfg"))
        synthetic = load_synthetic(fixture(f"{name}.cfg"), theory.vars)
        data = generate_synthetic_data(synthetic.ground_truth, roles, synthetic.ranges, synthetic.rows,
                                       synthetic.noise, synthetic.seed, synthetic.derived)
        report = iterdiscover(theory, roles, apply_mode(hyper, None, data), data, verbose=False)
        self.assertTrue(report.found, report.status)
        self.assertTrue(report.verdict.exact, str(report.verdict))
        return theory, report

    @slow
    def test_einstein(self):
        theory, report = self.discover_with_data('einstein')
        self.assertIn('moving', report.selected)
        self.assertNotIn('newton', report.selected)
        target = parse_polynomial('-c^2*f0^2 + c^2*f^2 + f0^2*v^2', theory.vars)
        self.assertTrue(is_multiple(report.law, target))

    @slow
    def test_kepler(self):
        theory, report = self.discover_with_data('kepler')
        self.assertNotIn('candidate', report.selected)
        self.assertTrue(report.law.usesOnly(('p', 'd1', 'd2', 'm1', 'm2', 'G')))

    @slow
    def test_kepler_sweep(self):
        theory, roles, hyper = load_theory(fixture('kepler.cfg'))
        synthetic = load_synthetic(fixture('kepler.cfg'), theory.vars)
        # G must vary for the data alone to tell G*m1*m2*p^2 from m1*m2*p^2
        ranges = dict(synthetic.ranges, G=(0.5, 2.0))
        data = generate_synthetic_data(synthetic.ground_truth, roles, ranges, 200, 0.0, synthetic.seed,
                                       synthetic.derived)
        hyper = hyper.override(normalization='selected', normalization_monomials=('m1*m2*G*p^2',))
        center = [theory.axiom('center').polynomial]
        correct = theory.without(['candidate'])

        def sweep(axioms, counts):
            return phase_transition(axioms, roles, hyper, data, synthetic.ground_truth, counts, center, 'fit')

        full = sweep(correct, (1, 5, 10))
        partial = sweep(correct.without(['center']), (1, 5, 10, 50))
        none = sweep(correct.without(correct.labels()), (10, 50, 100, 200))
        self.assertTrue(full[-1].recovered, full[-1].law)
        self.assertIsNotNone(threshold(partial))
        self.assertFalse(none[0].recovered, none[0].law)
        self.assertLess(threshold(partial), threshold(none) or float('inf'))

    @slow
    def test_fixture_laws(self):
        for name in ('radiation', 'compton', 'collision'):
            with self.subTest(name=name):
                report = self.discover(name)
                theory, roles, _ = load_theory(fixture(f"{name}.cfg"))
                self.assertTrue(report.law.usesOnly(roles.measurable))
                self.assertTrue(verify(report.certificate, theory).exact)


class SweepTest(unittest.TestCase):
    def setUp(self):
        self.theory, self.roles, self.hyper = load_theory(fixture('toy.cfg'))
        self.vars = self.theory.vars
        self.x_y = parse_polynomial('x - y', self.vars)

    def test_recovers(self):
        h1 = self.theory.axiom('h1').polynomial
        self.assertTrue(recovers(parse_polynomial('2*x - 2*y', self.vars), self.x_y))
        self.assertTrue(recovers(parse_polynomial('x^2 - y^2', self.vars), self.x_y))
        self.assertFalse(recovers(parse_polynomial('x^2 + y^2', self.vars), self.x_y))
        self.assertFalse(recovers(parse_polynomial('0', self.vars), self.x_y))
        self.assertTrue(recovers(self.x_y + h1, self.x_y, [h1]))
        self.assertFalse(recovers(h1, self.x_y))

    def test_threshold(self):
        points = [SweepPoint(m, ok, 'none', 'none') for m, ok in
                  ((4, True), (1, False), (2, True), (3, False), (5, True))]
        self.assertEqual(threshold(points), 4)
        self.assertIsNone(threshold(points + [SweepPoint(6, False, 'none', 'none')]))
        self.assertIsNone(threshold([]))

    def test_data_replaces_theory(self):
        data = load_dataset(fixture('toy.csv'), self.vars, self.roles)
        empty = self.theory.without(self.theory.labels())
        with_data = phase_transition(empty, self.roles, self.hyper, data, self.x_y, (1, 2, 3, 4))
        self.assertEqual([p.recovered for p in with_data], [False, False, False, True])
        self.assertEqual(threshold(with_data), 4)
        with_axioms = phase_transition(self.theory, self.roles, self.hyper, data, self.x_y, (1,))
        self.assertTrue(with_axioms[0].recovered)
        self.assertEqual(with_axioms[0].verdict, EXACT)

    def test_too_few_rows(self):
        data = load_dataset(fixture('toy.csv'), self.vars, self.roles)
        with self.assertRaises(HilbertError):
            phase_transition(self.theory, self.roles, self.hyper, data, self.x_y, (5,))

    def test_command(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'sweep.csv')
            config = RunConfig('sweep', theory=fixture('toy.cfg'), data=fixture('toy.csv'), poly='x - y',
                               remove=('all',), grid=(1, 2, 3, 4), output=path, verbose=False)
            (points, code), out = quietly(run_sweep, config)
            frame = pd.read_csv(path)
        self.assertEqual(code, EXIT_EXACT)
        self.assertIn("Axioms: (none)", out)
        self.assertIn("Recovered from m = 4 on.", out)
        self.assertEqual(list(frame['m']), [1, 2, 3, 4])
        self.assertEqual(list(frame['recovered']), [False, False, False, True])

    def test_command_needs_target(self):
        config = RunConfig('sweep', theory=fixture('toy.cfg'), data=fixture('toy.csv'), grid=(1,), verbose=False)
        with self.assertRaises(HilbertError):
            quietly(run_sweep, config)


class OtherCommandTest(unittest.TestCase):
    def test_distance(self):
        law = 'x - y + 1/2*x^3 - 1/2*x*y^2'
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'projection.cfg')
            config = RunConfig('distance', theory=fixture('toy.cfg'), poly=law, norm=1, output=path)
            (result, code), out = quietly(run_distance, config)
            self.assertEqual(code, EXIT_EXACT)
            self.assertEqual(result.value, 0)
            theory, _, _ = load_theory(fixture('toy.cfg'))
            self.assertTrue(verify(load_certificate(path, theory.vars), theory).exact)
        self.assertIn("Distance (l1, multipliers up to degree 3): 0", out)

    def test_check_theory(self):
        config = RunConfig('check-theory', theory=fixture('toy.cfg'), caps=1)
        (verdict, code), out = quietly(run_check_theory, config)
        self.assertIsInstance(verdict, ConsistentUpToDegree)
        self.assertEqual(code, EXIT_EXACT)
        self.assertIn("[h1] x^2 + y^2 - 2 = 0", out)

    def test_check_inconsistent_theory(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'bad.cfg')
            with open(path, 'w') as handle:
                handle.write(INCONSISTENT)
            config = RunConfig('check-theory', theory=path, caps=0, overrides={'solver': 'exact'})
            (verdict, code), out = quietly(run_check_theory, config)
        self.assertIsInstance(verdict, InconsistentWitness)
        self.assertEqual(code, EXIT_APPROXIMATE)


class MainTest(unittest.TestCase):
    def run_main(self, argv, log='quiet'):
        with mock.patch.dict(os.environ, {'HILBERT_LOG': log}), \
                redirect_stdout(io.StringIO()) as out, redirect_stderr(io.StringIO()) as err:
            with self.assertRaises(SystemExit) as raised:
                main(argv)
        return raised.exception.code, out.getvalue(), err.getvalue()

    def test_verify(self):
        code, out, _ = self.run_main(['verify', '-t', fixture('pion.cfg'), '-c', fixture('pion_cert.cfg')])
        self.assertEqual(code, 0)
        self.assertIn("Verdict: Exact", out)

    def test_bound(self):
        code, out, _ = self.run_main(['bound', '-t', fixture('ghz.cfg')], log='info')
        self.assertEqual(code, 0)
        self.assertIn(">= 1", out)

    def test_missing_file(self):
        code, _, err = self.run_main(['verify', '-t', fixture('pion.cfg'), '-c', 'no-such-file.cfg'])
        self.assertEqual(code, 1)
        self.assertIn("ERROR", err)

    def test_bad_log_level(self):
        code, _, err = self.run_main(['verify', '-t', fixture('pion.cfg'), '-c', fixture('pion_cert.cfg')],
                                     log='loud')
        self.assertEqual(code, 1)
        self.assertIn("HILBERT_LOG", err)

    def test_usage(self):
        code, _, _ = self.run_main([])
        self.assertEqual(code, 2)

    def test_overrides(self):
        code, out, _ = self.run_main(['distance', '-t', fixture('toy.cfg'), '-q', 'x^2 + y^2 - 2',
                                      '--norm', '1', '--caps', '0', '--solver', 'exact'])
        self.assertEqual(code, 0)
        self.assertIn("Distance (l1, multipliers up to degree 0): 0", out)

    def test_sweep(self):
        code, out, _ = self.run_main(['sweep', '-t', fixture('toy.cfg'), '-d', fixture('toy.csv'), '-q', 'x - y',
                                      '--remove', 'all', '--grid', '1:4:1'])
        self.assertEqual(code, 0)
        self.assertIn("Recovered from m = 4 on.", out)

    def test_bad_grid(self):
        code, _, err = self.run_main(['sweep', '-t', fixture('toy.cfg'), '--grid', '1:10:0'])
        self.assertEqual(code, 2)
        self.assertIn("bad grid", err)


if __name__ == '__main__':
    unittest.main()
