import unittest
from random import Random

from common import fixture, is_multiple, random_polynomial
from hilbert.Certificate import verify
from hilbert.Formulate import formulate
from hilbert.Polynomial import VarTable, parse_polynomial
from hilbert.Solver import certify, solve
from hilbert.Theory import BackgroundTheory, Hyperparameters, VariableRoles, load_dataset, load_theory
from hilbert.utils import DegreeOverflowError, FormulationError


class ToyProblemTest(unittest.TestCase):
    """Two axioms whose real points are (1, 1) and (-1, -1); the data lie on x = y."""

    def setUp(self):
        self.theory, self.roles, self.hyper = load_theory(fixture('toy.cfg'))
        self.vars = self.theory.vars
        self.data = load_dataset(fixture('toy.csv'), self.vars, self.roles)
        self.x_y = parse_polynomial('x - y', self.vars)

    def discover(self, hyper, m):
        f = formulate(self.theory, self.roles, hyper, self.data.head(m), degree=6)
        solution = solve(f.spec, 'exact')
        self.assertTrue(solution.hasPoint, solution.status)
        cert, verdict, verified = certify(solution, f)
        return cert, verdict

    def test_fit_one_point(self):
        # one point and the axioms already pin down x = y
        cert, verdict = self.discover(self.hyper, 1)
        self.assertTrue(verdict.exact, str(verdict))
        self.assertEqual(cert.q.evaluate(self.data.exact[0]), 0)
        self.assertFalse(cert.q.isZero())
        self.assertLessEqual(cert.q.degree, 3)
        self.assertTrue(is_multiple(cert.q, self.x_y), str(cert.q))

    def test_pure_data_fit(self):
        hyper = self.hyper.override(complexity_weight=0.0)
        for m in (1, 2):
            with self.subTest(m=m):
                cert, verdict = self.discover(hyper, m)
                self.assertTrue(verdict.exact, str(verdict))
                for row in self.data.exact[:m]:
                    self.assertEqual(cert.q.evaluate(row), 0)
                # without the sparsity term one point is not enough
                self.assertEqual(is_multiple(cert.q, self.x_y), m == 2, str(cert.q))

    def test_data_without_axioms(self):
        # no coefficient matching: the law is fitted to the data alone
        used = ['Normalization', 'DataFit', 'Complexity']
        for m in (1, 2, 3, 4):
            with self.subTest(m=m):
                f = formulate(self.theory, self.roles, self.hyper, self.data.head(m), degree=6,
                              blocks_to_use=used)
                self.assertNotIn('CoefficientMatching', [type(b).__name__ for b in f.blocks])
                solution = solve(f.spec, 'exact')
                self.assertTrue(solution.hasPoint, solution.status)
                q = f.q.toPolynomial(solution.values, self.vars)
                self.assertFalse(q.isZero())
                self.assertEqual(is_multiple(q, self.x_y), m == 4, str(q))

    def test_normalization(self):
        cert, _ = self.discover(self.hyper, 1)
        x = self.vars.index('x')
        self.assertEqual(sum(c for mono, c in cert.q.items() if mono[x]), 1)

    def test_empty_theory(self):
        empty = BackgroundTheory(self.vars)
        f = formulate(empty, self.roles, self.hyper, self.data, degree=3)
        self.assertNotIn('CoefficientMatching', [type(b).__name__ for b in f.blocks])
        solution = solve(f.spec, 'exact')
        q = f.q.toPolynomial(solution.values, self.vars)
        self.assertFalse(q.isZero())
        for row in self.data.exact:
            self.assertEqual(q.evaluate(row), 0)
        self.assertTrue(is_multiple(q, parse_polynomial('x - y', self.vars)))


class BlockTest(unittest.TestCase):
    def setUp(self):
        self.theory, self.roles, self.hyper = load_theory(fixture('pion.cfg'))

    def names(self, f):
        return [type(b).__name__ for b in f.blocks]

    def test_feasibility_blocks(self):
        f = formulate(self.theory, self.roles, self.hyper, degree=2)
        self.assertEqual(self.names(f), ['CoefficientMatching', 'Normalization', 'Exclusion'])
        self.assertEqual(f.spec.binaries, frozenset())
        self.assertEqual(f.spec.psd_blocks, ())

    def test_exclusion_rows(self):
        f = formulate(self.theory, self.roles, self.hyper, degree=2)
        excluded = [mono for mono in f.q.basis if f.excluded(mono)]
        rows = [row for row in f.spec.rows if row.name == 'exclude']
        self.assertEqual(len(rows), len(excluded))
        self.assertGreater(len(rows), 0)

    def test_dependent_normalization(self):
        f = formulate(self.theory, self.roles, self.hyper, degree=2)
        i = self.theory.vars.index('pnu')
        row, = [row for row in f.spec.rows if row.name == 'normalize']
        expected = {col for mono, col in zip(f.q.basis, f.q.columns) if mono[i]}
        self.assertEqual(set(row.coeffs), expected)
        self.assertEqual(row.rhs, 1)

    def test_selected_normalization(self):
        hyper = self.hyper.override(normalization='selected', normalization_monomials=('mpi^2',))
        f = formulate(self.theory, self.roles, hyper, degree=2)
        row, = [row for row in f.spec.rows if row.name == 'normalize']
        self.assertEqual(list(row.coeffs), [f.q.column((0, 2, 0, 0, 0, 0, 0))])
        for bad in (('mpi^3',), ('mpi + mmu',), ()):
            with self.subTest(monomials=bad):
                with self.assertRaises(FormulationError):
                    formulate(self.theory, self.roles,
                              self.hyper.override(normalization='selected', normalization_monomials=bad), degree=2)

    def test_disjunction(self):
        hyper = self.hyper.override(normalization='disjunction')
        f = formulate(self.theory, self.roles, hyper, degree=2)
        self.assertEqual(len(f.spec.binaries), 1)
        self.assertEqual(len([r for r in f.spec.rows if r.name == 'disjunction']), 2)

    def test_subset_selection(self):
        hyper = self.hyper.override(objective='penalized', distance='subset', tau=3)
        f = formulate(self.theory, self.roles, hyper, degree=2)
        self.assertEqual(set(f.selection), set(self.theory.labels()))
        budget, = [r for r in f.spec.rows if r.name == 'budget']
        self.assertEqual(budget.rhs, 3)

    def test_l1_distance(self):
        hyper = self.hyper.override(objective='penalized', distance='l1')
        f = formulate(self.theory, self.roles, hyper, degree=2)
        self.assertIn('Distance', self.names(f))
        self.assertEqual(len(f.slack), len([r for r in f.spec.rows if r.name.startswith('match:')]))

    def test_blocks_to_use(self):
        f = formulate(self.theory, self.roles, self.hyper, degree=2,
                      blocks_to_use=['CoefficientMatching', 'Normalization'])
        self.assertEqual(self.names(f), ['CoefficientMatching', 'Normalization'])

    def test_degree_errors(self):
        with self.assertRaises(FormulationError):
            formulate(self.theory, self.roles, self.hyper)
        hyper = self.hyper.override(certificate_degree=2, q_total_degree=3)
        with self.assertRaises(DegreeOverflowError):
            formulate(self.theory, self.roles, hyper)
        with self.assertRaises(FormulationError):
            formulate(self.theory, self.roles, self.hyper, degree=-1)

    def test_missing_dependent(self):
        roles = VariableRoles.build(self.theory.vars, unobservable=self.roles.unobservable)
        with self.assertRaises(FormulationError):
            formulate(self.theory, roles, self.hyper, degree=2)


class InequalityLawTest(unittest.TestCase):
    def setUp(self):
        self.vars = VarTable(['x', 'y'])
        self.theory = BackgroundTheory.fromStrings(self.vars, {'h': 'y - x^2'}, {'g': 'x'})
        self.roles = VariableRoles.build(self.vars, dependent='y')

    def test_sos_only_for_inequality_laws(self):
        hyper = Hyperparameters(law='eq')
        f = formulate(self.theory, self.roles, hyper, degree=2)
        self.assertEqual(f.spec.psd_blocks, ())
        self.assertEqual(f.alpha, {})
        f = formulate(self.theory, self.roles, Hyperparameters(law='ineq'), degree=2)
        self.assertGreater(len(f.spec.psd_blocks), 0)
        self.assertIn('g', f.alpha)

    def test_dsos_law(self):
        hyper = Hyperparameters(law='ineq', sos='dsos', solver='exact')
        f = formulate(self.theory, self.roles, hyper, degree=2)
        self.assertEqual(f.spec.psd_blocks, ())
        self.assertIn('Dsos', [type(b).__name__ for b in f.blocks])
        solution = solve(f.spec, 'exact')
        cert, verdict, verified = certify(solution, f)
        self.assertEqual(cert.kind, 'ineq')
        self.assertTrue(verdict.exact, str(verdict))
        self.assertTrue(verified)


class SoundnessTest(unittest.TestCase):
    def test_random_theories(self):
        rng = Random(17)
        vars = VarTable(['x', 'y'])
        roles = VariableRoles.build(vars, dependent='x')
        hyper = Hyperparameters(q_total_degree=2)
        found = 0
        for _ in range(50):
            axioms, n = {}, rng.randint(1, 2)
            while len(axioms) < n:
                p = random_polynomial(rng, vars, max_degree=2, max_terms=3)
                if not p.isZero():
                    axioms[f"h{len(axioms)}"] = p.toString()
            theory = BackgroundTheory.fromStrings(vars, axioms)
            f = formulate(theory, roles, hyper, degree=4)
            solution = solve(f.spec, 'exact')
            if not solution.hasPoint:
                continue
            found += 1
            cert, verdict, _ = certify(solution, f)
            self.assertTrue(verdict.exact, f"{axioms}: {verdict}")
            self.assertTrue(verify(cert, theory).exact)
        self.assertGreater(found, 0)


if __name__ == '__main__':
    unittest.main()
