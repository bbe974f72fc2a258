import unittest
from math import sqrt

from common import fixture
from hilbert.Certificate import load_certificate, verify
from hilbert.Distance import (ConsistentUpToDegree, InconsistentWitness, certificate_degree, check_consistency,
                              distance_incomplete, distance_inconsistent)
from hilbert.Polynomial import Polynomial, VarTable, parse_polynomial
from hilbert.Theory import BackgroundTheory, load_theory
from hilbert.utils import FormulationError


class IncompleteDistanceTest(unittest.TestCase):
    def setUp(self):
        self.vars = VarTable(['x', 'y'])
        self.line = BackgroundTheory.fromStrings(self.vars, {'h': 'x'})

    def poly(self, text):
        return parse_polynomial(text, self.vars)

    def test_derivable_law(self):
        theory, _, _ = load_theory(fixture('toy.cfg'))
        q = load_certificate(fixture('toy_cert.cfg'), theory.vars).q
        result = distance_incomplete(q, theory, 3, norm=1, mode='exact')
        self.assertEqual(result.value, 0)
        self.assertTrue(verify(result.projection, theory).exact)
        self.assertEqual(result.projection.q, q)
        result = distance_incomplete(q, theory, 3, norm=2)
        self.assertAlmostEqual(result.value, 0, delta=1e-5)

    def test_constant_offset(self):
        q = self.poly('x + 1')
        result = distance_incomplete(q, self.line, 0, norm=1, mode='exact')
        self.assertEqual(result.value, 1)
        # the projection is x, derivable from h
        self.assertEqual(result.projection.q, self.poly('x'))
        self.assertTrue(verify(result.projection, self.line).exact)
        result = distance_incomplete(q, self.line, 0, norm=2)
        self.assertAlmostEqual(result.value, 1, places=5)

    def test_unreachable_monomial(self):
        # y cannot be produced from x with constant multipliers
        result = distance_incomplete(self.poly('x + 2*y'), self.line, 0, norm=1, mode='exact')
        self.assertEqual(result.value, 2)
        result = distance_incomplete(self.poly('x + 2*y'), self.line, 0, norm=2)
        self.assertAlmostEqual(result.value, 2, places=5)

    def test_zero_polynomial(self):
        result = distance_incomplete(Polynomial.zero(self.vars), self.line, 1, norm=1, mode='exact')
        self.assertEqual(result.value, 0)

    def test_caps_raise_reach(self):
        q = self.poly('x*y')
        self.assertEqual(distance_incomplete(q, self.line, 0, norm=1, mode='exact').value, 1)
        self.assertEqual(distance_incomplete(q, self.line, 1, norm=1, mode='exact').value, 0)

    def test_certificate_degree(self):
        theory, _, _ = load_theory(fixture('toy.cfg'))
        self.assertEqual(certificate_degree(self.poly('x'), self.line, 2), 3)
        self.assertEqual(certificate_degree(self.poly('x^5'), self.line, 0), 5)
        self.assertEqual(certificate_degree(Polynomial.zero(theory.vars), theory, 3), 6)

    def test_bad_arguments(self):
        with self.assertRaises(FormulationError):
            distance_incomplete(self.poly('x'), self.line, 0, norm=3)
        other = VarTable(['x', 'z'])
        with self.assertRaises(FormulationError):
            distance_incomplete(parse_polynomial('x', other), self.line, 0, norm=1)
        with self.assertRaises(FormulationError):
            distance_inconsistent(self.poly('x'), self.line, 0, -1)


class InconsistentDistanceTest(unittest.TestCase):
    """{x = 1, x = 2}: together they derive 1, but each alone only gets close."""

    def setUp(self):
        self.vars = VarTable(['x'])
        self.theory = BackgroundTheory.fromStrings(self.vars, {'a': 'x - 1', 'b': 'x - 2'})
        self.one = Polynomial.constant(self.vars, 1)

    def test_both_axioms_derive_one(self):
        result = distance_incomplete(self.one, self.theory, 0, norm=1, mode='exact')
        self.assertEqual(result.value, 0)

    def test_no_axioms(self):
        q = parse_polynomial('x + 3', self.vars)
        result = distance_inconsistent(q, self.theory, 0, tau=0, norm=1, mode='exact')
        self.assertEqual(result.value, q.coeffNorm(1))
        self.assertEqual(result.selection, {'a': False, 'b': False})

    def test_l1_single_axiom(self):
        # |1 + b| + |b| >= 1 with a, |1 + 2b| + |b| >= 1/2 with b
        result = distance_inconsistent(self.one, self.theory, 0, tau=1, norm=1, mode='exact')
        self.assertEqual(result.value, 0.5)
        self.assertEqual(result.selection, {'a': False, 'b': True})

    def test_l2_single_axiom(self):
        # (1 + 2b)^2 + b^2 is smallest at b = -2/5
        result = distance_inconsistent(self.one, self.theory, 0, tau=1, norm=2)
        self.assertAlmostEqual(result.value, sqrt(0.2), places=4)
        self.assertEqual(result.selection, {'a': False, 'b': True})
        self.assertFalse(result.projection.isSelected('a'))

    def test_large_budget(self):
        result = distance_inconsistent(self.one, self.theory, 0, tau=5, norm=2)
        self.assertAlmostEqual(result.value, 0, delta=1e-5)
        self.assertEqual(result.selection, {'a': True, 'b': True})


class ConsistencyTest(unittest.TestCase):
    def test_inconsistent_pair(self):
        vars = VarTable(['x'])
        theory = BackgroundTheory.fromStrings(vars, {'a': 'x - 1', 'b': 'x - 2'})
        outcome = check_consistency(theory, 0, mode='exact')
        self.assertIsInstance(outcome, InconsistentWitness)
        self.assertEqual(outcome.certificate.q, Polynomial.constant(vars, 1))
        self.assertTrue(verify(outcome.certificate, theory).exact)
        self.assertIn('inconsistent', str(outcome))

    def test_circle(self):
        vars = VarTable(['x', 'y'])
        theory = BackgroundTheory.fromStrings(vars, {'circle': 'x^2 + y^2 - 2'})
        outcome = check_consistency(theory, 2, mode='exact')
        self.assertIsInstance(outcome, ConsistentUpToDegree)
        self.assertEqual(outcome.degree, 4)

    def test_fixture_theories(self):
        for name in ('toy', 'pion', 'escape'):
            with self.subTest(name=name):
                theory, _, _ = load_theory(fixture(f"{name}.cfg"))
                outcome = check_consistency(theory, 1, mode='exact')
                self.assertIsInstance(outcome, ConsistentUpToDegree)


if __name__ == '__main__':
    unittest.main()
