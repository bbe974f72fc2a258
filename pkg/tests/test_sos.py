import unittest
from fractions import Fraction

import numpy as np

from hilbert.Encoding import ProblemBuilder
from hilbert.Polynomial import Polynomial, VarTable, monomial_basis, parse_polynomial
from hilbert.Solution import OPTIMAL
from hilbert.Solver import solve, solve_lp
from hilbert.Sos import (SosWitness, dsos_rows, exact_witness, extract_witness, gram_form,
                         gram_parametrize, project_gram, solve_sdp)
from hilbert.utils import FormulationError, SolverError


class DsosTest(unittest.TestCase):
    def test_dsos_matrices_are_psd(self):
        vars = VarTable(['x', 'y'])
        rng = np.random.default_rng(0)
        for _ in range(5):
            builder = ProblemBuilder()
            block = gram_parametrize(builder, 4, vars, psd=False)
            self.assertEqual(block.size, 6)
            dsos_rows(builder, block)
            builder.addRow({block.entry(i, i): 1 for i in range(block.size)}, '=', 1, 'trace')
            for (i, j), col in block.entries:
                if i != j:
                    builder.addObjective(col, int(rng.integers(-5, 6)))
            spec = builder.build()
            self.assertEqual(spec.psd_blocks, ())
            solution = solve_lp(spec, 'exact')
            self.assertEqual(solution.status, OPTIMAL)
            G = block.matrix(solution.values)
            self.assertGreaterEqual(np.linalg.eigvalsh(G).min(), -1e-10)

    def test_odd_degree(self):
        with self.assertRaises(FormulationError):
            gram_parametrize(ProblemBuilder(), 3, VarTable(['x']))


class WitnessTest(unittest.TestCase):
    def setUp(self):
        self.vars = VarTable(['x', 'y', 'z'])
        self.basis = monomial_basis(self.vars, 1)

    def test_float_gram(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            B = rng.standard_normal((4, 4))
            G = B @ B.T
            witness = extract_witness(G, self.basis, self.vars)
            self.assertTrue(witness.rationalized)
            self.assertTrue(witness.weightsNonnegative())
            error = witness.expand(self.vars) - gram_form(G.tolist(), self.basis, self.vars)
            self.assertLess(error.coeffNorm(1), 1e-6)

    def test_exact_gram(self):
        vars = VarTable(['x'])
        half = Fraction(1, 2)
        witness = extract_witness([[Fraction(1), half], [half, Fraction(1)]], [(0,), (1,)], vars)
        self.assertEqual(witness.expand(vars), parse_polynomial('x^2 + x + 1', vars))

    def test_singular_gram(self):
        vars = VarTable(['x'])
        witness = extract_witness([[1.0, -1.0], [-1.0, 1.0]], [(0,), (1,)], vars)
        self.assertEqual(len(witness.squares), 1)
        self.assertEqual(witness.expand(vars), parse_polynomial('(1 - x)^2', vars))

    def test_not_psd(self):
        with self.assertRaises(SolverError):
            extract_witness([[1.0, 2.0], [2.0, 1.0]], [(0,), (1,)], VarTable(['x']))
        self.assertIsNone(exact_witness([[Fraction(1), Fraction(2)], [Fraction(2), Fraction(1)]],
                                        [(0,), (1,)], VarTable(['x'])))

    def test_projection(self):
        vars = VarTable(['x'])
        basis = [(0,), (1,), (2,)]
        target = parse_polynomial('(x^2 + 1)^2', vars)
        eye = [[Fraction(int(i == j)) for j in range(3)] for i in range(3)]
        G = project_gram(eye, basis, target)
        self.assertEqual(gram_form(G, basis, vars), target)
        self.assertEqual(G[1][1], Fraction(4, 3))
        witness = exact_witness(G, basis, vars)
        self.assertIsNotNone(witness)
        self.assertEqual(witness.expand(vars), target)
        self.assertIsNone(project_gram(eye, basis, parse_polynomial('x^5', vars)))

    def test_witness_scale(self):
        x = Polynomial.variable(self.vars, 'x')
        witness = SosWitness(((Fraction(2), x),))
        self.assertEqual(witness.scale(3).expand(self.vars), x * x * 6)
        self.assertTrue(witness.scale(0).isEmpty())
        with self.assertRaises(FormulationError):
            witness.scale(-1)
        self.assertEqual(str(SosWitness()), '0')


class SdpTest(unittest.TestCase):
    def shifted_square(self):
        # smallest t making x^2 - 2x + t a sum of squares
        vars = VarTable(['x'])
        builder = ProblemBuilder()
        block = gram_parametrize(builder, 2, vars)
        t = builder.column('t', 0)
        target = {(0,): 0, (1,): -2, (2,): 1}
        for mono, cols in block.expansion().items():
            coeffs = {col: w for col, w in cols}
            if mono == (0,):
                coeffs[t] = -1
            builder.addRow(coeffs, '=', target[mono], 'match')
        builder.addObjective(t, 1)
        return builder.build(), t, block

    def test_optimum(self):
        spec, t, block = self.shifted_square()
        self.assertEqual(len(spec.psd_blocks), 1)
        solution = solve(spec)
        self.assertEqual(solution.status, OPTIMAL)
        self.assertFalse(solution.exact)
        self.assertAlmostEqual(solution.values[t], 1.0, places=5)
        self.assertGreaterEqual(np.linalg.eigvalsh(block.matrix(solution.values)).min(), -1e-7)

    def test_block_cap(self):
        spec, _, _ = self.shifted_square()
        with self.assertRaises(SolverError):
            solve_sdp(spec, block_cap=1)


if __name__ == '__main__':
    unittest.main()
