"""Shared paths and helpers for the test suite."""
import os
import unittest

from hilbert.Certificate import equivalent_mod
from hilbert.Polynomial import Polynomial

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(os.path.dirname(HERE), 'fixtures')

# long discovery runs: HILBERT_SLOW=1 python -m unittest discover -s tests
SLOW = os.environ.get('HILBERT_SLOW', '') not in ('', '0')
slow = unittest.skipUnless(SLOW, "set HILBERT_SLOW=1 to run")


def fixture(name):
    return os.path.join(FIXTURES, name)

def random_polynomial(rng, vars, max_degree=3, max_terms=4, coeff_range=5):
    terms = {}
    for _ in range(rng.randint(0, max_terms)):
        mono = [0] * len(vars)
        for _ in range(rng.randint(0, max_degree)):
            mono[rng.randrange(len(vars))] += 1
        terms[tuple(mono)] = rng.randint(-coeff_range, coeff_range)
    return Polynomial(vars, terms)

def is_multiple(q, factor):
    """True when q lies in the ideal generated by factor."""
    return equivalent_mod(q, factor, [factor], q.degree)
