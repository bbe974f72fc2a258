## various helper functions
from fractions import Fraction
from itertools import chain, combinations, product
from math import floor
from scipy.special import comb


def powerset(iterable):
    # powerset
    # from https://stackoverflow.com/a/41626759/3042497
    s = list(iterable)
    return chain.from_iterable(combinations(s, r) for r in range(len(s)+1))

def count_monomials(n, d):
    # number of monomials in n variables of total degree at most d
    if d < 0:
        return 0
    return int(comb(n + d, d, exact=True))

def exponent_vectors(n, d, caps=None):
    # all exponent vectors of length n and total degree exactly d
    # (respecting per-variable caps when given), lexicographically decreasing
    if n == 0:
        if d == 0:
            yield ()
        return
    top = d if caps is None else min(d, caps[0])
    rest = None if caps is None else caps[1:]
    for first in range(top, -1, -1):
        for tail in exponent_vectors(n - 1, d - first, rest):
            yield (first,) + tail

def bin_assignments(k):
    # every 0/1 vector of length k (brute force over binaries)
    return product((0, 1), repeat=k)

def to_fraction(value):
    # exact rational from an int, a Fraction, a decimal string or a float.
    # floats go through their shortest repr, so 0.1 becomes 1/10
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(repr(float(value)))

def rationalize(x, max_denominator=10**6, tol=1e-6):
    # nearest fraction with bounded denominator; None when it lies
    # farther than tol from x
    f = Fraction(x).limit_denominator(max_denominator)
    if abs(float(f) - float(x)) <= tol:
        return f
    return None

def convergents(x, max_denominator=10**6):
    # continued-fraction convergents of x with denominator <= max_denominator
    x = Fraction(x)
    p0, q0, p1, q1 = 0, 1, 1, 0
    while True:
        a = floor(x)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        if q1 > max_denominator:
            return
        yield Fraction(p1, q1)
        frac = x - a
        if frac == 0:
            return
        x = 1 / frac

def simplest_rational(x, max_denominator=10**6, tol=1e-6):
    # first convergent within tol of x
    for f in convergents(x, max_denominator):
        if abs(float(f) - float(x)) <= tol:
            return f
    return None
