"""Shared helpers and hypothesis strategies for the test-suite."""

import itertools
from fractions import Fraction

from hypothesis import strategies as st

from akszcoh.graded import GradedVariable, Polynomial
from akszcoh.qtarget import levi_civita

SU2_F = {(a, b, c): levi_civita([a, b, c]) for a, b, c in itertools.permutations(range(3))}


def monomials(coords, max_degree):
    """All nonzero monomials of degree 1..max_degree in ``coords``."""
    out = []
    for d in range(1, max_degree + 1):
        for combo in itertools.combinations_with_replacement(coords, d):
            p = Polynomial.product(combo)
            if p:
                out.append(p)
    return out


# a small pool with every parity/ghost/form combination that matters for signs
POOL = (
    GradedVariable("u", ghost=0),
    GradedVariable("v", ghost=2),
    GradedVariable("a", ghost=1),
    GradedVariable("b", ghost=-1),
    GradedVariable("t", ghost=0, form_degree=1),
    GradedVariable("w", ghost=-1, form_degree=1),
)

coefficients = st.fractions(min_value=-3, max_value=3, max_denominator=3)


@st.composite
def monomial_polys(draw, pool=POOL, max_len=4):
    vs = draw(st.lists(st.sampled_from(pool), max_size=max_len))
    return Polynomial.product(vs, draw(coefficients))


@st.composite
def polys(draw, pool=POOL, max_terms=4):
    terms = draw(st.lists(monomial_polys(pool), max_size=max_terms))
    out = Polynomial.constant(0)
    for t in terms:
        out = out + t
    return out


nonzero_coefficients = st.sampled_from([Fraction(1), Fraction(-1), Fraction(2), Fraction(1, 2),
                                        Fraction(-3, 2)])


@st.composite
def nonzero_monomials(draw, pool=POOL, max_len=3):
    vs = draw(st.lists(st.sampled_from(pool), max_size=max_len, unique=True))
    exps = [draw(st.integers(1, 2)) if x.parity == 0 else 1 for x in vs]
    return Polynomial.from_factors(list(zip(vs, exps)), draw(nonzero_coefficients))


@st.composite
def homogeneous_polys(draw, pool=POOL, max_terms=3):
    """Nonzero sum of monomials sharing one (ghost, form degree)."""
    out = draw(nonzero_monomials(pool))
    key = (out.ghost, out.form_degree)
    for t in draw(st.lists(nonzero_monomials(pool), max_size=max_terms)):
        if (t.ghost, t.form_degree) == key and out + t:
            out = out + t
    return out


def frac(x):
    return Fraction(x)
