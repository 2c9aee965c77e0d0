"""Hypothesis strategies for random polynomials and operators."""

from fractions import Fraction

from hypothesis import strategies as st

from laxforge.psdo import PsdOp

JETS = [("u", 0), ("u", 1), ("v", 0), ("v", 1), ("v", 2), ("w", 0), ("w", 1)]


@st.composite
def monomials(draw, ring, laurent=True):
    coeff = draw(st.integers(-3, 3).filter(bool))
    if draw(st.booleans()):
        coeff = Fraction(coeff, draw(st.integers(1, 3)))
    term = ring.const(coeff)
    for name, order in draw(st.lists(st.sampled_from(JETS), max_size=3)):
        term = term * ring.jet(name, order)
    if laurent and draw(st.integers(0, 4)) == 0:
        term = term * ring.jet("u") ** -1
    return term


@st.composite
def polys(draw, ring, max_terms=3, laurent=True):
    total = ring.zero
    for m in draw(st.lists(monomials(ring, laurent), max_size=max_terms)):
        total = total + m
    return total


@st.composite
def operators(draw, ring, top=2, low=0, max_terms=2):
    """Exact operator with orders in [low, top]."""
    coeffs = {}
    for order in range(top, low - 1, -1):
        coeffs[order] = draw(polys(ring, max_terms))
    return PsdOp(ring, coeffs)
