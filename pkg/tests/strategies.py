"""Hypothesis strategies shared by the property tests."""
from hypothesis import strategies as st

from isomlab import expspan

# dyadic shifts keep sums of shifts exact in binary floating point
dyadic = st.integers(0, 64).map(lambda k: k / 16)
decay = st.builds(complex, st.floats(0.2, 3.0), st.floats(-4.0, 4.0))
coeff = st.builds(complex, st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))


@st.composite
def points(draw, dim):
    return tuple(draw(dyadic) for _ in range(dim))


@st.composite
def expvectors(draw, dim, max_terms=4):
    n = draw(st.integers(1, max_terms))
    triples = [(draw(coeff), draw(points(dim)), tuple(draw(decay) for _ in range(dim)))
               for _ in range(n)]
    return expspan.ExpVector.from_terms(dim, triples)
