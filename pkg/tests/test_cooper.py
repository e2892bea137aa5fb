import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isomlab import cooper, discrete, expspan
from isomlab.certificate import FAILED_PRECONDITION, PASS
from isomlab.cooper import AliasingError, PeriodicSemigroup
from isomlab.discrete import BasisIsometry, Shift, delta
from isomlab.reps import DiscreteRep, ShiftRep

from strategies import dyadic


@given(st.lists(dyadic, min_size=1, max_size=4).flatmap(
    lambda s: st.tuples(st.just(tuple(s)), st.lists(dyadic, min_size=len(s), max_size=len(s)))))
def test_normal_order_splits_the_difference(case):
    s, t = case
    p, q = cooper.normal_order(s, t)
    for si, ti, pi, qi in zip(s, t, p, q):
        assert pi - qi == ti - si
        assert min(pi, qi) == 0 and pi >= 0 and qi >= 0


def test_normal_order_examples():
    assert cooper.normal_order((1, 3), (2, 1)) == ((1, 0), (0, 2))
    with pytest.raises(ValueError):
        cooper.normal_order((1,), (1, 2))


def test_cooper_gram_on_shift_engine_is_exact():
    V = ShiftRep(2)
    z = (1 + 1j, 0.5)
    xi = 3 * expspan.exponential(z)
    pairs = [((0, 0), (1, 2)), ((0.5, 1), (0.25, 3)), ((2, 2), (2, 2))]
    cert = cooper.verify_cooper_gram(V, xi, z, pairs, bound=1e-12)
    assert cert.status == PASS and cert.achieved <= 1e-12


def test_cooper_gram_on_truncated_discrete_eigenvector():
    iso = BasisIsometry([Shift()])
    eta, _ = discrete.build_eigenvector(iso, delta(0), 1.0, 20)
    pairs = [((s,), (t,)) for s in range(4) for t in range(4)]
    cert = cooper.verify_cooper_gram(DiscreteRep(iso), eta, 1.0, pairs, bound=10 * math.exp(-21))
    assert cert.status == PASS


def test_cooper_gram_reports_failed_precondition_with_worst_point():
    V = ShiftRep(1)
    xi = expspan.exponential(1.0, shift=1.0)
    cert = cooper.verify_cooper_gram(V, xi, 1.0, [((0,), (2,))])
    assert cert.status == FAILED_PRECONDITION
    assert cert.witnesses[0]["t"] in ([1.0], [2.0])


def test_wandering_vector_from_eigenvector_lies_in_joint_kernel():
    iso = BasisIsometry([Shift(), Shift()])
    z = (1.0, 0.7)
    eta, _ = discrete.build_eigenvector(iso, delta(0, 0), z, 30)
    w = cooper.wandering_from_eigen(DiscreteRep(iso), eta, z)
    assert w.residual < 1e-8
    assert abs(w.xi.entries[(0, 0)] - 1) < 1e-8


def test_wandering_from_eigen_on_shift_engine_gives_multiple_of_boundary_vector():
    V = ShiftRep(1)
    w = cooper.wandering_from_eigen(V, expspan.exponential(2.0), 2.0)
    assert w.residual < 1e-14
    with pytest.raises(ValueError):
        cooper.wandering_from_eigen(V, expspan.exponential(2.0, shift=1), 2.0)


def test_periodic_diagonal_modes_are_exact():
    T = PeriodicSemigroup.diagonal([1, 2])
    modes = cooper.periodic_eigenmodes(T, (( -3, 3),), quad_points=8)
    assert np.allclose(modes.projections[(1,)], np.diag([1, 0]), atol=1e-12)
    assert np.allclose(modes.projections[(2,)], np.diag([0, 1]), atol=1e-12)
    assert modes.complete and modes.ranks[(0,)] == 0


def test_periodic_modes_in_two_parameters():
    rng = np.random.default_rng(4)
    Q = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    spectra = [[0, 1], [1, -1], [2, 0], [1, -1]]
    modes = cooper.periodic_eigenmodes(PeriodicSemigroup.conjugated(Q, spectra), 2)
    assert modes.complete
    assert modes.ranks[(1, -1)] == 2


def test_aliasing_is_detected_with_a_larger_resolution_suggested():
    T = PeriodicSemigroup.diagonal([1, 9])
    with pytest.raises(AliasingError) as info:
        cooper.periodic_eigenmodes(T, 1, quad_points=8)
    assert info.value.suggested_resolution == 16
    assert cooper.periodic_eigenmodes(T, 1, quad_points=32).ranks[(1,)] == 1


def test_periodic_semigroup_rejects_noncommuting_or_nonintegral():
    with pytest.raises(ValueError):
        PeriodicSemigroup([np.diag([0.5, 1])])
    with pytest.raises(ValueError):
        PeriodicSemigroup([np.diag([1, 2]), np.array([[0, 1], [1, 0]])])


def test_periodic_semigroup_is_periodic():
    T = PeriodicSemigroup.conjugated([[1, 1], [0, 1]], [[2, 1], [-1, 0]])
    assert np.allclose(T.at((1.0, 0.0)), np.eye(2), atol=1e-10)
    assert np.allclose(T.at((0.3, 0.2)) @ T.at((0.1, 0.5)), T.at((0.4, 0.7)), atol=1e-10)
