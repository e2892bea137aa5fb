import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isomlab import expspan, fell
from isomlab.certificate import PASS
from isomlab.fell import FellPoint, ModelRep


@st.composite
def fell_points(draw, d=None):
    d = draw(st.integers(1, 3)) if d is None else d
    A = draw(st.sets(st.integers(1, d)))
    lam = {j: draw(st.sampled_from([-1.0, 0.0, 0.5, 2.0])) for j in range(1, d + 1) if j not in A}
    return FellPoint(d, A, lam)


def test_fellpoint_validation():
    with pytest.raises(ValueError):
        FellPoint(2, A=[3], lam={1: 0.0, 2: 0.0})
    with pytest.raises(ValueError):
        FellPoint(2, A=[1])
    with pytest.raises(ValueError):
        FellPoint(1, lam={1: math.inf})


def test_model_rep_is_isometric_and_unitary_off_A():
    rep = ModelRep(FellPoint(3, A=[2], lam={1: 1.5, 3: -0.5}))
    v = rep.unit_vector(1 + 1j)
    assert rep.norm(rep.apply((0.3, 2.0, 1.0), v)) == pytest.approx(1.0)
    moved = rep.apply((1.0, 0.0, 0.0), v)
    assert rep.norm(moved - np.exp(1.5j) * v) <= 1e-15
    assert rep.direction_kind(1) == "unitary" and rep.direction_kind(2) == "pure"


def test_model_apply_for_pure_character():
    rep = ModelRep(FellPoint(2, lam={1: 0.5, 2: -1.0}))
    one = rep.unit_vector()
    out = fell.model_apply(rep, (2.0, 0.5), one)
    assert out.terms[0].coeff == pytest.approx(np.exp(0.5j))
    back = fell.model_apply_adjoint(rep, (0.0, 1.0), one)
    assert back.terms[0].coeff == pytest.approx(np.exp(1j))


def test_model_apply_for_full_shift_is_expspan_shift():
    rep = ModelRep(FellPoint(2, A=[1, 2]))
    v = expspan.exponential((1 + 1j, 0.5), shift=(0.5, 0.0))
    assert (fell.model_apply(rep, (1.0, 2.0), v) - expspan.apply_shift((1.0, 2.0), v)).is_zero()
    assert (fell.model_apply_adjoint(rep, (1.0, 2.0), v) - expspan.apply_adjoint((1.0, 2.0), v)).is_zero()
    with pytest.raises(ValueError):
        fell.model_apply(rep, (1.0, 2.0), expspan.exponential(1.0))


@given(fell_points(), st.floats(0, 3), st.floats(0.2, 2))
def test_model_apply_is_isometric(P, t, z):
    rep = ModelRep(P)
    v = rep.unit_vector(z)
    assert rep.norm(fell.model_apply(rep, t, v)) == pytest.approx(1.0, rel=1e-12)


def test_decay_witness_numbers():
    P, Q = FellPoint(1, A=[1]), FellPoint(1, lam={1: 0.0})
    w = fell.separation_witness(P, Q)
    assert w.case == "decay" and w.around == "P"
    assert w.t == pytest.approx(1.01 * math.log(2))
    assert w.achieved < 0.5
    assert fell.replay_witness(P, Q, w)


def test_reverse_witness_is_centred_on_the_other_point():
    P, Q = FellPoint(2, A=[], lam={1: 0.0, 2: 1.0}), FellPoint(2, A=[2], lam={1: 0.0})
    w = fell.separation_witness(P, Q)
    assert w.around == "Q" and w.k == 2
    assert fell.replay_witness(P, Q, w)


def test_character_witness():
    P, Q = FellPoint(1, lam={1: 1.0}), FellPoint(1, lam={1: 3.0})
    w = fell.separation_witness(P, Q)
    assert w.case == "character"
    assert w.t == pytest.approx(math.pi / 4)
    assert w.achieved == pytest.approx(math.sqrt(2))
    assert fell.replay_witness(P, Q, w)


def test_witness_with_supplied_vector():
    P, Q = FellPoint(1, A=[1]), FellPoint(1, lam={1: 0.0})
    xi = (expspan.exponential(0.5, shift=2.0) + expspan.exponential(3.0))
    xi = (1 / expspan.norm(xi)) * xi
    w = fell.separation_witness(P, Q, xi)
    assert fell.replay_witness(P, Q, w)
    with pytest.raises(ValueError):
        fell.separation_witness(P, Q, 2 * xi)


def test_tampered_witness_fails_replay():
    P, Q = FellPoint(1, A=[1]), FellPoint(1, lam={1: 0.0})
    w = fell.separation_witness(P, Q)
    assert not fell.replay_witness(P, Q, w._replace(t=0.01))


def test_equal_points_have_no_witness():
    P = FellPoint(2, A=[1], lam={2: 0.5})
    assert fell.separation_witness(P, P) is None


@given(fell_points(2), fell_points(2))
def test_distinct_points_are_separated(P, Q):
    w = fell.separation_witness(P, Q)
    if P == Q:
        assert w is None
    else:
        assert fell.replay_witness(P, Q, w)


def test_closure_examples():
    pure, char0 = FellPoint(1, A=[1]), FellPoint(1, lam={1: 0.0})
    # the shift class is dense: every character lies in its closure
    assert fell.closure_member(pure, char0) is True
    assert fell.closure_member(char0, pure) is False
    assert fell.closure_member(FellPoint(2, A=[1], lam={2: 0.0}), FellPoint(2, A=[1], lam={2: 1.0})) is False
    P = FellPoint(2, A=[1], lam={2: 0.5})
    assert fell.closure_member(FellPoint(2, A=[1, 2]), P)
    cert = fell.closure_certificate(FellPoint(2, A=[1, 2]), P)
    assert cert.status == PASS and "asserted" in cert.metadata["relation"]


def test_density_certificate_values():
    cert = fell.density_certificate(3.0, 0.1, 1.0)
    assert cert.status == PASS
    assert cert.delta == pytest.approx(-math.log1p(-0.005) * 0.999)
    assert cert.max_deviation < 0.1 and cert.max_adjoint_deviation < 0.1
    assert cert.formula_error <= 1e-12
    assert cert.to_certificate().passed


def test_density_certificate_without_safety_margin_is_tight():
    cert = fell.density_certificate(0.0, 0.2, 2.0, t_grid=50, safety=1.0)
    assert cert.max_deviation == pytest.approx(0.2, rel=1e-10)


def test_density_certificate_rejects_bad_inputs():
    with pytest.raises(ValueError):
        fell.density_certificate(1.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        fell.density_certificate(1.0, 0.1, 0.0)
