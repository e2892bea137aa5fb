"""Frozen worked examples.

Values marked "oracle" are checked against an independent computation
(quadrature, mpmath or a direct sum); the rest follow from definitions.
"""
import cmath
import json
import math

import mpmath
import numpy as np
import pytest

from isomlab import cli, cooper, discrete, expspan, fell, gauss, wold
from isomlab.discrete import BasisIsometry, Phase, Shift, SparseVector, delta
from isomlab.expspan import exponential
from isomlab.fell import FellPoint, ModelRep
from isomlab.gauss import BoundarySequence, GaussianCylinderVector
from isomlab.reps import DiscreteRep, ShiftRep

from oracles import gaussian_half_line, normal_isf_complement_mpmath, shift_kernel

E1 = math.exp(-1)


# -- shifted exponentials -----------------------------------------------------

def test_unit_vector_norm():
    assert expspan.inner(exponential(1.0), exponential(1.0)) == pytest.approx(1.0, abs=1e-15)


def test_inner_with_unit_shift_oracle():
    got = expspan.inner(exponential(1.0), exponential(1.0, shift=1.0))
    assert got == pytest.approx(shift_kernel([0.0], [1 + 0j], [1.0], [1 + 0j]), rel=1e-12)
    assert got == pytest.approx(0.3678794, abs=1e-7)


def test_inner_of_conjugate_decays_oracle():
    got = expspan.inner(exponential(1 + 1j), exponential(1 - 1j))
    assert got == pytest.approx(shift_kernel([0.0], [1 + 1j], [0.0], [1 - 1j]), rel=1e-12)
    assert got == pytest.approx((1 + 1j) / 2, rel=1e-15)


def test_shift_by_zero_and_by_one():
    v = exponential(2 + 1j, shift=0.3) - 0.5 * exponential(1.0)
    assert (expspan.apply_shift(0, v) - v).is_zero()
    (term,) = expspan.apply_shift(1, exponential(1.0)).terms
    assert term == expspan.Term(1 + 0j, (1.0,), (1 + 0j,))


def test_adjoint_examples():
    assert (expspan.apply_adjoint(1, exponential(1.0)) - E1 * exponential(1.0)).is_zero()
    assert (expspan.apply_adjoint(1, exponential(1.0, shift=2.0)) - exponential(1.0, shift=1.0)).is_zero()
    for z, t in [(0.7 + 2j, 1.3), (2.0, 0.1)]:
        assert expspan.norm(expspan.apply_adjoint(t, exponential(z))) == pytest.approx(math.exp(-z.real * t), rel=1e-14)


def test_range_projection_examples():
    v = exponential(1 + 1j, shift=0.5)
    assert (expspan.range_projection(0, v) - v).is_zero()
    assert (expspan.range_projection(1, exponential(1.0)) - E1 * exponential(1.0, shift=1.0)).is_zero()


def test_range_projection_is_self_adjoint():
    rng = np.random.default_rng(0)
    for _ in range(20):
        u = exponential(complex(rng.uniform(0.2, 2), rng.normal()), shift=rng.uniform(0, 2))
        v = exponential(complex(rng.uniform(0.2, 2), rng.normal()), shift=rng.uniform(0, 2))
        t = rng.uniform(0, 3)
        lhs = expspan.inner(expspan.range_projection(t, u), v)
        rhs = expspan.inner(u, expspan.range_projection(t, v))
        assert abs(lhs - rhs) <= 1e-14


def test_gram_examples():
    assert np.allclose(expspan.gram([exponential(1.0)]), [[1.0]], atol=1e-15)
    G = expspan.gram([exponential(1.0), exponential(1.0, shift=1.0)])
    assert np.allclose(G, [[1, E1], [E1, 1]], atol=1e-15)


def test_span_projection_examples():
    assert expspan.shift_span_project(exponential(0.8), 0.8, [0.0]).residual <= 1e-7
    coarse = expspan.shift_span_project(exponential(1.0), 2.0, [0.0]).residual
    fine = expspan.shift_span_project(exponential(1.0), 2.0, np.arange(0, 5.01, 0.5)).residual
    # a single translate leaves 1 - |<f_2, f_1>|^2 = 1 - 8/9
    assert coarse == pytest.approx(1 / 3, rel=1e-12)
    assert fine < coarse < 1.0


# -- discrete isometries ------------------------------------------------------

def test_discrete_apply_examples():
    V = BasisIsometry([Shift()])
    assert V.apply(1, delta(0)) == delta(1)
    U = BasisIsometry([Phase(math.pi)])
    assert U.apply(1, delta(3)).entries[(3,)] == pytest.approx(-1)
    assert V.apply_adjoint(1, delta(0)).is_zero()
    assert V.apply_adjoint(1, delta(5)) == delta(4)


def test_adjoint_pairing_is_exact_on_random_pairs():
    rng = np.random.default_rng(1)
    V = BasisIsometry([Shift(), Shift(2)])
    for _ in range(100):
        u = SparseVector(2, {tuple(rng.integers(0, 4, 2)): float(rng.integers(-3, 4)) for _ in range(3)})
        v = SparseVector(2, {tuple(rng.integers(0, 4, 2)): float(rng.integers(-3, 4)) for _ in range(3)})
        for i in (1, 2):
            assert V.apply(i, u).inner(v) == u.inner(V.apply_adjoint(i, v))


def test_joint_kernel_examples():
    assert discrete.kernel_of_adjoints(BasisIsometry([Shift()]), box=5) == [delta(0)]
    assert discrete.kernel_of_adjoints(BasisIsometry([Shift(), Shift()]), box=5) == [delta(0, 0)]
    assert discrete.kernel_of_adjoints(BasisIsometry([Phase(0.4)]), box=5) == []


def test_truncated_eigenvector_examples():
    V = BasisIsometry([Shift()])
    eta, bound = discrete.build_eigenvector(V, delta(0), 1.0, 10)
    direct = discrete.eigen_residual(V, eta, 1.0, (1,))
    assert direct == pytest.approx(math.exp(-11), rel=1e-12)
    assert bound == pytest.approx(math.exp(-11), rel=1e-12)
    far, _ = discrete.build_eigenvector(V, delta(0), 50.0, 10)
    assert (far - delta(0)).norm() <= 1e-21
    _, next_bound = discrete.build_eigenvector(V, delta(0), 1.0, 11)
    assert next_bound / bound == pytest.approx(E1, rel=1e-12)


# -- Cooper machinery ---------------------------------------------------------

def test_normal_order_examples():
    assert cooper.normal_order((2, 0), (0, 3)) == ((0, 3), (2, 0))
    assert cooper.normal_order((1.5, 2.0), (1.5, 2.0)) == ((0.0, 0.0), (0.0, 0.0))


def test_cooper_gram_examples():
    pairs = [((0.0,), (0.5,)), ((1.0,), (0.25,)), ((2.0,), (2.0,))]
    taut = cooper.verify_cooper_gram(ShiftRep(1), exponential(0.6 + 1j), 0.6 + 1j, pairs)
    assert taut.achieved == 0.0
    model = ModelRep(FellPoint(1, A=[1]))
    cert = cooper.verify_cooper_gram(model, model.unit_vector(2 - 1j), 2 - 1j, pairs)
    assert cert.passed and cert.achieved <= 1e-12
    iso = BasisIsometry([Shift()])
    eta, _ = discrete.build_eigenvector(iso, delta(0), 1.0, 20)
    grid = [((s,), (t,)) for s in range(3) for t in range(3)]
    assert cooper.verify_cooper_gram(DiscreteRep(iso), eta, 1.0, grid).achieved <= 10 * math.exp(-21)


def test_wandering_vector_examples():
    iso = BasisIsometry([Shift()])
    eta, _ = discrete.build_eigenvector(iso, delta(0), 1.0, 30)
    w = cooper.wandering_from_eigen(DiscreteRep(iso), eta, 1.0)
    assert (w.xi - delta(0)).norm() <= math.exp(-30)
    # a wandering vector with a fast-decaying eigenvalue is returned nearly unchanged
    w = cooper.wandering_from_eigen(DiscreteRep(iso), delta(0), 40.0)
    assert (w.xi - delta(0)).norm() == pytest.approx(math.exp(-40), rel=1e-12)
    iso2 = BasisIsometry([Shift(), Shift()])
    eta2, _ = discrete.build_eigenvector(iso2, delta(0, 0), (1.0, 1.0), 30)
    w2 = cooper.wandering_from_eigen(DiscreteRep(iso2), eta2, (1.0, 1.0))
    assert (w2.xi - delta(0, 0)).norm() <= 2 * math.exp(-30)


def test_periodic_mode_examples():
    modes = cooper.periodic_eigenmodes(cooper.PeriodicSemigroup.diagonal([1, 2]), 2, quad_points=8)
    assert np.max(np.abs(modes.projections[(0,)])) <= 1e-10
    ident = cooper.periodic_eigenmodes(cooper.PeriodicSemigroup([np.zeros((3, 3))]), 2)
    assert np.allclose(ident.projections[(0,)], np.eye(3), atol=1e-12)
    assert all(np.max(np.abs(P)) <= 1e-12 for n, P in ident.projections.items() if n != (0,))
    rng = np.random.default_rng(8)
    Q = rng.normal(size=(5, 5))
    T = cooper.PeriodicSemigroup.conjugated(Q, rng.integers(-3, 4, size=5))
    assert cooper.periodic_eigenmodes(T, 3).total_rank == 5


# -- Wold ---------------------------------------------------------------------

def test_limit_projection_examples():
    lim = wold.limit_projection(ShiftRep(1), 1, exponential(1.0), exact=False, tol=1e-12)
    assert lim.status == wold.CONVERGED and expspan.norm(lim.value) <= 1e-12
    U = DiscreteRep(BasisIsometry([Phase(1.0)]))
    assert wold.limit_projection(U, 1, delta(2), exact=False).value == delta(2)
    V = ModelRep(FellPoint(2, A=[1], lam={2: 0.3}))
    v = V.unit_vector()
    assert V.norm(wold.limit_projection(V, 1, v, exact=False).value) <= 1e-12
    assert (wold.limit_projection(V, 2, v, exact=False).value - v).is_zero()


def test_wold_examples():
    res = wold.wold_decompose(ShiftRep(1), exponential(2.0, shift=1.0))
    assert (res.component(1) - exponential(2.0, shift=1.0)).is_zero() and res.component().is_zero()
    U = DiscreteRep(BasisIsometry([Phase(2.0)]))
    assert wold.wold_decompose(U, delta(4)).component() == delta(4)


def test_wandering_reconstruct_examples():
    V = BasisIsometry([Shift()])
    cert = wold.wandering_reconstruct(V, delta(3), 3)
    assert cert.achieved == 0.0
    assert [w["n"] for w in cert.witnesses] == [[3]]
    cert = wold.wandering_reconstruct(BasisIsometry([Shift(), Shift()]), delta(1, 2) + delta(0, 0), 2)
    assert cert.achieved == 0.0 and len(cert.witnesses) == 2


# -- Fell ---------------------------------------------------------------------

def test_separation_examples():
    w = fell.separation_witness(FellPoint(1, A=[1]), FellPoint(1, lam={1: 0.0}))
    assert w.t == pytest.approx(0.70, abs=0.01)
    assert w.achieved == pytest.approx(math.exp(-w.t), rel=1e-14)
    w = fell.separation_witness(FellPoint(1, lam={1: 0.0}), FellPoint(1, lam={1: math.pi}))
    assert w.t == pytest.approx(0.5)
    assert w.achieved == pytest.approx(math.sqrt(2), rel=1e-14)
    P = FellPoint(2, A=[2], lam={1: 1.0})
    assert fell.separation_witness(P, P) is None


def test_closure_examples():
    assert fell.closure_member(FellPoint(2, A=[1, 2]), FellPoint(2, A=[1], lam={2: 5.0}))
    P = FellPoint(2, A=[1], lam={2: 5.0})
    assert fell.closure_member(P, P)
    assert not fell.closure_member(FellPoint(1, lam={1: 0.0}), FellPoint(1, A=[1]))


def test_density_examples():
    cert = fell.density_certificate(3.0, 0.1, 1.0)
    assert cert.delta <= -math.log(0.995)
    assert cert.max_deviation < 0.1
    g = cert.g
    assert expspan.norm(g - expspan.apply_shift(0.0, g)) == 0.0
    at_a = expspan.norm(cmath.exp(3j) * g - expspan.apply_shift(1.0, g))
    assert abs(at_a**2 - 2 * (1 - math.exp(-cert.delta))) <= 1e-12


# -- Gaussian boxes -----------------------------------------------------------

def test_geometric_sequence_examples():
    with mpmath.workdps(30):
        assert float(mpmath.exp(-mpmath.mpf(1) / 6)) == pytest.approx(0.8464817, abs=1e-7)
    a = BoundarySequence.geometric(-0.5)
    assert gauss.normal_sf(a.value(1)) == pytest.approx(math.exp(-1 / 8), rel=1e-15)
    assert math.exp(-1 / 8) == pytest.approx(0.88250, abs=1e-5)
    # high-precision quantile oracle
    assert a.value(1) == pytest.approx(normal_isf_complement_mpmath(-math.expm1(-1 / 8)), rel=1e-14)
    assert a.value(1) == pytest.approx(-1.18756, abs=1e-5)
    vals = [BoundarySequence.geometric(t).value(1) for t in (-0.5, -0.1, -0.01, -0.001)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_membership_examples():
    assert gauss.x_membership(BoundarySequence.geometric(-0.5)).achieved == pytest.approx(math.exp(-1 / 6), abs=1e-10)
    zeros = gauss.x_membership(BoundarySequence.constant(0.0), tol=1e-10, n_max=60)
    assert not zeros.passed
    assert zeros.metadata["crossing_n"] == 34  # first m with 2^-m < 1e-10
    finite = gauss.x_membership(BoundarySequence([0.0, -1.0, None, 0.0]))
    assert finite.achieved == pytest.approx(0.25 * gauss.normal_sf(-1.0), rel=1e-15)


def test_cylinder_integral_examples():
    assert gauss.half_line_integral(0.0, 0.0) == pytest.approx(0.5, rel=1e-15)
    value = gauss.half_line_integral(1.0, 0.0).real
    assert value == pytest.approx(gaussian_half_line(1 + 0j, 0.0).real, rel=1e-12)
    assert value == pytest.approx(1.38714, abs=1e-5)
    a = BoundarySequence.geometric(-0.5)
    one = GaussianCylinderVector.constant()
    assert gauss.cyl_inner(one, one, a).real == pytest.approx(gauss.x_membership(a).achieved, rel=1e-12)


def test_translation_examples():
    a = BoundarySequence.geometric(-0.5)
    v = GaussianCylinderVector.product({1: (0.3j, -0.5), 2: (0.1, -1.0)}, 1 + 1j)
    assert (gauss.vA_apply(a, {}, v) - v).terms == ()
    assert (gauss.vA_apply(a, [0.0, 0.0], v) - v).terms == ()
    norm = math.sqrt(gauss.cyl_inner(v, v, a).real)
    for x in ({1: 0.7}, {2: 3.0}, {1: 1.0, 2: 0.2}):
        w = gauss.vA_apply(a, x, v)
        assert math.sqrt(gauss.cyl_inner(w, w, a).real) == pytest.approx(norm, rel=1e-10)
    decay = [math.sqrt(max(gauss.cyl_inner(w, w, a).real, 0.0))
             for w in (gauss.vA_adjoint(a, {1: t}, v) for t in (1.0, 4.0, 16.0))]
    assert decay[0] > decay[1] > decay[2] and decay[2] < 1e-10 * norm


def test_kakutani_examples():
    a = BoundarySequence.geometric(-0.5)
    same = gauss.kakutani_certify(a, a)
    assert same.verdict == gauss.EQUIVALENT and same.estimate == 1.0
    l2 = gauss.kakutani_certify(a, BoundarySequence.shifted(a, 1.0, 1.0))
    tail = 1.0 / l2.depth
    assert l2.c2_partial[-1] <= math.pi**2 / 6 <= l2.c2_partial[-1] + tail
    slow = gauss.kakutani_certify(a, BoundarySequence.shifted(a, 1.0, 0.5), tol=1e-6)
    assert slow.verdict == gauss.SINGULAR and slow.crossing_n > 1e47


def test_intertwiner_examples():
    a = BoundarySequence.geometric(-0.5)
    vs = cli.random_cylinders(np.random.default_rng(0), 5, 2)
    same = gauss.finite_restriction_intertwiner(a, a, 2, [[0.5, 0.5]], vs)
    assert same.achieved <= 1e-15
    vs1 = cli.random_cylinders(np.random.default_rng(1), 5, 1)
    cert = gauss.finite_restriction_intertwiner(BoundarySequence([-1.0]), BoundarySequence([-2.0]), 1,
                                                [0.0, 0.5, 1.0], vs1)
    assert cert.achieved <= 1e-10
    assert cert.metadata["translation"] == [-1.0]


def test_wold_failure_examples():
    assert list(gauss.wold_failure_masses([0.5, 0.5], 1).masses) == [0.5, 0.5]
    assert gauss.wold_failure_masses([0.5, 0.5], 20).max_mass == pytest.approx(9.5367e-7, rel=1e-4)
    assert gauss.wold_failure_masses([0.9, 0.1], 10).max_mass == pytest.approx(0.34868, rel=1e-5)


# -- command line -------------------------------------------------------------

def test_cli_examples(tmp_path, capsys):
    assert cli.main(["fell", "density", "--lambda", "3", "--eps", "0.1", "--a", "1"]) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["certificate"]["status"] == "PASS"
    assert body["delta"] == pytest.approx(5.01e-3, abs=5e-6)

    rep, vec = tmp_path / "shift1d.json", tmp_path / "f1.json"
    rep.write_text('{"kind": "shift", "dim": 1}')
    vec.write_text('{"dim": 1, "terms": [{"coeff": 1, "shift": [0], "decay": [1]}]}')
    assert cli.main(["wold", "--rep", str(rep), "--vector", str(vec)]) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["components"]["1"]["norm"] == pytest.approx(1.0)
    assert body["components"]["none"]["norm"] == 0.0

    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "shift", ')
    assert cli.main(["wold", "--rep", str(bad), "--vector", str(vec)]) == 2
