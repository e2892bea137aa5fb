"""Classification coordinates of irreducible doubly commuting representations.

An irreducible doubly commuting isometric representation of ``R_+^d`` is
determined up to equivalence by the set ``A`` of shift directions and a
real character ``lambda`` on the remaining directions.  The model
representation acts on ``L^2(R_+^{|A|})`` by

    V_t f = exp(i sum_{j not in A} t_j lambda_j) S_{t|_A} f.

This module computes separation witnesses between distinct points, the
closure relation between points, and a quantitative certificate that the
one-dimensional shift approximates every character.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple

import numpy as np

from . import expspan
from .certificate import FAIL, PASS, Certificate
from .expspan import ExpVector
from .reps import RepresentationHandle

__all__ = [
    "FellPoint",
    "ModelRep",
    "model_apply",
    "model_apply_adjoint",
    "SeparationWitness",
    "separation_witness",
    "replay_witness",
    "closure_member",
    "closure_certificate",
    "DensityCertificate",
    "density_certificate",
]

#: the approximation threshold used by the separation argument
SEPARATION_RADIUS = 0.5
WITNESS_MARGIN = 1.01
CLOSURE_NOTE = "closure relation is asserted without proof; cross-checked in d=1 by density_certificate"


@dataclass(frozen=True)
class FellPoint:
    """``(A, lambda)`` with ``A`` a subset of ``{1..d}`` and ``lambda`` defined on its complement."""

    d: int
    A: frozenset
    lam: tuple  # sorted (j, lambda_j) pairs over the complement of A

    def __init__(self, d: int, A=(), lam: Mapping[int, float] | None = None):
        d = int(d)
        if d < 1:
            raise ValueError("d must be positive")
        A = frozenset(int(k) for k in A)
        if not A <= set(range(1, d + 1)):
            raise ValueError(f"A={sorted(A)} is not a subset of 1..{d}")
        lam = {int(j): float(x) for j, x in (lam or {}).items()}
        complement = set(range(1, d + 1)) - A
        if set(lam) != complement:
            raise ValueError(f"lambda keys {sorted(lam)} must equal the complement {sorted(complement)}")
        for x in lam.values():
            if not math.isfinite(x):
                raise ValueError("lambda values must be finite")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "lam", tuple(sorted(lam.items())))

    @property
    def complement(self) -> frozenset:
        return frozenset(range(1, self.d + 1)) - self.A

    @property
    def character(self) -> dict:
        return dict(self.lam)

    def to_dict(self):
        return {"d": self.d, "A": sorted(self.A), "lambda": {str(j): x for j, x in self.lam}}


class ModelRep(RepresentationHandle):
    """The model representation of a :class:`FellPoint` on ``ExpVector`` of dimension ``|A|``."""

    def __init__(self, point: FellPoint):
        self.point = point
        self.dim = point.d
        self.axes = sorted(point.A)
        self._lam = point.character

    def _split(self, t):
        t = expspan._nonneg(t, self.dim)
        shift = tuple(t[k - 1] for k in self.axes)
        angle = sum(t[j - 1] * x for j, x in self._lam.items())
        return shift, angle

    def _check(self, v: ExpVector):
        if v.dim != len(self.axes):
            raise ValueError(f"vector has dim {v.dim}, model space has dim {len(self.axes)}")

    def apply(self, t, v):
        self._check(v)
        shift, angle = self._split(t)
        out = expspan.apply_shift(shift, v)
        return cmath.exp(1j * angle) * out if angle else out

    def apply_adjoint(self, t, v):
        self._check(v)
        shift, angle = self._split(t)
        out = expspan.apply_adjoint(shift, v)
        return cmath.exp(-1j * angle) * out if angle else out

    def inner(self, u, v):
        return expspan.inner(u, v)

    def direction_kind(self, i):
        if not 1 <= i <= self.dim:
            raise IndexError(f"direction {i} out of range 1..{self.dim}")
        return "pure" if i in self.point.A else "unitary"

    def unit_vector(self, z=1.0) -> ExpVector:
        """``f_z`` in the model space (the constant 1 when ``A`` is empty)."""
        return expspan.exponential(expspan.half_plane_point(z, len(self.axes)))

    def to_dict(self):
        return {"kind": "model", "point": self.point.to_dict()}


def model_apply(R: ModelRep, t, v: ExpVector) -> ExpVector:
    """``V_t v``: the character phase on ``A^c`` times the shift on the ``A`` coordinates."""
    return R.apply(t, v)


def model_apply_adjoint(R: ModelRep, t, v: ExpVector) -> ExpVector:
    """``V_t^* v``: conjugate phase times the adjoint shift."""
    return R.apply_adjoint(t, v)


class SeparationWitness(NamedTuple):
    """``t e_k`` together with the quantity it bounds.

    ``case`` is ``"decay"`` when direction ``k`` is pure for the point named
    by ``around`` and unitary for the other, so ``||V_{t e_k}^* xi|| < 1/2``
    while the other side keeps norm 1; it is ``"character"`` when both points
    are unitary in ``k`` with different ``lambda_k``, so
    ``|exp(i lambda_k t) - exp(i mu_k t)| >= 1/2``.
    """

    case: str
    k: int
    t: float
    around: str
    achieved: float
    vector: ExpVector | None

    def to_dict(self):
        return {"case": self.case, "k": self.k, "t": self.t, "around": self.around,
                "claimed_bound": SEPARATION_RADIUS, "achieved": self.achieved}


def _decay_time(xi: ExpVector, axis: int) -> float:
    """Smallest ``t`` for which the triangle bound certifies ``||S_{t e_axis}^* xi|| < 1/2``.

    Each term ``c S_s f_z`` contributes at most ``|c| min(1, exp(-Re z_axis (t - s_axis)))``;
    requiring every contribution to be at most ``1 / (2 n)`` gives a closed form.
    """
    n = len(xi.terms)
    need = 0.0
    for term in xi.terms:
        c = abs(term.coeff)
        if 2 * n * c > 1:
            need = max(need, term.shift[axis] + math.log(2 * n * c) / term.decay[axis].real)
    return need


def _decay_witness(P: FellPoint, k: int, xi: ExpVector, around: str) -> SeparationWitness:
    rep = ModelRep(P)
    axis = rep.axes.index(k)
    t = WITNESS_MARGIN * _decay_time(xi, axis)
    achieved = rep.norm(rep.apply_adjoint(rep.step(k, t), xi))
    return SeparationWitness("decay", k, t, around, achieved, xi)


def separation_witness(P: FellPoint, Q: FellPoint, xi: ExpVector | None = None):
    """A finite witness that ``Q`` is not in a basic neighbourhood of ``P`` (or vice versa).

    Returns ``None`` when ``P == Q``.  ``xi`` is a unit vector in the model
    space of ``P`` (default ``f_1``); when the distinguishing direction is
    pure only for ``Q`` the default ``f_1`` of ``Q``'s space is used and the
    witness is marked ``around="Q"``.
    """
    if P.d != Q.d:
        raise ValueError("points live over different dimensions")
    if P == Q:
        return None
    if xi is not None:
        ModelRep(P)._check(xi)
        if abs(expspan.norm(xi) - 1.0) > 1e-12:
            raise ValueError("xi must be a unit vector")
    only_P = sorted(P.A - Q.A)
    if only_P:
        return _decay_witness(P, only_P[0], xi if xi is not None else ModelRep(P).unit_vector(), "P")
    only_Q = sorted(Q.A - P.A)
    if only_Q:
        return _decay_witness(Q, only_Q[0], ModelRep(Q).unit_vector(), "Q")
    lam, mu = P.character, Q.character
    k = min(j for j in lam if lam[j] != mu[j])
    gap = abs(lam[k] - mu[k])
    t = math.pi / (2 * gap)
    achieved = abs(cmath.exp(1j * lam[k] * t) - cmath.exp(1j * mu[k] * t))
    return SeparationWitness("character", k, t, "P", achieved, None)


def replay_witness(P: FellPoint, Q: FellPoint, witness: SeparationWitness, tol: float = 1e-12) -> bool:
    """Recompute the witnessed quantity on both model engines and test it."""
    if witness.case == "decay":
        here, there = (P, Q) if witness.around == "P" else (Q, P)
        rep = ModelRep(here)
        step = rep.step(witness.k, witness.t)
        inside = rep.norm(rep.apply_adjoint(step, witness.vector))
        other = ModelRep(there)
        probe = other.unit_vector()
        outside = other.norm(other.apply_adjoint(step, probe))
        # the unitary side keeps norm 1, so it cannot be within 1/2 of the pure side
        return inside < SEPARATION_RADIUS + tol and abs(outside - 1.0) <= tol
    rep_p, rep_q = ModelRep(P), ModelRep(Q)
    step = rep_p.step(witness.k, witness.t)
    one_p, one_q = rep_p.unit_vector(), rep_q.unit_vector()
    if one_p.dim != one_q.dim:
        return False
    # on a common model space the difference of the two actions is the character gap
    gap = rep_p.norm(rep_p.apply(step, one_p) - rep_q.apply(step, one_q))
    return gap >= SEPARATION_RADIUS - tol


def closure_member(P: FellPoint, Q: FellPoint) -> bool:
    """True iff ``Q`` lies in the closure of ``P``: ``A_Q`` within ``A_P`` and ``lambda_Q = lambda_P`` off ``A_P``."""
    if P.d != Q.d:
        raise ValueError("points live over different dimensions")
    if not Q.A <= P.A:
        return False
    mu = Q.character
    return all(mu[j] == x for j, x in P.lam)


def closure_certificate(P: FellPoint, Q: FellPoint) -> Certificate:
    member = closure_member(P, Q)
    return Certificate(
        "fell_closure", 0.0, 0.0 if member else 1.0, PASS if member else FAIL,
        witnesses=[{"P": P.to_dict(), "Q": Q.to_dict(), "member": member}],
        metadata={"relation": CLOSURE_NOTE},
    )


@dataclass
class DensityCertificate:
    lam: float
    epsilon: float
    a: float
    delta: float
    g: ExpVector
    max_deviation: float
    max_adjoint_deviation: float
    formula_error: float
    grid_size: int
    status: str
    witnesses: list = field(default_factory=list)

    def to_certificate(self) -> Certificate:
        return Certificate(
            "fell_density", self.epsilon, max(self.max_deviation, self.max_adjoint_deviation),
            self.status, witnesses=self.witnesses,
            metadata={"lambda": self.lam, "a": self.a, "delta": self.delta,
                      "formula_error": self.formula_error, "grid_size": self.grid_size,
                      "relation": CLOSURE_NOTE},
        )


def density_certificate(lam: float, epsilon: float, a: float, t_grid: int = 1000, *,
                        safety: float = 0.999, formula_tol: float = 1e-12) -> DensityCertificate:
    """Certify that ``g = f_{delta + i lambda}`` is an ``epsilon``-approximate eigenvector.

    On ``t`` in ``[0, a]`` both ``||exp(i lambda t) g - S_t g||`` and
    ``||exp(-i lambda t) g - S_t^* g||`` must stay below ``epsilon``.  The
    first squared equals ``2 (1 - exp(-delta t))``, so
    ``delta = -log(1 - epsilon^2 / 2) / a`` times ``safety`` suffices.
    Deviations are evaluated with exact inner products and checked against
    that closed form to ``formula_tol``.
    """
    lam, epsilon, a = float(lam), float(epsilon), float(a)
    if not 0 < epsilon < math.sqrt(2):
        raise ValueError("epsilon must lie in (0, sqrt(2)); the bound is vacuous otherwise")
    if not a > 0:
        raise ValueError("a must be positive")
    if t_grid < 1:
        raise ValueError("t_grid must be at least 1")
    delta = -math.log1p(-epsilon**2 / 2) / a * safety
    g = expspan.exponential(complex(delta, lam))
    dev = adj = formula = 0.0
    worst = []
    for t in np.linspace(0.0, a, t_grid):
        t = float(t)
        forward = expspan.norm(cmath.exp(1j * lam * t) * g - expspan.apply_shift(t, g))
        backward = expspan.norm(cmath.exp(-1j * lam * t) * g - expspan.apply_adjoint(t, g))
        formula = max(formula, abs(forward**2 + 2 * math.expm1(-delta * t)))
        if forward > dev:
            worst = [{"t": t, "deviation": forward}]
        dev, adj = max(dev, forward), max(adj, backward)
    ok = dev < epsilon and adj < epsilon and formula <= formula_tol
    return DensityCertificate(lam, epsilon, a, delta, g, dev, adj, formula, t_grid,
                              PASS if ok else FAIL, worst)
