"""Wold decomposition of a doubly commuting tuple of isometric semigroups.

For each direction ``i`` the range projections ``V_t^{(i)} V_t^{(i)*}``
decrease to a projection ``P_i`` (the unitary part of direction ``i``).
The ``P_i`` commute, and

    P_alpha = prod_{i in alpha} (I - P_i) prod_{j not in alpha} P_j

splits the space into ``2^d`` reducing subspaces; on the ``alpha`` piece
direction ``i`` is pure when ``i in alpha`` and unitary otherwise.  All
limits are taken vector by vector.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

from .certificate import FAIL, PASS, Certificate
from .discrete import BasisIsometry, Shift, SparseVector, kernel_of_adjoints
from .reps import DiscreteRep, RepresentationHandle

__all__ = [
    "EXACT",
    "CONVERGED",
    "NONCONVERGED",
    "LimitProjection",
    "limit_projection",
    "WoldResult",
    "wold_decompose",
    "wandering_reconstruct",
]

EXACT = "EXACT"
CONVERGED = "CONVERGED"
NONCONVERGED = "NONCONVERGED"
MAX_DIRECTIONS = 16


class LimitProjection(NamedTuple):
    value: object
    status: str
    horizon_used: float
    change: float


def limit_projection(V: RepresentationHandle, i: int, v, horizon: float = 2.0**12, tol: float = 1e-10,
                     *, exact: bool = True, patience: int = 2) -> LimitProjection:
    """``P_i v = lim_t V_t^{(i)} V_t^{(i)*} v``.

    With ``exact`` set and a handle that knows direction ``i`` is pure or
    unitary the closed-form limit is returned.  Otherwise ``t`` doubles from
    1 until ``patience`` consecutive iterates change by less than ``tol``.
    On lattices the range projection can stall before dropping, so a calm
    iterate is also compared with the one at ``horizon`` and doubling
    resumes if they differ.  Reaching ``horizon`` first yields
    ``NONCONVERGED`` with the last iterate.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if exact:
        value = V.exact_limit_projection(i, v)
        if value is not None:
            return LimitProjection(value, EXACT, 0.0, 0.0)
    t = 1.0
    prev = V.range_projection(i, t, v)
    far = None
    calm = 0
    change = float("inf")
    while 2 * t <= horizon:
        t *= 2
        cur = V.range_projection(i, t, v)
        change = V.norm(cur - prev)
        prev = cur
        calm = calm + 1 if change < tol else 0
        if calm >= patience:
            if far is None:
                far = V.range_projection(i, horizon, v)
            if V.norm(far - cur) < tol:
                return LimitProjection(cur, CONVERGED, t, change)
            calm = 0
    return LimitProjection(prev, NONCONVERGED, t, change)


@dataclass
class WoldResult:
    """Components ``P_alpha v`` keyed by ``alpha``, a frozenset of 1-based directions."""

    components: dict
    classification: dict
    checks: dict
    diagnostics: dict
    status: str
    tol: float
    witnesses: list = field(default_factory=list)

    def component(self, *alpha) -> object:
        return self.components[frozenset(alpha)]

    def certificate(self) -> Certificate:
        worst = max((v for v in self.checks.values()), default=0.0)
        status = self.status if self.status != NONCONVERGED else FAIL
        return Certificate("wold", self.tol, worst, status, witnesses=self.witnesses,
                           metadata={"checks": dict(self.checks), "limits": dict(self.diagnostics)})


def _split(V, v, d, tol, horizon, exact, record):
    """All ``P_alpha v`` by branching on one direction at a time."""
    pieces = {frozenset(): v}
    for i in range(1, d + 1):
        nxt = {}
        for alpha, w in pieces.items():
            lim = limit_projection(V, i, w, horizon, tol, exact=exact)
            record.append((i, lim))
            nxt[alpha] = lim.value
            nxt[alpha | {i}] = w - lim.value
        pieces = nxt
    return pieces


def _is_pure(V, i, w, tol, horizon):
    """Whether ``||V_t^{(i)*} w||`` drops below ``tol`` for some ``t <= horizon``."""
    t = 1.0
    while t <= horizon:
        if V.norm(V.apply_adjoint(V.step(i, t), w)) <= tol:
            return True, t
        t *= 2
    return False, t / 2


def _is_unitary(V, i, w, tol, samples=(1.0, 2.0, 8.0)):
    return max(V.norm(V.range_projection(i, t, w) - w) for t in samples) <= tol


def wold_decompose(V: RepresentationHandle, v, *, tol: float = 1e-10, horizon: float = 2.0**12,
                   exact: bool = True, max_directions: int = MAX_DIRECTIONS,
                   check_reducing: bool = True) -> WoldResult:
    """Split ``v`` into its ``2^d`` Wold components and verify the decomposition.

    Checks recorded in ``checks`` (all must be ``<= tol`` for ``PASS``):
    ``resolution`` (components sum to ``v``), ``orthogonality`` (largest
    pairwise inner product), ``commutation`` (``P_i P_j v`` against
    ``P_j P_i v``) and ``reducing`` (``V_{e_i} P_alpha v`` against
    ``P_alpha V_{e_i} v``).  Per component, each direction is tested to be
    pure or unitary as its ``alpha`` predicts; zero components pass trivially.
    """
    d = V.dim
    if d > max_directions:
        raise ValueError(f"d={d} exceeds the cap of {max_directions} directions")
    record = []
    components = _split(V, v, d, tol, horizon, exact, record)
    diagnostics = {}
    for i, lim in record:
        entry = diagnostics.setdefault(str(i), {"status": EXACT, "horizon_used": 0.0})
        if lim.status != EXACT and entry["status"] != NONCONVERGED:
            entry["status"] = lim.status
        entry["horizon_used"] = max(entry["horizon_used"], lim.horizon_used)
    if any(lim.status == NONCONVERGED for _, lim in record):
        return WoldResult(components, {}, {}, diagnostics, NONCONVERGED, tol)

    scale = max(V.norm(v), 1.0)
    total = 0 * v
    for w in components.values():
        total = total + w
    checks = {"resolution": V.norm(total - v) / scale}
    alphas = list(components)
    checks["orthogonality"] = max(
        (abs(V.inner(components[a], components[b])) for a, b in itertools.combinations(alphas, 2)),
        default=0.0) / scale**2

    comm = 0.0
    for i, j in itertools.combinations(range(1, d + 1), 2):
        pij = limit_projection(V, i, limit_projection(V, j, v, horizon, tol, exact=exact).value,
                               horizon, tol, exact=exact).value
        pji = limit_projection(V, j, limit_projection(V, i, v, horizon, tol, exact=exact).value,
                               horizon, tol, exact=exact).value
        comm = max(comm, V.norm(pij - pji))
    checks["commutation"] = comm / scale

    if check_reducing:
        red = 0.0
        for i in range(1, d + 1):
            step = V.step(i, 1)
            moved = _split(V, V.apply(step, v), d, tol, horizon, exact, [])
            for alpha, w in components.items():
                red = max(red, V.norm(V.apply(step, w) - moved[alpha]))
        checks["reducing"] = red / scale

    classification, witnesses = {}, []
    ok = all(x <= tol for x in checks.values())
    for alpha, w in components.items():
        label = {}
        if V.norm(w) > tol * scale:
            for i in range(1, d + 1):
                if i in alpha:
                    good, t = _is_pure(V, i, w, tol * scale, horizon)
                    label[str(i)] = "pure" if good else "not pure"
                else:
                    good = _is_unitary(V, i, w, tol * scale)
                    label[str(i)] = "unitary" if good else "not unitary"
                if not good:
                    ok = False
                    witnesses.append({"alpha": sorted(alpha), "direction": i})
        classification[alpha] = label
    return WoldResult(components, classification, checks, diagnostics,
                      PASS if ok else FAIL, tol, witnesses)


def wandering_reconstruct(V, v: SparseVector, N: int, *, tol: float = 1e-12) -> Certificate:
    """Expand ``v`` over ``V_n w`` with ``n`` in the box ``[0, N]^d`` and ``w`` wandering.

    Requires every generator to be a built-in :class:`Shift`, for which the
    expansion is exact at finite box.  The certificate reports the residual
    ``||v - sum <V_n w, v> V_n w||`` and lists the nonzero coefficients.
    """
    iso = V.isometry if isinstance(V, DiscreteRep) else V
    if not isinstance(iso, BasisIsometry):
        raise TypeError("wandering_reconstruct needs a BasisIsometry")
    if not all(isinstance(g, Shift) for g in iso.generators):
        raise ValueError("all generators must be pure shifts")
    if v.dim != iso.dim:
        raise ValueError(f"vector has dim {v.dim}, isometry has dim {iso.dim}")
    if N < 0:
        raise ValueError("box N must be non-negative")
    if v.support_bound() > N:
        raise ValueError(f"vector support reaches {v.support_bound()}, beyond box N={N}")
    wandering = kernel_of_adjoints(iso, box=max(g.step for g in iso.generators) - 1)
    recon = SparseVector.zero(iso.dim)
    coefficients = []
    for n in itertools.product(range(N + 1), repeat=iso.dim):
        for w in wandering:
            basis = iso.apply_power(n, w)
            c = basis.inner(v)
            if c != 0:
                recon = recon + c * basis
                coefficients.append({"n": list(n), "wandering": [list(k) for k in sorted(w.entries)],
                                     "coeff": c})
    residual = (v - recon).norm()
    return Certificate.bound("wandering_reconstruct", tol, residual, witnesses=coefficients,
                             metadata={"box": N, "wandering_dimension": len(wandering)})
