"""Finite-sample verification of the constructive steps in Cooper's theorem.

For a joint eigenvector ``xi`` of the adjoints, ``V_t^* xi = exp(-<z, t>) xi``,
the map ``S_t f_z (x) xi -> V_t xi`` is isometric because both sides have the
same Gram matrix.  :func:`verify_cooper_gram` checks that identity on a
sample of pairs; the helpers below supply the other ingredients: normal
ordering of ``V_s^* V_t``, recovery of a wandering vector from an
eigenvector, and the Fourier projections of a periodic semigroup.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from numbers import Number
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import expm

from . import expspan
from .certificate import FAILED_PRECONDITION, Certificate
from .reps import RepresentationHandle

__all__ = [
    "normal_order",
    "eigen_defect",
    "verify_cooper_gram",
    "wandering_from_eigen",
    "WanderingVector",
    "PeriodicSemigroup",
    "periodic_eigenmodes",
    "ModeDecomposition",
    "AliasingError",
]


def normal_order(s, t):
    """``(p, q)`` with ``V_s^* V_t = V_p V_q^*`` for doubly commuting ``V``.

    ``p`` collects the coordinates where ``t`` exceeds ``s`` and ``q`` the
    rest, so ``t - s = p - q`` and ``min(p_i, q_i) = 0``.
    """
    s = tuple(s) if not isinstance(s, Number) else (s,)
    t = tuple(t) if not isinstance(t, Number) else (t,)
    if len(s) != len(t):
        raise ValueError("s and t have different lengths")
    zero = type(t[0])(0) if t else 0.0
    p = tuple(ti - si if ti >= si else zero for si, ti in zip(s, t))
    q = tuple(si - ti if ti < si else zero for si, ti in zip(s, t))
    return p, q


def _as_z(z, dim):
    if isinstance(z, Number):
        z = (z,) * dim
    return expspan.half_plane_point(z, dim)


def _as_point(t, V: RepresentationHandle):
    if isinstance(t, Number):
        t = (t,) * V.dim
    return tuple(t)


def eigen_defect(V: RepresentationHandle, xi, z, t) -> float:
    """``||V_t^* xi - exp(-<z, t>) xi||``."""
    t = _as_point(t, V)
    factor = cmath.exp(-sum(zi * ti for zi, ti in zip(z, t)))
    return V.norm(V.apply_adjoint(t, xi) - factor * xi)


def _unit_steps(V):
    return [V.step(i, 1) for i in range(1, V.dim + 1)]


def _check_eigen(V, xi, z, points, tol):
    scale = max(V.norm(xi), 1e-300)
    worst_t, worst = None, 0.0
    for t in points:
        err = eigen_defect(V, xi, z, t) / scale
        if err > worst or worst_t is None:
            worst_t, worst = t, err
    return worst_t, worst, worst <= tol


def verify_cooper_gram(V: RepresentationHandle, xi, z, sample: Sequence, *,
                       tol: float = 1e-8, bound: float = 1e-12) -> Certificate:
    """Compare ``<V_s xi, V_t xi>`` with ``<S_s f_z, S_t f_z> ||xi||^2``.

    ``sample`` is a list of ``(s, t)`` pairs.  The precondition
    ``V_t^* xi = exp(-<z, t>) xi`` is checked (relative tolerance ``tol``) at
    the unit steps and at every sampled ``s`` and ``t``; if it fails the
    certificate is ``FAILED_PRECONDITION`` and names the worst ``t``.
    """
    z = _as_z(z, V.dim)
    sample = [(_as_point(s, V), _as_point(t, V)) for s, t in sample]
    points = list(dict.fromkeys(_unit_steps(V) + [p for pair in sample for p in pair]))
    worst_t, worst, ok = _check_eigen(V, xi, z, points, tol)
    if not ok:
        return Certificate(
            "cooper_gram", bound, worst, FAILED_PRECONDITION,
            witnesses=[{"t": list(worst_t), "eigen_defect": worst}],
            metadata={"precondition_tol": tol},
        )

    norm2 = V.inner(xi, xi).real
    fz = expspan.exponential(z)
    deviation, witnesses = 0.0, []
    for s, t in sample:
        lhs = V.inner(V.apply(s, xi), V.apply(t, xi))
        rhs = expspan.inner(expspan.apply_shift(s, fz), expspan.apply_shift(t, fz)) * norm2
        dev = abs(lhs - rhs)
        witnesses.append({"s": list(s), "t": list(t), "deviation": dev})
        deviation = max(deviation, dev)
    return Certificate.bound(
        "cooper_gram", bound, deviation, witnesses=witnesses,
        metadata={"eigen_defect": worst, "norm_squared": norm2},
    )


class WanderingVector(NamedTuple):
    xi: object
    residual: float


def wandering_from_eigen(V: RepresentationHandle, eta, z, *, tol: float = 1e-8) -> WanderingVector:
    """``xi = sum_{eps in {0,1}^d} (-1)^{|eps|} exp(-<z, eps>) V_eps eta``.

    For ``eta`` with ``V_n^* eta = exp(-<z, n>) eta`` the result lies in the
    joint kernel of the ``V_{e_i}^*``; ``residual`` is the largest
    ``||V_{e_i}^* xi||`` actually observed.
    """
    z = _as_z(z, V.dim)
    ones = tuple(V.step(1, 1)[0] for _ in range(V.dim))
    worst_t, worst, ok = _check_eigen(V, eta, z, _unit_steps(V) + [ones], tol)
    if not ok:
        raise ValueError(f"eta is not an eigenvector within {tol}: defect {worst:.3e} at t={worst_t}")
    unit = ones[0]
    xi = 0 * eta
    for eps in itertools.product((0, 1), repeat=V.dim):
        point = tuple(unit * e for e in eps)
        weight = (-1) ** sum(eps) * cmath.exp(-sum(zi * e for zi, e in zip(z, eps)))
        xi = xi + weight * V.apply(point, eta)
    residual = max(V.norm(V.apply_adjoint(step, xi)) for step in _unit_steps(V))
    return WanderingVector(xi, residual)


class AliasingError(ValueError):
    """Quadrature too coarse to separate the Fourier modes."""

    def __init__(self, message, suggested_resolution):
        super().__init__(f"{message}; try quad_points={suggested_resolution}")
        self.suggested_resolution = suggested_resolution


class PeriodicSemigroup:
    """``T_t = exp(2 pi i sum_j t_j M_j)`` for commuting ``M_j`` with integer spectrum."""

    def __init__(self, generators: Sequence, check: bool = True, atol: float = 1e-8):
        gens = [np.asarray(M, dtype=complex) for M in generators]
        if not gens:
            raise ValueError("need at least one generator")
        m = gens[0].shape[0]
        for M in gens:
            if M.shape != (m, m):
                raise ValueError("generators must be square and of equal size")
        if check:
            for A, B in itertools.combinations(gens, 2):
                if np.linalg.norm(A @ B - B @ A) > atol * max(1.0, np.linalg.norm(A) * np.linalg.norm(B)):
                    raise ValueError("generators do not commute")
            for M in gens:
                ev = np.linalg.eigvals(M)
                if np.max(np.abs(ev - np.round(ev.real)), initial=0.0) > 1e-6:
                    raise ValueError(f"generator spectrum {ev} is not integral")
        self.generators = gens
        self.d = len(gens)
        self.m = m

    @classmethod
    def diagonal(cls, spectra) -> "PeriodicSemigroup":
        """``T_t = diag(exp(2 pi i <n_k, t>))`` for integer vectors ``n_k``."""
        spectra = np.atleast_2d(np.asarray(spectra, dtype=float))
        if spectra.shape[0] == 1 and spectra.shape[1] > 1:
            spectra = spectra.T
        return cls([np.diag(spectra[:, j]) for j in range(spectra.shape[1])])

    @classmethod
    def conjugated(cls, basis, spectra) -> "PeriodicSemigroup":
        """``Q diag(n) Q^{-1}`` per direction for an invertible ``basis`` Q."""
        Q = np.asarray(basis, dtype=complex)
        Qi = np.linalg.inv(Q)
        spectra = np.asarray(spectra, dtype=float).reshape(Q.shape[0], -1)
        return cls([Q @ np.diag(spectra[:, j]) @ Qi for j in range(spectra.shape[1])])

    def at(self, t) -> np.ndarray:
        t = np.broadcast_to(np.asarray(t, dtype=float), (self.d,))
        A = sum(tj * M for tj, M in zip(t, self.generators))
        return expm(2j * math.pi * A)


@dataclass
class ModeDecomposition:
    projections: dict
    ranks: dict
    resolution: int
    eigen_residual: float
    algebra_residual: float
    dimension: int
    metadata: dict = field(default_factory=dict)

    @property
    def total_rank(self) -> int:
        return sum(self.ranks.values())

    @property
    def complete(self) -> bool:
        return self.total_rank == self.dimension


def _mode_box(n_range, d):
    if isinstance(n_range, Number):
        K = int(n_range)
        limits = [(-K, K)] * d
    else:
        limits = [(int(lo), int(hi)) for lo, hi in n_range]
        if len(limits) != d:
            raise ValueError("n_range needs one (lo, hi) pair per parameter")
    return [tuple(n) for n in itertools.product(*[range(lo, hi + 1) for lo, hi in limits])]


def periodic_eigenmodes(T: PeriodicSemigroup, n_range, quad_points: int | None = None, *,
                        samples: int = 10, tol: float = 1e-9, seed: int = 0) -> ModeDecomposition:
    """Fourier projections ``P_n = int_{[0,1]^d} exp(-2 pi i <n, t>) T_t dt``.

    The integral is evaluated by the tensor trapezoid rule with
    ``quad_points`` nodes per axis (default ``4 max|n| + 4``), which is
    exact for trigonometric polynomials of lower degree.  After assembly the
    eigen-relation ``T_s P_n = exp(2 pi i <n, s>) P_n`` is checked at
    ``samples`` random ``s`` and the algebra ``P_n P_k = delta_{nk} P_n`` on
    all pairs; a violation raises :class:`AliasingError`.
    """
    modes = _mode_box(n_range, T.d)
    if quad_points is None:
        quad_points = 4 * max((max(abs(c) for c in n) for n in modes), default=0) + 4
    Q = int(quad_points)
    if Q < 2:
        raise ValueError("quad_points must be at least 2")

    nodes = np.array(list(itertools.product(range(Q), repeat=T.d)), dtype=float) / Q
    values = np.stack([T.at(t) for t in nodes])
    N = np.asarray(modes, dtype=float)
    phases = np.exp(-2j * math.pi * (N @ nodes.T)) / len(nodes)
    stacked = np.einsum("nk,kab->nab", phases, values)
    projections = {n: stacked[k] for k, n in enumerate(modes)}

    scale = max(1.0, max(np.linalg.norm(P, 2) for P in projections.values()))
    rng = np.random.default_rng(seed)
    eigen_res = 0.0
    for s in rng.random((samples, T.d)):
        Ts = T.at(s)
        for n, P in projections.items():
            lam = np.exp(2j * math.pi * np.dot(n, s))
            eigen_res = max(eigen_res, np.linalg.norm(Ts @ P - lam * P, 2))
    algebra_res = 0.0
    for (n, P), (k, R) in itertools.product(projections.items(), repeat=2):
        target = P if n == k else 0.0
        algebra_res = max(algebra_res, np.linalg.norm(P @ R - target, 2))
    bad = max(eigen_res, algebra_res) > tol * scale**2
    if bad:
        raise AliasingError(
            f"Fourier projections inconsistent at resolution {Q} "
            f"(eigen residual {eigen_res:.2e}, algebra residual {algebra_res:.2e})",
            2 * Q,
        )
    # nonzero singular values of an idempotent are >= 1
    ranks = {n: int(np.sum(np.linalg.svd(P, compute_uv=False) > 0.5)) for n, P in projections.items()}
    return ModeDecomposition(
        projections={n: P for n, P in projections.items()},
        ranks=ranks,
        resolution=Q,
        eigen_residual=float(eigen_res),
        algebra_residual=float(algebra_res),
        dimension=T.m,
        metadata={"samples": samples, "scale": scale},
    )
