"""Exact arithmetic on the span of shifted exponentials in L^2 of the orthant.

A vector is a finite sum ``sum_j c_j S_{s_j} f_{z_j}`` where ``S_s`` is the
translation semigroup on ``L^2(R_+^d)`` and

    f_z(x) = sqrt(2^d prod_i Re z_i) exp(-<z, x>),    Re z_i > 0,

is the unit vector satisfying ``S_t^* f_z = exp(-<z, t>) f_z``.  The span is
invariant under ``S_t`` and ``S_t^*``, so both act exactly on the term list,
and inner products have a closed form (see :func:`inner`).

Inner products are conjugate-linear in the first argument.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from numbers import Number
from typing import NamedTuple, Sequence

import numpy as np

from . import _core

__all__ = [
    "Term",
    "ExpVector",
    "half_plane_point",
    "exponential",
    "inner",
    "norm",
    "apply_shift",
    "apply_adjoint",
    "range_projection",
    "gram",
    "shift_span_project",
    "SpanProjection",
]

#: coefficients below this fraction of the largest input coefficient are dropped
DROP_TOL = 1e-14


def half_plane_point(z, dim: int | None = None) -> tuple[complex, ...]:
    """Validate a point of the open right half-plane product H_+^d."""
    if isinstance(z, Number):
        z = (z,) * (1 if dim is None else dim)
    z = tuple(complex(zi) for zi in z)
    if dim is not None and len(z) != dim:
        raise ValueError(f"decay has {len(z)} components, expected {dim}")
    for zi in z:
        if not zi.real > 0:
            raise ValueError(f"decay component {zi} is not in the right half-plane")
    return z


def _nonneg(t, dim: int) -> tuple[float, ...]:
    if isinstance(t, Number):
        t = (t,) * dim
    t = tuple(float(ti) for ti in t)
    if len(t) != dim:
        raise ValueError(f"shift has {len(t)} components, expected {dim}")
    for ti in t:
        if not ti >= 0.0:
            raise ValueError(f"shift component {ti} is negative")
    return t


@dataclass(frozen=True)
class Term:
    """``coeff * S_shift f_decay``."""

    coeff: complex
    shift: tuple[float, ...]
    decay: tuple[complex, ...]


def _canonical(terms) -> tuple[Term, ...]:
    merged: dict[tuple, complex] = {}
    scale = 0.0
    for term in terms:
        scale = max(scale, abs(term.coeff))
        key = (term.shift, term.decay)
        merged[key] = merged.get(key, 0j) + term.coeff
    cut = DROP_TOL * scale
    return tuple(
        Term(c, shift, decay)
        for (shift, decay), c in merged.items()
        if c != 0 and abs(c) > cut
    )


class ExpVector:
    """Finite combination of shifted exponentials in ``L^2(R_+^dim)``.

    ``dim`` may be zero, in which case the space is the scalars and every
    term is a multiple of the constant 1.  The zero vector has no terms.
    """

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: Sequence[Term] = ()):
        if dim < 0:
            raise ValueError("dimension must be non-negative")
        for term in terms:
            if len(term.shift) != dim or len(term.decay) != dim:
                raise ValueError("term dimension does not match vector dimension")
        self.dim = int(dim)
        self.terms = _canonical(terms)

    @classmethod
    def from_terms(cls, dim, triples):
        """Build from ``(coeff, shift, decay)`` triples with validation."""
        terms = [
            Term(complex(c), _nonneg(s, dim), half_plane_point(z, dim))
            for c, s, z in triples
        ]
        return cls(dim, terms)

    @classmethod
    def zero(cls, dim: int) -> "ExpVector":
        return cls(dim)

    def is_zero(self) -> bool:
        return not self.terms

    def _check(self, other: "ExpVector"):
        if not isinstance(other, ExpVector):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return ExpVector(self.dim, self.terms + other.terms)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return ExpVector(self.dim, [Term(-t.coeff, t.shift, t.decay) for t in self.terms])

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        scalar = complex(scalar)
        return ExpVector(self.dim, [Term(scalar * t.coeff, t.shift, t.decay) for t in self.terms])

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, ExpVector):
            return NotImplemented
        return self.dim == other.dim and set(self.terms) == set(other.terms)

    def __hash__(self):
        return hash((self.dim, frozenset(self.terms)))

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"ExpVector(dim={self.dim}, terms={list(self.terms)!r})"

    def arrays(self):
        """Coefficients, shifts and decays as NumPy arrays."""
        n = len(self.terms)
        coeffs = np.array([t.coeff for t in self.terms], dtype=complex)
        shifts = np.array([t.shift for t in self.terms], dtype=float).reshape(n, self.dim)
        decays = np.array([t.decay for t in self.terms], dtype=complex).reshape(n, self.dim)
        return coeffs, shifts, decays

    def __call__(self, x) -> complex:
        """Evaluate the represented function at a point of the orthant."""
        x = np.asarray(x, dtype=float).reshape(self.dim)
        total = 0j
        for t in self.terms:
            y = x - np.asarray(t.shift)
            if np.any(y < 0):
                continue
            z = np.asarray(t.decay)
            amp = math.sqrt(2.0**self.dim * float(np.prod(z.real)))
            total += t.coeff * amp * cmath.exp(-complex(np.dot(z, y)))
        return total


def exponential(z, coeff: complex = 1.0, shift=None) -> ExpVector:
    """``coeff * S_shift f_z``; ``z`` fixes the dimension."""
    z = half_plane_point(z)
    dim = len(z)
    shift = (0.0,) * dim if shift is None else _nonneg(shift, dim)
    return ExpVector(dim, [Term(complex(coeff), shift, z)])


def inner(u: ExpVector, v: ExpVector) -> complex:
    """``<u, v>``, conjugate-linear in ``u``.

    For single terms and one coordinate with shifts ``s <= t``,

        <S_s f_z, S_t f_w> = 2 sqrt(Re z Re w) / (conj(z) + w) * exp(-conj(z) (t - s)),

    and the conjugate-symmetric expression when ``s > t``.  The
    multi-dimensional kernel is the product over coordinates.
    """
    if u.dim != v.dim:
        raise ValueError(f"dimension mismatch: {u.dim} vs {v.dim}")
    if not u.terms or not v.terms:
        return 0j
    cu, su, zu = u.arrays()
    cv, sv, zv = v.arrays()
    K = _core.term_kernel(su, zu, sv, zv)
    return complex(np.conj(cu) @ K @ cv)


def norm(v: ExpVector) -> float:
    return math.sqrt(max(inner(v, v).real, 0.0))


def apply_shift(t, v: ExpVector) -> ExpVector:
    """``S_t v``: every term's shift grows by ``t``."""
    t = _nonneg(t, v.dim)
    return ExpVector(
        v.dim,
        [Term(term.coeff, tuple(s + ti for s, ti in zip(term.shift, t)), term.decay)
         for term in v.terms],
    )


def apply_adjoint(t, v: ExpVector) -> ExpVector:
    """``S_t^* v``, exact.

    Per coordinate ``S_t^* S_s f_z`` is ``S_{s-t} f_z`` when ``s >= t`` and
    ``exp(-z (t - s)) f_z`` otherwise.
    """
    t = _nonneg(t, v.dim)
    out = []
    for term in v.terms:
        expo = 0j
        shift = []
        for s, ti, z in zip(term.shift, t, term.decay):
            if s >= ti:
                shift.append(s - ti)
            else:
                expo += z * (ti - s)
                shift.append(0.0)
        coeff = term.coeff * cmath.exp(-expo) if expo != 0 else term.coeff
        out.append(Term(coeff, tuple(shift), term.decay))
    return ExpVector(v.dim, out)


def range_projection(t, v: ExpVector) -> ExpVector:
    """``S_t S_t^* v``, the projection onto the range of ``S_t``."""
    return apply_shift(t, apply_adjoint(t, v))


def _stack(vs: Sequence[ExpVector]):
    dims = {v.dim for v in vs}
    if len(dims) > 1:
        raise ValueError(f"dimension mismatch among vectors: {sorted(dims)}")
    dim = dims.pop()
    blocks = [v.arrays() for v in vs]
    n_terms = sum(len(b[0]) for b in blocks)
    C = np.zeros((n_terms, len(vs)), dtype=complex)
    row = 0
    for k, (c, _, _) in enumerate(blocks):
        C[row: row + len(c), k] = c
        row += len(c)
    S = np.concatenate([b[1] for b in blocks]) if n_terms else np.zeros((0, dim))
    Z = np.concatenate([b[2] for b in blocks]) if n_terms else np.zeros((0, dim), complex)
    return C, S, Z


def gram(vs: Sequence[ExpVector]) -> np.ndarray:
    """Hermitian matrix ``G[j, k] = <vs[j], vs[k]>``."""
    if not vs:
        return np.zeros((0, 0), dtype=complex)
    C, S, Z = _stack(vs)
    if C.shape[0] == 0:
        return np.zeros((len(vs), len(vs)), dtype=complex)
    K = _core.term_kernel(S, Z, S, Z)
    G = C.conj().T @ K @ C
    return 0.5 * (G + G.conj().T)


def _cross(us: Sequence[ExpVector], vs: Sequence[ExpVector]) -> np.ndarray:
    Cu, Su, Zu = _stack(us)
    Cv, Sv, Zv = _stack(vs)
    if Cu.shape[0] == 0 or Cv.shape[0] == 0:
        return np.zeros((len(us), len(vs)), dtype=complex)
    return Cu.conj().T @ _core.term_kernel(Su, Zu, Sv, Zv) @ Cv


class SpanProjection(NamedTuple):
    coeffs: np.ndarray
    residual: float
    rank: int


def shift_span_project(target: ExpVector, z2, grid) -> SpanProjection:
    """Least-squares projection of ``target`` onto ``span{S_t f_z2 : t in grid}``.

    The Gram system is solved through its eigendecomposition with eigenvalues
    below ``1e-12 * trace / n`` discarded, since translates on a fine grid
    are numerically dependent.  ``rank`` is the number of eigenvalues kept.
    The residual norm is evaluated from exact inner products.
    """
    z2 = half_plane_point(z2, target.dim)
    grid = list(grid)
    if not grid:
        raise ValueError("grid must be non-empty")
    family = [exponential(z2, shift=_nonneg(t, target.dim)) for t in grid]
    G = gram(family)
    b = _cross(family, [target])[:, 0]
    evals, Q = np.linalg.eigh(G)
    floor = 1e-12 * np.trace(G).real / len(family)
    keep = evals > floor
    proj = Q[:, keep].conj().T @ b
    coeffs = Q[:, keep] @ (proj / evals[keep])
    res2 = inner(target, target).real - float(np.sum(np.abs(proj) ** 2 / evals[keep]))
    return SpanProjection(coeffs, math.sqrt(max(res2, 0.0)), int(keep.sum()))
