"""Isometries on ``l^2(N_0^d)`` acting on finitely supported vectors.

A :class:`BasisIsometry` carries one generator per direction.  Generator
actions are given on basis vectors and extended linearly, so built-in
generators act exactly.  Every generator must also supply its adjoint on
basis vectors; the engine never inverts anything.
"""
from __future__ import annotations

import cmath
import itertools
import math
from numbers import Number
from typing import Callable, Mapping, Sequence

import numpy as np

__all__ = [
    "SparseVector",
    "Shift",
    "Phase",
    "Custom",
    "BasisIsometry",
    "delta",
    "kernel_of_adjoints",
    "build_eigenvector",
    "eigen_residual",
]

Index = tuple[int, ...]


class SparseVector:
    """Finitely supported vector indexed by ``N_0^dim``; zeros are dropped."""

    __slots__ = ("dim", "entries")

    def __init__(self, dim: int, entries: Mapping[Index, complex] | None = None):
        self.dim = int(dim)
        clean = {}
        for idx, c in (entries or {}).items():
            idx = tuple(int(i) for i in idx)
            if len(idx) != self.dim or min(idx, default=0) < 0:
                raise ValueError(f"index {idx} is not in N_0^{self.dim}")
            if c != 0:
                clean[idx] = complex(c)
        self.entries = dict(sorted(clean.items()))

    @classmethod
    def zero(cls, dim):
        return cls(dim)

    def is_zero(self):
        return not self.entries

    def _combine(self, other, sign):
        if not isinstance(other, SparseVector):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        out = dict(self.entries)
        for idx, c in other.entries.items():
            out[idx] = out.get(idx, 0j) + sign * c
        return SparseVector(self.dim, out)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return SparseVector(self.dim, {i: -c for i, c in self.entries.items()})

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return SparseVector(self.dim, {i: scalar * c for i, c in self.entries.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return self.dim == other.dim and self.entries == other.entries

    def __repr__(self):
        return f"SparseVector({self.dim}, {self.entries!r})"

    def inner(self, other: "SparseVector") -> complex:
        """``<self, other>``, conjugate-linear in ``self``."""
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        small, big = (self, other) if len(self.entries) <= len(other.entries) else (other, self)
        total = sum(
            (c.conjugate() * big.entries[i] if small is self else big.entries[i].conjugate() * c)
            for i, c in small.entries.items()
            if i in big.entries
        )
        return complex(total)

    def norm(self) -> float:
        return math.sqrt(sum(abs(c) ** 2 for c in self.entries.values()))

    def support_bound(self) -> int:
        """Largest coordinate appearing in the support (-1 for zero)."""
        return max((max(i, default=0) for i in self.entries), default=-1)


def delta(*index) -> SparseVector:
    if len(index) == 1 and isinstance(index[0], tuple):
        index = index[0]
    return SparseVector(len(index), {tuple(index): 1.0})


class Shift:
    """``delta_n -> delta_{n + step e_i}``; a pure isometry."""

    kind = "pure"

    def __init__(self, step: int = 1):
        if step < 1:
            raise ValueError("shift step must be positive")
        self.step = int(step)

    def image(self, index: Index, axis: int):
        n = list(index)
        n[axis] += self.step
        return {tuple(n): 1.0}

    def image_power(self, index: Index, axis: int, k: int):
        n = list(index)
        n[axis] += k * self.step
        return {tuple(n): 1.0}

    def coimage_power(self, index: Index, axis: int, k: int):
        if index[axis] < k * self.step:
            return {}
        n = list(index)
        n[axis] -= k * self.step
        return {tuple(n): 1.0}

    def coimage(self, index: Index, axis: int):
        if index[axis] < self.step:
            return {}
        n = list(index)
        n[axis] -= self.step
        return {tuple(n): 1.0}

    def annihilates(self, index: Index, axis: int) -> bool:
        return index[axis] < self.step

    def to_dict(self):
        return {"type": "shift", "step": self.step}


class Phase:
    """``delta_n -> e^{i theta} delta_n``; a unitary."""

    kind = "unitary"

    def __init__(self, theta: float):
        self.theta = float(theta)
        self._factor = cmath.exp(1j * self.theta)

    def image(self, index, axis):
        return {index: self._factor}

    def coimage(self, index, axis):
        return {index: self._factor.conjugate()}

    def image_power(self, index, axis, k):
        return {index: cmath.exp(1j * k * self.theta)}

    def coimage_power(self, index, axis, k):
        return {index: cmath.exp(-1j * k * self.theta)}

    def annihilates(self, index, axis):
        return False

    def to_dict(self):
        return {"type": "phase", "theta": self.theta}


class Custom:
    """Generator given by user rules on basis vectors.

    ``image(index)`` and ``coimage(index)`` return mappings from multi-index
    to coefficient for ``V delta_index`` and ``V^* delta_index``.
    """

    kind = None

    def __init__(self, image: Callable, coimage: Callable, kind: str | None = None):
        if coimage is None:
            raise ValueError("custom generators must supply an adjoint rule")
        self._image = image
        self._coimage = coimage
        self.kind = kind

    def image(self, index, axis):
        return dict(self._image(index))

    def coimage(self, index, axis):
        return dict(self._coimage(index))

    annihilates = None

    def to_dict(self):
        raise TypeError("custom generators are not serialisable")


class BasisIsometry:
    """A ``d``-tuple of isometries, one generator per direction.

    Directions are numbered ``1..d``.
    """

    def __init__(self, generators: Sequence):
        self.generators = tuple(generators)
        self.dim = len(self.generators)
        if self.dim == 0:
            raise ValueError("need at least one generator")

    def generator(self, i: int):
        if not 1 <= i <= self.dim:
            raise IndexError(f"direction {i} out of range 1..{self.dim}")
        return self.generators[i - 1]

    def _act(self, i: int, v: SparseVector, adjoint: bool) -> SparseVector:
        gen = self.generator(i)
        if v.dim != self.dim:
            raise ValueError(f"vector dimension {v.dim} != {self.dim}")
        rule = gen.coimage if adjoint else gen.image
        out: dict[Index, complex] = {}
        for idx, c in v.entries.items():
            for j, a in rule(idx, i - 1).items():
                out[j] = out.get(j, 0j) + a * c
        return SparseVector(self.dim, out)

    def apply(self, i: int, v: SparseVector) -> SparseVector:
        """``V_i v``."""
        return self._act(i, v, adjoint=False)

    def apply_adjoint(self, i: int, v: SparseVector) -> SparseVector:
        """``V_i^* v``."""
        return self._act(i, v, adjoint=True)

    def apply_power(self, n: Index, v: SparseVector, adjoint: bool = False) -> SparseVector:
        """``V_n v`` (or ``V_n^* v``) for a multi-exponent ``n``."""
        for i, k in enumerate(n, start=1):
            k = int(k)
            gen = self.generator(i)
            if k and hasattr(gen, "image_power"):
                rule = gen.coimage_power if adjoint else gen.image_power
                out: dict[Index, complex] = {}
                for idx, c in v.entries.items():
                    for j, a in rule(idx, i - 1, k).items():
                        out[j] = out.get(j, 0j) + a * c
                v = SparseVector(self.dim, out)
                continue
            for _ in range(k):
                v = self._act(i, v, adjoint)
        return v

    def builtin(self) -> bool:
        return all(isinstance(g, (Shift, Phase)) for g in self.generators)

    def to_dict(self):
        return {"generators": [g.to_dict() for g in self.generators]}


def _box(dim: int, N: int):
    return itertools.product(range(N + 1), repeat=dim)


def kernel_of_adjoints(V: BasisIsometry, indices: Sequence[int] | None = None,
                       box: int = 0, tol: float = 1e-12) -> list[SparseVector]:
    """Orthonormal basis of ``cap_{i in indices} ker V_i^*`` inside the box.

    The box is the set of multi-indices with every coordinate ``<= box``.
    For built-in generators the adjoints map basis vectors to multiples of
    distinct basis vectors, so the joint kernel is spanned by the basis
    vectors every selected adjoint annihilates; the answer is exact.
    Custom generators fall back to an SVD null space of the truncated
    adjoint matrix.  An empty list is a valid answer.
    """
    indices = list(range(1, V.dim + 1)) if indices is None else list(indices)
    cells = list(_box(V.dim, box))
    gens = [V.generator(i) for i in indices]
    if all(isinstance(g, (Shift, Phase)) for g in gens):
        return [
            delta(n) for n in cells
            if all(g.annihilates(n, i - 1) for g, i in zip(gens, indices))
        ]

    col = {n: k for k, n in enumerate(cells)}
    rows: dict[tuple, int] = {}
    entries = []
    for n in cells:
        for i in indices:
            for m, a in V.generator(i).coimage(n, i - 1).items():
                r = rows.setdefault((i, m), len(rows))
                entries.append((r, col[n], a))
    A = np.zeros((max(len(rows), 1), len(cells)), dtype=complex)
    for r, c, a in entries:
        A[r, c] += a
    _, sv, Vh = np.linalg.svd(A)
    rank = int(np.sum(sv > tol * max(1.0, sv.max(initial=0.0))))
    basis = []
    for row in Vh[rank:]:
        row = row.conj()
        basis.append(SparseVector(V.dim, {
            n: row[k] for n, k in col.items() if abs(row[k]) > tol
        }))
    return basis


def _geometric_mass(r2: float, lo: int, hi: int) -> float:
    """``sum_{k=lo}^{hi} r2^k`` (zero when the range is empty)."""
    lo = max(lo, 0)
    if hi < lo:
        return 0.0
    if r2 == 0.0:
        return 1.0 if lo == 0 else 0.0
    if r2 == 1.0:
        return float(hi - lo + 1)
    return r2**lo * -math.expm1((hi - lo + 1) * math.log(r2)) / (1.0 - r2)


def build_eigenvector(V: BasisIsometry, xi: SparseVector, z, N: int,
                      m: Index | None = None, tol: float = 1e-10):
    """Truncated joint eigenvector of the adjoints.

    Returns ``eta_N = sum_{n in [0, N]^d} exp(-<z, n>) V_n xi`` together with
    a bound on ``||V_m^* eta_N - exp(-<z, m>) eta_N||`` (default ``m`` is the
    all-ones exponent).  Because ``xi`` is wandering, the vectors ``V_n xi``
    are orthogonal with norm ``||xi||`` and the defect consists exactly of
    the terms that fall off the truncation box, which gives the closed form

        exp(-<Re z, m>) ||xi|| sqrt(prod_i G_i(N) - prod_i G_i(N - m_i)),

    with ``G_i(M) = sum_{k <= M} exp(-2 Re z_i k)``.
    """
    d = V.dim
    z = tuple(complex(zi) for zi in (z if not isinstance(z, Number) else (z,) * d))
    if len(z) != d or any(zi.real <= 0 for zi in z):
        raise ValueError("z must lie in the right half-plane product")
    m = (1,) * d if m is None else tuple(int(k) for k in m)
    scale = max(xi.norm(), 1.0)
    for i in range(1, d + 1):
        if V.apply_adjoint(i, xi).norm() > tol * scale:
            raise ValueError(f"xi is not annihilated by V_{i}^*")

    # tensor-product accumulation keeps each V_n xi computed once
    eta = SparseVector(d)
    layer = {(0,) * d: xi}
    for n in _box(d, N):
        if n not in layer:
            k = max(k for k in range(d) if n[k] > 0)
            prev = list(n)
            prev[k] -= 1
            layer[n] = V.apply(k + 1, layer[tuple(prev)])
        weight = cmath.exp(-sum(zi * ni for zi, ni in zip(z, n)))
        eta = eta + weight * layer[n]
    # prod(full) - prod(inner box) telescoped so no cancellation occurs
    r2 = [math.exp(-2.0 * zi.real) for zi in z]
    full = [_geometric_mass(r, 0, N) for r in r2]
    kept = [_geometric_mass(r, 0, N - mi) for r, mi in zip(r2, m)]
    lost = [_geometric_mass(r, N - mi + 1, N) for r, mi in zip(r2, m)]
    defect = sum(
        math.prod(kept[:j]) * lost[j] * math.prod(full[j + 1:]) for j in range(d)
    )
    bound = math.exp(-sum(zi.real * mi for zi, mi in zip(z, m))) * xi.norm() * math.sqrt(defect)
    return eta, bound


def eigen_residual(V: BasisIsometry, eta: SparseVector, z, m: Index) -> float:
    """``||V_m^* eta - exp(-<z, m>) eta||`` computed directly."""
    d = V.dim
    z = (z,) * d if isinstance(z, Number) else tuple(z)
    lhs = V.apply_power(m, eta, adjoint=True)
    factor = cmath.exp(-sum(complex(zi) * mi for zi, mi in zip(z, m)))
    return (lhs - factor * eta).norm()
