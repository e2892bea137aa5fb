"""Uniform interface over the concrete isometric representations.

A handle exposes ``apply(t, v)``, ``apply_adjoint(t, v)`` and ``inner(u, v)``
for its own vector type.  Vector types support ``+``, ``-`` and scalar
multiplication.  Directions are numbered ``1..dim``.

Handles may declare each direction ``"pure"`` or ``"unitary"`` through
:meth:`RepresentationHandle.direction_kind`; the Wold machinery then uses
the exact limit projection instead of iterating.
"""
from __future__ import annotations

import math
from numbers import Number
from typing import Sequence

from . import expspan
from .discrete import BasisIsometry, SparseVector

__all__ = [
    "RepresentationHandle",
    "ShiftRep",
    "DiscreteRep",
    "DirectSumVector",
    "DirectSumRep",
]


class RepresentationHandle:
    dim: int
    #: True when the semigroup is N_0^d rather than R_+^d
    discrete = False

    def apply(self, t, v):
        raise NotImplementedError

    def apply_adjoint(self, t, v):
        raise NotImplementedError

    def inner(self, u, v) -> complex:
        raise NotImplementedError

    def norm(self, v) -> float:
        return math.sqrt(max(self.inner(v, v).real, 0.0))

    def direction_kind(self, i: int) -> str | None:
        return None

    def step(self, i: int, t) -> tuple:
        """The semigroup element ``t e_i``."""
        if not 1 <= i <= self.dim:
            raise IndexError(f"direction {i} out of range 1..{self.dim}")
        zero = 0 if self.discrete else 0.0
        out = [zero] * self.dim
        out[i - 1] = int(t) if self.discrete else float(t)
        return tuple(out)

    def range_projection(self, i: int, t, v):
        """``V_t^{(i)} V_t^{(i)*} v``."""
        s = self.step(i, t)
        return self.apply(s, self.apply_adjoint(s, v))

    def exact_limit_projection(self, i: int, v):
        """``lim_t V_t^{(i)} V_t^{(i)*} v`` when known in closed form, else None."""
        kind = self.direction_kind(i)
        if kind == "pure":
            return 0 * v
        if kind == "unitary":
            return v
        return None


class ShiftRep(RepresentationHandle):
    """Translation semigroup on ``L^2(R_+^dim)``, acting on :class:`ExpVector`."""

    def __init__(self, dim: int):
        self.dim = int(dim)

    def apply(self, t, v):
        return expspan.apply_shift(t, v)

    def apply_adjoint(self, t, v):
        return expspan.apply_adjoint(t, v)

    def inner(self, u, v):
        return expspan.inner(u, v)

    def direction_kind(self, i):
        return "pure"

    def to_dict(self):
        return {"kind": "shift", "dim": self.dim}


class DiscreteRep(RepresentationHandle):
    """Semigroup ``n -> V_1^{n_1} ... V_d^{n_d}`` of a :class:`BasisIsometry`."""

    discrete = True

    def __init__(self, isometry: BasisIsometry):
        self.isometry = isometry
        self.dim = isometry.dim

    @staticmethod
    def _exponent(t, dim):
        if isinstance(t, Number):
            t = (t,) * dim
        t = tuple(t)
        if len(t) != dim:
            raise ValueError(f"exponent has {len(t)} components, expected {dim}")
        n = tuple(int(round(x)) for x in t)
        if any(abs(a - b) > 0 for a, b in zip(n, t)) or min(n) < 0:
            raise ValueError(f"{t} is not in N_0^{dim}")
        return n

    def apply(self, t, v):
        return self.isometry.apply_power(self._exponent(t, self.dim), v)

    def apply_adjoint(self, t, v):
        return self.isometry.apply_power(self._exponent(t, self.dim), v, adjoint=True)

    def inner(self, u: SparseVector, v: SparseVector):
        return u.inner(v)

    def direction_kind(self, i):
        return self.isometry.generator(i).kind

    def to_dict(self):
        return {"kind": "discrete", **self.isometry.to_dict()}


class DirectSumVector:
    """Element of an orthogonal direct sum, one component per summand."""

    __slots__ = ("components",)

    def __init__(self, components: Sequence):
        self.components = tuple(components)

    def _zip(self, other, op):
        if not isinstance(other, DirectSumVector):
            return NotImplemented
        if len(other.components) != len(self.components):
            raise ValueError("direct sums with different numbers of summands")
        return DirectSumVector([op(a, b) for a, b in zip(self.components, other.components)])

    def __add__(self, other):
        return self._zip(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._zip(other, lambda a, b: a - b)

    def __neg__(self):
        return DirectSumVector([-a for a in self.components])

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return DirectSumVector([scalar * a for a in self.components])

    __rmul__ = __mul__

    def __repr__(self):
        return f"DirectSumVector({list(self.components)!r})"


class DirectSumRep(RepresentationHandle):
    """Orthogonal direct sum of representations of the same semigroup."""

    def __init__(self, summands: Sequence[RepresentationHandle]):
        self.summands = tuple(summands)
        if not self.summands:
            raise ValueError("direct sum needs at least one summand")
        dims = {s.dim for s in self.summands}
        if len(dims) != 1:
            raise ValueError(f"summands disagree on dimension: {sorted(dims)}")
        self.dim = dims.pop()
        self.discrete = bool(self.summands[0].discrete)

    def apply(self, t, v):
        return DirectSumVector([s.apply(t, c) for s, c in zip(self.summands, v.components)])

    def apply_adjoint(self, t, v):
        return DirectSumVector(
            [s.apply_adjoint(t, c) for s, c in zip(self.summands, v.components)])

    def inner(self, u, v):
        return sum((s.inner(a, b) for s, a, b in zip(self.summands, u.components, v.components)),
                   0j)

    def direction_kind(self, i):
        kinds = {s.direction_kind(i) for s in self.summands}
        return kinds.pop() if len(kinds) == 1 else None

    def exact_limit_projection(self, i, v):
        parts = [s.exact_limit_projection(i, c) for s, c in zip(self.summands, v.components)]
        if any(p is None for p in parts):
            return None
        return DirectSumVector(parts)

    def to_dict(self):
        return {"kind": "direct_sum", "summands": [s.to_dict() for s in self.summands]}
