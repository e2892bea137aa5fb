"""Gaussian product measures on R^N restricted to boxes ``A = prod [a_n, inf)``.

``gamma`` is the standard Gaussian product measure and ``L^2(A)`` is taken
with ``gamma`` restricted to ``A`` (not renormalized), so the constant 1 has
squared norm ``mu(A) = prod Phi_bar(a_n)``; this is positive exactly when
``sum |log Phi_bar(a_n)|`` converges.  The isometric representation

    (V^A_x f)(y) = exp(<x, y>/2 - |x|^2/4) f(y - x)   on  y - x in A

preserves the class of *cylinder vectors*, finite sums of terms
``c prod_k exp(alpha_k y_k) 1[y_k >= c_k]``, and all inner products between
them have closed forms through ``int_c^inf exp(beta y) dgamma = exp(beta^2/2)
Phi_bar(c - beta)``.

Two boxes give equivalent representations iff ``a - b`` is square summable;
:func:`kakutani_certify` brackets the normalized Hellinger affinity that
decides this.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from numbers import Number
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy import special

from .certificate import FAIL, PASS, Certificate
from .reps import RepresentationHandle

__all__ = [
    "normal_sf",
    "log_normal_sf",
    "normal_isf",
    "half_line_integral",
    "GeometricTail",
    "ConstantTail",
    "ShiftedTail",
    "BoundarySequence",
    "construct_X_sequence",
    "x_membership",
    "CylinderFactor",
    "GaussianCylinderVector",
    "cyl_inner",
    "vA_apply",
    "vA_adjoint",
    "GaussianRep",
    "HellingerReport",
    "kakutani_certify",
    "finite_restriction_intertwiner",
    "WoldFailureMasses",
    "wold_failure_masses",
]

SQRT2 = math.sqrt(2.0)
LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)
EQUIVALENT = "EQUIVALENT"
SINGULAR = "SINGULAR"
UNDECIDED = "UNDECIDED"
#: depth at which infinite products over a tail generator are cut
DEFAULT_DEPTH = 256


# -- the complementary normal distribution function ---------------------------

def normal_sf(x):
    """``Phi_bar(x) = P(N(0,1) > x)``; complex arguments use the analytic continuation."""
    if isinstance(x, complex):
        return complex(0.5 * special.erfc(x / SQRT2))
    return 0.5 * math.erfc(x / SQRT2)


def log_normal_sf(x: float) -> float:
    """``log Phi_bar(x)``, accurate in both tails."""
    if x == -math.inf:
        return 0.0
    return float(special.log_ndtr(-x))


def _upper_isf(r: float) -> float:
    """``x >= 0`` with ``Phi_bar(x) = r`` for ``0 < r <= 1/2``.

    Newton on ``log Phi_bar(x) - log r`` kept inside a shrinking bracket,
    with a bisection step whenever Newton would leave it.
    """
    if r == 0.5:
        return 0.0
    target = math.log(r)
    lo, hi = 0.0, 40.0
    x = min(math.sqrt(-2.0 * target), hi)
    for _ in range(200):
        lsf = log_normal_sf(x)
        f = lsf - target
        if f > 0:
            lo = x
        else:
            hi = x
        slope = -math.exp(-0.5 * x * x - LOG_SQRT_2PI - lsf)
        step = f / slope
        nxt = x - step
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= 4e-16 * max(1.0, x):
            return nxt
        x = nxt
    return x


def normal_isf(q: float | None = None, *, complement: float | None = None) -> float:
    """Solve ``Phi_bar(x) = q``.

    Pass ``complement = 1 - q`` instead when ``q`` is close to 1; the
    inversion then runs on the small side and keeps full relative accuracy.
    """
    if complement is not None:
        p = float(complement)
        if not 0.0 <= p <= 1.0:
            raise ValueError("complement must lie in [0, 1]")
        if p == 0.0:
            return -math.inf
        return -normal_isf(p)
    q = float(q)
    if not 0.0 <= q <= 1.0:
        raise ValueError("probability must lie in [0, 1]")
    if q == 0.0:
        return math.inf
    if q == 1.0:
        return -math.inf
    if q <= 0.5:
        return _upper_isf(q)
    return -_upper_isf(1.0 - q)


def half_line_integral(beta, floor: float) -> complex:
    """``int_floor^inf exp(beta y) dgamma(y) = exp(beta^2/2) Phi_bar(floor - beta)``.

    Uses the scaled complementary error function when ``floor - beta`` has
    nonnegative real part so neither factor overflows.
    """
    beta = complex(beta)
    if floor == -math.inf:
        return np.exp(0.5 * beta * beta)
    w = floor - beta
    if w.real >= 0:
        return complex(0.5 * np.exp(0.5 * beta * beta - 0.5 * w * w) * special.erfcx(w / SQRT2))
    return complex(np.exp(0.5 * beta * beta) * 0.5 * special.erfc(w / SQRT2))


# -- boundary sequences -------------------------------------------------------

class GeometricTail:
    """``Phi_bar(a_n) = exp(t^(2n+1))`` for ``-log 2 < t < 0``.

    The log-masses ``t^(2n+1)`` form a geometric series, so
    ``mu(A) = exp(t^3 / (1 - t^2))`` and every tail sum is known exactly.
    """

    kind = "geometric"

    def __init__(self, t: float):
        t = float(t)
        if not -math.log(2) < t < 0:
            raise ValueError("geometric parameter t must satisfy -log 2 < t < 0")
        self.t = t

    def value(self, n: int) -> float:
        # Phi_bar(-a_n) = 1 - t_n exactly representable through expm1
        return normal_isf(complement=-math.expm1(self.t ** (2 * n + 1)))

    def tail_log_bounds(self, m: int):
        s = self.t ** (2 * m + 3) / (1 - self.t**2)
        return s, s

    def log_product(self) -> float:
        return self.t**3 / (1 - self.t**2)

    def to_dict(self):
        return {"kind": "geometric", "t": self.t}


class ConstantTail:
    """``a_n = value``; only ``-inf`` (no constraint) keeps the box of positive measure."""

    kind = "constant"

    def __init__(self, value: float):
        value = float(value)
        if value > 0:
            raise ValueError("boundary values must be <= 0")
        self.v = value

    def value(self, n):
        return self.v

    def tail_log_bounds(self, m):
        return (0.0, 0.0) if self.v == -math.inf else None

    def to_dict(self):
        return {"kind": "constant", "value": None if self.v == -math.inf else self.v}


class ShiftedTail:
    """``a_n = base_n - scale * n^(-power)`` with ``scale >= 0``."""

    kind = "shifted"

    def __init__(self, base: "BoundarySequence", scale: float, power: float):
        if scale < 0 or power <= 0:
            raise ValueError("shifted tail needs scale >= 0 and power > 0")
        self.base = base
        self.scale = float(scale)
        self.power = float(power)

    def offset(self, n: int) -> float:
        return self.scale * n ** (-self.power)

    def value(self, n):
        return self.base.value(n) - self.offset(n)

    def tail_log_bounds(self, m):
        # moving the boundary down can only enlarge each factor
        inner = self.base.tail_log_bounds(m)
        return None if inner is None else (inner[0], 0.0)

    def to_dict(self):
        return {"kind": "shifted", "base": self.base.to_dict(),
                "scale": self.scale, "power": self.power}


def _tail_from_dict(data):
    if data is None:
        return None
    kind = data.get("kind")
    if kind == "geometric":
        return GeometricTail(data["t"])
    if kind == "constant":
        v = data["value"]
        return ConstantTail(-math.inf if v is None else v)
    if kind == "shifted":
        return ShiftedTail(BoundarySequence.from_dict(data["base"]), data["scale"], data["power"])
    raise ValueError(f"unknown generator kind {kind!r}")


class BoundarySequence:
    """``a_1, a_2, ...`` given by an explicit prefix and an optional tail generator.

    Entries beyond the prefix come from the generator, indexed by absolute
    position; with no generator they are ``-inf`` (no constraint).
    """

    def __init__(self, prefix: Sequence[float] = (), generator=None):
        prefix = tuple(-math.inf if x is None else float(x) for x in prefix)
        for x in prefix:
            if x > 0 or math.isnan(x):
                raise ValueError(f"boundary value {x} is not <= 0")
        self.prefix = prefix
        self.generator = generator
        self._cache: dict[int, float] = {}
        self._log_mass = None

    @classmethod
    def geometric(cls, t: float, materialize: int = 0) -> "BoundarySequence":
        gen = GeometricTail(t)
        return cls([gen.value(n) for n in range(1, materialize + 1)], gen)

    @classmethod
    def constant(cls, value: float) -> "BoundarySequence":
        return cls((), ConstantTail(value))

    @classmethod
    def shifted(cls, base: "BoundarySequence", scale: float, power: float) -> "BoundarySequence":
        return cls((), ShiftedTail(base, scale, power))

    def depth(self) -> int:
        """Index after which only generator structure determines the sequence."""
        inner = self.generator.base.depth() if isinstance(self.generator, ShiftedTail) else 0
        return max(len(self.prefix), inner)

    def value(self, n: int) -> float:
        if n < 1:
            raise IndexError("sequences are indexed from 1")
        if n <= len(self.prefix):
            return self.prefix[n - 1]
        if self.generator is None:
            return -math.inf
        if n not in self._cache:
            x = self.generator.value(n)
            if x > 0:
                raise ValueError(f"generator produced a_{n} = {x} > 0")
            self._cache[n] = x
        return self._cache[n]

    def values(self, n_max: int) -> list[float]:
        return [self.value(n) for n in range(1, n_max + 1)]

    def log_sf(self, n: int) -> float:
        return log_normal_sf(self.value(n))

    def tail_log_bounds(self, m: int):
        """Bounds ``(lo, hi)`` on ``sum_{n>m} log Phi_bar(a_n)``, or None if not certifiable."""
        if m < self.depth():
            raise ValueError(f"tail bounds start after index {self.depth()}")
        if self.generator is None:
            return 0.0, 0.0
        return self.generator.tail_log_bounds(m)

    def log_mass(self, depth: int | None = None) -> float:
        """``log mu(A)`` from factors up to ``depth`` plus the midpoint of the tail bounds."""
        if depth is None and self._log_mass is not None:
            return self._log_mass
        m = max(self.depth(), DEFAULT_DEPTH if self.generator is not None else 0) \
            if depth is None else max(depth, self.depth())
        bounds = self.tail_log_bounds(m)
        if bounds is None:
            raise ValueError("box has zero Gaussian measure (sequence not in X)")
        total = math.fsum(self.log_sf(n) for n in range(1, m + 1)) + 0.5 * (bounds[0] + bounds[1])
        if depth is None:
            self._log_mass = total
        return total

    def log_tail_mass(self, M: int) -> float:
        """``log`` of the measure of the coordinates after ``M``."""
        return self.log_mass() - math.fsum(self.log_sf(n) for n in range(1, M + 1))

    def mass(self) -> float:
        return math.exp(self.log_mass())

    def to_dict(self):
        return {"prefix": [None if x == -math.inf else x for x in self.prefix],
                "generator": None if self.generator is None else self.generator.to_dict()}

    @classmethod
    def from_dict(cls, data) -> "BoundarySequence":
        if "prefix" not in data:
            raise KeyError("prefix")
        return cls(data["prefix"], _tail_from_dict(data.get("generator")))

    def __eq__(self, other):
        return isinstance(other, BoundarySequence) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self.to_dict()))

    def __repr__(self):
        return f"BoundarySequence({self.to_dict()!r})"


def construct_X_sequence(t: float, n_max: int) -> BoundarySequence:
    """Box of positive Gaussian measure with ``Phi_bar(a_n) = exp(t^(2n+1))``.

    The first ``n_max`` entries are materialized by quantile inversion; the
    geometric generator supplies the rest and the closed-form ``log mu(A)``.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    return BoundarySequence.geometric(t, materialize=n_max)


def inversion_error(seq: BoundarySequence, n_max: int) -> float:
    """``max_n |Phi_bar(a_n) - exp(t^(2n+1))|`` for a geometric sequence."""
    gen = seq.generator
    if not isinstance(gen, GeometricTail):
        raise TypeError("inversion error is defined for geometric sequences")
    return max(abs(normal_sf(seq.value(n)) - math.exp(gen.t ** (2 * n + 1)))
               for n in range(1, n_max + 1))


def x_membership(a: BoundarySequence, tol: float = 1e-10, n_max: int = 200) -> Certificate:
    """Certify ``mu(A) > 0`` by a factor-by-factor product plus a tail bound.

    ``claimed_bound`` is the certified lower bound on ``mu(A)`` and
    ``achieved`` the point estimate; without a certifiable tail the
    certificate fails and records where the partial product dropped below
    ``tol``.
    """
    m = max(n_max, a.depth()) if a.generator is not None else len(a.prefix)
    log_partial = 0.0
    checkpoints, crossing = [], None
    for n in range(1, m + 1):
        log_partial += a.log_sf(n)
        if crossing is None and log_partial < math.log(tol):
            crossing = n
        if n & (n - 1) == 0 or n == m:
            checkpoints.append({"n": n, "log_partial_product": log_partial})
    bounds = a.tail_log_bounds(m)
    meta = {"depth": m, "crossing_n": crossing}
    gen = a.generator
    if isinstance(gen, GeometricTail) and all(x == gen.value(n) for n, x in enumerate(a.prefix, 1)):
        meta["closed_form"] = math.exp(gen.log_product())
    if bounds is None:
        meta["reason"] = "tail of log-product not summable"
        return Certificate("x_membership", 0.0, math.exp(log_partial), FAIL,
                           witnesses=checkpoints, metadata=meta)
    lower = math.exp(log_partial + bounds[0])
    upper = math.exp(log_partial + bounds[1])
    estimate = math.exp(log_partial + 0.5 * (bounds[0] + bounds[1]))
    if "closed_form" in meta:
        meta["closed_form_deviation"] = abs(estimate - meta["closed_form"])
    return Certificate("x_membership", lower, estimate, PASS if lower > 0 else FAIL,
                       witnesses=checkpoints, truncation_error=upper - lower, metadata=meta)


# -- cylinder vectors ---------------------------------------------------------

@dataclass(frozen=True)
class CylinderFactor:
    """``exp(-alpha0 s - s^2/4) exp((alpha0 + s/2) y) 1[y >= floor0 + s]``.

    ``s`` is the accumulated translation.  Storing the untranslated data
    makes the result of a sequence of translations depend only on their sum.
    """

    alpha0: complex
    floor0: float
    shift: float = 0.0

    @property
    def alpha(self) -> complex:
        return self.alpha0 + 0.5 * self.shift

    @property
    def floor(self) -> float:
        return self.floor0 + self.shift

    @property
    def weight(self) -> complex:
        s = self.shift
        return complex(np.exp(-self.alpha0 * s - 0.25 * s * s)) if s else 1.0

    def settled(self, ambient: float) -> "CylinderFactor":
        """Same function on ``[ambient, inf)`` with the floor raised to the ambient one."""
        if self.floor0 + self.shift >= ambient:
            return self
        return CylinderFactor(self.alpha0, ambient - self.shift, self.shift)

    def translated(self, x: float, ambient: float) -> "CylinderFactor":
        f = self.settled(ambient)
        return CylinderFactor(f.alpha0, f.floor0, f.shift + x)


def _default_factor(ambient: float) -> CylinderFactor:
    return CylinderFactor(0j, ambient, 0.0)


class GaussianCylinderVector:
    """Finite sum of product terms ``coeff prod_k exp(alpha_k y_k) 1[y_k >= c_k]``.

    Coordinates without a factor carry the constant 1 on ``[a_k, inf)``.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=()):
        merged: dict[tuple, complex] = {}
        for coeff, factors in terms:
            key = tuple(sorted(factors.items() if isinstance(factors, Mapping) else factors))
            merged[key] = merged.get(key, 0j) + complex(coeff)
        self.terms = tuple((c, key) for key, c in merged.items() if c != 0)

    @classmethod
    def product(cls, factors: Mapping[int, tuple] | None = None, coeff: complex = 1.0):
        """One term from ``{k: (alpha_k, c_k)}`` with 1-based coordinates ``k``."""
        out = {}
        for k, (alpha, floor) in (factors or {}).items():
            if int(k) < 1:
                raise ValueError("coordinates are numbered from 1")
            out[int(k)] = CylinderFactor(complex(alpha), float(floor), 0.0)
        return cls([(coeff, out)])

    @classmethod
    def constant(cls, coeff: complex = 1.0):
        return cls([(coeff, {})])

    def support(self) -> set[int]:
        return {k for _, factors in self.terms for k, _ in factors}

    def __add__(self, other):
        if not isinstance(other, GaussianCylinderVector):
            return NotImplemented
        return GaussianCylinderVector(self.terms + other.terms)

    def __neg__(self):
        return GaussianCylinderVector([(-c, f) for c, f in self.terms])

    def __sub__(self, other):
        if not isinstance(other, GaussianCylinderVector):
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return GaussianCylinderVector([(scalar * c, f) for c, f in self.terms])

    __rmul__ = __mul__

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"GaussianCylinderVector({list(self.terms)!r})"

    def map_factors(self, rule, coords) -> "GaussianCylinderVector":
        """Replace factor ``k`` of every term by ``rule(k, factor_or_None)`` for ``k`` in ``coords``."""
        out = []
        for c, factors in self.terms:
            fac = dict(factors)
            for k in coords:
                fac[k] = rule(k, fac.get(k))
            out.append((c, fac))
        return GaussianCylinderVector(out)


def _factor_or_default(f, ambient):
    return _default_factor(ambient) if f is None else f.settled(ambient)


def cyl_inner(u: GaussianCylinderVector, v: GaussianCylinderVector, a: BoundarySequence) -> complex:
    """``<u, v>`` in ``L^2(A, gamma|_A)``, conjugate-linear in ``u``.

    Equals ``mu(A) prod_k J_k / Phi_bar(a_k)`` over the coordinates carrying
    a factor in either vector, with ``J_k = int_{c_k}^inf exp(beta_k y) dgamma``,
    ``beta_k = conj(alpha_k) + alpha'_k`` and ``c_k`` the larger floor.
    Summation over terms and coordinates runs in ascending order.
    """
    if not u.terms or not v.terms:
        return 0j
    mass = a.mass()
    total = 0j
    for (cu, fu), (cv, fv) in itertools.product(u.terms, v.terms):
        du, dv = dict(fu), dict(fv)
        value = np.conj(cu) * cv
        for k in sorted(set(du) | set(dv)):
            ak = a.value(k)
            f = _factor_or_default(du.get(k), ak)
            g = _factor_or_default(dv.get(k), ak)
            beta = np.conj(f.alpha) + g.alpha
            J = half_line_integral(beta, max(f.floor, g.floor, ak))
            value *= np.conj(f.weight) * g.weight * J / normal_sf(ak)
        total += value
    return complex(mass * total)


def _as_translation(x) -> dict[int, float]:
    if isinstance(x, Mapping):
        out = {int(k): float(v) for k, v in x.items()}
    else:
        out = {k: float(v) for k, v in enumerate(x, start=1)}
    for k, v in out.items():
        if k < 1:
            raise ValueError("coordinates are numbered from 1")
        if not v >= 0:
            raise ValueError(f"translation component x_{k} = {v} is negative")
    return {k: v for k, v in out.items() if v != 0}


def vA_apply(a: BoundarySequence, x, v: GaussianCylinderVector) -> GaussianCylinderVector:
    """``V^A_x v`` for a finitely supported ``x >= 0`` (mapping ``k -> x_k`` or a sequence)."""
    x = _as_translation(x)
    return v.map_factors(
        lambda k, f: _factor_or_default(f, a.value(k)).translated(x[k], a.value(k)), sorted(x))


def vA_adjoint(a: BoundarySequence, x, v: GaussianCylinderVector) -> GaussianCylinderVector:
    """``(V^A_x)^* v``: translation by ``-x`` with the floor clipped at ``a_k``."""
    x = _as_translation(x)

    def rule(k, f):
        ak = a.value(k)
        return _factor_or_default(f, ak).translated(-x[k], ak).settled(ak)

    return v.map_factors(rule, sorted(x))


class GaussianRep(RepresentationHandle):
    """``V^A`` restricted to the first ``dim`` directions."""

    def __init__(self, a: BoundarySequence, dim: int):
        self.a = a
        self.dim = int(dim)

    def _x(self, t):
        if isinstance(t, Number):
            t = (t,) * self.dim
        t = tuple(t)
        if len(t) != self.dim:
            raise ValueError(f"translation has {len(t)} components, expected {self.dim}")
        return t

    def apply(self, t, v):
        return vA_apply(self.a, self._x(t), v)

    def apply_adjoint(self, t, v):
        return vA_adjoint(self.a, self._x(t), v)

    def inner(self, u, v):
        return cyl_inner(u, v, self.a)

    def direction_kind(self, i):
        # translation on the whole line is unitary; a finite boundary makes it pure
        return "pure" if self.a.value(i) > -math.inf else "unitary"

    def to_dict(self):
        return {"kind": "gauss", "dim": self.dim, "sequence": self.a.to_dict()}


# -- equivalence of boxes -----------------------------------------------------

@dataclass
class HellingerReport:
    """Bracket for the normalized Hellinger affinity ``I`` of two boxes."""

    c: list
    c2_partial: list
    integral_partial: list
    partial_products: list
    interval: tuple
    verdict: str
    depth: int
    crossing_n: float | None = None
    monotone: bool = True
    metadata: dict = field(default_factory=dict)

    @property
    def estimate(self) -> float:
        return self.partial_products[-1] if self.partial_products else 1.0

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "interval": list(self.interval),
            "estimate": self.estimate,
            "depth": self.depth,
            "crossing_n": self.crossing_n,
            "monotone": self.monotone,
            "c": list(self.c),
            "c2_partial": list(self.c2_partial),
            "integral_partial": list(self.integral_partial),
            "partial_products": list(self.partial_products),
            "metadata": dict(self.metadata),
        }


class _Offset(NamedTuple):
    """``a_n - b_n = sign * scale * n^(-power)`` beyond index ``start``."""

    scale: float
    power: float
    start: int


def _offset_profile(a: BoundarySequence, b: BoundarySequence):
    if a.generator is None and b.generator is None:
        return _Offset(0.0, 1.0, max(len(a.prefix), len(b.prefix)))
    if a.generator is not None and b.generator is not None \
            and a.generator.to_dict() == b.generator.to_dict():
        return _Offset(0.0, 1.0, max(a.depth(), b.depth()))
    for x, y in ((a, b), (b, a)):
        gen = y.generator
        if isinstance(gen, ShiftedTail) and gen.base == x:
            return _Offset(gen.scale, gen.power, max(len(y.prefix), len(x.prefix)))
    return None


def _offset_value(a, b, profile, n):
    if profile is not None and n > profile.start:
        return profile.scale * n ** (-profile.power)
    an, bn = a.value(n), b.value(n)
    if an == bn:
        return 0.0
    return an - bn


def _tail_lower_sum(scale, power, m, N):
    """Lower bound for ``scale^2 sum_{m<n<=N} n^(-2 power)``."""
    q = 2 * power
    if q == 1:
        return scale**2 * math.log((N + 1) / (m + 1))
    return scale**2 * ((N + 1) ** (1 - q) - (m + 1) ** (1 - q)) / (1 - q)


def kakutani_certify(a: BoundarySequence, b: BoundarySequence, n_max: int = 200,
                     tol: float = 1e-6) -> HellingerReport:
    """Decide whether the restricted Gaussians on ``A`` and ``B`` are equivalent.

    With ``c_n = a_n - b_n`` the translation by ``c`` carries ``A`` onto ``B``,
    and each coordinate contributes the normalized affinity

        h_n = exp(-c_n^2/8) Phi_bar((a_n + b_n)/2) / sqrt(Phi_bar(a_n) Phi_bar(b_n)),

    which is at most 1, so partial products decrease.  Log-concavity of
    ``Phi_bar`` gives ``log h_n >= -c_n^2/8``, hence a certified lower bound
    whenever ``sum c_n^2`` has a certified tail; the verdict is then
    ``EQUIVALENT``.  When ``c_n = s n^(-p)`` with ``2p <= 1`` the upper bound
    ``log h_n <= -c_n^2/8 - (log Phi_bar(a_n) + log Phi_bar(b_n))/2`` is
    summed analytically to find a depth ``crossing_n`` beyond which the
    product is certified below ``tol``; the verdict is ``SINGULAR``.
    Otherwise ``UNDECIDED`` with the bracket ``[0, I_m]``.
    """
    profile = _offset_profile(a, b)
    m = max(n_max, a.depth(), b.depth())
    cs, c2, integral, products = [], [], [], []
    log_I = log_int = sum_c2 = 0.0
    monotone, crossing = True, None
    for n in range(1, m + 1):
        c = _offset_value(a, b, profile, n)
        an, bn = a.value(n), b.value(n)
        mid = -math.inf if bn == -math.inf else bn + 0.5 * c
        log_mid = log_normal_sf(mid)
        step = -c * c / 8 + log_mid - 0.5 * (log_normal_sf(an) + log_normal_sf(bn))
        if step > 1e-14:
            monotone = False
        prev = log_I
        log_I += min(step, 0.0)
        if log_I > prev:
            monotone = False
        sum_c2 += c * c
        log_int += log_mid
        cs.append(c)
        c2.append(sum_c2)
        integral.append(math.exp(log_int))
        products.append(math.exp(log_I))
        if crossing is None and log_I < math.log(tol):
            crossing = n

    upper = products[-1] if products else 1.0
    meta = {"tol": tol, "raw_estimate": math.exp(log_int - sum_c2 / 8),
            "normalization": "affinity of the normalized restrictions"}
    if crossing is not None:
        return HellingerReport(cs, c2, integral, products, (0.0, upper), SINGULAR, m,
                               crossing, monotone, {**meta, "extrapolated": False})
    if profile is not None and (profile.scale == 0 or 2 * profile.power > 1):
        q = 2 * profile.power
        tail = 0.0 if profile.scale == 0 else profile.scale**2 * m ** (1 - q) / (q - 1)
        lower = math.exp(log_I - tail / 8)
        return HellingerReport(cs, c2, integral, products, (lower, upper), EQUIVALENT, m,
                               None, monotone, {**meta, "c2_tail_bound": tail})
    ta = a.tail_log_bounds(m)
    tb = b.tail_log_bounds(m)
    if profile is not None and ta is not None and tb is not None:
        slack = -0.5 * (ta[0] + tb[0])
        need = 8 * (log_I + slack - math.log(tol))
        q = 2 * profile.power
        if q == 1:
            N = (m + 1) * math.exp(need / profile.scale**2) - 1
        else:
            N = ((m + 1) ** (1 - q) + need * (1 - q) / profile.scale**2) ** (1 / (1 - q)) - 1
        N = max(float(math.floor(N)), float(m))
        while _tail_lower_sum(profile.scale, profile.power, m, N) <= need:
            N = math.floor(N * (1 + 1e-12)) + 1.0
        return HellingerReport(cs, c2, integral, products, (0.0, tol), SINGULAR, m,
                               N, monotone,
                               {**meta, "extrapolated": True, "mass_tail_slack": slack})
    return HellingerReport(cs, c2, integral, products, (0.0, upper), UNDECIDED, m,
                           None, monotone, meta)


# -- finite-restriction intertwiner -------------------------------------------

def _translation_between(a: BoundarySequence, b: BoundarySequence, k: int) -> float:
    ak, bk = a.value(k), b.value(k)
    if ak == bk:
        return 0.0
    if math.isinf(ak) or math.isinf(bk):
        raise ValueError(f"coordinate {k}: cannot translate between {ak} and {bk}")
    return bk - ak


def _restriction_map(a, b, M):
    shifts = {k: _translation_between(a, b, k) for k in range(1, M + 1)}
    ratio = math.exp(0.5 * (a.log_tail_mass(M) - b.log_tail_mass(M)))

    def W(v: GaussianCylinderVector) -> GaussianCylinderVector:
        moved = v.map_factors(
            lambda k, f: _factor_or_default(f, a.value(k)).translated(shifts[k], a.value(k)),
            range(1, M + 1))
        return ratio * moved

    return W, shifts


def finite_restriction_intertwiner(a: BoundarySequence, b: BoundarySequence, n: int,
                                   t_grid, test_vectors: Sequence[GaussianCylinderVector], *,
                                   tol: float = 1e-10) -> Certificate:
    """Unitary ``W`` between finite restrictions intertwining ``V^A_t`` and ``V^B_t``, ``t`` in ``R_+^n``.

    On coordinates ``k <= M`` (``M`` covers ``n`` and the support of the test
    vectors) ``W`` is the weighted translation by ``b_k - a_k``, the same
    operator as ``V_x`` with a possibly negative ``x``; the remaining
    coordinates are rescaled by ``sqrt(mu(A_tail) / mu(B_tail))``.  The
    certificate reports relative deviations for norm and Gram preservation
    and for ``W V^A_t = V^B_t W`` on every grid point and test vector.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    vectors = list(test_vectors)
    M = max([n] + [max(v.support(), default=0) for v in vectors])
    W, shifts = _restriction_map(a, b, M)
    images = [W(v) for v in vectors]
    norms = [math.sqrt(max(cyl_inner(v, v, a).real, 0.0)) for v in vectors]
    norm_dev = gram_dev = inter_dev = 0.0
    witnesses = []
    for j, (v, Wv) in enumerate(zip(vectors, images)):
        scale = max(norms[j], 1e-300)
        nb = math.sqrt(max(cyl_inner(Wv, Wv, b).real, 0.0))
        norm_dev = max(norm_dev, abs(nb - norms[j]) / scale)
        for k in range(j + 1, len(vectors)):
            g = abs(cyl_inner(Wv, images[k], b) - cyl_inner(v, vectors[k], a))
            gram_dev = max(gram_dev, g / max(scale * norms[k], 1e-300))
        for t in t_grid:
            t = tuple(float(x) for x in (t if not isinstance(t, Number) else (t,)))
            if len(t) > n:
                raise ValueError(f"grid point {t} has more than n={n} components")
            lhs = W(vA_apply(a, t, v))
            rhs = vA_apply(b, t, Wv)
            diff = lhs - rhs
            dev = math.sqrt(max(cyl_inner(diff, diff, b).real, 0.0)) / scale
            if dev > inter_dev:
                witnesses = [{"vector": j, "t": list(t), "deviation": dev}]
            inter_dev = max(inter_dev, dev)
    worst = max(norm_dev, gram_dev, inter_dev)
    return Certificate.bound(
        "finite_restriction_intertwiner", tol, worst, witnesses=witnesses,
        metadata={"n": n, "coordinates": M, "translation": [shifts[k] for k in range(1, M + 1)],
                  "norm_deviation": norm_dev, "gram_deviation": gram_dev,
                  "intertwining_deviation": inter_dev})


# -- masses of the Wold pieces ------------------------------------------------

class WoldFailureMasses(NamedTuple):
    """``masses[g]`` is ``mu(X_g)`` with bit ``i-1`` of ``g`` giving ``g(i)``."""

    masses: np.ndarray
    max_mass: float
    d: int

    def mass(self, g: Sequence[int]) -> float:
        index = sum(int(bit) << i for i, bit in enumerate(g))
        return float(self.masses[index])


@lru_cache(maxsize=None)
def _popcounts(d: int) -> np.ndarray:
    idx = np.arange(1 << d, dtype=np.int64)
    return np.sum((idx[:, None] >> np.arange(d)) & 1, axis=1)


def wold_failure_masses(nu: Sequence[float], d: int) -> WoldFailureMasses:
    """``mu(X_g) = prod_i nu(g(i))`` for every ``g`` in ``{0,1}^d``.

    ``max_mass`` is ``max(nu)^d``, the largest mass any single Wold piece
    can have, which tends to 0 with ``d``.
    """
    nu0, nu1 = (float(x) for x in nu)
    if nu0 < 0 or nu1 < 0 or abs(nu0 + nu1 - 1.0) > 1e-12:
        raise ValueError("nu must be a probability vector on {0, 1}")
    if not 1 <= d <= 26:
        raise ValueError("d must lie in 1..26")
    ones = _popcounts(d)
    table_p0 = np.array([nu0 ** (d - k) * nu1**k for k in range(d + 1)])
    masses = table_p0[ones]
    return WoldFailureMasses(masses, float(max(nu0, nu1) ** d), d)
