"""Arithmetic substrate: extended reals, the Cayley map, arcs of the circle
R-bar = R u {inf}, continued fractions and Diophantine probing.

The extended real line is treated as a circle with a single unsigned point at
infinity.  The Cayley map t -> i(t-i)/(t+i) identifies it with the unit circle
in C; all arc geometry (orientation, arclength, containment) is done in the
Cayley image, where it is uniform and numerically stable near infinity.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

TWO_PI = 2.0 * math.pi

# Continued-fraction expansion of a float stops once a partial quotient
# exceeds this; double precision cannot distinguish the tail from rational.
PARTIAL_QUOTIENT_CAP = 10**8

UNIT_CIRCLE_TOL = 1e-9


class DomainError(ValueError):
    """Input outside the documented domain of an operation."""


class _Infinity:
    """The single unsigned infinity of the extended real line.

    +inf and -inf floats compare equal to it; ordered comparisons are
    deliberately not defined (ordering near infinity only makes sense
    inside arc logic).
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "inf"

    def __eq__(self, other):
        if isinstance(other, _Infinity):
            return True
        return isinstance(other, (int, float)) and math.isinf(other)

    def __hash__(self):
        return hash(math.inf)


INF = _Infinity()


def ext(value):
    """Canonicalize a value into the extended reals: floats stay floats,
    +/-inf collapse to the single INF point, NaN is rejected."""
    if value is INF or isinstance(value, _Infinity):
        return INF
    v = float(value)
    if math.isnan(v):
        raise DomainError("NaN is not a point of the extended real line")
    if math.isinf(v):
        return INF
    return v


def is_inf(value):
    return value is INF or (isinstance(value, float) and math.isinf(value))


def ext_eq(a, b, tol=0.0):
    """Equality on the extended reals (both infinities identified)."""
    a, b = ext(a), ext(b)
    if a is INF or b is INF:
        return a is INF and b is INF
    return abs(a - b) <= tol


def fmt_ext(value):
    """Serialize an extended real; infinity becomes the literal token 'inf'."""
    value = ext(value)
    return "inf" if value is INF else repr(value)


# ---------------------------------------------------------------------------
# Cayley transform
# ---------------------------------------------------------------------------

def cayley(t):
    """Map an extended real to the unit circle: t -> i(t-i)/(t+i), inf -> i."""
    t = ext(t)
    if t is INF:
        return 1j
    return 1j * (t - 1j) / (t + 1j)


def inverse_cayley(u):
    """Inverse of :func:`cayley`; rejects inputs off the unit circle."""
    u = complex(u)
    if abs(abs(u) - 1.0) > UNIT_CIRCLE_TOL:
        raise DomainError(f"inverse_cayley: |u| = {abs(u)} is not 1 within {UNIT_CIRCLE_TOL}")
    den = u - 1j
    if abs(den) < 1e-9:
        return INF
    return ((1.0 - 1j * u) / den).real


def cayley_angle(t):
    """Angle in [0, 2*pi) of the Cayley image of t.

    The angle increases as t moves in the positive direction along R-bar,
    wrapping once per full loop; inf sits at pi/2.
    """
    return cmath.phase(cayley(t)) % TWO_PI


# ---------------------------------------------------------------------------
# Arcs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Arc:
    """Positively oriented arc of the extended real circle from start to end.

    ``start == end`` with ``full_circle=True`` encodes the circle minus a
    point, e.g. (0, 0) = R-bar \\ {0}.  Geometry lives in Cayley angles, so
    arcs through infinity need no special casing.
    """

    start: object
    end: object
    full_circle: bool = False
    _angle0: float = field(init=False, repr=False, compare=False, default=0.0)
    _sweep: float = field(init=False, repr=False, compare=False, default=0.0)

    def __post_init__(self):
        s, e = ext(self.start), ext(self.end)
        object.__setattr__(self, "start", s)
        object.__setattr__(self, "end", e)
        a0 = cayley_angle(s)
        sweep = (cayley_angle(e) - a0) % TWO_PI
        if sweep == 0.0:
            if not ext_eq(s, e):
                # distinct endpoints that collide in angle: resolution limit
                raise DomainError("arc endpoints indistinguishable on the circle")
            sweep = TWO_PI if self.full_circle else 0.0
        object.__setattr__(self, "_angle0", a0)
        object.__setattr__(self, "_sweep", sweep)

    @property
    def sweep(self):
        """Angular length of the arc in the Cayley image, in (0, 2*pi]."""
        return self._sweep

    def point_at(self, frac):
        """Point at the given fraction of Cayley arclength, frac in [0, 1]."""
        if not 0.0 <= frac <= 1.0:
            raise DomainError(f"arc fraction {frac} outside [0, 1]")
        ang = self._angle0 + frac * self._sweep
        return inverse_cayley(cmath.exp(1j * ang))

    def fraction_of(self, t, tol=1e-9):
        """Inverse of :func:`point_at`; raises DomainError if t is off-arc."""
        rel = (cayley_angle(t) - self._angle0) % TWO_PI
        if rel > self._sweep:
            # allow round-off just past either endpoint
            if rel - self._sweep < tol:
                rel = self._sweep
            elif TWO_PI - rel < tol:
                rel = 0.0
            else:
                raise DomainError(f"{t!r} is not on the arc")
        return rel / self._sweep if self._sweep > 0 else 0.0

    def contains(self, t, closed=True):
        try:
            frac = self.fraction_of(t)
        except DomainError:
            return False
        if closed:
            return True
        return 1e-12 < frac < 1.0 - 1e-12

    def interior_contains_infinity(self):
        if is_inf(self.start) or is_inf(self.end):
            return False
        rel = (cayley_angle(INF) - self._angle0) % TWO_PI
        return 0.0 < rel < self._sweep


@dataclass(frozen=True)
class ArcPath:
    """A directed traversal of an Arc: parameter s in [-1, 0] moves at
    constant Cayley arclength speed from ``a`` (s = -1) to ``b`` (s = 0).

    ``forward`` records whether the traversal agrees with the arc's positive
    orientation.  This is the parametrization used both for the glued circle
    map and for gap coordinates on the hull.
    """

    arc: Arc
    forward: bool

    @property
    def a(self):
        """The s = -1 endpoint."""
        return self.arc.start if self.forward else self.arc.end

    @property
    def b(self):
        """The s = 0 endpoint."""
        return self.arc.end if self.forward else self.arc.start

    def value(self, s):
        if not -1.0 <= s <= 0.0:
            raise DomainError(f"arc parameter {s} outside [-1, 0]")
        frac = s + 1.0 if self.forward else -s
        return self.arc.point_at(frac)

    def parameter_of(self, t):
        frac = self.arc.fraction_of(t)
        return frac - 1.0 if self.forward else -frac

    def contains(self, t, closed=True):
        return self.arc.contains(t, closed=closed)


def arc_path_between(a, b, via_infinity):
    """Directed path from a to b along one of the two arcs with those
    endpoints: the one through infinity or the bounded one.

    Requires both endpoints finite (otherwise the choice is ambiguous).
    """
    a, b = ext(a), ext(b)
    if is_inf(a) or is_inf(b):
        raise DomainError("arc choice through/avoiding infinity needs finite endpoints")
    if ext_eq(a, b):
        raise DomainError("degenerate arc: equal endpoints")
    fwd = Arc(a, b)
    if fwd.interior_contains_infinity() == bool(via_infinity):
        return ArcPath(fwd, forward=True)
    return ArcPath(Arc(b, a), forward=False)


# ---------------------------------------------------------------------------
# Frequencies and continued fractions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Frequency:
    """A frequency alpha in (0, 1): exact rational p/q, a float treated as
    irrational, or an irrational given by its partial quotients."""

    kind: str               # 'rational' | 'irrational' | 'quotients'
    p: int = 0
    q: int = 1
    x: float = 0.0
    quotients: tuple = ()

    @staticmethod
    def rational(p, q):
        if q <= 0:
            raise DomainError("denominator must be positive")
        g = math.gcd(p, q)
        p, q = p // g, q // g
        if p == q == 1:
            # the period-1 approximant: alpha = 1 acts as the identity shift
            return Frequency(kind="rational", p=1, q=1, x=1.0)
        if not 0 < p < q:
            raise DomainError("frequency must lie in (0,1)")
        return Frequency(kind="rational", p=p, q=q, x=p / q)

    @staticmethod
    def irrational(x):
        x = float(x)
        if not 0.0 < x < 1.0:
            raise DomainError("frequency must lie in (0,1)")
        return Frequency(kind="irrational", x=x)

    @staticmethod
    def from_partial_quotients(quotients):
        """Irrational alpha = [0; a1, a2, ...] given by its partial quotients."""
        qs = tuple(int(a) for a in quotients)
        if not qs or any(a < 1 for a in qs):
            raise DomainError("partial quotients must be positive integers")
        p0, q0, p1, q1 = 1, 0, 0, 1
        for a in qs:
            p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        return Frequency(kind="quotients", quotients=qs, x=p1 / q1)

    @staticmethod
    def golden():
        return Frequency.irrational((math.sqrt(5.0) - 1.0) / 2.0)

    @property
    def is_rational(self):
        return self.kind == "rational"

    @property
    def value(self):
        return self.x

    def exact_fraction(self):
        if not self.is_rational:
            raise DomainError("exact fraction only defined for rational frequencies")
        return Fraction(self.p, self.q)

    def partial_quotients(self, max_terms):
        """Partial quotients a_1, a_2, ... of alpha = [0; a1, a2, ...].

        Rational alpha terminates exactly; float alpha stops once a quotient
        exceeds PARTIAL_QUOTIENT_CAP (precision exhausted).
        """
        if self.kind == "quotients":
            return list(self.quotients[:max_terms])
        if self.kind == "rational":
            out = []
            num, den = self.q, self.p   # 1/alpha expansion after a0 = 0
            while den and len(out) < max_terms:
                a, rem = divmod(num, den)
                out.append(a)
                num, den = den, rem
            return out
        out = []
        y = self.x
        for _ in range(max_terms):
            if y <= 0:
                break
            inv = 1.0 / y
            a = math.floor(inv)
            if a > PARTIAL_QUOTIENT_CAP:
                break
            out.append(a)
            y = inv - a
        return out


def continued_fraction(alpha, K):
    """First K continued-fraction convergents (p_k, q_k) of alpha, lowest
    terms, starting from p_0/q_0 = 0/1.

    For rational alpha the expansion terminates and K is capped at its
    length.  K = 0 returns [].
    """
    if not isinstance(alpha, Frequency):
        alpha = Frequency.irrational(alpha)
    if K < 0:
        raise DomainError("K must be nonnegative")
    if K == 0:
        return []
    quots = alpha.partial_quotients(K - 1)
    convergents = [(0, 1)]
    p_prev, q_prev, p_cur, q_cur = 1, 0, 0, 1
    for a in quots:
        p_prev, q_prev, p_cur, q_cur = p_cur, q_cur, a * p_cur + p_prev, a * q_cur + q_prev
        convergents.append((p_cur, q_cur))
    return convergents


@dataclass(frozen=True)
class BetaEstimate:
    """Finite-stage surrogate for beta(alpha) = limsup log(q_{k+1})/q_k."""

    value: float
    terms: tuple
    is_rational: bool = False
    truncated: bool = False


def beta_estimate(alpha, K):
    """Running max of log(q_{k+1})/q_k over the first K convergent steps.

    Nondecreasing in K by construction.  Rational alpha returns 0 with the
    rational flag set.  If the expansion runs out of precision before K
    steps, the truncated flag is set.
    """
    if not isinstance(alpha, Frequency):
        alpha = Frequency.irrational(alpha)
    if alpha.is_rational:
        return BetaEstimate(value=0.0, terms=(), is_rational=True)
    convs = continued_fraction(alpha, K + 1)
    terms = tuple(
        math.log(convs[k + 1][1]) / convs[k][1] for k in range(len(convs) - 1)
    )
    value = max(terms) if terms else 0.0
    return BetaEstimate(value=value, terms=terms, truncated=len(convs) < K + 1)


# ---------------------------------------------------------------------------
# Diophantine probing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiophantineParams:
    C: float
    tau: float
    n_max: int

    def __post_init__(self):
        if self.C <= 0 or self.tau <= 0:
            raise DomainError("Diophantine constants C, tau must be positive")


@dataclass(frozen=True)
class DiophantineReport:
    holds_up_to_n: bool
    worst_n: int | None
    worst_value: float | None


def dist_to_integers(x):
    """dist(x, Z)."""
    return abs((x + 0.5) % 1.0 - 0.5)


def diophantine_probe(alpha, params):
    """Check dist(n*alpha, Z) >= C |n|^-tau for 0 < |n| <= n_max.

    Reports the n minimizing dist(n*alpha, Z) * |n|^tau.  By symmetry only
    positive n are scanned.  n_max = 0 holds vacuously.
    """
    if not isinstance(alpha, Frequency):
        alpha = Frequency.irrational(alpha)
    if params.n_max == 0:
        return DiophantineReport(holds_up_to_n=True, worst_n=None, worst_value=None)
    n = np.arange(1, params.n_max + 1, dtype=np.float64)
    dist = np.abs((n * alpha.value + 0.5) % 1.0 - 0.5)
    scaled = dist * n ** params.tau
    idx = int(np.argmin(scaled))
    holds = bool(np.all(dist >= params.C * n ** (-params.tau)))
    return DiophantineReport(
        holds_up_to_n=holds, worst_n=int(n[idx]), worst_value=float(scaled[idx])
    )
