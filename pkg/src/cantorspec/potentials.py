"""Potential families on the unit circle: sawtooth and Maryland builtins,
single-site modifications, gamma-monotonicity audits, classification, and the
glued circle map with its topological degree.

A potential is a 1-periodic map evaluated on [0, 1).  Values live in the
extended reals; only x = 0 may carry the infinite value (the Maryland glue),
interior infinities are rejected.  Monotonicity is audited on grids, since
potentials may be user-supplied closures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .numerics import (
    INF,
    Arc,
    ArcPath,
    DomainError,
    arc_path_between,
    cayley,
    ext,
    ext_eq,
    is_inf,
)

AUDIT_GRID_DEFAULT = 4096

SAWTOOTH_TYPE = "sawtooth_type"
MARYLAND_TYPE = "maryland_type"
WEAK_SAWTOOTH_TYPE = "weak_sawtooth_type"
WEAK_MARYLAND_TYPE = "weak_maryland_type"
SIMPLE_DISCONTINUITY_ONLY = "simple_discontinuity_only"
CONTINUOUS_CIRCLE_MAP = "continuous_circle_map"
OTHER = "other"


@dataclass(frozen=True)
class Potential:
    """A 1-periodic potential descriptor.

    ``eval_fn`` evaluates on [0, 1); ``left_limit_fn`` gives lim_{y->x-} f(y)
    for x in (0, 1].  ``f0`` and ``f1m`` cache f(0) and f(1-0), the two
    one-sided values at the possible discontinuity.  ``gamma`` is the declared
    monotonicity constant, if any.
    """

    kind: str
    eval_fn: object = field(repr=False)
    left_limit_fn: object = field(repr=False)
    f0: object
    f1m: object
    gamma: float | None = None
    params: tuple = ()

    def __call__(self, x):
        x = float(x)
        if not 0.0 <= x < 1.0:
            x = x % 1.0
        return ext(self.eval_fn(x))

    def left_limit(self, x):
        x = float(x)
        if not 0.0 < x <= 1.0:
            raise DomainError("left limits are defined on (0, 1]")
        return ext(self.left_limit_fn(x))

    def has_simple_discontinuity(self):
        """One jump of the associated circle map, at 0, with at least one
        finite one-sided value."""
        if ext_eq(self.f0, self.f1m):
            return False
        return not (is_inf(self.f0) and is_inf(self.f1m))


@dataclass(frozen=True)
class ModifiedPotential:
    """The single-site modification f_t: agrees with the base on (0, 1),
    takes the value t at x = 0."""

    base: Potential
    t: object

    def __post_init__(self):
        object.__setattr__(self, "t", ext(self.t))

    def __call__(self, x):
        x = float(x) % 1.0
        if x == 0.0:
            return self.t
        return self.base(x)

    def left_limit(self, x):
        return self.base.left_limit(x)


def _sawtooth(scale):
    if scale <= 0:
        raise DomainError("sawtooth scale must be positive")
    return Potential(
        kind="sawtooth_like",
        eval_fn=lambda x: scale * x,
        left_limit_fn=lambda x: scale * x,
        f0=0.0,
        f1m=float(scale),
        gamma=float(scale),
        params=(("scale", float(scale)),),
    )


def _maryland(lam):
    if lam <= 0:
        raise DomainError("maryland coupling must be positive")

    def f(x):
        if x == 0.0:
            return INF
        return lam * math.tan(math.pi * (x - 0.5))

    def f_left(x):
        if x == 1.0:
            return INF
        return lam * math.tan(math.pi * (x - 0.5))

    # derivative lam*pi/cos^2 >= lam*pi everywhere
    return Potential(
        kind="maryland_like",
        eval_fn=f,
        left_limit_fn=f_left,
        f0=INF,
        f1m=INF,
        gamma=lam * math.pi,
        params=(("lam", float(lam)),),
    )


def _weak_sawtooth(lo, hi, wiggle):
    if not hi > lo:
        raise DomainError("weak sawtooth needs hi > lo")
    slope = hi - lo

    def f(x):
        return lo + slope * x + wiggle * math.sin(2.0 * math.pi * x)

    pot = Potential(
        kind="weak_sawtooth",
        eval_fn=f,
        left_limit_fn=f,
        f0=float(lo),
        f1m=float(hi),
        gamma=None,
        params=(("lo", float(lo)), ("hi", float(hi)), ("wiggle", float(wiggle))),
    )
    audit = check_gamma_monotone(pot, AUDIT_GRID_DEFAULT)
    if not audit.ok:
        raise DomainError(
            f"weak sawtooth with wiggle {wiggle} is not monotone "
            f"(grid bound {audit.gamma_lower_bound:.4g})"
        )
    return replace(pot, gamma=audit.gamma_lower_bound)


def _piecewise_table(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
        raise DomainError("piecewise table needs two equal-length columns, >= 2 rows")
    if xs[0] != 0.0 or xs[-1] >= 1.0 or np.any(np.diff(xs) <= 0):
        raise DomainError("table abscissae must be strictly increasing in [0, 1) starting at 0")
    # last segment extrapolated to x = 1 to define f(1-0)
    slope_last = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
    f1m = ys[-1] + slope_last * (1.0 - xs[-1])
    xs_ext = np.append(xs, 1.0)
    ys_ext = np.append(ys, f1m)

    def f(x):
        return float(np.interp(x, xs_ext, ys_ext))

    return Potential(
        kind="piecewise_table",
        eval_fn=f,
        left_limit_fn=f,
        f0=float(ys[0]),
        f1m=float(f1m),
        gamma=None,
        params=(("rows", len(xs)),),
    )


def load_piecewise_table(path):
    """Load a piecewise_table potential from a two-column text file (x, f(x))."""
    data = np.loadtxt(path)
    if data.ndim != 2 or data.shape[1] != 2:
        raise DomainError(f"{path}: expected two columns (x, f(x))")
    return _piecewise_table(data[:, 0], data[:, 1])


def custom_sampled(fn, f0=None, f1m=None, gamma=None):
    """Wrap a user callable on [0, 1) as a Potential.  One-sided values
    default to fn(0) and a numeric left limit at 1."""
    f0 = ext(fn(0.0)) if f0 is None else ext(f0)
    f1m = ext(fn(1.0 - 1e-9)) if f1m is None else ext(f1m)
    return Potential(
        kind="custom_sampled",
        eval_fn=lambda x: fn(x),
        left_limit_fn=lambda x: fn(x - 1e-12) if x < 1.0 else f1m,
        f0=f0,
        f1m=f1m,
        gamma=gamma,
    )


_BUILTINS = {
    "sawtooth": lambda params: _sawtooth(params.get("scale", 1.0)),
    "maryland": lambda params: _maryland(params.get("lam", 1.0)),
    "weak_sawtooth": lambda params: _weak_sawtooth(
        params.get("lo", 0.0), params.get("hi", 1.0), params.get("wiggle", 0.0)
    ),
    "constant": lambda params: Potential(
        kind="constant",
        eval_fn=lambda x, c=params.get("value", 0.0): c,
        left_limit_fn=lambda x, c=params.get("value", 0.0): c,
        f0=float(params.get("value", 0.0)),
        f1m=float(params.get("value", 0.0)),
        gamma=None,
        params=(("value", float(params.get("value", 0.0))),),
    ),
}


def make_builtin(kind, **params):
    """Construct a builtin potential; raises DomainError on bad parameters
    (including a failed monotonicity audit for weak_sawtooth wiggles)."""
    try:
        factory = _BUILTINS[kind]
    except KeyError:
        raise DomainError(f"unknown builtin potential {kind!r}") from None
    return factory(params)


# ---------------------------------------------------------------------------
# Monotonicity audit and classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GammaAudit:
    gamma_lower_bound: float
    ok: bool


def check_gamma_monotone(pot, grid_n=AUDIT_GRID_DEFAULT):
    """Minimal divided difference (f(y)-f(x))/(y-x) over a uniform grid.

    The minimum over all pairs equals the minimum over adjacent pairs, so
    only those are formed.  Infinite values are allowed at x = 0 only.
    """
    if grid_n < 2:
        raise DomainError("grid_n must be >= 2")
    xs = np.arange(grid_n) / grid_n
    vals = []
    for x in xs:
        v = pot(x)
        if is_inf(v):
            if x != 0.0:
                raise DomainError(f"infinite potential value at interior point x={x}")
            vals.append(None)
        else:
            vals.append(v)
    finite = [(x, v) for x, v in zip(xs, vals) if v is not None]
    diffs = [
        (v2 - v1) / (x2 - x1)
        for (x1, v1), (x2, v2) in zip(finite, finite[1:])
    ]
    bound = min(diffs)
    return GammaAudit(gamma_lower_bound=float(bound), ok=bound > 0.0)


def classify(pot, grid_n=1024):
    """Classify a potential by its one-sided values at the discontinuity and
    a grid monotonicity audit."""
    try:
        audit = check_gamma_monotone(pot, grid_n)
        monotone = audit.ok
    except DomainError:
        monotone = False
    inf0, inf1 = is_inf(pot.f0), is_inf(pot.f1m)
    if inf0 and inf1:
        return MARYLAND_TYPE if monotone else WEAK_MARYLAND_TYPE
    if inf0 or inf1:
        return SIMPLE_DISCONTINUITY_ONLY
    if ext_eq(pot.f0, pot.f1m):
        return CONTINUOUS_CIRCLE_MAP
    if monotone:
        return SAWTOOTH_TYPE
    if pot.f0 < pot.f1m:
        return WEAK_SAWTOOTH_TYPE
    return SIMPLE_DISCONTINUITY_ONLY


# ---------------------------------------------------------------------------
# The glued circle map
# ---------------------------------------------------------------------------

THROUGH_INFINITY = "through_infinity"
BOUNDED = "bounded"


@dataclass(frozen=True)
class CircleMapTilde:
    """The circle map on [-1, 1): the potential on [0, 1) glued to an arc
    parametrization on [-1, 0) closing the jump at 0 and at +-1.

    ``path`` runs from f(1-0) at s = -1 to f(0) at s = 0 at constant speed
    in Cayley arclength.  ``path`` is None for potentials that are already
    continuous circle maps (degenerate arc).
    """

    base: Potential
    path: ArcPath | None

    def value(self, y):
        if not -1.0 <= y < 1.0:
            y = (y + 1.0) % 2.0 - 1.0
        if y >= 0.0:
            return self.base(y)
        return self.path.value(y) if self.path is not None else self.base(y % 1.0)

    @staticmethod
    def from_continuous(pot):
        if not ext_eq(pot.f0, pot.f1m):
            raise DomainError("potential is not a continuous circle map")
        return CircleMapTilde(base=pot, path=None)


def make_tilde(pot, arc_choice=THROUGH_INFINITY):
    """Glue a potential with a simple discontinuity into a continuous circle
    map, closing the jump along the chosen arc."""
    if not pot.has_simple_discontinuity():
        raise DomainError("make_tilde requires a simple discontinuity")
    if is_inf(pot.f0) or is_inf(pot.f1m):
        # one endpoint at infinity: the two arcs are 'positively oriented'
        # vs not; through_infinity is the orientation-preserving closure
        fwd = Arc(pot.f1m, pot.f0)
        path = ArcPath(fwd, forward=True)
        if arc_choice == BOUNDED:
            path = ArcPath(Arc(pot.f0, pot.f1m), forward=False)
        return CircleMapTilde(base=pot, path=path)
    via = arc_choice == THROUGH_INFINITY
    return CircleMapTilde(base=pot, path=arc_path_between(pot.f1m, pot.f0, via))


class DegreeResolutionError(RuntimeError):
    """Phase steps could not be brought below pi/2 at maximum refinement."""


def degree(circle_map, samples=256, max_samples=1 << 20):
    """Topological degree of the glued map: total phase of cayley(f~) around
    the circle divided by 2*pi, with adaptive refinement until every phase
    step is below pi/2."""
    if samples < 64:
        raise DomainError("need at least 64 samples")
    n = int(samples)
    # a degenerate arc means the base is already 1-periodic and continuous;
    # its fundamental domain is [0, 1), not the glued [-1, 1)
    lo = 0.0 if circle_map.path is None else -1.0
    while True:
        ys = np.linspace(lo, 1.0, n, endpoint=False)
        pts = np.array([cayley(circle_map.value(y)) for y in ys])
        pts = np.append(pts, pts[:1])   # close the loop
        steps = np.angle(pts[1:] / pts[:-1])
        if np.max(np.abs(steps)) < 0.5 * math.pi:
            total = float(np.sum(steps))
            return int(round(total / (2.0 * math.pi)))
        if 2 * n > max_samples:
            raise DegreeResolutionError(
                f"phase steps not resolved below pi/2 with {n} samples"
            )
        n *= 2
