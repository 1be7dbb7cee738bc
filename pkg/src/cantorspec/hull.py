"""The auxiliary Cantor set built from the orbit {n*alpha}: the monotone map
h with dyadic gap weights, gap labels, the extended parameter circle, gap
parametrizations, and the integer translation action.

h(y) = y + (1/3) * sum_{n: {n alpha} <= y} 2^{-|n|} maps [0, 1] into [0, 2];
its image closure is a Cantor set whose gaps are labeled by the lattice point
n marking each orbit value.  The parameter circle is represented as [0, 3)
with wraparound.  By convention the n = 0 gap is (0, 1/3): the left limit at
y = 0 is taken to be 0, and the leftover arc (2, 3) closing the circle
carries no label.

For rational alpha = p/q the orbit is finite and labels in the same residue
class mod q merge; merged gaps carry their full label set and exact widths
from the closed-form residue sums.  Operators are not constructed at merged
gap points, only flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import Arc, ArcPath, DomainError, Frequency, ext

THIRD = 1.0 / 3.0
N_TRUNC_DEFAULT = 30

PLUS = "plus"
MINUS = "minus"


@dataclass(frozen=True)
class HullPoint:
    """A point of the extended parameter circle: either a Cantor-set point
    (orbit coordinate x with a +/- side) or an interior gap point (label n,
    coordinate s in (-1, 0))."""

    kind: str                  # 'cantor' | 'gap'
    x: float = 0.0
    side: str = PLUS
    label: int = 0
    s: float = 0.0

    @staticmethod
    def cantor(x, side=PLUS):
        if side not in (PLUS, MINUS):
            raise DomainError(f"side must be plus or minus, got {side!r}")
        return HullPoint(kind="cantor", x=float(x) % 1.0, side=side)

    @staticmethod
    def gap(label, s):
        s = float(s)
        if not -1.0 < s < 0.0:
            raise DomainError(f"gap coordinate {s} outside (-1, 0)")
        return HullPoint(kind="gap", label=int(label), s=s)

    @property
    def is_gap(self):
        return self.kind == "gap"


@dataclass(frozen=True)
class GapInfo:
    """One gap of the Cantor set: label(s), orbit position {n alpha}, and its
    endpoints on [0, 2].  ``merged`` marks rational-frequency label classes."""

    labels: tuple
    position: float
    left: float
    right: float
    merged: bool = False

    @property
    def width(self):
        return self.right - self.left

    @property
    def label(self):
        return self.labels[0]


class HullModel:
    """Truncated model of the Cantor hull for a fixed frequency.

    The defining sum keeps |n| <= n_trunc; the discarded tail is absorbed
    into a linear correction so that h(0) = 1/3 and h(1) = 2 hold exactly
    and strict monotonicity is preserved.  For rational frequencies the
    residue-class weights are summed in closed form (no truncation error).
    """

    def __init__(self, alpha, n_trunc=N_TRUNC_DEFAULT):
        if not isinstance(alpha, Frequency):
            alpha = Frequency.irrational(alpha)
        if n_trunc < 1:
            raise DomainError("n_trunc must be >= 1")
        self.alpha = alpha
        self.n_trunc = int(n_trunc)
        if alpha.is_rational:
            self._build_rational()
        else:
            self._build_irrational()
        # sorted positions with cumulative weights drive h evaluation
        order = np.argsort([g.position for g in self._gaps])
        self._sorted_gaps = [self._gaps[i] for i in order]
        self._positions = np.array([g.position for g in self._sorted_gaps])
        self._cum_weight = np.cumsum([g.width for g in self._sorted_gaps])
        self._by_label = {}
        for g in self._gaps:
            for n in g.labels:
                self._by_label[n] = g

    def _build_irrational(self):
        a = self.alpha.value
        self._tail = THIRD * 2.0 ** (-self.n_trunc + 1)
        entries = []
        for n in range(-self.n_trunc, self.n_trunc + 1):
            pos = (n * a) % 1.0
            entries.append((pos, n, THIRD * 2.0 ** (-abs(n))))
        entries.sort()
        gaps = []
        acc = 0.0
        for pos, n, w in entries:
            left = pos + acc + self._tail * pos
            gaps.append(GapInfo(labels=(n,), position=pos, left=left, right=left + w))
            acc += w
        self._gaps = gaps

    def _build_rational(self):
        p, q = self.alpha.p, self.alpha.q
        self._tail = 0.0
        # residue-class weight: sum of (1/3) 2^{-|n|} over n = r (mod q)
        def class_weight(r):
            if r % q == 0:
                return THIRD * (1.0 + 2.0 / (2.0 ** q - 1.0))
            r = r % q
            return THIRD * (2.0 ** (q - r) + 2.0 ** r) / (2.0 ** q - 1.0)

        pinv = pow(p, -1, q)
        entries = []
        for j in range(q):          # orbit position j/q belongs to labels n = j*p^{-1} (mod q)
            r = (j * pinv) % q
            labels = tuple(sorted(
                (n for n in range(-self.n_trunc, self.n_trunc + 1) if n % q == r),
                key=lambda n: (abs(n), n),
            ))
            if not labels:       # truncation shorter than the period
                labels = (r if r <= q // 2 else r - q,)
            entries.append((j / q, labels, class_weight(r)))
        entries.sort()
        gaps = []
        acc = 0.0
        for pos, labels, w in entries:
            gaps.append(GapInfo(
                labels=labels, position=pos, left=pos + acc, right=pos + acc + w,
                merged=len(labels) > 1,
            ))
            acc += w
        self._gaps = gaps

    # -- the map h ---------------------------------------------------------

    def h_eval(self, y, side=PLUS):
        """h(y) for y in [0, 1]; side='minus' gives the left limit h(y-0),
        with the convention h(0-0) = 0."""
        y = float(y)
        if not 0.0 <= y <= 1.0:
            raise DomainError(f"h is defined on [0, 1], got {y}")
        which = "right" if side == PLUS else "left"
        k = int(np.searchsorted(self._positions, y, side=which))
        acc = self._cum_weight[k - 1] if k > 0 else 0.0
        return y + acc + self._tail * y

    def gap_lookup(self, n):
        """The gap labeled n (its merged class for rational frequencies)."""
        n = int(n)
        if n in self._by_label:
            return self._by_label[n]
        if self.alpha.is_rational:
            r = n % self.alpha.q
            for g in self._gaps:
                if g.labels[0] % self.alpha.q == r:
                    return g
        raise DomainError(f"label {n} beyond truncation {self.n_trunc}")

    @property
    def gaps(self):
        """All stored gaps in circle order."""
        return list(self._sorted_gaps)

    # -- circle coordinates ------------------------------------------------

    def theta_value(self, point):
        """Coordinate of a hull point on the circle [0, 3)."""
        if point.is_gap:
            g = self.gap_lookup(point.label)
            return (g.left + (point.s + 1.0) * g.width) % 3.0
        return self.h_eval(point.x, side=point.side) % 3.0

    def theta_from_xt(self, x, side=PLUS):
        """Hull point for a Cantor coordinate; a minus side off the orbit
        collapses to plus (the two sides coincide there)."""
        x = float(x) % 1.0
        if side == MINUS and not self._on_orbit(x):
            side = PLUS
        return HullPoint.cantor(x, side)

    def _on_orbit(self, x, tol=1e-12):
        k = int(np.searchsorted(self._positions, x))
        for idx in (k - 1, k):
            if 0 <= idx < len(self._positions) and abs(self._positions[idx] - x) <= tol:
                return True
        return False

    def theta_from_gap(self, n, t, arc, endpoint_tol=1e-9):
        """Hull point in gap n at interpolation value t on the arc.

        The gap coordinate is s = phi^{-1}(t), where phi traverses the arc
        at constant Cayley arclength from s = -1 to s = 0.  The endpoints
        identify with the Cantor points h({n alpha} -/+ 0).
        """
        g = self.gap_lookup(n)
        path = arc if isinstance(arc, ArcPath) else ArcPath(arc, forward=True)
        s = path.parameter_of(ext(t))
        if s >= -endpoint_tol:
            return HullPoint.cantor(g.position, PLUS)
        if s <= -1.0 + endpoint_tol:
            return HullPoint.cantor(g.position, MINUS)
        return HullPoint.gap(g.label, s)

    def translate(self, point, m):
        """The integer action: orbit shift by m*alpha on Cantor points,
        label shift n -> n + m on gap points."""
        m = int(m)
        if not point.is_gap:
            return HullPoint.cantor((point.x + m * self.alpha.value) % 1.0, point.side)
        n_new = point.label + m
        if self.alpha.is_rational:
            n_new = self.gap_lookup(n_new % self.alpha.q).label
        elif abs(n_new) > self.n_trunc:
            raise DomainError(
                f"translated label {n_new} beyond truncation {self.n_trunc}"
            )
        return HullPoint.gap(n_new, point.s)

    def s_alpha_t(self, t, arc):
        """One hull point per stored gap, all at the same gap coordinate
        determined by t on the arc; translation-invariant up to truncation."""
        path = arc if isinstance(arc, ArcPath) else ArcPath(arc, forward=True)
        s = path.parameter_of(ext(t))
        out = []
        for g in self._sorted_gaps:
            if s >= -1e-12:
                out.append(HullPoint.cantor(g.position, PLUS))
            elif s <= -1.0 + 1e-12:
                out.append(HullPoint.cantor(g.position, MINUS))
            else:
                out.append(HullPoint.gap(g.label, s))
        return out

    # -- export ------------------------------------------------------------

    def gap_table_text(self):
        """Gap table as delimited text: n, left, right, width (one gap per
        line; merged gaps list their labels joined by '+')."""
        lines = ["n\tleft\tright\twidth"]
        for g in self._sorted_gaps:
            tag = "+".join(str(n) for n in g.labels) if g.merged else str(g.label)
            lines.append(f"{tag}\t{g.left:.12g}\t{g.right:.12g}\t{g.width:.12g}")
        return "\n".join(lines) + "\n"
