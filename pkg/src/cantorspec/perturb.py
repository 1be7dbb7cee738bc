"""Rank-one perturbations at site 0: the eigenvalue flow through spectral
gaps (including infinite coupling, which decouples the site by a Dirichlet
condition), generalized operators with infinite potential values, their
Cayley transforms, and numerical probes of the norm bound and strong
convergence under potential truncation.

The secular identity behind the flow: lam is an eigenvalue of the operator
with site-0 value t iff 1 + (t - v0) * G(lam) = 0, where v0 is the base
site-0 value and G the base diagonal Green's function.  G is strictly
increasing along the gap arc (passing through 0 at lam = infinity), so a
single monotone bisection in arc fraction finds the root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import (
    INF,
    Arc,
    ArcPath,
    DomainError,
    ext,
    ext_eq,
    fmt_ext,
    is_inf,
)
from .spectra import PoleProximity, green_00

EDGE_TOL = 1e-8
T_WINDOW_TOL = 1e-6


def _as_arc(gap):
    if isinstance(gap, Arc):
        return gap
    gm, gp = gap
    return Arc(gm, gp)


@dataclass(frozen=True)
class GapRoot:
    """Result of the secular equation in one gap: the finite eigenvalue (or
    None when t is outside the occupation window), whether the infinite
    eigenvalue is present (t = infinity, or the flow crossing infinity),
    and an edge-proximity flag."""

    lam: object
    at_infinity: bool = False
    edge_flag: bool = False

    @property
    def found(self):
        return self.lam is not None


def _green_on_arc(f, x, alpha, arc, frac, tol=1e-9):
    lam = arc.point_at(frac)
    if is_inf(lam):
        return 0.0
    return green_00(f, x, alpha, lam, tol=tol)


def _edge_sample(f, x, alpha, arc, at_start):
    """Green's function just inside a gap edge, stepping inward until the
    truncation stops complaining about pole proximity."""
    for margin in (1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2):
        frac = margin if at_start else 1.0 - margin
        try:
            return frac, _green_on_arc(f, x, alpha, arc, frac)
        except PoleProximity:
            continue
    raise PoleProximity("gap edge unresolvable: no clean sample inside the gap")


def gap_eigenvalue(f, x, alpha, gap, t, verify_gap=None):
    """Eigenvalue of the site-0 modified operator inside one spectral gap of
    the base operator (f, x, alpha).

    ``gap`` is the positively oriented arc (g_minus, g_plus); a gap whose
    arc passes through infinity (e.g. the free operator's (2, -2)) is
    handled uniformly in Cayley arc fraction.  Finite t solves
    1 + (t - v0) G(lam) = 0; t = infinity solves G(lam) = 0 and always
    carries the infinite eigenvalue of the decoupled site.
    """
    arc = _as_arc(gap)
    t = ext(t)
    v0 = ext(f(x % 1.0))
    if is_inf(v0):
        raise DomainError(
            "base site value is infinite; flow from an infinite base is traced "
            "by re-coupling the Dirichlet-decoupled operator (use a finite-t base)"
        )
    if verify_gap is not None and any(
        arc.contains(0.5 * (a + b), closed=False)
        for a, b in verify_gap.intervals
    ):
        raise DomainError("the given arc overlaps the verified spectrum: not a gap")

    if t is INF:
        target = 0.0
        at_inf = True
    else:
        s = t - v0
        if s == 0.0:
            return GapRoot(lam=None)
        target = -1.0 / s
        at_inf = False

    lo, g_lo = _edge_sample(f, x, alpha, arc, at_start=True)
    hi, g_hi = _edge_sample(f, x, alpha, arc, at_start=False)
    if not g_lo < target < g_hi:
        # target outside the attained range: t outside the occupation window,
        # unless the flow sits at infinity itself
        if at_inf and arc.interior_contains_infinity() and not g_lo < 0.0 < g_hi:
            return GapRoot(lam=INF, at_infinity=True)
        edge = (
            abs(g_lo - target) < EDGE_TOL or abs(g_hi - target) < EDGE_TOL
        )
        return GapRoot(lam=None, at_infinity=at_inf, edge_flag=edge)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        try:
            g_mid = _green_on_arc(f, x, alpha, arc, mid)
        except PoleProximity:
            # nudge off the offending point; the gap interior is pole-free
            mid += 1e-9 * (hi - lo)
            g_mid = _green_on_arc(f, x, alpha, arc, mid)
        if g_mid < target:
            lo = mid
        else:
            hi = mid
    lam = arc.point_at(0.5 * (lo + hi))
    edge = (not is_inf(lam)) and (
        (not is_inf(arc.start) and abs(lam - arc.start) < EDGE_TOL)
        or (not is_inf(arc.end) and abs(lam - arc.end) < EDGE_TOL)
    )
    return GapRoot(lam=lam, at_infinity=at_inf, edge_flag=edge)


@dataclass(frozen=True)
class GapFlowCurve:
    """Sampled monotone branch t -> lam(t) across one gap: samples in arc
    order of t, plus the bracketed occupation window (reported open)."""

    gap: tuple
    samples: tuple              # of (t, lam), extended reals
    t_window: tuple             # (t_minus, t_plus) or (None, None)

    def text(self):
        """Delimited export: t, lambda per line, infinity as 'inf'."""
        lines = ["t\tlambda"]
        for t, lam in self.samples:
            lines.append(f"{fmt_ext(t)}\t{fmt_ext(lam)}")
        return "\n".join(lines) + "\n"


def trace_gap_flow(f, x, alpha, gap, t_path, n_samples=33):
    """Trace the rank-one eigenvalue flow across one gap as t runs along its
    arc.  The curve must be strictly monotone in gap-arc order (checked);
    occupation-window endpoints are bracketed to 1e-6 in t.
    """
    if n_samples < 8:
        raise DomainError("need at least 8 samples")
    arc = _as_arc(gap)
    if not isinstance(t_path, ArcPath):
        t_path = ArcPath(t_path, forward=True)

    svals = np.linspace(-1.0, 0.0, n_samples)
    samples = []
    found = []
    for s in svals:
        t = t_path.value(float(s))
        root = gap_eigenvalue(f, x, alpha, arc, t)
        found.append(root.found)
        if root.found:
            samples.append((t, root.lam))

    # monotonicity in gap-arc fraction (the arc handles infinity crossings)
    fracs = [arc.fraction_of(lam) for _, lam in samples]
    diffs = [b - a for a, b in zip(fracs, fracs[1:])]
    if diffs and not (
        all(d > -1e-9 for d in diffs) or all(d < 1e-9 for d in diffs)
    ):
        raise RuntimeError(
            "gap flow is not monotone: wrong gap or pole contamination"
        )

    def bracket(i_absent, i_present):
        a, b = float(svals[i_absent]), float(svals[i_present])
        while True:
            ta = t_path.value(a)
            tb = t_path.value(b)
            if not (is_inf(ta) or is_inf(tb)) and abs(tb - ta) < T_WINDOW_TOL:
                break
            if abs(b - a) < 1e-12:
                break
            m = 0.5 * (a + b)
            if gap_eigenvalue(f, x, alpha, arc, t_path.value(m)).found:
                b = m
            else:
                a = m
        return t_path.value(b)

    if all(found):
        window = (t_path.value(-1.0), t_path.value(0.0))
    elif not any(found):
        window = (None, None)
    else:
        first = next(i for i, ok in enumerate(found) if ok)
        last = len(found) - 1 - next(i for i, ok in enumerate(reversed(found)) if ok)
        t_minus = t_path.value(float(svals[first])) if first == 0 else bracket(first - 1, first)
        t_plus = t_path.value(float(svals[last])) if last == len(found) - 1 else bracket(last + 1, last)
        window = (t_minus, t_plus)

    return GapFlowCurve(
        gap=(arc.start, arc.end), samples=tuple(samples), t_window=window
    )


# ---------------------------------------------------------------------------
# Generalized operators and Cayley transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneralizedOperator:
    """Finite window [-N, N] of a lattice operator whose diagonal may take
    the value infinity; those sites are Dirichlet-decoupled and excluded
    from the domain."""

    diagonal: tuple             # extended reals, sites -N..N
    N: int

    @property
    def size(self):
        return 2 * self.N + 1

    @property
    def infinite_set(self):
        """Window indices (0-based) of the infinite sites."""
        return tuple(i for i, v in enumerate(self.diagonal) if is_inf(v))

    @property
    def chains(self):
        """Maximal runs of finite sites as (start, stop) half-open window
        index ranges."""
        out = []
        run_start = None
        for i, v in enumerate(self.diagonal):
            if is_inf(v):
                if run_start is not None:
                    out.append((run_start, i))
                    run_start = None
            elif run_start is None:
                run_start = i
        if run_start is not None:
            out.append((run_start, self.size))
        return out


def build_generalized(values, N=None):
    """Wrap diagonal values (sites -N..N, infinities allowed) as a
    GeneralizedOperator with its Dirichlet splitting recorded."""
    diag = tuple(ext(v) for v in values)
    if len(diag) % 2 != 1 or len(diag) < 1:
        raise DomainError("window must hold an odd number of sites [-N, N]")
    n = (len(diag) - 1) // 2
    if N is not None and N != n:
        raise DomainError(f"window length {len(diag)} does not match N = {N}")
    return GeneralizedOperator(diagonal=diag, N=n)


def cayley_matrix(op):
    """The unitary i (H - i)(H + i)^{-1} on each finite chain, extended by
    the scalar i on every infinite site."""
    n = op.size
    U = np.zeros((n, n), dtype=complex)
    for i in op.infinite_set:
        U[i, i] = 1j
    for a, b in op.chains:
        k = b - a
        h = np.diag(np.asarray(op.diagonal[a:b], dtype=float))
        if k > 1:
            h += np.diag(np.ones(k - 1), 1) + np.diag(np.ones(k - 1), -1)
        block = 1j * np.linalg.solve(h + 1j * np.eye(k), h - 1j * np.eye(k))
        U[a:b, a:b] = block
    return U


@dataclass(frozen=True)
class NormBoundReport:
    lhs: float
    rhs: float
    holds: bool


def verify_norm_bound(values, big_sites, N=None):
    """Compare the Cayley transforms of H and of the operator with the
    large-potential sites sent to infinity: the gap between them is bounded
    by 4/M, M = min |V| over those sites (d = 1 constant 2 + 2^1).

    The operator norm of the difference is the largest singular value of
    the dense window matrix.
    """
    op = build_generalized(values, N)
    big = sorted(int(i) for i in big_sites)
    if not big:
        return NormBoundReport(lhs=0.0, rhs=math.inf, holds=True)
    mags = []
    for i in big:
        v = op.diagonal[i]
        mags.append(math.inf if is_inf(v) else abs(v))
    M = min(mags)
    if M <= 0:
        raise DomainError("sites must carry |V| >= M > 0")
    limit_diag = list(op.diagonal)
    for i in big:
        limit_diag[i] = INF
    op_inf = build_generalized(limit_diag)
    diff = cayley_matrix(op) - cayley_matrix(op_inf)
    lhs = float(np.linalg.norm(diff, 2))
    rhs = 4.0 / M
    return NormBoundReport(lhs=lhs, rhs=rhs, holds=lhs <= rhs + 1e-12)


@dataclass(frozen=True)
class ConvergenceProbe:
    residuals: tuple
    decreasing: bool

    @property
    def final(self):
        return self.residuals[-1]


def strong_convergence_probe(diagonal_seq, diagonal_limit, test_vectors=None):
    """Max residual ||(U_j - U) psi|| over test vectors for each diagonal in
    the sequence, against the limit operator; reports whether the residuals
    decrease along the sequence."""
    if not diagonal_seq:
        raise DomainError("empty sequence")
    op_lim = build_generalized(diagonal_limit)
    U = cayley_matrix(op_lim)
    n = op_lim.size
    if test_vectors is None:
        e0 = np.zeros(n)
        e0[n // 2] = 1.0
        test_vectors = [e0]
    residuals = []
    for diag in diagonal_seq:
        Uj = cayley_matrix(build_generalized(diag))
        if Uj.shape != U.shape:
            raise DomainError("sequence and limit windows differ in size")
        residuals.append(max(
            float(np.linalg.norm((Uj - U) @ np.asarray(psi, dtype=complex)))
            for psi in test_vectors
        ))
    decreasing = all(b <= a + 1e-12 for a, b in zip(residuals, residuals[1:]))
    return ConvergenceProbe(residuals=tuple(residuals), decreasing=decreasing)
