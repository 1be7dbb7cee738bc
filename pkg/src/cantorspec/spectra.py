"""Spectra of the periodic approximants: transfer matrices with log-scale
normalization, symmetric (cyclic) tridiagonal eigensolving by Sturm-sequence
bisection, Floquet discriminant bands, quasimomentum-zero blocks with
Dirichlet splitting at infinite sites, diagonal Green's functions by
continued-fraction recursion, Lyapunov exponents, and the union of spectra
over the parameter circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import INF, ArcPath, DomainError, ext, is_inf
from .potentials import ModifiedPotential

STURM_TOL = 1e-10
PIVMIN = 1e-20
LOGSCALE_CAP = 1e100


class MustSplit(RuntimeError):
    """A site carries the value infinity; the caller must use Dirichlet
    splitting instead of transfer products."""

    def __init__(self, site):
        super().__init__(f"infinite potential value at site {site}; Dirichlet split required")
        self.site = site


class PoleProximity(RuntimeError):
    """The requested energy sits too close to an eigenvalue of the
    truncated operator for the Green's function to be trustworthy."""


def site_values(f, x, alpha, q=None):
    """Diagonal values f(x + k*alpha) for k = 0..q-1 (q defaults to the
    denominator of a rational frequency)."""
    a = alpha.value if hasattr(alpha, "value") else float(alpha)
    if q is None:
        if not getattr(alpha, "is_rational", False):
            raise DomainError("site count q required for irrational frequencies")
        q = alpha.q
    return [ext(f((x + k * a) % 1.0)) for k in range(q)]


# ---------------------------------------------------------------------------
# Transfer matrices
# ---------------------------------------------------------------------------

@dataclass
class TransferMatrix:
    """A 2x2 real matrix stored as (normalized matrix, log scale): the true
    matrix is m * exp(logscale) and det(m) = 1 after normalization."""

    m: np.ndarray
    logscale: float = 0.0

    def true_trace(self):
        return float(np.trace(self.m)) * math.exp(self.logscale)

    def abs_trace_leq(self, bound):
        """|trace| <= bound, compared in log space so that enormous scale
        factors never overflow."""
        t = abs(float(np.trace(self.m)))
        if t == 0.0:
            return True
        return math.log(t) + self.logscale <= math.log(bound)

    def det(self):
        return float(np.linalg.det(self.m))


def transfer_product(f, x, alpha, E):
    """Product of the q one-step matrices [[E - V, -1], [1, 0]] over one
    period, with running overflow normalization folded into logscale."""
    vals = site_values(f, x, alpha)
    m = np.eye(2)
    logscale = 0.0
    for k, v in enumerate(vals):
        if is_inf(v):
            raise MustSplit(k)
        step = np.array([[E - v, -1.0], [1.0, 0.0]])
        m = step @ m
        nrm = np.max(np.abs(m))
        if nrm > LOGSCALE_CAP:
            m /= nrm
            logscale += math.log(nrm)
    # each factor has det 1; restore det(m) = 1 after rescaling
    d = float(np.linalg.det(m))
    if d > 0 and abs(d - 1.0) > 1e-13:
        s = math.sqrt(d)
        m /= s
        logscale += math.log(s)
    return TransferMatrix(m=m, logscale=logscale)


# ---------------------------------------------------------------------------
# Sturm-sequence bisection
# ---------------------------------------------------------------------------

def _negcount_open(diag, lam):
    """Number of eigenvalues below each lam for the symmetric tridiagonal
    matrix with the given diagonal and unit off-diagonals (LDL inertia)."""
    lam = np.asarray(lam, dtype=float)
    count = np.zeros(lam.shape, dtype=np.int64)
    d = diag[0] - lam
    d = np.where(np.abs(d) < PIVMIN, -PIVMIN, d)
    count += d < 0
    for a in diag[1:]:
        d = a - lam - 1.0 / d
        d = np.where(np.abs(d) < PIVMIN, -PIVMIN, d)
        count += d < 0
    return count


def _negcount_cyclic(diag, corner, lam):
    """Inertia count for the ring matrix: tridiagonal with unit
    off-diagonals plus corner entries, eliminating rows in order while
    tracking the fill-in of the last row and column."""
    lam = np.asarray(lam, dtype=float)
    q = len(diag)
    count = np.zeros(lam.shape, dtype=np.int64)
    d = diag[0] - lam
    d = np.where(np.abs(d) < PIVMIN, -PIVMIN, d)
    fill = np.full(lam.shape, float(corner))
    g = diag[q - 1] - lam
    for k in range(q - 2):
        count += d < 0
        g = g - fill * fill / d
        base = 1.0 if k + 1 == q - 2 else 0.0
        fill = base - fill / d
        d = diag[k + 1] - lam - 1.0 / d
        d = np.where(np.abs(d) < PIVMIN, -PIVMIN, d)
    count += d < 0
    g = g - fill * fill / d
    g = np.where(np.abs(g) < PIVMIN, -PIVMIN, g)
    count += g < 0
    return count


def sturm_eigenvalues(diag, corner=None, tol=STURM_TOL):
    """All eigenvalues, sorted, of the symmetric tridiagonal matrix with the
    given diagonal and unit off-diagonals, by Sturm-sequence bisection
    inside the Gershgorin enclosure.

    ``corner=None`` is the open chain (Dirichlet ends); a numeric corner c
    closes the ring with entries c in the two far corners.  Small rings are
    handled in closed form (q=1 adds 2c to the diagonal; q=2 has both edges
    between its two sites, giving off-diagonal 1+c).
    """
    diag = np.asarray(diag, dtype=float)
    q = len(diag)
    if q == 0:
        return np.empty(0)
    if corner is not None:
        c = float(corner)
        if q == 1:
            return np.array([diag[0] + 2.0 * c])
        if q == 2:
            b = 1.0 + c
            mid = 0.5 * (diag[0] + diag[1])
            rad = math.hypot(0.5 * (diag[0] - diag[1]), b)
            return np.array([mid - rad, mid + rad])
        negcount = lambda lam: _negcount_cyclic(diag, c, lam)
        pad = 2.0 + abs(c)
    else:
        if q == 1:
            return diag.copy()
        negcount = lambda lam: _negcount_open(diag, lam)
        pad = 2.0
    lo = float(np.min(diag)) - pad - 1.0
    hi = float(np.max(diag)) + pad + 1.0
    los = np.full(q, lo)
    his = np.full(q, hi)
    idx = np.arange(q)
    # iteration cap: for very large diagonal values the absolute tolerance
    # sits below the floating-point spacing and would never be reached
    for _ in range(128):
        if np.max(his - los) <= tol:
            break
        mid = 0.5 * (los + his)
        below = negcount(mid) > idx
        his = np.where(below, mid, his)
        los = np.where(below, los, mid)
    return 0.5 * (los + his)


# ---------------------------------------------------------------------------
# Periodic blocks and their spectra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicBlock:
    """Quasimomentum-zero block on a ring of q sites: extended-real diagonal
    with sites of value infinity removed by Dirichlet splitting."""

    diagonal: tuple

    @property
    def q(self):
        return len(self.diagonal)

    @property
    def dirichlet_sites(self):
        return frozenset(k for k, v in enumerate(self.diagonal) if is_inf(v))

    @staticmethod
    def from_potential(f, x, alpha, q=None):
        return PeriodicBlock(diagonal=tuple(site_values(f, x, alpha, q)))


@dataclass(frozen=True)
class BlockSpectrum:
    finite: np.ndarray
    inf_multiplicity: int = 0

    @property
    def contains_infinity(self):
        return self.inf_multiplicity > 0


def _ring_chains(diagonal):
    """Split the ring at its infinite sites into open chains, preserving the
    circular adjacency of the finite runs."""
    q = len(diagonal)
    inf_sites = [k for k, v in enumerate(diagonal) if is_inf(v)]
    if not inf_sites:
        return None
    start = inf_sites[0]
    chains = []
    run = []
    for j in range(1, q + 1):
        k = (start + j) % q
        if is_inf(diagonal[k]):
            if run:
                chains.append(run)
                run = []
        else:
            run.append(float(diagonal[k]))
    if run:
        chains.append(run)
    return chains


def block_eigenvalues(block, tol=STURM_TOL):
    """All eigenvalues of the block, sorted, with the infinity eigenvalue
    reported by multiplicity (one per Dirichlet site)."""
    chains = _ring_chains(block.diagonal)
    if chains is None:
        finite = sturm_eigenvalues(
            np.asarray(block.diagonal, dtype=float), corner=1.0, tol=tol
        )
        return BlockSpectrum(finite=np.sort(finite))
    parts = [sturm_eigenvalues(chain, tol=tol) for chain in chains]
    finite = np.sort(np.concatenate(parts)) if parts else np.empty(0)
    return BlockSpectrum(finite=finite, inf_multiplicity=len(block.dirichlet_sites))


# ---------------------------------------------------------------------------
# Spectrum sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumSet:
    """Finite union of disjoint closed intervals, optionally together with
    the point at infinity.  Degenerate intervals are isolated eigenvalues."""

    intervals: tuple
    contains_infinity: bool = False

    @staticmethod
    def from_intervals(pairs, contains_infinity=False, merge_tol=0.0):
        pairs = sorted((float(a), float(b)) for a, b in pairs)
        merged = []
        for a, b in pairs:
            if b < a:
                raise DomainError(f"interval [{a}, {b}] is reversed")
            if merged and a <= merged[-1][1] + merge_tol:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return SpectrumSet(
            intervals=tuple((a, b) for a, b in merged),
            contains_infinity=bool(contains_infinity),
        )

    @property
    def is_empty(self):
        return not self.intervals and not self.contains_infinity

    @property
    def band_count(self):
        return len(self.intervals)

    def measure(self):
        return sum(b - a for a, b in self.intervals)

    def max_band_length(self):
        return max((b - a for a, b in self.intervals), default=0.0)

    def contains(self, e, tol=0.0):
        return any(a - tol <= e <= b + tol for a, b in self.intervals)

    def distance(self, e):
        """Distance from a real point to the interval union."""
        if not self.intervals:
            return math.inf
        best = math.inf
        for a, b in self.intervals:
            if a <= e <= b:
                return 0.0
            best = min(best, abs(e - a), abs(e - b))
        return best

    def union(self, other, merge_tol=0.0):
        return SpectrumSet.from_intervals(
            list(self.intervals) + list(other.intervals),
            contains_infinity=self.contains_infinity or other.contains_infinity,
            merge_tol=merge_tol,
        )

    def clip(self, window):
        w0, w1 = float(window[0]), float(window[1])
        kept = [
            (max(a, w0), min(b, w1))
            for a, b in self.intervals
            if b >= w0 and a <= w1
        ]
        return SpectrumSet.from_intervals(kept, contains_infinity=self.contains_infinity)

    def gaps(self, window=None):
        """Open gaps between consecutive bands; with a window, also the two
        flanking gaps down to the window edges."""
        out = []
        if window is not None:
            w0, w1 = float(window[0]), float(window[1])
            if not self.intervals:
                return [(w0, w1)]
            if self.intervals[0][0] > w0:
                out.append((w0, self.intervals[0][0]))
        for (a1, b1), (a2, b2) in zip(self.intervals, self.intervals[1:]):
            out.append((b1, a2))
        if window is not None and self.intervals and self.intervals[-1][1] < w1:
            out.append((self.intervals[-1][1], w1))
        return out


# ---------------------------------------------------------------------------
# Discriminant bands
# ---------------------------------------------------------------------------

def discriminant_bands(f, x, alpha, window=None, resolution=1e-9):
    """Floquet bands {E : |tr M_q(E)| <= 2} of the period-q operator at
    phase x, as a SpectrumSet.

    Band edges are the roots of tr M_q(E) = +/-2, i.e. the eigenvalues of
    the periodic (corner +1) and antiperiodic (corner -1) ring blocks,
    found by Sturm bisection; a trace test at each midpoint decides which
    inter-edge intervals are bands.
    """
    vals = site_values(f, x, alpha)
    for k, v in enumerate(vals):
        if is_inf(v):
            raise MustSplit(k)
    diag = np.asarray(vals, dtype=float)
    edges = np.sort(np.concatenate([
        sturm_eigenvalues(diag, corner=1.0),
        sturm_eigenvalues(diag, corner=-1.0),
    ]))
    # collapse numerically coincident edges (closed gaps)
    distinct = [edges[0]]
    for e in edges[1:]:
        if e - distinct[-1] > max(resolution, 10 * STURM_TOL):
            distinct.append(e)
    bands = []
    for a, b in zip(distinct, distinct[1:]):
        mid = 0.5 * (a + b)
        if transfer_product(f, x, alpha, mid).abs_trace_leq(2.0):
            bands.append((a, b))
    out = SpectrumSet.from_intervals(bands, merge_tol=max(resolution, 10 * STURM_TOL))
    if window is not None:
        out = out.clip(window)
    return out


# ---------------------------------------------------------------------------
# Diagonal Green's function
# ---------------------------------------------------------------------------

def _halfline_tail(f, x, alpha, lam, direction, N):
    """Backward continued-fraction tail r of the half line n = 1..N in the
    given direction: r solves r = 1/(u_n - r_next) with u_n = V(n) - lam.
    An infinite site cuts the chain (its tail contributes 0)."""
    a = alpha.value if hasattr(alpha, "value") else float(alpha)
    r = 0.0
    for n in range(N, 0, -1):
        v = ext(f((x + direction * n * a) % 1.0))
        if is_inf(v):
            r = 0.0
            continue
        den = v - lam - r
        if den == 0.0:
            r = 1e300
        else:
            r = 1.0 / den
    return r


def _periodic_tail(f, x, alpha, lam, direction):
    """Half-line tail at rational frequency: the attracting fixed point of
    the period-q Moebius map r -> 1/(V - lam - r').  Returns None when no
    attracting real fixed point exists (lam inside a band) or the period
    contains an infinite site (caller falls back to truncation)."""
    q = alpha.q
    a = alpha.value
    # one period of sites walking outward from the origin
    m = np.eye(2)
    for n in range(1, q + 1):
        v = ext(f((x + direction * n * a) % 1.0))
        if is_inf(v):
            return None
        m = m @ np.array([[0.0, 1.0], [-1.0, float(v) - lam]])
        nrm = max(abs(m[0, 0]), abs(m[0, 1]), abs(m[1, 0]), abs(m[1, 1]))
        if nrm > 1e100:
            m /= nrm
    # unimodular up to the normalization; fixed points of (m00 r + m01)/(m10 r + m11)
    aq, bq, cq, dq = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    if abs(cq) < 1e-300:
        return bq / dq if dq != 0.0 else None
    disc = (aq - dq) ** 2 + 4.0 * bq * cq
    if disc <= 0.0:
        return None
    roots = [((aq - dq) + s * math.sqrt(disc)) / (2.0 * cq) for s in (1.0, -1.0)]
    # attracting root: Moebius derivative det(m)/(c r + d)^2 has modulus < 1
    det = aq * dq - bq * cq
    best = None
    for r in roots:
        den = cq * r + dq
        if den == 0.0:
            continue
        deriv = abs(det) / (den * den)
        if deriv < 1.0 and (best is None or deriv < best[0]):
            best = (deriv, r)
    return best[1] if best else None


def green_00(f, x, alpha, lam, tol=1e-9, n_start=64, n_cap=1 << 16):
    """<e_0, (H - lam)^{-1} e_0> for the whole-line operator, via two
    half-line continued-fraction recurrences on a Dirichlet truncation whose
    halfwidth doubles until the value settles below ``tol``.  At rational
    frequency the tails are taken directly as the attracting fixed points
    of the period map when those exist.

    Strictly increasing in lam between poles.  Raises PoleProximity when
    lam sits within ~1e-8 of a truncation eigenvalue (tiny secular
    denominator or failure to settle).
    """
    lam = float(lam)
    v0 = ext(f(x % 1.0))
    if is_inf(v0):
        raise MustSplit(0)
    if getattr(alpha, "is_rational", False):
        rp = _periodic_tail(f, x, alpha, lam, +1)
        rm = _periodic_tail(f, x, alpha, lam, -1)
        if rp is not None and rm is not None:
            den = v0 - lam - rp - rm
            if abs(den) < 1e-8:
                raise PoleProximity(
                    f"lam = {lam} within 1e-8 of a pole of the Green function"
                )
            return 1.0 / den
    prev = None
    N = n_start
    while N <= n_cap:
        rp = _halfline_tail(f, x, alpha, lam, +1, N)
        rm = _halfline_tail(f, x, alpha, lam, -1, N)
        den = v0 - lam - rp - rm
        if abs(den) < 1e-8:
            raise PoleProximity(
                f"lam = {lam} within 1e-8 of a truncation eigenvalue"
            )
        g = 1.0 / den
        if prev is not None and abs(g - prev) < tol:
            return g
        prev = g
        N *= 2
    raise PoleProximity(f"green_00 did not settle below {tol} by N = {n_cap}")


# ---------------------------------------------------------------------------
# Lyapunov exponent
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LyapunovResult:
    value: float
    stderr: float
    skipped_fraction: float
    unreliable: bool

    def __float__(self):
        return self.value


def lyapunov(f, x0, alpha, E, n_steps=10_000, n_phases=32, seed=1):
    """Lyapunov exponent at energy E: mean normalized log growth of the
    transfer cocycle over seeded random phases.

    Steps landing within 1e-12 of the potential's singular point x = 0 are
    skipped (a measure-zero set); if more than 1% of steps are skipped the
    result is flagged unreliable.
    """
    if n_steps < 1000:
        raise DomainError("n_steps must be >= 1000")
    a = alpha.value if hasattr(alpha, "value") else float(alpha)
    rng = np.random.default_rng(seed)
    phases = (float(x0) + rng.random(n_phases)) % 1.0
    per_phase = []
    skipped = 0
    total = 0
    for phase in phases:
        u, w = 1.0, 0.0
        acc = 0.0
        applied = 0
        for n in range(n_steps):
            total += 1
            xi = (phase + n * a) % 1.0
            if min(xi, 1.0 - xi) < 1e-12:
                skipped += 1
                continue
            v = f(xi)
            if is_inf(v):
                skipped += 1
                continue
            u, w = (E - v) * u - w, u
            nrm = math.hypot(u, w)
            acc += math.log(nrm)
            u /= nrm
            w /= nrm
            applied += 1
        per_phase.append(acc / applied if applied else 0.0)
    per_phase = np.asarray(per_phase)
    mean = float(np.mean(per_phase))
    stderr = float(np.std(per_phase, ddof=1) / math.sqrt(len(per_phase))) if len(per_phase) > 1 else 0.0
    frac = skipped / total if total else 0.0
    return LyapunovResult(
        value=mean, stderr=stderr, skipped_fraction=frac, unreliable=frac > 0.01
    )


# ---------------------------------------------------------------------------
# Union of spectra over the parameter circle
# ---------------------------------------------------------------------------

def _eig_jump(e1, e2):
    """Largest displacement between two sorted finite eigenvalue lists
    (infinite when the counts differ)."""
    if len(e1) != len(e2):
        return math.inf
    if len(e1) == 0:
        return 0.0
    return float(np.max(np.abs(e1 - e2)))


def union_spectrum_over_theta(
    f, path, alpha, n_x=16, n_t=33, eps=0.05, window=None,
    s_min=1e-5, max_t_points=4096,
):
    """Union over the parameter circle of the approximant spectra: Floquet
    bands over a phase sweep plus eps-thickened block eigenvalues over an
    adaptively refined sweep of the interpolation value t along the arc.

    All gaps share one block family (a cyclic relabeling of the diagonal),
    so a single t sweep covers every gap.  Adjacent t samples are refined
    until the eigenvalue lists move by less than eps/2 or the parameter
    interval drops below ``s_min``.
    """
    if not getattr(alpha, "is_rational", False):
        raise DomainError("union over the circle is computed at rational frequency")
    if path is None:
        tpath = None
    elif isinstance(path, ArcPath):
        tpath = path
    else:
        tpath = ArcPath(path, forward=True)

    pieces = []
    contains_inf = False

    def clamp(eigs):
        if window is not None:
            eigs = np.clip(eigs, window[0] - eps, window[1] + eps)
        return np.sort(eigs)

    def bands_at(x):
        try:
            return discriminant_bands(f, x, alpha)
        except MustSplit:
            # measure-zero phase on the singular orbit; nudge off it
            return discriminant_bands(f, x + 1e-9, alpha)

    edge_points = []

    def edge_sig(x):
        # band edges (both corner blocks) as a fixed-length, x-continuous
        # signature driving the phase refinement
        try:
            vals = site_values(f, x, alpha)
            if any(is_inf(v) for v in vals):
                raise MustSplit(0)
        except MustSplit:
            x = x + 1e-9
            vals = site_values(f, x, alpha)
        diag = np.asarray([float(v) for v in vals])
        raw = np.concatenate([
            sturm_eigenvalues(diag, corner=1.0),
            sturm_eigenvalues(diag, corner=-1.0),
        ])
        # the edges are genuine spectrum points of the approximant; keep
        # them even when the band between them is too thin to resolve
        if window is None:
            edge_points.extend(raw)
        else:
            edge_points.extend(e for e in raw if window[0] <= e <= window[1])
        return clamp(raw)

    xs = [(j + 0.5) / n_x for j in range(n_x)]
    xcache = {}

    def sig_of(x):
        key = x % 1.0
        if key not in xcache:
            xcache[key] = edge_sig(key)
        return xcache[key]

    for x in xs:
        sig_of(x)
    # the phase lives on a circle: include the wrap-around interval
    xstack = list(zip(xs, xs[1:])) + [(xs[-1], xs[0] + 1.0)]
    x_min = s_min / max(1, alpha.q)
    while xstack and len(xcache) < max_t_points:
        x1, x2 = xstack.pop()
        if x2 - x1 < x_min:
            continue
        if _eig_jump(sig_of(x1), sig_of(x2)) <= 0.5 * eps:
            continue
        xm = 0.5 * (x1 + x2)
        sig_of(xm)
        xstack.append((x1, xm))
        xstack.append((xm, x2))
    for x in xcache:
        pieces.append(bands_at(x))
    pieces.append(SpectrumSet.from_intervals([(e, e) for e in edge_points]))

    def eigs_at(s):
        nonlocal contains_inf
        t = tpath.value(s)
        block = PeriodicBlock.from_potential(ModifiedPotential(f, t), 0.0, alpha)
        spec = block_eigenvalues(block)
        if spec.contains_infinity:
            contains_inf = True
        # clamping keeps eigenvalues racing off to +/-infinity from soaking
        # up the refinement budget out of view
        return clamp(spec.finite)

    if tpath is not None:
        svals = list(np.linspace(-1.0, 0.0, n_t))
        cache = {s: eigs_at(s) for s in svals}
        stack = list(zip(svals, svals[1:]))
        while stack and len(cache) < max_t_points:
            s1, s2 = stack.pop()
            if s2 - s1 < s_min:
                continue
            if _eig_jump(cache[s1], cache[s2]) <= 0.5 * eps:
                continue
            sm = 0.5 * (s1 + s2)
            cache[sm] = eigs_at(sm)
            stack.append((s1, sm))
            stack.append((sm, s2))

        points = np.concatenate(list(cache.values())) if cache else np.empty(0)
        pieces.append(SpectrumSet.from_intervals(
            [(e - eps, e + eps) for e in points]
        ))

    all_intervals = [iv for piece in pieces for iv in piece.intervals]
    out = SpectrumSet.from_intervals(all_intervals, contains_infinity=contains_inf)
    if tpath is not None and tpath.contains(INF):
        out = SpectrumSet(intervals=out.intervals, contains_infinity=True)
    if window is not None:
        out = out.clip(window)
    return out


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def bands_table_text(entries):
    """Delimited band table: theta index, band index, left, right; one band
    per line.  ``entries`` is a list of (theta_index, SpectrumSet)."""
    lines = ["theta_index\tband_index\tleft\tright"]
    for theta_index, spec in entries:
        for band_index, (a, b) in enumerate(spec.intervals):
            lines.append(f"{theta_index}\t{band_index}\t{a:.12g}\t{b:.12g}")
    return "\n".join(lines) + "\n"
