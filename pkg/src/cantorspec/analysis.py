"""Spectral-set analysis: Hausdorff distances (euclidean and chordal on the
Cayley circle), band statistics and Cantor-structure trends along rational
approximants, winding numbers of determinant loops over the parameter
circle, gap-filling coverage, verification of the quantitative two-
eigenfunction inequality on symmetric fixtures, and eigenfunction decay-rate
fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import TWO_PI, DomainError, Frequency, cayley_angle, is_inf
from .potentials import DegreeResolutionError
from .spectra import SpectrumSet, discriminant_bands, union_spectrum_over_theta
from .numerics import ArcPath


# ---------------------------------------------------------------------------
# Hausdorff distance
# ---------------------------------------------------------------------------

EUCLID = "euclid_on_window"
CHORDAL = "cayley_chordal"


def _directed_euclid(A, B):
    cands = [p for iv in A.intervals for p in iv]
    for g1, g2 in B.gaps():
        mid = 0.5 * (g1 + g2)
        if A.contains(mid):
            cands.append(mid)
    return max(B.distance(c) for c in cands)


def _angular_arcs(S):
    arcs = []
    for a, b in S.intervals:
        t0 = cayley_angle(a)
        arcs.append((t0, (cayley_angle(b) - t0) % TWO_PI))
    if S.contains_infinity:
        arcs.append((cayley_angle(math.inf), 0.0))
    return arcs


def _point_to_arc_angle(theta, arc):
    t0, sw = arc
    rel = (theta - t0) % TWO_PI
    if rel <= sw:
        return 0.0
    return min(rel - sw, TWO_PI - rel)


def _directed_chordal(A, B):
    a_arcs, b_arcs = _angular_arcs(A), _angular_arcs(B)
    cands = []
    for t0, sw in a_arcs:
        cands.append(t0)
        cands.append((t0 + sw) % TWO_PI)
    # angular midpoints of the circular gaps between B's components, when
    # they fall inside A (interior maxima of the distance function)
    b_sorted = sorted(b_arcs)
    for (t0, sw), nxt in zip(b_sorted, b_sorted[1:] + b_sorted[:1]):
        end = (t0 + sw) % TWO_PI
        gap = (nxt[0] - end) % TWO_PI
        mid = (end + 0.5 * gap) % TWO_PI
        if any(_point_to_arc_angle(mid, arc) == 0.0 for arc in a_arcs):
            cands.append(mid)
    d = max(min(_point_to_arc_angle(c, arc) for arc in b_arcs) for c in cands)
    return 2.0 * math.sin(0.5 * d)


def hausdorff_distance(A, B, metric=EUCLID):
    """Hausdorff distance between two spectrum sets.

    The euclidean metric requires both sets finite; the chordal metric
    measures straight-line distance between Cayley images on the unit
    circle and handles the point at infinity.
    """
    if A.is_empty or B.is_empty:
        raise DomainError("Hausdorff distance of an empty set is undefined")
    if metric == EUCLID:
        if A.contains_infinity or B.contains_infinity:
            raise DomainError("euclidean Hausdorff distance cannot include infinity")
        return max(_directed_euclid(A, B), _directed_euclid(B, A))
    if metric == CHORDAL:
        return max(_directed_chordal(A, B), _directed_chordal(B, A))
    raise DomainError(f"unknown metric {metric!r}")


# ---------------------------------------------------------------------------
# Band statistics and the Cantor trend
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BandStatistics:
    band_count: int
    total_measure: float
    max_band_length: float
    min_gap_length: float


def band_stats(S, window):
    """Exact interval statistics of the set clipped to a finite window."""
    clipped = S.clip(window)
    gaps = [b - a for a, b in clipped.gaps()]
    return BandStatistics(
        band_count=clipped.band_count,
        total_measure=clipped.measure(),
        max_band_length=clipped.max_band_length(),
        min_gap_length=min(gaps) if gaps else math.inf,
    )


@dataclass(frozen=True)
class TrendRow:
    p: int
    q: int
    stats: BandStatistics
    hausdorff_prev: float
    spectrum: SpectrumSet


def cantor_trend(f, x, convergents, window, q_cap=4096):
    """Band statistics of the periodic approximants along a list of
    continued-fraction convergents (p_k, q_k), with Hausdorff distances
    between consecutive approximant spectra on the window."""
    rows = []
    prev = None
    for p, q in convergents:
        if q > q_cap:
            break
        if p == 0:
            continue
        spec = discriminant_bands(f, x, Frequency.rational(p, q))
        clipped = spec.clip(window)
        dist = hausdorff_distance(prev, clipped) if prev is not None else math.nan
        rows.append(TrendRow(
            p=p, q=q, stats=band_stats(spec, window),
            hausdorff_prev=dist, spectrum=clipped,
        ))
        prev = clipped
    if len(rows) < 3:
        raise DomainError("need at least 3 usable convergents")
    return rows


# ---------------------------------------------------------------------------
# Winding number of the determinant loop
# ---------------------------------------------------------------------------

def _ring_dense(diag):
    q = len(diag)
    if q == 1:
        return np.array([[diag[0] + 2.0]])
    if q == 2:
        return np.array([[diag[0], 2.0], [2.0, diag[1]]])
    h = np.diag(np.asarray(diag, dtype=float))
    h += np.diag(np.ones(q - 1), 1) + np.diag(np.ones(q - 1), -1)
    h[0, q - 1] += 1.0
    h[q - 1, 0] += 1.0
    return h


def _block_cayley_det(diagonal):
    """det of the Cayley transform of the quasimomentum-zero block, with
    infinite sites contributing a factor i each (Dirichlet split)."""
    q = len(diagonal)
    inf_sites = [k for k, v in enumerate(diagonal) if is_inf(v)]
    det = 1j ** (q % 4)
    if not inf_sites:
        h = _ring_dense(diagonal)
        return det * np.linalg.det(np.linalg.solve(h + 1j * np.eye(q), h - 1j * np.eye(q)))
    start = inf_sites[0]
    run = []
    chains = []
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
    for chain in chains:
        n = len(chain)
        h = np.diag(chain)
        if n > 1:
            h += np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
        det *= np.linalg.det(np.linalg.solve(h + 1j * np.eye(n), h - 1j * np.eye(n)))
    return det


def _phase_track(segments, max_total=1 << 20):
    """Total phase accumulated by a chain of continuous unit-modulus
    segment maps u in [0,1] -> C, refining each segment until its internal
    phase steps drop below pi/2."""
    counts = [n for _, n in segments]
    while True:
        spans = []
        for (fn, _), n in zip(segments, counts):
            us = np.linspace(0.0, 1.0, n + 1)
            vals = np.array([fn(float(u)) for u in us])
            spans.append(vals)
        bad = []
        for i, vals in enumerate(spans):
            steps = np.angle(vals[1:] / vals[:-1])
            if np.max(np.abs(steps)) >= 0.5 * math.pi:
                bad.append(i)
        if not bad:
            chain = np.concatenate(spans)
            steps = np.angle(chain[1:] / chain[:-1])
            if np.max(np.abs(steps)) >= 0.5 * math.pi:
                raise DegreeResolutionError("phase step across a segment junction")
            return float(np.sum(steps))
        for i in bad:
            counts[i] *= 2
        if sum(counts) > max_total:
            raise DegreeResolutionError(
                "phase steps not resolved below pi/2 within the sample cap"
            )


def det_winding(f, glue, alpha, samples=None):
    """Winding number of theta -> det(Cayley(block at theta)) as theta goes
    once around the parameter circle: phase sweeps over the q Cantor arcs
    interleaved with the q gap traversals of the discontinuity arc.

    ``glue`` is the arc path closing the jump (from f(1-0) to f(0)); pass
    None for a potential that is already a continuous circle map, whose
    loop is a plain phase sweep.
    """
    if not getattr(alpha, "is_rational", False):
        raise DomainError("winding is computed at rational frequency")
    q = alpha.q
    a = alpha.value
    if samples is None:
        samples = 16 * q
    nudge = 1e-12

    def diag_at(x):
        return [f((x + k * a) % 1.0) for k in range(q)]

    if glue is None:
        seg = lambda u: _block_cayley_det(diag_at(u * (1.0 - nudge)))
        return int(round(_phase_track([(seg, max(64, samples))]) / TWO_PI))

    path = glue if isinstance(glue, ArcPath) else ArcPath(glue, forward=True)
    per_seg = max(8, samples // (2 * q))
    segments = []
    for j in range(q):
        def cantor_seg(u, j=j):
            x = (j + u * (1.0 - nudge)) / q
            return _block_cayley_det(diag_at(x))

        pos = ((j + 1) % q) / q
        frozen = diag_at(pos)
        k_star = min(
            range(q), key=lambda k: min((pos + k * a) % 1.0, 1.0 - (pos + k * a) % 1.0)
        )

        def gap_seg(u, frozen=list(frozen), k_star=k_star):
            d = list(frozen)
            d[k_star] = path.value(u - 1.0)
            return _block_cayley_det(d)

        segments.append((cantor_seg, per_seg))
        segments.append((gap_seg, per_seg))
    return int(round(_phase_track(segments) / TWO_PI))


# ---------------------------------------------------------------------------
# Gap-filling coverage
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageReport:
    covered_fraction: float
    holes: tuple                # (a, b) intervals of uncovered grid points
    spectrum: SpectrumSet


def gap_filling_check(f, glue, alpha, E_grid, eps, n_x=None):
    """Fraction of an energy grid lying within eps of the union of the
    approximant spectra over the parameter circle, with the uncovered grid
    regions listed explicitly."""
    E_grid = np.asarray(E_grid, dtype=float)
    if E_grid.size == 0 or eps <= 0:
        raise DomainError("need a nonempty grid and eps > 0")
    if n_x is None:
        n_x = max(16, 2 * alpha.q)
    spec = union_spectrum_over_theta(
        f, glue, alpha, n_x=n_x, eps=eps,
        window=(float(E_grid.min()) - 2 * eps, float(E_grid.max()) + 2 * eps),
    )
    covered = np.array([spec.distance(e) <= eps for e in E_grid])
    holes = []
    run = None
    for e, ok in zip(E_grid, covered):
        if ok:
            if run is not None:
                holes.append((run[0], run[1]))
                run = None
        else:
            run = (run[0], e) if run is not None else (e, e)
    if run is not None:
        holes.append((run[0], run[1]))
    return CoverageReport(
        covered_fraction=float(np.mean(covered)), holes=tuple(holes), spectrum=spec,
    )


# ---------------------------------------------------------------------------
# The two-eigenfunction inequality on symmetric fixtures
# ---------------------------------------------------------------------------

def symmetric_fixture(N=50, disorder=10.0, seed=1):
    """Reflection-symmetric random diagonal V(n) = V(-n) on [-N, N]: its odd
    eigenvectors vanish at the origin exactly, manufacturing the vanishing
    hypothesis of the inequality."""
    rng = np.random.default_rng(seed)
    half = disorder * (2.0 * rng.random(N + 1) - 1.0)
    return np.concatenate([half[:0:-1], half])


def _dense_eig(diagonal):
    n = len(diagonal)
    h = np.diag(np.asarray(diagonal, dtype=float))
    h += np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    return np.linalg.eigh(h)


@dataclass(frozen=True)
class LemmaMainReport:
    lam: float
    mu: float
    J: tuple
    m: float
    delta: float
    lhs: float
    rhs: float
    holds: bool
    overlap: float              # |<psi_+, phi_+>| of the half restrictions


class FixtureError(DomainError):
    """The window J violates the vanishing-at-origin hypothesis."""


def lemma_main_verify(diagonal, J, vanish_tol=1e-10, deg_tol=1e-9):
    """For every ordered pair of distinct eigenvalues in J (all of whose
    eigenfunctions must vanish at the origin within vanish_tol), check
    dist(lam, dJ) <= |lam - mu| / sqrt(1 - m^2) and the orthogonality of
    the positive half restrictions.

    Pairs closer than deg_tol are numerically degenerate and skipped: their
    distinctness cannot be asserted in floating point.
    """
    evals, evecs = _dense_eig(diagonal)
    origin = (len(diagonal) - 1) // 2
    a, b = float(J[0]), float(J[1])
    idx = [i for i, e in enumerate(evals) if a < e < b]
    bad = [i for i in idx if abs(evecs[origin, i]) > vanish_tol]
    if bad:
        raise FixtureError(
            f"{len(bad)} eigenvalue(s) in J have eigenfunctions not vanishing "
            f"at the origin (max |value| {max(abs(evecs[origin, i]) for i in bad):.2e})"
        )
    reports = []
    for i in idx:
        lam = float(evals[i])
        phi = evecs[:, i]
        phi_minus = np.linalg.norm(phi[:origin])
        phi_plus = np.linalg.norm(phi[origin + 1:])
        delta = min(phi_plus, phi_minus)
        for j in idx:
            if j == i or abs(evals[j] - evals[i]) <= deg_tol:
                continue
            mu = float(evals[j])
            psi = evecs[:, j]
            psi_minus = np.linalg.norm(psi[:origin])
            psi_plus = np.linalg.norm(psi[origin + 1:])
            m = min(max(phi_minus, psi_plus), max(phi_plus, psi_minus))
            lhs = min(lam - a, b - lam)
            rhs = abs(lam - mu) / math.sqrt(max(1.0 - m * m, 1e-300))
            overlap = float(abs(np.dot(psi[origin + 1:], phi[origin + 1:])))
            reports.append(LemmaMainReport(
                lam=lam, mu=mu, J=(a, b), m=float(m), delta=float(delta),
                lhs=float(lhs), rhs=float(rhs), holds=lhs <= rhs + 1e-12,
                overlap=overlap,
            ))
    return reports


def choose_window(diagonal, vanish_tol=1e-10, deg_tol=1e-9,
                  pair_floor=1e-6, margin_frac=0.45):
    """Pick an interval J containing two adjacent groups of vanishing-at-
    origin eigenvalues and nothing else; returns None if the fixture has
    no admissible window.

    Eigenvalues within deg_tol of each other form one group (a localized
    doublet whose members cannot be numerically separated counts as a
    single spectral point).  A group qualifies only if every member
    vanishes at the origin; the margin beyond the two chosen groups stays
    below margin_frac times their separation so that the distance of each
    eigenvalue to the boundary of J is dominated by its distance to the
    partner group.
    """
    evals, evecs = _dense_eig(diagonal)
    origin = (len(diagonal) - 1) // 2
    vanish = np.abs(evecs[origin, :]) <= vanish_tol
    groups = [[0]]
    for i in range(1, len(evals)):
        if evals[i] - evals[groups[-1][-1]] <= deg_tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    good = [all(vanish[i] for i in g) for g in groups]
    best = None
    for k in range(len(groups) - 1):
        if not (good[k] and good[k + 1]):
            continue
        lo_edge = float(evals[groups[k][0]])
        hi_edge = float(evals[groups[k + 1][-1]])
        sep = float(evals[groups[k + 1][0]] - evals[groups[k][-1]])
        if sep < pair_floor:
            continue
        margin = margin_frac * sep
        prev_gap = (
            lo_edge - float(evals[groups[k - 1][-1]]) if k > 0 else math.inf
        )
        next_gap = (
            float(evals[groups[k + 2][0]]) - hi_edge
            if k + 2 < len(groups) else math.inf
        )
        if prev_gap <= margin or next_gap <= margin:
            continue                      # a stranger eigenvalue would enter J
        if best is None or sep > best[1]:
            best = ((lo_edge - margin, hi_edge + margin), sep)
    return best[0] if best else None


# ---------------------------------------------------------------------------
# Eigenfunction decay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayReport:
    fitted_rate: float
    stderr: float
    localized: bool
    match: bool


def decay_rate(psi, L_reference=None, floor=1e-13):
    """Least-squares exponential decay rate of a localized eigenvector: the
    slope of log |psi| over the two tails flanking its peak.

    A vector whose participation ratio exceeds a quarter of the window is
    flagged as not localized and no fit is attempted.
    """
    psi = np.asarray(psi, dtype=float)
    psi = psi / np.linalg.norm(psi)
    n = len(psi)
    pr = 1.0 / float(np.sum(psi ** 4))
    if pr >= n / 4:
        return DecayReport(fitted_rate=math.nan, stderr=math.nan,
                           localized=False, match=False)
    peak = int(np.argmax(np.abs(psi)))
    slopes = []
    variances = []
    for idx in (np.arange(peak + 1, n), np.arange(peak - 1, -1, -1)):
        vals = np.abs(psi[idx])
        keep = vals > floor
        if np.count_nonzero(keep) < 4:
            continue
        xs = np.arange(np.count_nonzero(keep), dtype=float)
        ys = np.log(vals[keep])
        coef, cov = np.polyfit(xs, ys, 1, cov=True)
        slopes.append(-coef[0])
        variances.append(cov[0, 0])
    if not slopes:
        return DecayReport(fitted_rate=math.nan, stderr=math.nan,
                           localized=True, match=False)
    rate = float(np.mean(slopes))
    stderr = float(math.sqrt(sum(variances)) / len(slopes))
    match = (
        L_reference is not None
        and abs(rate - L_reference) <= max(0.1 * L_reference, 3.0 * stderr)
    )
    return DecayReport(fitted_rate=rate, stderr=stderr, localized=True, match=match)
