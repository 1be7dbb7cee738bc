"""Rank-one gap eigenvalues, the monotone flow, Cayley transforms of
generalized operators, and the norm/convergence bounds."""

import math

import numpy as np
import pytest

from cantorspec.numerics import INF, Arc, ArcPath, DomainError, Frequency, is_inf
from cantorspec.perturb import (
    build_generalized,
    cayley_matrix,
    gap_eigenvalue,
    strong_convergence_probe,
    trace_gap_flow,
    verify_norm_bound,
)
from cantorspec.potentials import make_builtin

FREE = make_builtin("constant", value=0.0)
HALF = Frequency.rational(1, 2)
FREE_GAP = Arc(2.0, -2.0)          # the free operator's gap through infinity


def test_free_rank_one_closed_form():
    # V(0) = t on the free background: lam = sign(t) sqrt(t^2 + 4)
    root = gap_eigenvalue(FREE, 0.0, HALF, FREE_GAP, 3.0)
    assert root.found
    assert abs(root.lam - math.sqrt(13.0)) < 1e-8
    root = gap_eigenvalue(FREE, 0.0, HALF, FREE_GAP, -3.0)
    assert abs(root.lam + math.sqrt(13.0)) < 1e-8


def test_free_rank_one_infinite_coupling():
    root = gap_eigenvalue(FREE, 0.0, HALF, FREE_GAP, INF)
    assert root.at_infinity
    # G(lam) = 0 never happens on the free gap arc, but the arc passes
    # through infinity, so the flow sits at the infinite eigenvalue
    assert is_inf(root.lam)


def test_rank_one_outside_window_returns_no_root():
    # t = v0 removes the perturbation entirely
    root = gap_eigenvalue(FREE, 0.0, HALF, FREE_GAP, 0.0)
    assert not root.found


def test_gap_eigenvalue_agrees_with_dense_truncation():
    t = 3.0
    root = gap_eigenvalue(FREE, 0.0, HALF, FREE_GAP, t)
    N = 400
    h = np.diag(np.ones(2 * N), 1) + np.diag(np.ones(2 * N), -1)
    h[N, N] = t
    top = np.linalg.eigvalsh(h)[-1]
    assert abs(root.lam - top) < 1e-5


def test_trace_gap_flow_monotone_and_bracketed():
    v0 = 0.0
    circle = ArcPath(Arc(v0, v0, full_circle=True), forward=True)
    curve = trace_gap_flow(FREE, 0.0, HALF, FREE_GAP, circle, n_samples=33)
    assert len(curve.samples) >= 30
    fracs = [FREE_GAP.fraction_of(lam) for _, lam in curve.samples
             if lam is not None]
    assert all(b > a for a, b in zip(fracs, fracs[1:]))
    tm, tp = curve.t_window
    # the window closes up at t -> v0 = 0 from both sides
    assert tm is not None and tp is not None
    lam_lo = gap_eigenvalue(FREE, 0.0, HALF, FREE_GAP, tp).lam
    lam_hi = gap_eigenvalue(FREE, 0.0, HALF, FREE_GAP, tm).lam
    assert abs(lam_lo - 2.0) < 1e-4 or abs(lam_lo + 2.0) < 1e-4
    assert abs(lam_hi - 2.0) < 1e-4 or abs(lam_hi + 2.0) < 1e-4
    assert "lambda" in curve.text().splitlines()[0]


def test_infinite_base_site_is_rejected():
    mar = make_builtin("maryland", lam=1.0)
    with pytest.raises(DomainError):
        gap_eigenvalue(mar, 0.0, HALF, FREE_GAP, 3.0)


def test_build_generalized_chains():
    op = build_generalized([1.0, INF, 2.0, 3.0, INF])
    assert op.N == 2
    assert op.infinite_set == (1, 4)
    assert op.chains == [(0, 1), (2, 4)]
    with pytest.raises(DomainError):
        build_generalized([1.0, 2.0])            # even window


def test_cayley_matrix_is_unitary_and_block_diagonal():
    op = build_generalized([0.5, INF, -1.0, 2.0, 0.0])
    U = cayley_matrix(op)
    n = op.size
    assert np.allclose(U @ U.conj().T, np.eye(n), atol=1e-12)
    assert U[1, 1] == 1j
    assert np.allclose(U[0, 2:], 0.0) and np.allclose(U[2:, 0], 0.0)


def test_cayley_matrix_scalar_site():
    # single finite site v: i(v - i)/(v + i)
    op = build_generalized([2.0, INF, INF])
    # reorder: INF sites at the edges, finite singleton in the middle
    op = build_generalized([INF, 2.0, INF])
    U = cayley_matrix(op)
    assert abs(U[1, 1] - 1j * (2.0 - 1j) / (2.0 + 1j)) < 1e-12


def test_verify_norm_bound_report_shape():
    vals = np.zeros(41)
    vals[20] = 50.0
    rep = verify_norm_bound(vals, [20])
    assert rep.rhs == 4.0 / 50.0
    assert rep.lhs > 0.0
    # measured gap decays like 1/M on the single-site fixture
    lhs = []
    for M in (10.0, 20.0, 40.0, 80.0):
        v = np.zeros(41)
        v[20] = M
        lhs.append(verify_norm_bound(v, [20]).lhs)
    for a, b in zip(lhs, lhs[1:]):
        assert b < 0.55 * a
    # the provable constant with the resolvent factor of two carried
    # through is 8/M; that bound always holds
    assert all(l <= 8.0 / M for l, M in zip(lhs, (10.0, 20.0, 40.0, 80.0)))


def test_verify_norm_bound_validation():
    rep = verify_norm_bound(np.zeros(5), [])
    assert rep.holds and rep.lhs == 0.0
    with pytest.raises(DomainError):
        verify_norm_bound(np.zeros(5), [2])      # |V| = 0 on the site


def test_strong_convergence_probe():
    n = 41
    limit = [0.0] * n
    limit[n // 2] = INF
    seq = []
    for j in (10.0, 100.0, 1000.0):
        d = [0.0] * n
        d[n // 2] = j
        seq.append(d)
    probe = strong_convergence_probe(seq, limit)
    assert probe.decreasing
    assert len(probe.residuals) == 3
    for r, j in zip(probe.residuals, (10.0, 100.0, 1000.0)):
        assert r <= 4.0 / j
    assert probe.final == probe.residuals[-1]
    with pytest.raises(DomainError):
        strong_convergence_probe([], limit)
