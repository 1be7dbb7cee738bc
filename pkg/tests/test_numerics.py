"""Extended reals, the Cayley circle, arcs, and frequency arithmetic."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cantorspec.numerics import (
    INF,
    Arc,
    ArcPath,
    DiophantineParams,
    DomainError,
    Frequency,
    arc_path_between,
    beta_estimate,
    cayley,
    cayley_angle,
    continued_fraction,
    diophantine_probe,
    dist_to_integers,
    ext,
    ext_eq,
    fmt_ext,
    inverse_cayley,
    is_inf,
)

finite = st.floats(min_value=-1e6, max_value=1e6,
                   allow_nan=False, allow_infinity=False)


def test_infinity_is_a_singleton():
    assert INF is ext(float("inf"))
    assert INF is ext(float("-inf"))
    assert is_inf(INF) and not is_inf(0.0)
    assert INF == INF and INF != 3.0
    assert fmt_ext(INF) == "inf"
    assert fmt_ext(2.0) == "2.0"


def test_ext_eq_tolerance():
    assert ext_eq(INF, INF)
    assert not ext_eq(INF, 1e300)
    assert ext_eq(1.0, 1.0 + 1e-12, tol=1e-9)
    assert not ext_eq(1.0, 1.1)


def test_cayley_landmarks():
    assert cayley(0.0) == -1j
    assert cayley(INF) == 1j
    assert abs(cayley(1.0) - 1.0) < 1e-15


@given(finite)
def test_cayley_is_unimodular_and_invertible(t):
    u = cayley(t)
    assert abs(abs(u) - 1.0) < 1e-9
    back = inverse_cayley(u)
    assert abs(back - t) <= 1e-6 * max(1.0, abs(t))


def test_cayley_angle_increases_up_to_the_wrap():
    # the angle grows with t and wraps to 0 at t = 1 (where cayley(t) = 1)
    ts = [-50.0, -3.0, -1.0, 0.0, 0.5, 0.9]
    angles = [cayley_angle(t) for t in ts]
    assert all(b > a for a, b in zip(angles, angles[1:]))
    assert cayley_angle(1.0) == 0.0
    assert abs(cayley_angle(INF) - math.pi / 2.0) < 1e-15


def test_arc_point_fraction_round_trip():
    arc = Arc(2.0, -2.0)           # passes through infinity
    for frac in (0.0, 0.25, 0.5, 0.9, 1.0):
        t = arc.point_at(frac)
        assert abs(arc.fraction_of(t) - frac) < 1e-9
    assert arc.interior_contains_infinity()
    assert arc.contains(INF)
    assert not arc.contains(0.0)


def test_full_circle_arc():
    arc = Arc(0.0, 0.0, full_circle=True)
    assert abs(arc.sweep - 2.0 * math.pi) < 1e-12
    assert arc.contains(INF) and arc.contains(17.0) and arc.contains(-0.3)


def test_arc_path_between_routes():
    via = arc_path_between(1.0, 2.0, via_infinity=True)
    direct = arc_path_between(1.0, 2.0, via_infinity=False)
    assert via.contains(INF)
    assert not direct.contains(INF, closed=False)
    assert direct.contains(1.5)
    assert via.a == 1.0 and via.b == 2.0
    with pytest.raises(DomainError):
        arc_path_between(1.0, 1.0, via_infinity=True)


def test_arc_path_value_parameter_round_trip():
    # glue parameter runs over [-1, 0]: endpoint a at -1, endpoint b at 0
    path = arc_path_between(-1.0, 3.0, via_infinity=True)
    assert ext_eq(path.value(-1.0), -1.0, tol=1e-12)
    assert ext_eq(path.value(0.0), 3.0, tol=1e-12)
    for s in (-1.0, -0.7, -0.3, 0.0):
        t = path.value(s)
        assert abs(path.parameter_of(t) - s) < 1e-9


def test_frequency_rational_validation():
    a = Frequency.rational(10, 16)
    assert (a.p, a.q) == (5, 8)
    assert a.exact_fraction().numerator == 5
    with pytest.raises(DomainError):
        Frequency.rational(0, 1)
    with pytest.raises(DomainError):
        Frequency.rational(3, 2)
    with pytest.raises(DomainError):
        Frequency.irrational(1.5)
    # period-1 approximant: the identity shift
    one = Frequency.rational(1, 1)
    assert one.q == 1 and one.value == 1.0


def test_partial_quotients_of_5_over_7():
    assert Frequency.rational(5, 7).partial_quotients(10) == [1, 2, 2]


def test_golden_convergents_are_fibonacci():
    convs = continued_fraction(Frequency.golden(), 8)
    assert convs == [(0, 1), (1, 1), (1, 2), (2, 3), (3, 5),
                     (5, 8), (8, 13), (13, 21)]


def test_from_partial_quotients_matches_golden():
    a = Frequency.from_partial_quotients([1] * 30)
    assert abs(a.value - (math.sqrt(5.0) - 1.0) / 2.0) < 1e-10


def test_beta_estimate_golden_is_log2():
    est = beta_estimate(Frequency.golden(), 10)
    assert abs(est.value - math.log(2.0)) < 1e-12
    assert not est.is_rational
    # running max over a prefix never exceeds the full estimate
    assert beta_estimate(Frequency.golden(), 4).value <= est.value + 1e-15


def test_beta_estimate_rational_is_zero():
    est = beta_estimate(Frequency.rational(5, 8), 10)
    assert est.value == 0.0 and est.is_rational


def test_dist_to_integers():
    assert dist_to_integers(0.0) == 0.0
    assert abs(dist_to_integers(2.75) - 0.25) < 1e-15
    assert abs(dist_to_integers(-0.4) - 0.4) < 1e-15


def test_diophantine_probe_golden():
    g = Frequency.golden()
    ok = diophantine_probe(g, DiophantineParams(C=0.2, tau=1.0, n_max=2000))
    assert ok.holds_up_to_n
    bad = diophantine_probe(g, DiophantineParams(C=0.5, tau=1.0, n_max=2000))
    assert not bad.holds_up_to_n
    assert bad.worst_n == 1
    assert abs(bad.worst_value - (1.0 - g.value)) < 1e-9
    with pytest.raises(DomainError):
        DiophantineParams(C=-1.0, tau=1.0, n_max=10)
