import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cesaro.constructions import block_set
from cesaro.kp import (
    AnomalySequence,
    RealSequence,
    SimpleSequence,
    TailSequence,
    anomaly_at_square,
    anomaly_before_square,
    anomaly_demo,
    cesaro_integral_check,
    integral,
    kp_norm,
    kp_tail_condition,
    seq_partial_average,
)
from cesaro.sets import EVENS, NATURALS, ODDS, SQUARES, Residue

S = SimpleSequence.of


def test_partial_average_examples():
    assert seq_partial_average(S((1, NATURALS)), 12345) == 1
    assert seq_partial_average(AnomalySequence(), 9) == Fraction(2, 3)
    assert seq_partial_average(S((2, EVENS), (-1, ODDS)), 4) == Fraction(1, 2)


def test_partial_sum_streaming_matches_closed_form():
    h = S((Fraction(3, 2), EVENS), (-1, Residue(0, 3)), (5, SQUARES))
    assert RealSequence.partial_sum(h, 5000) == h.partial_sum(5000)
    g = AnomalySequence()
    assert RealSequence.partial_sum(g, 99_999) == g.partial_sum(99_999)
    t = TailSequence(g, Fraction(10))
    assert RealSequence.partial_sum(t, 50_000) == t.partial_sum(50_000)


def test_norm_examples():
    assert kp_norm(S((1, EVENS)), 2).power == Fraction(1, 2)
    n = kp_norm(S((2, Residue(0, 3)), (1, ~Residue(0, 3))), 1)
    assert n.power == n.norm == Fraction(4, 3)
    h = S((3, EVENS), (1, ODDS))
    assert kp_norm(h - (h + S((5, SQUARES))), 1).power == 0


def test_norm_rational_exponent():
    n = kp_norm(S((4, EVENS)), Fraction(3, 2))
    assert n.power == 4  # 4^(3/2) * 1/2
    assert n.norm_float == pytest.approx(4 ** (2 / 3))
    irr = kp_norm(S((2, EVENS)), Fraction(3, 2))
    assert irr.power is None and irr.power_float == pytest.approx(2**1.5 / 2)


def _random_h(rng, m=6):
    return SimpleSequence(tuple((Fraction(rng.randint(-6, 6), rng.randint(1, 3)), Residue(r, m)) for r in range(m) if rng.random() < 0.7))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pseudonorm_axioms(seed):
    rng = random.Random(seed)
    h1, h2 = _random_h(rng), _random_h(rng)
    c = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    n1, n2 = kp_norm(h1, 1), kp_norm(h2, 1)
    assert kp_norm(h1.scale(c), 1).power == abs(c) * n1.power
    assert kp_norm(h1 + h2, 1).power <= n1.power + n2.power
    q1, q2, q12 = kp_norm(h1, 2), kp_norm(h2, 2), kp_norm(h1 + h2, 2)
    assert q12.norm_float <= q1.norm_float + q2.norm_float + 1e-9
    assert kp_norm(h1.scale(c), 2).norm_float == pytest.approx(float(abs(c)) * q1.norm_float, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_null_perturbation_is_invisible(seed):
    rng = random.Random(seed)
    h = _random_h(rng)
    pert = h + S((rng.randint(1, 9), SQUARES))
    assert kp_norm(pert - h, 1).power == 0
    assert kp_norm(pert - h, 2).power == 0


def test_monotonicity():
    f = S((1, Residue(0, 3)), (2, Residue(1, 3)), (0, Residue(2, 3)))
    g = S((1, Residue(0, 3)), (3, Residue(1, 3)), (1, Residue(2, 3)))
    assert integral(f) <= integral(g)


def test_integral_check_examples():
    r = cesaro_integral_check(S((3, EVENS)))
    assert r.limit == Fraction(3, 2) and r.passed
    q = cesaro_integral_check(S((1, block_set("q2"))))
    assert q.limit == Fraction(1, 2) and q.decreasing and not q.linearity_failures


def test_linearity_exact():
    f, g = S((1, EVENS)), S((1, Residue(0, 3)))
    assert integral(f.scale(2) + g.scale(3)) == 2 * integral(f) + 3 * integral(g)


def test_tail_bounded():
    t = kp_tail_condition(S((3, EVENS), (-2, ODDS)), 1, Fraction(1, 10))
    assert t.satisfied and t.exact and t.y == 6


def test_tail_anomaly():
    t = kp_tail_condition(AnomalySequence(), 1, Fraction(1, 10))
    assert not t.satisfied
    assert [y for y, _ in t.estimates] == [1, 10, 100]
    assert all(Fraction(45, 100) <= u <= Fraction(55, 100) for _, u in t.estimates)


def test_anomaly_formulas():
    assert anomaly_at_square(1) == 1
    assert anomaly_at_square(1000) == Fraction(5005, 10**4)
    assert anomaly_before_square(2) == Fraction(3, 8)
    rep = anomaly_demo(200)
    assert rep.passed and rep.rows[1] == (2, Fraction(3, 4), Fraction(3, 8))


def test_anomaly_separation():
    rep = anomaly_demo(1000)
    assert rep.nu_at_horizon - 0 >= Fraction(49, 100)
    assert rep.support_null == "Equivalent(exact, 0)"
