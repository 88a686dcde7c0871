import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cesaro.constructions import block_set
from cesaro.density import (
    EstimatorConfig,
    checkpoints,
    density_profile,
    dilate_density_check,
    exact_charge,
    exact_limits,
    gap_P,
    gap_Q,
    geometric_schedule,
    is_registered_null,
    partial_average,
)
from cesaro.sets import (
    EMPTY,
    EVENS,
    NATURALS,
    ODDS,
    PRIMES,
    SQUARES,
    Blocks,
    BlockSpec,
    Complement,
    Difference,
    Dilate,
    Finite,
    Intersection,
    Interleave,
    Residue,
    SymmDiff,
    Union,
    _block_table,
    counts_at,
    powers,
)

import oracle
import props


def test_partial_average_examples():
    assert partial_average(Residue(0, 3), 10) == Fraction(3, 10)
    assert partial_average(ODDS, 7) == Fraction(4, 7)


def test_exact_charge_examples():
    c = exact_charge(Residue(0, 2) | Residue(0, 3))
    assert c.value == Fraction(2, 3) and c.provenance == "period-count"
    assert exact_charge(Blocks(BlockSpec.power(2))).value == Fraction(1, 2)
    assert exact_charge(Complement(powers(2))).value == 1
    assert exact_charge(Dilate(3, ODDS)).value == Fraction(1, 6)
    assert exact_charge(Finite((1, 2, 3))).value == 0
    assert exact_charge(EMPTY).value == 0


def test_exact_charge_unavailable_for_bc():
    assert exact_charge(Intersection(EVENS, Interleave(block_set("geometric")))) is None
    assert exact_charge(block_set("geometric")) is None


def test_exact_limits():
    assert exact_limits(block_set("geometric")) == (Fraction(2, 3), Fraction(1, 3))
    assert exact_limits(Blocks(BlockSpec.geometric(3))) == (Fraction(3, 4), Fraction(1, 4))
    assert exact_limits(Complement(block_set("geometric"))) == (Fraction(2, 3), Fraction(1, 3))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_residue_charge_matches_period_oracle(seed):
    e = oracle.random_residue_expr(random.Random(seed), max_mod=12)
    L = 27720  # lcm(1..12)
    assert exact_charge(e).value == Fraction(oracle.count(e, L), L)


def test_residue_algebra_beyond_period_cap():
    # lcm = 17*16*19*23*29 is far past the period cap; CRT still gives the exact charge
    e = Union(Intersection(Residue(15, 17), Residue(11, 16)), Intersection(Residue(6, 19), SymmDiff(Residue(19, 23), Residue(4, 29))))
    a = Fraction(1, 17 * 16)
    b = Fraction(1, 19) * (Fraction(1, 23) + Fraction(1, 29) - 2 * Fraction(1, 23 * 29))
    assert exact_charge(e).value == a + b - a * b
    assert exact_charge(Intersection(Residue(1, 4), Residue(0, 6))).value == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 3))
def test_dilated_residue_algebra_matches_oracle(seed, k, j):
    e = oracle.random_residue_expr(random.Random(seed), 2, 8)
    x = Difference(Dilate(k, Dilate(j, Complement(e))), Dilate(k, e))
    L = 2**6 * 3**3 * 5 * 7  # k*j*lcm(1..8) divides this for k <= 4, j <= 3
    assert exact_charge(x).value == Fraction(oracle.count(x, L), L)


def test_dk_union_charge_exact():
    assert exact_charge(Union(Dilate(2, ODDS - Finite((1,))), ODDS - Finite((1,)))).value == Fraction(3, 4)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_charge_properties(seed):
    assert props.check_case(random.Random(seed)) == []


def test_registered_null():
    assert is_registered_null(SQUARES | Finite((5, 6)))
    assert is_registered_null(SymmDiff(EVENS, EVENS | PRIMES))
    assert not is_registered_null(EVENS)


def test_profile_geometric_blocks():
    p = density_profile(block_set("geometric"))
    assert Fraction(66, 100) <= p.upper_est <= Fraction(6675, 10000)
    assert Fraction(3325, 10000) <= p.lower_est <= Fraction(34, 100)
    assert not p.converged and p.heuristic
    assert p.verdict == "no Cesaro limit (exact limits)"


def test_profile_squares_and_odds():
    assert density_profile(SQUARES).upper_est <= Fraction(2, 1000)
    p = density_profile(ODDS)
    assert p.converged and abs(p.upper_est - Fraction(1, 2)) < Fraction(1, 1000)
    assert abs(p.lower_est - Fraction(1, 2)) < Fraction(1, 1000)
    assert p.verdict == "exact charge"


def test_structural_checkpoints_included():
    b = block_set("geometric")
    cfg = EstimatorConfig(horizon=10**5)
    pts = checkpoints(b, cfg)
    t = _block_table(b.spec)
    assert all(t.Z(k) in pts for k in range(1, 17))
    assert set(geometric_schedule(cfg)) <= set(pts)
    assert pts[-1] == 10**5


def test_schedule_is_strictly_increasing():
    s = geometric_schedule(EstimatorConfig(horizon=10**6))
    assert s[0] == 64 and s[-1] == 10**6
    assert all(a < b for a, b in zip(s, s[1:]))


def test_config_validation():
    with pytest.raises(ValueError):
        EstimatorConfig(growth_ratio=1)
    with pytest.raises(ValueError):
        EstimatorConfig(horizon=10)


def test_profile_values_are_exact_counts():
    e = Interleave(Blocks(BlockSpec.power(1)))
    p = density_profile(e, EstimatorConfig(horizon=5000))
    for N, v in zip(p.checkpoints[:10], p.values[:10]):
        assert v == Fraction(oracle.count(e, N), N)


def test_gap_functions():
    assert gap_P(Residue(0, 5), 7) == 3
    assert gap_Q(NATURALS, 100, lookahead=1000) == math.inf
    b = block_set("q2")
    t = _block_table(b.spec)
    for n in range(1, 8):
        assert gap_P(b, t.Z(2 * n)) == (2 * n + 1) ** 2 + 1


def test_gap_P_is_sublinear_for_charged_sets():
    b = block_set("q1")
    t = _block_table(b.spec)
    ratios = [gap_P(b, t.Z(2 * n)) / t.Z(2 * n) for n in (5, 20, 80)]
    assert ratios[0] > ratios[1] > ratios[2]


@pytest.mark.parametrize("e, k, h", [(ODDS, 2, 10**4), (SQUARES, 3, 10**4), (block_set("geometric"), 2, 10**5)])
def test_dilation_law(e, k, h):
    assert dilate_density_check(e, k, h).passed


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_symmetric_difference_bound(seed):
    rng = random.Random(seed)
    a, b = oracle.random_expr(rng, 2), oracle.random_expr(rng, 2)
    pts = geometric_schedule(EstimatorConfig(horizon=5000))
    for N, ca, cb, cd in zip(pts, counts_at(a, pts), counts_at(b, pts), counts_at(SymmDiff(a, b), pts)):
        assert Fraction(cd, N) >= abs(Fraction(ca - cb, N))


def test_json_is_stable():
    p = density_profile(Residue(1, 3), EstimatorConfig(horizon=10**4))
    assert p.to_json() == density_profile(Residue(1, 3), EstimatorConfig(horizon=10**4)).to_json()
    assert p.to_json()["exact_charge"] == {"value": "1/3", "provenance": "closed-form"}
