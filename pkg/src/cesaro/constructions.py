"""Named set families: greedy target-density sets, dyadic D_k, midpoint sets and the example catalog."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import mpmath

from .density import exact_charge
from .sets import (
    CUBES,
    EVENS,
    ODDS,
    PRIMES,
    SQUARES,
    Blocks,
    BlockSpec,
    CesaroError,
    Difference,
    Dilate,
    Finite,
    Greedy,
    Interleave,
    Intersection,
    Midpoint,
    Residue,
    SetExpr,
    powers,
    subset_upto,
)

FIXED_BITS = 128


class PreconditionError(CesaroError):
    def __init__(self, message: str, witness: int | None = None):
        super().__init__(message if witness is None else f"{message} (first counterexample n={witness})")
        self.witness = witness


def fixed_point(x, bits: int = FIXED_BITS) -> Fraction:
    """Truncate a real to ``floor(x * 2**bits) / 2**bits``.

    ``x`` may be a zero-argument callable (``lambda: 1 / mpmath.sqrt(2)``),
    evaluated at the working precision so all ``bits`` are correct; an mpf
    computed beforehand only carries the precision it was computed with.
    """
    with mpmath.workprec(2 * bits + 64):
        if callable(x):
            x = x()
        scaled = mpmath.floor(mpmath.mpf(x) * mpmath.mpf(2) ** bits)
        return Fraction(int(scaled), 2**bits)


def greedy_target(s) -> Greedy:
    """The greedy set with density ``s``.

    Rationals (``Fraction``, ``int``, or strings such as ``"2/5"``) are kept
    exactly.  Anything else (an mpf, a float, or a zero-argument callable
    returning one) is read as a real through mpmath and truncated to a
    128-bit fixed-point rational, flagged ``approximate``.
    """
    if isinstance(s, (Rational, str)):
        return Greedy(Fraction(s))
    return Greedy(fixed_point(s), approximate=True)


def dk_family(k: int) -> SetExpr:
    """D_k = {2^k m : m odd, m >= 3}."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    odd_from_3 = Difference(ODDS, Finite((1,)))
    return odd_from_3 if k == 0 else Dilate(2**k, odd_from_3)


def dk_partial_union(k: int) -> SetExpr:
    """D_0 ∪ ... ∪ D_k."""
    out = dk_family(0)
    for j in range(1, k + 1):
        out = out | dk_family(j)
    return out


def midpoint_set(lower: SetExpr, upper: SetExpr, horizon: int = 10**5) -> Midpoint:
    """Lower plus every second element (1st, 3rd, ...) of ``upper \\ lower``."""
    check = subset_upto(lower, upper, horizon)
    if not check:
        raise PreconditionError("midpoint needs lower ⊆ upper", check.counterexample)
    lo, hi = exact_charge(lower), exact_charge(upper)
    if lo is not None and hi is not None and lo.value > hi.value:
        raise PreconditionError(f"charge of lower ({lo.value}) exceeds charge of upper ({hi.value})")
    return Midpoint(lower, upper)


def block_set(name: str) -> Blocks:
    return {
        "geometric": Blocks(BlockSpec.geometric(2)),
        "q1": Blocks(BlockSpec.power(1)),
        "q2": Blocks(BlockSpec.power(2)),
        "q3": Blocks(BlockSpec.power(3)),
    }[name]


def paper_example_catalog() -> dict[str, SetExpr]:
    cat: dict[str, SetExpr] = {}
    for m in range(1, 13):
        cat[f"D_{m}"] = Residue(0, m)
    geometric = block_set("geometric")
    cat["blocks-geometric"] = geometric
    cat["B"] = EVENS
    cat["C"] = Interleave(geometric)
    cat["B∩C"] = Intersection(EVENS, Interleave(geometric))
    for q in (1, 2, 3):
        cat[f"blocks-q{q}"] = block_set(f"q{q}")
    cat["squares"] = SQUARES
    cat["cubes"] = CUBES
    cat["powers-2"] = powers(2)
    cat["primes"] = PRIMES
    for k in range(21):
        cat[f"dk_{k}"] = dk_family(k)
    return cat
