"""Null modification: split a set into a dominated part and a removed null part.

The kept part A' never has a partial average above the target; a member n of
A is moved to the removed part F exactly when keeping it would push
``nu_n(A')`` strictly above the target.  With the target equal to the upper
Cesàro limit of A, F is null.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .density import EstimatorConfig, density_profile, exact_charge
from .sets import (
    EMPTY,
    CesaroError,
    Complement,
    Difference,
    NullModPart,
    SetExpr,
    Union,
    check_horizon,
    segments,
    subset_upto,
)


class DisjointnessError(CesaroError):
    def __init__(self, i: int, j: int, witness: int):
        super().__init__(f"sets {i} and {j} overlap at n={witness}")
        self.pair = (i, j)
        self.witness = witness


class MissingChargeError(CesaroError):
    pass


@dataclass
class NullModResult:
    a: SetExpr
    a_prime: NullModPart
    f: NullModPart
    target: Fraction
    heuristic: bool = False
    horizon_verified: int = 0


def algorithm1(a: SetExpr, target, heuristic: bool = False) -> NullModResult:
    """Run the null-modification pass on ``a`` against ``target``.

    ``heuristic`` marks a target taken from a profile estimate rather than an
    exact upper limit; nullity checks on such results are advisory only.
    """
    t = Fraction(target)
    if not 0 <= t <= 1:
        raise ValueError(f"target must lie in [0, 1], got {t}")
    return NullModResult(a, NullModPart(a, t, False), NullModPart(a, t, True), t, heuristic)


def decision_rows(result: NullModResult, N: int) -> list[tuple[int, int, int, int, str]]:
    """CSV rows ``N,in_A,in_Aprime,in_F,nu_N_Aprime`` for n = 1..N."""
    N = check_horizon(N)
    in_a = result.a.mask(1, N + 1)
    kept = result.a_prime.mask(1, N + 1)
    removed = result.f.mask(1, N + 1)
    cum = np.cumsum(kept, dtype=np.int64)
    return [
        (n, int(in_a[n - 1]), int(kept[n - 1]), int(removed[n - 1]), str(Fraction(int(cum[n - 1]), n)))
        for n in range(1, N + 1)
    ]


def first_exceedance(e: SetExpr, bound: Fraction, horizon: int) -> int | None:
    """Least N <= horizon with nu_N(e) > bound, compared exactly as count*den > N*num."""
    num, den = bound.numerator, bound.denominator
    small = den * horizon < 2**62 and num * horizon < 2**62
    total = 0
    for lo, hi in segments(1, horizon + 1):
        cum = total + np.cumsum(e.mask(lo, hi), dtype=np.int64)
        Ns = np.arange(lo, hi, dtype=np.int64)
        if small:
            bad = cum * den > Ns * num
        else:
            bad = np.array([int(c) * den > int(n) * num for c, n in zip(cum, Ns)], dtype=bool)
        if bad.any():
            return lo + int(np.argmax(bad))
        total = int(cum[-1]) if len(cum) else total
    return None


@dataclass
class NullModReport:
    horizon: int
    disjoint_failure: int | None
    union_failure: int | None
    domination_failure: int | None
    f_upper_est: Fraction
    nullity_tol: Fraction
    heuristic: bool

    @property
    def nullity_ok(self) -> bool:
        return self.f_upper_est <= self.nullity_tol

    @property
    def structural_ok(self) -> bool:
        return self.disjoint_failure is None and self.union_failure is None and self.domination_failure is None

    @property
    def passed(self) -> bool:
        return self.structural_ok and self.nullity_ok

    def to_json(self) -> dict:
        return {
            "horizon": self.horizon,
            "disjoint_failure": self.disjoint_failure,
            "union_failure": self.union_failure,
            "domination_failure": self.domination_failure,
            "f_upper_est": float(self.f_upper_est),
            "nullity_tol": float(self.nullity_tol),
            "nullity_ok": self.nullity_ok,
            "nullity_advisory": self.heuristic,
            "passed": self.passed,
        }


def verify_nullmod(
    result: NullModResult,
    horizon: int,
    nullity_tol=Fraction(1, 10**4),
    cfg: EstimatorConfig | None = None,
) -> NullModReport:
    """Check A' ∩ F = ∅, A' ∪ F = A, nu_N(A') <= target up to ``horizon``, and the empirical nullity of F."""
    horizon = check_horizon(horizon)
    disjoint = union = None
    for lo, hi in segments(1, horizon + 1):
        kept, removed, a = result.a_prime.mask(lo, hi), result.f.mask(lo, hi), result.a.mask(lo, hi)
        if disjoint is None and (kept & removed).any():
            disjoint = lo + int(np.argmax(kept & removed))
        if union is None and ((kept | removed) != a).any():
            union = lo + int(np.argmax((kept | removed) != a))
    domination = first_exceedance(result.a_prime, result.target, horizon)
    cfg = (cfg or EstimatorConfig()).with_horizon(horizon)
    f_prof = density_profile(result.f, cfg)
    result.horizon_verified = horizon if domination is None else domination - 1
    return NullModReport(horizon, disjoint, union, domination, f_prof.upper_est, Fraction(nullity_tol), result.heuristic)


def _charges(sets: Sequence[SetExpr], charges) -> list[Fraction]:
    if charges is not None:
        return [Fraction(c) for c in charges]
    out = []
    for i, s in enumerate(sets):
        c = exact_charge(s)
        if c is None:
            raise MissingChargeError(f"no exact charge for element {i}: {s}")
        out.append(c.value)
    return out


def check_disjoint(sets: Sequence[SetExpr], horizon: int):
    for lo, hi in segments(1, horizon + 1):
        masks = [s.mask(lo, hi) for s in sets]
        for i in range(len(masks)):
            for j in range(i + 1, len(masks)):
                both = masks[i] & masks[j]
                if both.any():
                    raise DisjointnessError(i, j, lo + int(np.argmax(both)))


@dataclass
class OneSided:
    """psi over an increasing chain: ``images[k] = images[k-1] ⊔ steps[k].a_prime``."""

    images: list[SetExpr]
    steps: list[NullModResult]
    charges: list[Fraction]


def one_sided(chain: Sequence[SetExpr], charges: Sequence[Fraction]) -> OneSided:
    """Null-modify an increasing finite chain from the bottom up.

    Step k runs the pass on ``C_k \\ psi(C_{k-1})`` with target
    ``nu(C_k) - nu(C_{k-1})``; psi(C_k) is psi(C_{k-1}) plus the kept part.
    """
    images, steps = [], []
    prev_img, prev_charge = EMPTY, Fraction(0)
    for c, v in zip(chain, charges):
        diff = c if prev_img == EMPTY else Difference(c, prev_img)
        step = algorithm1(diff, v - prev_charge)
        img = step.a_prime if prev_img == EMPTY else Union(prev_img, step.a_prime)
        steps.append(step)
        images.append(img)
        prev_img, prev_charge = img, v
    return OneSided(images, steps, list(charges))


def nullmod_sequence(sets: Sequence[SetExpr], horizon: int, charges=None) -> list[NullModResult]:
    """Null-modify pairwise disjoint sets through the chain of their partial unions.

    The k-th result's ``a_prime`` is the modified k-th set; the modified sets
    stay pairwise disjoint and each is dominated by its charge.
    """
    horizon = check_horizon(horizon)
    check_disjoint(sets, horizon)
    vals = _charges(sets, charges)
    partial, cum = [], []
    acc, total = None, Fraction(0)
    for s, v in zip(sets, vals):
        acc = s if acc is None else Union(acc, s)
        total += v
        partial.append(acc)
        cum.append(total)
    return one_sided(partial, cum).steps


@dataclass
class TwoSidedResult:
    elements: list[SetExpr]
    charges: list[Fraction]
    domination_failures: list[int | None]
    order_failures: list[int | None]  # adjacent pair (i, i+1) counterexamples

    @property
    def passed(self) -> bool:
        return all(x is None for x in self.domination_failures) and all(x is None for x in self.order_failures)


def nullmod_chain_two_sided(chain: Sequence[SetExpr], horizon: int, charges=None) -> TwoSidedResult:
    """phi'(A) = psi'(psi(A^c)^c) over a finite increasing chain.

    psi runs on the chain of complements (which is increasing in reverse);
    complementing back gives a chain dominated from below, and psi' then
    removes null sets so every element satisfies nu_N <= nu.
    """
    horizon = check_horizon(horizon)
    chain = list(getattr(chain, "elements", chain))
    if charges is None:
        charges = getattr(chain, "charges", None)
    vals = _charges(chain, charges)
    for i in range(len(chain) - 1):
        check = subset_upto(chain[i], chain[i + 1], horizon)
        if not check:
            raise CesaroError(f"chain elements {i} and {i + 1} are not nested (n={check.counterexample})")
    comps = [Complement(c) for c in reversed(chain)]
    comp_vals = [1 - v for v in reversed(vals)]
    psi = one_sided(comps, comp_vals)
    lifted = [Complement(img) for img in reversed(psi.images)]
    final = one_sided(lifted, vals)
    dom = [first_exceedance(e, v, horizon) for e, v in zip(final.images, vals)]
    order = []
    for a, b in zip(final.images, final.images[1:]):
        check = subset_upto(a, b, horizon)
        order.append(None if check else check.counterexample)
    return TwoSidedResult(final.images, vals, dom, order)
