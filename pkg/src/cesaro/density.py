"""Partial averages, upper/lower Cesàro limit estimates and exact charges."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .sets import (
    EMPTY,
    NATURALS,
    Blocks,
    Complement,
    Difference,
    Dilate,
    Finite,
    Greedy,
    Interleave,
    Intersection,
    Midpoint,
    NullFamily,
    NullModPart,
    Residue,
    SetExpr,
    SymmDiff,
    Union,
    check_horizon,
    counts_at,
    first_member,
    segments,
    walk,
)

PERIOD_CAP = 10**6

PROVENANCES = ("closed-form", "period-count", "registered-null", "block-formula", "derived-rule")


@dataclass(frozen=True)
class Charge:
    value: Fraction
    provenance: str

    def __post_init__(self):
        if not 0 <= self.value <= 1:
            raise ValueError(f"charge {self.value} outside [0, 1]")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")


# ---------------------------------------------------------------------------
# almost-everywhere reduction


def _target_is_exact(e: NullModPart) -> bool:
    c = exact_charge(e.base)
    return c is not None and c.value == e.target


@lru_cache(maxsize=65536)
def ae_reduce(e: SetExpr) -> SetExpr:
    """Rewrite ``e`` into an a.e.-equal expression with registered null parts dropped.

    Finite sets and the null families become the empty set, and the result is
    simplified (``X | {} = X``, ``X ^ X = {}``, ...).  Midpoint sets are left
    untouched: dropping a null set below a midpoint can shift its parity for
    good, which is not an a.e. change.
    """
    if isinstance(e, (Finite, NullFamily)):
        return EMPTY
    if isinstance(e, NullModPart):
        if _target_is_exact(e):
            return EMPTY if e.removed else ae_reduce(e.base)
        return e
    if isinstance(e, Complement):
        inner = ae_reduce(e.inner)
        if isinstance(inner, Complement):
            return inner.inner
        if inner == EMPTY:
            return NATURALS
        if inner == NATURALS:
            return EMPTY
        return Complement(inner)
    if isinstance(e, Dilate):
        inner = ae_reduce(e.inner)
        if inner == EMPTY:
            return EMPTY
        if e.k == 1:
            return inner
        return Dilate(e.k, inner)
    if isinstance(e, Interleave):
        return Interleave(ae_reduce(e.base))
    if isinstance(e, (Union, Intersection, Difference, SymmDiff)):
        a, b = ae_reduce(e.left), ae_reduce(e.right)
        t = type(e)
        if t is Union:
            if a == EMPTY or b == NATURALS or a == b:
                return b
            if b == EMPTY or a == NATURALS:
                return a
        elif t is Intersection:
            if a == EMPTY or b == EMPTY:
                return EMPTY
            if a == NATURALS or a == b:
                return b
            if b == NATURALS:
                return a
        elif t is Difference:
            if a == EMPTY or b == NATURALS or a == b:
                return EMPTY
            if b == EMPTY:
                return a
            if a == NATURALS:
                return Complement(b) if not isinstance(b, Complement) else b.inner
        else:
            if a == b:
                return EMPTY
            if a == EMPTY:
                return b
            if b == EMPTY:
                return a
        return t(a, b)
    return e


def is_registered_null(e: SetExpr) -> bool:
    """True when the null catalog alone proves ``e`` null."""
    return ae_reduce(e) == EMPTY


# ---------------------------------------------------------------------------
# exact charges


@lru_cache(maxsize=65536)
def period(e: SetExpr) -> int | None:
    """A period L with I(n + L) = I(n) for all n >= 1, if one is evident and <= PERIOD_CAP."""
    if isinstance(e, Residue):
        p = e.m
    elif e == EMPTY:
        p = 1
    elif isinstance(e, Complement):
        p = period(e.inner)
    elif isinstance(e, (Union, Intersection, Difference, SymmDiff)):
        a, b = period(e.left), period(e.right)
        p = None if a is None or b is None else math.lcm(a, b)
    elif isinstance(e, Dilate):
        a = period(e.inner)
        p = None if a is None else e.k * a
    elif isinstance(e, Interleave):
        a = period(e.base)
        p = None if a is None else 2 * a
    else:
        p = None
    if p is not None and p > PERIOD_CAP:
        return None
    return p


def period_count(e: SetExpr, L: int) -> Fraction:
    return Fraction(int(np.count_nonzero(e.mask(1, L + 1))), L)


MAX_RESIDUE_LEAVES = 16


def _crt(classes) -> int | None:
    """Modulus of the intersection of residue classes, or None when it is empty or null."""
    r, m = 0, 1
    for cls in classes:
        if cls[0] == "null":
            return None
        r2, m2 = cls
        g = math.gcd(m, m2)
        if (r2 - r) % g:
            return None
        # solve r + m*t = r2 (mod m2)
        t = (r2 - r) // g * pow(m // g, -1, m2 // g) % (m2 // g)
        r, m = r + m * t, m * m2 // g
        r %= m
    return m


def _indicator_poly(e: SetExpr) -> dict[frozenset, int] | None:
    """Indicator of ``e`` as a multilinear polynomial in residue-class indicators."""
    if isinstance(e, Residue):
        return {frozenset([(e.r % e.m, e.m)]): 1}
    if e == EMPTY:
        return {}
    if isinstance(e, (Finite, NullFamily)):
        # any monomial containing a null leaf is itself null
        return {frozenset([("null", e)]): 1}
    if isinstance(e, Dilate):
        p = _indicator_poly(e.inner)
        if p is None:
            return None
        k = e.k
        out: dict[frozenset, int] = {}
        for mono, c in p.items():
            img = frozenset({(k * r % (k * m), k * m) if r != "null" else (r, m) for r, m in mono} | {(0, k)})
            out[img] = out.get(img, 0) + c  # distinct monomials can share an image
        return {m: c for m, c in out.items() if c}
    if isinstance(e, Complement):
        p = _indicator_poly(e.inner)
        return None if p is None else _padd({frozenset(): 1}, p, -1)
    if isinstance(e, (Union, Intersection, Difference, SymmDiff)):
        a, b = _indicator_poly(e.left), _indicator_poly(e.right)
        if a is None or b is None:
            return None
        ab = _pmul(a, b)
        if isinstance(e, Intersection):
            return ab
        if isinstance(e, Union):
            return _padd(_padd(a, b, 1), ab, -1)
        if isinstance(e, Difference):
            return _padd(a, ab, -1)
        return _padd(_padd(a, b, 1), ab, -2)
    return None


def _padd(a, b, k):
    out = dict(a)
    for mono, c in b.items():
        out[mono] = out.get(mono, 0) + k * c
        if not out[mono]:
            del out[mono]
    return out


def _pmul(a, b):
    out: dict[frozenset, int] = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            mono = ma | mb
            out[mono] = out.get(mono, 0) + ca * cb
    return {m: c for m, c in out.items() if c}


def residue_algebra_charge(e: SetExpr) -> Fraction | None:
    """Exact charge of a Boolean combination of residue classes, however large the lcm.

    Expanding the indicator into monomials, each monomial is an intersection
    of residue classes, which by the Chinese remainder theorem is empty or a
    single class modulo the lcm.  Dilations and registered-null leaves are
    allowed; a monomial touching a null leaf contributes 0.
    """
    leaves = {x for x in walk(e) if isinstance(x, (Residue, Finite, NullFamily))}
    if len(leaves) > MAX_RESIDUE_LEAVES:
        return None
    poly = _indicator_poly(e)
    if poly is None:
        return None
    total = Fraction(0)
    for mono, c in poly.items():
        m = _crt(mono)
        if m is not None:
            total += Fraction(c, m)
    return total


@lru_cache(maxsize=65536)
def _charge(e: SetExpr) -> Charge | None:
    """Rule pass over an already reduced expression; first hit wins."""
    if e == EMPTY:
        return Charge(Fraction(0), "registered-null")
    if isinstance(e, Residue):
        return Charge(Fraction(1, e.m), "closed-form")
    if isinstance(e, Complement):
        c = _charge(e.inner)
        return None if c is None else Charge(1 - c.value, c.provenance)
    v = residue_algebra_charge(e)
    if v is not None:
        return Charge(v, "period-count")
    L = period(e)
    if L is not None:
        return Charge(period_count(e, L), "period-count")
    if isinstance(e, Blocks):
        upper, lower = e.spec.limits()
        return Charge(upper, "block-formula") if upper == lower else None
    if isinstance(e, Dilate):
        c = _charge(e.inner)
        return None if c is None else Charge(c.value / e.k, "derived-rule")
    if isinstance(e, Interleave):
        return Charge(Fraction(1, 2), "derived-rule")
    if isinstance(e, Greedy):
        return Charge(e.target, "closed-form")
    if isinstance(e, Midpoint):
        lo, hi = exact_charge(e.lower), exact_charge(e.upper)
        if lo is None or hi is None:
            return None
        return Charge((lo.value + hi.value) / 2, "derived-rule")
    if isinstance(e, (Union, Intersection, Difference, SymmDiff)):
        return _binary_charge(e)
    return None


def _binary_charge(e) -> Charge | None:
    a, b = _charge(e.left), _charge(e.right)
    t = type(e)
    # null absorption on charge-zero operands
    if b is not None and b.value == 0:
        if t is Intersection:
            return Charge(Fraction(0), "derived-rule")
        if a is not None:
            return Charge(a.value, "derived-rule")
    if a is not None and a.value == 0:
        if t in (Intersection, Difference):
            return Charge(Fraction(0), "derived-rule")
        if b is not None:
            return Charge(b.value, "derived-rule")
    if t is Union and a is not None and b is not None:
        both = _charge(ae_reduce(Intersection(e.left, e.right)))
        if both is not None:
            return Charge(a.value + b.value - both.value, "derived-rule")
    return None


def exact_charge(e: SetExpr) -> Charge | None:
    """Exact charge of ``e``, or None when no rule applies (never a guess)."""
    r = ae_reduce(e)
    c = _charge(r)
    if c is not None and r == EMPTY and e != EMPTY:
        return Charge(Fraction(0), "registered-null")
    return c


def exact_limits(e: SetExpr) -> tuple[Fraction, Fraction] | None:
    """Exact (upper, lower) Cesàro limits when a closed form is known."""
    c = exact_charge(e)
    if c is not None:
        return c.value, c.value
    return _limits(ae_reduce(e))


def _limits(e):
    if isinstance(e, Blocks):
        return e.spec.limits()
    if isinstance(e, Dilate):
        inner = _limits(e.inner)
        if inner is None:
            c = _charge(e.inner)
            inner = None if c is None else (c.value, c.value)
        return None if inner is None else (inner[0] / e.k, inner[1] / e.k)
    if isinstance(e, Complement):
        inner = _limits(e.inner)
        return None if inner is None else (1 - inner[1], 1 - inner[0])
    return None


# ---------------------------------------------------------------------------
# partial averages and profiles


def partial_average(e: SetExpr, N: int) -> Fraction:
    """nu_N(A) = |A ∩ {1..N}| / N, exactly."""
    N = check_horizon(N)
    return Fraction(e.count(N), N)


@dataclass(frozen=True)
class EstimatorConfig:
    base_n: int = 64
    growth_ratio: Fraction = Fraction(5, 4)
    burn_in_fraction: Fraction = Fraction(1, 4)
    trailing_window: int = 20
    tolerance: Fraction = Fraction(1, 1000)
    horizon: int = 10**6
    include_structural_checkpoints: bool = True

    def __post_init__(self):
        object.__setattr__(self, "growth_ratio", Fraction(self.growth_ratio))
        object.__setattr__(self, "burn_in_fraction", Fraction(self.burn_in_fraction))
        object.__setattr__(self, "tolerance", Fraction(self.tolerance))
        if self.growth_ratio <= 1:
            raise ValueError("growth ratio must exceed 1")
        if not 0 <= self.burn_in_fraction < 1:
            raise ValueError("burn-in fraction must lie in [0, 1)")
        if self.base_n < 1 or self.trailing_window < 1:
            raise ValueError("base_n and trailing_window must be positive")
        check_horizon(self.horizon)
        if self.horizon < self.base_n:
            raise ValueError("horizon must be at least base_n")

    def with_horizon(self, horizon: int) -> "EstimatorConfig":
        return EstimatorConfig(
            base_n=min(self.base_n, horizon),
            growth_ratio=self.growth_ratio,
            burn_in_fraction=self.burn_in_fraction,
            trailing_window=self.trailing_window,
            tolerance=self.tolerance,
            horizon=horizon,
            include_structural_checkpoints=self.include_structural_checkpoints,
        )


def geometric_schedule(cfg: EstimatorConfig) -> list[int]:
    out = []
    N = cfg.base_n
    while N <= cfg.horizon:
        out.append(N)
        N = max(N + 1, math.ceil(N * cfg.growth_ratio))
    if out[-1] != cfg.horizon:
        out.append(cfg.horizon)
    return out


def checkpoints(e: SetExpr, cfg: EstimatorConfig) -> list[int]:
    pts = set(geometric_schedule(cfg))
    if cfg.include_structural_checkpoints:
        pts.update(p for p in e.structural_points(cfg.horizon) if 1 <= p <= cfg.horizon)
    return sorted(pts)


@dataclass
class DensityProfile:
    """Partial averages at checkpoints with HEURISTIC limsup/liminf estimates."""

    checkpoints: list[int]
    counts: list[int]
    values: list[Fraction]
    lower_est: Fraction
    upper_est: Fraction
    oscillation: Fraction
    converged: bool
    horizon: int
    burn_in_start: int
    exact: Charge | None = None
    limits: tuple[Fraction, Fraction] | None = None

    @property
    def heuristic(self) -> bool:
        return self.exact is None

    def _post(self):
        return [(N, v) for N, v in zip(self.checkpoints, self.values) if N >= self.burn_in_start]

    @property
    def argmax(self) -> int:
        return max(self._post(), key=lambda t: (t[1], -t[0]))[0]

    @property
    def argmin(self) -> int:
        return min(self._post(), key=lambda t: (t[1], t[0]))[0]

    @property
    def verdict(self) -> str:
        if self.exact is not None:
            return "exact charge"
        if self.limits is not None and self.limits[0] != self.limits[1]:
            return "no Cesaro limit (exact limits)"
        if self.converged:
            return "converges (HEURISTIC)"
        return "no Cesaro limit (HEURISTIC)"

    def csv_rows(self) -> list[tuple[int, int, str]]:
        return [(N, c, f"{float(v):.12g}") for N, c, v in zip(self.checkpoints, self.counts, self.values)]

    def to_json(self) -> dict:
        return {
            "horizon": self.horizon,
            "burn_in_start": self.burn_in_start,
            "lower_est": _fr(self.lower_est),
            "upper_est": _fr(self.upper_est),
            "lower_est_float": float(self.lower_est),
            "upper_est_float": float(self.upper_est),
            "oscillation": _fr(self.oscillation),
            "converged": self.converged,
            "heuristic": self.heuristic,
            "verdict": self.verdict,
            "exact_charge": None if self.exact is None else {"value": _fr(self.exact.value), "provenance": self.exact.provenance},
            "exact_limits": None if self.limits is None else {"upper": _fr(self.limits[0]), "lower": _fr(self.limits[1])},
            "checkpoints": len(self.checkpoints),
        }


def _fr(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def density_profile(e: SetExpr, cfg: EstimatorConfig | None = None) -> DensityProfile:
    """Evaluate nu_N on the checkpoint schedule and estimate the upper/lower limits.

    The estimates are the max/min over checkpoints at or beyond the burn-in
    point ``burn_in_fraction * horizon``.  Finite data cannot pin down a
    limsup, so unless an exact charge exists the result is HEURISTIC.
    """
    cfg = cfg or EstimatorConfig()
    pts = checkpoints(e, cfg)
    counts = counts_at(e, pts)
    values = [Fraction(c, N) for c, N in zip(counts, pts)]
    start = max(1, math.ceil(cfg.burn_in_fraction * cfg.horizon))
    post = [v for N, v in zip(pts, values) if N >= start] or values[-1:]
    upper, lower = max(post), min(post)
    return DensityProfile(
        checkpoints=pts,
        counts=counts,
        values=values,
        lower_est=lower,
        upper_est=upper,
        oscillation=upper - lower,
        converged=upper - lower < cfg.tolerance,
        horizon=cfg.horizon,
        burn_in_start=start,
        exact=exact_charge(e),
        limits=exact_limits(e),
    )


# ---------------------------------------------------------------------------
# gap functions

DEFAULT_LOOKAHEAD = 10**7


def gap_P(e: SetExpr, N: int, lookahead: int = DEFAULT_LOOKAHEAD) -> int | float:
    """Least k > 0 with N + k in the set; ``math.inf`` if none within ``lookahead``."""
    N = check_horizon(N)
    if isinstance(e, Finite):
        nxt = next((x for x in e.elements if x > N), None)
        return math.inf if nxt is None else nxt - N
    n = first_member(e, N, N + lookahead)
    return math.inf if n is None else n - N


def gap_Q(e: SetExpr, N: int, lookahead: int = DEFAULT_LOOKAHEAD) -> int | float:
    """Least k > 0 with N + k outside the set; ``math.inf`` if none within ``lookahead``."""
    return gap_P(Complement(e), N, lookahead)


# ---------------------------------------------------------------------------
# dilation law


@dataclass
class DilationReport:
    k: int
    rows: list[tuple[int, Fraction, Fraction]]  # (N, nu_kN(kA), nu_N(A)/k)

    @property
    def passed(self) -> bool:
        return all(a == b for _, a, b in self.rows)

    @property
    def first_failure(self) -> int | None:
        return next((N for N, a, b in self.rows if a != b), None)


def streamed_counts_at(e: SetExpr, horizons: Sequence[int]) -> list[int]:
    """Like counts_at but always through membership masks (no fast paths)."""
    hs = sorted(horizons)
    out, total, i = {}, 0, 0
    for a, b in segments(1, hs[-1] + 1):
        cum = np.cumsum(e.mask(a, b), dtype=np.int64)
        while i < len(hs) and hs[i] < b:
            out[hs[i]] = total + int(cum[hs[i] - a])
            i += 1
        total += int(cum[-1])
    return [out[h] for h in horizons]


def dilate_density_check(e: SetExpr, k: int, horizon: int, cfg: EstimatorConfig | None = None) -> DilationReport:
    """Check nu_{kN}(kA) = nu_N(A) / k at every checkpoint N with kN <= horizon."""
    cfg = (cfg or EstimatorConfig()).with_horizon(max(horizon // k, 1))
    Ns = checkpoints(e, cfg)
    left = streamed_counts_at(Dilate(k, e), [k * N for N in Ns])
    right = streamed_counts_at(e, Ns)
    rows = [(N, Fraction(a, k * N), Fraction(b, N) / k) for N, a, b in zip(Ns, left, right)]
    return DilationReport(k, rows)
