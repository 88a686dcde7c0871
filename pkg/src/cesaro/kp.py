"""Simple sequences, the K_p pseudonorm, Cesàro integrals and the squares anomaly."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .density import EstimatorConfig, exact_charge, geometric_schedule
from .quotient import ae_equivalent, generate_field
from .sets import EMPTY, SQUARES, CesaroError, Residue, SetExpr, check_horizon, segments

DEFAULT_FIELD_HORIZON = 10**4


class MissingChargeError(CesaroError):
    pass


def _lcm_den(coeffs) -> int:
    return math.lcm(1, *(Fraction(c).denominator for c in coeffs))


class RealSequence:
    """A real sequence h(1), h(2), ... with exact rational values."""

    def partial_sum(self, N: int) -> Fraction:
        N = check_horizon(N)
        num, den = 0, 1
        for lo, hi in segments(1, N + 1):
            vals, den = self.values(lo, hi)
            num += sum(int(v) for v in vals) if vals.dtype == object else int(vals.sum())
        return Fraction(num, den)

    def values(self, lo: int, hi: int) -> tuple[np.ndarray, int]:
        """Numerators for lo <= n < hi over a common denominator."""
        raise NotImplementedError

    def partial_sums_at(self, horizons: Sequence[int]) -> list[Fraction]:
        return [self.partial_sum(N) for N in horizons]


@dataclass(frozen=True)
class SimpleSequence(RealSequence):
    """h = Σ c_k I_{A_k}; ``partition`` declares the A_k disjoint and covering."""

    terms: tuple[tuple[Fraction, SetExpr], ...]
    partition: bool = False

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((Fraction(c), s) for c, s in self.terms))

    @classmethod
    def of(cls, *terms, partition: bool = False) -> "SimpleSequence":
        return cls(tuple(terms), partition)

    def __add__(self, other: "SimpleSequence") -> "SimpleSequence":
        return SimpleSequence(self.terms + other.terms)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "SimpleSequence":
        c = Fraction(c)
        return SimpleSequence(tuple((c * a, s) for a, s in self.terms), self.partition)

    __rmul__ = scale

    def value(self, n: int) -> Fraction:
        return sum((c for c, s in self.terms if s.contains(n)), Fraction(0))

    def values(self, lo, hi):
        den = _lcm_den(c for c, _ in self.terms)
        nums = [int(c * den) for c, _ in self.terms]
        big = sum(abs(x) for x in nums) * (hi - lo) >= 2**62
        out = np.zeros(hi - lo, dtype=object if big else np.int64)
        for x, (_, s) in zip(nums, self.terms):
            out = out + np.where(s.mask(lo, hi), x, 0).astype(out.dtype)
        return out, den

    def partial_sum(self, N):
        N = check_horizon(N)
        return sum((c * s.count(N) for c, s in self.terms), Fraction(0))

    def bound(self) -> Fraction:
        return sum((abs(c) for c, _ in self.terms), Fraction(0))

    def to_json(self):
        return {"terms": [{"coef": str(c), "set": str(s)} for c, s in self.terms]}


@dataclass(frozen=True)
class AnomalySequence(RealSequence):
    """g(k) = m when k = m², else 0."""

    def value(self, n: int) -> int:
        m = math.isqrt(n)
        return m if m * m == n else 0

    def values(self, lo, hi):
        out = np.zeros(hi - lo, dtype=np.int64)
        m = math.isqrt(lo - 1) + 1
        while m * m < hi:
            out[m * m - lo] = m
            m += 1
        return out, 1

    def partial_sum(self, N):
        M = math.isqrt(check_horizon(N))
        return Fraction(M * (M + 1), 2)

    @property
    def support(self) -> SetExpr:
        return SQUARES


@dataclass(frozen=True)
class TailSequence(RealSequence):
    """|h|^p restricted to where |h| > y (so |h|^p > y^p)."""

    base: RealSequence
    y: Fraction
    p: int = 1

    def values(self, lo, hi):
        vals, den = self.base.values(lo, hi)
        a = np.abs(vals)
        keep = a * self.y.denominator > self.y.numerator * den
        pw = a.astype(object) ** self.p if self.p > 1 else a
        return np.where(keep, pw, 0), den**self.p

    def partial_sum(self, N):
        if isinstance(self.base, AnomalySequence) and self.p == 1:
            M = math.isqrt(check_horizon(N))
            y = math.floor(self.y)
            if M <= y:
                return Fraction(0)
            return Fraction(M * (M + 1) - y * (y + 1), 2)
        return super().partial_sum(N)


def seq_partial_average(h: RealSequence, N: int) -> Fraction:
    """(1/N) Σ_{n <= N} h(n), exactly."""
    N = check_horizon(N)
    return h.partial_sum(N) / N


# ---------------------------------------------------------------------------
# atoms


@dataclass
class AtomValues:
    values: list[Fraction]
    charges: list[Fraction]
    atoms: list[SetExpr]


def atom_values(h: SimpleSequence, horizon: int = DEFAULT_FIELD_HORIZON) -> AtomValues:
    """Value of h on each atom of the field generated by its term sets, with exact atom charges."""
    sets = list(dict.fromkeys(s for _, s in h.terms))
    fld = generate_field(sets, horizon)
    vals, charges = [], []
    for code, atom, ch in zip(fld.codes, fld.atoms, fld.charges):
        if ch is None:
            raise MissingChargeError(f"no exact charge for atom {atom}")
        v = sum((c for c, s in h.terms if code >> sets.index(s) & 1), Fraction(0))
        vals.append(v)
        charges.append(ch)
    return AtomValues(vals, charges, fld.atoms)


def integral(h: SimpleSequence, horizon: int = DEFAULT_FIELD_HORIZON) -> Fraction:
    """ν(h) = Σ_atoms value · ν(atom)."""
    av = atom_values(h, horizon)
    return sum((v * c for v, c in zip(av.values, av.charges)), Fraction(0))


def closed_form_limit(h: SimpleSequence) -> Fraction:
    """Σ c_k ν(A_k) straight from the term charges (linear, no atoms needed)."""
    out = Fraction(0)
    for c, s in h.terms:
        ch = exact_charge(s)
        if ch is None:
            raise MissingChargeError(f"no exact charge for {s}")
        out += c * ch.value
    return out


def _exact_root(x: Fraction, k: int) -> Fraction | None:
    def iroot(n):
        r = round(n ** (1.0 / k)) if n < 2**52 else int(mpmath.floor(mpmath.root(n, k)))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**k == n:
                return cand
        return None

    a, b = iroot(x.numerator), iroot(x.denominator)
    return None if a is None or b is None else Fraction(a, b)


def _rpow(x: Fraction, p: Fraction) -> Fraction | None:
    """x^p for x >= 0 when the result is rational."""
    if p.denominator == 1:
        return x ** p.numerator
    r = _exact_root(x, p.denominator)
    return None if r is None else r ** p.numerator


@dataclass(frozen=True)
class KpNorm:
    p: Fraction
    power: Fraction | None  # ν(|h|^p) when exact
    power_float: float
    norm: Fraction | None  # exact norm when the p-th root is rational
    norm_float: float

    def to_json(self):
        return {
            "p": str(self.p),
            "power": None if self.power is None else str(self.power),
            "power_float": self.power_float,
            "norm": None if self.norm is None else str(self.norm),
            "norm_float": self.norm_float,
        }


def kp_norm(h: SimpleSequence, p=1, horizon: int = DEFAULT_FIELD_HORIZON) -> KpNorm:
    """(ν(|h|^p))^{1/p} over the atoms of the field generated by h's sets."""
    p = Fraction(p)
    if p < 1:
        raise ValueError("p must be at least 1")
    av = atom_values(h, horizon)
    exact = True
    total = Fraction(0)
    approx = mpmath.mpf(0)
    with mpmath.workdps(40):
        for v, c in zip(av.values, av.charges):
            if c == 0 or v == 0:
                continue
            pv = _rpow(abs(v), p)
            if pv is None:
                exact = False
                approx += mpmath.power(mpmath.mpf(abs(v).numerator) / abs(v).denominator, mpmath.mpf(p.numerator) / p.denominator) * (
                    mpmath.mpf(c.numerator) / c.denominator
                )
            else:
                total += pv * c
                approx += mpmath.mpf(pv.numerator) / pv.denominator * c.numerator / c.denominator
        root = mpmath.power(approx, 1 / (mpmath.mpf(p.numerator) / p.denominator)) if approx else mpmath.mpf(0)
    power = total if exact else None
    norm = _rpow(power, 1 / p) if exact else None
    return KpNorm(p, power, float(approx), norm, float(root))


# ---------------------------------------------------------------------------
# Cesàro limit vs integral


@dataclass
class IntegralCheck:
    limit: Fraction
    checkpoints: list[int]
    deviations: list[Fraction]
    tolerance: Fraction
    linearity_failures: list[str]

    @property
    def final_deviation(self) -> Fraction:
        return self.deviations[-1]

    @property
    def decreasing(self) -> bool:
        half = len(self.deviations) // 2
        return max(self.deviations[half:]) <= max(self.deviations[: max(half, 1)])

    @property
    def passed(self) -> bool:
        return self.final_deviation < self.tolerance and self.decreasing and not self.linearity_failures

    def csv_rows(self):
        return [(N, f"{float(d):.12g}") for N, d in zip(self.checkpoints, self.deviations)]

    def to_json(self):
        return {
            "limit": str(self.limit),
            "final_deviation": float(self.final_deviation),
            "tolerance": str(self.tolerance),
            "decreasing": self.decreasing,
            "linearity_failures": self.linearity_failures,
            "passed": self.passed,
        }


def _random_residue_sequence(rng: random.Random) -> SimpleSequence:
    m = rng.randint(1, 12)
    terms = [(Fraction(rng.randint(-5, 5), rng.randint(1, 4)), Residue(rng.randrange(m), m)) for _ in range(rng.randint(1, 3))]
    return SimpleSequence(tuple(terms))


def _nu(h: SimpleSequence) -> Fraction:
    try:
        return integral(h)
    except MissingChargeError:
        return closed_form_limit(h)


def linearity_failures(h: SimpleSequence, pairs: int = 10, seed: int = 0) -> list[str]:
    """ν(c·h + d·g) = c ν(h) + d ν(g) for seeded random residue sequences g.

    Values come from the atoms of the generated field when every atom has an
    exact charge, else from the term charges.
    """
    rng = random.Random(seed)
    base = _nu(h)
    out = []
    for _ in range(pairs):
        g = _random_residue_sequence(rng)
        c, d = Fraction(rng.randint(-4, 4), rng.randint(1, 3)), Fraction(rng.randint(-4, 4), rng.randint(1, 3))
        lhs = _nu(h.scale(c) + g.scale(d))
        rhs = c * base + d * _nu(g)
        if lhs != rhs:
            out.append(f"{c}*h + {d}*({g.to_json()}) : {lhs} != {rhs}")
    return out


def cesaro_integral_check(h: SimpleSequence, cfg: EstimatorConfig | None = None, pairs: int = 10, seed: int = 0) -> IntegralCheck:
    cfg = cfg or EstimatorConfig()
    limit = closed_form_limit(h)
    pts = geometric_schedule(cfg)
    devs = [abs(seq_partial_average(h, N) - limit) for N in pts]
    return IntegralCheck(limit, pts, devs, cfg.tolerance, linearity_failures(h, pairs, seed))


# ---------------------------------------------------------------------------
# tail condition


@dataclass(frozen=True)
class TailResult:
    satisfied: bool
    y: Fraction | None
    exact: bool
    estimates: tuple[tuple[Fraction, Fraction], ...] = ()  # (y, upper estimate)

    @property
    def kind(self) -> str:
        return "Satisfied" if self.satisfied else "Violated"

    def to_json(self):
        return {
            "kind": self.kind,
            "y": None if self.y is None else str(self.y),
            "exact": self.exact,
            "estimates": [{"y": str(y), "upper_est": float(u)} for y, u in self.estimates],
        }


def tail_upper_estimate(h: RealSequence, y, p: int, cfg: EstimatorConfig) -> Fraction:
    """max of ν_N(|h|^p I_{|h|>y}) over post-burn-in checkpoints (HEURISTIC)."""
    t = TailSequence(h, Fraction(y), p)
    pts = geometric_schedule(cfg)
    if isinstance(h, AnomalySequence):
        pts = sorted(set(pts) | {m * m for m in range(1, math.isqrt(cfg.horizon) + 1)} | {m * m - 1 for m in range(2, math.isqrt(cfg.horizon) + 1)})
    start = max(1, math.ceil(cfg.burn_in_fraction * cfg.horizon))
    return max(seq_partial_average(t, N) for N in pts if N >= start)


def kp_tail_condition(h: RealSequence, p=1, eps=Fraction(1, 10), cfg: EstimatorConfig | None = None, ys=(1, 10, 100)) -> TailResult:
    """Bounded simple sequences satisfy the tail condition exactly; otherwise test a y-grid empirically."""
    cfg = cfg or EstimatorConfig()
    eps = Fraction(eps)
    if isinstance(h, SimpleSequence):
        return TailResult(True, h.bound() + 1, True)
    p = Fraction(p)
    if p.denominator != 1:
        raise ValueError("the empirical tail test supports integer p only")
    est = tuple((Fraction(y), tail_upper_estimate(h, y, int(p), cfg)) for y in ys)
    for y, u in est:
        if u < eps:
            return TailResult(True, y, False, est)
    return TailResult(False, None, False, est)


# ---------------------------------------------------------------------------
# anomaly


def anomaly_at_square(m: int) -> Fraction:
    return Fraction(m * (m + 1), 2 * m * m)


def anomaly_before_square(m: int) -> Fraction:
    """ν_{(m+1)²-1}(g)."""
    return Fraction(m * (m + 1), 2 * ((m + 1) ** 2 - 1))


@dataclass
class AnomalyReport:
    rows: list[tuple[int, Fraction, Fraction]]
    formula_mismatches: list[int]
    nu_at_horizon: Fraction
    horizon: int
    support_null: str

    @property
    def passed(self) -> bool:
        return not self.formula_mismatches and self.support_null.startswith("Equivalent(exact")

    def csv_rows(self):
        return [(m, str(a), str(b)) for m, a, b in self.rows]

    def to_json(self):
        return {
            "m_max": len(self.rows),
            "formula_mismatches": self.formula_mismatches,
            "horizon": self.horizon,
            "nu_N_g": str(self.nu_at_horizon),
            "nu_N_zero": "0",
            "difference": float(self.nu_at_horizon),
            "support_vs_empty": self.support_null,
            "passed": self.passed,
        }


def anomaly_demo(m_max: int = 1000) -> AnomalyReport:
    """g equals 0 almost everywhere, yet its partial averages approach 1/2."""
    g = AnomalySequence()
    rows, bad = [], []
    for m in range(1, m_max + 1):
        at = seq_partial_average(g, m * m)
        before = seq_partial_average(g, (m + 1) ** 2 - 1)
        if at != anomaly_at_square(m) or before != anomaly_before_square(m):
            bad.append(m)
        rows.append((m, at, before))
    N = m_max * m_max
    return AnomalyReport(rows, bad, seq_partial_average(g, N), N, str(ae_equivalent(g.support, EMPTY)))
