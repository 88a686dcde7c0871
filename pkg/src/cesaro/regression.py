"""Frozen worked-example checks, run by ``cesaro examples``.

Each suite returns a list of :class:`Check`; expected values are either
closed forms or constants frozen from an independent computation (see the
test suite for the oracles that produced them).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import mpmath
import numpy as np

from .chains import cumulative_residue_chain, make_chain, uniform_convergence_certificate
from .constructions import block_set, dk_family, dk_partial_union, greedy_target, midpoint_set, paper_example_catalog
from .density import EstimatorConfig, checkpoints, counts_at, density_profile, exact_charge, exact_limits, gap_P
from .kp import AnomalySequence, anomaly_demo, kp_tail_condition
from .nullmod import algorithm1, first_exceedance
from .quotient import classify_measure_space, make_partition
from .sets import CUBES, EVENS, ODDS, PRIMES, SQUARES, Finite, Intersection, Interleave, Residue, _block_table, members, powers
from .sieve import prime_count

# min over N <= 30 of P_A(Z_2N)^((q+1)/q) / Z_2N, truncated; the ratios decrease toward q + 1
QPOWER_C = {1: 2.100, 2: 3.076, 3: 4.134}
# sup over 2 <= N <= 10^5 of N |nu_N - s| for the greedy sets is exactly 1 (attained at s = 0 and s = 1)
GREEDY_ENVELOPE = 1
PI_1E6 = 78498
BC_GAP = Fraction(1, 10)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


def residues(horizon: int = 10**6) -> list[Check]:
    out = []
    cfg = EstimatorConfig(horizon=horizon)
    for m in range(2, 13):
        e = Residue(0, m)
        c = exact_charge(e)
        pts = checkpoints(e, cfg)
        ok = all(abs(Fraction(k, N) - Fraction(1, m)) <= Fraction(m, N) for N, k in zip(pts, counts_at(e, pts)))
        out.append(Check(f"D_{m} charge 1/{m}", c is not None and c.value == Fraction(1, m) and ok, f"exact={c and c.value}"))
    return out


def geometric_boundary_ratios(N: int) -> tuple[Fraction, Fraction]:
    """nu at Z_2N and at Z_{2N-1} for z_n = 2^(n-1), as displayed closed forms."""
    hi = Fraction(2, 3) * Fraction(2 ** (2 * N) - 1, 2 ** (2 * N) - 1)
    lo = Fraction(2, 3) * Fraction(2 ** (2 * (N - 1)) - 1, 2 ** (2 * N - 1) - 1)
    return hi, lo


def blocks(horizon: int = 10**6) -> list[Check]:
    b = block_set("geometric")
    t = _block_table(b.spec)
    lim = exact_limits(b)
    out = [Check("geometric limits (2/3, 1/3)", lim == (Fraction(2, 3), Fraction(1, 3)), str(lim))]
    bad = []
    for N in range(1, 21):
        hi, lo = geometric_boundary_ratios(N)
        Z2, Z1 = t.Z(2 * N), t.Z(2 * N - 1)
        if Fraction(b.count(Z2), Z2) != hi or Fraction(b.count(Z1), Z1) != lo:
            bad.append(N)
    out.append(Check("block-boundary ratios N <= 20", not bad, f"mismatch at {bad}" if bad else "exact"))
    prof = density_profile(b, EstimatorConfig(horizon=horizon))
    ok = Fraction(66, 100) <= prof.upper_est <= Fraction(6675, 10000) and Fraction(3325, 10000) <= prof.lower_est <= Fraction(34, 100)
    out.append(Check("profile estimates", ok, f"upper={float(prof.upper_est):.6f} lower={float(prof.lower_est):.6f}"))
    return out


def bc(horizon: int = 10**6) -> list[Check]:
    e = Intersection(EVENS, Interleave(block_set("geometric")))
    prof = density_profile(e, EstimatorConfig(horizon=horizon))
    return [
        Check("B∩C has no exact charge", exact_charge(e) is None),
        Check("B∩C oscillation > 1/10", prof.upper_est - prof.lower_est > BC_GAP,
              f"upper={float(prof.upper_est):.6f} lower={float(prof.lower_est):.6f}"),
    ]


def greedy(horizon: int = 10**5) -> list[Check]:
    targets = [("1/3", Fraction(1, 3)), ("2/5", Fraction(2, 5)), ("1/sqrt2", lambda: 1 / mpmath.sqrt(2)),
               ("1-1/pi", lambda: 1 - 1 / mpmath.pi), ("0", Fraction(0)), ("1", Fraction(1))]
    out = []
    for label, s in targets:
        g = greedy_target(s)
        cum = np.cumsum(g.mask(1, horizon + 1), dtype=np.int64)
        num, den = g.target.numerator, g.target.denominator
        # |c/N - s| <= K/N  <=>  |c*den - N*num| <= K*den
        worst = max(abs(int(cum[N - 1]) * den - N * num) for N in range(2, horizon + 1))
        out.append(Check(f"greedy {label} envelope {GREEDY_ENVELOPE}/N", worst <= GREEDY_ENVELOPE * den,
                         f"max N|nu_N - s| = {worst / den:.6f}"))
    return out


def qpower(n_max: int = 30) -> list[Check]:
    out = []
    for q in (1, 2, 3):
        b = block_set(f"q{q}")
        t = _block_table(b.spec)
        vals = []
        for N in range(1, n_max + 1):
            Z = t.Z(2 * N)
            vals.append(gap_P(b, Z) ** ((q + 1) / q) / Z)
        out.append(Check(f"q={q} P^((q+1)/q)/Z >= {QPOWER_C[q]}", min(vals) >= QPOWER_C[q], f"min={min(vals):.6f}"))
        c = exact_charge(b)
        out.append(Check(f"q={q} charge 1/2", c is not None and c.value == Fraction(1, 2)))
    return out


def nulls(horizon: int = 10**6) -> list[Check]:
    out = []
    for name, e in (("squares", SQUARES), ("cubes", CUBES), ("powers(2)", powers(2)), ("primes", PRIMES)):
        c = exact_charge(e)
        out.append(Check(f"{name} null", c is not None and c.value == 0))
    prof = density_profile(SQUARES, EstimatorConfig(horizon=horizon))
    out.append(Check("squares upperEst <= 2e-3", prof.upper_est <= Fraction(2, 1000), f"{float(prof.upper_est):.6f}"))
    if horizon >= 10**6:
        out.append(Check("pi(10^6) = 78498", prime_count(10**6) == PI_1E6))
    return out


def dk(horizon: int = 10**6, k_max: int = 10) -> list[Check]:
    out = []
    for k in range(k_max + 1):
        e = dk_family(k)
        c = exact_charge(e)
        bound = Fraction(1, 2 ** (k + 1))
        over = first_exceedance(e, bound, min(horizon, 10**5))
        out.append(Check(f"D_{k} charge 2^-{k + 1}, dominated", c is not None and c.value == bound and over is None,
                         f"exact={c and c.value} first excess={over}"))
    u = dk_partial_union(20)
    prof = density_profile(u, EstimatorConfig(horizon=horizon))
    floor = 1 - Fraction(1, 2**20) - Fraction(1, 1000)
    out.append(Check("union k<=20 lowerEst", prof.lower_est >= floor, f"lower={float(prof.lower_est):.6f}"))
    total = sum((Fraction(1, 2 ** (k + 1)) for k in range(21)), Fraction(0))
    out.append(Check("sum of charges k<=20 = 1 - 2^-21", total == 1 - Fraction(1, 2**21)))
    c = exact_charge(u)
    out.append(Check("union k<=20 exact charge = sum", c is not None and c.value == total, f"exact={c and c.value}"))
    return out


def anomaly(horizon: int = 10**6) -> list[Check]:
    rep = anomaly_demo(1000)
    tail = kp_tail_condition(AnomalySequence(), 1, Fraction(1, 10), EstimatorConfig(horizon=horizon))
    in_band = all(Fraction(45, 100) <= u <= Fraction(55, 100) for _, u in tail.estimates)
    return [
        Check("nu_{m^2}(g) formula m <= 1000", not rep.formula_mismatches),
        Check("nu_{10^6}(g) = 5005/10^4", rep.nu_at_horizon == Fraction(5005, 10**4), str(rep.nu_at_horizon)),
        Check("tail condition violated, estimates in [0.45, 0.55]", not tail.satisfied and in_band,
              " ".join(f"y={y}:{float(u):.4f}" for y, u in tail.estimates)),
        Check("support of g is null", rep.support_null.startswith("Equivalent(exact")),
    ]


def nullmod_odds(horizon: int = 10**6) -> list[Check]:
    r = algorithm1(ODDS, Fraction(1, 2))
    f_members = members(r.f, horizon)
    over = first_exceedance(r.a_prime, Fraction(1, 2), horizon)
    return [
        Check("F = {1}", f_members == [1], str(f_members[:5])),
        Check("nu_N(A') <= 1/2", over is None, f"first excess={over}"),
    ]


def midpoint(horizon: int = 10**6) -> list[Check]:
    pairs = [(Residue(0, 4), EVENS), (Residue(0, 6), Residue(0, 3)), (Residue(0, 10), Residue(0, 5) | Residue(0, 2))]
    out = []
    cfg = EstimatorConfig(horizon=horizon)
    for lower, upper in pairs:
        m = midpoint_set(lower, upper)
        want = (exact_charge(lower).value + exact_charge(upper).value) / 2
        prof = density_profile(m, cfg)
        dev = max(abs(prof.upper_est - want), abs(prof.lower_est - want))
        out.append(Check(f"midpoint({lower}, {upper}) ~ {want}", dev <= Fraction(1, 100), f"dev={float(dev):.6f}"))
    return out


def chain(horizon: int = 10**6) -> list[Check]:
    cfg = EstimatorConfig(horizon=horizon)
    cert = uniform_convergence_certificate(cumulative_residue_chain(10), Fraction(1, 100), cfg)
    bad = uniform_convergence_certificate(make_chain([block_set("geometric")], [Fraction(1, 2)]), Fraction(1, 7), cfg)
    return [
        Check("mod-10 chain certified eps=0.01, N* <= 10^4", cert.found and cert.n_star <= 10**4, f"N*={cert.n_star}"),
        Check("blocks element has no certificate", not bad.found, str(bad.failure)),
    ]


def classify(K: int = 12) -> list[Check]:
    dk_cls = classify_measure_space(make_partition([dk_family(k) for k in range(K)]))
    sing = classify_measure_space(make_partition([Finite((k,)) for k in range(1, K + 1)]))
    return [
        Check(f"D_k partition K={K}: MeasureSpace, tail 2^-K",
              dk_cls.kind == "MeasureSpace" and dk_cls.tail_mass == Fraction(1, 2**K), str(dk_cls.tail_mass)),
        Check("singletons: ChargeOnly(1)", sing.kind == "ChargeOnly" and sing.tail_mass == 1, str(sing.tail_mass)),
    ]


def catalog() -> list[Check]:
    cat = paper_example_catalog()
    return [Check(f"catalog has {len(cat)} entries", len(cat) == 12 + 1 + 3 + 3 + 4 + 21)]


SUITES: dict[str, Callable[..., list[Check]]] = {
    "residues": residues,
    "blocks": blocks,
    "bc": bc,
    "greedy": greedy,
    "qpower": lambda horizon=None: qpower(),
    "nulls": nulls,
    "dk": dk,
    "anomaly": anomaly,
    "nullmod": nullmod_odds,
    "midpoint": midpoint,
    "chain": chain,
    "classify": lambda horizon=None: classify(),
    "catalog": lambda horizon=None: catalog(),
}


def run(name: str, horizon: int | None = None) -> list[Check]:
    fn = SUITES[name]
    if horizon is None or name == "greedy" and horizon > 10**5:
        return fn() if name != "greedy" else fn(10**5 if horizon is None else min(horizon, 10**5))
    return fn(horizon=horizon)
