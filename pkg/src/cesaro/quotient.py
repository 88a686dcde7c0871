"""Almost-everywhere equivalence, generated fields of sets, and countable-partition classification."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .density import EstimatorConfig, density_profile, exact_charge, is_registered_null
from .nullmod import DisjointnessError, check_disjoint
from .sets import (
    EMPTY,
    NATURALS,
    CesaroError,
    Complement,
    Intersection,
    SetExpr,
    SymmDiff,
    Union,
    segments,
)

MAX_GENERATORS = 12
DEFAULT_HORIZON = 10**5


@dataclass(frozen=True)
class AeResult:
    """``kind`` is Equivalent, NotEquivalent or Inconclusive; ``mode`` is exact or empirical."""

    kind: str
    mode: str
    value: Fraction | None = None  # exact charge witness or empirical upper bound

    @property
    def equivalent(self) -> bool:
        return self.kind == "Equivalent"

    def __str__(self):
        v = "" if self.value is None else f", {self.value}"
        return f"{self.kind}({self.mode}{v})"


def ae_equivalent(a: SetExpr, b: SetExpr, cfg: EstimatorConfig | None = None, tol=Fraction(1, 1000)) -> AeResult:
    """Decide whether ``a △ b`` is null.

    Exact when the symmetric difference reduces through the null catalog or
    has an exact charge; otherwise its profile upper estimate decides an
    empirical equivalence, and anything else is Inconclusive.
    """
    d = SymmDiff(a, b)
    if is_registered_null(d):
        return AeResult("Equivalent", "exact", Fraction(0))
    c = exact_charge(d)
    if c is not None:
        if c.value == 0:
            return AeResult("Equivalent", "exact", Fraction(0))
        return AeResult("NotEquivalent", "exact", c.value)
    upper = density_profile(d, cfg).upper_est
    if upper <= Fraction(tol):
        return AeResult("Equivalent", "empirical", upper)
    return AeResult("Inconclusive", "empirical", upper)


def _atom_expr(generators: Sequence[SetExpr], code: int) -> SetExpr:
    parts = [g if code >> i & 1 else Complement(g) for i, g in enumerate(generators)]
    out = parts[0]
    for p in parts[1:]:
        out = Intersection(out, p)
    return out


@dataclass
class FieldOfSets:
    """Atoms of the field generated by ``generators``; ``codes[i]`` is atom i's sign pattern."""

    generators: list[SetExpr]
    codes: list[int]
    atoms: list[SetExpr]
    charges: list[Fraction | None]
    horizon: int

    @property
    def complete(self) -> bool:
        return all(c is not None for c in self.charges)

    def element(self, atom_indices) -> SetExpr:
        idx = sorted(atom_indices)
        if not idx:
            return EMPTY
        out = self.atoms[idx[0]]
        for i in idx[1:]:
            out = Union(out, self.atoms[i])
        return out

    def element_charge(self, atom_indices) -> Fraction | None:
        vals = [self.charges[i] for i in atom_indices]
        if any(v is None for v in vals):
            return None
        return sum(vals, Fraction(0))

    def to_json(self) -> dict:
        return {
            "generators": [str(g) for g in self.generators],
            "horizon": self.horizon,
            "atoms": [
                {"pattern": format(c, f"0{max(1, len(self.generators))}b")[::-1] if self.generators else "",
                 "expr": str(a), "charge": None if v is None else str(v)}
                for c, a, v in zip(self.codes, self.atoms, self.charges)
            ],
            "charge_sum": str(sum(self.charges, Fraction(0))) if self.complete else None,
        }


def generate_field(generators: Sequence[SetExpr], horizon: int = DEFAULT_HORIZON) -> FieldOfSets:
    """Atoms of the generated field: the sign-pattern intersections with a member up to ``horizon``.

    Atoms are disjoint by construction (each n has exactly one sign pattern).
    """
    gens = list(generators)
    if len(gens) > MAX_GENERATORS:
        raise ValueError(f"at most {MAX_GENERATORS} generators (4096 atoms) are supported")
    if not gens:
        return FieldOfSets([], [0], [NATURALS], [Fraction(1)], horizon)
    seen: set[int] = set()
    for lo, hi in segments(1, horizon + 1):
        code = np.zeros(hi - lo, dtype=np.int64)
        for i, g in enumerate(gens):
            code |= g.mask(lo, hi).astype(np.int64) << i
        seen.update(int(c) for c in np.unique(code))
    codes = sorted(seen)
    atoms = [_atom_expr(gens, c) for c in codes]
    charges = []
    for a in atoms:
        c = exact_charge(a)
        charges.append(None if c is None else c.value)
    return FieldOfSets(gens, codes, atoms, charges, horizon)


@dataclass
class AdditivityReport:
    pairs: int
    failures: list[tuple[tuple[int, ...], tuple[int, ...]]]

    @property
    def passed(self) -> bool:
        return not self.failures


def field_additivity_check(fld: FieldOfSets, pairs: int = 200, seed: int = 0) -> AdditivityReport:
    """ν(E∪F) + ν(E∩F) = ν(E) + ν(F) with every charge from the exact rules on the expressions.

    All element pairs are tested for fields with at most 4 atoms, a seeded
    sample otherwise.
    """
    n = len(fld.atoms)
    subsets = [tuple(i for i in range(n) if mask >> i & 1) for mask in range(1 << min(n, 16))] if n <= 4 else None
    rng = random.Random(seed)
    if subsets is not None:
        todo = list(itertools.product(subsets, repeat=2))
    else:
        todo = []
        for _ in range(pairs):
            todo.append(tuple(tuple(i for i in range(n) if rng.random() < 0.5) for _ in range(2)))
    fails = []
    for e_idx, f_idx in todo:
        e, f = fld.element(e_idx), fld.element(f_idx)
        vals = [exact_charge(x) for x in (e | f, e & f, e, f)]
        if any(v is None for v in vals):
            continue
        u, i, ve, vf = (v.value for v in vals)
        if u + i != ve + vf:
            fails.append((e_idx, f_idx))
    return AdditivityReport(len(todo), fails)


@dataclass
class PartitionSpec:
    """Finite truncation of a countable partition into disjoint charged parts."""

    parts: list[SetExpr]
    charges: list[Fraction]

    @property
    def tail_mass(self) -> Fraction:
        return 1 - sum(self.charges, Fraction(0))


def make_partition(parts: Sequence[SetExpr], charges=None, horizon: int = DEFAULT_HORIZON) -> PartitionSpec:
    parts = list(parts)
    check_disjoint(parts, horizon)
    if charges is None:
        charges = []
        for i, p in enumerate(parts):
            c = exact_charge(p)
            if c is None:
                raise CesaroError(f"no exact charge for part {i}: {p}")
            charges.append(c.value)
    spec = PartitionSpec(parts, [Fraction(c) for c in charges])
    if spec.tail_mass < 0:
        raise CesaroError(f"charges of the parts sum past 1 (tail mass {spec.tail_mass})")
    return spec


@dataclass(frozen=True)
class Classification:
    kind: str  # MeasureSpace or ChargeOnly
    tail_mass: Fraction
    truncation: int
    trend: tuple[Fraction, ...]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "tail_mass": str(self.tail_mass),
            "truncation": self.truncation,
            "trend": [str(t) for t in self.trend],
        }


def classify_measure_space(p: PartitionSpec) -> Classification:
    """MeasureSpace when the tail mass vanishes or visibly tends to 0, ChargeOnly(deficit) otherwise.

    The truncation level K is the number of parts.  "Visibly tends to 0" is
    a finite-data stand-in: the tail is strictly decreasing in k and has at
    least halved between k = ceil(K/2) and K.
    """
    K = len(p.parts)
    trend, acc = [], Fraction(0)
    for c in p.charges:
        acc += c
        trend.append(1 - acc)
    tail = p.tail_mass
    if tail == 0:
        return Classification("MeasureSpace", tail, K, tuple(trend))
    decreasing = all(x > y for x, y in zip(trend, trend[1:]))
    half = trend[max(0, math.ceil(K / 2) - 1)] if trend else Fraction(1)
    if K >= 2 and decreasing and tail <= half / 2:
        return Classification("MeasureSpace", tail, K, tuple(trend))
    return Classification("ChargeOnly", tail, K, tuple(trend))


@dataclass
class FormCheck:
    failures: list[str]

    @property
    def passed(self) -> bool:
        return not self.failures


def _in_partition_field(a: SetExpr, p: PartitionSpec, horizon: int) -> bool:
    for lo, hi in segments(1, horizon + 1):
        am = a.mask(lo, hi)
        covered = np.zeros(hi - lo, dtype=bool)
        for part in p.parts:
            pm = part.mask(lo, hi)
            covered |= pm
            inside = am & pm
            if inside.any() and not np.array_equal(inside, pm):
                return False
        if (am & ~covered).any():
            return False
    return True


def measurable_form_check(
    terms: Sequence[tuple[Fraction, SetExpr]],
    null_support: SetExpr | None,
    p: PartitionSpec,
    horizon: int = DEFAULT_HORIZON,
    cfg: EstimatorConfig | None = None,
    tol=Fraction(1, 1000),
) -> FormCheck:
    """Check h = Σ a_j I_{A_j} + g against a partition.

    Clauses: each A_j lies in the field of the parts, has positive charge,
    the A_j are pairwise disjoint, and g's support is null.
    """
    fails = []
    sets = [s for _, s in terms]
    for j, s in enumerate(sets):
        if not _in_partition_field(s, p, horizon):
            fails.append(f"membership: term {j} ({s}) is not a union of parts")
        c = exact_charge(s)
        if c is not None:
            if c.value <= 0:
                fails.append(f"positivity: term {j} has charge {c.value}")
        elif density_profile(s, cfg).lower_est <= 0:
            fails.append(f"positivity: term {j} has no positive charge estimate")
    try:
        check_disjoint(sets, horizon)
    except DisjointnessError as exc:
        fails.append(f"disjointness: {exc}")
    if null_support is not None and not is_registered_null(null_support):
        c = exact_charge(null_support)
        if c is not None:
            if c.value != 0:
                fails.append(f"null support: charge {c.value}")
        elif density_profile(null_support, cfg).upper_est > Fraction(tol):
            fails.append("null support: upper estimate above tolerance")
    return FormCheck(fails)
