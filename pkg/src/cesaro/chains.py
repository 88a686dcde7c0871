"""Chains of sets: closures, uniform-convergence certificates, midpoint densification, d_nu."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .constructions import dk_partial_union
from .density import EstimatorConfig, density_profile, exact_charge, geometric_schedule
from .sets import (
    EMPTY,
    NATURALS,
    CesaroError,
    Complement,
    Difference,
    Finite,
    Intersection,
    Midpoint,
    Residue,
    SetExpr,
    SymmDiff,
    Union,
    counts_at,
    first_member,
    powers,
    subset_upto,
)

DEFAULT_ORDER_HORIZON = 10**5


class OrderError(CesaroError):
    def __init__(self, index: int, witness: int | None):
        super().__init__(f"chain elements {index} and {index + 1} are not nested (n={witness})")
        self.index = index
        self.witness = witness


def _symbolic_subset(a: SetExpr, b: SetExpr) -> bool:
    if a == b or a == EMPTY or b == NATURALS:
        return True
    if isinstance(b, Union) and a in (b.left, b.right):
        return True
    if isinstance(a, Intersection) and b in (a.left, a.right):
        return True
    if isinstance(a, Residue) and isinstance(b, Residue):
        return a.m % b.m == 0 and a.r % b.m == b.r % b.m
    if isinstance(b, Midpoint) and a == b.lower or isinstance(a, Midpoint) and b == a.upper:
        return True
    return False


@dataclass(frozen=True)
class Chain:
    """Inclusion-ordered elements.

    ``evidence[i]`` covers the pair (i, i+1): ``"symbolic"`` or the horizon
    to which ``subset_upto`` was verified.  ``limit_union`` and
    ``limit_intersection`` optionally describe the union / intersection of an
    infinite chain of which ``elements`` is a finite prefix.
    """

    elements: tuple[SetExpr, ...]
    evidence: tuple[str | int, ...]
    charges: tuple[Fraction, ...] | None = None
    limit_union: SetExpr | None = None
    limit_intersection: SetExpr | None = None

    def __len__(self):
        return len(self.elements)


def make_chain(
    elements: Sequence[SetExpr],
    charges: Sequence | None = None,
    horizon: int = DEFAULT_ORDER_HORIZON,
    limit_union: SetExpr | None = None,
    limit_intersection: SetExpr | None = None,
    exact: bool = False,
) -> Chain:
    """Build a chain, verifying each adjacent inclusion.

    With ``exact=True`` missing charges are filled from the exact charge rules
    (an element without one raises).
    """
    elements = tuple(elements)
    evidence = []
    for i, (a, b) in enumerate(zip(elements, elements[1:])):
        if _symbolic_subset(a, b):
            evidence.append("symbolic")
            continue
        check = subset_upto(a, b, horizon)
        if not check:
            raise OrderError(i, check.counterexample)
        evidence.append(horizon)
    if charges is None and exact:
        charges = []
        for i, e in enumerate(elements):
            c = exact_charge(e)
            if c is None:
                raise CesaroError(f"no exact charge for chain element {i}: {e}")
            charges.append(c.value)
    if charges is not None:
        charges = tuple(Fraction(c) for c in charges)
        if len(charges) != len(elements):
            raise ValueError("one charge per element is required")
        if any(x > y for x, y in zip(charges, charges[1:])):
            raise CesaroError("charges of a chain must be non-decreasing")
    return Chain(elements, tuple(evidence), charges, limit_union, limit_intersection)


def cumulative_residue_chain(m: int) -> Chain:
    """{0}, {0,1}, ..., {0..m-1} mod m as unions of residue classes."""
    elems, acc = [], None
    for r in range(m):
        acc = Residue(0, m) if acc is None else Union(acc, Residue(r, m))
        elems.append(acc)
    return make_chain(elems, [Fraction(k, m) for k in range(1, m + 1)])


def dk_union_chain(k_max: int) -> Chain:
    """Partial unions of the D_k family; the full union is ℕ minus the powers of two."""
    elems = [dk_partial_union(k) for k in range(k_max + 1)]
    charges = [1 - Fraction(1, 2 ** (k + 1)) for k in range(k_max + 1)]
    return make_chain(elems, charges, limit_union=Complement(powers(2)))


def _same(a: SetExpr, b: SetExpr) -> bool:
    return a == b


def chain_closures(chain: Chain, selector=("union", "intersection"), horizon: int = DEFAULT_ORDER_HORIZON) -> Chain:
    """Close a finite chain under unions of prefixes and intersections of suffixes.

    For a finite chain those are its last and first elements, so the closure
    only grows when a limit element of an infinite chain is attached.
    """
    selector = set(selector)
    unknown = selector - {"union", "intersection"}
    if unknown:
        raise ValueError(f"unknown closure selector(s): {sorted(unknown)}")
    elems = list(chain.elements)
    charges = list(chain.charges) if chain.charges is not None else None
    if not elems:
        return chain
    if "union" in selector and chain.limit_union is not None and not _same(chain.limit_union, elems[-1]):
        elems.append(chain.limit_union)
        if charges is not None:
            c = exact_charge(chain.limit_union)
            charges = None if c is None else charges + [c.value]
    if "intersection" in selector and chain.limit_intersection is not None and not _same(chain.limit_intersection, elems[0]):
        elems.insert(0, chain.limit_intersection)
        if charges is not None:
            c = exact_charge(chain.limit_intersection)
            charges = None if c is None else [c.value] + charges
    return make_chain(elems, charges, horizon)


@dataclass
class Certificate:
    """Outcome of the uniform-convergence search.

    ``n_star`` is the least checkpoint from which every element stays within
    ``eps`` of its charge at every checkpoint up to ``horizon``.  That is all
    a finite computation can show (scope ``VERIFIED-TO-HORIZON``).
    """

    found: bool
    eps: Fraction
    horizon: int
    n_star: int | None
    worst_after: Fraction | None
    failure: tuple[int, int, Fraction] | None = None  # (element index, N, nu_N)
    scope: str = "VERIFIED-TO-HORIZON"

    def to_json(self) -> dict:
        return {
            "found": self.found,
            "eps": str(self.eps),
            "horizon": self.horizon,
            "n_star": self.n_star,
            "worst_deviation_after_n_star": None if self.worst_after is None else str(self.worst_after),
            "failure": None
            if self.failure is None
            else {"element": self.failure[0], "N": self.failure[1], "nu_N": str(self.failure[2])},
            "scope": self.scope,
        }


def uniform_convergence_certificate(chain: Chain, eps, cfg: EstimatorConfig | None = None) -> Certificate:
    if chain.charges is None:
        raise CesaroError("a certificate needs a charge for every chain element")
    eps = Fraction(eps)
    cfg = cfg or EstimatorConfig()
    pts = geometric_schedule(cfg)
    bad_last: list[tuple[int, int, Fraction] | None] = [None] * len(pts)
    dev = [Fraction(0)] * len(pts)
    for idx, (e, v) in enumerate(zip(chain.elements, chain.charges)):
        for j, (N, c) in enumerate(zip(pts, counts_at(e, pts))):
            d = abs(Fraction(c, N) - v)
            dev[j] = max(dev[j], d)
            if d >= eps and bad_last[j] is None:
                bad_last[j] = (idx, N, Fraction(c, N))
    last_bad = max((j for j, b in enumerate(bad_last) if b is not None), default=-1)
    if last_bad == len(pts) - 1:
        return Certificate(False, eps, cfg.horizon, None, None, bad_last[last_bad])
    start = last_bad + 1
    return Certificate(True, eps, cfg.horizon, pts[start], max(dev[start:]))


def densify_range(chain: Chain, eps) -> Chain:
    """Insert midpoint sets until adjacent charges differ by at most ``eps``.

    ∅ and ℕ are adjoined first when missing.
    """
    if chain.charges is None:
        raise CesaroError("densification needs exact charges")
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    elems = list(chain.elements)
    charges = list(chain.charges)
    if not elems or elems[0] != EMPTY:
        elems.insert(0, EMPTY)
        charges.insert(0, Fraction(0))
    if elems[-1] != NATURALS:
        elems.append(NATURALS)
        charges.append(Fraction(1))
    changed = True
    while changed:
        changed = False
        new_e, new_c = [elems[0]], [charges[0]]
        for (a, ca), (b, cb) in zip(zip(elems, charges), zip(elems[1:], charges[1:])):
            if cb - ca > eps:
                new_e.append(Midpoint(a, b))
                new_c.append((ca + cb) / 2)
                changed = True
            new_e.append(b)
            new_c.append(cb)
        elems, charges = new_e, new_c
    evidence = tuple("symbolic" for _ in elems[1:])
    return Chain(tuple(elems), evidence, tuple(charges))


@dataclass(frozen=True)
class DNu:
    value: Fraction
    exact: bool

    @property
    def heuristic(self) -> bool:
        return not self.exact


def d_nu(a: SetExpr, b: SetExpr, cfg: EstimatorConfig | None = None) -> DNu:
    """Upper charge of the symmetric difference; exact when a charge rule fires."""
    diff = SymmDiff(a, b)
    c = exact_charge(diff)
    if c is not None:
        return DNu(c.value, True)
    return DNu(density_profile(diff, cfg).upper_est, False)


def saturate_chain(chain: Chain, budget: int, limit: int = 10**7) -> Iterator[SetExpr]:
    """Lazily interpolate each adjacent pair B ⊂ C by B ∪ {x_1..x_i}, x_i increasing in C \\ B."""
    for b, c in zip(chain.elements, chain.elements[1:]):
        gap = Difference(c, b)
        xs: list[int] = []
        while len(xs) < budget:
            nxt = first_member(gap, xs[-1] if xs else 0, limit)
            if nxt is None:
                break
            xs.append(nxt)
            fin = Finite(tuple(xs))
            yield fin if b == EMPTY else Union(b, fin)
