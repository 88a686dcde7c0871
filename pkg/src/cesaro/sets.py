"""Symbolic subsets of the positive integers.

Every set is an immutable expression tree.  Three evaluation routes are
offered on each node:

``contains(n)``
    pointwise membership, written directly from the definition;
``mask(lo, hi)``
    a numpy boolean array of membership for ``lo <= n < hi``;
``count(N)``
    ``|A ∩ {1..N}|``, with closed-form fast paths for the structured
    variants and a segmented streaming pass for everything else.

Counts are Python integers, so no exact path ever touches floating point.
"""

from __future__ import annotations

import bisect
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from . import sieve

MAX_HORIZON = 2**63 - 1
SEGMENT = 1 << 20


class CesaroError(Exception):
    """Base class for library errors."""


class EvaluationError(CesaroError):
    """Membership could not be evaluated (e.g. a predicate raised)."""


class HorizonOverflow(CesaroError, OverflowError):
    pass


def check_horizon(N: int) -> int:
    N = int(N)
    if N < 1:
        raise ValueError(f"horizon must be >= 1, got {N}")
    if N > MAX_HORIZON:
        raise HorizonOverflow(f"horizon {N} exceeds the 63-bit limit")
    return N


def _arange(lo: int, hi: int) -> np.ndarray:
    return np.arange(lo, hi, dtype=np.int64)


class SetExpr:
    """Base class of all set expressions."""

    #: True when ``count`` does not need a streaming pass.
    fast_count = False

    def contains(self, n: int) -> bool:
        raise NotImplementedError

    def mask(self, lo: int, hi: int) -> np.ndarray:
        raise NotImplementedError

    def count(self, N: int) -> int:
        return stream_count(self, N)

    def structural_points(self, H: int) -> list[int]:
        """Horizons where the partial average is expected to turn."""
        return []

    def children(self) -> tuple["SetExpr", ...]:
        return ()

    def __contains__(self, n: int) -> bool:
        return self.contains(n)

    def __or__(self, other: "SetExpr") -> "SetExpr":
        return Union(self, other)

    def __and__(self, other: "SetExpr") -> "SetExpr":
        return Intersection(self, other)

    def __sub__(self, other: "SetExpr") -> "SetExpr":
        return Difference(self, other)

    def __xor__(self, other: "SetExpr") -> "SetExpr":
        return SymmDiff(self, other)

    def __invert__(self) -> "SetExpr":
        return Complement(self)

    def __str__(self) -> str:
        from .dsl import format_set_expr

        return format_set_expr(self)


# ---------------------------------------------------------------------------
# leaves


@dataclass(frozen=True, eq=True)
class Finite(SetExpr):
    elements: tuple[int, ...] = ()

    fast_count = True

    def __post_init__(self):
        els = tuple(int(e) for e in self.elements)
        if any(e < 1 for e in els):
            raise ValueError("finite sets hold positive integers only")
        if any(a >= b for a, b in zip(els, els[1:])):
            raise ValueError("finite set elements must be strictly increasing")
        object.__setattr__(self, "elements", els)

    def contains(self, n):
        i = bisect.bisect_left(self.elements, n)
        return i < len(self.elements) and self.elements[i] == n

    def count(self, N):
        return bisect.bisect_right(self.elements, check_horizon(N))

    def mask(self, lo, hi):
        out = np.zeros(max(hi - lo, 0), dtype=bool)
        i = bisect.bisect_left(self.elements, lo)
        j = bisect.bisect_left(self.elements, hi)
        if j > i:
            out[np.asarray(self.elements[i:j], dtype=np.int64) - lo] = True
        return out


@dataclass(frozen=True, eq=True)
class Residue(SetExpr):
    """``{n >= 1 : n ≡ r (mod m)}``."""

    r: int
    m: int

    fast_count = True

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"modulus must be >= 1, got {self.m}")
        if not 0 <= self.r < self.m:
            raise ValueError(f"residue must satisfy 0 <= r < m, got r={self.r}, m={self.m}")

    def contains(self, n):
        return n % self.m == self.r

    def count(self, N):
        N = check_horizon(N)
        if self.r == 0:
            return N // self.m
        return 0 if N < self.r else (N - self.r) // self.m + 1

    def mask(self, lo, hi):
        return (_arange(lo, hi) - self.r) % self.m == 0


NATURALS = Residue(0, 1)
EMPTY = Finite(())
EVENS = Residue(0, 2)
ODDS = Residue(1, 2)


def _iroot(n: int, k: int) -> int:
    """floor(n ** (1/k)) for n >= 0."""
    if n < 2:
        return n
    x = int(round(n ** (1.0 / k)))
    while x**k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


NULL_KINDS = ("squares", "cubes", "powers", "primes")


@dataclass(frozen=True, eq=True)
class NullFamily(SetExpr):
    """A registered null set: squares, cubes, powers ``{b^j : j >= 0}``, or primes."""

    kind: str
    base: int = 0

    fast_count = True

    def __post_init__(self):
        if self.kind not in NULL_KINDS:
            raise ValueError(f"unknown null family {self.kind!r}")
        if self.kind == "powers":
            if self.base < 2:
                raise ValueError("powers need a base >= 2")
        elif self.base != 0:
            raise ValueError(f"{self.kind} takes no base")

    def _power(self):
        return 2 if self.kind == "squares" else 3

    def contains(self, n):
        if self.kind in ("squares", "cubes"):
            k = self._power()
            return _iroot(n, k) ** k == n
        if self.kind == "powers":
            while n % self.base == 0:
                n //= self.base
            return n == 1
        return sieve.is_prime(n)

    def count(self, N):
        N = check_horizon(N)
        if self.kind in ("squares", "cubes"):
            return _iroot(N, self._power())
        if self.kind == "powers":
            c, p = 0, 1
            while p <= N:
                c += 1
                p *= self.base
            return c
        return sieve.prime_count(N)

    def _members_between(self, lo, hi):
        if self.kind in ("squares", "cubes"):
            k = self._power()
            start = _iroot(lo - 1, k) + 1 if lo > 1 else 1
            return [m**k for m in range(start, _iroot(hi - 1, k) + 1)] if hi > 1 else []
        out, p = [], 1
        while p < hi:
            if p >= lo:
                out.append(p)
            p *= self.base
        return out

    def mask(self, lo, hi):
        if self.kind == "primes":
            return sieve.prime_mask(lo, hi)
        out = np.zeros(max(hi - lo, 0), dtype=bool)
        members = self._members_between(lo, hi)
        if members:
            out[np.asarray(members, dtype=np.int64) - lo] = True
        return out

    def structural_points(self, H):
        if self.kind == "primes":
            return []
        return self._members_between(1, H + 1)


SQUARES = NullFamily("squares")
CUBES = NullFamily("cubes")
PRIMES = NullFamily("primes")


def powers(base: int) -> NullFamily:
    return NullFamily("powers", base)


# ---------------------------------------------------------------------------
# run-length block sets


BLOCK_KINDS = ("geometric", "power", "periodic")


@dataclass(frozen=True, eq=True)
class BlockSpec:
    """Run lengths ``z_1, z_2, ...``; odd-indexed runs are zeroes, even runs ones.

    ``geometric``: ``z_n = c * b**(n-1)`` (b >= 2).
    ``power``: ``z_n = n**q`` (q >= 1).
    ``periodic``: the explicit ``head`` followed by ``tail`` repeated forever.
    """

    kind: str
    c: int = 1
    b: int = 2
    q: int = 1
    head: tuple[int, ...] = ()
    tail: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in BLOCK_KINDS:
            raise ValueError(f"unknown block kind {self.kind!r}")
        if self.kind == "geometric" and (self.c < 1 or self.b < 2):
            raise ValueError("geometric blocks need c >= 1 and b >= 2")
        if self.kind == "power" and self.q < 1:
            raise ValueError("power blocks need q >= 1")
        if self.kind == "periodic":
            head = tuple(int(z) for z in self.head)
            tail = tuple(int(z) for z in self.tail)
            if not tail:
                raise ValueError("periodic blocks need a non-empty repeating tail")
            runs = head + tail
            if runs[0] < 0 or any(z < 1 for z in runs[1:]):
                raise ValueError("z_1 must be >= 0 and z_n >= 1 for n >= 2")
            if not head and tail[0] < 1:
                raise ValueError("a zero run cannot repeat")
            object.__setattr__(self, "head", head)
            object.__setattr__(self, "tail", tail)

    @classmethod
    def geometric(cls, b: int = 2, c: int = 1) -> "BlockSpec":
        return cls("geometric", c=c, b=b)

    @classmethod
    def power(cls, q: int) -> "BlockSpec":
        return cls("power", q=q)

    @classmethod
    def periodic(cls, head: Sequence[int], tail: Sequence[int]) -> "BlockSpec":
        return cls("periodic", head=tuple(head), tail=tuple(tail))

    def z(self, n: int) -> int:
        if self.kind == "geometric":
            return self.c * self.b ** (n - 1)
        if self.kind == "power":
            return n**self.q
        if n <= len(self.head):
            return self.head[n - 1]
        return self.tail[(n - len(self.head) - 1) % len(self.tail)]

    def partial_sum(self, n: int) -> int:
        """Z_n = z_1 + ... + z_n."""
        if self.kind == "geometric":
            return self.c * (self.b**n - 1) // (self.b - 1)
        return _block_table(self).Z(n)

    def limits(self) -> tuple[Fraction, Fraction]:
        """Closed-form (upper, lower) Cesàro limits of the block set."""
        if self.kind == "geometric":
            return Fraction(self.b, self.b + 1), Fraction(1, self.b + 1)
        if self.kind == "power":
            return Fraction(1, 2), Fraction(1, 2)
        cycles = 2 if len(self.tail) % 2 else 1
        ones = total = 0
        for i in range(cycles * len(self.tail)):
            z = self.tail[i % len(self.tail)]
            total += z
            if (len(self.head) + i + 1) % 2 == 0:
                ones += z
        v = Fraction(ones, total)
        return v, v


class _BlockTable:
    """Cached boundaries Z_1 < Z_2 < ... for one BlockSpec."""

    def __init__(self, spec: BlockSpec):
        self.spec = spec
        self._lock = threading.Lock()
        self.Zs: list[int] = []
        self.ones: list[int] = []  # ones among runs 1..k
        if spec.kind == "periodic":
            head, tail = spec.head, spec.tail
            self.Zh = sum(head)
            self.St = sum(tail)
            self.tail_prefix = np.cumsum(np.asarray(tail, dtype=np.int64))

    def _extend_to(self, n: int):
        """Make sure Z_k >= n for the last cached k."""
        with self._lock:
            while not self.Zs or self.Zs[-1] < n:
                k = len(self.Zs) + 1
                z = self.spec.z(k)
                self.Zs.append((self.Zs[-1] if self.Zs else 0) + z)
                self.ones.append((self.ones[-1] if self.ones else 0) + (z if k % 2 == 0 else 0))

    def Z(self, k: int) -> int:
        if self.spec.kind == "periodic":
            return self._periodic_Z(k)
        while len(self.Zs) < k:
            self._extend_to(self.Zs[-1] + 1 if self.Zs else 1)
        return self.Zs[k - 1]

    def _periodic_Z(self, k):
        spec = self.spec
        H, T = len(spec.head), len(spec.tail)
        if k <= H:
            return sum(spec.head[:k])
        q, i = divmod(k - H, T)
        return self.Zh + q * self.St + (int(self.tail_prefix[i - 1]) if i else 0)

    def run_index(self, n: int) -> int:
        """The 1-based run k with Z_{k-1} < n <= Z_k."""
        if self.spec.kind == "periodic":
            return int(self._periodic_runs(np.asarray([n], dtype=np.int64))[0])
        self._extend_to(n)
        return bisect.bisect_left(self.Zs, n) + 1

    def _periodic_runs(self, ns: np.ndarray) -> np.ndarray:
        spec = self.spec
        H, T = len(spec.head), len(spec.tail)
        out = np.empty(ns.shape, dtype=np.int64)
        in_head = ns <= self.Zh
        if in_head.any():
            head_prefix = np.cumsum(np.asarray(spec.head, dtype=np.int64))
            out[in_head] = np.searchsorted(head_prefix, ns[in_head], side="left") + 1
        rest = ~in_head
        if rest.any():
            o = ns[rest] - self.Zh - 1
            q, r = np.divmod(o, self.St)
            i = np.searchsorted(self.tail_prefix, r, side="right")
            out[rest] = H + q * T + i + 1
        return out

    def count(self, N: int) -> int:
        if self.spec.kind == "periodic":
            return self._periodic_count(N)
        self._extend_to(N)
        k = bisect.bisect_left(self.Zs, N) + 1
        before = self.ones[k - 2] if k >= 2 else 0
        if k % 2 == 0:
            before += N - (self.Zs[k - 2] if k >= 2 else 0)
        return before

    def _periodic_count(self, N):
        spec = self.spec
        H, T = len(spec.head), len(spec.tail)
        total = 0
        pos = 0
        for k, z in enumerate(spec.head, start=1):
            if pos >= N:
                return total
            take = min(z, N - pos)
            if k % 2 == 0:
                total += take
            pos += z
        if pos >= N:
            return total
        rem = N - pos
        q, r = divmod(rem, self.St)
        even_cycle = sum(z for i, z in enumerate(spec.tail) if (H + i + 1) % 2 == 0)
        if T % 2:
            odd_cycle = self.St - even_cycle
            total += (q + 1) // 2 * even_cycle + q // 2 * odd_cycle
        else:
            total += q * even_cycle
        k0 = H + q * T
        for i, z in enumerate(spec.tail):
            if r <= 0:
                break
            take = min(z, r)
            if (k0 + i + 1) % 2 == 0:
                total += take
            r -= z
        return total

    def mask(self, lo: int, hi: int) -> np.ndarray:
        if hi <= lo:
            return np.zeros(0, dtype=bool)
        if self.spec.kind == "periodic":
            return self._periodic_runs(_arange(lo, hi)) % 2 == 0
        out = np.zeros(hi - lo, dtype=bool)
        self._extend_to(hi)
        k = bisect.bisect_left(self.Zs, lo) + 1
        while True:
            start = (self.Zs[k - 2] if k >= 2 else 0) + 1
            if start >= hi:
                break
            end = self.Zs[k - 1]
            if k % 2 == 0:
                a, b = max(start, lo), min(end, hi - 1)
                if a <= b:
                    out[a - lo : b - lo + 1] = True
            k += 1
        return out

    def boundaries(self, H: int) -> list[int]:
        if self.spec.kind == "periodic":
            return []  # a periodic run pattern has a limit; its boundaries are not informative
        out = []
        k = 1
        while True:
            Zk = self.Z(k)
            if Zk > H:
                return out
            if Zk >= 1:
                out.append(Zk)
            k += 1


_TABLES: dict[BlockSpec, _BlockTable] = {}
_TABLES_LOCK = threading.Lock()


def _block_table(spec: BlockSpec) -> _BlockTable:
    with _TABLES_LOCK:
        t = _TABLES.get(spec)
        if t is None:
            t = _TABLES[spec] = _BlockTable(spec)
        return t


@dataclass(frozen=True, eq=True)
class Blocks(SetExpr):
    """Indicator made of ``z_1`` zeroes, then ``z_2`` ones, then ``z_3`` zeroes, ..."""

    spec: BlockSpec

    fast_count = True

    def contains(self, n):
        return _block_table(self.spec).run_index(n) % 2 == 0

    def count(self, N):
        return _block_table(self.spec).count(check_horizon(N))

    def mask(self, lo, hi):
        return _block_table(self.spec).mask(lo, hi)

    def structural_points(self, H):
        return _block_table(self.spec).boundaries(H)


# ---------------------------------------------------------------------------
# memoized sequential streams


class MemoStream:
    """Growable membership bitmap plus cumulative counts, filled left to right.

    Subclasses implement ``_fill(lo, hi)`` returning the membership of
    ``lo <= n < hi`` given that everything below ``lo`` is already known.
    Entry ``i`` of ``bits`` is membership of ``n = i + 1``.
    """

    chunk = 1 << 16

    def __init__(self):
        self._lock = threading.RLock()
        self.bits = np.zeros(0, dtype=bool)
        self.cum = np.zeros(0, dtype=np.int64)
        self.done = 0  # membership known for 1..done

    def _fill(self, lo: int, hi: int) -> np.ndarray:
        raise NotImplementedError

    def ensure(self, n: int):
        if n <= self.done:
            return
        with self._lock:
            if n <= self.done:
                return
            target = -(-n // self.chunk) * self.chunk
            new = self._fill(self.done + 1, target + 1)
            base = int(self.cum[-1]) if self.done else 0
            self.bits = np.concatenate([self.bits, new])
            self.cum = np.concatenate([self.cum, base + np.cumsum(new, dtype=np.int64)])
            self.done = target

    def member(self, n: int) -> bool:
        self.ensure(n)
        return bool(self.bits[n - 1])

    def count(self, N: int) -> int:
        self.ensure(N)
        return int(self.cum[N - 1])

    def mask(self, lo: int, hi: int) -> np.ndarray:
        if hi <= lo:
            return np.zeros(0, dtype=bool)
        self.ensure(hi - 1)
        a = max(lo, 1)
        out = self.bits[a - 1 : hi - 1]
        if a > lo:
            out = np.concatenate([np.zeros(a - lo, dtype=bool), out])
        return out.copy()


class _Registry:
    """Process-wide cache of streams keyed by the (hashable) expression."""

    def __init__(self, factory):
        self.factory = factory
        self._lock = threading.Lock()
        self._streams = {}

    def get(self, key):
        with self._lock:
            s = self._streams.get(key)
            if s is None:
                s = self._streams[key] = self.factory(key)
            return s


class GreedyStream(MemoStream):
    """1 is a member; n >= 2 joins iff the partial average at n-1 is below the target."""

    def __init__(self, target: Fraction):
        super().__init__()
        self.num = target.numerator
        self.den = target.denominator

    def _fill(self, lo, hi):
        out = np.zeros(hi - lo, dtype=bool)
        num, den = self.num, self.den
        c = int(self.cum[-1]) if self.done else 0
        for n in range(lo, hi):
            if n == 1 or c * den < (n - 1) * num:
                out[n - lo] = True
                c += 1
        return out


_GREEDY = _Registry(lambda key: GreedyStream(key))


@dataclass(frozen=True, eq=True)
class Greedy(SetExpr):
    """Greedy set whose partial averages chase ``target``.

    ``approximate`` marks a target that is a 128-bit fixed-point truncation
    of an irrational real; targets closer than 2**-120 cannot be told apart.
    """

    target: Fraction
    approximate: bool = False

    fast_count = True

    def __post_init__(self):
        t = Fraction(self.target)
        if not 0 <= t <= 1:
            raise ValueError(f"greedy target must lie in [0, 1], got {t}")
        object.__setattr__(self, "target", t)

    @property
    def stream(self) -> GreedyStream:
        return _GREEDY.get(self.target)

    def contains(self, n):
        return self.stream.member(n)

    def count(self, N):
        return self.stream.count(check_horizon(N))

    def mask(self, lo, hi):
        return self.stream.mask(lo, hi)


@dataclass(frozen=True, eq=True)
class Predicate(SetExpr):
    """Opaque membership oracle.  The callable promises to be pure; results are cached."""

    name: str
    fn: Callable[[int], bool] = field(compare=False, hash=False, repr=False, default=None)
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def contains(self, n):
        try:
            return self._cache[n]
        except KeyError:
            pass
        if self.fn is None:
            raise EvaluationError(f"predicate {self.name!r} has no oracle bound")
        try:
            v = bool(self.fn(n))
        except Exception as exc:  # noqa: BLE001 - oracle errors are re-raised uniformly
            raise EvaluationError(f"predicate {self.name!r} failed at n={n}: {exc}") from exc
        self._cache[n] = v
        return v

    def mask(self, lo, hi):
        return np.fromiter((self.contains(n) for n in range(lo, hi)), dtype=bool, count=max(hi - lo, 0))


# ---------------------------------------------------------------------------
# derived sets


@dataclass(frozen=True, eq=True)
class Interleave(SetExpr):
    """Exactly one of ``{2k-1, 2k}`` is a member: ``2k`` iff ``k`` is in the base."""

    base: SetExpr

    fast_count = True

    def children(self):
        return (self.base,)

    def contains(self, n):
        if n % 2 == 0:
            return self.base.contains(n // 2)
        return not self.base.contains((n + 1) // 2)

    def count(self, N):
        N = check_horizon(N)
        c = N // 2
        if N % 2 and not self.base.contains((N + 1) // 2):
            c += 1
        return c

    def mask(self, lo, hi):
        if hi <= lo:
            return np.zeros(0, dtype=bool)
        ns = _arange(lo, hi)
        j = (ns + 1) // 2
        j_lo = int(j[0])
        base = self.base.mask(j_lo, int(j[-1]) + 1)[j - j_lo]
        return np.where(ns % 2 == 0, base, ~base)

    def structural_points(self, H):
        return sorted({2 * p for p in self.base.structural_points(H // 2)})


@dataclass(frozen=True, eq=True)
class Dilate(SetExpr):
    """``{k * n : n in inner}``."""

    k: int
    inner: SetExpr

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"dilation factor must be >= 1, got {self.k}")

    @property
    def fast_count(self):
        return self.inner.fast_count

    def children(self):
        return (self.inner,)

    def contains(self, n):
        return n % self.k == 0 and self.inner.contains(n // self.k)

    def count(self, N):
        N = check_horizon(N)
        return self.inner.count(N // self.k) if N >= self.k else 0

    def mask(self, lo, hi):
        out = np.zeros(max(hi - lo, 0), dtype=bool)
        j_lo = max(-(-lo // self.k), 1)
        j_hi = (hi - 1) // self.k
        if j_hi >= j_lo:
            out[self.k * j_lo - lo :: self.k] = self.inner.mask(j_lo, j_hi + 1)
        return out

    def structural_points(self, H):
        return [self.k * p for p in self.inner.structural_points(H // self.k)]


@dataclass(frozen=True, eq=True)
class Complement(SetExpr):
    inner: SetExpr

    @property
    def fast_count(self):
        return self.inner.fast_count

    def children(self):
        return (self.inner,)

    def contains(self, n):
        return not self.inner.contains(n)

    def count(self, N):
        N = check_horizon(N)
        return N - self.inner.count(N)

    def mask(self, lo, hi):
        return ~self.inner.mask(lo, hi)

    def structural_points(self, H):
        return self.inner.structural_points(H)


class _Binary(SetExpr):
    symbol = "?"

    def children(self):
        return (self.left, self.right)

    def structural_points(self, H):
        return sorted(set(self.left.structural_points(H)) | set(self.right.structural_points(H)))


@dataclass(frozen=True, eq=True)
class Union(_Binary):
    left: SetExpr
    right: SetExpr

    def contains(self, n):
        return self.left.contains(n) or self.right.contains(n)

    def mask(self, lo, hi):
        return self.left.mask(lo, hi) | self.right.mask(lo, hi)


@dataclass(frozen=True, eq=True)
class Intersection(_Binary):
    left: SetExpr
    right: SetExpr

    def contains(self, n):
        return self.left.contains(n) and self.right.contains(n)

    def mask(self, lo, hi):
        return self.left.mask(lo, hi) & self.right.mask(lo, hi)


@dataclass(frozen=True, eq=True)
class Difference(_Binary):
    left: SetExpr
    right: SetExpr

    def contains(self, n):
        return self.left.contains(n) and not self.right.contains(n)

    def mask(self, lo, hi):
        return self.left.mask(lo, hi) & ~self.right.mask(lo, hi)


@dataclass(frozen=True, eq=True)
class SymmDiff(_Binary):
    left: SetExpr
    right: SetExpr

    def contains(self, n):
        return self.left.contains(n) != self.right.contains(n)

    def mask(self, lo, hi):
        return self.left.mask(lo, hi) ^ self.right.mask(lo, hi)


class MidpointStream(MemoStream):
    """Lower set plus the 1st, 3rd, 5th, ... elements of upper minus lower."""

    def __init__(self, key):
        super().__init__()
        self.lower, self.upper = key
        self.parity = 0  # elements of upper \ lower seen so far, mod 2

    def _fill(self, lo, hi):
        low = self.lower.mask(lo, hi)
        gap = self.upper.mask(lo, hi) & ~low
        seen = self.parity + np.cumsum(gap, dtype=np.int64)
        self.parity = int(seen[-1] % 2) if len(seen) else self.parity
        return low | (gap & (seen % 2 == 1))


_MIDPOINTS = _Registry(MidpointStream)


@dataclass(frozen=True, eq=True)
class Midpoint(SetExpr):
    lower: SetExpr
    upper: SetExpr

    fast_count = True

    def children(self):
        return (self.lower, self.upper)

    @property
    def stream(self) -> MidpointStream:
        return _MIDPOINTS.get((self.lower, self.upper))

    def contains(self, n):
        return self.stream.member(n)

    def count(self, N):
        return self.stream.count(check_horizon(N))

    def mask(self, lo, hi):
        return self.stream.mask(lo, hi)

    def structural_points(self, H):
        return sorted(set(self.lower.structural_points(H)) | set(self.upper.structural_points(H)))


class NullModStream(MemoStream):
    """Decision stream of the null-modification pass over ``base``.

    Walking n = 1, 2, ...: a member n of ``base`` is kept unless keeping it
    lifts the kept partial average strictly above ``target``; then it is
    removed.  ``bits`` records kept members, ``removed_bits`` the rest.
    """

    def __init__(self, key):
        super().__init__()
        self.base, self.target = key
        self.removed_bits = np.zeros(0, dtype=bool)

    def _fill(self, lo, hi):
        kept = np.zeros(hi - lo, dtype=bool)
        removed = np.zeros(hi - lo, dtype=bool)
        num, den = self.target.numerator, self.target.denominator
        c = int(self.cum[-1]) if self.done else 0
        for n in (np.flatnonzero(self.base.mask(lo, hi)) + lo).tolist():
            if (c + 1) * den > n * num:
                removed[n - lo] = True
            else:
                kept[n - lo] = True
                c += 1
        self.removed_bits = np.concatenate([self.removed_bits, removed])
        return kept

    def removed_mask(self, lo, hi):
        if hi <= lo:
            return np.zeros(0, dtype=bool)
        self.ensure(hi - 1)
        a = max(lo, 1)
        out = self.removed_bits[a - 1 : hi - 1]
        if a > lo:
            out = np.concatenate([np.zeros(a - lo, dtype=bool), out])
        return out.copy()


_NULLMODS = _Registry(NullModStream)


@dataclass(frozen=True, eq=True)
class NullModPart(SetExpr):
    """One side of the null-modification split of ``base`` at ``target``.

    ``removed=False`` is the kept part A', ``removed=True`` the removed part F.
    """

    base: SetExpr
    target: Fraction
    removed: bool = False

    def __post_init__(self):
        t = Fraction(self.target)
        if not 0 <= t <= 1:
            raise ValueError(f"target must lie in [0, 1], got {t}")
        object.__setattr__(self, "target", t)

    @property
    def fast_count(self):
        return not self.removed

    @property
    def stream(self) -> NullModStream:
        return _NULLMODS.get((self.base, self.target))

    def children(self):
        return (self.base,)

    def contains(self, n):
        s = self.stream
        s.ensure(n)
        return bool(s.removed_bits[n - 1] if self.removed else s.bits[n - 1])

    def count(self, N):
        N = check_horizon(N)
        if self.removed:
            return stream_count(self, N)
        return self.stream.count(N)

    def mask(self, lo, hi):
        if self.removed:
            return self.stream.removed_mask(lo, hi)
        return self.stream.mask(lo, hi)

    def structural_points(self, H):
        return self.base.structural_points(H)


# ---------------------------------------------------------------------------
# counting


def segments(lo: int, hi: int, size: int = SEGMENT) -> Iterable[tuple[int, int]]:
    while lo < hi:
        nxt = min(lo + size, hi)
        yield lo, nxt
        lo = nxt


def stream_count(expr: SetExpr, N: int) -> int:
    """|expr ∩ {1..N}| by one streaming pass over membership masks."""
    N = check_horizon(N)
    return sum(int(np.count_nonzero(expr.mask(a, b))) for a, b in segments(1, N + 1))


def brute_count(expr: SetExpr, N: int) -> int:
    """Reference count through ``contains`` only."""
    return sum(1 for n in range(1, N + 1) if expr.contains(n))


def prefix_count(expr: SetExpr, N: int) -> int:
    return expr.count(check_horizon(N))


def contains(expr: SetExpr, n: int) -> bool:
    if n < 1:
        raise ValueError(f"membership is defined for n >= 1, got {n}")
    return expr.contains(n)


def counts_at(expr: SetExpr, horizons: Sequence[int]) -> list[int]:
    """Prefix counts at each (sorted) horizon, sharing a single pass when streaming."""
    hs = [check_horizon(h) for h in horizons]
    if not hs:
        return []
    if expr.fast_count:
        return [expr.count(h) for h in hs]
    order = sorted(range(len(hs)), key=hs.__getitem__)
    out = [0] * len(hs)
    total = 0
    i = 0
    for a, b in segments(1, hs[order[-1]] + 1):
        cum = np.cumsum(expr.mask(a, b), dtype=np.int64)
        while i < len(order) and hs[order[i]] < b:
            out[order[i]] = total + int(cum[hs[order[i]] - a])
            i += 1
        total += int(cum[-1])
    return out


@dataclass(frozen=True)
class SubsetResult:
    holds: bool
    horizon: int
    counterexample: int | None = None

    def __bool__(self):
        return self.holds


def subset_upto(a: SetExpr, b: SetExpr, N: int) -> SubsetResult:
    """Is ``a ∩ {1..N}`` contained in ``b``?  Reports the least violating n."""
    N = check_horizon(N)
    for lo, hi in segments(1, N + 1):
        bad = a.mask(lo, hi) & ~b.mask(lo, hi)
        if bad.any():
            return SubsetResult(False, N, lo + int(np.argmax(bad)))
    return SubsetResult(True, N)


def first_member(expr: SetExpr, after: int, limit: int) -> int | None:
    """Smallest n in (after, limit] belonging to expr."""
    for lo, hi in segments(after + 1, limit + 1):
        m = expr.mask(lo, hi)
        if m.any():
            return lo + int(np.argmax(m))
    return None


def members(expr: SetExpr, N: int) -> list[int]:
    return [int(x) + 1 for x in np.flatnonzero(expr.mask(1, N + 1))]


def walk(expr: SetExpr) -> Iterable[SetExpr]:
    yield expr
    for c in expr.children():
        yield from walk(c)
