"""Exact rational hard distributions and conjunction probabilities.

Every probability here is a ``fractions.Fraction``; floating point only
appears in the Monte Carlo modules.
"""

import itertools
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .boolfn import Bits

Support = Iterator[Tuple[Bits, Fraction]]


# -------------------------
# Conjunctions
# -------------------------

class Conjunction(BaseModel):
    """Signed literal set; serializes as "+3,-7,-12" with 0-based indices"""

    model_config = ConfigDict(frozen=True)

    positive: FrozenSet[int] = Field(default_factory=frozenset)
    negative: FrozenSet[int] = Field(default_factory=frozenset)

    @model_validator(mode="after")
    def _disjoint(self):
        clash = self.positive & self.negative
        if clash:
            raise ValueError(f"indices {sorted(clash)} appear with both signs")
        if any(i < 0 for i in self.positive | self.negative):
            raise ValueError("literal indices must be non-negative")
        return self

    @property
    def width(self) -> int:
        return len(self.positive) + len(self.negative)

    @property
    def indices(self) -> FrozenSet[int]:
        return self.positive | self.negative

    def literals(self) -> List[Tuple[int, int]]:
        """(index, required bit) pairs sorted by index"""
        lits = [(i, 1) for i in self.positive] + [(i, 0) for i in self.negative]
        return sorted(lits)

    def satisfied(self, bits: Sequence[int]) -> bool:
        return all(bits[i] == 1 for i in self.positive) and all(bits[i] == 0 for i in self.negative)

    def with_literal(self, index: int, bit: int) -> "Conjunction":
        if bit:
            return Conjunction(positive=self.positive | {index}, negative=self.negative)
        return Conjunction(positive=self.positive, negative=self.negative | {index})

    def block_split(self, m: int, n: int) -> List["Conjunction"]:
        """Split into n per-block conjunctions with block-local indices"""
        blocks = [[set(), set()] for _ in range(n)]
        for i in self.positive:
            blocks[i // m][0].add(i % m)
        for i in self.negative:
            blocks[i // m][1].add(i % m)
        return [Conjunction(positive=frozenset(p), negative=frozenset(q)) for p, q in blocks]

    def profile(self, m: int, n: int) -> List[Tuple[int, int]]:
        """Per-block (positive count, negative count)"""
        counts = [[0, 0] for _ in range(n)]
        for i in self.positive:
            counts[i // m][0] += 1
        for i in self.negative:
            counts[i // m][1] += 1
        return [(u, v) for u, v in counts]

    @classmethod
    def parse(cls, text: str) -> "Conjunction":
        """Parse "+3,-7" (an empty string or "true" is the empty conjunction)"""
        text = text.strip()
        if text in ("", "true"):
            return cls()
        positive, negative = set(), set()
        for token in text.split(","):
            token = token.strip()
            if len(token) < 2 or token[0] not in "+-" or not token[1:].isdigit():
                raise ValueError(f"bad literal '{token}', expected +i or -i")
            (positive if token[0] == "+" else negative).add(int(token[1:]))
        return cls(positive=frozenset(positive), negative=frozenset(negative))

    def __str__(self) -> str:
        return ",".join(f"{'+' if bit else '-'}{i}" for i, bit in self.literals())


def enumerate_conjunctions(arity: int, max_width: int) -> Iterator[Conjunction]:
    """Every conjunction of width <= max_width exactly once

    Order: width ascending, then index sets lexicographically, then sign
    patterns with "+" before "-" position by position.
    """
    for w in range(min(max_width, arity) + 1):
        for idx in itertools.combinations(range(arity), w):
            for signs in itertools.product((1, 0), repeat=w):
                yield Conjunction(
                    positive=frozenset(i for i, s in zip(idx, signs) if s),
                    negative=frozenset(i for i, s in zip(idx, signs) if not s),
                )


# -------------------------
# Slice probabilities
# -------------------------

@lru_cache(maxsize=None)
def conj_prob_slice(u: int, v: int, m: int, k: int) -> Fraction:
    """Probability that a width-(u+v) conjunction holds on a uniform weight-k string

    Args:
        u: positive literal count
        v: negative literal count
        m: string length
        k: Hamming weight

    Returns:
        Fraction: C(m-u-v, k-u) / C(m, k), zero when the binomial is invalid
    """
    free = m - u - v
    if free < 0 or k - u < 0 or k - u > free or not 0 <= k <= m:
        return Fraction(0)
    return Fraction(comb(free, k - u), comb(m, k))


def elementary_symmetric(values: Sequence[Fraction], top: Optional[int] = None) -> List[Fraction]:
    """e_0..e_top of the values by the usual O(len * top) recurrence"""
    top = len(values) if top is None else min(top, len(values))
    e = [Fraction(1)] + [Fraction(0)] * top
    for value in values:
        for k in range(top, 0, -1):
            e[k] += e[k - 1] * value
    return e


def _weight_strings(n: int, k: int) -> Iterator[Bits]:
    for ones in itertools.combinations(range(n), k):
        bits = [0] * n
        for i in ones:
            bits[i] = 1
        yield tuple(bits)


# -------------------------
# Distributions
# -------------------------

class Distribution(BaseModel):
    """Finite distribution over bit strings with exact conjunction probabilities"""

    model_config = ConfigDict(frozen=True)

    @property
    def arity(self) -> int:
        raise NotImplementedError

    def support(self) -> Support:
        raise NotImplementedError

    def conj_prob(self, conj: Conjunction) -> Fraction:
        return sum((p for bits, p in self.support() if conj.satisfied(bits)), Fraction(0))

    def conj_prob_bruteforce(self, conj: Conjunction) -> Fraction:
        return Distribution.conj_prob(self, conj)

    def probability(self, bits: Sequence[int]) -> Fraction:
        target = tuple(bits)
        return sum((p for x, p in self.support() if x == target), Fraction(0))


class SliceDistribution(Distribution):
    """Uniform over the C(m, k) strings of weight k"""

    m: int = Field(..., ge=1)
    k: int = Field(..., ge=0)

    @model_validator(mode="after")
    def _weight_in_range(self):
        if self.k > self.m:
            raise ValueError(f"weight {self.k} exceeds length {self.m}")
        return self

    @property
    def arity(self) -> int:
        return self.m

    def support(self) -> Support:
        p = Fraction(1, comb(self.m, self.k))
        for bits in _weight_strings(self.m, self.k):
            yield bits, p

    def conj_prob(self, conj: Conjunction) -> Fraction:
        return conj_prob_slice(len(conj.positive), len(conj.negative), self.m, self.k)

    def probability(self, bits: Sequence[int]) -> Fraction:
        if len(bits) != self.m or sum(bits) != self.k:
            return Fraction(0)
        return Fraction(1, comb(self.m, self.k))


class BlockProduct(Distribution):
    """Independent product of equal-length slice blocks"""

    blocks: Tuple[SliceDistribution, ...]

    @property
    def block_size(self) -> int:
        return self.blocks[0].m

    @property
    def arity(self) -> int:
        return sum(b.m for b in self.blocks)

    def support(self) -> Support:
        for parts in itertools.product(*(list(b.support()) for b in self.blocks)):
            p = Fraction(1)
            for _, q in parts:
                p *= q
            yield tuple(itertools.chain.from_iterable(x for x, _ in parts)), p

    def conj_prob(self, conj: Conjunction) -> Fraction:
        p = Fraction(1)
        for block, local in zip(self.blocks, conj.block_split(self.block_size, len(self.blocks))):
            p *= block.conj_prob(local)
            if not p:
                break
        return p


class OuterKind(str, Enum):
    """Outer law F over the block labels y"""
    WEIGHT = "weight"
    PARITY = "parity"
    UNIFORM = "uniform"


class OuterMixture(Distribution):
    """E_{y ~ F}[G_{y_1} x ... x G_{y_n}] for an outer law F on y"""

    n: int = Field(..., ge=1)
    g0: SliceDistribution
    g1: SliceDistribution
    kind: OuterKind
    param: int = 0

    @model_validator(mode="after")
    def _same_length(self):
        if self.g0.m != self.g1.m:
            raise ValueError("both block distributions must have the same length")
        if self.kind is OuterKind.WEIGHT and not 0 <= self.param <= self.n:
            raise ValueError(f"outer weight {self.param} outside [0, {self.n}]")
        return self

    @property
    def m(self) -> int:
        return self.g0.m

    @property
    def arity(self) -> int:
        return self.n * self.m

    def outer_support(self) -> Iterator[Tuple[Bits, Fraction]]:
        if self.kind is OuterKind.WEIGHT:
            p = Fraction(1, comb(self.n, self.param))
            for y in _weight_strings(self.n, self.param):
                yield y, p
            return
        ys = list(itertools.product((0, 1), repeat=self.n))
        if self.kind is OuterKind.PARITY:
            ys = [y for y in ys if sum(y) % 2 == self.param % 2]
        p = Fraction(1, len(ys))
        for y in ys:
            yield y, p

    def component(self, y: Bits) -> BlockProduct:
        return BlockProduct(blocks=tuple(self.g1 if b else self.g0 for b in y))

    def support(self) -> Support:
        merged: Dict[Bits, Fraction] = {}
        for y, w in self.outer_support():
            for x, p in self.component(y).support():
                merged[x] = merged.get(x, Fraction(0)) + w * p
        yield from merged.items()

    def block_probs(self, conj: Conjunction) -> List[Tuple[Fraction, Fraction]]:
        """Per block (C_i(G_0), C_i(G_1))"""
        return [
            (self.g0.conj_prob(local), self.g1.conj_prob(local))
            for local in conj.block_split(self.m, self.n)
        ]

    def conj_prob(self, conj: Conjunction) -> Fraction:
        pairs = self.block_probs(conj)
        if self.kind is OuterKind.UNIFORM:
            p = Fraction(1)
            for c0, c1 in pairs:
                p *= (c0 + c1) / 2
            return p
        if self.kind is OuterKind.PARITY:
            total, signed = Fraction(1), Fraction(1)
            for c0, c1 in pairs:
                total *= c0 + c1
                signed *= c0 - c1
            sign = -1 if self.param % 2 else 1
            return (total + sign * signed) / 2 ** self.n
        # weight class: [t^k] prod(c0 + c1 t) / C(n, k)
        poly = [Fraction(1)]
        for c0, c1 in pairs:
            nxt = [Fraction(0)] * (len(poly) + 1)
            for k, coeff in enumerate(poly):
                nxt[k] += coeff * c0
                nxt[k + 1] += coeff * c1
            poly = nxt
        return poly[self.param] / comb(self.n, self.param)

    def conj_prob_bruteforce(self, conj: Conjunction) -> Fraction:
        """Sum over the outer support of the product probabilities"""
        return sum(
            (w * self.component(y).conj_prob(conj) for y, w in self.outer_support()),
            Fraction(0),
        )


class ExplicitDistribution(Distribution):
    """Finite support with exact weights"""

    size: int = Field(..., ge=0)
    points: Tuple[Tuple[Bits, Fraction], ...]

    @model_validator(mode="after")
    def _normalized(self):
        total = sum((p for _, p in self.points), Fraction(0))
        if total != 1:
            raise ValueError(f"weights sum to {total}, not 1")
        if any(p < 0 for _, p in self.points):
            raise ValueError("weights must be non-negative")
        if any(len(x) != self.size for x, _ in self.points):
            raise ValueError(f"every point must have {self.size} bits")
        return self

    @property
    def arity(self) -> int:
        return self.size

    def support(self) -> Support:
        for x, p in self.points:
            if p:
                yield x, p

    @classmethod
    def from_weights(cls, weights: Dict[Bits, Fraction]) -> "ExplicitDistribution":
        points = tuple(sorted((tuple(x), Fraction(p)) for x, p in weights.items()))
        size = len(points[0][0]) if points else 0
        return cls(size=size, points=points)

    @classmethod
    def uniform(cls, inputs: Iterable[Bits]) -> "ExplicitDistribution":
        inputs = list(dict.fromkeys(tuple(x) for x in inputs))
        return cls.from_weights({x: Fraction(1, len(inputs)) for x in inputs})


AnyDistribution = Union[SliceDistribution, BlockProduct, OuterMixture, ExplicitDistribution]


def conj_prob(dist: Distribution, conj: Conjunction) -> Fraction:
    """C(D) for any distribution, exactly

    Raises:
        ValueError: a literal index lies outside the distribution's arity
    """
    if conj.indices and max(conj.indices) >= dist.arity:
        raise ValueError(f"conjunction {conj} exceeds arity {dist.arity}")
    return dist.conj_prob(conj)


def mix(components: Sequence[Tuple[Distribution, Fraction]]) -> ExplicitDistribution:
    """Exact mixture sum_j w_j D_j as an explicit distribution"""
    weights: Dict[Bits, Fraction] = {}
    for dist, w in components:
        for x, p in dist.support():
            weights[x] = weights.get(x, Fraction(0)) + Fraction(w) * p
    return ExplicitDistribution.from_weights({x: p for x, p in weights.items() if p})


# -------------------------
# Factories
# -------------------------

def gapmaj_slices(m: int) -> Tuple[SliceDistribution, SliceDistribution]:
    """(G_0, G_1): uniform on weight m/3 and on weight 2m/3"""
    if m % 3:
        raise ValueError(f"gapmaj slices need m divisible by 3, got {m}")
    return SliceDistribution(m=m, k=m // 3), SliceDistribution(m=m, k=2 * m // 3)


def gapor_slices(m: int) -> Tuple[SliceDistribution, SliceDistribution]:
    """(G_0, G_1): the all-zero string and uniform on weight m/2"""
    if m % 2:
        raise ValueError(f"gapor slices need m divisible by 2, got {m}")
    return SliceDistribution(m=m, k=0), SliceDistribution(m=m, k=m // 2)


def xor_hard_distribution(n: int, m: int, z: Optional[int] = None) -> OuterMixture:
    """D_z for xor o gapmaj: y uniform of parity z; z=None gives the average D"""
    g0, g1 = gapmaj_slices(m)
    if z is None:
        return OuterMixture(n=n, g0=g0, g1=g1, kind=OuterKind.UNIFORM)
    return OuterMixture(n=n, g0=g0, g1=g1, kind=OuterKind.PARITY, param=z)


def maj_hard_distribution(n: int, m: int, zeta: int) -> OuterMixture:
    """D_zeta for maj o gapor: y uniform of weight n/2 - 1 + zeta"""
    if n % 2:
        raise ValueError(f"maj hard distribution needs even n, got {n}")
    g0, g1 = gapor_slices(m)
    return OuterMixture(n=n, g0=g0, g1=g1, kind=OuterKind.WEIGHT, param=n // 2 - 1 + zeta)
