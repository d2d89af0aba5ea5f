"""Exact verification of the hard-distribution inequalities and certificate extraction.

Every check runs in rational arithmetic. Comparisons that involve square
roots are made between squares of nonnegative rationals. A failed hard
check raises ``VerificationError`` carrying the check id and a witness; a
passing sweep returns a ``CheckRecord``.
"""

import itertools
import logging
import math
from collections import Counter
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import comb, prod
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .boolfn import ABORT, Bits
from .distributions import (
    Conjunction,
    Distribution,
    ExplicitDistribution,
    conj_prob,
    conj_prob_slice,
    elementary_symmetric,
    enumerate_conjunctions,
    gapmaj_slices,
    gapor_slices,
    maj_hard_distribution,
    xor_hard_distribution,
)
from .dtree import DeterministicTree, RandomizedTree, leaf, query
from .errors import CertificateError, FunctionSpecError, PremiseError, VerificationError
from .reports import CheckId, CheckRecord, check_record

logger = logging.getLogger(__name__)


# -------------------------
# Helpers
# -------------------------

def _representative(u: int, v: int, offset: int = 0) -> Conjunction:
    """Canonical conjunction with u positive then v negative literals from ``offset``"""
    return Conjunction(
        positive=frozenset(range(offset, offset + u)),
        negative=frozenset(range(offset + u, offset + u + v)),
    )


def _slice_profiles(m: int, max_width: int) -> Iterator[Tuple[int, int, int]]:
    """(u, v, number of conjunctions with that profile) for u + v <= max_width"""
    for w in range(min(max_width, m) + 1):
        for u in range(w + 1):
            yield u, w - u, comb(m, w) * comb(w, u)


def _block_profiles(n: int, m: int, max_width: int) -> Iterator[Tuple[Tuple[int, int], ...]]:
    """Per-block (u, v) multisets with total width <= max_width, in sorted order

    Both hard mixtures are invariant under block permutations, so one
    sorted representative stands for all of its orderings.
    """
    options = [(u, w - u) for w in range(min(m, max_width) + 1) for u in range(w + 1)]
    for profile in itertools.combinations_with_replacement(options, n):
        if sum(u + v for u, v in profile) <= max_width:
            yield profile


def _profile_conjunction(profile: Sequence[Tuple[int, int]], m: int) -> Conjunction:
    positive, negative = set(), set()
    for i, (u, v) in enumerate(profile):
        rep = _representative(u, v, i * m)
        positive |= rep.positive
        negative |= rep.negative
    return Conjunction(positive=frozenset(positive), negative=frozenset(negative))


def _profile_multiplicity(profile: Sequence[Tuple[int, int]], m: int) -> int:
    orderings = math.factorial(len(profile))
    for count in Counter(profile).values():
        orderings //= math.factorial(count)
    return orderings * prod(comb(m, u + v) * comb(u + v, u) for u, v in profile)


def _random_conjunction(rng: np.random.Generator, arity: int, max_width: int) -> Conjunction:
    width = int(rng.integers(0, max_width + 1))
    positions = rng.choice(arity, size=width, replace=False)
    signs = rng.integers(0, 2, size=width)
    return Conjunction(
        positive=frozenset(int(i) for i, s in zip(positions, signs) if s),
        negative=frozenset(int(i) for i, s in zip(positions, signs) if not s),
    )


def regime_width(n: int, divisor: int) -> int:
    """floor(n log2 n / divisor)"""
    return int(n * math.log2(n) // divisor) if n > 1 else 0


# -------------------------
# Slice facts
# -------------------------

def verify_gapmaj_ratio(m: int, max_width: int) -> CheckRecord:
    """C(G_z) <= 3^w C(G_{1-z}) for every conjunction of width w <= min(max_width, m/7)

    The slice probabilities depend only on the (positive, negative)
    literal counts, so the sweep runs over those profiles and reports how
    many conjunctions each one stands for.
    """
    if m % 3:
        raise FunctionSpecError(f"gapmaj requires m divisible by 3, got m={m}")
    width = min(max_width, m // 7)
    slices = gapmaj_slices(m)
    worst: Optional[Tuple[Fraction, int, int, int]] = None
    instances = 0
    for u, v, count in _slice_profiles(m, width):
        w = u + v
        for z in (0, 1):
            num = conj_prob_slice(u, v, m, slices[z].k)
            den = conj_prob_slice(u, v, m, slices[1 - z].k)
            if num > 3 ** w * den:
                raise VerificationError(
                    CheckId.GAPMAJ_RATIO.value,
                    f"ratio bound fails for m={m}",
                    witness={"conjunction": str(_representative(u, v)), "z": z, "num": num, "den": den},
                )
            if den and (worst is None or num / den > worst[0]):
                worst = (num / den, u, v, z)
        instances += 2 * count
    ratio, u, v, z = worst
    return check_record(
        CheckId.GAPMAJ_RATIO.value,
        {"m": m, "max_width": width},
        instances=instances,
        witness={"max_ratio": ratio, "conjunction": str(_representative(u, v)), "z": z, "bound": 3 ** (u + v)},
    )


def verify_slice_formula(m: int) -> CheckRecord:
    """Closed-form slice probabilities agree with enumeration for every conjunction and weight"""
    if m > 12:
        raise PremiseError(f"slice enumeration is limited to m <= 12, got m={m}")
    strings = np.array(list(itertools.product((0, 1), repeat=m)), dtype=np.int8)
    weights = strings.sum(axis=1)
    instances = 0
    for conj in enumerate_conjunctions(m, m):
        mask = np.ones(len(strings), dtype=bool)
        for i in conj.positive:
            mask &= strings[:, i] == 1
        for i in conj.negative:
            mask &= strings[:, i] == 0
        counts = np.bincount(weights[mask], minlength=m + 1)
        for k in range(m + 1):
            counted = Fraction(int(counts[k]), comb(m, k))
            formula = conj_prob_slice(len(conj.positive), len(conj.negative), m, k)
            if counted != formula:
                raise VerificationError(
                    CheckId.SLICE_FORMULA.value,
                    f"formula disagrees with enumeration at m={m}, k={k}",
                    witness={"conjunction": str(conj), "counted": counted, "formula": formula},
                )
            instances += 1
    return check_record(CheckId.SLICE_FORMULA.value, {"m": m}, instances=instances)


def verify_gapor_facts(m: int, max_width: int) -> CheckRecord:
    """(i) C(G_0) is 0 or 1, and 0 exactly with a positive literal; (ii) C(G_1) >= 3^-w for all-negative C with w <= m/4"""
    if m % 2:
        raise FunctionSpecError(f"gapor requires m divisible by 2, got m={m}")
    g0, g1 = gapor_slices(m)
    instances = 0
    for u, v, count in _slice_profiles(m, max_width):
        c0 = conj_prob_slice(u, v, m, g0.k)
        if c0 not in (0, 1) or (c0 == 0) != (u > 0):
            raise VerificationError(
                CheckId.GAPOR_SLICES.value,
                f"C(G_0) = {c0} for a conjunction with {u} positive literals",
                witness={"conjunction": str(_representative(u, v)), "c0": c0},
            )
        instances += count
    tightest: Optional[Tuple[Fraction, int]] = None
    for v in range(m // 4 + 1):
        c1 = conj_prob_slice(0, v, m, g1.k)
        if c1 * 3 ** v < 1:
            raise VerificationError(
                CheckId.GAPOR_SLICES.value,
                f"C(G_1) = {c1} < 3^-{v}",
                witness={"conjunction": str(_representative(0, v)), "c1": c1},
            )
        slack = c1 * 3 ** v
        if tightest is None or slack < tightest[0]:
            tightest = (slack, v)
        instances += comb(m, v)
    return check_record(
        CheckId.GAPOR_SLICES.value,
        {"m": m, "max_width": max_width, "negative_width": m // 4},
        instances=instances,
        witness={"min_c1_times_3w": tightest[0], "width": tightest[1]},
    )


# -------------------------
# XOR o GAPMAJ
# -------------------------

class FourierBlockDecomposition(BaseModel):
    """Per-block coefficients a_i with C_i(G_y) = (1 + a_i (-1)^y) C_i(G)"""

    model_config = ConfigDict(frozen=True)

    n: int
    m: int
    width: int
    coefficients: Tuple[Fraction, ...]
    bases: Tuple[Fraction, ...]
    c_d: Fraction
    c_d0: Fraction
    c_d1: Fraction
    product: Fraction
    in_regime: bool
    product_bounded: bool
    trichotomy: bool
    enumerated: bool


@lru_cache(maxsize=None)
def _parity_character_mean(n: int, s: int, z: int) -> Fraction:
    """E[chi_S(y)] for |S| = s and y uniform over strings of parity z, by counting"""
    outside = n - s
    total = 0
    for j in range(s + 1):
        if outside:
            ways_out = 2 ** (outside - 1)
        else:
            ways_out = 1 if (z - j) % 2 == 0 else 0
        total += (-1) ** j * comb(s, j) * ways_out
    return Fraction(total, 2 ** (n - 1))


def xor_fourier_check(n: int, m: int, conj: Conjunction, enumerate_mixture: Optional[bool] = None) -> FourierBlockDecomposition:
    """Compute C(D_1) three ways and assert they agree exactly

    (a) the mixture sum over y of odd parity (when enumerate_mixture, by
    default for n <= 12), (b) C(D)(1 - prod a_i), (c) the character
    expansion sum_S prod_{i in S} a_i E[chi_S]. Also asserts
    C(D_0) = C(D)(1 + prod a_i) and, for blocks of width <= m/7,
    |a_i| <= (3^w - 1)/(3^w + 1). Inside the width regime the product
    bound and the two-thirds/four-thirds trichotomy are hard checks.

    Raises:
        VerificationError: any identity or in-regime bound fails
    """
    check = CheckId.XOR_FOURIER.value
    d1 = xor_hard_distribution(n, m, 1)
    d0 = xor_hard_distribution(n, m, 0)
    average = xor_hard_distribution(n, m)
    pairs = d1.block_probs(conj)

    coefficients, bases = [], []
    for i, (c0, c1) in enumerate(pairs):
        base = (c0 + c1) / 2
        a = (c0 - c1) / (c0 + c1) if c0 + c1 else Fraction(0)
        for y, cy in ((0, c0), (1, c1)):
            if cy != (1 + a * (-1) ** y) * base:
                raise VerificationError(check, f"block {i} does not factor", witness={"conjunction": str(conj), "block": i})
        coefficients.append(a)
        bases.append(base)

    c_d = prod(bases, start=Fraction(1))
    product = prod(coefficients, start=Fraction(1))
    closed1 = c_d * (1 - product)
    closed0 = c_d * (1 + product)
    witness = {"conjunction": str(conj), "n": n, "m": m}

    if d1.conj_prob(conj) != closed1 or d0.conj_prob(conj) != closed0:
        raise VerificationError(check, "parity mixture disagrees with C(D)(1 -+ prod a_i)", witness=witness)
    if average.conj_prob(conj) != c_d:
        raise VerificationError(check, "average mixture differs from the product of block averages", witness=witness)

    e = elementary_symmetric(coefficients)
    expanded = c_d * sum((e[s] * _parity_character_mean(n, s, 1) for s in range(n + 1)), Fraction(0))
    if expanded != closed1:
        raise VerificationError(check, "character expansion disagrees with the closed form", witness=witness)

    enumerate_mixture = n <= 12 if enumerate_mixture is None else enumerate_mixture
    if enumerate_mixture and d1.conj_prob_bruteforce(conj) != closed1:
        raise VerificationError(check, "mixture enumeration disagrees with the closed form", witness=witness)

    for i, (local, a) in enumerate(zip(conj.block_split(m, n), coefficients)):
        w = local.width
        if 7 * w <= m and abs(a) * (3 ** w + 1) > 3 ** w - 1:
            raise VerificationError(check, f"|a_{i}| = {abs(a)} exceeds the width-{w} bound", witness=witness)

    in_regime = conj.width <= regime_width(n, 14) and m >= math.log2(n)
    product_bounded = abs(product) <= Fraction(1, 4)
    trichotomy = c_d == 0 or Fraction(2, 3) * c_d < closed1 < Fraction(4, 3) * c_d
    if in_regime and not (product_bounded and trichotomy):
        raise VerificationError(check, "in-regime conjunction breaks the product bound or trichotomy", witness=witness)

    return FourierBlockDecomposition(
        n=n,
        m=m,
        width=conj.width,
        coefficients=tuple(coefficients),
        bases=tuple(bases),
        c_d=c_d,
        c_d0=closed0,
        c_d1=closed1,
        product=product,
        in_regime=in_regime,
        product_bounded=product_bounded,
        trichotomy=trichotomy,
        enumerated=enumerate_mixture,
    )


def sweep_xor_profiles(n: int, m: int, max_width: int) -> CheckRecord:
    """Every per-block literal profile of total width <= max_width, all paths compared"""
    profiles = 0
    instances = 0
    for profile in _block_profiles(n, m, max_width):
        xor_fourier_check(n, m, _profile_conjunction(profile, m), enumerate_mixture=True)
        profiles += 1
        instances += _profile_multiplicity(profile, m)
    return check_record(
        CheckId.XOR_FOURIER.value,
        {"n": n, "m": m, "max_width": max_width, "mode": "exhaustive"},
        instances=instances,
        witness={"profiles": profiles},
    )


def sweep_xor_random(n: int, m: int, samples: int, seed: int, max_width: Optional[int] = None) -> CheckRecord:
    """Seeded random conjunctions of width <= floor(n log n / 14) by default"""
    max_width = regime_width(n, 14) if max_width is None else max_width
    rng = np.random.default_rng(seed)
    largest = Fraction(0)
    outside = 0
    for _ in range(samples):
        decomposition = xor_fourier_check(n, m, _random_conjunction(rng, n * m, max_width))
        largest = max(largest, abs(decomposition.product))
        if not decomposition.in_regime and not (decomposition.product_bounded and decomposition.trichotomy):
            outside += 1
    notes = [f"{outside} outside-regime samples miss the trichotomy"] if outside else []
    return check_record(
        CheckId.XOR_FOURIER.value,
        {"n": n, "m": m, "max_width": max_width, "samples": samples, "seed": seed, "mode": "random"},
        instances=samples,
        witness={"max_abs_product": largest},
        notes=notes,
    )


# -------------------------
# MAJ o GAPOR
# -------------------------

class MajVerdict(str, Enum):
    """Which branch of the three-way conclusion holds"""
    D1_ZERO = "c(d1)=0"
    D0_LARGE = "c(d0)>c(d1)/3"
    D2_LARGE = "c(d2)>4c(d1)/3"
    NONE = "none"


class MajCaseDecomposition(BaseModel):
    """C(D_zeta) = p_zeta * c_B * q_zeta and the resampling quantities around it"""

    model_config = ConfigDict(frozen=True)

    n: int
    A: Tuple[int, ...]
    B: Tuple[int, ...]
    c: Tuple[Fraction, ...]
    c_B: Fraction
    p: Tuple[Fraction, Fraction, Fraction]
    q: Tuple[Optional[Fraction], Optional[Fraction], Optional[Fraction]]
    s: Optional[int] = None
    q2_star: Optional[Fraction] = None
    q2_err: Optional[Fraction] = None
    probs: Tuple[Fraction, Fraction, Fraction]
    verdict: MajVerdict
    q1_bound_hypothesis: bool
    in_regime: bool = False
    flags: Dict[str, bool] = Field(default_factory=dict)


def _subset_moments(values: Sequence[Fraction], top: int) -> Tuple[List[Fraction], List[Fraction], List[Fraction]]:
    """For each size j <= top: sums over j-subsets S of c_S, c_S*sigma_S and c_S*sigma_S^2"""
    m0 = [Fraction(1)] + [Fraction(0)] * top
    m1 = [Fraction(0)] * (top + 1)
    m2 = [Fraction(0)] * (top + 1)
    for c in values:
        for j in range(top, 0, -1):
            m2[j] += c * (m2[j - 1] + 2 * c * m1[j - 1] + c * c * m0[j - 1])
            m1[j] += c * (m1[j - 1] + c * m0[j - 1])
            m0[j] += c * m0[j - 1]
    return m0, m1, m2


def _verdict(probs: Sequence[Fraction]) -> MajVerdict:
    d0, d1, d2 = probs
    if d1 == 0:
        return MajVerdict.D1_ZERO
    if 3 * d0 > d1:
        return MajVerdict.D0_LARGE
    if 3 * d2 > 4 * d1:
        return MajVerdict.D2_LARGE
    return MajVerdict.NONE


def maj_decompose(n: int, B: Sequence[int], c: Sequence[Fraction]) -> MajCaseDecomposition:
    """Case analysis for an abstract instance: blocks B force y_i = 1, c_i = C_i(G_1)

    Raises:
        VerificationError: an identity or inequality the argument relies on fails
    """
    check = CheckId.MAJ_CASES.value
    if n % 2:
        raise FunctionSpecError(f"maj requires an even n, got n={n}")
    half = n // 2
    B = tuple(sorted(set(B)))
    A = tuple(i for i in range(n) if i not in B)
    c = tuple(Fraction(x) for x in c)
    b = len(B)
    witness = {"n": n, "B": B, "c": c}

    c_B = prod((c[i] for i in B), start=Fraction(1))
    c_A = [c[i] for i in A]
    sizes = [half - 1 + zeta for zeta in range(3)]
    p = tuple(Fraction(comb(n - b, k - b), comb(n, k)) if k >= b else Fraction(0) for k in sizes)

    top = min(len(A), half + 1 - b) if b <= half + 1 else 0
    m0, m1, m2 = _subset_moments(c_A, max(top, 0))
    q: List[Optional[Fraction]] = []
    for k, pz in zip(sizes, p):
        q.append(m0[k - b] / comb(len(A), k - b) if pz else None)
    probs = tuple(pz * c_B * qz if qz is not None else Fraction(0) for pz, qz in zip(p, q))

    if p[0] * half != (half - b) * p[1] or p[1] * (half + 1) != (half + 1 - b) * p[2]:
        raise VerificationError(check, "hypergeometric ratio identities fail", witness=witness)

    flags: Dict[str, bool] = {}
    hypothesis = False
    if q[1] is not None and len(c_A) >= half:
        smallest = sorted(c_A)[:half]
        positive = sum(1 for x in c_A if x > 0)
        hypothesis = (sum(smallest, Fraction(0)) / half) ** 2 * n >= 1 and positive >= half - b
    if hypothesis:
        if not (q[1] > 0 and q[1] ** 2 <= n * q[2] ** 2):
            raise VerificationError(check, "0 < q_1 <= sqrt(n) q_2 fails under its hypothesis", witness=witness)

    s = q2_star = q2_err = None
    if b < half:
        s = half - 1 - b
        gap = len(A) - s
        sigma = sum(c_A, Fraction(0))
        q2_star = (sigma ** 2 * m0[s] - 2 * sigma * m1[s] + m2[s]) / (comb(len(A), s) * gap ** 2)
        q2_err = m1[s + 1] / (comb(len(A), s + 1) * (s + 1))
        resampled_q1 = (sigma * m0[s] - m1[s]) / (comb(len(A), s) * gap)
        if resampled_q1 != q[1]:
            raise VerificationError(check, "q_1 differs between subset and resampling views", witness=witness)
        if q2_star != (1 - Fraction(1, gap)) * q[2] + q2_err / gap:
            raise VerificationError(check, "q2* mixture identity fails", witness=witness)
        if q2_err > q[1]:
            raise VerificationError(check, "q2_err exceeds q_1", witness=witness)
        if q[1] > 0 and q2_star * q[0] < q[1] ** 2:
            raise VerificationError(check, "q2*/q_1 >= q_1/q_0 fails", witness=witness)
        if 2 * p[0] * p[2] < p[1] ** 2:
            raise VerificationError(check, "p_0/p_1 >= p_1/(2 p_2) fails", witness=witness)
        flags["q2_at_least_nine_tenths_q2_star"] = 10 * q[2] >= 9 * q2_star
    elif b == half:
        flags["half_plus_one_over_root_n_exceeds_four_thirds"] = 9 * (half + 1) ** 2 > 16 * n

    return MajCaseDecomposition(
        n=n,
        A=A,
        B=B,
        c=c,
        c_B=c_B,
        p=p,
        q=tuple(q),
        s=s,
        q2_star=q2_star,
        q2_err=q2_err,
        probs=probs,
        verdict=_verdict(probs),
        q1_bound_hypothesis=hypothesis,
        flags=flags,
    )


def _weight_mixture_bruteforce(n: int, pairs: Sequence[Tuple[Fraction, Fraction]], k: int) -> Fraction:
    total = Fraction(0)
    for ones in itertools.combinations(range(n), k):
        chosen = set(ones)
        total += prod((c1 if i in chosen else c0 for i, (c0, c1) in enumerate(pairs)), start=Fraction(1))
    return total / comb(n, k)


def maj_case_analysis(n: int, m: int, conj: Conjunction, enumerate_mixture: Optional[bool] = None) -> MajCaseDecomposition:
    """Partition blocks by C_i(G_0), factor C(D_zeta) and classify the conclusion

    The factorization is compared with the weight-class DP of the mixture
    and, when enumerate_mixture (default n <= 8), with a sum over y. An
    in-regime conjunction where no branch holds is a failure; outside the
    regime it is logged as a candidate.
    """
    check = CheckId.MAJ_CASES.value
    if n % 2 or m % 2:
        raise FunctionSpecError(f"maj o gapor needs even n and m, got n={n}, m={m}")
    g0, g1 = gapor_slices(m)
    blocks = conj.block_split(m, n)
    pairs = [(g0.conj_prob(blk), g1.conj_prob(blk)) for blk in blocks]
    B = [i for i, (c0, _) in enumerate(pairs) if c0 == 0]
    decomposition = maj_decompose(n, B, [c1 for _, c1 in pairs])
    witness = {"conjunction": str(conj), "n": n, "m": m}

    enumerate_mixture = n <= 8 if enumerate_mixture is None else enumerate_mixture
    for zeta in range(3):
        expected = decomposition.probs[zeta]
        if maj_hard_distribution(n, m, zeta).conj_prob(conj) != expected:
            raise VerificationError(check, f"factorization differs from the weight DP at zeta={zeta}", witness=witness)
        if enumerate_mixture and _weight_mixture_bruteforce(n, pairs, n // 2 - 1 + zeta) != expected:
            raise VerificationError(check, f"factorization differs from enumeration at zeta={zeta}", witness=witness)

    in_regime = conj.width <= regime_width(n, 16) and m >= math.log2(n)
    if decomposition.verdict is MajVerdict.NONE:
        if in_regime:
            raise VerificationError(check, "no branch of the conclusion holds", witness=witness)
        logger.warning("outside-regime counterexample candidate: %s (n=%d, m=%d)", conj, n, m)
    return decomposition.model_copy(update={"in_regime": in_regime})


def sweep_maj_profiles(n: int, m: int, max_width: Optional[int] = None) -> CheckRecord:
    """Every per-block literal profile, factorization against enumeration"""
    max_width = n * m if max_width is None else max_width
    profiles = instances = candidates = 0
    for profile in _block_profiles(n, m, max_width):
        decomposition = maj_case_analysis(n, m, _profile_conjunction(profile, m), enumerate_mixture=True)
        candidates += decomposition.verdict is MajVerdict.NONE
        profiles += 1
        instances += _profile_multiplicity(profile, m)
    return check_record(
        CheckId.MAJ_CASES.value,
        {"n": n, "m": m, "max_width": max_width, "mode": "exhaustive"},
        instances=instances,
        witness={"profiles": profiles, "outside_regime_candidates": candidates},
    )


def sweep_maj_random(n: int, m: int, samples: int, seed: int, max_width: Optional[int] = None) -> CheckRecord:
    """Seeded random conjunctions of width <= floor(n log n / 16) by default"""
    max_width = regime_width(n, 16) if max_width is None else max_width
    rng = np.random.default_rng(seed)
    verdicts: Dict[str, int] = {}
    for _ in range(samples):
        decomposition = maj_case_analysis(n, m, _random_conjunction(rng, n * m, max_width))
        verdicts[decomposition.verdict.value] = verdicts.get(decomposition.verdict.value, 0) + 1
    return check_record(
        CheckId.MAJ_CASES.value,
        {"n": n, "m": m, "max_width": max_width, "samples": samples, "seed": seed, "mode": "random"},
        instances=samples,
        witness={"verdicts": dict(sorted(verdicts.items()))},
    )


def sweep_maj_instances(n: int, samples: int, seed: int) -> CheckRecord:
    """Seeded random abstract (B, c) instances"""
    rng = np.random.default_rng(seed)
    hypothesis = 0
    for _ in range(samples):
        size = int(rng.integers(0, n + 1))
        B = [int(i) for i in rng.choice(n, size=size, replace=False)]
        c = [Fraction(int(rng.integers(0, 11)), 10) for _ in range(n)]
        decomposition = maj_decompose(n, B, c)
        hypothesis += decomposition.q1_bound_hypothesis
    return check_record(
        CheckId.MAJ_CASES.value,
        {"n": n, "samples": samples, "seed": seed, "mode": "instances"},
        instances=samples,
        witness={"q1_bound_hypothesis_held": hypothesis},
    )


# -------------------------
# Symmetric inequality
# -------------------------

def verify_sym_inequality(alphas: Sequence[Fraction], betas: Sequence[Fraction]) -> bool:
    """sum(a b^2)/sum(a b) >= sum(a b)/sum(a), compared with denominators cleared

    Raises:
        PremiseError: negative entries, length mismatch or every a_k b_k = 0
    """
    if len(alphas) != len(betas):
        raise PremiseError("alpha and beta must have the same length")
    if any(x < 0 for x in list(alphas) + list(betas)):
        raise PremiseError("entries must be nonnegative")
    if not any(a * b > 0 for a, b in zip(alphas, betas)):
        raise PremiseError("some alpha_k * beta_k must be positive")
    s0 = sum(alphas, Fraction(0))
    s1 = sum((a * b for a, b in zip(alphas, betas)), Fraction(0))
    s2 = sum((a * b * b for a, b in zip(alphas, betas)), Fraction(0))
    return s0 * s2 >= s1 * s1


def sweep_sym_inequality(samples: int, seed: int, length: int = 8) -> CheckRecord:
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        alphas = [Fraction(int(rng.integers(0, 20)), int(rng.integers(1, 10))) for _ in range(length)]
        betas = [Fraction(int(rng.integers(0, 20)), int(rng.integers(1, 10))) for _ in range(length)]
        k = int(rng.integers(0, length))
        alphas[k] += 1
        betas[k] += 1
        if not verify_sym_inequality(alphas, betas):
            raise VerificationError(
                CheckId.SYM_INEQUALITY.value, "inequality fails", witness={"alphas": alphas, "betas": betas}
            )
    return check_record(
        CheckId.SYM_INEQUALITY.value, {"samples": samples, "seed": seed, "length": length}, instances=samples
    )


# -------------------------
# Outcome selection
# -------------------------

class Outcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    key: str
    prob: Fraction
    p0: Fraction
    p1: Fraction
    p2: Fraction


class OutcomeTable(BaseModel):
    """Finite outcomes with probabilities and three nonnegative values each"""

    model_config = ConfigDict(frozen=True)

    outcomes: Tuple[Outcome, ...]

    @model_validator(mode="after")
    def _valid(self):
        if sum((o.prob for o in self.outcomes), Fraction(0)) != 1:
            raise ValueError("outcome probabilities must sum to 1")
        if any(min(o.prob, o.p0, o.p1, o.p2) < 0 for o in self.outcomes):
            raise ValueError("probabilities and values must be nonnegative")
        return self

    def expectation(self, attribute: str) -> Fraction:
        return sum((o.prob * getattr(o, attribute) for o in self.outcomes), Fraction(0))


class Selection(BaseModel):
    """The chosen outcome and the proof's partition of the positive outcomes"""

    outcome: Outcome
    W: Tuple[str, ...]
    U: Tuple[str, ...]
    V: Tuple[str, ...]


def _within_delta(lower: Fraction, upper: Fraction, eps: Fraction) -> bool:
    """lower <= 2 sqrt(eps) * upper for nonnegative lower, upper"""
    return lower * lower <= 4 * eps * upper * upper


def select_outcome(table: OutcomeTable, eps: Fraction) -> Selection:
    """An outcome with P_0 <= d P_1, P_2 <= (1+d) P_1 and P_1 > 0, d = 2 sqrt(eps)

    Raises:
        PremiseError: eps outside (0, 1/10] or an expectation premise fails
        VerificationError: no outcome qualifies although the premises hold
    """
    eps = Fraction(eps)
    if not 0 < eps <= Fraction(1, 10):
        raise PremiseError(f"eps must lie in (0, 1/10], got {eps}")
    e0, e1, e2 = (table.expectation(a) for a in ("p0", "p1", "p2"))
    if e0 > eps or e1 < 1 - eps or e2 > 1:
        raise PremiseError(f"expectation premises fail: E[P0]={e0}, E[P1]={e1}, E[P2]={e2}")
    W, U, V = [], [], []
    chosen = None
    for o in table.outcomes:
        if o.p1 <= 0:
            continue
        W.append(o.key)
        if not _within_delta(o.p0, o.p1, eps):
            U.append(o.key)
        elif o.p2 > o.p1 and not _within_delta(o.p2 - o.p1, o.p1, eps):
            V.append(o.key)
        elif chosen is None:
            chosen = o
    if chosen is None:
        raise VerificationError(
            CheckId.OUTCOME_SELECTION.value,
            "no outcome qualifies under valid premises",
            witness={"eps": eps, "W": W, "U": U, "V": V},
        )
    return Selection(outcome=chosen, W=tuple(W), U=tuple(U), V=tuple(V))


def random_outcome_table(rng: np.random.Generator, eps: Fraction, size: int = 6) -> OutcomeTable:
    """A table meeting the premises exactly, values rescaled to hit the expectation bounds"""
    probs = [Fraction(int(rng.integers(1, 10))) for _ in range(size)]
    total = sum(probs)
    probs = [p / total for p in probs]

    def scaled(target: Fraction) -> List[Fraction]:
        raw = [Fraction(int(rng.integers(0, 10))) for _ in range(size)]
        raw[int(rng.integers(0, size))] += 1
        mean = sum((p * r for p, r in zip(probs, raw)), Fraction(0))
        return [r * target / mean for r in raw]

    p0 = scaled(eps * Fraction(int(rng.integers(0, 11)), 10))
    p1 = scaled(1 - eps * Fraction(int(rng.integers(0, 11)), 10))
    p2 = scaled(Fraction(int(rng.integers(1, 11)), 10))
    return OutcomeTable(outcomes=tuple(
        Outcome(key=str(k), prob=probs[k], p0=p0[k], p1=p1[k], p2=p2[k]) for k in range(size)
    ))


def sweep_outcome_selection(samples: int, seed: int) -> CheckRecord:
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        eps = Fraction(int(rng.integers(1, 11)), 100)
        select_outcome(random_outcome_table(rng, eps), eps)
    return check_record(CheckId.OUTCOME_SELECTION.value, {"samples": samples, "seed": seed}, instances=samples)


# -------------------------
# Certificate extraction
# -------------------------

class PostselectionCertificate(BaseModel):
    """Conjunction C and label z with eps C(D_z) >= (1-eps) C(D_{1-z}) and C(D_z) > 0"""

    model_config = ConfigDict(frozen=True)

    conjunction: Conjunction
    z: int
    p_z: Fraction
    p_other: Fraction
    epsilon: Fraction

    @property
    def width(self) -> int:
        return self.conjunction.width

    def holds(self) -> bool:
        return self.p_z > 0 and self.epsilon * self.p_z >= (1 - self.epsilon) * self.p_other


class WappCertificate(BaseModel):
    """Conjunction C with C(D_0) <= d C(D_1), C(D_2) <= (1+d) C(D_1), C(D_1) > 0, d = 2 sqrt(eps)"""

    model_config = ConfigDict(frozen=True)

    conjunction: Conjunction
    p0: Fraction
    p1: Fraction
    p2: Fraction
    epsilon: Fraction

    def holds(self) -> bool:
        return (
            self.p1 > 0
            and _within_delta(self.p0, self.p1, self.epsilon)
            and (self.p2 <= self.p1 or _within_delta(self.p2 - self.p1, self.p1, self.epsilon))
        )


def check_postselection_premise(rt: RandomizedTree, d0: Distribution, d1: Distribution, eps: Fraction) -> None:
    """Error <= eps < 1/2 conditioned on not aborting, on both supports

    Raises:
        PremiseError: eps outside [0, 1/2), or some support input is always aborted or errs too often
    """
    if not 0 <= eps < Fraction(1, 2):
        raise PremiseError(f"eps must lie in [0, 1/2), got {eps}")
    for z, dist in ((0, d0), (1, d1)):
        for x, _ in dist.support():
            law = rt.output_distribution(x)
            kept = 1 - law.get(ABORT, Fraction(0))
            wrong = sum((p for label, p in law.items() if label is not ABORT and label != z), Fraction(0))
            if kept <= 0 or wrong > eps * kept:
                raise PremiseError(f"input {x} (label {z}): kept {kept}, wrong {wrong} exceeds eps={eps}")


def extract_postselection_certificate(rt: RandomizedTree, d0: Distribution, d1: Distribution,
                                      eps: Fraction) -> PostselectionCertificate:
    """First (support tree, leaf) of the padded trees whose path conjunction qualifies

    Raises:
        PremiseError: the tree does not meet the error premise
        CertificateError: no leaf qualifies
    """
    eps = Fraction(eps)
    check_postselection_premise(rt, d0, d1, eps)
    dists = (d0, d1)
    r = rt.depth()
    padded = rt.padded(r, max(d0.arity, d1.arity))
    for tree, _ in padded.support:
        for conj, label in tree.leaves():
            if label is ABORT or label not in (0, 1):
                continue
            p_z = conj_prob(dists[label], conj)
            p_other = conj_prob(dists[1 - label], conj)
            if p_z > 0 and eps * p_z >= (1 - eps) * p_other:
                return PostselectionCertificate(conjunction=conj, z=label, p_z=p_z, p_other=p_other, epsilon=eps)
    raise CertificateError(
        CheckId.POSTSELECTION_EXTRACTION.value,
        "no leaf qualifies although the premise verified",
        witness={"eps": eps, "depth": r},
    )


def check_wapp_premise(rt: RandomizedTree, t: Fraction, d0: Distribution, d1: Distribution,
                       d2: Distribution, eps: Fraction) -> None:
    """Acceptance in [(1-eps)t, t] on D_1, at most eps t on D_0 and at most t on D_2"""
    if not 0 < eps <= Fraction(1, 10):
        raise PremiseError(f"eps must lie in (0, 1/10], got {eps}")
    if t <= 0:
        raise PremiseError(f"threshold must be positive, got {t}")
    for name, dist, low, high in (("D_1", d1, (1 - eps) * t, t), ("D_0", d0, Fraction(0), eps * t),
                                  ("D_2", d2, Fraction(0), t)):
        for x, _ in dist.support():
            accept = rt.output_distribution(x).get(1, Fraction(0))
            if not low <= accept <= high:
                raise PremiseError(f"acceptance {accept} of {x} in {name} outside [{low}, {high}]")


def extract_wapp_certificate(rt: RandomizedTree, t: Fraction, d0: Distribution, d1: Distribution,
                             d2: Distribution, eps: Fraction) -> WappCertificate:
    """Outcome table over (tree, leaf) pairs rescaled by 2^r/t, then outcome selection"""
    eps, t = Fraction(eps), Fraction(t)
    check_wapp_premise(rt, t, d0, d1, d2, eps)
    r = rt.depth()
    padded = rt.padded(r, max(d0.arity, d1.arity, d2.arity))
    scale = Fraction(2 ** r) / t
    outcomes, paths = [], {}
    for ti, (tree, w) in enumerate(padded.support):
        for li, (conj, label) in enumerate(tree.leaves(include_contradictory=True)):
            key = f"{ti}:{li}"
            values = [Fraction(0)] * 3
            if conj is not None and label == 1:
                values = [scale * conj_prob(d, conj) for d in (d0, d1, d2)]
                paths[key] = conj
            outcomes.append(Outcome(key=key, prob=w / 2 ** r, p0=values[0], p1=values[1], p2=values[2]))
    selection = select_outcome(OutcomeTable(outcomes=tuple(outcomes)), eps)
    conj = paths[selection.outcome.key]
    return WappCertificate(
        conjunction=conj,
        p0=conj_prob(d0, conj),
        p1=conj_prob(d1, conj),
        p2=conj_prob(d2, conj),
        epsilon=eps,
    )


# -------------------------
# Instances
# -------------------------

def exact_tree(labels: Dict[Bits, Any], arity: int, default: Any = 0) -> DeterministicTree:
    """Queries every coordinate in order and outputs the label (default off the table)"""
    def build(prefix: Tuple[int, ...]) -> DeterministicTree:
        if len(prefix) == arity:
            return leaf(labels.get(prefix, default))
        return query(len(prefix), build(prefix + (0,)), build(prefix + (1,)))
    return build(())


def one_query_tree(m: int) -> RandomizedTree:
    """Uniform mixture of the m trees that read one position and output it"""
    return RandomizedTree(
        support=tuple((query(i, leaf(0), leaf(1)), Fraction(1, m)) for i in range(m)),
        name=f"one-query[{m}]",
    )


def random_tree(rng: np.random.Generator, arity: int, depth: int, labels: Sequence[Any]) -> DeterministicTree:
    """Random tree of depth <= depth without repeated queries on a path"""
    def build(free: List[int], remaining: int) -> DeterministicTree:
        if remaining == 0 or not free or rng.random() < 0.25:
            return leaf(labels[int(rng.integers(0, len(labels)))])
        index = free[int(rng.integers(0, len(free)))]
        rest = [i for i in free if i != index]
        return query(index, build(rest, remaining - 1), build(rest, remaining - 1))
    return build(list(range(arity)), depth)


def _random_partial_labels(rng: np.random.Generator, arity: int) -> Dict[Bits, int]:
    while True:
        labels = {}
        for x in itertools.product((0, 1), repeat=arity):
            pick = int(rng.integers(0, 3))
            if pick < 2:
                labels[x] = pick
        if set(labels.values()) == {0, 1}:
            return labels


def _random_distribution(rng: np.random.Generator, points: Sequence[Bits]) -> ExplicitDistribution:
    weights = {x: Fraction(int(rng.integers(1, 6))) for x in points if rng.random() < 0.7}
    if not weights:
        weights = {points[0]: Fraction(1)}
    total = sum(weights.values())
    return ExplicitDistribution.from_weights({x: w / total for x, w in weights.items()})


def random_postselection_instance(rng: np.random.Generator, arity: int = 3):
    """(tree, D_0, D_1, eps) with eps the exact worst conditional error

    The exact tree keeps weight >= 7/10, so eps <= 3/7 stays below 1/2.
    """
    labels = _random_partial_labels(rng, arity)
    d0 = _random_distribution(rng, [x for x, z in labels.items() if z == 0])
    d1 = _random_distribution(rng, [x for x, z in labels.items() if z == 1])
    exact_weight = Fraction(int(rng.integers(7, 10)), 10)
    extra = int(rng.integers(1, 4))
    support = [(exact_tree(labels, arity), exact_weight)]
    for _ in range(extra):
        support.append((random_tree(rng, arity, arity, (0, 1, ABORT)), (1 - exact_weight) / extra))
    rt = RandomizedTree(support=tuple((tr, w) for tr, w in support if w > 0))
    eps = Fraction(0)
    for z, dist in ((0, d0), (1, d1)):
        for x, _ in dist.support():
            law = rt.output_distribution(x)
            kept = 1 - law.get(ABORT, Fraction(0))
            wrong = sum((p for lab, p in law.items() if lab is not ABORT and lab != z), Fraction(0))
            eps = max(eps, wrong / kept)
    return rt, d0, d1, eps


def random_wapp_instance(rng: np.random.Generator, arity: int = 3):
    """(tree, t, D_0, D_1, D_2, eps) around an exact tree perturbed with weight eps"""
    labels = _random_partial_labels(rng, arity)
    d0 = _random_distribution(rng, [x for x, z in labels.items() if z == 0])
    d1 = _random_distribution(rng, [x for x, z in labels.items() if z == 1])
    d2 = _random_distribution(rng, list(labels))
    eps = Fraction(int(rng.integers(1, 11)), 100)
    extra = int(rng.integers(1, 4))
    support = [(exact_tree(labels, arity), 1 - eps)]
    support += [(random_tree(rng, arity, arity, (0, 1)), eps / extra) for _ in range(extra)]
    return RandomizedTree(support=tuple(support)), Fraction(1), d0, d1, d2, eps


def sweep_postselection_extraction(samples: int, seed: int) -> CheckRecord:
    rng = np.random.default_rng(seed)
    widths = []
    max_eps = Fraction(0)
    for _ in range(samples):
        rt, d0, d1, eps = random_postselection_instance(rng)
        max_eps = max(max_eps, eps)
        certificate = extract_postselection_certificate(rt, d0, d1, eps)
        if not certificate.holds() or certificate.width > rt.depth():
            raise VerificationError(
                CheckId.POSTSELECTION_EXTRACTION.value, "extracted certificate does not hold",
                witness={"certificate": certificate},
            )
        widths.append(certificate.width)
    return check_record(
        CheckId.POSTSELECTION_EXTRACTION.value, {"samples": samples, "seed": seed}, instances=samples,
        witness={"max_width": max(widths, default=0), "max_epsilon": max_eps},
    )


def sweep_wapp_extraction(samples: int, seed: int) -> CheckRecord:
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        rt, t, d0, d1, d2, eps = random_wapp_instance(rng)
        certificate = extract_wapp_certificate(rt, t, d0, d1, d2, eps)
        if not certificate.holds():
            raise VerificationError(
                CheckId.WAPP_EXTRACTION.value, "extracted certificate does not hold",
                witness={"certificate": certificate},
            )
    return check_record(CheckId.WAPP_EXTRACTION.value, {"samples": samples, "seed": seed}, instances=samples)
