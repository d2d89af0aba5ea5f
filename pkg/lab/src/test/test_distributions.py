from fractions import Fraction

import pytest
from pydantic import ValidationError

from querylab.distributions import (
    Conjunction,
    Distribution,
    ExplicitDistribution,
    OuterKind,
    OuterMixture,
    SliceDistribution,
    conj_prob,
    conj_prob_slice,
    elementary_symmetric,
    enumerate_conjunctions,
    gapmaj_slices,
    gapor_slices,
    maj_hard_distribution,
    mix,
    xor_hard_distribution,
)


class TestConjunction:
    def test_parse_and_format(self):
        c = Conjunction.parse("-7, +3")
        assert c.positive == frozenset({3})
        assert c.negative == frozenset({7})
        assert str(c) == "+3,-7"
        assert c.width == 2

    def test_empty(self):
        assert Conjunction.parse("").width == 0
        assert Conjunction.parse("true").satisfied((0, 1))

    @pytest.mark.parametrize("text", ["3", "+x", "+", "*2"])
    def test_bad_literals(self, text):
        with pytest.raises(ValueError):
            Conjunction.parse(text)

    def test_sign_clash(self):
        with pytest.raises(ValidationError):
            Conjunction.parse("+1,-1")

    def test_satisfied(self):
        c = Conjunction.parse("+0,-2")
        assert c.satisfied((1, 1, 0))
        assert not c.satisfied((1, 1, 1))
        assert not c.satisfied((0, 0, 0))

    def test_profile_and_split(self):
        c = Conjunction.parse("+0,-4,+5")
        assert c.profile(3, 2) == [(1, 0), (1, 1)]
        assert [str(b) for b in c.block_split(3, 2)] == ["+0", "-1,+2"]

    def test_with_literal(self):
        c = Conjunction().with_literal(2, 1).with_literal(0, 0)
        assert str(c) == "-0,+2"

    def test_enumeration_counts(self):
        assert len(list(enumerate_conjunctions(3, 3))) == 27
        assert len(list(enumerate_conjunctions(6, 2))) == 73
        strings = [str(c) for c in enumerate_conjunctions(4, 2)]
        assert len(strings) == len(set(strings))


class TestSliceProbabilities:
    def test_closed_form(self):
        assert conj_prob_slice(1, 1, 6, 2) == Fraction(4, 15)
        assert conj_prob_slice(0, 0, 5, 3) == 1
        assert conj_prob_slice(3, 0, 6, 2) == 0
        assert conj_prob_slice(0, 5, 6, 2) == 0

    @pytest.mark.parametrize("m, k", [(3, 1), (4, 2), (6, 4), (5, 0)])
    def test_matches_enumeration(self, m, k):
        dist = SliceDistribution(m=m, k=k)
        for conj in enumerate_conjunctions(m, m):
            assert dist.conj_prob(conj) == dist.conj_prob_bruteforce(conj)

    def test_weight_above_length(self):
        with pytest.raises(ValidationError):
            SliceDistribution(m=3, k=4)

    def test_elementary_symmetric(self):
        values = [Fraction(1), Fraction(2), Fraction(3)]
        assert elementary_symmetric(values) == [1, 6, 11, 6]
        assert elementary_symmetric(values, top=2) == [1, 6, 11]


class TestMixtures:
    @pytest.mark.parametrize("z", [0, 1])
    def test_parity_closed_form(self, z):
        dist = xor_hard_distribution(2, 3, z)
        for conj in enumerate_conjunctions(6, 3):
            assert dist.conj_prob(conj) == dist.conj_prob_bruteforce(conj)
            assert dist.conj_prob(conj) == Distribution.conj_prob(dist, conj)

    def test_uniform_is_average_of_parities(self):
        d, d0, d1 = xor_hard_distribution(3, 3), xor_hard_distribution(3, 3, 0), xor_hard_distribution(3, 3, 1)
        for conj in enumerate_conjunctions(9, 2):
            assert d.conj_prob(conj) == (d0.conj_prob(conj) + d1.conj_prob(conj)) / 2

    @pytest.mark.parametrize("zeta", [0, 1, 2])
    def test_weight_closed_form(self, zeta):
        dist = maj_hard_distribution(4, 2, zeta)
        assert dist.kind is OuterKind.WEIGHT
        assert dist.param == 1 + zeta
        for conj in enumerate_conjunctions(8, 2):
            assert dist.conj_prob(conj) == dist.conj_prob_bruteforce(conj)

    def test_mixture_support_sums_to_one(self):
        dist = maj_hard_distribution(2, 4, 1)
        assert sum(p for _, p in dist.support()) == 1

    def test_mismatched_blocks(self):
        g0, _ = gapmaj_slices(3)
        _, g1 = gapor_slices(4)
        with pytest.raises(ValidationError):
            OuterMixture(n=2, g0=g0, g1=g1, kind=OuterKind.UNIFORM)

    def test_maj_needs_even_n(self):
        with pytest.raises(ValueError):
            maj_hard_distribution(3, 2, 0)

    @pytest.mark.parametrize("factory, m", [(gapmaj_slices, 4), (gapor_slices, 3)])
    def test_slice_factories_check_m(self, factory, m):
        with pytest.raises(ValueError):
            factory(m)


class TestExplicit:
    def test_uniform_deduplicates(self):
        dist = ExplicitDistribution.uniform([(0, 1), (1, 0), (0, 1)])
        assert dist.probability((0, 1)) == Fraction(1, 2)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            ExplicitDistribution(size=1, points=(((0,), Fraction(1, 2)),))

    def test_mix(self):
        a, b = SliceDistribution(m=3, k=1), SliceDistribution(m=3, k=2)
        dist = mix([(a, Fraction(1, 2)), (b, Fraction(1, 2))])
        assert dist.probability((1, 0, 0)) == Fraction(1, 6)
        assert dist.probability((1, 1, 1)) == 0
        assert conj_prob(dist, Conjunction.parse("+0")) == Fraction(1, 2)

    def test_arity_breach(self):
        with pytest.raises(ValueError, match="exceeds arity"):
            conj_prob(SliceDistribution(m=3, k=1), Conjunction.parse("+3"))
