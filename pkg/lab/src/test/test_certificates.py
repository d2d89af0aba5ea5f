from fractions import Fraction

import numpy as np
import pytest

from querylab.boolfn import ABORT
from querylab.certificates import (
    MajVerdict,
    Outcome,
    OutcomeTable,
    exact_tree,
    extract_postselection_certificate,
    extract_wapp_certificate,
    maj_case_analysis,
    maj_decompose,
    one_query_tree,
    random_outcome_table,
    random_postselection_instance,
    random_tree,
    regime_width,
    select_outcome,
    sweep_maj_instances,
    sweep_maj_profiles,
    sweep_maj_random,
    sweep_outcome_selection,
    sweep_postselection_extraction,
    sweep_sym_inequality,
    sweep_wapp_extraction,
    sweep_xor_profiles,
    sweep_xor_random,
    verify_gapmaj_ratio,
    verify_gapor_facts,
    verify_slice_formula,
    verify_sym_inequality,
    xor_fourier_check,
)
from querylab.distributions import Conjunction, gapmaj_slices, gapor_slices, maj_hard_distribution
from querylab.dtree import RandomizedTree, leaf
from querylab.errors import FunctionSpecError, PremiseError
from querylab.reports import CheckId
from querylab.suites import postselection_worked_example, wapp_worked_example


class TestSliceFacts:
    def test_gapmaj_ratio(self):
        record = verify_gapmaj_ratio(21, 10)
        assert record.passed
        assert record.check_id == CheckId.GAPMAJ_RATIO.value
        assert record.params["max_width"] == 3
        # both directions for every conjunction of width <= 3 on 21 variables
        assert record.instances == 2 * (1 + 42 + 210 * 4 + 1330 * 8)

    def test_gapmaj_ratio_needs_divisible_m(self):
        with pytest.raises(FunctionSpecError):
            verify_gapmaj_ratio(7, 1)

    def test_slice_formula(self):
        assert verify_slice_formula(4).instances == 3 ** 4 * 5
        assert verify_slice_formula(6).instances == 3 ** 6 * 7

    def test_slice_formula_limit(self):
        with pytest.raises(PremiseError):
            verify_slice_formula(13)

    @pytest.mark.parametrize("m", [4, 8, 16])
    def test_gapor_facts(self, m):
        record = verify_gapor_facts(m, 3)
        assert record.passed
        assert record.witness["min_c1_times_3w"]["approx"] >= 1


class TestXorFourier:
    def test_empty_conjunction(self):
        result = xor_fourier_check(3, 3, Conjunction())
        assert result.c_d == result.c_d0 == result.c_d1 == 1
        assert result.product == 0

    def test_single_literal(self):
        result = xor_fourier_check(1, 3, Conjunction.parse("+0"))
        assert result.coefficients == (Fraction(-1, 3),)
        assert result.c_d == Fraction(1, 2)
        assert result.c_d1 == Fraction(2, 3)
        assert result.c_d0 == Fraction(1, 3)

    def test_parity_halves_average_to_c_d(self):
        result = xor_fourier_check(3, 3, Conjunction.parse("+0,-4,+8"))
        assert result.enumerated
        assert result.c_d0 + result.c_d1 == 2 * result.c_d

    def test_profile_sweep_counts_every_conjunction(self):
        record = sweep_xor_profiles(2, 3, 2)
        assert record.instances == 73
        assert record.witness["profiles"] == 9

    def test_random_sweep(self):
        record = sweep_xor_random(8, 6, 40, seed=1)
        assert record.passed
        assert record.params["max_width"] == regime_width(8, 14) == 1
        assert record.instances == 40


class TestMajCases:
    def test_factorization_matches_mixture(self):
        conj = Conjunction.parse("+0,-2")
        result = maj_case_analysis(4, 2, conj)
        assert result.B == (0,)
        assert result.c[1] == Fraction(1, 2)
        for zeta in range(3):
            assert result.probs[zeta] == maj_hard_distribution(4, 2, zeta).conj_prob(conj)

    def test_odd_sizes(self):
        with pytest.raises(FunctionSpecError):
            maj_case_analysis(3, 2, Conjunction())
        with pytest.raises(FunctionSpecError):
            maj_case_analysis(4, 3, Conjunction())

    def test_trivial_instance(self):
        result = maj_decompose(4, [], [1, 1, 1, 1])
        assert result.probs == (1, 1, 1)
        assert result.verdict is MajVerdict.D0_LARGE

    def test_too_many_forced_blocks(self):
        result = maj_decompose(4, [0, 1, 2], [Fraction(1, 2)] * 4)
        assert result.p == (0, 0, Fraction(1, 4))
        assert result.q[0] is None
        assert result.verdict is MajVerdict.D1_ZERO

    def test_profile_sweep_counts_every_conjunction(self):
        assert sweep_maj_profiles(2, 2).instances == 81

    def test_random_sweeps(self):
        assert sweep_maj_random(8, 4, 30, seed=2).passed
        assert sweep_maj_instances(6, 50, seed=3).instances == 50


class TestSymInequality:
    def test_holds(self):
        assert verify_sym_inequality([Fraction(1), Fraction(1)], [Fraction(1), Fraction(2)])
        assert sweep_sym_inequality(100, seed=4).passed

    @pytest.mark.parametrize("alphas, betas", [
        ([1, -1], [1, 1]),
        ([1], [1, 1]),
        ([1, 0], [0, 1]),
    ])
    def test_premises(self, alphas, betas):
        with pytest.raises(PremiseError):
            verify_sym_inequality([Fraction(a) for a in alphas], [Fraction(b) for b in betas])


class TestOutcomeSelection:
    def _table(self, p1: Fraction) -> OutcomeTable:
        return OutcomeTable(outcomes=(
            Outcome(key="a", prob=Fraction(1), p0=Fraction(0), p1=p1, p2=Fraction(1)),
        ))

    def test_single_outcome(self):
        selection = select_outcome(self._table(Fraction(1)), Fraction(1, 10))
        assert selection.outcome.key == "a"
        assert selection.W == ("a",)

    def test_premises(self):
        with pytest.raises(PremiseError):
            select_outcome(self._table(Fraction(1)), Fraction(1, 5))
        with pytest.raises(PremiseError):
            select_outcome(self._table(Fraction(1, 2)), Fraction(1, 10))

    def test_random_tables(self, rng):
        for _ in range(30):
            eps = Fraction(int(rng.integers(1, 11)), 100)
            table = random_outcome_table(rng, eps)
            selection = select_outcome(table, eps)
            assert selection.outcome.p1 > 0
        assert sweep_outcome_selection(50, seed=5).passed


class TestExtraction:
    def test_one_query_certificate(self):
        d0, d1 = gapmaj_slices(3)
        certificate = extract_postselection_certificate(one_query_tree(3), d0, d1, Fraction(1, 3))
        assert certificate.holds()
        assert certificate.width == 1
        assert str(certificate.conjunction) == "-0"

    def test_bad_tree_fails_premise(self):
        d0, d1 = gapmaj_slices(3)
        always_zero = RandomizedTree(support=((leaf(0), Fraction(1)),))
        with pytest.raises(PremiseError):
            extract_postselection_certificate(always_zero, d0, d1, Fraction(1, 3))

    def test_aborting_tree_fails_premise(self):
        d0, d1 = gapmaj_slices(3)
        aborting = RandomizedTree(support=((leaf(ABORT), Fraction(1)),))
        with pytest.raises(PremiseError):
            extract_postselection_certificate(aborting, d0, d1, Fraction(1, 3))

    def test_error_bound_of_one_half_is_rejected(self):
        d0, d1 = gapmaj_slices(3)
        with pytest.raises(PremiseError):
            extract_postselection_certificate(one_query_tree(3), d0, d1, Fraction(1, 2))

    def test_random_instances_need_a_nonempty_certificate(self):
        # below 1/2 the empty conjunction can never qualify
        rng = np.random.default_rng(11)
        for _ in range(100):
            rt, d0, d1, eps = random_postselection_instance(rng)
            assert eps < Fraction(1, 2)
            certificate = extract_postselection_certificate(rt, d0, d1, eps)
            assert certificate.holds()
            assert certificate.width >= 1

    def test_wapp_premises(self):
        g0, g1 = gapor_slices(4)
        rt = RandomizedTree(support=((leaf(1), Fraction(1)),))
        with pytest.raises(PremiseError):
            extract_wapp_certificate(rt, Fraction(1), g1, g0, g0, Fraction(1, 5))
        with pytest.raises(PremiseError):
            extract_wapp_certificate(rt, Fraction(1), g1, g0, g0, Fraction(1, 36))

    def test_worked_examples(self):
        [post] = postselection_worked_example()
        assert post.passed
        assert post.witness["lhs"] == post.witness["rhs"] == {"exact": "2/9", "approx": 2 / 9}
        [wapp] = wapp_worked_example()
        assert wapp.passed

    def test_random_sweeps(self):
        post = sweep_postselection_extraction(25, seed=6)
        assert post.passed
        assert post.witness["max_epsilon"]["approx"] < 0.5
        assert sweep_wapp_extraction(25, seed=6).passed


class TestInstances:
    def test_exact_tree(self):
        labels = {(0, 1): 1, (1, 0): 0}
        tree = exact_tree(labels, 2, default=ABORT)
        assert tree.evaluate((0, 1)) == 1
        assert tree.evaluate((1, 0)) == 0
        assert tree.evaluate((1, 1)) is ABORT
        assert tree.depth() == 2

    def test_random_tree_never_repeats_a_query(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            tree = random_tree(rng, 3, 3, (0, 1))
            assert len(tree.leaves()) == len(tree.leaves(include_contradictory=True))
