import math
from fractions import Fraction

import numpy as np
import pytest
from pydantic import ValidationError

from querylab.algorithms import (
    AmplificationLedger,
    BudgetedProcedure,
    ComposedAmplified,
    NoisyOr,
    OneQuerySampler,
    WalkParams,
    WhichGapOrEval,
    ZeroSidedRecover,
    chernoff_reps,
    hit_probability_dp,
    noisy_or_exact_error,
    noisy_or_output_law,
    one_query_exact_error,
    simulate_hit_times,
    truncation_budget,
    vote5,
    vote5_flip,
    walk_hit_probability,
    walk_hit_time,
)
from querylab.boolfn import ABORT, catalog
from querylab.dtree import NoiseModel, drive, parse_noise, run_algorithm
from querylab.errors import WalkRegimeError


class TestVote5:
    def test_flip_rates(self):
        assert vote5_flip(0) == 0
        assert vote5_flip(Fraction(1, 2)) == Fraction(1, 2)
        assert vote5_flip(Fraction(1, 3)) == Fraction(17, 81)

    def test_majority_of_five(self, rng):
        stats = drive(vote5(2), (0, 0, 1), NoiseModel.noiseless(), rng)
        assert stats.output == 1
        assert stats.raw_queries == 5


class TestNoisyOr:
    def test_noiseless_zeros_read_each_bit_once(self, rng):
        stats = run_algorithm(NoisyOr(n=4), (0, 0, 0, 0), NoiseModel.noiseless(), rng)
        assert stats.output == 0
        assert stats.raw_queries == 20

    def test_one_found_runs_to_budget(self, rng):
        alg = NoisyOr(n=4)
        stats = run_algorithm(alg, (0, 0, 0, 1), NoiseModel.noiseless(), rng)
        assert stats.output == 1
        assert stats.raw_queries == alg.raw_budget == 120

    def test_noiseless_law(self):
        assert noisy_or_output_law((0, 0), NoiseModel.noiseless()) == {0: 1, 1: 0}
        assert noisy_or_output_law((1, 0), NoiseModel.noiseless()) == {0: 0, 1: 1}

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 6])
    def test_exact_error_within_a_third(self, n):
        noise = parse_noise("all:1/3", n)
        for bits in ((0,) * n, (0,) * (n - 1) + (1,), (1,) + (0,) * (n - 1)):
            assert noisy_or_exact_error(bits, noise) <= Fraction(1, 3)

    def test_batch_respects_raw_budget(self, rng):
        alg = NoisyOr(n=5)
        outputs, raw = alg.batch((0, 0, 0, 0, 1), parse_noise("all:1/3", 5), rng, 2000)
        assert raw.max() <= alg.raw_budget
        assert set(np.unique(outputs)) <= {0, 1}
        assert np.all(raw % 5 == 0)


class TestWalk:
    def test_closed_forms(self):
        assert walk_hit_time(WalkParams(p=0.25)) == 2
        assert walk_hit_time(WalkParams(p=Fraction(1, 10))) == Fraction(5, 4)
        assert walk_hit_probability(WalkParams(p=0.75)) == Fraction(1, 3)

    def test_regimes(self):
        with pytest.raises(WalkRegimeError) as e:
            walk_hit_time(WalkParams(p=0.5))
        assert e.value.value == math.inf
        with pytest.raises(WalkRegimeError) as e:
            walk_hit_probability(WalkParams(p=0.5))
        assert e.value.value == 1

    def test_p_range(self):
        with pytest.raises(ValidationError):
            WalkParams(p=1.5)

    def test_simulated_mean(self, rng):
        times = simulate_hit_times(0.25, 20000, rng)
        assert abs(times.mean() - 2.0) < 0.1
        assert times.min() >= 1

    @pytest.mark.parametrize("p", [0.6, 0.75, 0.9])
    def test_dp_matches_closed_form(self, p):
        assert hit_probability_dp(p) == pytest.approx(float(walk_hit_probability(WalkParams(p=p))), abs=1e-6)


class TestWrappers:
    def test_budgeted_procedure_aborts(self, rng):
        stats = run_algorithm(BudgetedProcedure(inner=NoisyOr(n=2), budget=3), (0, 0), NoiseModel.noiseless(), rng)
        assert stats.output is ABORT
        assert stats.raw_queries == 3

    def test_budgeted_procedure_passes_through(self, rng):
        stats = run_algorithm(BudgetedProcedure(inner=NoisyOr(n=2), budget=100), (0, 0), NoiseModel.noiseless(), rng)
        assert stats.output == 0
        assert stats.raw_queries == 10

    def test_truncation_budget(self):
        assert truncation_budget(4) == 40
        assert truncation_budget(Fraction(7, 3)) == 24

    def test_even_reps_rejected(self):
        with pytest.raises(ValidationError):
            ComposedAmplified(outer=NoisyOr(n=2), inner=NoisyOr(n=3), reps=2, block_size=3)

    def test_chernoff_reps(self):
        assert chernoff_reps(Fraction(1, 3), Fraction(1, 18)) == 53
        assert chernoff_reps(0.0, 0.9) == 1
        with pytest.raises(ValueError):
            chernoff_reps(0.5, 0.1)
        with pytest.raises(ValueError):
            chernoff_reps(0.1, 1.5)

    def test_ledger_accounting(self):
        amp = ComposedAmplified(outer=NoisyOr(n=2), inner=NoisyOr(n=3), reps=3, block_size=3)
        bits = (0, 0, 0, 0, 1, 0)
        noise = parse_noise("all:1/3", 6)
        for t in range(10):
            rng = np.random.default_rng([5, t])
            ledger = AmplificationLedger()
            stats = drive(amp.start(rng, ledger), bits, noise, rng)
            assert ledger.inner_runs == amp.reps * ledger.outer_queries
            assert ledger.inner_raw == stats.raw_queries
            assert stats.raw_queries <= amp.reps * NoisyOr(n=3).raw_budget * NoisyOr(n=2).raw_budget

    def test_noiseless_composition(self, rng):
        amp = ComposedAmplified(outer=NoisyOr(n=2), inner=NoisyOr(n=3), reps=1, block_size=3)
        assert run_algorithm(amp, (0, 0, 0, 0, 1, 0), NoiseModel.noiseless(), rng).output == 1
        assert run_algorithm(amp, (0,) * 6, NoiseModel.noiseless(), rng).output == 0


class TestBlockProcedures:
    def test_which_eval_finds_the_ones(self, rng):
        alg = WhichGapOrEval(m=4)
        counts = []
        for _ in range(300):
            stats = run_algorithm(alg, (1, 0, 1, 0, 0, 0, 0, 0), NoiseModel.noiseless(), rng)
            assert stats.output == 0
            counts.append(stats.raw_queries)
        assert abs(np.mean(counts) - 4) < 1
        assert run_algorithm(alg, (0, 0, 0, 0, 0, 1, 1, 0), NoiseModel.noiseless(), rng).output == 1

    def test_zero_sided_recover_is_exact(self):
        alg = ZeroSidedRecover(outer=catalog("xor", 3))
        bits = (1, 0, 0, 1, 0, 1)
        noise = parse_noise("one-sided:all:1/2", 6)
        for t in range(200):
            assert run_algorithm(alg, bits, noise, np.random.default_rng(t)).output == 0

    def test_zero_sided_recover_aborts_off_promise(self, rng):
        alg = ZeroSidedRecover(outer=catalog("or", 2))
        assert run_algorithm(alg, (1, 1, 0, 1), NoiseModel.noiseless(), rng).output is ABORT

    def test_one_query_exact_error(self):
        assert one_query_exact_error((1, 1, 0), 1) == Fraction(1, 3)
        assert one_query_exact_error((0, 0, 0, 0), 0) == 0

    def test_one_query_batch(self, rng):
        outputs, raw = OneQuerySampler(m=3).batch((1, 0, 0), NoiseModel.noiseless(), rng, 30000)
        assert abs(outputs.mean() - 1 / 3) < 0.02
        assert raw.sum() == 30000

    def test_one_query_one_sided_batch(self, rng):
        noise = parse_noise("one-sided:all:1/2", 3)
        outputs, _ = OneQuerySampler(m=3).batch((1, 1, 1), noise, rng, 30000)
        assert abs(outputs.mean() - 0.5) < 0.02
