import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import chisquare
from pydantic import ValidationError

from querylab.algorithms import NoisyOr, noisy_or_exact_error, vote5
from querylab.boolfn import ABORT, catalog
from querylab.dtree import (
    Adversary,
    DeterministicTree,
    NoiseKind,
    NoiseModel,
    RandomizedTree,
    answer_query,
    clopper_pearson,
    default_adversaries,
    drive,
    estimate_error,
    leaf,
    parse_noise,
    query,
    run_tree,
)
from querylab.errors import NoiseSpecError, PromiseViolation


def _sample_tree() -> DeterministicTree:
    return query(0, leaf(0), query(1, leaf(1), leaf(0)))


class TestDeterministicTree:
    def test_leaves(self):
        leaves = [(str(c), label) for c, label in _sample_tree().leaves()]
        assert leaves == [("-0", 0), ("+0,-1", 1), ("+0,+1", 0)]

    def test_contradictory_paths(self):
        tree = query(0, leaf(0), query(0, leaf(1), leaf(2)))
        assert [(str(c), label) for c, label in tree.leaves()] == [("-0", 0), ("+0", 2)]
        with_dead = tree.leaves(include_contradictory=True)
        assert with_dead[1] == (None, 1)
        assert len(with_dead) == 3

    def test_evaluate_and_depth(self):
        tree = _sample_tree()
        assert tree.depth() == 2
        assert tree.max_index() == 1
        assert tree.evaluate((1, 0)) == 1
        assert tree.evaluate((0, 1)) == 0

    def test_padded_keeps_function(self):
        tree = _sample_tree()
        padded = tree.padded(3, 3)
        assert padded.depth() == 3
        for bits in [(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)]:
            assert padded.evaluate(bits) == tree.evaluate(bits)
        assert all(c is not None and c.width == 3 for c, _ in padded.leaves())

    def test_padding_below_depth(self):
        with pytest.raises(ValueError):
            _sample_tree().padded(1, 2)

    def test_malformed(self):
        with pytest.raises(ValidationError):
            DeterministicTree(index=0)
        with pytest.raises(ValidationError):
            DeterministicTree(label=1, zero=leaf(0))

    def test_run_reports_queries(self, rng):
        stats = run_tree(_sample_tree(), (1, 0), NoiseModel.noiseless(), rng)
        assert stats.output == 1
        assert stats.raw_queries == 2
        assert stats.per_coordinate == {0: 1, 1: 1}


class TestRandomizedTree:
    def test_output_distribution(self):
        rt = RandomizedTree(support=((leaf(0), Fraction(1, 3)), (_sample_tree(), Fraction(2, 3))))
        assert rt.output_distribution((1, 0)) == {0: Fraction(1, 3), 1: Fraction(2, 3)}
        assert rt.depth() == 2

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            RandomizedTree(support=((leaf(0), Fraction(1, 2)),))

    def test_sampling_follows_weights(self, rng):
        rt = RandomizedTree(support=(
            (leaf(0), Fraction(1, 4)), (leaf(1), Fraction(1, 4)), (leaf(2), Fraction(1, 2)),
        ))
        outputs = [run_tree(rt, (), NoiseModel.noiseless(), rng).output for _ in range(4000)]
        observed = [outputs.count(label) for label in (0, 1, 2)]
        assert chisquare(observed, [1000, 1000, 2000]).pvalue > 1e-4


class TestNoise:
    def test_caps(self):
        with pytest.raises(NoiseSpecError):
            NoiseModel.build(NoiseKind.TWO_SIDED, [Fraction(1, 2)])
        assert NoiseModel.build(NoiseKind.ONE_SIDED, [Fraction(1, 2)]).nu(0) == Fraction(1, 2)
        with pytest.raises(NoiseSpecError):
            NoiseModel.build(NoiseKind.ONE_SIDED, [Fraction(-1, 10)])

    def test_parse_forms(self):
        assert parse_noise("all:1/3", 3).probs == (Fraction(1, 3),) * 3
        assert parse_noise("zeros", 2).probs == (0, 0)
        assert parse_noise("none", 4).kind is NoiseKind.NONE
        one_sided = parse_noise("one-sided:all:1/2", 2)
        assert one_sided.kind is NoiseKind.ONE_SIDED
        assert parse_noise("list:0, 1/4", 2).probs == (0, Fraction(1, 4))
        assert parse_noise("random:5", 6) == parse_noise("random:5", 6)
        assert all(p <= Fraction(1, 3) for p in parse_noise("random:5", 6).probs)

    @pytest.mark.parametrize("spec", ["all:1/2", "list:0", "all:abc", "bogus", "list:1/0,0"])
    def test_parse_errors(self, spec):
        with pytest.raises(NoiseSpecError):
            parse_noise(spec, 2)

    def test_one_sided_never_creates_ones(self, rng):
        noise = NoiseModel.build(NoiseKind.ONE_SIDED, [Fraction(1, 2)])
        assert {answer_query((0,), 0, noise, rng) for _ in range(500)} == {0}
        assert {answer_query((1,), 0, noise, rng) for _ in range(500)} == {0, 1}

    def test_two_sided_rate(self, rng):
        noise = NoiseModel.build(NoiseKind.TWO_SIDED, [Fraction(1, 3)])
        flips = sum(answer_query((0,), 0, noise, rng) for _ in range(6000))
        assert abs(flips / 6000 - 1 / 3) < 0.03

    @pytest.mark.parametrize("kind,bits,probs", [
        (NoiseKind.TWO_SIDED, (0, 1), (Fraction(1, 4), Fraction(1, 10))),
        (NoiseKind.ONE_SIDED, (1, 1), (Fraction(1, 2), Fraction(1, 3))),
    ])
    def test_repeated_reads_flip_independently(self, rng, kind, bits, probs):
        noise = NoiseModel.build(kind, probs)
        reads = (0, 1, 0, 0)
        trials = 8000
        counts = Counter(
            tuple(int(answer_query(bits, i, noise, rng) != bits[i]) for i in reads) for _ in range(trials)
        )
        patterns = list(itertools.product((0, 1), repeat=len(reads)))
        expected = [
            trials * math.prod(float(probs[i]) if flip else 1 - float(probs[i]) for i, flip in zip(reads, pattern))
            for pattern in patterns
        ]
        assert chisquare([counts[p] for p in patterns], expected).pvalue > 1e-4

    def test_index_out_of_range(self, rng):
        with pytest.raises(IndexError):
            answer_query((0, 1), 2, NoiseModel.noiseless(), rng)

    def test_default_adversaries(self):
        adversaries = default_adversaries([("x", (0, 1))], NoiseKind.TWO_SIDED, seed=1)
        ids = [a.id for a in adversaries]
        assert ids[:2] == ["x/all-max", "x/all-zero"]
        assert len(ids) == 7
        assert adversaries[0].noise.probs == (Fraction(1, 3),) * 2


class TestDrive:
    def test_budget_aborts(self, rng):
        stats = drive(vote5(0), (1,), NoiseModel.noiseless(), rng, budget=3)
        assert stats.output is ABORT
        assert stats.aborted
        assert stats.raw_queries == 3

    def test_transcript(self, rng):
        stats = drive(vote5(0), (1,), NoiseModel.noiseless(), rng, record_transcript=True)
        assert stats.output == 1
        assert stats.transcript == [(0, 1)] * 5
        assert stats.per_coordinate == {0: 5}


class TestEstimation:
    def test_clopper_pearson(self):
        low, high = clopper_pearson(0, 100, 0.95)
        assert low == 0.0
        assert high == pytest.approx(1 - 0.025 ** 0.01, rel=1e-9)
        assert clopper_pearson(100, 100, 0.95)[1] == 1.0
        low, high = clopper_pearson(30, 100, 0.99)
        assert low < 0.3 < high

    def test_same_results_for_any_worker_count(self):
        fn = catalog("or", 1)
        adversaries = [Adversary(id="one", bits=(1,), noise=parse_noise("all:1/3", 1))]
        tree = query(0, leaf(0), leaf(1))
        single = estimate_error(tree, fn, adversaries, trials=300, seed=3, workers=1)
        pooled = estimate_error(tree, fn, adversaries, trials=300, seed=3, workers=2)
        assert single == pooled
        assert abs(single[0].error_rate - 1 / 3) < 0.12

    def test_off_promise_adversary(self):
        with pytest.raises(PromiseViolation):
            estimate_error(leaf(0), catalog("gapmaj", 3), [Adversary(id="bad", bits=(0, 0, 0))], trials=1, seed=0)

    def test_batch_path_matches_exact_law(self):
        bits = (0, 0, 1)
        noise = parse_noise("all:1/3", 3)
        [estimate] = estimate_error(NoisyOr(n=3), catalog("or", 3), [Adversary(id="a", bits=bits, noise=noise)],
                                    trials=40000, seed=11)
        exact = float(noisy_or_exact_error(bits, noise))
        sigma = (exact * (1 - exact) / 40000) ** 0.5
        assert abs(estimate.error_rate - exact) < 5 * sigma
        assert estimate.max_queries <= NoisyOr(n=3).raw_budget

    def test_generic_path_matches_batch_law(self):
        bits = (0, 1)
        noise = parse_noise("all:1/3", 2)
        adversary = Adversary(id="a", bits=bits, noise=noise)
        [estimate] = estimate_error(NoisyOr(n=2), catalog("or", 2), [adversary], trials=3000, seed=2,
                                    vectorized=False)
        exact = float(noisy_or_exact_error(bits, noise))
        sigma = (exact * (1 - exact) / 3000) ** 0.5
        assert abs(estimate.error_rate - exact) < 5 * sigma
        assert isinstance(estimate.mean_queries, float)
        assert np.isfinite(estimate.ci_high)
