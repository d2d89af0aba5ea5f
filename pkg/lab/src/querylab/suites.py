"""Experiment suites: a configuration in, an ordered list of checks out.

Every suite resolves to a list of steps ``(check id, params, action)``.
Steps run in list order and each yields records; a hard failure inside a
step becomes a failed ``CheckRecord`` so the remaining steps still run.
"""

import logging
import math
from enum import Enum
from fractions import Fraction
from functools import partial
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .algorithms import (
    AlgorithmName,
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
    one_query_exact_error,
    simulate_hit_times,
    truncation_budget,
    vote5_flip,
    walk_hit_probability,
    walk_hit_time,
)
from .boolfn import (
    Bits,
    CatalogFunction,
    ComposedFunction,
    FunctionName,
    PartialFunction,
    TableFunction,
    catalog,
    compose,
    parse_function,
    which_gapor,
)
from .certificates import (
    exact_tree,
    extract_postselection_certificate,
    extract_wapp_certificate,
    one_query_tree,
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
)
from .config import get_settings
from .distributions import Distribution, ExplicitDistribution, gapmaj_slices, gapor_slices, mix
from .dtree import (
    Adversary,
    ErrorEstimate,
    NoiseKind,
    NoiseModel,
    RandomizedTree,
    default_adversaries,
    drive,
    estimate_error,
    parse_noise,
)
from .errors import ConfigurationError, FunctionSpecError, PremiseError, SolverError, VerificationError
from .reports import CheckId, HeaderRecord, Record, ReportWriter, RunRecord, SummaryRecord, check_record, jsonable
from .solvers import (
    conical_junta_degree,
    distributional_opt_error,
    game_value_full,
    postbpp_certificate_search,
    randomized_qc_decide,
)

logger = logging.getLogger(__name__)

Step = Tuple[CheckId, Dict[str, Any], Callable[[], List[Record]]]


class Suite(str, Enum):
    """Runnable suites"""
    SIMULATE = "simulate"
    VERIFY_CERTIFICATES = "verify-certificates"
    SOLVE = "solve"
    REPRODUCE_ALL = "reproduce-all"


class Problem(str, Enum):
    """Exact problems of the solve suite"""
    DISTRIBUTIONAL = "distributional"
    DECIDE = "decide"
    JUNTA = "junta"
    CERTIFICATE_SEARCH = "certificate-search"


# Statement checked under each id, printed next to the reproduce-all summary.
CLAIMS: Dict[str, str] = {
    CheckId.NOISY_OR.value: "or needs no amplification: error <= 1/3 within 30n queries",
    CheckId.WALK_LEMMA.value: "+-1 walk: hit time 1/(1-2p) for p < 1/2, hit probability (1-p)/p for p > 1/2",
    CheckId.VOTE5.value: "five-vote majority at nu = 1/3 misreads with probability 17/81",
    CheckId.GAPMAJ_RATIO.value: "gapmaj slices: C(G_z) <= 3^w C(G_1-z) for width w <= m/7",
    CheckId.SLICE_FORMULA.value: "slice probabilities of a conjunction are hypergeometric ratios",
    CheckId.GAPOR_SLICES.value: "gapor slices: C(G_0) is 0 or 1; C(G_1) >= 3^-w for negative C, w <= m/4",
    CheckId.XOR_FOURIER.value: "xor o gapmaj: C(D_1) factors over block biases, |prod a_i| <= 1/4",
    CheckId.MAJ_CASES.value: "maj o gapor: C(D_zeta) = p c_B q and one of three branches holds",
    CheckId.SYM_INEQUALITY.value: "sum(a b^2) sum(a) >= sum(a b)^2 for nonnegative a, b",
    CheckId.OUTCOME_SELECTION.value: "some outcome has P0 <= d P1 and P2 <= (1+d) P1, d = 2 sqrt(eps)",
    CheckId.POSTSELECTION_EXTRACTION.value: "a depth-r post-selection tree yields a width-r certificate",
    CheckId.WAPP_EXTRACTION.value: "a depth-r threshold-acceptance tree yields a width-r certificate",
    CheckId.WHICH_EVAL.value: "which o gapor blocks cost 4 expected queries with no error",
    CheckId.ZERO_SIDED_RECOVER.value: "one-sided noise on which-blocks is removed with zero error",
    CheckId.ONE_QUERY.value: "one random query errs with the exact slice probability",
    CheckId.COMPOSE_AMP.value: "amplified composition keeps error <= 1/3 at reps times the outer cost",
    CheckId.GAME_VALUE.value: "double oracle value equals the full-enumeration game value",
    CheckId.DISTRIBUTIONAL.value: "gapmaj[3] under the balanced slice mixture has depth-1 error 1/3",
    CheckId.JUNTA_DEGREE.value: "or[2] has conical junta degree 2 at eps = 0; not-gapor[12] needs width >= 2 at eps = 1/100",
    CheckId.CERTIFICATE_SEARCH.value: "gapmaj[6]: width-1 certificate at eps = 1/3, none at eps = 1/10",
}


class ExperimentConfig(BaseModel):
    """One suite invocation; everything except ``out`` is echoed into the report header"""

    model_config = ConfigDict(frozen=True)

    suite: Suite
    fn: Optional[str] = None
    n: Optional[int] = Field(None, ge=1)
    m: Optional[int] = Field(None, ge=1)
    trials: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = Field(None, ge=0)
    noise: Optional[str] = None
    max_width: Optional[int] = Field(None, ge=0)
    epsilon: Optional[Fraction] = None
    depth: Optional[int] = Field(None, ge=0)
    out: Optional[str] = None
    alg: Optional[AlgorithmName] = None
    check: Tuple[CheckId, ...] = ()
    problem: Optional[Problem] = None
    confidence: Optional[float] = Field(None, gt=0, lt=1)
    workers: Optional[int] = Field(None, ge=1)

    @field_validator("epsilon", mode="before")
    @classmethod
    def _rational(cls, value: Any) -> Optional[Fraction]:
        if value is None:
            return value
        if isinstance(value, float):
            value = str(value)
        eps = Fraction(value)
        if not 0 <= eps <= 1:
            raise ValueError(f"epsilon must lie in [0, 1], got {eps}")
        return eps

    def header(self) -> HeaderRecord:
        params = self.model_dump(exclude={"suite", "out"}, exclude_none=True)
        if not params.get("check"):
            params.pop("check", None)
        return HeaderRecord(suite=self.suite.value, params=jsonable(params))


# -------------------------
# Helpers
# -------------------------

def _need(value: Any, flag: str, what: str) -> Any:
    if value is None:
        raise ConfigurationError(f"{what} needs {flag}")
    return value


def _require_seed(config: ExperimentConfig) -> int:
    if config.seed is None:
        raise ConfigurationError(f"{config.suite.value} is stochastic and needs --seed")
    return config.seed


def _guarded(check: CheckId, params: Dict[str, Any], action: Callable[[], List[Record]]) -> List[Record]:
    try:
        return list(action())
    except VerificationError as e:
        logger.error("%s", e)
        return [check_record(e.check_id, params, passed=False, witness=e.witness, notes=[str(e)])]
    except SolverError as e:
        logger.error("%s: %s", check.value, e)
        return [check_record(check.value, params, passed=False, notes=[str(e)])]


def _run_records(check: CheckId, algorithm: Any, fn: PartialFunction, estimates: Sequence[ErrorEstimate],
                 seed: int, verdicts: Sequence[bool]) -> List[RunRecord]:
    return [
        RunRecord(check_id=check.value, algorithm=algorithm.name, function=fn.name, seed=seed, passed=ok,
                  **estimate.model_dump())
        for estimate, ok in zip(estimates, verdicts)
    ]


def _weight_prefix(m: int, weight: int) -> Bits:
    return (1,) * weight + (0,) * (m - weight)


def _gap_inputs(f: CatalogFunction) -> List[Tuple[str, Bits]]:
    """One representative per label of a gap function"""
    m = f.arity
    if f.kind is FunctionName.GAPMAJ:
        return [("low", _weight_prefix(m, m // 3)), ("high", _weight_prefix(m, 2 * m // 3))]
    if f.kind in (FunctionName.GAPOR, FunctionName.NOT_GAPOR):
        return [("zeros", _weight_prefix(m, 0)), ("half", _weight_prefix(m, m // 2))]
    raise FunctionSpecError(f"one-query runs need gapmaj or gapor, got {f.name}")


# -------------------------
# Simulations
# -------------------------

def noisy_or_runs(n: int, trials: int, seed: int, noise: Optional[str] = None,
                  confidence: Optional[float] = None, workers: Optional[int] = None) -> List[RunRecord]:
    """NoisyOr against the all-zero input and a single trailing one, error bound and query cap"""
    fn = catalog(FunctionName.OR, n)
    algorithm = NoisyOr(n=n)
    inputs = [("zeros", _weight_prefix(n, 0)), ("one-last", (0,) * (n - 1) + (1,))]
    if noise is None:
        adversaries = default_adversaries(inputs, NoiseKind.TWO_SIDED, seed)
    else:
        model = parse_noise(noise, n, NoiseKind.TWO_SIDED)
        adversaries = [Adversary(id=f"{name}/{noise}", bits=bits, noise=model) for name, bits in inputs]
    estimates = estimate_error(algorithm, fn, adversaries, trials, seed, confidence=confidence, workers=workers)
    verdicts = [e.ci_high <= 1 / 3 and e.max_queries <= algorithm.raw_budget for e in estimates]
    return _run_records(CheckId.NOISY_OR, algorithm, fn, estimates, seed, verdicts)


def noisy_or_exact_check(sizes: Sequence[int] = (1, 2, 3, 4)) -> List[Record]:
    """Exact NoisyOr error on every input of length n at all-max two-sided noise"""
    worst: Tuple[Fraction, Any] = (Fraction(0), None)
    instances = 0
    for n in sizes:
        noise = NoiseModel.build(NoiseKind.TWO_SIDED, [Fraction(1, 3)] * n)
        for bits in catalog(FunctionName.OR, n).promise_inputs():
            error = noisy_or_exact_error(bits, noise)
            if error > Fraction(1, 3):
                raise VerificationError(
                    CheckId.NOISY_OR.value, f"exact error {error} exceeds 1/3",
                    witness={"bits": bits, "error": error},
                )
            if error >= worst[0]:
                worst = (error, bits)
            instances += 1
    return [check_record(
        CheckId.NOISY_OR.value, {"sizes": list(sizes), "noise": "all:1/3", "mode": "exact"},
        instances=instances, witness={"max_error": worst[0], "bits": worst[1]},
    )]


def walk_lemma_check(walks: int, seed: int) -> List[Record]:
    """Monte Carlo hit times and DP hit probabilities against the closed forms"""
    check = CheckId.WALK_LEMMA.value
    if walks < 2:
        raise ConfigurationError(f"walk check needs at least 2 walks, got {walks}")
    witness: Dict[str, Any] = {}
    for k, p in enumerate((0.1, 0.2, 0.25)):
        times = simulate_hit_times(p, walks, np.random.default_rng([seed, k]))
        mean = float(times.mean())
        sigma = float(times.std(ddof=1)) / math.sqrt(walks)
        expected = float(walk_hit_time(WalkParams(p=p)))
        if abs(mean - expected) > 3 * sigma:
            raise VerificationError(
                check, f"mean hit time {mean:.4f} at p={p} is more than 3 sigma from {expected:.4f}",
                witness={"p": p, "mean": mean, "expected": expected, "sigma": sigma},
            )
        witness[f"hit_time@{p}"] = {"mean": mean, "expected": expected, "sigma": sigma}
    for p in (0.6, 0.75, 0.9):
        computed = hit_probability_dp(p)
        expected = float(walk_hit_probability(WalkParams(p=p)))
        if abs(computed - expected) > 1e-6:
            raise VerificationError(
                check, f"hit probability {computed:.8f} at p={p} differs from {expected:.8f}",
                witness={"p": p, "dp": computed, "expected": expected},
            )
        witness[f"hit_probability@{p}"] = {"dp": computed, "expected": expected}
    return [check_record(check, {"walks": walks, "seed": seed}, instances=6, witness=witness)]


def vote5_check() -> List[Record]:
    flip = vote5_flip(Fraction(1, 3))
    if flip != Fraction(17, 81):
        raise VerificationError(CheckId.VOTE5.value, f"five-vote flip at 1/3 is {flip}, not 17/81",
                                witness={"flip": flip})
    return [check_record(CheckId.VOTE5.value, {"nu": Fraction(1, 3)}, instances=1, witness={"flip": flip})]


def which_eval_runs(m: int, trials: int, seed: int, confidence: Optional[float] = None,
                    workers: Optional[int] = None) -> List[RunRecord]:
    """Mean queries within 3 sigma of 4 with no error, then the 10x-truncated abort rate"""
    fn = which_gapor(m)
    algorithm = WhichGapOrEval(m=m)
    rng = np.random.default_rng(seed)
    ones = {int(i) for i in rng.choice(m, size=m // 2, replace=False)}
    block = tuple(int(i in ones) for i in range(m))
    adversaries = [
        Adversary(id="left", bits=block + (0,) * m),
        Adversary(id="right", bits=(0,) * m + block),
    ]
    # geometric with success 1/4: mean 4, variance 12
    tolerance = 3 * math.sqrt(12 / trials)
    estimates = estimate_error(algorithm, fn, adversaries, trials, seed, confidence=confidence, workers=workers)
    records = _run_records(
        CheckId.WHICH_EVAL, algorithm, fn, estimates, seed,
        [e.errors == 0 and abs(e.mean_queries - 4) <= tolerance for e in estimates],
    )
    budgeted = BudgetedProcedure(inner=algorithm, budget=truncation_budget(4))
    estimates = estimate_error(budgeted, fn, adversaries, trials, seed, confidence=confidence, workers=workers)
    records += _run_records(
        CheckId.WHICH_EVAL, budgeted, fn, estimates, seed,
        [e.errors == e.aborts and e.aborts <= trials / 10 for e in estimates],
    )
    return records


def _one_sided_grid(bits: Bits, seed: int, randoms: int = 3) -> List[Tuple[str, NoiseModel]]:
    half, quarter = Fraction(1, 2), Fraction(1, 4)
    size = len(bits)
    grid = [
        ("all-0", [Fraction(0)] * size),
        ("all-1/4", [quarter] * size),
        ("all-1/2", [half] * size),
        ("ones-1/2", [half if b else Fraction(0) for b in bits]),
        ("zeros-1/2", [Fraction(0) if b else half for b in bits]),
    ]
    levels = (Fraction(0), quarter, half)
    for j in range(randoms):
        picks = np.random.default_rng([seed, 100 + j]).integers(0, 3, size=size)
        grid.append((f"corner-{j}", [levels[int(k)] for k in picks]))
    return [(name, NoiseModel.build(NoiseKind.ONE_SIDED, probs)) for name, probs in grid]


def zero_sided_runs(outer: PartialFunction, trials: int, seed: int, noise: Optional[str] = None,
                    confidence: Optional[float] = None, workers: Optional[int] = None) -> List[RunRecord]:
    """Exact recovery of outer o which under one-sided noise, truncated at 10x the expected cost"""
    n = outer.arity
    fn = compose(outer, catalog(FunctionName.WHICH))
    algorithm = ZeroSidedRecover(outer=outer)
    y = tuple(int(b) for b in np.random.default_rng(seed).integers(0, 2, size=n))
    if not outer.in_promise(y):
        y = next(outer.promise_inputs())
    bits = tuple(b for yi in y for b in ((1, 0) if yi == 0 else (0, 1)))
    if noise is None:
        noises = _one_sided_grid(bits, seed)
    else:
        noises = [(noise, parse_noise(noise, 2 * n, NoiseKind.ONE_SIDED))]
    adversaries = [Adversary(id=name, bits=bits, noise=model) for name, model in noises]
    # each round costs 2 queries and succeeds with probability >= 1/2
    budget = truncation_budget(4 * n)
    estimates = estimate_error(algorithm, fn, adversaries, trials, seed, confidence=confidence,
                               workers=workers, budget=budget)
    verdicts = [e.errors == e.aborts and e.aborts <= trials / 10 for e in estimates]
    return _run_records(CheckId.ZERO_SIDED_RECOVER, algorithm, fn, estimates, seed, verdicts)


def one_query_runs(f: CatalogFunction, trials: int, seed: int, confidence: Optional[float] = None,
                   workers: Optional[int] = None) -> List[RunRecord]:
    """Empirical error within 4 standard deviations of the exact slice error"""
    algorithm = OneQuerySampler(m=f.arity)
    inputs = _gap_inputs(f)
    adversaries = [Adversary(id=name, bits=bits) for name, bits in inputs]
    estimates = estimate_error(algorithm, f, adversaries, trials, seed, confidence=confidence, workers=workers)
    verdicts = []
    for (_, bits), e in zip(inputs, estimates):
        exact = float(one_query_exact_error(bits, f.evaluate(bits)))
        verdicts.append(abs(e.error_rate - exact) <= 4 * math.sqrt(exact * (1 - exact) / trials))
    return _run_records(CheckId.ONE_QUERY, algorithm, f, estimates, seed, verdicts)


def compose_amp_runs(n: int, m: int, trials: int, seed: int, confidence: Optional[float] = None,
                     workers: Optional[int] = None) -> List[Record]:
    """NoisyOr over one-query gapmaj blocks, amplified to 1/(6n) inner error, plus cost accounting"""
    outer = NoisyOr(n=n)
    reps = chernoff_reps(Fraction(1, 3), Fraction(1, 6 * n))
    algorithm = ComposedAmplified(outer=outer, inner=OneQuerySampler(m=m), reps=reps, block_size=m)
    fn = compose(catalog(FunctionName.OR, n), catalog(FunctionName.GAPMAJ, m))
    low, high = _weight_prefix(m, m // 3), _weight_prefix(m, 2 * m // 3)
    adversaries = [
        Adversary(id="zeros", bits=low * n),
        Adversary(id="one-last", bits=low * (n - 1) + high),
    ]
    estimates = estimate_error(algorithm, fn, adversaries, trials, seed, confidence=confidence, workers=workers)
    cap = outer.raw_budget * reps
    records: List[Record] = _run_records(
        CheckId.COMPOSE_AMP, algorithm, fn, estimates, seed,
        [e.ci_high <= 1 / 3 and e.max_queries <= cap for e in estimates],
    )

    runs = 0
    for slot, adversary in enumerate(adversaries):
        for t in range(20):
            ledger = AmplificationLedger()
            rng = np.random.default_rng([seed, 1000 + slot, t])
            stats = drive(algorithm.start(rng, ledger), adversary.bits, adversary.noise, rng)
            if ledger.inner_runs != reps * ledger.outer_queries or ledger.inner_raw != stats.raw_queries:
                raise VerificationError(
                    CheckId.COMPOSE_AMP.value, "amplified run cost does not decompose",
                    witness={"ledger": ledger, "raw_queries": stats.raw_queries, "reps": reps},
                )
            runs += 1
    records.append(check_record(
        CheckId.COMPOSE_AMP.value, {"n": n, "m": m, "reps": reps, "mode": "accounting"},
        instances=runs, witness={"reps": reps, "query_cap": cap},
    ))
    return records


# -------------------------
# Worked examples
# -------------------------

def postselection_worked_example() -> List[Record]:
    """One-query tree on gapmaj[3] at eps = 1/3: the certificate meets its bound with equality"""
    d0, d1 = gapmaj_slices(3)
    eps = Fraction(1, 3)
    certificate = extract_postselection_certificate(one_query_tree(3), d0, d1, eps)
    lhs = eps * certificate.p_z
    rhs = (1 - eps) * certificate.p_other
    if not certificate.holds() or lhs != Fraction(2, 9) or rhs != Fraction(2, 9):
        raise VerificationError(
            CheckId.POSTSELECTION_EXTRACTION.value, "worked example is not the equality case",
            witness={"certificate": certificate, "lhs": lhs, "rhs": rhs},
        )
    return [check_record(
        CheckId.POSTSELECTION_EXTRACTION.value, {"fn": "gapmaj[3]", "epsilon": eps, "mode": "worked-example"},
        instances=1, witness={"conjunction": str(certificate.conjunction), "z": certificate.z, "lhs": lhs, "rhs": rhs},
    )]


def wapp_worked_example() -> List[Record]:
    """Exact not-gapor[4] tree with D_0 = G_1, D_1 = D_2 = G_0 and eps = 1/36"""
    f = catalog(FunctionName.NOT_GAPOR, 4)
    g0, g1 = gapor_slices(4)
    eps = Fraction(1, 36)
    tree = exact_tree(dict(f.labelled_inputs()), 4)
    rt = RandomizedTree(support=((tree, Fraction(1)),), name=f"exact[{f.name}]")
    certificate = extract_wapp_certificate(rt, Fraction(1), g1, g0, g0, eps)
    # d = 2 sqrt(1/36) = 1/3
    if not certificate.holds() or 3 * certificate.p0 > certificate.p1:
        raise VerificationError(
            CheckId.WAPP_EXTRACTION.value, "worked example certificate misses C(G_1) <= C(G_0)/3",
            witness={"certificate": certificate},
        )
    return [check_record(
        CheckId.WAPP_EXTRACTION.value, {"fn": f.name, "epsilon": eps, "mode": "worked-example"},
        instances=1,
        witness={"conjunction": str(certificate.conjunction), "c_g1": certificate.p0, "c_g0": certificate.p1},
    )]


# -------------------------
# Solvers
# -------------------------

def _label_pair(f: PartialFunction) -> Tuple[Distribution, Distribution]:
    """Uniform distributions over f^-1(0) and f^-1(1); weight slices for gap functions"""
    if isinstance(f, CatalogFunction) and f.kind is FunctionName.GAPMAJ:
        return gapmaj_slices(f.arity)
    if isinstance(f, CatalogFunction) and f.kind is FunctionName.GAPOR:
        return gapor_slices(f.arity)
    if not f.is_boolean:
        raise PremiseError(f"{f.name} is not Boolean-valued")
    by_label: Dict[Any, List[Bits]] = {0: [], 1: []}
    for x, label in f.labelled_inputs():
        by_label[label].append(x)
    if not by_label[0] or not by_label[1]:
        raise PremiseError(f"{f.name} is constant on its promise")
    return ExplicitDistribution.uniform(by_label[0]), ExplicitDistribution.uniform(by_label[1])


def balanced_distribution(f: PartialFunction) -> ExplicitDistribution:
    d0, d1 = _label_pair(f)
    return mix([(d0, Fraction(1, 2)), (d1, Fraction(1, 2))])


def solve_distributional(f: PartialFunction, depth: int) -> List[Record]:
    value, tree = distributional_opt_error(f, balanced_distribution(f), depth)
    return [check_record(
        CheckId.DISTRIBUTIONAL.value, {"fn": f.name, "depth": depth},
        instances=1, witness={"value": value, "tree": tree},
    )]


def solve_decide(f: PartialFunction, eps: Fraction, depth: int) -> List[Record]:
    """Double-oracle decision, cross-checked against full enumeration on at most 3 bits"""
    decided, result = randomized_qc_decide(f, eps, depth)
    params = {"fn": f.name, "epsilon": eps, "depth": depth}
    witness: Dict[str, Any] = {"value": result.value, "decision": decided, "iterations": result.iterations}
    passed = True
    if f.is_boolean and f.arity <= 3 and depth <= 2:
        full = game_value_full(f, depth).value
        witness["full_value"] = full
        passed = full == result.value
    return [check_record(CheckId.GAME_VALUE.value, params, passed=passed, instances=1, witness=witness)]


def solve_junta(f: PartialFunction, eps: Fraction) -> List[Record]:
    width, solution = conical_junta_degree(f, eps)
    return [check_record(
        CheckId.JUNTA_DEGREE.value, {"fn": f.name, "epsilon": eps},
        instances=1, witness={"width": width, "solution": solution},
    )]


def solve_certificate_search(f: PartialFunction, eps: Fraction, max_width: int) -> List[Record]:
    d0, d1 = _label_pair(f)
    certificate = postbpp_certificate_search(d0, d1, eps, max_width)
    witness: Dict[str, Any] = {"found": certificate is not None}
    if certificate is not None:
        witness.update(conjunction=str(certificate.conjunction), z=certificate.z,
                       p_z=certificate.p_z, p_other=certificate.p_other)
    return [check_record(
        CheckId.CERTIFICATE_SEARCH.value, {"fn": f.name, "epsilon": eps, "max_width": max_width},
        instances=1, witness=witness,
    )]


def _named_small_functions() -> List[PartialFunction]:
    return [
        catalog(FunctionName.OR, 2), catalog(FunctionName.OR, 3),
        catalog(FunctionName.XOR, 2), catalog(FunctionName.XOR, 3),
        catalog(FunctionName.OMB, 2), catalog(FunctionName.OMB, 3),
        catalog(FunctionName.MAJ, 2), catalog(FunctionName.WHICH),
        catalog(FunctionName.GAPOR, 2), catalog(FunctionName.NOT_GAPOR, 2), catalog(FunctionName.GAPMAJ, 3),
        catalog(FunctionName.ID, 2),
    ]


def _random_total_functions(count: int, seed: int, max_arity: int = 3) -> List[PartialFunction]:
    rng = np.random.default_rng(seed)
    functions = []
    for _ in range(count):
        arity = int(rng.integers(1, max_arity + 1))
        functions.append(TableFunction.from_truth(arity, [int(b) for b in rng.integers(0, 2, size=2 ** arity)]))
    return functions


def game_value_battery(seed: int, count: int = 50, depths: Sequence[int] = (0, 1, 2)) -> List[Record]:
    """Double oracle against full enumeration on named and seeded random small functions"""
    named = _named_small_functions()
    functions = named + _random_total_functions(count, seed)
    instances = iterations = 0
    for f in functions:
        for depth in depths:
            _, result = randomized_qc_decide(f, Fraction(0), depth)
            full = game_value_full(f, depth)
            if result.value != full.value:
                raise VerificationError(
                    CheckId.GAME_VALUE.value, f"double oracle {result.value} != enumeration {full.value}",
                    witness={"fn": f.name, "depth": depth},
                )
            instances += 1
            iterations = max(iterations, result.iterations)
    return [check_record(
        CheckId.GAME_VALUE.value, {"named": [f.name for f in named], "random": count, "seed": seed,
                                   "depths": list(depths)},
        instances=instances, witness={"max_iterations": iterations},
    )]


def solver_examples() -> List[Record]:
    """Known exact answers of the solvers on tiny gap and total functions"""
    records: List[Record] = []
    gapmaj3 = catalog(FunctionName.GAPMAJ, 3)
    value, _ = distributional_opt_error(gapmaj3, balanced_distribution(gapmaj3), 1)
    records.append(check_record(
        CheckId.DISTRIBUTIONAL.value, {"fn": gapmaj3.name, "depth": 1},
        passed=value == Fraction(1, 3), instances=1, witness={"value": value, "expected": Fraction(1, 3)},
    ))

    or2 = catalog(FunctionName.OR, 2)
    width, _ = conical_junta_degree(or2, Fraction(0))
    records.append(check_record(
        CheckId.JUNTA_DEGREE.value, {"fn": or2.name, "epsilon": 0},
        passed=width == 2, instances=1, witness={"width": width, "expected": 2},
    ))

    not_gapor = catalog(FunctionName.NOT_GAPOR, 12)
    width, _ = conical_junta_degree(not_gapor, Fraction(1, 100))
    records.append(check_record(
        CheckId.JUNTA_DEGREE.value, {"fn": not_gapor.name, "epsilon": Fraction(1, 100)},
        passed=width >= 2, instances=1, witness={"width": width, "lower_bound": 2},
    ))

    d0, d1 = gapmaj_slices(6)
    found = postbpp_certificate_search(d0, d1, Fraction(1, 3), 1)
    missing = postbpp_certificate_search(d0, d1, Fraction(1, 10), 1)
    records.append(check_record(
        CheckId.CERTIFICATE_SEARCH.value, {"fn": "gapmaj[6]", "max_width": 1, "epsilon": [Fraction(1, 3), Fraction(1, 10)]},
        passed=found is not None and missing is None, instances=2,
        witness={"found_at_1/3": str(found.conjunction) if found else None, "found_at_1/10": missing is not None},
    ))

    # a depth-r procedure and a width-r search must agree
    g0, g1 = gapmaj_slices(3)
    extracted = extract_postselection_certificate(one_query_tree(3), g0, g1, Fraction(1, 3))
    searched = postbpp_certificate_search(g0, g1, Fraction(1, 3), 1)
    records.append(check_record(
        CheckId.CERTIFICATE_SEARCH.value, {"fn": "gapmaj[3]", "max_width": 1, "epsilon": Fraction(1, 3),
                                           "mode": "extraction-agrees"},
        passed=searched is not None and extracted.width <= 1, instances=1,
        witness={"extracted": str(extracted.conjunction), "searched": str(searched.conjunction) if searched else None},
    ))
    return records


# -------------------------
# Suite plans
# -------------------------

def _step(check: CheckId, params: Dict[str, Any], action: Callable[..., List[Record]], *args, **kwargs) -> Step:
    return check, params, partial(action, *args, **kwargs)


def _zero_sided_outer(config: ExperimentConfig) -> PartialFunction:
    if config.fn is None:
        return catalog(FunctionName.XOR, _need(config.n, "--n", "zero-sided-recover"))
    f = parse_function(config.fn)
    if isinstance(f, ComposedFunction):
        if not (isinstance(f.inner, CatalogFunction) and f.inner.kind is FunctionName.WHICH):
            raise FunctionSpecError(f"zero-sided-recover needs an outer function over which blocks, got {f.name}")
        return f.outer
    return f


def _one_query_function(config: ExperimentConfig) -> CatalogFunction:
    if config.fn is None:
        return catalog(FunctionName.GAPMAJ, _need(config.m, "--m", "one-query"))
    f = parse_function(config.fn)
    if not isinstance(f, CatalogFunction):
        raise FunctionSpecError(f"one-query runs on a single gap function, got {f.name}")
    return f


def simulation_plan(config: ExperimentConfig) -> List[Step]:
    seed = _require_seed(config)
    alg = _need(config.alg, "--alg", "simulate")
    trials = config.trials or get_settings().default_trials
    if config.noise is not None and alg not in (AlgorithmName.NOISY_OR, AlgorithmName.ZERO_SIDED_RECOVER):
        raise ConfigurationError("--noise applies to noisy-or and zero-sided-recover only")
    common = {"confidence": config.confidence, "workers": config.workers}
    params = {"alg": alg, "trials": trials, "seed": seed}
    if alg is AlgorithmName.NOISY_OR:
        n = _need(config.n, "--n", alg.value)
        return [_step(CheckId.NOISY_OR, {**params, "n": n}, noisy_or_runs, n, trials, seed, config.noise, **common)]
    if alg is AlgorithmName.WHICH_EVAL:
        m = _need(config.m, "--m", alg.value)
        if m % 2 or m < 2:
            raise FunctionSpecError(f"gapor requires m divisible by 2, got m={m}")
        return [_step(CheckId.WHICH_EVAL, {**params, "m": m}, which_eval_runs, m, trials, seed, **common)]
    if alg is AlgorithmName.ZERO_SIDED_RECOVER:
        outer = _zero_sided_outer(config)
        return [_step(CheckId.ZERO_SIDED_RECOVER, {**params, "fn": outer.name}, zero_sided_runs,
                      outer, trials, seed, config.noise, **common)]
    if alg is AlgorithmName.ONE_QUERY:
        f = _one_query_function(config)
        _gap_inputs(f)
        return [_step(CheckId.ONE_QUERY, {**params, "fn": f.name}, one_query_runs, f, trials, seed, **common)]
    n = _need(config.n, "--n", alg.value)
    m = _need(config.m, "--m", alg.value)
    catalog(FunctionName.GAPMAJ, m)
    return [_step(CheckId.COMPOSE_AMP, {**params, "n": n, "m": m}, compose_amp_runs, n, m, trials, seed, **common)]


def _verification_step(check: CheckId, config: ExperimentConfig) -> Step:
    n, m, width, samples = config.n, config.m, config.max_width, config.trials
    what = check.value
    if check is CheckId.GAPMAJ_RATIO:
        m = _need(m, "--m", what)
        width = 3 if width is None else width
        return _step(check, {"m": m, "max_width": width}, lambda: [verify_gapmaj_ratio(m, width)])
    if check is CheckId.SLICE_FORMULA:
        m = _need(m, "--m", what)
        return _step(check, {"m": m}, lambda: [verify_slice_formula(m)])
    if check is CheckId.GAPOR_SLICES:
        m = _need(m, "--m", what)
        width = 3 if width is None else width
        return _step(check, {"m": m, "max_width": width}, lambda: [verify_gapor_facts(m, width)])
    if check is CheckId.XOR_FOURIER:
        n, m = _need(n, "--n", what), _need(m, "--m", what)
        if samples:
            seed = _require_seed(config)
            return _step(check, {"n": n, "m": m, "samples": samples},
                         lambda: [sweep_xor_random(n, m, samples, seed, width)])
        width = 4 if width is None else width
        return _step(check, {"n": n, "m": m, "max_width": width}, lambda: [sweep_xor_profiles(n, m, width)])
    if check is CheckId.MAJ_CASES:
        n = _need(n, "--n", what)
        if samples and m is None:
            seed = _require_seed(config)
            return _step(check, {"n": n, "samples": samples}, lambda: [sweep_maj_instances(n, samples, seed)])
        m = _need(m, "--m", what)
        if samples:
            seed = _require_seed(config)
            return _step(check, {"n": n, "m": m, "samples": samples},
                         lambda: [sweep_maj_random(n, m, samples, seed, width)])
        return _step(check, {"n": n, "m": m, "max_width": width}, lambda: [sweep_maj_profiles(n, m, width)])
    sweeps = {
        CheckId.SYM_INEQUALITY: (sweep_sym_inequality, 1000),
        CheckId.OUTCOME_SELECTION: (sweep_outcome_selection, 500),
        CheckId.POSTSELECTION_EXTRACTION: (sweep_postselection_extraction, 500),
        CheckId.WAPP_EXTRACTION: (sweep_wapp_extraction, 500),
    }
    if check in sweeps:
        sweep, default = sweeps[check]
        seed = _require_seed(config)
        count = samples or default
        return _step(check, {"samples": count, "seed": seed}, lambda: [sweep(count, seed)])
    if check is CheckId.WALK_LEMMA:
        seed = _require_seed(config)
        walks = samples or get_settings().default_trials
        return _step(check, {"walks": walks, "seed": seed}, walk_lemma_check, walks, seed)
    if check is CheckId.VOTE5:
        return _step(check, {"nu": "1/3"}, vote5_check)
    if check is CheckId.NOISY_OR:
        sizes = tuple(range(1, (n or 4) + 1))
        return _step(check, {"sizes": list(sizes)}, noisy_or_exact_check, sizes)
    raise ConfigurationError(f"{what} is not a certificate check; run it through simulate or solve")


def verification_plan(config: ExperimentConfig) -> List[Step]:
    if not config.check:
        raise ConfigurationError("verify-certificates needs at least one --check")
    return [_verification_step(check, config) for check in config.check]


def solve_plan(config: ExperimentConfig) -> List[Step]:
    problem = _need(config.problem, "--problem", "solve")
    f = parse_function(_need(config.fn, "--fn", "solve"))
    params = {"fn": f.name, "problem": problem}
    if problem is Problem.DISTRIBUTIONAL:
        depth = _need(config.depth, "--depth", problem.value)
        return [_step(CheckId.DISTRIBUTIONAL, params, solve_distributional, f, depth)]
    eps = _need(config.epsilon, "--epsilon", problem.value)
    if problem is Problem.DECIDE:
        depth = _need(config.depth, "--depth", problem.value)
        return [_step(CheckId.GAME_VALUE, params, solve_decide, f, eps, depth)]
    if problem is Problem.JUNTA:
        return [_step(CheckId.JUNTA_DEGREE, params, solve_junta, f, eps)]
    width = 1 if config.max_width is None else config.max_width
    return [_step(CheckId.CERTIFICATE_SEARCH, params, solve_certificate_search, f, eps, width)]


def reproduce_plan(seed: int, trials: int, confidence: Optional[float] = None,
                   workers: Optional[int] = None) -> List[Step]:
    """The full acceptance battery in its fixed order

    ``trials`` scales every stochastic check; random sweeps use
    min(trials, their default sample count).
    """
    common = {"confidence": confidence, "workers": workers}
    samples = min(trials, 10_000)
    small = min(trials, 500)
    steps: List[Step] = []
    add = steps.append

    for n in (50, 200):
        add(_step(CheckId.NOISY_OR, {"n": n, "trials": trials}, noisy_or_runs, n, trials, seed, **common))
    add(_step(CheckId.NOISY_OR, {"sizes": [1, 2, 3, 4]}, noisy_or_exact_check))
    add(_step(CheckId.WALK_LEMMA, {"walks": trials}, walk_lemma_check, trials, seed))
    add(_step(CheckId.VOTE5, {"nu": "1/3"}, vote5_check))

    for m in (6, 9, 12, 21):
        add(_step(CheckId.GAPMAJ_RATIO, {"m": m}, lambda m=m: [verify_gapmaj_ratio(m, 3)]))
    for m in range(1, 9):
        add(_step(CheckId.SLICE_FORMULA, {"m": m}, lambda m=m: [verify_slice_formula(m)]))
    for m in (4, 8, 16, 24):
        add(_step(CheckId.GAPOR_SLICES, {"m": m}, lambda m=m: [verify_gapor_facts(m, 3)]))

    for n in range(1, 6):
        for m in (3, 6):
            add(_step(CheckId.XOR_FOURIER, {"n": n, "m": m}, lambda n=n, m=m: [sweep_xor_profiles(n, m, 4)]))
    add(_step(CheckId.XOR_FOURIER, {"n": 32, "m": 18, "samples": samples},
              lambda: [sweep_xor_random(32, 18, samples, seed)]))

    for n in (4, 6, 8):
        count = min(trials, 200)
        add(_step(CheckId.MAJ_CASES, {"n": n, "samples": count},
                  lambda n=n, count=count: [sweep_maj_instances(n, count, seed)]))
    add(_step(CheckId.SYM_INEQUALITY, {"samples": min(trials, 1000)},
              lambda: [sweep_sym_inequality(min(trials, 1000), seed)]))
    for n, m in ((2, 2), (2, 4), (4, 2), (4, 4)):
        add(_step(CheckId.MAJ_CASES, {"n": n, "m": m}, lambda n=n, m=m: [sweep_maj_profiles(n, m)]))
    add(_step(CheckId.MAJ_CASES, {"n": 32, "m": 32, "samples": samples},
              lambda: [sweep_maj_random(32, 32, samples, seed, max_width=10)]))

    add(_step(CheckId.OUTCOME_SELECTION, {"samples": small}, lambda: [sweep_outcome_selection(small, seed)]))
    add(_step(CheckId.POSTSELECTION_EXTRACTION, {"samples": small},
              lambda: [sweep_postselection_extraction(small, seed)]))
    add(_step(CheckId.POSTSELECTION_EXTRACTION, {"mode": "worked-example"}, postselection_worked_example))
    add(_step(CheckId.WAPP_EXTRACTION, {"samples": small}, lambda: [sweep_wapp_extraction(small, seed)]))
    add(_step(CheckId.WAPP_EXTRACTION, {"mode": "worked-example"}, wapp_worked_example))

    add(_step(CheckId.WHICH_EVAL, {"m": 4}, which_eval_runs, 4, trials, seed, **common))
    add(_step(CheckId.ZERO_SIDED_RECOVER, {"n": 20}, zero_sided_runs,
              catalog(FunctionName.XOR, 20), trials, seed, **common))
    for f in (catalog(FunctionName.GAPMAJ, 3), catalog(FunctionName.GAPMAJ, 9), catalog(FunctionName.GAPOR, 4)):
        add(_step(CheckId.ONE_QUERY, {"fn": f.name}, one_query_runs, f, trials, seed, **common))
    add(_step(CheckId.COMPOSE_AMP, {"n": 3, "m": 3}, compose_amp_runs, 3, 3, max(200, trials // 100), seed,
              **common))

    add(_step(CheckId.GAME_VALUE, {"count": 50}, game_value_battery, seed))
    add(_step(CheckId.DISTRIBUTIONAL, {"mode": "examples"}, solver_examples))
    return steps


def plan(config: ExperimentConfig) -> List[Step]:
    """Resolve a configuration to its ordered steps; usage errors surface here, before any record"""
    if config.suite is Suite.SIMULATE:
        return simulation_plan(config)
    if config.suite is Suite.VERIFY_CERTIFICATES:
        return verification_plan(config)
    if config.suite is Suite.SOLVE:
        return solve_plan(config)
    seed = 7 if config.seed is None else config.seed
    trials = config.trials or get_settings().reproduce_trials
    steps = reproduce_plan(seed, trials, config.confidence, config.workers)
    if config.check:
        steps = [step for step in steps if step[0] in config.check]
    return steps


# -------------------------
# Runner
# -------------------------

def run_steps(steps: Sequence[Step]) -> Iterator[Record]:
    for check, params, action in steps:
        logger.info("%s %s", check.value, ", ".join(f"{k}={v}" for k, v in params.items()))
        yield from _guarded(check, params, action)


def run_suite(config: ExperimentConfig, writer: ReportWriter, steps: Optional[Sequence[Step]] = None) -> SummaryRecord:
    """Run the configured suite, writing the header, every record and the summary

    Args:
        steps: an already resolved plan; resolved from config when omitted

    Raises:
        QueryLabError: usage errors (ValueError subclasses) before or during the run
    """
    if steps is None:
        steps = plan(config)
    writer.emit(config.header())
    for record in run_steps(steps):
        writer.emit(record)
    summary = writer.summary(config.suite.value)
    writer.emit(summary)
    return summary
