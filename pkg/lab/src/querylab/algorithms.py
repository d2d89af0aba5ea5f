"""Query procedures: noisy OR, amplified composition, block evaluators and samplers.

Every procedure is a frozen pydantic model whose ``start(rng)`` returns a
fresh generator, so one instance can be run concurrently and pickled to
worker processes.
"""

import logging
import math
from collections import defaultdict
from enum import Enum
from fractions import Fraction
from math import comb
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .boolfn import ABORT, Bits, PartialFunction
from .config import get_settings
from .dtree import NoiseKind, NoiseModel, QueryRun
from .errors import WalkRegimeError

logger = logging.getLogger(__name__)


class AlgorithmName(str, Enum):
    """Algorithms addressable from the command line"""
    NOISY_OR = "noisy-or"
    COMPOSE_AMP = "compose-amp"
    WHICH_EVAL = "which-eval"
    ZERO_SIDED_RECOVER = "zero-sided-recover"
    ONE_QUERY = "one-query"


# -------------------------
# Five-vote noise reduction
# -------------------------

def vote5_flip(nu: Union[Fraction, int, str]) -> Fraction:
    """Probability that the majority of five independent reads is wrong"""
    nu = Fraction(nu)
    return sum((comb(5, k) * nu ** k * (1 - nu) ** (5 - k) for k in range(3, 6)), Fraction(0))


def vote5(index: int) -> QueryRun:
    """Query ``index`` five times and return the majority reading"""
    ones = 0
    for _ in range(5):
        ones += yield index
    return int(ones >= 3)


def _effective_flips(bits: Sequence[int], noise: NoiseModel) -> np.ndarray:
    flips = []
    for i, y in enumerate(bits):
        if noise.kind is NoiseKind.ONE_SIDED and not y:
            flips.append(0.0)
        else:
            flips.append(float(vote5_flip(noise.nu(i))))
    return np.array(flips)


# -------------------------
# Noisy OR
# -------------------------

class NoisyOr(BaseModel):
    """OR of n noisy bits with O(n) queries and no amplification

    Each bit is read through five-vote majorities while a +-1 walk tracks
    ones minus zeros; the bit is abandoned as soon as zeros lead. After
    6n logical reads the procedure gives up and answers 1.
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1)

    @property
    def name(self) -> str:
        return AlgorithmName.NOISY_OR.value

    @property
    def logical_budget(self) -> int:
        return 6 * self.n

    @property
    def raw_budget(self) -> int:
        return 5 * self.logical_budget

    def start(self, rng: np.random.Generator) -> QueryRun:
        total = 0
        for i in range(self.n):
            position = 0
            while True:
                if total >= self.logical_budget:
                    return 1
                bit = yield from vote5(i)
                total += 1
                position += 1 if bit else -1
                if position < 0:
                    break
        return 0

    def batch(self, bits: Sequence[int], noise: NoiseModel, rng: np.random.Generator,
              trials: int) -> Tuple[np.ndarray, np.ndarray]:
        """Vectorized runs; each logical read is one draw against its five-vote flip rate

        Returns:
            (outputs, raw query counts), one entry per trial
        """
        n = self.n
        y = np.asarray(bits, dtype=np.int64)
        flips = _effective_flips(bits, noise)
        current = np.zeros(trials, dtype=np.int64)
        position = np.zeros(trials, dtype=np.int64)
        total = np.zeros(trials, dtype=np.int64)
        outputs = np.zeros(trials, dtype=np.int64)
        active = np.ones(trials, dtype=bool)
        while True:
            live = np.flatnonzero(active)
            if live.size == 0:
                break
            exhausted = total[live] >= self.logical_budget
            outputs[live[exhausted]] = 1
            active[live[exhausted]] = False
            live = live[~exhausted]
            if live.size == 0:
                break
            i = current[live]
            vote = y[i] ^ (rng.random(live.size) < flips[i])
            total[live] += 1
            position[live] += np.where(vote == 1, 1, -1)
            moved = live[position[live] < 0]
            current[moved] += 1
            position[moved] = 0
            done = moved[current[moved] >= n]
            outputs[done] = 0
            active[done] = False
        return outputs, 5 * total


def noisy_or_output_law(bits: Sequence[int], noise: NoiseModel) -> Dict[int, Fraction]:
    """Exact output distribution of NoisyOr by a DP over (bit, walk position, reads used)"""
    n = len(bits)
    budget = 6 * n
    flips = []
    for i, y in enumerate(bits):
        if noise.kind is NoiseKind.ONE_SIDED and not y:
            flips.append(Fraction(0))
        else:
            flips.append(vote5_flip(noise.nu(i)))
    law = {0: Fraction(0), 1: Fraction(0)}
    states: Dict[Tuple[int, int, int], Fraction] = {(0, 0, 0): Fraction(1)}
    while states:
        nxt: Dict[Tuple[int, int, int], Fraction] = defaultdict(Fraction)
        for (i, position, total), p in states.items():
            if total >= budget:
                law[1] += p
                continue
            one = 1 - flips[i] if bits[i] else flips[i]
            if one:
                nxt[(i, position + 1, total + 1)] += p * one
            zero = 1 - one
            if not zero:
                continue
            if position == 0:
                if i + 1 == n:
                    law[0] += p * zero
                else:
                    nxt[(i + 1, 0, total + 1)] += p * zero
            else:
                nxt[(i, position - 1, total + 1)] += p * zero
        states = nxt
    return law


def noisy_or_exact_error(bits: Sequence[int], noise: NoiseModel) -> Fraction:
    """Exact probability that NoisyOr answers wrongly on this input"""
    law = noisy_or_output_law(bits, noise)
    return law[0] if any(bits) else law[1]


# -------------------------
# Random walk
# -------------------------

class WalkParams(BaseModel):
    """+-1 walk from 0 that steps right with probability p"""

    model_config = ConfigDict(frozen=True)

    p: Fraction

    @field_validator("p", mode="before")
    @classmethod
    def _exact(cls, value: Any) -> Fraction:
        if isinstance(value, float):
            value = str(value)
        value = Fraction(value)
        if not 0 <= value <= 1:
            raise ValueError(f"p must lie in [0, 1], got {value}")
        return value


def walk_hit_time(params: WalkParams) -> Fraction:
    """Expected steps until the walk first visits -1: 1/(1-2p)

    Raises:
        WalkRegimeError: p >= 1/2, where the expectation is infinite
    """
    if params.p >= Fraction(1, 2):
        raise WalkRegimeError(f"hitting time is infinite for p={params.p} >= 1/2", value=math.inf)
    return 1 / (1 - 2 * params.p)


def walk_hit_probability(params: WalkParams) -> Fraction:
    """Probability that the walk ever visits -1: (1-p)/p

    Raises:
        WalkRegimeError: p <= 1/2, where the walk hits -1 almost surely
    """
    if params.p <= Fraction(1, 2):
        raise WalkRegimeError(f"walk hits -1 with probability 1 for p={params.p} <= 1/2", value=1)
    return (1 - params.p) / params.p


def simulate_hit_times(p: float, walks: int, rng: np.random.Generator,
                       max_steps: int = 1_000_000) -> np.ndarray:
    """First-visit times of -1 for ``walks`` independent walks (p < 1/2)"""
    position = np.zeros(walks, dtype=np.int64)
    times = np.zeros(walks, dtype=np.int64)
    active = np.arange(walks)
    steps = 0
    while active.size and steps < max_steps:
        step = np.where(rng.random(active.size) < p, 1, -1)
        position[active] += step
        times[active] += 1
        active = active[position[active] >= 0]
        steps += 1
    if active.size:
        logger.warning("%d walks still running after %d steps", active.size, max_steps)
    return times


def hit_probability_dp(p: float, horizon: int = 10_000) -> float:
    """Probability of visiting -1 within ``horizon`` steps, by an absorbing-chain DP"""
    mass = np.zeros(horizon + 2)
    mass[0] = 1.0
    hit = 0.0
    q = 1.0 - p
    for _ in range(horizon):
        hit += mass[0] * q
        moved = np.zeros_like(mass)
        moved[1:] += mass[:-1] * p
        moved[:-1] += mass[1:] * q
        mass = moved
    return hit


# -------------------------
# Wrappers and composition
# -------------------------

class AmplificationLedger(BaseModel):
    """Cost accounting of one amplified composed run"""

    outer_queries: int = 0
    inner_runs: int = 0
    inner_raw: int = 0


def _relocated(run: QueryRun, offset: int, ledger: Optional[AmplificationLedger]) -> QueryRun:
    try:
        j = next(run)
    except StopIteration as stop:
        return stop.value
    while True:
        bit = yield offset + j
        if ledger is not None:
            ledger.inner_raw += 1
        try:
            j = run.send(bit)
        except StopIteration as stop:
            return stop.value


class BudgetedProcedure(BaseModel):
    """Stops the inner procedure after ``budget`` raw queries and outputs ``on_exhaustion``"""

    model_config = ConfigDict(frozen=True)

    inner: Any
    budget: int = Field(..., ge=0)
    on_exhaustion: Any = ABORT

    @property
    def name(self) -> str:
        return f"budgeted({self.inner.name},{self.budget})"

    def start(self, rng: np.random.Generator) -> QueryRun:
        run = self.inner.start(rng)
        used = 0
        try:
            j = next(run)
        except StopIteration as stop:
            return stop.value
        while True:
            if used >= self.budget:
                run.close()
                return self.on_exhaustion
            bit = yield j
            used += 1
            try:
                j = run.send(bit)
            except StopIteration as stop:
                return stop.value


def truncation_budget(expected_queries: Union[int, Fraction]) -> int:
    """Markov truncation at truncation_factor times the expectation"""
    return math.ceil(get_settings().truncation_factor * expected_queries)


class ComposedAmplified(BaseModel):
    """Outer procedure whose every query is answered by a majority of ``reps`` inner runs

    Outer query i runs the inner procedure on block i (global index
    i*block_size + j). An aborted inner run votes 0.
    """

    model_config = ConfigDict(frozen=True)

    outer: Any
    inner: Any
    reps: int = Field(..., ge=1)
    block_size: int = Field(..., ge=1)

    @model_validator(mode="after")
    def _odd_reps(self):
        if self.reps % 2 == 0:
            raise ValueError(f"reps must be odd for a strict majority, got {self.reps}")
        return self

    @property
    def name(self) -> str:
        return f"{AlgorithmName.COMPOSE_AMP.value}({self.outer.name},{self.inner.name},x{self.reps})"

    def start(self, rng: np.random.Generator, ledger: Optional[AmplificationLedger] = None) -> QueryRun:
        outer_run = self.outer.start(rng)
        try:
            i = next(outer_run)
        except StopIteration as stop:
            return stop.value
        while True:
            if ledger is not None:
                ledger.outer_queries += 1
            ones = 0
            for _ in range(self.reps):
                vote = yield from _relocated(self.inner.start(rng), i * self.block_size, ledger)
                if ledger is not None:
                    ledger.inner_runs += 1
                ones += int(vote == 1)
            try:
                i = outer_run.send(int(2 * ones > self.reps))
            except StopIteration as stop:
                return stop.value


def chernoff_reps(inner_error: Union[Fraction, float], target: Union[Fraction, float]) -> int:
    """Smallest odd r with exp(-2 r (1/2 - e)^2) <= target

    Raises:
        ValueError: inner_error >= 1/2 or target outside (0, 1)
    """
    gap = 0.5 - float(inner_error)
    if gap <= 0:
        raise ValueError(f"inner error {inner_error} leaves no majority margin")
    if not 0 < float(target) < 1:
        raise ValueError(f"target {target} must lie in (0, 1)")
    reps = max(1, math.ceil(math.log(1 / float(target)) / (2 * gap * gap)))
    return reps if reps % 2 else reps + 1


# -------------------------
# Block procedures
# -------------------------

class WhichGapOrEval(BaseModel):
    """Finds which half of a 2m-bit block holds the ones by random probing

    Needs a noiseless oracle and an input on the promise; wrap it in a
    BudgetedProcedure to bound the running time.
    """

    model_config = ConfigDict(frozen=True)

    m: int = Field(..., ge=2)

    @property
    def name(self) -> str:
        return AlgorithmName.WHICH_EVAL.value

    def start(self, rng: np.random.Generator) -> QueryRun:
        while True:
            j = int(rng.integers(0, 2 * self.m))
            if (yield j):
                return 0 if j < self.m else 1


class ZeroSidedRecover(BaseModel):
    """Recovers every 2-bit which-block under one-sided noise, then applies ``outer``

    Each round reads both bits of block i; the first round reporting
    exactly one 1 fixes the block. A reported 1 is never spurious under
    one-sided noise, so the recovered input is exact.
    """

    model_config = ConfigDict(frozen=True)

    outer: PartialFunction

    @property
    def name(self) -> str:
        return f"{AlgorithmName.ZERO_SIDED_RECOVER.value}({self.outer.name})"

    def start(self, rng: np.random.Generator) -> QueryRun:
        recovered = []
        for i in range(self.outer.arity):
            while True:
                left = yield 2 * i
                right = yield 2 * i + 1
                if left and right:
                    return ABORT
                if left or right:
                    recovered.append(0 if left else 1)
                    break
        return self.outer.evaluate(recovered)


class OneQuerySampler(BaseModel):
    """Outputs the bit at one uniformly random position"""

    model_config = ConfigDict(frozen=True)

    m: int = Field(..., ge=1)

    @property
    def name(self) -> str:
        return AlgorithmName.ONE_QUERY.value

    def start(self, rng: np.random.Generator) -> QueryRun:
        return (yield int(rng.integers(0, self.m)))

    def batch(self, bits: Sequence[int], noise: NoiseModel, rng: np.random.Generator,
              trials: int) -> Tuple[np.ndarray, np.ndarray]:
        y = np.asarray(bits, dtype=np.int64)
        positions = rng.integers(0, self.m, size=trials)
        nu = np.array([noise.nu_float(i) for i in range(self.m)])[positions]
        flipped = rng.random(trials) < nu
        if noise.kind is NoiseKind.ONE_SIDED:
            outputs = np.where(flipped, 0, y[positions])
        else:
            outputs = y[positions] ^ flipped
        return outputs, np.ones(trials, dtype=np.int64)


def one_query_exact_error(bits: Bits, expected: int) -> Fraction:
    """Exact noiseless error of OneQuerySampler on an input"""
    wrong = sum(1 for b in bits if b != expected)
    return Fraction(wrong, len(bits))
