"""Decision trees, noise channels and the query-execution engine.

A query procedure is any object with ``start(rng)`` returning a generator
that yields coordinate indices, receives the reported bit through
``send`` and finally returns its output label. Trees, and every
algorithm in ``querylab.algorithms``, follow that contract.
"""

import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, Generator, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator
from scipy.stats import beta

from .boolfn import ABORT, UNDEFINED, Bits, PartialFunction
from .config import get_settings
from .distributions import Conjunction
from .errors import NoiseSpecError, PromiseViolation

logger = logging.getLogger(__name__)

QueryRun = Generator[int, int, Any]


class QueryProcedure(Protocol):
    name: str

    def start(self, rng: np.random.Generator) -> QueryRun:
        ...


# -------------------------
# Trees
# -------------------------

class DeterministicTree(BaseModel):
    """Binary decision tree; a node is a leaf iff index is None"""

    model_config = ConfigDict(frozen=True)

    index: Optional[int] = None
    label: Any = None
    zero: Optional["DeterministicTree"] = None
    one: Optional["DeterministicTree"] = None

    @model_validator(mode="after")
    def _well_formed(self):
        if self.index is None:
            if self.zero is not None or self.one is not None:
                raise ValueError("a leaf has no children")
        elif self.zero is None or self.one is None or self.index < 0:
            raise ValueError("an internal node needs a valid index and two children")
        return self

    @property
    def name(self) -> str:
        return f"tree[depth={self.depth()}]"

    @property
    def is_leaf(self) -> bool:
        return self.index is None

    def evaluate(self, bits: Sequence[int]) -> Any:
        node = self
        while not node.is_leaf:
            node = node.one if bits[node.index] else node.zero
        return node.label

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.zero.depth(), self.one.depth())

    def max_index(self) -> int:
        if self.is_leaf:
            return -1
        return max(self.index, self.zero.max_index(), self.one.max_index())

    def leaves(self, include_contradictory: bool = False) -> List[Tuple[Optional[Conjunction], Any]]:
        """(path conjunction, label) for every root-to-leaf path

        Paths that query an index twice with different answers are skipped,
        or reported with a None conjunction when include_contradictory is set.
        """
        found: List[Tuple[Optional[Conjunction], Any]] = []

        def walk(node: "DeterministicTree", path: Dict[int, int], consistent: bool) -> None:
            if not consistent:
                if include_contradictory:
                    found.extend((None, label) for label in _leaf_labels(node))
                return
            if node.is_leaf:
                found.append((
                    Conjunction(
                        positive=frozenset(i for i, b in path.items() if b),
                        negative=frozenset(i for i, b in path.items() if not b),
                    ),
                    node.label,
                ))
                return
            for bit, child in ((0, node.zero), (1, node.one)):
                seen = path.get(node.index)
                walk(child, {**path, node.index: bit}, seen is None or seen == bit)

        walk(self, {}, True)
        return found

    def padded(self, r: int, arity: int) -> "DeterministicTree":
        """Perfect depth-r form: every leaf moved to depth r, labels unchanged

        Padding queries the smallest index not yet on the path (index 0
        once all are used; the contradictory branch then carries no mass).
        """
        def pad(node: "DeterministicTree", remaining: int, used: frozenset) -> "DeterministicTree":
            if remaining < 0:
                raise ValueError(f"tree is deeper than {r}")
            if node.is_leaf:
                if remaining == 0:
                    return node
                index = next((i for i in range(arity) if i not in used), 0)
                child = pad(node, remaining - 1, used | {index})
                return query(index, child, child)
            return query(
                node.index,
                pad(node.zero, remaining - 1, used | {node.index}),
                pad(node.one, remaining - 1, used | {node.index}),
            )

        return pad(self, r, frozenset())

    def start(self, rng: np.random.Generator) -> QueryRun:
        node = self
        while not node.is_leaf:
            bit = yield node.index
            node = node.one if bit else node.zero
        return node.label


def _leaf_labels(node: DeterministicTree) -> List[Any]:
    if node.is_leaf:
        return [node.label]
    return _leaf_labels(node.zero) + _leaf_labels(node.one)


def leaf(label: Any) -> DeterministicTree:
    return DeterministicTree(label=label)


def query(index: int, zero: DeterministicTree, one: DeterministicTree) -> DeterministicTree:
    return DeterministicTree(index=index, zero=zero, one=one)


class RandomizedTree(BaseModel):
    """Distribution over deterministic trees with exact weights"""

    model_config = ConfigDict(frozen=True)

    support: Tuple[Tuple[DeterministicTree, Fraction], ...]
    name: str = "randomized-tree"

    _weights: np.ndarray = PrivateAttr()

    @model_validator(mode="after")
    def _weights_valid(self):
        if not self.support:
            raise ValueError("empty support")
        if any(w <= 0 for _, w in self.support):
            raise ValueError("weights must be positive")
        total = sum((w for _, w in self.support), Fraction(0))
        if total != 1:
            raise ValueError(f"weights sum to {total}, not 1")
        return self

    def model_post_init(self, __context: Any) -> None:
        self._weights = np.array([float(w) for _, w in self.support])

    def depth(self) -> int:
        return max(t.depth() for t, _ in self.support)

    def output_distribution(self, bits: Sequence[int]) -> Dict[Any, Fraction]:
        law: Dict[Any, Fraction] = {}
        for tree, w in self.support:
            label = tree.evaluate(bits)
            law[label] = law.get(label, Fraction(0)) + w
        return law

    def padded(self, r: int, arity: int) -> "RandomizedTree":
        return RandomizedTree(support=tuple((t.padded(r, arity), w) for t, w in self.support), name=self.name)

    def start(self, rng: np.random.Generator) -> QueryRun:
        tree = self.support[int(rng.choice(len(self.support), p=self._weights))][0]
        return (yield from tree.start(rng))


# -------------------------
# Noise
# -------------------------

class NoiseKind(str, Enum):
    """Noise channel family"""
    NONE = "none"
    TWO_SIDED = "two-sided"
    ONE_SIDED = "one-sided"


NOISE_CAPS = {
    NoiseKind.NONE: Fraction(0),
    NoiseKind.TWO_SIDED: Fraction(1, 3),
    NoiseKind.ONE_SIDED: Fraction(1, 2),
}


def _cap_violation(kind: NoiseKind, probs: Sequence[Fraction]) -> Optional[str]:
    cap = NOISE_CAPS[kind]
    for i, p in enumerate(probs):
        if p < 0 or p > cap:
            return f"{kind.value} noise needs 0 <= nu_{i} <= {cap}, got {p}"
    return None


class NoiseModel(BaseModel):
    """Fixed per-coordinate flip probabilities for one run"""

    model_config = ConfigDict(frozen=True)

    kind: NoiseKind = NoiseKind.NONE
    probs: Tuple[Fraction, ...] = ()

    _floats: Tuple[float, ...] = PrivateAttr(default=())

    @model_validator(mode="after")
    def _within_caps(self):
        problem = _cap_violation(self.kind, self.probs)
        if problem:
            raise ValueError(problem)
        return self

    def model_post_init(self, __context: Any) -> None:
        self._floats = tuple(float(p) for p in self.probs)

    @classmethod
    def build(cls, kind: NoiseKind, probs: Sequence[Fraction]) -> "NoiseModel":
        """Construct with a NoiseSpecError on a cap breach"""
        probs = tuple(Fraction(p) for p in probs)
        problem = _cap_violation(kind, probs)
        if problem:
            raise NoiseSpecError(problem)
        return cls(kind=kind, probs=probs)

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls()

    def nu(self, index: int) -> Fraction:
        if self.kind is NoiseKind.NONE or not self.probs:
            return Fraction(0)
        return self.probs[index]

    def nu_float(self, index: int) -> float:
        if self.kind is NoiseKind.NONE or not self._floats:
            return 0.0
        return self._floats[index]

    @property
    def label(self) -> str:
        if self.kind is NoiseKind.NONE:
            return "none"
        return f"{self.kind.value}:" + ",".join(str(p) for p in self.probs)


def answer_query(bits: Sequence[int], index: int, noise: NoiseModel, rng: np.random.Generator) -> int:
    """Report bit ``index`` through the noise channel

    Every call draws fresh, independent noise, including repeated queries
    of the same coordinate.

    Raises:
        IndexError: index outside [0, len(bits))
    """
    if not 0 <= index < len(bits):
        raise IndexError(f"query index {index} outside [0, {len(bits)})")
    y = int(bits[index])
    nu = noise.nu_float(index)
    if nu <= 0.0:
        return y
    if noise.kind is NoiseKind.ONE_SIDED:
        if y == 1 and rng.random() < nu:
            return 0
        return y
    if rng.random() < nu:
        return 1 - y
    return y


# -------------------------
# Engine
# -------------------------

class RunStats(BaseModel):
    """Outcome of one run of a query procedure"""

    output: Any
    raw_queries: int
    per_coordinate: Dict[int, int] = Field(default_factory=dict)
    transcript: Optional[List[Tuple[int, int]]] = None

    @property
    def aborted(self) -> bool:
        return self.output is ABORT


def drive(
    run: QueryRun,
    bits: Sequence[int],
    noise: NoiseModel,
    rng: np.random.Generator,
    budget: Optional[int] = None,
    record_transcript: bool = False,
    on_exhaustion: Any = ABORT,
) -> RunStats:
    """Answer a procedure's queries until it returns or the raw budget runs out

    Args:
        run: generator returned by a procedure's start(rng)
        bits: the true input
        noise: channel applied to every answer
        rng: source for noise draws
        budget: optional cap on raw queries
        record_transcript: keep (index, reported bit) pairs
        on_exhaustion: output when the budget is exhausted

    Returns:
        RunStats: output label and exact query counts
    """
    counts: Counter = Counter()
    transcript: Optional[List[Tuple[int, int]]] = [] if record_transcript else None
    raw = 0
    try:
        index = next(run)
        while True:
            if budget is not None and raw >= budget:
                run.close()
                output = on_exhaustion
                break
            bit = answer_query(bits, index, noise, rng)
            raw += 1
            counts[index] += 1
            if transcript is not None:
                transcript.append((index, bit))
            index = run.send(bit)
    except StopIteration as stop:
        output = stop.value
    return RunStats(output=output, raw_queries=raw, per_coordinate=dict(counts), transcript=transcript)


def run_algorithm(
    algorithm: QueryProcedure,
    bits: Sequence[int],
    noise: NoiseModel,
    rng: np.random.Generator,
    budget: Optional[int] = None,
    record_transcript: bool = False,
) -> RunStats:
    return drive(algorithm.start(rng), bits, noise, rng, budget=budget, record_transcript=record_transcript)


def run_tree(tree, bits: Sequence[int], noise: NoiseModel, rng: np.random.Generator) -> RunStats:
    """Run a deterministic or randomized tree; a randomized tree samples its support tree first"""
    return drive(tree.start(rng), bits, noise, rng)


# -------------------------
# Error estimation
# -------------------------

class Adversary(BaseModel):
    """A fixed input together with a fixed noise tuple"""

    model_config = ConfigDict(frozen=True)

    id: str
    bits: Bits
    noise: NoiseModel = Field(default_factory=NoiseModel)


class ErrorEstimate(BaseModel):
    """Per-adversary Monte Carlo summary"""

    adversary_id: str
    trials: int
    errors: int
    aborts: int = 0
    error_rate: float
    ci_low: float
    ci_high: float
    max_queries: int
    mean_queries: float


def clopper_pearson(errors: int, trials: int, confidence: float) -> Tuple[float, float]:
    """Exact two-sided binomial interval"""
    alpha = 1.0 - confidence
    low = 0.0 if errors == 0 else float(beta.ppf(alpha / 2, errors, trials - errors + 1))
    high = 1.0 if errors == trials else float(beta.ppf(1 - alpha / 2, errors + 1, trials - errors))
    return low, high


def _trial_block(algorithm, adversary: Adversary, expected, seed: int, slot: int,
                 first: int, last: int, budget: Optional[int]) -> Tuple[int, int, int, int]:
    errors = aborts = max_q = total_q = 0
    for trial in range(first, last):
        rng = np.random.default_rng([seed, slot, trial])
        stats = run_algorithm(algorithm, adversary.bits, adversary.noise, rng, budget=budget)
        if stats.output is ABORT:
            aborts += 1
        if stats.output != expected:
            errors += 1
        max_q = max(max_q, stats.raw_queries)
        total_q += stats.raw_queries
    return errors, aborts, max_q, total_q


def _batch_counts(algorithm, adversary: Adversary, expected, trials: int, seed: int, slot: int,
                  chunk: int) -> Tuple[int, int, int, int]:
    errors = max_q = total_q = 0
    for c, first in enumerate(range(0, trials, chunk)):
        size = min(chunk, trials - first)
        rng = np.random.default_rng([seed, slot, c])
        outputs, raw = algorithm.batch(adversary.bits, adversary.noise, rng, size)
        errors += int(np.count_nonzero(outputs != expected))
        max_q = max(max_q, int(raw.max()))
        total_q += int(raw.sum())
    return errors, 0, max_q, total_q


def estimate_error(
    algorithm: QueryProcedure,
    fn: PartialFunction,
    adversaries: Sequence[Adversary],
    trials: int,
    seed: int,
    confidence: Optional[float] = None,
    workers: Optional[int] = None,
    budget: Optional[int] = None,
    vectorized: bool = True,
) -> List[ErrorEstimate]:
    """Empirical error of a procedure against each adversary

    Trial t of adversary a draws from default_rng([seed, a, t]), so
    results are identical for any worker count. Algorithms exposing a
    ``batch`` method are run through it in chunks of ``trial_chunk``
    trials, seeded by (seed, a, chunk).

    Args:
        algorithm: query procedure under test
        fn: the function it is meant to compute
        adversaries: (input, noise) pairs, every input on fn's promise
        trials: trials per adversary
        seed: master seed
        confidence: interval level, defaults to settings.confidence
        workers: process count for the generic path, defaults to settings.workers
        budget: optional raw-query cap applied to every run
        vectorized: allow the batch fast path

    Returns:
        List[ErrorEstimate]: one entry per adversary, in input order

    Raises:
        PromiseViolation: an adversary input lies off fn's promise domain
    """
    settings = get_settings()
    confidence = settings.confidence if confidence is None else confidence
    workers = settings.workers if workers is None else workers

    labelled = []
    for adversary in adversaries:
        expected = fn.evaluate(adversary.bits)
        if expected is UNDEFINED:
            raise PromiseViolation(f"adversary '{adversary.id}' input is outside the promise of {fn.name}")
        labelled.append((adversary, expected))

    results = []
    for slot, (adversary, expected) in enumerate(labelled):
        if vectorized and budget is None and hasattr(algorithm, "batch"):
            errors, aborts, max_q, total_q = _batch_counts(
                algorithm, adversary, expected, trials, seed, slot, settings.trial_chunk
            )
        elif workers > 1:
            step = -(-trials // workers)
            bounds = [(i, min(i + step, trials)) for i in range(0, trials, step)]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(
                    _trial_block,
                    *zip(*[(algorithm, adversary, expected, seed, slot, a, b, budget) for a, b in bounds]),
                ))
            errors = sum(p[0] for p in parts)
            aborts = sum(p[1] for p in parts)
            max_q = max(p[2] for p in parts)
            total_q = sum(p[3] for p in parts)
        else:
            errors, aborts, max_q, total_q = _trial_block(
                algorithm, adversary, expected, seed, slot, 0, trials, budget
            )
        low, high = clopper_pearson(errors, trials, confidence)
        logger.debug("%s vs %s: %d/%d errors", algorithm.name, adversary.id, errors, trials)
        results.append(ErrorEstimate(
            adversary_id=adversary.id,
            trials=trials,
            errors=errors,
            aborts=aborts,
            error_rate=errors / trials,
            ci_low=low,
            ci_high=high,
            max_queries=max_q,
            mean_queries=total_q / trials,
        ))
    return results


# -------------------------
# Noise specs
# -------------------------

def random_noise(n: int, kind: NoiseKind, rng: np.random.Generator, resolution: int = 1000) -> NoiseModel:
    """Random tuple of multiples of 1/resolution below the kind's cap"""
    top = int(NOISE_CAPS[kind] * resolution)
    draws = rng.integers(0, top + 1, size=n)
    return NoiseModel.build(kind, [Fraction(int(d), resolution) for d in draws])


def parse_noise(spec: str, n: int, kind: NoiseKind = NoiseKind.TWO_SIDED) -> NoiseModel:
    """Parse the noise mini-language

    Forms: ``none``, ``zeros``, ``all:1/3``, ``random:<seed>``,
    ``list:1/3,0,1/4,...``, each optionally prefixed by ``one-sided:`` or
    ``two-sided:`` to pick the channel.

    Raises:
        NoiseSpecError: malformed text, wrong tuple length or a cap breach
    """
    text = spec.strip().lower()
    for candidate in (NoiseKind.ONE_SIDED, NoiseKind.TWO_SIDED):
        if text.startswith(candidate.value + ":"):
            kind = candidate
            text = text[len(candidate.value) + 1:]
            break
    if text == "none":
        return NoiseModel.noiseless()
    try:
        if text == "zeros":
            return NoiseModel.build(kind, [Fraction(0)] * n)
        head, _, body = text.partition(":")
        if head == "all":
            return NoiseModel.build(kind, [Fraction(body)] * n)
        if head == "random":
            return random_noise(n, kind, np.random.default_rng(int(body)))
        if head == "list":
            probs = [Fraction(p.strip()) for p in body.split(",") if p.strip()]
            if len(probs) != n:
                raise NoiseSpecError(f"noise list has {len(probs)} entries, expected {n}")
            return NoiseModel.build(kind, probs)
    except (ValueError, ZeroDivisionError) as e:
        if isinstance(e, NoiseSpecError):
            raise
        raise NoiseSpecError(f"cannot parse noise spec '{spec}': {e}") from None
    raise NoiseSpecError(f"unknown noise spec '{spec}' (use none, zeros, all:p, random:seed or list:p,...)")


def default_adversaries(
    inputs: Sequence[Tuple[str, Bits]],
    kind: NoiseKind,
    seed: int,
    randoms: int = 5,
) -> List[Adversary]:
    """Each input against the all-max, all-zero and ``randoms`` random tuples"""
    adversaries = []
    for input_id, bits in inputs:
        n = len(bits)
        noises = [
            ("all-max", NoiseModel.build(kind, [NOISE_CAPS[kind]] * n)),
            ("all-zero", NoiseModel.build(kind, [Fraction(0)] * n)),
        ]
        for j in range(randoms):
            noises.append((f"random-{j}", random_noise(n, kind, np.random.default_rng([seed, j]))))
        for noise_id, noise in noises:
            adversaries.append(Adversary(id=f"{input_id}/{noise_id}", bits=tuple(bits), noise=noise))
    return adversaries
