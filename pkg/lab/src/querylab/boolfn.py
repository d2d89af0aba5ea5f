"""Partial Boolean functions, the named catalog and single-level composition.

Inputs are bit tuples. Evaluation off the promise domain returns
``UNDEFINED`` instead of an arbitrary bit so harnesses can reject
invalid adversary inputs.
"""

import itertools
import re
from collections import defaultdict
from enum import Enum
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, PrivateAttr

from .errors import FunctionSpecError

Bits = Tuple[int, ...]
Label = Union[int, Tuple[int, ...]]


# -------------------------
# Enums
# -------------------------

class Special(str, Enum):
    """Non-label outcomes of evaluation and of query procedures"""
    UNDEFINED = "undefined"
    ABORT = "abort"


UNDEFINED = Special.UNDEFINED
ABORT = Special.ABORT


class FunctionName(str, Enum):
    """Names of the catalog functions"""
    OR = "or"
    XOR = "xor"
    MAJ = "maj"
    ID = "id"
    OMB = "omb"
    WHICH = "which"
    GAPOR = "gapor"
    GAPMAJ = "gapmaj"
    NOT_GAPOR = "not-gapor"


# -------------------------
# Functions
# -------------------------

class PartialFunction(BaseModel):
    """A function {0,1}^arity -> Z defined on a promise domain"""

    model_config = ConfigDict(frozen=True)

    name: str
    arity: int
    symmetric: bool = False

    def evaluate(self, bits: Sequence[int]) -> Union[Label, Special]:
        """Evaluate on a full input

        Args:
            bits: input bit-vector of length arity

        Returns:
            The label, or UNDEFINED off the promise domain

        Raises:
            ValueError: if the input length does not match the arity
        """
        bits = tuple(int(b) for b in bits)
        if len(bits) != self.arity:
            raise ValueError(f"{self.name} expects {self.arity} bits, got {len(bits)}")
        return self._value(bits)

    def _value(self, bits: Bits) -> Union[Label, Special]:
        raise NotImplementedError

    def in_promise(self, bits: Sequence[int]) -> bool:
        return self.evaluate(bits) is not UNDEFINED

    @property
    def is_boolean(self) -> bool:
        """Whether every defined output is a single bit"""
        return True

    def outputs(self) -> Tuple[Label, ...]:
        return (0, 1)

    def promise_inputs(self) -> Iterator[Bits]:
        """Enumerate the promise domain in lexicographic order"""
        for bits in itertools.product((0, 1), repeat=self.arity):
            if self._value(bits) is not UNDEFINED:
                yield bits

    def labelled_inputs(self) -> List[Tuple[Bits, Label]]:
        return [(bits, self._value(bits)) for bits in self.promise_inputs()]

    def __str__(self) -> str:
        return self.name


def _weight_class(m: int, weight: int) -> Iterator[Bits]:
    for ones in itertools.combinations(range(m), weight):
        bits = [0] * m
        for i in ones:
            bits[i] = 1
        yield tuple(bits)


class CatalogFunction(PartialFunction):
    """One of the named functions, e.g. xor[8] or gapmaj[9]"""

    kind: FunctionName

    def _value(self, bits: Bits) -> Union[Label, Special]:
        n = self.arity
        weight = hamming(bits)
        kind = self.kind
        if kind is FunctionName.OR:
            return int(weight > 0)
        if kind is FunctionName.XOR:
            return weight % 2
        if kind is FunctionName.MAJ:
            # ties go to 1
            return int(2 * weight >= n)
        if kind is FunctionName.ID:
            return bits
        if kind is FunctionName.OMB:
            ones = [i + 1 for i, b in enumerate(bits) if b]
            return int(bool(ones) and ones[-1] % 2 == 1)
        if kind is FunctionName.WHICH:
            if bits == (1, 0):
                return 0
            if bits == (0, 1):
                return 1
            return UNDEFINED
        if kind is FunctionName.GAPOR:
            if weight == 0:
                return 0
            return 1 if 2 * weight == n else UNDEFINED
        if kind is FunctionName.NOT_GAPOR:
            if weight == 0:
                return 1
            return 0 if 2 * weight == n else UNDEFINED
        if kind is FunctionName.GAPMAJ:
            if 3 * weight == n:
                return 0
            return 1 if 3 * weight == 2 * n else UNDEFINED
        raise FunctionSpecError(f"no evaluator for {kind.value}")

    @property
    def is_boolean(self) -> bool:
        return self.kind is not FunctionName.ID

    def outputs(self) -> Tuple[Label, ...]:
        if self.kind is FunctionName.ID:
            return tuple(itertools.product((0, 1), repeat=self.arity))
        return (0, 1)

    def promise_inputs(self) -> Iterator[Bits]:
        m = self.arity
        if self.kind is FunctionName.WHICH:
            yield from ((0, 1), (1, 0))
        elif self.kind in (FunctionName.GAPOR, FunctionName.NOT_GAPOR):
            yield (0,) * m
            yield from _weight_class(m, m // 2)
        elif self.kind is FunctionName.GAPMAJ:
            yield from _weight_class(m, m // 3)
            yield from _weight_class(m, 2 * m // 3)
        else:
            yield from itertools.product((0, 1), repeat=m)


class ComposedFunction(PartialFunction):
    """f o g^n: the outer function applied to n disjoint inner blocks"""

    outer: PartialFunction
    inner: PartialFunction

    @property
    def block_size(self) -> int:
        return self.inner.arity

    def blocks(self, bits: Sequence[int]) -> List[Bits]:
        m = self.block_size
        return [tuple(bits[i * m:(i + 1) * m]) for i in range(self.outer.arity)]

    def _value(self, bits: Bits) -> Union[Label, Special]:
        inner_values = []
        for block in self.blocks(bits):
            value = self.inner._value(block)
            if value is UNDEFINED:
                return UNDEFINED
            inner_values.append(value)
        return self.outer._value(tuple(inner_values))

    @property
    def is_boolean(self) -> bool:
        return self.outer.is_boolean

    def outputs(self) -> Tuple[Label, ...]:
        return self.outer.outputs()

    def promise_inputs(self) -> Iterator[Bits]:
        by_label: Dict[int, List[Bits]] = defaultdict(list)
        for block in self.inner.promise_inputs():
            by_label[self.inner._value(block)].append(block)
        for y in self.outer.promise_inputs():
            for choice in itertools.product(*(by_label[b] for b in y)):
                yield tuple(itertools.chain.from_iterable(choice))


class TableFunction(PartialFunction):
    """Explicit truth table; inputs missing from the table are off the promise"""

    table: Tuple[Tuple[Bits, Label], ...]

    _lookup: Dict[Bits, Label] = PrivateAttr(default_factory=dict)

    def model_post_init(self, __context: Any) -> None:
        self._lookup = dict(self.table)

    def _value(self, bits: Bits) -> Union[Label, Special]:
        return self._lookup.get(bits, UNDEFINED)

    @property
    def is_boolean(self) -> bool:
        return all(label in (0, 1) for _, label in self.table)

    def outputs(self) -> Tuple[Label, ...]:
        return tuple(sorted({label for _, label in self.table}))

    def promise_inputs(self) -> Iterator[Bits]:
        yield from sorted(bits for bits, _ in self.table)

    @classmethod
    def from_truth(cls, arity: int, truth: Sequence[int], name: Optional[str] = None) -> "TableFunction":
        """Total function whose value on the j-th input in lexicographic order is truth[j]"""
        inputs = list(itertools.product((0, 1), repeat=arity))
        if len(truth) != len(inputs):
            raise FunctionSpecError(f"truth table needs {len(inputs)} entries, got {len(truth)}")
        label = name or "table[" + "".join(str(int(t)) for t in truth) + "]"
        return cls(name=label, arity=arity, table=tuple(zip(inputs, (int(t) for t in truth))))


# -------------------------
# Construction
# -------------------------

_SYMMETRIC = {
    FunctionName.OR, FunctionName.XOR, FunctionName.MAJ, FunctionName.GAPOR,
    FunctionName.GAPMAJ, FunctionName.NOT_GAPOR,
}


def _coerce_name(name: Union[str, FunctionName]) -> FunctionName:
    if isinstance(name, FunctionName):
        return name
    key = name.strip().lower().replace("_", "-")
    try:
        return FunctionName(key)
    except ValueError:
        known = ", ".join(f.value for f in FunctionName)
        raise FunctionSpecError(f"unknown function '{name}' (known: {known})") from None


def catalog(name: Union[str, FunctionName], size: Optional[int] = None) -> CatalogFunction:
    """Build a named catalog function

    Args:
        name: catalog name, e.g. "gapmaj" or FunctionName.GAPMAJ
        size: input length (n for outer functions, m for inner ones); WHICH is fixed at 2

    Returns:
        CatalogFunction: the function with its exact semantics

    Raises:
        FunctionSpecError: unknown name or a size violating the function's divisibility rule
    """
    kind = _coerce_name(name)
    if kind is FunctionName.WHICH:
        if size not in (None, 2):
            raise FunctionSpecError(f"which has fixed arity 2, got {size}")
        size = 2
    if size is None or size < 1:
        raise FunctionSpecError(f"{kind.value} needs a positive size, got {size}")
    if kind is FunctionName.MAJ and size % 2:
        raise FunctionSpecError(f"maj requires an even n (ties at n/2 resolve to 1), got n={size}")
    if kind in (FunctionName.GAPOR, FunctionName.NOT_GAPOR) and size % 2:
        raise FunctionSpecError(f"{kind.value} requires m divisible by 2, got m={size}")
    if kind is FunctionName.GAPMAJ and size % 3:
        raise FunctionSpecError(f"gapmaj requires m divisible by 3, got m={size}")
    return CatalogFunction(
        name=f"{kind.value}[{size}]",
        arity=size,
        symmetric=kind in _SYMMETRIC,
        kind=kind,
    )


def compose(outer: PartialFunction, inner: PartialFunction) -> ComposedFunction:
    """Compose outer o inner^n where n is the outer arity

    Args:
        outer: function on n bits
        inner: Boolean-valued function on m bits

    Returns:
        ComposedFunction: function on n*m bits
    """
    if not inner.is_boolean:
        raise FunctionSpecError(f"inner function {inner.name} must be Boolean-valued")
    return ComposedFunction(
        name=f"{outer.name} o {inner.name}",
        arity=outer.arity * inner.arity,
        outer=outer,
        inner=inner,
    )


_TERM = re.compile(r"^([a-z][a-z_-]*)\s*(?:\[\s*(\d+)\s*\])?$")


def parse_function(text: str) -> PartialFunction:
    """Parse the compact syntax, e.g. "xor[8] o gapmaj[9]"

    Chains associate to the right: "f o g o h" is f o (g o h).

    Raises:
        FunctionSpecError: malformed text, unknown names or size rule violations
    """
    terms = [t.strip() for t in re.split(r"\s+o\s+", text.strip().lower()) if t.strip()]
    if not terms:
        raise FunctionSpecError("empty function spec")
    functions = []
    for term in terms:
        match = _TERM.match(term)
        if not match:
            raise FunctionSpecError(f"cannot parse function term '{term}' (expected e.g. xor[8])")
        size = int(match.group(2)) if match.group(2) else None
        functions.append(catalog(match.group(1), size))
    result: PartialFunction = functions[-1]
    for outer in reversed(functions[:-1]):
        result = compose(outer, result)
    return result


def which_gapor(m: int) -> ComposedFunction:
    """The block function which o gapor^2 on 2m bits"""
    return compose(catalog(FunctionName.WHICH), catalog(FunctionName.GAPOR, m))


def hamming(bits: Iterable[int]) -> int:
    return sum(bits)
