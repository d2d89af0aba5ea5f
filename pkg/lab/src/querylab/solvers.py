"""Exact query-complexity measures of tiny functions."""

import logging
from fractions import Fraction
from math import comb
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel

from .boolfn import UNDEFINED, Bits, Label, PartialFunction
from .certificates import PostselectionCertificate
from .config import get_settings
from .distributions import Conjunction, Distribution, ExplicitDistribution, conj_prob, enumerate_conjunctions
from .dtree import DeterministicTree, leaf, query
from .errors import PremiseError, SolverError
from .lp import LPStatus, linprog_exact, solve_matrix_game

logger = logging.getLogger(__name__)


# -------------------------
# Distributional complexity
# -------------------------

def distributional_opt_error(f: PartialFunction, mu: Distribution, depth: int) -> Tuple[Fraction, DeterministicTree]:
    """Minimum mu-error over deterministic trees of depth <= depth, with an optimal tree

    Memoized over (restriction, remaining depth). Ties prefer a leaf, then
    the smallest query index; among leaf labels the smallest label wins.

    Raises:
        PremiseError: mu puts mass outside f's promise
    """
    points: List[Tuple[Bits, Label, Fraction]] = []
    for x, p in mu.support():
        label = f.evaluate(x)
        if label is UNDEFINED:
            raise PremiseError(f"distribution puts mass {p} on {x}, outside the promise of {f.name}")
        points.append((tuple(x), label, p))
    labels = sorted({label for _, label, _ in points} | set(f.outputs()))
    memo: Dict[Tuple[Tuple[Tuple[int, int], ...], int], Tuple[Fraction, DeterministicTree]] = {}

    def best_leaf(live: Sequence[Tuple[Bits, Label, Fraction]]) -> Tuple[Fraction, DeterministicTree]:
        total = sum((p for _, _, p in live), Fraction(0))
        mass = {label: Fraction(0) for label in labels}
        for _, label, p in live:
            mass[label] += p
        choice = max(labels, key=lambda label: (mass[label], -labels.index(label)))
        return total - mass[choice], leaf(choice)

    def solve(restriction: Dict[int, int], live: List[Tuple[Bits, Label, Fraction]], d: int):
        key = (tuple(sorted(restriction.items())), d)
        if key in memo:
            return memo[key]
        best = best_leaf(live)
        if d > 0 and best[0] > 0:
            for i in range(f.arity):
                if i in restriction:
                    continue
                zero = [pt for pt in live if pt[0][i] == 0]
                one = [pt for pt in live if pt[0][i] == 1]
                e0, t0 = solve({**restriction, i: 0}, zero, d - 1)
                e1, t1 = solve({**restriction, i: 1}, one, d - 1)
                if e0 + e1 < best[0]:
                    best = (e0 + e1, query(i, t0, t1))
        memo[key] = best
        return best

    return solve({}, points, depth)


# -------------------------
# Randomized complexity
# -------------------------

class GameValueResult(BaseModel):
    """Exact value of the depth-d query game with optimal strategies on both sides"""

    depth: int
    value: Fraction
    mu: Tuple[Tuple[Bits, Fraction], ...]
    trees: Tuple[Tuple[DeterministicTree, Fraction], ...]
    iterations: int = 0
    history: Tuple[Tuple[Fraction, Fraction], ...] = ()


def _error_row(tree: DeterministicTree, inputs: Sequence[Tuple[Bits, Label]]) -> Tuple[Fraction, ...]:
    return tuple(Fraction(int(tree.evaluate(x) != label)) for x, label in inputs)


def randomized_qc_decide(f: PartialFunction, eps: Fraction, depth: int) -> Tuple[bool, GameValueResult]:
    """Whether some randomized depth-d tree has worst-case error <= eps, by double oracle

    Each round adds the best-response tree against the current input
    mixture and the input the current tree mixture handles worst, then
    re-solves the restricted game exactly. The lower and upper bounds meet
    once neither player has a new best response.

    Raises:
        SolverError: the iteration cap is hit, weak duality breaks or the oracle stalls
    """
    eps = Fraction(eps)
    inputs = f.labelled_inputs()
    cap = get_settings().max_oracle_iterations
    chosen = [0]
    trees: List[DeterministicTree] = []
    rows: List[Tuple[Fraction, ...]] = []
    history: List[Tuple[Fraction, Fraction]] = []
    weights = {inputs[0][0]: Fraction(1)}

    for iteration in range(1, cap + 1):
        lower, response = distributional_opt_error(f, ExplicitDistribution.from_weights(weights), depth)
        row = _error_row(response, inputs)
        grew = row not in rows
        if grew:
            rows.append(row)
            trees.append(response)
        sigma = solve_matrix_game([[r[j] for j in chosen] for r in rows]).rows
        errors = [sum((s * r[j] for s, r in zip(sigma, rows)), Fraction(0)) for j in range(len(inputs))]
        upper = max(errors)
        history.append((lower, upper))
        logger.debug("double oracle %d: %s <= value <= %s", iteration, lower, upper)
        if lower > upper:
            raise SolverError(f"weak duality broken at iteration {iteration}: {lower} > {upper}")
        if lower == upper:
            result = GameValueResult(
                depth=depth,
                value=upper,
                mu=tuple((x, w) for x, w in weights.items() if w),
                trees=tuple((t, s) for t, s in zip(trees, sigma) if s),
                iterations=iteration,
                history=tuple(history),
            )
            return upper <= eps, result
        worst = errors.index(upper)
        if worst not in chosen:
            chosen.append(worst)
            grew = True
        if not grew:
            raise SolverError(f"double oracle stalled at iteration {iteration} with {lower} < {upper}")
        game = solve_matrix_game([[r[j] for j in chosen] for r in rows])
        weights = {inputs[j][0]: w for j, w in zip(chosen, game.columns)}
    raise SolverError(f"double oracle did not converge within {cap} iterations")


def enumerate_trees(arity: int, depth: int, labels: Sequence[Any]) -> List[DeterministicTree]:
    """Every tree of depth <= depth with no index repeated on a path"""
    def build(free: Tuple[int, ...], d: int) -> List[DeterministicTree]:
        trees = [leaf(label) for label in labels]
        if d == 0:
            return trees
        for i in free:
            rest = tuple(j for j in free if j != i)
            children = build(rest, d - 1)
            trees.extend(query(i, t0, t1) for t0 in children for t1 in children)
        return trees
    return build(tuple(range(arity)), depth)


def game_value_full(f: PartialFunction, depth: int) -> GameValueResult:
    """Game value over the full tree set, deduplicated by error vector"""
    inputs = f.labelled_inputs()
    by_row: Dict[Tuple[Fraction, ...], DeterministicTree] = {}
    for tree in enumerate_trees(f.arity, depth, f.outputs()):
        by_row.setdefault(_error_row(tree, inputs), tree)
    rows = list(by_row)
    game = solve_matrix_game(rows)
    return GameValueResult(
        depth=depth,
        value=game.value,
        mu=tuple((x, w) for (x, _), w in zip(inputs, game.columns) if w),
        trees=tuple((by_row[r], s) for r, s in zip(rows, game.rows) if s),
    )


# -------------------------
# Conical juntas
# -------------------------

class JuntaSolution(BaseModel):
    """Nonnegative conjunction weights whose sum separates the labels within the eps band

    Symmetric functions are solved per literal profile (u, v); the weight
    of a profile is spread evenly over its conjunctions.
    """

    width: int
    epsilon: Fraction
    threshold: Fraction = Fraction(1)
    weights: Tuple[Tuple[Conjunction, Fraction], ...] = ()
    profile_weights: Tuple[Tuple[Tuple[int, int], Fraction], ...] = ()
    arity: int = 0

    def value(self, bits: Sequence[int]) -> Fraction:
        total = sum((w for conj, w in self.weights if conj.satisfied(bits)), Fraction(0))
        k = sum(bits)
        for (u, v), w in self.profile_weights:
            total += w * Fraction(comb(k, u) * comb(self.arity - k, v), comb(self.arity, u) * comb(self.arity - u, v))
        return total


def _band_rows(value_rows: List[List[Fraction]], labels: List[Label], eps: Fraction):
    A_ub: List[List[Fraction]] = []
    b_ub: List[Fraction] = []
    for row, label in zip(value_rows, labels):
        if label == 1:
            A_ub.append(row)
            b_ub.append(Fraction(1))
            A_ub.append([-v for v in row])
            b_ub.append(eps - 1)
        else:
            A_ub.append(row)
            b_ub.append(eps)
    return A_ub, b_ub


def _junta_at_width(f: PartialFunction, eps: Fraction, width: int) -> Optional[JuntaSolution]:
    m = f.arity
    if f.symmetric:
        by_weight = {}
        for x, label in f.labelled_inputs():
            by_weight.setdefault(sum(x), label)
        profiles = [(u, w - u) for w in range(width + 1) for u in range(w + 1)]
        rows = [
            [Fraction(comb(k, u) * comb(m - k, v), comb(m, u) * comb(m - u, v)) for u, v in profiles]
            for k in by_weight
        ]
        A_ub, b_ub = _band_rows(rows, list(by_weight.values()), eps)
        result = linprog_exact([Fraction(0)] * len(profiles), A_ub, b_ub)
        if result.status is not LPStatus.OPTIMAL:
            return None
        return JuntaSolution(
            width=width, epsilon=eps, arity=m,
            profile_weights=tuple((p, w) for p, w in zip(profiles, result.x) if w),
        )
    conjunctions = list(enumerate_conjunctions(m, width))
    inputs = f.labelled_inputs()
    rows = [[Fraction(int(c.satisfied(x))) for c in conjunctions] for x, _ in inputs]
    A_ub, b_ub = _band_rows(rows, [label for _, label in inputs], eps)
    result = linprog_exact([Fraction(0)] * len(conjunctions), A_ub, b_ub)
    if result.status is not LPStatus.OPTIMAL:
        return None
    return JuntaSolution(
        width=width, epsilon=eps, arity=m,
        weights=tuple((c, w) for c, w in zip(conjunctions, result.x) if w),
    )


def conical_junta_degree(f: PartialFunction, eps: Fraction) -> Tuple[int, JuntaSolution]:
    """Smallest width w admitting a junta with values in [1-eps, 1] on 1-inputs and <= eps on 0-inputs

    Raises:
        PremiseError: f is not Boolean-valued or eps is negative
    """
    eps = Fraction(eps)
    if not f.is_boolean:
        raise PremiseError(f"{f.name} is not Boolean-valued")
    if eps < 0:
        raise PremiseError(f"eps must be nonnegative, got {eps}")
    for width in range(f.arity + 1):
        solution = _junta_at_width(f, eps, width)
        if solution is not None:
            logger.debug("%s: junta of width %d at eps=%s", f.name, width, eps)
            return width, solution
    raise SolverError(f"no junta of width {f.arity} for {f.name}, which the indicator decomposition rules out")


# -------------------------
# Certificate search
# -------------------------

def postbpp_certificate_search(d0: Distribution, d1: Distribution, eps: Fraction,
                               max_width: int) -> Optional[PostselectionCertificate]:
    """First conjunction of width <= max_width (z = 0 before z = 1) that is a certificate

    Returns None when none exists, which rules out every post-selection
    procedure of that width against (D_0, D_1).
    """
    eps = Fraction(eps)
    if d0.arity != d1.arity:
        raise PremiseError(f"distributions differ in arity: {d0.arity} vs {d1.arity}")
    for conj in enumerate_conjunctions(d0.arity, max_width):
        probs = (conj_prob(d0, conj), conj_prob(d1, conj))
        for z in (0, 1):
            if probs[z] > 0 and eps * probs[z] >= (1 - eps) * probs[1 - z]:
                return PostselectionCertificate(
                    conjunction=conj, z=z, p_z=probs[z], p_other=probs[1 - z], epsilon=eps,
                )
    return None
