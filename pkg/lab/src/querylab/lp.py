"""Exact linear programming over ``fractions.Fraction``.

Two-phase tableau simplex with Bland's rule, a vertex-enumeration
fallback for cross-checks at tiny sizes, and a zero-sum matrix game
solver on top. Every problem has the form

    maximize c.x  subject to  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0
"""

import itertools
import logging
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from pydantic import BaseModel

from .errors import SolverError

logger = logging.getLogger(__name__)

Matrix = Sequence[Sequence[Fraction]]
Vector = Sequence[Fraction]


class LPStatus(str, Enum):
    """Outcome of a solve"""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LPResult(BaseModel):
    status: LPStatus
    x: Tuple[Fraction, ...] = ()
    value: Optional[Fraction] = None
    duals_ub: Tuple[Fraction, ...] = ()
    duals_eq: Tuple[Fraction, ...] = ()
    pivots: int = 0


# -------------------------
# Simplex
# -------------------------

class _Tableau:
    """Rows of [coefficients | rhs] kept in canonical form for ``basis``"""

    def __init__(self, rows: List[List[Fraction]], basis: List[int], blocked: set):
        self.rows = rows
        self.basis = basis
        self.blocked = blocked
        self.pivots = 0

    @property
    def width(self) -> int:
        return len(self.rows[0]) - 1 if self.rows else 0

    def pivot(self, r: int, col: int) -> None:
        row = self.rows[r]
        lead = row[col]
        self.rows[r] = row = [v / lead for v in row]
        for i, other in enumerate(self.rows):
            if i != r and other[col]:
                factor = other[col]
                self.rows[i] = [a - factor * b for a, b in zip(other, row)]
        self.basis[r] = col
        self.pivots += 1

    def reduced_costs(self, cost: Sequence[Fraction]) -> List[Fraction]:
        basic = [cost[b] for b in self.basis]
        return [
            cost[j] - sum((cb * row[j] for cb, row in zip(basic, self.rows) if cb), Fraction(0))
            for j in range(self.width)
        ]

    def objective(self, cost: Sequence[Fraction]) -> Fraction:
        return sum((cost[b] * row[-1] for b, row in zip(self.basis, self.rows)), Fraction(0))

    def optimize(self, cost: Sequence[Fraction]) -> LPStatus:
        """Maximize cost.x from the current feasible basis

        Entering column: smallest index with positive reduced cost.
        Leaving row: minimum ratio, ties broken by the smallest basic index.
        """
        while True:
            reduced = self.reduced_costs(cost)
            entering = next(
                (j for j in range(self.width) if j not in self.blocked and reduced[j] > 0), None
            )
            if entering is None:
                return LPStatus.OPTIMAL
            best = None
            for i, row in enumerate(self.rows):
                if row[entering] > 0:
                    key = (row[-1] / row[entering], self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return LPStatus.UNBOUNDED
            self.pivot(best[1], entering)

    def column_duals(self, cost: Sequence[Fraction], col: int) -> Fraction:
        return sum((cost[b] * row[col] for b, row in zip(self.basis, self.rows)), Fraction(0))


def linprog_exact(
    c: Vector,
    A_ub: Optional[Matrix] = None,
    b_ub: Optional[Vector] = None,
    A_eq: Optional[Matrix] = None,
    b_eq: Optional[Vector] = None,
) -> LPResult:
    """Solve exactly with the two-phase simplex method

    Args:
        c: objective coefficients (maximized)
        A_ub, b_ub: inequality rows A_ub x <= b_ub
        A_eq, b_eq: equality rows
    Returns:
        LPResult: status, an optimal vertex, its value and the row duals
    """
    c = [Fraction(v) for v in c]
    n = len(c)
    ub = [([Fraction(v) for v in row], Fraction(b)) for row, b in zip(A_ub or [], b_ub or [])]
    eq = [([Fraction(v) for v in row], Fraction(b)) for row, b in zip(A_eq or [], b_eq or [])]
    constraints = ub + eq
    m_ub = len(ub)
    slack0 = n
    art0 = n + m_ub

    # rows with a negative rhs are negated; those and equality rows start on an artificial
    signs = [-1 if b < 0 else 1 for _, b in constraints]
    art_cols = {}
    for i, sign in enumerate(signs):
        if i >= m_ub or sign < 0:
            art_cols[i] = art0 + len(art_cols)
    width = art0 + len(art_cols)

    rows: List[List[Fraction]] = []
    basis: List[int] = []
    for i, ((coeffs, b), sign) in enumerate(zip(constraints, signs)):
        row = [Fraction(0)] * (width + 1)
        for j, v in enumerate(coeffs):
            row[j] = sign * v
        if i < m_ub:
            row[slack0 + i] = Fraction(sign)
        if i in art_cols:
            row[art_cols[i]] = Fraction(1)
        row[-1] = sign * b
        rows.append(row)
        basis.append(art_cols.get(i, slack0 + i))

    tableau = _Tableau(rows, basis, blocked=set())
    if art_cols:
        phase1 = [Fraction(0)] * art0 + [Fraction(-1)] * len(art_cols)
        tableau.optimize(phase1)
        if tableau.objective(phase1) < 0:
            return LPResult(status=LPStatus.INFEASIBLE, pivots=tableau.pivots)
        for r in range(len(tableau.rows)):
            if tableau.basis[r] >= art0:
                col = next((j for j in range(art0) if tableau.rows[r][j] != 0), None)
                # no such column: the row is redundant and its artificial stays basic at 0
                if col is not None:
                    tableau.pivot(r, col)
        tableau.blocked = set(range(art0, width))
        logger.debug("phase 1 done after %d pivots", tableau.pivots)

    cost = c + [Fraction(0)] * (width - n)
    status = tableau.optimize(cost)
    if status is LPStatus.UNBOUNDED:
        return LPResult(status=status, pivots=tableau.pivots)

    x = [Fraction(0)] * width
    for b, row in zip(tableau.basis, tableau.rows):
        x[b] = row[-1]
    return LPResult(
        status=LPStatus.OPTIMAL,
        x=tuple(x[:n]),
        value=tableau.objective(cost),
        duals_ub=tuple(tableau.column_duals(cost, slack0 + i) for i in range(m_ub)),
        duals_eq=tuple(
            signs[i] * tableau.column_duals(cost, art_cols[i]) for i in range(m_ub, len(constraints))
        ),
        pivots=tableau.pivots,
    )


def feasible_point(A_ub: Optional[Matrix] = None, b_ub: Optional[Vector] = None,
                   A_eq: Optional[Matrix] = None, b_eq: Optional[Vector] = None,
                   n: Optional[int] = None) -> Optional[Tuple[Fraction, ...]]:
    """Some x >= 0 meeting the constraints, or None when infeasible"""
    n = n if n is not None else len((A_ub or A_eq)[0])
    result = linprog_exact([Fraction(0)] * n, A_ub, b_ub, A_eq, b_eq)
    return result.x if result.status is LPStatus.OPTIMAL else None


# -------------------------
# Vertex enumeration
# -------------------------

def _solve_square(matrix: List[List[Fraction]], rhs: List[Fraction]) -> Optional[List[Fraction]]:
    """Gauss-Jordan elimination; None when singular"""
    size = len(matrix)
    aug = [row[:] + [b] for row, b in zip(matrix, rhs)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if aug[r][col] != 0), None)
        if pivot is None:
            return None
        aug[col], aug[pivot] = aug[pivot], aug[col]
        lead = aug[col][col]
        aug[col] = [v / lead for v in aug[col]]
        for r in range(size):
            if r != col and aug[r][col]:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [row[-1] for row in aug]


def linprog_vertex_enum(
    c: Vector,
    A_ub: Optional[Matrix] = None,
    b_ub: Optional[Vector] = None,
    A_eq: Optional[Matrix] = None,
    b_eq: Optional[Vector] = None,
) -> LPResult:
    """Best basic feasible solution by trying every basis; bounded LPs with full-row-rank equality form"""
    c = [Fraction(v) for v in c]
    n = len(c)
    ub = [([Fraction(v) for v in row], Fraction(b)) for row, b in zip(A_ub or [], b_ub or [])]
    eq = [([Fraction(v) for v in row], Fraction(b)) for row, b in zip(A_eq or [], b_eq or [])]
    m_ub = len(ub)
    rows = [coeffs + [Fraction(int(j == i)) for j in range(m_ub)] for i, (coeffs, _) in enumerate(ub)]
    rows += [coeffs + [Fraction(0)] * m_ub for coeffs, _ in eq]
    rhs = [b for _, b in ub + eq]
    total = n + m_ub
    best: Optional[Tuple[Fraction, List[Fraction]]] = None
    for columns in itertools.combinations(range(total), len(rows)):
        square = [[row[j] for j in columns] for row in rows]
        values = _solve_square(square, rhs)
        if values is None or any(v < 0 for v in values):
            continue
        x = [Fraction(0)] * total
        for j, v in zip(columns, values):
            x[j] = v
        value = sum((ci * xi for ci, xi in zip(c, x)), Fraction(0))
        if best is None or value > best[0]:
            best = (value, x)
    if best is None:
        return LPResult(status=LPStatus.INFEASIBLE)
    return LPResult(status=LPStatus.OPTIMAL, x=tuple(best[1][:n]), value=best[0])


# -------------------------
# Matrix games
# -------------------------

class MatrixGameSolution(BaseModel):
    """Optimal mixed strategies of a zero-sum game where the row player minimizes"""

    value: Fraction
    rows: Tuple[Fraction, ...]
    columns: Tuple[Fraction, ...]


def solve_matrix_game(payoff: Matrix) -> MatrixGameSolution:
    """min over row mixtures of max over columns of the expected payoff, exactly

    Payoffs are shifted to be at least 1, the row player's LP
    max sum z s.t. z^T M' <= 1 is solved, and the column strategy is read
    off its duals.

    Raises:
        SolverError: the LP is not optimal, which a positive payoff matrix rules out
    """
    payoff = [[Fraction(v) for v in row] for row in payoff]
    shift = 1 - min(min(row) for row in payoff)
    shifted = [[v + shift for v in row] for row in payoff]
    n_rows, n_cols = len(shifted), len(shifted[0])
    result = linprog_exact(
        c=[Fraction(1)] * n_rows,
        A_ub=[[shifted[t][x] for t in range(n_rows)] for x in range(n_cols)],
        b_ub=[Fraction(1)] * n_cols,
    )
    if result.status is not LPStatus.OPTIMAL or not result.value:
        raise SolverError(f"matrix game LP ended {result.status.value}")
    total = result.value
    dual_total = sum(result.duals_ub, Fraction(0))
    if dual_total != total:
        raise SolverError(f"strong duality fails: primal {total}, dual {dual_total}")
    return MatrixGameSolution(
        value=1 / total - shift,
        rows=tuple(z / total for z in result.x),
        columns=tuple(y / dual_total for y in result.duals_ub),
    )
