"""Exact rational two-phase simplex method with Bland's rule.

Problems are small (tens of rows and columns), so a dense tableau over
``fractions.Fraction`` is fast enough and removes every question of
rounding from optimality and duality checks.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import StructuralError

F0 = Fraction(0)
F1 = Fraction(1)


@dataclass(frozen=True)
class LPResult:
    """Optimum of ``max c.x`` subject to the rows and ``x >= 0``.

    ``duals`` holds one multiplier per input row, so that the dual
    objective ``sum(duals[i] * b[i])`` equals ``value``.
    """

    status: str  # "optimal" | "infeasible" | "unbounded"
    value: Fraction | None
    x: tuple[Fraction, ...]
    duals: tuple[Fraction, ...]
    pivots: int


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


class _Tableau:
    def __init__(self, rows, rhs, ncols):
        self.rows = rows  # list of lists, length ncols
        self.rhs = rhs
        self.ncols = ncols
        self.basis: list[int] = []
        self.pivots = 0

    def pivot(self, r: int, c: int):
        row = self.rows[r]
        p = row[c]
        if p != 1:
            inv = 1 / p
            self.rows[r] = row = [a * inv for a in row]
            self.rhs[r] *= inv
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other[c]
            if f:
                self.rows[i] = [a - f * b if b else a for a, b in zip(other, row)]
                self.rhs[i] -= f * self.rhs[r]
        self.basis[r] = c
        self.pivots += 1

    def reduced_costs(self, cost, allowed):
        # d_j = c_j - c_B B^-1 A_j, computed from the current tableau rows
        d = list(cost)
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.rows[i]
                for j in allowed:
                    a = row[j]
                    if a:
                        d[j] -= cb * a
        return d

    def run(self, cost, allowed, max_pivots=100_000) -> str:
        """Maximise ``cost`` over the columns in ``allowed`` (Bland's rule)."""
        allowed = sorted(allowed)
        for _ in range(max_pivots):
            d = self.reduced_costs(cost, allowed)
            enter = next((j for j in allowed if d[j] > 0 and j not in self.basis), None)
            if enter is None:
                return "optimal"
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    ratio = self.rhs[i] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return "unbounded"
            self.pivot(best[1], enter)
        raise RuntimeError("simplex pivot limit reached")


def solve_lp(
    c: Sequence,
    A: Sequence[Sequence],
    b: Sequence,
    senses: Sequence[str] | None = None,
) -> LPResult:
    """Maximise ``c.x`` subject to ``A_i.x (<=|=|>=) b_i`` and ``x >= 0``.

    All data are converted to ``Fraction``; floats convert exactly.
    """
    m = len(A)
    n = len(c)
    if senses is None:
        senses = ["<="] * m
    if len(b) != m or len(senses) != m or any(len(row) != n for row in A):
        raise StructuralError("inconsistent LP dimensions")
    c = [_frac(v) for v in c]
    slack_cols = [i for i in range(m) if senses[i] in ("<=", ">=")]
    slack_of = {i: n + k for k, i in enumerate(slack_cols)}
    ncore = n + len(slack_cols)
    rows, rhs, flip = [], [], []
    for i in range(m):
        row = [_frac(a) for a in A[i]] + [F0] * len(slack_cols)
        if senses[i] == "<=":
            row[slack_of[i]] = F1
        elif senses[i] == ">=":
            row[slack_of[i]] = -F1
        elif senses[i] != "=":
            raise StructuralError(f"unknown constraint sense {senses[i]!r}")
        bi = _frac(b[i])
        sign = -1 if bi < 0 else 1
        if sign < 0:
            row = [-a for a in row]
            bi = -bi
        rows.append(row)
        rhs.append(bi)
        flip.append(sign)
    # a basis column for every row: its own +1 slack, else an artificial
    basis, art = [], []
    ncols = ncore
    for i in range(m):
        if i in slack_of and rows[i][slack_of[i]] == 1:
            basis.append(slack_of[i])
        else:
            art.append(i)
            basis.append(None)
    ncols = ncore + len(art)
    for r in rows:
        r.extend([F0] * len(art))
    for k, i in enumerate(art):
        rows[i][ncore + k] = F1
        basis[i] = ncore + k
    # columns that formed the starting identity, needed to read B^-1
    ident = list(basis)
    T = _Tableau(rows, rhs, ncols)
    T.basis = basis
    art_cols = set(range(ncore, ncols))
    if art:
        cost1 = [F0] * ncore + [-F1] * len(art)
        T.run(cost1, range(ncols))
        if any(T.rhs[i] > 0 for i, bcol in enumerate(T.basis) if bcol in art_cols):
            return LPResult("infeasible", None, (), (), T.pivots)
        # drive zero-level artificials out of the basis where possible
        for i, bcol in enumerate(T.basis):
            if bcol in art_cols:
                j = next((j for j in range(ncore) if T.rows[i][j] != 0), None)
                if j is not None:
                    T.pivot(i, j)
    cost = c + [F0] * (ncols - n)
    status = T.run(cost, range(ncore))
    if status == "unbounded":
        return LPResult("unbounded", None, (), (), T.pivots)
    x = [F0] * ncols
    for i, bcol in enumerate(T.basis):
        x[bcol] = T.rhs[i]
    value = sum((c[j] * x[j] for j in range(n)), F0)
    # y = c_B B^-1; column ident[i] of the tableau is B^-1 e_i
    y = []
    for i in range(m):
        col = ident[i]
        yi = sum((cost[bcol] * T.rows[r][col] for r, bcol in enumerate(T.basis) if cost[bcol]), F0)
        y.append(yi * flip[i])
    return LPResult("optimal", value, tuple(x[:n]), tuple(y), T.pivots)
