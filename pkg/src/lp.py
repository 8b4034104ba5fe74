"""
Linear Programming

Phase-1/phase-2 simplex over exact rationals with Bland's rule, plus a
float fallback through scipy. Both backends hand back either a primal
point or a Farkas certificate, and both are re-verified before returning.

Standard form throughout:  A x = b,  x >= 0  (minimize c.x when c is given).
A Farkas certificate y satisfies  A^T y >= 0  and  b.y < 0.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import InternalInconsistency

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LPResult:
    """Outcome of a feasibility or optimization problem."""
    status: str                     # "optimal" | "infeasible" | "unbounded"
    x: Optional[tuple] = None
    certificate: Optional[tuple] = None
    objective: Optional[object] = None
    backend: str = "exact"

    @property
    def feasible(self) -> bool:
        return self.status in ("optimal", "unbounded")


class SimplexTableau:
    """Dense tableau over Fractions with artificial columns n..n+m-1."""

    def __init__(self, A: Sequence[Sequence[Fraction]], b: Sequence[Fraction]):
        self.m = len(A)
        self.n = len(A[0]) if self.m else 0
        self.signs = [1 if bi >= 0 else -1 for bi in b]
        self.rows: List[List[Fraction]] = []
        for i in range(self.m):
            s = self.signs[i]
            row = [s * Fraction(a) for a in A[i]]
            row += [Fraction(int(i == r)) for r in range(self.m)]
            row.append(s * Fraction(b[i]))
            self.rows.append(row)
        self.basis = [self.n + i for i in range(self.m)]
        self.row_ids = list(range(self.m))
        self.pivots = 0
        # phase-1 reduced costs; last entry is minus the objective value
        self.cost = [-sum(row[j] for row in self.rows) for j in range(self.n)]
        self.cost += [Fraction(0)] * self.m
        self.cost.append(-sum(row[-1] for row in self.rows))

    def pivot(self, r: int, col: int) -> None:
        prow = self.rows[r]
        piv = prow[col]
        prow = [v / piv for v in prow]
        self.rows[r] = prow
        for i, row in enumerate(self.rows):
            f = row[col]
            if i != r and f != 0:
                self.rows[i] = [a - f * p for a, p in zip(row, prow)]
        f = self.cost[col]
        if f != 0:
            self.cost = [a - f * p for a, p in zip(self.cost, prow)]
        self.basis[r] = col
        self.pivots += 1

    def bland_step(self, allowed: int) -> str:
        """One pivot by Bland's rule over columns < allowed."""
        entering = next((j for j in range(allowed) if self.cost[j] < 0), None)
        if entering is None:
            return "optimal"
        best = None
        for i, row in enumerate(self.rows):
            a = row[entering]
            if a > 0:
                key = (row[-1] / a, self.basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return "unbounded"
        self.pivot(best[1], entering)
        return "go_on"

    def run(self, allowed: int) -> str:
        while True:
            status = self.bland_step(allowed)
            if status != "go_on":
                return status

    def phase1_duals(self) -> List[Fraction]:
        """Optimal phase-1 duals, indexed by original row."""
        duals = [Fraction(0)] * self.m
        for i in range(self.m):
            duals[i] = 1 - self.cost[self.n + i]
        return duals

    def drive_out_artificials(self) -> None:
        """Pivot zero-level artificials out; drop rows that are redundant."""
        keep = []
        for r in range(len(self.rows)):
            if self.basis[r] >= self.n:
                col = next((j for j in range(self.n) if self.rows[r][j] != 0), None)
                if col is None:
                    continue
                self.pivot(r, col)
            keep.append(r)
        self.rows = [self.rows[r] for r in keep]
        self.basis = [self.basis[r] for r in keep]
        self.row_ids = [self.row_ids[r] for r in keep]

    def set_objective(self, c: Sequence[Fraction]) -> None:
        cost = [Fraction(cj) for cj in c] + [Fraction(0)] * self.m + [Fraction(0)]
        for r, col in enumerate(self.basis):
            f = cost[col]
            if f != 0:
                cost = [a - f * p for a, p in zip(cost, self.rows[r])]
        self.cost = cost

    def primal(self) -> List[Fraction]:
        x = [Fraction(0)] * self.n
        for r, col in enumerate(self.basis):
            if col < self.n:
                x[col] = self.rows[r][-1]
        return x


# ══════════════════════════════════════════════════════════════════════════════
#  VERIFICATION
# ══════════════════════════════════════════════════════════════════════════════

def _check_primal(A, b, x, tol: float = 0.0) -> bool:
    if any(xj < -tol for xj in x):
        return False
    for row, bi in zip(A, b):
        if abs(sum(a * xj for a, xj in zip(row, x)) - bi) > tol:
            return False
    return True


def _check_farkas(A, b, y, tol: float = 0.0) -> bool:
    n = len(A[0]) if A else 0
    for j in range(n):
        if sum(A[i][j] * y[i] for i in range(len(A))) < -tol:
            return False
    value = sum(bi * yi for bi, yi in zip(b, y))
    return value < -tol if tol else value < 0


# ══════════════════════════════════════════════════════════════════════════════
#  EXACT BACKEND
# ══════════════════════════════════════════════════════════════════════════════

def _exact(A, b, c=None) -> LPResult:
    A = [[Fraction(a) for a in row] for row in A]
    b = [Fraction(bi) for bi in b]
    if not A:
        return LPResult("optimal", x=(), objective=Fraction(0))
    tab = SimplexTableau(A, b)
    tab.run(tab.n + tab.m)
    infeasibility = -tab.cost[-1]
    if infeasibility > 0:
        duals = tab.phase1_duals()
        y = tuple(-s * d for s, d in zip(tab.signs, duals))
        if not _check_farkas(A, b, y):
            raise InternalInconsistency("phase-1 duals do not certify infeasibility")
        logger.debug("exact LP infeasible after %d pivots", tab.pivots)
        return LPResult("infeasible", certificate=y)
    tab.drive_out_artificials()
    status = "optimal"
    objective = None
    if c is not None:
        tab.set_objective(c)
        status = tab.run(tab.n)
        objective = -tab.cost[-1] if status == "optimal" else None
    x = tab.primal()
    if not _check_primal(A, b, x):
        raise InternalInconsistency("simplex returned a point that violates A x = b")
    logger.debug("exact LP %s after %d pivots", status, tab.pivots)
    return LPResult(status, x=tuple(x), objective=objective)


# ══════════════════════════════════════════════════════════════════════════════
#  FLOAT BACKEND
# ══════════════════════════════════════════════════════════════════════════════

def _float(A, b, c=None, tol: float = 1e-9) -> LPResult:
    A_arr = np.array([[float(a) for a in row] for row in A], dtype=float)
    b_arr = np.array([float(bi) for bi in b], dtype=float)
    n = A_arr.shape[1]
    cost = np.zeros(n) if c is None else np.array([float(cj) for cj in c])
    res = linprog(cost, A_eq=A_arr, b_eq=b_arr, bounds=(0, None), method="highs")
    if res.status == 0:
        x = np.clip(res.x, 0.0, None)
        scale = max(1.0, float(np.abs(b_arr).max(initial=0.0)))
        if np.abs(A_arr @ x - b_arr).max(initial=0.0) > tol * scale * 10:
            raise InternalInconsistency("float LP point violates A x = b")
        objective = None if c is None else float(cost @ x)
        return LPResult("optimal", x=tuple(float(v) for v in x),
                        objective=objective, backend="float")
    if res.status == 3:
        return LPResult("unbounded", backend="float")
    if res.status != 2:
        raise InternalInconsistency(f"float LP failed: {res.message}")
    # certificate: A^T y >= 0, b.y = -1
    m = A_arr.shape[0]
    cert = linprog(np.zeros(m), A_ub=-A_arr.T, b_ub=np.zeros(n),
                   A_eq=b_arr.reshape(1, -1), b_eq=np.array([-1.0]),
                   bounds=(None, None), method="highs")
    if cert.status != 0:
        raise InternalInconsistency("float LP infeasible but no Farkas vector found")
    y = tuple(float(v) for v in cert.x)
    if not _check_farkas(A_arr.tolist(), b_arr.tolist(), y, tol=tol):
        raise InternalInconsistency("float Farkas vector does not verify")
    return LPResult("infeasible", certificate=y, backend="float")


def solve_feasibility(A, b, backend: str = "exact", tol: float = 1e-9) -> LPResult:
    """Find x >= 0 with A x = b, or a Farkas certificate."""
    if backend == "exact":
        return _exact(A, b)
    return _float(A, b, tol=tol)


def solve_lp(c, A, b, backend: str = "exact", tol: float = 1e-9) -> LPResult:
    """Minimize c.x subject to A x = b, x >= 0."""
    if backend == "exact":
        return _exact(A, b, c)
    return _float(A, b, c, tol=tol)


def verify_certificate(A, b, y, tol: float = 0.0) -> bool:
    """True when y proves A x = b, x >= 0 infeasible."""
    return _check_farkas(A, b, y, tol=tol)
