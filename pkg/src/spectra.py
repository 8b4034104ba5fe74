"""
Joint Spectral Measures

Atomic probability measures on R^n (the joint spectral distribution of a
commuting hermitian tuple with finite joint spectrum) and the convex
geometry the rest of the library is built on.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from core.rationals import Point, Scalar, format_scalar, is_exact, parse_scalar
from core.schemas import MeasurePayload
from .errors import BadWeights, DimensionMismatch
from .lp import solve_feasibility, solve_lp

logger = logging.getLogger(__name__)

FLOAT_TOL = 1e-9
# float atoms closer than this merge into one
MERGE_DIGITS = 12


def _merge_key(atom: Point) -> tuple:
    if is_exact(atom):
        return tuple(atom)
    return tuple(round(float(x), MERGE_DIGITS) + 0.0 for x in atom)


@dataclass(frozen=True)
class AtomicJointMeasure:
    """Finite atomic probability measure; weights are always exact."""
    atoms: Tuple[Point, ...]
    weights: Tuple[Fraction, ...]

    @classmethod
    def build(cls, atoms: Sequence[Sequence[Scalar]], weights: Sequence[Scalar]) -> "AtomicJointMeasure":
        """Validate, merge duplicate atoms and freeze."""
        if len(atoms) == 0:
            raise BadWeights("a measure needs at least one atom")
        if len(atoms) != len(weights):
            raise DimensionMismatch(f"{len(atoms)} atoms but {len(weights)} weights")
        n = len(atoms[0])
        if n < 1:
            raise DimensionMismatch("atoms must have at least one coordinate")
        exact = all(is_exact(a) for a in atoms)
        merged: Dict[tuple, int] = {}
        out_atoms: List[Point] = []
        out_weights: List[Fraction] = []
        for atom, w in zip(atoms, weights):
            if len(atom) != n:
                raise DimensionMismatch(f"atom {tuple(atom)} is not in R^{n}")
            w = parse_scalar(w)
            if w <= 0:
                raise BadWeights(f"weight {w} of atom {tuple(atom)} is not positive")
            atom = tuple(Fraction(x) for x in atom) if exact else tuple(float(x) for x in atom)
            key = _merge_key(atom)
            if key in merged:
                out_weights[merged[key]] += w
            else:
                merged[key] = len(out_atoms)
                out_atoms.append(atom)
                out_weights.append(w)
        total = sum(out_weights)
        if total != 1:
            raise BadWeights(f"weights sum to {total}, not 1")
        return cls(tuple(out_atoms), tuple(out_weights))

    @classmethod
    def from_payload(cls, payload: MeasurePayload, exact: bool = True) -> "AtomicJointMeasure":
        atoms = [[parse_scalar(x) for x in atom] for atom in payload.atoms]
        if not exact:
            atoms = [[float(x) for x in atom] for atom in atoms]
        return cls.build(atoms, [parse_scalar(w) for w in payload.weights])

    def to_payload(self) -> MeasurePayload:
        return MeasurePayload(
            n=self.n,
            atoms=[[format_scalar(x) for x in atom] for atom in self.atoms],
            weights=[format_scalar(w) for w in self.weights],
        )

    @property
    def n(self) -> int:
        return len(self.atoms[0])

    @property
    def k(self) -> int:
        return len(self.atoms)

    @property
    def exact(self) -> bool:
        return all(is_exact(a) for a in self.atoms)

    def as_float(self) -> "AtomicJointMeasure":
        return AtomicJointMeasure(
            tuple(tuple(float(x) for x in a) for a in self.atoms), self.weights)

    def sorted(self) -> "AtomicJointMeasure":
        """Same measure with atoms in lexicographic order."""
        order = sorted(range(self.k), key=lambda i: tuple(float(x) for x in self.atoms[i]))
        return AtomicJointMeasure(
            tuple(self.atoms[i] for i in order), tuple(self.weights[i] for i in order))

    def same_as(self, other: "AtomicJointMeasure", tol: float = 0.0) -> bool:
        """Equality as measures, ignoring atom order."""
        if self.n != other.n or self.k != other.k:
            return False
        a, b = self.sorted(), other.sorted()
        for (x, w), (y, v) in zip(zip(a.atoms, a.weights), zip(b.atoms, b.weights)):
            if w != v:
                return False
            if tol == 0.0 and self.exact and other.exact:
                if x != y:
                    return False
            elif max(abs(float(s) - float(t)) for s, t in zip(x, y)) > tol:
                return False
        return True


def cell_measure(cells: Sequence[Point]) -> AtomicJointMeasure:
    """Measure of a diagonal tuple read cell by cell, each cell of mass 1/N."""
    N = len(cells)
    return AtomicJointMeasure.build(list(cells), [Fraction(1, N)] * N)


def choose_backend(requested: str, *measures: AtomicJointMeasure, limit: int = 1000) -> str:
    """Resolve ``auto`` to ``exact`` for small rational data, else ``float``."""
    exact = all(m.exact for m in measures)
    if requested == "exact":
        return "exact" if exact else "float"
    if requested == "float":
        return "float"
    size = sum(m.k * m.n for m in measures)
    return "exact" if exact and size <= limit else "float"


# ══════════════════════════════════════════════════════════════════════════════
#  BARYCENTER
# ══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class Barycenter:
    value: Point


def barycenter(m: AtomicJointMeasure) -> Barycenter:
    zero = Fraction(0) if m.exact else 0.0
    total = [zero] * m.n
    for atom, w in zip(m.atoms, m.weights):
        for r in range(m.n):
            total[r] += w * atom[r] if m.exact else float(w) * atom[r]
    return Barycenter(tuple(total))


# ══════════════════════════════════════════════════════════════════════════════
#  HULL MEMBERSHIP
# ══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class HullCertificate:
    point: Point
    coefficients: Tuple[Scalar, ...]
    backend: str = "exact"


@dataclass(frozen=True)
class SeparatingFunctional:
    """The NotInHull outcome: normal.atom <= offset for every atom, normal.p > offset."""
    point: Point
    normal: Tuple[Scalar, ...]
    offset: Scalar
    backend: str = "exact"

    def value(self, x: Point) -> Scalar:
        return sum(a * b for a, b in zip(self.normal, x))


def _hull_system(p: Point, atoms: Sequence[Point]):
    n = len(p)
    A = [[atom[r] for atom in atoms] for r in range(n)]
    A.append([1] * len(atoms))
    b = list(p) + [1]
    return A, b


def hull_membership(p: Sequence[Scalar], m: Union[AtomicJointMeasure, Sequence[Point]],
                    backend: Optional[str] = None, tol: float = FLOAT_TOL
                    ) -> Union[HullCertificate, SeparatingFunctional]:
    """Convex coefficients reproducing p, or a separating affine functional."""
    atoms = m.atoms if isinstance(m, AtomicJointMeasure) else [tuple(a) for a in m]
    p = tuple(p)
    if len(p) != len(atoms[0]):
        raise DimensionMismatch(f"point {p} is not in R^{len(atoms[0])}")
    if backend is None:
        backend = "exact" if is_exact(p) and all(is_exact(a) for a in atoms) else "float"
    if backend == "exact":
        p = tuple(Fraction(x) for x in p)
    A, b = _hull_system(p, atoms)
    result = solve_feasibility(A, b, backend=backend, tol=tol)
    if result.feasible:
        return HullCertificate(p, tuple(result.x), backend)
    y = result.certificate
    normal = tuple(-v for v in y[:-1])
    return SeparatingFunctional(p, normal, y[-1], backend)


def affine_rank(points: Sequence[Point]) -> int:
    """Dimension of the affine hull."""
    if len(points) <= 1:
        return 0
    base = points[0]
    diffs = [[x - y for x, y in zip(pt, base)] for pt in points[1:]]
    if all(is_exact(pt) for pt in points):
        return sympy.Matrix(diffs).rank()
    arr = np.array(diffs, dtype=float)
    return int(np.linalg.matrix_rank(arr, tol=FLOAT_TOL * max(1.0, float(np.abs(arr).max()))))


def simplex_test(m: Union[AtomicJointMeasure, Sequence[Point]]) -> bool:
    """True iff the atoms are affinely independent."""
    atoms = m.atoms if isinstance(m, AtomicJointMeasure) else list(m)
    return affine_rank(atoms) == len(atoms) - 1


def interior_coefficients(point: Sequence[Scalar], atoms: Sequence[Point],
                          backend: Optional[str] = None, tol: float = FLOAT_TOL
                          ) -> Optional[Tuple[Scalar, ...]]:
    """
    Strictly positive convex coefficients of ``point`` over ``atoms``.

    Maximizes the smallest coefficient; returns None when it is zero, i.e.
    when the point is not in the relative interior of the hull.
    """
    k = len(atoms)
    point = tuple(point)
    if backend is None:
        backend = "exact" if is_exact(point) and all(is_exact(a) for a in atoms) else "float"
    if backend == "exact":
        point = tuple(Fraction(x) for x in point)
    n = len(point)
    # variables: s_1..s_k, t with coefficient_i = s_i + t
    A = []
    for r in range(n):
        A.append([atoms[i][r] for i in range(k)] + [sum(atoms[i][r] for i in range(k))])
    A.append([1] * k + [k])
    b = list(point) + [1]
    c = [0] * k + [-1]
    result = solve_lp(c, A, b, backend=backend, tol=tol)
    if result.status != "optimal":
        return None
    t = result.x[-1]
    if (backend == "exact" and t <= 0) or (backend != "exact" and t <= tol):
        logger.debug("point %s is on the relative boundary", point)
        return None
    return tuple(s + t for s in result.x[:-1])
