"""
B(H) Diagonals

Diagonals of commuting tuples with finite joint spectrum X in B(H), worked
on a truncation of M basis vectors. Every vertex of conv(X) carries many
cells; the unitary is assembled from Fourier blocks on cells that are
pairwise uncoupled, so the achieved diagonal is known exactly before the
dense matrix is built.

Pieces:
    pair_decompose_interior   d as a rational mix of points on edges of conv(X)
    quantize_target           finitely many interior values within eps of a sequence
    synthesize_*              the truncated unitaries for constant and finite targets
    arveson_index_check       the integer-lattice necessary condition
"""

import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy
from sympy.core.intfunc import igcdex

from core.rationals import Point, is_exact, lcm_of_denominators, parse_scalar, simplest_between, snap, sup_distance
from core.schemas import SequencePayload, VerticesPayload
from .errors import (
    DegenerateHull,
    DimensionMismatch,
    InternalInconsistency,
    NoRationalCombination,
    NotInHull,
    NotInterior,
    OutOfRange,
    TruncationTooSmall,
    UnsupportedIrrationalVertices,
)
from .matrixlab import ConjugationPlan, UnitaryMatrix
from .spectra import FLOAT_TOL, SeparatingFunctional, hull_membership, interior_coefficients

logger = logging.getLogger(__name__)

MAX_STEP2_DENOMINATOR = 64
RATIONALIZE_DENOMINATOR = 10**6


def _exact_point(p: Sequence) -> Point:
    return tuple(parse_scalar(x) for x in p)


def wire_scalar(x):
    """JSON floats stay floats; rational strings and integers become exact."""
    return x if isinstance(x, float) else parse_scalar(x)


def _mix(weights: Sequence[Fraction], points: Sequence[Point]) -> Point:
    n = len(points[0])
    return tuple(sum((w * p[r] for w, p in zip(weights, points)), Fraction(0)) for r in range(n))


def _mean(points: Sequence[Point]) -> Point:
    return _mix([Fraction(1, len(points))] * len(points), points)


# ══════════════════════════════════════════════════════════════════════════════
#  TYPES
# ══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class VertexSet:
    """Vertices of a convex polytope; none is a convex combination of the others."""
    vertices: Tuple[Point, ...]

    @classmethod
    def build(cls, vertices: Sequence[Sequence]) -> "VertexSet":
        if len(vertices) < 2:
            raise DegenerateHull(f"{len(vertices)} vertex given, at least 2 needed")
        n = len(vertices[0])
        if any(len(v) != n for v in vertices):
            raise DimensionMismatch(f"vertices are not all in R^{n}")
        exact = all(is_exact(v) for v in vertices)
        points = tuple(tuple(Fraction(x) for x in v) if exact else tuple(float(x) for x in v)
                       for v in vertices)
        if len(set(points)) != len(points):
            raise DegenerateHull("repeated vertex")
        if len(points) > 2:
            for i, v in enumerate(points):
                others = points[:i] + points[i + 1:]
                if not isinstance(hull_membership(v, others), SeparatingFunctional):
                    raise DegenerateHull(f"vertex {i} lies in the hull of the others")
        return cls(points)

    @classmethod
    def from_payload(cls, payload: VerticesPayload) -> "VertexSet":
        if any(len(v) != payload.n for v in payload.vertices):
            raise DimensionMismatch(f"a vertex is not in R^{payload.n}")
        return cls.build([[wire_scalar(x) for x in v] for v in payload.vertices])

    @property
    def k(self) -> int:
        return len(self.vertices)

    @property
    def n(self) -> int:
        return len(self.vertices[0])

    @property
    def exact(self) -> bool:
        return all(is_exact(v) for v in self.vertices)

    @cached_property
    def rational(self) -> Tuple[Point, ...]:
        return tuple(_exact_point(v) for v in self.vertices)

    @cached_property
    def barycenter(self) -> Point:
        return _mean(self.rational)


@dataclass(frozen=True)
class EdgeTerm:
    """q * (alpha * vertex_i + (1 - alpha) * vertex_j)."""
    i: int
    j: int
    q: Fraction
    alpha: Fraction

    def point(self, X: VertexSet) -> Point:
        return _mix([self.alpha, 1 - self.alpha], [X.rational[self.i], X.rational[self.j]])


@dataclass(frozen=True)
class EdgeDecomposition:
    terms: Tuple[EdgeTerm, ...]

    @property
    def denominator(self) -> int:
        return lcm_of_denominators(t.q for t in self.terms)

    def reconstruct(self, X: VertexSet) -> Point:
        return _mix([t.q for t in self.terms], [t.point(X) for t in self.terms])

    def covered(self) -> set:
        return {t.i for t in self.terms} | {t.j for t in self.terms}


@dataclass(frozen=True)
class DiagonalTarget:
    entries: Tuple[Point, ...]

    @classmethod
    def build(cls, entries: Sequence[Sequence]) -> "DiagonalTarget":
        if not entries:
            raise DimensionMismatch("empty target")
        n = len(entries[0])
        if any(len(e) != n for e in entries):
            raise DimensionMismatch(f"target entries are not all in R^{n}")
        return cls(tuple(_exact_point(e) for e in entries))

    @classmethod
    def from_payload(cls, payload: SequencePayload) -> "DiagonalTarget":
        if any(len(e) != payload.n for e in payload.entries):
            raise DimensionMismatch(f"a target entry is not in R^{payload.n}")
        return cls.build(payload.entries)

    @property
    def size(self) -> int:
        return len(self.entries)

    @cached_property
    def positions(self) -> Dict[Point, List[int]]:
        """Positions of each distinct value, in order of first appearance."""
        out: Dict[Point, List[int]] = {}
        for t, e in enumerate(self.entries):
            out.setdefault(e, []).append(t)
        return out

    @property
    def distinct(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class IndexVerdict:
    deviation_sum: Point
    coefficients: Optional[Tuple[int, ...]]
    exact: bool = True

    @property
    def present(self) -> bool:
        return self.coefficients is not None


# ══════════════════════════════════════════════════════════════════════════════
#  EDGE DECOMPOSITION
# ══════════════════════════════════════════════════════════════════════════════

def _split(coeffs: Dict[int, Fraction], scale: Fraction) -> List[EdgeTerm]:
    """Edge terms for sum_i coeffs[i] vertex_i, all coefficients positive."""
    idx = sorted(coeffs)
    if len(idx) == 2:
        return [EdgeTerm(idx[0], idx[1], scale, coeffs[idx[0]])]
    first, last = idx[0], idx[-1]
    c_first, c_last = coeffs[first], coeffs[last]
    # q in (c_last, c_last + c_first) keeps the first vertex inside the facet
    q = simplest_between(c_last, c_last + c_first)
    a = c_last / q
    rest = {i: coeffs[i] / (1 - q) for i in idx[1:-1]}
    rest[first] = (c_first - q * (1 - a)) / (1 - q)
    term = EdgeTerm(last, first, scale * q, a)
    return [term] + _split(rest, scale * (1 - q))


def pair_decompose_interior(d: Sequence, X: VertexSet) -> EdgeDecomposition:
    """Write an interior point d as sum q_t (alpha_t v_i + (1 - alpha_t) v_j) with rational q_t."""
    if len(d) != X.n:
        raise DimensionMismatch(f"point {tuple(d)} is not in R^{X.n}")
    d = _exact_point(d)
    coeffs = interior_coefficients(d, X.rational, backend="exact")
    if coeffs is None:
        raise NotInterior(f"{tuple(str(x) for x in d)} is not interior to the hull of X")
    decomposition = EdgeDecomposition(tuple(_split(dict(enumerate(coeffs)), Fraction(1))))
    if sum(t.q for t in decomposition.terms) != 1 or decomposition.reconstruct(X) != d:
        raise InternalInconsistency("edge decomposition does not reconstruct the point")
    if decomposition.covered() != set(range(X.k)):
        raise InternalInconsistency("edge decomposition misses a vertex")
    logger.debug("decomposed %s into %d edge terms, denominator %d",
                 d, len(decomposition.terms), decomposition.denominator)
    return decomposition


def _decompose_all(values: Sequence[Point], X: VertexSet, threads: int = 1
                   ) -> Dict[Point, EdgeDecomposition]:
    if threads > 1 and len(values) > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(values))) as pool:
            results = list(pool.map(lambda v: pair_decompose_interior(v, X), values))
    else:
        results = [pair_decompose_interior(v, X) for v in values]
    return dict(zip(values, results))


# ══════════════════════════════════════════════════════════════════════════════
#  QUANTIZATION
# ══════════════════════════════════════════════════════════════════════════════

def _is_interior(p: Point, X: VertexSet) -> bool:
    return interior_coefficients(p, X.rational, backend="exact") is not None


def _shrink(p: Point, X: VertexSet, budget: Fraction) -> Optional[Point]:
    """
    Pull p toward the barycenter by the largest dyadic factor (at most 1/2)
    that moves it no more than budget; None when that pull stays outside
    the interior.
    """
    if _is_interior(p, X):
        return p
    distance = sup_distance(X.barycenter, p)
    if distance == 0 or budget <= 0:
        return None
    t = Fraction(1, 2)
    while t * distance > budget:
        t /= 2
    pulled = _mix([t, 1 - t], [X.barycenter, p])
    return pulled if _is_interior(pulled, X) else None


def _check_in_hull(entry: Sequence, X: VertexSet, tol: float) -> None:
    verdict = hull_membership(entry, X.vertices)
    if not isinstance(verdict, SeparatingFunctional):
        return
    if verdict.backend == "exact":
        raise NotInHull(f"entry {tuple(str(x) for x in entry)} lies outside the hull of X")
    excess = float(verdict.value(tuple(float(x) for x in entry))) - float(verdict.offset)
    norm = max(abs(float(v)) for v in verdict.normal) or 1.0
    if excess / norm > tol:
        raise NotInHull(f"entry {tuple(entry)} lies {excess / norm:.3g} outside the hull of X")


def quantize_target(seq: Sequence[Sequence], X: VertexSet, eps, tol: float = FLOAT_TOL
                    ) -> DiagonalTarget:
    """
    Replace a sequence in conv(X) by finitely many interior values within eps.

    Exact interior entries are kept. Others are snapped to the eps/2 grid and,
    if that leaves the interior, pulled toward the vertex barycenter with
    whatever is left of eps; when that pull cannot reach the interior the
    unsnapped entry is pulled instead.
    """
    eps = parse_scalar(eps)
    if eps <= 0:
        raise OutOfRange(f"eps = {eps} must be positive")
    step = eps / 2
    out: Dict[tuple, Point] = {}
    entries: List[Point] = []
    for entry in seq:
        if len(entry) != X.n:
            raise DimensionMismatch(f"entry {tuple(entry)} is not in R^{X.n}")
        key = tuple(entry)
        if key not in out:
            _check_in_hull(entry, X, tol)
            original = _exact_point(entry)
            if is_exact(entry) and _is_interior(original, X):
                out[key] = original
            else:
                snapped = tuple(snap(x, step) for x in original)
                candidate = _shrink(snapped, X, eps - sup_distance(snapped, original))
                if candidate is None:
                    candidate = _shrink(original, X, eps)
                if candidate is None:
                    raise OutOfRange(f"entry {tuple(entry)} cannot be moved into the interior "
                                     f"within eps = {eps}")
                if sup_distance(candidate, original) > eps:
                    raise InternalInconsistency(f"quantized entry moved more than eps = {eps}")
                out[key] = candidate
        entries.append(out[key])
    target = DiagonalTarget(tuple(entries))
    logger.debug("quantized %d entries to %d distinct values", target.size, target.distinct)
    return target


# ══════════════════════════════════════════════════════════════════════════════
#  SYNTHESIS
# ══════════════════════════════════════════════════════════════════════════════

def _block_sizes(decomposition: EdgeDecomposition, M: int) -> Tuple[List[int], int]:
    """Cells per edge term and the number of regrouping groups (0 when M is off the grid)."""
    N = decomposition.denominator
    L, extra = divmod(M, N)
    if extra == 0:
        return [L * int(t.q * N) for t in decomposition.terms], L
    raw = [t.q * M for t in decomposition.terms]
    sizes = [math.floor(x) for x in raw]
    order = sorted(range(len(raw)), key=lambda t: (-(raw[t] - sizes[t]), t))
    for t in order[:M - sum(sizes)]:
        sizes[t] += 1
    return sizes, 0


def _fits(X: VertexSet, decomposition: EdgeDecomposition, M: int) -> bool:
    """Whether M cells carry the block with both vertices of every edge term present."""
    if M < X.k * decomposition.denominator:
        return False
    sizes, _ = _block_sizes(decomposition, M)
    return all(1 <= round(t.alpha * s) <= s - 1 for t, s in zip(decomposition.terms, sizes))


def _smallest_block(X: VertexSet, decomposition: EdgeDecomposition, start: int = 1) -> int:
    M = max(start, 1)
    while not _fits(X, decomposition, M):
        M += 1
    return M


def _bound(X: VertexSet, d: Point, decomposition: EdgeDecomposition, M: int) -> Fraction:
    _, groups = _block_sizes(decomposition, M)
    C = Fraction(0)
    for t in decomposition.terms:
        C += sup_distance(X.rational[t.i], X.rational[t.j]) / 2
        if not groups:
            C += sup_distance(t.point(X), d)
    return C / M


def truncation_bound(X: VertexSet, d: Sequence, M: int) -> Fraction:
    """A-priori sup error of the constant-diagonal synthesis on M cells."""
    d = _exact_point(d)
    return _bound(X, d, pair_decompose_interior(d, X), M)


@dataclass
class Synthesis:
    """A truncated synthesis: the plan, the source cells and the predicted diagonal."""
    X: VertexSet
    plan: ConjugationPlan
    vertex_of: Tuple[int, ...]
    predicted: Tuple[Point, ...]
    target: Tuple[Point, ...]
    bound: Fraction
    layout: List[dict] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.vertex_of)

    @cached_property
    def unitary(self) -> UnitaryMatrix:
        return self.plan.materialize()

    def model_tuple(self) -> List[Point]:
        """S_M: the joint eigenvalue sitting on each cell."""
        return [self.X.vertices[v] for v in self.vertex_of]

    def dense_diagonal(self) -> np.ndarray:
        weights = np.abs(self.unitary.matrix) ** 2
        values = np.array([[float(x) for x in self.X.vertices[v]] for v in self.vertex_of])
        return weights @ values

    @property
    def predicted_error(self) -> Fraction:
        return max(sup_distance(p, t) for p, t in zip(self.predicted, self.target))

    @cached_property
    def sup_error(self) -> float:
        """max |diag(U S U*) - target| read from the dense unitary."""
        target = np.array([[float(x) for x in t] for t in self.target])
        return float(np.abs(self.dense_diagonal() - target).max(initial=0.0))

    @property
    def multiplicities(self) -> List[int]:
        counts = Counter(self.vertex_of)
        return [counts.get(i, 0) for i in range(self.X.k)]

    @property
    def multiplicity_floor(self) -> int:
        return -(-self.size // (4 * self.X.k))

    @property
    def floor_met(self) -> bool:
        return min(self.multiplicities) >= self.multiplicity_floor


class _Cells:
    """Cell bookkeeping shared by the constant and finite syntheses."""

    def __init__(self, X: VertexSet, size: int):
        self.X = X
        self.size = size
        self.plan = ConjugationPlan(size)
        self.vertex_of: List[Optional[int]] = [None] * size
        self.predicted: List[Optional[Point]] = [None] * size
        self.bounds: List[Fraction] = [Fraction(0)] * size
        self.layout: List[dict] = []
        self.cursor = 0

    def take(self, count: int) -> List[int]:
        if self.cursor + count > self.size:
            raise InternalInconsistency("synthesis ran out of cells")
        cells = list(range(self.cursor, self.cursor + count))
        self.cursor += count
        return cells

    def constant_block(self, cells: List[int], d: Point, decomposition: EdgeDecomposition) -> None:
        """Constant diagonal close to d on the given cells."""
        X, M = self.X, len(cells)
        N = decomposition.denominator
        if M < X.k * N:
            raise TruncationTooSmall(f"{M} cells cannot carry a block of denominator {N} "
                                     f"over {X.k} vertices (needs {X.k * N})", needed=X.k * N)
        sizes, groups = _block_sizes(decomposition, M)
        blocks, start, terms = [], 0, []
        for t, size in zip(decomposition.terms, sizes):
            rank = round(t.alpha * size)
            if not 1 <= rank <= size - 1:
                raise TruncationTooSmall(f"block of {size} cells cannot hold both vertices "
                                         f"{t.i} and {t.j} at alpha = {t.alpha}")
            block = cells[start:start + size]
            start += size
            width = size // groups if groups else size
            # column-major fill: position s*groups + g holds vertex i below rank
            for p, cell in enumerate(block):
                if groups:
                    g, s = divmod(p, width)
                    p_col = s * groups + g
                else:
                    p_col = p
                self.vertex_of[cell] = t.i if p_col < rank else t.j
            blocks.append((block, width))
            terms.append({"i": t.i, "j": t.j, "q": str(t.q), "alpha": str(t.alpha),
                          "cells": size, "rank": rank})
        if groups:
            for block, width in blocks:
                for s in range(width):
                    self.plan.fourier(block[s::width])
            for g in range(groups):
                self.plan.fourier([c for block, width in blocks
                                   for c in block[g * width:(g + 1) * width]])
        else:
            self.plan.fourier(cells)
        value = _mean([self.X.rational[self.vertex_of[c]] for c in cells])
        bound = _bound(X, d, decomposition, M)
        for c in cells:
            self.predicted[c] = value
            self.bounds[c] = bound
        self.layout.append({"value": [str(x) for x in d], "cells": M,
                            "groups": groups or 1, "terms": terms})

    def finish(self, target: Sequence[Point], enforce_floor: bool = True) -> Synthesis:
        if self.cursor != self.size or any(v is None for v in self.vertex_of):
            raise InternalInconsistency("synthesis left cells unassigned")
        synthesis = Synthesis(self.X, self.plan, tuple(self.vertex_of), tuple(self.predicted),
                              tuple(target), max(self.bounds), self.layout)
        if synthesis.predicted_error > synthesis.bound:
            raise InternalInconsistency(
                f"predicted error {synthesis.predicted_error} exceeds the bound {synthesis.bound}")
        if enforce_floor and not synthesis.floor_met:
            counts = synthesis.multiplicities
            thin = min(range(self.X.k), key=lambda i: counts[i])
            # vertex shares follow the barycentric coordinates of the target, not M
            raise TruncationTooSmall(
                f"vertex {thin} carries {counts[thin]} of {self.size} cells, below the floor of "
                f"{synthesis.multiplicity_floor}; the target is too close to the boundary of conv(X)",
                multiplicities=counts, floor=synthesis.multiplicity_floor)
        return synthesis


def synthesize_constant_diagonal(X: VertexSet, d: Sequence, M: int,
                                 enforce_floor: bool = True) -> Synthesis:
    """
    Truncated unitary whose conjugate of S_M has every diagonal entry within C/M of d.

    Raises TruncationTooSmall when a vertex gets fewer than ceil(M/(4k)) cells,
    unless enforce_floor is off.
    """
    d = _exact_point(d)
    decomposition = pair_decompose_interior(d, X)
    cells = _Cells(X, M)
    cells.constant_block(cells.take(M), d, decomposition)
    synthesis = cells.finish([d] * M, enforce_floor)
    logger.debug("constant synthesis on %d cells, bound %s", M, synthesis.bound)
    return synthesis


def _combination(e: Point, d: Point, X: VertexSet, max_denominator: int) -> Tuple[int, Point]:
    """Smallest b with f = ((1 + b) d - e) / b interior, so d = (e + b f) / (1 + b)."""
    for b in range(1, max_denominator):
        f = tuple(((1 + b) * x - y) / b for x, y in zip(d, e))
        if _is_interior(f, X):
            return b, f
    raise NoRationalCombination(
        f"no f with d = (e + b f)/(1 + b) interior for b < {max_denominator}")


def synthesize_finite_diagonal(X: VertexSet, target: DiagonalTarget, M: Optional[int] = None,
                               max_denominator: int = MAX_STEP2_DENOMINATOR,
                               threads: int = 1, enforce_floor: bool = True) -> Synthesis:
    """
    Truncated unitary realizing a target with finitely many interior values.

    Values carried by at least M/(4 * distinct) entries get their own constant
    block. Each rarer value e borrows cells from the most frequent value d:
    one block at e, b blocks at f, and groups of one e cell plus one cell from
    every f block flattened to d.
    """
    if M is None:
        M = target.size
    if M != target.size:
        raise DimensionMismatch(f"target has {target.size} entries, truncation size is {M}")
    positions = target.positions
    values = list(positions)
    if len(values) == 1:
        return synthesize_constant_diagonal(X, values[0], M, enforce_floor)

    decompositions = _decompose_all(values, X, threads)
    distinct = len(values)
    rare = [v for v in values if 4 * distinct * len(positions[v]) < M]
    common = [v for v in values if v not in rare]
    if not common:
        raise TruncationTooSmall(f"no value of the target repeats at least M/{4 * distinct} times")
    host = max(common, key=lambda v: len(positions[v]))
    budget = len(positions[host]) // 2

    cells = _Cells(X, M)
    produced: Dict[Point, List[int]] = {v: [] for v in values}
    for e in rare:
        count = len(positions[e])
        b, f = _combination(e, host, X, max_denominator)
        f_decomposition = pair_decompose_interior(f, X)
        G = max(_smallest_block(X, f_decomposition),
                _smallest_block(X, decompositions[e], count + 1) - count)
        if G * (1 + b) > budget:
            raise TruncationTooSmall(f"mixing value {tuple(str(x) for x in e)} into the host "
                                     f"needs {G * (1 + b)} host cells, {budget} available")
        budget -= G * (1 + b)
        e_cells = cells.take(count + G)
        cells.constant_block(e_cells, e, decompositions[e])
        f_blocks = []
        for _ in range(b):
            block = cells.take(G)
            cells.constant_block(block, f, f_decomposition)
            f_blocks.append(block)
        produced[e].extend(e_cells[:count])
        for h in range(G):
            group = [e_cells[count + h]] + [block[h] for block in f_blocks]
            cells.plan.fourier(group)
            value = _mean([cells.predicted[c] for c in group])
            bound = sum((cells.bounds[c] for c in group), Fraction(0)) / len(group)
            for c in group:
                cells.predicted[c] = value
                cells.bounds[c] = bound
            produced[host].extend(group)
        cells.layout.append({"mixed": [str(x) for x in e], "host": [str(x) for x in host],
                             "b": b, "groups": G})

    for v in common:
        remaining = len(positions[v]) - len(produced[v])
        if remaining:
            block = cells.take(remaining)
            cells.constant_block(block, v, decompositions[v])
            produced[v].extend(block)

    order = [0] * M
    for v in values:
        for pos, cell in zip(positions[v], produced[v]):
            order[pos] = cell
    cells.plan.permute(order)
    cells.predicted = [cells.predicted[c] for c in order]
    cells.bounds = [cells.bounds[c] for c in order]
    synthesis = cells.finish(target.entries, enforce_floor)
    logger.debug("finite synthesis: %d values (%d rare) on %d cells, bound %s",
                 distinct, len(rare), M, synthesis.bound)
    return synthesis


# ══════════════════════════════════════════════════════════════════════════════
#  INDEX OBSTRUCTION
# ══════════════════════════════════════════════════════════════════════════════

def _rationalize(value) -> Tuple[Fraction, bool]:
    if isinstance(value, (Fraction, int)):
        return Fraction(value), True
    approx = Fraction(value).limit_denominator(RATIONALIZE_DENOMINATOR)
    if abs(float(approx) - float(value)) > 4 * math.ulp(float(value)):
        raise UnsupportedIrrationalVertices(
            f"{value!r} has no rational form with denominator <= {RATIONALIZE_DENOMINATOR}")
    return approx, False


def _column_echelon(rows: List[List[int]]) -> Tuple[List[List[int]], List[List[int]], List[Optional[int]]]:
    """
    Integer column operations: H = A K with K unimodular and H lower echelon.

    Returns H, K and the pivot column of each row (None when the row has none).
    """
    m, k = len(rows), len(rows[0])
    H = [list(r) for r in rows]
    K = [[int(i == j) for j in range(k)] for i in range(k)]

    def combine(p: int, c: int, x: int, y: int, u: int, v: int) -> None:
        # col_p <- x col_p + y col_c ; col_c <- u col_c + v col_p
        for Mx in (H, K):
            for row in Mx:
                a, b = row[p], row[c]
                row[p], row[c] = x * a + y * b, u * b + v * a

    pivots: List[Optional[int]] = []
    p = 0
    for r in range(m):
        if p >= k:
            pivots.append(None)
            continue
        for c in range(p + 1, k):
            a, b = H[r][p], H[r][c]
            if b == 0:
                continue
            x, y, g = (int(v) for v in igcdex(a, b))
            combine(p, c, x, y, a // g, -(b // g))
        if H[r][p] == 0:
            pivots.append(None)
        else:
            pivots.append(p)
            p += 1
    return H, K, pivots


def _lattice_solve(rows: List[List[Fraction]], rhs: List[Fraction]) -> Optional[List[int]]:
    """Integer solution of rows . nu = rhs, or None."""
    A, t = [], []
    for row, value in zip(rows, rhs):
        scale = lcm_of_denominators(list(row) + [value])
        A.append([int(x * scale) for x in row])
        t.append(int(value * scale))
    H, K, pivots = _column_echelon(A)
    k = len(A[0])
    z = [0] * k
    for r, pivot in enumerate(pivots):
        known = sum(H[r][c] * z[c] for c in range(k) if c != pivot)
        if pivot is None:
            if known != t[r]:
                return None
            continue
        quotient, remainder = divmod(t[r] - known, H[r][pivot])
        if remainder:
            return None
        z[pivot] = quotient
    return [sum(K[i][j] * z[j] for j in range(k)) for i in range(k)]


def arveson_index_check(X: VertexSet, phi: Sequence[int], prefix: Sequence[Sequence]) -> IndexVerdict:
    """
    Integer nu with sum nu_j = 0 and sum nu_j vertex_j = sum_m (vertex_phi(m) - d_m).

    Deviations beyond the prefix are taken to be zero. An absent nu rules the
    sequence out as an exact diagonal; a present one is only necessary.
    """
    if len(phi) != len(prefix):
        raise DimensionMismatch(f"{len(phi)} assignments for {len(prefix)} prefix entries")
    for m, j in enumerate(phi):
        if not 0 <= j < X.k:
            raise OutOfRange(f"phi({m}) = {j} is not a vertex index below {X.k}")
    exact = True
    vertices = []
    for v in X.vertices:
        coords = []
        for x in v:
            value, ok = _rationalize(x)
            coords.append(value)
            exact &= ok
        vertices.append(tuple(coords))
    s = [Fraction(0)] * X.n
    for j, d in zip(phi, prefix):
        if len(d) != X.n:
            raise DimensionMismatch(f"prefix entry {tuple(d)} is not in R^{X.n}")
        for r, x in enumerate(d):
            value, ok = _rationalize(x)
            exact &= ok
            s[r] += vertices[j][r] - value
    rows = [[v[r] for v in vertices] for r in range(X.n)] + [[Fraction(1)] * X.k]
    nu = _lattice_solve(rows, s + [Fraction(0)])
    if nu is not None:
        residual = max(abs(sum(c * v[r] for c, v in zip(nu, vertices)) - s[r]) for r in range(X.n))
        if sum(nu) != 0 or residual != 0:
            raise InternalInconsistency("lattice solution does not reproduce the deviation sum")
    deviation = tuple(s) if exact else tuple(float(x) for x in s)
    logger.debug("index check: s = %s, nu = %s, exact = %s", deviation, nu, exact)
    return IndexVerdict(deviation, None if nu is None else tuple(nu), exact)
