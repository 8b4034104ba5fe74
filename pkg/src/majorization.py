"""
Joint Majorization

Decide A ≺ S for finite-spectrum tuples through the transport LP
D 1 = 1, q^T D = p^T, D alpha = beta, and build the canonical majorants
(carpenter projections, circle unitaries, orthogonal projections).

Target atoms beta_i carry masses q_i (rows of D); source atoms alpha_j
carry masses p_j (columns of D).
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.rationals import Point, Scalar, is_exact, parse_scalar
from .errors import (
    DimensionMismatch,
    InternalInconsistency,
    InvalidPartition,
    InvalidWitness,
    NotAContraction,
    NotASimplex,
    OutOfRange,
)
from .lp import solve_feasibility
from .spectra import (
    AtomicJointMeasure,
    HullCertificate,
    barycenter,
    choose_backend,
    hull_membership,
    simplex_test,
)

logger = logging.getLogger(__name__)

FLOAT_TOL = 1e-9


@dataclass(frozen=True)
class TransportMatrix:
    """m x k doubly stochastic transport from source masses p to target masses q."""
    entries: Tuple[Tuple[Scalar, ...], ...]
    source_weights: Tuple[Fraction, ...]
    target_weights: Tuple[Fraction, ...]

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0]) if self.entries else 0

    @property
    def exact(self) -> bool:
        return all(is_exact(row) for row in self.entries)

    def defects(self, target: Optional[AtomicJointMeasure] = None,
                source: Optional[AtomicJointMeasure] = None) -> List[str]:
        """Every violated witness condition, described; empty when valid."""
        exact = self.exact and all(m is None or m.exact for m in (target, source))
        tol = 0 if exact else FLOAT_TOL
        problems = []
        for i, row in enumerate(self.entries):
            if any(d < -tol for d in row):
                problems.append(f"row {i} has a negative entry")
            if abs(sum(row) - 1) > tol:
                problems.append(f"row {i} sums to {sum(row)}")
        for j in range(self.cols):
            col = sum(q * self.entries[i][j] for i, q in enumerate(self.target_weights))
            if abs(col - self.source_weights[j]) > tol:
                problems.append(f"column {j} carries {col}, not {self.source_weights[j]}")
        if target is not None and source is not None:
            if (target.k, source.k) != (self.rows, self.cols):
                problems.append(f"shape {self.rows}x{self.cols} does not fit {target.k}x{source.k}")
                return problems
            for i, beta in enumerate(target.atoms):
                for r in range(target.n):
                    moment = sum(d * source.atoms[j][r] for j, d in enumerate(self.entries[i]))
                    if abs(moment - beta[r]) > tol:
                        problems.append(f"row {i} moves mass to {moment} instead of {beta[r]}")
        return problems

    def require_valid(self, target=None, source=None) -> None:
        problems = self.defects(target, source)
        if problems:
            raise InvalidWitness("; ".join(problems))


@dataclass(frozen=True)
class MajorizationVerdict:
    feasible: bool
    witness: Optional[TransportMatrix] = None
    infeasibility_certificate: Optional[Tuple[Scalar, ...]] = None
    backend: str = "exact"


def _check_dims(target: AtomicJointMeasure, source: AtomicJointMeasure) -> None:
    if target.n != source.n:
        raise DimensionMismatch(f"target lives in R^{target.n}, source in R^{source.n}")


def _identity_witness(target: AtomicJointMeasure, source: AtomicJointMeasure) -> Optional[TransportMatrix]:
    """Permutation witness when both measures coincide."""
    if not (target.exact and source.exact) or not target.same_as(source):
        return None
    where = {atom: j for j, atom in enumerate(source.atoms)}
    entries = []
    for atom in target.atoms:
        row = [Fraction(0)] * source.k
        row[where[atom]] = Fraction(1)
        entries.append(tuple(row))
    return TransportMatrix(tuple(entries), source.weights, target.weights)


def transport_system(target: AtomicJointMeasure, source: AtomicJointMeasure):
    """Equality system over d_ij (index i*k + j): rows, columns, moments."""
    m, k, n = target.k, source.k, target.n
    A, b = [], []
    for i in range(m):
        row = [0] * (m * k)
        for j in range(k):
            row[i * k + j] = 1
        A.append(row)
        b.append(1)
    for j in range(k):
        row = [0] * (m * k)
        for i in range(m):
            row[i * k + j] = target.weights[i]
        A.append(row)
        b.append(source.weights[j])
    for i in range(m):
        for r in range(n):
            row = [0] * (m * k)
            for j in range(k):
                row[i * k + j] = source.atoms[j][r]
            A.append(row)
            b.append(target.atoms[i][r])
    return A, b


def check_majorization(target: AtomicJointMeasure, source: AtomicJointMeasure,
                       backend: str = "auto", tol: float = FLOAT_TOL,
                       exact_size_limit: int = 1000) -> MajorizationVerdict:
    """Transport witness for target ≺ source, or a Farkas certificate."""
    _check_dims(target, source)
    witness = _identity_witness(target, source)
    if witness is not None:
        return MajorizationVerdict(True, witness=witness)
    backend = choose_backend(backend, target, source, limit=exact_size_limit)
    A, b = transport_system(target, source)
    result = solve_feasibility(A, b, backend=backend, tol=tol)
    logger.debug("majorization LP %dx%d on %s backend: %s",
                 target.k, source.k, backend, result.status)
    if not result.feasible:
        return MajorizationVerdict(False, infeasibility_certificate=result.certificate,
                                   backend=backend)
    k = source.k
    entries = tuple(tuple(result.x[i * k:(i + 1) * k]) for i in range(target.k))
    witness = TransportMatrix(entries, source.weights, target.weights)
    if witness.defects(target, source):
        raise InternalInconsistency("LP witness fails the transport conditions")
    return MajorizationVerdict(True, witness=witness, backend=backend)


def simplex_majorization(target: AtomicJointMeasure, source: AtomicJointMeasure,
                         tol: float = FLOAT_TOL) -> bool:
    """Hull containment plus equal barycenters; decisive when the source is a simplex."""
    _check_dims(target, source)
    if not simplex_test(source):
        raise NotASimplex(f"the {source.k} source atoms are affinely dependent")
    for atom in target.atoms:
        if not isinstance(hull_membership(atom, source), HullCertificate):
            return False
    b_t, b_s = barycenter(target).value, barycenter(source).value
    if target.exact and source.exact:
        return b_t == b_s
    return max(abs(float(x) - float(y)) for x, y in zip(b_t, b_s)) <= tol


def compose_witnesses(first: TransportMatrix, second: TransportMatrix) -> TransportMatrix:
    """Witness of A ≺ C from witnesses of A ≺ B and B ≺ C."""
    if first.cols != second.rows or tuple(first.source_weights) != tuple(second.target_weights):
        raise InvalidWitness("the middle measures of the two witnesses differ")
    entries = tuple(
        tuple(sum(first.entries[i][l] * second.entries[l][j] for l in range(first.cols))
              for j in range(second.cols))
        for i in range(first.rows))
    return TransportMatrix(entries, second.source_weights, first.target_weights)


# ══════════════════════════════════════════════════════════════════════════════
#  CHOQUET AND CONVEX-FUNCTION COROLLARIES
# ══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class SubMeasure:
    """Non-normalized piece of a measure, masses aligned with ``atoms``."""
    atoms: Tuple[Point, ...]
    masses: Tuple[Scalar, ...]

    @property
    def mass(self) -> Scalar:
        return sum(self.masses)

    def moment(self) -> Point:
        n = len(self.atoms[0])
        return tuple(sum(w * a[r] for w, a in zip(self.masses, self.atoms)) for r in range(n))


def choquet_witness(D: TransportMatrix, target_partition: Sequence[Sequence[Scalar]],
                    target: AtomicJointMeasure, source: AtomicJointMeasure) -> List[SubMeasure]:
    """
    Push each piece of the target measure through D.

    ``target_partition`` lists the pieces as mass vectors over the target
    atoms; they must be nonnegative and add up to the target weights.
    """
    D.require_valid(target, source)
    pieces = [tuple(parse_scalar(x) if not isinstance(x, float) else x for x in piece)
              for piece in target_partition]
    if not pieces:
        raise InvalidPartition("the partition is empty")
    for t, piece in enumerate(pieces):
        if len(piece) != target.k:
            raise InvalidPartition(f"piece {t} has {len(piece)} masses for {target.k} atoms")
        if any(x < 0 for x in piece):
            raise InvalidPartition(f"piece {t} has a negative mass")
    for i in range(target.k):
        total = sum(piece[i] for piece in pieces)
        if total != target.weights[i]:
            raise InvalidPartition(f"atom {i} receives {total}, not {target.weights[i]}")
    result = []
    for piece in pieces:
        masses = tuple(sum(D.entries[i][j] * piece[i] for i in range(target.k))
                       for j in range(source.k))
        result.append(SubMeasure(source.atoms, masses))
    return result


@dataclass(frozen=True)
class ProbeReport:
    samples: int
    max_slack: Scalar
    min_slack: Scalar


def convex_slack(target: AtomicJointMeasure, source: AtomicJointMeasure,
                 pieces: Sequence[Tuple[Point, Scalar]]) -> Scalar:
    """sum_j p_j f(alpha_j) - sum_i q_i f(beta_i) for f = max of the affine pieces."""
    def f(x):
        return max(sum(a * c for a, c in zip(normal, x)) + shift for normal, shift in pieces)
    lhs = sum(q * f(beta) for q, beta in zip(target.weights, target.atoms))
    rhs = sum(p * f(alpha) for p, alpha in zip(source.weights, source.atoms))
    return rhs - lhs


def _random_pieces(rng: np.random.Generator, n: int) -> List[Tuple[Point, Fraction]]:
    def coeff():
        return Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 10)))
    count = int(rng.integers(1, 6))
    return [(tuple(coeff() for _ in range(n)), coeff()) for _ in range(count)]


def convex_inequality_probe(target: AtomicJointMeasure, source: AtomicJointMeasure,
                            D: TransportMatrix, samples: int = 100,
                            rng: Optional[np.random.Generator] = None,
                            tol: float = FLOAT_TOL) -> ProbeReport:
    """Sample convex functions and check the Jensen-type inequality D implies."""
    D.require_valid(target, source)
    rng = rng if rng is not None else np.random.default_rng(0)
    exact = target.exact and source.exact
    slacks = []
    for _ in range(samples):
        slack = convex_slack(target, source, _random_pieces(rng, target.n))
        if (slack < 0) if exact else (slack < -tol):
            raise InternalInconsistency(f"convex inequality violated by {slack}")
        slacks.append(slack)
    if not slacks:
        return ProbeReport(0, 0, 0)
    return ProbeReport(samples, max(slacks), min(slacks))


# ══════════════════════════════════════════════════════════════════════════════
#  CANONICAL MAJORANTS
# ══════════════════════════════════════════════════════════════════════════════

def _exactify(m: AtomicJointMeasure) -> AtomicJointMeasure:
    if m.exact:
        return m
    return AtomicJointMeasure.build([[Fraction(x) for x in a] for a in m.atoms], m.weights)


def carpenter_majorant(A: AtomicJointMeasure) -> Tuple[AtomicJointMeasure, TransportMatrix]:
    """
    Commuting projection tuple P with A ≺ P.

    Each atom is cut along its sorted coordinates: the piece below the
    smallest coordinate has every projection on, the piece above the largest
    has every projection off, and the pieces in between switch projections
    off one at a time in coordinate order.
    """
    A = _exactify(A)
    for atom in A.atoms:
        if any(x < 0 or x > 1 for x in atom):
            raise OutOfRange(f"atom {atom} leaves [0,1]^{A.n}")
    rows = []
    for atom in A.atoms:
        order = sorted(range(A.n), key=lambda j: (atom[j], j))
        levels = [Fraction(0)] + [atom[j] for j in order] + [Fraction(1)]
        row = {}
        for t in range(A.n + 1):
            mass = levels[t + 1] - levels[t]
            if mass == 0:
                continue
            vertex = [0] * A.n
            for j in order[t:]:
                vertex[j] = 1
            row[tuple(vertex)] = row.get(tuple(vertex), Fraction(0)) + mass
        rows.append(row)
    vertices = sorted({v for row in rows for v in row})
    weights = [sum(q * row.get(v, 0) for q, row in zip(A.weights, rows)) for v in vertices]
    P = AtomicJointMeasure(tuple(tuple(Fraction(x) for x in v) for v in vertices), tuple(weights))
    entries = tuple(tuple(row.get(v, Fraction(0)) for v in vertices) for row in rows)
    D = TransportMatrix(entries, P.weights, A.weights)
    return P, D


def unitary_split(A: AtomicJointMeasure) -> Tuple[AtomicJointMeasure, TransportMatrix]:
    """
    Circle-supported measure majorizing a disk-supported one, with witness.

    An atom beta of modulus r < 1 becomes the two unit vectors
    beta ± sqrt(1 - r^2)·i·beta/r, each with half its mass; zero becomes ±1.
    """
    if A.n != 2:
        raise DimensionMismatch(f"unitary majorants need atoms in R^2, got R^{A.n}")
    pieces = []
    for atom in A.atoms:
        x, y = atom
        r2 = x * x + y * y
        if r2 > 1 + (0 if A.exact else FLOAT_TOL):
            raise NotAContraction(f"atom {atom} has modulus {math.sqrt(float(r2)):.6g} > 1")
        if (A.exact and r2 == 1) or (not A.exact and abs(r2 - 1) <= FLOAT_TOL):
            pieces.append([(atom, Fraction(1))])
        elif r2 == 0:
            one = Fraction(1) if A.exact else 1.0
            pieces.append([((one, 0 * one), Fraction(1, 2)), ((-one, 0 * one), Fraction(1, 2))])
        else:
            r = math.sqrt(float(r2))
            h = math.sqrt(max(0.0, 1.0 - float(r2)))
            ux, uy = float(x) / r, float(y) / r
            plus = (float(x) - h * uy, float(y) + h * ux)
            minus = (float(x) + h * uy, float(y) - h * ux)
            pieces.append([(plus, Fraction(1, 2)), (minus, Fraction(1, 2))])
    exact = all(is_exact(p) for row in pieces for p, _ in row)
    index, atoms = {}, []
    for row in pieces:
        for p, _ in row:
            point = tuple(p) if exact else tuple(float(v) for v in p)
            key = point if exact else tuple(round(v, 12) + 0.0 for v in point)
            if key not in index:
                index[key] = len(atoms)
                atoms.append(point)
    entries = []
    for row in pieces:
        line = [Fraction(0)] * len(atoms)
        for p, w in row:
            point = tuple(p) if exact else tuple(float(v) for v in p)
            key = point if exact else tuple(round(v, 12) + 0.0 for v in point)
            line[index[key]] += w
        entries.append(tuple(line))
    weights = tuple(sum(q * line[j] for q, line in zip(A.weights, entries)) for j in range(len(atoms)))
    U = AtomicJointMeasure(tuple(atoms), weights)
    return U, TransportMatrix(tuple(entries), weights, A.weights)


def unitary_majorant(A: AtomicJointMeasure) -> AtomicJointMeasure:
    """Unit-circle measure majorizing a normal contraction's spectral measure."""
    return unitary_split(A)[0]


def orthoproj_diagonal_feasible(A: AtomicJointMeasure) -> Tuple[bool, Optional[TransportMatrix]]:
    """
    Whether A is the diagonal of mutually orthogonal projections.

    The witness has one column per coordinate projection and a last column
    for the complement.
    """
    for atom in A.atoms:
        if any(x < 0 for x in atom):
            raise OutOfRange(f"atom {atom} has a negative coordinate")
    tol = 0 if A.exact else FLOAT_TOL
    if any(sum(atom) > 1 + tol for atom in A.atoms):
        return False, None
    one = Fraction(1) if A.exact else 1.0
    entries = tuple(tuple(atom) + (one - sum(atom),) for atom in A.atoms)
    p = tuple(sum(q * row[j] for q, row in zip(A.weights, entries)) for j in range(A.n + 1))
    return True, TransportMatrix(entries, p, A.weights)


def orthoproj_source(A: AtomicJointMeasure) -> Tuple[AtomicJointMeasure, TransportMatrix]:
    """Joint measure of orthogonal projections R_j with tau(R_j) = tau(A_j), plus witness."""
    A = _exactify(A)
    ok, D = orthoproj_diagonal_feasible(A)
    if not ok:
        raise OutOfRange("the coordinates of some atom sum past 1")
    n = A.n
    vertices = [tuple(Fraction(int(r == j)) for r in range(n)) for j in range(n)]
    vertices.append(tuple(Fraction(0) for _ in range(n)))
    keep = [j for j in range(n + 1) if D.source_weights[j] != 0]
    source = AtomicJointMeasure(tuple(vertices[j] for j in keep),
                                tuple(Fraction(D.source_weights[j]) for j in keep))
    entries = tuple(tuple(row[j] for j in keep) for row in D.entries)
    return source, TransportMatrix(entries, source.weights, A.weights)
