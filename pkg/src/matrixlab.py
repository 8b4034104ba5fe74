"""
Matrix Kernel

Dense complex matrices as numpy arrays: conditional expectations, Fourier
flattening, Birkhoff decomposition, the block dilation that turns a
doubly stochastic map into a unitary conjugation, and the certificates
for the matrix-level obstructions.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from core.rationals import Scalar, format_scalar, is_exact, lcm_of_denominators, parse_scalar
from core.schemas import MatrixPayload
from .errors import (
    BadBlockStructure,
    BadWeights,
    InternalInconsistency,
    NoPerfectMatching,
    NormTooLarge,
    NotCommuting,
    NotDoublyStochastic,
    NotRational,
    NotSquare,
    OutOfRange,
)

logger = logging.getLogger(__name__)

ComplexMatrix = np.ndarray
FLOAT_TOL = 1e-9
ZERO_THRESHOLD = 1e-12


def unitarity_defect(U: np.ndarray) -> float:
    """max |U*U - I|."""
    U = np.asarray(U)
    return float(np.abs(U.conj().T @ U - np.eye(U.shape[0])).max(initial=0.0))


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    matrix: np.ndarray
    unitarity_defect: float

    @classmethod
    def of(cls, matrix: np.ndarray) -> "UnitaryMatrix":
        matrix = np.asarray(matrix, dtype=complex)
        return cls(matrix, unitarity_defect(matrix))

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def conjugate(self, S: np.ndarray) -> np.ndarray:
        """U S U*."""
        return self.matrix @ S @ self.matrix.conj().T


# ══════════════════════════════════════════════════════════════════════════════
#  WIRE FORMAT
# ══════════════════════════════════════════════════════════════════════════════

def matrix_from_payload(payload: MatrixPayload) -> np.ndarray:
    re = np.array([[float(parse_scalar(x)) for x in row] for row in payload.re], dtype=float)
    if payload.im is None:
        return re.astype(complex)
    im = np.array([[float(parse_scalar(x)) for x in row] for row in payload.im], dtype=float)
    return re + 1j * im


def rational_matrix_from_payload(payload: MatrixPayload) -> List[List[Fraction]]:
    """Exact real matrix; an imaginary part must be absent or zero."""
    if payload.im is not None and any(parse_scalar(x) != 0 for row in payload.im for x in row):
        raise NotRational("expected a real matrix")
    return [[parse_scalar(x) for x in row] for row in payload.re]


def matrix_to_payload(M) -> MatrixPayload:
    if isinstance(M, np.ndarray):
        M = np.atleast_2d(M)
        rows, cols = M.shape
        re = [[float(v) for v in row] for row in M.real]
        im = [[float(v) for v in row] for row in M.imag] if np.iscomplexobj(M) else None
        return MatrixPayload(rows=rows, cols=cols, re=re, im=im)
    return MatrixPayload(rows=len(M), cols=len(M[0]),
                         re=[[format_scalar(v) for v in row] for row in M])


# ══════════════════════════════════════════════════════════════════════════════
#  CONDITIONAL EXPECTATIONS
# ══════════════════════════════════════════════════════════════════════════════

def expect_diagonal(M: np.ndarray) -> np.ndarray:
    """Compression to the diagonal masa."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSquare(f"shape {M.shape} is not square")
    return np.diag(np.diag(M))


def expect_block(M: np.ndarray, m: int, d: int) -> np.ndarray:
    """Keep the m diagonal d x d blocks of M in M_m ⊗ M_d."""
    M = np.asarray(M)
    if M.shape != (m * d, m * d):
        raise BadBlockStructure(f"shape {M.shape} is not ({m}*{d}, {m}*{d})")
    out = np.zeros_like(M)
    for j in range(m):
        s = slice(j * d, (j + 1) * d)
        out[s, s] = M[s, s]
    return out


# ══════════════════════════════════════════════════════════════════════════════
#  FOURIER FLATTENING
# ══════════════════════════════════════════════════════════════════════════════

def root_of_unity(r: int, n: int) -> complex:
    """exp(2 pi i r / n), exact on quarter turns."""
    r %= n
    if (4 * r) % n == 0:
        return (1, 1j, -1, -1j)[(4 * r) // n]
    angle = 2 * math.pi * r / n
    return complex(math.cos(angle), math.sin(angle))


@lru_cache(maxsize=64)
def fourier_unitary(n: int) -> UnitaryMatrix:
    if n < 1:
        raise OutOfRange(f"Fourier size {n} < 1")
    roots = np.array([root_of_unity(r, n) for r in range(n)], dtype=complex)
    idx = np.arange(n)
    V = roots[np.outer(idx, idx) % n] / math.sqrt(n)
    return UnitaryMatrix.of(V)


def commutation_defect(S: Sequence[np.ndarray]) -> float:
    worst = 0.0
    for i in range(len(S)):
        for j in range(i + 1, len(S)):
            worst = max(worst, float(np.abs(S[i] @ S[j] - S[j] @ S[i]).max(initial=0.0)))
    return worst


def constant_diagonal_unitary(S: Sequence[np.ndarray], diagonalizer: Optional[np.ndarray] = None,
                              rng: Optional[np.random.Generator] = None,
                              tol: float = FLOAT_TOL) -> UnitaryMatrix:
    """W with E(W S_i W*) = tr(S_i)/n for every coordinate."""
    S = [np.asarray(s, dtype=complex) for s in S]
    n = S[0].shape[0]
    if commutation_defect(S) > tol:
        raise NotCommuting(f"commutator norm {commutation_defect(S):.3g} exceeds {tol}")
    if all(np.abs(s - np.trace(s) / n * np.eye(n)).max(initial=0.0) <= tol for s in S):
        return UnitaryMatrix.of(np.eye(n))
    if diagonalizer is not None:
        W0 = np.asarray(diagonalizer, dtype=complex)
    elif all(np.abs(s - np.diag(np.diag(s))).max(initial=0.0) <= tol for s in S):
        W0 = np.eye(n, dtype=complex)
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        H = sum(c * s for c, s in zip(rng.standard_normal(len(S)), S))
        _, W0 = np.linalg.eigh((H + H.conj().T) / 2)
    W = fourier_unitary(n).matrix @ W0.conj().T
    for i, s in enumerate(S):
        diag = np.diag(W @ s @ W.conj().T)
        if np.abs(diag - np.trace(s) / n).max() > tol:
            raise InternalInconsistency(f"coordinate {i} did not flatten")
    return UnitaryMatrix.of(W)


# ══════════════════════════════════════════════════════════════════════════════
#  BIRKHOFF
# ══════════════════════════════════════════════════════════════════════════════

def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """P[i, perm[i]] = 1."""
    d = len(perm)
    P = np.zeros((d, d))
    P[np.arange(d), list(perm)] = 1.0
    return P


@dataclass(frozen=True)
class BirkhoffDecomposition:
    terms: Tuple[Tuple[Scalar, Tuple[int, ...]], ...]

    @property
    def exact(self) -> bool:
        return is_exact(w for w, _ in self.terms)

    def reconstruct(self):
        d = len(self.terms[0][1])
        zero = Fraction(0) if self.exact else 0.0
        D = [[zero] * d for _ in range(d)]
        for w, perm in self.terms:
            for i, j in enumerate(perm):
                D[i][j] += w
        return D


def check_doubly_stochastic(D, tol: float = FLOAT_TOL) -> List[List[Scalar]]:
    rows = [list(row) for row in (D.tolist() if isinstance(D, np.ndarray) else D)]
    d = len(rows)
    if any(len(r) != d for r in rows):
        raise NotSquare(f"a {d}-row matrix with rows of length {[len(r) for r in rows]}")
    exact = all(is_exact(r) for r in rows)
    eps = 0 if exact else tol
    for i, r in enumerate(rows):
        if any(x < -eps for x in r):
            raise NotDoublyStochastic(f"row {i} has a negative entry")
        if abs(sum(r) - 1) > eps:
            raise NotDoublyStochastic(f"row {i} sums to {sum(r)}")
    for j in range(d):
        col = sum(rows[i][j] for i in range(d))
        if abs(col - 1) > eps:
            raise NotDoublyStochastic(f"column {j} sums to {col}")
    if exact:
        return [[Fraction(x) for x in r] for r in rows]
    return [[float(x) for x in r] for r in rows]


def birkhoff_decompose(D, zero_threshold: float = ZERO_THRESHOLD) -> BirkhoffDecomposition:
    """Greedy extraction of permutations supported on the positive entries."""
    R = check_doubly_stochastic(D)
    d = len(R)
    exact = all(is_exact(r) for r in R)
    cutoff = 0 if exact else zero_threshold
    terms = []
    # each extraction lowers the dimension of the face containing R
    max_terms = (d - 1) ** 2 + 1
    while any(x > cutoff for r in R for x in r):
        if len(terms) == max_terms:
            if exact:
                raise InternalInconsistency("Birkhoff extraction exceeded its term bound")
            break
        pattern = csr_matrix(np.array([[1 if x > cutoff else 0 for x in r] for r in R]))
        match = maximum_bipartite_matching(pattern, perm_type="column")
        if np.any(match < 0):
            raise NoPerfectMatching(f"positive pattern of the {d}x{d} residual has no perfect matching")
        perm = tuple(int(j) for j in match)
        w = min(R[i][j] for i, j in enumerate(perm))
        for i, j in enumerate(perm):
            R[i][j] -= w
        terms.append((w, perm))
    logger.debug("Birkhoff: %d terms for d=%d", len(terms), d)
    return BirkhoffDecomposition(tuple(terms))


# ══════════════════════════════════════════════════════════════════════════════
#  DILATIONS AND INFLATION
# ══════════════════════════════════════════════════════════════════════════════

def dilation_unitary(weights: Sequence[Scalar], ops: Sequence[np.ndarray]) -> np.ndarray:
    """
    U = m^{-1/2} sum_{j,k} omega^{jk} E_jk ⊗ U_k in M_m ⊗ M_d.

    Then E_block(U (diag(weights) ⊗ B) U*) = (1/m) I_m ⊗ sum_k w_k U_k B U_k*
    and U*U = blockdiag(U_k* U_k).
    """
    m = len(weights)
    if m != len(ops) or m == 0:
        raise BadWeights(f"{m} weights for {len(ops)} operators")
    if any(w < 0 for w in weights) or abs(sum(weights) - 1) > (0 if is_exact(weights) else FLOAT_TOL):
        raise BadWeights(f"weights {list(weights)} are not convex coefficients")
    ops = [np.asarray(u, dtype=complex) for u in ops]
    d = ops[0].shape[0]
    for k, u in enumerate(ops):
        if np.linalg.norm(u, 2) > 1 + 1e-12:
            raise NormTooLarge(f"operator {k} has norm {np.linalg.norm(u, 2):.6g}")
    U = np.zeros((m * d, m * d), dtype=complex)
    for j in range(m):
        for k in range(m):
            U[j * d:(j + 1) * d, k * d:(k + 1) * d] = root_of_unity(j * k, m) * ops[k]
    return U / math.sqrt(m)


def _inflate_terms(counts: Sequence[int], perms: Sequence[Tuple[int, ...]]) -> UnitaryMatrix:
    ops = [permutation_matrix(p) for c, p in zip(counts, perms) for _ in range(c)]
    m = len(ops)
    return UnitaryMatrix.of(dilation_unitary([Fraction(1, m)] * m, ops))


def inflate_rational_ds(D) -> Tuple[int, UnitaryMatrix]:
    """m and U in M_{m d} with E(U (I_m ⊗ diag beta) U*) = I_m ⊗ diag(D beta)."""
    rows = D.tolist() if isinstance(D, np.ndarray) else D
    if not all(is_exact(r) for r in rows):
        raise NotRational("inflation needs rational entries")
    bd = birkhoff_decompose(rows)
    m = lcm_of_denominators(w for w, _ in bd.terms)
    counts = [int(w * m) for w, _ in bd.terms]
    logger.debug("rational inflation with m=%d", m)
    return m, _inflate_terms(counts, [p for _, p in bd.terms])


def inflation_residual(U: np.ndarray, m: int, D, beta: Sequence[complex]) -> float:
    """max |E(U (I_m ⊗ diag beta) U*) - I_m ⊗ diag(D beta)|."""
    beta = np.asarray(beta, dtype=complex)
    Dm = np.array([[float(x) for x in row] for row in D])
    lhs = np.diag(U @ np.kron(np.eye(m), np.diag(beta)) @ U.conj().T)
    rhs = np.tile(Dm @ beta, m)
    return float(np.abs(lhs - rhs).max())


@dataclass(frozen=True, eq=False)
class ApproxInflation:
    m: int
    unitary: UnitaryMatrix
    bound: float
    counts: Tuple[int, ...]


def largest_remainder(weights: Sequence[float], m: int) -> List[int]:
    raw = [float(w) * m for w in weights]
    counts = [int(math.floor(x)) for x in raw]
    short = m - sum(counts)
    order = sorted(range(len(raw)), key=lambda t: (-(raw[t] - counts[t]), t))
    for t in order[:short]:
        counts[t] += 1
    return counts


def inflate_approx_ds(D, eps: float, rng: Optional[np.random.Generator] = None,
                      max_m: int = 100_000, samples: int = 5) -> ApproxInflation:
    """Smallest inflation whose rounded Birkhoff weights move D by at most eps (row-sum norm)."""
    rows = D.tolist() if isinstance(D, np.ndarray) else D
    if all(is_exact(r) for r in rows):
        m, U = inflate_rational_ds(rows)
        return ApproxInflation(m, U, 0.0, ())
    bd = birkhoff_decompose(rows)
    weights = [float(w) for w, _ in bd.terms]
    perms = [p for _, p in bd.terms]
    Dm = np.array([[float(x) for x in r] for r in rows])
    for m in range(1, max_m + 1):
        counts = largest_remainder(weights, m)
        Dhat = sum(c / m * permutation_matrix(p) for c, p in zip(counts, perms))
        bound = float(np.abs(Dhat - Dm).sum(axis=1).max())
        if bound <= eps:
            break
    else:
        raise InternalInconsistency(f"no inflation within {max_m} copies reaches {eps}")
    keep = [(c, p) for c, p in zip(counts, perms) if c > 0]
    U = _inflate_terms([c for c, _ in keep], [p for _, p in keep])
    rng = rng if rng is not None else np.random.default_rng(0)
    for _ in range(samples):
        beta = rng.standard_normal(len(rows)) + 1j * rng.standard_normal(len(rows))
        if inflation_residual(U.matrix, m, rows, beta) > bound * np.abs(beta).max() + FLOAT_TOL:
            raise InternalInconsistency("sampled inflation deviation exceeds its bound")
    logger.debug("approximate inflation: m=%d bound=%.3g", m, bound)
    return ApproxInflation(m, U, bound, tuple(counts))


# ══════════════════════════════════════════════════════════════════════════════
#  OBSTRUCTIONS
# ══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class OverlapCertificate:
    """Two lines of D whose supports meet in exactly one position."""
    axis: str           # "rows" | "columns"
    pair: Tuple[int, int]
    index: int
    product: Scalar


@dataclass(frozen=True)
class Unknown:
    reason: str = "no single-overlap pair"


def unistochastic_obstruction(D, zero_threshold: float = ZERO_THRESHOLD) -> Union[OverlapCertificate, Unknown]:
    """
    Certificate that no unitary U has |U_ij|^2 = D_ij.

    Orthogonality of two rows of U would need a one-term inner product to
    vanish while both entries are nonzero.
    """
    rows = [list(r) for r in (D.tolist() if isinstance(D, np.ndarray) else D)]
    cutoff = 0 if all(is_exact(r) for r in rows) else zero_threshold
    d = len(rows)
    cols = [[rows[i][j] for i in range(d)] for j in range(len(rows[0]))]
    for axis, lines in (("rows", rows), ("columns", cols)):
        supports = [{j for j, x in enumerate(line) if x > cutoff} for line in lines]
        for a in range(len(lines)):
            for b in range(a + 1, len(lines)):
                common = supports[a] & supports[b]
                if len(common) == 1:
                    c = common.pop()
                    return OverlapCertificate(axis, (a, b), c, lines[a][c] * lines[b][c])
    return Unknown()


def is_unistochastic_image(D, V: np.ndarray, tol: float = FLOAT_TOL) -> bool:
    """Whether |V_ij|^2 reproduces D."""
    Dm = np.array([[float(x) for x in r] for r in (D.tolist() if isinstance(D, np.ndarray) else D)])
    return bool(np.abs(np.abs(np.asarray(V)) ** 2 - Dm).max() <= tol)


def partial_isometry_check(A: np.ndarray, B: np.ndarray, tol: float = FLOAT_TOL) -> bool:
    """
    If A*A + B*B = I and AB* = 0, both A and B are partial isometries.

    Returns whether the hypotheses held.
    """
    A, B = np.asarray(A, dtype=complex), np.asarray(B, dtype=complex)
    n = A.shape[0]
    lhs = A.conj().T @ A + B.conj().T @ B - np.eye(n)
    if np.linalg.norm(lhs, 2) > tol or np.linalg.norm(A @ B.conj().T, 2) > tol:
        return False
    for name, X in (("A", A), ("B", B)):
        if np.linalg.norm(X @ X.conj().T @ X - X, 2) > 1e-7:
            raise InternalInconsistency(f"{name} is not a partial isometry")
    return True


@dataclass(frozen=True)
class ObstructionReport:
    a: Scalar
    m: int
    distance: Scalar
    obstructed: bool


def irrational_inflation_obstruction(a, m: int) -> ObstructionReport:
    """
    dist(m a, Z) for the cyclic pattern [[a,b,0],[0,a,b],[b,0,a]].

    A positive distance rules out an exact m-fold inflation, since the
    trace of the (1,1) corner would have to equal m a.
    """
    if isinstance(a, str):
        a = parse_scalar(a)
    if not 0 < a < 1:
        raise OutOfRange(f"a = {a} is not in (0, 1)")
    if m < 1:
        raise OutOfRange(f"m = {m} < 1")
    x = a * m
    distance = abs(x - round(x))
    obstructed = distance > 0 if isinstance(distance, Fraction) else distance > ZERO_THRESHOLD
    return ObstructionReport(a, m, distance, obstructed)


# ══════════════════════════════════════════════════════════════════════════════
#  CONJUGATION PLANS
# ══════════════════════════════════════════════════════════════════════════════

@dataclass
class ConjugationPlan:
    """
    Ordered unitary moves on N diagonal cells.

    ``rotate`` mixes cells a_t, b_t with [[c, s], [-s, c]]; ``fourier``
    flattens a cell set; ``permute`` reorders cells (new cell t is old
    cell order[t]). Later moves act after earlier ones.
    """
    size: int
    ops: List[tuple] = field(default_factory=list)

    def rotate(self, a_cells: Sequence[int], b_cells: Sequence[int], c: float, s: float) -> None:
        if len(a_cells) != len(b_cells):
            raise InternalInconsistency("rotation pairs cell lists of different lengths")
        if a_cells:
            self.ops.append(("rotate", list(a_cells), list(b_cells), float(c), float(s)))

    def fourier(self, cells: Sequence[int]) -> None:
        if len(cells) > 1:
            self.ops.append(("fourier", list(cells)))

    def permute(self, order: Sequence[int]) -> None:
        self.ops.append(("permute", list(order)))

    def extend(self, other: "ConjugationPlan") -> None:
        self.ops.extend(other.ops)

    def materialize(self) -> UnitaryMatrix:
        U = np.eye(self.size, dtype=complex)
        for op in self.ops:
            kind = op[0]
            if kind == "rotate":
                _, a, b, c, s = op
                ra, rb = U[a].copy(), U[b].copy()
                U[a] = c * ra + s * rb
                U[b] = -s * ra + c * rb
            elif kind == "fourier":
                cells = op[1]
                U[cells] = fourier_unitary(len(cells)).matrix @ U[cells]
            else:
                U = U[op[1]]
        return UnitaryMatrix.of(U)
