"""
Finite II1 Models

M_N with normalized trace and the diagonal masa, standing in for a type
II1 factor. Operators live on N diagonal cells of trace 1/N each. The
engines here record a ConjugationPlan and predict the resulting diagonal
exactly; the dense unitary is only built when it is asked for.

Engines:
    scalar_diagonal_engine   E(U S U*) = tau(S) on Q_K (everywhere when finalized)
    schur_horn_engine        E(U S U*) = A for A ≺ S with rational transport
    approx_schur_horn        ||E(U S U*) - A|| <= 3 eps after discretizing
    carpenter_exact          commuting projections with prescribed diagonal
    unitary_diagonal         a unitary with prescribed normal contraction diagonal
    orthoproj_diagonal       mutually orthogonal projections with prescribed diagonal
    approx_carpenter         commuting projections within eps of a float diagonal
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from core.rationals import Point, is_exact, lcm_of_denominators, parse_scalar, snap, sup_distance
from .errors import (
    DimensionMismatch,
    InternalInconsistency,
    NotApproxMajorized,
    NotMajorized,
    NotRational,
    OutOfRange,
    PairingInvalid,
    ResolutionInsufficient,
)
from .majorization import (
    TransportMatrix,
    carpenter_majorant,
    check_majorization,
    orthoproj_source,
    unitary_split,
)
from .matrixlab import ConjugationPlan, UnitaryMatrix, commutation_defect
from .spectra import AtomicJointMeasure, cell_measure

logger = logging.getLogger(__name__)

FLOAT_TOL = 1e-9
# largest transport LP the exact path of approx_schur_horn attempts
EXACT_PATH_LIMIT = 400


def _key(value: Point) -> tuple:
    if is_exact(value):
        return tuple(value)
    return tuple(round(float(x), 12) + 0.0 for x in value)


def _mix(x: Point, y: Point, w) -> Point:
    """w x + (1 - w) y."""
    return tuple(w * a + (1 - w) * b for a, b in zip(x, y))


def _mean(points: Sequence[Point]) -> Point:
    n = len(points[0])
    if all(is_exact(p) for p in points):
        return tuple(sum(p[r] for p in points) / len(points) for r in range(n))
    return tuple(float(sum(float(p[r]) for p in points)) / len(points) for r in range(n))


# ══════════════════════════════════════════════════════════════════════════════
#  MODEL TYPES
# ══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class FiniteModel:
    resolution: int

    def __post_init__(self):
        if self.resolution < 1:
            raise OutOfRange(f"resolution {self.resolution} < 1")

    def trace(self, cells: Sequence[int]) -> Fraction:
        return Fraction(len(cells), self.resolution)


@dataclass(frozen=True)
class ModelTuple:
    """Commuting hermitian tuple, diagonal in the masa: one point per cell."""
    cells: Tuple[Point, ...]

    @classmethod
    def from_measure(cls, measure: AtomicJointMeasure, model: FiniteModel) -> "ModelTuple":
        counts = [w * model.resolution for w in measure.weights]
        bad = [c for c in counts if c.denominator != 1]
        if bad:
            needed = lcm_of_denominators(bad)
            raise ResolutionInsufficient(
                f"atom masses {list(map(str, measure.weights))} are not multiples of 1/{model.resolution}",
                needed=needed)
        cells = []
        for atom, c in zip(measure.atoms, counts):
            cells.extend([atom] * int(c))
        return cls(tuple(cells))

    @property
    def size(self) -> int:
        return len(self.cells)

    @property
    def n(self) -> int:
        return len(self.cells[0])

    @property
    def exact(self) -> bool:
        return all(is_exact(c) for c in self.cells)

    def measure(self) -> AtomicJointMeasure:
        return cell_measure(self.cells)

    def coordinates(self) -> List[np.ndarray]:
        return [np.diag([float(c[r]) for c in self.cells]).astype(complex) for r in range(self.n)]

    def conjugated(self, U: np.ndarray) -> List[np.ndarray]:
        """Dense coordinates of U S U*."""
        return [U @ S @ U.conj().T for S in self.coordinates()]

    def expanded(self, factor: int) -> "ModelTuple":
        """Same operator at resolution N * factor (each cell split evenly)."""
        return ModelTuple(tuple(c for c in self.cells for _ in range(factor)))


@dataclass(frozen=True)
class ResemblancePairing:
    """Groups of S cells matched to groups of T cells with equal relative traces."""
    k: int
    s_groups: Tuple[Tuple[int, ...], ...]
    t_groups: Tuple[Tuple[int, ...], ...]
    traces: Tuple[Fraction, ...]


@dataclass(frozen=True)
class ResemblanceFailure:
    reason: str


class EngineResult:
    """A plan plus its exactly predicted diagonal."""

    def __init__(self, plan: ConjugationPlan, source: Sequence[Point], achieved: Sequence[Point],
                 flattened: Sequence[int] = (), residual: Sequence[int] = (),
                 levels: Sequence[Fraction] = (), refinement: int = 1,
                 block_traces: Sequence[Fraction] = ()):
        self.plan = plan
        self.source = ModelTuple(tuple(source))
        self.achieved = tuple(achieved)
        self.flattened = tuple(flattened)
        self.residual = tuple(residual)
        self.levels = tuple(levels)
        self.refinement = refinement
        # tau(Q) inside each Schur-Horn block, before the residual is flattened
        self.block_traces = tuple(block_traces)

    @property
    def resolution(self) -> int:
        return self.plan.size

    @cached_property
    def unitary(self) -> UnitaryMatrix:
        return self.plan.materialize()

    def achieved_measure(self) -> AtomicJointMeasure:
        return cell_measure(self.achieved)

    def dense_diagonal(self) -> np.ndarray:
        """diag(U S U*) per cell and coordinate, read from the dense unitary."""
        weights = np.abs(self.unitary.matrix) ** 2
        values = np.array([[float(x) for x in c] for c in self.source.cells])
        return weights @ values


# ══════════════════════════════════════════════════════════════════════════════
#  PLAN BUILDER
# ══════════════════════════════════════════════════════════════════════════════

Corner = Dict[int, List[int]]


class _Builder:
    """Records moves on a plan and keeps the predicted diagonal in step."""

    def __init__(self, values: Sequence[Point]):
        self.values: List[Point] = list(values)
        self.plan = ConjugationPlan(len(self.values))

    def rotate(self, a_cells: List[int], b_cells: List[int], c2: Fraction) -> None:
        s2 = 1 - c2
        self.plan.rotate(a_cells, b_cells, math.sqrt(c2), math.sqrt(s2))
        for u, v in zip(a_cells, b_cells):
            xu, xv = self.values[u], self.values[v]
            self.values[u] = _mix(xu, xv, c2)
            self.values[v] = _mix(xu, xv, s2)

    def flatten(self, cells: List[int], inner_depth: int = 0) -> None:
        if len(cells) < 2:
            return
        if inner_depth > 0 and len({_key(self.values[c]) for c in cells}) > 1:
            try:
                self.scalar(cells, inner_depth, True, inner_depth - 1)
                return
            except ResolutionInsufficient:
                logger.debug("inner engine cannot split %d cells, using Fourier", len(cells))
        mean = _mean([self.values[c] for c in cells])
        self.plan.fourier(cells)
        for c in cells:
            self.values[c] = mean

    # ──────────────────────────────────────────────────────────────────────────
    #  One induction level
    # ──────────────────────────────────────────────────────────────────────────

    def spread(self, corner_a: Corner, corner_b: Corner, inner_depth: int = 0
              ) -> Tuple[List[int], Corner, Corner, int]:
        """
        Spread two resembling corners over each other.

        Returns the flattened cells Q, the carried corner R, the untouched
        remainder and the number of rotation steps.
        """
        n1 = sum(len(v) for v in corner_a.values())
        n2 = sum(len(v) for v in corner_b.values())
        if n1 == 0 or n2 == 0:
            cells = sorted(c for corner in (corner_a, corner_b) for v in corner.values() for c in v)
            self.flatten(cells, inner_depth)
            return cells, {}, {}, 0
        if n1 > n2:
            corner_a, corner_b, n1, n2 = corner_b, corner_a, n2, n1
        n = n1 + n2
        m = n // n1 - 1
        chains: Dict[int, List[List[int]]] = {}
        remainder: Corner = {}
        for i, cells_a in corner_a.items():
            cells_b = corner_b.get(i, [])
            size = len(cells_a)
            if m * size > len(cells_b):
                raise PairingInvalid(f"group {i}: {len(cells_b)} cells cannot host {m} copies of {size}")
            chains[i] = [list(cells_a)] + [cells_b[(j - 1) * size:j * size] for j in range(1, m + 1)]
            remainder[i] = cells_b[m * size:]
        for j in range(1, m + 1):
            c2 = Fraction(n1, n - (j - 1) * n1)
            a_cells = [c for i in chains for c in chains[i][j - 1]]
            b_cells = [c for i in chains for c in chains[i][j]]
            self.rotate(a_cells, b_cells, c2)
        flattened = []
        for j in range(m):
            layer = [c for i in chains for c in chains[i][j]]
            self.flatten(layer, inner_depth)
            flattened.extend(layer)
        carried = {i: chains[i][m] for i in chains}
        if not any(remainder.values()):
            layer = [c for v in carried.values() for c in v]
            self.flatten(layer, inner_depth)
            return flattened + layer, {}, {}, m
        return flattened, carried, remainder, m

    # ──────────────────────────────────────────────────────────────────────────
    #  Scalar engine
    # ──────────────────────────────────────────────────────────────────────────

    def initial_split(self, cells: List[int]) -> Tuple[Corner, Corner]:
        groups: Dict[tuple, List[int]] = {}
        for c in cells:
            groups.setdefault(_key(self.values[c]), []).append(c)
        keys = sorted(groups)
        best_needed = None
        for last in reversed(keys):
            host = groups[last]
            rest = len(cells) - len(host)
            shares = [Fraction(len(groups[key]) * len(host), rest) for key in keys if key != last]
            needed = lcm_of_denominators(shares)
            if needed == 1:
                corner_a: Corner = {}
                corner_b: Corner = {}
                start = 0
                for i, key in enumerate(k for k in keys if k != last):
                    corner_a[i] = groups[key]
                    corner_b[i] = host[start:start + int(shares[i])]
                    start += int(shares[i])
                return corner_a, corner_b
            if best_needed is None or needed < best_needed:
                best_needed = needed
        raise ResolutionInsufficient(
            f"cannot split {len(cells)} cells into resembling corners; "
            f"resolution must grow by a factor of {best_needed}", needed=best_needed)

    def scalar(self, cells: List[int], depth: int, finalize: bool, inner_depth: int = 0
               ) -> Tuple[List[int], List[int], List[Fraction]]:
        distinct = {_key(self.values[c]) for c in cells}
        if len(distinct) <= 1:
            return list(cells), [], []
        if depth == 0:
            if finalize:
                self.flatten(list(cells))
                return [], list(cells), []
            return [], list(cells), []
        a, b = self.initial_split(list(cells))
        flattened: List[int] = []
        levels: List[Fraction] = []
        for level in range(depth):
            q, a, b, m = self.spread(a, b, inner_depth)
            flattened.extend(q)
            levels.append(Fraction(len(flattened), len(cells)))
            logger.debug("level %d: %d rotation steps, tau(Q) = %s", level + 1, m, levels[-1])
            if not a and not b:
                break
        residual = sorted(c for corner in (a, b) for v in corner.values() for c in v)
        if finalize and residual:
            self.flatten(residual)
        return flattened, residual, levels


# ══════════════════════════════════════════════════════════════════════════════
#  RESEMBLANCE AND THE INDUCTION STEP
# ══════════════════════════════════════════════════════════════════════════════

def _groups(cells: Sequence[Point], offset: int = 0) -> Dict[tuple, List[int]]:
    out: Dict[tuple, List[int]] = {}
    for c, value in enumerate(cells):
        out.setdefault(_key(value), []).append(c + offset)
    return out


def resemblance_check(S: ModelTuple, T: ModelTuple, k: int
                      ) -> Union[ResemblancePairing, ResemblanceFailure]:
    """Match joint atoms of S (on P) and T (on I-P) with equal relative traces."""
    gs, gt = _groups(S.cells), _groups(T.cells, offset=S.size)
    if len(gs) > k or len(gt) > k:
        return ResemblanceFailure(f"{len(gs)} and {len(gt)} atoms exceed k = {k}")
    s_sorted = sorted(gs.items(), key=lambda kv: (Fraction(len(kv[1]), S.size), kv[0]))
    t_sorted = sorted(gt.items(), key=lambda kv: (Fraction(len(kv[1]), T.size), kv[0]))
    s_traces = [Fraction(len(v), S.size) for _, v in s_sorted]
    t_traces = [Fraction(len(v), T.size) for _, v in t_sorted]
    if s_traces != t_traces:
        return ResemblanceFailure(f"relative traces {s_traces} and {t_traces} differ")
    return ResemblancePairing(
        k,
        tuple(tuple(v) for _, v in s_sorted),
        tuple(tuple(v) for _, v in t_sorted),
        tuple(s_traces),
    )


@dataclass
class LemmaResult:
    plan: ConjugationPlan
    achieved: Tuple[Point, ...]
    flattened: Tuple[int, ...]
    carried: Tuple[int, ...]
    remainder: Tuple[int, ...]
    steps: int
    carried_corner: Dict[int, List[int]] = field(default_factory=dict)
    remainder_corner: Dict[int, List[int]] = field(default_factory=dict)

    @cached_property
    def unitary(self) -> UnitaryMatrix:
        return self.plan.materialize()


def lemma_ind_step(S: ModelTuple, T: ModelTuple, pairing: ResemblancePairing,
                   model: FiniteModel, inner_depth: int = 0) -> LemmaResult:
    """One induction level on S ⊕ T; S occupies the first cells."""
    n1, n2 = S.size, T.size
    if n1 + n2 != model.resolution:
        raise DimensionMismatch(f"{n1} + {n2} cells in a model of resolution {model.resolution}")
    covered_s = sorted(c for g in pairing.s_groups for c in g)
    covered_t = sorted(c for g in pairing.t_groups for c in g)
    if covered_s != list(range(n1)) or covered_t != list(range(n1, n1 + n2)):
        raise PairingInvalid("pairing groups do not partition the two corners")
    for i, (gs, gt) in enumerate(zip(pairing.s_groups, pairing.t_groups)):
        if len(gs) * n2 != len(gt) * n1:
            raise PairingInvalid(f"group {i} has relative traces {len(gs)}/{n1} and {len(gt)}/{n2}")
        if len({_key(S.cells[c]) for c in gs}) > 1 or len({_key(T.cells[c - n1]) for c in gt}) > 1:
            raise PairingInvalid(f"group {i} is not a single joint atom")
    builder = _Builder(S.cells + T.cells)
    corner_a = {i: list(g) for i, g in enumerate(pairing.s_groups)}
    corner_b = {i: list(g) for i, g in enumerate(pairing.t_groups)}
    q, carried, remainder, m = builder.spread(corner_a, corner_b, inner_depth)
    return LemmaResult(
        builder.plan,
        tuple(builder.values),
        tuple(q),
        tuple(c for v in carried.values() for c in v),
        tuple(c for v in remainder.values() for c in v),
        m,
        carried,
        remainder,
    )


# ══════════════════════════════════════════════════════════════════════════════
#  EXACT ENGINES
# ══════════════════════════════════════════════════════════════════════════════

def _require_size(S: ModelTuple, model: FiniteModel) -> None:
    if S.size != model.resolution:
        raise DimensionMismatch(f"tuple has {S.size} cells, model has {model.resolution}")


def scalar_diagonal_engine(S: ModelTuple, depth: int, model: FiniteModel,
                           finalize: bool = True, inner_depth: int = 0) -> EngineResult:
    """Conjugate S towards the scalar tau(S); exact on Q_K, everywhere when finalized."""
    _require_size(S, model)
    builder = _Builder(S.cells)
    flattened, residual, levels = builder.scalar(list(range(S.size)), depth, finalize, inner_depth)
    return EngineResult(builder.plan, S.cells, builder.values, flattened, residual, levels)


def _witness_counts(D: TransportMatrix, N: int) -> List[List[int]]:
    if not D.exact:
        raise NotRational("the exact engine needs a rational transport witness")
    raw = [[Fraction(d) * q * N for d in row] for row, q in zip(D.entries, D.target_weights)]
    bad = [x for row in raw for x in row if x.denominator != 1]
    if bad:
        needed = lcm_of_denominators(bad)
        raise ResolutionInsufficient(
            f"transport masses need resolution {N * needed}, model has {N}", needed=needed)
    return [[int(x) for x in row] for row in raw]


def _realize_blocks(builder: _Builder, pools: List[List[int]], counts: List[List[int]],
                    depth: int, inner_depth: int) -> Tuple[List[List[int]], List[Fraction]]:
    """
    Cut one block per target atom out of the atom pools and run the scalar
    engine on each. Returns the blocks and the share of each block that the
    engine made scalar before finalizing.
    """
    taken = [0] * len(pools)
    blocks = []
    for row in counts:
        block = []
        for j, c in enumerate(row):
            block.extend(pools[j][taken[j]:taken[j] + c])
            taken[j] += c
        blocks.append(sorted(block))
    traces = []
    for block in blocks:
        flattened, _, _ = builder.scalar(block, depth, True, inner_depth)
        traces.append(Fraction(len(flattened), len(block)))
    return blocks, traces


def _apply_layout(builder: _Builder, blocks: List[List[int]], layout: Sequence[int]) -> None:
    """Permute cells so that cell t ends up in the block labelled layout[t]."""
    queues = [list(b) for b in blocks]
    order = []
    for label in layout:
        if not queues[label]:
            raise DimensionMismatch(f"layout asks for more cells of target atom {label} than it has")
        order.append(queues[label].pop(0))
    builder.plan.permute(order)
    builder.values = [builder.values[c] for c in order]


def schur_horn_engine(target: AtomicJointMeasure, S: ModelTuple, model: FiniteModel,
                      witness: Optional[TransportMatrix] = None,
                      layout: Optional[Sequence[int]] = None,
                      depth: int = 0, inner_depth: int = 0) -> EngineResult:
    """
    Unitary U with E(U S U*) = target, exactly.

    Block i collects d_ij q_i N cells of source atom j, so its barycenter is
    the target atom beta_i; each block is then run through ``depth`` levels
    of the scalar engine and finalized. ``layout`` gives the target atom
    index of every output cell.
    """
    _require_size(S, model)
    source = S.measure()
    if witness is None:
        verdict = check_majorization(target, source)
        if not verdict.feasible:
            raise NotMajorized("target is not majorized by the source",
                               certificate=verdict.infeasibility_certificate)
        witness = verdict.witness
    witness.require_valid(target, source)
    counts = _witness_counts(witness, model.resolution)
    builder = _Builder(S.cells)
    by_atom = _groups(S.cells)
    pools = [by_atom[_key(atom)] for atom in source.atoms]
    blocks, traces = _realize_blocks(builder, pools, counts, depth, inner_depth)
    if layout is not None:
        _apply_layout(builder, blocks, layout)
    achieved = cell_measure(builder.values)
    tol = 0.0 if target.exact and source.exact else FLOAT_TOL
    if not achieved.same_as(target, tol=tol):
        raise InternalInconsistency("engine diagonal does not reproduce the target measure")
    logger.debug("schur-horn engine: %d blocks at resolution %d", len(blocks), model.resolution)
    return EngineResult(builder.plan, S.cells, builder.values, range(S.size), block_traces=traces)


def auto_resolution(source: AtomicJointMeasure, depth: int = 0,
                    target: Optional[AtomicJointMeasure] = None,
                    witness: Optional[TransportMatrix] = None,
                    max_resolution: int = 5000, inner_depth: int = 0) -> int:
    """
    Smallest resolution (grown by the factors the engine asks for) at which
    the plan goes through; no dense matrices are built.
    """
    masses = list(source.weights)
    if target is not None:
        masses += list(target.weights)
    if witness is not None and witness.exact:
        masses += [d * q for row, q in zip(witness.entries, witness.target_weights) for d in row]
    N = lcm_of_denominators(masses)
    while N <= max_resolution:
        model = FiniteModel(N)
        try:
            S = ModelTuple.from_measure(source, model)
            if target is None:
                scalar_diagonal_engine(S, depth, model, finalize=False, inner_depth=inner_depth)
            else:
                schur_horn_engine(target, S, model, witness=witness, depth=depth,
                                  inner_depth=inner_depth)
        except ResolutionInsufficient as exc:
            N *= exc.needed
            continue
        logger.debug("auto resolution: N = %d", N)
        return N
    raise ResolutionInsufficient(f"no resolution up to {max_resolution} carries the plan", needed=None)


# ══════════════════════════════════════════════════════════════════════════════
#  APPROXIMATE ENGINE
# ══════════════════════════════════════════════════════════════════════════════

@dataclass
class ApproxResult:
    engine: EngineResult
    path: str                   # "exact" | "identity" | "discretized"
    bound: float
    measured_error: float
    relaxed_delta: float = 0.0
    rounded_delta: float = 0.0

    @property
    def refinement(self) -> int:
        return self.engine.refinement


def _measured_error(result: EngineResult, target_cells: Sequence[Point]) -> float:
    got = result.dense_diagonal()
    want = np.array([[float(x) for x in c] for c in target_cells])
    return float(np.abs(got - want).max(initial=0.0))


def _transport_rows(groups, atoms, weights_g, counts_j, betas):
    G, J, n = len(groups), len(atoms), len(atoms[0])
    nv = G * J + 1
    A_eq, b_eq = [], []
    for g in range(G):
        row = np.zeros(nv)
        row[g * J:(g + 1) * J] = 1
        A_eq.append(row)
        b_eq.append(weights_g[g])
    for j in range(J):
        row = np.zeros(nv)
        row[j:G * J:J] = 1
        A_eq.append(row)
        b_eq.append(counts_j[j])
    A_ub, b_ub = [], []
    for g in range(G):
        for r in range(n):
            row = np.zeros(nv)
            row[g * J:(g + 1) * J] = [float(a[r]) for a in atoms]
            row[-1] = -weights_g[g]
            A_ub.append(row)
            b_ub.append(weights_g[g] * betas[g][r])
            neg = -row
            neg[-1] = -weights_g[g]
            A_ub.append(neg)
            b_ub.append(-weights_g[g] * betas[g][r])
    return np.array(A_eq), np.array(b_eq, dtype=float), np.array(A_ub), np.array(b_ub, dtype=float)


def approx_schur_horn(A: ModelTuple, S: ModelTuple, eps: float, model: FiniteModel,
                      max_resolution: int = 5000, inner_depth: int = 0) -> ApproxResult:
    """
    U with ||E(U S U*) - A|| <= 3 eps per coordinate, for a diagonal A ≺ S.

    S is rounded to an eps-grid T, the target is averaged over its grid
    classes, a transport between the two finite measures is found and
    rounded to whole cells, and the exact engine realizes the rounded plan.
    The realized unitary is applied to S itself.
    """
    _require_size(S, model)
    _require_size(A, model)
    N = model.resolution
    bound = 3 * eps
    if A.exact and S.exact:
        target, source = A.measure(), S.measure()
        if target.k * source.k <= EXACT_PATH_LIMIT:
            verdict = check_majorization(target, source)
            if verdict.feasible:
                labels = {_key(a): i for i, a in enumerate(target.atoms)}
                try:
                    result = schur_horn_engine(target, S, model, witness=verdict.witness,
                                               layout=[labels[_key(c)] for c in A.cells],
                                               inner_depth=inner_depth)
                    return ApproxResult(result, "exact", bound, _measured_error(result, A.cells))
                except ResolutionInsufficient:
                    logger.debug("exact path needs a finer model, discretizing instead")
    if max(float(sup_distance(a, s)) for a, s in zip(A.cells, S.cells)) <= bound:
        result = EngineResult(ConjugationPlan(N), S.cells, S.cells)
        return ApproxResult(result, "identity", bound, _measured_error(result, A.cells))

    step = parse_scalar(eps)
    T = [tuple(snap(x, step) for x in c) for c in S.cells]
    atoms = sorted(set(T))
    atom_index = {a: j for j, a in enumerate(atoms)}
    counts_j = [0] * len(atoms)
    for t in T:
        counts_j[atom_index[t]] += 1
    classes: Dict[tuple, List[int]] = {}
    for c, value in enumerate(A.cells):
        classes.setdefault(tuple(snap(x, step) for x in value), []).append(c)
    groups = [classes[key] for key in sorted(classes)]
    betas = [tuple(float(x) for x in _mean([A.cells[c] for c in g])) for g in groups]
    G, J = len(groups), len(atoms)

    A_eq, b_eq, A_ub, b_ub = _transport_rows(groups, atoms, [len(g) for g in groups], counts_j, betas)
    cost = np.zeros(G * J + 1)
    cost[-1] = 1.0
    relaxed = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=(0, None), method="highs")
    if relaxed.status != 0:
        raise InternalInconsistency(f"relaxed transport LP failed: {relaxed.message}")
    relaxed_delta = float(relaxed.x[-1])
    if relaxed_delta > eps + FLOAT_TOL:
        raise NotApproxMajorized(f"best discretized transport misses by {relaxed_delta:.4g} > {eps}",
                                 delta=relaxed_delta)
    x = relaxed.x[:-1]

    L = 1
    while N * L <= max_resolution:
        A_eq, b_eq, A_ub, b_ub = _transport_rows(
            groups, atoms, [len(g) * L for g in groups], [c * L for c in counts_j], betas)
        lb = np.append(np.floor(x * L + FLOAT_TOL), 0.0)
        ub = np.append(np.ceil(x * L - FLOAT_TOL), np.inf)
        integrality = np.append(np.ones(G * J), 0)
        res = milp(cost, integrality=integrality, bounds=Bounds(lb, ub),
                   constraints=[LinearConstraint(A_eq, b_eq, b_eq),
                                LinearConstraint(A_ub, -np.inf, b_ub)])
        if res.status == 0 and res.x[-1] <= eps + FLOAT_TOL:
            break
        L *= 2
    else:
        raise ResolutionInsufficient(f"rounded transport needs resolution above {max_resolution}",
                                     needed=L)
    rounded_delta = float(res.x[-1])
    counts = [[int(round(v)) for v in res.x[g * J:(g + 1) * J]] for g in range(G)]
    logger.debug("approx engine: %d classes, %d grid atoms, refinement %d", G, J, L)

    grid = ModelTuple(tuple(T)).expanded(L)
    builder = _Builder(grid.cells)
    pools: List[List[int]] = [[] for _ in atoms]
    for c, value in enumerate(grid.cells):
        pools[atom_index[value]].append(c)
    blocks, _ = _realize_blocks(builder, pools, counts, 0, inner_depth)
    label_of = {}
    for g, cells in enumerate(groups):
        for c in cells:
            label_of[c] = g
    _apply_layout(builder, blocks, [label_of[c // L] for c in range(N * L)])
    result = EngineResult(builder.plan, S.expanded(L).cells, builder.values,
                          range(N * L), refinement=L)
    measured = _measured_error(result, A.expanded(L).cells)
    if measured > bound + FLOAT_TOL:
        raise InternalInconsistency(f"approximate diagonal misses by {measured:.4g} > {bound:.4g}")
    return ApproxResult(result, "discretized", bound, measured, relaxed_delta, rounded_delta)


# ══════════════════════════════════════════════════════════════════════════════
#  CARPENTER, UNITARY AND ORTHOGONAL-PROJECTION DIAGONALS
# ══════════════════════════════════════════════════════════════════════════════

@dataclass
class OperatorResult:
    """Dense operators W S_j W* with their engine run and defects."""
    engine: EngineResult
    operators: List[np.ndarray]
    source: AtomicJointMeasure

    def projection_defect(self) -> float:
        return max(float(np.abs(P @ P - P).max()) for P in self.operators)

    def hermitian_defect(self) -> float:
        return max(float(np.abs(P - P.conj().T).max()) for P in self.operators)

    def commutation_defect(self) -> float:
        return commutation_defect(self.operators)

    def orthogonality_defect(self) -> float:
        worst = 0.0
        for i, P in enumerate(self.operators):
            for Q in self.operators[i + 1:]:
                worst = max(worst, float(np.abs(P @ Q).max()))
        return worst


def _dense_outcome(result: EngineResult, source: AtomicJointMeasure) -> OperatorResult:
    U = result.unitary.matrix
    return OperatorResult(result, result.source.conjugated(U), source)


def _labels(target: AtomicJointMeasure, cells: Sequence[Point]) -> List[int]:
    index = {_key(a): i for i, a in enumerate(target.atoms)}
    return [index[_key(c)] for c in cells]


def carpenter_exact(A: AtomicJointMeasure, model: FiniteModel,
                    layout: Optional[Sequence[int]] = None) -> OperatorResult:
    """Commuting projections P with E(P) = A."""
    P, D = carpenter_majorant(A)
    S = ModelTuple.from_measure(P, model)
    target = AtomicJointMeasure.build([[Fraction(x) for x in a] for a in A.atoms], A.weights)
    result = schur_horn_engine(target, S, model, witness=D, layout=layout)
    return _dense_outcome(result, P)


def unitary_diagonal(A: AtomicJointMeasure, model: FiniteModel,
                     layout: Optional[Sequence[int]] = None) -> Tuple[np.ndarray, OperatorResult]:
    """A unitary V (finite spectrum on the circle) with E(V) = A, A read as x + i y."""
    V, D = unitary_split(A)
    S = ModelTuple.from_measure(V, model)
    result = schur_horn_engine(A, S, model, witness=D, layout=layout)
    outcome = _dense_outcome(result, V)
    re, im = outcome.operators
    return re + 1j * im, outcome


def orthoproj_diagonal(A: AtomicJointMeasure, model: FiniteModel,
                       layout: Optional[Sequence[int]] = None) -> OperatorResult:
    """Mutually orthogonal projections P_j with E(P_j) = A_j, when sum_j A_j <= I."""
    R, D = orthoproj_source(A)
    S = ModelTuple.from_measure(R, model)
    target = AtomicJointMeasure.build([[Fraction(x) for x in a] for a in A.atoms], A.weights)
    result = schur_horn_engine(target, S, model, witness=D, layout=layout)
    return _dense_outcome(result, R)


def approx_carpenter(A: ModelTuple, eps: float, model: FiniteModel,
                     max_resolution: int = 5000) -> Tuple[OperatorResult, float]:
    """Commuting projections whose diagonal is within eps of A; returns the measured error."""
    _require_size(A, model)
    step = parse_scalar(eps)
    rounded = []
    for c in A.cells:
        if any(float(x) < -FLOAT_TOL or float(x) > 1 + FLOAT_TOL for x in c):
            raise OutOfRange(f"cell {c} leaves the unit cube")
        rounded.append(tuple(min(Fraction(1), max(Fraction(0), snap(x, step))) for x in c))
    target = cell_measure(rounded)
    P, D = carpenter_majorant(target)
    masses = [w * model.resolution for w in P.weights]
    masses += [d * q * model.resolution for row, q in zip(D.entries, D.target_weights) for d in row]
    L = lcm_of_denominators(masses)
    if model.resolution * L > max_resolution:
        raise ResolutionInsufficient(
            f"rounded carpenter plan needs resolution {model.resolution * L}", needed=L)
    fine = FiniteModel(model.resolution * L)
    S = ModelTuple.from_measure(P, fine)
    layout = _labels(target, ModelTuple(tuple(rounded)).expanded(L).cells)
    result = schur_horn_engine(target, S, fine, witness=D, layout=layout)
    result.refinement = L
    outcome = _dense_outcome(result, P)
    diag = np.array([[float(np.real(Pj[c, c])) for Pj in outcome.operators] for c in range(fine.resolution)])
    want = np.array([[float(x) for x in c] for c in A.expanded(L).cells])
    return outcome, float(np.abs(diag - want).max())


# ══════════════════════════════════════════════════════════════════════════════
#  VERIFICATION
# ══════════════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class EngineVerification:
    max_error: float
    unitarity_defect: float
    majorized: bool


def verify_engine(result: EngineResult, S: Optional[ModelTuple] = None) -> EngineVerification:
    """Read the diagonal back from the dense unitary and re-check E(U S U*) ≺ S."""
    S = S if S is not None else result.source
    got = np.abs(result.unitary.matrix) ** 2 @ np.array([[float(x) for x in c] for c in S.cells])
    want = np.array([[float(x) for x in c] for c in result.achieved])
    verdict = check_majorization(cell_measure(result.achieved), S.measure())
    return EngineVerification(float(np.abs(got - want).max(initial=0.0)),
                              result.unitary.unitarity_defect, verdict.feasible)
