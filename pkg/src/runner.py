"""
Majlab Runner

Turns payloads into library calls and results into RunReports. Every CLI
subcommand and every bundled reproduction case goes through here.
"""

import hashlib
import logging
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from core import BaseRunner, RunReport, dump_json
from core.rationals import format_scalar, parse_scalar, sup_distance
from core.schemas import MatrixPayload, MeasurePayload, PhiPayload, SequencePayload, VerticesPayload
from .bhdiag import (
    DiagonalTarget,
    VertexSet,
    arveson_index_check,
    quantize_target,
    synthesize_constant_diagonal,
    synthesize_finite_diagonal,
    wire_scalar,
)
from .cases import get_case
from .config import MajlabConfig
from .errors import DimensionMismatch, NotRational
from .ii1sim import (
    FiniteModel,
    ModelTuple,
    approx_schur_horn,
    auto_resolution,
    carpenter_exact,
    orthoproj_diagonal,
    scalar_diagonal_engine,
    schur_horn_engine,
    unitary_diagonal,
    verify_engine,
)
from .majorization import (
    TransportMatrix,
    carpenter_majorant,
    check_majorization,
    choquet_witness,
    convex_inequality_probe,
    orthoproj_diagonal_feasible,
    orthoproj_source,
    simplex_majorization,
    unitary_split,
)
from .matrixlab import (
    OverlapCertificate,
    birkhoff_decompose,
    check_doubly_stochastic,
    inflate_approx_ds,
    inflate_rational_ds,
    inflation_residual,
    irrational_inflation_obstruction,
    matrix_from_payload,
    rational_matrix_from_payload,
    unistochastic_obstruction,
)
from .spectra import (
    AtomicJointMeasure,
    HullCertificate,
    barycenter,
    hull_membership,
    simplex_test,
)

logger = logging.getLogger(__name__)

INFLATION_SAMPLES = 20
SURROGATE_NOTE = "finite resolution N stands in for a diffuse II1 factor"


def inputs_digest(*payloads) -> str:
    """SHA-256 of the canonical JSON of the inputs."""
    return hashlib.sha256(dump_json(plain(list(payloads))).encode()).hexdigest()


def plain(value):
    """JSON-ready copy: exact scalars as rational strings, arrays and tuples as lists."""
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    if isinstance(value, Fraction):
        return format_scalar(value)
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set)):
        return [plain(v) for v in value]
    return value


def _wire_entries(payload: SequencePayload) -> list:
    return [[wire_scalar(x) for x in e] for e in payload.entries]


def random_simplex_instance(rng: np.random.Generator) -> Tuple[AtomicJointMeasure, AtomicJointMeasure]:
    """A rational target and a simplex source; about half the pairs are majorized."""
    n = int(rng.integers(1, 4))
    while True:
        atoms = [tuple(Fraction(int(rng.integers(-5, 6))) for _ in range(n)) for _ in range(n + 1)]
        if simplex_test(atoms):
            break
    m = int(rng.integers(1, 7))
    q = [Fraction(int(rng.integers(1, 10))) for _ in range(m)]
    q = [x / sum(q) for x in q]
    rows = []
    for _ in range(m):
        raw = [Fraction(int(rng.integers(1, 10))) for _ in range(n + 1)]
        rows.append([x / sum(raw) for x in raw])
    p = [sum(q[i] * rows[i][j] for i in range(m)) for j in range(n + 1)]
    targets = [tuple(sum(r[j] * atoms[j][c] for j in range(n + 1)) for c in range(n)) for r in rows]
    if rng.random() < 0.5:
        shift = Fraction(int(rng.integers(1, 4)), 7)
        targets[0] = (targets[0][0] + shift,) + targets[0][1:]
    return AtomicJointMeasure.build(targets, q), AtomicJointMeasure.build(atoms, p)


def random_schur_horn_instance(rng: np.random.Generator
                               ) -> Tuple[AtomicJointMeasure, AtomicJointMeasure, TransportMatrix]:
    """
    A target pushed out of up to four integer atoms by a witness with quarter
    entries and at most four rows, together with that witness.
    """
    while True:
        n = int(rng.integers(1, 3))
        k, m = int(rng.integers(2, 5)), int(rng.integers(1, 5))
        atoms = [tuple(Fraction(int(x)) for x in rng.integers(-5, 6, size=n)) for _ in range(k)]
        rows = [[Fraction(int(c), 4) for c in rng.multinomial(4, [1 / k] * k)] for _ in range(m)]
        keep = [j for j in range(k) if any(row[j] for row in rows)]
        atoms = [atoms[j] for j in keep]
        rows = [[row[j] for j in keep] for row in rows]
        targets = [tuple(sum(d * a[r] for d, a in zip(row, atoms)) for r in range(n)) for row in rows]
        if len(set(atoms)) == len(atoms) and len(set(targets)) == len(targets):
            break
    q = Fraction(1, m)
    p = [q * sum(row[j] for row in rows) for j in range(len(atoms))]
    target = AtomicJointMeasure.build(targets, [q] * m)
    source = AtomicJointMeasure.build(atoms, p)
    row_of = dict(zip(targets, rows))
    column = {a: j for j, a in enumerate(atoms)}
    entries = tuple(tuple(row_of[b][column[a]] for a in source.atoms) for b in target.atoms)
    return target, source, TransportMatrix(entries, source.weights, target.weights)


class MajlabRunner(BaseRunner):
    """
    Runs majlab subcommands and the bundled cases.

    Dense unitaries built along the way are kept in ``unitaries`` so the
    CLI can write them out on request.
    """

    def __init__(self, config: MajlabConfig):
        super().__init__(config)
        self.unitaries: Dict[str, np.ndarray] = {}

    # ══════════════════════════════════════════════════════════════════════════
    #  HELPERS
    # ══════════════════════════════════════════════════════════════════════════

    @property
    def exact(self) -> bool:
        return self.config.backend != "float"

    def _report(self, subcommand: str, inputs: Sequence, backend: str, verdicts=None,
                achieved=None, max_errors=None, notes=None, exit_code: int = 0) -> RunReport:
        return RunReport(
            subcommand=subcommand,
            inputs_digest=inputs_digest(*inputs),
            backend=backend,
            verdicts=plain(verdicts or {}),
            achieved=plain(achieved or {}),
            max_errors=plain(max_errors or {}),
            notes=list(notes or []),
            exit_code=exit_code,
        )

    def _measure(self, payload: MeasurePayload, exact: Optional[bool] = None) -> AtomicJointMeasure:
        return AtomicJointMeasure.from_payload(payload, exact=self.exact if exact is None else exact)

    def _ds_matrix(self, payload: MatrixPayload):
        if self.exact:
            try:
                return rational_matrix_from_payload(payload)
            except NotRational:
                logger.debug("matrix has an imaginary part, reading it as floats")
        M = matrix_from_payload(payload)
        if np.abs(M.imag).max(initial=0.0) > self.config.tol:
            raise NotRational("a doubly stochastic matrix must be real")
        return M.real.tolist()

    def _inflation_residual(self, U: np.ndarray, m: int, D) -> float:
        d = len(D)
        worst = 0.0
        for _ in range(INFLATION_SAMPLES):
            beta = self.rng.standard_normal(d) + 1j * self.rng.standard_normal(d)
            worst = max(worst, inflation_residual(U, m, D, beta))
        return worst

    def _resolution(self, source: AtomicJointMeasure, resolution: Optional[int], **plan) -> int:
        if resolution is not None:
            return resolution
        return auto_resolution(source, max_resolution=self.config.max_resolution,
                               inner_depth=self.config.block_depth, **plan)

    # ══════════════════════════════════════════════════════════════════════════
    #  MAJORIZATION AND MATRIX COMMANDS
    # ══════════════════════════════════════════════════════════════════════════

    def check(self, target: MeasurePayload, source: MeasurePayload) -> RunReport:
        A, S = self._measure(target), self._measure(source)
        verdict = check_majorization(A, S, backend=self.config.backend, tol=self.config.tol,
                                     exact_size_limit=self.config.exact_size_limit)
        gap = sup_distance(barycenter(A).value, barycenter(S).value)
        verdicts = {
            "feasible": verdict.feasible,
            "hull_contains_target": all(isinstance(hull_membership(a, S), HullCertificate)
                                        for a in A.atoms),
            "barycenters_equal": gap == 0 if A.exact and S.exact else float(gap) <= self.config.tol,
            "simplex_source": simplex_test(S),
        }
        achieved, max_errors = {}, {}
        if verdict.feasible:
            achieved["witness"] = verdict.witness.entries
            probe = convex_inequality_probe(A, S, verdict.witness, samples=self.config.probe_samples,
                                            rng=self.rng, tol=self.config.tol)
            max_errors["convex_probe_min_slack"] = probe.min_slack
        else:
            verdicts["certificate"] = verdict.infeasibility_certificate
        return self._report("check", [target, source], verdict.backend, verdicts, achieved,
                            max_errors, exit_code=0 if verdict.feasible else 2)

    def birkhoff(self, matrix: MatrixPayload) -> RunReport:
        D = check_doubly_stochastic(self._ds_matrix(matrix), tol=self.config.tol)
        decomposition = birkhoff_decompose(D, zero_threshold=self.config.zero_threshold)
        rebuilt = decomposition.reconstruct()
        error = max(abs(a - b) for ra, rb in zip(rebuilt, D) for a, b in zip(ra, rb))
        obstruction = unistochastic_obstruction(D, zero_threshold=self.config.zero_threshold)
        achieved = {"terms": [{"weight": w, "permutation": p} for w, p in decomposition.terms]}
        max_errors = {"reconstruction": error}
        if decomposition.exact:
            m, U = inflate_rational_ds(D)
            self.unitaries["inflation"] = U.matrix
            achieved["inflation_m"] = m
            max_errors["inflation_residual"] = self._inflation_residual(U.matrix, m, D)
            max_errors["unitarity_defect"] = U.unitarity_defect
        verdicts = {"unistochastic_obstruction": vars(obstruction)}
        return self._report("birkhoff", [matrix], "exact" if decomposition.exact else "float",
                            verdicts, achieved, max_errors)

    def inflate(self, matrix: MatrixPayload, eps: float) -> RunReport:
        D = check_doubly_stochastic(self._ds_matrix(matrix), tol=self.config.tol)
        inflation = inflate_approx_ds(D, eps, rng=self.rng)
        self.unitaries["inflation"] = inflation.unitary.matrix
        achieved = {"m": inflation.m, "counts": inflation.counts}
        max_errors = {"deviation_bound": inflation.bound,
                      "unitarity_defect": inflation.unitary.unitarity_defect}
        return self._report("inflate", [matrix, eps], "exact" if inflation.bound == 0 else "float",
                            {"within_eps": inflation.bound <= eps}, achieved, max_errors)

    def certify_irrational(self, a, m: int) -> RunReport:
        report = irrational_inflation_obstruction(a, m)
        return self._report("certify irrational", [plain(a), m],
                            "exact" if isinstance(report.distance, Fraction) else "float",
                            {"obstructed": report.obstructed},
                            {"a": report.a, "m": m, "distance": report.distance},
                            exit_code=2 if report.obstructed else 0)

    # ══════════════════════════════════════════════════════════════════════════
    #  II1 COMMANDS
    # ══════════════════════════════════════════════════════════════════════════

    def ii1_scalar(self, source: MeasurePayload, depth: int,
                   resolution: Optional[int] = None) -> RunReport:
        S = self._measure(source, exact=True)
        N = self._resolution(S, resolution, depth=depth)
        model = FiniteModel(N)
        result = scalar_diagonal_engine(ModelTuple.from_measure(S, model), depth, model,
                                        finalize=self.config.finalize,
                                        inner_depth=self.config.block_depth)
        tau = barycenter(S).value
        trace_q = Fraction(len(result.flattened), N)
        bound = 1 - Fraction(2, 3) ** depth
        verification = verify_engine(result)
        self.unitaries["scalar"] = result.unitary.matrix
        verdicts = {
            "scalar_on_q": all(result.achieved[c] == tau for c in result.flattened),
            "scalar_everywhere": all(v == tau for v in result.achieved),
            "trace_bound_met": trace_q >= bound,
            "majorized": verification.majorized,
        }
        achieved = {"resolution": N, "trace_of_q": trace_q, "trace_bound": bound,
                    "levels": result.levels, "tau": tau,
                    "achieved_diagonal": result.achieved_measure().to_payload()}
        max_errors = {"dense_readout": verification.max_error,
                      "unitarity_defect": verification.unitarity_defect}
        return self._report("ii1 scalar", [source, depth, resolution], "exact", verdicts,
                            achieved, max_errors, notes=[SURROGATE_NOTE])

    def ii1_schur_horn(self, target: MeasurePayload, source: MeasurePayload,
                       resolution: Optional[int] = None, depth: Optional[int] = None) -> RunReport:
        A, S = self._measure(target, exact=True), self._measure(source, exact=True)
        depth = self.config.depth if depth is None else depth
        inputs = [target, source, resolution, depth]
        verdict = check_majorization(A, S, backend="exact")
        if not verdict.feasible:
            return self._report("ii1 schur-horn", inputs, "exact",
                                {"feasible": False, "certificate": verdict.infeasibility_certificate},
                                exit_code=2)
        N = self._resolution(S, resolution, target=A, witness=verdict.witness, depth=depth)
        model = FiniteModel(N)
        result = schur_horn_engine(A, ModelTuple.from_measure(S, model), model,
                                   witness=verdict.witness, depth=depth,
                                   inner_depth=self.config.block_depth)
        verification = verify_engine(result)
        self.unitaries["schur-horn"] = result.unitary.matrix
        bound = 1 - Fraction(2, 3) ** depth
        verdicts = {"feasible": True,
                    "achieved_equals_target": result.achieved_measure().same_as(A),
                    "block_trace_bound_met": all(t >= bound for t in result.block_traces),
                    "majorized": verification.majorized}
        achieved = {"resolution": N, "depth": depth, "block_traces": result.block_traces,
                    "trace_bound": bound,
                    "achieved_diagonal": result.achieved_measure().to_payload()}
        max_errors = {"dense_readout": verification.max_error,
                      "unitarity_defect": verification.unitarity_defect}
        return self._report("ii1 schur-horn", inputs, "exact", verdicts,
                            achieved, max_errors, notes=[SURROGATE_NOTE])

    def _operator_report(self, name: str, inputs: list, outcome, target: AtomicJointMeasure,
                         extra: Optional[dict] = None) -> RunReport:
        verification = verify_engine(outcome.engine)
        achieved_measure = outcome.engine.achieved_measure()
        exact = achieved_measure.exact
        self.unitaries[name] = outcome.engine.unitary.matrix
        max_errors = {"dense_readout": verification.max_error,
                      "unitarity_defect": verification.unitarity_defect,
                      "hermitian_defect": outcome.hermitian_defect(),
                      "commutation_defect": outcome.commutation_defect()}
        max_errors.update(extra or {})
        achieved = {"resolution": outcome.engine.resolution,
                    "source": outcome.source.to_payload(),
                    "achieved_diagonal": achieved_measure.to_payload()}
        tol = 0.0 if exact else self.config.tol
        verdicts = {"achieved_equals_target": achieved_measure.same_as(target, tol=tol),
                    "majorized": verification.majorized}
        return self._report(f"ii1 {name}", inputs, "exact" if exact else "float", verdicts,
                            achieved, max_errors, notes=[SURROGATE_NOTE])

    def ii1_carpenter(self, target: MeasurePayload, resolution: Optional[int] = None) -> RunReport:
        A = self._measure(target, exact=True)
        P, D = carpenter_majorant(A)
        N = self._resolution(P, resolution, target=A, witness=D)
        outcome = carpenter_exact(A, FiniteModel(N))
        return self._operator_report("carpenter", [target, resolution], outcome, A,
                                     {"projection_defect": outcome.projection_defect()})

    def ii1_unitary(self, target: MeasurePayload, resolution: Optional[int] = None) -> RunReport:
        A = self._measure(target, exact=True)
        V, D = unitary_split(A)
        N = self._resolution(V, resolution, target=A, witness=D)
        W, outcome = unitary_diagonal(A, FiniteModel(N))
        defect = float(np.abs(W.conj().T @ W - np.eye(W.shape[0])).max())
        return self._operator_report("unitary", [target, resolution], outcome, A,
                                     {"unitary_operator_defect": defect})

    def ii1_orthoproj(self, target: MeasurePayload, resolution: Optional[int] = None) -> RunReport:
        A = self._measure(target, exact=True)
        feasible, _ = orthoproj_diagonal_feasible(A)
        if not feasible:
            return self._report("ii1 orthoproj", [target, resolution], "exact",
                                {"feasible": False}, exit_code=2)
        R, D = orthoproj_source(A)
        N = self._resolution(R, resolution, target=A, witness=D)
        outcome = orthoproj_diagonal(A, FiniteModel(N))
        return self._operator_report("orthoproj", [target, resolution], outcome, A,
                                     {"projection_defect": outcome.projection_defect(),
                                      "orthogonality_defect": outcome.orthogonality_defect()})

    # ══════════════════════════════════════════════════════════════════════════
    #  B(H) COMMANDS
    # ══════════════════════════════════════════════════════════════════════════

    def _synthesis_report(self, subcommand: str, inputs: list, synthesis) -> RunReport:
        self.unitaries["bh"] = synthesis.unitary.matrix
        verdicts = {"within_bound": synthesis.sup_error <= float(synthesis.bound) + self.config.tol,
                    "multiplicity_floor_met": synthesis.floor_met}
        achieved = {"size": synthesis.size, "multiplicities": synthesis.multiplicities,
                    "multiplicity_floor": synthesis.multiplicity_floor,
                    "block_layout": synthesis.layout}
        max_errors = {"sup_error": synthesis.sup_error, "bound": float(synthesis.bound),
                      "predicted_error": synthesis.predicted_error,
                      "unitarity_defect": synthesis.unitary.unitarity_defect}
        return self._report(subcommand, inputs, "exact", verdicts, achieved, max_errors)

    def bh_synth(self, vertices: VerticesPayload, target: SequencePayload,
                 size: Optional[int] = None, eps=None) -> RunReport:
        X = VertexSet.from_payload(vertices)
        if eps is not None:
            goal = quantize_target(_wire_entries(target), X, eps)
        else:
            goal = DiagonalTarget.from_payload(target)
        inputs = [vertices, target, size, plain(eps)]
        floor = self.config.enforce_multiplicity_floor
        if goal.distinct == 1:
            synthesis = synthesize_constant_diagonal(X, goal.entries[0], size or goal.size,
                                                     enforce_floor=floor)
        else:
            if size is not None and size != goal.size:
                raise DimensionMismatch(f"--size {size} but the target has {goal.size} entries")
            synthesis = synthesize_finite_diagonal(X, goal, max_denominator=self.config.max_step2_denominator,
                                                   threads=self.config.threads, enforce_floor=floor)
        return self._synthesis_report("bh synth", inputs, synthesis)

    def bh_quantize(self, vertices: VerticesPayload, target: SequencePayload, eps) -> RunReport:
        X = VertexSet.from_payload(vertices)
        goal = quantize_target(_wire_entries(target), X, eps)
        error = max(sup_distance(q, [parse_scalar(x) for x in e])
                    for q, e in zip(goal.entries, target.entries))
        achieved = {"target": {"n": X.n, "entries": goal.entries}, "distinct": goal.distinct}
        return self._report("bh quantize", [vertices, target, plain(eps)], "exact",
                            {"within_eps": error <= parse_scalar(eps)}, achieved,
                            {"sup_distance": error})

    def bh_index(self, vertices: VerticesPayload, phi: PhiPayload, prefix: SequencePayload) -> RunReport:
        X = VertexSet.from_payload(vertices)
        verdict = arveson_index_check(X, phi.phi, _wire_entries(prefix))
        achieved = {"deviation_sum": verdict.deviation_sum, "coefficients": verdict.coefficients}
        notes = [] if verdict.exact else ["float data was rationalized before the lattice solve"]
        return self._report("bh index", [vertices, phi, prefix],
                            "exact" if verdict.exact else "float",
                            {"present": verdict.present}, achieved, notes=notes,
                            exit_code=0 if verdict.present else 2)

    # ══════════════════════════════════════════════════════════════════════════
    #  REPRODUCTION SUITE
    # ══════════════════════════════════════════════════════════════════════════

    def run_case(self, case_id: str) -> RunReport:
        data = get_case(case_id)
        handler = getattr(self, "_case_" + case_id.replace("-", "_"))
        checks, report = handler(data)
        reproduced = all(checks.values())
        if not reproduced:
            logger.warning("case %s not reproduced: %s", case_id,
                           [name for name, ok in checks.items() if not ok])
        verdicts = dict(report.verdicts)
        verdicts["checks"] = checks
        verdicts["reproduced"] = reproduced
        return report.model_copy(update={"subcommand": f"repro {case_id}", "verdicts": verdicts,
                                         "exit_code": 0 if reproduced else 1})

    def _case_arveson3x3(self, data) -> Tuple[dict, RunReport]:
        report = self.check(MeasurePayload(**data["target"]), MeasurePayload(**data["source"]))
        D = [[parse_scalar(x) for x in row] for row in data["witness"]]
        obstruction = unistochastic_obstruction(D)
        m, U = inflate_rational_ds(D)
        self.unitaries["inflation"] = U.matrix
        residual = self._inflation_residual(U.matrix, m, D)
        witness = report.achieved.get("witness")
        checks = {
            "feasible": report.verdicts["feasible"],
            "witness": witness == plain(D),
            "obstruction": isinstance(obstruction, OverlapCertificate),
            "inflation_m": m == 2,
            "inflation_residual": residual <= 1e-9,
        }
        report.verdicts["unistochastic_obstruction"] = plain(vars(obstruction))
        report.achieved["inflation_m"] = m
        report.max_errors["inflation_residual"] = residual
        return checks, report

    def _case_horn(self, data) -> Tuple[dict, RunReport]:
        report = self.check(MeasurePayload(**data["target"]), MeasurePayload(**data["source"]))
        v = report.verdicts
        checks = {"infeasible": not v["feasible"], "certificate": v.get("certificate") is not None,
                  "hull": v["hull_contains_target"], "barycenter": v["barycenters_equal"]}
        return checks, report

    def _case_simplex(self, data) -> Tuple[dict, RunReport]:
        disagreements, feasible = 0, 0
        for _ in range(data["instances"]):
            target, source = random_simplex_instance(self.rng)
            lp = check_majorization(target, source, backend="exact").feasible
            feasible += lp
            disagreements += lp != simplex_majorization(target, source)
        report = self._report("simplex", [data], "exact", {"disagreements": disagreements},
                              {"instances": data["instances"], "feasible": feasible})
        return {"no_disagreement": disagreements == 0}, report

    def _case_scalar(self, data) -> Tuple[dict, RunReport]:
        source = MeasurePayload(**data["source"])
        depth = data["depth"]
        S = self._measure(source, exact=True)
        N = self._resolution(S, None, depth=depth)
        model = FiniteModel(N)
        partial = scalar_diagonal_engine(ModelTuple.from_measure(S, model), depth, model,
                                         finalize=False)
        tau = barycenter(S).value
        trace_q = Fraction(len(partial.flattened), N)
        report = self.ii1_scalar(source, depth, N)
        checks = {"trace_bound": trace_q >= 1 - Fraction(2, 3) ** depth,
                  "scalar_on_q": all(partial.achieved[c] == tau for c in partial.flattened),
                  "finalized_everywhere": report.verdicts["scalar_everywhere"],
                  "unitary": report.max_errors["unitarity_defect"] <= self.config.unitary_tol}
        report.achieved["unfinalized_trace_of_q"] = plain(trace_q)
        return checks, report

    def _case_schur_horn(self, data) -> Tuple[dict, RunReport]:
        report = self.ii1_schur_horn(MeasurePayload(**data["target"]), MeasurePayload(**data["source"]))
        checks = {"exact_target": report.verdicts["achieved_equals_target"],
                  "block_traces": report.verdicts["block_trace_bound_met"],
                  "majorized": report.verdicts["majorized"],
                  "unitary": report.max_errors["unitarity_defect"] <= self.config.unitary_tol}
        return checks, report

    def _case_schur_horn_random(self, data) -> Tuple[dict, RunReport]:
        missed, largest, worst_error, worst_defect = 0, 0, 0.0, 0.0
        for _ in range(data["instances"]):
            target, source, witness = random_schur_horn_instance(self.rng)
            N = auto_resolution(source, target=target, witness=witness,
                                max_resolution=self.config.max_resolution)
            model = FiniteModel(N)
            result = schur_horn_engine(target, ModelTuple.from_measure(source, model), model,
                                       witness=witness)
            check = verify_engine(result)
            missed += not result.achieved_measure().same_as(target)
            largest = max(largest, N)
            worst_error = max(worst_error, check.max_error)
            worst_defect = max(worst_defect, check.unitarity_defect)
        report = self._report("schur-horn-random", [data], "exact", {"missed": missed},
                              {"instances": data["instances"], "largest_resolution": largest},
                              {"dense_readout": worst_error, "unitarity_defect": worst_defect},
                              notes=[SURROGATE_NOTE])
        checks = {"exact_target": missed == 0,
                  "readout": worst_error <= self.config.tol,
                  "unitary": worst_defect <= self.config.unitary_tol}
        return checks, report

    def _case_approx(self, data) -> Tuple[dict, RunReport]:
        A = ModelTuple(tuple(tuple(float(x) for x in c) for c in data["target_cells"]))
        S = ModelTuple(tuple(tuple(float(x) for x in c) for c in data["source_cells"]))
        eps = data["eps"]
        result = approx_schur_horn(A, S, eps, FiniteModel(S.size),
                                   max_resolution=self.config.max_resolution)
        self.unitaries["approx"] = result.engine.unitary.matrix
        report = self._report("approx", [data], "float", {"path": result.path},
                              {"refinement": result.refinement, "resolution": result.engine.resolution},
                              {"measured": result.measured_error, "bound": result.bound,
                               "relaxed_delta": result.relaxed_delta,
                               "rounded_delta": result.rounded_delta,
                               "unitarity_defect": result.engine.unitary.unitarity_defect},
                              notes=[SURROGATE_NOTE])
        return {"within_bound": result.measured_error <= 3 * eps + self.config.tol}, report

    def _case_approx_64(self, data) -> Tuple[dict, RunReport]:
        return self._case_approx(data)

    def _case_properties(self, data) -> Tuple[dict, RunReport]:
        broken = 0
        for _ in range(data["partitions"]):
            target, source, witness = random_schur_horn_instance(self.rng)
            cut = [Fraction(int(self.rng.integers(0, 4)), 3) * w for w in target.weights]
            partition = [cut, [w - c for w, c in zip(target.weights, cut)]]
            pieces = choquet_witness(witness, partition, target, source)
            moments = [tuple(sum(w * a[r] for w, a in zip(piece, target.atoms)) for r in range(target.n))
                       for piece in partition]
            broken += (sum(nu.mass for nu in pieces) != 1
                       or any(nu.moment() != m for nu, m in zip(pieces, moments)))
        A = self._measure(MeasurePayload(**data["target"]), exact=True)
        S = self._measure(MeasurePayload(**data["source"]), exact=True)
        sampled = convex_inequality_probe(A, S, check_majorization(A, S, backend="exact").witness,
                                          samples=data["samples"], rng=self.rng)
        report = self._report("properties", [data], "exact", {"choquet_broken": broken},
                              {"partitions": data["partitions"], "samples": sampled.samples,
                               "min_slack": sampled.min_slack, "max_slack": sampled.max_slack})
        checks = {"choquet": broken == 0, "convex_inequality": sampled.min_slack >= 0}
        return checks, report

    def _case_carpenter(self, data) -> Tuple[dict, RunReport]:
        report = self.ii1_carpenter(MeasurePayload(**data["target"]))
        e = report.max_errors
        checks = {"exact_target": report.verdicts["achieved_equals_target"],
                  "projections": e["projection_defect"] <= self.config.unitary_tol,
                  "commuting": e["commutation_defect"] <= self.config.unitary_tol}
        return checks, report

    def _case_orthoproj(self, data) -> Tuple[dict, RunReport]:
        report = self.ii1_orthoproj(MeasurePayload(**data["target"]))
        e = report.max_errors
        checks = {"exact_target": report.verdicts["achieved_equals_target"],
                  "projections": e["projection_defect"] <= self.config.unitary_tol,
                  "orthogonal": e["orthogonality_defect"] <= self.config.unitary_tol}
        return checks, report

    def _case_bh_constant(self, data) -> Tuple[dict, RunReport]:
        X = VertexSet.from_payload(VerticesPayload(**data["vertices"]))
        checks, errors, bounds = {}, {}, {}
        for M in data["sizes"]:
            synthesis = synthesize_constant_diagonal(X, data["point"], M)
            errors[str(M)] = synthesis.sup_error
            bounds[str(M)] = float(synthesis.bound)
            checks[f"size_{M}"] = synthesis.sup_error <= data["limits"][M]
            checks[f"unitary_{M}"] = synthesis.unitary.unitarity_defect <= self.config.unitary_tol
        report = self._report("bh-constant", [data], "exact", {}, {"bounds": bounds},
                              {"sup_error": errors})
        return checks, report

    def _case_bh_finite(self, data) -> Tuple[dict, RunReport]:
        M = data["size"]
        rare, host, other = data["values"]
        entries = [rare] + [host] * (M // 2) + [other] * (M // 2 - 1)
        report = self.bh_synth(VerticesPayload(**data["vertices"]),
                               SequencePayload(n=len(rare), entries=entries))
        checks = {"within_bound": report.verdicts["within_bound"],
                  "unitary": report.max_errors["unitarity_defect"] <= self.config.unitary_tol}
        return checks, report

    def _case_index(self, data) -> Tuple[dict, RunReport]:
        X = VertexSet.from_payload(VerticesPayload(**data["vertices"]))
        checks, found = {}, {}
        for check in data["checks"]:
            verdict = arveson_index_check(X, check["phi"], [[parse_scalar(x) for x in e]
                                                            for e in check["prefix"]])
            checks[check["name"]] = verdict.present == check["present"] and verdict.exact
            found[check["name"]] = {"deviation_sum": verdict.deviation_sum,
                                    "coefficients": verdict.coefficients}
        return checks, self._report("index", [data], "exact", {}, found)

    def _case_irrational(self, data) -> Tuple[dict, RunReport]:
        report = self.certify_irrational(data["a"], data["m"])
        distance = report.achieved["distance"]
        checks = {"obstructed": report.verdicts["obstructed"],
                  "distance": abs(distance - 0.0711) < 1e-4}
        return checks, report
