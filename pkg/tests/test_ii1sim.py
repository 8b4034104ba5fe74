from fractions import Fraction as F

import numpy as np
import pytest

from src.cases import (
    APPROX64_SOURCE_CELLS,
    APPROX64_TARGET_CELLS,
    APPROX_EPS,
    APPROX_SOURCE_CELLS,
    APPROX_TARGET_CELLS,
    SCALAR_SOURCE,
)
from src.errors import DimensionMismatch, NotMajorized, PairingInvalid, ResolutionInsufficient
from src.ii1sim import (
    FiniteModel,
    ModelTuple,
    ResemblanceFailure,
    ResemblancePairing,
    approx_carpenter,
    approx_schur_horn,
    auto_resolution,
    carpenter_exact,
    lemma_ind_step,
    orthoproj_diagonal,
    resemblance_check,
    scalar_diagonal_engine,
    schur_horn_engine,
    unitary_diagonal,
    verify_engine,
)
from src.majorization import check_majorization
from src.runner import random_schur_horn_instance
from src.spectra import AtomicJointMeasure, barycenter

from .conftest import measure


def cells(*values):
    return ModelTuple(tuple((F(v),) for v in values))


def test_model_tuple_from_measure():
    m = AtomicJointMeasure.build([(F(0),), (F(1),)], [F(1, 3), F(2, 3)])
    S = ModelTuple.from_measure(m, FiniteModel(6))
    assert S.cells == ((0,),) * 2 + ((1,),) * 4
    assert S.measure().same_as(m)


def test_model_tuple_reports_needed_refinement():
    m = AtomicJointMeasure.build([(F(0),), (F(1),)], [F(1, 3), F(2, 3)])
    with pytest.raises(ResolutionInsufficient) as info:
        ModelTuple.from_measure(m, FiniteModel(4))
    assert info.value.needed == 3


def test_resemblance_pairs_equal_relative_traces():
    S, T = cells(0, 1), cells(0, 0, 1, 1)
    pairing = resemblance_check(S, T, 2)
    assert isinstance(pairing, ResemblancePairing)
    assert pairing.s_groups == ((0,), (1,))
    assert pairing.t_groups == ((2, 3), (4, 5))
    assert pairing.traces == (F(1, 2), F(1, 2))


def test_resemblance_fails_on_different_traces():
    assert isinstance(resemblance_check(cells(0, 1), cells(0, 1, 1, 1), 2), ResemblanceFailure)
    assert isinstance(resemblance_check(cells(0, 1, 2), cells(0, 1, 2), 2), ResemblanceFailure)


def test_induction_step_flattens_both_corners():
    S, T = cells(0, 1), cells(0, 0, 1, 1)
    pairing = resemblance_check(S, T, 2)
    result = lemma_ind_step(S, T, pairing, FiniteModel(6))
    assert result.steps == 2
    assert sorted(result.flattened) == list(range(6))
    assert result.carried == () and result.remainder == ()
    assert all(value == (F(1, 2),) for value in result.achieved)
    source = np.array([float(c[0]) for c in S.cells + T.cells])
    diagonal = np.abs(result.unitary.matrix) ** 2 @ source
    assert np.allclose(diagonal, 0.5)


def test_induction_step_rejects_foreign_pairing():
    S, T = cells(0, 1), cells(0, 0, 1, 1)
    bad = ResemblancePairing(2, ((0,), (1,)), ((2,), (3, 4, 5)), (F(1, 2), F(1, 2)))
    with pytest.raises(PairingInvalid):
        lemma_ind_step(S, T, bad, FiniteModel(6))
    with pytest.raises(DimensionMismatch):
        lemma_ind_step(S, T, resemblance_check(S, T, 2), FiniteModel(7))


def test_scalar_engine_meets_trace_bound():
    source = measure(SCALAR_SOURCE)
    N = auto_resolution(source, depth=5)
    assert N <= 2000
    model = FiniteModel(N)
    S = ModelTuple.from_measure(source, model)
    tau = barycenter(source).value
    partial = scalar_diagonal_engine(S, 5, model, finalize=False)
    assert F(len(partial.flattened), N) >= F(211, 243)
    assert all(partial.achieved[c] == tau for c in partial.flattened)
    assert partial.levels == tuple(sorted(partial.levels))

    full = scalar_diagonal_engine(S, 5, model, finalize=True)
    assert all(value == tau for value in full.achieved)
    check = verify_engine(full)
    assert check.max_error <= 1e-9
    assert check.unitarity_defect <= 1e-10
    assert check.majorized


def test_scalar_engine_leaves_scalar_input_alone():
    S = cells(2, 2, 2)
    result = scalar_diagonal_engine(S, 3, FiniteModel(3))
    assert result.plan.ops == []
    assert result.achieved == S.cells


def test_schur_horn_engine_reaches_arveson_target(arveson_target, arveson_source):
    verdict = check_majorization(arveson_target, arveson_source)
    N = auto_resolution(arveson_source, target=arveson_target, witness=verdict.witness)
    assert N == 6
    model = FiniteModel(N)
    result = schur_horn_engine(arveson_target, ModelTuple.from_measure(arveson_source, model),
                               model, witness=verdict.witness)
    assert result.achieved_measure().same_as(arveson_target)
    check = verify_engine(result)
    assert check.max_error <= 1e-10
    assert check.unitarity_defect <= 1e-10


def test_schur_horn_engine_runs_scalar_levels_in_each_block(arveson_target, arveson_source):
    verdict = check_majorization(arveson_target, arveson_source)
    N = auto_resolution(arveson_source, depth=3, target=arveson_target, witness=verdict.witness)
    model = FiniteModel(N)
    result = schur_horn_engine(arveson_target, ModelTuple.from_measure(arveson_source, model),
                               model, witness=verdict.witness, depth=3)
    assert len(result.block_traces) == len(arveson_target.atoms)
    assert all(trace >= 1 - F(2, 3) ** 3 for trace in result.block_traces)
    assert result.achieved_measure().same_as(arveson_target)
    assert verify_engine(result).max_error <= 1e-10


def test_schur_horn_engine_on_random_instances(rng):
    for _ in range(50):
        target, source, witness = random_schur_horn_instance(rng)
        assert len(source.atoms) <= 4 and len(target.atoms) <= 4
        assert check_majorization(target, source).feasible
        N = auto_resolution(source, target=target, witness=witness)
        assert N <= 48
        model = FiniteModel(N)
        result = schur_horn_engine(target, ModelTuple.from_measure(source, model), model,
                                   witness=witness)
        assert result.achieved_measure().same_as(target)
        check = verify_engine(result)
        assert check.max_error <= 1e-9
        assert check.unitarity_defect <= 1e-10


def test_schur_horn_engine_refuses_non_majorized(horn_target, horn_source):
    model = FiniteModel(4)
    with pytest.raises(NotMajorized):
        schur_horn_engine(horn_target, ModelTuple.from_measure(horn_source, model), model)


def test_schur_horn_layout_places_target_atoms(arveson_target, arveson_source):
    model = FiniteModel(6)
    layout = [2, 1, 0, 2, 1, 0]
    result = schur_horn_engine(arveson_target, ModelTuple.from_measure(arveson_source, model),
                               model, layout=layout)
    assert [result.achieved[c] for c in range(6)] == [arveson_target.atoms[i] for i in layout]


def test_approx_engine_identity_path():
    A = ModelTuple(((0.31, 0.3), (0.3, 0.31)))
    S = ModelTuple(((0.3, 0.3), (0.3, 0.3)))
    result = approx_schur_horn(A, S, 0.05, FiniteModel(2))
    assert result.path == "identity"
    assert result.measured_error <= 0.15


def test_approx_engine_discretized_path():
    S = ModelTuple(tuple(tuple(c) for c in APPROX_SOURCE_CELLS))
    A = ModelTuple(tuple(tuple(c) for c in APPROX_TARGET_CELLS))
    result = approx_schur_horn(A, S, APPROX_EPS, FiniteModel(6))
    assert result.path == "discretized"
    assert result.measured_error <= 3 * APPROX_EPS
    assert result.relaxed_delta <= APPROX_EPS + 1e-9


def test_approx_engine_on_irrationally_spaced_cells():
    S = ModelTuple(tuple(tuple(c) for c in APPROX64_SOURCE_CELLS))
    A = ModelTuple(tuple(tuple(c) for c in APPROX64_TARGET_CELLS))
    result = approx_schur_horn(A, S, APPROX_EPS, FiniteModel(64))
    assert result.path == "discretized"
    assert result.measured_error <= 0.15
    assert result.engine.unitary.unitarity_defect <= 1e-10


def test_carpenter_exact_gives_commuting_projections():
    A = AtomicJointMeasure.build([(F(1, 2), F(1, 3)), (F(1, 4), F(3, 4))], [F(1, 2), F(1, 2)])
    outcome = carpenter_exact(A, FiniteModel(24))
    assert outcome.engine.achieved_measure().same_as(A)
    assert outcome.projection_defect() <= 1e-10
    assert outcome.commutation_defect() <= 1e-10
    assert outcome.hermitian_defect() <= 1e-10
    for j, P in enumerate(outcome.operators):
        want = [float(c[j]) for c in outcome.engine.achieved]
        assert np.allclose(np.real(np.diag(P)), want)


def test_orthoproj_diagonal_gives_orthogonal_projections():
    A = AtomicJointMeasure.build([(F(1, 2), F(1, 4)), (F(1, 4), F(1, 2))], [F(1, 2), F(1, 2)])
    outcome = orthoproj_diagonal(A, FiniteModel(8))
    assert outcome.engine.achieved_measure().same_as(A)
    assert outcome.projection_defect() <= 1e-10
    assert outcome.orthogonality_defect() <= 1e-10


def test_unitary_diagonal_is_unitary():
    A = AtomicJointMeasure.build([(F(0), F(0)), (F(3, 5), F(4, 5))], [F(1, 2), F(1, 2)])
    V, outcome = unitary_diagonal(A, FiniteModel(4))
    assert np.allclose(V.conj().T @ V, np.eye(4))
    assert outcome.engine.achieved_measure().same_as(A)


def test_approx_carpenter_within_eps():
    A = ModelTuple(((0.52, 0.31), (0.24, 0.77)))
    outcome, error = approx_carpenter(A, 0.05, FiniteModel(2), max_resolution=400)
    assert error <= 0.05
    assert outcome.projection_defect() <= 1e-10
    assert outcome.commutation_defect() <= 1e-10
