import math
from fractions import Fraction as F

import pytest

from src.errors import InvalidPartition, InvalidWitness, NotAContraction, NotASimplex, OutOfRange
from src.lp import verify_certificate
from src.majorization import (
    TransportMatrix,
    carpenter_majorant,
    check_majorization,
    choquet_witness,
    compose_witnesses,
    convex_inequality_probe,
    orthoproj_diagonal_feasible,
    orthoproj_source,
    simplex_majorization,
    transport_system,
    unitary_majorant,
    unitary_split,
)
from src.runner import random_simplex_instance
from src.spectra import AtomicJointMeasure, barycenter


def test_arveson_witness_is_unique_transport(arveson_target, arveson_source, arveson_witness):
    verdict = check_majorization(arveson_target, arveson_source)
    assert verdict.feasible
    assert verdict.backend == "exact"
    assert [list(row) for row in verdict.witness.entries] == arveson_witness
    assert verdict.witness.defects(arveson_target, arveson_source) == []


def test_horn_pair_is_certified_infeasible(horn_target, horn_source):
    verdict = check_majorization(horn_target, horn_source)
    assert not verdict.feasible
    A, b = transport_system(horn_target, horn_source)
    assert verify_certificate(A, b, verdict.infeasibility_certificate)
    assert barycenter(horn_target).value == barycenter(horn_source).value


def test_identical_measures_get_identity_witness(arveson_source):
    verdict = check_majorization(arveson_source, arveson_source)
    assert verdict.feasible
    for i, row in enumerate(verdict.witness.entries):
        assert sum(row) == 1 and row[i] == 1


def test_float_backend_agrees(arveson_target, arveson_source):
    verdict = check_majorization(arveson_target, arveson_source, backend="float")
    assert verdict.feasible
    assert verdict.backend == "float"
    assert verdict.witness.defects(arveson_target.as_float(), arveson_source.as_float()) == []


def test_point_mass_at_barycenter_is_majorized(arveson_source):
    center = AtomicJointMeasure.build([barycenter(arveson_source).value], [F(1)])
    assert check_majorization(center, arveson_source).feasible
    assert not check_majorization(arveson_source, center).feasible


def test_simplex_majorization_matches_lp(rng):
    disagreements = 0
    for _ in range(40):
        target, source = random_simplex_instance(rng)
        exact = check_majorization(target, source).feasible
        disagreements += exact != simplex_majorization(target, source)
    assert disagreements == 0


def test_simplex_majorization_needs_a_simplex(horn_target, horn_source):
    with pytest.raises(NotASimplex):
        simplex_majorization(horn_target, horn_source)


def test_choquet_pieces_keep_mass_and_moment(arveson_target, arveson_source):
    D = check_majorization(arveson_target, arveson_source).witness
    partition = [[F(1, 6), F(1, 3), F(0)], [F(1, 6), F(0), F(1, 3)]]
    pieces = choquet_witness(D, partition, arveson_target, arveson_source)
    for piece, nu in zip(partition, pieces):
        assert nu.mass == sum(piece)
        moment = tuple(sum(w * a[r] for w, a in zip(piece, arveson_target.atoms)) for r in range(2))
        assert nu.moment() == moment


def test_choquet_random_partitions(rng, arveson_target, arveson_source):
    D = check_majorization(arveson_target, arveson_source).witness
    for _ in range(100):
        cut = [F(int(rng.integers(0, 4)), 3) * w for w in arveson_target.weights]
        partition = [cut, [w - c for w, c in zip(arveson_target.weights, cut)]]
        pieces = choquet_witness(D, partition, arveson_target, arveson_source)
        assert sum(nu.mass for nu in pieces) == 1
        for piece, nu in zip(partition, pieces):
            assert nu.moment() == tuple(
                sum(w * a[r] for w, a in zip(piece, arveson_target.atoms)) for r in range(2))


def test_choquet_rejects_bad_partition(arveson_target, arveson_source):
    D = check_majorization(arveson_target, arveson_source).witness
    with pytest.raises(InvalidPartition):
        choquet_witness(D, [[F(1, 3), F(1, 3), F(1, 4)]], arveson_target, arveson_source)


def test_convex_probe_has_no_violations(rng, arveson_target, arveson_source):
    D = check_majorization(arveson_target, arveson_source).witness
    report = convex_inequality_probe(arveson_target, arveson_source, D, samples=1000, rng=rng)
    assert report.samples == 1000
    assert report.min_slack >= 0


def test_invalid_witness_is_rejected(arveson_target, arveson_source):
    bad = TransportMatrix(((F(1), F(0), F(0)),) * 3, arveson_source.weights, arveson_target.weights)
    with pytest.raises(InvalidWitness):
        bad.require_valid(arveson_target, arveson_source)


def test_compose_witnesses(arveson_target, arveson_source):
    first = check_majorization(arveson_target, arveson_source).witness
    identity = check_majorization(arveson_source, arveson_source).witness
    composed = compose_witnesses(first, identity)
    assert composed.entries == first.entries
    assert composed.defects(arveson_target, arveson_source) == []


def test_carpenter_majorant_has_projection_atoms():
    A = AtomicJointMeasure.build([(F(1, 2), F(1, 3)), (F(1, 4), F(3, 4))], [F(1, 2), F(1, 2)])
    P, D = carpenter_majorant(A)
    assert all(x in (0, 1) for atom in P.atoms for x in atom)
    assert D.defects(A, P) == []
    assert check_majorization(A, P).feasible


def test_carpenter_majorant_rejects_atoms_outside_cube():
    with pytest.raises(OutOfRange):
        carpenter_majorant(AtomicJointMeasure.build([(F(3, 2),)], [F(1)]))


def test_unitary_majorant_lives_on_circle():
    A = AtomicJointMeasure.build([(F(1, 2), F(0)), (F(0), F(0)), (F(3, 5), F(4, 5))],
                                 [F(1, 3), F(1, 3), F(1, 3)])
    U = unitary_majorant(A)
    for x, y in U.atoms:
        assert math.isclose(float(x) ** 2 + float(y) ** 2, 1.0, abs_tol=1e-12)
    _, D = unitary_split(A)
    assert all(d in (0, F(1, 2), 1) for row in D.entries for d in row)


def test_unitary_majorant_rejects_non_contractions():
    with pytest.raises(NotAContraction):
        unitary_majorant(AtomicJointMeasure.build([(F(1), F(1))], [F(1)]))


def test_orthoproj_feasibility():
    ok, D = orthoproj_diagonal_feasible(
        AtomicJointMeasure.build([(F(1, 2), F(1, 4)), (F(1, 4), F(1, 2))], [F(1, 2), F(1, 2)]))
    assert ok and D.entries[0] == (F(1, 2), F(1, 4), F(1, 4))
    ok, D = orthoproj_diagonal_feasible(AtomicJointMeasure.build([(F(2, 3), F(1, 2))], [F(1)]))
    assert not ok and D is None


def test_orthoproj_source_majorizes_target():
    A = AtomicJointMeasure.build([(F(1, 2), F(1, 4)), (F(1, 4), F(1, 2))], [F(1, 2), F(1, 2)])
    R, D = orthoproj_source(A)
    assert all(sum(atom) <= 1 and all(x in (0, 1) for x in atom) for atom in R.atoms)
    assert D.defects(A, R) == []
