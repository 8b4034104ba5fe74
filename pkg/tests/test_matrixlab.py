from fractions import Fraction as F

import numpy as np
import pytest

from core.schemas import MatrixPayload
from src.errors import (
    BadBlockStructure,
    NormTooLarge,
    NotCommuting,
    NotDoublyStochastic,
    NotRational,
    NotSquare,
    OutOfRange,
)
from src.matrixlab import (
    ConjugationPlan,
    OverlapCertificate,
    Unknown,
    birkhoff_decompose,
    check_doubly_stochastic,
    constant_diagonal_unitary,
    dilation_unitary,
    expect_block,
    expect_diagonal,
    fourier_unitary,
    inflate_approx_ds,
    inflate_rational_ds,
    inflation_residual,
    irrational_inflation_obstruction,
    is_unistochastic_image,
    matrix_from_payload,
    matrix_to_payload,
    partial_isometry_check,
    permutation_matrix,
    rational_matrix_from_payload,
    unistochastic_obstruction,
)


def random_rational_ds(rng, d):
    terms = int(rng.integers(1, d + 2))
    raw = [F(int(rng.integers(1, 10))) for _ in range(terms)]
    weights = [w / sum(raw) for w in raw]
    D = [[F(0)] * d for _ in range(d)]
    for w in weights:
        for i, j in enumerate(rng.permutation(d)):
            D[i][int(j)] += w
    return D


def random_unitary(rng, n):
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 7])
def test_fourier_unitary_flattens_diagonals(n):
    U = fourier_unitary(n)
    assert U.unitarity_defect <= 1e-12
    S = np.diag(np.arange(n, dtype=float))
    assert np.allclose(np.diag(U.conjugate(S)), (n - 1) / 2)


def test_fourier_unitary_rejects_zero():
    with pytest.raises(OutOfRange):
        fourier_unitary(0)


def test_expect_diagonal_and_block():
    M = np.arange(16, dtype=complex).reshape(4, 4)
    assert np.array_equal(expect_diagonal(M), np.diag([0, 5, 10, 15]))
    B = expect_block(M, 2, 2)
    assert B[0, 1] == 1 and B[2, 3] == 11 and B[0, 2] == 0
    with pytest.raises(NotSquare):
        expect_diagonal(np.zeros((2, 3)))
    with pytest.raises(BadBlockStructure):
        expect_block(M, 3, 2)


def test_block_then_diagonal_expectation_composes(rng):
    for _ in range(20):
        m, d = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        U = random_unitary(rng, m * d)
        A = np.diag(rng.standard_normal(m * d))
        M = U @ A @ U.conj().T
        blocks = expect_block(M, m, d)
        assert np.allclose(expect_diagonal(blocks), expect_diagonal(M))
        assert np.isclose(np.trace(blocks), np.trace(A))


def test_random_unitary_images_have_no_certificate(rng):
    for _ in range(50):
        V = random_unitary(rng, int(rng.integers(2, 6)))
        D = np.abs(V) ** 2
        assert isinstance(unistochastic_obstruction(D), Unknown)
        assert is_unistochastic_image(D, V)


def test_constant_diagonal_unitary_on_commuting_tuple():
    S = [np.diag([1.0, 2.0, 3.0]), np.diag([0.0, 0.0, 3.0])]
    W = constant_diagonal_unitary(S)
    assert W.unitarity_defect <= 1e-12
    assert np.allclose(np.diag(W.conjugate(S[0])), 2.0)
    assert np.allclose(np.diag(W.conjugate(S[1])), 1.0)


def test_constant_diagonal_unitary_rejects_non_commuting():
    S = [np.array([[0, 1], [1, 0]], dtype=complex), np.diag([1.0, -1.0])]
    with pytest.raises(NotCommuting):
        constant_diagonal_unitary(S)


def test_birkhoff_reconstruction_is_exact(rng):
    for _ in range(100):
        D = random_rational_ds(rng, int(rng.integers(2, 6)))
        decomposition = birkhoff_decompose(D)
        assert decomposition.exact
        assert decomposition.reconstruct() == D
        assert sum(w for w, _ in decomposition.terms) == 1
        d = len(D)
        assert len(decomposition.terms) <= (d - 1) ** 2 + 1


def test_birkhoff_float_matrix():
    D = np.array([[0.2, 0.8], [0.8, 0.2]])
    decomposition = birkhoff_decompose(D)
    assert np.allclose(np.array(decomposition.reconstruct(), dtype=float), D)


def test_check_doubly_stochastic_rejects():
    with pytest.raises(NotDoublyStochastic):
        check_doubly_stochastic([[F(1, 2), F(1, 2)], [F(1, 2), F(1, 3)]])
    with pytest.raises(NotSquare):
        check_doubly_stochastic([[F(1)], [F(1)]])


def test_arveson_matrix_has_overlap_certificate(arveson_witness):
    certificate = unistochastic_obstruction(arveson_witness)
    assert isinstance(certificate, OverlapCertificate)
    assert certificate.axis == "rows"
    assert certificate.pair == (0, 1)
    assert certificate.index == 1
    assert certificate.product == F(1, 4)


def test_unistochastic_matrix_has_no_certificate():
    D = [[F(1, 2), F(1, 2)], [F(1, 2), F(1, 2)]]
    assert isinstance(unistochastic_obstruction(D), Unknown)
    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert is_unistochastic_image(D, H)


def test_arveson_inflation_resolves_obstruction(rng, arveson_witness):
    m, U = inflate_rational_ds(arveson_witness)
    assert m == 2
    assert U.size == 6
    assert U.unitarity_defect <= 1e-12
    for _ in range(20):
        beta = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        assert inflation_residual(U.matrix, m, arveson_witness, beta) <= 1e-9


def test_inflation_needs_rationals():
    with pytest.raises(NotRational):
        inflate_rational_ds([[0.5, 0.5], [0.5, 0.5]])


def test_approximate_inflation_meets_eps(rng):
    a = 2 ** -0.5
    D = [[a, 1 - a], [1 - a, a]]
    inflation = inflate_approx_ds(D, 1e-2, rng=rng)
    assert inflation.bound <= 1e-2
    assert sum(inflation.counts) == inflation.m
    assert inflation.unitary.unitarity_defect <= 1e-10


def test_dilation_unitary_is_unitary_for_unitary_parts():
    ops = [np.eye(2), np.array([[0, 1], [1, 0]])]
    U = dilation_unitary([F(1, 2), F(1, 2)], ops)
    assert np.allclose(U.conj().T @ U, np.eye(4))


def test_dilation_block_expectation_averages_the_parts(rng):
    for _ in range(20):
        m, d = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        raw = [F(int(rng.integers(1, 10))) for _ in range(m)]
        weights = [w / sum(raw) for w in raw]
        ops = []
        for _ in range(m):
            X = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            ops.append(X / (np.linalg.norm(X, 2) + 0.5))
        H = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        B = H + H.conj().T
        U = dilation_unitary(weights, ops)
        lifted = np.kron(np.diag([float(w) for w in weights]), B)
        mixed = sum(float(w) * u @ B @ u.conj().T for w, u in zip(weights, ops))
        assert np.allclose(expect_block(U @ lifted @ U.conj().T, m, d), np.kron(np.eye(m), mixed) / m)
        gram = np.zeros((m * d, m * d), dtype=complex)
        for k, u in enumerate(ops):
            gram[k * d:(k + 1) * d, k * d:(k + 1) * d] = u.conj().T @ u
        assert np.abs(U.conj().T @ U - gram).max() <= 1e-10


def test_dilation_block_expectation_for_swap():
    ops = [np.eye(2), np.array([[0, 1], [1, 0]])]
    U = dilation_unitary([F(1, 2), F(1, 2)], ops)
    lifted = np.kron(np.diag([0.5, 0.5]), np.diag([1.0, 0.0]))
    assert np.allclose(expect_block(U @ lifted @ U.conj().T, 2, 2), np.eye(4) / 4)


def test_dilation_unitary_rejects_large_norm():
    with pytest.raises(NormTooLarge):
        dilation_unitary([F(1)], [2 * np.eye(2)])


def test_partial_isometry_check():
    A = np.diag([1.0, 0.0])
    B = np.diag([0.0, 1.0])
    assert partial_isometry_check(A, B)
    assert not partial_isometry_check(A, A)


def test_partial_isometry_check_on_random_splits(rng):
    for _ in range(30):
        n = int(rng.integers(2, 6))
        V, W = random_unitary(rng, n), random_unitary(rng, n)
        P = np.diag(rng.integers(0, 2, size=n).astype(float))
        A, B = V @ P @ W, V @ (np.eye(n) - P) @ W
        assert partial_isometry_check(A, B)
        assert not partial_isometry_check(A, A)


@pytest.mark.parametrize("a, m, distance, obstructed", [
    (F(1, 2), 2, F(0), False),
    (F(1, 3), 2, F(1, 3), True),
    ("2/5", 5, F(0), False),
])
def test_irrational_obstruction_exact(a, m, distance, obstructed):
    report = irrational_inflation_obstruction(a, m)
    assert report.distance == distance
    assert report.obstructed is obstructed


def test_irrational_obstruction_for_inverse_sqrt2():
    report = irrational_inflation_obstruction(2 ** -0.5, 10)
    assert report.obstructed
    assert abs(report.distance - 0.0711) < 1e-4


def test_irrational_obstruction_range():
    with pytest.raises(OutOfRange):
        irrational_inflation_obstruction(1.5, 2)
    with pytest.raises(OutOfRange):
        irrational_inflation_obstruction(0.5, 0)


def test_plan_matches_dense_conjugation():
    plan = ConjugationPlan(4)
    plan.rotate([0], [1], 0.6, 0.8)
    plan.fourier([1, 2, 3])
    plan.permute([3, 2, 1, 0])
    U = plan.materialize()
    assert U.unitarity_defect <= 1e-12
    R = np.eye(4, dtype=complex)
    R[[0, 1]] = np.array([[0.6, 0.8, 0, 0], [-0.8, 0.6, 0, 0]])
    F3 = np.eye(4, dtype=complex)
    F3[np.ix_([1, 2, 3], [1, 2, 3])] = fourier_unitary(3).matrix
    expected = permutation_matrix([3, 2, 1, 0]) @ F3 @ R
    assert np.allclose(U.matrix, expected)


def test_matrix_payloads():
    payload = MatrixPayload(rows=2, cols=2, re=[["1/2", "1/2"], ["1/2", "1/2"]])
    assert rational_matrix_from_payload(payload) == [[F(1, 2)] * 2] * 2
    M = matrix_from_payload(MatrixPayload(rows=1, cols=2, re=[[1, 0]], im=[[0, 1]]))
    assert M[0, 1] == 1j
    with pytest.raises(NotRational):
        rational_matrix_from_payload(MatrixPayload(rows=1, cols=1, re=[[0]], im=[[1]]))
    dense = matrix_to_payload(np.array([[1 + 2j]]))
    assert dense.re == [[1.0]] and dense.im == [[2.0]]
    exact = matrix_to_payload([[F(1, 3)]])
    assert exact.re == [["1/3"]] and exact.im is None
