import numpy as np
import pytest

from zenolab.opalg import (
    I2, X, Y, Z, DimensionError, HilbertSpace, Superoperator, devectorize, eig_decompose,
    from_json_matrix, hermitize, ket, matrix_exp, matrix_log_psd, partial_trace, pauli_string,
    projector, random_density, random_unitary, replace_with_mixed, tensor, to_json_matrix,
    vectorize,
)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def test_pauli_algebra():
    for p in (X, Y, Z):
        assert np.allclose(p @ p, I2)
    assert np.allclose(X @ Y, 1j * Z)
    assert np.allclose(pauli_string("ZX"), np.kron(Z, X))


def test_tensor_examples():
    assert np.allclose(tensor(I2, I2), np.eye(4))
    zx = tensor(Z, X)
    assert zx[0, 1] == 1 and zx[2, 3] == -1
    assert np.allclose(tensor(X, I2) @ ket("00"), ket("10"))


def test_tensor_associative(rng):
    a, b, c = (rng.normal(size=(2, 2)) for _ in range(3))
    assert np.allclose(tensor(tensor(a, b), c), tensor(a, tensor(b, c)))
    assert tensor(a, b, c).shape == (8, 8)


def test_space_validation():
    assert HilbertSpace([2, 3]).total_dim == 6
    with pytest.raises(DimensionError):
        HilbertSpace([1, 2])
    with pytest.raises(DimensionError):
        HilbertSpace.qubits(7)
    assert HilbertSpace([2] * 7, cap=128).total_dim == 128


def test_partial_trace_examples(rng):
    r, s = random_density(2, rng), random_density(4, rng)
    assert np.allclose(partial_trace(np.kron(r, s), [2, 4], [0]), r)
    bell = projector((ket("00") + ket("11")) / np.sqrt(2))
    assert np.allclose(partial_trace(bell, [2, 2], [1]), I2 / 2)
    p = projector(ket("0000"))
    assert np.allclose(partial_trace(p, [2] * 4, [1, 2, 3]), projector(ket("000")))
    assert np.allclose(partial_trace(s, [2, 2], [0, 1]), s)


def test_partial_trace_positive_and_trace_preserving(rng):
    for _ in range(10):
        rho = random_density(8, rng)
        red = partial_trace(rho, [2, 2, 2], [0, 2])
        assert abs(np.trace(red) - 1) < 1e-12
        assert np.linalg.eigvalsh(red).min() > -1e-12


def test_partial_trace_rejects_bad_dims():
    with pytest.raises(DimensionError):
        partial_trace(np.eye(4), [2, 3], [0])


def test_replace_with_mixed():
    rho = projector(ket("01"))
    out = replace_with_mixed(rho, [2, 2], [0])
    assert np.allclose(out, np.kron(I2 / 2, projector(ket("1"))))


def test_matrix_exp_examples():
    assert np.allclose(matrix_exp(np.zeros((3, 3))), np.eye(3))
    assert np.allclose(matrix_exp(np.diag([1.0, -2.0])), np.diag(np.exp([1.0, -2.0])))


def test_matrix_exp_depolarizing_semigroup(rng):
    sp = HilbertSpace([2])
    l_dep = Superoperator.from_function(lambda r: r - np.trace(r) * I2 / 2, sp)
    rho = random_density(2, rng)
    for t in (0.1, 1.0, 3.0):
        out = devectorize(matrix_exp(-t * l_dep.matrix) @ vectorize(rho))
        assert np.allclose(out, np.exp(-t) * rho + (1 - np.exp(-t)) * I2 / 2, atol=1e-12)


def test_matrix_exp_non_normal_matches_series():
    m = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.allclose(matrix_exp(m), [[1, 1], [0, 1]])


def test_matrix_exp_commuting_sum(rng):
    u = random_unitary(4, rng)
    a = u @ np.diag(rng.normal(size=4)) @ u.conj().T
    b = u @ np.diag(rng.normal(size=4)) @ u.conj().T
    assert np.linalg.norm(a @ b - b @ a) < 1e-12
    assert np.allclose(matrix_exp(a + b), matrix_exp(a) @ matrix_exp(b), atol=1e-10)


def test_matrix_exp_overflow():
    with pytest.raises(OverflowError):
        matrix_exp(np.array([[1e4, 1.0], [0.0, 0.0]]))


def test_matrix_log_psd(rng):
    assert np.allclose(matrix_log_psd(np.eye(2)), 0)
    assert np.allclose(matrix_log_psd(np.diag([np.e, 1.0])), np.diag([1.0, 0.0]))
    rho = random_density(4, rng)
    assert np.allclose(matrix_exp(matrix_log_psd(rho)), rho, atol=1e-10)


def test_eig_decompose_examples():
    assert np.allclose(np.sort(eig_decompose(np.diag([1.0, 2.0, 3.0])).values.real), [1, 2, 3])
    assert np.allclose(np.sort(eig_decompose(X).values.real), [-1, 1])
    sp = HilbertSpace([2, 2])
    zz = tensor(Z, I2)
    deph = Superoperator.identity(sp) - Superoperator.conjugation(zz, sp)
    vals = np.sort(eig_decompose(deph.matrix).values.real)
    assert np.allclose(vals, [0] * 8 + [2] * 8)


def test_vectorization(rng):
    assert np.allclose(vectorize(I2), [1, 0, 0, 1])
    r = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.array_equal(devectorize(vectorize(r)), r)
    for _ in range(5):
        a, b, r = (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(3))
        assert np.allclose(vectorize(a @ r @ b), np.kron(b.T, a) @ vectorize(r), atol=1e-12)


def test_superoperator_algebra(rng):
    sp = HilbertSpace([2])
    u = random_unitary(2, rng)
    c = Superoperator.conjugation(u, sp)
    rho = random_density(2, rng)
    assert np.allclose(c(rho), u @ rho @ u.conj().T)
    assert c.is_cptp()
    assert np.allclose((c @ c.adjoint()).matrix, np.eye(4), atol=1e-12)
    assert np.allclose(c.power(3)(rho), c(c(c(rho))))
    assert np.allclose(c.choi().trace(), 1)
    back = Superoperator.from_choi(c.choi(), sp)
    assert np.allclose(back.matrix, c.matrix)
    k = Superoperator.from_kraus([np.sqrt(0.5) * I2, np.sqrt(0.5) * Z], sp)
    assert np.allclose(k(rho), 0.5 * (rho + Z @ rho @ Z))


def test_superoperator_tensor(rng):
    sp = HilbertSpace([2])
    a = Superoperator.conjugation(random_unitary(2, rng), sp)
    b = Superoperator.conjugation(random_unitary(2, rng), sp)
    r1, r2 = random_density(2, rng), random_density(2, rng)
    assert np.allclose(a.tensor(b)(np.kron(r1, r2)), np.kron(a(r1), b(r2)))


def test_superoperator_is_read_only():
    s = Superoperator.identity(HilbertSpace([2]))
    with pytest.raises(ValueError):
        s.matrix[0, 0] = 5


def test_not_cp_detected():
    sp = HilbertSpace([2])
    transpose = Superoperator.from_function(lambda r: r.T, sp)
    assert transpose.is_trace_preserving()
    assert not transpose.is_completely_positive()


def test_json_round_trip(rng):
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    back, dims = from_json_matrix(to_json_matrix(m))
    assert np.array_equal(back, m) and dims == [3]
    with pytest.raises(ValueError):
        from_json_matrix({"re": [[1.0]]} | {"im": [[1.0, 2.0]]})


def test_hermitize():
    m = np.array([[1, 2j], [0, 1]])
    h = hermitize(m)
    assert np.allclose(h, h.conj().T)
