import numpy as np
import pytest

from lambdacav.qops import (
    FockTruncation,
    Operator,
    annihilation,
    atomic_sigma,
    dagger,
    expectation,
    identity,
    tensor,
)


def test_annihilation_lowest_truncation():
    a = annihilation(FockTruncation(1))
    assert np.array_equal(a.toarray(), np.array([[0, 1], [0, 0]], dtype=complex))


def test_annihilation_sqrt_rule():
    a = annihilation(FockTruncation(2))
    assert a.toarray()[1, 2] == pytest.approx(np.sqrt(2.0), abs=0.0)
    assert a.toarray()[0, 1] == 1.0


def test_number_operator_diagonal():
    a = annihilation(FockTruncation(3))
    number = dagger(a) @ a
    assert np.allclose(np.diag(number.toarray()), [0, 1, 2, 3], rtol=1e-15, atol=0.0)


def test_truncation_requires_two_levels():
    with pytest.raises(ValueError):
        FockTruncation(0)


def test_sigma_single_entry():
    s31 = atomic_sigma(3, 1)
    m = s31.toarray()
    assert m[2, 0] == 1.0
    assert np.count_nonzero(m) == 1


def test_sigma_projector():
    s22 = atomic_sigma(2, 2)
    m = s22.toarray()
    assert m[1, 1] == 1.0
    assert np.count_nonzero(m) == 1


def test_sigma_product_identity():
    lhs = atomic_sigma(1, 3) @ atomic_sigma(3, 1)
    assert np.array_equal(lhs.toarray(), atomic_sigma(1, 1).toarray())


@pytest.mark.parametrize("i,j", [(0, 1), (1, 4), (4, 4), (-1, 2)])
def test_sigma_rejects_bad_levels(i, j):
    with pytest.raises(ValueError):
        atomic_sigma(i, j)


def test_tensor_identities():
    assert np.array_equal(tensor(identity(3), identity(2)).toarray(), np.eye(6, dtype=complex))


def test_tensor_block_structure():
    # sigma_33 (x) I acts as sigma_33 on every Fock sector
    trunc = FockTruncation(2)
    op = tensor(atomic_sigma(3, 3), identity(trunc.levels))
    m = op.toarray()
    expected = np.zeros((9, 9), dtype=complex)
    for k in range(3):
        expected[6 + k, 6 + k] = 1.0
    assert np.array_equal(m, expected)


def test_tensor_single_matrix_element():
    # (sigma_31 (x) a) |1, 1_F> = |3, 0_F>
    trunc = FockTruncation(1)
    op = tensor(atomic_sigma(3, 1), annihilation(trunc))
    ket = np.zeros(6, dtype=complex)
    ket[0 * 2 + 1] = 1.0  # atom |1>, one photon
    out = op.mat @ ket
    expected = np.zeros(6, dtype=complex)
    expected[2 * 2 + 0] = 1.0  # atom |3>, vacuum
    assert np.array_equal(out, expected)


def test_tensor_associative_on_integer_weights():
    a = atomic_sigma(1, 2) + 2.0 * atomic_sigma(3, 3)
    b = identity(2)
    c = atomic_sigma(2, 1)
    left = tensor(tensor(a, b), c).toarray()
    right = tensor(a, tensor(b, c)).toarray()
    assert np.array_equal(left, right)


def test_dagger_is_creation():
    trunc = FockTruncation(3)
    ad = dagger(annihilation(trunc)).toarray()
    for n in range(3):
        assert ad[n + 1, n] == pytest.approx(np.sqrt(n + 1.0), abs=0.0)


def test_dagger_involution():
    op = Operator(np.array([[1, 2j], [0, -1 + 1j]]))
    assert np.array_equal(dagger(dagger(op)).toarray(), op.toarray())


def test_dagger_sigma():
    assert np.array_equal(dagger(atomic_sigma(3, 1)).toarray(), atomic_sigma(1, 3).toarray())


def test_commutator_truncation_artifact():
    # [a, a'] = I except the top Fock level, whose diagonal entry is -N;
    # sqrt(n) products reproduce the integers only to ~n ulp, so the
    # tolerance scales with the truncation while staying at rounding level
    for n_max in (1, 2, 3, 7, 20):
        a = annihilation(FockTruncation(n_max))
        comm = (a @ dagger(a) - dagger(a) @ a).toarray()
        expected = np.diag([1.0] * n_max + [-float(n_max)])
        assert np.allclose(comm, expected, rtol=0.0, atol=2e-15 * (n_max + 1))


def _fock_projector(dim, atom_level, fock, levels):
    rho = np.zeros((dim, dim), dtype=complex)
    idx = (atom_level - 1) * levels + fock
    rho[idx, idx] = 1.0
    return rho


def test_expectation_vacuum():
    trunc = FockTruncation(2)
    a = tensor(identity(3), annihilation(trunc))
    rho = _fock_projector(9, 1, 0, trunc.levels)
    assert expectation(rho, dagger(a) @ a) == 0.0


def test_expectation_fock_state():
    trunc = FockTruncation(2)
    a = tensor(identity(3), annihilation(trunc))
    rho = _fock_projector(9, 1, 1, trunc.levels)
    assert expectation(rho, dagger(a) @ a) == pytest.approx(1.0, abs=1e-15)


def test_expectation_identity_normalization():
    rng = np.random.default_rng(7)
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    assert expectation(rho, identity(6)) == pytest.approx(1.0, abs=1e-12)


def test_expectation_linear_and_conjugate_symmetric():
    rng = np.random.default_rng(11)
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    rho = m @ m.conj().T
    rho /= np.trace(rho)
    a = Operator(rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
    b = Operator(rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))
    lhs = expectation(rho, Operator(2.0 * a.toarray() + 3.0 * b.toarray()))
    rhs = 2.0 * expectation(rho, a) + 3.0 * expectation(rho, b)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert expectation(rho, dagger(a)) == pytest.approx(np.conj(expectation(rho, a)), rel=1e-12)


def test_expectation_dimension_mismatch():
    with pytest.raises(ValueError):
        expectation(np.eye(4), identity(6))


def test_operator_drops_structural_zeros():
    m = np.array([[0.0, 1.0], [0.0, 0.0]])
    op = Operator(m) - Operator(m)
    assert op.nnz == 0
