import numpy as np
import pytest

from rspforge.qstate import (
    DensityMatrix,
    QuantumChannel,
    UnitaryOp,
    apply_unitary,
    apply_unitary_mat,
    bits_to_index,
    choi_of_map,
    conjugate_mat,
    embed_unitary,
    index_to_bits,
    insert_qubit_mat,
    measure_branches_mat,
    measure_computational,
    partial_trace,
    partial_trace_mat,
    tensor,
    trace_distance,
    trace_distance_mat,
)

X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Z = np.diag([1.0, -1.0]).astype(np.complex128)
H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)

rng = np.random.default_rng(42)


def rand_state(k):
    v = rng.normal(size=2**k) + 1j * rng.normal(size=2**k)
    return DensityMatrix.from_statevector(v / np.linalg.norm(v))


def test_bit_indexing_roundtrip():
    for idx in range(16):
        assert bits_to_index(index_to_bits(idx, 4)) == idx
    assert bits_to_index((1, 0)) == 2  # wire 0 is the most significant bit


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 0.9], [0.9, 0.5]])).validate()  # not PSD
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(2)).validate()  # trace 2
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(3) / 3)  # not a qubit register
    rand_state(2).validate()


def test_basis_and_mixed_constructors():
    rho = DensityMatrix.computational_basis((1, 0))
    assert rho.num_qubits == 2
    assert rho.mat[2, 2] == 1.0
    mm = DensityMatrix.maximally_mixed(2)
    assert np.allclose(mm.mat, np.eye(4) / 4)


def test_apply_unitary_msb_convention():
    rho = DensityMatrix.computational_basis((0, 0))
    out = apply_unitary(rho, UnitaryOp(X), [0])
    assert np.isclose(out.mat[2, 2], 1.0)  # |10>
    out = apply_unitary(rho, UnitaryOp(X), [1])
    assert np.isclose(out.mat[1, 1], 1.0)  # |01>


def test_embed_unitary_matches_kron():
    u = H
    full = embed_unitary(u, [1], 2)
    assert np.allclose(full, np.kron(np.eye(2), u))
    full = embed_unitary(u, [0], 2)
    assert np.allclose(full, np.kron(u, np.eye(2)))


def test_apply_unitary_mat_random_wire_pairs():
    for _ in range(5):
        q = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        u, _ = np.linalg.qr(q)
        rho = rand_state(3).mat
        got = apply_unitary_mat(rho, u, [2, 0], 3)
        want = conjugate_mat(rho, embed_unitary(u, [2, 0], 3))
        assert np.allclose(got, want)


def test_partial_trace_bell():
    bell = DensityMatrix.from_statevector(np.array([1, 0, 0, 1]) / np.sqrt(2))
    for wire in (0, 1):
        red = partial_trace(bell, [wire])
        assert np.allclose(red.mat, np.eye(2) / 2)


def test_partial_trace_product():
    a, b = rand_state(1), rand_state(2)
    joint = tensor(a, b)
    assert np.allclose(partial_trace(joint, [1, 2]).mat, a.mat, atol=1e-12)
    assert np.allclose(partial_trace_mat(joint.mat, [0], 3), b.mat, atol=1e-12)


def test_measure_branches_partition():
    rho = rand_state(3)
    branches = measure_branches_mat(rho.mat, [1], 3)
    assert sorted(bits for bits, _ in branches) == [(0,), (1,)]
    total = sum(np.trace(block).real for _, block in branches)
    assert np.isclose(total, 1.0)
    # reassembling with the measured wire reinserted gives the pinched state
    basis = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
    rebuilt = sum(
        insert_qubit_mat(block, basis[bits[0]], 1, 2) for bits, block in branches
    )
    assert np.isclose(np.trace(rebuilt).real, 1.0)
    assert np.allclose(partial_trace_mat(rebuilt, [1], 3),
                       partial_trace_mat(rho.mat, [1], 3))


def test_measure_computational_plus_state():
    plus = DensityMatrix.from_statevector(np.array([1, 1]) / np.sqrt(2))
    joint = tensor(plus, DensityMatrix.computational_basis((0,)))
    dist = measure_computational(joint, [0])
    assert np.isclose(dist.probability((0,)), 0.5)
    assert np.isclose(dist.probability((1,)), 0.5)
    post = dist.post_state((1,))
    assert np.isclose(post.mat[0, 0], 1.0)


def test_trace_distance_extremes():
    zero = DensityMatrix.computational_basis((0,))
    one = DensityMatrix.computational_basis((1,))
    assert np.isclose(trace_distance(zero, one), 1.0)
    assert trace_distance(zero, zero) == 0.0
    plus = DensityMatrix.from_statevector(np.array([1, 1]) / np.sqrt(2))
    # pure-state distance sqrt(1 - |<a|b>|^2)
    assert np.isclose(trace_distance(zero, plus), np.sqrt(0.5))


def test_trace_distance_unitary_invariance():
    a, b = rand_state(2), rand_state(2)
    q = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    u, _ = np.linalg.qr(q)
    d0 = trace_distance_mat(a.mat, b.mat)
    d1 = trace_distance_mat(conjugate_mat(a.mat, u), conjugate_mat(b.mat, u))
    assert np.isclose(d0, d1)


def test_channel_kraus_validation():
    with pytest.raises(ValueError):
        QuantumChannel([X / 2])  # not trace preserving
    ch = QuantumChannel.from_unitary(H)
    rho = DensityMatrix.computational_basis((0,))
    assert np.allclose(ch.apply_mat(rho.mat), conjugate_mat(rho.mat, H))


def test_depolarizing_fixed_point_and_contraction():
    ch = QuantumChannel.depolarizing(0.3)
    mm = np.eye(2) / 2
    assert np.allclose(ch.apply_mat(mm), mm)
    zero = DensityMatrix.computational_basis((0,)).mat
    out = ch.apply_mat(zero)
    assert trace_distance_mat(out, mm) < trace_distance_mat(zero, mm)


def test_choi_of_map_matches_channel_choi():
    k = [H @ np.diag([1, 1j]).astype(np.complex128) / np.sqrt(2),
         X @ np.diag([1, -1]).astype(np.complex128) / np.sqrt(2)]
    ch = QuantumChannel(k)
    assert np.allclose(choi_of_map(ch.apply_mat, 1), ch.choi())


def test_choi_trace_is_input_dim():
    ch = QuantumChannel.from_unitary_mixture([(0.5, X), (0.5, Z)])
    assert np.isclose(np.trace(ch.choi()).real, 2.0)


def test_conjugated_channel():
    ch = QuantumChannel.depolarizing(0.2)
    rot = ch.conjugated(H)
    rho = rand_state(1).mat
    want = conjugate_mat(ch.apply_mat(conjugate_mat(rho, H)), H.conj().T)
    assert np.allclose(rot.apply_mat(rho), want)
