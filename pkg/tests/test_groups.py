import numpy as np
import pytest

from rspforge.groups import (
    ALL_ANGLES,
    Angle,
    canonical_phase,
    channel_fingerprint,
    clifford_1q_group,
    clifford_index_of,
    clifford_twirl_channel,
    count_gf2_invertible,
    dephasing_twirl,
    enumerate_gf2_invertible,
    enumerate_single_qubit_cliffords,
    full_unitary_1q_group,
    gf2_linear_twirl,
    gf2_rank,
    group_by_name,
    haar_twirl_equals_clifford_twirl,
    haar_unitary,
    pauli_1q,
    pauli_probs_from_choi,
    permutation_unitary,
    phase_state,
    rotation_z,
    sample_gf2_invertible,
    x_and_z_rotations_group,
    z_rotations_group,
)
from rspforge.qstate import DensityMatrix, QuantumChannel, trace_distance

rng = np.random.default_rng(11)


def test_pauli_algebra():
    x, y, z = pauli_1q("X"), pauli_1q("Y"), pauli_1q("Z")
    assert np.allclose(x @ x, np.eye(2))
    assert np.allclose(x @ y, 1j * z)
    assert np.allclose(pauli_1q("I"), np.eye(2))
    with pytest.raises(KeyError):
        pauli_1q("W")


def test_angles_and_phase_states():
    assert len(ALL_ANGLES) == 8
    for k in range(8):
        theta = Angle(k)
        rz = rotation_z(theta).mat
        assert np.isclose(rz[1, 1], np.exp(1j * k * np.pi / 4))
        psi = phase_state(theta)
        assert np.isclose(abs(psi[0]) ** 2, 0.5)
        assert np.allclose(rz @ phase_state(Angle(0)), psi)
    with pytest.raises(ValueError):
        Angle(8)


def test_clifford_enumeration_count_and_closure():
    cliffords = enumerate_single_qubit_cliffords()
    assert len(cliffords) == 24
    prints = {channel_fingerprint(c.matrix) for c in cliffords}
    assert len(prints) == 24
    for a in cliffords[::5]:
        for b in cliffords[::7]:
            assert channel_fingerprint(a.matrix @ b.matrix) in prints


def test_clifford_index_roundtrip():
    cliffords = enumerate_single_qubit_cliffords()
    for c in cliffords:
        assert clifford_index_of(c.matrix) == c.index
        # global phase does not matter
        assert clifford_index_of(np.exp(0.3j) * c.matrix) == c.index
    t_gate = np.diag([1.0, np.exp(1j * np.pi / 4)])
    with pytest.raises(KeyError):
        clifford_index_of(t_gate)


def test_canonical_phase_idempotent():
    u = haar_unitary(2, rng)
    c = canonical_phase(u)
    assert np.allclose(canonical_phase(np.exp(1.7j) * u), c)


@pytest.mark.parametrize("n,count", [(1, 1), (2, 6), (3, 168)])
def test_gf2_enumeration_counts(n, count):
    maps = enumerate_gf2_invertible(n)
    assert len(maps) == count
    assert count_gf2_invertible(n) == count
    for g in maps:
        assert gf2_rank(g.mat) == n


def test_gf2_sampling_uniform_n2():
    maps = enumerate_gf2_invertible(2)
    keys = {g.mat.tobytes(): 0 for g in maps}
    draws = 1800
    r = np.random.default_rng(5)
    for _ in range(draws):
        keys[sample_gf2_invertible(2, r).mat.tobytes()] += 1
    expect = draws / 6
    chi2 = sum((c - expect) ** 2 / expect for c in keys.values())
    assert chi2 < 20.5  # 5 dof, p ~ 1e-3


def test_permutation_unitary_fixes_zero():
    g = sample_gf2_invertible(3, rng)
    u = permutation_unitary(g).mat
    assert np.allclose(u @ u.conj().T, np.eye(8))
    assert np.isclose(u[0, 0], 1.0)
    assert np.allclose(np.abs(u), np.abs(u) ** 2)  # 0/1 entries


def test_dephasing_twirl_pinches():
    plus = DensityMatrix.from_statevector(np.array([1, 1]) / np.sqrt(2))
    out = dephasing_twirl(plus, [0])
    assert np.allclose(out.mat, np.eye(2) / 2)


def test_gf2_linear_twirl_matches_enumeration():
    raw = haar_unitary(8, rng)[:, 0]
    rho = dephasing_twirl(DensityMatrix.from_statevector(raw), [0, 1])
    fast = gf2_linear_twirl(rho, [0, 1])
    acc = np.zeros((8, 8), dtype=np.complex128)
    for g in enumerate_gf2_invertible(2):
        u = np.kron(permutation_unitary(g).mat, np.eye(2))
        acc += u @ rho.mat @ u.conj().T
    assert trace_distance(fast, DensityMatrix(acc / 6)) < 1e-12


def test_gf2_linear_twirl_rejects_coherences():
    plus = DensityMatrix.from_statevector(np.array([1, 1]) / np.sqrt(2))
    with pytest.raises(ValueError):
        gf2_linear_twirl(plus, [0])


def _random_channel(r):
    u = haar_unitary(8, r).reshape(2, 4, 2, 4)
    return QuantumChannel([np.ascontiguousarray(u[:, e, :, 0]) for e in range(4)])


def test_clifford_twirl_is_depolarizing():
    for _ in range(5):
        probs = clifford_twirl_channel(_random_channel(rng))
        assert abs(probs.p_x - probs.p_y) < 1e-9
        assert abs(probs.p_x - probs.p_z) < 1e-9
        assert np.isclose(probs.p_i + 3 * probs.p_x, 1.0)


def test_pauli_probs_of_unitary_pauli():
    ch = QuantumChannel.from_unitary(pauli_1q("X"))
    probs = pauli_probs_from_choi(ch.choi())
    assert np.isclose(probs.p_x, 1.0) and np.isclose(probs.p_i, 0.0)


def test_haar_twirl_matches_clifford_twirl():
    assert haar_twirl_equals_clifford_twirl(_random_channel(rng), rng, samples=60)


def test_haar_unitary_is_unitary():
    for dim in (2, 4):
        u = haar_unitary(dim, rng)
        assert np.allclose(u @ u.conj().T, np.eye(dim), atol=1e-12)


def test_finite_groups():
    cliff = clifford_1q_group()
    assert cliff.is_finite and len(cliff.elements) == 24
    zrot = z_rotations_group()
    assert len(zrot.elements) == 8
    xz = x_and_z_rotations_group()
    assert len(xz.elements) == 16
    for group in (cliff, zrot, xz):
        group.validate_closure()
        g = group.sample(rng)
        assert group.contains(g)
        label = group.label_of(g)
        assert group.contains(group.elements[label] if isinstance(label, int)
                              else g)


def test_full_unitary_group():
    full = full_unitary_1q_group()
    assert not full.is_finite
    u = full.sample(rng)
    assert np.allclose(u @ u.conj().T, np.eye(2), atol=1e-12)
    assert full.contains(haar_unitary(2, rng))


def test_group_by_name():
    assert group_by_name("clifford-1q").is_finite
    with pytest.raises(KeyError):
        group_by_name("dihedral")
