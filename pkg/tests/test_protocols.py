import numpy as np
import pytest

from rspforge.groups import (
    ALL_ANGLES,
    clifford_1q_group,
    enumerate_single_qubit_cliffords,
    haar_unitary,
    phase_state,
    z_rotations_group,
)
from rspforge.protocols import (
    protocol1_run,
    protocol2_run,
    protocol2_then_3_run,
    protocol3_run,
    protocol4_run,
    protocol5_run,
)
from rspforge.qstate import (
    DensityMatrix,
    UnitaryOp,
    apply_unitary,
    trace_distance,
)

rng = np.random.default_rng(31)


def fid(rho: DensityMatrix, vec) -> float:
    v = np.asarray(vec).ravel()
    return float((v.conj() @ rho.mat @ v).real)


def test_protocol1_honest_all_angles():
    for theta in ALL_ANGLES:
        t = protocol1_run(theta, rng)
        assert not t.aborted
        assert fid(t.final_joint_state, phase_state(theta)) > 1 - 1e-12
        assert t.hidden["b"] in (0, 1)


def test_protocol1_entangled_receiver():
    bell = DensityMatrix.from_statevector(np.array([1, 0, 0, 1]) / np.sqrt(2))
    theta = ALL_ANGLES[3]
    t = protocol1_run(theta, rng, receiver_state=bell)
    b = t.hidden["b"]
    x = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    rz = np.diag([1.0, np.exp(1j * theta.k * np.pi / 4)])
    fix = rz @ np.linalg.matrix_power(x, b)
    want = apply_unitary(bell, UnitaryOp(fix), [0])
    assert trace_distance(t.final_joint_state, want) < 1e-12


def test_protocol2_honest_always_accepts():
    for _ in range(40):
        c = int(rng.integers(24))
        t = protocol2_run(2, c, rng)
        assert not t.aborted
        target = enumerate_single_qubit_cliffords()[c].matrix[:, 0]
        assert fid(t.final_joint_state, target) > 1 - 1e-12
    # transcript carries the reply and then the key release
    parties = [e.party for e in t.classical_messages]
    assert parties == ["receiver", "sender"]


def test_protocol2_bad_args():
    with pytest.raises(ValueError):
        protocol2_run(1, 0, rng)
    with pytest.raises(ValueError):
        protocol2_run(2, 0, rng, attack=((0, 1, 0), (0,)))


def test_protocol2_attack_accept_rate():
    # s with nonzero image, a = 0: accepts iff g(s) has zero tail,
    # one case out of 2^n - 1
    hits = 0
    runs = 900
    r = np.random.default_rng(77)
    for _ in range(runs):
        t = protocol2_run(2, 5, r, attack=((0, 1), (0,)))
        hits += not t.aborted
    p = hits / runs
    assert abs(p - 1 / 3) < 3 * np.sqrt((1 / 3) * (2 / 3) / runs)


def test_protocol2_abort_hands_out_mixed_qubit():
    r = np.random.default_rng(3)
    for _ in range(60):
        t = protocol2_run(2, 5, r, attack=((0, 1), (0,)))
        if t.aborted:
            assert np.allclose(t.final_joint_state.mat, np.eye(2) / 2)
            break
    else:
        raise AssertionError("attack never aborted in 60 runs")


def test_protocol3_honest():
    for _ in range(10):
        u = haar_unitary(2, rng)
        t = protocol3_run(u, rng)
        assert fid(t.final_joint_state, u[:, 0]) > 1 - 1e-12


def test_protocol2_then_3_honest():
    for n in (2, 3):
        u = haar_unitary(2, rng)
        t = protocol2_then_3_run(n, u, rng)
        assert not t.aborted
        assert fid(t.final_joint_state, u[:, 0]) > 1 - 1e-12


def test_protocol2_then_3_attack_aborts_sometimes():
    u = haar_unitary(2, rng)
    r = np.random.default_rng(9)
    outcomes = {True: 0, False: 0}
    for _ in range(40):
        t = protocol2_then_3_run(2, u, r, attack=((0, 1), (0,)))
        outcomes[t.aborted] += 1
    assert outcomes[True] > 0 and outcomes[False] > 0


def test_protocol4_honest():
    seen_d = set()
    for _ in range(30):
        u = haar_unitary(2, rng)
        t = protocol4_run(u, rng)
        seen_d.add(t.hidden["d"])
        assert fid(t.final_joint_state, u[:, 0]) > 1 - 1e-12
    assert seen_d == {0, 1}


@pytest.mark.parametrize("group_fn", [clifford_1q_group, z_rotations_group])
def test_protocol5_honest_net_effect(group_fn):
    group = group_fn()
    server = DensityMatrix.computational_basis((0,) * group.num_qubits)
    for clients in (2, 3):
        u = group.sample(rng)
        t = protocol5_run(group, u, clients, rng)
        want = apply_unitary(server, UnitaryOp(u), list(range(group.num_qubits)))
        assert trace_distance(t.final_joint_state, want) < 1e-9
        announcements = [e for e in t.classical_messages
                         if e.party.endswith("->orchestrator")]
        assert len(announcements) == clients


def test_protocol5_with_coalition_still_lands_on_u():
    group = clifford_1q_group()
    u = group.sample(rng)
    coalition = {2: group.sample(rng), 3: group.sample(rng)}
    server = DensityMatrix.computational_basis((0,))
    t = protocol5_run(group, u, 3, rng, honest_client=1, coalition=coalition)
    want = apply_unitary(server, UnitaryOp(u), [0])
    # the correction compensates whatever the coalition announced and applied
    assert trace_distance(t.final_joint_state, want) < 1e-9


def test_protocol5_rejects_bad_setups():
    group = clifford_1q_group()
    u = group.sample(rng)
    with pytest.raises(ValueError):
        protocol5_run(group, haar_unitary(2, rng), 3, rng)
    with pytest.raises(ValueError):
        protocol5_run(group, u, 3, rng, honest_client=4)
    with pytest.raises(ValueError):
        protocol5_run(group, u, 3, rng, honest_client=1,
                      coalition={1: group.sample(rng)})
