import numpy as np
import pytest

from rspforge.groups import ALL_ANGLES, Angle, clifford_1q_group, haar_unitary
from rspforge.qstate import (
    DensityMatrix,
    UnitaryOp,
    apply_unitary,
    trace_distance,
)
from rspforge.resources import c_rsp, resource_by_name, rr_d_average, rr_d_channel
from rspforge.simulators import (
    SIM_RESOURCE_PAIRING,
    SimulatorInstance,
    honest_reply,
    measuring_reply,
    simulator1_channel,
    simulator1_map_mat,
    simulator1_step,
    simulator2_run,
    simulator3_run,
    simulator4_run,
    simulator5_run,
)

rng = np.random.default_rng(53)


def fid(rho, vec):
    v = np.asarray(vec).ravel()
    return float((v.conj() @ rho.mat @ v).real)


def test_pairing_table():
    assert SIM_RESOURCE_PAIRING == {
        "S1": "sp-rsp", "S2": "c-rsp", "S3": "rsp", "S4": "rsp-sn", "S5": "ro",
    }


def test_simulator_instance_single_query():
    inst = SimulatorInstance("S1", resource_by_name("sp-rsp"), rng)
    inst.query(theta=Angle(0))
    with pytest.raises(RuntimeError):
        inst.query(theta=Angle(0))
    with pytest.raises(ValueError):
        SimulatorInstance("S1", resource_by_name("c-rsp"), rng)


@pytest.mark.parametrize("theta", ALL_ANGLES, ids=lambda a: f"k{a.k}")
def test_simulator1_channel_equals_averaged_box(theta):
    gap = np.abs(simulator1_channel(theta).choi()
                 - rr_d_channel(theta).choi()).max()
    assert gap < 1e-9


def test_simulator1_map_on_entangled_input():
    theta = Angle(6)
    raw = haar_unitary(8, rng)[:, 0]
    rho = DensityMatrix.from_statevector(raw[:4] / np.linalg.norm(raw[:4]))
    got = simulator1_map_mat(theta, rho.mat, 2, wire=0)
    want = rr_d_average(rho, theta, wire=0).mat
    assert np.abs(got - want).max() < 1e-12


def test_simulator1_step_statistics():
    theta = Angle(2)
    plus_theta = resource_by_name("sp-rsp").query(theta=theta)
    rho = DensityMatrix.computational_basis((0,))
    acc = np.zeros((2, 2), dtype=np.complex128)
    runs = 600
    r = np.random.default_rng(8)
    for _ in range(runs):
        acc += simulator1_step(plus_theta, rho, r).mat
    want = rr_d_average(rho, theta).mat
    assert np.abs(acc / runs - want).max() < 0.1


def test_simulator2_honest_reply_accepts():
    for n in (2, 3):
        c = int(rng.integers(24))
        ideal = c_rsp(c)
        rho_in = DensityMatrix.computational_basis((0,) * n)
        t = simulator2_run(n, ideal, rho_in, honest_reply(), rng)
        assert not t.aborted
        assert trace_distance(t.final_joint_state, ideal) < 1e-9


def test_simulator2_tampered_reply_accept_rate():
    # measuring reply with a tail flip accepts with p_2 = 2(2^n-1)^-1 at s=0+spike
    n = 2
    runs = 900
    r = np.random.default_rng(41)
    hits = 0
    for _ in range(runs):
        ideal = c_rsp(int(r.integers(24)))
        rho_in = DensityMatrix.computational_basis((0, 1))
        t = simulator2_run(n, ideal, rho_in, measuring_reply((1,)), r)
        hits += not t.aborted
    p = hits / runs
    want = 2 / 3
    assert abs(p - want) < 3 * np.sqrt(want * (1 - want) / runs)


def test_simulator3_honest_returns_phi():
    for _ in range(10):
        u = haar_unitary(2, rng)
        phi = DensityMatrix.from_statevector(u[:, 0])
        t = simulator3_run(phi, rng)
        assert trace_distance(t.final_joint_state, phi) < 1e-9
        # the correction message is a unitary the receiver can verify
        label, v3 = t.classical_messages[-1].payload
        assert label == "u2"
        assert np.allclose(v3 @ v3.conj().T, np.eye(2), atol=1e-12)


def test_simulator4_swaps_in_selected_state():
    u = haar_unitary(2, rng)
    access = SimulatorInstance("S4", resource_by_name("rsp-sn", u=u), rng)
    rho_in = DensityMatrix.computational_basis((1,))
    t = simulator4_run(rho_in, access, rng)
    b = t.hidden["b"]
    assert b == 1  # Z^d keeps |1> on the measured wire
    assert fid(t.final_joint_state, u[:, 1]) > 1 - 1e-12


def test_simulator5_matches_protocol_marginal():
    group = clifford_1q_group()
    u = group.sample(rng)
    server = DensityMatrix.computational_basis((0,))
    coalition = {2: group.sample(rng), 3: group.sample(rng)}
    access = SimulatorInstance("S5", resource_by_name("ro", group=group, u=u), rng)
    t = simulator5_run(group, access, coalition, 3, 1, server, rng)
    want = apply_unitary(server, UnitaryOp(u), [0])
    # the held state after all announced slots and the correction is u applied
    assert trace_distance(t.final_joint_state, want) < 1e-9


def test_simulator5_rejects_bad_slots():
    group = clifford_1q_group()
    u = group.sample(rng)
    server = DensityMatrix.computational_basis((0,))
    access = SimulatorInstance("S5", resource_by_name("ro", group=group, u=u), rng)
    with pytest.raises(ValueError):
        simulator5_run(group, access, {1: group.sample(rng)}, 3, 1, server, rng)
    with pytest.raises(ValueError):
        simulator5_run(group, access, {2: group.sample(rng)}, 3, 1, server, rng)
