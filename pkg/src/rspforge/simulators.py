"""Ideal-world attack translators for the five constructions.

Each simulator impersonates the protocol toward the receiver while holding
single-query access to the ideal resource it defends. Trajectory runners
mirror the numbered simulator steps literally, including the discard-then-
replace move in the trap protocol's simulator; algebraic shortcuts are left
to the exact averaging code in :mod:`rspforge.security`.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .groups import (
    Angle,
    CNOT,
    OperationGroup,
    PAULI_LABELS,
    haar_sample_1q,
    pauli_1q,
    phase_state,
)
from .groups import clifford_index_of
from .protocols import ProtocolSession, Transcript, protocol2_keys
from .qstate import (
    DensityMatrix,
    QuantumChannel,
    UnitaryOp,
    apply_unitary,
    embed_unitary,
    measure_branches_mat,
    measure_computational,
    partial_trace,
    tensor,
)
from .resources import IdealResource, StructuredClifford

SIM_RESOURCE_PAIRING = {
    "S1": "sp-rsp",
    "S2": "c-rsp",
    "S3": "rsp",
    "S4": "rsp-sn",
    "S5": "ro",
}


class SimulatorInstance:
    """Binds a simulator to its ideal resource; the query works exactly once."""

    def __init__(self, sim_id: str, bound_resource: IdealResource, rng):
        expected = SIM_RESOURCE_PAIRING.get(sim_id)
        if expected is None:
            raise ValueError(f"unknown simulator id {sim_id!r}")
        if bound_resource.kind != expected:
            raise ValueError(
                f"{sim_id} must bind a {expected!r} resource, got {bound_resource.kind!r}"
            )
        self.sim_id = sim_id
        self.bound_resource = bound_resource
        self.rng = rng
        self._used = False

    def query(self, **inputs) -> DensityMatrix:
        if self._used:
            raise RuntimeError(f"{self.sim_id} already spent its single query")
        self._used = True
        return self.bound_resource.query(**inputs)


# ---------------------------------------------------------------------------
# Simulator 1: flip, entangle, measure, correct


def simulator1_step(
    plus_theta: DensityMatrix,
    rho_in: DensityMatrix,
    rng: np.random.Generator,
) -> DensityMatrix:
    """One sampled pass of the emulation circuit (both registers 1 qubit)."""
    if plus_theta.num_qubits != 1 or rho_in.num_qubits != 1:
        raise ValueError("simulator1_step expects single-qubit registers")
    b_prime = int(rng.integers(2))
    joint = tensor(rho_in, plus_theta)
    if b_prime:
        joint = apply_unitary(joint, UnitaryOp(pauli_1q("X")), [0])
    joint = apply_unitary(joint, UnitaryOp(CNOT), [0, 1])
    dist = measure_computational(joint, [1])
    probs = np.array([o.probability for o in dist.outcomes])
    b = int(rng.choice(2, p=probs / probs.sum()))
    post = dist.post_state((b,))
    if b:
        post = apply_unitary(post, UnitaryOp(pauli_1q("X")), [0])
    return post


def simulator1_map_mat(
    theta: Angle, mat: np.ndarray, num_qubits: int, wire: int = 0
) -> np.ndarray:
    """Exact average of the emulation circuit acting on ``wire`` of ``mat``.

    Both hidden bits (the pre-flip and the measurement outcome) are summed
    over, so the result is the simulator's channel, linear in ``mat``.
    """
    k = num_qubits + 1
    target = num_qubits  # the appended phase-state wire
    plus = phase_state(theta)
    joint = np.kron(mat, np.outer(plus, plus.conj()))
    x_wire = embed_unitary(pauli_1q("X"), [wire], k)
    cnot = embed_unitary(CNOT, [wire, target], k)
    out = np.zeros_like(mat)
    for b_prime in range(2):
        cur = x_wire @ joint @ x_wire.conj().T if b_prime else joint
        cur = cnot @ cur @ cnot.conj().T
        for bits, block in measure_branches_mat(cur, [target], k):
            if bits[0]:
                xb = embed_unitary(pauli_1q("X"), [wire], num_qubits)
                block = xb @ block @ xb.conj().T
            out = out + 0.5 * block
    return out


def simulator1_channel(theta: Angle) -> QuantumChannel:
    """The simulator's averaged channel, Kraus operators read off the circuit."""
    plus = phase_state(theta).reshape(2, 1)
    kraus = []
    for b_prime in range(2):
        iso = CNOT @ np.kron(np.linalg.matrix_power(pauli_1q("X"), b_prime), plus)
        for b in range(2):
            row = np.zeros((1, 2), dtype=np.complex128)
            row[0, b] = 1.0
            k = np.kron(np.eye(2, dtype=np.complex128), row) @ iso
            if b:
                k = pauli_1q("X") @ k
            kraus.append(k * 2**-0.5)
    return QuantumChannel(kraus)


# ---------------------------------------------------------------------------
# Simulator 2: emulated trap round around the ideal Clifford state

ReplyFn = Callable[[DensityMatrix, np.random.Generator], tuple[tuple[int, ...], DensityMatrix]]


def measuring_reply(a_bits: Sequence[int]) -> ReplyFn:
    """Receiver that flips the trap wires by X^a, measures, keeps wire 0."""

    a = tuple(int(x) for x in a_bits)

    def reply(state: DensityMatrix, rng: np.random.Generator):
        n = state.num_qubits
        if len(a) != n - 1:
            raise ValueError("flip mask has wrong length")
        wires = list(range(1, n))
        for w, bit in zip(wires, a):
            if bit:
                state = apply_unitary(state, UnitaryOp(pauli_1q("X")), [w])
        dist = measure_computational(state, wires)
        probs = np.array([o.probability for o in dist.outcomes])
        pick = int(rng.choice(len(probs), p=probs / probs.sum()))
        outcome = dist.outcomes[pick].bits
        return outcome, dist.post_state(outcome)

    return reply


def honest_reply() -> ReplyFn:
    def reply(state: DensityMatrix, rng: np.random.Generator):
        return measuring_reply((0,) * (state.num_qubits - 1))(state, rng)

    return reply


def simulator2_run(
    n: int,
    ideal_state: DensityMatrix,
    rho_in: DensityMatrix,
    receiver_reply: ReplyFn | None,
    rng: np.random.Generator,
) -> Transcript:
    """All six simulator steps, with the receiver's reply supplied as a hook."""
    if ideal_state.num_qubits != 1:
        raise ValueError("the ideal qubit must be a single qubit")
    if rho_in.num_qubits != n:
        raise ValueError("receiver register must hold n qubits")
    session = ProtocolSession("P2", {"n": n, "world": "ideal"}, rng)
    d, r, q2, g = protocol2_keys(n, rng)

    # the structured form with trivial front layer is exactly U_g Z^d
    masked = StructuredClifford("I", _IDENTITY_CLIFFORD, (0,) * (n - 1), g, d)
    state = apply_unitary(rho_in, UnitaryOp(masked.matrix()), list(range(n)))
    rest = partial_trace(state, [0])
    state = tensor(ideal_state, rest)
    pad = np.kron(pauli_1q(q2), _x_string(r))
    state = apply_unitary(state, UnitaryOp(pad), list(range(n)))

    reply = receiver_reply or measuring_reply((0,) * (n - 1))
    r_prime, kept = reply(state, rng)
    session.record("receiver", ("r_prime", tuple(r_prime)))

    if tuple(r_prime) != r:
        session.record("sender", "abort")
        return session.finish(
            DensityMatrix.maximally_mixed(1),
            aborted=True,
            hidden={"d": d, "r": r, "q2": q2, "g": g, "padded_qubit": kept},
        )
    session.record("sender", ("key", q2))
    final = apply_unitary(kept, UnitaryOp(pauli_1q(q2)), [0])
    return session.finish(final, hidden={"d": d, "r": r, "q2": q2, "g": g})


_IDENTITY_CLIFFORD = clifford_index_of(np.eye(2, dtype=np.complex128))


def _x_string(bits: Sequence[int]) -> np.ndarray:
    m = np.ones((1, 1), dtype=np.complex128)
    x = pauli_1q("X")
    eye = np.eye(2, dtype=np.complex128)
    for b in bits:
        m = np.kron(m, x if b else eye)
    return m


# ---------------------------------------------------------------------------
# Simulator 3: two masks and a stitched correction


def simulator3_run(
    phi: DensityMatrix,
    rng: np.random.Generator,
    rho_in: DensityMatrix | None = None,
) -> Transcript:
    """Emit V1|phi>, rotate the returned qubit by Haar V2, send V3 = V1† V2†.

    ``rho_in`` is what the receiver feeds into the emulated remote-unitary
    box; None means the honest receiver, who loops the emitted qubit through
    and applies the correction, recovering |phi| exactly.
    """
    if phi.num_qubits != 1:
        raise ValueError("the ideal state must be one qubit")
    session = ProtocolSession("P3", {"world": "ideal"}, rng)
    v1 = haar_sample_1q(rng)
    fake = apply_unitary(phi, v1, [0])
    honest = rho_in is None
    held = fake if honest else rho_in
    v2 = haar_sample_1q(rng)
    held = apply_unitary(held, v2, [0])
    v3 = v1.mat.conj().T @ v2.mat.conj().T
    session.record("sender", ("u2", v3))
    if honest:
        held = apply_unitary(held, UnitaryOp(v3), [0])
    return session.finish(
        held, hidden={"v1": v1.mat, "v2": v2.mat, "fake_qubit": fake}
    )


# ---------------------------------------------------------------------------
# Simulator 4: dephase, read out, and swap in the selected state


def simulator4_run(
    rho_in: DensityMatrix,
    rsp_sn_access: SimulatorInstance | IdealResource,
    rng: np.random.Generator,
) -> Transcript:
    """Apply Z^d, measure wire 0, pull U|b> through the filtered interface."""
    session = ProtocolSession("P4", {"world": "ideal"}, rng)
    d = int(rng.integers(2))
    state = rho_in
    if d:
        state = apply_unitary(state, UnitaryOp(pauli_1q("Z")), [0])
    dist = measure_computational(state, [0])
    probs = np.array([o.probability for o in dist.outcomes])
    b = int(rng.choice(2, p=probs / probs.sum()))
    fresh = rsp_sn_access.query(b=b)
    if rho_in.num_qubits == 1:
        final = fresh
    else:
        rest = dist.post_state((b,))
        final = tensor(fresh, rest)
    return session.finish(final, hidden={"d": d, "b": b})


# ---------------------------------------------------------------------------
# Simulator 5: masking the honest slot of the client chain


def simulator5_run(
    group: OperationGroup,
    ro_access: SimulatorInstance | IdealResource,
    coalition_messages: dict[int, np.ndarray],
    client_count: int,
    honest_position: int,
    server_state: DensityMatrix,
    rng: np.random.Generator,
) -> Transcript:
    """Impersonate the honest client's slot and emit a masked correction.

    The announced values of the malicious clients before (after) the honest
    slot are undone (pre-empted) inside the slot, the ideal box applies the
    orchestrator's unitary, and the sampled mask becomes the correction. At
    honest_position 1 this is literally the mask-after-ideal-call simulator;
    the conjugations by the coalition's announcements make the same joint
    view work at any slot.
    """
    if not 1 <= honest_position <= client_count:
        raise ValueError("honest_position out of range")
    if honest_position in coalition_messages:
        raise ValueError("the honest slot cannot carry a coalition announcement")
    for j in range(1, client_count + 1):
        if j != honest_position and j not in coalition_messages:
            raise ValueError(f"missing announcement for malicious client {j}")
    announced = {
        j: np.asarray(m, dtype=np.complex128) for j, m in coalition_messages.items()
    }
    for j, m in announced.items():
        if not group.contains(m):
            raise ValueError(f"client {j} announcement is not a group element")

    session = ProtocolSession(
        "P5", {"group": group.descriptor, "world": "ideal"}, rng
    )
    for j in range(1, client_count + 1):
        if j != honest_position:
            session.record(
                f"client-{j}->orchestrator", ("announce", _label(group, announced[j]))
            )

    ell = group.sample(rng)
    before = [announced[j] for j in range(1, honest_position)]
    after = [announced[j] for j in range(honest_position + 1, client_count + 1)]
    wires = list(range(group.num_qubits))

    # coalition slots before the honest one apply their announced values
    state = server_state
    for a in before:
        state = apply_unitary(state, UnitaryOp(a), wires)
    # the impersonated slot: undo the prefix, one ideal call, mask, pre-empt suffix
    undo = _chain_dagger(before, group.num_qubits)
    state = apply_unitary(state, UnitaryOp(undo), wires)
    state = ro_access.query(rho=state)
    state = apply_unitary(state, UnitaryOp(ell.conj().T), wires)
    preempt = _chain_dagger(after, group.num_qubits)
    state = apply_unitary(state, UnitaryOp(preempt), wires)
    # remaining coalition slots
    for a in after:
        state = apply_unitary(state, UnitaryOp(a), wires)
    session.record("orchestrator", ("correction", _label(group, ell)))
    state = apply_unitary(state, UnitaryOp(ell), wires)

    slot_element = preempt @ ell.conj().T  # what the server experienced, sans the ideal U
    return session.finish(
        state,
        hidden={"ell": ell, "slot_prefix_undo": undo, "slot_suffix": preempt,
                "slot_element_after_ideal": slot_element},
    )


def _chain_dagger(mats: list[np.ndarray], num_qubits: int) -> np.ndarray:
    out = np.eye(2**num_qubits, dtype=np.complex128)
    for m in mats:
        out = out @ m.conj().T
    return out


def _label(group: OperationGroup, u: np.ndarray):
    return group.label_of(u) if group.is_finite else np.asarray(u)
