"""Sessions for the five construction protocols.

Each ``protocolN_run`` plays one trajectory: hidden randomness is sampled
from the supplied generator, classical traffic is recorded in order, and the
receiver-held registers land in the transcript. Exact averaged comparisons
over the hidden randomness live in :mod:`rspforge.security`; the runners here
are the executable form of the numbered steps.

Transcript bookkeeping note: ``hidden`` holds sender/simulator internals
(pads, sampled group elements, measurement bits) so tests can introspect a
run. Nothing in ``hidden`` is receiver-visible. Messages addressed to the
orchestrator in the collaborative protocol are likewise private; they are
recorded with an explicit routing tag so visibility filters can drop them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .groups import (
    Angle,
    OperationGroup,
    PAULI_LABELS,
    SingleQubitClifford,
    enumerate_single_qubit_cliffords,
    haar_sample_1q,
    pauli_1q,
    sample_gf2_invertible,
)
from .qstate import (
    DensityMatrix,
    UnitaryOp,
    apply_unitary,
    measure_computational,
    tensor,
)
from .resources import (
    InterfaceEvent,
    StructuredClifford,
    c_rsp,
    m_rc,
    rr_d_trajectory,
)

PROTOCOL_IDS = ("P1", "P2", "P3", "P4", "P5")


@dataclass
class Transcript:
    protocol_id: str
    classical_messages: list[InterfaceEvent]
    final_joint_state: DensityMatrix | None
    aborted: bool = False
    hidden: dict = field(default_factory=dict)

    def messages_from(self, party: str) -> list[InterfaceEvent]:
        return [e for e in self.classical_messages if e.party == party]


class ProtocolSession:
    """Order-enforcing transcript builder for one protocol run."""

    def __init__(self, protocol_id: str, parameters: dict, rng: np.random.Generator):
        if protocol_id not in PROTOCOL_IDS:
            raise ValueError(f"unknown protocol id {protocol_id!r}")
        self.protocol_id = protocol_id
        self.parameters = parameters
        self.rng = rng
        self.events: list[InterfaceEvent] = []
        self._step = 0

    def record(self, party: str, payload: Any) -> None:
        self._step += 1
        self.events.append(InterfaceEvent(self._step, party, payload))

    def finish(
        self,
        final_state: DensityMatrix | None,
        aborted: bool = False,
        hidden: dict | None = None,
    ) -> Transcript:
        return Transcript(
            protocol_id=self.protocol_id,
            classical_messages=self.events,
            final_joint_state=final_state,
            aborted=aborted,
            hidden=hidden or {},
        )


# ---------------------------------------------------------------------------
# Protocol 1: single-plane preparation from the hidden-bit rotation


def protocol1_run(
    theta: Angle,
    rng: np.random.Generator,
    receiver_state: DensityMatrix | None = None,
) -> Transcript:
    """Honest receiver sends |+> through the rotation box and keeps the output.

    A malicious receiver is modeled by handing in ``receiver_state`` (wire 0
    goes through the box, extra wires ride along untouched).
    """
    session = ProtocolSession("P1", {"theta": theta}, rng)
    if receiver_state is None:
        plus = np.full(2, 2**-0.5)
        receiver_state = DensityMatrix.from_statevector(plus)
    b, out = rr_d_trajectory(receiver_state, theta, rng, wire=0)
    return session.finish(out, hidden={"b": b})


# ---------------------------------------------------------------------------
# Protocol 2: Clifford-state preparation with a trap register


def protocol2_keys(
    n: int, rng: np.random.Generator
) -> tuple[tuple[int, ...], tuple[int, ...], str, Any]:
    d = tuple(int(x) for x in rng.integers(2, size=n))
    r = tuple(int(x) for x in rng.integers(2, size=n - 1))
    p2 = PAULI_LABELS[int(rng.integers(4))]
    g = sample_gf2_invertible(n, rng)
    return d, r, p2, g


def protocol2_run(
    n: int,
    c: SingleQubitClifford | int,
    rng: np.random.Generator,
    attack: tuple[Sequence[int], Sequence[int]] | None = None,
) -> Transcript:
    """One run of the trap-based preparation of C|0>.

    ``attack=(s, a)``: the receiver feeds |s> into the n-qubit box, flips the
    returned trap wires by X^a, then measures and reports honestly. The
    honest receiver is (s, a) = (0, 0).
    """
    if not 2 <= n <= 5:
        raise ValueError("n must be between 2 and 5")
    c_index = c.index if isinstance(c, SingleQubitClifford) else int(c)
    session = ProtocolSession("P2", {"n": n, "c": c_index}, rng)

    d, r, p2, g = protocol2_keys(n, rng)
    c1 = StructuredClifford(p2, c_index, r, g, d)

    if attack is None:
        s = (0,) * n
        a = (0,) * (n - 1)
    else:
        s = tuple(int(x) for x in attack[0])
        a = tuple(int(x) for x in attack[1])
        if len(s) != n or len(a) != n - 1:
            raise ValueError("attack masks have wrong lengths")

    out = m_rc(c1, DensityMatrix.computational_basis(s))
    trap_wires = list(range(1, n))
    if any(a):
        flip = UnitaryOp(_x_mask_matrix(a))
        out = apply_unitary(out, flip, trap_wires)

    dist = measure_computational(out, trap_wires)
    r_prime = _sample_outcome(dist, rng)
    session.record("receiver", ("r_prime", r_prime))
    kept = dist.post_state(r_prime)

    if r_prime != r:
        session.record("sender", "abort")
        # receiver-held qubit averaged over the pad it will never learn
        return session.finish(
            DensityMatrix.maximally_mixed(1),
            aborted=True,
            hidden={"d": d, "r": r, "p2": p2, "g": g, "padded_qubit": kept},
        )

    session.record("sender", ("key", p2))
    final = apply_unitary(kept, UnitaryOp(pauli_1q(p2)), [0])
    return session.finish(final, hidden={"d": d, "r": r, "p2": p2, "g": g})


def _x_mask_matrix(bits: Sequence[int]) -> np.ndarray:
    m = np.ones((1, 1), dtype=np.complex128)
    x = pauli_1q("X")
    eye = np.eye(2, dtype=np.complex128)
    for b in bits:
        m = np.kron(m, x if b else eye)
    return m


def _sample_outcome(dist, rng: np.random.Generator) -> tuple[int, ...]:
    probs = np.array([o.probability for o in dist.outcomes])
    probs = probs / probs.sum()
    pick = rng.choice(len(probs), p=probs)
    return dist.outcomes[int(pick)].bits


# ---------------------------------------------------------------------------
# sequential composition plumbing


class CompositionError(Exception):
    pass


@dataclass
class LegOutcome:
    """What an inner leg hands to the protocol built on top of it."""

    state: DensityMatrix | None
    aborted: bool
    messages: list[InterfaceEvent]
    hidden: dict


@dataclass
class ConstructedResource:
    """A resource together with the protocol (or ideal box) realizing it."""

    kind: str
    runner: Callable[..., LegOutcome]


def c_rsp_ideal_leg() -> ConstructedResource:
    def run(c, rng, attack=None) -> LegOutcome:
        if attack is not None:
            raise CompositionError("the ideal box has no attack surface")
        return LegOutcome(c_rsp(c), False, [], {})

    return ConstructedResource("c-rsp", run)


def protocol2_leg(n: int) -> ConstructedResource:
    def run(c, rng, attack=None) -> LegOutcome:
        t = protocol2_run(n, c, rng, attack=attack)
        return LegOutcome(t.final_joint_state, t.aborted, t.classical_messages, t.hidden)

    return ConstructedResource("c-rsp", run)


class Protocol3UsingCRsp:
    """The arbitrary-state preparation protocol, generic over its first leg."""

    uses = "c-rsp"

    def run(
        self,
        leg: ConstructedResource,
        u: UnitaryOp | np.ndarray,
        rng: np.random.Generator,
        attack=None,
        receiver: tuple[np.ndarray, DensityMatrix] | None = None,
    ) -> Transcript:
        u_mat = u.mat if isinstance(u, UnitaryOp) else np.asarray(u, dtype=np.complex128)
        session = ProtocolSession("P3", {"u": u_mat}, rng)
        cliffords = enumerate_single_qubit_cliffords()
        c = cliffords[int(rng.integers(24))]
        inner = leg.runner(c, rng, attack=attack)
        session.events.extend(inner.messages)
        if inner.aborted:
            return session.finish(
                inner.state, aborted=True, hidden={"c": c.index, **inner.hidden}
            )
        qubit = inner.state

        if receiver is None:
            held = qubit
        else:
            u_d, aux = receiver
            held = apply_unitary(tensor(qubit, aux), UnitaryOp(u_d), [0, 1])

        u1 = haar_sample_1q(rng)
        held = apply_unitary(held, u1, [0])
        u2 = u_mat @ c.matrix.conj().T @ u1.mat.conj().T
        session.record("sender", ("u2", u2))

        if receiver is None:
            final = apply_unitary(held, UnitaryOp(u2), [0])
        else:
            final = held  # a malicious receiver decides itself what to do with u2
        return session.finish(
            final, hidden={"c": c.index, "u1": u1.mat, **inner.hidden}
        )


def compose_sequential(first: ConstructedResource, second) -> Callable[..., Transcript]:
    """Inline ``first``'s protocol as the resource leg of ``second``."""
    uses = getattr(second, "uses", None)
    if uses != first.kind:
        raise CompositionError(
            f"protocol expects a {uses!r} leg, got {first.kind!r}"
        )
    def runner(*args, **kwargs) -> Transcript:
        return second.run(first, *args, **kwargs)

    return runner


def protocol3_run(
    u: UnitaryOp | np.ndarray,
    rng: np.random.Generator,
    receiver: tuple[np.ndarray, DensityMatrix] | None = None,
) -> Transcript:
    return compose_sequential(c_rsp_ideal_leg(), Protocol3UsingCRsp())(
        u, rng, receiver=receiver
    )


def protocol2_then_3_run(
    n: int,
    u: UnitaryOp | np.ndarray,
    rng: np.random.Generator,
    attack: tuple[Sequence[int], Sequence[int]] | None = None,
) -> Transcript:
    """The composed preparation: the trap protocol feeds the correction leg."""
    return compose_sequential(protocol2_leg(n), Protocol3UsingCRsp())(
        u, rng, attack=attack
    )


# ---------------------------------------------------------------------------
# Protocol 4: basis-feeding preparation from the remote unitary alone


def protocol4_run(
    u: UnitaryOp | np.ndarray,
    rng: np.random.Generator,
    receiver_state: DensityMatrix | None = None,
) -> Transcript:
    u_mat = u.mat if isinstance(u, UnitaryOp) else np.asarray(u, dtype=np.complex128)
    session = ProtocolSession("P4", {"u": u_mat}, rng)
    if receiver_state is None:
        receiver_state = DensityMatrix.computational_basis((0,))
    d = int(rng.integers(2))
    z = pauli_1q("Z") if d else np.eye(2, dtype=np.complex128)
    out = apply_unitary(receiver_state, UnitaryOp(u_mat @ z), [0])
    return session.finish(out, hidden={"d": d})


# ---------------------------------------------------------------------------
# Protocol 5: collaborative remote operation


def protocol5_run(
    group: OperationGroup,
    u: np.ndarray,
    client_count: int,
    rng: np.random.Generator,
    honest_client: int = 1,
    coalition: dict[int, np.ndarray] | None = None,
    server_state: DensityMatrix | None = None,
) -> Transcript:
    """One run of the client-chain masking protocol.

    ``coalition`` maps client indices (1-based) to the announcements chosen
    by malicious clients; every other client samples from the group measure.
    ``honest_client`` must not appear among the coalition keys.
    """
    u = np.asarray(u, dtype=np.complex128)
    if not group.contains(u):
        raise ValueError("input unitary is not a group element")
    if not 1 <= honest_client <= client_count:
        raise ValueError("honest_client out of range")
    coalition = coalition or {}
    if honest_client in coalition:
        raise ValueError("the honest client cannot be in the coalition")
    for j, mat in coalition.items():
        if not 1 <= j <= client_count:
            raise ValueError(f"coalition index {j} out of range")
        if not group.contains(np.asarray(mat)):
            raise ValueError(f"client {j} announcement is not a group element")

    session = ProtocolSession(
        "P5", {"group": group.descriptor, "clients": client_count}, rng
    )
    if server_state is None:
        server_state = DensityMatrix.computational_basis((0,) * group.num_qubits)

    wires = list(range(group.num_qubits))
    elements = []
    state = server_state
    for j in range(1, client_count + 1):
        uj = np.asarray(coalition[j]) if j in coalition else group.sample(rng)
        elements.append(uj)
        session.record(f"client-{j}->orchestrator", ("announce", _describe(group, uj)))
    for j, uj in enumerate(elements, start=1):
        state = _ro_on_wires(group, uj, state, wires)
        session.record(f"client-{j}", ("ro-call", j))

    correction = u.copy()
    for uj in elements:
        correction = correction @ uj.conj().T
    session.record("orchestrator", ("correction", _describe(group, correction)))
    state = _ro_on_wires(group, correction, state, wires)
    return session.finish(
        state,
        hidden={"elements": [e for e in elements], "correction": correction},
    )


def _ro_on_wires(
    group: OperationGroup, u: np.ndarray, state: DensityMatrix, wires: list[int]
) -> DensityMatrix:
    if not group.contains(np.asarray(u)):
        raise ValueError("operator is not a member of the group")
    return apply_unitary(state, UnitaryOp(np.asarray(u, dtype=np.complex128)), wires)


def _describe(group: OperationGroup, u: np.ndarray) -> Any:
    if group.is_finite:
        return group.label_of(np.asarray(u))
    return np.asarray(u)
