"""Ideal functionalities for remote state preparation and remote operations.

Each resource is a pure function from declared inputs to an output state,
plus trajectory variants where hidden internal randomness matters. Dimension
preconditions are enforced at every boundary; the assumption that parties
send registers of the agreed size is made explicit here rather than left
implicit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .groups import (
    ALL_ANGLES,
    Angle,
    GF2InvertibleMap,
    OperationGroup,
    PAULI_LABELS,
    PauliOp,
    SingleQubitClifford,
    enumerate_single_qubit_cliffords,
    pauli_1q,
    permutation_unitary,
    phase_state,
    rotation_z,
)
from .qstate import (
    ATOL,
    DensityMatrix,
    QuantumChannel,
    UnitaryOp,
    apply_unitary,
    index_to_bits,
    mats_close,
)


@dataclass(frozen=True)
class InterfaceEvent:
    """One classical message or register hand-off in a session transcript."""

    step: int
    party: str
    payload: Any


def _require_qubits(rho: DensityMatrix, k: int, what: str) -> None:
    if rho.num_qubits != k:
        raise ValueError(f"{what} must be {k} qubit(s), got {rho.num_qubits}")


# ---------------------------------------------------------------------------
# state-preparation resources


def sp_rsp(theta: Angle) -> DensityMatrix:
    """Sends the phase state for ``theta``."""
    return DensityMatrix.from_statevector(phase_state(theta))


def c_rsp(c: SingleQubitClifford | int) -> DensityMatrix:
    """Sends C|0> for a single-qubit Clifford C."""
    if isinstance(c, int):
        c = enumerate_single_qubit_cliffords()[c]
    return DensityMatrix.from_statevector(c.matrix[:, 0])


def rsp(u: UnitaryOp | np.ndarray) -> DensityMatrix:
    """Sends U|0> for an arbitrary single-qubit unitary U."""
    mat = u.mat if isinstance(u, UnitaryOp) else np.asarray(u, dtype=np.complex128)
    u_op = UnitaryOp(mat)
    if u_op.num_qubits != 1:
        raise ValueError("rsp expects a single-qubit unitary")
    return DensityMatrix.from_statevector(u_op.mat[:, 0])


def rsp_sn(u: UnitaryOp | np.ndarray, b: int = 0) -> DensityMatrix:
    """Sends U|b>. The bit b sits on a filtered interface; honest runs fix b=0."""
    mat = u.mat if isinstance(u, UnitaryOp) else np.asarray(u, dtype=np.complex128)
    u_op = UnitaryOp(mat)
    if u_op.num_qubits != 1:
        raise ValueError("rsp_sn expects a single-qubit unitary")
    if b not in (0, 1):
        raise ValueError("b must be a bit")
    return DensityMatrix.from_statevector(u_op.mat[:, b])


# ---------------------------------------------------------------------------
# remote-operation resources


def rr_d_channel(theta: Angle) -> QuantumChannel:
    """The averaged channel of the hidden-bit remote rotation.

    rho -> (1/2) sum_b R_Z(theta) X^b rho X^b R_Z(theta)^dag.
    """
    rz = rotation_z(theta).mat
    x = pauli_1q("X")
    return QuantumChannel.from_unitary_mixture([(0.5, rz), (0.5, rz @ x)])


def rr_d_average(rho: DensityMatrix, theta: Angle, wire: int = 0) -> DensityMatrix:
    """Exact two-branch average of the remote rotation on one wire of ``rho``."""
    rz = rotation_z(theta).mat
    x = pauli_1q("X")
    half = 0.5 * apply_unitary(rho, UnitaryOp(rz), [wire]).mat
    half = half + 0.5 * apply_unitary(rho, UnitaryOp(rz @ x), [wire]).mat
    return DensityMatrix(half)


def rr_d_trajectory(
    rho: DensityMatrix, theta: Angle, rng: np.random.Generator, wire: int = 0
) -> tuple[int, DensityMatrix]:
    """One sampled execution; the bit is returned for the harness only.

    The receiver-side transcript never carries it.
    """
    _require_wire(rho, wire)
    b = int(rng.integers(2))
    rz = rotation_z(theta).mat
    op = rz @ pauli_1q("X") if b else rz
    return b, apply_unitary(rho, UnitaryOp(op), [wire])


def _require_wire(rho: DensityMatrix, wire: int) -> None:
    if not 0 <= wire < rho.num_qubits:
        raise ValueError(f"wire {wire} out of range for {rho.num_qubits} qubits")


def ru(u: UnitaryOp | np.ndarray, rho: DensityMatrix) -> DensityMatrix:
    """Applies a sender-chosen single-qubit unitary to the receiver's qubit."""
    mat = u.mat if isinstance(u, UnitaryOp) else np.asarray(u, dtype=np.complex128)
    u_op = UnitaryOp(mat)
    if u_op.num_qubits != 1:
        raise ValueError("ru expects a single-qubit unitary")
    _require_qubits(rho, 1, "ru input state")
    return apply_unitary(rho, u_op, [0])


def ro(group: OperationGroup, u: np.ndarray, rho: DensityMatrix) -> DensityMatrix:
    """Applies ``u`` to the receiver's state, after checking group membership."""
    u = np.asarray(u, dtype=np.complex128)
    if not group.contains(u):
        raise ValueError(f"operator is not a member of group {group.descriptor!r}")
    _require_qubits(rho, group.num_qubits, "ro input state")
    return apply_unitary(rho, UnitaryOp(u), list(range(group.num_qubits)))


# ---------------------------------------------------------------------------
# the structured multi-qubit Clifford and M-RC


@dataclass(frozen=True)
class StructuredClifford:
    """n-qubit Clifford of the form (P C (x) X^r) U_g Z^d.

    P and C act on the first qubit, X^r on the remaining n-1, U_g permutes
    the computational basis by an invertible GF(2) map, and Z^d dephases.
    This is the only structured family the protocols need; anything else
    goes through the explicit-matrix path of :func:`m_rc`.
    """

    pauli_label: str
    clifford_index: int
    r_bits: tuple[int, ...]
    g: GF2InvertibleMap
    d_bits: tuple[int, ...]

    def __post_init__(self):
        if self.pauli_label not in PAULI_LABELS:
            raise ValueError(f"unknown Pauli label {self.pauli_label!r}")
        if not 0 <= self.clifford_index < 24:
            raise ValueError("clifford_index out of range")
        n = self.g.n
        if len(self.d_bits) != n or len(self.r_bits) != n - 1:
            raise ValueError("mask lengths inconsistent with g")
        if any(b not in (0, 1) for b in self.r_bits + self.d_bits):
            raise ValueError("masks must be bits")

    @property
    def n(self) -> int:
        return self.g.n

    def matrix(self) -> np.ndarray:
        cliff = enumerate_single_qubit_cliffords()[self.clifford_index].matrix
        front = np.kron(
            pauli_1q(self.pauli_label) @ cliff,
            PauliOp.x_mask(self.r_bits).matrix() if self.n > 1 else np.ones((1, 1)),
        )
        ug = permutation_unitary(self.g).mat
        zd = PauliOp.z_mask(self.d_bits).matrix()
        return front @ ug @ zd


def _phased_pauli_decompose(v: np.ndarray, atol: float = ATOL):
    """Write ``v`` as phase * X^x Z^z, or return None if it is not of that form."""
    dim = v.shape[0]
    n = dim.bit_length() - 1
    x_val = None
    for i in range(dim):
        row = np.abs(v[i])
        j = int(np.argmax(row))
        if abs(row[j] - 1.0) > 1e-7 or row.sum() - row[j] > 1e-7:
            return None
        if x_val is None:
            x_val = i ^ j
        elif (i ^ j) != x_val:
            return None
    # strip the X part, leaving a diagonal of unit phases
    xs = index_to_bits(x_val, n)
    diag = (PauliOp.x_mask(xs).matrix() @ v).diagonal()
    phase = diag[0]
    signs = diag / phase
    z_val = 0
    for bit in range(n):
        s = signs[1 << (n - 1 - bit)]
        if abs(s - 1) < 1e-7:
            pass
        elif abs(s + 1) < 1e-7:
            z_val |= 1 << (n - 1 - bit)
        else:
            return None
    for i in range(dim):
        expect = -1.0 if bin(i & z_val).count("1") % 2 else 1.0
        if abs(signs[i] - expect) > 1e-7:
            return None
    return xs, index_to_bits(z_val, n), phase


def is_clifford_matrix(u: np.ndarray, atol: float = ATOL) -> bool:
    """Check that conjugation by ``u`` maps Pauli generators to phased Paulis."""
    u = np.asarray(u, dtype=np.complex128)
    n = u.shape[0].bit_length() - 1
    for wire in range(n):
        for kind in ("X", "Z"):
            bits = tuple(1 if w == wire else 0 for w in range(n))
            p = PauliOp(bits, (0,) * n) if kind == "X" else PauliOp((0,) * n, bits)
            v = u @ p.matrix() @ u.conj().T
            if _phased_pauli_decompose(v, atol) is None:
                return False
    return True


def m_rc(c_desc: StructuredClifford | np.ndarray, rho: DensityMatrix) -> DensityMatrix:
    """Applies an n-qubit Clifford, given structurally or as an explicit matrix."""
    if isinstance(c_desc, StructuredClifford):
        mat = c_desc.matrix()
        n = c_desc.n
    else:
        mat = np.asarray(c_desc, dtype=np.complex128)
        n = mat.shape[0].bit_length() - 1
        UnitaryOp(mat)  # unitarity check
        if not is_clifford_matrix(mat):
            raise ValueError("explicit matrix does not normalize the Pauli group")
    _require_qubits(rho, n, "m_rc input state")
    return apply_unitary(rho, UnitaryOp(mat), list(range(n)))


# ---------------------------------------------------------------------------
# registry


@dataclass
class IdealResource:
    """A named ideal functionality with a call schema.

    ``query`` runs the resource once on keyword inputs. Simulator bindings
    wrap instances of this class to enforce their single-use discipline.
    """

    kind: str
    fn: Callable[..., DensityMatrix]
    params: dict = field(default_factory=dict)

    def query(self, **inputs) -> DensityMatrix:
        return self.fn(**self.params, **inputs)


def resource_by_name(name: str, **params) -> IdealResource:
    table: dict[str, Callable[..., DensityMatrix]] = {
        "sp-rsp": sp_rsp,
        "rr-d": rr_d_average,
        "c-rsp": c_rsp,
        "rsp": rsp,
        "m-rc": m_rc,
        "ru": ru,
        "rsp-sn": rsp_sn,
        "ro": ro,
    }
    if name not in table:
        raise KeyError(f"unknown resource {name!r}; known: {sorted(table)}")
    return IdealResource(kind=name, fn=table[name], params=params)
