"""Exact density-matrix backend for few-qubit registers.

Everything is dense complex128. Wire 0 is the leftmost tensor factor and the
most significant bit of a basis index, so ``|b_0 b_1 ... b_{k-1}>`` has index
``sum(b_w << (k-1-w))``. All numeric comparisons in this package are absolute
and entrywise with tolerance :data:`ATOL`; unitaries are never compared
directly (global phase is meaningless), only states and Choi matrices are.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

ATOL = 1e-9

MAX_QUBITS = 8


def _as_complex(mat) -> np.ndarray:
    out = np.asarray(mat, dtype=np.complex128)
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {out.shape}")
    return out


def _num_qubits(dim: int) -> int:
    k = dim.bit_length() - 1
    if dim <= 0 or 2**k != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return k


def bits_to_index(bits: Sequence[int]) -> int:
    """Index of the basis state |bits>, wire 0 as the most significant bit."""
    idx = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"not a bit: {b!r}")
        idx = (idx << 1) | b
    return idx


def index_to_bits(index: int, width: int) -> tuple[int, ...]:
    return tuple((index >> (width - 1 - w)) & 1 for w in range(width))


def mats_close(a: np.ndarray, b: np.ndarray, atol: float = ATOL) -> bool:
    """Entrywise absolute comparison. rtol is deliberately zero."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a.shape == b.shape and bool(np.allclose(a, b, rtol=0.0, atol=atol))


# ---------------------------------------------------------------------------
# value types


class DensityMatrix:
    """Immutable density matrix on ``num_qubits`` wires.

    The constructor only checks the shape; call :meth:`validate` to assert
    Hermiticity, unit trace and positive semidefiniteness within tolerance.
    Intermediate arithmetic (subnormalized branches, matrix units fed through
    linear maps) lives on raw ndarrays, not on this type.
    """

    __slots__ = ("mat", "num_qubits")

    def __init__(self, mat) -> None:
        m = _as_complex(mat).copy()
        m.flags.writeable = False
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "num_qubits", _num_qubits(m.shape[0]))

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    def __repr__(self) -> str:
        return f"DensityMatrix(num_qubits={self.num_qubits})"

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def validate(self, atol: float = ATOL) -> "DensityMatrix":
        m = self.mat
        if not mats_close(m, m.conj().T, atol):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > atol:
            raise ValueError(f"trace is {np.trace(m)}, expected 1")
        if np.linalg.eigvalsh(m).min() < -atol:
            raise ValueError("density matrix has a negative eigenvalue")
        return self

    @classmethod
    def from_statevector(cls, vec) -> "DensityMatrix":
        v = np.asarray(vec, dtype=np.complex128).reshape(-1)
        n = np.linalg.norm(v)
        if abs(n - 1.0) > 1e-7:
            raise ValueError(f"state vector norm is {n}, expected 1")
        v = v / n
        return cls(np.outer(v, v.conj()))

    @classmethod
    def computational_basis(cls, bits: Sequence[int]) -> "DensityMatrix":
        dim = 2 ** len(bits)
        m = np.zeros((dim, dim), dtype=np.complex128)
        i = bits_to_index(bits)
        m[i, i] = 1.0
        return cls(m)

    @classmethod
    def maximally_mixed(cls, num_qubits: int) -> "DensityMatrix":
        dim = 2**num_qubits
        return cls(np.eye(dim, dtype=np.complex128) / dim)


class UnitaryOp:
    """Immutable unitary on ``num_qubits`` wires. Validated on construction."""

    __slots__ = ("mat", "num_qubits")

    def __init__(self, mat, atol: float = ATOL) -> None:
        m = _as_complex(mat).copy()
        if not mats_close(m.conj().T @ m, np.eye(m.shape[0]), atol):
            raise ValueError("matrix is not unitary within tolerance")
        m.flags.writeable = False
        object.__setattr__(self, "mat", m)
        object.__setattr__(self, "num_qubits", _num_qubits(m.shape[0]))

    def __setattr__(self, name, value):
        raise AttributeError("UnitaryOp is immutable")

    def __repr__(self) -> str:
        return f"UnitaryOp(num_qubits={self.num_qubits})"

    @property
    def dagger(self) -> "UnitaryOp":
        return UnitaryOp(self.mat.conj().T)

    def __matmul__(self, other: "UnitaryOp") -> "UnitaryOp":
        return UnitaryOp(self.mat @ other.mat)


class QuantumChannel:
    """CPTP map given by Kraus operators, possibly with unequal in/out dims."""

    __slots__ = ("kraus", "num_qubits_in", "num_qubits_out")

    def __init__(self, kraus: Sequence[np.ndarray], atol: float = ATOL) -> None:
        ops = tuple(np.asarray(k, dtype=np.complex128) for k in kraus)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        rows, cols = ops[0].shape
        if any(k.shape != (rows, cols) for k in ops):
            raise ValueError("Kraus operators have mismatched shapes")
        complete = sum(k.conj().T @ k for k in ops)
        if not mats_close(complete, np.eye(cols), atol):
            raise ValueError("Kraus operators do not sum to the identity")
        object.__setattr__(self, "kraus", ops)
        object.__setattr__(self, "num_qubits_in", _num_qubits(cols))
        object.__setattr__(self, "num_qubits_out", _num_qubits(rows))

    def __setattr__(self, name, value):
        raise AttributeError("QuantumChannel is immutable")

    def __repr__(self) -> str:
        return (
            f"QuantumChannel(num_qubits_in={self.num_qubits_in}, "
            f"num_qubits_out={self.num_qubits_out}, rank<={len(self.kraus)})"
        )

    @classmethod
    def from_unitary(cls, u: UnitaryOp | np.ndarray) -> "QuantumChannel":
        m = u.mat if isinstance(u, UnitaryOp) else _as_complex(u)
        return cls([m])

    @classmethod
    def from_unitary_mixture(
        cls, pairs: Sequence[tuple[float, np.ndarray]]
    ) -> "QuantumChannel":
        """Channel rho -> sum_i p_i U_i rho U_i^dag from (p_i, U_i) pairs."""
        total = sum(p for p, _ in pairs)
        if abs(total - 1.0) > ATOL:
            raise ValueError(f"mixture weights sum to {total}, expected 1")
        return cls([np.sqrt(p) * np.asarray(u) for p, u in pairs if p > 0])

    @classmethod
    def depolarizing(cls, p: float) -> "QuantumChannel":
        """Single-qubit Pauli channel with p_X = p_Y = p_Z = p, p_I = 1 - 3p."""
        if not 0.0 <= 3 * p <= 1.0 + ATOL:
            raise ValueError(f"depolarizing weight {p} out of range")
        eye = np.eye(2, dtype=np.complex128)
        x = np.array([[0, 1], [1, 0]], dtype=np.complex128)
        y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
        z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
        return cls.from_unitary_mixture([(1 - 3 * p, eye), (p, x), (p, y), (p, z)])

    def conjugated(self, u: np.ndarray) -> "QuantumChannel":
        """The channel U^dag . E . U (input and output rotated by U)."""
        m = _as_complex(u)
        return QuantumChannel([m.conj().T @ k @ m for k in self.kraus])

    def apply_mat(self, mat: np.ndarray) -> np.ndarray:
        return sum(k @ mat @ k.conj().T for k in self.kraus)

    def choi(self) -> np.ndarray:
        return choi_of_map(self.apply_mat, self.num_qubits_in)


@dataclass(frozen=True)
class Outcome:
    bits: tuple[int, ...]
    probability: float
    post_state: DensityMatrix | None


@dataclass(frozen=True)
class OutcomeDistribution:
    """Born-rule outcomes of a computational-basis measurement."""

    outcomes: tuple[Outcome, ...]

    def probability(self, bits: Sequence[int]) -> float:
        key = tuple(bits)
        for o in self.outcomes:
            if o.bits == key:
                return o.probability
        raise KeyError(key)

    def post_state(self, bits: Sequence[int]) -> DensityMatrix:
        key = tuple(bits)
        for o in self.outcomes:
            if o.bits == key:
                if o.post_state is None:
                    raise ValueError(f"outcome {key} has ~zero probability")
                return o.post_state
        raise KeyError(key)

    def total(self) -> float:
        return sum(o.probability for o in self.outcomes)


# ---------------------------------------------------------------------------
# ndarray kernels (shared by the typed API and by the averaging harnesses)


def embed_unitary(u: np.ndarray, wires: Sequence[int], num_qubits: int) -> np.ndarray:
    """Expand ``u`` acting on ``wires`` (in the given order) to the full register.

    ``wires`` may be in any order; ``embed_unitary(CNOT, [2, 0], 3)`` puts the
    control on wire 2 and the target on wire 0.
    """
    u = _as_complex(u)
    wires = list(wires)
    m = len(wires)
    if u.shape[0] != 2**m:
        raise ValueError(f"operator dim {u.shape[0]} does not match {m} wires")
    if len(set(wires)) != m or any(not 0 <= w < num_qubits for w in wires):
        raise ValueError(f"bad wire list {wires} for {num_qubits} qubits")
    if m == num_qubits and wires == list(range(num_qubits)):
        return u
    rest = [w for w in range(num_qubits) if w not in wires]
    order = wires + rest
    dim = 2**num_qubits
    src = np.arange(dim)
    dst = np.zeros(dim, dtype=np.int64)
    for pos, w in enumerate(order):
        dst |= ((src >> (num_qubits - 1 - w)) & 1) << (num_qubits - 1 - pos)
    perm = np.zeros((dim, dim), dtype=np.complex128)
    perm[dst, src] = 1.0
    full = np.kron(u, np.eye(2 ** (num_qubits - m), dtype=np.complex128))
    return perm.conj().T @ full @ perm


def conjugate_mat(mat: np.ndarray, u: np.ndarray) -> np.ndarray:
    return u @ mat @ u.conj().T


def apply_unitary_mat(
    mat: np.ndarray, u: np.ndarray, wires: Sequence[int], num_qubits: int
) -> np.ndarray:
    return conjugate_mat(mat, embed_unitary(u, wires, num_qubits))


def partial_trace_mat(
    mat: np.ndarray, discard: Sequence[int], num_qubits: int
) -> np.ndarray:
    discard = sorted(set(discard))
    k = num_qubits
    keep = [w for w in range(k) if w not in discard]
    t = np.asarray(mat).reshape((2,) * (2 * k))
    row = list(range(k))
    col = [w if w in discard else k + w for w in range(k)]
    out = keep + [k + w for w in keep]
    reduced = np.einsum(t, row + col, out)
    dim = 2 ** len(keep)
    return reduced.reshape(dim, dim)


def measure_branches_mat(
    mat: np.ndarray, wires: Sequence[int], num_qubits: int
) -> list[tuple[tuple[int, ...], np.ndarray]]:
    """Subnormalized post-measurement blocks on the surviving wires.

    Returns one ``(outcome_bits, block)`` pair per outcome; the block's trace
    is the outcome probability. The first wire in ``wires`` is the most
    significant outcome bit. Linear in ``mat``, so it can also be fed matrix
    units when building Choi matrices of measurement-bearing maps.
    """
    wires = list(wires)
    m = len(wires)
    dim = 2**num_qubits
    idx = np.arange(dim)
    branches = []
    for y in range(2**m):
        mask = np.ones(dim, dtype=bool)
        for j, w in enumerate(wires):
            bit = (y >> (m - 1 - j)) & 1
            mask &= ((idx >> (num_qubits - 1 - w)) & 1) == bit
        sel = idx[mask]
        block = np.asarray(mat)[np.ix_(sel, sel)]
        branches.append((index_to_bits(y, m), block))
    return branches


def insert_qubit_mat(
    mat: np.ndarray, qubit: np.ndarray, position: int, num_qubits: int
) -> np.ndarray:
    """Tensor a 1-qubit matrix into ``mat`` so it becomes wire ``position``."""
    combined = np.kron(mat, qubit)  # new qubit is the last wire
    k = num_qubits + 1
    if position == k - 1:
        return combined
    t = combined.reshape((2,) * (2 * k))
    perm = list(range(k - 1))
    perm.insert(position, k - 1)
    axes = perm + [k + p for p in perm]
    return np.transpose(t, axes).reshape(2**k, 2**k)


def choi_of_map(f: Callable[[np.ndarray], np.ndarray], num_qubits_in: int) -> np.ndarray:
    """Choi matrix sum_ij |i><j| (x) f(|i><j|) of a linear map ``f``.

    Unnormalized convention: the Choi of the identity channel is the
    projector onto sum_i |ii> with trace ``2**num_qubits_in``.
    """
    d = 2**num_qubits_in
    probe = np.zeros((d, d), dtype=np.complex128)
    first = f(probe.copy())
    dout = np.asarray(first).shape[0]
    choi = np.zeros((d * dout, d * dout), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d), dtype=np.complex128)
            unit[i, j] = 1.0
            choi[i * dout : (i + 1) * dout, j * dout : (j + 1) * dout] = f(unit)
    return choi


# ---------------------------------------------------------------------------
# typed operations


def tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    """Joint state with ``a`` on the low-index wires."""
    if a.num_qubits + b.num_qubits > MAX_QUBITS:
        raise ValueError("register would exceed the supported qubit budget")
    return DensityMatrix(np.kron(a.mat, b.mat))


def apply_unitary(
    rho: DensityMatrix, u: UnitaryOp, wires: Sequence[int] | None = None
) -> DensityMatrix:
    if wires is None:
        wires = list(range(u.num_qubits))
    return DensityMatrix(apply_unitary_mat(rho.mat, u.mat, wires, rho.num_qubits))


def apply_channel(
    rho: DensityMatrix, channel: QuantumChannel, wires: Sequence[int] | None = None
) -> DensityMatrix:
    if wires is None:
        wires = list(range(channel.num_qubits_in))
    if channel.num_qubits_in != channel.num_qubits_out:
        raise ValueError("embedding needs equal input and output dims")
    out = sum(
        apply_unitary_mat(rho.mat, k, wires, rho.num_qubits) for k in channel.kraus
    )
    return DensityMatrix(out)


def partial_trace(rho: DensityMatrix, discard: Sequence[int]) -> DensityMatrix:
    if len(set(discard)) >= rho.num_qubits:
        raise ValueError("cannot trace out every wire")
    return DensityMatrix(partial_trace_mat(rho.mat, discard, rho.num_qubits))


def measure_computational(
    rho: DensityMatrix, wires: Sequence[int], atol: float = ATOL
) -> OutcomeDistribution:
    """Measure ``wires`` in the computational basis.

    Outcome probabilities follow the Born rule and each post-state is the
    normalized state of the surviving wires. Post-states of outcomes with
    probability below tolerance are ``None``.
    """
    outcomes = []
    for bits, block in measure_branches_mat(rho.mat, wires, rho.num_qubits):
        p = float(np.trace(block).real)
        post = DensityMatrix(block / p) if p > atol else None
        outcomes.append(Outcome(bits=bits, probability=max(p, 0.0), post_state=post))
    return OutcomeDistribution(tuple(outcomes))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    return trace_distance_mat(a.mat, b.mat)


def trace_distance_mat(a: np.ndarray, b: np.ndarray) -> float:
    """(1/2) ||a - b||_1 for Hermitian a, b."""
    diff = np.asarray(a) - np.asarray(b)
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def choi_matrix(channel: QuantumChannel) -> np.ndarray:
    """Choi matrix of a channel; equal Choi matrices mean equal channels."""
    return channel.choi()
