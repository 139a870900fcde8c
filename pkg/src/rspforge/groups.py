"""Discrete operation groups and averaging (twirling) primitives.

Covers the eighth-turn phase angles, Pauli operators, the 24 single-qubit
Cliffords (enumerated in a deterministic order), invertible GF(2) linear
maps with their permutation unitaries, and the exact dephasing / GF(2) /
Clifford twirls used by the security harness.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .qstate import (
    ATOL,
    DensityMatrix,
    QuantumChannel,
    UnitaryOp,
    bits_to_index,
    index_to_bits,
    mats_close,
)

# ---------------------------------------------------------------------------
# fixed gate matrices

ID2 = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
PHASE_S = np.array([[1, 0], [0, 1j]], dtype=np.complex128)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)

PAULI_LABELS = ("I", "X", "Y", "Z")
_PAULI_BY_LABEL = {"I": ID2, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


def pauli_1q(label: str) -> np.ndarray:
    return _PAULI_BY_LABEL[label]


@dataclass(frozen=True)
class Angle:
    """Phase angle theta = k * pi/4 from the eight-element set."""

    k: int

    def __post_init__(self):
        if self.k not in range(8):
            raise ValueError(f"angle index {self.k} not in 0..7")

    @property
    def radians(self) -> float:
        return self.k * math.pi / 4


ALL_ANGLES = tuple(Angle(k) for k in range(8))


@dataclass(frozen=True)
class PauliOp:
    """Phase-free n-qubit Pauli, X^x Z^z applied wire by wire."""

    x_bits: tuple[int, ...]
    z_bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.x_bits) != len(self.z_bits):
            raise ValueError("x and z masks have different lengths")
        if any(b not in (0, 1) for b in self.x_bits + self.z_bits):
            raise ValueError("masks must be bits")

    @property
    def num_qubits(self) -> int:
        return len(self.x_bits)

    def matrix(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=np.complex128)
        for x, z in zip(self.x_bits, self.z_bits):
            factor = (PAULI_X if x else ID2) @ (PAULI_Z if z else ID2)
            out = np.kron(out, factor)
        return out

    @classmethod
    def x_mask(cls, bits: Sequence[int]) -> "PauliOp":
        return cls(tuple(bits), (0,) * len(bits))

    @classmethod
    def z_mask(cls, bits: Sequence[int]) -> "PauliOp":
        return cls((0,) * len(bits), tuple(bits))


def rotation_z(theta: Angle) -> UnitaryOp:
    """diag(1, e^{i theta}); maps |+> to the phase state for theta."""
    return UnitaryOp(np.diag([1.0, np.exp(1j * theta.radians)]))


def rotation_z_matrix(radians: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * radians)]).astype(np.complex128)


def pauli_x_power(b: int) -> UnitaryOp:
    return UnitaryOp(PAULI_X if b & 1 else ID2)


def pauli_z_power(d: int) -> UnitaryOp:
    return UnitaryOp(PAULI_Z if d & 1 else ID2)


def phase_state(theta: Angle) -> np.ndarray:
    """Statevector (|0> + e^{i theta} |1>)/sqrt(2)."""
    return np.array([1.0, np.exp(1j * theta.radians)], dtype=np.complex128) / math.sqrt(2)


# ---------------------------------------------------------------------------
# channel fingerprints: identity of a unitary up to global phase


def channel_fingerprint(u: np.ndarray) -> bytes:
    """Hashable identity of the conjugation channel of ``u``.

    Built from the Choi matrix, so it is insensitive to global phase. The
    entries are snapped to a 1e-9 grid; every group handled here has exactly
    valued entries far from grid boundaries.
    """
    u = np.asarray(u, dtype=np.complex128)
    d = u.shape[0]
    omega = np.zeros(d * d, dtype=np.complex128)
    omega[:: d + 1] = 1.0
    vec = np.kron(np.eye(d), u) @ omega
    choi = np.outer(vec, vec.conj())
    snapped = np.rint(choi.view(np.float64) * 1e9).astype(np.int64)
    return snapped.tobytes()


def canonical_phase(u: np.ndarray) -> np.ndarray:
    """Rescale so the largest-modulus entry (first in flat order) is real > 0."""
    u = np.asarray(u, dtype=np.complex128)
    flat = np.abs(u).ravel()
    pivot = u.ravel()[int(np.argmax(np.round(flat, 9)))]
    return u * (abs(pivot) / pivot)


# ---------------------------------------------------------------------------
# single-qubit Clifford group


@dataclass(frozen=True)
class SingleQubitClifford:
    """One of the 24 channel-distinct single-qubit Cliffords."""

    index: int
    matrix: np.ndarray

    def __repr__(self) -> str:
        return f"SingleQubitClifford(index={self.index})"


@functools.lru_cache(maxsize=1)
def enumerate_single_qubit_cliffords() -> tuple[SingleQubitClifford, ...]:
    """All 24 single-qubit Cliffords, generated by closure from {H, S}.

    Elements are distinct as channels (global phase dropped) and ordered by
    the lexicographic byte order of their Choi fingerprints, so the indexing
    is stable across runs.
    """
    seen: dict[bytes, np.ndarray] = {}
    frontier = [canonical_phase(ID2)]
    seen[channel_fingerprint(ID2)] = frontier[0]
    while frontier:
        fresh = []
        for u in frontier:
            for gate in (HADAMARD, PHASE_S):
                candidate = canonical_phase(gate @ u)
                fp = channel_fingerprint(candidate)
                if fp not in seen:
                    seen[fp] = candidate
                    fresh.append(candidate)
        frontier = fresh
    if len(seen) != 24:
        raise AssertionError(f"Clifford closure produced {len(seen)} elements")
    ordered = [seen[fp] for fp in sorted(seen)]
    mats = []
    for m in ordered:
        m = m.copy()
        m.flags.writeable = False
        mats.append(m)
    return tuple(
        SingleQubitClifford(index=i, matrix=m) for i, m in enumerate(mats)
    )


def clifford_index_of(u: np.ndarray) -> int:
    """Index of the Clifford that equals ``u`` as a channel, else KeyError."""
    table = {
        channel_fingerprint(c.matrix): c.index
        for c in enumerate_single_qubit_cliffords()
    }
    return table[channel_fingerprint(u)]


# ---------------------------------------------------------------------------
# Haar sampling


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    q, r = np.linalg.qr(z / math.sqrt(2))
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_sample_1q(rng: np.random.Generator) -> UnitaryOp:
    return UnitaryOp(haar_unitary(2, rng))


# ---------------------------------------------------------------------------
# invertible linear maps over GF(2)


class GF2InvertibleMap:
    """Invertible linear map x -> M x over GF(2)^n."""

    __slots__ = ("mat",)

    def __init__(self, mat) -> None:
        m = np.asarray(mat, dtype=np.uint8) % 2
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("matrix must be square")
        if gf2_rank(m) != m.shape[0]:
            raise ValueError("matrix is singular over GF(2)")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "mat", m)

    def __setattr__(self, name, value):
        raise AttributeError("GF2InvertibleMap is immutable")

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    def apply(self, bits: Sequence[int]) -> tuple[int, ...]:
        v = np.asarray(bits, dtype=np.uint8)
        if v.shape != (self.n,):
            raise ValueError(f"expected {self.n} bits")
        return tuple(int(b) for b in (self.mat @ v) % 2)

    def __repr__(self) -> str:
        rows = ["".join(str(int(b)) for b in row) for row in self.mat]
        return f"GF2InvertibleMap({'/'.join(rows)})"


def gf2_rank(mat: np.ndarray) -> int:
    m = np.array(mat, dtype=np.uint8) % 2
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        pivot = None
        for r in range(rank, rows):
            if m[r, c]:
                pivot = r
                break
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(rows):
            if r != rank and m[r, c]:
                m[r] ^= m[rank]
        rank += 1
    return rank


def count_gf2_invertible(n: int) -> int:
    """|GL(n, 2)| = prod_{i=0}^{n-1} (2^n - 2^i)."""
    if not 1 <= n <= 8:
        raise ValueError(f"n={n} out of supported range")
    total = 1
    for i in range(n):
        total *= 2**n - 2**i
    return total


def enumerate_gf2_invertible(n: int) -> tuple[GF2InvertibleMap, ...]:
    """Brute-force enumeration; intended for n <= 3 only."""
    if n > 3:
        raise ValueError("enumeration is only supported for n <= 3")
    maps = []
    for code in range(2 ** (n * n)):
        m = np.array(
            [[(code >> (i * n + j)) & 1 for j in range(n)] for i in range(n)],
            dtype=np.uint8,
        )
        if gf2_rank(m) == n:
            maps.append(GF2InvertibleMap(m))
    return tuple(maps)


def sample_gf2_invertible(n: int, rng: np.random.Generator) -> GF2InvertibleMap:
    """Uniform sample from GL(n, 2) by row-by-row rejection."""
    rows: list[np.ndarray] = []
    echelon: list[np.ndarray] = []
    while len(rows) < n:
        cand = rng.integers(0, 2, size=n, dtype=np.uint8)
        residue = cand.copy()
        for e in echelon:
            lead = int(np.argmax(e))
            if residue[lead]:
                residue ^= e
        if not residue.any():
            continue  # in the span of earlier rows, reject
        rows.append(cand)
        echelon.append(residue)
        echelon.sort(key=lambda v: -bits_to_index(v.tolist()))
    return GF2InvertibleMap(np.array(rows, dtype=np.uint8))


def permutation_unitary(g: GF2InvertibleMap) -> UnitaryOp:
    """Basis permutation |x> -> |g(x)>; fixes |0...0>."""
    n = g.n
    dim = 2**n
    u = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(dim):
        j = bits_to_index(g.apply(index_to_bits(i, n)))
        u[j, i] = 1.0
    return UnitaryOp(u)


# ---------------------------------------------------------------------------
# twirls


def _permute_wires_mat(mat: np.ndarray, order: Sequence[int], k: int) -> np.ndarray:
    """Reorder wires so new position p carries old wire order[p]."""
    t = np.asarray(mat).reshape((2,) * (2 * k))
    axes = list(order) + [k + w for w in order]
    return np.transpose(t, axes).reshape(2**k, 2**k)


def dephasing_twirl(rho: DensityMatrix, wires: Sequence[int]) -> DensityMatrix:
    """Exact average (1/2^m) sum_d Z^d rho Z^d over all masks on ``wires``.

    Kills every coherence between distinct computational basis states of the
    selected wires; idempotent.
    """
    wires = list(wires)
    k = rho.num_qubits
    dim = rho.dim
    idx = np.arange(dim)
    wire_bits = [((idx >> (k - 1 - w)) & 1) for w in wires]
    m = len(wires)
    acc = np.zeros((dim, dim), dtype=np.complex128)
    for d in range(2**m):
        sign = np.ones(dim)
        for j in range(m):
            if (d >> (m - 1 - j)) & 1:
                sign = sign * (1 - 2 * wire_bits[j])
        acc += np.outer(sign, sign) * rho.mat
    return DensityMatrix(acc / 2**m)


def gf2_linear_twirl(
    rho: DensityMatrix, wires: Sequence[int], atol: float = ATOL
) -> DensityMatrix:
    """Exact average (1/|GL(n,2)|) sum_g U_g rho U_g^dag over ``wires``.

    Requires the input diagonal across the computational basis of the twirled
    wires (ancilla correlations are fine); feed states through
    :func:`dephasing_twirl` first. Under that precondition the group average
    has a closed form: GL(n,2) fixes the all-zero string and acts
    transitively on the rest with orbits of equal weight, so the zero block
    is kept and the nonzero diagonal blocks are replaced by their mean.
    """
    wires = list(wires)
    n = len(wires)
    k = rho.num_qubits
    rest = [w for w in range(k) if w not in wires]
    order = wires + rest
    inverse = [order.index(w) for w in range(k)]
    front = _permute_wires_mat(rho.mat, order, k)
    reg = 2**n
    anc = 2 ** (k - n)
    blocks = front.reshape(reg, anc, reg, anc)
    off_mass = 0.0
    for s in range(reg):
        for t in range(reg):
            if s != t:
                off_mass = max(off_mass, float(np.abs(blocks[s, :, t, :]).max()))
    if off_mass > atol:
        raise ValueError(
            "gf2_linear_twirl needs a state diagonal on the twirled wires "
            f"(max off-diagonal block entry {off_mass:.3e})"
        )
    out = np.zeros_like(blocks)
    out[0, :, 0, :] = blocks[0, :, 0, :]
    if reg > 1:
        mean = sum(blocks[s, :, s, :] for s in range(1, reg)) / (reg - 1)
        for t in range(1, reg):
            out[t, :, t, :] = mean
    back = _permute_wires_mat(out.reshape(2**k, 2**k), inverse, k)
    return DensityMatrix(back)


@dataclass(frozen=True)
class PauliChannelProbs:
    """Mixing weights of a single-qubit Pauli channel."""

    p_i: float
    p_x: float
    p_y: float
    p_z: float

    def as_dict(self) -> dict[str, float]:
        return {"I": self.p_i, "X": self.p_x, "Y": self.p_y, "Z": self.p_z}


def pauli_probs_from_choi(choi: np.ndarray) -> PauliChannelProbs:
    """Read Pauli weights off the Bell-basis diagonal of a 1-qubit Choi."""
    omega = np.array([1, 0, 0, 1], dtype=np.complex128)
    vals = {}
    for label in PAULI_LABELS:
        bell = np.kron(ID2, pauli_1q(label)) @ omega / math.sqrt(2)
        vals[label] = float((bell.conj() @ choi @ bell).real) / 2
    return PauliChannelProbs(vals["I"], vals["X"], vals["Y"], vals["Z"])


def clifford_twirl_channel(e: QuantumChannel, atol: float = ATOL) -> PauliChannelProbs:
    """Average C^dag . E . C over the 24 Cliffords and return Pauli weights.

    The exact 24-term average of any 1-qubit channel is a Pauli channel;
    raises if the reconstruction from the extracted weights does not match,
    which only happens for invalid input.
    """
    if e.num_qubits_in != 1 or e.num_qubits_out != 1:
        raise ValueError("clifford_twirl_channel expects a 1-qubit channel")
    cliffords = enumerate_single_qubit_cliffords()
    w = 1.0 / math.sqrt(len(cliffords))
    kraus = []
    for c in cliffords:
        cm = c.matrix
        for k in e.kraus:
            kraus.append(w * cm.conj().T @ k @ cm)
    twirled = QuantumChannel(kraus)
    choi = twirled.choi()
    probs = pauli_probs_from_choi(choi)
    mixture = [
        (max(p, 0.0), pauli_1q(label))
        for label, p in probs.as_dict().items()
    ]
    total = sum(p for p, _ in mixture)
    rebuilt = QuantumChannel.from_unitary_mixture(
        [(p / total, u) for p, u in mixture]
    )
    if not mats_close(rebuilt.choi(), choi, atol):
        raise ValueError("Clifford average is not a Pauli channel; invalid input")
    return probs


def haar_twirl_equals_clifford_twirl(
    e: QuantumChannel, rng: np.random.Generator, samples: int = 1000
) -> bool:
    """Check that the Clifford twirl of ``e`` yields a unitarily invariant channel.

    Builds the depolarizing channel D_p from the Clifford-twirl weights of
    ``e`` and verifies W^dag . D_p . W = D_p (Choi equality at tolerance) for
    all 24 Cliffords and for ``samples`` Haar draws. This is the 2-design
    statement in checkable form: the twirl outcome cannot distinguish the
    finite group from the full unitary group.
    """
    probs = clifford_twirl_channel(e)
    if abs(probs.p_x - probs.p_y) > ATOL or abs(probs.p_x - probs.p_z) > ATOL:
        return False
    dp = QuantumChannel.depolarizing(max(probs.p_x, 0.0))
    reference = dp.choi()
    for c in enumerate_single_qubit_cliffords():
        if not mats_close(dp.conjugated(c.matrix).choi(), reference):
            return False
    for _ in range(samples):
        w = haar_unitary(2, rng)
        if not mats_close(dp.conjugated(w).choi(), reference):
            return False
    return True


# ---------------------------------------------------------------------------
# operation groups for the remote-operation resource


class OperationGroup:
    """A group of unitaries a remote-operation resource may apply.

    Finite groups carry an explicit element list (canonical matrices,
    distinct as channels); membership and labeling are fingerprint lookups.
    The only continuous descriptor is the full 1-qubit unitary group.
    """

    def __init__(
        self,
        descriptor: str,
        num_qubits: int,
        elements: Sequence[np.ndarray] | None,
    ) -> None:
        self.descriptor = descriptor
        self.num_qubits = num_qubits
        if elements is None:
            self.elements: tuple[np.ndarray, ...] | None = None
            self._index: dict[bytes, int] | None = None
        else:
            mats = []
            for e in elements:
                m = np.asarray(e, dtype=np.complex128).copy()
                m.flags.writeable = False
                mats.append(m)
            self.elements = tuple(mats)
            self._index = {
                channel_fingerprint(m): i for i, m in enumerate(self.elements)
            }
            if len(self._index) != len(self.elements):
                raise ValueError("element list has channel duplicates")

    def __repr__(self) -> str:
        size = "continuous" if self.elements is None else str(len(self.elements))
        return f"OperationGroup({self.descriptor!r}, size={size})"

    @property
    def is_finite(self) -> bool:
        return self.elements is not None

    def contains(self, u: np.ndarray, atol: float = ATOL) -> bool:
        u = np.asarray(u, dtype=np.complex128)
        if u.shape != (2**self.num_qubits,) * 2:
            return False
        if not mats_close(u.conj().T @ u, np.eye(u.shape[0]), atol):
            return False
        if self.elements is None:
            return True
        return channel_fingerprint(u) in self._index

    def label_of(self, u: np.ndarray) -> int:
        """Index of the element equal to ``u`` as a channel."""
        if self._index is None:
            raise ValueError("continuous groups have no element labels")
        fp = channel_fingerprint(u)
        if fp not in self._index:
            raise KeyError("matrix is not a group element")
        return self._index[fp]

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if self.elements is not None:
            return self.elements[int(rng.integers(len(self.elements)))]
        return haar_unitary(2**self.num_qubits, rng)

    def validate_closure(self, atol: float = ATOL) -> None:
        """Assert closure under composition and inverse (finite groups)."""
        if self.elements is None:
            return
        for a in self.elements:
            if channel_fingerprint(a.conj().T) not in self._index:
                raise ValueError("element list is not closed under inverse")
            for b in self.elements:
                if channel_fingerprint(a @ b) not in self._index:
                    raise ValueError("element list is not closed under composition")


def full_unitary_1q_group() -> OperationGroup:
    return OperationGroup("full-unitary-1q", 1, None)


@functools.lru_cache(maxsize=1)
def clifford_1q_group() -> OperationGroup:
    mats = [c.matrix for c in enumerate_single_qubit_cliffords()]
    return OperationGroup("clifford-1q", 1, mats)


@functools.lru_cache(maxsize=1)
def z_rotations_group() -> OperationGroup:
    """Order-8 cyclic group of eighth-turn Z rotations."""
    mats = [rotation_z(a).mat for a in ALL_ANGLES]
    return OperationGroup("z-rotations", 1, mats)


@functools.lru_cache(maxsize=1)
def x_and_z_rotations_group() -> OperationGroup:
    """The 16-element group generated by X and the eighth-turn Z rotation."""
    mats = [
        rotation_z(a).mat @ (PAULI_X if b else ID2)
        for a in ALL_ANGLES
        for b in (0, 1)
    ]
    return OperationGroup("x-and-z-rotations", 1, mats)


def explicit_group(elements: Sequence[np.ndarray], num_qubits: int) -> OperationGroup:
    group = OperationGroup("explicit", num_qubits, elements)
    group.validate_closure()
    return group


_GROUPS_BY_NAME: dict[str, Callable[[], OperationGroup]] = {
    "full-unitary-1q": full_unitary_1q_group,
    "clifford-1q": clifford_1q_group,
    "z-rotations": z_rotations_group,
    "x-and-z-rotations": x_and_z_rotations_group,
}


def group_by_name(name: str) -> OperationGroup:
    try:
        return _GROUPS_BY_NAME[name]()
    except KeyError:
        raise KeyError(
            f"unknown group {name!r}; known: {sorted(_GROUPS_BY_NAME)}"
        ) from None
