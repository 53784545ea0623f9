"""
Quantum kernel: small dense states, gates, the four storage noise channels,
Choi-state machinery and the per-channel gate-fidelity formulas.

Matrices are plain ``numpy`` complex arrays. ``DensityMatrix``, ``PureState``
and ``GateMatrix`` wrap them and enforce their invariants on construction.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple, Union

import numpy as np

from .errors import InvalidParameterError, InvalidStateError
from .structs import MemoryParams

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIGEN_TOL = -1e-10
UNITARY_TOL = 1e-12
NORM_TOL = 1e-12

Real = Union[float, np.ndarray]

_I2 = np.eye(2, dtype=complex)
_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
_KET0 = np.array([1, 0], dtype=complex)
_KET1 = np.array([0, 1], dtype=complex)


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


def _check_square(matrix: np.ndarray, what: str) -> None:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidParameterError(f"{what} must be square, got shape {matrix.shape}")
    if not _is_power_of_two(matrix.shape[0]):
        raise InvalidParameterError(f"{what} dimension must be a power of two, got {matrix.shape[0]}")


def _require_time(t: Real) -> None:
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0):
        raise InvalidParameterError(f"elapsed time must be non-negative, got {t}")


# ---------------------------------------------------------------------------
# States and gates
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GateMatrix:
    """Unitary acting on one or two qubits (or a larger register)."""
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        _check_square(m, "gate")
        err = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
        if err > UNITARY_TOL:
            raise InvalidParameterError(f"gate is not unitary (max |G†G - I| = {err:.3e})")
        object.__setattr__(self, "matrix", m)

    @property
    def arity(self) -> int:
        return int(round(math.log2(self.matrix.shape[0])))

    def __matmul__(self, other: "GateMatrix") -> "GateMatrix":
        return GateMatrix(self.matrix @ other.matrix)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if not _is_power_of_two(v.shape[0]):
            raise InvalidStateError(f"state dimension must be a power of two, got {v.shape[0]}")
        norm = np.vdot(v, v).real
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"state is not normalized (|psi|^2 = {norm!r})")
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.projector())


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semi-definite, unit-trace matrix."""
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        _check_square(m, "density matrix")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > HERMITIAN_TOL:
            raise InvalidStateError(f"density matrix is not Hermitian (max |rho - rho†| = {herm:.3e})")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"density matrix trace is {tr!r}, expected 1")
        smallest = np.linalg.eigvalsh((m + m.conj().T) / 2).min()
        if smallest < EIGEN_TOL:
            raise InvalidStateError(f"density matrix has negative eigenvalue {smallest:.3e}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return int(round(math.log2(self.dim)))

    @classmethod
    def maximally_mixed(cls, dim: int = 2) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def basis(cls, index: int, dim: int = 2) -> "DensityMatrix":
        m = np.zeros((dim, dim), dtype=complex)
        m[index, index] = 1.0
        return cls(m)


def pauli(kind: str) -> GateMatrix:
    """Return the 2×2 Pauli matrix ``kind`` in {"X", "Y", "Z"}."""
    try:
        return GateMatrix(_PAULI[kind.upper()].copy())
    except KeyError:
        raise InvalidParameterError(f"unknown Pauli {kind!r}") from None


def _single_rotation(kind: str, theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    return np.array([[np.exp(-1j * theta / 2), 0], [0, np.exp(1j * theta / 2)]], dtype=complex)


def rotation(kind: str, theta: float) -> GateMatrix:
    """Rotation gate RX, RY, RZ, or the electron-controlled RCX, RCY.

    The controlled rotations act on (control, target) as
    |0⟩⟨0| ⊗ R(θ) + |1⟩⟨1| ⊗ R(−θ).
    """
    if not math.isfinite(theta):
        raise InvalidParameterError(f"rotation angle must be finite, got {theta}")
    kind = kind.upper()
    if kind in ("RX", "RY", "RZ"):
        return GateMatrix(_single_rotation(kind, theta))
    if kind in ("RCX", "RCY"):
        base = kind.replace("C", "")
        p0 = np.outer(_KET0, _KET0)
        p1 = np.outer(_KET1, _KET1)
        return GateMatrix(np.kron(p0, _single_rotation(base, theta))
                          + np.kron(p1, _single_rotation(base, -theta)))
    raise InvalidParameterError(f"unknown rotation {kind!r}")


def bell_state() -> PureState:
    """(|00⟩ + |11⟩)/√2."""
    return PureState(np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2))


def swap_matrix() -> np.ndarray:
    s = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            s[2 * j + i, 2 * i + j] = 1.0
    return s


# ---------------------------------------------------------------------------
# Noise channels
# ---------------------------------------------------------------------------

class ChannelKind(str, Enum):
    DEPOLARIZING = "depolarizing"
    DEPHASING = "dephasing"
    AMPLITUDE_DAMPING = "amplitude_damping"
    COMPOSITE = "composite"


@dataclass(frozen=True)
class FidelityTerms:
    """F(t) = constant + Σ weight·exp(−decay·t)."""
    constant: float
    terms: Tuple[Tuple[float, float], ...]

    def evaluate(self, t: Real) -> Real:
        t_arr = np.asarray(t, dtype=float)
        value = np.full_like(t_arr, self.constant, dtype=float)
        for weight, decay in self.terms:
            value = value + weight * np.exp(-decay * t_arr)
        return float(value) if value.ndim == 0 else value


def depolarizing_kraus(p: float) -> List[np.ndarray]:
    """Kraus form of (1−3p)ρ + p(XρX + YρY + ZρZ)."""
    if not 0.0 <= p <= 0.25:
        raise InvalidParameterError(f"depolarizing probability must lie in [0, 1/4], got {p}")
    return [math.sqrt(1.0 - 3.0 * p) * _I2] + [math.sqrt(p) * _PAULI[k] for k in "XYZ"]


def depolarizing_identity_form(p: float, m: np.ndarray) -> np.ndarray:
    """Same map as ``depolarizing_kraus`` written as (1−4p)ρ + 4p·Tr(ρ)·I/2."""
    return (1.0 - 4.0 * p) * m + 4.0 * p * np.trace(m) * _I2 / 2.0


def damping_kraus(damping_gamma: float) -> List[np.ndarray]:
    m0 = np.array([[1, 0], [0, math.sqrt(1.0 - damping_gamma)]], dtype=complex)
    m1 = np.array([[0, math.sqrt(damping_gamma)], [0, 0]], dtype=complex)
    return [m0, m1]


def reset_kraus() -> List[np.ndarray]:
    """Reset a qubit to |0⟩."""
    return [np.outer(_KET0, _KET0), np.outer(_KET0, _KET1)]


def apply_kraus(kraus: Sequence[np.ndarray], m: np.ndarray) -> np.ndarray:
    return sum(k @ m @ k.conj().T for k in kraus)


@dataclass(frozen=True)
class NoiseChannel:
    """Time-parameterized storage noise acting on a single qubit."""
    kind: ChannelKind
    memory: MemoryParams

    def __post_init__(self):
        if not isinstance(self.kind, ChannelKind):
            object.__setattr__(self, "kind", ChannelKind(self.kind))
        if self.kind is ChannelKind.COMPOSITE:
            self.memory.require_composite()

    def probabilities(self, t: float) -> dict:
        """Channel parameters after ``t`` seconds of storage."""
        _require_time(t)
        m = self.memory
        if self.kind is ChannelKind.DEPOLARIZING:
            return {"p": 0.25 * (1.0 - math.exp(-t / m.T))}
        if self.kind is ChannelKind.DEPHASING:
            return {"p": 0.5 * (1.0 - math.exp(-t / m.T2))}
        damping_gamma = 1.0 - math.exp(-t / m.T1)
        if self.kind is ChannelKind.AMPLITUDE_DAMPING:
            return {"damping_gamma": damping_gamma}
        # pure dephasing left over once damping accounts for its share of T2
        rate = max(1.0 / m.T2 - 1.0 / (2.0 * m.T1), 0.0)
        return {"damping_gamma": damping_gamma, "p": 0.5 * (1.0 - math.exp(-t * rate))}

    def kraus(self, t: float) -> List[np.ndarray]:
        probs = self.probabilities(t)
        if self.kind is ChannelKind.DEPOLARIZING:
            return depolarizing_kraus(probs["p"])
        if self.kind is ChannelKind.DEPHASING:
            p = probs["p"]
            return [math.sqrt(1.0 - p) * _I2, math.sqrt(p) * _PAULI["Z"]]
        damp = damping_kraus(probs["damping_gamma"])
        if self.kind is ChannelKind.AMPLITUDE_DAMPING:
            return damp
        p = probs["p"]
        # dephasing applied after damping
        return [math.sqrt(1.0 - p) * k for k in damp] + [math.sqrt(p) * (_PAULI["Z"] @ k) for k in damp]

    def apply(self, t: float, m: np.ndarray) -> np.ndarray:
        """Apply the channel to an arbitrary 2×2 matrix (not necessarily a state)."""
        return apply_kraus(self.kraus(t), m)

    def terms(self) -> FidelityTerms:
        return fidelity_terms(self)


def apply_channel(channel: NoiseChannel, t: float, rho: DensityMatrix) -> DensityMatrix:
    """Apply ``channel`` for ``t`` seconds to a single-qubit state."""
    _require_time(t)
    if rho.dim != 2:
        raise InvalidParameterError(f"storage channels act on one qubit, got dimension {rho.dim}")
    return DensityMatrix(channel.apply(t, rho.matrix))


def state_fidelity(rho: DensityMatrix, target: PureState) -> float:
    """⟨ψ|ρ|ψ⟩."""
    if rho.dim != target.dim:
        raise InvalidParameterError(f"dimension mismatch: rho is {rho.dim}, target is {target.dim}")
    value = np.vdot(target.amplitudes, rho.matrix @ target.amplitudes)
    if abs(value.imag) >= 1e-12:
        raise InvalidStateError(f"fidelity has imaginary part {value.imag:.3e}")
    return float(value.real)


# ---------------------------------------------------------------------------
# Gate fidelity: closed forms and oracles
# ---------------------------------------------------------------------------

def fidelity_terms(channel: NoiseChannel) -> FidelityTerms:
    """Exponential decomposition of the average gate fidelity of ``channel``."""
    m = channel.memory
    if channel.kind is ChannelKind.DEPOLARIZING:
        return FidelityTerms(0.5, ((0.5, 1.0 / m.T),))
    if channel.kind is ChannelKind.DEPHASING:
        return FidelityTerms(2.0 / 3.0, ((1.0 / 3.0, 1.0 / m.T2),))
    if channel.kind is ChannelKind.AMPLITUDE_DAMPING:
        return FidelityTerms(0.5, ((1.0 / 6.0, 1.0 / m.T1), (1.0 / 3.0, 1.0 / (2.0 * m.T1))))
    return FidelityTerms(0.5, ((1.0 / 6.0, 1.0 / m.T1), (1.0 / 3.0, 1.0 / m.T2)))


def gate_fidelity_closed(channel: NoiseChannel, t: Real) -> Real:
    """Average gate fidelity after ``t`` seconds of storage noise.

    Independent of the ideal gate, so no gate argument is taken. Accepts a
    scalar or an array of elapsed times.
    """
    _require_time(t)
    return fidelity_terms(channel).evaluate(t)


def gate_fidelity_bowdrey(channel: NoiseChannel, t: float) -> float:
    """½ + (1/12)·Σ_σ Tr[σ·N(σ)] over the three Paulis."""
    _require_time(t)
    total = sum(np.trace(_PAULI[k] @ channel.apply(t, _PAULI[k])) for k in "XYZ")
    return float(0.5 + total.real / 12.0)


def choi_state(channel: NoiseChannel, t: float) -> DensityMatrix:
    """(N ⊗ I)(|Φ⟩⟨Φ|) built from the basis decomposition of |Φ⟩⟨Φ|."""
    _require_time(t)
    tau = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            e_ij = np.zeros((2, 2), dtype=complex)
            e_ij[i, j] = 1.0
            tau += 0.5 * np.kron(channel.apply(t, e_ij), e_ij)
    return DensityMatrix(tau)


def partial_transpose(m: np.ndarray) -> np.ndarray:
    """Transpose the second tensor factor of a two-qubit operator."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise InvalidParameterError(f"partial transpose needs a 4x4 matrix, got {m.shape}")
    return m.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def symmetric_projector() -> np.ndarray:
    """Projector onto the symmetric subspace, from the three non-singlet Bell states."""
    phi = bell_state().amplitudes
    proj = np.zeros((4, 4), dtype=complex)
    for a, b in ((0, 0), (0, 1), (1, 0)):
        local = np.linalg.matrix_power(_PAULI["X"], a) @ np.linalg.matrix_power(_PAULI["Z"], b)
        ket = np.kron(_I2, local) @ phi
        proj += np.outer(ket, ket.conj())
    return proj


def gate_fidelity_choi_oracle(channel: NoiseChannel, t: float) -> float:
    """(d_A/d_sym)·Tr[Π_sym τ^Γ] with d_A = 2 and d_sym = 3."""
    tau = choi_state(channel, t).matrix
    value = np.trace(symmetric_projector() @ partial_transpose(tau))
    return float(2.0 / 3.0 * value.real)


def ent_fidelity_from_gate(f_avg: Real, d: int = 2) -> Real:
    """F_e = ((d+1)·F_avg − 1)/d."""
    if d < 2:
        raise InvalidParameterError(f"dimension must be at least 2, got {d}")
    return ((d + 1) * f_avg - 1.0) / d


def gate_fidelity_from_ent(f_e: Real, d: int = 2) -> Real:
    """F_avg = (d·F_e + 1)/(d+1)."""
    if d < 2:
        raise InvalidParameterError(f"dimension must be at least 2, got {d}")
    return (d * f_e + 1.0) / (d + 1)


# ---------------------------------------------------------------------------
# Haar sampling
# ---------------------------------------------------------------------------

def haar_random_state(rng: np.random.Generator, d: int = 2) -> PureState:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState(v / np.linalg.norm(v))


def haar_random_unitary(rng: np.random.Generator, d: int = 2) -> GateMatrix:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return GateMatrix(q * phases)


def haar_gate_fidelity_mc(channel: NoiseChannel, t: float, gate: GateMatrix,
                          rng: np.random.Generator, samples: int = 100_000) -> Tuple[float, float]:
    """Monte Carlo estimate of ∫dψ ⟨ψ|G† N_t(GψG†) G|ψ⟩ and its standard error."""
    psi = rng.standard_normal((samples, 2)) + 1j * rng.standard_normal((samples, 2))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    phi = psi @ gate.matrix.T
    values = np.zeros(samples)
    for k in channel.kraus(t):
        overlap = np.einsum("ni,ij,nj->n", phi.conj(), k, phi)
        values += np.abs(overlap) ** 2
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(samples))


# ---------------------------------------------------------------------------
# Multi-qubit register helpers (qubit 0 is the most significant)
# ---------------------------------------------------------------------------

def _check_targets(targets: Sequence[int], n_qubits: int) -> None:
    if len(set(targets)) != len(targets):
        raise InvalidParameterError(f"repeated qubit index in {tuple(targets)}")
    for q in targets:
        if not 0 <= q < n_qubits:
            raise InvalidParameterError(f"qubit index {q} out of range for {n_qubits} qubits")


def embed_operator(op: np.ndarray, targets: Sequence[int], n_qubits: int) -> np.ndarray:
    """Lift ``op`` acting on ``targets`` (in that order) to the full register."""
    targets = tuple(targets)
    _check_targets(targets, n_qubits)
    if op.shape != (2 ** len(targets),) * 2:
        raise InvalidParameterError(f"operator of shape {op.shape} does not act on {len(targets)} qubits")
    rest = [q for q in range(n_qubits) if q not in targets]
    full = np.kron(op, np.eye(2 ** len(rest), dtype=complex))
    perm = list(np.argsort(list(targets) + rest))
    tensor = full.reshape([2] * (2 * n_qubits))
    tensor = tensor.transpose(perm + [n_qubits + p for p in perm])
    return tensor.reshape(2 ** n_qubits, 2 ** n_qubits)


def apply_operator(rho: np.ndarray, op: np.ndarray, targets: Sequence[int], n_qubits: int) -> np.ndarray:
    u = embed_operator(op, targets, n_qubits)
    return u @ rho @ u.conj().T


def apply_kraus_to_qubit(rho: np.ndarray, kraus: Sequence[np.ndarray], target: int,
                         n_qubits: int) -> np.ndarray:
    return sum(apply_operator(rho, k, (target,), n_qubits) for k in kraus)


def partial_trace(rho: np.ndarray, keep: Sequence[int], n_qubits: int) -> np.ndarray:
    """Reduced matrix on ``keep``, returned in the order given."""
    keep = tuple(keep)
    _check_targets(keep, n_qubits)
    tensor = np.asarray(rho).reshape([2] * (2 * n_qubits))
    current = n_qubits
    for q in sorted(set(range(n_qubits)) - set(keep), reverse=True):
        tensor = np.trace(tensor, axis1=q, axis2=q + current)
        current -= 1
    ordered = sorted(keep)
    idx = [ordered.index(q) for q in keep]
    tensor = tensor.transpose(idx + [current + i for i in idx])
    return tensor.reshape(2 ** current, 2 ** current)
