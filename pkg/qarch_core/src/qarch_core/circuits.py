"""
Density-matrix oracle for the NV state-transfer circuits.

SD register: electron (0), carbon (1), optional reference (2).
DD register: networking electron (0), networking carbon (1), computing
electron (2), optional reference (3).

Every gate is preceded by single-qubit depolarizing noise on each qubit it
touches, with the probability taken from the ``GateNoiseTable``. Storage
decoherence is applied afterwards to the stored qubit only.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from .errors import InvalidParameterError
from .kernel import (
    ChannelKind,
    DensityMatrix,
    FidelityTerms,
    GateMatrix,
    NoiseChannel,
    PureState,
    _check_targets,
    apply_kraus_to_qubit,
    apply_operator,
    bell_state,
    depolarizing_kraus,
    embed_operator,
    ent_fidelity_from_gate,
    gate_fidelity_from_ent,
    partial_trace,
    reset_kraus,
    rotation,
    state_fidelity,
)
from .structs import Arch, GateNoiseTable, MemoryParams
from .waiting import move_waiting_dist

logger = logging.getLogger(__name__)

PROB_TOL = 1e-14
QUAD_EPSABS = 1e-11
QUAD_CUTOFF = 50.0

HADAMARD = GateMatrix(np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2))
CNOT = GateMatrix(np.array([[1, 0, 0, 0],
                            [0, 1, 0, 0],
                            [0, 0, 0, 1],
                            [0, 0, 1, 0]], dtype=complex))

# The ideal SD move leaves H|ψ⟩ in the carbon.
SD_STORAGE_FRAME = HADAMARD
DD_STORAGE_FRAME = GateMatrix(np.eye(2, dtype=complex))

_PROJECTORS = (np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex))

InputState = Union[PureState, DensityMatrix]


@dataclass(frozen=True, eq=False)
class CircuitOutcome:
    """Result of one transfer circuit run.

    ``post_state`` is in the logical frame: the stored qubit for a single
    input, or the (reference, stored) pair when no input was given.
    ``transfer_fidelity`` is only set for a single input. ``branch`` holds the
    sampled measurement outcomes of a seeded DD run.
    """
    post_state: DensityMatrix
    post_move_gate_fidelity: float
    post_move_ent_fidelity: float
    transfer_fidelity: Optional[float] = None
    branch: Optional[Tuple[int, int]] = None


@dataclass(frozen=True, eq=False)
class DdBranch:
    m1: int
    m2: int
    probability: float
    post_state: DensityMatrix


@dataclass(frozen=True)
class PostMoveFidelity:
    gate: float
    ent: float


# ---------------------------------------------------------------------------
# Register bookkeeping
# ---------------------------------------------------------------------------

class _Register:
    """Mutable n-qubit density matrix with noisy gate application."""

    def __init__(self, rho: np.ndarray, n_qubits: int, validate: bool = False):
        self.rho = rho
        self.n = n_qubits
        self.validate = validate

    def copy(self) -> "_Register":
        return _Register(self.rho.copy(), self.n, self.validate)

    def _check(self) -> None:
        if self.validate:
            DensityMatrix(self.rho)

    def depolarize(self, qubit: int, p: float) -> None:
        if p > 0.0:
            self.rho = apply_kraus_to_qubit(self.rho, depolarizing_kraus(p), qubit, self.n)
            self._check()

    def reset(self, qubit: int) -> None:
        self.rho = apply_kraus_to_qubit(self.rho, reset_kraus(), qubit, self.n)
        self._check()

    def gate(self, g: GateMatrix, targets: Sequence[int], p: float = 0.0) -> None:
        for q in targets:
            self.depolarize(q, p)
        self.rho = apply_operator(self.rho, g.matrix, targets, self.n)
        self._check()

    def measure(self, qubit: int) -> List[Tuple[int, float, "_Register"]]:
        """Both standard-basis outcomes with Born probabilities and normalized post-states."""
        outcomes = []
        for m, proj in enumerate(_PROJECTORS):
            full = embed_operator(proj, (qubit,), self.n)
            branch = full @ self.rho @ full
            prob = float(np.real(np.trace(branch)))
            if prob > PROB_TOL:
                outcomes.append((m, prob, _Register(branch / prob, self.n, self.validate)))
        return outcomes


def _initial_register(n_qubits: int, electron: Optional[np.ndarray], reference: Optional[int],
                      validate: bool) -> _Register:
    """Qubit 0 holds ``electron``, or is maximally entangled with ``reference``; the rest start in |0⟩."""
    if electron is not None:
        rest = np.zeros((2 ** (n_qubits - 1),) * 2, dtype=complex)
        rest[0, 0] = 1.0
        return _Register(np.kron(electron, rest), n_qubits, validate)
    psi = np.zeros(2 ** n_qubits, dtype=complex)
    psi[0] = 1.0 / math.sqrt(2)
    psi[(1 << (n_qubits - 1)) | (1 << (n_qubits - 1 - reference))] = 1.0 / math.sqrt(2)
    return _Register(np.outer(psi, psi.conj()), n_qubits, validate)


def _as_matrix(state: InputState) -> np.ndarray:
    if isinstance(state, PureState):
        return state.projector()
    if isinstance(state, DensityMatrix):
        if state.dim != 2:
            raise InvalidParameterError(f"input must be a single qubit, got dimension {state.dim}")
        return state.matrix
    raise InvalidParameterError(f"unsupported input state {type(state).__name__}")


def _fidelity_to_input(state: InputState, out: np.ndarray) -> float:
    if isinstance(state, PureState):
        return state_fidelity(DensityMatrix(out), state)
    # Uhlmann fidelity of two qubit states: Tr(rho sigma) + 2 sqrt(det rho det sigma)
    overlap = np.real(np.trace(state.matrix @ out))
    dets = max(np.real(np.linalg.det(state.matrix)) * np.real(np.linalg.det(out)), 0.0)
    return float(overlap + 2.0 * math.sqrt(dets))


def noisy_gate(g: GateMatrix, p_g: float, rho: DensityMatrix, targets: Sequence[int]) -> DensityMatrix:
    """Depolarize each target with probability ``p_g``, then apply ``g`` ideally."""
    targets = tuple(targets)
    _check_targets(targets, rho.n_qubits)
    if g.arity != len(targets):
        raise InvalidParameterError(f"{g.arity}-qubit gate given {len(targets)} targets")
    reg = _Register(rho.matrix.copy(), rho.n_qubits)
    reg.gate(g, targets, p_g)
    return DensityMatrix(reg.rho)


# ---------------------------------------------------------------------------
# Circuits
# ---------------------------------------------------------------------------

def _sd_move_steps(reg: _Register, noise: GateNoiseTable, electron: int, carbon: int,
                   include_electron_init: bool) -> None:
    if include_electron_init:
        reg.depolarize(electron, noise.p_electron_init)
    reg.reset(carbon)
    reg.depolarize(carbon, noise.p_carbon_init)
    reg.gate(rotation("RZ", -math.pi / 2), (carbon,), noise.p_rz_carbon)
    reg.gate(rotation("RCX", math.pi / 2), (electron, carbon), noise.p_rcx)
    reg.gate(rotation("RX", math.pi / 2), (electron,), noise.p_rx_electron)
    reg.gate(rotation("RZ", math.pi / 2), (carbon,), noise.p_rz_carbon)
    reg.gate(rotation("RCX", math.pi / 2), (electron, carbon), noise.p_rcx)
    reg.gate(rotation("RY", -math.pi / 2), (electron,), noise.p_rx_electron)


def _stored_pair(rho: np.ndarray, n_qubits: int, reference: int, stored: int) -> np.ndarray:
    return partial_trace(rho, (reference, stored), n_qubits)


def _finish_pair(pair: np.ndarray, frame: GateMatrix, storage_time: float,
                 memory: Optional[MemoryParams]) -> np.ndarray:
    """Storage decoherence on the physical stored qubit, then back to the logical frame."""
    if storage_time > 0.0:
        if memory is None:
            raise InvalidParameterError("storage_time > 0 needs memory lifetimes")
        channel = NoiseChannel(ChannelKind.COMPOSITE, memory)
        pair = apply_kraus_to_qubit(pair, channel.kraus(storage_time), 1, 2)
    elif storage_time < 0.0:
        raise InvalidParameterError(f"storage time must be non-negative, got {storage_time}")
    return apply_operator(pair, frame.matrix.conj().T, (1,), 2)


def _finish_single(out: np.ndarray, frame: GateMatrix, storage_time: float,
                   memory: Optional[MemoryParams]) -> np.ndarray:
    if storage_time > 0.0:
        if memory is None:
            raise InvalidParameterError("storage_time > 0 needs memory lifetimes")
        out = NoiseChannel(ChannelKind.COMPOSITE, memory).apply(storage_time, out)
    elif storage_time < 0.0:
        raise InvalidParameterError(f"storage time must be non-negative, got {storage_time}")
    u = frame.matrix.conj().T
    return u @ out @ u.conj().T


def _pair_fidelities(pair: np.ndarray) -> Tuple[float, float]:
    f_e = state_fidelity(DensityMatrix(pair), bell_state())
    return float(gate_fidelity_from_ent(f_e, 2)), float(f_e)


def sd_move_circuit(noise: GateNoiseTable, input_state: Optional[InputState] = None, *,
                    storage_time: float = 0.0, memory: Optional[MemoryParams] = None,
                    include_electron_init: Optional[bool] = None,
                    validate_steps: bool = False) -> CircuitOutcome:
    """Move the electron state into carbon storage.

    Without ``input_state`` the electron is half of a maximally entangled pair
    with a reference qubit. Post-move fidelities always come from that
    entangled run; a given input additionally yields ``transfer_fidelity``.
    """
    if include_electron_init is None:
        include_electron_init = noise.include_electron_init

    reg = _initial_register(3, None, 2, validate_steps)
    _sd_move_steps(reg, noise, 0, 1, include_electron_init)
    pair = _finish_pair(_stored_pair(reg.rho, 3, 2, 1), SD_STORAGE_FRAME, storage_time, memory)
    gate_f, ent_f = _pair_fidelities(pair)

    if input_state is None:
        return CircuitOutcome(DensityMatrix(pair), gate_f, ent_f)

    reg = _initial_register(2, _as_matrix(input_state), None, validate_steps)
    _sd_move_steps(reg, noise, 0, 1, include_electron_init)
    out = _finish_single(partial_trace(reg.rho, (1,), 2), SD_STORAGE_FRAME, storage_time, memory)
    return CircuitOutcome(DensityMatrix(out), gate_f, ent_f,
                          transfer_fidelity=_fidelity_to_input(input_state, out))


# Corrections on the receiving electron after each measurement round, keyed by
# outcome. RY(π) and RY(−π) differ by a global phase, so round one needs RX(π)
# on outcome 1 to act differently from outcome 0.
DD_CORRECTIONS = (
    {0: rotation("RY", math.pi), 1: rotation("RX", math.pi)},
    {0: rotation("RY", math.pi), 1: rotation("RZ", math.pi)},
)

Chooser = Callable[[List[Tuple[int, float, _Register]]], List[Tuple[int, float, _Register]]]


def _dd_branches(noise: GateNoiseTable, reg: _Register, include_electron_init: bool,
                 choose: Chooser) -> List[Tuple[int, int, float, _Register]]:
    p_rx = noise.p_rx_electron
    _sd_move_steps(reg, noise, 0, 1, include_electron_init)

    # entangle the two electrons, noiseless
    reg.reset(0)
    reg.reset(2)
    reg.gate(HADAMARD, (0,))
    reg.gate(CNOT, (0, 2))

    reg.gate(rotation("RCX", math.pi / 2), (0, 1), noise.p_rcx)
    reg.gate(rotation("RX", math.pi / 2), (0,), p_rx)

    branches = []
    for m1, p1, r1 in choose(reg.measure(0)):
        r1.gate(DD_CORRECTIONS[0][m1], (2,), p_rx)
        r1.reset(0)
        r1.depolarize(0, noise.p_electron_init)
        r1.gate(rotation("RY", math.pi / 2), (0,), p_rx)
        r1.gate(rotation("RCY", math.pi / 2), (0, 1), noise.p_rcy)
        r1.gate(rotation("RX", math.pi / 2), (0,), p_rx)
        for m2, p2, r2 in choose(r1.measure(0)):
            r2.gate(DD_CORRECTIONS[1][m2], (2,), p_rx)
            r2.gate(rotation("RY", -math.pi / 2), (2,), p_rx)
            branches.append((m1, m2, p1 * p2, r2))
    return branches


def _all_branches(outcomes):
    return outcomes


def _seeded_chooser(rng: np.random.Generator) -> Chooser:
    def choose(outcomes):
        probs = np.array([p for _, p, _ in outcomes])
        pick = int(rng.choice(len(outcomes), p=probs / probs.sum()))
        return [outcomes[pick]]
    return choose


def _dd_run(noise: GateNoiseTable, electron: Optional[np.ndarray], include_electron_init: bool,
            choose: Chooser, validate: bool):
    n = 3 if electron is not None else 4
    reg = _initial_register(n, electron, None if electron is not None else 3, validate)
    return n, _dd_branches(noise, reg, include_electron_init, choose)


def dd_branch_outcomes(noise: GateNoiseTable, input_state: Optional[InputState] = None, *,
                       include_electron_init: Optional[bool] = None) -> List[DdBranch]:
    """All measurement branches of the DD transfer with their probabilities.

    Post-states are the stored qubit (or reference/stored pair) in the logical
    frame, before storage decoherence.
    """
    if include_electron_init is None:
        include_electron_init = noise.include_electron_init
    electron = None if input_state is None else _as_matrix(input_state)
    n, branches = _dd_run(noise, electron, include_electron_init, _all_branches, False)
    out = []
    for m1, m2, prob, reg in branches:
        keep = (2,) if electron is not None else (3, 2)
        out.append(DdBranch(m1, m2, prob, DensityMatrix(partial_trace(reg.rho, keep, n))))
    return out


def dd_move_circuit(noise: GateNoiseTable, input_state: Optional[InputState] = None,
                    rng_seed: Optional[int] = None, *, averaged: bool = False,
                    storage_time: float = 0.0, memory: Optional[MemoryParams] = None,
                    include_electron_init: Optional[bool] = None,
                    validate_steps: bool = False) -> CircuitOutcome:
    """Teleport the networking electron's state into the computing electron.

    With ``averaged=True`` (or no seed) the output is the probability-weighted
    sum over all four measurement branches. Otherwise outcomes are drawn from
    their Born probabilities with ``rng_seed``. Post-move fidelities of a
    single-input run come from the branch-averaged entangled run.
    """
    if include_electron_init is None:
        include_electron_init = noise.include_electron_init
    averaged = averaged or rng_seed is None
    rng = None if averaged else np.random.default_rng(rng_seed)
    choose = _all_branches if averaged else _seeded_chooser(rng)

    def reference_pair(chooser):
        n, branches = _dd_run(noise, None, include_electron_init, chooser, validate_steps)
        pair = sum(prob * _stored_pair(reg.rho, n, 3, 2) for _, _, prob, reg in branches)
        pair = pair / sum(prob for _, _, prob, _ in branches)
        picked = (branches[0][0], branches[0][1]) if len(branches) == 1 else None
        return _finish_pair(pair, DD_STORAGE_FRAME, storage_time, memory), picked

    if input_state is None:
        pair, picked = reference_pair(choose)
        gate_f, ent_f = _pair_fidelities(pair)
        return CircuitOutcome(DensityMatrix(pair), gate_f, ent_f, branch=picked)

    pair, _ = reference_pair(_all_branches)
    gate_f, ent_f = _pair_fidelities(pair)
    n, branches = _dd_run(noise, _as_matrix(input_state), include_electron_init, choose, validate_steps)
    out = sum(prob * partial_trace(reg.rho, (2,), n) for _, _, prob, reg in branches)
    out = out / sum(prob for _, _, prob, _ in branches)
    out = _finish_single(out, DD_STORAGE_FRAME, storage_time, memory)
    picked = (branches[0][0], branches[0][1]) if len(branches) == 1 else None
    logger.debug("DD transfer over %d branch(es), picked %s", len(branches), picked)
    return CircuitOutcome(DensityMatrix(out), gate_f, ent_f,
                          transfer_fidelity=_fidelity_to_input(input_state, out), branch=picked)


# ---------------------------------------------------------------------------
# Closed-form post-move fidelity
# ---------------------------------------------------------------------------

def post_move_terms(noise: GateNoiseTable, m: MemoryParams) -> FidelityTerms:
    """Post-move gate fidelity of the SD circuit as constant + weighted exponentials."""
    p_init, p_rz, p_rcx, p_rx = noise.p_carbon_init, noise.p_rz_carbon, noise.p_rcx, noise.p_rx_electron
    t1_weight = (1 - p_init) * (1 - p_rz) ** 2 * (1 - p_rcx) ** 2 * (1 - 2 * p_rx)
    t2_weight = (2 + p_init * (p_rz - 1) - p_rz) * (1 - p_rz) * (1 - p_rcx) ** 3 * (1 - 4 * p_rx)
    return FidelityTerms(constant=(3.0 - 6.0 * p_rx) / 6.0,
                         terms=((t1_weight / 6.0, 1.0 / m.T1), (t2_weight / 6.0, 1.0 / m.T2)))


def post_move_gate_fidelity_closed(noise: GateNoiseTable, t: float, m: MemoryParams) -> float:
    if not t >= 0.0:
        raise InvalidParameterError(f"storage time must be non-negative, got {t}")
    return float(post_move_terms(noise, m).evaluate(t))


def avg_post_move_fidelity(noise: GateNoiseTable, lambda_m: float, m: MemoryParams) -> PostMoveFidelity:
    """Closed-form post-move fidelity averaged over an Exp(λm) storage time."""
    dist = move_waiting_dist(lambda_m)
    terms = post_move_terms(noise, m)
    gate = terms.constant + sum(w * dist.laplace(decay) for w, decay in terms.terms)
    return PostMoveFidelity(gate=float(gate), ent=float(ent_fidelity_from_gate(gate, 2)))


def avg_post_move_fidelity_quadrature(noise: GateNoiseTable, lambda_m: float, m: MemoryParams) -> float:
    """Quadrature of the closed form against λm·exp(−λm·t)."""
    dist = move_waiting_dist(lambda_m)
    upper = QUAD_CUTOFF / lambda_m
    value, _ = integrate.quad(
        lambda t: lambda_m * math.exp(-lambda_m * t) * post_move_gate_fidelity_closed(noise, t, m),
        0.0, upper, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=500,
        points=[x for x in (1.0 / (lambda_m + 1.0 / m.T1), 1.0 / (lambda_m + 1.0 / m.T2)) if x < upper])
    return float(value + dist.atom_at_zero)


PUBLISHED_GATE_TERMS = (0.5, 0.158682, 0.312165)
PUBLISHED_ENT_TERMS = (0.25, 0.238023, 0.4682475)


def published_post_move_ent_fidelity(lambda_m: float, m: MemoryParams) -> float:
    """Published numeric decomposition of the average post-move entanglement fidelity."""
    if not lambda_m > 0.0:
        raise InvalidParameterError(f"lambda_m must be positive, got {lambda_m}")
    c0, c1, c2 = PUBLISHED_ENT_TERMS
    if math.isinf(lambda_m):
        return c0 + c1 + c2
    x1 = lambda_m * m.T1 / (lambda_m * m.T1 + 1.0)
    x2 = lambda_m * m.T2 / (lambda_m * m.T2 + 1.0)
    return c0 + c1 * x1 + c2 * x2


# ---------------------------------------------------------------------------
# Circuit-oracle post-move fidelity
# ---------------------------------------------------------------------------

def _circuit_pair(noise: GateNoiseTable, arch: Arch) -> Tuple[np.ndarray, GateMatrix]:
    """Physical (reference, stored) state right after the transfer, and its storage frame."""
    arch = Arch(arch)
    if arch is Arch.SD:
        reg = _initial_register(3, None, 2, False)
        _sd_move_steps(reg, noise, 0, 1, noise.include_electron_init)
        return _stored_pair(reg.rho, 3, 2, 1), SD_STORAGE_FRAME
    n, branches = _dd_run(noise, None, noise.include_electron_init, _all_branches, False)
    pair = sum(prob * _stored_pair(reg.rho, n, 3, 2) for _, _, prob, reg in branches)
    return pair, DD_STORAGE_FRAME


def _oracle_curve(noise: GateNoiseTable, m: MemoryParams, arch: Arch) -> Callable[[float], float]:
    pair, frame = _circuit_pair(noise, arch)
    return lambda t: _pair_fidelities(_finish_pair(pair, frame, t, m))[0]


def circuit_post_move_fidelity(noise: GateNoiseTable, t: float, m: MemoryParams,
                               arch: Arch = Arch.SD) -> PostMoveFidelity:
    gate = _oracle_curve(noise, m, arch)(t)
    return PostMoveFidelity(gate=gate, ent=float(ent_fidelity_from_gate(gate, 2)))


def avg_circuit_post_move_fidelity(noise: GateNoiseTable, lambda_m: float, m: MemoryParams,
                                   arch: Arch = Arch.SD) -> PostMoveFidelity:
    """Circuit-oracle post-move fidelity averaged over Exp(λm) by quadrature."""
    if not (lambda_m > 0.0 and math.isfinite(lambda_m)):
        raise InvalidParameterError(f"lambda_m must be positive and finite, got {lambda_m}")
    curve = _oracle_curve(noise, m, arch)
    upper = QUAD_CUTOFF / lambda_m
    gate, _ = integrate.quad(lambda t: lambda_m * math.exp(-lambda_m * t) * curve(t),
                             0.0, upper, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=500)
    return PostMoveFidelity(gate=float(gate), ent=float(ent_fidelity_from_gate(gate, 2)))


def sampled_circuit_post_move_fidelity(noise: GateNoiseTable, lambda_m: float, m: MemoryParams,
                                       rng: np.random.Generator, samples: int = 2000,
                                       arch: Arch = Arch.SD) -> Tuple[float, float]:
    """Monte Carlo over Exp(λm) storage times: (mean gate fidelity, standard error)."""
    if samples < 2:
        raise InvalidParameterError("need at least two samples")
    curve = _oracle_curve(noise, m, arch)
    times = rng.exponential(1.0 / lambda_m, size=samples)
    values = np.array([curve(t) for t in times])
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(samples))
