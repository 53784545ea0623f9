"""
qarch_core: queueing and fidelity models of single-device (SD) and
double-device (DD) networked quantum processors.
"""

from .errors import (
    EmptySampleError,
    HypothesisError,
    InvalidParameterError,
    InvalidStateError,
    QarchError,
    SimulationInvariantError,
    StabilityError,
)
from .structs import Arch, ArchParams, GateNoiseTable, MemoryParams
from .kernel import (
    ChannelKind,
    DensityMatrix,
    FidelityTerms,
    GateMatrix,
    NoiseChannel,
    PureState,
    apply_channel,
    bell_state,
    choi_state,
    ent_fidelity_from_gate,
    fidelity_terms,
    gate_fidelity_bowdrey,
    gate_fidelity_choi_oracle,
    gate_fidelity_closed,
    gate_fidelity_from_ent,
    haar_gate_fidelity_mc,
    haar_random_state,
    haar_random_unitary,
    partial_trace,
    partial_transpose,
    pauli,
    rotation,
    state_fidelity,
    symmetric_projector,
)
from .qbd import (
    QbdBlocks,
    QbdSolution,
    assemble_generator,
    boundary_probs,
    build_blocks,
    drift_margin,
    mean_drift_ok,
    rate_matrix,
    rate_matrix_from_inverse,
    require_drift,
    spectral_radius,
    split_levels,
    truncated_stationary,
)
from .waiting import WaitingTimeDist, move_waiting_dist, waiting_dist_dd, waiting_dist_sd
from .fidelity import (
    FidelityReport,
    Winner,
    avg_fidelity_for_arch,
    avg_fidelity_over_dist,
    avg_fidelity_quadrature,
    compare_architectures,
    composite_condition,
    f1_avg,
    f2_avg,
    f_e_premove,
    lemma_inequalities_check,
    sd_memory_sufficient_bound,
)
from .circuits import (
    SD_STORAGE_FRAME,
    CircuitOutcome,
    DdBranch,
    PostMoveFidelity,
    avg_circuit_post_move_fidelity,
    avg_post_move_fidelity,
    avg_post_move_fidelity_quadrature,
    circuit_post_move_fidelity,
    dd_branch_outcomes,
    dd_move_circuit,
    noisy_gate,
    published_post_move_ent_fidelity,
    post_move_gate_fidelity_closed,
    sampled_circuit_post_move_fidelity,
    sd_move_circuit,
)

__version__ = "0.1.0"
