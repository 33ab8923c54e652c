"""Device-independent key distribution from non-local games with monogamy of entanglement."""

__version__ = "0.1.0"

from .entropy import (
    AffineBound,
    BoundCurve,
    MinTradeoff,
    affine_moe_bound,
    binary_entropy,
    build_tripartite_upper_curve,
    build_vn_lower_curve,
    constrained_affine_bound,
    min_tradeoff_from_g,
    tangent_of_curve,
)
from .games import (
    GameSpec,
    QuantumStrategy,
    apply_depolarizing,
    chsh_game,
    chsh_honest_strategy,
    classical_value,
    classical_value_tripartite,
    msg_game,
    msg_honest_strategy,
    qber,
    quantum_win_prob,
    verify_pi_simplification,
)
from .keyrate import (
    KeyRateReport,
    ProtocolParams,
    SecurityBudget,
    asymptotic_rate,
    completeness_gamma,
    devetak_winter,
    finite_key_length,
    geat_constants,
    kappa_min,
    min_lec_for_correctness,
    optimize_finite_rate,
    positivity_region,
    robustness_threshold,
    theta,
)
from .protocol import (
    LinearCode,
    ToeplitzHash,
    Transcript,
    honest_devices,
    monte_carlo_completeness,
    monte_carlo_correctness,
    run_protocol,
    toeplitz_hash,
)
from .qmath import QState, eig_projectors, expectation, kron, partial_trace, pauli
