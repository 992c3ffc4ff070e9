"""Exact random-walk approximations of the flashing Brownian ratchet and Parrondo's games."""

from .model import (
    FlashingPhase,
    RatchetParams,
    drift_mu,
    parse_rational,
    ratchet_invariant_cdf,
    ratchet_invariant_density,
    sawtooth_V,
)
from .parrondo import (
    CycleChain,
    GameBSpec,
    invariant_measure_B,
    mean_profit_mixture,
    mean_profit_pattern,
    mean_profit_single,
    p0_p1_from_rho,
    solve_p1_from_p0,
)
from .walk import (
    FlashingSchedule,
    LatticeDistribution,
    compute_m,
    evolve_flashing,
    rescaled_density,
    step_ratchet,
    step_symmetric,
)
from .stationary import (
    StationaryResult,
    WrappedCycleMatrix,
    build_wrapped_matrix,
    mean_displacement_stationary,
    recenter,
    stationary_distribution,
)
from .stats import (
    PeakStats,
    lambda_sweep,
    n_sweep,
    normal_reference_areas,
    optimize_tau,
    peak_partition_boundaries,
    peak_stats,
)
from .mc import McConfig, ks_distance, simulate_flashing, simulate_ratchet

__version__ = "0.1.0"
