"""Discrete-time quantum walk on a line with coin dephasing on the half-line x >= 0."""

from .blocks import CoinBlockMatrix, pure_state_to_blocks
from .channel import (
    DecoherenceModel,
    channel_step,
    conditional_factors,
    evolve_channel,
    kraus_completeness_check,
    traced_step_terms,
)
from .chirality import (
    GcdPoint,
    GcdSeries,
    gcd_from_coin,
    gcd_recursion_step,
    reduce_to_coin,
    stationary_estimate,
    verify_recursion,
)
from .lattice import (
    CoinOperator,
    InitialState,
    LatticeWindow,
    SpinorField,
    adjoint_step,
    coin_matrix,
    unitary_step,
)
from .observables import (
    PowerLawFit,
    fit_power_law,
    half_line_masses,
    position_distribution,
    spread_series,
)
from .trajectories import (
    EnsembleConfig,
    UnravelingMode,
    compare_unravelings,
    run_ensemble,
    trajectory_step,
)

__version__ = "0.1.0"
