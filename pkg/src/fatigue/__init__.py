"""Repeated choice where an action's payoff decays with how often it was used."""

from .model import (
    FrequencyVector,
    History,
    InvariantViolation,
    ProblemSpec,
    SpecError,
    UtilityTrace,
    average_utility,
    empirical_limits,
    frequency,
    stage_payoff,
    utility_trace,
    validate_spec,
)
from .stationary import (
    GreedySolution,
    StationarySolution,
    fatigue_sweep,
    greedy_fixed_point,
    optimal_stationary,
    stationary_value,
)
from .trajectories import (
    BlockStats,
    SwapPassConfig,
    SwapRecord,
    apply_swap,
    beneficial_swap_pass,
    block_stats,
    generate_doubling_blocks,
    generate_greedy,
    generate_tracking,
)
from .horizon import ConvergenceTable, HorizonResult, v_convergence, v_enumerate, v_exact
from .discounted import (
    DiscountParams,
    DiscountedState,
    ValueInterval,
    discounted_frequency,
    discounted_utility,
    discounted_value,
    patience_sweep,
)

__version__ = "0.1.0"
