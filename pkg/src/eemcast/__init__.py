"""Energy-efficient multicast beamforming for MISO distributed antenna systems."""

from .baselines import CasSystem, RateMaxResult, build_cas, max_min_rate
from .beamforming import BeamformingResult, build_relaxation, solve_beamforming
from .eetm import EetmTrace, SolverSettings, init_directions, run_eetm
from .network import (
    BeamState,
    ChannelRealization,
    Metrics,
    PowerModel,
    SystemConfig,
    dbm_to_watt,
    effective_gains,
    evaluate_metrics,
    place_raus,
    place_users,
    sample_channel,
    static_power,
    watt_to_dbm,
)
from .power import (
    PowerSolution,
    PowerSubproblem,
    golden_search,
    min_power_at_target,
    sinr_target_bounds,
    solve_power_allocation,
)

__all__ = [
    "BeamformingResult",
    "BeamState",
    "build_cas",
    "build_relaxation",
    "CasSystem",
    "ChannelRealization",
    "dbm_to_watt",
    "EetmTrace",
    "effective_gains",
    "evaluate_metrics",
    "golden_search",
    "init_directions",
    "max_min_rate",
    "Metrics",
    "min_power_at_target",
    "place_raus",
    "place_users",
    "PowerModel",
    "PowerSolution",
    "PowerSubproblem",
    "RateMaxResult",
    "run_eetm",
    "sample_channel",
    "sinr_target_bounds",
    "solve_beamforming",
    "solve_power_allocation",
    "SolverSettings",
    "static_power",
    "SystemConfig",
    "watt_to_dbm",
]

__version__ = "0.1.0"
