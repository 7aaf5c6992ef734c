"""Comparison methods: worst-case-rate maximization and the centralized
antenna system (CAS) mirror of a distributed layout.

Rate maximization bisects the worst-user SINR target, using the beamforming
solver as a feasibility oracle: a probe counts feasible only when a restored
candidate actually meets the target under the per-RAU budgets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .beamforming import solve_beamforming
from .conic import SolverFailure
from .eetm import SolverSettings, init_directions
from .network import (
    BeamState,
    ChannelRealization,
    Metrics,
    PowerModel,
    SystemConfig,
    effective_gains,
    evaluate_metrics,
)

BISECT_REL_TOL = 1e-3
MAX_PROBES = 60


@dataclass
class CasSystem:
    """All antennas co-located at the cell center: one RAU with the pooled
    antenna count and the pooled transmit budget, no backhaul term."""

    config: SystemConfig
    power_model: PowerModel
    rau_positions: np.ndarray


def build_cas(das_config: SystemConfig, das_power_model: PowerModel,
              cas_circuit: str = "paper") -> CasSystem:
    """Mirror a DAS setup into its centralized counterpart.

    cas_circuit picks the circuit-power convention: "paper" uses
    N*p_c + (sum M)*p_0, "mirrored" re-applies the per-antenna/per-site split
    of the distributed model ((sum M)*p_c + p_0).
    """
    total_m = sum(das_config.M)
    n = das_config.N
    cfg = SystemConfig(
        N=1, K=das_config.K, M=(total_m,),
        cell_radius=das_config.cell_radius,
        min_access_distance=das_config.min_access_distance,
        r_min=das_config.r_min,
        noise_power=das_config.noise_power,
        pathloss_intercept_db=das_config.pathloss_intercept_db,
        pathloss_slope_db=das_config.pathloss_slope_db,
        shadowing_std_db=das_config.shadowing_std_db)
    budget = float(sum(das_power_model.p_max))
    if cas_circuit == "paper":
        pm = PowerModel(p_c=das_power_model.p_0, p_0=n * das_power_model.p_c,
                        p_bh=0.0, p_max=(budget,),
                        ee_denominator=das_power_model.ee_denominator)
    elif cas_circuit == "mirrored":
        pm = PowerModel(p_c=das_power_model.p_c, p_0=das_power_model.p_0,
                        p_bh=0.0, p_max=(budget,),
                        ee_denominator=das_power_model.ee_denominator)
    else:
        raise ValueError("cas_circuit must be 'paper' or 'mirrored'")
    return CasSystem(cfg, pm, np.zeros((1, 2)))


@dataclass
class RateMaxResult:
    state: BeamState
    metrics: Metrics
    t_star: float
    probes: list = field(default_factory=list)      # (t, feasible) history


def max_min_rate(channel: ChannelRealization, config: SystemConfig,
                 power_model: PowerModel, settings: SolverSettings,
                 rng: np.random.Generator) -> RateMaxResult:
    """Maximize the worst-case user rate by bisection on the SINR target.

    The upper bracket is the Cauchy-Schwarz bound min_k sum_n ||h||^2 P^max
    / sigma^2, which is attainable (e.g. single-user), so it is probed first.
    There is no rate floor here: t = 0 (zero beamformers) is always feasible.
    """
    p_max = np.asarray(power_model.p_max, dtype=float)
    norms2 = np.array([np.abs(hn) ** 2 @ np.ones(hn.shape[1]) for hn in channel.h])
    t_ub = float(np.min((norms2.T @ p_max) / channel.sigma2))
    probes: list = []
    best = None

    def probe(t):
        nonlocal best
        try:
            res = solve_beamforming(channel, t, p_max, settings.n_rand, rng)
        except SolverFailure:
            res = None      # undecidable near the boundary: count infeasible
        probes.append((t, res is not None))
        if res is not None and (best is None or t >= best[0]):
            best = (t, res)
        return res is not None

    if t_ub > 0.0 and not probe(t_ub):
        # geometric descent brackets the ceiling in a handful of probes even
        # when the Cauchy-Schwarz bound is orders of magnitude above it
        lo, hi = 0.0, t_ub
        t = 0.25 * t_ub
        while t > 1e-12 * t_ub and len(probes) < MAX_PROBES:
            if probe(t):
                lo = t
                break
            hi = t
            t *= 0.25
        while hi - lo > BISECT_REL_TOL * max(lo, 1e-9 * t_ub) and len(probes) < MAX_PROBES:
            mid = 0.5 * (lo + hi)
            if probe(mid):
                lo = mid
            else:
                hi = mid

    if best is None:
        dirs = init_directions(channel)
        powers = np.zeros(channel.n_rau)
        metrics = evaluate_metrics(effective_gains(channel, dirs), powers,
                                   channel.sigma2, power_model, config)
        return RateMaxResult(BeamState(dirs, powers), metrics, 0.0, probes)

    t_star, bf = best
    fallback = init_directions(channel)
    dirs = []
    powers = np.empty(channel.n_rau)
    for nn, w in enumerate(bf.beamformers):
        nrm = float(np.linalg.norm(w))
        powers[nn] = nrm ** 2
        dirs.append(w / nrm if nrm > 1e-15 else fallback[nn])
    metrics = evaluate_metrics(effective_gains(channel, dirs), powers,
                               channel.sigma2, power_model, config)
    return RateMaxResult(BeamState(dirs, powers), metrics, float(t_star), probes)
