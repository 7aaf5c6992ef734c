"""Alternating energy-efficiency maximization (EETM, also written EEMT).

Each iteration solves the power allocation at fixed beam directions, then
re-optimizes the beam directions at the resulting SINR target with the
incumbent injected, which makes the EE trace monotone nondecreasing. The
loop stops when the EE gain drops to `delta` or a safety iteration cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .beamforming import solve_beamforming
from .conic import SolverFailure
from .network import (
    BeamState,
    ChannelRealization,
    Metrics,
    PowerModel,
    SystemConfig,
    effective_gains,
    evaluate_metrics,
    static_power,
)
from .power import PowerSubproblem, solve_power_allocation

MONOTONE_SLACK = 1e-6


@dataclass
class SolverSettings:
    delta: float = 1e-4         # EE convergence accuracy, bit/Hz/Joule
    epsilon: float = 1e-4       # golden-search accuracy on the SINR target
    n_rand: int = 50            # randomization candidates per beam update
    max_iters: int = 20         # safety cap on outer iterations

    def __post_init__(self):
        if self.delta <= 0.0 or self.epsilon <= 0.0:
            raise ValueError("delta and epsilon must be positive")
        if self.max_iters < 1 or self.n_rand < 1:
            raise ValueError("max_iters and n_rand must be at least 1")


@dataclass
class EetmIteration:
    l: int
    t: float | None             # None for the l=0 baseline point
    powers: np.ndarray
    directions: list[np.ndarray]
    ee: float
    rate: float
    total_power: float


@dataclass
class EetmTrace:
    iterations: list[EetmIteration] = field(default_factory=list)
    converged: bool = False
    final_state: BeamState | None = None
    final_metrics: Metrics | None = None

    @property
    def ee_path(self) -> np.ndarray:
        return np.array([it.ee for it in self.iterations])


def _phase_fix(v: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the first significant component is
    real-positive; fixes the eigenvector sign/phase ambiguity."""
    mags = np.abs(v)
    idx = int(np.argmax(mags > 1e-8 * mags.max())) if mags.max() > 0.0 else 0
    piv = v[idx]
    if abs(piv) > 0.0:
        v = v * (piv.conj() / abs(piv))
    return v


def init_directions(channel: ChannelRealization) -> list[np.ndarray]:
    """Deterministic starting directions: per RAU, the principal eigenvector
    of the noise-weighted channel covariance sum_k h h^H / sigma_k^2."""
    dirs = []
    for hn in channel.h:
        scaled = hn / np.sqrt(channel.sigma2)[:, None]
        cov = scaled.T @ scaled.conj()
        vec = np.linalg.eigh(cov)[1][:, -1]
        vec = _phase_fix(vec)
        dirs.append(vec / np.linalg.norm(vec))
    return dirs


def run_eetm(channel: ChannelRealization, config: SystemConfig,
             power_model: PowerModel, settings: SolverSettings,
             rng: np.random.Generator):
    """Run the alternating loop from full power and eigen directions.

    Returns an EetmTrace, or None when the rate requirement is unattainable
    for this channel drop (detected at the first power step).
    """
    p_max = np.asarray(power_model.p_max, dtype=float)
    p_stat = static_power(power_model, config)
    dirs = init_directions(channel)
    powers = p_max.copy()
    gains = effective_gains(channel, dirs)
    met = evaluate_metrics(gains, powers, channel.sigma2, power_model, config)
    trace = EetmTrace()
    trace.iterations.append(EetmIteration(
        0, None, powers.copy(), [d.copy() for d in dirs],
        met.ee, met.rate, met.total_power))
    ee_prev = met.ee

    for l in range(1, settings.max_iters + 1):
        sub = PowerSubproblem(gains, channel.sigma2, p_max, config.r_min, p_stat)
        try:
            # the current point's worst-user SINR is a feasible target;
            # evaluating it exactly keeps the EE sequence nondecreasing
            # whatever the search accuracy does around piecewise-linear kinks
            ps = solve_power_allocation(sub, settings.epsilon,
                                        candidates=(float(met.sinr.min()),))
            if ps is None:
                if l == 1:
                    return None     # r_min unattainable for this drop
                raise SolverFailure("power step became infeasible mid-run")
            bf = solve_beamforming(channel, ps.t_star, p_max, settings.n_rand,
                                   rng, incumbent=dirs)
            if bf is None:
                raise SolverFailure("beam step found no feasible candidate "
                                    "despite incumbent")
        except SolverFailure:
            if l == 1:
                raise
            # improvement steps at a stationary point can become numerically
            # undecidable; the incumbent state is feasible and certified, so
            # stop there instead of discarding the drop
            break
        new_dirs = []
        new_powers = np.empty(len(dirs))
        for n, w in enumerate(bf.beamformers):
            nrm = float(np.linalg.norm(w))
            new_powers[n] = nrm ** 2
            new_dirs.append(w / nrm if nrm > 1e-15 else dirs[n])
        dirs, powers = new_dirs, new_powers
        gains = effective_gains(channel, dirs)
        met = evaluate_metrics(gains, powers, channel.sigma2, power_model, config)
        if met.ee < ee_prev - MONOTONE_SLACK:
            raise SolverFailure("EE decreased along the iteration")
        trace.iterations.append(EetmIteration(
            l, ps.t_star, powers.copy(), [d.copy() for d in dirs],
            met.ee, met.rate, met.total_power))
        if abs(met.ee - ee_prev) <= settings.delta:
            trace.converged = True
            break
        ee_prev = met.ee

    trace.final_state = BeamState(dirs, powers)
    trace.final_metrics = met
    return trace
