"""Power allocation with fixed beam directions.

The joint (SINR target, powers) problem is solved through its scalar
reformulation: a golden-section search over the target t, where each probe
evaluates f(t), the minimum total transmit power that reaches t under the
per-RAU budgets. f is the optimal value of a small LP and is convex in t, so
the EE ratio log2(1+t) / (f(t) + static power) is strictly quasi-concave and
the search returns its global maximizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conic import INFEASIBLE, OPTIMAL, LinearProgram, SolverFailure, solve_lp

GOLDEN_LO = 0.382
GOLDEN_HI = 0.618


@dataclass
class PowerSubproblem:
    """Data of the fixed-directions power problem.

    gains[n, k] = |w_hat_n^H h_{n,k}|^2; p_static is the circuit(+backhaul)
    term added to the transmit power in the EE denominator.
    """

    gains: np.ndarray
    sigma2: np.ndarray
    p_max: np.ndarray
    r_min: float
    p_static: float

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=float)
        self.sigma2 = np.asarray(self.sigma2, dtype=float)
        self.p_max = np.asarray(self.p_max, dtype=float)
        if self.gains.ndim != 2:
            raise ValueError("gains must be an (N, K) matrix")
        n, k = self.gains.shape
        if self.sigma2.shape != (k,) or self.p_max.shape != (n,):
            raise ValueError("inconsistent subproblem dimensions")
        if np.any(self.gains < 0.0) or np.any(self.sigma2 <= 0.0) or np.any(self.p_max < 0.0):
            raise ValueError("need gains >= 0, sigma2 > 0, p_max >= 0")
        if self.r_min < 0.0 or self.p_static < 0.0:
            raise ValueError("r_min and p_static must be nonnegative")


@dataclass
class PowerSolution:
    t_star: float
    powers: np.ndarray
    ee: float
    rate: float


def sinr_target_bounds(sub: PowerSubproblem) -> tuple[float, float]:
    """Search interval for the SINR target: t_min from the rate requirement,
    t_max the best worst-user SINR reachable at full budgets. t_min > t_max
    signals an unattainable rate requirement to the caller."""
    t_min = 2.0 ** sub.r_min - 1.0
    full = sub.gains.T @ sub.p_max      # (K,)
    t_max = float(np.min(full / sub.sigma2))
    return t_min, t_max


def min_power_at_target(sub: PowerSubproblem, t: float):
    """f(t): minimum total transmit power reaching worst-user SINR
    max(2^r_min - 1, t) under per-RAU budgets, via the conic LP.

    Returns (f, powers) or None when the target is beyond the budgets.
    """
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    tau = max(2.0 ** sub.r_min - 1.0, t)
    n = sub.p_max.shape[0]
    if tau <= 0.0:
        return 0.0, np.zeros(n)
    rows = (sub.gains / sub.sigma2[None, :]).T      # (K, N)
    lp = LinearProgram(np.ones(n), rows, np.full(sub.sigma2.shape[0], tau), sub.p_max)
    st = solve_lp(lp)
    if st.status == INFEASIBLE:
        return None
    if st.status != OPTIMAL:
        raise SolverFailure("power LP did not solve cleanly")
    return st.objective, st.solution


def golden_search(objective, a: float, b: float, epsilon: float) -> float:
    """Golden-section maximization on [a, b] with probes at the 0.382/0.618
    interior points, keeping the bracket with the larger value (ties keep the
    left bracket). Terminates once b - a < epsilon and returns the midpoint of
    the last probe pair; for a strictly quasi-concave objective this is within
    epsilon of the global maximizer."""
    if a > b:
        raise ValueError("need a <= b")
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    while True:
        width = b - a
        t1 = a + GOLDEN_LO * width
        t2 = a + GOLDEN_HI * width
        if objective(t1) >= objective(t2):
            b = t2
        else:
            a = t1
        if b - a < epsilon:
            return 0.5 * (t1 + t2)


def solve_power_allocation(sub: PowerSubproblem, epsilon: float = 1e-4,
                           candidates: tuple = ()):
    """Globally solve the fixed-directions power problem.

    The search runs over u = log1p(t) rather than t itself: the numerator
    log2(1+t) becomes linear in u and f(expm1(u)) stays convex, so the ratio
    is still strictly quasi-concave, while `epsilon` (relative to the u-range)
    now buys uniform accuracy in the rate no matter whether the reachable
    SINR ceiling is 1e-3 or 1e5. Both interval endpoints are additionally
    evaluated exactly: in the power-limited regime the EE peaks at t_max
    itself, and an interior probe epsilon short of it would lose more EE than
    downstream monotonicity tolerances allow. `candidates` lets the caller
    pin extra targets that are evaluated the same way (the alternating loop
    passes its incumbent's achieved SINR so its EE can never regress; f is
    piecewise linear, so the maximizer may sit at a kink where the search
    accuracy alone costs a first-order EE loss).

    Returns a PowerSolution, or None when the rate requirement is not
    attainable under the budgets.
    """
    t_min, t_max = sinr_target_bounds(sub)
    if t_min > t_max:
        return None
    if min_power_at_target(sub, t_min) is None:
        return None

    def ee_of(t):
        r = min_power_at_target(sub, t)
        if r is None:
            return -math.inf        # numerical slack at t ~ t_max: steer inward
        denom = r[0] + sub.p_static
        num = math.log2(1.0 + t)
        if denom <= 0.0:
            return 0.0 if num == 0.0 else math.inf
        return num / denom

    u_min, u_max = math.log1p(t_min), math.log1p(t_max)
    eps_u = max(epsilon * (u_max - u_min), 1e-300)
    u_star = golden_search(lambda u: ee_of(math.expm1(u)), u_min, u_max, eps_u)
    t_star = min(max(math.expm1(u_star), t_min), t_max)

    extra = tuple(min(max(float(t), t_min), t_max) for t in candidates)
    best = None
    for cand in (t_star, t_min, t_max) + extra:
        r = min_power_at_target(sub, cand)
        if r is None:
            continue
        f, powers = r
        rate = math.log2(1.0 + cand)
        denom = f + sub.p_static
        ee = rate / denom if denom > 0.0 else 0.0
        if best is None or ee > best.ee:
            best = PowerSolution(t_star=float(cand), powers=powers,
                                 ee=float(ee), rate=float(rate))
    return best
