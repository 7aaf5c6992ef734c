"""Cell geometry, stochastic channel generation, and closed-form link metrics.

All internal computation is in watts and linear gains; dBm/dB enter only
through the conversion helpers at the top of the module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def dbm_to_watt(x_dbm: float) -> float:
    """Convert dBm to watts. float('-inf') maps to exactly 0 W."""
    if x_dbm == -math.inf:
        return 0.0
    return 10.0 ** (x_dbm / 10.0) * 1e-3


def watt_to_dbm(p_watt: float) -> float:
    """Convert watts to dBm. 0 W maps to float('-inf')."""
    if p_watt < 0.0:
        raise ValueError("power must be nonnegative")
    if p_watt == 0.0:
        return -math.inf
    return 10.0 * math.log10(p_watt * 1e3)


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


@dataclass
class SystemConfig:
    """Cell layout and channel-model parameters.

    Defaults reproduce the reference scenario of the experiment harness:
    four 4-antenna RAUs on a ring inside a 1 km cell, six single-antenna
    users, 38.46 + 35*log10(d) path loss, 8 dB log-normal shadowing and
    -101 dBm receiver noise.
    """

    N: int = 4                      # number of RAUs
    K: int = 6                      # number of users
    M: tuple[int, ...] = (4, 4, 4, 4)   # antennas per RAU; an int means uniform
    cell_radius: float = 1000.0     # m
    min_access_distance: float = 20.0   # m
    r_min: float = 0.0              # minimum worst-case rate, bit/s/Hz
    noise_power: float = dbm_to_watt(-101.0)    # per-user sigma_k^2, W
    pathloss_intercept_db: float = 38.46
    pathloss_slope_db: float = 35.0     # dB per decade of distance
    shadowing_std_db: float = 8.0

    def __post_init__(self):
        if isinstance(self.M, (int, np.integer)):
            self.M = (int(self.M),) * int(self.N)
        else:
            self.M = tuple(int(m) for m in self.M)
        self.N = int(self.N)
        self.K = int(self.K)
        if self.N < 1 or self.K < 1:
            raise ValueError("N and K must be at least 1")
        if len(self.M) != self.N or any(m < 1 for m in self.M):
            raise ValueError("M must list >=1 antennas for each of the N RAUs")
        if not (self.cell_radius > self.min_access_distance > 0.0):
            raise ValueError("require cell_radius > min_access_distance > 0")
        if self.r_min < 0.0:
            raise ValueError("r_min must be nonnegative")
        if not self.noise_power > 0.0:
            raise ValueError("noise_power must be positive")


@dataclass
class PowerModel:
    """Power bookkeeping: transmit budgets plus circuit/backhaul overhead (W).

    ee_denominator selects the static term used in total power and EE:
    "full" adds the per-link backhaul term N*p_bh, "p2_literal" omits it.
    """

    p_c: float                      # circuit power per antenna
    p_0: float                      # static power per RAU
    p_bh: float                     # backhaul power per RAU link
    p_max: tuple[float, ...]        # per-RAU transmit budget
    ee_denominator: str = "full"

    def __post_init__(self):
        self.p_max = tuple(float(p) for p in self.p_max)
        if min(self.p_c, self.p_0, self.p_bh) < 0.0 or any(p < 0.0 for p in self.p_max):
            raise ValueError("all power-model entries must be nonnegative")
        if self.ee_denominator not in ("full", "p2_literal"):
            raise ValueError("ee_denominator must be 'full' or 'p2_literal'")


def static_power(power_model: PowerModel, config: SystemConfig) -> float:
    """Total non-transmit power: sum_n M_n*p_c + N*p_0 (+ N*p_bh if 'full')."""
    if len(power_model.p_max) != config.N:
        raise ValueError("power model budget list does not match RAU count")
    p = power_model.p_c * sum(config.M) + config.N * power_model.p_0
    if power_model.ee_denominator == "full":
        p += config.N * power_model.p_bh
    return p


@dataclass
class ChannelRealization:
    """One channel drop: h[n] has shape (K, M_n), h[n][k] is the RAU-n -> user-k
    vector; sigma2 holds the K per-user noise powers in watts."""

    h: list[np.ndarray]
    sigma2: np.ndarray

    def __post_init__(self):
        self.h = [np.ascontiguousarray(hn, dtype=complex) for hn in self.h]
        self.sigma2 = np.asarray(self.sigma2, dtype=float)
        if self.sigma2.ndim != 1 or not np.all(self.sigma2 > 0.0):
            raise ValueError("sigma2 must be a 1-D array of positive noise powers")
        k = self.sigma2.shape[0]
        for hn in self.h:
            if hn.ndim != 2 or hn.shape[0] != k:
                raise ValueError("each h[n] must have shape (K, M_n)")

    @property
    def n_rau(self) -> int:
        return len(self.h)

    @property
    def n_users(self) -> int:
        return int(self.sigma2.shape[0])


@dataclass
class BeamState:
    """Per-RAU unit beam directions and transmit powers."""

    directions: list[np.ndarray]
    powers: np.ndarray

    def __post_init__(self):
        self.directions = [np.asarray(d, dtype=complex) for d in self.directions]
        self.powers = np.asarray(self.powers, dtype=float)
        if len(self.directions) != self.powers.shape[0]:
            raise ValueError("directions and powers must have one entry per RAU")
        for d in self.directions:
            if abs(np.linalg.norm(d) - 1.0) > 1e-9:
                raise ValueError("beam directions must be unit-norm within 1e-9")
        if np.any(self.powers < 0.0):
            raise ValueError("powers must be nonnegative")


@dataclass
class Metrics:
    sinr: np.ndarray        # per user
    rate: float             # worst-case user rate, bit/s/Hz
    total_power: float      # W
    ee: float               # bit/Hz/Joule


def place_raus(n_rau: int, cell_radius: float) -> np.ndarray:
    """RAU ring layout: radius r = 2*R*sin(pi/N)/(3*pi/N), RAU n at angle
    2*pi*(n-1)/N. Returns an (N, 2) array of positions in meters."""
    if n_rau < 1:
        raise ValueError("need at least one RAU")
    if cell_radius <= 0.0:
        raise ValueError("cell_radius must be positive")
    if n_rau == 1:
        return np.zeros((1, 2))     # sin(pi) = 0 exactly in the limit
    r = 2.0 * cell_radius * math.sin(math.pi / n_rau) / (3.0 * math.pi / n_rau)
    ang = TWO_PI * np.arange(n_rau) / n_rau
    return np.column_stack([r * np.cos(ang), r * np.sin(ang)])


def place_users(config: SystemConfig, rau_positions: np.ndarray,
                rng: np.random.Generator) -> np.ndarray:
    """Drop K users uniformly in the cell disc, re-drawing any position closer
    than min_access_distance to some RAU (keeps the uniform-in-disc law
    conditional on feasibility)."""
    rau = np.asarray(rau_positions, dtype=float)
    users = np.empty((config.K, 2))
    k = 0
    while k < config.K:
        rad = config.cell_radius * math.sqrt(rng.uniform())
        ang = rng.uniform(0.0, TWO_PI)
        pos = np.array([rad * math.cos(ang), rad * math.sin(ang)])
        if np.min(np.hypot(*(rau - pos).T)) >= config.min_access_distance:
            users[k] = pos
            k += 1
    return users


def path_loss_db(d, intercept_db: float = 38.46, slope_db: float = 35.0):
    """Distance-dependent path loss intercept_db + slope_db*log10(d), d in m.
    The corresponding linear gain is 10^(-value/10)."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("distance must be positive")
    out = intercept_db + slope_db * np.log10(d)
    return float(out) if out.ndim == 0 else out


def sample_channel(config: SystemConfig, rau_positions: np.ndarray,
                   user_positions: np.ndarray, rng: np.random.Generator) -> ChannelRealization:
    """Draw one channel realization h_{n,k} = sqrt(alpha*S) * h_tilde with
    path loss alpha, log-normal shadowing S (std shadowing_std_db) and
    i.i.d. unit-variance circularly-symmetric Gaussian small-scale fading."""
    rau = np.asarray(rau_positions, dtype=float).reshape(config.N, 2)
    users = np.asarray(user_positions, dtype=float).reshape(config.K, 2)
    diff = rau[:, None, :] - users[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])     # (N, K)
    if np.any(dist < config.min_access_distance - 1e-9):
        raise ValueError("user position violates the minimum access distance")
    pl = path_loss_db(dist, config.pathloss_intercept_db, config.pathloss_slope_db)
    alpha = 10.0 ** (-pl / 10.0)
    shadow_db = rng.normal(0.0, config.shadowing_std_db, size=(config.N, config.K))
    gain = alpha * 10.0 ** (shadow_db / 10.0)
    h = []
    for n in range(config.N):
        m = config.M[n]
        z = (rng.standard_normal((config.K, m)) + 1j * rng.standard_normal((config.K, m)))
        z *= math.sqrt(0.5)
        h.append(np.sqrt(gain[n])[:, None] * z)
    sigma2 = np.full(config.K, config.noise_power)
    return ChannelRealization(h, sigma2)


def effective_gains(channel: ChannelRealization, directions: list[np.ndarray]) -> np.ndarray:
    """g[n, k] = |w_hat_n^H h_{n,k}|^2 for unit directions w_hat_n. Shape (N, K)."""
    n_rau = channel.n_rau
    if len(directions) != n_rau:
        raise ValueError("need one direction per RAU")
    g = np.empty((n_rau, channel.n_users))
    for n in range(n_rau):
        w = np.asarray(directions[n], dtype=complex)
        if w.shape != (channel.h[n].shape[1],):
            raise ValueError("direction length does not match the RAU antenna count")
        if abs(np.linalg.norm(w) - 1.0) > 1e-6:
            raise ValueError("directions must be unit-norm")
        g[n] = np.abs(channel.h[n] @ w.conj()) ** 2
    return g


def evaluate_metrics(gains: np.ndarray, powers: np.ndarray, sigma2: np.ndarray,
                     power_model: PowerModel, config: SystemConfig) -> Metrics:
    """Closed-form metrics: per-user SINR, worst-case rate, total power and EE."""
    g = np.asarray(gains, dtype=float)
    p = np.asarray(powers, dtype=float)
    if np.any(p < 0.0) or np.any(g < 0.0):
        raise ValueError("gains and powers must be nonnegative")
    sinr = (g * p[:, None]).sum(axis=0) / np.asarray(sigma2, dtype=float)
    rate = math.log2(1.0 + float(sinr.min()))
    total = float(p.sum()) + static_power(power_model, config)
    ee = rate / total if total > 0.0 else 0.0
    return Metrics(sinr=sinr, rate=rate, total_power=total, ee=ee)
