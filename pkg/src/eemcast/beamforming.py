"""Total-power-minimizing multicast beamformers at a fixed SINR target.

The rank-constrained problem is relaxed to a block SDP; if the relaxation
comes back rank-1 it is tight and the beamformers are read off the principal
eigenpairs, otherwise candidate direction sets are drawn Gaussian with the
relaxation blocks as covariances. Every candidate (including the caller's
incumbent, injected as candidate 0) is restored to exact feasibility by the
min-power LP, which honors heterogeneous per-RAU budgets; the cheapest
feasible candidate wins, so the result never costs more than the incumbent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conic import (
    INFEASIBLE,
    OPTIMAL,
    SdpConstraint,
    SdpProblem,
    SolverFailure,
    solve_sdp,
)
from .network import ChannelRealization
from .power import PowerSubproblem, min_power_at_target

RANK1_RATIO = 1e-6      # lambda_2/lambda_1 at or below this counts as rank-1


@dataclass
class BeamformingResult:
    beamformers: list[np.ndarray]   # w_n (not normalized); ||w_n||^2 is the RAU power
    total_power: float
    method: str                     # "rank1-exact" | "randomized"
    candidates_tried: int
    sdr_objective: float            # relaxation optimum, lower-bounds total_power


def build_relaxation(channel: ChannelRealization, t: float, p_max) -> SdpProblem:
    """The SDP obtained from the min-power beamforming problem by dropping
    rank(W_n) = 1: minimize sum tr(W_n) with per-user SINR rows
    sum_n h^H W_n h >= t*sigma_k^2 and per-RAU trace budgets."""
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    p_max = np.asarray(p_max, dtype=float)
    sizes = [hn.shape[1] for hn in channel.h]
    if p_max.shape != (len(sizes),):
        raise ValueError("need one budget per RAU")
    cons = []
    for k in range(channel.n_users):
        coeffs = [np.outer(hn[k], hn[k].conj()) for hn in channel.h]
        cons.append(SdpConstraint(coeffs, "ge", t * float(channel.sigma2[k])))
    for n, s in enumerate(sizes):
        coeffs = [np.eye(s) if j == n else None for j in range(len(sizes))]
        cons.append(SdpConstraint(coeffs, "le", float(p_max[n])))
    return SdpProblem(sizes, [np.eye(s) for s in sizes], cons)


def _span_bases(channel: ChannelRealization):
    """Orthonormal basis of span{h_{n,k}}_k per RAU (None when full rank).

    Restricting W_n to this span is lossless: projecting any feasible block
    onto it preserves every constraint value and cannot increase the trace.
    """
    bases = []
    reduced = []
    for hn in channel.h:
        k, m = hn.shape
        if m <= k:
            bases.append(None)
            reduced.append(hn)
            continue
        u, s, _ = np.linalg.svd(hn.T, full_matrices=False)
        rank = max(1, int(np.sum(s > (s[0] * 1e-12 if s.size else 0.0))))
        if rank >= m:
            bases.append(None)
            reduced.append(hn)
        else:
            q = u[:, :rank]
            bases.append(q)
            reduced.append(hn @ q.conj())
    return bases, reduced


def solve_beamforming(channel: ChannelRealization, t: float, p_max,
                      n_rand: int = 1000, rng: np.random.Generator | None = None,
                      incumbent: list[np.ndarray] | None = None):
    """Solve the fixed-target beamforming problem.

    Returns a BeamformingResult, or None when the target is unreachable
    (relaxation infeasible, or no candidate survives budget restoration).
    `incumbent` unit directions, when given, are evaluated as candidate 0,
    which makes the returned total power <= the incumbent's restored power.
    """
    p_max = np.asarray(p_max, dtype=float)
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    if n_rand < 1:
        raise ValueError("n_rand must be at least 1")
    n_rau = channel.n_rau
    sigma2 = channel.sigma2
    if t == 0.0:
        w = [np.zeros(hn.shape[1], dtype=complex) for hn in channel.h]
        return BeamformingResult(w, 0.0, "rank1-exact", 0, 0.0)

    bases, red_h = _span_bases(channel)
    red_channel = ChannelRealization(red_h, sigma2)
    st = solve_sdp(build_relaxation(red_channel, t, p_max))
    if st.status == INFEASIBLE:
        return None
    if st.status != OPTIMAL:
        raise SolverFailure("beamforming SDR did not solve cleanly")
    blocks = st.solution
    sdr_obj = float(st.objective)

    # eigenstructure per block: rank-1 test, extraction, covariance factors
    traces = [max(float(np.trace(W).real), 0.0) for W in blocks]
    tr_scale = max(max(traces), 1e-300)
    eigs = [np.linalg.eigh(W) for W in blocks]
    fallback = [None] * n_rau

    def fallback_dir(n):
        if fallback[n] is None:
            s = red_h[n].T @ red_h[n].conj()
            fallback[n] = np.linalg.eigh(s)[1][:, -1]
        return fallback[n]

    rank1 = True
    dirs_r1 = []
    for n, (lam, vec) in enumerate(eigs):
        if traces[n] <= 1e-9 * tr_scale:
            dirs_r1.append(fallback_dir(n))
            continue
        if lam.shape[0] > 1 and lam[-2] > RANK1_RATIO * lam[-1]:
            rank1 = False
        dirs_r1.append(vec[:, -1])

    def gains_reduced(dirs):
        g = np.empty((n_rau, channel.n_users))
        for n in range(n_rau):
            g[n] = np.abs(red_h[n] @ dirs[n].conj()) ** 2
        return g

    def restore(gains):
        sub = PowerSubproblem(gains, sigma2, p_max, r_min=0.0, p_static=0.0)
        return min_power_at_target(sub, t)

    best = None     # (total, powers, dirs_reduced or ("full", dirs))
    tried = 0

    if incumbent is not None:
        g0 = np.empty((n_rau, channel.n_users))
        for n in range(n_rau):
            g0[n] = np.abs(channel.h[n] @ incumbent[n].conj()) ** 2
        tried += 1
        r = restore(g0)
        if r is not None:
            best = (r[0], r[1], ("full", incumbent))

    tried += 1
    r = restore(gains_reduced(dirs_r1))
    if r is not None and (best is None or r[0] < best[0]):
        best = (r[0], r[1], ("red", dirs_r1))

    if not rank1:
        if rng is None:
            rng = np.random.default_rng(0)
        # batch-draw candidates per RAU: xi ~ CN(0, W_n), normalized rows
        cand_dirs = []
        cand_gains = []
        for n, (lam, vec) in enumerate(eigs):
            lam = np.clip(lam, 0.0, None)
            pos = lam > lam[-1] * 1e-14 if lam[-1] > 0.0 else np.zeros_like(lam, bool)
            f = vec[:, pos] * np.sqrt(lam[pos])
            z = (rng.standard_normal((n_rand, int(pos.sum())))
                 + 1j * rng.standard_normal((n_rand, int(pos.sum())))) * np.sqrt(0.5)
            xi = z @ f.T if f.shape[1] else np.zeros((n_rand, lam.shape[0]), complex)
            norms = np.linalg.norm(xi, axis=1)
            bad = norms <= 1e-12 * max(1.0, np.sqrt(traces[n]))
            if np.any(bad):
                xi[bad] = fallback_dir(n)
                norms[bad] = 1.0
            xi /= norms[:, None]
            cand_dirs.append(xi)
            cand_gains.append(np.abs(xi.conj() @ red_h[n].T) ** 2)     # (n_rand, K)

        # vectorized screens: full-power feasibility, and a duality-style
        # lower bound on the restored power for pruning against the best
        top = np.zeros((n_rand, channel.n_users))
        gmax = np.zeros((n_rand, channel.n_users))
        for n in range(n_rau):
            top += cand_gains[n] * p_max[n]
            np.maximum(gmax, cand_gains[n], out=gmax)
        feasible = np.min(top / sigma2[None, :], axis=1) >= t * (1.0 - 1e-12)
        with np.errstate(divide="ignore"):
            lower = np.max(t * sigma2[None, :] / gmax, axis=1)
        for j in range(n_rand):
            tried += 1
            if not feasible[j]:
                continue
            if best is not None and lower[j] >= best[0] - 1e-12:
                continue
            g = np.empty((n_rau, channel.n_users))
            for n in range(n_rau):
                g[n] = cand_gains[n][j]
            r = restore(g)
            if r is not None and (best is None or r[0] < best[0]):
                best = (r[0], r[1], ("red", [cand_dirs[n][j] for n in range(n_rau)]))

    if best is None:
        return None
    total, powers, (space, dirs) = best
    w = []
    for n in range(n_rau):
        d = dirs[n]
        if space == "red" and bases[n] is not None:
            d = bases[n] @ d
        w.append(np.sqrt(powers[n]) * np.asarray(d, dtype=complex))
    method = "rank1-exact" if rank1 else "randomized"
    return BeamformingResult(w, float(total), method, tried, sdr_obj)
