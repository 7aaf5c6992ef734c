"""Independent oracles used by the test suite.

These deliberately re-derive results through different algorithms than the
package (plain loops, brute-force enumeration, grids) so that agreement is
meaningful.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def metrics_by_hand(gains, powers, sigma2, p_c, p_0, p_bh, m_per_rau, include_backhaul=True):
    """Literal re-computation of SINR/rate/total power/EE with scalar loops."""
    n = len(powers)
    k = len(sigma2)
    sinr = []
    for kk in range(k):
        acc = 0.0
        for nn in range(n):
            acc += powers[nn] * gains[nn][kk]
        sinr.append(acc / sigma2[kk])
    rate = math.log2(1.0 + min(sinr))
    circuit = sum(m_per_rau[nn] * p_c for nn in range(n)) + n * p_0
    total = sum(powers) + circuit + (n * p_bh if include_backhaul else 0.0)
    ee = rate / total if total > 0 else 0.0
    return sinr, rate, total, ee


def lp_vertex_oracle(c, A, b, upper, tol=1e-9):
    """Brute-force LP solve by enumerating basic points.

    Requires finite upper bounds so the feasible set is a polytope: a feasible
    problem then has an optimal vertex, and infeasibility is certified by the
    absence of any feasible basic point. Returns (status, objective or None).
    """
    c = np.asarray(c, float)
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    upper = np.asarray(upper, float)
    n = c.shape[0]
    assert np.all(np.isfinite(upper))
    rows = [(A[i], b[i]) for i in range(A.shape[0])]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        rows.append((e, 0.0))
        rows.append((e, upper[j]))
    best = None
    for comb in itertools.combinations(range(len(rows)), n):
        M = np.array([rows[i][0] for i in comb])
        rhs = np.array([rows[i][1] for i in comb])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, rhs)
        if np.any(x < -tol) or np.any(x > upper + tol):
            continue
        if A.shape[0] and np.any(A @ x < b - tol):
            continue
        val = float(c @ x)
        if best is None or val < best:
            best = val
    return ("infeasible", None) if best is None else ("optimal", best)


def restore_power_oracle(gains, sigma2, p_max, target):
    """min sum(p) s.t. sum_n p_n g[n,k] >= target*sigma2_k, 0 <= p <= p_max,
    solved by the vertex oracle. Returns optimal value or None."""
    g = np.asarray(gains, float)
    if target <= 0.0:
        return 0.0
    status, val = lp_vertex_oracle(
        np.ones(g.shape[0]), g.T, target * np.asarray(sigma2, float), np.asarray(p_max, float))
    return val if status == "optimal" else None


def sphere_grid_m2(n_theta=100, n_phi=100):
    """Grid over complex unit 2-vectors modulo a global phase:
    (cos(theta), sin(theta) e^{i phi})."""
    thetas = np.linspace(0.0, math.pi / 2.0, n_theta)
    phis = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)
    tt, pp = np.meshgrid(thetas, phis, indexing="ij")
    out = np.empty((n_theta * n_phi, 2), dtype=complex)
    out[:, 0] = np.cos(tt).ravel()
    out[:, 1] = (np.sin(tt) * np.exp(1j * pp)).ravel()
    return out


def _restore_grid_n1(gains, sigma2, tau, u):
    """Vectorized min-power restore for one RAU: gains (G, K)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        need = tau * np.asarray(sigma2)[None, :] / gains    # (G, K)
    p = need.max(axis=1)
    p = np.where(p <= u[0] + 1e-12, p, np.inf)
    return p


def _restore_grid_n2(g1, g2, sigma2, tau, u):
    """Vectorized min-power restore for two RAUs: g1, g2 of shape (G, K).

    Enumerates intersections of pairs of boundary lines (SINR rows and box
    edges) of the 2-variable LP, vectorized over the direction grid G.
    """
    G, K = g1.shape
    rhs = tau * np.asarray(sigma2)
    lines = []      # (a1, a2, c) arrays over grid: a1 p1 + a2 p2 = c
    ones = np.ones(G)
    zeros = np.zeros(G)
    for k in range(K):
        lines.append((g1[:, k], g2[:, k], np.full(G, rhs[k])))
    lines.append((ones, zeros, zeros))              # p1 = 0
    lines.append((ones, zeros, np.full(G, u[0])))   # p1 = u1
    lines.append((zeros, ones, zeros))              # p2 = 0
    lines.append((zeros, ones, np.full(G, u[1])))   # p2 = u2
    best = np.full(G, np.inf)
    for i in range(len(lines)):
        for j in range(i + 1, len(lines)):
            a1, a2, c = lines[i]
            b1, b2, d = lines[j]
            det = a1 * b2 - a2 * b1
            ok = np.abs(det) > 1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                p1 = (c * b2 - d * a2) / det
                p2 = (a1 * d - b1 * c) / det
            feas = ok & (p1 >= -1e-10) & (p2 >= -1e-10) \
                & (p1 <= u[0] + 1e-10) & (p2 <= u[1] + 1e-10)
            for k in range(K):
                feas &= g1[:, k] * p1 + g2[:, k] * p2 >= rhs[k] - 1e-10 * max(1.0, rhs[k])
            val = np.where(feas, p1 + p2, np.inf)
            np.minimum(best, val, out=best)
    return best


def beamforming_brute_force(channel_h, sigma2, t, p_max, grid=None):
    """Grid search over per-RAU unit directions (at most one RAU with M=2,
    the rest M=1), each restored by the exact 1- or 2-variable LP.

    Returns the best total power found, or None if no grid point is feasible.
    """
    if grid is None:
        grid = sphere_grid_m2()
    sizes = [hn.shape[1] for hn in channel_h]
    assert all(m in (1, 2) for m in sizes) and sizes.count(2) <= 1
    k = channel_h[0].shape[0]
    gains = []
    for hn in channel_h:
        if hn.shape[1] == 1:
            gains.append(np.repeat(np.abs(hn[:, 0])[None, :] ** 2, grid.shape[0], axis=0))
        else:
            gains.append(np.abs(grid.conj() @ hn.T) ** 2)
    if len(sizes) == 1:
        vals = _restore_grid_n1(gains[0], sigma2, t, np.asarray(p_max, float))
    elif len(sizes) == 2:
        vals = _restore_grid_n2(gains[0], gains[1], sigma2, t, np.asarray(p_max, float))
    else:
        best = np.inf
        g_fixed = np.array([g[0] for g in gains])       # all-M=1: single point
        val = restore_power_oracle(g_fixed, sigma2, p_max, t)
        return val
    best = float(np.min(vals))
    return None if not np.isfinite(best) else best
