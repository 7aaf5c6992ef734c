"""Acceptance suite.

Each test runs one acceptance criterion at its stated tolerance and prints a
PASS line with the measured numbers. The two campaign criteria reuse the
shipped config files and record their wall time against the runtime targets.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from eemcast.beamforming import solve_beamforming
from eemcast.conic import LinearProgram, solve_lp
from eemcast.experiments import (
    emit_plotdata,
    load_config,
    run_convergence_experiment,
    run_ee_sweep,
)
from eemcast.network import ChannelRealization
from eemcast.power import (
    PowerSubproblem,
    min_power_at_target,
    sinr_target_bounds,
    solve_power_allocation,
)
from oracles import beamforming_brute_force, lp_vertex_oracle, restore_power_oracle

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
WORKERS = 2

NEG_INF = -math.inf


def _ok(number, name, detail):
    print(f"ACCEPTANCE {number} ({name}): PASS - {detail}")


@pytest.fixture(scope="module")
def fig2_campaign():
    cfg = load_config(CONFIG_DIR / "fig2.cfg")
    t0 = time.perf_counter()
    ds = run_convergence_experiment(cfg, workers=WORKERS)
    return ds, cfg, time.perf_counter() - t0


@pytest.fixture(scope="module")
def fig3_campaign():
    cfg = load_config(CONFIG_DIR / "fig3.cfg")
    t0 = time.perf_counter()
    ds = run_ee_sweep(cfg, workers=WORKERS)
    return ds, cfg, time.perf_counter() - t0


def random_subproblem(rng, n_max=4, k_max=6):
    n = int(rng.integers(1, n_max + 1))
    k = int(rng.integers(1, k_max + 1))
    return PowerSubproblem(rng.uniform(0.05, 2.0, (n, k)), rng.uniform(0.3, 2.0, k),
                           rng.uniform(0.5, 3.0, n), 0.0, rng.uniform(0.5, 5.0))


def test_criterion_1_monotone_convergence(fig2_campaign):
    ds, cfg, elapsed = fig2_campaign
    delta = cfg.settings.delta
    traces = {}
    for row in ds.rows:
        assert row[-1] == "ok", f"drop {row[4]} at {row[2]} dBm: status {row[-1]}"
        traces.setdefault((row[2], row[4]), []).append(row[9])
    assert len(traces) == 3 * cfg.drops
    n_within_2 = 0
    for key, ees in traces.items():
        ees = np.asarray(ees)
        assert np.all(np.diff(ees) >= -1e-6), f"EE trace decreased for {key}"
        gaps = np.abs(np.diff(ees))
        stop = next((l for l, g in enumerate(gaps, start=1) if g <= delta), None)
        assert stop is not None and stop <= 5, f"no delta-stop within 5 iterations for {key}"
        n_within_2 += stop <= 2
    share = n_within_2 / len(traces)
    assert share >= 0.80, f"only {share:.0%} of drops converged within 2 iterations"
    assert elapsed < 300.0, f"fig2 campaign took {elapsed:.0f} s (target < 300 s)"
    _ok(1, "monotone convergence",
        f"{len(traces)} traces nondecreasing, all stopped within 5 iterations, "
        f"{share:.0%} within 2, campaign {elapsed:.0f} s")


def test_criterion_2_convexity_of_min_power():
    rng = np.random.default_rng(220)
    violations = 0
    for _ in range(100):
        sub = random_subproblem(rng)
        _, t_max = sinr_target_bounds(sub)
        t1, t2 = np.sort(rng.uniform(0.0, t_max, 2))
        f1 = min_power_at_target(sub, float(t1))[0]
        f2 = min_power_at_target(sub, float(t2))[0]
        fm = min_power_at_target(sub, float(0.5 * (t1 + t2)))[0]
        violations += fm > 0.5 * (f1 + f2) + 1e-6
    assert violations == 0
    _ok(2, "min-power convexity", "100 random midpoint checks, zero violations")


def test_criterion_3_power_allocation_vs_grid():
    rng = np.random.default_rng(330)
    violations = 0
    for _ in range(20):
        sub = random_subproblem(rng, n_max=3, k_max=4)
        sol = solve_power_allocation(sub, epsilon=1e-4)
        t_min, t_max = sinr_target_bounds(sub)
        best = 0.0
        for t in np.linspace(t_min, t_max, 2000):
            r = min_power_at_target(sub, float(t))
            if r is not None:
                best = max(best, math.log2(1.0 + t) / (r[0] + sub.p_static))
        violations += abs(sol.ee - best) > 1e-3 * best
    assert violations == 0
    _ok(3, "power allocation vs 2000-point grid", "20 instances within 1e-3 relative")


def test_criterion_4_sdr_oracles():
    rng = np.random.default_rng(440)
    # (a) single-user closed form: power = t sigma^2 / ||h||^2
    for i in range(10):
        m = int(rng.integers(1, 6))
        h = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        ch = ChannelRealization([h[None, :]], [1.0])
        t = float(rng.uniform(0.5, 4.0))
        p_cap = 1.25 * t / np.linalg.norm(h) ** 2
        res = solve_beamforming(ch, t, [p_cap], n_rand=50, rng=rng)
        expect = t / np.linalg.norm(h) ** 2
        assert abs(res.total_power - expect) <= 1e-6 * max(1.0, expect)
        assert res.sdr_objective <= res.total_power + 1e-6
    # (b) brute-force direction grid on small shapes
    shapes = [(1, [2]), (2, [2, 1]), (2, [1, 2]), (3, [1, 1, 1]), (1, [2]),
              (2, [1, 1]), (1, [2]), (2, [2, 1]), (2, [1, 2]), (1, [2])]
    for i, (n, ms) in enumerate(shapes):
        k = 1 + (i % 2)
        h = [(rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m)))
             * math.sqrt(0.5) for m in ms]
        ch = ChannelRealization(h, np.ones(k))
        p_max = rng.uniform(0.8, 1.6, n)
        tmax = min(sum(np.linalg.norm(ch.h[j][kk]) ** 2 * p_max[j] for j in range(n))
                   for kk in range(k))
        t = 0.5 * float(tmax)
        ref = beamforming_brute_force(ch.h, ch.sigma2, t, p_max)
        res = solve_beamforming(ch, t, p_max, n_rand=2000, rng=rng)
        assert res is not None and ref is not None
        assert abs(res.total_power - ref) <= 0.05 * ref
        assert res.sdr_objective <= res.total_power + 1e-6
    # (c) relaxation bound on assorted random instances
    for _ in range(10):
        n = int(rng.integers(1, 4))
        ms = [int(rng.integers(1, 4)) for _ in range(n)]
        k = int(rng.integers(1, 5))
        h = [(rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m)))
             * math.sqrt(0.5) for m in ms]
        ch = ChannelRealization(h, np.ones(k))
        p_max = rng.uniform(0.5, 2.0, n)
        tmax = min(sum(np.linalg.norm(ch.h[j][kk]) ** 2 * p_max[j] for j in range(n))
                   for kk in range(k))
        res = solve_beamforming(ch, 0.6 * float(tmax), p_max, n_rand=100, rng=rng)
        assert res is not None
        assert res.sdr_objective <= res.total_power + 1e-6
    _ok(4, "SDR oracles", "matched filter 1e-6 on 10, direction grid 5% on 10, "
                          "relaxation bound on every result")


def test_criterion_5_lp_vs_vertex_enumeration():
    rng = np.random.default_rng(550)
    for i in range(50):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 6))
        A = rng.uniform(-2, 2, (m, n))
        b = rng.uniform(-2, 2, m)
        c = rng.uniform(-2, 2, n)
        upper = rng.uniform(0.2, 3.0, n)
        got = solve_lp(LinearProgram(c, A, b, upper))
        status, ref = lp_vertex_oracle(c, A, b, upper)
        assert got.status == status, f"instance {i}: {got.status} vs {status}"
        if status == "optimal":
            assert abs(got.objective - ref) <= 1e-8, f"instance {i}"
    _ok(5, "LP vs vertex enumeration", "50 instances, status + objective within 1e-8")


def test_criterion_6_ee_sweep_shape(fig3_campaign):
    ds, cfg, elapsed = fig3_campaign
    delta = cfg.settings.delta
    grid = cfg.p_max_grid_dbm
    mean = {}
    for row in ds.agg_rows:
        _, method, p_max, p_bh, used, n_inf, n_fail, ee_mean, _ = row
        assert n_fail == 0, f"solver failures at {(method, p_max, p_bh)}"
        assert used == cfg.drops
        mean[(method, p_max, p_bh)] = ee_mean

    dasee0 = [mean[("das-ee", p, NEG_INF)] for p in grid]
    # (a) nondecreasing in the budget (delta-stop jitter allowance), flat top
    assert all(b - a >= -delta for a, b in zip(dasee0, dasee0[1:])), dasee0
    assert abs(dasee0[-1] - dasee0[-2]) <= 0.01 * dasee0[-2]
    # (b) rate-max has a maximum then strictly decreases
    rate0 = [mean[("das-rate", p, NEG_INF)] for p in grid]
    peak = int(np.argmax(rate0))
    assert peak < len(grid) - 1, "rate-max EE still rising at the top of the grid"
    assert all(b < a for a, b in zip(rate0[peak:], rate0[peak + 1:])), rate0
    # (c) EE-max beats rate-max at every grid point
    for p in grid:
        for b in cfg.p_bh_grid_dbm:
            assert mean[("das-ee", p, b)] >= mean[("das-rate", p, b)], (p, b)
    # (d) distributed beats centralized when backhaul is free
    for p in grid:
        assert mean[("das-ee", p, NEG_INF)] > mean[("cas-ee", p, NEG_INF)], p
    # (e) backhaul monotonicity and the crossover at large backhaul power
    bh = sorted(cfg.p_bh_grid_dbm)
    big = bh[-1]
    assert big >= 40.0
    for p in grid:
        vals = [mean[("das-ee", p, b)] for b in bh]
        assert all(x > y for x, y in zip(vals, vals[1:])), (p, vals)
        assert mean[("das-ee", p, big)] < mean[("cas-ee", p, big)], p
    assert elapsed < 600.0, f"fig3 campaign took {elapsed:.0f} s (target < 600 s)"
    _ok(6, "EE sweep shape",
        f"(a)-(e) hold on the {len(grid)}-point grid x {len(bh)} backhaul levels, "
        f"campaign {elapsed:.0f} s")


def test_criterion_7_constraint_certification(fig2_campaign, fig3_campaign):
    n = 0
    for ds, _, _ in (fig2_campaign, fig3_campaign):
        for cert in ds.cert:
            assert cert is not None
            assert cert["rate_slack"] >= -1e-6
            assert cert["budget_violation"] <= 1e-7
            n += 1
    _ok(7, "constraint certification",
        f"{n} emitted solutions satisfy the rate floor within 1e-6 and budgets within 1e-7")


def test_criterion_8_determinism(tmp_path):
    cfg = load_config(CONFIG_DIR / "fig3.cfg")
    from dataclasses import replace
    small = replace(cfg, drops=6, p_max_grid_dbm=(40.0, 55.0),
                    p_bh_grid_dbm=(NEG_INF, 40.0))
    outs = []
    for name, workers in (("w1", 1), ("w2", 2), ("w2b", 2)):
        outs.append(emit_plotdata(run_ee_sweep(small, workers=workers), tmp_path / name))
    for other in outs[1:]:
        for pa, pb in zip(outs[0], other):
            assert pa.read_bytes() == pb.read_bytes()
    cfg2 = load_config(CONFIG_DIR / "fig2.cfg")
    small2 = replace(cfg2, drops=5)
    a = emit_plotdata(run_convergence_experiment(small2, workers=1), tmp_path / "f2a")
    b = emit_plotdata(run_convergence_experiment(small2, workers=2), tmp_path / "f2b")
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
    _ok(8, "determinism", "byte-identical CSVs across reruns and worker counts")
