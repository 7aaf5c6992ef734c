"""Monte Carlo experiment harness.

Campaigns are seeded per drop (drop streams depend only on the master seed
and the drop index), so every method sees identical channel realizations
(common random numbers), results do not depend on the worker count, and a
rerun with the same seed reproduces the CSVs byte for byte.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import build_cas, max_min_rate
from .conic import SolverFailure
from .eetm import SolverSettings, run_eetm
from .network import (
    PowerModel,
    SystemConfig,
    dbm_to_watt,
    place_raus,
    place_users,
    sample_channel,
)

METHODS = ("das-ee", "das-rate", "cas-ee", "cas-rate")

CSV_SCHEMA = 1
RAW_HEADER = "experiment,method,p_max_dbm,p_bh_dbm,drop,iteration,t,rate,total_power,ee,status"
AGG_HEADER_FIG2 = "experiment,method,p_max_dbm,p_bh_dbm,iteration,drops,ee_mean,ee_std"
AGG_HEADER_FIG3 = ("experiment,method,p_max_dbm,p_bh_dbm,drops_used,drops_infeasible,"
                   "drops_failed,ee_mean,ee_std")

STATUS_OK = "ok"
STATUS_INFEASIBLE = "infeasible"
STATUS_FAILED = "solver-failure"


class ConfigError(ValueError):
    """Bad experiment configuration (file syntax, unknown key, invariant)."""


@dataclass
class ExperimentConfig:
    system: SystemConfig
    p_c: float                          # W per antenna
    p_0: float                          # W per RAU
    p_max_grid_dbm: tuple
    p_bh_grid_dbm: tuple
    drops: int
    master_seed: int
    methods: tuple
    settings: SolverSettings
    cas_circuit: str = "paper"
    ee_denominator: str = "full"
    fail_threshold: float = 0.01

    def __post_init__(self):
        self.p_max_grid_dbm = tuple(float(x) for x in self.p_max_grid_dbm)
        self.p_bh_grid_dbm = tuple(float(x) for x in self.p_bh_grid_dbm)
        self.methods = tuple(self.methods)
        if self.drops < 1:
            raise ConfigError("drops must be at least 1")
        if not self.p_max_grid_dbm or not self.p_bh_grid_dbm:
            raise ConfigError("power grids must be nonempty")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method '{m}'")
        if self.cas_circuit not in ("paper", "mirrored"):
            raise ConfigError("cas_circuit must be 'paper' or 'mirrored'")
        if not 0.0 <= self.fail_threshold <= 1.0:
            raise ConfigError("fail_threshold must be in [0, 1]")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ConfigError("master_seed must fit in 64 bits")


# config files are flat key = value text; all powers in dBm, converted once here
_DEFAULTS = {
    "n_rau": 4,
    "n_users": 6,
    "antennas_per_rau": 4,
    "cell_radius_m": 1000.0,
    "min_access_distance_m": 20.0,
    "r_min_bps_hz": 0.0,
    "noise_dbm": -101.0,
    "pathloss_intercept_db": 38.46,
    "pathloss_slope_db": 35.0,
    "shadowing_std_db": 8.0,
    "p_c_dbm": 29.0,
    "p_0_dbm": 30.0,
    "p_max_grid_dbm": tuple(-10.0 + 5.0 * i for i in range(8)),
    "p_bh_grid_dbm": (-math.inf,),
    "drops": 100,
    "master_seed": 1,
    "methods": METHODS,
    "delta": 1e-4,
    "epsilon": 1e-4,
    "n_rand": 50,
    "max_iters": 20,
    "cas_circuit": "paper",
    "ee_denominator": "full",
    "fail_threshold": 0.01,
}

_INT_KEYS = {"n_rau", "n_users", "antennas_per_rau", "drops", "master_seed",
             "n_rand", "max_iters"}
_FLOAT_KEYS = {"cell_radius_m", "min_access_distance_m", "r_min_bps_hz", "noise_dbm",
               "pathloss_intercept_db", "pathloss_slope_db", "shadowing_std_db",
               "p_c_dbm", "p_0_dbm", "delta", "epsilon", "fail_threshold"}
_LIST_KEYS = {"p_max_grid_dbm", "p_bh_grid_dbm", "methods"}
_STR_KEYS = {"cas_circuit", "ee_denominator"}


def _parse_scalar(key, raw):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError as e:
        raise ConfigError(f"bad value for {key}: {raw!r}") from e
    return raw


def parse_config_text(text: str) -> ExperimentConfig:
    values = dict(_DEFAULTS)
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in values:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in _LIST_KEYS:
            items = [s.strip() for s in raw.split(",") if s.strip()]
            if key == "methods":
                values[key] = tuple(items)
            else:
                try:
                    values[key] = tuple(float(s) for s in items)
                except ValueError as e:
                    raise ConfigError(f"line {lineno}: bad list for {key}") from e
        else:
            values[key] = _parse_scalar(key, raw)
    return build_config(values)


def build_config(values: dict) -> ExperimentConfig:
    try:
        system = SystemConfig(
            N=values["n_rau"], K=values["n_users"], M=values["antennas_per_rau"],
            cell_radius=values["cell_radius_m"],
            min_access_distance=values["min_access_distance_m"],
            r_min=values["r_min_bps_hz"],
            noise_power=dbm_to_watt(values["noise_dbm"]),
            pathloss_intercept_db=values["pathloss_intercept_db"],
            pathloss_slope_db=values["pathloss_slope_db"],
            shadowing_std_db=values["shadowing_std_db"])
        settings = SolverSettings(delta=values["delta"], epsilon=values["epsilon"],
                                  n_rand=values["n_rand"], max_iters=values["max_iters"])
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return ExperimentConfig(
        system=system,
        p_c=dbm_to_watt(values["p_c_dbm"]),
        p_0=dbm_to_watt(values["p_0_dbm"]),
        p_max_grid_dbm=values["p_max_grid_dbm"],
        p_bh_grid_dbm=values["p_bh_grid_dbm"],
        drops=values["drops"],
        master_seed=values["master_seed"],
        methods=values["methods"],
        settings=settings,
        cas_circuit=values["cas_circuit"],
        ee_denominator=values["ee_denominator"],
        fail_threshold=values["fail_threshold"])


def load_config(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config_text(p.read_text(encoding="utf-8"))


def default_config(**overrides) -> ExperimentConfig:
    values = dict(_DEFAULTS)
    values.update(overrides)
    return build_config(values)


def render_config(cfg: ExperimentConfig) -> str:
    """Echo of the resolved configuration (dry run for `validate`)."""
    sc = cfg.system
    lines = [
        f"n_rau = {sc.N}", f"n_users = {sc.K}",
        f"antennas_per_rau = {','.join(str(m) for m in sc.M)}",
        f"cell_radius_m = {sc.cell_radius:.9g}",
        f"min_access_distance_m = {sc.min_access_distance:.9g}",
        f"r_min_bps_hz = {sc.r_min:.9g}",
        f"noise_power_w = {sc.noise_power:.9g}",
        f"pathloss_intercept_db = {sc.pathloss_intercept_db:.9g}",
        f"pathloss_slope_db = {sc.pathloss_slope_db:.9g}",
        f"shadowing_std_db = {sc.shadowing_std_db:.9g}",
        f"p_c_w = {cfg.p_c:.9g}", f"p_0_w = {cfg.p_0:.9g}",
        "p_max_grid_dbm = " + ",".join("%.9g" % x for x in cfg.p_max_grid_dbm),
        "p_bh_grid_dbm = " + ",".join("%.9g" % x for x in cfg.p_bh_grid_dbm),
        f"drops = {cfg.drops}", f"master_seed = {cfg.master_seed}",
        "methods = " + ",".join(cfg.methods),
        f"delta = {cfg.settings.delta:.9g}", f"epsilon = {cfg.settings.epsilon:.9g}",
        f"n_rand = {cfg.settings.n_rand}", f"max_iters = {cfg.settings.max_iters}",
        f"cas_circuit = {cfg.cas_circuit}",
        f"ee_denominator = {cfg.ee_denominator}",
        f"fail_threshold = {cfg.fail_threshold:.9g}",
    ]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# campaign plumbing
# ---------------------------------------------------------------------------

@dataclass
class Dataset:
    experiment: str
    config: ExperimentConfig
    rows: list = field(default_factory=list)        # raw CSV rows (value tuples)
    agg_rows: list = field(default_factory=list)
    agg_header: str = ""
    cert: list = field(default_factory=list)        # per-solution certification
    n_cells: int = 0
    n_failures: int = 0


def _rng(*key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(tuple(int(k) for k in key)))


def _power_model(cfg: ExperimentConfig, p_max_w: float, p_bh_w: float) -> PowerModel:
    return PowerModel(p_c=cfg.p_c, p_0=cfg.p_0, p_bh=p_bh_w,
                      p_max=(p_max_w,) * cfg.system.N,
                      ee_denominator=cfg.ee_denominator)


def _certify(state, metrics, p_max_w, r_min):
    budget = float(np.max(state.powers - p_max_w)) if len(state.powers) else 0.0
    return {"rate_slack": metrics.rate - r_min, "budget_violation": budget}


def _channel_for_drop(cfg: ExperimentConfig, drop: int):
    raus = place_raus(cfg.system.N, cfg.system.cell_radius)
    # users keep the access-distance floor to the cell center too, so the
    # centralized mirror can reuse the same positions; the conditioning is
    # method-independent to preserve common random numbers
    sites = np.vstack([raus, [[0.0, 0.0]]])
    rng = _rng(cfg.master_seed, drop, 0)
    users = place_users(cfg.system, sites, rng)
    return sample_channel(cfg.system, raus, users, rng), users


def _fig2_drop(cfg: ExperimentConfig, drop: int):
    """One drop of the convergence campaign: EETM traces per p_max value."""
    channel, _ = _channel_for_drop(cfg, drop)
    p_bh_w = dbm_to_watt(cfg.p_bh_grid_dbm[0])
    out = []
    for gi, p_dbm in enumerate(cfg.p_max_grid_dbm):
        pm = _power_model(cfg, dbm_to_watt(p_dbm), p_bh_w)
        rng = _rng(cfg.master_seed, drop, 2, 0, gi)
        cell = {"p_max_dbm": p_dbm, "drop": drop, "status": STATUS_OK,
                "iterations": [], "cert": None}
        try:
            trace = run_eetm(channel, cfg.system, pm, cfg.settings, rng)
        except SolverFailure:
            cell["status"] = STATUS_FAILED
            out.append(cell)
            continue
        if trace is None:
            cell["status"] = STATUS_INFEASIBLE
            out.append(cell)
            continue
        for it in trace.iterations:
            cell["iterations"].append((it.l, it.t, it.rate, it.total_power, it.ee))
        cell["cert"] = _certify(trace.final_state, trace.final_metrics,
                                dbm_to_watt(p_dbm), cfg.system.r_min)
        out.append(cell)
    return out


def _fig3_drop(cfg: ExperimentConfig, drop: int):
    """One drop of the EE sweep: every method at every grid point, common
    channel realizations across methods."""
    channel, users = _channel_for_drop(cfg, drop)
    cas = None
    cas_channel = None
    if any(m.startswith("cas") for m in cfg.methods):
        cas = build_cas(cfg.system, _power_model(cfg, 1.0, 0.0), cfg.cas_circuit)
        cas_channel = sample_channel(cas.config, cas.rau_positions, users,
                                     _rng(cfg.master_seed, drop, 1))
    cells = []

    def add(method, gi, bi, status, t=None, rate=None, total=None, ee=None, cert=None):
        cells.append({"method": method, "p_max_dbm": cfg.p_max_grid_dbm[gi],
                      "p_bh_dbm": cfg.p_bh_grid_dbm[bi], "drop": drop,
                      "status": status, "t": t, "rate": rate,
                      "total_power": total, "ee": ee, "cert": cert})

    backhaul_counts = cfg.ee_denominator == "full"
    for mi, method in enumerate(METHODS):
        if method not in cfg.methods:
            continue
        for gi, p_dbm in enumerate(cfg.p_max_grid_dbm):
            p_max_w = dbm_to_watt(p_dbm)
            if method == "das-ee":
                # the backhaul term shifts the EE objective: re-run per p_bh
                for bi, b_dbm in enumerate(cfg.p_bh_grid_dbm):
                    pm = _power_model(cfg, p_max_w, dbm_to_watt(b_dbm))
                    rng = _rng(cfg.master_seed, drop, 2, mi, gi, bi)
                    try:
                        trace = run_eetm(channel, cfg.system, pm, cfg.settings, rng)
                    except SolverFailure:
                        add(method, gi, bi, STATUS_FAILED)
                        continue
                    if trace is None:
                        add(method, gi, bi, STATUS_INFEASIBLE)
                        continue
                    met = trace.final_metrics
                    add(method, gi, bi, STATUS_OK, trace.iterations[-1].t, met.rate,
                        met.total_power, met.ee,
                        _certify(trace.final_state, met, p_max_w, cfg.system.r_min))
            elif method == "das-rate":
                # rate maximization ignores the power bill: solve once, then
                # re-price the backhaul term per p_bh value
                pm0 = _power_model(cfg, p_max_w, 0.0)
                rng = _rng(cfg.master_seed, drop, 2, mi, gi)
                try:
                    res = max_min_rate(channel, cfg.system, pm0, cfg.settings, rng)
                except SolverFailure:
                    for bi in range(len(cfg.p_bh_grid_dbm)):
                        add(method, gi, bi, STATUS_FAILED)
                    continue
                base_total = res.metrics.total_power
                cert = _certify(res.state, res.metrics, p_max_w, 0.0)
                for bi, b_dbm in enumerate(cfg.p_bh_grid_dbm):
                    extra = cfg.system.N * dbm_to_watt(b_dbm) if backhaul_counts else 0.0
                    total = base_total + extra
                    ee = res.metrics.rate / total if total > 0.0 else 0.0
                    add(method, gi, bi, STATUS_OK, res.t_star, res.metrics.rate,
                        total, ee, cert)
            else:
                # CAS has no backhaul links: identical values across the p_bh grid
                pm_cas = replace(cas.power_model,
                                 p_max=(p_max_w * cfg.system.N,))
                rng = _rng(cfg.master_seed, drop, 2, mi, gi)
                try:
                    if method == "cas-ee":
                        trace = run_eetm(cas_channel, cas.config, pm_cas, cfg.settings, rng)
                        if trace is None:
                            for bi in range(len(cfg.p_bh_grid_dbm)):
                                add(method, gi, bi, STATUS_INFEASIBLE)
                            continue
                        t_v = trace.iterations[-1].t
                        met = trace.final_metrics
                        cert = _certify(trace.final_state, met,
                                        p_max_w * cfg.system.N, cas.config.r_min)
                    else:
                        res = max_min_rate(cas_channel, cas.config, pm_cas,
                                           cfg.settings, rng)
                        t_v, met = res.t_star, res.metrics
                        cert = _certify(res.state, met, p_max_w * cfg.system.N, 0.0)
                except SolverFailure:
                    for bi in range(len(cfg.p_bh_grid_dbm)):
                        add(method, gi, bi, STATUS_FAILED)
                    continue
                for bi in range(len(cfg.p_bh_grid_dbm)):
                    add(method, gi, bi, STATUS_OK, t_v, met.rate,
                        met.total_power, met.ee, cert)
    return cells


def _run_drops(fn, cfg: ExperimentConfig, workers: int):
    drops = range(cfg.drops)
    if workers <= 1:
        return [fn(cfg, d) for d in drops]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, [cfg] * cfg.drops, drops))


def _sample_std(values) -> float:
    if len(values) <= 1:
        return 0.0
    return float(np.std(values, ddof=1))


def run_convergence_experiment(cfg: ExperimentConfig, workers: int = 1) -> Dataset:
    """EETM convergence traces per drop and p_max (the backhaul power is a
    single fixed value here)."""
    if len(cfg.p_bh_grid_dbm) != 1:
        raise ConfigError("the convergence experiment needs exactly one p_bh value")
    per_drop = _run_drops(_fig2_drop, cfg, workers)
    ds = Dataset("fig2", cfg, agg_header=AGG_HEADER_FIG2)
    p_bh_dbm = cfg.p_bh_grid_dbm[0]
    for gi, p_dbm in enumerate(cfg.p_max_grid_dbm):
        traces = []
        for drop in range(cfg.drops):
            cell = per_drop[drop][gi]
            ds.n_cells += 1
            if cell["status"] != STATUS_OK:
                ds.n_failures += cell["status"] == STATUS_FAILED
                ds.rows.append(("fig2", "das-ee", p_dbm, p_bh_dbm, drop, None,
                                None, None, None, None, cell["status"]))
                continue
            for (l, t, rate, total, ee) in cell["iterations"]:
                ds.rows.append(("fig2", "das-ee", p_dbm, p_bh_dbm, drop, l,
                                t, rate, total, ee, STATUS_OK))
            traces.append([ee for (_, _, _, _, ee) in cell["iterations"]])
            ds.cert.append(cell["cert"])
        if traces:
            depth = max(len(t) for t in traces)
            for l in range(depth):
                vals = [t[min(l, len(t) - 1)] for t in traces]
                ds.agg_rows.append(("fig2", "das-ee", p_dbm, p_bh_dbm, l,
                                    len(vals), float(np.mean(vals)), _sample_std(vals)))
    return ds


def run_ee_sweep(cfg: ExperimentConfig, workers: int = 1) -> Dataset:
    """Final EE per (method, p_max, p_bh, drop), plus per-point aggregates."""
    per_drop = _run_drops(_fig3_drop, cfg, workers)
    ds = Dataset("fig3", cfg, agg_header=AGG_HEADER_FIG3)
    cells = {}
    for drop_cells in per_drop:
        for c in drop_cells:
            cells[(c["method"], c["p_max_dbm"], c["p_bh_dbm"], c["drop"])] = c
    for method in METHODS:
        if method not in cfg.methods:
            continue
        for p_dbm in cfg.p_max_grid_dbm:
            for b_dbm in cfg.p_bh_grid_dbm:
                used = []
                n_inf = 0
                n_fail = 0
                for drop in range(cfg.drops):
                    c = cells[(method, p_dbm, b_dbm, drop)]
                    ds.n_cells += 1
                    if c["status"] == STATUS_OK:
                        ds.rows.append(("fig3", method, p_dbm, b_dbm, drop, "final",
                                        c["t"], c["rate"], c["total_power"], c["ee"],
                                        STATUS_OK))
                        used.append(c["ee"])
                        ds.cert.append(c["cert"])
                    else:
                        n_inf += c["status"] == STATUS_INFEASIBLE
                        n_fail += c["status"] == STATUS_FAILED
                        ds.n_failures += c["status"] == STATUS_FAILED
                        ds.rows.append(("fig3", method, p_dbm, b_dbm, drop, "final",
                                        None, None, None, None, c["status"]))
                mean = float(np.mean(used)) if used else None
                std = _sample_std(used) if used else None
                ds.agg_rows.append(("fig3", method, p_dbm, b_dbm, len(used),
                                    n_inf, n_fail, mean, std))
    return ds


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "%.9g" % v
    return str(v)


def emit_plotdata(dataset: Dataset, out_dir) -> list:
    """Write the raw and aggregated CSVs; pure function of the dataset, so
    re-emission yields identical bytes."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        raw_path = out / f"{dataset.experiment}_raw.csv"
        agg_path = out / f"{dataset.experiment}_aggregate.csv"
        with open(raw_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(RAW_HEADER + "\n")
            for row in dataset.rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        with open(agg_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dataset.agg_header + "\n")
            for row in dataset.agg_rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as e:
        raise OSError(f"cannot write plot data under '{out}': {e}") from e
    return [raw_path, agg_path]
