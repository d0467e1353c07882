"""Config-driven experiment runner: sampling, evolution, sweeps, figure tables.

Every run is deterministic given its base seed: per-role seeds are derived by
hashing (base_seed, role, index), so realization r always sees the same
stream no matter how work is scheduled or how many workers run. Realizations
are drawn from a small number of Markov chains (round-robin assignment), the
pulse and the split-step evolution are applied to the whole stacked ensemble
at once, and spin observables are accumulated at uniformly spaced save times.

Outputs are bundles: a directory holding CSV tables (one point per row, with
value, error, realization counts and provenance columns) plus a JSON manifest
recording the full configuration, seeds, code version and wall time. Partial
failures are recorded per point and mark the bundle incomplete rather than
aborting a sweep.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import time as _time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (ModeSet, d_squared_over_n, noncondensed_fraction, t_best,
                        two_mode_xi2, universal_squeezing_limit, xi2_min, xi2_of_t)
from .bogosim import BogosimEnsemble
from .dynamics import evolve_fields, field_from_modes
from .model import Grid, PhysicalParams, simulation_setup
from .observables import SqueezingCurve, build_curve, summarize_curve
from .sampler import SamplerConfig, ThermalSampler

DEFAULT_TIME_SPACING = 0.05  # save grid in units hbar/(rho g)


# ---------------------------------------------------------------------------
# seeding
# ---------------------------------------------------------------------------

def seed_schedule(base_seed: int, index: int, role: str = "realization") -> int:
    """Injective, worker-count-independent seed for one unit of work.

    Counter-mode expansion of the base seed: the 128-bit truncated SHA-256 of
    the (base_seed, role, index) triple.
    """
    digest = hashlib.sha256(f"{base_seed}:{role}:{index}".encode()).digest()
    return int.from_bytes(digest[:16], "little")


def rng_for(base_seed: int, index: int, role: str = "realization") -> np.random.Generator:
    return np.random.default_rng(seed_schedule(base_seed, index, role))


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    kind: str = "run"                      # analytics | sample | run | sweep | figure
    figure: int | None = None
    sqrt_rho_a3: list = field(default_factory=lambda: [1.32e-2])
    t_over_mu: list = field(default_factory=lambda: [0.5])
    n_max: list = field(default_factory=lambda: [8])
    n_atoms: list | None = None            # analytics-only override
    realizations: int = 100
    time_horizon: float = 60.0             # units hbar/(rho g)
    time_spacing: float = DEFAULT_TIME_SPACING
    dt: float | None = None                # None: 0.01/max(E_max, rho g)
    eta: list = field(default_factory=lambda: [0.2])
    base_seed: int = 2024
    workers: int = 1
    out_dir: str = "bundles"
    grid_shape: str = "paper_aspect"
    include_bogosim: bool = False
    include_osc: bool = False
    statistics: list = field(default_factory=lambda: ["classical", "quantum"])
    n_chains: int = 8
    burn_in_sweeps: int = 1000
    decorrelation_sweeps: int = 10
    memory_cap_mb: float = 2048.0

    def validate(self) -> None:
        if self.kind not in ("analytics", "sample", "run", "sweep", "figure"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        for name in ("sqrt_rho_a3", "t_over_mu", "n_max", "eta"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} grid must not be empty")
        if self.time_horizon <= 0 or self.time_spacing <= 0:
            raise ValueError("time grid must not be empty")
        if self.realizations < 2 and self.kind in ("run", "sweep", "figure"):
            raise ValueError("need at least two realizations")
        if self.kind == "figure" and self.figure not in range(1, 9):
            raise ValueError("figure must be 1..8")

    def times(self) -> np.ndarray:
        return np.arange(self.time_spacing, self.time_horizon + 1e-9,
                         self.time_spacing)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=1, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        data = json.loads(text)
        cfg = ExperimentConfig(**data)
        cfg.validate()
        return cfg

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# the simulation pipeline for one parameter point
# ---------------------------------------------------------------------------

def sample_ensemble(grid: Grid, params: PhysicalParams, sampler_cfg: SamplerConfig,
                    realizations: int, base_seed: int, n_chains: int = 8):
    """Thermal a-field mode amplitudes for `realizations` draws.

    Chains are seeded independently and realizations assigned round-robin,
    so the result is independent of scheduling. Returns (modes (R, M),
    diagnostics per chain).
    """
    n_chains = max(1, min(n_chains, realizations))
    chains = []
    for c in range(n_chains):
        rng = rng_for(base_seed, c, role="thermal-chain")
        chain = ThermalSampler(grid, params, sampler_cfg, rng)
        chain.tune()
        chain.burn_in()
        chains.append(chain)
    modes = np.empty((realizations, grid.n_modes), dtype=complex)
    for r in range(realizations):
        chain = chains[r % n_chains]
        chain.draw()
        modes[r] = chain.a
    return modes, [c.diag for c in chains]


def vacuum_ensemble(grid: Grid, realizations: int, base_seed: int) -> np.ndarray:
    """Per-realization vacuum-noise b modes, one independent stream each."""
    out = np.empty((realizations, grid.n_modes), dtype=complex)
    for r in range(realizations):
        rng = rng_for(base_seed, r, role="vacuum")
        out[r] = 0.5 * (rng.normal(size=grid.n_modes)
                        + 1j * rng.normal(size=grid.n_modes))
    return out


def apply_pulse_modes(a_modes: np.ndarray, b_modes: np.ndarray):
    """The pi/2 mixing in mode space (the pulse commutes with the transform)."""
    return ((a_modes - b_modes) / np.sqrt(2.0), (a_modes + b_modes) / np.sqrt(2.0))


def evolve_and_measure(grid: Grid, params: PhysicalParams, a_modes: np.ndarray,
                       b_modes: np.ndarray, times: np.ndarray,
                       dt: float | None = None) -> dict:
    """Batched evolution of the whole ensemble with observables at save times.

    Returns per-realization S_+(t), conserved S_z, zero-mode analogues, and
    the relative norm drift (integrator health).
    """
    r = a_modes.shape[0]
    n = grid.n_per_dir
    mem_mb = r * grid.n_modes * 16 * 4 / 1e6
    times = np.asarray(times, dtype=float)
    measure_t0 = times.size > 0 and times[0] == 0.0
    step_times = times[1:] if measure_t0 else times
    spacing = step_times[0] if step_times.size == 1 else float(np.diff(step_times).mean())
    if dt is None:
        dt = 0.01 / max(grid.e_max, params.mu)
    steps_per_save = max(1, int(np.ceil(spacing / dt)))
    dt_eff = spacing / steps_per_save
    n_steps = steps_per_save * step_times.size

    pa = field_from_modes(a_modes.reshape(r, n, n, n), grid.volume)
    pb = field_from_modes(b_modes.reshape(r, n, n, n), grid.volume)
    dv = grid.cell_volume
    sqv = np.sqrt(grid.volume)
    norm0 = dv * (np.sum(np.abs(pa) ** 2, axis=(1, 2, 3))
                  + np.sum(np.abs(pb) ** 2, axis=(1, 2, 3)))
    sz = 0.5 * dv * (np.sum(np.abs(pa) ** 2, axis=(1, 2, 3))
                     - np.sum(np.abs(pb) ** 2, axis=(1, 2, 3)))

    splus = np.empty((r, times.size), dtype=complex)
    splus0 = np.empty((r, times.size), dtype=complex)
    sz0 = np.empty((r, times.size))
    na0 = np.empty((r, times.size))
    counter = {"i": 0}

    def observer(step, fa, fb):
        i = counter["i"]
        splus[:, i] = dv * np.sum(np.conj(fa) * fb, axis=(1, 2, 3))
        a0 = dv * np.sum(fa, axis=(1, 2, 3)) / sqv
        b0 = dv * np.sum(fb, axis=(1, 2, 3)) / sqv
        splus0[:, i] = np.conj(a0) * b0
        sz0[:, i] = 0.5 * (np.abs(a0) ** 2 - np.abs(b0) ** 2)
        na0[:, i] = np.abs(a0) ** 2
        counter["i"] += 1

    if measure_t0:
        observer(0, pa, pb)
    e3 = grid.e_kin.reshape(grid.fft_shape)
    pa, pb = evolve_fields(pa, pb, e3, params.g, dt_eff, n_steps,
                           observer=observer, observe_every=steps_per_save)
    norm1 = dv * (np.sum(np.abs(pa) ** 2, axis=(1, 2, 3))
                  + np.sum(np.abs(pb) ** 2, axis=(1, 2, 3)))
    return {
        "times": times, "splus": splus, "sz": sz,
        "splus0": splus0, "sz0": sz0, "na0": na0,
        "norm_drift": float(np.max(np.abs(norm1 / norm0 - 1.0))),
        "dt": dt_eff, "n_steps": n_steps, "memory_mb": mem_mb,
    }


def run_point(sqrt_rho_a3: float, t_over_mu: float, n_max: int, realizations: int,
              time_horizon: float, time_spacing: float, base_seed: int,
              grid_shape: str = "paper_aspect", dt: float | None = None,
              burn_in: int = 300, decorrelation: int = 8, n_chains: int = 8,
              include_bogosim: bool = False, bogosim_fresh_seeds: bool = True,
              bogosim_realizations: int | None = None,
              include_osc: bool = False, memory_cap_mb: float = 2048.0) -> dict:
    """Full pipeline at one parameter point: sample, pulse, evolve, estimate.

    Returns the simulated squeezing curve plus (optionally) the semi-analytic
    quasi-particle curve, with the matching discrete-sum analytics.
    """
    params, grid = simulation_setup(sqrt_rho_a3, t_over_mu, n_max, grid_shape)
    mem_mb = realizations * grid.n_modes * 16 * 6 / 1e6
    if mem_mb > memory_cap_mb:
        raise MemoryError(f"ensemble needs ~{mem_mb:.0f} MB, cap {memory_cap_mb:.0f}")
    sampler_cfg = SamplerConfig(burn_in_sweeps=burn_in,
                                decorrelation_sweeps=decorrelation)
    a_modes, diags = sample_ensemble(grid, params, sampler_cfg, realizations,
                                     base_seed, n_chains)
    b_modes = vacuum_ensemble(grid, realizations, base_seed)
    am, bm = apply_pulse_modes(a_modes, b_modes)
    times = np.arange(0.0, time_horizon + 1e-9, time_spacing)
    obs = evolve_and_measure(grid, params, am, bm, times, dt)
    curve = build_curve(obs["times"], obs["splus"], obs["sz"], params.n_atoms,
                        obs["splus0"], obs["sz0"], obs["na0"])
    nnc = noncondensed_fraction(params, "classical", grid)
    out = {
        "params": params.with_eps_bog(nnc), "grid": grid, "curve": curve,
        "obs": obs, "chain_diagnostics": diags,
        "xibest_grid": xi2_min(params, grid, "classical"),
        "xibest_continuum": xi2_min(params, "continuum", "classical",
                                    box_shape=grid_shape),
        "nnc_classical": nnc,
    }
    if include_bogosim:
        if bogosim_fresh_seeds:
            r_bogo = bogosim_realizations or realizations
            a2, _ = sample_ensemble(grid, params, sampler_cfg, r_bogo,
                                    base_seed + 1, n_chains)
            b2 = vacuum_ensemble(grid, r_bogo, base_seed + 1)
            am2, bm2 = apply_pulse_modes(a2, b2)
        else:
            am2, bm2 = am, bm
        ens = BogosimEnsemble(grid, params, am2, bm2, include_osc=include_osc)
        bobs = ens.observables(times)
        out["bogosim_curve"] = build_curve(bobs["times"], bobs["splus"], bobs["sz"],
                                           params.n_atoms, bobs["splus0"],
                                           bobs["sz0"], bobs["na0"])
        out["bogosim_obs"] = bobs
    return out


# ---------------------------------------------------------------------------
# bundles
# ---------------------------------------------------------------------------

def _write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


class BundleWriter:
    def __init__(self, config: ExperimentConfig, name: str):
        self.config = config
        self.dir = Path(config.out_dir) / name
        self.dir.mkdir(parents=True, exist_ok=True)
        self.outputs = []
        self.failures = []
        self.t0 = _time.time()

    def provenance(self, seed_lo: int = 0, seed_hi: int | None = None) -> list:
        hi = self.config.realizations if seed_hi is None else seed_hi
        return [self.config.config_hash(), self.config.base_seed, seed_lo, hi,
                __version__]

    @staticmethod
    def provenance_header() -> list:
        return ["config_hash", "base_seed", "seed_lo", "seed_hi", "code_version"]

    def add_table(self, name: str, header: list, rows: list) -> None:
        path = self.dir / f"{name}.csv"
        _write_csv(path, header + self.provenance_header(),
                   [list(r) + self.provenance() for r in rows])
        self.outputs.append(path.name)

    def record_failure(self, label: str, err: Exception) -> None:
        self.failures.append({"point": label, "error": repr(err)})
        warnings.warn(f"point {label} failed: {err!r}", stacklevel=2)

    def finalize(self) -> dict:
        manifest = {
            "config": json.loads(self.config.to_json()),
            "config_hash": self.config.config_hash(),
            "code_version": __version__,
            "outputs": sorted(self.outputs),
            "failures": self.failures,
            "complete": not self.failures,
            "wall_time_s": _time.time() - self.t0,
        }
        with open(self.dir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
        return manifest


def _curve_rows(point: dict, eta: float) -> tuple[list, list, dict]:
    curve: SqueezingCurve = point["curve"]
    params: PhysicalParams = point["params"]
    header = ["t_mu", "xi2", "xi2_err", "xi02", "xi02_err", "var_sz", "var_sz_err",
              "n_realizations"]
    rows = [[t, x, xe, x0, x0e, vz, vze, curve.n_realizations]
            for t, x, xe, x0, x0e, vz, vze in
            zip(curve.times * params.mu, curve.xi2, curve.xi2_err,
                curve.xi02, curve.xi02_err, curve.var_sz, curve.var_sz_err)]
    summary = summarize_curve(curve, eta)
    meta = {
        "xi2_min": summary.xi2_min, "xi2_min_err": summary.xi2_min_err,
        "t_min_mu": summary.t_min * params.mu,
        "t_eta_mu": None if summary.t_eta is None else summary.t_eta * params.mu,
        "t_therm_mu": None if summary.t_therm is None else summary.t_therm * params.mu,
        "boundary": summary.boundary_minimum,
        "xibest_grid": point["xibest_grid"],
        "xibest_continuum": point["xibest_continuum"],
        "nnc_classical": point["nnc_classical"],
        "n_atoms": point["params"].n_atoms,
        "norm_drift": point["obs"]["norm_drift"],
    }
    return header, rows, meta


def run_experiment(config: ExperimentConfig) -> dict:
    """Dispatch a configured experiment; returns the bundle manifest."""
    config.validate()
    name = f"{config.kind}" + (f"{config.figure}" if config.kind == "figure" else "")
    bundle = BundleWriter(config, f"{name}-{config.config_hash()}")
    kind = config.kind
    if kind == "analytics":
        _run_analytics(config, bundle)
    elif kind == "sample":
        _run_sample(config, bundle)
    elif kind in ("run", "sweep"):
        _run_sweep(config, bundle)
    elif kind == "figure":
        _run_figure(config, bundle)
    return bundle.finalize()


def _run_analytics(config: ExperimentConfig, bundle: BundleWriter) -> None:
    rows = []
    for theta in config.t_over_mu:
        for s in config.sqrt_rho_a3:
            try:
                from .model import derive_params
                n_ref = config.n_atoms[0] if config.n_atoms else 10 ** 6
                p = derive_params(s, theta, n_ref)
                xq = xi2_min(p, "continuum", "quantum")
                xc = xi2_min(p, "continuum", "classical", box_shape=config.grid_shape) \
                    if theta > 0 else 0.0
                nq = noncondensed_fraction(p, "quantum", "continuum")
                nc = noncondensed_fraction(p, "classical", "continuum",
                                           box_shape=config.grid_shape) if theta > 0 else 0.0
                teta = t_best(config.eta[0], xq, p.mu) * p.mu
                rows.append([theta, s, xq, xc, xq / s, xc / s, nq, nc, teta])
            except Exception as err:
                bundle.record_failure(f"analytics theta={theta} s={s}", err)
    bundle.add_table("analytics",
                     ["t_over_mu", "sqrt_rho_a3", "xi2_min_quantum",
                      "xi2_min_classical", "f_quantum", "f_classical",
                      "nnc_quantum", "nnc_classical", "t_eta_mu"], rows)


def _run_sample(config: ExperimentConfig, bundle: BundleWriter) -> None:
    from . import cache
    params, grid = simulation_setup(config.sqrt_rho_a3[0], config.t_over_mu[0],
                                    config.n_max[0], config.grid_shape)
    sampler_cfg = SamplerConfig(burn_in_sweeps=config.burn_in_sweeps,
                                decorrelation_sweeps=config.decorrelation_sweeps)
    a_modes, diags = sample_ensemble(grid, params, sampler_cfg,
                                     config.realizations, config.base_seed,
                                     config.n_chains)
    b_modes = vacuum_ensemble(grid, config.realizations, config.base_seed)
    root = cache.cache_root() / f"samples-{config.config_hash()}"
    rows = []
    for r in range(config.realizations):
        psi_a = field_from_modes(a_modes[r].reshape(grid.fft_shape), grid.volume)
        psi_b = field_from_modes(b_modes[r].reshape(grid.fft_shape), grid.volume)
        stem = root / f"r{r:06d}"
        cache.write_record(stem, grid, psi_a, psi_b,
                           seed=seed_schedule(config.base_seed, r),
                           params={"sqrt_rho_a3": params.sqrt_rho_a3,
                                   "t_over_mu": params.t_over_mu,
                                   "n_atoms": params.n_atoms})
        rows.append([r, str(stem.with_suffix(".bin"))])
    bundle.add_table("samples", ["realization", "path"], rows)


def _run_sweep(config: ExperimentConfig, bundle: BundleWriter) -> None:
    summary_rows = []
    for theta in config.t_over_mu:
        for s in config.sqrt_rho_a3:
            for n_max in config.n_max:
                label = f"theta={theta} s={s} n_max={n_max}"
                try:
                    point = run_point(
                        s, theta, n_max, config.realizations,
                        config.time_horizon, config.time_spacing,
                        config.base_seed, config.grid_shape, config.dt,
                        burn_in=config.burn_in_sweeps,
                        decorrelation=config.decorrelation_sweeps,
                        n_chains=config.n_chains,
                        include_bogosim=config.include_bogosim,
                        include_osc=config.include_osc,
                        memory_cap_mb=config.memory_cap_mb)
                    header, rows, meta = _curve_rows(point, config.eta[0])
                    tag = f"curve_th{theta}_s{s}_n{n_max}".replace(".", "p")
                    bundle.add_table(tag, header, rows)
                    summary_rows.append([theta, s, n_max, meta["n_atoms"],
                                         meta["xi2_min"], meta["xi2_min_err"],
                                         meta["t_min_mu"], meta["t_eta_mu"],
                                         meta["t_therm_mu"], meta["xibest_grid"],
                                         meta["xibest_continuum"],
                                         meta["nnc_classical"], meta["norm_drift"],
                                         config.realizations])
                    if "bogosim_curve" in point:
                        bheader = ["t_mu", "xi2", "xi2_err", "xi02", "xi02_err"]
                        bc = point["bogosim_curve"]
                        brows = [[t * point["params"].mu, x, xe, x0, x0e]
                                 for t, x, xe, x0, x0e in
                                 zip(bc.times, bc.xi2, bc.xi2_err, bc.xi02, bc.xi02_err)]
                        bundle.add_table(tag + "_bogosim", bheader, brows)
                except Exception as err:
                    bundle.record_failure(label, err)
    bundle.add_table("summary",
                     ["t_over_mu", "sqrt_rho_a3", "n_max", "n_atoms", "xi2_min",
                      "xi2_min_err", "t_min_mu", "t_eta_mu", "t_therm_mu",
                      "xibest_grid", "xibest_continuum", "nnc_classical",
                      "norm_drift", "n_realizations"], summary_rows)


# desk-scale figure presets; paper-scale grids are out of reach on a desk
_FIGURE_PRESETS = {
    1: dict(t_over_mu=[1.13, 0.78, 0.50, 0.28], sqrt_rho_a3=[1.32e-2],
            n_max=[8, 10, 12], realizations=200, time_horizon=90.0,
            time_spacing=0.5),
    2: dict(t_over_mu=[0.5], sqrt_rho_a3=[1.32e-2, 3.96e-3, 1.32e-3],
            n_max=[12], realizations=200, time_horizon=150.0, time_spacing=0.5),
    6: dict(t_over_mu=[1.13, 0.78, 0.50], sqrt_rho_a3=[1.32e-2], n_max=[10],
            realizations=200, time_horizon=120.0, time_spacing=0.5),
    7: dict(t_over_mu=[0.5], sqrt_rho_a3=[1.32e-2, 6.6e-3], n_max=[10],
            realizations=200, time_horizon=200.0, time_spacing=1.0),
    8: dict(t_over_mu=[0.5, 7.83], sqrt_rho_a3=[1.32e-2, 4.17e-4], n_max=[12],
            realizations=300, time_horizon=150.0, time_spacing=0.5,
            include_bogosim=True),
}


def _run_figure(config: ExperimentConfig, bundle: BundleWriter) -> None:
    fig = config.figure
    if fig in (1, 2, 6, 7):
        preset = _FIGURE_PRESETS[fig]
        cfg = dataclasses.replace(config, kind="sweep", **preset)
        _run_sweep(cfg, bundle)
        return
    if fig == 8:
        preset = dict(_FIGURE_PRESETS[8])
        pairs = list(zip(preset.pop("t_over_mu"), preset.pop("sqrt_rho_a3")))
        for theta, s in pairs:
            cfg = dataclasses.replace(config, kind="sweep", t_over_mu=[theta],
                                      sqrt_rho_a3=[s], **preset)
            _run_sweep(cfg, bundle)
        return
    if fig == 3:
        thetas = np.round(np.geomspace(0.1, 10.0, 17), 6)
        rows = []
        for theta in thetas:
            try:
                rows.append([theta,
                             universal_squeezing_limit(theta, "classical",
                                                       config.grid_shape),
                             universal_squeezing_limit(theta, "quantum")])
            except Exception as err:
                bundle.record_failure(f"figure3 theta={theta}", err)
        bundle.add_table("figure3_universal_f",
                         ["t_over_mu", "f_classical", "f_quantum"], rows)
        return
    if fig in (4, 5):
        from .model import derive_params
        if fig == 4:
            p = derive_params(1e-3, 1.0, 10 ** 6)
            times = np.arange(0.0, 60.0, 0.1) / p.mu
            curve = xi2_of_t(times, p, "continuum", "quantum")
            rows = [[t * p.mu, tau, x, tm, curve.asymptote]
                    for t, tau, x, tm in zip(curve.times, curve.tau, curve.xi2,
                                             two_mode_xi2(curve.tau))]
            bundle.add_table("figure4_curve",
                             ["t_mu", "tau", "xi2", "xi2_two_mode", "asymptote"],
                             rows)
        else:
            thetas = np.round(np.geomspace(0.1, 10.0, 17), 6)
            rows = []
            for theta in thetas:
                p = derive_params(1e-3, theta, 10 ** 6)
                rows.append([theta,
                             xi2_min(p, "continuum", "quantum") / p.sqrt_rho_a3,
                             noncondensed_fraction(p, "quantum") / p.sqrt_rho_a3])
            bundle.add_table("figure5_bound",
                             ["t_over_mu", "xi2_min_over_s", "nnc_over_s"], rows)
        return
    raise ValueError(f"figure {fig} not implemented")
