"""Initial-state sampling: thermal a field and vacuum-noise b field.

The a field is drawn from the classical canonical ensemble exp(-H/kT)
restricted to the fixed-norm shell sum_r dV |psi|^2 = N, using Metropolis
moves that preserve the norm exactly:

* two-mode rotations in Fourier space (a U(2) rotation of a mode pair, half
  of the time pairing a random mode with the condensate mode);
* single-mode phase kicks (interaction energy only);
* free global phase rotations as an ergodicity aid.

Rotation moves are naturally preconditioned: for a thermal mode the energy
change at fixed angle is O(k_B T) independently of k, so one global angular
step size serves all modes. Chains start from a number-conserving Bogoliubov
draw (equipartition quasi-particle occupations), so burn-in only has to
correct beyond-Bogoliubov features; it can stop early once the energy
autocorrelation time has stabilized.

The b field models vacuum noise: each Fourier amplitude is an independent
complex Gaussian of total variance 1/2.

An over-damped projected stochastic evolution toward the same ensemble is
available as an independent cross-check (method="sgpe").
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import field_from_modes
from .model import Grid, PhysicalParams


@dataclass(frozen=True)
class SamplerConfig:
    burn_in_sweeps: int = 1000          # upper bound when adaptive
    decorrelation_sweeps: int = 10
    rotation_step: float = 0.35         # radians, two-mode rotation angle scale
    phase_step: float = 0.6             # radians, single-mode phase kick scale
    target_acceptance: tuple = (0.2, 0.6)
    adaptive_burn_in: bool = True
    tune_rounds: int = 12
    tune_sweeps: int = 8
    method: str = "metropolis"          # or "sgpe" for the cross-check sampler

    def __post_init__(self):
        lo, hi = self.target_acceptance
        if not (0.0 < lo < hi < 1.0):
            raise ValueError("target acceptance window must lie inside (0, 1)")
        if self.burn_in_sweeps < 0 or self.decorrelation_sweeps < 0:
            raise ValueError("sweep counts must be non-negative")


@dataclass
class ThermalDiagnostics:
    energy_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    acceptance_rate: float = np.nan
    energy_autocorr_time: float = np.nan   # sweeps
    condensate_fraction_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    rotation_step: float = np.nan
    burn_in_used: int = 0
    warnings: list = field(default_factory=list)


def integrated_autocorr_time(trace: np.ndarray) -> float:
    """Integrated autocorrelation time (sweeps) by the initial positive sequence."""
    x = np.asarray(trace, dtype=float)
    x = x - x.mean()
    n = x.size
    if n < 8 or np.allclose(x, 0.0):
        return 0.5
    acf = np.correlate(x, x, mode="full")[n - 1:] / (np.arange(n, 0, -1) * x.var() + 1e-300)
    tau = 0.5
    for rho in acf[1:]:
        if rho <= 0:
            break
        tau += rho
    return float(max(tau, 0.5))


class ThermalSampler:
    """One Markov chain over a-field configurations at fixed norm."""

    def __init__(self, grid: Grid, params: PhysicalParams, config: SamplerConfig,
                 rng: np.random.Generator):
        if params.t_over_mu <= 0:
            raise ValueError("thermal sampling needs a positive temperature")
        self.grid = grid
        self.params = params
        self.config = config
        self.rng = rng
        self.n = grid.n_per_dir
        self.n_modes = grid.n_modes
        self.e_kin = grid.e_kin
        self.beta = 1.0 / params.temperature
        self.g = params.g
        self.k4 = 0.5 * params.g * grid.cell_volume
        # e^{i 2 pi j x / n} per direction; k r = 2 pi j x / n on the lattice
        j = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)
        self._phase_table = np.exp(2j * np.pi * np.outer(j, np.arange(self.n)) / self.n)
        self._triples = np.stack(np.unravel_index(np.arange(self.n_modes),
                                                  (self.n,) * 3), axis=1)
        self.diag = ThermalDiagnostics(rotation_step=config.rotation_step)
        self._step = config.rotation_step
        self._init_field()

    # -- state ----------------------------------------------------------

    def _init_field(self):
        """Number-conserving Bogoliubov draw with equipartition occupations."""
        g0 = self.grid
        p = self.params
        e = self.e_kin
        eps0 = np.sqrt(np.where(e > 0, e * (e + 2.0 * p.mu), 1.0))
        n_cl = np.where(e > 0, p.temperature / eps0, 0.0)
        s0 = np.where(e > 0, (e / np.where(e > 0, e + 2.0 * p.mu, 1.0)) ** 0.25, 1.0)
        u0 = 0.5 * (s0 + 1.0 / s0)
        v0 = 0.5 * (s0 - 1.0 / s0)
        c = (self.rng.normal(size=self.n_modes)
             + 1j * self.rng.normal(size=self.n_modes)) * np.sqrt(n_cl / 2.0)
        c[g0.zero_index] = 0.0
        a = u0 * c + v0 * np.conj(c[g0.partner_index])
        excited = float(np.sum(np.abs(a) ** 2))
        a[g0.zero_index] = np.sqrt(max(p.n_atoms - excited, 0.5 * p.n_atoms))
        a *= np.sqrt(p.n_atoms / np.sum(np.abs(a) ** 2))
        self.a = a
        self._resync()

    def _resync(self):
        self.psi = field_from_modes(self.a.reshape((self.n,) * 3), self.grid.volume)
        dens = self.psi.real ** 2 + self.psi.imag ** 2
        self._s4 = float(np.sum(dens * dens))
        self._kin = float(np.sum(self.e_kin * np.abs(self.a) ** 2))

    def energy(self) -> float:
        return self._kin + self.k4 * self._s4

    def _wave(self, m: int) -> np.ndarray:
        ix, iy, iz = self._triples[m]
        t = self._phase_table
        return (t[ix][:, None, None] * t[iy][None, :, None] * t[iz][None, None, :])

    # -- moves ----------------------------------------------------------

    def sweep(self) -> float:
        """One sweep of n_modes Metropolis moves; returns the acceptance rate."""
        m_count = self.n_modes
        rng = self.rng
        kinds = rng.random(m_count)
        idx1 = rng.integers(0, m_count, m_count)
        idx2 = rng.integers(0, m_count, m_count)
        angles = rng.uniform(-1.0, 1.0, m_count)
        alphas = rng.uniform(0.0, 2.0 * np.pi, m_count)
        us = rng.random(m_count)
        interacting = self.g != 0.0
        sqv = np.sqrt(self.grid.volume)
        acc = 0
        tried = 0
        a = self.a
        e = self.e_kin
        for m in range(m_count):
            if kinds[m] < 0.5:
                m1, m2 = idx1[m], self.grid.zero_index
            elif kinds[m] < 0.8 or not interacting:
                m1, m2 = idx1[m], idx2[m]
            else:
                # single-mode phase kick, interaction energy only
                m1 = idx1[m]
                gamma = angles[m] * self.config.phase_step
                na1 = a[m1] * np.exp(1j * gamma)
                tried += 1
                dpsi = (na1 - a[m1]) * self._wave(m1) / sqv
                npsi = self.psi + dpsi
                nd = npsi.real ** 2 + npsi.imag ** 2
                ns4 = float(np.sum(nd * nd))
                dh = self.k4 * (ns4 - self._s4)
                if dh <= 0 or us[m] < np.exp(-self.beta * dh):
                    a[m1] = na1
                    self.psi = npsi
                    self._s4 = ns4
                    acc += 1
                continue
            if m1 == m2:
                continue
            tried += 1
            phi = angles[m] * self._step
            cph = np.cos(phi)
            sph = np.sin(phi)
            ea = np.exp(1j * alphas[m])
            a1, a2 = a[m1], a[m2]
            na1 = cph * a1 + ea * sph * a2
            na2 = -np.conj(ea) * sph * a1 + cph * a2
            dkin = (e[m1] * (abs(na1) ** 2 - abs(a1) ** 2)
                    + e[m2] * (abs(na2) ** 2 - abs(a2) ** 2))
            if interacting:
                dpsi = ((na1 - a1) * self._wave(m1) + (na2 - a2) * self._wave(m2)) / sqv
                npsi = self.psi + dpsi
                nd = npsi.real ** 2 + npsi.imag ** 2
                ns4 = float(np.sum(nd * nd))
                dh = dkin + self.k4 * (ns4 - self._s4)
            else:
                dh = dkin
            if dh <= 0 or us[m] < np.exp(-self.beta * dh):
                a[m1] = na1
                a[m2] = na2
                self._kin += dkin
                if interacting:
                    self.psi = npsi
                    self._s4 = ns4
                acc += 1
        # free global phase rotation, ergodicity aid
        gphase = np.exp(1j * self.rng.uniform(0.0, 2.0 * np.pi))
        a *= gphase
        if interacting:
            self.psi *= gphase
        return acc / max(tried, 1)

    # -- tuning and burn-in ----------------------------------------------

    def tune(self) -> float:
        """Adjust the rotation step until acceptance enters the target window."""
        lo, hi = self.config.target_acceptance
        rate = np.nan
        for _ in range(self.config.tune_rounds):
            rates = [self.sweep() for _ in range(self.config.tune_sweeps)]
            rate = float(np.mean(rates))
            if rate > hi:
                self._step = min(self._step * 1.35, 0.5 * np.pi)
            elif rate < lo:
                self._step = max(self._step / 1.35, 1e-4)
            else:
                break
        else:
            self.diag.warnings.append(f"tuning did not settle; acceptance {rate:.2f}")
            warnings.warn(self.diag.warnings[-1], stacklevel=2)
        self.diag.rotation_step = self._step
        return rate

    def burn_in(self) -> int:
        """Run burn-in sweeps; stops early once the energy autocorrelation
        time agrees within 20% between the two halves of the trace."""
        cfg = self.config
        energies = []
        fracs = []
        rates = []
        block = max(32, cfg.tune_sweeps * 4)
        used = 0
        while used < cfg.burn_in_sweeps:
            todo = min(block, cfg.burn_in_sweeps - used)
            for _ in range(todo):
                rates.append(self.sweep())
                energies.append(self.energy())
                fracs.append(abs(self.a[self.grid.zero_index]) ** 2 / self.params.n_atoms)
            used += todo
            if cfg.adaptive_burn_in and used >= 3 * block:
                half = len(energies) // 2
                t1 = integrated_autocorr_time(np.array(energies[:half]))
                t2 = integrated_autocorr_time(np.array(energies[half:]))
                if abs(t1 - t2) <= 0.2 * max(t1, t2, 1.0):
                    break
        self.diag.energy_trace = np.array(energies)
        self.diag.condensate_fraction_trace = np.array(fracs)
        self.diag.acceptance_rate = float(np.mean(rates)) if rates else np.nan
        self.diag.energy_autocorr_time = integrated_autocorr_time(np.array(energies))
        self.diag.burn_in_used = used
        lo, hi = cfg.target_acceptance
        if rates and not (lo <= self.diag.acceptance_rate <= hi):
            msg = (f"acceptance {self.diag.acceptance_rate:.2f} outside "
                   f"target window ({lo}, {hi})")
            self.diag.warnings.append(msg)
            warnings.warn(msg, stacklevel=2)
        if not np.isfinite(self.energy()):
            raise RuntimeError("non-finite energy during burn-in")
        return used

    def draw(self) -> np.ndarray:
        """Advance by the decorrelation interval and emit one field (real space).

        The emitted field has sum_r dV |psi|^2 = N exactly (renormalized
        against accumulated round-off).
        """
        for _ in range(self.config.decorrelation_sweeps):
            self.sweep()
        self.a *= np.sqrt(self.params.n_atoms / np.sum(np.abs(self.a) ** 2))
        self._resync()
        if not np.isfinite(self.energy()):
            raise RuntimeError("non-finite energy in sampler state")
        return self.psi.copy()


def tune_proposals(grid: Grid, params: PhysicalParams, config: SamplerConfig,
                   rng: np.random.Generator) -> SamplerConfig:
    """Return a config whose rotation step lands in the acceptance window."""
    chain = ThermalSampler(grid, params, config, rng)
    chain.tune()
    return replace(config, rotation_step=chain._step)


def sample_thermal_field(grid: Grid, params: PhysicalParams, config: SamplerConfig,
                         rng: np.random.Generator):
    """Draw one thermal a-field realization; returns (psi_a, diagnostics).

    For many realizations build a ThermalSampler once and call draw()
    repeatedly; this convenience wrapper pays the burn-in every call.
    """
    if config.method == "sgpe":
        psi = sample_sgpe(grid, params, rng)
        return psi, ThermalDiagnostics()
    chain = ThermalSampler(grid, params, config, rng)
    chain.tune()
    chain.burn_in()
    return chain.draw(), chain.diag


def sample_vacuum_field(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    """Vacuum-noise b field: every mode an independent CN(0, 1/2) amplitude."""
    b = 0.5 * (rng.normal(size=grid.n_modes) + 1j * rng.normal(size=grid.n_modes))
    return field_from_modes(b.reshape(grid.fft_shape), grid.volume)


def sample_sgpe(grid: Grid, params: PhysicalParams, rng: np.random.Generator,
                n_steps: int = 5000, gamma_dt: float = 0.02) -> np.ndarray:
    """Cross-check sampler: over-damped stochastic evolution projected to fixed N.

    Euler-Maruyama on d psi = -Gamma (H_GP psi) dt + noise with the norm
    rescaled to the shell every step, started from a uniform condensate so
    only the thermal cloud has to build up. Slower mixing and a finite-step
    bias, but entirely independent of the Metropolis machinery.
    """
    if params.t_over_mu <= 0:
        raise ValueError("thermal sampling needs a positive temperature")
    e3 = grid.e_kin.reshape(grid.fft_shape)
    psi = np.full(grid.fft_shape, np.sqrt(params.n_atoms / grid.volume), dtype=complex)
    dV = grid.cell_volume
    noise_amp = np.sqrt(2.0 * gamma_dt * params.temperature / dV)
    for _ in range(n_steps):
        am = np.fft.fftn(psi)
        kin = np.fft.ifftn(e3 * am)
        drift = kin + params.g * (psi.real ** 2 + psi.imag ** 2) * psi
        xi = (rng.normal(size=psi.shape) + 1j * rng.normal(size=psi.shape)) / np.sqrt(2.0)
        psi = psi - gamma_dt * drift + noise_amp * xi
        norm = dV * np.sum(psi.real ** 2 + psi.imag ** 2)
        psi *= np.sqrt(params.n_atoms / norm)
    return psi
