"""Physical parameters, the periodic simulation lattice, and coupling relations.

Everything downstream works in simulation units hbar = m = 1. A state of the
homogeneous two-component gas is fixed by three dimensionless numbers: the
interaction strength sqrt(rho a^3), the reduced temperature k_B T / (rho g),
and the atom number N. All dimensionful scales (healing length, thermal
de Broglie wavelength, sound speed, ...) follow once one scale is chosen;
by default the box volume is the free scale.

The lattice spacing is not free: it is fixed by the requirement that the
classical field model with equipartition occupations reproduces, in the
thermodynamic limit, the non-condensed density of the ideal Bose gas at zero
chemical potential. For a cubic box this pins the maximum kinetic energy on
the grid to E_max ~ 2.695 k_B T. The slightly anisotropic box used to
improve ergodicity (squared aspect ratios sqrt(2) : (1+sqrt(5))/2 : sqrt(3))
is handled by solving the same integral condition over its Brillouin zone
with a single overall length scale.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erf, zeta

ZETA_3_2 = float(zeta(1.5))

# box side lengths proportional to these; squared ratios sqrt2 : golden : sqrt3
ASPECT_RATIOS = np.array([2.0 ** 0.25, ((1.0 + np.sqrt(5.0)) / 2.0) ** 0.5, 3.0 ** 0.25])

GridShape = str  # "cubic" | "paper_aspect"


class QuadratureError(RuntimeError):
    """Raised when an adaptive quadrature cannot reach the requested accuracy."""


class CutoffError(RuntimeError):
    """Raised when the lattice-spacing condition cannot be satisfied to tolerance."""


def box_inverse_k2_integral(kmax) -> float:
    """Integral of 1/k^2 over the box prod_nu [-kmax_nu, kmax_nu].

    Uses the identity 1/k^2 = int_0^inf dt exp(-t k^2), which turns the
    three-dimensional integral with its integrable k = 0 singularity into a
    smooth one-dimensional integral of a product of error functions.
    """
    kx, ky, kz = (float(k) for k in np.broadcast_to(kmax, (3,)))
    if min(kx, ky, kz) <= 0:
        raise ValueError("box half-widths must be positive")

    def f(u):
        return 2.0 * np.pi ** 1.5 * erf(u * kx) * erf(u * ky) * erf(u * kz) / u ** 2

    split = 1.0 / min(kx, ky, kz)
    v1, e1 = integrate.quad(f, 0.0, split, limit=200, epsabs=1e-13, epsrel=1e-13)
    v2, e2 = integrate.quad(f, split, np.inf, limit=200, epsabs=1e-13, epsrel=1e-13)
    value = v1 + v2
    if e1 + e2 > 1e-9 * abs(value):
        raise QuadratureError(f"1/k^2 box integral error estimate {e1 + e2:g} too large")
    return value


def box_lorentzian_integral(kmax, c: float) -> float:
    """Integral of 1/(k^2 + c) over the box prod_nu [-kmax_nu, kmax_nu], c > 0."""
    kx, ky, kz = (float(k) for k in np.broadcast_to(kmax, (3,)))

    def f(u):
        return (2.0 * np.pi ** 1.5 * np.exp(-c * u * u)
                * erf(u * kx) * erf(u * ky) * erf(u * kz) / u ** 2)

    split = 1.0 / min(kx, ky, kz)
    v1, e1 = integrate.quad(f, 0.0, split, limit=200, epsabs=1e-13, epsrel=1e-13)
    v2, e2 = integrate.quad(f, split, np.inf, limit=200, epsabs=1e-13, epsrel=1e-13)
    return v1 + v2


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensionless state of the problem plus derived scales (hbar = m = 1).

    mu is the zero-temperature mean-field chemical potential rho*g, which also
    sets the reporting units: energies in rho*g, times in hbar/(rho*g).
    eps_bog, the non-condensed fraction, is not derivable from the inputs
    alone; analytics fill it via `with_eps_bog`.
    """

    sqrt_rho_a3: float
    t_over_mu: float
    n_atoms: int
    volume: float
    rho: float
    scattering_length: float
    g: float
    mu: float
    temperature: float
    healing_length: float
    lambda_dB: float
    chi: float
    sound_speed: float
    eps_size: float
    eps_bog: float | None = None

    def with_eps_bog(self, value: float) -> "PhysicalParams":
        return dataclasses.replace(self, eps_bog=float(value))


def derive_params(sqrt_rho_a3: float, t_over_mu: float, n_atoms: int,
                  volume: float = 1.0) -> PhysicalParams:
    """Build PhysicalParams from the three dimensionless inputs.

    The box volume is the one dimensionful scale (default 1). With
    rho = N/V fixed, the scattering length follows from rho a^3, the
    coupling from g = 4 pi a, and every other scale from those.
    """
    if not np.isfinite(sqrt_rho_a3) or sqrt_rho_a3 <= 0:
        raise ValueError("sqrt_rho_a3 must be positive (zero interaction leaves the "
                         "healing length undefined)")
    if not np.isfinite(t_over_mu) or t_over_mu < 0:
        raise ValueError("t_over_mu must be non-negative")
    n_atoms = int(n_atoms)
    if n_atoms < 2:
        raise ValueError("need at least two atoms")
    if volume <= 0:
        raise ValueError("volume must be positive")

    rho = n_atoms / volume
    a = (sqrt_rho_a3 ** 2 / rho) ** (1.0 / 3.0)
    g = 4.0 * np.pi * a
    mu = rho * g
    temperature = t_over_mu * mu
    healing_length = 1.0 / np.sqrt(2.0 * mu)
    lambda_dB = np.sqrt(2.0 * np.pi / temperature) if temperature > 0 else np.inf
    return PhysicalParams(
        sqrt_rho_a3=float(sqrt_rho_a3),
        t_over_mu=float(t_over_mu),
        n_atoms=n_atoms,
        volume=float(volume),
        rho=rho,
        scattering_length=a,
        g=g,
        mu=mu,
        temperature=temperature,
        healing_length=healing_length,
        lambda_dB=lambda_dB,
        chi=g / volume,
        sound_speed=np.sqrt(mu),
        eps_size=1.0 / n_atoms,
    )


@dataclass(frozen=True)
class CutoffSolution:
    """Result of the lattice-spacing condition at a given temperature."""

    temperature: float
    shape: GridShape
    spacings: np.ndarray          # lattice spacing per direction
    l_over_lambda: np.ndarray     # spacing in units of the thermal wavelength
    e_max: float                  # maximal kinetic energy on the grid
    e_max_over_kT: float
    defect: float                 # relative residual of the integral condition


def _cutoff_kmax(temperature: float, shape: GridShape) -> np.ndarray:
    """Brillouin-zone half-widths pi/l_nu solving the cutoff condition.

    The condition equates zeta(3/2)/lambda_dB^3 with the equipartition
    integral (2 m k_B T / hbar^2) * I / (2 pi)^3 where I is the 1/k^2 box
    integral. I is homogeneous of degree one in the box size, so the overall
    scale solves a linear equation; no iteration is needed.
    """
    if shape == "cubic":
        ratios = np.ones(3)
    elif shape == "paper_aspect":
        ratios = ASPECT_RATIOS
    else:
        raise ValueError(f"unknown grid shape {shape!r}")
    lam = np.sqrt(2.0 * np.pi / temperature)
    unit_integral = box_inverse_k2_integral(1.0 / ratios)
    scale = 2.0 * np.pi ** 2 * ZETA_3_2 / (lam * unit_integral)
    return scale / ratios


def solve_cutoff(temperature: float, shape: GridShape = "cubic") -> CutoffSolution:
    """Solve for the lattice spacing reproducing the ideal-gas thermal density.

    Returns the maximal grid kinetic energy (E_max / k_B T is a pure number,
    ~2.695 for the cubic box) and the lattice spacing relative to lambda_dB.
    The residual of the defining integral condition is verified to 1e-10.
    """
    if not np.isfinite(temperature) or temperature <= 0:
        raise ValueError("temperature must be positive")
    kmax = _cutoff_kmax(temperature, shape)
    lam = np.sqrt(2.0 * np.pi / temperature)
    lhs = ZETA_3_2 / lam ** 3
    rhs = 2.0 * temperature * box_inverse_k2_integral(kmax) / (2.0 * np.pi) ** 3
    defect = abs(lhs - rhs) / lhs
    if defect > 1e-10:
        raise CutoffError(f"cutoff condition residual {defect:g} exceeds 1e-10")
    spacings = np.pi / kmax
    e_max = 0.5 * float(np.sum(kmax ** 2))
    return CutoffSolution(
        temperature=float(temperature),
        shape=shape,
        spacings=spacings,
        l_over_lambda=spacings / lam,
        e_max=e_max,
        e_max_over_kT=e_max / temperature,
        defect=defect,
    )


@dataclass(frozen=True)
class Grid:
    """Periodic lattice with its first-Brillouin-zone wavevector table.

    Mode arrays are flattened in C order matching numpy's FFT layout, so a
    field stored as an (n, n, n) array maps onto the tables by `.ravel()`.
    Modes with any index component at -n/2 are flagged as edge modes: their
    negative aliases back into the zone, so `partner_index` pairs them with
    another edge mode of equal kinetic energy instead of the literal -k
    (fully self-conjugate modes map onto themselves).
    """

    n_per_dir: int
    shape: GridShape
    temperature: float
    box_lengths: np.ndarray
    spacings: np.ndarray
    kvec: np.ndarray            # (M, 3)
    e_kin: np.ndarray           # (M,)
    edge_mask: np.ndarray       # (M,) bool
    partner_index: np.ndarray   # (M,) int, index of the -k mode
    zero_index: int

    @property
    def n_modes(self) -> int:
        return self.n_per_dir ** 3

    @property
    def volume(self) -> float:
        return float(np.prod(self.box_lengths))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    @property
    def e_max(self) -> float:
        return float(self.e_kin.max())

    @property
    def fft_shape(self) -> tuple[int, int, int]:
        n = self.n_per_dir
        return (n, n, n)

    def descriptor(self) -> dict:
        """Serializable identity of the lattice, used by caches and checkpoints."""
        return {
            "n_per_dir": self.n_per_dir,
            "shape": self.shape,
            "temperature": self.temperature,
            "box_lengths": [float(x) for x in self.box_lengths],
        }


def build_grid(n_max: int, shape: GridShape, temperature: float) -> Grid:
    """Construct the lattice whose Brillouin zone satisfies the cutoff condition."""
    n_max = int(n_max)
    if n_max < 2 or n_max % 2 != 0:
        raise ValueError("n_max must be an even integer >= 2")
    if n_max == 2:
        warnings.warn("n_max = 2: every nonzero mode is an edge mode", stacklevel=2)
    sol = solve_cutoff(temperature, shape)
    spacings = sol.spacings
    lengths = n_max * spacings

    j = np.fft.fftfreq(n_max, d=1.0 / n_max).astype(int)  # 0..n/2-1, -n/2..-1
    jx, jy, jz = np.meshgrid(j, j, j, indexing="ij")
    kx = 2.0 * np.pi * jx / lengths[0]
    ky = 2.0 * np.pi * jy / lengths[1]
    kz = 2.0 * np.pi * jz / lengths[2]
    kvec = np.stack([kx.ravel(), ky.ravel(), kz.ravel()], axis=1)
    e_kin = 0.5 * np.sum(kvec ** 2, axis=1)

    edge1d = (j == -n_max // 2)
    ex, ey, ez = np.meshgrid(edge1d, edge1d, edge1d, indexing="ij")
    edge_mask = (ex | ey | ez).ravel()

    # position p holds index j = p mod n, so -j sits at position (-p) mod n
    pneg = (-np.arange(n_max)) % n_max
    partner = (pneg[:, None, None] * n_max * n_max
               + pneg[None, :, None] * n_max
               + pneg[None, None, :]).ravel()

    return Grid(
        n_per_dir=n_max,
        shape=shape,
        temperature=float(temperature),
        box_lengths=lengths,
        spacings=spacings,
        kvec=kvec,
        e_kin=e_kin,
        edge_mask=edge_mask,
        partner_index=partner,
        zero_index=0,
    )


def simulation_setup(sqrt_rho_a3: float, t_over_mu: float, n_max: int,
                     shape: GridShape = "paper_aspect") -> tuple[PhysicalParams, Grid]:
    """Consistent (params, grid) pair for a simulation run.

    Working in units where mu = rho*g = 1, the cutoff fixes the box for the
    given reduced temperature, and the atom number follows as N = V/g with
    g = (4 pi)^{3/2} sqrt(rho a^3). N is rounded to an integer and the
    coupling redefined as g = V/N, which keeps mu = 1 and the temperature
    exact while shifting sqrt(rho a^3) by a negligible O(1/N) amount (the
    realized value is recorded in the returned params).
    """
    if sqrt_rho_a3 <= 0:
        raise ValueError("sqrt_rho_a3 must be positive")
    if t_over_mu <= 0:
        raise ValueError("simulation setup needs a positive temperature")
    grid = build_grid(n_max, shape, temperature=t_over_mu)
    volume = grid.volume
    g_req = (4.0 * np.pi) ** 1.5 * sqrt_rho_a3
    n_atoms = int(round(volume / g_req))
    if n_atoms < 2:
        raise ValueError("box too small for the requested interaction strength")
    s_actual = volume / ((4.0 * np.pi) ** 1.5 * n_atoms)
    params = derive_params(s_actual, t_over_mu, n_atoms, volume=volume)
    return params, grid


@dataclass(frozen=True)
class BareCouplingResult:
    g0: float
    fbz_integral: float
    too_coarse: bool


def bare_coupling(g_effective: float, grid: Grid) -> BareCouplingResult:
    """Bare lattice coupling g_0 reproducing the effective low-energy coupling.

    Solves 1/g = 1/g_0 + I with I the 1/k^2 integral over the first Brillouin
    zone divided by (2 pi)^3. If the lattice is too coarse the relation has
    no positive solution; the result is then flagged and g_0 set to inf.
    Note the classical-field dynamics itself always uses the effective g:
    the 1/g_0 - 1/g difference is a purely quantum fluctuation effect.
    """
    if g_effective <= 0:
        raise ValueError("g_effective must be positive")
    kmax = np.pi / grid.spacings
    fbz = box_inverse_k2_integral(kmax) / (2.0 * np.pi) ** 3
    inv_g0 = 1.0 / g_effective - fbz
    if inv_g0 <= 0:
        return BareCouplingResult(g0=np.inf, fbz_integral=fbz, too_coarse=True)
    return BareCouplingResult(g0=1.0 / inv_g0, fbz_integral=fbz, too_coarse=False)
