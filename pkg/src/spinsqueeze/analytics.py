"""Closed-form results for squeezing dynamics in the quasi-particle picture.

After the mixing pulse the two internal states carry identical quasi-particle
spectra computed with half the original mean field. Initial thermal (state a)
and vacuum (state b) fluctuations map onto two independent Gaussian families
of mode operators; every observable needed for the squeezing parameter is a
mode sum of their second moments. This module evaluates those sums either on
a discrete wavevector table or as continuum integrals, in two statistics:

* "quantum": Bose occupations, normal-ordered moments carrying the vacuum
  commutator terms;
* "classical": equipartition occupations and symmetrically ordered moments,
  matching the classical field model sampled by the Monte Carlo code.

Conventions. All reduced quantities are per atom: mean_fr returns <F_R>/N,
d_squared_over_n returns <D^2>/N (the infinite-time squeezing limit), and so
on. Times are in absolute simulation units (hbar = m = 1); rho*g*t/hbar is
the natural dimensionless combination. The constant part of the classical
<F_R> coming from the vacuum-noise norm is dropped so that F_R(0) = 0 in both
statistics; it is a finite-size normalization effect that disappears from the
large-system squeezing curve.

Mode sums run over every nonzero wavevector of a grid, including the
Brillouin-edge modes: on the even lattice -k aliases back into the zone, so
every mode has a partner of equal kinetic energy and the per-mode closed
forms hold unchanged (only the handful of fully self-conjugate modes are
approximate, an O(1/M) effect). This keeps discrete sums consistent with the
simulator, where edge modes carry a sizable share of the squeezing limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .model import (Grid, PhysicalParams, QuadratureError, box_inverse_k2_integral,
                    box_lorentzian_integral, solve_cutoff)

Statistics = str  # "quantum" | "classical"
Stage = str       # "before_pulse" | "after_pulse"

_STATISTICS = ("quantum", "classical")
_STAGES = ("before_pulse", "after_pulse")


def _check_statistics(statistics: Statistics) -> None:
    if statistics not in _STATISTICS:
        raise ValueError(f"statistics must be one of {_STATISTICS}, got {statistics!r}")


# ---------------------------------------------------------------------------
# dispersion and occupations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BogoliubovPoint:
    """Quasi-particle data at one kinetic energy, before or after the pulse."""

    k_magnitude: float
    e_kin: float
    stage: Stage
    s: float        # amplitude sum U + V
    u: float
    v: float
    eps: float      # eigenenergy
    omega: float    # eps / hbar
    zero_mode: bool = False


def effective_mu(mu: float, stage: Stage) -> float:
    """Mean-field term entering the dispersion: rho*g before the pulse, half after."""
    if stage == "before_pulse":
        return mu
    if stage == "after_pulse":
        return 0.5 * mu
    raise ValueError(f"stage must be one of {_STAGES}, got {stage!r}")


def dispersion(e_kin: float, mu: float, stage: Stage) -> BogoliubovPoint:
    """Bogoliubov amplitudes and eigenenergy for one mode.

    s = (E/(E + 2 mu_eff))^(1/4), eps = sqrt(E (E + 2 mu_eff)), u, v from s.
    E = 0 returns a flagged zero-mode point with s = eps = 0; callers must
    keep it out of mode sums.
    """
    if e_kin < 0:
        raise ValueError("kinetic energy must be non-negative")
    if mu <= 0:
        raise ValueError("mu must be positive")
    mu_eff = effective_mu(mu, stage)
    if e_kin == 0:
        return BogoliubovPoint(0.0, 0.0, stage, s=0.0, u=np.nan, v=np.nan,
                               eps=0.0, omega=0.0, zero_mode=True)
    s = (e_kin / (e_kin + 2.0 * mu_eff)) ** 0.25
    eps = np.sqrt(e_kin * (e_kin + 2.0 * mu_eff))
    u = 0.5 * (s + 1.0 / s)
    v = 0.5 * (s - 1.0 / s)
    return BogoliubovPoint(np.sqrt(2.0 * e_kin), float(e_kin), stage,
                           s=float(s), u=float(u), v=float(v),
                           eps=float(eps), omega=float(eps))


def occupation(eps, temperature: float, statistics: Statistics):
    """Equilibrium occupation of a quasi-particle mode of energy eps.

    Bose formula for quantum statistics, equipartition k_B T / eps for the
    classical field. eps must be positive; the zero mode is condensate
    bookkeeping, not an occupation.
    """
    _check_statistics(statistics)
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0):
        raise ValueError("occupation needs eps > 0; the zero mode is handled separately")
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    if temperature == 0:
        return np.zeros_like(eps) if eps.ndim else 0.0
    if statistics == "classical":
        out = temperature / eps
    else:
        x = eps / temperature
        with np.errstate(over="ignore"):
            out = np.where(x < 700.0, 1.0 / np.expm1(np.minimum(x, 700.0)), 0.0)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# correlators of the post-pulse mode operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelatorSet:
    """Second moments of the thermal (A) and vacuum (B) mode families.

    Quantum statistics stores normal-ordered moments <A^dag A>, <A A_{-k}>,
    <B^dag B> = V^2, <B B_{-k}> = -U V. Classical statistics stores the
    symmetrically ordered (c-number) moments, i.e. the quantum values with
    (n0 + 1/2) replaced by the equipartition occupation in the A family and
    a +1/2 shift on <B* B>. All crossed A-B moments vanish identically.
    """

    aa: np.ndarray        # <A^dag A> (quantum) or <A* A> (classical)
    aa_anom: np.ndarray   # <A_k A_{-k}>
    bb: np.ndarray        # <B^dag B> or <B* B>
    bb_anom: np.ndarray   # <B_k B_{-k}>
    statistics: Statistics


def correlators(point_before: BogoliubovPoint, point_after: BogoliubovPoint,
                n0, statistics: Statistics) -> CorrelatorSet:
    """Mode-operator second moments from the two dispersion stages.

    n0 is the pre-pulse occupation at the same kinetic energy, evaluated with
    the matching statistics.
    """
    _check_statistics(statistics)
    if point_before.stage != "before_pulse" or point_after.stage != "after_pulse":
        raise ValueError("pass one before_pulse and one after_pulse point, in that order")
    if not np.isclose(point_before.e_kin, point_after.e_kin, rtol=1e-12, atol=0.0):
        raise ValueError("points must share the same kinetic energy")
    if point_before.zero_mode:
        raise ValueError("zero mode has no correlator set")
    s0sq = point_before.s ** 2
    ssq = point_after.s ** 2
    p = s0sq / ssq
    q = ssq / s0sq
    u, v = point_after.u, point_after.v
    n0 = np.asarray(n0, dtype=float)
    if statistics == "quantum":
        nu = n0 + 0.5
        aa = 0.5 * nu * (p + q) - 0.5
    else:
        nu = n0
        aa = 0.5 * nu * (p + q)
    aa_anom = 0.5 * nu * (p - q)
    bb = v * v + (0.5 if statistics == "classical" else 0.0)
    bb_anom = -u * v
    shape = np.broadcast_shapes(np.shape(n0), ())
    return CorrelatorSet(aa=np.broadcast_to(aa, shape).copy(),
                         aa_anom=np.broadcast_to(aa_anom, shape).copy(),
                         bb=np.broadcast_to(np.asarray(bb, dtype=float), shape).copy(),
                         bb_anom=np.broadcast_to(np.asarray(bb_anom, dtype=float), shape).copy(),
                         statistics=statistics)


# ---------------------------------------------------------------------------
# mode sets: discrete tables and continuum quadratures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeSet:
    """Kinetic energies plus weights turning sums into per-atom averages.

    sum(weights * f(e_kin)) approximates (1/N) sum_{k != 0} f(E_k) for a
    discrete lattice, or (1/rho) int d^3k/(2pi)^3 f(E_k) in the continuum.
    """

    e_kin: np.ndarray
    weights: np.ndarray
    label: str

    @staticmethod
    def from_grid(grid: Grid, params: PhysicalParams) -> "ModeSet":
        """Every nonzero lattice mode, edge modes included, weight 1/N.

        N here is the atom number contained in the grid's box, rho * V_grid;
        for a consistent simulation setup this equals params.n_atoms, while
        for reference parameters defined at another volume it rescales the
        per-atom sums onto this box.
        """
        e = grid.e_kin[grid.e_kin > 0]
        w = np.full(e.shape, 1.0 / (params.rho * grid.volume))
        return ModeSet(e_kin=e, weights=w, label=f"grid-{grid.n_per_dir}")

    @staticmethod
    def radial(params: PhysicalParams, kappa_max: float | None = None,
               n_panels: int = 400, points_per_panel: int = 20) -> "ModeSet":
        """Composite Gauss-Legendre radial rule over R^3 for isotropic integrands.

        kappa is the wavenumber in healing-length units; the default upper cut
        covers both the Bose tail and the power-law tails of the vacuum terms.
        """
        theta = params.t_over_mu
        if kappa_max is None:
            kappa_max = max(40.0, np.sqrt(50.0 * max(theta, 1.0)))
        x, w = np.polynomial.legendre.leggauss(points_per_panel)
        edges = np.linspace(0.0, kappa_max, n_panels + 1)
        a = edges[:-1, None]
        b = edges[1:, None]
        kappa = (0.5 * (b - a) * x[None, :] + 0.5 * (a + b)).ravel()
        wk = (0.5 * (b - a) * w[None, :]).ravel()
        # (1/rho) int d^3k/(2pi)^3 = (8 pi)^{3/2} sqrt(rho a^3) / (2 pi^2) int kappa^2 dkappa
        pref = (8.0 * np.pi) ** 1.5 * params.sqrt_rho_a3 / (2.0 * np.pi ** 2)
        e_kin = params.mu * kappa ** 2
        return ModeSet(e_kin=e_kin, weights=pref * kappa ** 2 * wk, label="radial")

    @staticmethod
    def fbz(params: PhysicalParams, kmax: np.ndarray | None = None,
            box_shape: str = "cubic", n_points: int = 48) -> "ModeSet":
        """Tensor-product Gauss-Legendre rule over one octant of the Brillouin zone."""
        if kmax is None:
            kmax = np.pi / solve_cutoff(params.temperature, box_shape).spacings
        kmax = np.asarray(kmax, dtype=float)
        x, w = np.polynomial.legendre.leggauss(n_points)
        nodes = [0.5 * (x + 1.0) * km for km in kmax]
        wts = [0.5 * km * w for km in kmax]
        kx, ky, kz = np.meshgrid(*nodes, indexing="ij")
        w3 = (wts[0][:, None, None] * wts[1][None, :, None] * wts[2][None, None, :])
        e_kin = 0.5 * (kx ** 2 + ky ** 2 + kz ** 2).ravel()
        weights = 8.0 * w3.ravel() / ((2.0 * np.pi) ** 3 * params.rho)
        return ModeSet(e_kin=e_kin, weights=weights, label="fbz")


def _resolve_modes(modes, params: PhysicalParams, statistics: Statistics,
                   box_shape: str) -> ModeSet:
    if isinstance(modes, ModeSet):
        return modes
    if isinstance(modes, Grid):
        return ModeSet.from_grid(modes, params)
    if modes == "continuum":
        if statistics == "classical":
            return ModeSet.fbz(params, box_shape=box_shape)
        return ModeSet.radial(params)
    raise ValueError("modes must be a ModeSet, a Grid, or 'continuum'")


class _Tables:
    """Per-mode quantities shared by all the analytic sums."""

    __slots__ = ("e", "s0sq", "ssq", "s4", "eps0", "eps", "u", "v", "u0", "v0",
                 "nu", "alpha_bar", "beta_bar", "m_a", "m_b", "delta", "x",
                 "x_minus_1", "n0")

    def __init__(self, e_kin: np.ndarray, mu: float, temperature: float,
                 statistics: Statistics):
        _check_statistics(statistics)
        e = np.asarray(e_kin, dtype=float)
        if np.any(e <= 0):
            raise ValueError("mode sets must exclude the zero mode")
        self.e = e
        self.eps0 = np.sqrt(e * (e + 2.0 * mu))
        self.eps = np.sqrt(e * (e + mu))
        self.s0sq = np.sqrt(e / (e + 2.0 * mu))
        self.ssq = np.sqrt(e / (e + mu))
        self.s4 = e / (e + mu)
        s = np.sqrt(self.ssq)
        s0 = np.sqrt(self.s0sq)
        self.u = 0.5 * (s + 1.0 / s)
        self.v = 0.5 * (s - 1.0 / s)
        self.u0 = 0.5 * (s0 + 1.0 / s0)
        self.v0 = 0.5 * (s0 - 1.0 / s0)
        n0 = occupation(self.eps0, temperature, statistics)
        self.n0 = n0
        if statistics == "quantum":
            self.nu = n0 + 0.5
            self.delta = 1.0
        else:
            self.nu = n0
            self.delta = 0.0
        p = self.s0sq / self.ssq
        q = self.ssq / self.s0sq
        self.alpha_bar = 0.5 * self.nu * (p + q)
        self.beta_bar = 0.25 * (self.ssq + 1.0 / self.ssq)
        self.m_a = 0.5 * self.nu * (p - q)
        self.m_b = -self.u * self.v
        # x = s0^2/s^4 with x - 1 evaluated without cancellation:
        # s0^2 - s^4 = sqrt(E) mu^2 / [sqrt(E+2mu) (E+mu) ((E+mu) + eps0)]
        num = np.sqrt(e) * mu ** 2
        den = np.sqrt(e + 2.0 * mu) * (e + mu) * ((e + mu) + self.eps0)
        self.x_minus_1 = (num / den) / self.s4
        self.x = 1.0 + self.x_minus_1


def _tables(params: PhysicalParams, modes: ModeSet, statistics: Statistics) -> _Tables:
    return _Tables(modes.e_kin, params.mu, params.temperature, statistics)


# ---------------------------------------------------------------------------
# time-independent sums
# ---------------------------------------------------------------------------

def _d2_density(t: _Tables) -> np.ndarray:
    # per-mode <D^2>: s^4 [ (n/2)(x + 1/x) + delta (x-1)^2/(4x) ], x = s0^2/s^4
    xpx = t.x + 1.0 / t.x
    core = 0.5 * t.n0 * xpx
    if t.delta:
        core = core + 0.25 * t.x_minus_1 ** 2 / t.x
    return t.s4 * core


def d_squared_over_n(params: PhysicalParams, modes, statistics: Statistics = "quantum",
                     box_shape: str = "cubic") -> float:
    """<D^2>/N: the variance per atom of the multimode phase-drift operator.

    This is the infinite-time limit of the squeezing parameter.
    """
    ms = _resolve_modes(modes, params, statistics, box_shape)
    t = _tables(params, ms, statistics)
    return float(np.sum(ms.weights * _d2_density(t)))


def xi2_min(params: PhysicalParams, modes="continuum", statistics: Statistics = "quantum",
            box_shape: str = "cubic", rtol: float = 1e-6) -> float:
    """Minimal squeezing parameter <D^2>/N.

    Grid or explicit ModeSet inputs are summed directly. The quantum
    continuum is an adaptive Gauss-Kronrod radial quadrature over R^3 (the
    integrand decays, no cutoff needed); the classical continuum integrates
    over the Brillouin zone fixed by the cutoff condition at params.temperature.
    """
    _check_statistics(statistics)
    if modes == "continuum" and statistics == "quantum":
        mu, theta, s_int = params.mu, params.t_over_mu, params.sqrt_rho_a3

        def f(kappa):
            tab = _Tables(np.atleast_1d(mu * kappa ** 2), mu, params.temperature, "quantum")
            return kappa ** 2 * _d2_density(tab)[0]

        kappa_hi = max(40.0, np.sqrt(50.0 * max(theta, 1.0)))
        val, err = integrate.quad(f, 0.0, kappa_hi, limit=400, epsabs=1e-14, epsrel=1e-10)
        tail, tail_err = integrate.quad(f, kappa_hi, np.inf, limit=200)
        val += tail
        err += tail_err
        pref = (8.0 * np.pi) ** 1.5 * s_int / (2.0 * np.pi ** 2)
        if err > rtol * abs(val) and err > 1e-15:
            raise QuadratureError(f"xi2_min quadrature achieved only {err / abs(val):g} relative")
        return float(pref * val)
    if params.temperature == 0 and statistics == "classical":
        return 0.0
    ms = _resolve_modes(modes, params, statistics, box_shape)
    t = _tables(params, ms, statistics)
    return float(np.sum(ms.weights * _d2_density(t)))


def noncondensed_fraction(params: PhysicalParams, statistics: Statistics = "quantum",
                          modes="continuum", box_shape: str = "cubic") -> float:
    """Initial non-condensed fraction <N_nc>/N of the thermal gas in state a.

    Quantum statistics includes the zero-temperature depletion term V0^2;
    the classical field has no depletion and uses equipartition occupations.
    """
    _check_statistics(statistics)
    if modes == "continuum":
        if statistics == "classical":
            if params.temperature == 0:
                return 0.0
            # (U0^2+V0^2) n_cl = T [1/k^2 + 1/(k^2 + 4 mu)] exactly
            kmax = np.pi / solve_cutoff(params.temperature, box_shape).spacings
            c1 = box_inverse_k2_integral(kmax)
            c2 = box_lorentzian_integral(kmax, 4.0 * params.mu)
            return float(params.temperature * (c1 + c2)
                         / ((2.0 * np.pi) ** 3 * params.rho))
        mu = params.mu

        def f(kappa):
            e = np.atleast_1d(mu * kappa ** 2)
            eps0 = np.sqrt(e * (e + 2.0 * mu))
            s0sq = np.sqrt(e / (e + 2.0 * mu))
            u0v0sq = 0.5 * (s0sq + 1.0 / s0sq)
            # V0^2 = (1 - s0^2)^2/(4 s0^2) with 1 - s0^2 cancellation-free
            root = np.sqrt(e + 2.0 * mu)
            one_minus = 2.0 * mu / (root * (root + np.sqrt(e)))
            v0sq = one_minus ** 2 / (4.0 * s0sq)
            n0 = occupation(eps0, params.temperature, "quantum")
            return kappa ** 2 * (u0v0sq * n0 + v0sq)[0]

        kappa_mid = max(40.0, np.sqrt(50.0 * max(params.t_over_mu, 1.0)))
        val, err = integrate.quad(f, 0.0, kappa_mid, limit=400,
                                  epsabs=1e-13, epsrel=1e-10)
        # the V0^2 tail decays only as 1/kappa^2; map it to a finite interval
        tail, tail_err = integrate.quad(lambda u: f(1.0 / u) / u ** 2,
                                        1e-12, 1.0 / kappa_mid, limit=200,
                                        epsabs=1e-12, epsrel=1e-10)
        val += tail
        err += tail_err
        pref = (8.0 * np.pi) ** 1.5 * params.sqrt_rho_a3 / (2.0 * np.pi ** 2)
        if err > 1e-6 * abs(val) and err > 1e-15:
            raise QuadratureError(f"depletion quadrature error {err:g}")
        return float(pref * val)
    ms = _resolve_modes(modes, params, statistics, box_shape)
    e = ms.e_kin
    mu = params.mu
    eps0 = np.sqrt(e * (e + 2.0 * mu))
    s0sq = np.sqrt(e / (e + 2.0 * mu))
    u0v0sq = 0.5 * (s0sq + 1.0 / s0sq)
    n0 = occupation(eps0, params.temperature, statistics)
    dens = u0v0sq * n0
    if statistics == "quantum":
        dens = dens + 0.25 * (s0sq + 1.0 / s0sq) - 0.5
    return float(np.sum(ms.weights * dens))


def sz_d_anticommutator(params: PhysicalParams, modes, statistics: Statistics = "quantum",
                        box_shape: str = "cubic") -> float:
    """<{S_z, D}>/N = sum s^2 (<A^dag A> - V^2) / N; time independent."""
    ms = _resolve_modes(modes, params, statistics, box_shape)
    t = _tables(params, ms, statistics)
    # ordering shifts cancel: alpha_bar - beta_bar in both statistics
    return float(np.sum(ms.weights * t.ssq * (t.alpha_bar - t.beta_bar)))


# ---------------------------------------------------------------------------
# time-dependent sums
# ---------------------------------------------------------------------------

def _sinc(x: np.ndarray) -> np.ndarray:
    return np.sinc(x / np.pi)


def mean_fr(t, params: PhysicalParams, modes, box_shape: str = "cubic"):
    """<F_R(t)>/N = -(1/N) sum 4 U^2 V^2 sin^2(omega t).

    The B family is vacuum noise in both statistics; the classical constant
    norm offset is dropped (see module docstring), making this statistics-free.
    """
    ms = _resolve_modes(modes, params, "quantum", box_shape)
    tab = _tables(params, ms, "quantum")
    t = np.asarray(t, dtype=float)
    uv2 = (tab.u * tab.v) ** 2
    out = -4.0 * np.sum(ms.weights * uv2 * np.sin(np.multiply.outer(t, tab.eps)) ** 2,
                        axis=-1)
    return out if out.ndim else float(out)


def var_fr(t, params: PhysicalParams, modes, box_shape: str = "cubic"):
    """Var(F_R)/N = (1/N) sum 8 U^2 V^2 sin^2 (1 + 4 U^2 V^2 sin^2)."""
    ms = _resolve_modes(modes, params, "quantum", box_shape)
    tab = _tables(params, ms, "quantum")
    t = np.asarray(t, dtype=float)
    uv2 = (tab.u * tab.v) ** 2
    s2 = np.sin(np.multiply.outer(t, tab.eps)) ** 2
    out = np.sum(ms.weights * 8.0 * uv2 * s2 * (1.0 + 4.0 * uv2 * s2), axis=-1)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class OscCorrections:
    """Oscillating-phase corrections, all per atom."""

    sz_dosc: np.ndarray   # <{S_z, D_osc}>/N, enters the renormalized time
    d_dosc: np.ndarray    # <{D, D_osc}>/N
    dosc2: np.ndarray     # <D_osc^2>/N
    zeta: np.ndarray      # extra curve term zeta(t)/N


def osc_corrections(t, params: PhysicalParams, modes,
                    statistics: Statistics = "quantum",
                    box_shape: str = "cubic") -> OscCorrections:
    """The four mode sums of the temporally oscillating phase terms.

    At t = 0 the sinc limits are taken exactly (sin x / x -> 1), so all
    members are finite there; zeta(0) = 0.
    """
    ms = _resolve_modes(modes, params, statistics, box_shape)
    tab = _tables(params, ms, statistics)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    wt = np.multiply.outer(t, tab.eps)            # omega t
    sinc1 = _sinc(wt)
    sinc2 = _sinc(2.0 * wt)
    cos2 = np.cos(2.0 * wt)
    w = ms.weights

    sz_dosc = np.sum(w * tab.ssq * sinc2 * (tab.m_a - tab.m_b), axis=-1)
    d_dosc = np.sum(w * 2.0 * sinc2 * tab.s4
                    * (2.0 * tab.alpha_bar * tab.m_b
                       + (tab.u ** 2 + tab.v ** 2) * tab.m_a), axis=-1)
    dosc2 = np.sum(w * sinc1 ** 2 * tab.s4
                   * ((tab.u ** 2 + tab.v ** 2) * tab.alpha_bar + 0.5 * tab.delta
                      - 2.0 * tab.u * tab.v * tab.m_a * cos2), axis=-1)
    zeta = -np.sum(w * np.sin(wt) ** 2 * (params.mu / tab.eps)
                   * tab.ssq * tab.u0 * tab.v0 * tab.nu, axis=-1)
    return OscCorrections(sz_dosc=sz_dosc, d_dosc=d_dosc, dosc2=dosc2, zeta=zeta)


# ---------------------------------------------------------------------------
# the squeezing curve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticCurve:
    """xi^2(t) in the large-system limit, with its ingredients."""

    times: np.ndarray
    tau: np.ndarray
    xi2: np.ndarray
    asymptote: float          # <D^2>/N
    mean_fr: np.ndarray       # <F_R(t)>/N
    sz_d: float               # <{S_z, D}>/N
    xi2_tot: np.ndarray | None = None   # with oscillating corrections
    zeta: np.ndarray | None = None
    statistics: Statistics = "quantum"


def xi2_of_t(times, params: PhysicalParams, modes="continuum",
             statistics: Statistics = "quantum", include_osc: bool = False,
             box_shape: str = "cubic") -> AnalyticCurve:
    """Squeezing parameter versus time from the multimode phase dynamics.

    The dimensionless time tau is mu*t/(2 hbar) renormalized by the
    (2<F_R> + <{S_z,D}>)/N correction; the curve is

        xi^2 = (1 - 4 <F_R>/N) / (tau + sqrt(1+tau^2))^2
             + 2 (<D^2>/N tau^2 + <F_R>/N) / ((tau + sqrt(1+tau^2)) sqrt(1+tau^2))

    With include_osc the oscillating phase terms are kept as well: D^2 gains
    the D_osc cross and square terms, tau the <{S_z,D_osc}> shift, and the
    curve the extra zeta(t) term; the result is stored in xi2_tot.
    """
    ms = _resolve_modes(modes, params, statistics, box_shape)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("times must be non-negative")
    d2 = d_squared_over_n(params, ms, statistics)
    szd = sz_d_anticommutator(params, ms, statistics)
    fr = np.asarray(mean_fr(times, params, ms))

    tau = 0.5 * params.mu * times * (1.0 + 2.0 * fr + szd)
    plus = tau + np.sqrt(1.0 + tau ** 2)
    xi2 = ((1.0 - 4.0 * fr) / plus ** 2
           + 2.0 * (d2 * tau ** 2 + fr) / (plus * np.sqrt(1.0 + tau ** 2)))

    xi2_tot = None
    zeta = None
    if include_osc:
        osc = osc_corrections(times, params, ms, statistics)
        zeta = osc.zeta
        tau_t = 0.5 * params.mu * times * (1.0 + 2.0 * fr + szd + osc.sz_dosc)
        plus_t = tau_t + np.sqrt(1.0 + tau_t ** 2)
        d2_tot = d2 + osc.d_dosc + osc.dosc2
        xi2_tot = ((1.0 - 4.0 * fr) / plus_t ** 2
                   + 2.0 * (d2_tot * tau_t ** 2 + fr + zeta)
                   / (plus_t * np.sqrt(1.0 + tau_t ** 2)))

    return AnalyticCurve(times=times, tau=tau, xi2=xi2, asymptote=d2,
                         mean_fr=fr, sz_d=szd, xi2_tot=xi2_tot, zeta=zeta,
                         statistics=statistics)


def two_mode_xi2(tau) -> np.ndarray:
    """Two-mode curve 1/(tau + sqrt(1+tau^2))^2, the multimode-free limit."""
    tau = np.asarray(tau, dtype=float)
    return 1.0 / (tau + np.sqrt(1.0 + tau ** 2)) ** 2


def t_best(eta: float, xi2_min_value: float, mu: float) -> float:
    """Close-to-best squeezing time: mu t_eta / hbar = 1 / sqrt(eta xi2_min)."""
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie strictly between 0 and 1")
    if xi2_min_value <= 0:
        raise ValueError("xi2_min must be positive")
    return 1.0 / (mu * np.sqrt(eta * xi2_min_value))


# ---------------------------------------------------------------------------
# condensate-mode squeezing ingredients
# ---------------------------------------------------------------------------

def var_nperp_diff(t, params: PhysicalParams, modes,
                   statistics: Statistics = "quantum",
                   box_shape: str = "cubic"):
    """Var(N_a_perp - N_b_perp)(t)/N, a sum of non-negative terms.

    At t = 0 this reduces to the non-condensed fraction. In a finite box the
    low-k terms make it grow to a super-extensive plateau on the time scale
    L/c and oscillate around it.
    """
    ms = _resolve_modes(modes, params, statistics, box_shape)
    tab = _tables(params, ms, statistics)
    t = np.asarray(t, dtype=float)
    wt = np.multiply.outer(t, tab.eps)
    sin2 = np.sin(wt) ** 2
    cos2 = np.cos(wt) ** 2
    s4 = tab.s4
    s0sq = tab.s0sq
    term1 = (s4 - 1.0 / s4) * (s4 / s0sq - s0sq / s4)
    term2 = (tab.ssq - 1.0 / tab.ssq) ** 3 * (s0sq / tab.ssq - tab.ssq / s0sq)
    base = noncondensed_fraction(params, statistics, ms)
    out = base + np.sum(ms.weights * 0.5 * tab.nu * sin2 * (term1 + term2 * cos2),
                        axis=-1)
    return out if np.ndim(out) else float(out)


def var_nperp_growth_rate(params: PhysicalParams) -> float:
    """Thermodynamic-limit linear growth rate of Var(N_a_perp - N_b_perp)/N.

    (3/2) (2 pi rho a^3)^{1/2} k_B T / hbar, valid before thermalization.
    """
    return float(1.5 * np.sqrt(2.0 * np.pi) * params.sqrt_rho_a3 * params.temperature)


def nperp_diff_d_cross(t, params: PhysicalParams, modes,
                       statistics: Statistics = "quantum",
                       box_shape: str = "cubic"):
    """<{N_a_perp - N_b_perp, D}>(t)/N from the same Gaussian contractions.

    In the Hartree-Fock limit this tends to twice the thermal occupation sum,
    completing Var(dN_perp + D) -> 4 <N_nc> there.
    """
    ms = _resolve_modes(modes, params, statistics, box_shape)
    tab = _tables(params, ms, statistics)
    t = np.asarray(t, dtype=float)
    cos2 = np.cos(2.0 * np.multiply.outer(t, tab.eps))
    u2v2 = tab.u ** 2 + tab.v ** 2
    static = u2v2 * (2.0 * tab.alpha_bar * tab.beta_bar
                     + 2.0 * tab.m_a * tab.m_b - 0.5 * tab.delta)
    rocking = 2.0 * tab.u * tab.v * (tab.alpha_bar * tab.m_b + tab.beta_bar * tab.m_a)
    out = np.sum(ms.weights * 2.0 * tab.ssq * (static + 2.0 * rocking * cos2), axis=-1)
    return out if np.ndim(out) else float(out)


def xi0_asymptote(t, params: PhysicalParams, modes,
                  statistics: Statistics = "quantum",
                  box_shape: str = "cubic"):
    """Long-time condensate-mode squeezing: Var[(N_a_perp - N_b_perp) + D]/N.

    This is the variance combination that stays uncorrelated with the phase
    drift and therefore bounds the condensate squeezing. The measured spin
    estimator asymptotes to half this value (its <N_a0>/|<S_0>|^2 prefactor
    contributes 1/2 after the pulse); the Hartree-Fock landmark, four times
    the non-condensed fraction, refers to the variance combination itself.
    """
    return (var_nperp_diff(t, params, modes, statistics, box_shape)
            + d_squared_over_n(params, modes, statistics, box_shape)
            + nperp_diff_d_cross(t, params, modes, statistics, box_shape))


def universal_squeezing_limit(t_over_mu: float, statistics: Statistics = "quantum",
                              box_shape: str = "cubic") -> float:
    """xi^2_min / sqrt(rho a^3) in the thermodynamic and weakly interacting limit.

    A universal function of k_B T / rho g; quantum and classical variants give
    the two reference curves of the temperature-scaling figure.
    """
    ref = 1e-3
    from .model import derive_params
    params = derive_params(ref, t_over_mu, n_atoms=10 ** 6)
    return xi2_min(params, "continuum", statistics, box_shape) / ref
