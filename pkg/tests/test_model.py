import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinsqueeze import model
from spinsqueeze.model import (ASPECT_RATIOS, ZETA_3_2, bare_coupling,
                               box_inverse_k2_integral, build_grid, derive_params,
                               simulation_setup, solve_cutoff)

from conftest import assert_close


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

def test_rejects_degenerate_inputs():
    with pytest.raises(ValueError):
        derive_params(0.0, 0.5, 100)       # zero interaction: no healing length
    with pytest.raises(ValueError):
        derive_params(-1e-3, 0.5, 100)
    with pytest.raises(ValueError):
        derive_params(1e-3, -0.1, 100)
    with pytest.raises(ValueError):
        derive_params(1e-3, 0.5, 1)


@settings(max_examples=40, deadline=None)
@given(s=st.floats(1e-5, 0.2), theta=st.floats(0.0, 30.0),
       n=st.integers(2, 10 ** 9))
def test_round_trip_dimensionless(s, theta, n):
    p = derive_params(s, theta, n)
    # reconstruct the inputs from (rho, g, T) and the volume
    s_back = np.sqrt(p.rho * p.scattering_length ** 3)
    theta_back = p.temperature / (p.rho * p.g) if p.mu > 0 else 0.0
    n_back = p.rho * p.volume
    assert_close(s_back, s, 1e-12, "sqrt(rho a^3)")
    if theta > 0:
        assert_close(theta_back, theta, 1e-12, "kT/mu")
    assert_close(n_back, n, 1e-12, "N")


def test_derived_scales_consistent(bench_params):
    p = bench_params
    # hbar/(sqrt2 m c) = healing length, hbar = m = 1
    assert_close(1.0 / (np.sqrt(2.0) * p.sound_speed), p.healing_length, 1e-12)
    assert_close(p.mu, p.rho * p.g, 1e-12)
    assert_close(p.lambda_dB, np.sqrt(2.0 * np.pi / p.temperature), 1e-12)
    assert_close(p.chi, p.g / p.volume, 1e-12)
    assert p.eps_size == 1.0 / p.n_atoms
    assert p.eps_bog is None
    assert p.with_eps_bog(0.02).eps_bog == 0.02


def test_benchmark_point_matches_reference_figure(bench_params):
    # the reference interaction strength of the temperature-scan figures
    assert bench_params.sqrt_rho_a3 == 1.32e-2
    assert bench_params.t_over_mu == 0.5


# ---------------------------------------------------------------------------
# cutoff condition
# ---------------------------------------------------------------------------

def test_zeta_constant_against_series_oracle():
    # independent oracle: direct summation with Euler-Maclaurin tail
    n = 200_000
    k = np.arange(1, n + 1, dtype=float)
    series = np.sum(k ** -1.5) + 2.0 / np.sqrt(n) - 0.5 * n ** -1.5
    assert_close(series, ZETA_3_2, 1e-8, "zeta(3/2) series")


def test_cutoff_constant_cubic():
    t0 = time.perf_counter()
    sol = solve_cutoff(1.0)
    elapsed = time.perf_counter() - t0
    assert abs(sol.e_max_over_kT - 2.695) < 1e-3
    assert sol.defect <= 1e-10
    assert elapsed < 1.0


@settings(max_examples=25, deadline=None)
@given(log_t=st.floats(-2.0, 2.0))
def test_cutoff_scale_free(log_t):
    # E_max/kT identical across four decades of temperature
    ref = solve_cutoff(1.0).e_max_over_kT
    sol = solve_cutoff(10.0 ** log_t)
    assert abs(sol.e_max_over_kT / ref - 1.0) < 1e-10


def test_spacing_scales_as_inverse_sqrt_temperature():
    l1 = solve_cutoff(1.0).spacings
    l2 = solve_cutoff(2.0).spacings
    np.testing.assert_allclose(l2 / l1, 1.0 / np.sqrt(2.0), rtol=1e-10)


def test_cutoff_rejects_nonpositive_temperature():
    with pytest.raises(ValueError):
        solve_cutoff(0.0)


# ---------------------------------------------------------------------------
# grid construction
# ---------------------------------------------------------------------------

def test_grid_combinatorics_n4():
    grid = build_grid(4, "cubic", temperature=1.0)
    assert grid.n_modes == 64
    assert np.sum(grid.e_kin == 0.0) == 1
    n_edge = int(np.sum(grid.edge_mask))
    assert n_edge == 64 - 3 ** 3  # any index component at -n/2
    assert n_edge == 37
    # the remaining nonzero modes close under negation
    interior = ~grid.edge_mask & (grid.e_kin > 0)
    assert int(np.sum(interior)) == 26
    p = grid.partner_index
    np.testing.assert_array_equal(p[p], np.arange(64))  # involution
    np.testing.assert_allclose(grid.kvec[p[interior]], -grid.kvec[interior],
                               atol=1e-14)
    # edge partners stay inside the zone: aliased, not negated
    assert np.all(grid.edge_mask[p[grid.edge_mask]])


def test_grid_emax_matches_cutoff():
    for theta in (0.3, 1.0, 4.0):
        grid = build_grid(8, "cubic", theta)
        assert_close(grid.e_max, 3.0 * np.pi ** 2 / (2.0 * grid.spacings[0] ** 2),
                     1e-12, "cubic E_max")
        assert abs(grid.e_max / theta - 2.695) < 1e-3


def test_grid_aspect_ratios():
    grid = build_grid(8, "paper_aspect", temperature=1.0)
    lx, ly, lz = grid.box_lengths
    assert_close(lx ** 2 / lz ** 2, np.sqrt(2.0) / np.sqrt(3.0), 1e-12)
    assert_close(ly ** 2 / lx ** 2, ((1 + np.sqrt(5)) / 2) / np.sqrt(2.0), 1e-12)
    np.testing.assert_allclose(grid.box_lengths / ASPECT_RATIOS,
                               grid.box_lengths[0] / ASPECT_RATIOS[0], rtol=1e-12)


def test_grid_rejections_and_edge_warning():
    with pytest.raises(ValueError):
        build_grid(7, "cubic", 1.0)
    with pytest.raises(ValueError):
        build_grid(0, "cubic", 1.0)
    with pytest.warns(UserWarning):
        build_grid(2, "cubic", 1.0)


def test_simulation_setup_consistency():
    params, grid = simulation_setup(1.32e-2, 0.5, 8)
    assert_close(params.mu, 1.0, 1e-12, "mu normalization")
    assert_close(params.temperature, 0.5, 1e-12)
    assert_close(params.volume, grid.volume, 1e-12)
    # realized interaction strength within O(1/N) of the request
    assert abs(params.sqrt_rho_a3 / 1.32e-2 - 1.0) < 1.0 / params.n_atoms * 2


# ---------------------------------------------------------------------------
# Brillouin-zone integral and bare coupling
# ---------------------------------------------------------------------------

def _riemann_inv_k2(kmax: float, n: int) -> float:
    """Midpoint Riemann sum of 1/k^2 over the cube, singular block handled
    self-consistently: with h the innermost 2x2x2 block half-width,
    C*K = S_outside + C*h because the integral scales linearly in the box."""
    h_cell = 2.0 * kmax / n
    centers = -kmax + (np.arange(n) + 0.5) * h_cell
    total = 0.0
    for x in centers:  # chunk by planes to bound memory
        yy, zz = np.meshgrid(centers, centers, indexing="ij", sparse=True)
        k2 = x * x + yy ** 2 + zz ** 2
        inner = (abs(x) < h_cell) & (np.abs(yy) < h_cell) & (np.abs(zz) < h_cell)
        total += float(np.sum(np.where(inner, 0.0, h_cell ** 3 / k2)))
    return total / (kmax - h_cell) * kmax


def test_fbz_integral_against_riemann_oracle():
    # brute-force Riemann sums at 200^3 and 400^3; the leading error is O(h),
    # so one Richardson step removes it
    exact = box_inverse_k2_integral((1.0, 1.0, 1.0))
    c200 = _riemann_inv_k2(1.0, 200)
    c400 = _riemann_inv_k2(1.0, 400)
    oracle = 2.0 * c400 - c200
    assert_close(exact, oracle, 1e-6, "1/k^2 cube integral")


def test_fbz_integral_against_arctan_reduction():
    # second independent route: do the z integral analytically, then the
    # smooth polar integral over the square cross-section
    from scipy import integrate

    def inner(phi):
        val, _ = integrate.quad(lambda s: np.arctan(1.0 / s), 0.0,
                                1.0 / np.cos(phi), limit=200, epsabs=1e-13)
        return val

    val, _ = integrate.quad(inner, 0.0, np.pi / 4.0, limit=200, epsabs=1e-12)
    assert_close(box_inverse_k2_integral((1.0, 1.0, 1.0)), 16.0 * val, 1e-9)


def test_fbz_integral_linear_in_scale():
    one = box_inverse_k2_integral((1.0, 1.0, 1.0))
    two = box_inverse_k2_integral((2.0, 2.0, 2.0))
    assert_close(two, 2.0 * one, 1e-10, "halving l doubles the integral")


def test_bare_coupling_limits_and_monotonicity():
    grid = build_grid(8, "cubic", temperature=1.0)
    # g -> 0: bare and effective couplings coincide
    ratios = [bare_coupling(g, grid).g0 / g for g in (1e-6, 1e-4)]
    assert abs(ratios[0] - 1.0) < abs(ratios[1] - 1.0)
    assert abs(ratios[0] - 1.0) < 1e-4
    # monotone over a 10-point grid
    gs = np.geomspace(1e-4, 1.0, 10)
    g0s = [bare_coupling(g, grid).g0 for g in gs]
    assert np.all(np.diff(g0s) > 0)
    # a lattice too coarse for the requested coupling is flagged
    flagged = bare_coupling(1e4, grid)
    assert flagged.too_coarse and np.isinf(flagged.g0)
    with pytest.raises(ValueError):
        bare_coupling(-1.0, grid)


def test_bare_coupling_integral_spacing_scaling():
    g = 1e-3
    i1 = bare_coupling(g, build_grid(8, "cubic", 1.0)).fbz_integral
    i2 = bare_coupling(g, build_grid(8, "cubic", 4.0)).fbz_integral
    # quadrupling T halves the spacing, doubling the 1/k^2 integral
    assert_close(i2, 2.0 * i1, 1e-9)
