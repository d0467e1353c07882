"""Spin moments, squeezing estimators and curve summaries.

Estimators use raw classical ensemble moments, no ordering corrections: per
realization S_+ = sum_r dV psi_a^* psi_b and S_z = (N_a - N_b)/2, then the
transverse variances are plain ensemble averages of S_y^2, S_z^2 and the
symmetrized product. The mean spin points along x by symmetry; the measured
<S_y>, <S_z> act as a diagnostic and should vanish within errors. Error bars
come from delete-one jackknife over realizations, which handles the nonlinear
dependence of xi^2 on the moments.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpinMoments:
    """Ensemble spin moments at one time, with jackknife standard errors.

    For condensate-mode moments (built from the zero-mode amplitudes only)
    mean_n0 holds the mean condensate occupation of component a, used as the
    atom-number prefactor of the condensate squeezing parameter.
    """

    mean_sx: float
    mean_sy: float
    mean_sz: float
    var_sy: float
    var_sz: float
    anticomm: float
    se_mean_sx: float
    se_var_sy: float
    se_var_sz: float
    se_anticomm: float
    n_realizations: int
    mean_n0: float | None = None
    # raw per-realization ingredients, kept for jackknife of derived statistics
    _sx: np.ndarray | None = None
    _sy2: np.ndarray | None = None
    _sz2: np.ndarray | None = None
    _sysz: np.ndarray | None = None


def spin_moments(splus: np.ndarray, sz: np.ndarray, n0: np.ndarray | None = None,
                 symmetry_sigma: float = 5.0) -> SpinMoments:
    """Raw ensemble moments from per-realization S_+ and S_z.

    Warns when the symmetry diagnostic <S_y> or <S_z> sits beyond
    symmetry_sigma standard errors from zero.
    """
    splus = np.asarray(splus)
    sz = np.asarray(sz, dtype=float)
    r = splus.shape[0]
    if r < 2:
        raise ValueError("need at least two realizations")
    sx = splus.real
    sy = splus.imag
    sy2 = sy ** 2
    sz2 = sz ** 2
    sysz = 2.0 * sy * sz  # symmetrized product, classical fields commute
    sem = lambda x: float(np.std(x, ddof=1) / np.sqrt(r))
    m = SpinMoments(
        mean_sx=float(sx.mean()), mean_sy=float(sy.mean()), mean_sz=float(sz.mean()),
        var_sy=float(sy2.mean()), var_sz=float(sz2.mean()),
        anticomm=float(sysz.mean()),
        se_mean_sx=sem(sx), se_var_sy=sem(sy2), se_var_sz=sem(sz2),
        se_anticomm=sem(sysz),
        n_realizations=r,
        mean_n0=None if n0 is None else float(np.mean(n0)),
        _sx=sx, _sy2=sy2, _sz2=sz2, _sysz=sysz,
    )
    for label, mean, raw in (("<S_y>", m.mean_sy, sy), ("<S_z>", m.mean_sz, sz)):
        se = sem(raw)
        if se > 0 and abs(mean) > symmetry_sigma * se:
            warnings.warn(f"symmetry diagnostic {label} = {mean:.3g} is "
                          f"{abs(mean) / se:.1f} sigma from zero", stacklevel=2)
    return m


def _tmv(vy, vz, ac):
    return 0.5 * (vy + vz - np.sqrt((vy - vz) ** 2 + ac ** 2))


def _jackknife(fn, *arrays):
    """Standard error of fn(mean(a1), mean(a2), ...) by delete-one jackknife.

    fn must broadcast over numpy arrays of delete-one means.
    """
    r = arrays[0].shape[0]
    full = fn(*[a.mean() for a in arrays])
    loo = [(a.sum() - a) / (r - 1) for a in arrays]
    vals = fn(*loo)
    return full, float(np.sqrt((r - 1) / r * np.sum((vals - np.mean(vals)) ** 2)))


def transverse_min_variance(moments: SpinMoments):
    """Minimal spin variance orthogonal to the mean spin (x) direction.

    (1/2)[Vy + Vz - sqrt((Vy - Vz)^2 + A^2)] with A the anticommutator; equals
    the minimum over explicit rotations in the y-z plane. Returns
    (value, jackknife standard error).
    """
    value = _tmv(moments.var_sy, moments.var_sz, moments.anticomm)
    radicand = (moments.var_sy - moments.var_sz) ** 2 + moments.anticomm ** 2
    assert radicand >= 0.0
    if moments._sy2 is None:
        return float(value), np.nan
    _, err = _jackknife(_tmv, moments._sy2, moments._sz2, moments._sysz)
    return float(value), err


def xi2(moments: SpinMoments, n_atoms: float):
    """Squeezing parameter N * min transverse variance / <S_x>^2.

    A mean spin indistinguishable from zero flags the result as infinite.
    """
    if abs(moments.mean_sx) <= 3.0 * moments.se_mean_sx:
        return np.inf, np.inf
    fn = lambda sy2, sz2, sysz, sx: n_atoms * _tmv(sy2, sz2, sysz) / sx ** 2
    if moments._sy2 is None:
        return float(fn(moments.var_sy, moments.var_sz, moments.anticomm,
                        moments.mean_sx)), np.nan
    value, err = _jackknife(fn, moments._sy2, moments._sz2, moments._sysz, moments._sx)
    return float(value), err


def xi0_2(moments: SpinMoments):
    """Condensate-mode squeezing, prefactored by the mean condensate number."""
    if moments.mean_n0 is None:
        raise ValueError("condensate moments need the mean zero-mode occupation")
    return xi2(moments, moments.mean_n0)


@dataclass(frozen=True)
class SqueezingCurve:
    """Time series of the squeezing parameters with error bars."""

    times: np.ndarray
    xi2: np.ndarray
    xi2_err: np.ndarray
    xi02: np.ndarray | None = None
    xi02_err: np.ndarray | None = None
    var_sz: np.ndarray | None = None
    var_sz_err: np.ndarray | None = None
    n_realizations: int = 0


def build_curve(times, splus: np.ndarray, sz: np.ndarray, n_atoms: float,
                splus0: np.ndarray | None = None, sz0: np.ndarray | None = None,
                na0: np.ndarray | None = None) -> SqueezingCurve:
    """Assemble the squeezing curve from per-realization time series.

    splus has shape (R, T); sz may be (R,) when the population difference is
    conserved or (R, T) otherwise. Condensate-mode inputs are optional.
    """
    times = np.asarray(times, dtype=float)
    ntimes = times.size
    r = splus.shape[0]
    sz = np.asarray(sz, dtype=float)
    if sz.ndim == 1:
        sz = np.broadcast_to(sz[:, None], (r, ntimes))
    vals = np.empty(ntimes)
    errs = np.empty(ntimes)
    vals0 = np.empty(ntimes) if splus0 is not None else None
    errs0 = np.empty(ntimes) if splus0 is not None else None
    vsz = np.empty(ntimes)
    vsz_err = np.empty(ntimes)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # symmetry diagnostics checked by callers
        for i in range(ntimes):
            m = spin_moments(splus[:, i], sz[:, i])
            vals[i], errs[i] = xi2(m, n_atoms)
            vsz[i], vsz_err[i] = m.var_sz, m.se_var_sz
            if vals0 is not None:
                m0 = spin_moments(splus0[:, i], sz0[:, i], n0=na0[:, i])
                vals0[i], errs0[i] = xi0_2(m0)
    return SqueezingCurve(times=times, xi2=vals, xi2_err=errs,
                          xi02=vals0, xi02_err=errs0,
                          var_sz=vsz, var_sz_err=vsz_err, n_realizations=r)


@dataclass(frozen=True)
class CurveSummary:
    xi2_min: float
    xi2_min_err: float
    t_min: float
    t_eta: float | None
    t_therm: float | None
    eta: float
    boundary_minimum: bool
    t_therm_censored: bool


def _first_crossing(times, values, threshold, start_index=0, rising=False):
    """Linearly interpolated first time values cross the threshold."""
    v = values[start_index:]
    t = times[start_index:]
    hit = v >= threshold if rising else v <= threshold
    idx = np.argmax(hit)
    if not hit[idx]:
        return None
    if idx == 0:
        return float(t[0])
    t0, t1 = t[idx - 1], t[idx]
    v0, v1 = v[idx - 1], v[idx]
    if v1 == v0:
        return float(t1)
    frac = (threshold - v0) / (v1 - v0)
    return float(t0 + frac * (t1 - t0))


def summarize_curve(curve: SqueezingCurve, eta: float = 0.2) -> CurveSummary:
    """Locate the squeezing minimum and the associated time scales.

    xi2_min comes from a parabolic refinement around the discrete minimum;
    t_eta is the first time with xi^2 <= (1+eta) xi2_min, and the operational
    thermalization time is the first post-minimum time with xi^2 >= 2 xi2_min.
    A minimum on the window boundary flags every output as non-final, and an
    uncrossed doubling threshold leaves t_therm censored at the horizon.
    """
    t = curve.times
    v = curve.xi2
    i = int(np.argmin(v))
    boundary = i in (0, v.size - 1)
    if boundary:
        xi_min, t_min = float(v[i]), float(t[i])
    else:
        # parabola through the three points around the discrete minimum
        ts = t[i - 1:i + 2]
        vs = v[i - 1:i + 2]
        coef = np.polyfit(ts, vs, 2)
        if coef[0] > 0:
            t_min = float(-coef[1] / (2.0 * coef[0]))
            t_min = float(np.clip(t_min, ts[0], ts[-1]))
            xi_min = float(np.polyval(coef, t_min))
        else:
            xi_min, t_min = float(v[i]), float(t[i])
    err = float(curve.xi2_err[i]) if curve.xi2_err is not None else np.nan
    t_eta = _first_crossing(t, v, (1.0 + eta) * xi_min)
    t_therm = None if boundary else _first_crossing(t, v, 2.0 * xi_min,
                                                    start_index=i, rising=True)
    return CurveSummary(xi2_min=xi_min, xi2_min_err=err, t_min=t_min,
                        t_eta=t_eta, t_therm=t_therm, eta=eta,
                        boundary_minimum=boundary,
                        t_therm_censored=t_therm is None)
