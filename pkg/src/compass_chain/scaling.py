"""Power-law fits, finite-size data collapse and central-charge extraction."""
from __future__ import annotations

from dataclasses import dataclass
import itertools
import math

import numpy as np

from .errors import ConfigError
from .observables import EntropyCurve

GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    amplitude: float
    window: tuple[float, float]
    residual: float
    std_error: float
    n_points: int = 0

    def as_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "amplitude": self.amplitude,
            "window": list(self.window),
            "residual": self.residual,
            "std_error": self.std_error,
            "n_points": self.n_points,
        }


def _linear_fit(x, y):
    """Least-squares line y = a + b x; returns (b, a, rms residual, stderr of b)."""
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    n = x.size
    rms = float(np.sqrt(np.mean(resid**2)))
    if n > 2:
        s2 = float(resid @ resid) / (n - 2)
        sxx = float(((x - x.mean()) ** 2).sum())
        err = math.sqrt(s2 / sxx) if sxx > 0 else math.inf
    else:
        err = math.inf
    return float(coef[1]), float(coef[0]), rms, err


def _select(x, y, window):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if window is None:
        window = (float(x.min()), float(x.max()))
    lo, hi = window
    if not lo <= hi:
        raise ConfigError(f"empty fit window {window}")
    m = (x >= lo) & (x <= hi)
    return x[m], y[m], (float(lo), float(hi))


def power_law_fit(x, y, window=None, min_points: int = 4) -> ScalingFit:
    """Fit y = A x^k by least squares in log-log space over ``window``."""
    xs, ys, window = _select(x, y, window)
    if xs.size < min_points:
        raise ConfigError(f"need >= {min_points} points in window {window}, got {xs.size}")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ConfigError("power-law fit needs positive data")
    b, a, rms, err = _linear_fit(np.log(xs), np.log(ys))
    return ScalingFit(b, math.exp(a), window, rms, err, int(xs.size))


def central_charge_fit(curve: EntropyCurve, window=None, min_points: int = 4) -> ScalingFit:
    """Fit S_L = (c/3) log2 L + const; exponent holds c, amplitude the constant.

    The default window keeps L <= N/4.
    """
    L = np.asarray(curve.block_sizes, float)
    S = np.asarray(curve.entropies, float)
    if window is None:
        window = (1.0, curve.params.n_sites / 4)
    xs, ys, window = _select(L, S, window)
    xs, ys = xs[xs > 0], ys[xs > 0]
    if xs.size < min_points:
        raise ConfigError(f"need >= {min_points} block sizes in window {window}")
    b, a, rms, err = _linear_fit(np.log2(xs), ys)
    return ScalingFit(3 * b, a, window, rms, 3 * err, int(xs.size))


def saturation_slope(curve: EntropyCurve, upper_fraction: float = 0.5) -> float:
    """Entropy slope in bits per octave of L over the upper part of the curve."""
    L = np.asarray(curve.block_sizes, float)
    S = np.asarray(curve.entropies, float)
    m = L > 0
    L, S = L[m], S[m]
    cut = L.min() ** (1 - upper_fraction) * L.max() ** upper_fraction
    sel = L >= cut
    if sel.sum() < 2:
        raise ConfigError("too few block sizes for a saturation check")
    b, *_ = _linear_fit(np.log2(L[sel]), S[sel])
    return b


def is_saturated(curve: EntropyCurve, threshold: float = 0.05) -> bool:
    return saturation_slope(curve) < threshold


def collapse_residual(curves: dict, h_max: float, nu: float) -> float:
    """Mean pairwise squared deviation of rescaled curves on their common support.

    Each curve maps a size to ``(h, chi)``.  Abscissa N^nu (h - h_max), ordinate
    (chi_max - chi) / chi with chi_max the curve value at h_max.
    """
    resc = []
    for n, (h, chi) in curves.items():
        h = np.asarray(h, float)
        chi = np.asarray(chi, float)
        k = int(np.argmin(np.abs(h - h_max)))
        x = float(n) ** nu * (h - h_max)
        y = (chi[k] - chi) / chi
        order = np.argsort(x)
        resc.append((x[order], y[order]))
    lo = max(x.min() for x, _ in resc)
    hi = min(x.max() for x, _ in resc)
    if not lo < hi:
        raise ConfigError("rescaled curves have no overlapping support")
    grid = np.unique(np.concatenate([x[(x >= lo) & (x <= hi)] for x, _ in resc]))
    interp = [np.interp(grid, x, y) for x, y in resc]
    devs = [np.mean((a - b) ** 2) for a, b in itertools.combinations(interp, 2)]
    return float(np.mean(devs))


@dataclass(frozen=True)
class CollapseResult:
    nu: float
    residual: float
    trial_nu: np.ndarray
    trial_residual: np.ndarray


def fs_collapse(curves: dict, h_max: float = 0.0, nu_range=(0.5, 2.0),
                coarse_step: float = 0.05, tol: float = 1e-4) -> CollapseResult:
    """Best data-collapse exponent: coarse scan then golden-section refinement."""
    if len(curves) < 3:
        raise ConfigError("collapse needs at least three system sizes")
    lo, hi = nu_range
    trial = np.round(np.arange(lo, hi + coarse_step / 2, coarse_step), 12)
    res = np.array([collapse_residual(curves, h_max, t) for t in trial])
    k = int(np.argmin(res))  # first minimum: ties go to the smaller nu
    a = trial[max(k - 1, 0)]
    b = trial[min(k + 1, trial.size - 1)]
    f = lambda t: collapse_residual(curves, h_max, t)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    best, best_res = (c, fc) if fc <= fd else (d, fd)
    if res[k] < best_res:
        best, best_res = float(trial[k]), float(res[k])
    return CollapseResult(float(best), float(best_res), trial, res)


def susceptibility_exponent(h, chi, h_c: float, window=(1e-3, 1e-1),
                            min_points: int = 4) -> ScalingFit:
    """Slope of log|chi(h) - chi(h_c)| against log|h - h_c|, both sides pooled.

    ``chi`` must contain the value at ``h_c`` itself.
    """
    h = np.asarray(h, float)
    chi = np.asarray(chi, float)
    k = np.flatnonzero(h == h_c)
    if k.size != 1:
        raise ConfigError("susceptibility data must contain exactly one point at h_c")
    dist = np.abs(h - h_c)
    dev = np.abs(chi - chi[k[0]])
    m = dist > 0
    return power_law_fit(dist[m], dev[m], window, min_points)


def synthetic_fs_curves(nu: float, sizes, h, noise: float = 0.0, seed: int | None = None,
                        mu: float = 2.0) -> dict:
    """Manufactured curves chi = N^mu / (1 + (N^nu h)^2), optional multiplicative noise."""
    rng = np.random.default_rng(seed)
    h = np.asarray(h, float)
    out = {}
    for n in sizes:
        chi = float(n) ** mu / (1.0 + (float(n) ** nu * h) ** 2)
        if noise:
            chi = chi * (1.0 + noise * rng.standard_normal(h.size))
        out[n] = (h, chi)
    return out
