"""Curve diagnostics: exponential windows, power-law tails, rate scaling.

The operational definition of "the decay has an exponential stage" is a
declared threshold, not a judgement call: a window qualifies when it
spans at least three drive periods, log10 |theta|^2 fits a line with RMS
residual below 0.05, the slope is negative, and the fitted drop over the
window is at least `min_drop` log10 units.  The drop requirement keeps
flat early-time stretches and slowly-bending tails from impersonating
exponentials; it is part of the declared rule and the tests pin it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SurvivalTrace
from .errors import DomainError

RMS_THRESHOLD = 0.05  # log10 units
MIN_PERIODS = 3.0
MIN_DROP = 0.5  # log10 units of fitted decay across a scanned window


@dataclass
class FitReport:
    kind: str  # exponential_window | power_law_tail | gamma_vs_r
    window: tuple[float, float]
    slope: float
    intercept: float
    residual: float  # RMS in the fitted (log) coordinates
    verdict: bool

    @property
    def gamma(self) -> float:
        """Decay exponent implied by an exponential-window fit of |theta|^2."""
        if self.kind != "exponential_window":
            raise DomainError("gamma is defined for exponential-window fits")
        return -self.slope * np.log(10.0)


def _logabs2(trace: SurvivalTrace, floor: float = 1e-300):
    return np.log10(np.maximum(trace.abs2, floor))


def fit_exponential_window(
    trace: SurvivalTrace,
    window: tuple[float, float],
    *,
    min_periods: float = MIN_PERIODS,
    threshold: float = RMS_THRESHOLD,
    min_drop: float = 0.0,
) -> FitReport:
    """Straight-line fit of log10 |theta|^2 on [t1, t2].

    The default verdict follows the declared rule without the drop
    requirement (explicit windows are the caller's claim); window scans
    add it.
    """
    t1, t2 = window
    t = trace.t_grid
    sel = (t >= t1) & (t <= t2)
    if np.count_nonzero(sel) < 4:
        raise DomainError(f"window [{t1}, {t2}] selects fewer than 4 samples")
    x, y = t[sel], _logabs2(trace)[sel]
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    periods = (t2 - t1) * trace.config.omega / (2 * np.pi)
    drop = -slope * (t2 - t1)
    verdict = (
        resid < threshold
        and periods >= min_periods
        and slope < 0
        and drop >= min_drop
    )
    return FitReport("exponential_window", (t1, t2), float(slope), float(intercept),
                     resid, bool(verdict))


def scan_exponential_windows(
    trace: SurvivalTrace,
    *,
    threshold: float = RMS_THRESHOLD,
    min_periods: float = MIN_PERIODS,
    min_drop: float = MIN_DROP,
    lengths_periods=(3, 6, 12, 24, 48),
    n_starts: int = 24,
):
    """Search for any qualifying exponential window; returns (verdict, best).

    best is the lowest-residual qualifying FitReport, or the most nearly
    qualifying one when the verdict is False.
    """
    t = trace.t_grid
    period = 2 * np.pi / trace.config.omega
    t_lo, t_hi = float(t[0]), float(t[-1])
    best_ok = None
    best_any = None
    span = t_hi - t_lo
    lengths = [n_per * period for n_per in lengths_periods if n_per * period <= span]
    lengths.append(span)  # the whole trace is always a candidate window
    for L in lengths:
        for s in np.linspace(t_lo, t_hi - L, n_starts):
            try:
                rep = fit_exponential_window(
                    trace, (s, s + L), min_periods=min_periods,
                    threshold=threshold, min_drop=min_drop,
                )
            except DomainError:
                continue
            if best_any is None or rep.residual < best_any.residual:
                best_any = rep
            if rep.verdict and (best_ok is None or rep.residual < best_ok.residual):
                best_ok = rep
    if best_ok is not None:
        return True, best_ok
    return False, best_any


def fit_power_law(trace: SurvivalTrace, window: tuple[float, float]) -> FitReport:
    """log10 |theta|^2 against log10 t on [t1, t2]."""
    t1, t2 = window
    if t1 <= 0:
        raise DomainError("power-law windows need t1 > 0")
    t = trace.t_grid
    sel = (t >= t1) & (t <= t2)
    if np.count_nonzero(sel) < 4:
        raise DomainError(f"window [{t1}, {t2}] selects fewer than 4 samples")
    x = np.log10(t[sel])
    y = _logabs2(trace)[sel]
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return FitReport("power_law_tail", (t1, t2), float(slope), float(intercept),
                     resid, True)


def fit_gamma_vs_r(r_values, gamma_values) -> FitReport:
    """log-log slope of the decay exponent against drive amplitude."""
    r = np.asarray(r_values, dtype=float)
    g = np.asarray(gamma_values, dtype=float)
    if len(r) < 2 or np.any(r <= 0) or np.any(g <= 0):
        raise DomainError("need >= 2 positive (r, gamma) pairs")
    x, y = np.log10(r), np.log10(g)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return FitReport("gamma_vs_r", (float(r.min()), float(r.max())),
                     float(slope), float(intercept), resid, True)


def dominant_ripple_frequency(trace: SurvivalTrace, t_min: float = 0.0) -> float:
    """Location of the strongest spectral peak of |theta(t)|^2 (detrended),
    used to check that the ripples ride at the drive frequency."""
    t = trace.t_grid
    sel = t >= t_min
    t, y = t[sel], trace.abs2[sel]
    if len(t) < 32:
        raise DomainError("trace too short for a spectral estimate")
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=1e-6):
        raise DomainError("ripple analysis needs a uniform grid")
    # remove the slow trend so the drive line dominates the spectrum
    coef = np.polyfit(t, np.log(np.maximum(y, 1e-300)), 3)
    resid = y - np.exp(np.polyval(coef, t))
    spec = np.abs(np.fft.rfft(resid * np.hanning(len(resid))))
    freqs = 2 * np.pi * np.fft.rfftfreq(len(resid), dt)
    spec[0] = 0.0
    return float(freqs[int(np.argmax(spec))])
