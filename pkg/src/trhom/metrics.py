"""Entanglement bounds, brightness figures and stability statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonpositivePower, OutOfRange, TooFewSamples


def _unit(x: float, name: str) -> float:
    if not 0.0 <= x <= 1.0:
        raise OutOfRange(f"{name} must lie in [0, 1], got {x}")
    return float(x)


def fidelity_bound(v_hv: float, v_ad: float) -> float:
    """Lower bound on the Bell-state fidelity from two basis visibilities.

    ``F >= (V_HV + V_AD) / 2``.
    """
    return (_unit(v_hv, "v_hv") + _unit(v_ad, "v_ad")) / 2.0


def concurrence_bound(fidelity: float) -> float:
    """``C >= max(0, 2F - 1)``."""
    return max(0.0, 2.0 * _unit(fidelity, "fidelity") - 1.0)


@dataclass(frozen=True)
class RateReport:
    pair_rate_norm: float  # cps/mW
    spectral_brightness: float  # cps/mW/nm
    heralding: float  # R_c / max(R_s, R_i)
    heralding_symmetric: float  # R_c / sqrt(R_s R_i)


def rate_metrics(rate_c: float, rate_s: float, rate_i: float, pump_power_mw: float, bandwidth_nm: float) -> RateReport:
    if pump_power_mw <= 0:
        raise NonpositivePower("pump power must be positive")
    if bandwidth_nm <= 0:
        raise OutOfRange("bandwidth must be positive")
    if min(rate_c, rate_s, rate_i) < 0:
        raise OutOfRange("rates must be non-negative")
    norm = rate_c / pump_power_mw
    singles = max(rate_s, rate_i)
    herald = rate_c / singles if singles > 0 else 0.0
    geo = math.sqrt(rate_s * rate_i)
    herald_sym = rate_c / geo if geo > 0 else 0.0
    return RateReport(norm, norm / bandwidth_nm, min(herald, 1.0), min(herald_sym, 1.0))


@dataclass(frozen=True)
class StabilitySeries:
    """Time-ordered samples of ``(t_s, coincidences, V_AD corr., V_AD anti-corr.)``."""

    time_s: np.ndarray
    coincidences: np.ndarray
    v_ad_correlated: np.ndarray
    v_ad_anticorrelated: np.ndarray

    def __post_init__(self):
        cols = [np.asarray(getattr(self, f), dtype=float) for f in self._columns()]
        if len({c.shape for c in cols}) != 1 or cols[0].ndim != 1:
            raise ValueError("all columns must be 1-D and of equal length")
        if np.any(np.diff(cols[0]) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        for f, c in zip(self._columns(), cols):
            object.__setattr__(self, f, c)

    @staticmethod
    def _columns():
        return ("time_s", "coincidences", "v_ad_correlated", "v_ad_anticorrelated")

    def __len__(self):
        return self.time_s.size


@dataclass(frozen=True)
class ColumnStats:
    mean: float
    std: float
    slope_per_hour: float


def stability_stats(series: StabilitySeries) -> dict[str, ColumnStats]:
    """Mean, sample standard deviation and least-squares drift per hour of each column."""
    if len(series) < 2:
        raise TooFewSamples("need at least two samples")
    t_h = series.time_s / 3600.0
    tc = t_h - t_h.mean()
    out = {}
    for name in ("coincidences", "v_ad_correlated", "v_ad_anticorrelated"):
        # offsets from the first sample keep a constant column exactly flat
        d = getattr(series, name) - getattr(series, name)[0]
        slope = float(np.sum(tc * (d - d.mean())) / np.sum(tc * tc))
        out[name] = ColumnStats(float(getattr(series, name)[0] + d.mean()), float(np.std(d, ddof=1)), slope)
    return out
