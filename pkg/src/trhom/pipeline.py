"""End-to-end runs: source -> state -> fringes -> clicks -> correlator -> metrics.

All randomness derives from the run's single seed.  Each stochastic step
draws from its own generator, keyed by a fixed tuple of integers under that
seed, so outputs do not depend on execution order.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import io
from .config import RunConfig, reference_configs
from .detection import (
    DetectionConfig,
    FringeCurve,
    PolarizerSetting,
    accidentals,
    coincidence_probability,
    correlate_window,
    fringe_scan,
    generate_timetags,
    pass_probability,
    raw_visibility,
    visibility,
)
from .errors import OutOfRange, Unreachable
from .fock import StateVector
from .metrics import StabilitySeries, concurrence_bound, fidelity_bound, rate_metrics, stability_stats
from .source import SourceConfig, sagnac_state

log = logging.getLogger(__name__)

AD_THETA1 = math.pi / 4
CALIBRATION_TOL = 0.005

# stream keys for the seed splitter
_KEY_BRIGHTNESS = 1
_KEY_FRINGE = 2
_KEY_STABILITY = 3


def rng_for(seed: int, *keys: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(keys))))


# calibration ------------------------------------------------------------------


def ad_visibility(cfg: SourceConfig, steps: int = 16) -> float:
    """Conditional A/D-basis visibility of the post-selected Sagnac state."""
    out = sagnac_state(cfg)
    if out.weight == 0:
        return 0.0
    return visibility(fringe_scan(out.state, AD_THETA1, steps))


def hv_visibility(cfg: SourceConfig, steps: int = 16) -> float:
    out = sagnac_state(cfg)
    if out.weight == 0:
        return 0.0
    return visibility(fringe_scan(out.state, 0.0, steps))


def calibrate_dispersion(target_v_ad: float, cfg: RunConfig | SourceConfig, tol: float = CALIBRATION_TOL, c2_max: float = 10.0) -> float:
    """Quadratic phase coefficient (rad/nm^2) that brings V_AD to ``target_v_ad``.

    ``c0`` and ``c1`` are held at zero.  The coefficient is bracketed by
    doubling from 1e-3 and then refined with Brent's method.
    """
    if not 0.0 < target_v_ad <= 1.0:
        raise OutOfRange("target visibility must lie in (0, 1]")
    src = cfg.source.build() if isinstance(cfg, RunConfig) else cfg

    def v(c2):
        return ad_visibility(src.with_phase_coeffs((0.0, 0.0, c2)))

    v0 = v(0.0)
    if target_v_ad > v0 + tol:
        raise Unreachable(f"target {target_v_ad} exceeds the dispersion-free visibility {v0:.4f}")
    if abs(v0 - target_v_ad) <= tol:
        return 0.0
    lo, hi = 0.0, 1e-3
    while v(hi) > target_v_ad:
        lo, hi = hi, 2 * hi
        if hi > c2_max:
            raise Unreachable(f"no c2 <= {c2_max} reaches V_AD = {target_v_ad}")
    c2 = brentq(lambda c: v(c) - target_v_ad, lo, hi, xtol=1e-12, rtol=1e-12)
    if abs(v(c2) - target_v_ad) > tol:
        raise Unreachable("calibration did not converge")
    return float(c2)


# simulated measurements ----------------------------------------------------------


@dataclass
class MeasuredFringe:
    theta: np.ndarray
    coincidences: np.ndarray
    accidentals: np.ndarray
    singles_signal: np.ndarray
    singles_idler: np.ndarray
    duration_s: float

    @property
    def subtracted(self) -> np.ndarray:
        return np.maximum(self.coincidences - self.accidentals, 0.0)

    def visibility_raw(self) -> float:
        return visibility((self.theta, self.coincidences))

    def visibility_subtracted(self) -> float:
        return visibility((self.theta, self.subtracted))


def polarized_rates(state: StateVector, setting: PolarizerSetting, det: DetectionConfig) -> DetectionConfig:
    """Detection rates behind a pair of polarizers."""
    pc = coincidence_probability(state, setting)
    ps = pass_probability(state, "1'", setting.theta1)
    pi = pass_probability(state, "2'", setting.theta2)
    rs, ri = det.signal_rate_cps * ps, det.idler_rate_cps * pi
    rc = min(det.pair_rate_cps * pc, rs, ri)
    return replace(det, signal_rate_cps=rs, idler_rate_cps=ri, pair_rate_cps=rc)


def count_setting(state, setting, det: DetectionConfig, duration_s: float, rng) -> tuple[int, int, int]:
    """``(coincidences, signal singles, idler singles)`` for one integration."""
    d = replace(polarized_rates(state, setting, det), duration_s=duration_s)
    stream = generate_timetags(d, rng)
    ns, ni = stream.counts()
    return correlate_window(stream, det.coincidence_window_ns).count, ns, ni


def measure_fringe(state: StateVector, theta1: float, steps: int, det: DetectionConfig, duration_s: float, seed: int, key: int) -> MeasuredFringe:
    theta = np.arange(steps) * (math.pi / steps)
    cc, acc, ss, si = [], [], [], []
    for j, t2 in enumerate(theta):
        c, ns, ni = count_setting(state, PolarizerSetting(theta1, float(t2)), det, duration_s, rng_for(seed, _KEY_FRINGE, key, j))
        cc.append(c)
        ss.append(ns)
        si.append(ni)
        acc.append(accidentals(ns / duration_s, ni / duration_s, det.coincidence_window_ns) * duration_s)
    return MeasuredFringe(theta, np.array(cc, float), np.array(acc), np.array(ss), np.array(si), duration_s)


def stability_series(state: StateVector, det: DetectionConfig, blocks: int, block_duration_s: float, block_interval_s: float, seed: int) -> StabilitySeries:
    """Repeated short A/D measurements, one sample per block.

    The correlated visibility uses the +45 deg analyzer on port 1'
    (``(N_DD - N_DA)/(N_DD + N_DA)``), the anti-correlated one the -45 deg
    analyzer (``(N_AA - N_AD)/(N_AA + N_AD)``).  The coincidence column sums
    all four settings.
    """
    d, a = math.pi / 4, -math.pi / 4
    times, counts, v_corr, v_anti = [], [], [], []
    for b in range(blocks):
        n = {}
        for k, (t1, t2) in enumerate(((d, d), (d, a), (a, a), (a, d))):
            n[k] = count_setting(state, PolarizerSetting(t1, t2, "AD"), det, block_duration_s, rng_for(seed, _KEY_STABILITY, b, k))[0]
        times.append((b + 0.5) * block_interval_s)
        counts.append(sum(n.values()))
        v_corr.append((n[0] - n[1]) / max(n[0] + n[1], 1))
        v_anti.append((n[2] - n[3]) / max(n[2] + n[3], 1))
    return StabilitySeries(np.array(times), np.array(counts, float), np.array(v_corr), np.array(v_anti))


# orchestration ------------------------------------------------------------------


@dataclass
class RunReport:
    out_dir: Path
    summary: dict
    files: dict


def build_source(cfg: RunConfig, c2: float | None) -> tuple[SourceConfig, float | None]:
    src = cfg.source
    if c2 is None and src.calibrate_v_ad is not None:
        c2 = calibrate_dispersion(src.calibrate_v_ad, cfg)
    coeffs = src.phase_coeffs if c2 is None else (0.0, 0.0, c2)
    built = src.build(coeffs)
    if src.filter_nm is not None:
        built = built.filtered(src.filter_nm)
    return built, c2


def _metric_rows(summary: dict) -> list[tuple[str, float, str]]:
    units = {
        "pair_rate_norm": "cps/mW",
        "spectral_brightness": "cps/mW/nm",
        "rate_coincidence": "cps",
        "rate_signal": "cps",
        "rate_idler": "cps",
        "rate_accidental": "cps",
        "calibrated_c2": "rad/nm^2",
    }
    return [(k, v, units.get(k, "1")) for k, v in summary.items() if isinstance(v, (int, float))]


def _text_table(rows) -> str:
    w = max(len(r[0]) for r in rows)
    lines = [f"{'metric':<{w}}  {'value':>14}  unit", "-" * (w + 24)]
    for name, value, unit in rows:
        lines.append(f"{name:<{w}}  {value:>14.6g}  {unit}")
    return "\n".join(lines) + "\n"


def run_experiment(cfg: RunConfig, out_dir=None, c2: float | None = None) -> RunReport:
    """Run the full pipeline for one configuration and write all artifacts.

    Files: ``fringe_hv.csv``, ``fringe_ad.csv`` (exact probabilities),
    ``fringe_hv_counts.csv``, ``fringe_ad_counts.csv`` (simulated counts),
    ``timetags.ttag``, ``delay_histogram.csv``, ``metrics.csv``,
    ``metrics.txt``, optionally ``stability.csv``, and ``manifest.json``.
    """
    out = io.ensure_dir(out_dir if out_dir is not None else cfg.outputs)
    det = cfg.detection
    src, c2 = build_source(cfg, c2)
    sag = sagnac_state(src)
    state = sag.state
    files: dict[str, Path] = {}

    curve_hv = fringe_scan(state, 0.0, cfg.scan.steps)
    curve_ad = fringe_scan(state, AD_THETA1, cfg.scan.steps)
    files["fringe_hv.csv"] = io.write_fringe_csv(out / "fringe_hv.csv", curve_hv)
    files["fringe_ad.csv"] = io.write_fringe_csv(out / "fringe_ad.csv", curve_ad)

    meas = {}
    for key, (name, theta1) in enumerate((("hv", 0.0), ("ad", AD_THETA1))):
        m = measure_fringe(state, theta1, cfg.scan.steps, det, cfg.scan.point_duration_s, cfg.seed, key)
        meas[name] = m
        rows = zip(m.theta, m.coincidences.astype(int), m.accidentals, m.singles_signal, m.singles_idler)
        fname = f"fringe_{name}_counts.csv"
        files[fname] = io.write_table_csv(out / fname, ["theta_rad", "coincidences", "accidentals", "singles_signal", "singles_idler"], rows)

    stream = generate_timetags(det, rng_for(cfg.seed, _KEY_BRIGHTNESS))
    files["timetags.ttag"] = io.write_ttag(out / "timetags.ttag", stream)
    corr = correlate_window(stream, det.coincidence_window_ns)
    files["delay_histogram.csv"] = io.write_histogram_csv(out / "delay_histogram.csv", corr)
    T = det.duration_s
    ns, ni = stream.counts()
    r_s, r_i = (ns / T, ni / T) if T > 0 else (0.0, 0.0)
    r_c = corr.count / T if T > 0 else 0.0
    rates = rate_metrics(r_c, r_s, r_i, cfg.source.pump_power_mw, cfg.source.bandwidth_nm())

    v_hv_state = visibility(curve_hv)
    v_ad_state = visibility(curve_ad)
    v_hv_raw, v_ad_raw = meas["hv"].visibility_raw(), meas["ad"].visibility_raw()
    v_hv_sub, v_ad_sub = meas["hv"].visibility_subtracted(), meas["ad"].visibility_subtracted()
    f_state = fidelity_bound(v_hv_state, v_ad_state)
    f_raw = fidelity_bound(v_hv_raw, v_ad_raw)
    f_sub = fidelity_bound(v_hv_sub, v_ad_sub)

    summary = {
        "post_selection_weight": sag.weight,
        "v_hv_state": v_hv_state,
        "v_ad_state": v_ad_state,
        "v_hv_state_rawextrema": raw_visibility(curve_hv),
        "v_ad_state_rawextrema": raw_visibility(curve_ad),
        "v_hv_raw": v_hv_raw,
        "v_ad_raw": v_ad_raw,
        "v_hv_subtracted": v_hv_sub,
        "v_ad_subtracted": v_ad_sub,
        "fidelity_bound_state": f_state,
        "fidelity_bound_raw": f_raw,
        "fidelity_bound_subtracted": f_sub,
        "concurrence_bound_state": concurrence_bound(f_state),
        "concurrence_bound_raw": concurrence_bound(f_raw),
        "concurrence_bound_subtracted": concurrence_bound(f_sub),
        "rate_coincidence": r_c,
        "rate_signal": r_s,
        "rate_idler": r_i,
        "rate_accidental": accidentals(r_s, r_i, det.coincidence_window_ns),
        "pair_rate_norm": rates.pair_rate_norm,
        "spectral_brightness": rates.spectral_brightness,
        "heralding": rates.heralding,
        "heralding_symmetric": rates.heralding_symmetric,
    }
    if c2 is not None:
        summary["calibrated_c2"] = c2

    if cfg.stability.blocks >= 2:
        st = cfg.stability
        series = stability_series(state, det, st.blocks, st.block_duration_s, st.block_interval_s, cfg.seed)
        rows = zip(series.time_s, series.coincidences.astype(int), series.v_ad_correlated, series.v_ad_anticorrelated)
        files["stability.csv"] = io.write_table_csv(out / "stability.csv", ["time_s", "coincidences", "v_ad_correlated", "v_ad_anticorrelated"], rows)
        for col, s in stability_stats(series).items():
            summary[f"stability_{col}_mean"] = s.mean
            summary[f"stability_{col}_std"] = s.std
            summary[f"stability_{col}_slope_per_hour"] = s.slope_per_hour

    rows = _metric_rows(summary)
    files["metrics.csv"] = io.write_table_csv(out / "metrics.csv", ["metric", "value", "unit"], rows)
    (out / "metrics.txt").write_text(_text_table(rows))
    files["metrics.txt"] = out / "metrics.txt"

    manifest = {
        "config_hash": cfg.config_hash(),
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "calibrated_c2_rad_per_nm2": c2,
        "files": {name: io.sha256_file(p) for name, p in sorted(files.items())},
        "summary": summary,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    files["manifest.json"] = out / "manifest.json"
    log.info("run written to %s", out)
    return RunReport(out, summary, files)


# reported values used for side-by-side comparison
REFERENCE_VALUES = {
    "narrowband": {
        "pair_rate_norm": 160e3,
        "spectral_brightness": 53e3,
        "heralding": 0.185,
        "v_hv_raw": 0.993,
        "v_hv_subtracted": 0.997,
        "v_ad_raw": 0.981,
        "v_ad_subtracted": 0.986,
        "fidelity_bound_subtracted": 0.992,
        "concurrence_bound_subtracted": 0.984,
    },
    "broadband": {
        "pair_rate_norm": 1.07e6,
        "spectral_brightness": 53e3,
        "v_ad_subtracted": 0.78,
        "fidelity_bound_subtracted": 0.88,
    },
}


def reproduce_paper(out_dir, seed: int = 0, duration_s=None, window_ns=None, bandwidth_nm=None) -> dict[str, RunReport]:
    """Calibrate the dispersion on the broadband source, then run both cases.

    The narrowband case is the *same* calibrated source behind the band-pass.
    """
    out = io.ensure_dir(out_dir)
    cfgs = {k: c.override(seed=seed, duration_s=duration_s, window_ns=window_ns) for k, c in reference_configs(seed).items()}
    if bandwidth_nm is not None:
        cfgs["narrowband"] = cfgs["narrowband"].override(bandwidth_nm=bandwidth_nm)
    c2 = calibrate_dispersion(cfgs["broadband"].source.calibrate_v_ad, cfgs["broadband"])
    reports = {name: run_experiment(cfg, out / name, c2=c2) for name, cfg in cfgs.items()}

    rows = []
    for name, rep in reports.items():
        for metric, value in rep.summary.items():
            ref = REFERENCE_VALUES[name].get(metric)
            rows.append((name, metric, value, "" if ref is None else ref))
    io.write_table_csv(out / "summary.csv", ["run", "metric", "simulated", "reference"], rows)
    w = max(len(r[1]) for r in rows)
    lines = [f"{'run':<11} {'metric':<{w}} {'simulated':>12} {'reference':>10}"]
    for name, metric, value, ref in rows:
        p = f"{ref:>10.6g}" if ref != "" else f"{'':>10}"
        lines.append(f"{name:<11} {metric:<{w}} {value:>12.6g} {p}".rstrip())
    (out / "summary.txt").write_text("\n".join(lines) + "\n")

    manifest = {
        "seed": seed,
        "calibrated_c2_rad_per_nm2": c2,
        "runs": {name: {"config_hash": cfgs[name].config_hash(), "manifest_sha256": io.sha256_file(rep.out_dir / "manifest.json")} for name, rep in reports.items()},
        "files": {f: io.sha256_file(out / f) for f in ("summary.csv", "summary.txt")},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return reports
