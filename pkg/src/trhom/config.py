"""Run configuration: TOML file -> frozen dataclasses.

Every physical quantity carries its unit in the key name.  Example::

    seed = 7

    [source]
    phi_rad = 3.141592653589793
    envelope = "gaussian"        # "gaussian" | "sinc2" | "single"
    fwhm_nm = 20.0
    n_bins = 41
    span_nm = 40.0
    filter_nm = 3.0              # optional rectangular band-pass
    phase_coeffs = [0.0, 0.0, 0.0]   # rad, rad/nm, rad/nm^2 about 810 nm
    calibrate_v_ad = 0.78        # optional: search c2 before filtering
    crystal_delay_fs = 0.0
    cw_ccw_delay_fs = 0.0
    coherence_time_fs = 100.0
    pump_power_mw = 0.1

    [detection]
    coincidence_window_ns = 3.0
    signal_rate_cps = 86000.0
    idler_rate_cps = 86000.0
    pair_rate_cps = 16000.0
    jitter_ps = 350.0
    duration_s = 1.0

    [scan]
    steps = 16
    point_duration_s = 0.25

    [stability]
    blocks = 20
    block_duration_s = 1.0
    block_interval_s = 180.0

    [outputs]
    dir = "out"
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .detection import DetectionConfig
from .errors import ConfigError
from .source import SourceConfig, SpectralEnvelope

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class SourceSettings:
    phi_rad: float = math.pi
    envelope: str = "single"
    fwhm_nm: float = 20.0
    n_bins: int = 41
    span_nm: float = 40.0
    center_nm: float = 810.0
    filter_nm: float | None = None
    phase_coeffs: tuple[float, ...] = (0.0, 0.0, 0.0)
    calibrate_v_ad: float | None = None
    crystal_delay_fs: float = 0.0
    cw_ccw_delay_fs: float = 0.0
    coherence_time_fs: float = 100.0
    pump_power_mw: float = 0.1

    def envelope_obj(self) -> SpectralEnvelope:
        if self.envelope == "single":
            return SpectralEnvelope.single(self.center_nm)
        if self.envelope == "gaussian":
            return SpectralEnvelope.gaussian(self.fwhm_nm, self.n_bins, self.span_nm, self.center_nm)
        if self.envelope == "sinc2":
            return SpectralEnvelope.sinc2(self.fwhm_nm, self.n_bins, self.span_nm, self.center_nm)
        raise ConfigError(f"unknown envelope {self.envelope!r}")

    def build(self, phase_coeffs=None) -> SourceConfig:
        """Unfiltered source; apply ``filter_nm`` with :meth:`SourceConfig.filtered`."""
        env = self.envelope_obj()
        return SourceConfig(
            phi=self.phi_rad,
            envelope_c1=env,
            envelope_c2=env,
            cw_ccw_delay_fs=self.cw_ccw_delay_fs,
            crystal_delay_fs=self.crystal_delay_fs,
            coherence_time_fs=self.coherence_time_fs,
            phase_profile_coeffs=tuple(self.phase_coeffs if phase_coeffs is None else phase_coeffs),
        )

    def bandwidth_nm(self) -> float:
        if self.filter_nm is not None:
            return self.filter_nm
        if self.envelope == "single":
            return 1.0
        return self.fwhm_nm


@dataclass(frozen=True)
class ScanSettings:
    steps: int = 16
    point_duration_s: float = 0.25


@dataclass(frozen=True)
class StabilitySettings:
    blocks: int = 0
    block_duration_s: float = 1.0
    block_interval_s: float = 180.0


@dataclass(frozen=True)
class RunConfig:
    source: SourceSettings = field(default_factory=SourceSettings)
    detection: DetectionConfig = field(default_factory=DetectionConfig)
    scan: ScanSettings = field(default_factory=ScanSettings)
    stability: StabilitySettings = field(default_factory=StabilitySettings)
    outputs: str = "out"
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["source"]["phase_coeffs"] = list(self.source.phase_coeffs)
        d["detection"].pop("seed")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def override(self, *, seed=None, duration_s=None, window_ns=None, bandwidth_nm=None, out=None) -> RunConfig:
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        if duration_s is not None:
            cfg = replace(cfg, detection=_build(DetectionConfig, {**asdict(cfg.detection), "duration_s": duration_s}, "detection"))
        if window_ns is not None:
            cfg = replace(cfg, detection=_build(DetectionConfig, {**asdict(cfg.detection), "coincidence_window_ns": window_ns}, "detection"))
        if bandwidth_nm is not None:
            cfg = replace(cfg, source=replace(cfg.source, filter_nm=float(bandwidth_nm)))
        if out is not None:
            cfg = replace(cfg, outputs=str(out))
        return cfg


def _build(cls, values: dict, section: str):
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {sorted(unknown)}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def config_from_dict(data: dict) -> RunConfig:
    data = dict(data)
    allowed = {"source", "detection", "scan", "stability", "outputs", "seed"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    src = dict(data.get("source", {}))
    if "phase_coeffs" in src:
        src["phase_coeffs"] = tuple(float(c) for c in src["phase_coeffs"])
    source = _build(SourceSettings, src, "source")
    if source.envelope not in ("single", "gaussian", "sinc2"):
        raise ConfigError(f"[source] unknown envelope {source.envelope!r}")
    if source.pump_power_mw <= 0:
        raise ConfigError("[source] pump_power_mw must be positive")
    if source.calibrate_v_ad is not None and not 0 < source.calibrate_v_ad <= 1:
        raise ConfigError("[source] calibrate_v_ad must lie in (0, 1]")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    det = _build(DetectionConfig, {**data.get("detection", {}), "seed": seed}, "detection")
    scan = _build(ScanSettings, data.get("scan", {}), "scan")
    if scan.steps < 8 or scan.point_duration_s <= 0:
        raise ConfigError("[scan] steps must be >= 8 and point_duration_s > 0")
    stab = _build(StabilitySettings, data.get("stability", {}), "stability")
    outputs = data.get("outputs", {})
    out_dir = outputs.get("dir", "out") if isinstance(outputs, dict) else str(outputs)
    return RunConfig(source, det, scan, stab, out_dir, seed)


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)


def reference_configs(seed: int = 0) -> dict[str, RunConfig]:
    """Broadband (full phase-matching bandwidth) and 3 nm filtered runs.

    Narrowband rates are the measured ones at 0.1 mW.  For the broadband run
    the pair rate follows the normalized 1.07 Mcps/mW; singles keep the
    narrowband heralding ratio because no broadband singles rate is given.
    """
    broad_src = SourceSettings(envelope="gaussian", fwhm_nm=20.0, n_bins=41, span_nm=40.0, calibrate_v_ad=0.78, pump_power_mw=0.1)
    narrow_src = replace(broad_src, filter_nm=3.0)
    narrow_det = DetectionConfig(3.0, 86_000.0, 86_000.0, 16_000.0, 350.0, 1.0, seed)
    pair_broad = 1.07e6 * 0.1
    singles_broad = pair_broad * 86_000.0 / 16_000.0
    broad_det = DetectionConfig(3.0, singles_broad, singles_broad, pair_broad, 350.0, 1.0, seed)
    stab = StabilitySettings(blocks=20, block_duration_s=1.0, block_interval_s=180.0)
    return {
        "narrowband": RunConfig(narrow_src, narrow_det, ScanSettings(16, 1.0), stab, "narrowband", seed),
        "broadband": RunConfig(broad_src, broad_det, ScanSettings(16, 0.25), StabilitySettings(), "broadband", seed),
    }


def write_example_config(path, cfg: RunConfig) -> Path:
    """Serialize ``cfg`` as TOML (only the subset of TOML this module reads)."""
    d = cfg.to_dict()
    lines = [f"seed = {cfg.seed}", ""]

    def val(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, str):
            return json.dumps(v)
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(val(x) for x in v) + "]"
        return repr(v)

    for section in ("source", "detection", "scan", "stability"):
        lines.append(f"[{section}]")
        for k, v in d[section].items():
            if v is not None:
                lines.append(f"{k} = {val(v)}")
        lines.append("")
    lines += ["[outputs]", f"dir = {val(cfg.outputs)}", ""]
    path = Path(path)
    path.write_text("\n".join(lines))
    return path
