"""Crossed-crystal pair source inside a polarization Sagnac loop.

Each propagation direction pumps two crossed crystals that emit identical
pairs either diagonally (crystal 1) or anti-diagonally (crystal 2)
polarized.  The clockwise emission enters the PBS through port ``"1"``, the
counter-clockwise one through port ``"2"``.

Spectro-temporal model
----------------------
Signal and idler of a degenerate pair sit at mirrored wavelengths about the
center, so a pair is carried by one *joint bin* label: both photons of a pair
in spectral bin ``k`` share ``ModeLabel.bin``.  Temporal distinguishability
is encoded by orthogonal *slots* layered over the spectral grid, with
``bin = k + n_bins * slot``:

====  ===========================================================
slot  meaning
====  ===========================================================
0     reference emission time
1     part of crystal 2's emission orthogonal to crystal 1's
2, 3  part of the counter-clockwise emission (slots 0, 1) that is
      orthogonal to the clockwise one
====  ===========================================================

A delay ``d`` gives a per-photon overlap ``g = temporal_overlap(d, tc)``;
both photons of the pair are delayed, so the pair amplitude overlap is
``g**2``.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import EmptyEnvelope, GridMismatch, NonpositiveCoherence
from .fock import (
    CreationMonomial,
    FockKet,
    ModeLabel,
    OperatorPoly,
    StateVector,
    apply_to_vacuum,
    normalize,
    substitute,
)
from .optics import pbs_map

CENTER_NM = 810.0
N_SLOTS = 4

CW, CCW = "cw", "ccw"
INPUT_PORT = {CW: "1", CCW: "2"}
OUTPUT_PORTS = ("1'", "2'")

_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class SpectralEnvelope:
    """Normalized pair amplitude per wavelength bin on a uniform grid."""

    bin_amplitudes: tuple[complex, ...]
    bin_width: float = 1.0
    center: float = CENTER_NM

    def __post_init__(self):
        amps = tuple(complex(a) for a in self.bin_amplitudes)
        if not amps:
            raise EmptyEnvelope("envelope has no bins")
        total = sum(abs(a) ** 2 for a in amps)
        if total == 0.0:
            raise EmptyEnvelope("envelope has zero weight in every bin")
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"envelope is not normalized (sum |a|^2 = {total:.12g})")
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")
        object.__setattr__(self, "bin_amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amps, bin_width: float = 1.0, center: float = CENTER_NM) -> SpectralEnvelope:
        amps = np.asarray(amps, dtype=complex)
        if amps.size == 0:
            raise EmptyEnvelope("envelope has no bins")
        norm = np.sqrt(np.sum(np.abs(amps) ** 2))
        if norm == 0:
            raise EmptyEnvelope("envelope has zero weight in every bin")
        return cls(tuple(amps / norm), bin_width, center)

    @classmethod
    def single(cls, center: float = CENTER_NM) -> SpectralEnvelope:
        return cls((1.0,), 1.0, center)

    @classmethod
    def gaussian(cls, fwhm_nm: float = 20.0, n_bins: int = 41, span_nm: float = 40.0, center: float = CENTER_NM) -> SpectralEnvelope:
        """Gaussian with intensity FWHM ``fwhm_nm`` sampled over ``center +- span_nm/2``."""
        offsets, width = _grid(n_bins, span_nm)
        sigma = fwhm_nm * _FWHM_TO_SIGMA
        return cls.from_amplitudes(np.exp(-(offsets**2) / (4 * sigma**2)), width, center)

    @classmethod
    def sinc2(cls, fwhm_nm: float = 20.0, n_bins: int = 41, span_nm: float = 40.0, center: float = CENTER_NM) -> SpectralEnvelope:
        """Phase-matching ``sinc^2`` intensity with the given FWHM."""
        offsets, width = _grid(n_bins, span_nm)
        # sinc^2(x) falls to 1/2 at x = 1.391557 (np.sinc uses pi*x)
        x = offsets * (2 * 1.3915573782515103 / math.pi) / fwhm_nm
        return cls.from_amplitudes(np.abs(np.sinc(x)), width, center)

    @property
    def n_bins(self) -> int:
        return len(self.bin_amplitudes)

    def wavelengths(self) -> np.ndarray:
        k = np.arange(self.n_bins)
        return self.center + (k - (self.n_bins - 1) / 2) * self.bin_width

    def same_grid(self, other: SpectralEnvelope) -> bool:
        return self.n_bins == other.n_bins and math.isclose(self.bin_width, other.bin_width) and math.isclose(self.center, other.center)

    def filtered(self, bandwidth_nm: float) -> SpectralEnvelope:
        """Rectangular band-pass of full width ``bandwidth_nm`` about the center, renormalized."""
        lam = self.wavelengths()
        keep = np.abs(lam - self.center) <= bandwidth_nm / 2 + 1e-9
        amps = np.where(keep, np.asarray(self.bin_amplitudes), 0.0)
        return SpectralEnvelope.from_amplitudes(amps, self.bin_width, self.center)


def _grid(n_bins: int, span_nm: float) -> tuple[np.ndarray, float]:
    if n_bins < 1:
        raise EmptyEnvelope("envelope needs at least one bin")
    if n_bins == 1:
        return np.zeros(1), max(span_nm, 1e-9)
    width = span_nm / (n_bins - 1)
    return (np.arange(n_bins) - (n_bins - 1) / 2) * width, width


@dataclass(frozen=True)
class SourceMetadata:
    """Descriptive lab parameters.  Nothing in the simulation reads these."""

    pump_wavelength_nm: float = 405.0
    center_wavelength_nm: float = 810.0
    crystal_length_mm: float = 11.48
    temperature_c: float = 107.0
    crystal: str = "type-0 ppKTP"


@dataclass(frozen=True)
class SourceConfig:
    phi: float = math.pi
    envelope_c1: SpectralEnvelope = field(default_factory=SpectralEnvelope.single)
    envelope_c2: SpectralEnvelope = field(default_factory=SpectralEnvelope.single)
    cw_ccw_delay_fs: float = 0.0
    crystal_delay_fs: float = 0.0
    coherence_time_fs: float = 100.0
    phase_profile_coeffs: tuple[float, ...] = (0.0, 0.0, 0.0)
    metadata: SourceMetadata = field(default_factory=SourceMetadata)

    def __post_init__(self):
        if not self.envelope_c1.same_grid(self.envelope_c2):
            raise GridMismatch("both crystals' envelopes must share one bin grid")
        if self.coherence_time_fs <= 0:
            raise NonpositiveCoherence("coherence_time_fs must be positive")
        coeffs = tuple(float(c) for c in self.phase_profile_coeffs)
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("phase profile coefficients must be finite")
        object.__setattr__(self, "phase_profile_coeffs", coeffs)

    @property
    def n_bins(self) -> int:
        return self.envelope_c1.n_bins

    def filtered(self, bandwidth_nm: float) -> SourceConfig:
        """Same source seen through a rectangular filter on both photons."""
        return replace(
            self,
            envelope_c1=self.envelope_c1.filtered(bandwidth_nm),
            envelope_c2=self.envelope_c2.filtered(bandwidth_nm),
        )

    def with_phase_coeffs(self, coeffs: Sequence[float]) -> SourceConfig:
        return replace(self, phase_profile_coeffs=tuple(coeffs))


def temporal_overlap(delay: float, coherence_time: float) -> float:
    """Gaussian single-photon overlap ``exp(-delay^2 / (2 coherence_time^2))``."""
    if coherence_time <= 0:
        raise NonpositiveCoherence("coherence_time must be positive")
    return math.exp(-(delay**2) / (2.0 * coherence_time**2))


def phase_profile(lam, coeffs: Sequence[float], center: float = CENTER_NM):
    """``c0 + c1 (lam - center) + c2 (lam - center)^2 + ...`` in radians."""
    x = np.asarray(lam, dtype=float) - center
    out = np.zeros_like(x)
    for c in reversed(tuple(coeffs)):
        out = out * x + c
    return float(out) if out.ndim == 0 else out


def _pair_creator(port: str, pol_angle: float, b: int) -> OperatorPoly:
    """``(a+_theta)^2 / sqrt(2)`` on one joint bin: a normalized two-photon pair."""
    a = OperatorPoly.diagonal(port, b) if pol_angle > 0 else OperatorPoly.antidiagonal(port, b)
    return (a * a) / math.sqrt(2.0)


def _split_overlap(overlap: float) -> tuple[float, float]:
    overlap = min(max(overlap, 0.0), 1.0)
    return overlap, math.sqrt(max(0.0, 1.0 - overlap * overlap))


def crossed_crystal_poly(cfg: SourceConfig, direction: str) -> OperatorPoly:
    """Pair-creation polynomial ``((a+_D)^2 + e^{i phi} (a+_A)^2) / 2`` per bin.

    With single-bin envelopes and no delays this is exactly the ideal
    crossed-crystal state on the direction's input port; at ``phi = pi`` it
    reduces to ``a+_H a+_V``.
    """
    if direction not in INPUT_PORT:
        raise ValueError(f"direction must be 'cw' or 'ccw', got {direction!r}")
    port = INPUT_PORT[direction]
    n = cfg.n_bins
    f1 = cfg.envelope_c1.bin_amplitudes
    f2 = cfg.envelope_c2.bin_amplitudes
    pair_ov, pair_orth = _split_overlap(temporal_overlap(cfg.crystal_delay_fs, cfg.coherence_time_fs) ** 2)
    e_phi = cmath.exp(1j * cfg.phi)

    # slot -> [(slot', weight)] for the counter-clockwise time shift
    if direction == CCW:
        dir_ov, dir_orth = _split_overlap(temporal_overlap(cfg.cw_ccw_delay_fs, cfg.coherence_time_fs) ** 2)
        disp = np.exp(1j * np.asarray(phase_profile(cfg.envelope_c1.wavelengths(), cfg.phase_profile_coeffs)))
        slots = {0: ((0, dir_ov), (2, dir_orth)), 1: ((1, dir_ov), (3, dir_orth))}
    else:
        disp = np.ones(n, dtype=complex)
        slots = {0: ((0, 1.0),), 1: ((1, 1.0),)}

    acc: dict[CreationMonomial, complex] = {}

    def add(poly: OperatorPoly, c: complex):
        for mono, v in poly:
            acc[mono] = acc.get(mono, 0j) + c * v

    for k in range(n):
        for src_slot, pol_angle, amp in (
            (0, +1, f1[k]),
            (0, -1, e_phi * f2[k] * pair_ov),
            (1, -1, e_phi * f2[k] * pair_orth),
        ):
            if amp == 0:
                continue
            for slot, w in slots[src_slot]:
                c = amp * w * disp[k] / math.sqrt(2.0)
                if abs(c) < 1e-15:
                    continue
                add(_pair_creator(port, pol_angle, k + n * slot), c)
    poly = OperatorPoly(acc)
    if poly.is_zero():
        raise EmptyEnvelope("source emits nothing")
    return poly


class SagnacOutput(NamedTuple):
    """Post-selected two-port state plus the anti-bunching probability."""

    state: StateVector
    weight: float
    full: StateVector


def one_per_port(ket, ports: Sequence[str] = OUTPUT_PORTS) -> bool:
    counts = {p: 0 for p in ports}
    for m, n in ket.occupations:
        if m.port not in counts:
            return False
        counts[m.port] += n
    return all(c == 1 for c in counts.values())


def sagnac_state(cfg: SourceConfig) -> SagnacOutput:
    """Coherent sum of both directions, routed by the PBS and post-selected.

    ``state`` is the normalized component with exactly one photon in each of
    ports 1' and 2' (the zero vector if that component vanishes) and
    ``weight`` its probability before post-selection.
    """
    total = (crossed_crystal_poly(cfg, CW) + crossed_crystal_poly(cfg, CCW)) / math.sqrt(2.0)
    bins = {m.bin for m in total.modes()}
    out = apply_to_vacuum(substitute(total, pbs_map(("1", "2"), OUTPUT_PORTS, bins=bins)))
    full = normalize(out)
    kept = full.project(one_per_port)
    weight = min(kept.norm() ** 2, 1.0)
    state = normalize(kept) if weight > 1e-24 else StateVector({}, kept.universe)
    return SagnacOutput(state, weight, full)


def bell_state(sign: int = +1, bin: int = 0) -> StateVector:
    """``(|H_1' V_2'> + sign |V_1' H_2'>)/sqrt(2)`` on one bin."""
    hv = FockKet.of({ModeLabel("1'", "H", bin): 1, ModeLabel("2'", "V", bin): 1})
    vh = FockKet.of({ModeLabel("1'", "V", bin): 1, ModeLabel("2'", "H", bin): 1})
    s = math.sqrt(0.5)
    return StateVector({hv: s, vh: sign * s})
