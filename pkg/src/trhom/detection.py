"""Polarization analysis of simulated states and a two-channel time-tag pipeline.

Window convention: a signal/idler pair is coincident when
``|t_idler - t_signal| <= tau_c / 2``, i.e. ``tau_c`` is the full window
width.  Matching is greedy: when a tag arrives it pairs with the most recent
still-unmatched tag of the other channel inside the window, and each tag is
used at most once.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import (
    DegenerateCurve,
    NotTwoPhoton,
    RateInconsistent,
    UnsortedStream,
)
from .fock import StateVector
from .source import OUTPUT_PORTS

SIGNAL, IDLER = 0, 1
PS_PER_S = 10**12
MAX_DURATION_S = 3600.0


# polarization analysis -----------------------------------------------------


@dataclass(frozen=True)
class PolarizerSetting:
    theta1: float
    theta2: float
    basis: str = "custom"

    def __post_init__(self):
        if not (math.isfinite(self.theta1) and math.isfinite(self.theta2)):
            raise ValueError("polarizer angles must be finite")
        if self.basis not in ("HV", "AD", "custom"):
            raise ValueError(f"unknown basis tag {self.basis!r}")
        offset = {"HV": 0.0, "AD": math.pi / 4}.get(self.basis)
        if offset is not None:
            for th in (self.theta1, self.theta2):
                r = (th - offset) % (math.pi / 2)
                if min(r, math.pi / 2 - r) > 1e-9:
                    raise ValueError(f"angle {th} is not in the {self.basis} basis")


def _projection(theta: float) -> dict[str, float]:
    return {"H": math.cos(theta), "V": math.sin(theta)}


def coincidence_probability(s: StateVector, setting: PolarizerSetting, ports: Sequence[str] = OUTPUT_PORTS) -> float:
    """Probability that both photons pass their linear polarizers.

    Bins are unresolved by the detectors, so amplitudes are summed coherently
    within each ``(bin1, bin2)`` outcome and probabilities across outcomes.
    """
    if s.is_zero():
        raise NotTwoPhoton("state is empty")
    if s.photon_numbers() != {2}:
        raise NotTwoPhoton(f"expected two-photon kets only, found photon numbers {sorted(s.photon_numbers())}")
    p1, p2 = (str(p) for p in ports)
    pr1, pr2 = _projection(setting.theta1), _projection(setting.theta2)
    outcomes: dict[tuple[int, int], complex] = {}
    for ket, amp in s:
        modes = [m for m, n in ket.occupations for _ in range(n)]
        a = [m for m in modes if m.port == p1]
        b = [m for m in modes if m.port == p2]
        if len(a) != 1 or len(b) != 1:
            continue
        a, b = a[0], b[0]
        key = (a.bin, b.bin)
        outcomes[key] = outcomes.get(key, 0j) + amp * pr1[a.pol] * pr2[b.pol]
    return float(sum(abs(v) ** 2 for v in outcomes.values()))


def pass_probability(s: StateVector, port: str, theta: float) -> float:
    """Probability that the photon in ``port`` passes a polarizer at ``theta``.

    Kets without exactly one photon in ``port`` contribute nothing.
    """
    pr = _projection(theta)
    outcomes: dict[tuple, complex] = {}
    for ket, amp in s:
        mine = [(m, n) for m, n in ket.occupations if m.port == port]
        if len(mine) != 1 or mine[0][1] != 1:
            continue
        m = mine[0][0]
        rest = tuple((o, n) for o, n in ket.occupations if o.port != port)
        key = (m.bin, rest)
        outcomes[key] = outcomes.get(key, 0j) + amp * pr[m.pol]
    return float(sum(abs(v) ** 2 for v in outcomes.values()))


@dataclass(frozen=True)
class FringeCurve:
    theta: np.ndarray
    value: np.ndarray
    theta1: float = 0.0

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return zip(self.theta.tolist(), self.value.tolist())

    def __len__(self):
        return len(self.theta)


def fringe_scan(s: StateVector, fixed_theta1: float, steps: int = 16) -> FringeCurve:
    """Coincidence probability on a uniform grid of ``theta2`` over one period (pi)."""
    if steps < 8:
        raise ValueError("a fringe scan needs at least 8 steps")
    theta = np.arange(steps) * (math.pi / steps)
    probs = np.array([coincidence_probability(s, PolarizerSetting(fixed_theta1, float(t))) for t in theta])
    return FringeCurve(theta, probs, fixed_theta1)


def fit_fringe(theta, value) -> tuple[float, float, float]:
    """Least-squares ``a + b cos(2 theta) + c sin(2 theta)``; returns ``(a, b, c)``."""
    theta = np.asarray(theta, dtype=float)
    value = np.asarray(value, dtype=float)
    design = np.column_stack([np.ones_like(theta), np.cos(2 * theta), np.sin(2 * theta)])
    coef, *_ = np.linalg.lstsq(design, value, rcond=None)
    return tuple(float(c) for c in coef)


def _curve_arrays(curve) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(curve, FringeCurve):
        return curve.theta, curve.value
    theta, value = curve
    theta, value = np.asarray(theta, dtype=float), np.asarray(value, dtype=float)
    if theta.shape != value.shape:
        raise ValueError("theta and value must have the same shape")
    return theta, value


def visibility(curve) -> float:
    """Fringe contrast ``(max - min)/(max + min)`` of the fitted sinusoid.

    ``curve`` is a :class:`FringeCurve` or a ``(theta, value)`` pair of
    arrays.  The result is clipped to ``[0, 1]``.
    """
    theta, value = _curve_arrays(curve)
    if value.size == 0:
        raise DegenerateCurve("empty curve")
    if np.any(value < 0):
        raise ValueError("fringe values must be non-negative")
    if np.all(value == 0):
        raise DegenerateCurve("all fringe values are zero")
    if np.unique(np.round(np.mod(theta, math.pi), 12)).size < 3:
        raise DegenerateCurve("need at least three distinct angles to fit a fringe")
    a, b, c = fit_fringe(theta, value)
    if a <= 0:
        raise DegenerateCurve("fitted fringe offset is not positive")
    return float(min(1.0, math.hypot(b, c) / a))


def raw_visibility(curve) -> float:
    """``(max - min)/(max + min)`` straight from the samples."""
    _, value = _curve_arrays(curve)
    hi, lo = float(np.max(value)), float(np.min(value))
    if hi + lo <= 0:
        raise DegenerateCurve("all fringe values are zero")
    return (hi - lo) / (hi + lo)


# time tags -------------------------------------------------------------------


@dataclass(frozen=True)
class DetectionConfig:
    coincidence_window_ns: float = 3.0
    signal_rate_cps: float = 86_000.0
    idler_rate_cps: float = 86_000.0
    pair_rate_cps: float = 16_000.0
    jitter_ps: float = 350.0
    duration_s: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.coincidence_window_ns <= 0:
            raise ValueError("coincidence_window_ns must be positive")
        for name in ("signal_rate_cps", "idler_rate_cps", "pair_rate_cps", "jitter_ps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0 <= self.duration_s <= MAX_DURATION_S:
            raise ValueError(f"duration_s must lie in [0, {MAX_DURATION_S}]")


@dataclass(frozen=True)
class TagStream:
    """Time-ordered detector clicks; timestamps are integer picoseconds."""

    timestamps: np.ndarray
    channels: np.ndarray
    duration_s: float

    def __post_init__(self):
        ts = np.ascontiguousarray(self.timestamps, dtype=np.int64)
        ch = np.ascontiguousarray(self.channels, dtype=np.uint8)
        if ts.shape != ch.shape or ts.ndim != 1:
            raise ValueError("timestamps and channels must be 1-D arrays of equal length")
        if ts.size and np.any(np.diff(ts) < 0):
            raise UnsortedStream("timestamps must be non-decreasing")
        if ts.size and (ts[0] < 0 or ts[-1] > round(self.duration_s * PS_PER_S)):
            raise ValueError("timestamps must lie within [0, duration]")
        if ch.size and ch.max() > 1:
            raise ValueError("channel must be 0 (signal) or 1 (idler)")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "channels", ch)

    def __len__(self):
        return int(self.timestamps.size)

    def counts(self) -> tuple[int, int]:
        n_idler = int(np.count_nonzero(self.channels))
        return len(self) - n_idler, n_idler


def generate_timetags(cfg: DetectionConfig, rng: np.random.Generator | None = None) -> TagStream:
    """Synthesize clicks: Poissonian pairs plus uncorrelated singles.

    Pairs arrive at rate ``pair_rate_cps`` with the idler displaced by a
    Gaussian of standard deviation ``jitter_ps``.  Unpaired clicks top each
    channel up to its singles rate.  Deterministic for a given ``rng`` (by
    default one seeded from ``cfg.seed``).
    """
    if cfg.pair_rate_cps > min(cfg.signal_rate_cps, cfg.idler_rate_cps):
        raise RateInconsistent("pair rate exceeds a singles rate")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    t_end = int(round(cfg.duration_s * PS_PER_S))
    if t_end == 0:
        return TagStream(np.zeros(0, np.int64), np.zeros(0, np.uint8), 0.0)

    T = cfg.duration_s
    n_pairs = rng.poisson(cfg.pair_rate_cps * T)
    n_sig = rng.poisson((cfg.signal_rate_cps - cfg.pair_rate_cps) * T)
    n_idl = rng.poisson((cfg.idler_rate_cps - cfg.pair_rate_cps) * T)

    t_pair = rng.integers(0, t_end, size=n_pairs, endpoint=True)
    offset = np.rint(rng.normal(0.0, cfg.jitter_ps, size=n_pairs)).astype(np.int64) if cfg.jitter_ps > 0 else 0
    t_pair_idl = np.clip(t_pair + offset, 0, t_end)
    t_sig = rng.integers(0, t_end, size=n_sig, endpoint=True)
    t_idl = rng.integers(0, t_end, size=n_idl, endpoint=True)

    ts = np.concatenate([t_pair, t_sig, t_pair_idl, t_idl]).astype(np.int64)
    ch = np.concatenate(
        [np.zeros(n_pairs + n_sig, np.uint8), np.ones(n_pairs + n_idl, np.uint8)]
    )
    order = np.lexsort((ch, ts))
    return TagStream(ts[order], ch[order], T)


@numba.njit(cache=True)
def _match_kernel(ts, ch, window_ps, start):
    """Greedy matching over ``ts[start:]``, with ``ts[:start]`` pending carry-over.

    Returns ``(sig_idx, idl_idx, n_matches, pending)`` where ``pending`` holds
    the indices of unmatched tags still inside the window of the last tag.
    """
    n = ts.size
    # one index queue per channel: head pops expired tags, tail pops matches
    q = np.empty((2, n), np.int64)
    head = np.zeros(2, np.int64)
    tail = np.zeros(2, np.int64)
    sig_idx = np.empty(n // 2 + 1, np.int64)
    idl_idx = np.empty(n // 2 + 1, np.int64)
    m = 0
    for j in range(n):
        c = ch[j]
        o = 1 - c
        t = ts[j]
        while head[o] < tail[o] and 2 * (t - ts[q[o, head[o]]]) > window_ps:
            head[o] += 1
        if j >= start and head[o] < tail[o]:
            tail[o] -= 1
            i = q[o, tail[o]]
            if c == 0:
                sig_idx[m] = j
                idl_idx[m] = i
            else:
                sig_idx[m] = i
                idl_idx[m] = j
            m += 1
        else:
            q[c, tail[c]] = j
            tail[c] += 1
    # leftovers that a later tag could still reach
    n_pend = 0
    pending = np.empty(n, np.int64)
    if n > 0:
        t_last = ts[n - 1]
        for c in range(2):
            for k in range(head[c], tail[c]):
                if 2 * (t_last - ts[q[c, k]]) <= window_ps:
                    pending[n_pend] = q[c, k]
                    n_pend += 1
    pending = np.sort(pending[:n_pend])
    return sig_idx[:m], idl_idx[:m], m, pending


@dataclass
class Correlation:
    count: int
    bin_edges_ps: np.ndarray
    histogram: np.ndarray
    delays_ps: np.ndarray = field(repr=False)

    def bin_centers_ps(self) -> np.ndarray:
        return 0.5 * (self.bin_edges_ps[1:] + self.bin_edges_ps[:-1])


def _window_ps(tau_c_ns: float) -> int:
    if tau_c_ns <= 0:
        raise ValueError("coincidence window must be positive")
    return int(round(tau_c_ns * 1000))


class StreamingCorrelator:
    """Chunk-by-chunk version of :func:`correlate_window`.

    Unmatched tags near the end of one chunk are carried into the next, so the
    result does not depend on how the stream is split.
    """

    def __init__(self, tau_c_ns: float):
        self.window_ps = _window_ps(tau_c_ns)
        self._carry_ts = np.zeros(0, np.int64)
        self._carry_ch = np.zeros(0, np.uint8)
        self._last = None
        self._delays: list[np.ndarray] = []
        self.count = 0

    def feed(self, timestamps, channels) -> None:
        ts = np.ascontiguousarray(timestamps, dtype=np.int64)
        ch = np.ascontiguousarray(channels, dtype=np.uint8)
        if ts.size == 0:
            return
        if np.any(np.diff(ts) < 0) or (self._last is not None and ts[0] < self._last):
            raise UnsortedStream("timestamps must be non-decreasing across chunks")
        self._last = int(ts[-1])
        start = self._carry_ts.size
        all_ts = np.concatenate([self._carry_ts, ts])
        all_ch = np.concatenate([self._carry_ch, ch])
        si, ii, m, pending = _match_kernel(all_ts, all_ch, self.window_ps, start)
        self.count += int(m)
        self._delays.append(all_ts[ii] - all_ts[si])
        self._carry_ts = all_ts[pending]
        self._carry_ch = all_ch[pending]

    def result(self, bin_width_ps: int = 100) -> Correlation:
        delays = np.concatenate(self._delays) if self._delays else np.zeros(0, np.int64)
        half = self.window_ps / 2
        n_bins = max(1, math.ceil(self.window_ps / bin_width_ps))
        edges = -half + bin_width_ps * np.arange(n_bins + 1, dtype=float)
        edges[-1] = max(edges[-1], half)
        hist, _ = np.histogram(delays, bins=edges)
        return Correlation(self.count, edges, hist, delays)


def correlate_window(
    stream: TagStream,
    tau_c_ns: float,
    bin_width_ps: int = 100,
    chunk_size: int | None = None,
) -> Correlation:
    """Count signal/idler coincidences in one linear pass.

    ``chunk_size`` splits the work into pieces of that many tags; the answer
    is identical for every choice.
    """
    ts, ch = stream.timestamps, stream.channels
    corr = StreamingCorrelator(tau_c_ns)
    step = len(ts) if not chunk_size else int(chunk_size)
    for lo in range(0, len(ts), max(step, 1)):
        corr.feed(ts[lo : lo + step], ch[lo : lo + step])
    return corr.result(bin_width_ps)


def accidentals(rate_signal: float, rate_idler: float, tau_c_ns: float) -> float:
    """Accidental coincidence rate ``R_s * R_i * tau_c`` in counts per second."""
    if rate_signal < 0 or rate_idler < 0 or tau_c_ns < 0:
        raise ValueError("rates and window must be non-negative")
    return rate_signal * rate_idler * tau_c_ns * 1e-9


def subtract_accidentals(measured: float, accidental: float) -> float:
    return max(measured - accidental, 0.0)
