"""Passive linear optics as unitary substitutions on creation operators.

A :class:`ModeMap` sends each input creation operator to a linear combination
of output creation operators (Heisenberg picture).  All constructors here act
identically on every spectro-temporal bin they are given.

Conventions
-----------
* Jones matrices act on ``(H, V)`` column vectors; the image of ``a+_H`` is
  the first column.
* Every reflection, polarizing or not, picks up a factor ``i``.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicatePorts,
    NonUnitaryMap,
    OutOfRange,
    UniverseMismatch,
    UnknownPort,
)
from .fock import POLARIZATIONS, ModeLabel

UNITARY_TOL = 1e-12

Image = tuple[tuple[ModeLabel, complex], ...]


@dataclass(frozen=True)
class ModeMap:
    """Linear map ``a+_in -> sum_j u_j a+_out_j`` over explicit mode sets.

    The matrix over ``domain`` x ``codomain`` must be unitary; this is
    checked on construction.
    """

    images: Mapping[ModeLabel, Image]
    domain: tuple[ModeLabel, ...] = field(init=False)
    codomain: tuple[ModeLabel, ...] = field(init=False)

    def __post_init__(self):
        images = {}
        for src, img in self.images.items():
            merged: dict[ModeLabel, complex] = {}
            for dst, c in img:
                merged[dst] = merged.get(dst, 0j) + complex(c)
            images[src] = tuple(sorted((d, c) for d, c in merged.items() if abs(c) >= 1e-15))
        object.__setattr__(self, "images", images)
        object.__setattr__(self, "domain", tuple(sorted(images)))
        codomain = {d for img in images.values() for d, _ in img}
        object.__setattr__(self, "codomain", tuple(sorted(codomain)))
        err = self.unitarity_error()
        if err > 1e-10:
            raise NonUnitaryMap(f"map deviates from unitarity by {err:.3g}")

    def matrix(self) -> np.ndarray:
        """``U[j, i]`` = coefficient of ``codomain[j]`` in the image of ``domain[i]``."""
        col = {m: i for i, m in enumerate(self.domain)}
        row = {m: j for j, m in enumerate(self.codomain)}
        u = np.zeros((len(self.codomain), len(self.domain)), dtype=complex)
        for src, img in self.images.items():
            for dst, c in img:
                u[row[dst], col[src]] = c
        return u

    def unitarity_error(self) -> float:
        u = self.matrix()
        if u.shape[0] != u.shape[1]:
            return math.inf
        if u.size == 0:
            return 0.0
        return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[1]))))

    def inverse(self) -> ModeMap:
        inv: dict[ModeLabel, list] = {m: [] for m in self.codomain}
        for src, img in self.images.items():
            for dst, c in img:
                inv[dst].append((src, complex(c).conjugate()))
        return ModeMap({k: tuple(v) for k, v in inv.items()})

    def extend(self, modes: Iterable[ModeLabel]) -> ModeMap:
        """Direct sum with the identity on ``modes`` not already in the domain."""
        images = dict(self.images)
        for m in modes:
            if m not in images:
                if m in self.codomain:
                    raise UniverseMismatch(f"{m} is an output of the map but not an input")
                images[m] = ((m, 1.0),)
        return ModeMap(images)

    def ports(self) -> frozenset[str]:
        return frozenset(m.port for m in self.domain)

    def bins(self) -> frozenset[int]:
        return frozenset(m.bin for m in self.domain)


def identity_map(modes: Iterable[ModeLabel]) -> ModeMap:
    return ModeMap({m: ((m, 1.0),) for m in modes})


def _bins(bins) -> tuple[int, ...]:
    bins = tuple(sorted(set(int(b) for b in bins)))
    if not bins:
        raise ValueError("at least one bin is required")
    return bins


def jones_map(jones: np.ndarray, port: str, bins: Iterable[int] = (0,), ports: Iterable[str] | None = None) -> ModeMap:
    """Apply a 2x2 Jones matrix on one port, identity elsewhere in ``ports``."""
    port = str(port)
    bins = _bins(bins)
    ports = {port} if ports is None else {str(p) for p in ports}
    if port not in ports:
        raise UnknownPort(f"port {port!r} is not among {sorted(ports)}")
    images = {}
    for b in bins:
        for p in ports:
            for k, pol in enumerate(POLARIZATIONS):
                src = ModeLabel(p, pol, b)
                if p == port:
                    images[src] = (
                        (ModeLabel(p, "H", b), jones[0, k]),
                        (ModeLabel(p, "V", b), jones[1, k]),
                    )
                else:
                    images[src] = ((src, 1.0),)
    return ModeMap(images)


def waveplate_jones(retardance: float, axis_angle: float) -> np.ndarray:
    """Jones matrix of a linear retarder with its fast axis at ``axis_angle``."""
    c, s = math.cos(axis_angle), math.sin(axis_angle)
    rot = np.array([[c, s], [-s, c]])
    return rot.T @ np.diag([1.0, cmath.exp(1j * retardance)]) @ rot


def waveplate_map(
    retardance: float,
    axis_angle: float,
    port: str,
    bins: Iterable[int] = (0,),
    ports: Iterable[str] | None = None,
) -> ModeMap:
    """Waveplate on ``port``.  Half-wave: ``retardance=pi``; quarter-wave: ``pi/2``.

    ``ports`` lists every port of the surrounding universe; the waveplate is
    the identity on the others.
    """
    return jones_map(waveplate_jones(retardance, axis_angle), port, bins, ports)


def phase_shift_map(
    phase: float,
    port: str,
    pol: str | None = None,
    bins: Iterable[int] = (0,),
    ports: Iterable[str] | None = None,
) -> ModeMap:
    """Multiply ``a+`` on ``port`` by ``exp(i phase)``; only on ``pol`` if given."""
    ph = cmath.exp(1j * phase)
    jones = np.diag([ph if pol in (None, "H") else 1.0, ph if pol in (None, "V") else 1.0])
    return jones_map(jones, port, bins, ports)


def _check_ports(in_ports: Sequence[str], out_ports: Sequence[str]) -> tuple[str, str, str, str]:
    if len(in_ports) != 2 or len(out_ports) != 2:
        raise ValueError("a beam splitter has exactly two input and two output ports")
    ports = tuple(str(p) for p in (*in_ports, *out_ports))
    if len(set(ports)) != 4:
        raise DuplicatePorts(f"ports must be distinct, got {ports}")
    return ports


def pbs_map(
    in_ports: Sequence[str] = ("1", "2"),
    out_ports: Sequence[str] = ("1'", "2'"),
    bins: Iterable[int] = (0,),
) -> ModeMap:
    """Polarizing beam splitter: H transmits, V reflects with a factor ``i``.

    ``in1 -> out1`` and ``in2 -> out2`` for H; ``in1 -> out2`` and
    ``in2 -> out1`` for V.
    """
    i1, i2, o1, o2 = _check_ports(in_ports, out_ports)
    images = {}
    for b in _bins(bins):
        images[ModeLabel(i1, "H", b)] = ((ModeLabel(o1, "H", b), 1.0),)
        images[ModeLabel(i2, "H", b)] = ((ModeLabel(o2, "H", b), 1.0),)
        images[ModeLabel(i1, "V", b)] = ((ModeLabel(o2, "V", b), 1j),)
        images[ModeLabel(i2, "V", b)] = ((ModeLabel(o1, "V", b), 1j),)
    return ModeMap(images)


def bs_map(
    reflectivity: float,
    in_ports: Sequence[str] = ("1", "2"),
    out_ports: Sequence[str] = ("1'", "2'"),
    bins: Iterable[int] = (0,),
) -> ModeMap:
    """Polarization-independent beam splitter with power reflectivity ``reflectivity``."""
    if not 0.0 <= reflectivity <= 1.0:
        raise OutOfRange(f"reflectivity must lie in [0, 1], got {reflectivity}")
    i1, i2, o1, o2 = _check_ports(in_ports, out_ports)
    t = math.sqrt(1.0 - reflectivity)
    r = 1j * math.sqrt(reflectivity)
    images = {}
    for b in _bins(bins):
        for pol in POLARIZATIONS:
            images[ModeLabel(i1, pol, b)] = ((ModeLabel(o1, pol, b), t), (ModeLabel(o2, pol, b), r))
            images[ModeLabel(i2, pol, b)] = ((ModeLabel(o1, pol, b), r), (ModeLabel(o2, pol, b), t))
    return ModeMap(images)


def compose(maps: Sequence[ModeMap]) -> ModeMap:
    """Apply ``maps[0]`` first, then ``maps[1]``, and so on."""
    maps = list(maps)
    if not maps:
        raise ValueError("compose needs at least one map")
    out = {src: dict(img) for src, img in maps[0].images.items()}
    for prev, nxt in zip(maps, maps[1:]):
        if set(prev.codomain) != set(nxt.domain):
            raise UniverseMismatch("output modes of one map must equal the input modes of the next")
        new = {}
        for src, img in out.items():
            acc: dict[ModeLabel, complex] = {}
            for mid, c in img.items():
                for dst, d in nxt.images[mid]:
                    acc[dst] = acc.get(dst, 0j) + c * d
            new[src] = acc
        out = new
    return ModeMap({src: tuple(img.items()) for src, img in out.items()})
