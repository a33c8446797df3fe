"""Sparse algebra of bosonic creation operators and the Fock states they make.

Creation operators on distinct modes commute, so a product of them is fully
described by a sorted tuple of ``(mode, exponent)`` pairs.  Polynomials map
those monomials to complex coefficients; states map occupation patterns to
amplitudes.  Every value here is immutable.

Diagonal and anti-diagonal polarizations are not modes of their own.  They
are built on the fly from H and V::

    >>> d = OperatorPoly.diagonal("1")
    >>> a = OperatorPoly.antidiagonal("1")
    >>> hv = OperatorPoly.create(ModeLabel("1", "H")) * OperatorPoly.create(ModeLabel("1", "V"))
    >>> ((d * d - a * a) / 2).almost_equal(hv)
    True
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from types import MappingProxyType
from typing import TYPE_CHECKING, Union

from .errors import (
    NotNormalized,
    PhotonCapExceeded,
    UnmappedMode,
    ZeroOperator,
    ZeroState,
)

if TYPE_CHECKING:
    from .optics import ModeMap

PRUNE_TOL = 1e-14
MAX_PHOTONS = 8
POLARIZATIONS = ("H", "V")
_SQRT_HALF = math.sqrt(0.5)

Number = Union[int, float, complex]


@dataclass(frozen=True, order=True)
class ModeLabel:
    """One bosonic mode: spatial port, polarization and spectro-temporal bin."""

    port: str
    pol: str
    bin: int = 0

    def __post_init__(self):
        if not isinstance(self.port, str):
            object.__setattr__(self, "port", str(self.port))
        if self.pol not in POLARIZATIONS:
            raise ValueError(f"polarization must be 'H' or 'V', got {self.pol!r}")
        if int(self.bin) != self.bin or self.bin < 0:
            raise ValueError(f"bin must be a non-negative integer, got {self.bin!r}")

    def __str__(self):
        return f"{self.pol}{self.port}[{self.bin}]"


def _canonical(powers: Iterable[tuple[ModeLabel, int]]) -> tuple[tuple[ModeLabel, int], ...]:
    merged: dict[ModeLabel, int] = {}
    for mode, n in powers:
        merged[mode] = merged.get(mode, 0) + int(n)
    return tuple(sorted((m, n) for m, n in merged.items() if n))


@dataclass(frozen=True)
class CreationMonomial:
    """Product of creation operators, stored as sorted ``(mode, exponent)`` pairs."""

    powers: tuple[tuple[ModeLabel, int], ...] = ()

    @classmethod
    def of(cls, powers: Mapping[ModeLabel, int] | Iterable[tuple[ModeLabel, int]] = ()) -> CreationMonomial:
        if isinstance(powers, Mapping):
            powers = powers.items()
        powers = list(powers)
        if any(n < 0 for _, n in powers):
            raise ValueError("exponents must be non-negative")
        return cls(_canonical(powers))

    @property
    def degree(self) -> int:
        return sum(n for _, n in self.powers)

    def modes(self) -> tuple[ModeLabel, ...]:
        return tuple(m for m, _ in self.powers)

    def __mul__(self, other: CreationMonomial) -> CreationMonomial:
        return CreationMonomial(_canonical(self.powers + other.powers))

    def __str__(self):
        if not self.powers:
            return "1"
        return " ".join(f"a+{m}" + (f"^{n}" if n > 1 else "") for m, n in self.powers)


ONE = CreationMonomial()


def _pruned(terms: Mapping, tol: float = PRUNE_TOL) -> dict:
    return {k: complex(v) for k, v in terms.items() if abs(v) >= tol}


class OperatorPoly:
    """Complex-weighted polynomial in commuting creation operators.

    Supports ``+``, ``-``, ``*`` (by another polynomial or a scalar), ``/``
    by a scalar and non-negative integer powers.  Coefficients smaller than
    ``PRUNE_TOL`` are dropped after every operation.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[CreationMonomial, Number] | None = None):
        self._terms = _pruned(terms or {})

    # constructors
    @classmethod
    def zero(cls) -> OperatorPoly:
        return cls()

    @classmethod
    def scalar(cls, c: Number) -> OperatorPoly:
        return cls({ONE: c})

    @classmethod
    def create(cls, mode: ModeLabel, power: int = 1) -> OperatorPoly:
        return cls({CreationMonomial.of([(mode, power)]): 1.0})

    @classmethod
    def _pair(cls, port, bin, ch, cv):
        return cls(
            {
                CreationMonomial.of([(ModeLabel(port, "H", bin), 1)]): ch,
                CreationMonomial.of([(ModeLabel(port, "V", bin), 1)]): cv,
            }
        )

    @classmethod
    def linear_polarization(cls, port: str, theta: float, bin: int = 0) -> OperatorPoly:
        """``cos(theta) a+_H + sin(theta) a+_V`` on one port and bin."""
        return cls._pair(port, bin, math.cos(theta), math.sin(theta))

    @classmethod
    def diagonal(cls, port: str, bin: int = 0) -> OperatorPoly:
        """a+_D = (a+_H + a+_V)/sqrt(2)."""
        return cls._pair(port, bin, _SQRT_HALF, _SQRT_HALF)

    @classmethod
    def antidiagonal(cls, port: str, bin: int = 0) -> OperatorPoly:
        """a+_A = (a+_H - a+_V)/sqrt(2)."""
        return cls._pair(port, bin, _SQRT_HALF, -_SQRT_HALF)

    # accessors
    @property
    def terms(self) -> Mapping[CreationMonomial, complex]:
        return MappingProxyType(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def modes(self) -> frozenset[ModeLabel]:
        return frozenset(m for mono in self._terms for m in mono.modes())

    def degrees(self) -> frozenset[int]:
        return frozenset(mono.degree for mono in self._terms)

    def coefficient(self, mono: CreationMonomial) -> complex:
        return self._terms.get(mono, 0j)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    # arithmetic
    def __add__(self, other):
        other = _as_poly(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, 0j) + v
        return OperatorPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return OperatorPoly({k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        other = _as_poly(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, OperatorPoly):
            return multiply(self, other)
        if isinstance(other, (int, float, complex)):
            return OperatorPoly({k: v * other for k, v in self._terms.items()})
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, complex)):
            return self * (1.0 / other)
        return NotImplemented

    def __pow__(self, n: int):
        if n < 0 or int(n) != n:
            raise ValueError("only non-negative integer powers are defined")
        out = OperatorPoly.scalar(1.0)
        for _ in range(n):
            out = multiply(out, self)
        return out

    def __eq__(self, other):
        other = _as_poly(other)
        if other is NotImplemented:
            return other
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def almost_equal(self, other: OperatorPoly, tol: float = 1e-12) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.coefficient(k) - other.coefficient(k)) <= tol for k in keys)

    def __repr__(self):
        if not self._terms:
            return "OperatorPoly(0)"
        body = " + ".join(f"({c:.6g}) {m}" for m, c in sorted(self._terms.items(), key=lambda kv: kv[0].powers))
        return f"OperatorPoly({body})"


def _as_poly(x):
    if isinstance(x, OperatorPoly):
        return x
    if isinstance(x, (int, float, complex)):
        return OperatorPoly.scalar(x)
    return NotImplemented


def multiply(a: OperatorPoly, b: OperatorPoly) -> OperatorPoly:
    """Distributive product of two polynomials."""
    out: dict[CreationMonomial, complex] = {}
    for ma, ca in a._terms.items():
        for mb, cb in b._terms.items():
            m = ma * mb
            if m.degree > MAX_PHOTONS:
                raise PhotonCapExceeded(f"product has degree {m.degree} > {MAX_PHOTONS}")
            out[m] = out.get(m, 0j) + ca * cb
    return OperatorPoly(out)


def substitute(p: OperatorPoly, m: ModeMap) -> OperatorPoly:
    """Replace every creation operator by its linear image under ``m``."""
    images: dict[ModeLabel, OperatorPoly] = {}
    for mode in p.modes():
        if mode not in m.images:
            raise UnmappedMode(f"mode {mode} is outside the map's domain")
        images[mode] = OperatorPoly(
            {CreationMonomial.of([(lab, 1)]): c for lab, c in m.images[mode]}
        )
    powers_cache: dict[tuple[ModeLabel, int], OperatorPoly] = {}

    def power(mode, n):
        key = (mode, n)
        if key not in powers_cache:
            powers_cache[key] = images[mode] ** n
        return powers_cache[key]

    acc: dict[CreationMonomial, complex] = {}
    for mono, c in p._terms.items():
        term = OperatorPoly.scalar(c)
        for mode, n in mono.powers:
            term = multiply(term, power(mode, n))
        for k, v in term._terms.items():
            acc[k] = acc.get(k, 0j) + v
    out = OperatorPoly(acc)
    return out


@dataclass(frozen=True, order=True)
class FockKet:
    """Occupation pattern; zero counts are never stored."""

    occupations: tuple[tuple[ModeLabel, int], ...] = ()

    @classmethod
    def of(cls, occ: Mapping[ModeLabel, int] | Iterable[tuple[ModeLabel, int]] = ()) -> FockKet:
        if isinstance(occ, Mapping):
            occ = occ.items()
        occ = list(occ)
        if any(n < 0 for _, n in occ):
            raise ValueError("occupations must be non-negative")
        return cls(_canonical(occ))

    @property
    def photon_number(self) -> int:
        return sum(n for _, n in self.occupations)

    def count(self, mode: ModeLabel) -> int:
        for m, n in self.occupations:
            if m == mode:
                return n
        return 0

    def modes(self) -> tuple[ModeLabel, ...]:
        return tuple(m for m, _ in self.occupations)

    def __str__(self):
        if not self.occupations:
            return "|vac>"
        return "|" + ", ".join(f"{n}_{m}" for m, n in self.occupations) + ">"


VACUUM = FockKet()


class StateVector:
    """Sparse pure state: ``FockKet -> complex amplitude``.

    ``universe`` records the set of modes the state is declared over.  When
    omitted it is the set of modes appearing in the kets.
    """

    __slots__ = ("_amps", "_universe")

    def __init__(self, amps: Mapping[FockKet, Number] | None = None, universe: Iterable[ModeLabel] | None = None):
        self._amps = _pruned(amps or {})
        used = frozenset(m for k in self._amps for m in k.modes())
        if universe is None:
            self._universe = used
        else:
            self._universe = frozenset(universe)
            missing = used - self._universe
            if missing:
                raise ValueError(f"kets use modes outside the declared universe: {sorted(missing)}")

    @classmethod
    def basis(cls, ket: FockKet | Mapping[ModeLabel, int], amplitude: Number = 1.0) -> StateVector:
        if not isinstance(ket, FockKet):
            ket = FockKet.of(ket)
        return cls({ket: amplitude})

    @property
    def amps(self) -> Mapping[FockKet, complex]:
        return MappingProxyType(self._amps)

    @property
    def universe(self) -> frozenset[ModeLabel]:
        return self._universe

    def amplitude(self, ket: FockKet) -> complex:
        return self._amps.get(ket, 0j)

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self._amps.values()))

    def is_zero(self) -> bool:
        return not self._amps

    def photon_numbers(self) -> frozenset[int]:
        return frozenset(k.photon_number for k in self._amps)

    def __len__(self):
        return len(self._amps)

    def __iter__(self):
        return iter(self._amps.items())

    def __add__(self, other: StateVector) -> StateVector:
        out = dict(self._amps)
        for k, v in other._amps.items():
            out[k] = out.get(k, 0j) + v
        return StateVector(out, self._universe | other._universe)

    def __sub__(self, other: StateVector) -> StateVector:
        return self + (-1.0) * other

    def __mul__(self, c: Number) -> StateVector:
        if not isinstance(c, (int, float, complex)):
            return NotImplemented
        return StateVector({k: v * c for k, v in self._amps.items()}, self._universe)

    __rmul__ = __mul__

    def __truediv__(self, c: Number) -> StateVector:
        return self * (1.0 / c)

    def project(self, keep) -> StateVector:
        """Keep only kets for which ``keep(ket)`` is true (no renormalization)."""
        return StateVector({k: v for k, v in self._amps.items() if keep(k)}, self._universe)

    def __repr__(self):
        if not self._amps:
            return "StateVector(0)"
        body = " + ".join(f"({a:.6g}){k}" for k, a in sorted(self._amps.items()))
        return f"StateVector({body})"


def apply_to_vacuum(p: OperatorPoly) -> StateVector:
    """Act with ``p`` on the vacuum, including the sqrt(n!) factors."""
    if p.is_zero():
        raise ZeroOperator("cannot apply the zero polynomial")
    amps: dict[FockKet, complex] = {}
    universe = set()
    for mono, c in p:
        if mono.degree > MAX_PHOTONS:
            raise PhotonCapExceeded(f"monomial creates {mono.degree} photons > {MAX_PHOTONS}")
        factor = 1.0
        for _, n in mono.powers:
            factor *= math.sqrt(math.factorial(n))
        ket = FockKet(mono.powers)
        amps[ket] = amps.get(ket, 0j) + c * factor
        universe.update(mono.modes())
    return StateVector(amps, universe)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if len(a._amps) > len(b._amps):
        return sum(av.conjugate() * b._amps[k] for k, av in a._amps.items() if k in b._amps) + 0j
    return sum(a._amps[k].conjugate() * bv for k, bv in b._amps.items() if k in a._amps) + 0j


def normalize(s: StateVector) -> StateVector:
    n = s.norm()
    if n == 0.0:
        raise ZeroState("cannot normalize the zero state")
    return s / n


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2 for normalized pure states."""
    return abs(inner_product(a, b)) ** 2


@dataclass(frozen=True)
class ModePattern:
    """Selects modes by port and, optionally, polarization and bin.

    A field left as ``None`` is a wildcard, so ``ModePattern("1'", "H")``
    matches the horizontal mode of port 1' in every bin.
    """

    port: str | None = None
    pol: str | None = None
    bin: int | None = None

    def matches(self, mode: ModeLabel) -> bool:
        return (
            (self.port is None or self.port == mode.port)
            and (self.pol is None or self.pol == mode.pol)
            and (self.bin is None or self.bin == mode.bin)
        )


def occupation_probability(
    s: StateVector,
    pattern: FockKet | Mapping[ModePattern | ModeLabel, int],
) -> float:
    """Probability that a measurement finds the occupations in ``pattern``.

    With a :class:`FockKet` the match is exact.  With a mapping from
    :class:`ModePattern` to counts, photons are pooled over each pattern's
    wildcards (this is how bins are traced out) and a ket matches when every
    pattern gets its count and no photon falls outside all patterns.
    """
    n = s.norm()
    if abs(n - 1.0) > 1e-9:
        raise NotNormalized(f"state norm is {n:.12g}, expected 1")
    if isinstance(pattern, FockKet):
        return abs(s.amplitude(pattern)) ** 2

    keys = []
    for key in pattern:
        if isinstance(key, ModeLabel):
            key = ModePattern(key.port, key.pol, key.bin)
        keys.append(key)
    wanted = list(pattern.values())
    total_wanted = sum(wanted)

    prob = 0.0
    for ket, amp in s:
        if ket.photon_number != total_wanted:
            continue
        got = [0] * len(keys)
        for mode, cnt in ket.occupations:
            hits = [i for i, key in enumerate(keys) if key.matches(mode)]
            if len(hits) > 1:
                raise ValueError(f"mode {mode} matches more than one pattern entry")
            if hits:
                got[hits[0]] += cnt
        if got == wanted:
            prob += abs(amp) ** 2
    return min(prob, 1.0)
