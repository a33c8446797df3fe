import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import MODES4, poly_terms, random_poly, random_unitary_images
from oracles import DenseFock
from trhom.errors import NotNormalized, PhotonCapExceeded, UnmappedMode, ZeroOperator, ZeroState
from trhom.fock import (
    VACUUM,
    CreationMonomial,
    FockKet,
    ModeLabel,
    ModePattern,
    OperatorPoly,
    StateVector,
    apply_to_vacuum,
    inner_product,
    multiply,
    normalize,
    occupation_probability,
    substitute,
)
from trhom.optics import ModeMap, identity_map, pbs_map
from trhom.source import bell_state

H, V = ModeLabel("1", "H"), ModeLabel("1", "V")
aH, aV = OperatorPoly.create(H), OperatorPoly.create(V)
aD, aA = OperatorPoly.diagonal("1"), OperatorPoly.antidiagonal("1")
SQ2 = math.sqrt(2.0)


def ket(**occ):
    return FockKet.of({ModeLabel("1", pol): n for pol, n in occ.items()})


class TestMultiply:
    def test_single_term_product(self):
        p = multiply(aH, aV)
        assert p == OperatorPoly({CreationMonomial.of({H: 1, V: 1}): 1.0})

    def test_binomial(self):
        p = ((aH + aV) / SQ2) ** 2
        want = (OperatorPoly.create(H, 2) + 2 * aH * aV + OperatorPoly.create(V, 2)) / 2
        assert p.almost_equal(want, 1e-15)

    def test_anti_bunching_identity(self):
        p = (aD * aD - aA * aA) / 2
        assert len(p) == 1
        assert abs(p.coefficient(CreationMonomial.of({H: 1, V: 1})) - 1) < 1e-12

    def test_photon_cap(self):
        with pytest.raises(PhotonCapExceeded):
            multiply(OperatorPoly.create(H, 5), OperatorPoly.create(V, 4))

    def test_scalars_and_zero(self):
        assert (aH * 0).is_zero()
        assert (2 * aH - aH) == aH
        assert (OperatorPoly.scalar(3) * aH).coefficient(CreationMonomial.of({H: 1})) == 3


class TestSubstitute:
    def test_pbs_single(self):
        out = substitute(aH, pbs_map())
        assert out == OperatorPoly.create(ModeLabel("1'", "H"))

    def test_pbs_pair_splits(self):
        out = substitute(aH * aV, pbs_map())
        (mono, c), = list(out)
        assert mono == CreationMonomial.of({ModeLabel("1'", "H"): 1, ModeLabel("2'", "V"): 1})
        assert abs(abs(c) - 1) < 1e-15

    def test_identity(self):
        p = (aH * aH + 3j * aV) / 2
        assert substitute(p, identity_map([H, V])) == p

    def test_unmapped(self):
        with pytest.raises(UnmappedMode):
            substitute(aH, identity_map([V]))


class TestApplyToVacuum:
    def test_single_photon(self):
        s = apply_to_vacuum(aH)
        assert s.amplitude(ket(H=1)) == 1

    def test_diagonal_pair(self):
        s = apply_to_vacuum(aD * aD)
        assert abs(s.amplitude(ket(H=2)) - SQ2 / 2) < 1e-15
        assert abs(s.amplitude(ket(V=2)) - SQ2 / 2) < 1e-15
        assert abs(s.amplitude(ket(H=1, V=1)) - 1) < 1e-15
        assert abs(s.norm() - SQ2) < 1e-14

    def test_anti_bunched_pair(self):
        s = apply_to_vacuum((aD * aD - aA * aA) / 2)
        assert len(s) == 1 and abs(s.amplitude(ket(H=1, V=1)) - 1) < 1e-12
        assert abs(s.norm() - 1) < 1e-12

    def test_zero_operator(self):
        with pytest.raises(ZeroOperator):
            apply_to_vacuum(OperatorPoly.zero())

    def test_scalar_is_vacuum(self):
        assert apply_to_vacuum(OperatorPoly.scalar(1)).amplitude(VACUUM) == 1


class TestInnerAndNormalize:
    def test_orthonormal(self):
        h, v = apply_to_vacuum(aH), apply_to_vacuum(aV)
        assert inner_product(h, h) == 1
        assert inner_product(h, v) == 0

    def test_factorial_bookkeeping(self):
        s = apply_to_vacuum(OperatorPoly.create(H, 2) / SQ2)
        assert abs(inner_product(s, s) - 1) < 1e-15

    def test_normalize(self):
        s = normalize(StateVector.basis(ket(H=1), 2.0))
        assert s.amplitude(ket(H=1)) == 1

    def test_normalize_difference(self):
        two_d = normalize(apply_to_vacuum(aD * aD))
        two_a = normalize(apply_to_vacuum(aA * aA))
        s = normalize(two_d - two_a)
        assert abs(s.norm() - 1) < 1e-15
        assert abs(abs(inner_product(s, two_d)) - 1 / SQ2) < 1e-12

    def test_zero_state(self):
        with pytest.raises(ZeroState):
            normalize(StateVector())


class TestOccupation:
    def test_exact_ket(self):
        s = apply_to_vacuum(aH * aV)
        assert occupation_probability(s, ket(H=1, V=1)) == 1.0

    def test_bunched_has_no_split(self):
        pair = (OperatorPoly.create(H, 2) + OperatorPoly.create(V, 2)) / 2
        s = apply_to_vacuum(substitute(pair, pbs_map()))
        pattern = {ModePattern("1'"): 1, ModePattern("2'"): 1}
        assert occupation_probability(s, pattern) == 0.0

    def test_bell_component(self):
        k = FockKet.of({ModeLabel("1'", "H"): 1, ModeLabel("2'", "V"): 1})
        assert abs(occupation_probability(bell_state(), k) - 0.5) < 1e-15

    def test_bin_wildcard(self):
        a = FockKet.of({ModeLabel("1'", "H", 0): 1, ModeLabel("2'", "V", 0): 1})
        b = FockKet.of({ModeLabel("1'", "H", 3): 1, ModeLabel("2'", "V", 3): 1})
        s = StateVector({a: 0.6, b: 0.8})
        assert abs(occupation_probability(s, {ModePattern("1'", "H"): 1, ModePattern("2'", "V"): 1}) - 1) < 1e-15
        assert abs(occupation_probability(s, {ModeLabel("1'", "H", 3): 1, ModeLabel("2'", "V", 3): 1}) - 0.64) < 1e-15

    def test_requires_normalized(self):
        with pytest.raises(NotNormalized):
            occupation_probability(StateVector.basis(ket(H=1), 2.0), ket(H=1))


# properties ---------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)


@given(seeds)
def test_commutativity(seed):
    rng = np.random.default_rng(seed)
    a, b = random_poly(rng, max_photons=3), random_poly(rng, max_photons=3)
    assert multiply(a, b) == multiply(b, a)


@given(seeds)
def test_norm_preserved_under_unitary(seed):
    rng = np.random.default_rng(seed)
    p = random_poly(rng)
    _, images = random_unitary_images(rng)
    before = apply_to_vacuum(p).norm()
    after = apply_to_vacuum(substitute(p, ModeMap(images))).norm()
    assert abs(before - after) < 1e-10 * max(1.0, before)


@given(seeds)
def test_substitute_keeps_degrees(seed):
    rng = np.random.default_rng(seed)
    p = random_poly(rng)
    _, images = random_unitary_images(rng)
    q = substitute(p, ModeMap(images))
    assert q.degrees() <= p.degrees()
    # each homogeneous part maps to a homogeneous part of the same degree
    for d in p.degrees():
        part = OperatorPoly({m: c for m, c in p if m.degree == d})
        assert substitute(part, ModeMap(images)).degrees() <= {d}


@given(seeds)
def test_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    fock = DenseFock(MODES4, 5)
    p, q = random_poly(rng), random_poly(rng)
    sp, sq = apply_to_vacuum(p), apply_to_vacuum(q)
    dp, dq = fock.apply_poly_terms(poly_terms(p)), fock.apply_poly_terms(poly_terms(q))
    assert np.max(np.abs(fock.from_state(sp) - dp)) < 1e-10
    assert abs(inner_product(sp, sq) - np.vdot(dp, dq)) < 1e-10


@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_linear_polarization_unit_norm(t1, t2):
    a = OperatorPoly.linear_polarization("1", t1)
    b = OperatorPoly.linear_polarization("1", t2)
    ov = inner_product(apply_to_vacuum(a), apply_to_vacuum(b))
    assert abs(ov - math.cos(t1 - t2)) < 1e-12


def test_module_examples():
    import doctest

    import trhom.fock

    assert doctest.testmod(trhom.fock).failed == 0
