import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import permanent_amplitude
from trhom.errors import DuplicatePorts, NonUnitaryMap, OutOfRange, UniverseMismatch, UnknownPort
from trhom.fock import FockKet, ModeLabel, ModePattern, OperatorPoly, apply_to_vacuum, occupation_probability, substitute
from trhom.optics import (
    ModeMap,
    bs_map,
    compose,
    identity_map,
    jones_map,
    pbs_map,
    phase_shift_map,
    waveplate_jones,
    waveplate_map,
)

H1, V1 = ModeLabel("1", "H"), ModeLabel("1", "V")
H2, V2 = ModeLabel("2", "H"), ModeLabel("2", "V")
HWP = math.pi


def image(m, mode):
    return dict(m.images[mode])


def equal_up_to_phase(a: OperatorPoly, b: OperatorPoly, tol=1e-12):
    (mono, ca), *_ = list(b)
    phase = a.coefficient(mono) / ca
    return abs(abs(phase) - 1) < tol and a.almost_equal(b * phase, tol)


class TestWaveplates:
    def test_hwp_22_5_makes_diagonal(self):
        m = waveplate_map(HWP, math.pi / 8, "1")
        out = substitute(OperatorPoly.create(H1), m)
        assert equal_up_to_phase(out, OperatorPoly.diagonal("1"))

    def test_zero_retardance_is_identity(self):
        m = waveplate_map(0.0, 0.3, "1")
        assert np.allclose(m.matrix(), np.eye(2), atol=1e-15)

    @given(st.floats(0, 2 * math.pi))
    def test_45_deg_retarder_phases_a_against_d(self, delta):
        m = waveplate_map(delta, math.pi / 4, "1")
        d = substitute(OperatorPoly.diagonal("1"), m)
        a = substitute(OperatorPoly.antidiagonal("1"), m)
        assert d.almost_equal(OperatorPoly.diagonal("1"), 1e-12)
        assert a.almost_equal(OperatorPoly.antidiagonal("1") * cmath.exp(1j * delta), 1e-12)

    def test_hwp_45_swaps(self):
        m = waveplate_map(HWP, math.pi / 4, "1")
        assert abs(abs(image(m, H1)[V1]) - 1) < 1e-15
        assert abs(abs(image(m, V1)[H1]) - 1) < 1e-15

    def test_double_half_wave_is_identity(self):
        # J(theta)^2 = 1 for any half-wave plate, so two identical HWPs cancel
        h = waveplate_map(HWP, math.pi / 8, "1")
        assert np.allclose(compose([h, h]).matrix(), np.eye(2), atol=1e-12)

    def test_two_hwps_rotate(self):
        # HWP(0) then HWP(45 deg) rotates by 90 deg: H -> V
        m = compose([waveplate_map(HWP, 0.0, "1"), waveplate_map(HWP, math.pi / 4, "1")])
        u = m.matrix()
        assert abs(abs(u[1, 0]) - 1) < 1e-12 and abs(u[0, 0]) < 1e-12

    @given(st.floats(-10, 10), st.floats(-10, 10))
    def test_jones_unitary(self, delta, theta):
        j = waveplate_jones(delta, theta)
        assert np.allclose(j.conj().T @ j, np.eye(2), atol=1e-12)

    def test_unknown_port(self):
        with pytest.raises(UnknownPort):
            waveplate_map(HWP, 0.0, "3", ports=("1", "2"))

    def test_phase_shift(self):
        m = phase_shift_map(0.7, "1", pol="V")
        assert abs(image(m, V1)[V1] - cmath.exp(0.7j)) < 1e-15
        assert image(m, H1)[H1] == 1


class TestPbs:
    def test_transmit_h(self):
        assert image(pbs_map(), H1) == {ModeLabel("1'", "H"): 1}

    def test_reflect_v_from_port_2(self):
        assert image(pbs_map(), V2) == {ModeLabel("1'", "V"): 1j}

    def test_pair_separated(self):
        s = apply_to_vacuum(substitute(OperatorPoly.create(H1) * OperatorPoly.create(V1), pbs_map()))
        k = FockKet.of({ModeLabel("1'", "H"): 1, ModeLabel("2'", "V"): 1})
        assert abs(abs(s.amplitude(k)) - 1) < 1e-15

    def test_inverse_roundtrip(self):
        p = pbs_map(bins=(0, 1))
        assert np.allclose(compose([p, p.inverse()]).matrix(), np.eye(8), atol=1e-12)

    def test_duplicate_ports(self):
        with pytest.raises(DuplicatePorts):
            pbs_map(("1", "1"))

    def test_anti_bunching(self):
        pair = (OperatorPoly.diagonal("1") ** 2 - OperatorPoly.antidiagonal("1") ** 2) / 2
        s = apply_to_vacuum(substitute(pair, pbs_map()))
        for port in ("1'", "2'"):
            assert occupation_probability(s, {ModePattern(port): 2}) < 1e-12


class TestBeamSplitter:
    def test_reflectivity_zero_routes_straight(self):
        m = bs_map(0.0)
        assert image(m, H1) == {ModeLabel("1'", "H"): 1}
        assert image(m, H2) == {ModeLabel("2'", "H"): 1}

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            bs_map(1.2)

    def test_hom_dip(self):
        p = OperatorPoly.create(H1) * OperatorPoly.create(H2)
        s = apply_to_vacuum(substitute(p, bs_map(0.5)))
        assert occupation_probability(s, {ModePattern("1'"): 1, ModePattern("2'"): 1}) < 1e-15

    def test_distinguishable_half(self):
        p = OperatorPoly.create(ModeLabel("1", "H", 0)) * OperatorPoly.create(ModeLabel("2", "H", 1))
        s = apply_to_vacuum(substitute(p, bs_map(0.5, bins=(0, 1))))
        assert abs(occupation_probability(s, {ModePattern("1'"): 1, ModePattern("2'"): 1}) - 0.5) < 1e-15

    @given(st.floats(0, 1))
    def test_permanent_oracle(self, refl):
        # one photon per input port, compare every two-photon outcome
        m = bs_map(refl, bins=(0,))
        modes_in = [H1, H2]
        modes_out = [ModeLabel("1'", "H"), ModeLabel("2'", "H")]
        u = np.array([[image(m, i).get(o, 0) for i in modes_in] for o in modes_out])
        s = apply_to_vacuum(substitute(OperatorPoly.create(H1) * OperatorPoly.create(H2), m))
        for n_out in ((2, 0), (1, 1), (0, 2)):
            k = FockKet.of({mo: c for mo, c in zip(modes_out, n_out)})
            assert abs(s.amplitude(k) - permanent_amplitude(u, (1, 1), n_out)) < 1e-12


class TestModeMap:
    def test_rejects_non_unitary(self):
        with pytest.raises(NonUnitaryMap):
            ModeMap({H1: ((H1, 2.0),)})

    def test_compose_identity(self):
        i = identity_map([H1, V1])
        assert compose([i, i]).images == i.images

    def test_compose_mismatch(self):
        with pytest.raises(UniverseMismatch):
            compose([pbs_map(), pbs_map()])

    def test_bin_diagonal(self):
        m = compose([waveplate_map(0.4, 0.2, "1", bins=(0, 1, 2)), jones_map(np.eye(2), "1", bins=(0, 1, 2))])
        for src, img in m.images.items():
            assert all(dst.bin == src.bin for dst, _ in img)

    @given(st.floats(0, 1), st.floats(0, math.pi), st.floats(0, 2 * math.pi))
    def test_composites_unitary(self, refl, theta, delta):
        ports = ("1", "2")
        chain = [
            waveplate_map(delta, theta, "1", ports=ports),
            bs_map(refl, ("1", "2"), ("3", "4")),
            pbs_map(("3", "4"), ("1'", "2'")),
        ]
        assert compose(chain).unitarity_error() < 1e-12
