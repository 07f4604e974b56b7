import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import REFERENCE_SEGMENTS
from oracles import rk4_s_matrix, square_well_s0
from resonances.errors import DomainError
from resonances.poles import bound_state_count
from resonances.radial import Kinematics, PotentialSpec, cross_section, energy_from_momentum, \
    jost_denominator, lifetime_from_width, partial_wave, phase_shift, s_matrix

K_GRID = np.linspace(0.1, 10, 200)


def potentials():
    seg = st.tuples(st.floats(0.05, 0.8), st.floats(-40, 80))
    return st.lists(seg, min_size=1, max_size=4).map(_cumulative)


def _cumulative(pieces):
    r = 0.0
    out = []
    for w, v in pieces:
        r += w
        out.append((r, v))
    return PotentialSpec(tuple(out))


# --- potential definition -----------------------------------------------------------

def test_potential_validation():
    with pytest.raises(DomainError):
        PotentialSpec(((1.0, 0.0), (0.5, 1.0)))
    with pytest.raises(DomainError):
        PotentialSpec(((1.0, math.nan),))
    with pytest.raises(DomainError):
        PotentialSpec(((0.0, 1.0),))


def test_potential_evaluation():
    pot = PotentialSpec.well_barrier(15, 1.3, 60, 1.6)
    assert pot.segments == REFERENCE_SEGMENTS
    assert pot(np.array([0.0, 1.0, 1.3, 1.5, 2.0])).tolist() == [-15, -15, -15, 60, 0]
    assert pot.radius == 1.6
    assert PotentialSpec().is_free and PotentialSpec().radius == 0.0


def test_kinematics_and_units():
    kin = Kinematics.from_energy(-4.0)
    assert kin.k == 2j
    assert Kinematics.from_momentum(3).E == 9
    assert energy_from_momentum(3.0) == 9.0
    assert energy_from_momentum(2.0, hbar=2.0, mass=2.0) == pytest.approx(4.0)
    assert lifetime_from_width(0.5) == 2.0


# --- S-matrix ----------------------------------------------------------------------

def test_free_particle():
    pot = PotentialSpec()
    assert np.all(s_matrix(pot, 2, K_GRID) == 1)
    assert np.all(phase_shift(pot, 0, K_GRID) == 0)
    assert np.all(cross_section(pot, 3, K_GRID ** 2).total == 0)


def test_square_well_closed_form():
    pot = PotentialSpec.square_well(4.0, 1.0)
    assert np.abs(s_matrix(pot, 0, K_GRID) - square_well_s0(4.0, 1.0, K_GRID)).max() < 1e-13


def test_repulsive_step_closed_form():
    # deep barrier: the evanescent interior exercises the growing/decaying basis
    for height in (50.0, 1e4):
        pot = PotentialSpec(((1.0, height),))
        k = np.linspace(0.1, 5, 40)
        assert np.abs(s_matrix(pot, 0, k) - square_well_s0(-height, 1.0, k)).max() < 1e-12


def test_hard_sphere_limit():
    pot = PotentialSpec(((1.0, 1e6),))
    k = np.linspace(0.1, 3, 10)
    # delta_0 -> -kR as the wall becomes impenetrable
    assert np.abs(phase_shift(pot, 0, k) + k).max() < 2 * k.max() / 1e3


@pytest.mark.parametrize("l", [0, 1, 2, 3])
def test_against_rk4(l):
    k = np.linspace(0.2, 8, 25)
    ref = rk4_s_matrix(REFERENCE_SEGMENTS, l, k)
    got = s_matrix(PotentialSpec(REFERENCE_SEGMENTS), l, k)
    assert np.abs(got - ref).max() < 1e-8


def test_three_segment_against_rk4():
    segs = ((0.5, 10.0), (1.1, -25.0), (1.4, 30.0))
    k = np.linspace(0.3, 6, 20)
    for l in (0, 2):
        assert np.abs(s_matrix(PotentialSpec(segs), l, k) - rk4_s_matrix(segs, l, k)).max() < 1e-8


@settings(max_examples=40, deadline=None)
@given(pot=potentials(), l=st.integers(0, 4))
def test_unitarity_property(pot, l):
    S = s_matrix(pot, l, K_GRID)
    assert np.abs(np.abs(S) - 1).max() < 1e-10


@settings(max_examples=30, deadline=None)
@given(pot=potentials(), l=st.integers(0, 3),
       re=st.floats(0.2, 6), im=st.floats(-0.8, 0.8))
def test_analytic_symmetries(pot, l, re, im):
    k = complex(re, im)
    S = complex(s_matrix(pot, l, k))
    if not (1e-6 < abs(S) < 1e6):
        return
    # S(k) S(-k) = 1 and S(k) conj(S(conj k)) = 1 for a real potential
    assert abs(S * s_matrix(pot, l, -k) - 1) < 1e-8
    assert abs(S * np.conj(s_matrix(pot, l, k.conjugate())) - 1) < 1e-8


def test_jost_denominator_scalar_and_vector():
    pot = PotentialSpec(REFERENCE_SEGMENTS)
    vec = jost_denominator(pot, 1, np.array([1.0, 2.0 - 0.1j]))
    assert vec.shape == (2,)
    assert jost_denominator(pot, 1, 2.0 - 0.1j) == pytest.approx(vec[1], rel=1e-15)
    assert np.all(jost_denominator(PotentialSpec(), 0, [1.0, 2.0]) == 1)


def test_threshold_and_bad_l_rejected():
    pot = PotentialSpec(REFERENCE_SEGMENTS)
    with pytest.raises(DomainError):
        s_matrix(pot, 0, 0.0)
    with pytest.raises(DomainError):
        s_matrix(pot, 1.5, 1.0)
    with pytest.raises(DomainError):
        phase_shift(pot, 0, [-1.0])


def test_vanishing_local_momentum_is_perturbed():
    pot = PotentialSpec(((1.0, 4.0), (2.0, -3.0)))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        S = s_matrix(pot, 0, 2.0)
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)
    assert abs(abs(S) - 1) < 1e-10
    # continuous through the perturbed point
    assert abs(S - s_matrix(pot, 0, 2.0 + 1e-6)) < 1e-4


# --- phase shifts and cross sections -------------------------------------------------

def test_levinson(reference_potential):
    nb = bound_state_count(reference_potential, 0)
    assert nb == 1
    d0 = phase_shift(reference_potential, 0, np.array([1e-3, 300.0]))
    assert abs(d0[0]) < 0.01
    assert d0[0] - d0[1] == pytest.approx(nb * math.pi, abs=0.01)


def test_phase_jumps_through_resonance(reference_potential):
    # pole term 2 atan(dk / |Im k_pole|) plus a slowly falling background
    k_res, half, dk = 2.1197, 0.0077, 0.05
    d = phase_shift(reference_potential, 0, np.array([k_res - dk, k_res + dk]))
    jump = d[1] - d[0]
    assert jump < 2 * math.atan(dk / half)
    assert jump == pytest.approx(2 * math.atan(dk / half), abs=0.2)


def test_phase_consistent_with_s(reference_potential):
    k = np.linspace(0.3, 6, 30)
    d = phase_shift(reference_potential, 2, k)
    assert np.abs(np.exp(2j * d) - s_matrix(reference_potential, 2, k)).max() < 1e-12


def test_cross_section_from_phase(reference_potential):
    E = np.linspace(0.5, 9, 25)
    tab = cross_section(reference_potential, 2, E)
    k = np.sqrt(E)
    for l in range(3):
        d = phase_shift(reference_potential, l, k)
        ref = 4 * np.pi / k ** 2 * (2 * l + 1) * np.sin(d) ** 2
        assert np.allclose(tab.partial[:, l], ref, rtol=1e-12, atol=1e-14)
    assert np.allclose(tab.total, tab.partial.sum(axis=1))
    assert tab.l_max == 2


def test_cross_section_errors(reference_potential):
    with pytest.raises(DomainError):
        cross_section(reference_potential, 2, [])
    with pytest.raises(DomainError):
        cross_section(reference_potential, 2, [1.0, -1.0])


def test_partial_wave_record(reference_potential):
    rec = partial_wave(reference_potential, 0, 1.5)
    assert abs(abs(rec.s_matrix) - 1) < 1e-12
    assert rec.cross_section_l == pytest.approx(4 * np.pi / 1.5 ** 2 * math.sin(rec.phase_shift) ** 2)
    off = partial_wave(reference_potential, 0, 1.5 - 0.1j)
    assert math.isnan(off.phase_shift)
