import math

import numpy as np
import pytest

from oracles import square_well_bound_energy
from resonances import poles as poles_mod
from resonances.errors import ConsistencyError, DomainError
from resonances.numerics import ComplexRegion, count_zeros
from resonances.poles import PoleKind, PoleRecord, bound_state_count, classify, find_poles, \
    pole_to_breit_wigner
from resonances.radial import PotentialSpec, jost_denominator, s_matrix

WIDE = ComplexRegion(-4.1, 4.3, -0.6, 4.2)


def test_classify_examples():
    assert classify(2j) is PoleKind.BOUND
    assert classify(-0.5j) is PoleKind.VIRTUAL
    assert classify(1.0 - 0.1j) is PoleKind.RESONANCE
    assert classify(-1.0 - 0.1j) is PoleKind.RESONANCE
    with pytest.raises(DomainError):
        classify(1.0 + 1e-12j)
    with pytest.raises(DomainError):
        classify(1.0 + 0.5j)


def test_breit_wigner_mapping():
    rec = PoleRecord(2 - 0.01j, (2 - 0.01j) ** 2, PoleKind.RESONANCE, 0.0, 0)
    E0, gamma = pole_to_breit_wigner(rec)
    assert E0 == pytest.approx(4 - 1e-4)
    assert gamma == pytest.approx(0.08)
    bound = PoleRecord(1j, -1 + 0j, PoleKind.BOUND, 0.0, 0)
    with pytest.raises(DomainError):
        pole_to_breit_wigner(bound)


def test_free_particle_has_no_poles():
    assert find_poles(PotentialSpec(), 0, WIDE) == []


@pytest.mark.parametrize("depth,n_expected", [(4.0, 1), (30.0, 2), (60.0, 2), (100.0, 3)])
def test_square_well_bound_states(depth, n_expected):
    # l = 0 bound states of a well of radius 1: floor(sqrt(V)/pi + 1/2)
    pot = PotentialSpec.square_well(depth, 1.0)
    region = ComplexRegion(-0.31, 0.3, 0.01, math.sqrt(depth) + 0.5)
    found = find_poles(pot, 0, region)
    assert len(found) == n_expected == math.floor(math.sqrt(depth) / math.pi + 0.5)
    assert all(p.kind is PoleKind.BOUND for p in found)
    assert bound_state_count(pot, 0) == n_expected


def test_bound_energy_matches_bisection():
    pot = PotentialSpec.square_well(4.0, 1.0)
    [p] = find_poles(pot, 0, ComplexRegion(-0.31, 0.3, 0.01, 3.0))
    E_ref = square_well_bound_energy(4.0, 1.0, 1e-6, 2.0 - 1e-9)
    assert p.E_pole.real == pytest.approx(E_ref, abs=1e-12)
    assert p.E_pole.imag == 0.0 and p.k_pole.real == 0.0


def test_reference_resonance_pair(reference_potential):
    found = find_poles(reference_potential, 0, WIDE)
    kinds = [p.kind for p in found]
    assert kinds.count(PoleKind.BOUND) == 1
    res = [p for p in found if p.kind is PoleKind.RESONANCE]
    assert len(res) == 2
    left, right = sorted(res, key=lambda p: p.k_pole.real)
    assert abs(left.k_pole + right.k_pole.conjugate()) < 1e-10
    assert right.E_pole.imag < 0
    assert all(p.residual < 1e-10 for p in found)


def test_resonance_is_modulus_peak_of_s(reference_potential):
    # grid scan of |S| in the lower half plane peaks at the Newton pole
    [p] = find_poles(reference_potential, 0, ComplexRegion(1.0, 3.0, -0.3, -1e-4))
    re = np.linspace(p.k_pole.real - 0.02, p.k_pole.real + 0.02, 81)
    im = np.linspace(p.k_pole.imag - 0.005, p.k_pole.imag + 0.005, 81)
    K = re[None, :] + 1j * im[:, None]
    mod = np.abs(s_matrix(reference_potential, 0, K))
    i, j = np.unravel_index(np.argmax(mod), mod.shape)
    assert abs(K[i, j] - p.k_pole) < 1e-3
    assert abs(jost_denominator(reference_potential, 0, p.k_pole)) < 1e-12


def test_virtual_state():
    # well too shallow to bind (K a < pi/2) leaves a virtual state
    pot = PotentialSpec.square_well(2.0, 1.0)
    region = ComplexRegion(-0.31, 0.3, -2.0, 1.5)
    found = find_poles(pot, 0, region)
    assert [p.kind for p in found] == [PoleKind.VIRTUAL]
    assert found[0].k_pole.imag < 0 and found[0].E_pole.imag == 0


def test_higher_partial_wave_resonance(reference_potential):
    region = ComplexRegion(0.5, 5.0, -1.0, -1e-3)
    found = find_poles(reference_potential, 1, region)
    assert len(found) >= 1
    assert len(found) == count_zeros(lambda k: jost_denominator(reference_potential, 1, k),
                                     region)
    assert all(p.kind is PoleKind.RESONANCE and p.partial_wave == 1 for p in found)


def test_ordering_is_deterministic(reference_potential):
    found = find_poles(reference_potential, 0, WIDE)
    keys = [(p.k_pole.real, p.k_pole.imag) for p in found]
    assert keys == sorted(keys)


def test_count_mismatch_raises(reference_potential, monkeypatch):
    monkeypatch.setattr(poles_mod._Search, "resolve", lambda self, *a: None)
    with pytest.raises(ConsistencyError) as info:
        find_poles(reference_potential, 0, WIDE)
    assert info.value.diagnostics["winding"] == 3


def test_narrower_barrier_narrower_resonance(reference_potential, narrow_potential):
    region = ComplexRegion(1.0, 3.0, -0.3, -1e-4)
    [a] = find_poles(reference_potential, 0, region)
    [b] = find_poles(narrow_potential, 0, region)
    assert pole_to_breit_wigner(b)[1] < pole_to_breit_wigner(a)[1]
