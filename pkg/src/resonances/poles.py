"""S-matrix poles in the complex momentum plane.

Bound states sit on the positive imaginary k axis, virtual states on the
negative imaginary axis, and resonances in the lower half plane in
mirror pairs (k, -conj(k)).  Poles are found as zeros of the Jost-type
denominator (not of 1/S, which would also see the zeros of S), seeded
from a modulus grid, refined by Newton, and certified against the
argument-principle count of the same region.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConsistencyError, ConvergenceError, DomainError, NumericalError
from .numerics import ComplexRegion, ROOT_TOL, count_zeros, newton_complex
from .radial import PotentialSpec, jost_denominator

DEAD_BAND = 1e-10
SEED_GRID = 40
# quadrant split point as a fraction of the region; off-centre so that a
# split line does not run along a symmetry axis of the pole pattern
_SPLIT = 0.4871


class PoleKind(str, Enum):
    BOUND = "bound"
    RESONANCE = "resonance"
    VIRTUAL = "virtual"


@dataclass(frozen=True)
class PoleRecord:
    k_pole: complex
    E_pole: complex
    kind: PoleKind
    residual: float
    partial_wave: int

    def to_dict(self) -> dict:
        return {"k": self.k_pole, "E": self.E_pole, "kind": self.kind.value,
                "residual": self.residual, "l": self.partial_wave}


def classify(k: complex, dead_band: float = DEAD_BAND) -> PoleKind:
    """Kind of an S-matrix pole at momentum ``k``.

    Raises DomainError when ``k`` is within ``dead_band`` of the real axis
    or is off-axis in the upper half plane (not a pole of a real
    potential).
    """
    k = complex(k)
    if abs(k.imag) <= dead_band:
        raise DomainError(f"k = {k} is within the dead band of the real axis; refine")
    on_axis = abs(k.real) <= dead_band
    if k.imag > 0:
        if on_axis:
            return PoleKind.BOUND
        raise DomainError(f"k = {k}: off-axis upper-half-plane pole is unphysical "
                          "for a real potential")
    return PoleKind.VIRTUAL if on_axis else PoleKind.RESONANCE


def pole_to_breit_wigner(pole: PoleRecord) -> tuple[float, float]:
    """(E0, Gamma) predicted by a resonance pole: E_pole = E0 - i Gamma/2."""
    if pole.kind is not PoleKind.RESONANCE:
        raise DomainError(f"pole of kind {pole.kind.value} has no Breit-Wigner form")
    E0 = pole.E_pole.real
    gamma = -2.0 * pole.E_pole.imag
    if not gamma > 0:
        raise DomainError(f"resonance pole with non-positive width {gamma}")
    return E0, gamma


def _local_minima(mod: np.ndarray) -> np.ndarray:
    padded = np.pad(mod, 1, constant_values=np.inf)
    centre = padded[1:-1, 1:-1]
    is_min = np.ones_like(centre, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            nb = padded[1 + di:padded.shape[0] - 1 + di, 1 + dj:padded.shape[1] - 1 + dj]
            is_min &= centre <= nb
    return np.argwhere(is_min)


def _split(region: ComplexRegion) -> list[ComplexRegion]:
    x = region.re_min + _SPLIT * (region.re_max - region.re_min)
    y = region.im_min + _SPLIT * (region.im_max - region.im_min)
    return [ComplexRegion(region.re_min, x, region.im_min, y),
            ComplexRegion(x, region.re_max, region.im_min, y),
            ComplexRegion(x, region.re_max, y, region.im_max),
            ComplexRegion(region.re_min, x, y, region.im_max)]


class _Search:
    def __init__(self, f, tol, grid):
        self.f = f
        self.tol = tol
        self.grid = grid
        self.roots: list[complex] = []

    def _add(self, z):
        for r in self.roots:
            if abs(r - z) <= 1e-8 * max(1.0, abs(z)):
                return
        self.roots.append(z)

    def seed(self, region: ComplexRegion):
        pts = region.grid(self.grid, self.grid)
        mod = np.abs(self.f(pts))
        for i, j in _local_minima(mod):
            try:
                res = newton_complex(self.f, pts[i, j], tol=self.tol)
            except ConvergenceError:
                continue
            if region.contains(res.location):
                self._add(res.location)

    def inside(self, region):
        return [z for z in self.roots if region.contains(z)]

    def resolve(self, region: ComplexRegion, expected: int, depth: int):
        if expected == 0:
            return
        if len(self.inside(region)) >= expected:
            return
        self.seed(region)
        if len(self.inside(region)) >= expected or depth == 0:
            return
        for sub in _split(region):
            self.resolve(sub, count_zeros(self.f, sub), depth - 1)


def find_poles(pot: PotentialSpec, l: int, region: ComplexRegion,
               tol: float = ROOT_TOL, grid: int = SEED_GRID,
               max_depth: int = 6) -> list[PoleRecord]:
    """All S-matrix poles of partial wave ``l`` inside ``region`` (k-plane).

    Completeness is certified: the number of refined poles must equal the
    winding number of the denominator along the region boundary, or a
    ConsistencyError is raised.
    """
    if pot.is_free:
        return []

    def f(k):
        return jost_denominator(pot, l, k)

    expected = count_zeros(f, region)
    search = _Search(f, tol, grid)
    search.resolve(region, expected, max_depth)
    roots = search.inside(region)
    if len(roots) != expected:
        raise ConsistencyError(
            f"found {len(roots)} poles but the winding number is {expected}",
            diagnostics={"region": region, "roots": roots, "winding": expected})
    records = []
    for z in roots:
        kind = classify(z)
        if kind is not PoleKind.RESONANCE:
            z = complex(0.0, z.imag)
        residual = float(abs(f(z)))
        records.append(PoleRecord(z, z * z, kind, residual, int(l)))
    records.sort(key=lambda p: (p.k_pole.real, p.k_pole.imag))
    return records


def bound_state_count(pot: PotentialSpec, l: int, k_max: float | None = None) -> int:
    """Number of bound states in partial wave ``l``.

    Counts zeros of the denominator in a box hugging the positive
    imaginary axis up to ``k_max`` (default: sqrt of the deepest well
    plus a margin).
    """
    if pot.is_free:
        return 0
    depth = max([-v for _, v in pot.segments] + [0.0])
    if k_max is None:
        k_max = math.sqrt(depth) + 1.0
    region = ComplexRegion(-0.25, 0.25, 1e-3, k_max)
    return count_zeros(lambda k: jost_denominator(pot, l, k), region)
