"""Partial-wave scattering on piecewise-constant spherical potentials.

Internal units are hbar = 1, 2m = 1, so E = k**2.  The regular radial
solution u(r) (u ~ r**(l+1) at the origin) is carried segment by segment
and matched at the outermost radius to the exterior combination

    u(r) ∝ H^-_l(kr) - S_l(k) H^+_l(kr),

with H^± the Riccati-Hankel functions.  The S-matrix is the ratio of two
Wronskians; its denominator (a Jost function) is exposed separately for
pole searches.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .numerics import riccati_bessel_j, riccati_bessel_n, riccati_hankel

L_MAX_DEFAULT = 4
PHASE_RESOLUTION = 400  # grid points per unit k for phase unwrapping
KAPPA_EPS = 1e-7  # replaces a local momentum that is exactly zero
SCALE_SPLIT = 50.0  # |Im(kappa r)| beyond which the regular start is rescaled


@dataclass(frozen=True)
class PotentialSpec:
    """Piecewise-constant potential.

    ``segments`` is an ordered sequence of ``(outer_radius, height)``; the
    potential is ``height`` on ``(previous_radius, outer_radius]`` and zero
    beyond the last radius. An empty sequence is the free particle.
    """

    segments: tuple = ()

    def __post_init__(self):
        segs = tuple((float(r), float(v)) for r, v in self.segments)
        prev = 0.0
        for r, v in segs:
            if not (math.isfinite(r) and math.isfinite(v)):
                raise DomainError(f"non-finite segment ({r}, {v})")
            if not r > prev:
                raise DomainError("segment radii must be positive and strictly increasing")
            prev = r
        object.__setattr__(self, "segments", segs)

    @classmethod
    def square_well(cls, depth: float, radius: float) -> "PotentialSpec":
        """Attractive well V = -depth for r < radius."""
        return cls(((radius, -depth),))

    @classmethod
    def well_barrier(cls, depth: float, r_well: float, height: float,
                     r_barrier: float) -> "PotentialSpec":
        """Well of ``depth`` out to ``r_well`` followed by a barrier of
        ``height`` out to ``r_barrier``."""
        return cls(((r_well, -depth), (r_barrier, height)))

    @property
    def is_free(self) -> bool:
        return len(self.segments) == 0

    @property
    def radius(self) -> float:
        """Matching radius (outermost segment edge); 0 for a free particle."""
        return self.segments[-1][0] if self.segments else 0.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inner = 0.0
        for outer, v in self.segments:
            out = np.where((r > inner) & (r <= outer), v, out)
            inner = outer
        if self.segments:
            out = np.where(r == 0, self.segments[0][1], out)
        return out[()]

    def to_dict(self) -> dict:
        return {"segments": [list(s) for s in self.segments]}


@dataclass(frozen=True)
class Kinematics:
    k: complex
    E: complex

    @classmethod
    def from_momentum(cls, k) -> "Kinematics":
        return cls(complex(k), complex(k) ** 2)

    @classmethod
    def from_energy(cls, E) -> "Kinematics":
        return cls(complex(np.sqrt(complex(E))), complex(E))


def energy_from_momentum(k, hbar: float = 1.0, mass: float = 0.5):
    """E = hbar**2 k**2 / (2 m); the defaults reproduce the internal units."""
    return hbar ** 2 * np.asarray(k) ** 2 / (2 * mass)


def lifetime_from_width(gamma, hbar: float = 1.0):
    """tau = hbar / Gamma."""
    return hbar / np.asarray(gamma)


@dataclass(frozen=True)
class PartialWaveResult:
    l: int
    k: complex
    s_matrix: complex
    phase_shift: float
    cross_section_l: float


def _local_momentum(E, v):
    kappa = np.sqrt(E - v + 0j)
    zero = kappa == 0
    if np.any(zero):
        warnings.warn(f"local momentum vanishes exactly in a segment (V={v}); "
                      f"perturbed to {KAPPA_EPS}", RuntimeWarning, stacklevel=3)
        kappa = np.where(zero, KAPPA_EPS, kappa)
    return kappa


def _propagate(pot: PotentialSpec, l: int, k: np.ndarray):
    """Regular solution at the matching radius as ``(u, u', log_scale)``.

    The true solution is ``exp(log_scale) * (u, u')``; the exponential
    factor collected under strong barriers is kept apart so nothing
    overflows.  Normalised as u = z j_l(z) / kappa**(l+1) in the first
    segment, which makes the true (u, u') entire functions of E = k**2.
    """
    E = k.astype(complex) ** 2
    r1, v1 = pot.segments[0]
    kappa = _local_momentum(E, v1)
    u, du, log_scale = _regular_start(l, kappa, r1)
    for (a, _), (b, v) in zip(pot.segments[:-1], pot.segments[1:]):
        kappa = _local_momentum(E, v)
        u, du, c = _transfer(l, kappa, a, b, u, du)
        log_scale = log_scale + c
    return u, du, log_scale


def _regular_start(l, kappa, r):
    """u = z j_l(z) / kappa**(l+1) at z = kappa r, with its scale split off."""
    z = kappa * r
    far = np.abs(z.imag) > SCALE_SPLIT
    j, dj = riccati_bessel_j(l, np.where(far, 1.0, z))
    j = np.array(j, dtype=complex, ndmin=1)
    dj = np.array(dj, dtype=complex, ndmin=1)
    log_scale = np.zeros_like(z)
    if np.any(far):
        # z j_l = (H^+ - H^-) / 2i; far from the axis one term dominates
        zf = z[far]
        hp, dhp = riccati_hankel(l, zf, +1, scaled=True)
        hm, dhm = riccati_hankel(l, zf, -1, scaled=True)
        up = zf.imag >= 0
        c = np.where(up, -1j * zf, 1j * zf)
        ep = np.exp(np.where(up, 2j * zf, 0))
        em = np.exp(np.where(up, 0, -2j * zf))
        j[far] = (hp * ep - hm * em) / 2j
        dj[far] = (dhp * ep - dhm * em) / 2j
        log_scale[far] = c
    return j / kappa ** (l + 1), dj / kappa ** l, log_scale


def _transfer(l, kappa, a, b, u, du):
    """Carry (u, u') from r=a to r=b through a constant segment.

    Returns ``(u1, du1, c)`` with the true values ``exp(c) * (u1, du1)``.
    Arrays are one-dimensional.
    """
    if l == 0:
        # closed form; well conditioned for small kappa*width
        small = np.abs(kappa * (b - a)) < 0.5
    else:
        # the Hankel pair nearly cancels on a regular solution at small
        # |kappa r|; the real pair (j, n) with W[j, n] = 1 does not
        small = np.abs(kappa * b) < l + 2
    u1 = np.empty_like(u)
    du1 = np.empty_like(du)
    scale = np.zeros_like(u)
    if small.any():
        u1[small], du1[small] = _transfer_real(l, kappa[small], a, b, u[small], du[small])
    big = ~small
    if big.any():
        u1[big], du1[big], scale[big] = _transfer_hankel(l, kappa[big], a, b,
                                                         u[big], du[big])
    return u1, du1, scale


def _transfer_real(l, kappa, a, b, u, du):
    if l == 0:
        width = b - a
        x = kappa * width
        c = np.cos(x)
        s_over = width * np.sinc(x / np.pi)
        return c * u + s_over * du, -kappa ** 2 * s_over * u + c * du
    ja, dja = riccati_bessel_j(l, kappa * a)
    na, dna = riccati_bessel_n(l, kappa * a)
    jb, djb = riccati_bessel_j(l, kappa * b)
    nb, dnb = riccati_bessel_n(l, kappa * b)
    A = (kappa * dna * u - na * du) / kappa
    B = (ja * du - kappa * dja * u) / kappa
    return A * jb + B * nb, kappa * (A * djb + B * dnb)


def _transfer_hankel(l, kappa, a, b, u, du):
    # One member decays, the other grows under a barrier, so there is no
    # cancellation between exponentially large terms.  The factors
    # exp(±i kappa r) are kept out of both members.
    hp_a, dhp_a = riccati_hankel(l, kappa * a, +1, scaled=True)
    hm_a, dhm_a = riccati_hankel(l, kappa * a, -1, scaled=True)
    hp_b, dhp_b = riccati_hankel(l, kappa * b, +1, scaled=True)
    hm_b, dhm_b = riccati_hankel(l, kappa * b, -1, scaled=True)
    w = -2j * kappa
    alpha = (kappa * dhm_a * u - hm_a * du) / w
    beta = (hp_a * du - kappa * dhp_a * u) / w
    # true result: alpha e^{p} hp_b + beta e^{-p} hm_b with p = i kappa (b - a);
    # the larger exponential becomes the returned scale
    p = 1j * kappa * (b - a)
    up = kappa.imag >= 0
    scale = np.where(up, -p, p)
    fp = np.exp(np.where(up, 2 * p, 0))
    fm = np.exp(np.where(up, 0, -2 * p))
    u1 = alpha * hp_b * fp + beta * hm_b * fm
    du1 = kappa * (alpha * dhp_b * fp + beta * dhm_b * fm)
    return u1, du1, scale


def _check_l(l):
    if int(l) != l or l < 0:
        raise DomainError(f"partial wave l must be a non-negative integer, got {l}")
    return int(l)


def _as_k(k):
    k = np.asarray(k, dtype=complex)
    if np.any(k == 0):
        raise DomainError("k = 0 is excluded (threshold)")
    return k


def _wronskians(pot, l, k):
    """Numerator and denominator Wronskians, both without the common
    factor exp(log_scale), which is returned separately."""
    u, du, log_scale = _propagate(pot, l, k.ravel())
    R = pot.radius
    kr = k.ravel() * R
    hp, dhp = riccati_hankel(l, kr, +1)
    hm, dhm = riccati_hankel(l, kr, -1)
    kk = k.ravel()
    den = hp * du - kk * dhp * u
    num = hm * du - kk * dhm * u
    return num.reshape(k.shape), den.reshape(k.shape), log_scale.reshape(k.shape)


def jost_denominator(pot: PotentialSpec, l: int, k):
    """Analytic S-matrix denominator whose zeros are the poles of S_l(k).

    ``(kR)**l exp(-ikR) W[H^+_l(k.), u]`` at the matching radius ``R``;
    the prefactor removes the k = 0 pole of H^+ and the exponential growth
    in the lower half plane without adding zeros. Vectorised over ``k``.
    """
    l = _check_l(l)
    k = _as_k(k)
    if pot.is_free:
        return np.ones_like(k)[()]
    _, den, log_scale = _wronskians(pot, l, k)
    R = pot.radius
    return ((k * R) ** l * np.exp(log_scale - 1j * k * R) * den)[()]


def s_matrix(pot: PotentialSpec, l: int, k):
    """Partial-wave S-matrix S_l(k) for complex ``k`` (vectorised)."""
    l = _check_l(l)
    k = _as_k(k)
    if pot.is_free:
        return np.ones_like(k)[()]
    num, den, _ = _wronskians(pot, l, k)
    return (num / den)[()]


def _principal_two_delta(pot, l, k):
    return np.angle(s_matrix(pot, l, k))


def phase_shift(pot: PotentialSpec, l: int, k, resolution: int = PHASE_RESOLUTION):
    """Phase shift delta_l(k) on the branch continuous from threshold.

    The branch is fixed by delta_l(0+) ∈ (-pi/2, pi/2) and continued by
    unwrapping along a k-scan with ``resolution`` points per unit k,
    refined wherever 2*delta moves by more than pi/2 between neighbours.
    Resonances narrower than the scan spacing may be missed; raise
    ``resolution`` for those.
    """
    l = _check_l(l)
    k_arr = np.asarray(k, dtype=float)
    if np.any(~np.isfinite(k_arr)) or np.any(k_arr <= 0):
        raise DomainError("phase shifts are defined for real k > 0")
    if pot.is_free:
        return np.zeros_like(k_arr)[()]
    kmax = float(k_arr.max())
    k_start = min(1e-4, 0.5 * float(k_arr.min()))
    n = max(int(math.ceil((kmax - k_start) * resolution)), 1) + 1
    grid = np.union1d(np.linspace(k_start, kmax, n), k_arr.ravel())
    two_delta = _principal_two_delta(pot, l, grid)
    for _ in range(40):
        step = np.angle(np.exp(1j * np.diff(two_delta)))
        bad = np.abs(step) > np.pi / 2
        if not bad.any():
            break
        mids = 0.5 * (grid[:-1][bad] + grid[1:][bad])
        grid = np.concatenate([grid, mids])
        two_delta = np.concatenate([two_delta, _principal_two_delta(pot, l, mids)])
        order = np.argsort(grid)
        grid, two_delta = grid[order], two_delta[order]
    step = np.angle(np.exp(1j * np.diff(two_delta)))
    unwrapped = two_delta[0] + np.concatenate([[0.0], np.cumsum(step)])
    delta = 0.5 * unwrapped
    idx = np.searchsorted(grid, k_arr)
    return delta[idx][()]


def partial_wave(pot: PotentialSpec, l: int, k) -> PartialWaveResult:
    """All partial-wave observables at a single momentum."""
    l = _check_l(l)
    S = complex(s_matrix(pot, l, k))
    kc = complex(k)
    if kc.imag == 0 and kc.real > 0:
        delta = float(phase_shift(pot, l, kc.real))
        sigma = float(4 * np.pi / kc.real ** 2 * (2 * l + 1) * abs(1 - S) ** 2 / 4)
    else:
        delta = math.nan
        sigma = math.nan
    return PartialWaveResult(l, kc, S, delta, sigma)


@dataclass(frozen=True)
class CrossSectionTable:
    energies: np.ndarray
    partial: np.ndarray  # shape (n_energies, l_max + 1)

    @property
    def total(self) -> np.ndarray:
        return self.partial.sum(axis=1)

    @property
    def l_max(self) -> int:
        return self.partial.shape[1] - 1


def cross_section(pot: PotentialSpec, l_max: int = L_MAX_DEFAULT,
                  energies: Sequence[float] = ()) -> CrossSectionTable:
    """Partial and total cross sections, sigma_l = 4 pi/k^2 (2l+1) sin^2 delta_l."""
    l_max = _check_l(l_max)
    E = np.asarray(energies, dtype=float).ravel()
    if E.size == 0:
        raise DomainError("empty energy grid")
    if np.any(~np.isfinite(E)) or np.any(E <= 0):
        raise DomainError("cross sections need strictly positive energies")
    k = np.sqrt(E)
    partial = np.empty((E.size, l_max + 1))
    for l in range(l_max + 1):
        S = np.asarray(s_matrix(pot, l, k))
        # sin^2 delta = |1 - S|^2 / 4 for unitary S
        partial[:, l] = np.pi / k ** 2 * (2 * l + 1) * np.abs(1 - S) ** 2
    return CrossSectionTable(E, partial)
