"""Complex masses, Gamow states and their semigroup time evolution.

A complex mass-squared ``s_R`` (the pole position) has two real
parameterisations::

    s_R = M**2 - i M Gamma            (propagator convention)
    s_R = (E_R - i Gamma_R / 2)**2    (Gamow-state convention)

Gamow states evolve only forward in time: ``semigroup_evolve`` multiplies
the amplitude by exp(-i E_R t) exp(-Gamma_R t / 2) for t >= 0 and refuses
negative times. Units have hbar = 1, so the lifetime is 1 / Gamma_R.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .errors import DomainError
from .numerics import QUAD_TOL, adaptive_quadrature


@dataclass(frozen=True)
class ComplexMass:
    """Complex mass-squared with both real views precomputed."""

    s_R: complex
    M: float = field(init=False)
    Gamma: float = field(init=False)
    E_R: float = field(init=False)
    Gamma_R: float = field(init=False)

    def __post_init__(self):
        s = complex(self.s_R)
        if not (math.isfinite(s.real) and math.isfinite(s.imag)):
            raise DomainError(f"s_R must be finite, got {s}")
        if s.imag > 0:
            raise DomainError(f"Im s_R = {s.imag} > 0: pole in the wrong half plane")
        if not s.real > 0:
            raise DomainError(f"Re s_R = {s.real} must be positive")
        M = math.sqrt(s.real)
        w = cmath.sqrt(s)
        object.__setattr__(self, "s_R", s)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "Gamma", -s.imag / M)
        object.__setattr__(self, "E_R", w.real)
        object.__setattr__(self, "Gamma_R", -2.0 * w.imag)

    @classmethod
    def from_mass_width(cls, M: float, Gamma: float) -> "ComplexMass":
        """s_R = M^2 - i M Gamma."""
        _check_mass_width(M, Gamma)
        return cls(complex(M * M, -M * Gamma))

    @classmethod
    def from_energy_width(cls, E_R: float, Gamma_R: float) -> "ComplexMass":
        """s_R = (E_R - i Gamma_R/2)^2."""
        _check_mass_width(E_R, Gamma_R)
        return cls(complex(E_R, -0.5 * Gamma_R) ** 2)

    @property
    def lifetime(self) -> float:
        return 1.0 / self.Gamma_R if self.Gamma_R > 0 else math.inf

    def to_dict(self) -> dict:
        return {"s_R": self.s_R, "M": self.M, "Gamma": self.Gamma,
                "E_R": self.E_R, "Gamma_R": self.Gamma_R}


def _check_mass_width(m, w):
    if not (math.isfinite(m) and m > 0):
        raise DomainError(f"mass must be positive, got {m}")
    if not (math.isfinite(w) and w >= 0):
        raise DomainError(f"width must be non-negative, got {w}")


def mass_convert(*, M=None, Gamma=None, E_R=None, Gamma_R=None, s_R=None) -> ComplexMass:
    """Build a ComplexMass from exactly one of (M, Gamma), (E_R, Gamma_R), s_R."""
    given = [(M is not None or Gamma is not None),
             (E_R is not None or Gamma_R is not None),
             s_R is not None]
    if sum(given) != 1:
        raise DomainError("give exactly one of (M, Gamma), (E_R, Gamma_R) or s_R")
    if given[0]:
        if M is None or Gamma is None:
            raise DomainError("both M and Gamma are required")
        return ComplexMass.from_mass_width(M, Gamma)
    if given[1]:
        if E_R is None or Gamma_R is None:
            raise DomainError("both E_R and Gamma_R are required")
        return ComplexMass.from_energy_width(E_R, Gamma_R)
    return ComplexMass(complex(s_R))


@dataclass(frozen=True)
class GamowState:
    """Generalised eigenvector labelled by spin ``j``, mass and other
    quantum numbers ``b``; ``j`` and ``b`` are carried, never used."""

    mass: ComplexMass
    j: Any = 0
    b: Any = None
    norm: complex = 1.0 + 0.0j

    def __post_init__(self):
        n = complex(self.norm)
        if not (math.isfinite(n.real) and math.isfinite(n.imag)):
            raise DomainError("state norm must be finite")
        object.__setattr__(self, "norm", n)

    @property
    def survival_probability(self) -> float:
        return abs(self.norm) ** 2


def semigroup_evolve(state: GamowState, t: float) -> GamowState:
    """Evolve forward by ``t >= 0``; negative times raise DomainError."""
    t = float(t)
    if not math.isfinite(t):
        raise DomainError(f"time must be finite, got {t}")
    if t < 0:
        raise DomainError(f"Gamow states evolve only forward in time (t = {t} < 0)")
    m = state.mass
    factor = cmath.exp(complex(-0.5 * m.Gamma_R * t, -m.E_R * t))
    return replace(state, norm=state.norm * factor)


def mass_squared_apply(state: GamowState) -> complex:
    """Eigenvalue of P^mu P_mu on the state: the complex pole s_R."""
    return state.mass.s_R


@dataclass(frozen=True)
class EnergyDensity:
    """Lorentzian energy density truncated to E >= 0 with unit norm.

    rho(E) = normalization / ((E - E_R)^2 + Gamma_R^2 / 4)  for E >= 0.
    """

    E_R: float
    Gamma_R: float
    normalization: float = field(init=False)

    def __post_init__(self):
        if not (math.isfinite(self.E_R) and self.E_R > 0):
            raise DomainError(f"E_R must be positive, got {self.E_R}")
        if not (math.isfinite(self.Gamma_R) and self.Gamma_R > 0):
            raise DomainError(f"Gamma_R must be positive, got {self.Gamma_R}")
        h = 0.5 * self.Gamma_R
        # ∫_0^∞ dE / ((E - E_R)^2 + h^2) = (pi/2 + atan(E_R/h)) / h
        mass = (0.5 * math.pi + math.atan(self.E_R / h)) / h
        object.__setattr__(self, "normalization", 1.0 / mass)

    @classmethod
    def from_mass(cls, mass: ComplexMass) -> "EnergyDensity":
        return cls(mass.E_R, mass.Gamma_R)

    def __call__(self, E):
        E = np.asarray(E)
        h = 0.5 * self.Gamma_R
        val = self.normalization / ((E - self.E_R) ** 2 + h * h)
        if np.iscomplexobj(E):
            return val
        return np.where(E >= 0, val, 0.0)[()]


def survival_amplitude(density: EnergyDensity, t: float, tol: float = QUAD_TOL) -> complex:
    """A(t) = ∫_0^∞ rho(E) exp(-i E t) dE.

    The body [0, X] is split into panels no wider than a fraction of the
    oscillation period and of the width; the tail beyond X is taken along
    the ray X - i y (y >= 0), where exp(-i E t) decays instead of
    oscillating. The density's poles lie at Re E = E_R < X, so the
    deformation crosses no singularity.
    """
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"survival amplitude needs finite t >= 0, got {t}")
    E_R, G = density.E_R, density.Gamma_R
    X = 2.0 * E_R + 20.0 * G
    panel = 0.5 * G
    if t > 0:
        panel = min(panel, math.pi / t)
    n = max(int(math.ceil(X / panel)), 1)
    points = np.linspace(0.0, X, n + 1)[1:-1]

    def body(E):
        return density(E) * np.exp(-1j * E * t)

    def tail(y):
        z = X - 1j * y
        return -1j * density(z) * np.exp(-1j * z * t)

    a = adaptive_quadrature(body, 0.0, X, tol / 2, points=points,
                            max_subdivisions=max(20000, 4 * n))
    b = adaptive_quadrature(tail, 0.0, math.inf, tol / 2)
    return complex(a + b)


def survival_probability(density: EnergyDensity, t: float, tol: float = QUAD_TOL) -> float:
    return abs(survival_amplitude(density, t, tol)) ** 2
