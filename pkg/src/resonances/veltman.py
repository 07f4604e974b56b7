"""One-loop self-energy, Dyson resummation and vector-boson propagators.

Conventions
-----------
A heavy scalar ``A`` (mass ``M``) couples to a light scalar pair through
``g A phi^2``.  The self-energy of ``A`` is written with its absorptive
part opening at the two-particle threshold::

    Sigma(s + i0) = (s - M^2)^2 R2(s) - i theta(s - 4 m^2) I2(s),
    I2(s) = g^2 / (8 pi) * sqrt(1 - 4 m^2 / s).

With this sign the dressed propagator ``1 / (s - M^2 - Sigma(s))`` has a
positive imaginary denominator just above the cut and its complex pole
lies at ``Im s < 0``.  The normalisation ``1/(8 pi)`` makes
``I2(M^2) = M Gamma`` with ``Gamma`` the tree-level width of ``A -> phi phi``.

The real part is rebuilt from ``I2`` by a dispersion integral subtracted
twice at ``s = M^2``.  Four-vectors use the metric diag(+1, -1, -1, -1).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DomainError, NumericalError, PoleProximityError
from .gamow import ComplexMass
from .numerics import QUAD_TOL, ROOT_TOL, adaptive_quadrature, newton_complex, \
    principal_value_quadrature

PHASE_SPACE_CONSTANT = 1.0 / (8.0 * math.pi)
POLE_PROXIMITY = 1e-14
METRIC = np.diag([1.0, -1.0, -1.0, -1.0])


# ---------------------------------------------------------------------------
# Dispersive self-energy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DispersiveSelfEnergy:
    """Self-energy with a square-root threshold, subtracted twice at ``mass2``.

    Absorptive part ``strength * sqrt(1 - threshold / s)`` above ``threshold``.
    The real part vanishes together with its first derivative at ``mass2``.
    """

    strength: float
    threshold: float
    mass2: float
    tol: float = QUAD_TOL
    _c0: float = field(init=False, repr=False)
    _c1: float = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("strength", "threshold", "mass2", "tol"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be finite and non-negative, got {v}")
        if not self.threshold > 0:
            raise DomainError("threshold must be positive")
        if self.mass2 == self.threshold:
            raise DomainError("subtraction point may not sit on the threshold")
        s0 = complex(self.mass2)
        c0 = self.unsubtracted(s0).real
        c1 = self._unsubtracted_slope(self.mass2)
        object.__setattr__(self, "_c0", c0)
        object.__setattr__(self, "_c1", c1)

    # absorptive part -----------------------------------------------------
    def absorptive(self, s) -> float:
        """theta(s - threshold) * strength * sqrt(1 - threshold/s), real s."""
        s = float(s)
        if s <= self.threshold:
            return 0.0
        return self.strength * math.sqrt(1.0 - self.threshold / s)

    def absorptive_continued(self, s: complex) -> complex:
        """Analytic continuation of the absorptive part off the real axis."""
        s = complex(s)
        return self.strength * cmath.sqrt(1.0 - self.threshold / s)

    # dispersion integrals -------------------------------------------------
    # s' = threshold + x^2 removes the square-root edge; the spectral
    # function f(s') = I(s') / s' then reads strength * x / w^3 with w^2 = s'.
    def _dispersion(self, s: complex) -> complex:
        """J(s) = ∫ f(s') / (s' - s) ds' over the cut, s + i0 on the cut."""
        t, a = self.threshold, self.strength
        s = complex(s)

        def integrand(x):
            w2 = t + x * x
            return 2.0 * a * x * x / (w2 * np.sqrt(w2) * (w2 - s))

        if s.imag == 0.0 and s.real > t:
            x0 = math.sqrt(s.real - t)

            def real_part(x):
                return integrand(x).real

            pv = principal_value_quadrature(real_part, 0.0, math.inf, x0, self.tol)
            return complex(pv, math.pi * self.absorptive(s.real) / s.real)
        if s.real <= t:
            return complex(adaptive_quadrature(integrand, 0.0, math.inf, self.tol))
        # near-pole at x0 = sqrt(s - t): integrand = h(x) / (x - x0); subtract
        # h(x0) on [0, L] and add its logarithm back in closed form
        x0 = cmath.sqrt(s - t)
        L = 2.0 * x0.real

        def h(x):
            w2 = t + x * x
            return 2.0 * a * x * x / (w2 * np.sqrt(w2 + 0j) * (x + x0))

        h0 = a * x0 / (s * cmath.sqrt(s))

        def smooth(x):
            d = x - x0
            return (h(x) - h0) / d

        near = adaptive_quadrature(smooth, 0.0, L, self.tol, points=[x0.real])
        near += h0 * (cmath.log(L - x0) - cmath.log(-x0))
        far = adaptive_quadrature(integrand, L, math.inf, self.tol)
        return complex(near + far)

    def _unsubtracted_slope(self, s: float) -> float:
        """Re d/ds of the unsubtracted self-energy on the real axis.

        Integration by parts turns the double pole into a simple one; the
        boundary term vanishes because the spectral function is zero at
        threshold.
        """
        t, a = self.threshold, self.strength
        J = self._dispersion(complex(s)).real

        def dintegrand(x):
            w2 = t + x * x
            return a * (t - 2.0 * x * x) / (w2 * w2 * np.sqrt(w2) * (w2 - s))

        if s > t:
            dJ = principal_value_quadrature(dintegrand, 0.0, math.inf,
                                            math.sqrt(s - t), self.tol)
        else:
            dJ = adaptive_quadrature(dintegrand, 0.0, math.inf, self.tol)
        return float(-(J + s * dJ) / math.pi)

    def unsubtracted(self, s: complex) -> complex:
        """Once-subtracted (at s = 0) self-energy -(s/pi) J(s)."""
        s = complex(s)
        return -s * self._dispersion(s) / math.pi

    def __call__(self, s: complex) -> complex:
        """First-sheet self-energy; real ``s`` is read as ``s + i0``."""
        s = complex(s)
        if not (math.isfinite(s.real) and math.isfinite(s.imag)):
            raise DomainError(f"non-finite s = {s}")
        return self.unsubtracted(s) - self._c0 - (s - self.mass2) * self._c1

    def second_sheet(self, s: complex) -> complex:
        """Continuation through the cut from above into ``Im s < 0``."""
        s = complex(s)
        if s.imag > 0:
            return self(s)
        if s.imag == 0 and s.real > self.threshold:
            return self(s)
        return self(s) - 2j * self.absorptive_continued(s)


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VeltmanModel:
    g: float
    M: float
    m: float

    def __post_init__(self):
        for name in ("g", "M", "m"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive, got {v}")
        if not self.M > 2 * self.m:
            raise DomainError(f"decay A -> phi phi needs M > 2m (M={self.M}, m={self.m})")

    @property
    def threshold(self) -> float:
        return 4.0 * self.m ** 2

    def sigma(self, tol: float = QUAD_TOL) -> DispersiveSelfEnergy:
        return DispersiveSelfEnergy(PHASE_SPACE_CONSTANT * self.g ** 2,
                                    self.threshold, self.M ** 2, tol)

    def to_dict(self) -> dict:
        return {"g": self.g, "M": self.M, "m": self.m}


@dataclass(frozen=True)
class SelfEnergy:
    """Sigma(s) = (s - M^2)^2 R2 - i I2.

    On the real axis ``R2`` is real and ``I2`` is the absorptive part.  Off
    the axis ``I2`` is 0 and ``R2`` carries the full complex value.
    """

    s: complex
    value: complex
    R2: complex
    I2: float


def absorptive_part(model: VeltmanModel, s) -> float:
    """I2(s) = g^2/(8 pi) sqrt(1 - 4m^2/s) above threshold, else 0."""
    s = float(s)
    if s <= model.threshold:
        return 0.0
    return PHASE_SPACE_CONSTANT * model.g ** 2 * math.sqrt(1.0 - model.threshold / s)


def self_energy(model: VeltmanModel, s: complex, tol: float = QUAD_TOL,
                sigma: DispersiveSelfEnergy | None = None) -> SelfEnergy:
    """One-loop self-energy of the heavy field at ``s`` (``s + i0`` if real).

    Passing a prebuilt ``sigma`` (from ``model.sigma()``) avoids recomputing
    the subtraction constants on every call.
    """
    sig = sigma if sigma is not None else model.sigma(tol)
    s = complex(s)
    value = sig(s)
    M2 = model.M ** 2
    if s.imag == 0.0:
        I2 = sig.absorptive(s.real)
        if s.real == M2:
            R2 = _second_derivative_half(sig, M2)
        else:
            R2 = value.real / (s.real - M2) ** 2
        return SelfEnergy(s, value, float(R2), I2)
    return SelfEnergy(s, value, value / (s - M2) ** 2, 0.0)


def _second_derivative_half(sig, x):
    h = 1e-3 * max(abs(x), 1.0)
    return (sig(x + h).real - 2 * sig(x).real + sig(x - h).real) / (2 * h * h)


def dyson_factor(model: VeltmanModel, s: complex, tol: float = QUAD_TOL,
                 sigma: DispersiveSelfEnergy | None = None) -> complex:
    """Ratio Sigma(s) / (s - M^2) of successive self-energy insertions.

    The insertion series converges where its modulus is below one.
    """
    s = complex(s)
    M2 = model.M ** 2
    if s == M2:
        raise DomainError("the insertion ratio is undefined at s = M^2 on the real axis")
    sig = sigma if sigma is not None else model.sigma(tol)
    return sig(s) / (s - M2)


def dressed_propagator(Sigma: Callable[[complex], complex], mass2: float,
                       s: complex) -> complex:
    """1 / (s - mass2 - Sigma(s)).

    Raises PoleProximityError when the denominator is below 1e-14.
    """
    s = complex(s)
    den = s - mass2 - complex(Sigma(s))
    if abs(den) < POLE_PROXIMITY:
        raise PoleProximityError(f"propagator denominator |{den}| at s = {s} is on a pole",
                                 diagnostics={"s": s, "denominator": den})
    return 1.0 / den


def stable_self_energy(model: VeltmanModel, tol: float = QUAD_TOL) -> DispersiveSelfEnergy:
    """Self-energy of the light field: three-particle threshold, subtracted at m^2.

    Only the analytic structure matters here; the absorptive strength
    reuses the model coupling.
    """
    return DispersiveSelfEnergy(PHASE_SPACE_CONSTANT * model.g ** 2,
                                9.0 * model.m ** 2, model.m ** 2, tol)


def find_complex_pole(model: VeltmanModel, tol: float = ROOT_TOL,
                      quad_tol: float = QUAD_TOL) -> ComplexMass:
    """Pole of the dressed heavy propagator on the second sheet.

    Newton iteration on ``s - M^2 - Sigma_II(s)`` seeded at the lowest
    order estimate ``M^2 - i I2(M^2)``.
    """
    sig = model.sigma(quad_tol)
    M2 = model.M ** 2
    seed = complex(M2, -sig.absorptive(M2))

    def den(s):
        return s - M2 - sig.second_sheet(s)

    try:
        res = newton_complex(den, seed, tol=tol)
    except ConvergenceError as exc:
        raise ConvergenceError(f"complex pole search failed from seed {seed}: {exc}",
                               best=exc.best, diagnostics={"seed": seed}) from exc
    s_R = res.location
    if not s_R.imag < 0:
        raise NumericalError(f"pole at {s_R} is not below the real axis",
                             best=s_R, diagnostics={"seed": seed})
    return ComplexMass(s_R)


# ---------------------------------------------------------------------------
# Vector-boson propagators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaugeConfig:
    xi: float
    M: float
    Gamma: float
    q: tuple

    def __post_init__(self):
        q = tuple(float(c) for c in self.q)
        if len(q) != 4:
            raise DomainError("q needs four components")
        if not all(math.isfinite(c) for c in q):
            raise DomainError("q components must be finite")
        if not math.isfinite(self.xi):
            raise DomainError("gauge parameter must be finite")
        if not (math.isfinite(self.M) and self.M > 0):
            raise DomainError("mass must be positive")
        if not (math.isfinite(self.Gamma) and self.Gamma >= 0):
            raise DomainError("width must be non-negative")
        object.__setattr__(self, "q", q)

    @property
    def q_upper(self) -> np.ndarray:
        return np.array(self.q)

    @property
    def q_lower(self) -> np.ndarray:
        return METRIC @ self.q_upper

    @property
    def q2(self) -> float:
        q = self.q_upper
        return float(q[0] ** 2 - q[1] ** 2 - q[2] ** 2 - q[3] ** 2)

    @property
    def complex_mass2(self) -> complex:
        return complex(self.M ** 2, -self.M * self.Gamma)


def _tensor(cfg: GaugeConfig, den: complex, gauge_mass2: complex) -> np.ndarray:
    q2 = cfg.q2
    gauge_den = q2 - cfg.xi * gauge_mass2
    if abs(den) < POLE_PROXIMITY or abs(gauge_den) < POLE_PROXIMITY:
        raise PoleProximityError(f"propagator evaluated on a pole (q^2 = {q2})",
                                 diagnostics={"q2": q2, "den": den, "gauge_den": gauge_den})
    ql = cfg.q_lower
    return 1j * (-METRIC + (1.0 - cfg.xi) * np.outer(ql, ql) / gauge_den) / den


def stable_vector_propagator(cfg: GaugeConfig) -> np.ndarray:
    """D_{mu nu}(q) of a stable massive vector; the width is ignored."""
    M2 = cfg.M ** 2
    return _tensor(cfg, complex(cfg.q2 - M2), M2)


def naive_unstable_propagator(cfg: GaugeConfig) -> np.ndarray:
    """Complex mass in the overall denominator only."""
    return _tensor(cfg, cfg.q2 - cfg.complex_mass2, cfg.M ** 2)


def corrected_unstable_propagator(cfg: GaugeConfig) -> np.ndarray:
    """Complex mass in the overall denominator and in the gauge term."""
    mu2 = cfg.complex_mass2
    return _tensor(cfg, cfg.q2 - mu2, mu2)


def ward_target(cfg: GaugeConfig) -> np.ndarray:
    """-i xi q_nu / (q^2 - xi (M^2 - i M Gamma))."""
    return -1j * cfg.xi * cfg.q_lower / (cfg.q2 - cfg.xi * cfg.complex_mass2)


def ward_residual(propagator, cfg: GaugeConfig) -> float:
    """max_nu | q^mu P_{mu nu} - target_nu |.

    ``propagator`` is either a tensor-valued function of ``cfg`` or an
    already evaluated 4x4 array.
    """
    P = propagator(cfg) if callable(propagator) else np.asarray(propagator)
    contraction = cfg.q_upper @ P
    return float(np.max(np.abs(contraction - ward_target(cfg))))
