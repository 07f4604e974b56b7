"""Breit-Wigner line shapes and their comparison with S-matrix poles."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, NumericalError, ResonanceError
from .numerics import least_squares_fit
from .poles import PoleRecord, pole_to_breit_wigner
from .radial import PotentialSpec, cross_section

MIN_SAMPLES = 8
DEFAULT_WINDOWS = (1.0, 2.0, 5.0, 10.0)


def bw_value(E, E0: float, Gamma: float):
    """Unit-peak Lorentzian (Gamma^2/4) / ((E - E0)^2 + Gamma^2/4)."""
    if not Gamma > 0:
        raise DomainError(f"width must be positive, got {Gamma}")
    return _bw(np.asarray(E, dtype=float), E0, Gamma)[()]


def _bw(E, E0, Gamma):
    q = 0.25 * Gamma * Gamma
    d = E - E0
    return q / (d * d + q)


@dataclass(frozen=True)
class BreitWignerFit:
    E0: float
    Gamma: float
    amplitude: float
    background: tuple[float, float]
    fit_window: tuple[float, float]
    rms_residual: float
    stderr: tuple[float, ...] = ()

    def __call__(self, E):
        E = np.asarray(E, dtype=float)
        b0, b1 = self.background
        return self.amplitude * _bw(E, self.E0, self.Gamma) + b0 + b1 * E

    def to_dict(self) -> dict:
        return {"E0": self.E0, "Gamma": self.Gamma, "amplitude": self.amplitude,
                "background": list(self.background),
                "fit_window": list(self.fit_window),
                "rms_residual": self.rms_residual,
                "stderr": list(self.stderr)}


def _half_width_guess(E, y, ipk, level):
    """Full width at ``level`` around the peak at index ``ipk``."""
    def crossing(indices):
        prev = ipk
        for i in indices:
            if y[i] <= level:
                # linear interpolation between prev and i
                t = (y[prev] - level) / (y[prev] - y[i])
                return E[prev] + t * (E[i] - E[prev])
            prev = i
        return None

    left = crossing(range(ipk - 1, -1, -1))
    right = crossing(range(ipk + 1, len(E)))
    if left is not None and right is not None:
        return right - left
    if left is not None:
        return 2 * (E[ipk] - left)
    if right is not None:
        return 2 * (right - E[ipk])
    return E[-1] - E[0]


def fit_breit_wigner(E, sigma, window: tuple[float, float] | None = None,
                     with_background: bool = True) -> BreitWignerFit:
    """Fit ``amplitude * BW(E; E0, Gamma) [+ b0 + b1 E]`` inside ``window``.

    Starting values come from the peak sample and a half-maximum scan.
    Raises DomainError if the window has fewer than 8 samples or no
    interior maximum.
    """
    E = np.asarray(E, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if E.shape != sigma.shape or E.ndim != 1:
        raise DomainError("E and sigma must be 1-D arrays of equal length")
    order = np.argsort(E)
    E, sigma = E[order], sigma[order]
    if window is None:
        window = (float(E[0]), float(E[-1]))
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise DomainError(f"empty fit window {window}")
    sel = (E >= lo) & (E <= hi)
    Ew, yw = E[sel], sigma[sel]
    if Ew.size < MIN_SAMPLES:
        raise DomainError(f"fit window holds {Ew.size} samples; need {MIN_SAMPLES}")
    ipk = int(np.argmax(yw))
    if ipk == 0 or ipk == Ew.size - 1:
        raise DomainError("no interior maximum of the cross section in the fit window")

    base = float(yw.min()) if with_background else 0.0
    amp0 = float(yw[ipk]) - base
    gamma0 = _half_width_guess(Ew, yw, ipk, base + 0.5 * amp0)
    Ec = 0.5 * (lo + hi)
    hw = 0.5 * (hi - lo)

    if with_background:
        def model(x, e0, g, a, c0, c1):
            return a * _bw(x, e0, g) + c0 + c1 * (x - Ec) / hw
        p0 = [Ew[ipk], gamma0, amp0, base, 0.0]
    else:
        def model(x, e0, g, a):
            return a * _bw(x, e0, g)
        p0 = [Ew[ipk], gamma0, amp0]

    res = least_squares_fit(model, Ew, yw, p0)
    p = res.params
    e0, gamma, amp = float(p[0]), abs(float(p[1])), float(p[2])
    if with_background:
        b1 = float(p[4]) / hw
        b0 = float(p[3]) - b1 * Ec
    else:
        b0 = b1 = 0.0
    stderr = tuple(float(s) for s in res.stderr)
    if not (gamma > 0 and math.isfinite(e0)):
        raise NumericalError("fit collapsed to zero width", best=p)
    if not lo <= e0 <= hi:
        raise NumericalError(f"fitted E0 = {e0} left the window {window}", best=p)
    rms = res.residual_norm / math.sqrt(Ew.size)
    return BreitWignerFit(e0, gamma, amp, (b0, b1), (lo, hi), rms, stderr)


@dataclass(frozen=True)
class UniversalityRow:
    window: float  # half-width in units of the pole Gamma
    dE0: float  # |E0_fit - E0_pole| / Gamma_pole
    dGamma: float  # |Gamma_fit - Gamma_pole| / Gamma_pole
    fit: BreitWignerFit | None = None
    failed: bool = False
    message: str = ""


def window_cross_section(pot: PotentialSpec, l: int, E0: float, gamma: float,
                         half_width: float, n_samples: int = 201):
    """Energy grid E0 ± half_width*gamma and the partial cross section sigma_l."""
    lo = max(E0 - half_width * gamma, 1e-6 * E0)
    E = np.linspace(lo, E0 + half_width * gamma, n_samples)
    return E, cross_section(pot, l, E).partial[:, l]


def universality_report(pot: PotentialSpec, pole: PoleRecord,
                        windows: Sequence[float] = DEFAULT_WINDOWS,
                        n_samples: int = 201,
                        with_background: bool = True) -> list[UniversalityRow]:
    """Deviation of Breit-Wigner fits from the pole prediction per window.

    Each window is a half-width in units of the pole width.  A failed fit
    yields a row flagged ``failed`` and the scan continues.
    """
    E0, gamma = pole_to_breit_wigner(pole)
    if not gamma / E0 < 0.2:
        raise DomainError(f"resonance is not narrow (Gamma/E0 = {gamma / E0:.3g})")
    rows = []
    for w in windows:
        E, sig = window_cross_section(pot, pole.partial_wave, E0, gamma, w, n_samples)
        try:
            fit = fit_breit_wigner(E, sig, (E[0], E[-1]), with_background)
        except ResonanceError as exc:
            rows.append(UniversalityRow(float(w), math.nan, math.nan, None, True, str(exc)))
            continue
        rows.append(UniversalityRow(float(w), abs(fit.E0 - E0) / gamma,
                                    abs(fit.Gamma - gamma) / gamma, fit))
    return rows
