"""Shared numerical kernels.

Complex spherical Hankel/Bessel functions, adaptive Gauss-Kronrod
quadrature (with a principal-value variant), damped complex Newton
iteration, argument-principle zero counting and a Levenberg-Marquardt
least-squares driver.

Every routine here is a pure function of its inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

from .errors import (ConvergenceError, DomainError, NumericalError,
                     SingularSystemError)

ROOT_TOL = 1e-12
QUAD_TOL = 1e-10
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ComplexRegion:
    """Axis-aligned rectangle in the complex plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        vals = (self.re_min, self.re_max, self.im_min, self.im_max)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError(f"region bounds must be finite: {vals}")
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise DomainError(f"degenerate region: {vals}")

    @property
    def corners(self) -> tuple[complex, complex, complex, complex]:
        """Corners in counter-clockwise order starting bottom-left."""
        return (complex(self.re_min, self.im_min),
                complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max),
                complex(self.re_min, self.im_max))

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max),
                       0.5 * (self.im_min + self.im_max))

    def contains(self, z, pad: float = 0.0) -> bool:
        return (self.re_min - pad <= z.real <= self.re_max + pad
                and self.im_min - pad <= z.imag <= self.im_max + pad)

    def grid(self, n_re: int, n_im: int) -> np.ndarray:
        """Cell-centred ``(n_im, n_re)`` grid of points strictly inside."""
        dx = (self.re_max - self.re_min) / n_re
        dy = (self.im_max - self.im_min) / n_im
        x = self.re_min + dx * (np.arange(n_re) + 0.5)
        y = self.im_min + dy * (np.arange(n_im) + 0.5)
        return x[None, :] + 1j * y[:, None]

    def quadrants(self) -> list["ComplexRegion"]:
        c = self.center
        return [ComplexRegion(self.re_min, c.real, self.im_min, c.imag),
                ComplexRegion(c.real, self.re_max, self.im_min, c.imag),
                ComplexRegion(c.real, self.re_max, c.imag, self.im_max),
                ComplexRegion(self.re_min, c.real, c.imag, self.im_max)]


@dataclass(frozen=True)
class RootResult:
    location: complex
    residual_norm: float
    iterations: int
    trace: tuple = field(default=(), repr=False, compare=False)


# ---------------------------------------------------------------------------
# Spherical Bessel / Hankel functions
# ---------------------------------------------------------------------------

def _hankel_sequence(lmax: int, z, kind: int, scaled: bool = False) -> np.ndarray:
    """h_0 .. h_lmax of the first (kind=1) or second (kind=2) kind.

    Upward recurrence from the closed forms at l=0,1; stable because the
    Hankel functions are the dominant solution of the recurrence.  With
    ``scaled`` the factor exp(+-iz) is left out.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("spherical Hankel functions are singular at z = 0")
    if scaled and kind in (1, 2):
        e = np.ones_like(z)
    elif kind == 1:
        e = np.exp(1j * z)
    elif kind == 2:
        e = np.exp(-1j * z)
    else:
        raise ValueError(f"kind must be 1 or 2, got {kind}")
    if kind == 1:
        h0 = -1j * e / z
        h1 = -e * (z + 1j) / z**2
    else:
        h0 = 1j * e / z
        h1 = -e * (z - 1j) / z**2
    out = np.empty((lmax + 1,) + z.shape, dtype=complex)
    out[0] = h0
    if lmax >= 1:
        out[1] = h1
    for n in range(1, lmax):
        out[n + 1] = (2 * n + 1) / z * out[n] - out[n - 1]
    return out


def _check_order(l):
    if int(l) != l or l < 0:
        raise DomainError(f"order l must be a non-negative integer, got {l}")
    return int(l)


def spherical_hankel_out(l: int, z):
    """Outgoing spherical Hankel function h_l^(1)(z) for complex ``z``."""
    l = _check_order(l)
    return _hankel_sequence(l, z, 1)[l][()]


def spherical_hankel_in(l: int, z):
    """Incoming spherical Hankel function h_l^(2)(z) for complex ``z``."""
    l = _check_order(l)
    return _hankel_sequence(l, z, 2)[l][()]


def riccati_hankel(l: int, z, sign: int = +1, scaled: bool = False):
    """Riccati-Hankel function H^±_l(z) and its derivative.

    ``H^+ = i z h_l^(1)(z)`` and ``H^- = -i z h_l^(2)(z)`` so that
    ``H^± -> exp(±i(z - l pi/2))`` for large ``|z|``.  With ``scaled``
    the function and its derivative are both multiplied by exp(∓iz),
    which keeps them finite far from the real axis.
    """
    l = _check_order(l)
    kind = 1 if sign > 0 else 2
    h = _hankel_sequence(max(l, 1), z, kind, scaled)
    z = np.asarray(z, dtype=complex)
    if l == 0:
        dzh = h[0] - z * h[1]
    else:
        dzh = z * h[l - 1] - l * h[l]
    pref = 1j if sign > 0 else -1j
    return (pref * z * h[l])[()], (pref * dzh)[()]


def riccati_bessel_j(l: int, z):
    """Regular Riccati-Bessel function z j_l(z) and its derivative."""
    l = _check_order(l)
    z = np.asarray(z, dtype=complex)
    if l == 0:
        return np.sin(z)[()], np.cos(z)[()]
    j = special.spherical_jn(l, z)
    dj = special.spherical_jn(l, z, derivative=True)
    return (z * j)[()], (j + z * dj)[()]


def riccati_bessel_n(l: int, z):
    """Irregular Riccati-Bessel function z y_l(z) and its derivative."""
    l = _check_order(l)
    z = np.asarray(z, dtype=complex)
    if l == 0:
        return (-np.cos(z))[()], np.sin(z)[()]
    y = special.spherical_yn(l, z)
    dy = special.spherical_yn(l, z, derivative=True)
    return (z * y)[()], (y + z * dy)[()]


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

# 15 Kronrod nodes on [-1, 1] and the matching weights
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG7 = np.zeros(15)
_WG7[[1, 3, 5]] = _WG[:3]
_WG7[7] = _WG[3]
_WG7[[9, 11, 13]] = _WG[2::-1]


def _evaluate(f, x):
    vals = np.asarray(f(x))
    if vals.shape != x.shape:
        vals = np.array([f(xi) for xi in x.ravel()]).reshape(x.shape)
    return vals


def _gk15(g, lo, hi):
    """Kronrod estimate, |K15 - G7| error and ∫|g| for each panel."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    vals = _evaluate(g, x)
    if not np.all(np.isfinite(vals)):
        raise NumericalError("integrand not finite at a quadrature node",
                             diagnostics={"panels": np.c_[lo, hi][
                                 ~np.all(np.isfinite(vals), axis=1)].tolist()})
    k = half * (vals @ _WK15)
    gs = half * (vals @ _WG7)
    resabs = np.abs(half) * (np.abs(vals) @ _WK15)
    return k, np.abs(k - gs), resabs


def adaptive_quadrature(f: Callable, a: float, b: float, tol: float = QUAD_TOL,
                        points: Optional[Sequence[float]] = None,
                        max_subdivisions: int = 20000,
                        full_output: bool = False):
    """Integrate ``f`` over ``[a, b]`` by globally adaptive Gauss-Kronrod.

    ``f`` should accept numpy arrays (scalar callables are vectorised as a
    fallback) and may be complex valued. ``b = inf`` is mapped to a finite
    interval by ``x = a + t / (1 - t)``. ``points`` are interior break
    points (e.g. peaks or oscillation periods) seeded as panel edges.

    The error estimate is the raw |K15 - G7| difference summed over panels;
    it is the error of the lower-order rule and therefore conservative for
    the returned Kronrod value.

    Returns the estimate, or ``(estimate, error, n_panels)`` when
    ``full_output`` is set. Raises ConvergenceError (``best`` set) when the
    panel budget runs out.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    a = float(a)
    b = float(b)
    if math.isinf(a):
        raise DomainError("lower limit must be finite")
    if b == a:
        return (0.0, 0.0, 0) if full_output else 0.0
    if b < a:
        res = adaptive_quadrature(f, b, a, tol, points, max_subdivisions, True)
        res = (-res[0],) + res[1:]
        return res if full_output else res[0]

    if math.isinf(b):
        def g(t):
            return f(a + t / (1.0 - t)) / (1.0 - t) ** 2
        lo_lim, hi_lim = 0.0, 1.0
        to_t = lambda x: (x - a) / (1.0 + x - a)
    else:
        g = f
        lo_lim, hi_lim = a, b
        to_t = lambda x: x
    edges = [lo_lim, hi_lim]
    if points is not None:
        inner = sorted({to_t(float(p)) for p in points
                        if a < float(p) < b})
        edges = [lo_lim] + inner + [hi_lim]
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1], edges[1:]
    val, err, rabs = _gk15(g, lo, hi)
    done_val = 0.0
    done_err = 0.0

    while len(lo) and done_err + err.sum() > tol:
        # panels at the round-off floor or too narrow to bisect are frozen;
        # round-off frozen panels are charged their floor, not |K - G|
        floor = 50 * _EPS * rabs
        narrow = (hi - lo) <= 8 * _EPS * np.maximum(np.abs(lo), np.abs(hi))
        at_floor = err <= floor
        frozen = at_floor | narrow
        if frozen.any():
            done_val = done_val + val[frozen].sum()
            done_err += np.where(at_floor, np.minimum(err, floor), err)[frozen].sum()
            keep = ~frozen
            lo, hi, val, err, rabs = lo[keep], hi[keep], val[keep], err[keep], rabs[keep]
            continue
        share = (tol - done_err) / len(lo)
        split = err > share
        if not split.any():
            split = err >= err.max()
        n_panels = len(lo) + int(split.sum())
        if n_panels > max_subdivisions:
            raise ConvergenceError(
                "adaptive quadrature exceeded the panel budget",
                best=done_val + val.sum(),
                diagnostics={"error_estimate": float(done_err + err.sum()),
                             "tol": tol, "panels": n_panels})
        m = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], m])
        new_hi = np.concatenate([m, hi[split]])
        nv, ne, nr = _gk15(g, new_lo, new_hi)
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        val = np.concatenate([val[keep], nv])
        err = np.concatenate([err[keep], ne])
        rabs = np.concatenate([rabs[keep], nr])

    estimate = done_val + val.sum()
    error = float(done_err + err.sum())
    if error > tol:
        raise ConvergenceError("quadrature limited by round-off or panel width",
                               best=estimate,
                               diagnostics={"error_estimate": error, "tol": tol})
    if isinstance(estimate, np.generic):
        estimate = estimate.item()
    if full_output:
        return estimate, error, len(lo)
    return estimate


def principal_value_quadrature(f: Callable, a: float, b: float, c: float,
                               tol: float = QUAD_TOL):
    """Cauchy principal value of ∫_a^b f(x) dx with a simple pole at ``c``.

    The interval symmetric about ``c`` is folded, ``f(c+u) + f(c-u)``,
    which cancels the pole; the leftover one-sided piece is integrated
    normally. ``b`` may be ``inf``.
    """
    if not (a < c < b):
        raise DomainError(f"singular point {c} must lie strictly inside ({a}, {b})")
    left = c - a
    right = b - c
    delta = min(left, right)

    def folded(u):
        return f(c + u) + f(c - u)

    total = adaptive_quadrature(folded, 0.0, delta, tol / 2)
    if right > left:
        total = total + adaptive_quadrature(f, c + delta, b, tol / 2)
    elif left > right:
        total = total + adaptive_quadrature(f, a, c - delta, tol / 2)
    return total


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------

def numerical_derivative(f: Callable, z: complex) -> complex:
    h = max(abs(z), 1.0) * 1e-7
    return (f(z + h) - f(z - h)) / (2 * h)


def newton_complex(f: Callable, z0: complex, fprime: Optional[Callable] = None,
                   tol: float = ROOT_TOL, max_iter: int = 60,
                   max_halvings: int = 40) -> RootResult:
    """Damped Newton iteration for an analytic ``f`` in the complex plane.

    A step is accepted only if it lowers ``|f|`` (otherwise it is halved),
    so the residual is monotone over accepted steps. Converged when
    ``|f(z)| < tol``.
    """
    deriv = fprime if fprime is not None else (lambda z: numerical_derivative(f, z))
    z = complex(z0)
    fz = complex(f(z))
    trace = [(z, abs(fz))]
    for it in range(max_iter + 1):
        if not math.isfinite(abs(fz)):
            raise ConvergenceError("Newton iterate left the domain of f",
                                   best=z, diagnostics={"trace": trace})
        if abs(fz) < tol:
            return RootResult(z, abs(fz), it, tuple(trace))
        if it == max_iter:
            break
        d = complex(deriv(z))
        if d == 0 or not math.isfinite(abs(d)):
            raise ConvergenceError("vanishing or non-finite derivative",
                                   best=z, diagnostics={"trace": trace})
        step = -fz / d
        for _ in range(max_halvings):
            zn = z + step
            fn = complex(f(zn))
            if math.isfinite(abs(fn)) and abs(fn) < abs(fz):
                break
            step *= 0.5
        else:
            raise ConvergenceError("Newton line search failed to reduce |f|",
                                   best=z, diagnostics={"trace": trace,
                                                        "residual": abs(fz)})
        z, fz = zn, fn
        trace.append((z, abs(fz)))
    raise ConvergenceError("Newton iteration did not converge", best=z,
                           diagnostics={"trace": trace, "residual": abs(fz)})


def _edge_phase_increments(f, za, zb, n_initial, max_step, max_rounds):
    s = np.linspace(0.0, 1.0, n_initial + 1)
    vals = _evaluate(f, za + (zb - za) * s)
    for _ in range(max_rounds):
        if np.any(vals == 0):
            raise NumericalError("f vanishes on the region boundary",
                                 diagnostics={"edge": (za, zb)})
        dphi = np.angle(vals[1:] / vals[:-1])
        bad = np.abs(dphi) > max_step
        if not bad.any():
            return s, vals, dphi
        mids = 0.5 * (s[:-1][bad] + s[1:][bad])
        mvals = _evaluate(f, za + (zb - za) * mids)
        s = np.concatenate([s, mids])
        vals = np.concatenate([vals, mvals])
        order = np.argsort(s, kind="stable")
        s, vals = s[order], vals[order]
    raise NumericalError("boundary sampling did not resolve the phase of f; "
                         "a zero is probably on or near the contour",
                         diagnostics={"edge": (za, zb)})


def winding_number(f: Callable, region: ComplexRegion, n_initial: int = 64,
                   zero_tol: float = 1e-10, max_rounds: int = 30) -> float:
    """Winding number of ``f`` along the positively oriented boundary.

    Sum over an adaptively refined boundary sampling of the increments of
    ``log f``; the panels are refined until every phase step is below
    pi/4, so each increment is the exact integral of ``f'/f`` on its panel.
    """
    corners = region.corners
    total = 0.0
    fmin, fmax = np.inf, 0.0
    for i in range(4):
        za, zb = corners[i], corners[(i + 1) % 4]
        _, vals, dphi = _edge_phase_increments(f, za, zb, n_initial,
                                               np.pi / 4, max_rounds)
        mags = np.abs(vals)
        fmin = min(fmin, mags.min())
        fmax = max(fmax, mags.max())
        total += dphi.sum()
    if not fmin > zero_tol * fmax:
        raise NumericalError("f nearly vanishes on the region boundary; "
                             "enlarge or shift the region",
                             diagnostics={"region": region, "min_abs": fmin})
    return total / (2 * np.pi)


def count_zeros(f: Callable, region: ComplexRegion, n_initial: int = 64,
                zero_tol: float = 1e-10) -> int:
    """Number of zeros of analytic ``f`` inside ``region`` (with multiplicity).

    ``f`` must accept numpy arrays of complex points.
    """
    w = winding_number(f, region, n_initial=n_initial, zero_tol=zero_tol)
    n = int(round(w))
    if abs(w - n) > 0.1:
        raise NumericalError(f"winding integral {w} is not close to an integer",
                             diagnostics={"region": region, "winding": w})
    return n


# ---------------------------------------------------------------------------
# Nonlinear least squares
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeastSquaresResult:
    params: np.ndarray
    covariance: np.ndarray
    residual_norm: float
    initial_residual_norm: float
    converged: bool
    iterations: int

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def _jacobian(model, x, p, r0):
    J = np.empty((len(r0), len(p)))
    for j in range(len(p)):
        h = 1e-7 * max(abs(p[j]), 1.0)
        pp = p.copy()
        pm = p.copy()
        pp[j] += h
        pm[j] -= h
        J[:, j] = (np.asarray(model(x, *pp)) - np.asarray(model(x, *pm))) / (2 * h)
    return J


def least_squares_fit(model: Callable, x, y, p0, jac: Optional[Callable] = None,
                      max_iter: int = 500, xtol: float = 1e-15,
                      ftol: float = 1e-15) -> LeastSquaresResult:
    """Levenberg-Marquardt fit of ``model(x, *p)`` to samples ``y``.

    Steps are solved as a damped linear least-squares problem (no normal
    equations are formed), accepted only when they reduce the residual.
    ``jac(x, *p)`` may supply the analytic Jacobian; central differences
    are used otherwise. The covariance is scaled by the reduced chi-square
    (as in ``scipy.optimize.curve_fit`` without absolute sigma).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p = np.array(p0, dtype=float)
    n, npar = len(y), len(p)
    if n <= npar:
        raise DomainError(f"need more samples ({n}) than parameters ({npar})")

    def resid(q):
        return np.asarray(model(x, *q), dtype=float) - y

    def jacobian(q, r):
        if jac is not None:
            return np.asarray(jac(x, *q), dtype=float)
        return _jacobian(model, x, q, r)

    r = resid(p)
    cost = float(r @ r)
    cost0 = cost
    if not math.isfinite(cost):
        raise NumericalError("model is not finite at the initial parameters",
                             best=p)
    J = jacobian(p, r)
    lam = 1e-3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if cost <= 1e-300:
            converged = True
            break
        scale = np.sqrt(np.maximum((J * J).sum(axis=0), 1e-300))
        if np.linalg.matrix_rank(J / scale) < npar:
            raise SingularSystemError("Jacobian is rank deficient", best=p)
        improved = False
        while lam < 1e16:
            A = np.vstack([J, np.sqrt(lam) * np.diag(scale)])
            rhs = np.concatenate([-r, np.zeros(npar)])
            step = np.linalg.lstsq(A, rhs, rcond=None)[0]
            pn = p + step
            rn = resid(pn)
            cn = float(rn @ rn)
            if math.isfinite(cn) and cn < cost:
                improved = True
                break
            lam *= 4.0
        if not improved:
            # no descent direction left: stationary point to rounding
            converged = True
            break
        small_step = np.all(np.abs(step) <= xtol * (np.abs(p) + xtol))
        small_gain = (cost - cn) <= ftol * cost
        p, r, cost = pn, rn, cn
        lam = max(lam / 3.0, 1e-12)
        if small_step or small_gain:
            converged = True
            break
        J = jacobian(p, r)
    if not converged:
        raise ConvergenceError("least-squares fit did not converge", best=p,
                               diagnostics={"cost": cost, "iterations": it})
    J = jacobian(p, r)
    JTJ = J.T @ J
    try:
        cond = np.linalg.cond(JTJ)
        if not math.isfinite(cond) or cond > 1 / _EPS:
            raise np.linalg.LinAlgError
        cov = np.linalg.inv(JTJ) * (cost / (n - npar))
    except np.linalg.LinAlgError:
        raise SingularSystemError("normal equations are singular at the solution",
                                  best=p) from None
    return LeastSquaresResult(p, cov, math.sqrt(cost), math.sqrt(cost0),
                              converged, it)
