"""Orthogonal polynomials on the unit circle: Szegő recursion and Schur algorithm.

Schur functions are kept as lazy compositions of Möbius maps, so evaluating
``f^(n)`` at a point costs one pass over the Verblunsky coefficients and
involves no series truncation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (
    ConsistencyError,
    DomainError,
    InapplicableError,
    InsufficientDataError,
    NotSchurError,
    PoleError,
)
from .numerics import CircleGrid, TaylorSeries, coefficients_from_grid, radius_estimate

__all__ = [
    "VerblunskySeq",
    "SzegoPair",
    "SchurEvaluator",
    "szego_recursion",
    "bernstein_szego_weight",
    "schur_forward",
    "schur_inverse",
    "caratheodory_from_schur",
    "schur_from_caratheodory",
    "szego_function",
    "relative_szego",
    "relative_szego_via_m",
    "DinvUpdate",
    "dinv_update",
    "dinv_coefficients",
    "verblunsky_decay_check",
    "SzegoMapReport",
    "szego_map_identity_check",
]


@dataclass(frozen=True, eq=False)
class VerblunskySeq:
    """``alpha_0, ..., alpha_{L-1}``, zero beyond."""

    alphas: np.ndarray

    def __post_init__(self):
        a = np.array(self.alphas, dtype=complex).reshape(-1)
        if np.any(~np.isfinite(a)):
            raise ValueError("Verblunsky coefficients must be finite")
        bad = np.abs(a) >= 1
        if np.any(bad):
            k = int(np.argmax(bad))
            raise DomainError(f"|alpha[{k}]| = {abs(a[k]):.6g} is not below 1")
        a.flags.writeable = False
        object.__setattr__(self, "alphas", a)

    def __len__(self):
        return self.alphas.size

    def __getitem__(self, n):
        return complex(self.alphas[n]) if n < self.alphas.size else 0j

    @property
    def rho(self):
        return np.sqrt(1.0 - np.abs(self.alphas) ** 2)


def _as_seq(alphas):
    return alphas if isinstance(alphas, VerblunskySeq) else VerblunskySeq(alphas)


@dataclass(frozen=True, eq=False)
class SzegoPair:
    """Monic ``Phi_n`` and its reversal ``Phi_n^*``, ascending coefficients."""

    n: int
    Phi: np.ndarray
    PhiStar: np.ndarray

    def phi_star_normalized(self, alphas):
        rho = _as_seq(alphas).rho[: self.n]
        return self.PhiStar / float(np.prod(rho))


def _reversed(c):
    return np.conj(c[::-1])


def szego_recursion(alphas, n):
    """``Phi_n`` and ``Phi_n^*`` from ``Phi_0 = 1`` by exact coefficient recursion."""
    seq = _as_seq(alphas)
    if n < 0:
        raise ValueError("n must be nonnegative")
    phi = np.array([1.0 + 0j])
    star = np.array([1.0 + 0j])
    for k in range(n):
        a = seq[k]
        zphi = np.concatenate(([0j], phi))
        star_p = np.concatenate((star, [0j]))
        phi, star = zphi - np.conj(a) * star_p, star_p - a * zphi
    return SzegoPair(n, phi, star)


def bernstein_szego_weight(alphas):
    """Weight ``w(theta) = 1 / |phi_L^*(e^{i theta})|^2`` of a finite sequence.

    The probability measure ``w dtheta / 2 pi`` has exactly the given
    Verblunsky coefficients followed by zeros.
    """
    seq = _as_seq(alphas)
    pair = szego_recursion(seq, len(seq))
    c = pair.phi_star_normalized(seq)
    return lambda theta: 1.0 / np.abs(P.polyval(np.exp(1j * np.asarray(theta)), c)) ** 2


class SchurEvaluator:
    """Pointwise rule for the Schur function ``f^(level)``."""

    def __init__(self, func: Callable, level: int = 0):
        self._func = func
        self.level = int(level)

    def __call__(self, z):
        return self._func(np.asarray(z, dtype=complex))

    @classmethod
    def constant(cls, value, level=0):
        value = complex(value)
        return cls(lambda z: np.full(np.shape(z), value, dtype=complex)[()], level)

    @classmethod
    def zero(cls, level=0):
        return cls.constant(0.0, level)


def schur_forward(alphas, f_top=None, n=0):
    """``f^(n)`` from ``f^(top)`` via ``f^(k) = (alpha_k + z f^(k+1)) / (1 + conj(alpha_k) z f^(k+1))``.

    ``f_top`` defaults to zero at level ``len(alphas)``, which is the Schur
    function of the finite sequence itself.
    """
    seq = _as_seq(alphas)
    if f_top is None:
        f_top = SchurEvaluator.zero(len(seq))
    top = f_top.level
    if not 0 <= n <= top:
        raise ValueError(f"level n={n} must lie in [0, {top}]")
    coeffs = [seq[k] for k in range(n, top)]

    def f(z, _top=f_top, _coeffs=coeffs):
        g = _top(z)
        for a in reversed(_coeffs):
            zg = z * g
            g = (a + zg) / (1.0 + np.conj(a) * zg)
        return g

    return SchurEvaluator(f, n)


def schur_inverse(f, n_max, radius=0.5, points=256):
    """``alpha_0 .. alpha_{n_max}`` by the Schur algorithm on sampled values.

    ``alpha_n`` is the mean of ``f^(n)`` over ``|z| = radius``, i.e. its
    value at 0, and ``z f^(n+1) = (f^(n) - alpha_n) / (1 - conj(alpha_n) f^(n))``.
    """
    z = CircleGrid.nodes(radius, points)
    g = np.asarray(f(z), dtype=complex)
    out = []
    for k in range(n_max + 1):
        a = complex(np.mean(g))
        if abs(a) >= 1:
            raise NotSchurError(f"|f^({k})(0)| = {abs(a):.6g} is not below 1", level=k)
        out.append(a)
        g = (g - a) / (z * (1.0 - np.conj(a) * g))
    return VerblunskySeq(out)


def caratheodory_from_schur(f, z):
    """``F(z) = (1 + z f(z)) / (1 - z f(z))``."""
    z = np.asarray(z, dtype=complex)
    zf = z * f(z)
    if np.any(zf == 1):
        raise PoleError("z f(z) = 1", z=z)
    out = (1.0 + zf) / (1.0 - zf)
    return out[()] if out.ndim == 0 else out


def schur_from_caratheodory(F, z):
    """``f(z) = (F(z) - 1) / (z (F(z) + 1))`` for ``z != 0``."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("the Schur function is recovered here only away from z = 0")
    Fz = F(z)
    out = (Fz - 1.0) / (z * (Fz + 1.0))
    return out[()] if out.ndim == 0 else out


def _szego_rule(w, z, n):
    t = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    wt = np.asarray(w(t), dtype=float)
    if np.any(~(wt > 0)):
        raise DomainError("weight must be strictly positive on the quadrature grid")
    kernel = (np.exp(1j * t) + z[:, None]) / (np.exp(1j * t) - z[:, None])
    return np.exp(kernel @ np.log(wt) / (2.0 * n))


def szego_function(w, z, quad_points=None, tol=1e-14, max_points=1 << 17):
    """``D(z) = exp(int (e^{it} + z)/(e^{it} - z) log w(t) dt / 4 pi)``.

    Rectangle rule on ``[0, 2 pi)`` at half-step offset nodes, so weights
    with removable zeros at ``t = 0, pi`` are still sampled where positive.
    With ``quad_points=None`` the node count doubles from 512 until two
    successive values agree to ``tol`` (relative), up to ``max_points``.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1):
        raise DomainError("D is evaluated inside the unit disk")
    flat = z.reshape(-1)
    if quad_points is not None:
        out = _szego_rule(w, flat, int(quad_points))
    else:
        n = 512
        out = _szego_rule(w, flat, n)
        while n < max_points:
            n *= 2
            prev, out = out, _szego_rule(w, flat, n)
            if np.max(np.abs(out - prev) / np.abs(out)) <= tol:
                break
    out = out.reshape(z.shape)
    return out[()] if out.ndim == 0 else out


def relative_szego(alpha_n, f_n, f_next, z, check=True, tol=1e-10):
    """``(delta_n D)(z) = (1 - conj(a) f^(n)) / rho * (1 - z f^(n+1)) / (1 - z f^(n))``.

    With ``check`` the value is compared with :func:`relative_szego_via_m`
    and a disagreement above ``tol`` (relative) raises
    :class:`ConsistencyError`.
    """
    z = np.asarray(z, dtype=complex)
    a = complex(alpha_n)
    rho = math.sqrt(1.0 - abs(a) ** 2)
    fn = f_n(z)
    den = 1.0 - z * fn
    if np.any(np.abs(den) == 0):
        raise PoleError("1 - z f^(n)(z) vanishes", z=z)
    out = (1.0 - np.conj(a) * fn) / rho * (1.0 - z * f_next(z)) / den
    if check:
        nz = z != 0
        if np.any(nz):
            other = relative_szego_via_m(a, f_n, z[nz])
            diff = np.max(np.abs(np.atleast_1d(out)[np.atleast_1d(nz)] - other) / np.maximum(1.0, np.abs(other)))
            if diff > tol:
                raise ConsistencyError(f"relative Szegő formulas disagree by {diff:.3g}", deviation=float(diff))
    return out[()] if out.ndim == 0 else out


def relative_szego_via_m(alpha_n, f_n, z):
    """``delta_n D = M / (2 rho z)`` with ``M = z(1+a)(F+1) - (1+conj a)(F-1)``."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("this form of the relative Szegő function needs z != 0")
    a = complex(alpha_n)
    rho = math.sqrt(1.0 - abs(a) ** 2)
    F = caratheodory_from_schur(f_n, z)
    M = z * (1 + a) * (F + 1) - (1 + np.conj(a)) * (F - 1)
    out = M / (2.0 * rho * z)
    return out[()] if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class DinvUpdate:
    """Result of one ``D^{-1}`` update on ``|z| = R1``."""

    grid: CircleGrid
    sup_A: float
    rho: float

    @property
    def contraction_factor(self):
        """``sup|A| / (rho R1)``: bound on the ratio of successive seminorms."""
        return self.sup_A / (self.rho * self.grid.radius)


def dinv_update(dinv, F, alpha):
    """``(D^(n+1))^{-1}`` on the circle of ``dinv`` from ``(D^(n))^{-1}``.

    Uses ``[D^(1)]^{-1} = rho^{-1} [z^{-1} A (D^{-1} - D(0)^{-1}) + B + z^{-1} A D(0)^{-1}]``
    with ``A = (z(1+a)(1-F#) + (1+conj a)(1+F#)) / 2`` and
    ``B = ((1+a) - z^{-1}(1+conj a)) D#``, where ``g#(z) = conj(g(1/conj z))``.
    ``F`` is the Carathéodory function at level ``n`` (a callable on the disk).
    """
    R1 = dinv.radius
    if not R1 > 1:
        raise DomainError("the update runs on a circle of radius above 1")
    z = dinv.points
    inner = 1.0 / np.conj(z)
    coeffs = coefficients_from_grid(dinv, dinv.size // 2 - 1)
    dinv_inner = P.polyval(inner, coeffs)
    d_sharp = np.conj(1.0 / dinv_inner)
    F_sharp = np.conj(F(inner))
    a = complex(alpha)
    rho = math.sqrt(1.0 - abs(a) ** 2)
    A = 0.5 * (z * (1 + a) * (1 - F_sharp) + (1 + np.conj(a)) * (1 + F_sharp))
    B = ((1 + a) - (1 + np.conj(a)) / z) * d_sharp
    d0inv = complex(coeffs[0])
    new = ((A / z) * (dinv.values - d0inv) + B + (A / z) * d0inv) / rho
    return DinvUpdate(CircleGrid(R1, new), float(np.max(np.abs(A))), rho)


def dinv_coefficients(alphas, k_max):
    """Taylor coefficients ``0..k_max`` of ``phi_L^*``, i.e. of ``D^{-1}`` for a finite sequence."""
    seq = _as_seq(alphas)
    pair = szego_recursion(seq, len(seq))
    c = pair.phi_star_normalized(seq)
    out = np.zeros(k_max + 1, dtype=complex)
    m = min(c.size, k_max + 1)
    out[:m] = c[:m]
    return out


def verblunsky_decay_check(alphas, dinv, slack=0.05):
    """Compare the decay of ``alpha_n`` with the radius of ``D^{-1}``.

    Returns ``(R_est, passed)`` where ``1/R_est`` estimates
    ``limsup |alpha_n|^{1/n}``; the check passes when
    ``1/R_est <= (1 + slack) / radius(D^{-1})``.
    """
    seq = _as_seq(alphas)
    if len(seq) == 0:
        raise InsufficientDataError("no Verblunsky coefficients given")
    R_est = radius_estimate(np.abs(seq.alphas))
    radius = dinv.radius if isinstance(dinv, TaylorSeries) else float(dinv)
    passed = (1.0 / R_est) <= (1.0 + slack) / radius
    return R_est, bool(passed)


@dataclass(frozen=True)
class SzegoMapReport:
    deviation: float
    best_constant: float
    best_deviation: float


# 2 sin^2/|u|^2 is a probability weight for dtheta/2pi, which fixes c = sqrt(2)
SZEGO_MAP_CONSTANT = 2.0**0.5


def szego_map_identity_check(u, dinv=None, radius=0.5, points=64, quad_points=1024, zero_tol=1e-12):
    """Compare ``D^{-1}`` of the Szegő-map image with ``c u(z) / (1 - z^2)``.

    Applies only when ``u(1) = u(-1) = 0``.  ``dinv`` defaults to ``1/D``
    computed by quadrature from the image weight
    ``w(theta) = 2 sin^2(theta) / |u(e^{i theta})|^2``.  The report gives the
    deviation for ``c = SZEGO_MAP_CONSTANT`` and for the least-squares best ``c``.
    """
    scale = max(1.0, u.majorant(1.0))
    if abs(u(1.0)) > zero_tol * scale or abs(u(-1.0)) > zero_tol * scale:
        raise InapplicableError("the Szegő-map identity needs u(1) = u(-1) = 0")
    z = CircleGrid.nodes(radius, points)
    if dinv is None:
        w = lambda t: 2.0 * np.sin(t) ** 2 / np.abs(u(np.exp(1j * t))) ** 2
        lhs = 1.0 / szego_function(w, z, quad_points)
    else:
        lhs = np.asarray(dinv(z), dtype=complex)
    shape = u(z) / (1.0 - z * z)
    dev = float(np.max(np.abs(lhs - SZEGO_MAP_CONSTANT * shape)))
    c = complex(np.vdot(shape, lhs) / np.vdot(shape, shape))
    best = float(np.max(np.abs(lhs - c * shape)))
    return SzegoMapReport(dev, float(c.real), best)
