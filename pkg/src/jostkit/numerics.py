"""Series and circle-grid arithmetic shared by the rest of the package.

Everything here works in binary64.  Functions analytic near a disk are
represented either by their Taylor coefficients (:class:`TaylorSeries`) or by
samples on a circle centred at the origin (:class:`CircleGrid`); the discrete
Fourier transform moves between the two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import optimize

from .errors import DegenerateZeroError, InsufficientDataError

__all__ = [
    "TaylorSeries",
    "CircleGrid",
    "ToleranceConfig",
    "coefficients_from_grid",
    "negative_mode_fraction",
    "project_plus",
    "seminorm_triple",
    "radius_estimate",
    "find_real_zeros",
    "unit_circle_quadrature",
    "half_circle_rule",
    "periodic_quadrature",
    "quad_points_for",
]

# largest number of quadrature nodes the adaptive rules will ask for
MAX_QUAD_POINTS = 1 << 17


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances used across the package."""

    root_tol: float = 1e-12
    residue_tol: float = 1e-8
    roundtrip_tol: float = 1e-7
    quad_points: int = 512
    norm_tol: float = 1e-10

    def __post_init__(self):
        for name in ("root_tol", "residue_tol", "roundtrip_tol", "quad_points", "norm_tol"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
        if int(self.quad_points) != self.quad_points:
            raise ValueError("quad_points must be an integer")


@dataclass(frozen=True, eq=False)
class TaylorSeries:
    """Real power series ``sum c_k z**k`` valid on ``|z| < radius``.

    Coefficients are stored in ascending order.  A polynomial is a series
    with ``radius = inf``.
    """

    coeffs: np.ndarray
    radius: float = math.inf

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a nonempty 1-d sequence")
        if np.iscomplexobj(c):
            scale = max(1.0, float(np.max(np.abs(c))))
            if np.max(np.abs(c.imag)) > 1e-9 * scale:
                raise ValueError("Taylor coefficients must be real")
            c = c.real
        c = np.array(c, dtype=float)
        if not np.all(np.isfinite(c)):
            raise ValueError("Taylor coefficients must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    def __call__(self, z):
        return P.polyval(z, self.coeffs)

    def __len__(self):
        return self.coeffs.size

    def __repr__(self):
        return f"TaylorSeries(degree={self.degree}, radius={self.radius}, coeffs={self.coeffs.tolist()})"

    @property
    def is_polynomial(self):
        return math.isinf(self.radius)

    @property
    def degree(self):
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) if nz.size else 0

    def derivative(self):
        if self.coeffs.size == 1:
            return TaylorSeries([0.0], self.radius)
        return TaylorSeries(P.polyder(self.coeffs), self.radius)

    def scaled(self, factor):
        return TaylorSeries(self.coeffs * factor, self.radius)

    def trimmed(self, tol=0.0):
        """Drop trailing coefficients with ``|c_k| <= tol``."""
        c = self.coeffs
        keep = np.flatnonzero(np.abs(c) > tol)
        last = int(keep[-1]) if keep.size else 0
        return TaylorSeries(c[: last + 1], self.radius)

    def majorant(self, r):
        """``sum |c_k| r**k``, an upper bound for ``|f|`` on ``|z| <= r``."""
        return float(P.polyval(r, np.abs(self.coeffs)))

    def roots(self):
        c = self.trimmed().coeffs
        if c.size < 2:
            return np.empty(0, dtype=complex)
        return P.polyroots(c)


@dataclass(frozen=True, eq=False)
class CircleGrid:
    """Samples of a function at ``radius * exp(2j*pi*k/size)``."""

    radius: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        n = v.size
        if v.ndim != 1 or n < 2 or n & (n - 1):
            raise ValueError(f"grid size must be a power of two >= 2, got {n}")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, func, radius, size):
        return cls(radius, func(cls.nodes(radius, size)))

    @staticmethod
    def nodes(radius, size):
        return radius * np.exp(2j * np.pi * np.arange(size) / size)

    @property
    def size(self):
        return self.values.size

    @property
    def points(self):
        return self.nodes(self.radius, self.size)

    def modes(self):
        """Fourier modes of the samples, in FFT order (mode k scaled by r**k)."""
        return np.fft.fft(self.values) / self.size


def coefficients_from_grid(g, max_k):
    """Taylor/Laurent coefficients ``a_0 .. a_max_k`` from circle samples.

    Exact for polynomials of degree below ``g.size / 2``.
    """
    if not 0 <= max_k < g.size / 2:
        raise ValueError(f"max_k must lie in [0, {g.size // 2}), got {max_k}")
    k = np.arange(max_k + 1)
    return g.modes()[: max_k + 1] / g.radius**k


def negative_mode_fraction(g):
    """L2 fraction of the samples carried by strictly negative Fourier modes."""
    m = g.modes()
    n = g.size
    total = float(np.sum(np.abs(m) ** 2))
    if total == 0.0:
        return 0.0
    neg = float(np.sum(np.abs(m[n // 2 + 1:]) ** 2))
    return math.sqrt(neg / total)


def project_plus(g):
    """Keep only the strictly positive Fourier modes of ``g``."""
    m = g.modes()
    n = g.size
    kept = np.zeros_like(m)
    kept[1: n // 2] = m[1: n // 2]
    return CircleGrid(g.radius, np.fft.ifft(kept * n))


def seminorm_triple(g):
    """``(sum_{k>=1} |a_k|**2 r**(2k))**0.5`` for ``g`` analytic in the disk."""
    m = g.modes()
    return float(np.sqrt(np.sum(np.abs(m[1: g.size // 2]) ** 2)))


def radius_estimate(coeffs, min_terms=8):
    """Estimate the radius of convergence from a finite coefficient list.

    Fits ``log|c_k| = alpha - k log(rho)`` by least squares over the trailing
    half of the list, skipping exact zeros.  Returns ``inf`` when the whole
    trailing half vanishes.
    """
    c = np.abs(np.asarray(coeffs, dtype=complex))
    n = c.size
    tail_idx = np.arange(n // 2, n)
    tail = c[tail_idx]
    nonzero = tail > 0
    if n and not np.any(nonzero):
        return math.inf
    if np.count_nonzero(nonzero) < min_terms:
        raise InsufficientDataError(
            f"radius estimate needs at least {min_terms} nonzero trailing coefficients, "
            f"got {int(np.count_nonzero(nonzero))}"
        )
    k = tail_idx[nonzero].astype(float)
    slope, _ = np.polyfit(k, np.log(tail[nonzero]), 1)
    if slope >= 0:
        return 1.0 if slope == 0 else math.exp(-slope)
    return math.exp(-slope)


def _scan_nodes(lo, hi, count):
    # Chebyshev-spaced: dense near the endpoints where weakly bound zeros sit
    t = np.cos(np.pi * np.arange(count - 1, -1, -1) / (count - 1))
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * t


def find_real_zeros(u, interval, root_tol=1e-12, scan_points=4097):
    """All real zeros of ``u`` in ``[lo, hi]``, each verified to be simple.

    Sign changes on a Chebyshev scan grid are refined with Brent's method.
    Cells whose endpoints share a sign but where ``|u|`` dips are searched for
    a hidden pair of zeros; a dip that touches zero without crossing raises
    :class:`DegenerateZeroError`.
    """
    lo, hi = map(float, interval)
    if not -1.0 < lo < hi < 1.0:
        raise ValueError("interval must satisfy -1 < lo < hi < 1")
    f = lambda x: float(u(x))
    x = _scan_nodes(lo, hi, scan_points)
    v = np.asarray(u(x), dtype=float)
    scale = max(1.0, u.majorant(max(abs(lo), abs(hi))))
    flat = root_tol * scale
    brackets = []
    for i in range(x.size - 1):
        if v[i] == 0.0:
            brackets.append((x[i], x[i]))
        elif v[i] * v[i + 1] < 0:
            brackets.append((x[i], x[i + 1]))
    if v[-1] == 0.0:
        brackets.append((x[-1], x[-1]))

    # same-sign cells with a dip in |u|: look for a hidden pair or a double zero,
    # skipping cells where |u| >= |u_i| - |u'_i| h - M2 h^2 / 2 stays positive
    av = np.abs(v)
    dv = np.abs(np.asarray(u.derivative()(x), dtype=float))
    M2 = u.derivative().derivative().majorant(max(abs(lo), abs(hi)))
    h = np.maximum(np.diff(x, prepend=x[0]), np.diff(x, append=x[-1]))
    excluded = av - dv * h - 0.5 * M2 * h * h > flat
    for i in range(1, x.size - 1):
        if excluded[i]:
            continue
        if av[i] <= av[i - 1] and av[i] <= av[i + 1] and v[i - 1] * v[i] > 0 and v[i] * v[i + 1] > 0:
            s = math.copysign(1.0, v[i])
            res = optimize.minimize_scalar(
                lambda t: s * f(t), bounds=(x[i - 1], x[i + 1]), method="bounded",
                options={"xatol": 1e-15},
            )
            if res.fun < 0:
                brackets.append((x[i - 1], res.x))
                brackets.append((res.x, x[i + 1]))
            elif abs(res.fun) <= flat:
                raise DegenerateZeroError(
                    f"zero of even order near {res.x:.15g}", location=float(res.x)
                )

    roots = []
    for a, b in brackets:
        r = a if a == b else optimize.brentq(f, a, b, xtol=root_tol * 0.1, rtol=4 * np.finfo(float).eps)
        roots.append(r)
    roots = sorted(set(roots))
    du = u.derivative()
    for r in roots:
        if abs(du(r)) <= root_tol:
            raise DegenerateZeroError(f"zero at {r:.15g} is not simple", location=float(r))
    return [float(r) for r in roots]


def half_circle_rule(n):
    """Nodes and weights of the ``n``-point trapezoid rule on ``[0, pi]``."""
    if n < 2:
        raise ValueError("need at least two quadrature points")
    theta = np.linspace(0.0, np.pi, n)
    w = np.full(n, np.pi / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return theta, w


def unit_circle_quadrature(f, n):
    """Trapezoid rule for ``int_0^pi f(theta) dtheta`` with ``n`` points.

    Spectrally accurate when ``f`` extends to a smooth even periodic function.
    """
    theta, w = half_circle_rule(n)
    return float(np.dot(w, np.asarray(f(theta), dtype=float)))


def periodic_quadrature(f, n):
    """Rectangle rule for ``int_0^{2 pi} f(theta) dtheta`` (complex allowed)."""
    theta = 2 * np.pi * np.arange(n) / n
    return 2 * np.pi * np.mean(f(theta))


def quad_points_for(distance, base=512, digits=40.0):
    """Trapezoid size on ``[0, pi]`` for an integrand analytic in a strip.

    ``distance`` is the half-width of the strip of analyticity in ``theta``;
    the periodic trapezoid error then decays like ``exp(-2 (n-1) distance)``.
    """
    if distance <= 0 or not math.isfinite(distance):
        return int(base)
    n = int(math.ceil(digits / (2 * distance))) + 1
    return int(min(max(base, n), MAX_QUAD_POINTS))
