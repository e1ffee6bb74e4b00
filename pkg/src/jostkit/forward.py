"""Forward spectral map: Jacobi parameters to Jost function and spectral data.

The Jost function is built with the Geronimo-Case recursion in coefficient
arithmetic, so for finitely supported parameters it is an exact polynomial
(up to rounding) rather than a sampled approximation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import (
    ConsistencyError,
    DomainError,
    EnvelopeError,
    PoleError,
)
from .numerics import TaylorSeries, find_real_zeros

__all__ = [
    "Free",
    "Envelope",
    "JacobiParams",
    "GCState",
    "BoundState",
    "weight_from_residue",
    "residue_from_weight",
    "gc_step",
    "jost_from_finite",
    "jost_tail_limit",
    "jost_function",
    "jost_solution",
    "jost_solutions",
    "orthonormal_polynomials",
    "wronskian",
    "m_continued_fraction",
    "m_from_jost",
    "perturbation_determinant",
    "bound_states",
    "sturm_count",
    "boundary_identity_check",
]

# coefficient size treated as "the envelope tail no longer matters"
_TAIL_NEGLIGIBLE = 1e-17


@dataclass(frozen=True)
class Free:
    """``a_n = 1, b_n = 0`` beyond the stored entries."""


@dataclass(frozen=True)
class Envelope:
    """``|b_n| + |a_n**2 - 1| <= C * R**(-2n)`` for every ``n``."""

    C: float
    R: float

    def __post_init__(self):
        if not (self.C >= 0 and self.R > 1):
            raise ValueError("envelope needs C >= 0 and R > 1")

    def bound(self, n):
        return self.C * self.R ** (-2.0 * n)


Tail = Union[Free, Envelope]


@dataclass(frozen=True, eq=False)
class JacobiParams:
    """Off-diagonal ``a_1..a_K`` and diagonal ``b_1..b_K`` of a Jacobi matrix.

    ``extend(n)`` may supply ``(a_n, b_n)`` for ``n > K`` under an envelope
    tail; without it, entries beyond ``K`` are unknown and only the envelope
    bound is used for them.
    """

    a: np.ndarray
    b: np.ndarray
    tail: Tail = field(default_factory=Free)
    extend: Optional[Callable[[int], tuple]] = None

    def __post_init__(self):
        a = np.array(self.a, dtype=float).reshape(-1)
        b = np.array(self.b, dtype=float).reshape(-1)
        if a.size != b.size:
            raise ValueError(f"a and b must have equal length, got {a.size} and {b.size}")
        if np.any(~np.isfinite(a)) or np.any(~np.isfinite(b)):
            raise ValueError("Jacobi parameters must be finite")
        if np.any(a <= 0):
            raise ValueError(f"a_n must be positive (a[{int(np.argmax(a <= 0))}])")
        if isinstance(self.tail, Envelope):
            n = np.arange(1, a.size + 1)
            lhs = np.abs(b) + np.abs(a**2 - 1)
            rhs = self.tail.bound(n)
            bad = lhs > rhs * (1 + 1e-12) + 1e-300
            if np.any(bad):
                k = int(np.argmax(bad))
                raise EnvelopeError(
                    f"entry n={k + 1} violates the declared envelope: {lhs[k]:.3g} > {rhs[k]:.3g}"
                )
        elif not isinstance(self.tail, Free):
            raise TypeError("tail must be Free() or Envelope(C, R)")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def free(cls):
        return cls([], [])

    @property
    def K(self):
        return self.a.size

    @property
    def is_free_tail(self):
        return isinstance(self.tail, Free)

    @property
    def support(self):
        """Largest ``n`` with ``(a_n, b_n) != (1, 0)`` among the stored entries."""
        nontrivial = np.flatnonzero((self.a != 1.0) | (self.b != 0.0))
        return int(nontrivial[-1]) + 1 if nontrivial.size else 0

    def entry(self, n):
        """``(a_n, b_n)`` for ``n >= 1``; ``a_0 = 1`` by convention."""
        if n < 1:
            raise IndexError("Jacobi entries are indexed from 1")
        if n <= self.K:
            return float(self.a[n - 1]), float(self.b[n - 1])
        if self.extend is not None:
            an, bn = self.extend(n)
            return float(an), float(bn)
        return 1.0, 0.0

    def a_at(self, n):
        return 1.0 if n == 0 else self.entry(n)[0]

    def entries(self, count):
        ab = [self.entry(n) for n in range(1, count + 1)]
        return np.array([x[0] for x in ab]), np.array([x[1] for x in ab])

    def shifted(self, k):
        """The stripped matrix with parameters ``a_{n+k}, b_{n+k}``."""
        if k == 0:
            return self
        tail = self.tail
        if isinstance(tail, Envelope):
            tail = Envelope(tail.C * tail.R ** (-2.0 * k), tail.R)
        ext = None
        if self.extend is not None:
            parent = self.extend
            ext = lambda n, _k=k: parent(n + _k)
        if k <= self.K:
            return JacobiParams(self.a[k:], self.b[k:], tail, ext)
        return JacobiParams([], [], tail, ext)

    def finite_section(self, size):
        """Dense ``size x size`` upper-left block of the matrix."""
        a, b = self.entries(size)
        return np.diag(b) + np.diag(a[:-1], 1) + np.diag(a[:-1], -1)

    def default_terms(self, radius=1.0):
        """Number of entries to feed the recursion for a converged Jost function."""
        if self.is_free_tail or self.extend is None:
            return self.K
        env = self.tail
        rho = max(1.0, radius) ** 2
        n = self.K
        while env.C * (n + 1) * (rho / env.R**2) ** n > _TAIL_NEGLIGIBLE and n < 100000:
            n += 1
        return max(n, self.K)


def weight_from_residue(z, residue):
    """Point mass at ``z + 1/z`` from the residue of ``M`` at ``z``."""
    return (1.0 - 1.0 / (z * z)) * residue


def residue_from_weight(z, weight):
    return weight / (1.0 - 1.0 / (z * z))


@dataclass(frozen=True)
class BoundState:
    """Eigenvalue ``E = z + 1/z`` outside ``[-2, 2]`` with its spectral weight.

    ``residue`` is ``lim (zeta - z) M(zeta)``.  With ``M(z) = z + O(z^2)`` it
    has the sign of ``z`` reversed relative to the weight, since
    ``weight = (1 - z**-2) * residue``.
    """

    z: float
    weight: float
    residue: float

    @property
    def energy(self):
        return self.z + 1.0 / self.z

    @classmethod
    def from_weight(cls, z, weight):
        return cls(float(z), float(weight), float(residue_from_weight(z, weight)))

    @classmethod
    def from_residue(cls, z, residue):
        return cls(float(z), float(weight_from_residue(z, residue)), float(residue))


@dataclass(frozen=True, eq=False)
class GCState:
    """Normalized Geronimo-Case pair ``(c_n, g_n)`` with ``a_1...a_n``."""

    n: int
    c: np.ndarray
    g: np.ndarray
    prefactor: float = 1.0

    @classmethod
    def initial(cls):
        return cls(0, np.array([1.0]), np.array([1.0]), 1.0)

    @property
    def c_series(self):
        return TaylorSeries(self.c)

    @property
    def g_series(self):
        return TaylorSeries(self.g)


def _gc_arrays(c, g, a, b):
    size = c.size + 2
    zc = np.zeros(size)
    zc[2:] = c
    z1c = np.zeros(size)
    z1c[1: c.size + 1] = c
    gp = np.zeros(size)
    gp[: g.size] = g
    c_new = (zc - b * z1c + gp) / a
    g_new = ((1.0 - a * a) * zc - b * z1c + gp) / a
    return c_new, g_new


def gc_step(state, a_next, b_next):
    """One Geronimo-Case step ``(c_n, g_n) -> (c_{n+1}, g_{n+1})``."""
    if not a_next > 0:
        raise DomainError(f"a must be positive, got {a_next!r}")
    c, g = _gc_arrays(state.c, state.g, float(a_next), float(b_next))
    return GCState(state.n + 1, c, g, state.prefactor * float(a_next))


def _run_gc(J, count):
    state = GCState.initial()
    for n in range(1, count + 1):
        an, bn = J.entry(n)
        state = gc_step(state, an, bn)
    return state


def jost_from_finite(J):
    """Jost function of a finitely supported Jacobi matrix, as a polynomial."""
    if not J.is_free_tail:
        raise DomainError("jost_from_finite needs a Free tail")
    state = _run_gc(J, J.K)
    return TaylorSeries(state.g).trimmed()


def _tail_bound(C, G, prefactor, n_used, env, r):
    """Bound ``sup_{|z| <= r} |u(z) - g_{n_used}(z)|`` under the envelope.

    Majorant recursion for ``|C_m|, |G_m|`` beyond ``n_used`` with
    ``|b_m|, |a_m^2 - 1| <= eps_m``; the increments ``|G_m - G_{m-1}|`` are
    summed until they become geometrically negligible.
    """
    x = float(np.polyval(np.abs(C)[::-1], r))
    y = float(np.polyval(np.abs(G)[::-1], r))
    y0 = y
    rr = max(r, r * r)
    total = 0.0
    log_lo = 0.0
    log_hi = 0.0
    m = n_used
    last = None
    ratios = []
    while True:
        m += 1
        eps = env.bound(m)
        delta = eps * rr * x
        x, y = (r * r + eps * r) * x + y, y + delta
        total += delta
        if eps < 1:
            log_lo += 0.5 * math.log1p(-eps)
        log_hi += 0.5 * math.log1p(eps)
        if last is not None and last > 0:
            ratios.append(delta / last)
        last = delta
        steps = m - n_used
        if steps > 50 and delta <= 1e-22 * max(total, y0, 1e-300):
            q = max(ratios[-20:])
            if q < 1:
                total += delta * q / (1 - q)
                break
        if steps > 200000:
            raise EnvelopeError("tail bound did not converge; envelope too weak for this radius")
    lo = math.exp(log_lo)
    hi = math.exp(log_hi)
    # u = G_inf / P_inf with P_inf / P_n in [lo, hi]
    return total / (prefactor * lo) + (y0 / prefactor) * max(1.0 / lo - 1.0, 1.0 - 1.0 / hi)


def jost_tail_limit(J, n_terms=None, radius=1.0):
    """Truncated Jost function ``g_n`` together with a bound on ``|u - g_n|``.

    For an envelope tail the bound holds on ``|z| <= radius`` and requires
    ``radius < R``.  A free tail gives the exact polynomial and bound 0.
    """
    if J.is_free_tail:
        if n_terms is not None and n_terms < J.K:
            raise ValueError("n_terms must be at least the number of stored entries")
        return jost_from_finite(J), 0.0
    env = J.tail
    if env.R <= radius:
        raise EnvelopeError(
            f"envelope radius R={env.R} does not exceed the working radius {radius}",
            R=env.R, radius=radius,
        )
    if n_terms is None:
        n_terms = J.default_terms(radius)
    if n_terms < J.K:
        raise ValueError("n_terms must be at least the number of stored entries")
    n_used = n_terms if J.extend is not None else J.K
    state = _run_gc(J, n_used)
    C = state.c * state.prefactor
    G = state.g * state.prefactor
    bound = _tail_bound(C, G, state.prefactor, n_used, env, radius)
    return TaylorSeries(state.g, env.R), bound


def jost_function(J, radius=1.0):
    """``u(z; J)`` as a series: exact for free tails, converged for envelopes."""
    return jost_tail_limit(J, radius=radius)[0]


def _check_region(J, z):
    if isinstance(J.tail, Envelope) and np.any(np.abs(z) >= J.tail.R):
        raise DomainError(f"|z| must stay below the envelope radius {J.tail.R}")


def jost_solution(J, n, z):
    """Jost solution ``u_n(z) = a_n^{-1} z^n u(z; J^(n))``, with ``a_0 = 1``."""
    z = np.asarray(z, dtype=complex) if np.iscomplexobj(z) else np.asarray(z, dtype=float)
    _check_region(J, z)
    if n < 0:
        raise IndexError("n must be nonnegative")
    u = jost_function(J.shifted(n), radius=float(np.max(np.abs(z), initial=1.0)))
    out = z**n * u(z) / J.a_at(n)
    return out[()] if out.ndim == 0 else out


def jost_solutions(J, z, n_max):
    """``[u_0(z), ..., u_{n_max}(z)]``."""
    return np.array([jost_solution(J, n, z) for n in range(n_max + 1)])


def orthonormal_polynomials(J, x, n_max):
    """``[p_0(x), ..., p_{n_max}(x)]`` from the three-term recurrence."""
    x = np.asarray(x)
    out = np.empty((n_max + 1,) + x.shape, dtype=np.result_type(x, float))
    prev = np.zeros_like(out[0])
    cur = np.ones_like(out[0])
    out[0] = cur
    a_prev = 1.0
    for n in range(n_max):
        a_next, b_next = J.entry(n + 1)
        nxt = ((x - b_next) * cur - (a_prev if n > 0 else 0.0) * prev) / a_next
        prev, cur = cur, nxt
        a_prev = a_next
        out[n + 1] = cur
    return out


def wronskian(f, k, J, n):
    """``a_n (f_{n+1} k_n - f_n k_{n+1})`` with ``a_0 = 1``."""
    return J.a_at(n) * (f[n + 1] * k[n] - f[n] * k[n + 1])


def m_continued_fraction(J, z, depth=None):
    """``M(z)`` by the backward recursion seeded with the free value ``M = z``."""
    z = complex(z)
    if not 0 < abs(z) < 1:
        raise DomainError("m_continued_fraction needs 0 < |z| < 1")
    if depth is None:
        depth = J.default_terms() if not J.is_free_tail else J.K
    if J.is_free_tail and depth < J.support:
        raise ValueError("depth must reach past the support of J")
    E = z + 1.0 / z
    M = z
    for n in range(depth - 1, -1, -1):
        an, bn = J.entry(n + 1)
        d = E - bn - an * an * M
        if abs(d) < 1e-300:
            raise PoleError(f"continued fraction hits a pole at level {n}", z=z)
        M = 1.0 / d
    return M


def m_from_jost(J, z):
    """``M(z) = z u(z; J^(1)) / (a_1 u(z; J))``."""
    zc = np.asarray(z)
    _check_region(J, zc)
    r = float(np.max(np.abs(zc), initial=1.0))
    u0 = jost_function(J, radius=r)
    u1 = jost_function(J.shifted(1), radius=r)
    d = u0(zc)
    if np.any(np.abs(d) <= 1e-14 * u0.majorant(float(np.max(np.abs(zc))))):
        raise PoleError("u(z; J) vanishes: z is a bound state", z=z)
    out = zc * u1(zc) / (J.a_at(1) * d)
    return out[()] if np.ndim(out) == 0 else out


def perturbation_determinant(J, z):
    """``det(1 + (J - J0)(J0 - z - 1/z)^{-1})`` over the support block."""
    if not J.is_free_tail:
        raise DomainError("perturbation_determinant needs a Free tail")
    z = complex(z)
    if abs(z) >= 1 or z == 0 or z in (1, -1):
        raise DomainError("z must lie in the open unit disk minus the origin")
    s = J.support + 1
    a, b = J.entries(s)
    V = np.diag(b).astype(complex) + np.diag(a[:-1] - 1, 1) + np.diag(a[:-1] - 1, -1)
    idx = np.arange(1, s + 1)
    n, m = np.meshgrid(idx, idx, indexing="ij")
    G = (z ** np.abs(n - m) - z ** (n + m)) / (z - 1.0 / z)
    return complex(np.linalg.det(np.eye(s) + V @ G))


def _richardson_residue(M, zj, h):
    def sym(step):
        return 0.5 * step * (M(zj + step) - M(zj - step))

    return (4.0 * sym(h / 2) - sym(h)) / 3.0


def bound_states(J, root_tol=1e-12, edge=1e-9):
    """Zeros of ``u`` in ``(-1, 1)`` with their residues and weights.

    Residues of ``M`` come from symmetric difference quotients of
    ``(z - z_j) M(z)`` at steps ``h`` and ``h/2``, Richardson-extrapolated.
    """
    u = jost_function(J)
    zeros = find_real_zeros(u, (-1.0 + edge, 1.0 - edge), root_tol=root_tol)
    zeros = [z for z in zeros if abs(z) > 1e-12]
    M = lambda z: m_from_jost(J, z)
    states = []
    for i, zj in enumerate(zeros):
        gaps = [abs(zj - other) for other in zeros if other != zj]
        gaps.append(1.0 - abs(zj))
        gaps.append(abs(zj))
        h = min(1e-3, 0.1 * min(gaps))
        res = float(np.real(_richardson_residue(M, zj, h)))
        st = BoundState.from_residue(zj, res)
        if not st.weight > 0:
            raise ConsistencyError(
                f"computed weight {st.weight:.3g} at z={zj:.15g} is not positive", z=zj
            )
        states.append(st)
    return states


def _sign_flips(values, eventual_sign):
    signs = [math.copysign(1.0, v) for v in values if v != 0.0]
    signs.append(eventual_sign)
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


def sturm_count(J, n_max=None):
    """Eigenvalue counts in ``(2, inf)`` and ``(-inf, -2)``.

    Counts sign changes of ``p_n(2)`` and ``(-1)^n p_n(-2)``.  Exact zeros are
    skipped, so a zero between opposite signs counts once.  Beyond the
    support both sequences are linear in ``n``; their eventual sign is taken
    from the slope, so crossings past ``n_max`` are not lost.
    """
    if not J.is_free_tail:
        raise DomainError("sturm_count needs a Free tail")
    s = J.support
    if n_max is None:
        n_max = s + 1
    if n_max < s:
        raise ValueError(f"n_max={n_max} is smaller than the support {s}")
    N = max(n_max, s + 1)
    counts = []
    for x, parity in ((2.0, 1.0), (-2.0, -1.0)):
        p = orthonormal_polynomials(J, x, N)
        seq = p * parity ** np.arange(N + 1)
        slope = seq[N] - seq[N - 1]
        eventual = math.copysign(1.0, slope) if slope != 0 else math.copysign(1.0, seq[N])
        counts.append(_sign_flips(seq.tolist(), eventual))
    return counts[0], counts[1]


def boundary_identity_check(J, theta):
    """``max |Im(u_1 conj(u_0)) - sin(theta)|`` over the angles given."""
    theta = np.asarray(theta, dtype=float)
    z = np.exp(1j * theta)
    u0 = jost_function(J)(z)
    u1 = z * jost_function(J.shifted(1))(z) / J.a_at(1)
    return float(np.max(np.abs(np.imag(u1 * np.conj(u0)) - np.sin(theta))))
