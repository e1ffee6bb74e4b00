"""Inverse spectral map: Jost function and bound states back to Jacobi parameters.

The spectral side is a pair ``(u, states)``.  ``M`` is evaluated from the
measure it determines, the absolutely continuous part
``sin^2(theta) / |u(e^{i theta})|^2`` plus point masses, so that each
stripping step can rebuild ``M`` from scratch instead of composing
continued fractions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    AnalyticityLossError,
    ConsistencyError,
    DomainError,
    InsufficientAnalyticityError,
    InsufficientDataError,
    InvalidSpectralDataError,
    NoCanonicalWeightError,
    NonphysicalDataError,
    PoleError,
)
from .forward import (
    BoundState,
    JacobiParams,
    bound_states,
    jost_function,
    weight_from_residue,
)
from .numerics import (
    CircleGrid,
    TaylorSeries,
    ToleranceConfig,
    coefficients_from_grid,
    find_real_zeros,
    half_circle_rule,
    negative_mode_fraction,
    quad_points_for,
    seminorm_triple,
)

__all__ = [
    "SpectralData",
    "MFunction",
    "SampledMeasure",
    "StripState",
    "StepInfo",
    "StripDiagnostics",
    "measure_from_jost",
    "m_evaluate",
    "m_reflection_extend",
    "canonical_weight",
    "canonicity_check",
    "strip_once",
    "recover_jacobi",
    "decay_rate_estimate",
    "normalization_check",
]

# relative size of negative Fourier modes that counts as lost analyticity
ANALYTICITY_FLOOR = 1e-8
# relative size below which trailing coefficients of a stripped polynomial are dropped
TRIM_REL = 1e-11
_EDGE = 1e-9


def _real_roots_inside(u, root_tol):
    zeros = find_real_zeros(u, (-1.0 + _EDGE, 1.0 - _EDGE), root_tol=root_tol)
    return [z for z in zeros if abs(z) > 1e-12]


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Jost function ``u`` with the bound states it carries.

    The measure is normalized so that
    ``sum(w_j) + (2/pi) int_0^pi sin^2 / |u|^2 dtheta = 1``.
    """

    u: TaylorSeries
    states: tuple = ()

    def __post_init__(self):
        u = self.u if isinstance(self.u, TaylorSeries) else TaylorSeries(self.u)
        states = tuple(sorted(self.states, key=lambda s: s.z))
        for s in states:
            if not (0 < abs(s.z) < 1):
                raise DomainError(f"bound state z={s.z!r} is not in (-1, 1) minus 0")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "states", states)

    @classmethod
    def from_weights(cls, u, pairs):
        """Build from ``u`` and ``[(z_j, w_j), ...]``."""
        u = u if isinstance(u, TaylorSeries) else TaylorSeries(u)
        return cls(u, tuple(BoundState.from_weight(z, w) for z, w in pairs))

    @classmethod
    def from_jacobi(cls, J, weights="residue", root_tol=1e-12):
        """Spectral data of ``J``.

        ``weights="residue"`` takes the weights from numerical residues of
        ``M``; ``"canonical"`` uses the canonical formula at every zero.
        """
        u = jost_function(J)
        if weights == "residue":
            return cls(u, tuple(bound_states(J, root_tol=root_tol)))
        if weights == "canonical":
            zs = _real_roots_inside(u, root_tol)
            return cls(u, tuple(BoundState.from_residue(z, canonical_weight(u, z)) for z in zs))
        raise ValueError(f"unknown weight rule {weights!r}")

    @property
    def total_point_mass(self):
        return float(sum(s.weight for s in self.states))

    def m_function(self, theta_points=512):
        return MFunction(self, theta_points)

    def ac_mass(self, theta_points=512):
        return self.m_function(theta_points).ac_mass()

    def normalization_deviation(self, theta_points=512):
        """Signed ``sum(w) + ac_mass - 1``."""
        return self.total_point_mass + self.ac_mass(theta_points) - 1.0

    def renormalized(self, theta_points=512):
        """Rescale ``u`` so the point masses and the a.c. part sum to one."""
        rest = 1.0 - self.total_point_mass
        if not rest > 0:
            raise InvalidSpectralDataError(
                f"point masses sum to {self.total_point_mass:.17g}; nothing left for the a.c. part"
            )
        c = math.sqrt(self.ac_mass(theta_points) / rest)
        return SpectralData(self.u.scaled(c), self.states)

    def validate(self, tol=None, theta_points=512, match_tol=1e-9):
        """Check positivity, the zero/state correspondence and normalization."""
        tol = tol or ToleranceConfig()
        for s in self.states:
            if not s.weight > 0:
                raise InvalidSpectralDataError(f"weight at z={s.z!r} is not positive", z=s.z)
        zeros = _real_roots_inside(self.u, tol.root_tol)
        given = [s.z for s in self.states]
        unmatched_z = [z for z in zeros if not any(abs(z - g) <= match_tol for g in given)]
        unmatched_s = [g for g in given if not any(abs(z - g) <= match_tol for z in zeros)]
        if unmatched_z or unmatched_s or len(zeros) != len(given):
            raise InvalidSpectralDataError(
                f"zeros of u in (-1, 1) {zeros} do not match the bound states {given}",
                zeros=zeros, states=given,
            )
        dev = abs(self.normalization_deviation(theta_points))
        if dev > tol.norm_tol:
            raise InvalidSpectralDataError(
                f"total mass differs from 1 by {dev:.3g}", deviation=dev
            )
        return self


class MFunction:
    """``M(z) = int d gamma(x) / (z + 1/z - x)`` for the measure of ``(u, states)``.

    The a.c. part uses the trapezoid rule in ``theta``; the node count grows
    with the inverse distance from the integrand's singularities to the
    real ``theta`` axis, so accuracy holds near the unit circle as well.
    """

    def __init__(self, data, theta_points=512):
        self.data = data
        self.theta_points = int(theta_points)
        u = data.u
        self._u = u
        self._du = u.derivative()
        dist = []
        for r in u.roots():
            d = abs(math.log(abs(r))) if r != 0 else math.inf
            if d > 1e-10:
                dist.append(d)
        if not u.is_polynomial:
            dist.append(math.log(u.radius))
        self._u_distance = min(dist, default=math.inf)
        self._rules = {}

    def _rule(self, n):
        if n not in self._rules:
            theta, w = half_circle_rule(n)
            z = np.exp(1j * theta)
            uz = self._u(z)
            mod2 = np.abs(uz) ** 2
            s2 = np.sin(theta) ** 2
            with np.errstate(divide="ignore", invalid="ignore"):
                dens = s2 / mod2
            scale = max(1.0, self._u.majorant(1.0))
            for idx, pt in ((0, 1.0), (-1, -1.0)):
                if mod2[idx] <= (1e-14 * scale) ** 2:
                    # boundary zero of u at +-1: the limit of sin^2/|u|^2 is 1/|u'|^2
                    dens[idx] = 1.0 / abs(self._du(pt)) ** 2
            self._rules[n] = (2.0 * np.cos(theta), (2.0 / math.pi) * w * dens)
        return self._rules[n]

    def points_for(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        d = self._u_distance
        nz = np.abs(z[z != 0])
        if nz.size:
            d = min(d, float(np.min(np.abs(np.log(nz)))))
        return quad_points_for(d, base=self.theta_points)

    def ac_mass(self):
        n = quad_points_for(self._u_distance, base=self.theta_points)
        return float(np.sum(self._rule(n)[1]))

    def density(self, theta):
        """``f(2 cos theta) = sin(theta) / (pi |u(e^{i theta})|^2)``."""
        theta = np.asarray(theta, dtype=float)
        return np.sin(theta) / (math.pi * np.abs(self._u(np.exp(1j * theta))) ** 2)

    def _check(self, z):
        if np.any(z == 0):
            raise DomainError("M is evaluated on the punctured disk")
        if np.any(np.abs(z) >= 1):
            raise DomainError("M is evaluated inside the unit disk")
        for s in self.data.states:
            if np.any(np.abs(z - s.z) < 1e-14):
                raise PoleError(f"M has a pole at the bound state z={s.z!r}", z=s.z)

    def _sum(self, z, power):
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        z = z.reshape(-1)
        self._check(z)
        x, rho = self._rule(self.points_for(z))
        E = z + 1.0 / z
        out = np.empty(z.size, dtype=complex)
        chunk = max(1, (1 << 22) // max(1, x.size))
        for i in range(0, z.size, chunk):
            Ei = E[i: i + chunk, None]
            out[i: i + chunk] = np.sum(rho / (Ei - x) ** power, axis=1)
        for s in self.data.states:
            out += s.weight / (E - s.energy) ** power
        return out.reshape(shape)

    def __call__(self, z):
        out = self._sum(z, 1)
        return out[()] if out.ndim == 0 else out

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        out = -(1.0 - 1.0 / z**2) * self._sum(z, 2)
        return out[()] if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class SampledMeasure:
    theta: np.ndarray
    density: np.ndarray
    point_masses: tuple
    ac_mass: float

    @property
    def total_mass(self):
        return self.ac_mass + sum(w for _, w in self.point_masses)


def measure_from_jost(data, theta_points=512, norm_tol=1e-10):
    """Density ``f(2 cos theta)`` on a ``theta`` grid plus the point masses."""
    mf = data.m_function(theta_points)
    theta = np.linspace(0.0, math.pi, int(theta_points))
    measure = SampledMeasure(
        theta,
        mf.density(theta),
        tuple((s.energy, s.weight) for s in data.states),
        mf.ac_mass(),
    )
    dev = abs(measure.total_mass - 1.0)
    if dev > norm_tol:
        raise InvalidSpectralDataError(f"total mass differs from 1 by {dev:.3g}", deviation=dev)
    return measure


def m_evaluate(data, z, theta_points=512):
    """``M(z)`` of the spectral data at points of the punctured unit disk."""
    return data.m_function(theta_points)(z)


def m_reflection_extend(data, z, theta_points=512):
    """Continuation of ``M`` to ``1 < |z| < radius(u)`` by reflection.

    ``M(z) = conj(M(1/conj z)) + (z - 1/z) / (u(z) conj(u(1/conj z)))``.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) <= 1) or np.any(np.abs(z) >= data.u.radius):
        raise DomainError("reflection needs 1 < |z| < radius(u)")
    w = 1.0 / np.conj(z)
    u = data.u
    den = u(z) * np.conj(u(w))
    if np.any(np.abs(den) <= 1e-300):
        raise PoleError("u(z) u#(z) vanishes", z=z)
    out = np.conj(m_evaluate(data, w, theta_points)) + (z - 1.0 / z) / den
    return out[()] if out.ndim == 0 else out


def canonical_weight(u, z_j, as_weight=False, zero_tol=1e-12):
    """Canonical residue ``(z_j - 1/z_j) / (u'(z_j) u(1/z_j))`` at a zero of ``u``.

    The residue is ``lim (z - z_j) M(z)`` for the canonical choice; pass
    ``as_weight=True`` for the point mass instead.
    """
    z_j = float(z_j)
    if not 0 < abs(z_j) < 1:
        raise DomainError("z_j must lie in (-1, 1) minus 0")
    inv = 1.0 / z_j
    if abs(inv) >= u.radius:
        raise InsufficientAnalyticityError(
            f"1/z_j={inv:.6g} lies outside the disk of analyticity of radius {u.radius:.6g}",
            z=z_j,
        )
    u_inv = float(u(inv))
    if abs(u_inv) <= zero_tol * max(1.0, u.majorant(abs(inv))):
        raise NoCanonicalWeightError(f"no canonical weight at z={z_j:.15g}", z=z_j)
    du = float(u.derivative()(z_j))
    if du == 0.0:
        raise NoCanonicalWeightError(f"zero at z={z_j:.15g} is not simple", z=z_j)
    res = (z_j - inv) / (du * u_inv)
    return float(weight_from_residue(z_j, res)) if as_weight else float(res)


@dataclass(frozen=True)
class CanonicityEntry:
    z: float
    is_canonical: bool
    deviation: float
    canonical_residue: float
    canonical_weight: float


def canonicity_check(data, R_work, residue_tol=1e-8):
    """Compare each residue with its canonical value for ``|z_j| > 1/R_work``."""
    if data.u.radius < R_work:
        raise InsufficientAnalyticityError(
            f"radius(u)={data.u.radius} is below the working radius {R_work}"
        )
    report = []
    for s in data.states:
        if abs(s.z) <= 1.0 / R_work:
            continue
        res = canonical_weight(data.u, s.z)
        dev = abs(s.residue - res)
        report.append(
            CanonicityEntry(s.z, dev <= residue_tol, dev, res, float(weight_from_residue(s.z, res)))
        )
    return report


@dataclass(frozen=True)
class StepInfo:
    """What one stripping step measured."""

    r0: float
    R_s: float
    R_work: float
    negative_mode_fraction: float
    mass_deviation: float


@dataclass(frozen=True, eq=False)
class StripState:
    """Spectral data of ``J^(n)`` with the parameters stripped so far."""

    n: int
    u: TaylorSeries
    states: tuple
    a: tuple = ()
    b: tuple = ()
    last_step: Optional[StepInfo] = None

    @classmethod
    def initial(cls, data):
        return cls(0, data.u, tuple(data.states))

    @property
    def data(self):
        return SpectralData(self.u, self.states)

    @property
    def is_free(self):
        return self.u.degree == 0 and not self.states


def _pow2_at_least(n):
    return 1 << max(0, int(n - 1).bit_length())


def _pick_radius(candidates, avoid, upper):
    """Candidate radius below ``upper`` farthest (in log scale) from ``avoid``."""
    best, score = None, -math.inf
    for r in candidates:
        if not 1.0 < r < upper:
            continue
        gap = min((abs(math.log(r / x)) for x in avoid), default=math.inf)
        if gap > 0.04:
            return r
        if gap > score:
            best, score = r, gap
    if best is None:
        raise InsufficientAnalyticityError(f"no usable radius in (1, {upper:.6g})")
    return best


def _default_work_radius(u):
    return 3.0 if u.is_polynomial else 1.0 + 0.5 * (u.radius - 1.0)


def _continued_u(u, M, a, z):
    """``a z^{-1} [u(z) M(1/z) + (z - 1/z) / u(1/z)]`` for ``|z| > 1``."""
    w = 1.0 / z
    return a * w * (u(z) * M(w) + (z - w) / u(w))


def _new_states(u_next, u_prev, M, a, root_tol):
    """Bound states of the stripped matrix: zeros of the stripped Jost function.

    Residues come from the canonical formula when ``1/z`` lies in the disk of
    ``u_next``; otherwise from the pole of ``M_next = (E - b - 1/M)/a^2``,
    whose residue at a zero of ``M`` is ``-1 / (a^2 M'(z))``.
    """
    states = []
    for z in _real_roots_inside(u_next, root_tol):
        if 1.0 / abs(z) < u_next.radius:
            res = canonical_weight(u_next, z)
        else:
            res = float(np.real(-1.0 / (a * a * M.derivative(z))))
        st = BoundState.from_residue(z, res)
        if not st.weight > 0:
            raise ConsistencyError(
                f"stripped bound state at z={z:.15g} has weight {st.weight:.3g}", z=z
            )
        states.append(st)
    return tuple(states)


def strip_once(state, theta_points=512, r0=0.25, R_s=None, R_work=None, tol=None):
    """Remove ``(a_{n+1}, b_{n+1})`` and pass to the spectral data of ``J^(n+1)``.

    ``R_s`` is the circle (outside the unit disk) on which the stripped Jost
    function is sampled and its Taylor coefficients extracted.  ``R_work`` is
    where negative Laurent modes are measured; above ``ANALYTICITY_FLOOR``
    they mean the weights were not canonical and
    :class:`AnalyticityLossError` is raised.
    """
    tol = tol or ToleranceConfig()
    u = state.u
    data = state.data
    M = MFunction(data, theta_points)
    zs = [abs(s.z) for s in state.states]

    # Taylor coefficients of M/z near 0
    r = min([r0] + [0.5 * x for x in zs])
    grid = CircleGrid.sample(lambda z: M(z) / z, r, 64)
    m = coefficients_from_grid(grid, 2).real
    mass_dev = float(m[0] - 1.0)
    m1, m2 = m[1] / m[0], m[2] / m[0]
    b = m1
    radicand = 1.0 + m2 - m1 * m1
    if not radicand > 0:
        raise NonphysicalDataError(
            f"a^2 = {radicand:.6g} at step {state.n + 1} is not positive", step=state.n + 1
        )
    a = math.sqrt(radicand)

    inverse_zeros = [1.0 / x for x in zs]
    upper = u.radius
    if R_s is None:
        R_s = _pick_radius((1.2, 1.15, 1.25, 1.1, 1.3, 1.05), inverse_zeros, upper)
    elif not 1.0 < R_s < upper:
        raise InsufficientAnalyticityError(f"R_s={R_s} must lie in (1, radius(u)={upper}))")
    if R_work is None:
        base = _default_work_radius(u)
        R_work = _pick_radius((base, 0.97 * base, 1.03 * base, 0.9 * base), inverse_zeros, upper)
    elif not 1.0 < R_work <= upper:
        raise InsufficientAnalyticityError(f"R_work={R_work} must lie in (1, radius(u)={upper}]")

    n_coef = len(u)
    size = max(256, _pow2_at_least(2 * n_coef + 4))
    f = lambda z: _continued_u(u, M, a, z)
    samples = CircleGrid.sample(f, R_s, size)
    coeffs = coefficients_from_grid(samples, n_coef - 1).real
    if u.is_polynomial:
        keep = max(1, u.degree)
        coeffs = coeffs[:keep]
        scale = float(np.max(np.abs(coeffs)))
        u_next = TaylorSeries(coeffs).trimmed(TRIM_REL * scale)
    else:
        u_next = TaylorSeries(coeffs, u.radius)

    work = CircleGrid.sample(f, R_work, size)
    neg = negative_mode_fraction(work)
    info = StepInfo(r, R_s, R_work, neg, mass_dev)
    if neg > ANALYTICITY_FLOOR:
        raise AnalyticityLossError(
            f"negative Laurent modes of relative size {neg:.3g} on |z|={R_work:.6g} at step {state.n + 1}",
            step=state.n + 1, fraction=neg, radius=R_work, info=info,
        )

    states = _new_states(u_next, u, M, a, tol.root_tol)
    if len(states) > len(state.states):
        raise ConsistencyError(
            f"stripping created bound states ({len(state.states)} -> {len(states)})"
        )
    return StripState(
        state.n + 1, u_next, states, state.a + (a,), state.b + (float(b),), info
    )


@dataclass
class StripDiagnostics:
    """Per-step measurements collected by :func:`recover_jacobi`.

    Lists are indexed by the level ``n`` of ``u^(n)``.  ``contraction_ok[n]``
    compares ``|||u^(n+1)|||`` with ``a_{n+1} R1^-2 sup|N#_n| |||u^(n)|||``
    and is ``None`` at levels with bound states, where that bound is not
    claimed.
    """

    R1: float
    seminorms: list = field(default_factory=list)
    u_at_zero: list = field(default_factory=list)
    sup_nsharp: list = field(default_factory=list)
    negative_mode_fraction: list = field(default_factory=list)
    mass_deviation: list = field(default_factory=list)
    state_counts: list = field(default_factory=list)
    contraction_ok: list = field(default_factory=list)
    steps: int = 0
    terminated_at: Optional[int] = None
    analyticity_loss: Optional[dict] = None

    @property
    def residual_tail(self):
        return self.seminorms[-1] if self.seminorms else math.nan


def _sup_nsharp(M, R1, size=256):
    # N#(z) = z M(1/z); on |z| = R1 that is M(w)/w on |w| = 1/R1
    w = CircleGrid.nodes(1.0 / R1, size)
    return float(np.max(np.abs(M(w) / w)))


def recover_jacobi(
    data,
    N,
    theta_points=512,
    r0=0.25,
    R_s=None,
    R_work=None,
    R1=1.2,
    tol=None,
    stop_when_free=True,
):
    """Strip ``N`` times and return the recovered parameters with diagnostics.

    Stripping stops early once ``u^(n)`` is constant with no bound states;
    the remaining entries are then exactly ``(1, 0)``.  On analyticity loss
    the parameters recovered so far are returned and the failure is recorded
    in ``diagnostics.analyticity_loss``.
    """
    tol = tol or ToleranceConfig()
    if N < 0:
        raise ValueError("N must be nonnegative")
    diag = StripDiagnostics(R1)
    state = StripState.initial(data)
    measure_level = data.u.radius > R1

    def record(st):
        u = st.u
        if measure_level:
            diag.seminorms.append(seminorm_triple(CircleGrid.sample(u, R1, max(256, _pow2_at_least(2 * len(u) + 4)))))
        diag.u_at_zero.append(float(u(0.0)))
        diag.state_counts.append(len(st.states))
        if measure_level:
            diag.sup_nsharp.append(_sup_nsharp(MFunction(st.data, theta_points), R1))

    record(state)
    while state.n < N:
        if stop_when_free and state.is_free:
            diag.terminated_at = state.n
            break
        try:
            nxt = strip_once(state, theta_points, r0, R_s, R_work, tol)
        except AnalyticityLossError as exc:
            diag.analyticity_loss = {"step": exc.details["step"], "fraction": exc.details["fraction"],
                                     "radius": exc.details["radius"], "message": str(exc)}
            diag.negative_mode_fraction.append(exc.details["fraction"])
            break
        diag.negative_mode_fraction.append(nxt.last_step.negative_mode_fraction)
        diag.mass_deviation.append(nxt.last_step.mass_deviation)
        record(nxt)
        if measure_level:
            n = state.n
            if state.states:
                diag.contraction_ok.append(None)
            else:
                bound = nxt.a[-1] * R1**-2 * diag.sup_nsharp[n] * diag.seminorms[n]
                diag.contraction_ok.append(diag.seminorms[n + 1] <= bound * (1 + 1e-9) + 1e-13)
        state = nxt
    diag.steps = state.n
    a = list(state.a)
    b = list(state.b)
    if diag.terminated_at is not None:
        a += [1.0] * (N - len(a))
        b += [0.0] * (N - len(b))
    return JacobiParams(a, b), diag


def decay_rate_estimate(J, floor=1e-14, min_terms=10):
    """Estimate ``R`` from ``|a_n - 1| + |b_n| ~ R^{-2n}``.

    Log-linear regression against ``2n`` over the trailing half of the
    entries above ``floor``.  Returns ``inf`` when nothing is above the floor
    or, for a free tail, when too few entries are nontrivial.
    """
    a, b = J.a, J.b
    n = np.arange(1, a.size + 1)
    x = np.abs(a - 1.0) + np.abs(b)
    mask = x > floor
    if not np.any(mask):
        return math.inf
    if np.count_nonzero(mask) < min_terms:
        if J.is_free_tail:
            return math.inf
        raise InsufficientDataError(
            f"decay estimate needs {min_terms} entries above {floor:g}, got {int(np.count_nonzero(mask))}"
        )
    nn, xx = n[mask], x[mask]
    half = nn.size // 2
    slope, _ = np.polyfit(2.0 * nn[half:], np.log(xx[half:]), 1)
    return math.inf if slope >= 0 else math.exp(-slope)


def normalization_check(data, theta_points=512):
    """``|sum(w) + (2/pi) int_0^pi sin^2 / |u|^2 dtheta - 1|``."""
    return abs(data.normalization_deviation(theta_points))
