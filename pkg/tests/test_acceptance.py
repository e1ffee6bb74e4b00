"""Acceptance criteria, one test and one summary line each.

Every test measures its criterion at the stated tolerance and runtime,
records a ``[PASS]``/``[FAIL]`` line, then asserts the same condition.
"""
import math
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal

from jostkit.errors import NoCanonicalWeightError
from jostkit.forward import (
    Envelope,
    JacobiParams,
    boundary_identity_check,
    jost_function,
    jost_solutions,
    orthonormal_polynomials,
    perturbation_determinant,
    sturm_count,
    wronskian,
)
from jostkit.inverse import SpectralData, canonical_weight, decay_rate_estimate, normalization_check, recover_jacobi
from jostkit.numerics import CircleGrid, TaylorSeries, coefficients_from_grid, radius_estimate
from jostkit.opuc import (
    bernstein_szego_weight,
    relative_szego,
    relative_szego_via_m,
    schur_forward,
    schur_inverse,
    szego_function,
    szego_recursion,
    verblunsky_decay_check,
)


def ensemble(count, K_max, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        K = int(rng.integers(1, K_max + 1))
        a = rng.uniform(0.5, 2.0, K)
        while a[-1] == 1.0:
            a[-1] = rng.uniform(0.5, 2.0)
        out.append(JacobiParams(a, rng.uniform(-1.0, 1.0, K)))
    return out


def exact_jost(J):
    """``g_K`` by the Geronimo-Case recursion in rational arithmetic."""
    c, g = [Fraction(1)], [Fraction(1)]
    for a, b in zip(J.a, J.b):
        a, b = Fraction(float(a)), Fraction(float(b))
        n = max(len(c) + 2, len(g))
        zc = [Fraction(0)] * n
        for k, x in enumerate(c):
            zc[k + 2] += x
            zc[k + 1] -= b * x
        c_new = [zc[k] + (g[k] if k < len(g) else 0) for k in range(n)]
        g_new = [c_new[k] - a * a * (c[k - 2] if 2 <= k < len(c) + 2 else 0) for k in range(n)]
        c, g = [x / a for x in c_new], [x / a for x in g_new]
    while len(g) > 1 and g[-1] == 0:
        g.pop()
    return g


DECAY_N = 25


def decay_jacobi():
    n = np.arange(1, DECAY_N + 1)
    return JacobiParams(np.ones(DECAY_N), (-1.0) ** n * 2.25 ** (-n), Envelope(1.0, 1.5))


@pytest.fixture(scope="module")
def decay_strip():
    J = decay_jacobi()
    t0 = time.perf_counter()
    u = jost_function(J)
    R, diag = recover_jacobi(SpectralData.from_jacobi(J), 20)
    return J, u, R, diag, time.perf_counter() - t0


def test_degree_law(acceptance):
    t0 = time.perf_counter()
    worst_coeff = worst_lead = 0.0
    degree_ok = True
    for J in ensemble(200, 8, seed=2024):
        u = jost_function(J)
        prod = float(np.prod(J.a))
        K = J.K
        aK, bK = J.a[-1], J.b[-1]
        exact = exact_jost(J)
        if aK != 1.0:
            deg, lead = 2 * K, (1 - aK**2) / prod
        else:
            deg, lead = 2 * K - 1, -bK / prod
        degree_ok &= u.degree == deg == len(exact) - 1
        worst_lead = max(worst_lead, abs(u.coeffs[u.degree] - lead) / max(1.0, abs(lead)))
        ref = np.array([float(x) for x in exact])
        worst_coeff = max(worst_coeff, float(np.max(np.abs(u.trimmed().coeffs - ref)) / max(1.0, np.max(np.abs(ref)))))
    seconds = time.perf_counter() - t0
    ok = degree_ok and worst_lead < 1e-12 and worst_coeff < 1e-12 and seconds < 5
    acceptance("degree law", ok,
               f"degrees {'match' if degree_ok else 'MISMATCH'}, leading coefficient err {worst_lead:.2e}, "
               f"coefficient err vs rational recursion {worst_coeff:.2e} (tol 1e-12)", seconds)
    assert ok


def test_roundtrip(acceptance):
    t0 = time.perf_counter()
    worst_in = worst_out = 0.0
    late = used = 0
    for J in ensemble(200, 8, seed=2024):
        data = SpectralData.from_jacobi(J, weights="canonical")
        if any(s.weight <= 0 for s in data.states):
            continue
        used += 1
        deg = jost_function(J).degree
        R, diag = recover_jacobi(data, J.K + 4)
        worst_in = max(worst_in, np.max(np.abs(R.a[: J.K] - J.a)), np.max(np.abs(R.b[: J.K] - J.b)))
        worst_out = max(worst_out, np.max(np.abs(R.a[J.K:] - 1)), np.max(np.abs(R.b[J.K:])))
        if diag.terminated_at is None or diag.terminated_at > math.ceil(deg / 2) + 2:
            late += 1
    seconds = time.perf_counter() - t0
    ok = worst_in < 1e-7 and worst_out < 1e-8 and late == 0 and seconds < 60
    acceptance("round-trip", ok,
               f"{used} matrices, parameter err {worst_in:.2e} (tol 1e-7), beyond-support err {worst_out:.2e} "
               f"(tol 1e-8), late terminations {late}", seconds)
    assert ok


def truncated_weights(J, extra=60):
    size = J.support + extra
    a, b = J.entries(size)
    E, V = eigh_tridiagonal(b, a[:-1])
    return E, V[0] ** 2


def test_canonical_weight_oracle(acceptance):
    t0 = time.perf_counter()
    errs = []
    for J in (JacobiParams([1.0], [2.0]), JacobiParams([math.sqrt(5.0)], [0.0])):
        u = jost_function(J)
        E, W = truncated_weights(J)
        for z in (0.5,) if J.b[0] == 2 else (-0.5, 0.5):
            w = canonical_weight(u, z, as_weight=True)
            i = int(np.argmin(np.abs(E - (z + 1 / z))))
            errs.append(abs(w - W[i]))
    b2 = canonical_weight(jost_function(JacobiParams([1.0], [2.0])), 0.5, as_weight=True)
    seconds = time.perf_counter() - t0
    ok = max(errs) < 1e-10 and abs(b2 - 0.75) < 1e-15 and seconds < 1
    acceptance("canonical-weight oracle", ok,
               f"b1=2 weight {b2!r}, max err vs truncated eigenvectors {max(errs):.2e} (tol 1e-10)", seconds)
    assert ok


def test_noncanonical_detection(acceptance):
    t0 = time.perf_counter()
    bad = SpectralData.from_weights([1.0, -2.0], [(0.5, 0.8)]).renormalized()
    _, diag_bad = recover_jacobi(bad, 40, R_work=3.0, stop_when_free=False)
    good = SpectralData.from_weights([1.0, -2.0], [(0.5, 0.75)])
    _, diag_good = recover_jacobi(good, 40, R_work=3.0, stop_when_free=False)
    seconds = time.perf_counter() - t0
    step = diag_bad.analyticity_loss["step"] if diag_bad.analyticity_loss else None
    ok = step is not None and step <= 3 and diag_good.analyticity_loss is None and diag_good.steps == 40 and seconds < 10
    acceptance("noncanonical detection", ok,
               f"w=0.80 flagged at step {step} (limit 3), w=0.75 clean over {diag_good.steps} steps "
               f"(max negative-mode fraction {max(diag_good.negative_mode_fraction):.1e})", seconds)
    assert ok


def test_no_finite_support_certificate(acceptance):
    t0 = time.perf_counter()
    u = TaylorSeries(np.polynomial.polynomial.polymul([1.0, -2.0], [1.0, -0.5]))
    try:
        canonical_weight(u, 0.5)
        raised, message = False, "no error"
    except NoCanonicalWeightError as exc:
        raised, message = exc.tag == "canonical-weight" and "z=0.5" in str(exc), str(exc)
    seconds = time.perf_counter() - t0
    ok = raised and seconds < 1
    acceptance("no-finite-support certificate", ok, f"(1-2z)(1-z/2): {message}", seconds)
    assert ok


def test_decay_roundtrip(acceptance, decay_strip):
    J, u, R, diag, seconds = decay_strip
    t0 = time.perf_counter()
    R_jost = radius_estimate(u.coeffs)
    rate = decay_rate_estimate(JacobiParams(R.a, R.b))
    seconds += time.perf_counter() - t0
    ok = R_jost >= 1.4 and abs(rate - 1.5) <= 0.07 * 1.5 and diag.analyticity_loss is None and seconds < 60
    acceptance("decay round-trip", ok,
               f"Jost radius estimate {R_jost:.4f} (>= 1.4), stripped decay rate {rate:.6f} (1.5 +- 7%)", seconds)
    assert ok


def test_seminorm_contraction(acceptance, decay_strip):
    J, u, R, diag, _ = decay_strip
    t0 = time.perf_counter()
    R1 = diag.R1
    levels = range(min(12, len(diag.seminorms) - 1))
    per_step = all(diag.contraction_ok[n] for n in levels)
    # cumulative: |||u^(n)||| <= R1^-2n prod(a_k sup|N#_k|) |||u^(0)|||
    worst = 0.0
    prefactor = 1.0
    for n in levels:
        prefactor *= R.a[n] * diag.sup_nsharp[n]
        envelope = R1 ** (-2 * (n + 1)) * prefactor * diag.seminorms[0]
        worst = max(worst, diag.seminorms[n + 1] / envelope)
    seconds = time.perf_counter() - t0
    ok = per_step and worst <= 1 + 1e-9 and len(levels) == 12
    acceptance("seminorm contraction", ok,
               f"per-step bound {'holds' if per_step else 'FAILS'} for n <= 12, max ratio to cumulative envelope "
               f"{worst:.3f} (<= 1), sup|N#| in [{min(diag.sup_nsharp[:12]):.4f}, {max(diag.sup_nsharp[:12]):.4f}]",
               seconds)
    assert ok


def test_identity_suite(acceptance):
    t0 = time.perf_counter()
    z64 = CircleGrid.nodes(0.5, 64)
    theta = np.pi * (np.arange(64) + 0.5) / 64
    w_err = b_err = n_err = d_err = 0.0
    for J in ensemble(30, 8, seed=7):
        u = jost_function(J)
        n_max = J.K + 4
        p = np.r_[[np.zeros_like(z64)], orthonormal_polynomials(J, z64 + 1 / z64, n_max + 1)]
        us = jost_solutions(J, z64, n_max + 1)
        ws = np.array([wronskian(p, us, J, n) for n in range(1, n_max)])
        w_err = max(w_err, float(np.max(np.abs(ws - u(z64)) / np.maximum(1.0, np.abs(u(z64))))))
        b_err = max(b_err, boundary_identity_check(J, theta))
        n_err = max(n_err, normalization_check(SpectralData.from_jacobi(J, weights="canonical")))
        L = np.array([perturbation_determinant(J, x) for x in z64])
        d_err = max(d_err, float(np.max(np.abs(L - u(z64) / u(0.0)))))
    seconds = time.perf_counter() - t0
    ok = w_err < 1e-11 and b_err < 1e-11 and n_err < 1e-10 and d_err < 1e-10
    acceptance("identity suite", ok,
               f"Wronskian {w_err:.1e}, boundary {b_err:.1e} (tol 1e-11); normalization {n_err:.1e}, "
               f"determinant {d_err:.1e} (tol 1e-10)", seconds)
    assert ok


def eigen_counts(J, extra=4000):
    a, b = J.entries(J.support + extra)
    above = eigvalsh_tridiagonal(b, a[:-1], select="v", select_range=(2.0, np.inf)).size
    below = eigvalsh_tridiagonal(b, a[:-1], select="v", select_range=(-np.inf, -2.0)).size
    return above, below


def test_sturm_counts(acceptance):
    t0 = time.perf_counter()
    mismatches = []
    for i, J in enumerate(ensemble(100, 6, seed=99)):
        if sturm_count(J) != eigen_counts(J):
            mismatches.append(i)
    seconds = time.perf_counter() - t0
    ok = not mismatches
    acceptance("Sturm counts", ok, f"100 matrices, mismatches {mismatches or 'none'}", seconds)
    assert ok


def random_alphas(rng, L, bound):
    r = bound * np.sqrt(rng.uniform(0, 1, L))
    return r * np.exp(2j * np.pi * rng.uniform(0, 1, L))


def test_opuc_suite(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    z = CircleGrid.nodes(0.5, 32)
    schur = two = tele = bs = 0.0
    for _ in range(20):
        L = int(rng.integers(1, 11))
        al = random_alphas(rng, L, 0.8)
        schur = max(schur, float(np.max(np.abs(schur_inverse(schur_forward(al), L - 1).alphas - al))))
        prod = np.ones_like(z)
        for n in range(L):
            fn, fnext = schur_forward(al, n=n), schur_forward(al, n=n + 1)
            d1 = relative_szego(al[n], fn, fnext, z, check=False)
            two = max(two, float(np.max(np.abs(d1 - relative_szego_via_m(al[n], fn, z)))))
            prod = prod * d1
        D = szego_function(bernstein_szego_weight(al), z)
        tele = max(tele, float(np.max(np.abs(prod - D))))
        phi = np.polynomial.polynomial.polyval(z, szego_recursion(al, L).phi_star_normalized(al))
        bs = max(bs, float(np.max(np.abs(1 / D - phi))))
    geo = 0.4 * 3.0 ** -np.arange(40)
    w = bernstein_szego_weight(geo)
    g = CircleGrid.sample(lambda x: 1 / szego_function(w, x), 0.9, 64)
    radius = radius_estimate(np.abs(coefficients_from_grid(g, 20)))
    R_est, passed = verblunsky_decay_check(geo, radius)
    seconds = time.perf_counter() - t0
    ok = (schur < 1e-10 and two < 1e-12 and tele < 1e-10 and bs < 1e-10
          and passed and abs(R_est - 3) <= 0.15 and seconds < 30)
    acceptance("OPUC suite", ok,
               f"Schur {schur:.1e}, two-formula {two:.1e}, telescoping {tele:.1e}, Bernstein-Szego {bs:.1e}, "
               f"decay check R_est {R_est:.4f} vs D^-1 radius {radius:.4f} {'pass' if passed else 'FAIL'}", seconds)
    assert ok
