"""Acceptance criteria at their stated tolerances; one PASS/FAIL line each.

Run ``pytest tests/test_acceptance.py -v`` (the lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest
from scipy.stats import ortho_group

from illposed import nonlinear, ordering
from illposed.errors import RangeInclusionViolated
from illposed.gallery import (
    GridFunction,
    autoconv_apply,
    autoconv_frechet,
    build_cesaro,
    build_diagonal,
    build_embedding,
    build_hausdorff,
    build_integration,
    build_mimic,
    sequence_values,
)
from illposed.linalg_core import singular_values
from illposed.profiler import estimate_decay_exponent


def _random_pair(rng):
    m, n = rng.integers(4, 129, size=2)
    k = min(m, n)
    sigma = np.sort(rng.uniform(0.01, 1.0, k))[::-1]
    ratio = rng.uniform(0.05, 10.0, k)
    sigma_p = np.sort(sigma * ratio)[::-1]
    U, V = ortho_group.rvs(m, random_state=rng), ortho_group.rvs(n, random_state=rng)
    Up, Vp = ortho_group.rvs(m, random_state=rng), ortho_group.rvs(n, random_state=rng)
    A = (U[:, :k] * sigma) @ V[:, :k].T
    Ap = (Up[:, :k] * sigma_p) @ Vp[:, :k].T
    return Ap, A, float(np.max(sigma_p / sigma))


# -- 1 ------------------------------------------------------------------------


@pytest.mark.parametrize("k", [1, 2])
def test_integration_decay_exponent(acceptance, k):
    t0 = time.perf_counter()
    mu, _ = estimate_decay_exponent(singular_values(build_integration(k, 512).matrix))
    elapsed = time.perf_counter() - t0
    ok = (k - 0.1 * k) <= mu <= (k + 0.2 * k) and elapsed <= 30.0
    acceptance(1, f"integration order {k} decay exponent", ok,
               f"mu_hat={mu:.4f} in [{0.9 * k:.2f}, {1.2 * k:.2f}], {elapsed:.2f}s")
    assert ok


# -- 2 ------------------------------------------------------------------------


def test_sigma_order_implies_factorization(acceptance):
    rng = np.random.default_rng(20240501)
    worst = {"residual": 0.0, "defect": 0.0, "right": 0.0, "chain": 0.0}
    ok = True
    for _ in range(50):
        Ap, A, C = _random_pair(rng)
        fac = ordering.construct_connecting_factors(Ap, A)
        s_p, s = singular_values(Ap), singular_values(A)
        res = fac.residual / s_p[0]
        right = fac.right_norm / C
        bound = fac.left_norm * fac.right_norm * s
        chain = float(np.max((s_p - bound) / s_p[0]))
        worst["residual"] = max(worst["residual"], res)
        worst["defect"] = max(worst["defect"], fac.left_isometry_defect)
        worst["right"] = max(worst["right"], right)
        worst["chain"] = max(worst["chain"], chain)
        ok &= res <= 1e-9 and fac.left_isometry_defect <= 1e-10 and right <= 1 + 1e-6 and chain <= 1e-10
    acceptance(2, "sigma ordering -> connecting factors (50 pairs)", ok,
               f"max residual/sigma_max={worst['residual']:.2e}, isometry defect={worst['defect']:.2e}, "
               f"right_norm/C={worst['right']:.8f}, chain excess={worst['chain']:.2e}")
    assert ok


# -- 3 ------------------------------------------------------------------------


def test_douglas_construct_then_recover(acceptance):
    rng = np.random.default_rng(7)
    pos_ok = neg_ok = agree = True
    worst = 0.0
    for i in range(50):
        m, n, p = rng.integers(5, 60, size=3)
        r = int(rng.integers(1, min(m, n) + 1))
        A = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
        Ap = A @ rng.standard_normal((n, p))
        try:
            fac = ordering.douglas_factorize(Ap, A)
            rel = np.linalg.norm(A @ fac.right_factor - Ap, 2) / np.linalg.norm(Ap, 2)
            worst = max(worst, rel)
            pos_ok &= rel <= 1e-9
            success = True
        except RangeInclusionViolated:
            pos_ok = success = False
        agree &= success == math.isfinite(ordering.norm_order_constant(Ap.T, A.T))
    for i in range(50):
        m = int(rng.integers(6, 60))
        n, p = rng.integers(3, 60, size=2)
        r = int(rng.integers(1, min(m - 1, n) + 1))
        A = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
        Ap = A @ rng.standard_normal((n, p))
        U = np.linalg.svd(A)[0]
        leak = U[:, r:] @ rng.standard_normal((m - r, p))
        Ap = Ap + 1e-3 * np.linalg.norm(Ap, 2) * leak / np.linalg.norm(leak, 2)
        try:
            ordering.douglas_factorize(Ap, A)
            neg_ok = success = False
        except RangeInclusionViolated:
            success = False
        agree &= success == math.isfinite(ordering.norm_order_constant(Ap.T, A.T))
    ok = pos_ok and neg_ok and agree
    acceptance(3, "range inclusion recover / reject (50 + 50)", ok,
               f"max |AS-A'|/sigma_max(A')={worst:.2e}, negatives rejected={neg_ok}, criterion agrees={agree}")
    assert ok


# -- 4 ------------------------------------------------------------------------


def test_mimic_intertwining_and_spectrum(acceptance):
    worst_id = worst_spec = 0.0
    mult_ok = True
    for cells in range(1, 9):
        for sub in range(1, 9):
            D = build_diagonal("power2", cells).matrix
            E = build_embedding(cells, sub).matrix
            M = build_mimic("power2", cells, sub).matrix
            worst_id = max(worst_id, float(np.max(np.abs(E @ D - M @ E))))
            sv = singular_values(M)
            spec = sequence_values("power2", cells)
            distinct = []
            for v in sv:
                if not distinct or abs(distinct[-1][0] - v) > 1e-12:
                    distinct.append([v, 0])
                distinct[-1][1] += 1
            vals = np.array([d[0] for d in distinct])
            if vals.size != cells:
                mult_ok = False
                continue
            worst_spec = max(worst_spec, float(np.max(np.abs(vals - np.sort(spec)[::-1]))))
            mult_ok &= all(d[1] == sub for d in distinct)
    ok = worst_id <= 1e-14 and worst_spec <= 1e-12 and mult_ok
    acceptance(4, "embedding intertwines diagonal and mimic", ok,
               f"max |E D - M E|={worst_id:.1e}, spectrum error={worst_spec:.1e}, multiplicities={mult_ok}")
    assert ok


# -- 5 ------------------------------------------------------------------------


@pytest.mark.parametrize("moments", [8, 16])
def test_hausdorff_cesaro_intertwining(acceptance, moments):
    rng = np.random.default_rng(11)
    Y = rng.standard_normal((moments, 20))
    D = np.diag(1.0 / np.arange(1, moments + 1))
    prev, ratios = None, []
    for n in (32, 64, 128, 256):
        Hs = build_hausdorff(n, moments).matrix.T
        C = build_cesaro(n).matrix
        res = np.linalg.norm((Hs @ D - C @ Hs) @ Y, axis=0) / np.linalg.norm(Y, axis=0)
        if prev is not None:
            ratios.append(float(np.max(res / prev)))
        prev = res
    ok = max(ratios) <= 0.7
    acceptance(5, f"H* D vs C H* residual, {moments} moments", ok,
               "per-doubling ratios " + ", ".join(f"{r:.3f}" for r in ratios))
    assert ok


# -- 6 ------------------------------------------------------------------------


def test_tikhonov_ordering(acceptance):
    rng = np.random.default_rng(6)
    alphas = np.geomspace(1e-6, 1.0, 12)
    ok = True
    margins = []
    for _ in range(20):
        s = np.sort(rng.uniform(0.01, 1.0, 5))[::-1]
        sp = s * rng.uniform(0.05, 1.0, 5)
        sols = list(rng.standard_normal((10, 5)))
        rep = ordering.tikhonov_compare(np.diag(sp), np.diag(s), sols, alphas)
        margins.append(rep.spectral_criterion_margin)
        ok &= rep.ordering_holds_empirically and rep.spectral_criterion_margin >= 0.0
    viol = []
    for _ in range(20):
        s = np.sort(rng.uniform(0.01, 1.0, 5))[::-1]
        sp = s * rng.uniform(0.05, 1.0, 5)
        i = rng.integers(5)
        sp[i] = s[i] * rng.uniform(1.1, 3.0)
        rep = ordering.tikhonov_compare(np.diag(sp), np.diag(s), list(rng.standard_normal((10, 5))), alphas)
        viol.append(rep.spectral_criterion_margin)
    ok &= max(viol) < 0.0
    acceptance(6, "Tikhonov ordering on 5x5 diagonal families", ok,
               f"min margin (ordered)={min(margins):.3e}, max margin (violators)={max(viol):.3e}")
    assert ok


# -- 7 ------------------------------------------------------------------------


def test_cone_constants(acceptance):
    a, _ = nonlinear.tangential_cone_constants(0.5, 0.0)
    b, _ = nonlinear.tangential_cone_constants(0.5, 1.0)
    c, _ = nonlinear.tangential_cone_constants(1.0, 0.5)
    worst = 0.0
    for q in (0.05, 0.25, 0.5, 0.9, 1.0, 2.0, 5.0):
        for s in np.linspace(0.0, 1.0, 11):
            up, lo = nonlinear.tangential_cone_constants(q, s)
            if up is not None:
                worst = max(worst, abs(up - 1.0 - q * up**s))
            if lo is not None:
                z = 1.0 / lo
                worst = max(worst, abs(z - 1.0 - q * z ** (1.0 - s)))
    ok = (abs(a - 1.5) <= 1e-12 and abs(b - 2.0) <= 1e-12
          and abs(c - (3 + math.sqrt(5)) / 2) <= 1e-10 and worst <= 1e-10)
    acceptance(7, "tangential cone constants", ok,
               f"K(0.5,0)={a!r}, K(0.5,1)={b!r}, K(1,0.5)={c!r}, sweep residual={worst:.1e}")
    assert ok


# -- 8 ------------------------------------------------------------------------


def test_autoconvolution_properties(acceptance):
    rng = np.random.default_rng(8)
    n = 128
    rem = 0.0
    for _ in range(500):
        x = GridFunction(rng.standard_normal(n), n)
        xt = GridFunction(rng.standard_normal(n), n)
        lhs = autoconv_apply(x) - autoconv_apply(xt) - autoconv_frechet(xt) @ (x - xt)
        rem = max(rem, float(np.max(np.abs(lhs.coeffs - autoconv_apply(x - xt).coeffs))))
    quad = 0.0
    for _ in range(1000):
        v = GridFunction(rng.standard_normal(n) * rng.uniform(0.01, 10), n)
        quad = max(quad, autoconv_apply(v).norm() / v.norm() ** 2)
    lip = 0.0
    for _ in range(200):
        x, y = (GridFunction(rng.standard_normal(n), n) for _ in range(2))
        d = np.linalg.norm(autoconv_frechet(x).matrix - autoconv_frechet(y).matrix, 2)
        lip = max(lip, d / (x - y).norm())
    prob = nonlinear.autoconvolution_problem(n, 1.0, 1.0)
    v = nonlinear.degree_of_nonlinearity_check(prob, samples=100, seed=8)[0]
    ok = rem <= 1e-13 and quad <= 1.0 and lip <= 2 + 1e-9 and v.passed and v.q <= 1 + 1e-6
    acceptance(8, "autoconvolution remainder, growth, Lipschitz, degree (0,0,2)", ok,
               f"identity err={rem:.1e}, max |F(v)|/|v|^2={quad:.4f}, Lipschitz={lip:.4f}, "
               f"q={v.q:.4f} (shrunk {v.q_shrunk:.4f}) passed={v.passed}")
    assert ok


# -- 9 ------------------------------------------------------------------------


def test_stable_illposedness_fails(acceptance):
    n = 256
    t = GridFunction.from_function(lambda s: s, n)
    t2 = GridFunction.from_function(lambda s: s**2, n)
    one = GridFunction.constant(1.0, n)
    exps = [estimate_decay_exponent(singular_values(autoconv_frechet(x).matrix))[0] for x in (one, t, t2)]
    gaps = [abs(exps[i] - exps[j]) for i in range(3) for j in range(i + 1, 3)]
    prob = nonlinear.autoconvolution_problem(n, 1.0, 1.0)
    scan = nonlinear.stable_illposedness_scan(prob, samples=5, seed=9, points=(t, t2))
    ratio = scan.c_upper / scan.c_lower
    lin = nonlinear.linear_problem(build_integration(1, 64), radius=1.0)
    ctrl = nonlinear.stable_illposedness_scan(lin, samples=5, seed=9)
    ok = min(gaps) >= 0.3 and ratio >= 10 and ctrl.c_upper == 1.0 and ctrl.c_lower == 1.0
    acceptance(9, "derivative exponents change inside the ball", ok,
               f"exponents 1,t,t^2 = {exps[0]:.3f}, {exps[1]:.3f}, {exps[2]:.3f}; "
               f"c_upper/c_lower={ratio:.2e}; control [{ctrl.c_lower}, {ctrl.c_upper}]")
    assert ok


# -- 10 -----------------------------------------------------------------------


def test_refinement_stability(acceptance):
    v = ordering.sigma_order_levels(lambda n: build_integration(2, n), lambda n: build_integration(1, n),
                                    (64, 128, 256, 512))
    c = v.constants_per_level
    spread = (max(c) - min(c)) / min(c)
    ok = v.relation == ordering.A_PRIME_MORE and spread <= 0.2
    acceptance(10, "J^2 vs J verdict across refinements", ok,
               f"relation={v.relation}, constants={', '.join(f'{x:.4f}' for x in c)}, spread={spread:.1%}")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
