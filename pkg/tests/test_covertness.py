import math

import numpy as np
import pytest
from scipy.integrate import quad

from aircov.covertness import (CovertBounds, covert_feasible, covert_roots,
                               dep_pinsker_bound, detection_report,
                               exact_min_dep, kld, lambert_w)


# ---------------------------------------------------------------- oracles

def omega_fixed_point():
    # w <- (w^2 + z e^{-w}) / (w + 1) with z = 1, independent of lambert_w
    w = 0.5
    for _ in range(200):
        w_new = (w * w + math.exp(-w)) / (w + 1.0)
        if abs(w_new - w) < 1e-15:
            break
        w = w_new
    return w


def bisect_root(target, lo, hi, iters=200):
    # root of ln x + 1/x = target on [lo, hi]
    def f(x):
        return math.log(x) + 1.0 / x - target
    flo = f(lo)
    assert flo * f(hi) <= 0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if flo * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
            flo = f(lo)
    return 0.5 * (lo + hi)


def kld_quadrature(sigma0, sigma1):
    # E_0[ln(p0/p1)] with |y|^2 exponential of mean sigma0 under H0
    def integrand(t):
        return (math.exp(-t / sigma0) / sigma0
                * (math.log(sigma1 / sigma0) + t * (1.0 / sigma1 - 1.0 / sigma0)))
    val, _ = quad(integrand, 0.0, np.inf)
    return val


def lrt_error_sum_mc(sigma0, sigma1, n, seed=0):
    # simulate the optimal likelihood-ratio test on |y|^2 directly from the
    # two log-densities, no closed-form threshold involved
    rng = np.random.default_rng(seed)
    t0 = rng.exponential(sigma0, n)
    t1 = rng.exponential(sigma1, n)

    def says_h1(t):
        return (-math.log(sigma1) - t / sigma1) > (-math.log(sigma0) - t / sigma0)

    false_alarm = np.mean(says_h1(t0))
    missed = np.mean(~says_h1(t1))
    return float(false_alarm + missed)


# ---------------------------------------------------------------- lambert_w

def test_lambert_principal_zero():
    assert lambert_w("principal", 0.0) == 0.0


def test_lambert_branch_point():
    assert lambert_w("minus_one", -1.0 / math.e) == -1.0


def test_lambert_omega_constant():
    assert lambert_w("principal", 1.0) == pytest.approx(omega_fixed_point(), abs=1e-12)
    assert lambert_w("principal", 1.0) == pytest.approx(0.5671432904, abs=1e-9)


def test_lambert_residuals_both_branches():
    for z in np.linspace(-1.0 / math.e + 1e-9, -1e-9, 500):
        for branch in ("principal", "minus_one"):
            w = lambert_w(branch, z)
            assert abs(w * math.exp(w) - z) <= 1e-12
            if branch == "principal":
                assert w >= -1.0 - 1e-12
            else:
                assert w <= -1.0 + 1e-12
    for z in [1e-6, 0.1, 0.5, 1.0, 2.0, math.e, 10.0, 1e3, 1e8]:
        w = lambert_w("principal", z)
        assert abs(w * math.exp(w) - z) <= 1e-12 * max(1.0, z)


def test_lambert_domain_errors():
    with pytest.raises(ValueError):
        lambert_w("principal", -1.0)
    with pytest.raises(ValueError):
        lambert_w("minus_one", 0.5)
    with pytest.raises(ValueError):
        lambert_w("third", 0.5)


# ---------------------------------------------------------------- covert_roots

def test_roots_match_bisection_oracle():
    bounds = covert_roots(0.1)
    assert bounds.x2 == pytest.approx(bisect_root(1.02, 1.0, 2.0), abs=1e-9)
    assert bounds.x1 == pytest.approx(bisect_root(1.02, 0.5, 1.0), abs=1e-9)
    assert 1.2290 <= bounds.x2 <= 1.2306
    assert bounds.x1 == pytest.approx(0.8241, abs=5e-4)
    assert bounds.cap_factor == pytest.approx(bounds.x2 - 1.0)


def test_roots_residuals():
    for eps in (0.01, 0.05, 0.1, 0.2, 0.5):
        b = covert_roots(eps)
        c = 1.0 + 2.0 * eps ** 2
        for x in (b.x1, b.x2):
            assert abs(math.log(x) + 1.0 / x - c) <= 1e-9
        assert 0.0 < b.x1 < 1.0 < b.x2


def test_roots_shrink_to_one():
    prev = covert_roots(0.4)
    for eps in (0.2, 0.1, 0.05, 0.02, 0.01):
        b = covert_roots(eps)
        assert prev.x1 < b.x1 < 1.0 < b.x2 < prev.x2
        prev = b
    assert covert_roots(1e-3).x2 == pytest.approx(1.0, abs=0.1)


def test_roots_reject_bad_epsilon():
    with pytest.raises(ValueError):
        covert_roots(0.0)


# ---------------------------------------------------------------- kld / dep

def test_kld_basics():
    assert kld(1.0, 1.0) == 0.0
    assert kld(1.0, 2.0) == pytest.approx(math.log(2.0) - 0.5, abs=1e-12)
    assert kld(1.0, 2.0) == pytest.approx(0.1931471806, abs=1e-9)
    with pytest.raises(ValueError):
        kld(0.0, 1.0)


def test_kld_against_quadrature():
    for s0, s1 in [(2.0, 1.0), (1.0, 3.0), (0.3, 0.7), (5.0, 4.9)]:
        assert kld(s0, s1) == pytest.approx(kld_quadrature(s0, s1), abs=1e-6)


def test_kld_monotone_in_sigma1():
    vals = [kld(1.0, s1) for s1 in np.linspace(1.0, 6.0, 40)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_pinsker_bound_values():
    assert dep_pinsker_bound(0.0) == 1.0
    assert dep_pinsker_bound(0.02) == pytest.approx(0.9, abs=1e-12)
    assert dep_pinsker_bound(2.0) == 0.0
    assert dep_pinsker_bound(50.0) == 0.0


def test_exact_min_dep_values():
    assert exact_min_dep(1.0, 1.0) == 1.0
    assert exact_min_dep(1.0, 2.0) == pytest.approx(0.75, abs=1e-15)
    # symmetric in the two hypotheses
    assert exact_min_dep(2.0, 1.0) == pytest.approx(exact_min_dep(1.0, 2.0), abs=1e-15)


def test_exact_min_dep_against_lrt_simulation():
    mc = lrt_error_sum_mc(1.0, 1.5, 10 ** 5, seed=3)
    assert exact_min_dep(1.0, 1.5) == pytest.approx(mc, abs=0.02)


def test_pinsker_consistency_sample():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        s0, s1 = rng.uniform(0.1, 10.0, 2)
        report = detection_report(s0, s1)
        assert report.exact_min_dep >= report.pinsker_lower_bound - 1e-12
        assert 0.0 <= report.exact_min_dep <= 1.0


# ---------------------------------------------------------------- covert cap

def test_covert_feasible_examples():
    b = covert_roots(0.1)
    assert covert_feasible(0.0, 123.0, b, 1.0)
    assert covert_feasible(0.2, 0.0, b, 1.0)      # cap is about 0.2298
    assert not covert_feasible(0.3, 0.0, b, 1.0)


def test_cap_equivalent_to_kld_budget():
    rng = np.random.default_rng(5)
    for eps in (0.05, 0.1, 0.3):
        b = covert_roots(eps)
        budget = 2.0 * eps ** 2
        for _ in range(300):
            sigma2_w = rng.uniform(0.2, 3.0)
            e = rng.uniform(0.0, 5.0)
            d = rng.uniform(1e-9, 5.0)
            s0 = e + sigma2_w
            ok_cap = covert_feasible(d, e, b, sigma2_w)
            ok_kld = kld(s0, d + s0) <= budget + 1e-8
            if abs(d - b.cap_factor * s0) > 1e-6:   # away from the boundary
                assert ok_cap == ok_kld
