import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import optimize

from ballstab.curves import (
    beta_star,
    coefficient_table,
    coefficients,
    curve_coeffs,
    curve_coeffs_telescoped,
    envelope,
    eps_k,
    extrapolated_root_limit,
    intersection,
    landmarks,
    m_star,
    m_star_branches,
    roots,
    sup_eps,
    tail_bound,
)
from ballstab.errors import ConsistencyWarning, DomainError
from ballstab.spectrum import ModelParams, lambda_k, mu_k

GRID_DA = [(d, f * (d - 1)) for d in range(2, 13) for f in (0.1, 0.5, 0.9)]


def raw_coeffs(k, p):
    # straight from the spectra, no product or Gamma rearrangement
    gap = lambda_k(k, p.d) - lambda_k(1, p.d)
    A = (mu_k(k, -p.alpha, p.d) - mu_k(1, -p.alpha, p.d)) / gap
    B = (mu_k(1, p.beta, p.d) - mu_k(k, p.beta, p.d)) / gap
    return A, B


@pytest.mark.parametrize("d, alpha, want", [(3, 1.0, 22.0), (12, 9.0, 86.5), (10, 8.0, 134.0)])
def test_beta_star(d, alpha, want):
    assert_allclose(beta_star(d, alpha), want, rtol=1e-12)


def test_beta_star_domain():
    with pytest.raises(DomainError):
        beta_star(3, 2.0)


def test_A2_closed_form():
    c = curve_coeffs(2, ModelParams(3, 1.0, 4.0))
    assert_allclose(c.A, 4 * math.pi / 15, rtol=1e-14)
    assert c.A > 0 and c.B > 0


@pytest.mark.parametrize("beta", [0.3, 4.0, 40.0])
@pytest.mark.parametrize("d, alpha", GRID_DA[::4])
def test_ratio_identities(d, alpha, beta):
    p = ModelParams(d, alpha, beta)
    A2, B2 = coefficients(p, 2)
    A3, B3 = coefficients(p, 3)
    assert_allclose((A3 - A2) / A3, -(d + 1 - alpha) / (d + 1), rtol=1e-12)
    assert_allclose((B3 - B2) / B3, -(d + 1 + beta) / (d + 1), rtol=1e-12)


@pytest.mark.parametrize("d, alpha", GRID_DA)
def test_A_strictly_decreasing(d, alpha):
    A, _ = coefficient_table(ModelParams(d, alpha, 3.0), 1000)
    assert np.all(np.diff(A[2:]) < 0)


def test_table_matches_raw_spectra():
    p = ModelParams(5, 2.5, 7.0)
    for k in (2, 3, 10, 57):
        assert_allclose(coefficients(p, k), raw_coeffs(k, p), rtol=1e-10)


@pytest.mark.parametrize("p", [ModelParams(3, 1.0, 4.0), ModelParams(12, 9.0, 40.0), ModelParams(2, 0.3, 130.0)])
def test_two_way_coefficients(p):
    for k in (2, 3, 7, 64, 65, 300, 4096):
        a, b = curve_coeffs(k, p), curve_coeffs_telescoped(k, p)
        assert_allclose([a.A, a.B], [b.A, b.B], rtol=1e-11)


def test_asymptotic_branch_is_continuous_with_table():
    # beyond the table the coefficients come from Gamma ratios; compare with log-space products
    p = ModelParams(6, 3.3, 2.7)
    for k in (4097, 5000, 20_000):
        a, b = curve_coeffs(k, p), curve_coeffs_telescoped(k, p)
        assert_allclose([a.A, a.B], [b.A, b.B], rtol=1e-10)


def test_coefficients_domain():
    p = ModelParams(3, 1.0, 4.0)
    assert coefficients(p, 1) == (0.0, 0.0)
    with pytest.raises(DomainError):
        coefficients(p, 0)


def test_eps_k_basic(fig1_right):
    p = fig1_right
    assert eps_k(4, 0.0, p) == 0.0
    assert eps_k(1, 0.37, p) == 0.0
    root = landmarks(5, p).root
    assert abs(eps_k(5, root, p)) < 1e-15
    A, B = raw_coeffs(2, p)
    assert_allclose(eps_k(2, 1.0, p), A - B, rtol=1e-12)
    with pytest.raises(DomainError):
        eps_k(0, 0.1, p)
    with pytest.raises(DomainError):
        eps_k(2, -0.1, p)


def test_landmarks(fig1_right):
    p = fig1_right
    r, q = p.r, p.q
    for k in (2, 3, 7, 20):
        lm = landmarks(k, p)
        assert lm.crit < lm.root
        assert_allclose(lm.crit / lm.root, (r / (r + q)) ** (1 / q), rtol=1e-14)
        res = optimize.minimize_scalar(
            lambda m: -eps_k(k, m, p), bracket=(0.0, lm.crit, lm.root), method="golden", tol=1e-10
        )
        assert_allclose(lm.peak, -res.fun, rtol=1e-9)
    assert landmarks(2, p).inflection is None
    infl = landmarks(5, ModelParams(3, 0.2, 15.0)).inflection
    assert infl is not None
    # second derivative changes sign at the inflection point
    h = 1e-4 * infl
    f = lambda m: eps_k(5, m, ModelParams(3, 0.2, 15.0))
    d2 = lambda m: f(m + h) - 2 * f(m) + f(m - h)
    assert d2(0.5 * infl) > 0 > d2(1.5 * infl)


@pytest.mark.parametrize("d, alpha", GRID_DA[::2])
def test_m23_is_m3c(d, alpha):
    for beta in (0.5, 8.0, 1.25 * beta_star(d, alpha)):
        p = ModelParams(d, alpha, beta)
        assert_allclose(intersection(2, 3, p), landmarks(3, p).crit, rtol=1e-10)


def test_intersection_cases(fig3):
    p = ModelParams(3, 1.0, 40.0)
    A3, B3 = coefficients(p, 3)
    A4, B4 = coefficients(p, 4)
    assert B4 > B3 and A4 < A3
    assert intersection(3, 4, p) is None
    assert intersection(2, 5, p) is not None
    ms = m_star(fig3)
    for k in range(4, 13):
        m = intersection(3, k, fig3)
        assert m is None or m >= ms
    grid = np.linspace(0, ms, 2001)
    for k in range(4, 13):
        assert np.all(eps_k(k, grid, fig3) <= eps_k(3, grid, fig3) + 1e-15)
    with pytest.raises(DomainError):
        intersection(3, 3, fig3)


def test_m_star_large_beta(fig3):
    A3, B3 = coefficients(fig3, 3)
    assert_allclose(m_star(fig3), (A3 / B3) ** (1 / fig3.q), rtol=1e-6)


def test_m_star_small_beta(fig1_right):
    assert_allclose(m_star(fig1_right), extrapolated_root_limit(fig1_right), rtol=1e-3)


@pytest.mark.parametrize("p", [ModelParams(3, 1.0, 4.0), ModelParams(6, 3.0, 30.0), ModelParams(2, 0.9, 0.5)])
def test_m2_root_is_minimum(p):
    rts = roots(p, 1000)
    assert rts[0] == rts.min() and rts[0] <= m_star(p)


def test_m_star_branches_agree_at_threshold():
    for d, alpha in GRID_DA[::3]:
        large, small = m_star_branches(ModelParams(d, alpha, beta_star(d, alpha)))
        assert_allclose(large, small, rtol=1e-12)


def test_m_star_consistency_warning(monkeypatch):
    from ballstab import curves

    monkeypatch.setattr(curves, "m_star_branches", lambda p: (1.0, 1.1))
    with pytest.warns(ConsistencyWarning):
        curves.m_star(ModelParams(3, 1.0, 22.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        curves.m_star(ModelParams(3, 1.0, 21.0))


def test_envelope_large_beta(fig3):
    p = fig3
    ms = m_star(p)
    env = envelope(p, 0.0, 1.25 * ms, 4096)
    want = np.maximum(np.maximum(eps_k(2, env.grid, p), eps_k(3, env.grid, p)), 0.0)
    assert_allclose(env.values, want, rtol=0, atol=1e-12)
    m23 = intersection(2, 3, p)
    assert_allclose(env.breakpoints, [m23, ms], rtol=1e-10)
    inside = env.grid < ms
    modes = env.active_mode[inside]
    assert set(modes) == {2.0, 3.0} and np.all(np.diff(modes) >= 0)
    assert np.all(env.active_mode[env.grid > ms] == 1)
    assert np.all(env.values[env.grid >= ms] <= 1e-12)


def test_envelope_cascade_against_brute_force(fig1_right):
    p = fig1_right
    ms = m_star(p)
    env = envelope(p, 0.0, ms, 10_000)
    ks = np.arange(2, 513)
    A, B = coefficients(p, ks)
    brute = np.max(env.grid**p.r * (A[:, None] - B[:, None] * env.grid**p.q), axis=0)
    brute = np.maximum(brute, 0.0)
    assert np.all(env.values >= brute - 1e-15)
    low = env.active_mode <= 512
    assert_allclose(env.values[low], brute[low], rtol=1e-13, atol=1e-16)
    m2c = landmarks(2, p).crit
    past = env.active_mode[(env.grid > m2c) & (env.grid < ms)]
    assert np.all(np.diff(past) >= 0)
    assert np.unique(past).size >= 3
    assert np.all(env.settled)


def test_sup_eps_dense_brute_force():
    p = ModelParams(4, 2.0, 3.0)
    ms = m_star(p)
    m = ms * np.array([0.3, 0.8, 0.95, 0.99])
    res = sup_eps(m, p)
    best = np.full(m.size, -np.inf)
    for start in range(2, 200_001, 20_000):
        ks = np.arange(start, min(start + 20_000, 200_001))
        A, B = coefficients(p, ks)
        best = np.maximum(best, np.max(m**p.r * (A[:, None] - B[:, None] * m**p.q), axis=0))
    assert_allclose(res.values, np.maximum(best, 0.0), rtol=1e-13)


def test_tail_bound_dominates(fig1_right):
    p = fig1_right
    m = np.linspace(0.01, 0.3, 50)
    for K in (10, 100, 5000):
        ks = np.arange(K, K + 2000)
        A, B = coefficients(p, ks)
        vals = m**p.r * (A[:, None] - B[:, None] * m**p.q)
        assert np.all(vals.max(axis=0) <= tail_bound(K, m, p) + 1e-16)


def test_envelope_continuity_proxy(fig1_right):
    jumps = []
    for n in (1000, 2000, 4000):
        env = envelope(fig1_right, 0.0, 1.1 * m_star(fig1_right), n)
        jumps.append(np.max(np.abs(np.diff(env.values))))
    assert jumps[1] < 0.6 * jumps[0] and jumps[2] < 0.6 * jumps[1]


def test_envelope_domain(fig3):
    with pytest.raises(DomainError):
        envelope(fig3, 1.0, 0.5, 10)
    with pytest.raises(DomainError):
        envelope(fig3, 0.0, 1.0, 1)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(min_value=2, max_value=12),
    st.floats(min_value=0.05, max_value=0.95),
    st.floats(min_value=0.1, max_value=300.0),
    st.floats(min_value=0.01, max_value=1.5),
)
def test_envelope_bound_property(d, frac, beta, rel_m):
    p = ModelParams(d, frac * (d - 1), beta)
    m = rel_m * m_star(p)
    v = sup_eps(np.array([m]), p).values[0]
    A2, _ = coefficients(p, 2)
    assert 0.0 <= v <= A2 * m**p.r
    if rel_m < 1 - 1e-3:
        assert v > 0
    if rel_m > 1 + 1e-3:
        assert v < 1e-10
