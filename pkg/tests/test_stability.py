import numpy as np
import pytest
from numpy.testing import assert_allclose

from ballstab.curves import coefficients, eps_k, landmarks, m_star, sup_eps
from ballstab.errors import DomainError
from ballstab.spectrum import ModelParams, lambda_k
from ballstab.stability import (
    FourierPerturbation,
    Status,
    bracket,
    classify,
    quadratic_form,
    region_grid,
)


def test_mode_one_is_neutral(fig1_right):
    u = FourierPerturbation(((1, 1, 0.7), (1, 3, -2.0)))
    assert quadratic_form(0.3, 0.2, u, fig1_right) == pytest.approx(0.0, abs=1e-14)


def test_single_mode_identity(fig1_right):
    p = fig1_right
    for k, c, eps, m in [(2, 1.0, 0.01, 0.1), (5, -0.3, 0.002, 0.25), (11, 2.0, 0.0, 0.27)]:
        u = FourierPerturbation.single(k, c)
        gap = lambda_k(k, p.d) - lambda_k(1, p.d)
        assert_allclose(quadratic_form(eps, m, u, p), gap * (eps - eps_k(k, m, p)) * c * c, rtol=1e-9, atol=1e-15)


def test_slightly_above_threshold(fig1_right):
    p, m, delta = fig1_right, 0.1, 1e-6
    q = quadratic_form(eps_k(2, m, p) + delta, m, FourierPerturbation.single(2), p)
    assert_allclose(q, delta * (lambda_k(2, 3) - lambda_k(1, 3)), rtol=1e-6)
    assert q > 0


def test_perturbation_validation(fig1_right):
    with pytest.raises(DomainError):
        quadratic_form(0.1, 0.1, FourierPerturbation(((2, 6, 1.0),)), fig1_right)
    with pytest.raises(DomainError):
        quadratic_form(0.1, 0.1, FourierPerturbation(((0, 1, 1.0),)), fig1_right)
    with pytest.raises(DomainError):
        FourierPerturbation(((2, 0, 1.0),))
    # a zero k=0 coefficient is admissible
    assert quadratic_form(0.1, 0.1, FourierPerturbation(((0, 1, 0.0),)), fig1_right) == 0.0


def test_classify_beyond_m_star(fig1_right):
    ms = m_star(fig1_right)
    for eps in (0.0, 1e-12, 3.0):
        assert classify(eps, ms * 1.0001, fig1_right).status is Status.STABLE
    assert classify(0.0, ms, fig1_right).status is Status.STABLE


def test_classify_fast_path(fig1_right):
    p, m = fig1_right, 0.05
    A2, _ = coefficients(p, 2)
    v = classify(1.01 * A2 * m**p.r, m, p)
    assert v.status is Status.STABLE
    assert_allclose(v.margin, 0.01 * A2 * m**p.r, rtol=1e-10)


def test_classify_inside_unstable_region(fig1_right):
    p = fig1_right
    ms = m_star(p)
    for m in np.linspace(0.02, 0.99, 25) * ms:
        target = sup_eps(np.array([m]), p).values[0]
        v = classify(0.5 * target, m, p)
        assert v.status is Status.UNSTABLE
        k = v.witness_mode
        assert eps_k(k, m, p) > 0.5 * target
        # smallest violating mode
        assert all(eps_k(j, m, p) <= 0.5 * target for j in range(2, k))


def test_classify_marginal(fig1_right):
    p, m = fig1_right, 0.2
    e = sup_eps(np.array([m]), p).values[0]
    assert classify(e, m, p).status is Status.MARGINAL
    assert classify(e + 1e-8, m, p).status is Status.STABLE
    assert classify(e - 1e-8, m, p).status is Status.UNSTABLE


def test_classify_domain(fig1_right):
    with pytest.raises(DomainError):
        classify(0.1, 0.0, fig1_right)
    with pytest.raises(DomainError):
        classify(-0.1, 0.1, fig1_right)


def test_monotone_in_eps(fig1_right):
    p = fig1_right
    rng = np.random.default_rng(7)
    for _ in range(100):
        m = rng.uniform(0.01, 0.35)
        e1 = rng.uniform(0, 0.05)
        if classify(e1, m, p).status is Status.STABLE:
            assert classify(e1 + rng.uniform(0, 0.05), m, p).status is Status.STABLE


def test_verdict_agrees_with_raw_brackets():
    # classification against the sign of each bracket computed from raw spectra
    rng = np.random.default_rng(11)
    cases = [ModelParams(3, 1.0, 30.0), ModelParams(6, 3.0, 30.0), ModelParams(3, 1.0, 4.0), ModelParams(4, 0.7, 2.0)]
    checked = 0
    for _ in range(1000):
        p = cases[rng.integers(len(cases))]
        ms = m_star(p)
        m = rng.uniform(0.005, 0.8) * ms
        peak = landmarks(2, p).peak
        eps = rng.uniform(0, 1.2 * peak)
        res = sup_eps(np.array([m]), p)
        if res.modes[0] > 64 or abs(eps - res.values[0]) < 1e-7:
            continue
        v = classify(eps, m, p)
        br = np.array([bracket(k, eps, m, p) for k in range(2, 80)])
        if v.status is Status.STABLE:
            assert np.all(br > 0)
        else:
            assert v.status is Status.UNSTABLE
            neg = np.flatnonzero(br < 0)
            assert neg.size and neg[0] + 2 == v.witness_mode
        checked += 1
    assert checked > 800


def test_multi_mode_perturbations_never_contradict():
    p = ModelParams(3, 1.0, 4.0)
    rng = np.random.default_rng(3)
    for _ in range(200):
        m = rng.uniform(0.01, 0.28)
        eps = rng.uniform(0, 0.06)
        v = classify(eps, m, p)
        entries = tuple((int(k), 1, rng.normal()) for k in rng.choice(np.arange(2, 40), 6, replace=False))
        qf = quadratic_form(eps, m, FourierPerturbation(entries), p)
        if v.status is Status.STABLE:
            assert qf >= 0
        elif v.status is Status.UNSTABLE:
            assert quadratic_form(eps, m, FourierPerturbation.single(v.witness_mode), p) < 0


def test_region_right_of_m_star(fig1_right):
    ms = m_star(fig1_right)
    _, _, st = region_grid(fig1_right, (0.0, 0.1), (1.01 * ms, 2 * ms), 16)
    assert np.all(st == Status.STABLE)


def test_region_zero_row_unstable(fig1_right):
    ms = m_star(fig1_right)
    ev, mv, st = region_grid(fig1_right, (0.0, 0.1), (ms / 50, 0.99 * ms), (8, 50))
    assert ev[0] == 0.0
    assert np.all(st[0] == Status.UNSTABLE)


def test_region_unimodal_boundary(fig1_left):
    p = fig1_left
    ms = m_star(p)
    eps_max = 1.1 * landmarks(2, p).peak
    ev, mv, st = region_grid(p, (0.0, eps_max), (ms / 256, 1.25 * ms), 256)
    unstable = st == Status.UNSTABLE
    # each column is unstable exactly below the envelope value
    env = sup_eps(mv, p).values
    for j in range(mv.size):
        col = unstable[:, j]
        assert np.array_equal(col, ev < env[j] - 1e-9) or mv[j] >= ms
    counts = unstable.sum(axis=0)
    top = int(np.argmax(counts))
    assert np.all(np.diff(counts[: top + 1]) >= 0) and np.all(np.diff(counts[top:]) <= 0)


def test_region_domain(fig1_right):
    with pytest.raises(DomainError):
        region_grid(fig1_right, (0.0, 0.1), (0.1, 0.2), 0)
    with pytest.raises(DomainError):
        region_grid(fig1_right, (0.0, 0.1), (0.0, 0.2), 4)
