import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import special

from ballstab.errors import DomainError
from ballstab.oracle import (
    RNG_NAME,
    curvature_oracle,
    interaction_mc,
    lambda_oracle,
    mu_oracle,
    sphere_quadrature,
    zonal_harmonic,
)
from ballstab.specfun import unit_ball_volume
from ballstab.spectrum import interaction_energy_ball, mu_k


@pytest.mark.parametrize("d, area", [(2, 2 * math.pi), (3, 4 * math.pi)])
@pytest.mark.parametrize("shift", [False, True])
def test_quadrature_weights(d, area, shift):
    q = sphere_quadrature(d, 24, shift)
    assert_allclose(q.weights.sum(), area, rtol=1e-12)
    assert_allclose(np.linalg.norm(q.points, axis=1), 1.0, rtol=1e-14)


def test_circle_trig_exactness():
    n = 32
    q = sphere_quadrature(2, n)
    th = np.arctan2(q.points[:, 1], q.points[:, 0])
    for j in range(n):
        for k in range(n - j):
            # cos(j t) cos(k t) has frequencies j+k and |j-k|, both below n
            want = 2 * math.pi if j == k == 0 else (math.pi if j == k else 0.0)
            assert abs(np.sum(q.weights * np.cos(j * th) * np.cos(k * th)) - want) < 1e-10


def test_sphere_harmonic_orthonormality():
    order = 12
    q = sphere_quadrature(3, order, shift=True)
    x, y, z = q.points.T
    ph = np.arctan2(y, x)
    pol = np.arccos(np.clip(z, -1, 1))
    # complex harmonics of total degree up to 2*order-1 in the product
    degs = [(l, m) for l in range(order) for m in range(-l, l + 1)]
    Y = np.array([special.sph_harm_y(l, m, pol, ph) for l, m in degs])
    G = (Y * q.weights) @ Y.conj().T
    assert np.abs(G - np.eye(len(degs))).max() < 1e-10


def test_zonal_harmonic_norm():
    t, w = np.polynomial.legendre.leggauss(40)
    for k in range(6):
        assert_allclose(2 * math.pi * np.sum(w * zonal_harmonic(k, t) ** 2), 1.0, rtol=1e-13)


def test_mu_oracle_telescoped_value():
    assert_allclose(mu_oracle(2, -1.0, 3, 64, extrapolate=True), 32 * math.pi / 5, rtol=1e-6)


def test_mu_oracle_circle_exact_for_smooth_kernel():
    for k in (1, 2, 5):
        assert_allclose(mu_oracle(k, 4.0, 2, 64), mu_k(k, 4.0, 2), rtol=1e-12)


def test_mu_oracle_sigma_zero_is_k_independent():
    assert_allclose(mu_oracle(3, 0.0, 2, 64), mu_oracle(2, 0.0, 2, 64), rtol=1e-12)
    assert_allclose(mu_oracle(3, 0.0, 3, 24), mu_oracle(2, 0.0, 3, 24), rtol=1e-12)


def test_mu_one_equals_curvature_quadrature():
    for s in (0.5, 2.0, 4.0):
        assert_allclose(mu_oracle(1, s, 2, 128, True), curvature_oracle(s, 2, 128, True), rtol=1e-8)


@pytest.mark.parametrize(
    "d, sigma, order, factor",
    [(2, 1.0, 32, 4.0), (2, -0.5, 32, 2.0), (3, 1.0, 8, 4.0), (3, -1.0, 8, 2.0)],
)
def test_raw_convergence_rate(d, sigma, order, factor):
    exact = mu_k(2, sigma, d)
    e1 = abs(mu_oracle(2, sigma, d, order) - exact)
    e2 = abs(mu_oracle(2, sigma, d, 2 * order) - exact)
    assert e1 / e2 >= factor


@pytest.mark.parametrize("d", [2, 3])
def test_lambda_oracle(d):
    for k in range(1, 9):
        assert_allclose(lambda_oracle(k, d, 64), k * (k + d - 2), rtol=1e-8)


def test_lambda_oracle_examples():
    assert_allclose(lambda_oracle(2, 2, 16), 4.0, rtol=1e-12)
    assert_allclose(lambda_oracle(1, 3, 16), 2.0, rtol=1e-12)
    # k(k+d-2) = 4 * 5
    assert_allclose(lambda_oracle(4, 3, 16), 20.0, rtol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_curvature_identity(d):
    order = 256 if d == 2 else 64
    for s in (-0.9 * (d - 1) + 0.1, -0.5, 0.5, 2.0, 7.0):
        assert_allclose(curvature_oracle(s, d, order, extrapolate=True), mu_k(1, s, d), rtol=1e-6)


def test_oracle_domain():
    with pytest.raises(DomainError):
        mu_oracle(2, 1.0, 4, 16)
    with pytest.raises(DomainError):
        mu_oracle(0, 1.0, 3, 16)
    with pytest.raises(DomainError):
        mu_oracle(2, -2.0, 3, 16)
    with pytest.raises(DomainError):
        curvature_oracle(-1.0, 2, 16)
    with pytest.raises(DomainError):
        sphere_quadrature(3, 0)


def test_mc_constant_kernel():
    est = interaction_mc(0.0, 3, 100_000, seed=5)
    assert_allclose(est.estimate, unit_ball_volume(3) ** 2, rtol=1e-14)
    assert est.std_error == 0.0
    assert est.generator == RNG_NAME


def test_mc_reproducible():
    a = interaction_mc(-1.0, 3, 50_000, seed=9)
    b = interaction_mc(-1.0, 3, 50_000, seed=9)
    c = interaction_mc(-1.0, 3, 50_000, seed=10)
    assert a == b and a.estimate != c.estimate


@pytest.mark.parametrize("sigma", [2.0, -1.0, 0.5])
def test_mc_agrees_with_quadrature(sigma):
    est = interaction_mc(sigma, 3, 2_000_000, seed=2024)
    assert abs(est.estimate - interaction_energy_ball(sigma, 3)) <= 3 * est.std_error


def test_mc_domain():
    with pytest.raises(DomainError):
        interaction_mc(-3.0, 3, 10_000, 1)
    with pytest.raises(DomainError):
        interaction_mc(1.0, 3, 10, 1)
