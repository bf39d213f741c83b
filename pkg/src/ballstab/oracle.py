"""Brute-force cross-checks of the closed forms.

Direct product quadrature on the circle and on the 2-sphere for the
nonlocal eigenvalues and the nonlocal curvature, Rayleigh quotients for
the Laplace-Beltrami eigenvalues, and a seeded Monte Carlo estimate of the
interaction energy of the unit ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial import legendre

from .errors import DomainError
from .specfun import unit_ball_volume

RNG_NAME = "MT19937"
MC_CHUNK = 1 << 20


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes and weights on ``S^{d-1}`` for ``d = 2`` or ``3``.

    For d=2 the nodes are equally spaced angles; for d=3 they are a product
    of Gauss-Legendre nodes in ``cos(polar)`` and equally spaced azimuths.
    ``shift`` rotates the azimuths by half a step, giving a node set that is
    disjoint from the unshifted one.
    """

    d: int
    points: np.ndarray
    weights: np.ndarray
    order: int


def _check_d(d):
    if d not in (2, 3):
        raise DomainError(f"sphere quadrature is implemented for d = 2, 3 only, got {d}")


def _azimuths(n: int, shift: bool) -> np.ndarray:
    return 2.0 * np.pi * (np.arange(n) + (0.5 if shift else 0.0)) / n


def sphere_quadrature(d: int, order: int, shift: bool = False) -> SphereQuadrature:
    _check_d(d)
    if order < 1:
        raise DomainError("quadrature order must be positive")
    if d == 2:
        th = _azimuths(order, shift)
        pts = np.column_stack([np.cos(th), np.sin(th)])
        w = np.full(order, 2.0 * np.pi / order)
        return SphereQuadrature(2, pts, w, order)
    t, wt = legendre.leggauss(order)
    ph = _azimuths(2 * order, shift)
    T, P = np.meshgrid(t, ph, indexing="ij")
    S = np.sqrt(1.0 - T * T)
    pts = np.column_stack([(S * np.cos(P)).ravel(), (S * np.sin(P)).ravel(), T.ravel()])
    w = np.outer(wt, np.full(ph.size, 2.0 * np.pi / ph.size)).ravel()
    return SphereQuadrature(3, pts, w, order)


def zonal_harmonic(k: int, t):
    """L2-normalized zonal harmonic of degree ``k`` on ``S^2`` as a function of ``cos(polar)``."""
    c = np.zeros(k + 1)
    c[k] = 1.0
    return math.sqrt((2 * k + 1) / (4.0 * math.pi)) * legendre.legval(t, c)


def _kernel(dist2, sigma):
    return dist2 ** (0.5 * sigma)


def _richardson(fine: float, coarse: float, rate: float) -> float:
    w = 2.0**rate
    return (w * fine - coarse) / (w - 1.0)


def mu_oracle(k: int, sigma: float, d: int, order: int, extrapolate: bool = False) -> float:
    """Quadrature value of ``∫∫ |x-y|^sigma |Y_k(x) - Y_k(y)|^2`` over the sphere squared.

    ``Y_k`` is ``cos(k theta)/sqrt(pi)`` on the circle and the normalized
    zonal harmonic on ``S^2``.  The two integration variables live on
    disjoint node sets so the kernel is never evaluated on the diagonal.

    The diagonal behaves like ``|x-y|^(sigma+2)``, which limits the plain
    rule to an error of order ``h^(sigma+d+1)``.  With ``extrapolate`` the
    results at ``order`` and ``order // 2`` are combined to cancel that term.
    """
    _check_d(d)
    if k < 1:
        raise DomainError("mu_oracle needs k >= 1")
    if not sigma > -(d - 1):
        raise DomainError(f"sigma must exceed -(d-1), got {sigma}")
    if extrapolate:
        fine = _mu_quadrature(k, sigma, d, order)
        coarse = _mu_quadrature(k, sigma, d, order // 2)
        return _richardson(fine, coarse, sigma + d + 1)
    return _mu_quadrature(k, sigma, d, order)


def _mu_quadrature(k, sigma, d, order):
    if d == 2:
        n = order
        h = 2.0 * np.pi / n
        th = _azimuths(n, False)
        y = np.cos(k * th) / math.sqrt(math.pi)
        total = 0.0
        # pair node i with shifted node i+s; the kernel depends on s only
        for s in range(n):
            phi = (s + 0.5) * h
            ker = (2.0 * abs(math.sin(0.5 * phi))) ** sigma
            y2 = np.cos(k * (th + phi)) / math.sqrt(math.pi)
            total += ker * float(np.sum((y - y2) ** 2))
        return total * h * h
    t, wt = legendre.leggauss(order)
    n_phi = 2 * order
    h = 2.0 * np.pi / n_phi
    dphi = _azimuths(n_phi, True)
    st = np.sqrt(1.0 - t * t)
    y = zonal_harmonic(k, t)
    total = 0.0
    for i in range(order):
        # |x-y|^2 = 2 - 2 (t t' + s s' cos(dphi)), summed over azimuth offsets
        dist2 = 2.0 - 2.0 * (t[i] * t[:, None] + st[i] * st[:, None] * np.cos(dphi)[None, :])
        ker = _kernel(np.maximum(dist2, 0.0), sigma).sum(axis=1)
        total += wt[i] * float(np.sum(wt * (y[i] - y) ** 2 * ker))
    return total * n_phi * h * h


def lambda_oracle(k: int, d: int, order: int) -> float:
    """Rayleigh quotient ``∫|∇_τ Y_k|^2 / ∫ Y_k^2`` by quadrature."""
    _check_d(d)
    if k < 1:
        raise DomainError("lambda_oracle needs k >= 1")
    if d == 2:
        th = _azimuths(order, False)
        num = np.sum((k * np.sin(k * th)) ** 2)
        den = np.sum(np.cos(k * th) ** 2)
        return float(num / den)
    t, wt = legendre.leggauss(order)
    c = np.zeros(k + 1)
    c[k] = 1.0
    p = legendre.legval(t, c)
    dp = legendre.legval(t, legendre.legder(c))
    # |∇_τ P_k(cos θ)|^2 = (1 - t^2) P_k'(t)^2; azimuthal factors cancel
    num = np.sum(wt * (1.0 - t * t) * dp * dp)
    den = np.sum(wt * p * p)
    return float(num / den)


def curvature_oracle(sigma: float, d: int, order: int, extrapolate: bool = False) -> float:
    """Quadrature of ``∫ |x-y|^sigma |ν(x) - ν(y)|^2 dy`` at a fixed point ``x``.

    On the circle the point sits half a step away from every node and the
    error is of order ``h^(sigma+3)``.  On the sphere the point is the north
    pole, which is never a Gauss-Legendre node; the integrand behaves like
    ``(1-t)^((sigma+2)/2)`` there, giving an error of order
    ``order^-(sigma+4)``.  ``extrapolate`` cancels the leading term.
    """
    _check_d(d)
    if not sigma > -(d - 1):
        raise DomainError(f"sigma must exceed -(d-1), got {sigma}")
    if extrapolate:
        fine = _curvature_quadrature(sigma, d, order)
        coarse = _curvature_quadrature(sigma, d, order // 2)
        return _richardson(fine, coarse, sigma + 3 if d == 2 else sigma + 4)
    return _curvature_quadrature(sigma, d, order)


def _curvature_quadrature(sigma, d, order):
    q = sphere_quadrature(d, order, shift=True)
    x = np.zeros(d)
    x[0 if d == 2 else 2] = 1.0
    # on the unit sphere |ν(x) - ν(y)| = |x - y|
    dist2 = np.sum((q.points - x) ** 2, axis=1)
    return float(np.sum(q.weights * dist2 ** (0.5 * sigma) * dist2))


class MCEstimate(NamedTuple):
    estimate: float
    std_error: float
    n_samples: int
    seed: int
    generator: str


def _uniform_ball(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1)[:, None]
    return g * rng.random(n)[:, None] ** (1.0 / d)


def interaction_mc(sigma: float, d: int, n_samples: int, seed: int) -> MCEstimate:
    """Monte Carlo estimate of ``J_sigma(B_1)`` from uniform pairs in the ball.

    Samples come in fixed-size chunks, each drawn from an MT19937 stream
    spawned from ``seed`` by chunk index, so the estimate does not depend
    on how the chunks are scheduled.
    """
    if not sigma > -d:
        raise DomainError(f"J_sigma(B_1) diverges for sigma <= -d, got {sigma}")
    if n_samples < 1000:
        raise DomainError("interaction_mc needs at least 1000 samples")
    vol2 = unit_ball_volume(d) ** 2
    n_chunks = -(-n_samples // MC_CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    count = 0
    mean = 0.0
    m2 = 0.0
    for c, child in enumerate(children):
        n = min(MC_CHUNK, n_samples - c * MC_CHUNK)
        rng = np.random.Generator(np.random.MT19937(child))
        x = _uniform_ball(rng, n, d)
        y = _uniform_ball(rng, n, d)
        v = vol2 * np.sum((x - y) ** 2, axis=1) ** (0.5 * sigma)
        # pairwise (Chan) update of mean and sum of squared deviations
        c_mean = float(v[0] + np.mean(v - v[0]))
        c_m2 = float(np.sum((v - c_mean) ** 2))
        delta = c_mean - mean
        total = count + n
        mean += delta * n / total
        m2 += c_m2 + delta * delta * count * n / total
        count = total
    var = m2 / (count - 1)
    return MCEstimate(mean, math.sqrt(var / count), n_samples, seed, RNG_NAME)
