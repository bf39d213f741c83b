"""Spectral data of the second variation at the unit ball.

Eigenvalues ``lambda_k`` of the Laplace-Beltrami operator on the sphere,
nonlocal eigenvalues ``mu_k(sigma)`` of the power kernel ``|x-y|^sigma``
restricted to the sphere, harmonic multiplicities, and the interaction
energy ``J_sigma(B_1)`` of the unit ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import DomainError
from .specfun import log_gamma, unit_ball_volume


@dataclass(frozen=True)
class ModelParams:
    """Dimension ``d``, repulsion exponent ``alpha`` and attraction exponent ``beta``.

    Valid inputs satisfy ``d >= 2``, ``0 < alpha < d - 1`` and ``beta > 0``.
    """

    d: int
    alpha: float
    beta: float

    def __post_init__(self):
        d, alpha, beta = self.d, self.alpha, self.beta
        if isinstance(d, bool) or int(d) != d or d < 2:
            raise DomainError(f"dimension d must be an integer >= 2, got {d!r}")
        object.__setattr__(self, "d", int(d))
        object.__setattr__(self, "alpha", float(alpha))
        object.__setattr__(self, "beta", float(beta))
        if not math.isfinite(self.alpha) or not 0.0 < self.alpha < self.d - 1:
            raise DomainError(
                f"alpha must satisfy 0 < alpha < d-1 = {self.d - 1}, got {alpha!r}"
            )
        if not math.isfinite(self.beta) or self.beta <= 0.0:
            raise DomainError(f"beta must satisfy beta > 0, got {beta!r}")

    @property
    def r(self) -> float:
        """Exponent of ``m`` in front of the repulsive term, ``(d-alpha+1)/d``."""
        return (self.d - self.alpha + 1.0) / self.d

    @property
    def q(self) -> float:
        """Relative exponent of the attractive term, ``(alpha+beta)/d``."""
        return (self.alpha + self.beta) / self.d


def lambda_k(k: int, d: int) -> float:
    if k < 0:
        raise DomainError(f"mode index must be >= 0, got {k}")
    return float(k * (k + d - 2))


def _check_sigma(sigma: float, d: int) -> None:
    if not sigma > -(d - 1):
        raise DomainError(f"sigma must exceed -(d-1) = {-(d - 1)}, got {sigma!r}")


def mu_prefactor(sigma: float, d: int) -> float:
    """Gamma prefactor of ``mu_k``; it is also the limit of ``mu_k(sigma)`` as k grows."""
    _check_sigma(sigma, d)
    log_g = (
        log_gamma(0.5 * (d - 1 + sigma))
        + log_gamma(0.5 * (d - 1))
        - log_gamma(0.5 * (2 * d - 2 + sigma))
    )
    return (d - 1) * unit_ball_volume(d - 1) * 2.0 ** (d - 1 + sigma) * math.exp(log_g)


mu_limit = mu_prefactor


def _product_factors(n: int, sigma: float, d: int) -> np.ndarray:
    j = np.arange(n, dtype=float)
    return (j - 0.5 * sigma) / (j + d - 1 + 0.5 * sigma)


def mu_k(k: int, sigma: float, d: int) -> float:
    """Nonlocal eigenvalue of ``|x-y|^sigma`` on degree-``k`` spherical harmonics."""
    _check_sigma(sigma, d)
    if k < 0:
        raise DomainError(f"mode index must be >= 0, got {k}")
    if k == 0:
        return 0.0
    # every factor has modulus below one, so the running product cannot overflow
    prod = float(np.prod(_product_factors(k, sigma, d)))
    return mu_prefactor(sigma, d) * (1.0 - prod)


def mu_sequence(k_max: int, sigma: float, d: int) -> np.ndarray:
    """``mu_0(sigma), ..., mu_{k_max}(sigma)`` as an array."""
    _check_sigma(sigma, d)
    out = np.zeros(k_max + 1)
    if k_max >= 1:
        prods = np.cumprod(_product_factors(k_max, sigma, d))
        out[1:] = mu_prefactor(sigma, d) * (1.0 - prods)
    return out


def nonlocal_curvature(sigma: float, d: int) -> float:
    """The constant ``c^2_{sigma}`` of the unit sphere, equal to ``mu_1(sigma)``."""
    return mu_k(1, sigma, d)


def multiplicity(k: int, d: int) -> int:
    """Dimension of the space of degree-``k`` spherical harmonics on ``S^{d-1}``."""
    if k < 0 or d < 2:
        raise DomainError(f"need k >= 0 and d >= 2, got k={k}, d={d}")
    if k == 0:
        return 1
    if k == 1:
        return d
    return math.comb(k + d - 1, d - 1) - math.comb(k + d - 3, d - 1)


def ball_covariogram(r, d: int):
    """Volume of ``B_1 ∩ (B_1 + r e)`` for ``0 <= r <= 2``."""
    h = 0.5 * np.asarray(r, dtype=float)
    cap = 0.5 * special.beta(0.5, 0.5 * (d + 1)) * special.betainc(
        0.5 * (d + 1), 0.5, np.clip(1.0 - h * h, 0.0, 1.0)
    )
    return 2.0 * unit_ball_volume(d - 1) * cap


@lru_cache(maxsize=256)
def _interaction_energy(sigma: float, d: int) -> float:
    # integrand r^(sigma+d-1) C(r): the power is delegated to the algebraic weight
    val, _ = integrate.quad(
        lambda r: ball_covariogram(r, d),
        0.0,
        2.0,
        weight="alg",
        wvar=(sigma + d - 1, 0.0),
        epsabs=0.0,
        epsrel=1e-13,
        limit=200,
    )
    return d * unit_ball_volume(d) * val


def interaction_energy_ball(sigma: float, d: int) -> float:
    """``J_sigma(B_1)``, the double integral of ``|x-y|^sigma`` over the unit ball."""
    if not sigma > -d:
        raise DomainError(f"J_sigma(B_1) diverges for sigma <= -d = {-d}, got {sigma!r}")
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d}")
    return _interaction_energy(float(sigma), int(d))


@dataclass(frozen=True)
class ModeSpectrum:
    k_max: int
    lam: np.ndarray
    mu_alpha: np.ndarray
    mu_beta: np.ndarray


def mode_spectrum(params: ModelParams, k_max: int) -> ModeSpectrum:
    ks = np.arange(k_max + 1, dtype=float)
    lam = ks * (ks + params.d - 2)
    lam[0] = 0.0
    arrays = (
        lam,
        mu_sequence(k_max, -params.alpha, params.d),
        mu_sequence(k_max, params.beta, params.d),
    )
    for a in arrays:
        a.flags.writeable = False
    return ModeSpectrum(k_max, *arrays)
