"""Special-function primitives.

Log-Gamma and Gamma ratios, volumes of unit balls, and the four telescoping
products ``a_k, b_k, c_k, d_k`` built from the shifts ``ell = (d-1)/2``,
``t = ell - alpha/2`` and ``tau = ell + beta/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import special

from .errors import DomainError

# Stirling series coefficients B_2n / (2n (2n-1)), n = 1..8
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
# below this argument the Stirling tail is not accurate to ~1e-16
_STIRLING_MIN = 12.0

# products with more factors than this are accumulated in log-space
DIRECT_PRODUCT_MAX = 64


def log_gamma(x: float) -> float:
    """Natural logarithm of Gamma(x) for real ``x > 0``."""
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"log_gamma requires a finite x > 0, got {x!r}")
    return math.lgamma(x)


def _stirling_tail(z: float) -> float:
    zi = 1.0 / z
    zi2 = zi * zi
    acc = 0.0
    for c in reversed(_STIRLING):
        acc = acc * zi2 + c
    return acc * zi


def log_gamma_ratio(a: float, b: float) -> float:
    """Return ``log(Gamma(a) / Gamma(b))`` for ``a, b > 0``.

    Differencing two ``lgamma`` values loses absolute accuracy once both
    arguments are large, so for large arguments the Stirling expansions
    are subtracted term by term.
    """
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)) or a <= 0.0 or b <= 0.0:
        raise DomainError(f"log_gamma_ratio requires a, b > 0, got {a!r}, {b!r}")
    if min(a, b) < _STIRLING_MIN:
        return math.lgamma(a) - math.lgamma(b)
    # (a - 1/2) log a - (b - 1/2) log b - (a - b), rearranged around log1p
    main = (a - 0.5) * math.log1p((a - b) / b) + (a - b) * (math.log(b) - 1.0)
    return main + _stirling_tail(a) - _stirling_tail(b)


def unit_ball_volume(n: int) -> float:
    """Lebesgue measure of the unit ball in ``R^n``."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"unit_ball_volume requires an integer n >= 1, got {n!r}")
    n = int(n)
    return math.exp(0.5 * n * math.log(math.pi) - math.lgamma(0.5 * n + 1.0))


@dataclass(frozen=True)
class ShiftParams:
    """Shifts entering the telescoping products.

    ``ell = (d-1)/2``, ``t = ell - alpha/2``, ``tau = ell + beta/2``.
    """

    ell: float
    t: float
    tau: float

    @classmethod
    def from_model(cls, d: int, alpha: float, beta: float) -> "ShiftParams":
        ell = 0.5 * (d - 1)
        return cls(ell=ell, t=ell - 0.5 * alpha, tau=ell + 0.5 * beta)


class SignedLog(NamedTuple):
    """A real number stored as ``sign * exp(log_abs)``; zero has sign 0."""

    log_abs: float
    sign: int

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_abs)

    @classmethod
    def of(cls, x: float) -> "SignedLog":
        if x == 0.0:
            return cls(-math.inf, 0)
        return cls(math.log(abs(x)), 1 if x > 0 else -1)


class TelescopeProducts(NamedTuple):
    a: SignedLog
    b: SignedLog
    c: SignedLog
    d: SignedLog


def product_direct(factors: Sequence[float]) -> SignedLog:
    """Multiply the factors in floating point."""
    p = 1.0
    for f in factors:
        p *= f
    return SignedLog.of(p)


def product_log(factors: Sequence[float]) -> SignedLog:
    """Multiply the factors as a sum of log-magnitudes with a tracked sign."""
    log_abs = 0.0
    sign = 1
    for f in factors:
        if f == 0.0:
            return SignedLog(-math.inf, 0)
        if f < 0.0:
            sign = -sign
        log_abs += math.log(abs(f))
    return SignedLog(log_abs, sign)


def telescope_products(k: int, shifts: ShiftParams) -> TelescopeProducts:
    """The products over ``j = 1..k-1`` of ``j+ell-t``, ``j+ell+t``, ``j+ell-tau``, ``j+ell+tau``.

    ``c_k`` is negative or zero whenever some ``j`` is at least ``tau - ell``;
    magnitudes and signs are carried separately so that nothing overflows.
    """
    if isinstance(k, bool) or int(k) != k or k < 2:
        raise DomainError(f"telescope_products requires an integer k >= 2, got {k!r}")
    k = int(k)
    ell, t, tau = shifts.ell, shifts.t, shifts.tau
    mult = product_direct if k - 1 <= DIRECT_PRODUCT_MAX else product_log
    js = range(1, k)
    return TelescopeProducts(
        a=mult([j + ell - t for j in js]),
        b=mult([j + ell + t for j in js]),
        c=mult([j + ell - tau for j in js]),
        d=mult([j + ell + tau for j in js]),
    )


def signed_ratio(num: SignedLog, den: SignedLog) -> float:
    """``num / den`` for two signed logs, ``den`` nonzero."""
    if den.sign == 0:
        raise ZeroDivisionError("denominator product vanishes")
    if num.sign == 0:
        return 0.0
    return num.sign * den.sign * math.exp(num.log_abs - den.log_abs)


def log_gamma_ratio_array(a, b):
    """Vectorized :func:`log_gamma_ratio` over NumPy arrays."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    if np.any(~(a > 0)) or np.any(~(b > 0)):
        raise DomainError("log_gamma_ratio requires positive arguments")
    out = np.empty(a.shape)
    small = np.minimum(a, b) < _STIRLING_MIN
    out[small] = special.gammaln(a[small]) - special.gammaln(b[small])
    big = ~small
    if np.any(big):
        ab, bb = a[big], b[big]
        main = (ab - 0.5) * np.log1p((ab - bb) / bb) + (ab - bb) * (np.log(bb) - 1.0)
        out[big] = main + _stirling_tail_array(ab) - _stirling_tail_array(bb)
    return out


def _stirling_tail_array(z):
    zi = 1.0 / z
    zi2 = zi * zi
    acc = np.zeros_like(z)
    for c in reversed(_STIRLING):
        acc = acc * zi2 + c
    return acc * zi
