"""Second-variation quadratic form at the ball and stability classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .curves import TABLE_MAX, coefficient_table, coefficients, m_star, sup_eps
from .errors import DomainError
from .spectrum import ModelParams, lambda_k, mu_k, multiplicity

DEFAULT_TOL = 1e-9


class Status(enum.IntEnum):
    STABLE = 0
    MARGINAL = 1
    UNSTABLE = 2


@dataclass(frozen=True)
class FourierPerturbation:
    """Sparse spherical-harmonic coefficients ``(k, i, a_k^i)`` of a normal perturbation."""

    entries: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        entries = tuple((int(k), int(i), float(a)) for k, i, a in self.entries)
        for k, i, _ in entries:
            if k < 0 or i < 1:
                raise DomainError(f"invalid harmonic index (k={k}, i={i})")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def single(cls, k: int, coeff: float = 1.0) -> "FourierPerturbation":
        return cls(((k, 1, coeff),))


@dataclass(frozen=True)
class Verdict:
    """Classification of ``(eps, m)``.

    ``margin`` is ``eps - eps(m)``.  When the verdict was reached through the
    bound ``eps(m) <= A_2 m^r`` the envelope is not evaluated and ``margin``
    is the lower bound ``eps - A_2 m^r``.
    """

    status: Status
    margin: float
    witness_mode: Optional[int] = None


def bracket(k: int, eps: float, m: float, params: ModelParams) -> float:
    """Coefficient multiplying ``(a_k^i)^2`` in the quadratic form, from raw spectra."""
    d, a, b = params.d, params.alpha, params.beta
    return (
        eps * (lambda_k(k, d) - lambda_k(1, d))
        + m ** ((d - a + 1) / d) * (mu_k(1, -a, d) - mu_k(k, -a, d))
        + m ** ((d + b + 1) / d) * (mu_k(1, b, d) - mu_k(k, b, d))
    )


def quadratic_form(eps: float, m: float, u: FourierPerturbation, params: ModelParams) -> float:
    """Second variation of the energy at the ball along the perturbation ``u``."""
    total = 0.0
    cache: dict[int, float] = {}
    for k, i, coeff in u.entries:
        if i > multiplicity(k, params.d):
            raise DomainError(
                f"harmonic index i={i} exceeds the multiplicity {multiplicity(k, params.d)} of degree {k}"
            )
        if k == 0 and coeff != 0.0:
            raise DomainError("volume-preserving perturbations have a vanishing k=0 coefficient")
        if k not in cache:
            cache[k] = bracket(k, eps, m, params)
        total += cache[k] * coeff * coeff
    return total


def _first_violating_mode(eps: float, m: float, params: ModelParams, k_active: float) -> int:
    mr, mq = m**params.r, m**params.q
    k_top = int(min(k_active, TABLE_MAX))
    A, B = coefficient_table(params, max(k_top, 2))
    vals = mr * (A[2 : k_top + 1] - B[2 : k_top + 1] * mq)
    hit = np.flatnonzero(vals > eps)
    if hit.size:
        return int(hit[0]) + 2
    # beyond the table eps_k(m) increases with k up to the active mode
    lo, hi = float(k_top), float(k_active)
    while hi - lo > 1.0:
        mid = math.floor(0.5 * (lo + hi))
        Am, Bm = coefficients(params, mid)
        if mr * (Am - Bm * mq) > eps:
            hi = mid
        else:
            lo = mid
    return int(hi)


def _verdict(eps: float, m: float, env_value: float, k_active: float, params, tol) -> Verdict:
    margin = eps - env_value
    if margin >= tol:
        return Verdict(Status.STABLE, margin)
    if margin <= -tol:
        return Verdict(Status.UNSTABLE, margin, _first_violating_mode(eps, m, params, k_active))
    return Verdict(Status.MARGINAL, margin)


def classify(eps: float, m: float, params: ModelParams, tol: float = DEFAULT_TOL) -> Verdict:
    """Stable, unstable (with the smallest violating mode) or marginal within ``tol``."""
    if not m > 0:
        raise DomainError(f"classification needs m > 0, got {m!r}")
    if eps < 0:
        raise DomainError(f"perimeter weight must be nonnegative, got {eps!r}")
    if m >= m_star(params):
        # every mode k >= 2 has a strictly positive bracket, even at eps = 0
        return Verdict(Status.STABLE, eps)
    A2, _ = coefficients(params, 2)
    bound = A2 * m**params.r
    if eps >= bound + tol:
        return Verdict(Status.STABLE, eps - bound)
    res = sup_eps(np.array([m]), params)
    return _verdict(eps, m, float(res.values[0]), float(res.modes[0]), params, tol)


def region_grid(
    params: ModelParams,
    eps_range: Sequence[float],
    m_range: Sequence[float],
    resolution,
    tol: float = DEFAULT_TOL,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Status codes on a rectangular grid.

    Rows run over ``eps`` (including ``eps_range[0]``), columns over ``m``.
    Returns ``(eps_values, m_values, status)`` with ``status`` an int8 array
    of :class:`Status` codes.
    """
    if np.ndim(resolution) == 0:
        n_eps = n_m = int(resolution)
    else:
        n_eps, n_m = (int(x) for x in resolution)
    if n_eps < 1 or n_m < 1:
        raise DomainError("region grid must have at least one row and one column")
    e_lo, e_hi = eps_range
    m_lo, m_hi = m_range
    if e_lo < 0 or e_hi < e_lo or m_lo <= 0 or m_hi < m_lo:
        raise DomainError("need 0 <= eps_min <= eps_max and 0 < m_min <= m_max")
    eps_vals = np.linspace(e_lo, e_hi, n_eps)
    m_vals = np.linspace(m_lo, m_hi, n_m)
    ms = m_star(params)
    res = sup_eps(m_vals, params)
    env = np.where(m_vals >= ms, 0.0, res.values)
    margin = eps_vals[:, None] - env[None, :]
    status = np.full((n_eps, n_m), Status.MARGINAL, dtype=np.int8)
    status[margin >= tol] = Status.STABLE
    status[margin <= -tol] = Status.UNSTABLE
    status[:, m_vals >= ms] = Status.STABLE
    return eps_vals, m_vals, status
