"""Lemma suite: numerical verification of the proven identities and inequalities.

Each test yields a record ``{name, params, residual, tolerance, pass}``.
For identities ``residual`` is a relative error and passes when it is at
most ``tolerance``.  For inequalities ``residual`` is the size of the worst
violation (0 when none).  Strict inequalities have ``tolerance`` 0 and pass
only when they hold strictly at every index; non-strict ones allow a
violation of at most ``tolerance`` for rounding.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import __version__
from .conjectures import eta_sigma_table, induction_gap, q_coefficients, q_polynomial
from .curves import beta_star, coefficient_table, intersection, landmarks, m_star, roots
from .errors import DomainError
from .spectrum import ModelParams

K_LEMMA = 1000
IDENTITY_RTOL = 1e-10

STANDARD_D = (2, 3, 4, 6, 8, 10, 12)
STANDARD_ALPHA_FRACTIONS = (0.1, 0.5, 0.9)
STANDARD_BETA = (0.5, 2.0, 8.0, 32.0, 128.0)


def standard_grid() -> list[ModelParams]:
    """The sweep used by the lemma suite.

    Every ``(d, alpha)`` is paired with the fixed betas and with
    ``1.25 beta_*``, so both sides of the threshold are always present.
    """
    out = []
    for d in STANDARD_D:
        for f in STANDARD_ALPHA_FRACTIONS:
            a = f * (d - 1)
            betas = sorted(set(STANDARD_BETA) | {1.25 * beta_star(d, a)})
            out.extend(ModelParams(d, a, b) for b in betas)
    return out


def small_grid() -> list[ModelParams]:
    """A quick subset: one alpha per dimension, one beta on each side of ``beta_*``."""
    out = []
    for d in (2, 3, 6, 12):
        a = 0.5 * (d - 1)
        out.append(ModelParams(d, a, 2.0))
        out.append(ModelParams(d, a, 1.25 * beta_star(d, a)))
    return out


GRIDS = {"standard": standard_grid, "small": small_grid}


def _record(name, params, residual, tolerance, passed):
    return {
        "name": name,
        "params": {"d": params.d, "alpha": params.alpha, "beta": params.beta},
        "residual": float(residual),
        "tolerance": float(tolerance),
        "pass": bool(passed),
    }


def _rel(a, b):
    return abs(a - b) / abs(b)


def _strict(name, params, margins):
    worst = float(np.min(margins))
    return _record(name, params, max(0.0, -worst), 0.0, worst > 0)


def _at_least(name, params, margins, tol):
    # non-strict inequality up to rounding: margins >= -tol
    worst = float(np.min(margins))
    return _record(name, params, max(0.0, -worst), tol, worst >= -tol)


@lru_cache(maxsize=64)
def _alpha_sequences(d, alpha, k_max):
    eta, sigma = eta_sigma_table(k_max, d, alpha)
    ks = np.arange(2, k_max + 1, dtype=float)
    qv = q_polynomial(ks, d, alpha)
    qa, qb, qc = q_coefficients(d, alpha)
    q_rel = np.max(np.abs(qv - (qa * ks * ks + qb * ks + qc)) / np.abs(qv))
    return eta, sigma, qv, float(q_rel), induction_gap(k_max, d, alpha)


def lemma_tests(params: ModelParams, k_max: int = K_LEMMA) -> list[dict]:
    d, a, b = params.d, params.alpha, params.beta
    A, B = coefficient_table(params, k_max)
    A, B = A[2:], B[2:]
    out = []

    # A_k strictly decreasing, in relative terms
    out.append(_strict("A_k_strictly_decreasing", params, (A[:-1] - A[1:]) / A[:-1]))

    # the two ratio identities behind m_{2,3} = m_3^c
    res_a = _rel((A[1] - A[0]) / A[1], -(d + 1 - a) / (d + 1))
    out.append(_record("ratio_identity_A", params, res_a, IDENTITY_RTOL, res_a <= IDENTITY_RTOL))
    res_b = _rel((B[1] - B[0]) / B[1], -(d + 1 + b) / (d + 1))
    out.append(_record("ratio_identity_B", params, res_b, IDENTITY_RTOL, res_b <= IDENTITY_RTOL))

    m23 = intersection(2, 3, params)
    m3c = landmarks(3, params).crit
    res = _rel(m23, m3c) if m23 is not None else np.inf
    out.append(_record("m23_equals_m3c", params, res, IDENTITY_RTOL, res <= IDENTITY_RTOL))

    eta, sigma, qv, q_rel, gap = _alpha_sequences(d, a, k_max)
    out.append(_strict("eta_minus_sigma_positive", params, (eta - sigma) / np.abs(eta)))
    out.append(_strict("sigma_strictly_decreasing", params, sigma[:-1] - sigma[1:]))
    # eta_k >= eta_2, restated through b_k/a_k; equality at k = 2
    out.append(_at_least("eta_at_least_eta2", params, gap / (1.0 + np.abs(gap)), 1e-12))
    out.append(_strict("Q_positive", params, qv))
    out.append(_strict("Q_increasing", params, np.diff(qv)))
    out.append(_record("Q_expanded_form", params, q_rel, IDENTITY_RTOL, q_rel <= IDENTITY_RTOL))

    rts = roots(params, k_max)
    # m_2^0 is the smallest root: every other root exceeds it
    out.append(_strict("m2_root_is_minimum", params, (rts[1:] - rts[0]) / rts[0]))

    # the supremum of the roots is attained at k = 3 on the large-beta side
    if b >= beta_star(d, a):
        res = _rel(rts[1], m_star(params))
        out.append(_record("m_star_equals_m3_root", params, res, 1e-9, res <= 1e-9))
    else:
        # for fast-converging roots m_k^0 agrees with m_* to rounding
        out.append(_at_least("roots_below_m_star", params, (m_star(params) - rts) / m_star(params), 1e-12))
    return out


def run_suite(suite: str = "lemmas", grid: str = "standard", k_max: int = K_LEMMA) -> dict:
    """Run a named suite over a named grid and return the JSON-ready report."""
    if suite != "lemmas":
        raise DomainError(f"unknown suite {suite!r}; available: lemmas")
    if grid not in GRIDS:
        raise DomainError(f"unknown grid {grid!r}; available: {', '.join(sorted(GRIDS))}")
    tests = []
    for p in GRIDS[grid]():
        tests.extend(lemma_tests(p, k_max))
    return {"suite": suite, "generated_with_version": __version__, "tests": tests}
