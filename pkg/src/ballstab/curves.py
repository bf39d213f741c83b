"""Threshold curves ``eps_k(m) = m^r (A_k - B_k m^q)`` and their upper envelope.

``eps_k(m)`` is the value of the perimeter weight at which the ``k``-th
harmonic mode of the second variation changes sign.  The ball is stable
exactly when ``eps >= eps(m) = sup_k eps_k(m)`` with ``eps_1 = 0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import ConsistencyWarning, DomainError
from .specfun import ShiftParams, log_gamma_ratio_array, signed_ratio, telescope_products
from .spectrum import ModelParams, interaction_energy_ball, mode_spectrum, mu_prefactor

# coefficients up to this mode come from running products, beyond it from Gamma ratios
TABLE_MAX = 4096
# dense enumeration of modes stops here; larger modes are scanned geometrically
DENSE_BLOCKS = (64, 256, 1024, 4096)
SCAN_GROWTH = 1.03
SCAN_CAP = 1e120
BISECT_RTOL = 1e-14


def beta_star(d: int, alpha: float) -> float:
    """Attraction exponent above which only the modes 2 and 3 shape the envelope."""
    if not 0.0 < alpha < d - 1:
        raise DomainError(f"beta_star requires 0 < alpha < d-1 = {d - 1}, got {alpha!r}")
    return (6 * d + 2 + alpha * (d - 1)) / (d - 1 - alpha)


@dataclass(frozen=True)
class CurveCoeffs:
    k: int
    A: float
    B: float
    r: float
    q: float


@dataclass(frozen=True)
class CurveLandmarks:
    root: float
    crit: float
    peak: float
    inflection: Optional[float]


# --------------------------------------------------------------------------
# coefficients


def kappa(params: ModelParams) -> tuple[float, float]:
    """Scale constants with ``A_k = kappa_a (1 - a_k/b_k) / ((k-1)(k+d-1))`` and likewise for B."""
    d, a, b = params.d, params.alpha, params.beta
    k_alpha = mu_prefactor(-a, d) * (0.5 * a) / (d - 1 - 0.5 * a)
    k_beta = mu_prefactor(b, d) * (0.5 * b) / (d - 1 + 0.5 * b)
    return k_alpha, k_beta


@lru_cache(maxsize=64)
def _table(params: ModelParams, k_max: int):
    spec = mode_spectrum(params, k_max)
    gap = spec.lam - spec.lam[1]
    gap[:2] = np.inf
    A = (spec.mu_alpha - spec.mu_alpha[1]) / gap
    B = (spec.mu_beta[1] - spec.mu_beta) / gap
    A[:2] = 0.0
    B[:2] = 0.0
    # c_k/d_k = prod_{j=1}^{k-1} (j - beta/2)/(j + d - 1 + beta/2), index k
    j = np.arange(1, k_max, dtype=float)
    cd = np.ones(k_max + 1)
    cd[2:] = np.cumprod((j - 0.5 * params.beta) / (j + params.d - 1 + 0.5 * params.beta))
    for arr in (A, B, cd):
        arr.flags.writeable = False
    return A, B, cd


def coefficient_table(params: ModelParams, k_max: int):
    """Arrays ``A, B`` indexed by mode ``0..k_max`` (entries 0 and 1 are zero)."""
    size = 64
    while size < k_max:
        size *= 2
    A, B, _ = _table(params, size)
    return A[: k_max + 1], B[: k_max + 1]


def _cd_ratio_asymptotic(params: ModelParams, k: np.ndarray) -> np.ndarray:
    half_b = 0.5 * params.beta
    e = params.d - 1 + half_b
    j0 = math.floor(half_b) + 1
    head = 1.0
    for j in range(1, j0):
        head *= (j - half_b) / (j + e)
    if head == 0.0:
        return np.zeros_like(k)
    log_tail = log_gamma_ratio_array(k - half_b, k + e) - log_gamma_ratio_array(j0 - half_b, j0 + e)
    return head * np.exp(log_tail)


def _coefficients_asymptotic(params: ModelParams, k: np.ndarray):
    d, a = params.d, params.alpha
    k_alpha, k_beta = kappa(params)
    # a_k/b_k = Gamma(k + a/2) Gamma(d - a/2) / (Gamma(1 + a/2) Gamma(k + d - 1 - a/2))
    log_ab = log_gamma_ratio_array(k + 0.5 * a, k + d - 1 - 0.5 * a) + (
        math.lgamma(d - 0.5 * a) - math.lgamma(1 + 0.5 * a)
    )
    gap = (k - 1.0) * (k + d - 1.0)
    A = k_alpha * -np.expm1(log_ab) / gap
    B = k_beta * (1.0 - _cd_ratio_asymptotic(params, k)) / gap
    return A, B


def coefficients(params: ModelParams, k):
    """``(A_k, B_k)`` for an integer or array of mode indices ``k >= 1``.

    Mode 1 gives ``(0, 0)``.  Indices may be floats holding integral values
    beyond the int64 range; those are evaluated through Gamma ratios.
    """
    k = np.asarray(k, dtype=float)
    scalar = k.ndim == 0
    k = np.atleast_1d(k)
    if np.any(k < 1):
        raise DomainError("mode index must be >= 1 (mode 0 is excluded by the volume constraint)")
    A = np.zeros(k.shape)
    B = np.zeros(k.shape)
    small = k <= TABLE_MAX
    if np.any(small):
        ks = k[small].astype(np.int64)
        tA, tB = coefficient_table(params, int(ks.max()))
        A[small] = tA[ks]
        B[small] = tB[ks]
    if np.any(~small):
        A[~small], B[~small] = _coefficients_asymptotic(params, k[~small])
    if scalar:
        return float(A[0]), float(B[0])
    return A, B


def curve_coeffs(k: int, params: ModelParams) -> CurveCoeffs:
    if k < 2:
        raise DomainError(f"curve coefficients are defined for k >= 2, got {k}")
    A, B = coefficients(params, k)
    return CurveCoeffs(k=int(k), A=A, B=B, r=params.r, q=params.q)


def curve_coeffs_telescoped(k: int, params: ModelParams) -> CurveCoeffs:
    """Same coefficients through the telescoping products ``a_k .. d_k``."""
    if k < 2:
        raise DomainError(f"curve coefficients are defined for k >= 2, got {k}")
    d = params.d
    tp = telescope_products(k, ShiftParams.from_model(d, params.alpha, params.beta))
    k_alpha, k_beta = kappa(params)
    gap = (k - 1) * (k + d - 1)
    A = k_alpha * (1.0 - signed_ratio(tp.a, tp.b)) / gap
    B = k_beta * (1.0 - signed_ratio(tp.c, tp.d)) / gap
    return CurveCoeffs(k=int(k), A=A, B=B, r=params.r, q=params.q)


# --------------------------------------------------------------------------
# single curves


def eps_k(k, m, params: ModelParams):
    """``eps_k(m)``; zero for ``k = 1`` and negative past the positive root."""
    if np.any(np.asarray(k) < 1):
        raise DomainError("eps_k is undefined for mode 0")
    m = np.asarray(m, dtype=float)
    if np.any(m < 0):
        raise DomainError("mass parameter m must be nonnegative")
    A, B = coefficients(params, k)
    out = m**params.r * (A - B * m**params.q)
    return float(out) if out.ndim == 0 else out


def landmarks(k: int, params: ModelParams) -> CurveLandmarks:
    c = curve_coeffs(k, params)
    r, q = c.r, c.q
    root = (c.A / c.B) ** (1.0 / q)
    crit_q = r * c.A / ((r + q) * c.B)
    crit = crit_q ** (1.0 / q)
    peak = crit_q ** (r / q) * (q * c.A / (r + q))
    inflection = None
    if params.alpha < 1.0:
        inflection = ((1.0 - params.alpha) / (1.0 + params.beta)) ** (1.0 / q) * crit
    return CurveLandmarks(root=root, crit=crit, peak=peak, inflection=inflection)


def intersection(k: int, l: int, params: ModelParams) -> Optional[float]:
    """Positive mass where ``eps_k`` and ``eps_l`` cross, or ``None`` if they only meet at 0."""
    if k == l or k < 2 or l < 2:
        raise DomainError(f"need two distinct modes >= 2, got {k}, {l}")
    Ak, Bk = coefficients(params, k)
    Al, Bl = coefficients(params, l)
    if Bk == Bl:
        return None
    ratio = (Ak - Al) / (Bk - Bl)
    if not ratio > 0.0:
        return None
    return ratio ** (1.0 / params.q)


def roots(params: ModelParams, k_max: int) -> np.ndarray:
    """Positive roots ``m_k^0`` for ``k = 2..k_max`` (index 0 is mode 2)."""
    A, B = coefficient_table(params, k_max)
    return (A[2:] / B[2:]) ** (1.0 / params.q)


# --------------------------------------------------------------------------
# mass threshold


def m_star_branches(params: ModelParams) -> tuple[float, float]:
    """Both closed-form candidates for ``m_*``: (large-beta branch, small-beta branch)."""
    d, a, b = params.d, params.alpha, params.beta
    ratio = interaction_energy_ball(-a, d) / interaction_energy_ball(b, d)
    expo = d / (a + b)
    big = a * (d - a) * (2 * d + 2 + b) / (b * (d + b) * (2 * d + 2 - a))
    small = a * (d - a) * (2 * d - a) * (d - 1 + b) / (b * (d + b) * (2 * d + b) * (d - 1 - a))
    return (big * ratio) ** expo, (small * ratio) ** expo


def m_star(params: ModelParams) -> float:
    """Mass above which the ball is stable for every ``eps >= 0``."""
    bs = beta_star(params.d, params.alpha)
    large, small = m_star_branches(params)
    if abs(params.beta - bs) <= 1e-9:
        if abs(large - small) > 1e-6 * small:
            warnings.warn(
                f"m_* branches disagree at beta ~ beta_*: {large!r} vs {small!r}",
                ConsistencyWarning,
                stacklevel=2,
            )
    return large if params.beta >= bs else small


def extrapolated_root_limit(params: ModelParams, k_max: int = 10_000) -> float:
    """Limit of ``m_k^0`` as k grows, by two-point Richardson extrapolation.

    ``(m_k^0)^q`` is affine in ``a_k/b_k``, a Gamma ratio that behaves like
    ``n^-(d-1-alpha)`` in the shifted index ``n = k + (d-2)/2`` up to a
    relative ``O(n^-2)``.  That rate is eliminated between ``k_max/2`` and
    ``k_max`` on the ``q``-th powers, and the root is taken at the end.
    Extrapolating ``m_k^0`` directly would leave an ``n^-2(d-1-alpha)`` term,
    which decays too slowly when ``alpha`` is close to ``d-1``.
    """
    k2 = int(k_max)
    k1 = k2 // 2
    rts = roots(params, k2)
    q = params.q
    y1, y2 = rts[k1 - 2] ** q, rts[k2 - 2] ** q
    p = params.d - 1 - params.alpha
    shift = 0.5 * (params.d - 2)
    w1, w2 = (k1 + shift) ** p, (k2 + shift) ** p
    return ((w2 * y2 - w1 * y1) / (w2 - w1)) ** (1.0 / q)


# --------------------------------------------------------------------------
# envelope


def tail_bound(K, m, params: ModelParams):
    """Upper bound on ``eps_k(m)`` valid simultaneously for every ``k >= K``."""
    K = np.asarray(K, dtype=float)
    m = np.asarray(m, dtype=float)
    k_alpha, k_beta = kappa(params)
    if np.all(K <= TABLE_MAX):
        _, _, cd = _table(params, _table_size(int(np.max(K))))
        cdK = np.abs(cd[K.astype(np.int64)])
    else:
        cdK = np.abs(_cd_ratio_asymptotic(params, np.atleast_1d(K)))
        cdK = cdK.reshape(K.shape)
    bracket = k_alpha - m**params.q * k_beta * (1.0 - cdK)
    gap = (K - 1.0) * (K + params.d - 1.0)
    return m**params.r * np.maximum(bracket, 0.0) / gap


def _table_size(k: int) -> int:
    size = 64
    while size < k:
        size *= 2
    return size


@dataclass(frozen=True)
class SupResult:
    values: np.ndarray
    modes: np.ndarray
    settled: np.ndarray
    k_truncation: float


def _update(best, mode, idx, E, ks):
    j = np.argmax(E, axis=0)
    e = E[j, np.arange(E.shape[1])]
    better = e > best[idx]
    sel = idx[better]
    best[sel] = e[better]
    mode[sel] = ks[j[better]]
    return better, j


def sup_eps(m, params: ModelParams, k_cap: float = SCAN_CAP) -> SupResult:
    """``eps(m) = sup_{k>=1} eps_k(m)`` at every entry of ``m``.

    Modes are enumerated densely up to 4096 and then on a geometric grid,
    with the maximizer refined by integer ternary search.  A grid point is
    settled once :func:`tail_bound` for the next unexamined mode drops to
    the running maximum; points never settled before ``k_cap`` are flagged.
    Ties go to the smallest mode, and mode 1 (value 0) wins when every
    ``eps_k(m)`` is negative.
    """
    m = np.atleast_1d(np.asarray(m, dtype=float))
    n = m.size
    best = np.zeros(n)
    mode = np.ones(n)
    settled = np.zeros(n, dtype=bool)
    mr = m**params.r
    mq = m**params.q
    k_lo = 2
    k_used = 1.0
    for k_hi in DENSE_BLOCKS:
        idx = np.flatnonzero(~settled)
        if idx.size == 0:
            break
        ks = np.arange(k_lo, k_hi + 1, dtype=float)
        A, B = coefficients(params, ks)
        E = mr[idx][None, :] * (A[:, None] - B[:, None] * mq[idx][None, :])
        _update(best, mode, idx, E, ks)
        settled[idx] = tail_bound(k_hi + 1, m[idx], params) <= best[idx]
        k_lo = k_hi + 1
        k_used = float(k_hi)

    idx = np.flatnonzero(~settled)
    if idx.size:
        k_used = _geometric_scan(m, mr, mq, best, mode, settled, params, float(k_lo), k_cap)
    return SupResult(best, mode, settled, k_used)


def _geometric_grid(k_lo: float, k_cap: float) -> np.ndarray:
    n = int(math.ceil(math.log(k_cap / k_lo) / math.log(SCAN_GROWTH))) + 1
    ks = np.floor(k_lo * SCAN_GROWTH ** np.arange(n))
    return np.unique(ks[ks <= k_cap])


def _geometric_scan(m, mr, mq, best, mode, settled, params, k_lo, k_cap, chunk=256):
    ks_all = _geometric_grid(k_lo, k_cap)
    scanned = np.zeros(m.size, dtype=bool)
    k_used = k_lo
    for start in range(0, ks_all.size, chunk):
        idx = np.flatnonzero(~settled)
        if idx.size == 0:
            break
        ks = ks_all[start : start + chunk]
        A, B = coefficients(params, ks)
        E = mr[idx][None, :] * (A[:, None] - B[:, None] * mq[idx][None, :])
        better, _ = _update(best, mode, idx, E, ks)
        scanned[idx[better]] = True
        k_next = ks_all[start + chunk] if start + chunk < ks_all.size else ks[-1] * SCAN_GROWTH
        settled[idx] = tail_bound(k_next, m[idx], params) <= best[idx]
        k_used = float(ks[-1])
    ref = np.flatnonzero(scanned)
    if ref.size:
        _refine_modes(m[ref], mr[ref], mq[ref], ref, best, mode, params)
    return k_used


def _refine_modes(m, mr, mq, ref, best, mode, params):
    """Integer ternary search around each geometric-scan maximizer."""
    k0 = mode[ref]
    lo = np.maximum(np.floor(k0 / SCAN_GROWTH) - 1.0, float(TABLE_MAX) + 1.0)
    hi = np.ceil(k0 * SCAN_GROWTH) + 1.0

    def f(k):
        A, B = coefficients(params, k)
        return mr * (A - B * mq)

    for _ in range(400):
        active = (hi - lo) > 2.0 + 1e-13 * hi
        if not np.any(active):
            break
        third = np.floor((hi - lo) / 3.0)
        m1 = lo + third
        m2 = hi - third
        f1, f2 = f(m1), f(m2)
        go_right = active & (f1 < f2)
        go_left = active & ~(f1 < f2)
        lo = np.where(go_right, m1 + 1.0, lo)
        hi = np.where(go_left, m2 - 1.0, hi)
        hi = np.maximum(hi, lo)
    for off in (0.0, 1.0, 2.0):
        k = np.minimum(lo + off, hi)
        v = f(k)
        better = v > best[ref]
        best[ref[better]] = v[better]
        mode[ref[better]] = k[better]


def _bisect_crossings(lo, hi, k1, k2, params, rtol=BISECT_RTOL):
    """Vectorized bisection of ``eps_{k1} - eps_{k2}`` on brackets ``[lo, hi]``."""
    lo = lo.copy()
    hi = hi.copy()
    A1, B1 = coefficients(params, k1)
    A2, B2 = coefficients(params, k2)

    def g(m):
        return m**params.r * ((A1 - A2) - (B1 - B2) * m**params.q)

    g_lo = g(lo)
    # relative stopping rule: breakpoints near m = 0 need the same accuracy
    while np.any(hi - lo > rtol * hi):
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        left = (g_mid > 0) == (g_lo > 0)
        lo = np.where(left, mid, lo)
        g_lo = np.where(left, g_mid, g_lo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class Envelope:
    """Stability boundary ``eps(m)`` sampled on a grid.

    ``active_mode`` holds the maximizing mode per grid point as float64,
    since for masses close to ``m_star`` it can exceed the int64 range.
    ``settled`` is False where the supremum could not be certified.  At
    ``m = 0`` all curves vanish and the active mode is reported as 2, the
    mode that is active immediately to the right.
    """

    grid: np.ndarray
    values: np.ndarray
    active_mode: np.ndarray
    breakpoints: np.ndarray
    m_star: float
    k_truncation: float
    settled: np.ndarray


def envelope(
    params: ModelParams,
    m_min: float,
    m_max: float,
    n_points: int,
    k_cap: float = SCAN_CAP,
) -> Envelope:
    if not (0.0 <= m_min < m_max) or not math.isfinite(m_max) or n_points < 2:
        raise DomainError(
            f"need 0 <= m_min < m_max and n_points >= 2, got {m_min}, {m_max}, {n_points}"
        )
    grid = np.linspace(m_min, m_max, int(n_points))
    res = sup_eps(grid, params, k_cap=k_cap)
    modes = res.modes.copy()
    # every curve vanishes at m = 0; report the mode active just to the right
    modes[grid == 0.0] = 2.0
    change = np.flatnonzero(modes[1:] != modes[:-1])
    if change.size:
        bps = _bisect_crossings(
            grid[change], grid[change + 1], modes[change], modes[change + 1], params
        )
    else:
        bps = np.empty(0)
    return Envelope(
        grid=grid,
        values=res.values,
        active_mode=modes,
        breakpoints=bps,
        m_star=m_star(params),
        k_truncation=res.k_truncation,
        settled=res.settled,
    )


def envelope_value(m: float, params: ModelParams) -> float:
    return float(sup_eps(np.array([m]), params).values[0])
