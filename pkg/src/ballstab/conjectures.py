"""Diagnostic sequences and the cascade structure of the envelope.

Everything here measures properties that are only conjectured for
``beta < beta_*``: the ``Lambda_k`` sequence, the auxiliary sequences
``eta_k`` and ``sigma_k`` used to show that ``A_k`` decreases, the
quadratic ``Q_{d,alpha}(k)``, and the decomposition of ``eps(m)`` into
segments on which a single curve ``eps_k`` is active.  Results are
reported, never asserted.

Dividing by ``m^r`` turns every curve into a line ``A_k - B_k x`` in the
variable ``x = m^q``, so the envelope over finitely many modes is the upper
envelope of a family of lines.  :func:`cascade` walks that envelope exactly;
its breakpoints are the closed-form intersections ``m_{k,l}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .curves import (
    beta_star,
    coefficient_table,
    intersection,
    landmarks,
    m_star,
    sup_eps,
    tail_bound,
)
from .errors import DomainError
from .spectrum import ModelParams

# relative width below which two line crossings count as the same point
TIE_RTOL = 1e-12


# --------------------------------------------------------------------------
# sequences


def _check_k(k, k_min):
    if isinstance(k, bool) or int(k) != k or k < k_min:
        raise DomainError(f"index must be an integer >= {k_min}, got {k!r}")
    return int(k)


def _check_alpha(d, alpha):
    if not 0.0 < alpha < d - 1:
        raise DomainError(f"alpha must satisfy 0 < alpha < d-1 = {d - 1}, got {alpha!r}")


def lambda_seq(k: int, params: ModelParams) -> float:
    """``Lambda_k = (d+beta+1) A_k/A_{k+1} - (d-alpha+1) B_k/B_{k+1} - (alpha+beta)``.

    Positive exactly when ``eps_k`` and ``eps_{k+1}`` cross past the
    critical point of ``eps_{k+1}``, provided ``B_{k+1} < B_k``.
    """
    k = _check_k(k, 3)
    A, B = coefficient_table(params, k + 1)
    return float(_lambda_from_table(A, B, np.array([k]), params)[0])


def _lambda_from_table(A, B, ks, params):
    d, a, b = params.d, params.alpha, params.beta
    return (d + b + 1) * A[ks] / A[ks + 1] - (d - a + 1) * B[ks] / B[ks + 1] - (a + b)


@dataclass(frozen=True)
class LambdaTable:
    """``Lambda_k`` for ``k = 3..k_max``.

    ``applicable`` is False where ``B_{k+1} >= B_k``: there the curves
    ``eps_k`` and ``eps_{k+1}`` meet only at ``m = 0`` and the sign of
    ``Lambda_k`` carries no information.
    """

    k: np.ndarray
    values: np.ndarray
    applicable: np.ndarray


def lambda_table(params: ModelParams, k_max: int) -> LambdaTable:
    k_max = _check_k(k_max, 3)
    A, B = coefficient_table(params, k_max + 1)
    ks = np.arange(3, k_max + 1)
    vals = _lambda_from_table(A, B, ks, params)
    return LambdaTable(ks, vals, B[ks + 1] < B[ks])


def _shifts(d, alpha):
    ell = 0.5 * (d - 1)
    return ell, ell - 0.5 * alpha


def _log_b_over_a(k_max, d, alpha):
    # log(b_k / a_k) for k = 2..k_max; index 0 is k = 2
    ell, t = _shifts(d, alpha)
    j = np.arange(1, k_max, dtype=float)
    return np.cumsum(np.log1p(2.0 * t / (j + ell - t)))


def eta_sigma_table(k_max: int, d: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``eta_k`` and ``sigma_k`` for ``k = 2..k_max``."""
    _check_alpha(d, alpha)
    k_max = _check_k(k_max, 2)
    ell, t = _shifts(d, alpha)
    ks = np.arange(2, k_max + 1, dtype=float)
    eta = (2 * ks + d - 1) / (ks - 1) * np.expm1(_log_b_over_a(k_max, d, alpha))
    sigma = 2 * t * (ks + d - 1) / (ks + ell + t)
    return eta, sigma


def eta_sigma_seq(k: int, d: int, alpha: float) -> tuple[float, float]:
    """``eta_k = (2k+d-1)/(k-1) (b_k/a_k - 1)`` and ``sigma_k = 2t(k+d-1)/(k+ell+t)``.

    ``A_k > A_{k+1}`` holds if and only if ``eta_k > sigma_k``.
    """
    k = _check_k(k, 2)
    eta, sigma = eta_sigma_table(k, d, alpha)
    return float(eta[-1]), float(sigma[-1])


def q_polynomial(k, d: int, alpha: float):
    """``Q_{d,alpha}(k)`` evaluated from its three-term definition."""
    _check_alpha(d, alpha)
    ell, t = _shifts(d, alpha)
    k = np.asarray(k, dtype=float)
    out = (
        (1 + ell - t) * (2 * k + d - 1) * (2 * k + d + 1)
        + (2 * k + d + 1) * (k + ell + t) * (d + 3) * (k - 1)
        - (2 * k + d - 1) * (k + ell - t) * (d + 3) * k
    )
    return float(out) if out.ndim == 0 else out


def q_coefficients(d: int, alpha: float) -> tuple[float, float, float]:
    """Coefficients of ``Q_{d,alpha}(k) = A k^2 + B k + C``.

    ``A`` and ``B`` are the closed forms; ``C`` is ``Q_{d,alpha}(0)``.
    """
    _check_alpha(d, alpha)
    ell, t = _shifts(d, alpha)
    qa = 4 * (1 + ell + 2 * t + t * d)
    qb = 4 * d * (1 + ell - t) + (d + 3) * (2 * t * (d - 1) - d - 1)
    return qa, qb, q_polynomial(0.0, d, alpha)


def induction_gap(k_max: int, d: int, alpha: float) -> np.ndarray:
    """``b_k/a_k - 1 - 2t(d+3)(k-1)/((2k+d-1)(1+ell-t))`` for ``k = 2..k_max``.

    Nonnegative exactly when ``eta_k >= eta_2``.
    """
    _check_alpha(d, alpha)
    ell, t = _shifts(d, alpha)
    ks = np.arange(2, k_max + 1, dtype=float)
    rhs = 2 * t * (d + 3) * (ks - 1) / ((2 * ks + d - 1) * (1 + ell - t))
    return np.expm1(_log_b_over_a(k_max, d, alpha)) - rhs


# --------------------------------------------------------------------------
# cascade


def _upper_lines(A, B, ks):
    """Active lines of ``max_k (A_k - B_k x)`` over ``x >= 0``.

    Returns the active modes in order of increasing ``x`` and the crossing
    abscissae between consecutive ones.  ``A`` is strictly decreasing, so
    the walk starts from the first line; the line ``0`` (mode 1) is
    included and ends the walk.
    """
    A = np.append(A, 0.0)
    B = np.append(B, 0.0)
    ks = np.append(ks, 1)
    cur = int(np.argmax(A))
    modes = [int(ks[cur])]
    xs: list[float] = []
    x = 0.0
    while True:
        cand = np.flatnonzero(B < B[cur])
        if cand.size == 0:
            break
        xc = (A[cur] - A[cand]) / (B[cur] - B[cand])
        ok = xc >= x * (1 - TIE_RTOL)
        cand, xc = cand[ok], xc[ok]
        if cand.size == 0:
            break
        x_next = float(np.min(xc))
        tied = cand[xc <= x_next + TIE_RTOL * abs(x_next)]
        # past a multiple crossing the flattest line wins
        cur = int(tied[np.argmin(B[tied])])
        modes.append(int(ks[cur]))
        xs.append(max(x_next, x))
        x = xs[-1]
    return modes, np.array(xs)


@dataclass(frozen=True)
class CascadeReport:
    """Segment decomposition of ``eps(m)`` over ``[0, m_*]``.

    ``segments`` lists ``(m_lo, m_hi, active_k)`` and tiles
    ``[0, m_resolved]``.  Beyond ``m_resolved`` modes above ``k_max`` may be
    active; that interval ``(m_resolved, m_*)`` is ``tail``, or None when the
    decomposition reaches ``m_*``.  ``skipped_modes`` are the modes in
    ``[2, max active mode]`` that never appear.  ``mbar_points`` are the
    interior breakpoints, followed by the root where the envelope reaches
    zero if it is resolved.  ``grid_separates`` is False when some segment is
    narrower than the spacing of a ``grid_points`` uniform grid on
    ``[0, m_*]``, and ``grid_agrees`` records whether a direct evaluation of
    the supremum on that grid reproduces the segment modes.
    """

    params: ModelParams
    k_max: int
    segments: list[tuple[float, float, int]]
    skipped_modes: list[int]
    mbar_points: list[float]
    m_star: float
    m_resolved: float
    tail: Optional[tuple[float, float]]
    converges_to_mstar: bool
    grid_separates: bool
    grid_agrees: bool
    notes: list[str] = field(default_factory=list)

    @property
    def active_modes(self) -> list[int]:
        return [s[2] for s in self.segments]

    def as_dict(self) -> dict:
        return {
            "params": {"d": self.params.d, "alpha": self.params.alpha, "beta": self.params.beta},
            "k_max": self.k_max,
            "segments": [
                {"m_lo": lo, "m_hi": hi, "active_k": k} for lo, hi, k in self.segments
            ],
            "skipped_modes": list(self.skipped_modes),
            "mbar_points": list(self.mbar_points),
            "m_star": self.m_star,
            "m_resolved": self.m_resolved,
            "tail": None if self.tail is None else list(self.tail),
            "converges_to_mstar": self.converges_to_mstar,
            "grid_separates": self.grid_separates,
            "grid_agrees": self.grid_agrees,
            "notes": list(self.notes),
        }


def _resolved_limit(params, k_max, hull_value, m_hi, grid_points):
    """Largest ``m <= m_hi`` up to which no mode above ``k_max`` can be active."""
    grid = np.linspace(0.0, m_hi, grid_points)[1:]
    bad = tail_bound(k_max + 1, grid, params) > hull_value(grid)
    if not np.any(bad):
        return m_hi
    i = int(np.argmax(bad))
    lo = grid[i - 1] if i > 0 else 0.0
    hi = grid[i]
    while hi - lo > 1e-13 * hi:
        mid = 0.5 * (lo + hi)
        if tail_bound(k_max + 1, mid, params) > hull_value(mid):
            hi = mid
        else:
            lo = mid
    return lo


def cascade(params: ModelParams, k_max: int = 64, grid_points: int = 4096) -> CascadeReport:
    """Exact segment decomposition of the envelope restricted to modes ``<= k_max``.

    The part of ``[0, m_*]`` on which modes above ``k_max`` cannot compete
    (certified by :func:`tail_bound`) is decomposed exactly; the rest is
    reported as ``tail``.
    """
    k_max = _check_k(k_max, 8)
    if grid_points < 16:
        raise DomainError("grid_points must be at least 16")
    A, B = coefficient_table(params, k_max)
    ks = np.arange(2, k_max + 1)
    modes, xs = _upper_lines(A[2:], B[2:], ks)
    ms = m_star(params)
    q, r = params.q, params.r
    cuts = xs ** (1.0 / q)

    def hull_value(m):
        m = np.asarray(m, dtype=float)
        x = m**q
        return m**r * np.max(A[2:, None] - B[2:, None] * np.atleast_1d(x)[None, :], axis=0)

    notes = []
    # the final cut is where the zero line (mode 1) takes over
    root = float(cuts[-1]) if modes[-1] == 1 else math.inf
    m_res = _resolved_limit(params, k_max, hull_value, min(root, ms), grid_points)
    if root <= ms * (1 + 1e-12) and m_res >= root * (1 - 1e-12):
        m_res = ms if abs(root - ms) <= 1e-9 * ms else root

    bounds = np.concatenate([[0.0], cuts[:-1] if modes[-1] == 1 else cuts])
    segments = []
    for i, k in enumerate(modes):
        if k == 1:
            break
        lo = float(bounds[i])
        hi = float(bounds[i + 1]) if i + 1 < bounds.size else math.inf
        if lo >= m_res:
            break
        segments.append((lo, min(hi, m_res), k))
    if segments:
        lo, hi, k = segments[-1]
        segments[-1] = (lo, m_res, k)
    tail = None if m_res >= ms * (1 - 1e-12) else (float(m_res), float(ms))

    active = sorted({k for _, _, k in segments})
    top = max(active) if active else 2
    skipped = [k for k in range(2, top + 1) if k not in active]
    mbar = [float(s[0]) for s in segments[1:]]
    if tail is None:
        mbar.append(float(m_res))

    # breakpoints approach m_* when their distance to it shrinks monotonically
    gaps = ms - np.array(mbar)
    converges = bool(mbar) and bool(np.all(np.diff(gaps) < 0)) and gaps[-1] >= -1e-9 * ms
    if tail is None:
        converges = converges and abs(gaps[-1]) <= 1e-9 * ms

    spacing = ms / (grid_points - 1)
    widths = np.array([hi - lo for lo, hi, _ in segments])
    separates = bool(np.all(widths >= spacing))
    if not separates:
        notes.append("some segments are narrower than the grid spacing")

    grid = np.linspace(0.0, m_res, grid_points)[1:-1]
    res = sup_eps(grid, params)
    expect = np.array([_mode_at(m, segments) for m in grid])
    near = np.min(np.abs(grid[:, None] - np.array([s[0] for s in segments])[None, :]), axis=1)
    agrees = bool(np.all((res.modes == expect) | (near <= 1e-9 * ms)))
    if not agrees:
        notes.append("direct supremum disagrees with the segment modes on the grid")

    return CascadeReport(
        params=params,
        k_max=k_max,
        segments=segments,
        skipped_modes=skipped,
        mbar_points=mbar,
        m_star=ms,
        m_resolved=float(m_res),
        tail=tail,
        converges_to_mstar=bool(converges),
        grid_separates=bool(separates),
        grid_agrees=bool(agrees),
        notes=notes,
    )


def _mode_at(m, segments):
    for lo, hi, k in segments:
        if lo <= m <= hi:
            return k
    return 1


# --------------------------------------------------------------------------
# conjecture report


def _claim(name, holds, **detail):
    return {"name": name, "holds": bool(holds), **{k: _plain(v) for k, v in detail.items()}}


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    return v


def chain_statements(params: ModelParams, k_max: int):
    """The three equivalent forms of the decrease claim, evaluated independently.

    For each ``k = 3..k_max`` with ``B_{k+1} < B_k`` returns ``k`` and three
    boolean arrays: ``Lambda_k > 0``, ``m_{k,k+1} >= m_{k+1}^c`` and
    ``eps_{k+1}'(m_{k,k+1}) <= 0``.
    """
    A, B = coefficient_table(params, k_max + 1)
    r, q = params.r, params.q
    tab = lambda_table(params, k_max)
    ks = tab.k[tab.applicable]
    lam_pos = tab.values[tab.applicable] > 0
    m_int = ((A[ks] - A[ks + 1]) / (B[ks] - B[ks + 1])) ** (1.0 / q)
    m_crit = (r * A[ks + 1] / ((r + q) * B[ks + 1])) ** (1.0 / q)
    past_crit = m_int >= m_crit
    slope = m_int ** (r - 1) * (r * A[ks + 1] - (r + q) * B[ks + 1] * m_int**q)
    decreasing = slope <= 0
    return ks, lam_pos, past_crit, decreasing


def conjecture_report(params: ModelParams, k_max: int = 64, grid_points: int = 2048) -> dict:
    """Pass/fail evidence for each open claim about ``eps(m)`` at one parameter point.

    Claims are measured over modes ``2..k_max`` and, for the envelope
    shape, on a uniform grid of ``grid_points`` masses in ``(0, m_*)``.
    """
    k_max = _check_k(k_max, 8)
    A, B = coefficient_table(params, k_max + 1)
    r, q = params.r, params.q
    ms = m_star(params)
    claims = []

    casc = cascade(params, k_max, grid_points)
    m23 = intersection(2, 3, params)
    first = casc.segments[0]
    claims.append(
        _claim(
            "eps_equals_eps2_up_to_m23",
            first[2] == 2 and first[1] >= m23 * (1 - 1e-10),
            m23=m23,
            first_breakpoint=first[1],
            first_mode=first[2],
        )
    )

    m3c = landmarks(3, params).crit
    ks = np.arange(4, k_max + 1)
    dA, dB = A[3] - A[ks], B[3] - B[ks]
    exists = dB > 0
    m3k = np.full(ks.size, np.inf)
    m3k[exists] = (dA[exists] / dB[exists]) ** (1.0 / q)
    claims.append(
        _claim(
            "m3k_exceeds_m3c",
            np.all(m3k > m3c),
            m3c=m3c,
            min_m3k=float(np.min(m3k)),
            n_without_intersection=int(np.sum(~exists)),
        )
    )

    kk = np.arange(2, k_max + 1)
    crit_q = r * A[kk] / ((r + q) * B[kk])
    peaks = crit_q ** (r / q) * q * A[kk] / (r + q)
    rises = np.flatnonzero(np.diff(peaks) >= 0) + 3
    claims.append(_claim("peaks_decreasing", rises.size == 0, first_violation=int(rises[0]) if rises.size else None))

    tab = lambda_table(params, k_max)
    bad = tab.k[tab.applicable & (tab.values <= 0)]
    claims.append(
        _claim(
            "lambda_positive",
            bad.size == 0,
            n_applicable=int(np.sum(tab.applicable)),
            min_value=float(np.min(tab.values[tab.applicable])) if np.any(tab.applicable) else None,
            violations=bad,
        )
    )

    ck, s1, s2, s3 = chain_statements(params, k_max)
    mismatch = ck[(s1 != s2) | (s2 != s3)]
    claims.append(_claim("equivalence_chain", mismatch.size == 0, n_checked=int(ck.size), mismatches=mismatch))

    grid = np.linspace(0.0, ms, grid_points)[1:-1]
    res = sup_eps(grid, params)
    m2c = landmarks(2, params).crit
    v = res.values
    slack = 1e-12 * np.max(v)
    dv = np.diff(v)
    up = grid[1:] <= m2c
    down = grid[:-1] >= m2c
    claims.append(
        _claim(
            "envelope_increasing_then_decreasing",
            np.all(dv[up] > -slack) and np.all(dv[down] < slack),
            m2c=m2c,
        )
    )
    peak2 = float(peaks[0])
    claims.append(_claim("global_max_at_m2c", np.max(v) <= peak2 * (1 + 1e-12), max_value=float(np.max(v)), eps2_peak=peak2))

    modes = casc.active_modes
    claims.append(
        _claim("active_modes_increasing", all(a < b for a, b in zip(modes, modes[1:])), n_segments=len(modes))
    )
    return {
        "params": {"d": params.d, "alpha": params.alpha, "beta": params.beta},
        "beta_star": beta_star(params.d, params.alpha),
        "k_max": k_max,
        "claims": claims,
    }
