"""Moment constants and exponent bookkeeping.

* s_kl: truncated series over sqrt-balanced k-tuples, weight sigma_a(n)/n^(3/4+a/2)
* B_k, C_k: cosine/binomial combinations of the s_kl
* b_a(k), A0(a), alpha(k, A0), delta_a(k, A0), and the closed forms for k = 3..7
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .sigma_delta import SigmaTable, build_sigma_table
from .special_values import check_a
from .sqrt_relations import DEFAULT_SOLUTION_CAP, SignPattern, grouped_solution_sum

_SQRT_HALF = math.sqrt(0.5)
_COS_EIGHTHS = (1.0, _SQRT_HALF, 0.0, -_SQRT_HALF, -1.0, -_SQRT_HALF, 0.0, _SQRT_HALF)


def cos_quarter_pi(m: int) -> float:
    """cos(pi m / 4) for integer m, with exact zeros."""
    return _COS_EIGHTHS[m % 8]


def series_weights(a: float, y: int, table: SigmaTable | None = None) -> np.ndarray:
    """w[n] = sigma_a(n) / n^(3/4 + a/2) for 0 <= n <= y (w[0] = 0)."""
    if table is None or table.n_max < y or table.a != a:
        table = build_sigma_table(a, max(y, 1))
    n = np.arange(1, y + 1, dtype=np.float64)
    w = np.zeros(y + 1)
    w[1:] = table.sigma[1:y + 1] * np.exp(-(0.75 + 0.5 * a) * np.log(n))
    return w


@dataclass(frozen=True)
class SeriesEstimate:
    k: int
    l: int
    a: float
    y: int
    value: float
    tail_bound: float
    terms_used: int
    tail_constant: float = math.nan
    history: tuple[tuple[int, float], ...] = field(default=(), repr=False)


def _series_value(a, k, l, y, w, cap):
    if k == 2:
        # diagonal n_1 = n_2
        return math.fsum((w[1:y + 1] ** 2).tolist()), y
    return grouped_solution_sum(k, l, y, w, cap)


def s_kl(a: float, k: int, l: int, y: int, table: SigmaTable | None = None,
         cap: int = DEFAULT_SOLUTION_CAP) -> SeriesEstimate:
    """Truncated series s_{k;l}(sigma_a; y) plus an empirical tail bound.

    The tail constant is the largest |s(2u) - s(u)| u^(1/2+a) over the last
    three cutoff doublings u = y/8, y/4, y/2; it is NaN for y < 8.
    """
    check_a(a)
    if not 1 <= l < k <= 8:
        raise DomainError("need 1 <= l < k <= 8")
    y = int(y)
    if y < 1:
        raise DomainError("y must be >= 1")
    w = series_weights(a, y, table)
    value, count = _series_value(a, k, l, y, w, cap)
    history = [(y, value)]
    tail_c = math.nan
    if y >= 8:
        for shift in (1, 2, 3):
            yy = y >> shift
            history.append((yy, _series_value(a, k, l, yy, w, cap)[0]))
        history.sort()
        tail_c = max(abs(v2 - v1) * y1 ** (0.5 + a)
                     for (y1, v1), (_, v2) in zip(history, history[1:]))
    return SeriesEstimate(k=k, l=l, a=a, y=y, value=value,
                          tail_bound=tail_c * y ** (-0.5 - a), terms_used=count,
                          tail_constant=tail_c, history=tuple(history))


def B_k_finite(a: float, k: int, y: int, table: SigmaTable | None = None,
               cap: int = DEFAULT_SOLUTION_CAP) -> float:
    """sum_{l=1}^{k-1} C(k-1, l) s_{k;l}(sigma_a; y) cos(pi (k - 2l) / 4)."""
    if not 2 <= k <= 8:
        raise DomainError("k must lie in [2, 8]")
    parts = []
    for l in range(1, k):
        wgt = math.comb(k - 1, l) * cos_quarter_pi(k - 2 * l)
        if wgt == 0.0:
            continue
        parts.append(wgt * s_kl(a, k, min(l, k - l), y, table, cap).value)
    return math.fsum(parts)


def pattern_series(a: float, pattern: SignPattern, y: int, table: SigmaTable | None = None,
                   cap: int = DEFAULT_SOLUTION_CAP) -> float:
    """Weighted sum over n_j <= y with alpha(n; pattern) = 0 (the all-plus pattern gives 0)."""
    plus = [j for j, s in enumerate(pattern.signs) if s > 0]
    minus = [j for j, s in enumerate(pattern.signs) if s < 0]
    if not minus:
        return 0.0
    w = series_weights(a, y, table)
    # the weight is symmetric, so the sum only depends on the side sizes
    return grouped_solution_sum(pattern.k, len(plus), y, w, cap)[0]


def B_k_patterns(a: float, k: int, y: int, table: SigmaTable | None = None) -> float:
    """Same quantity as B_k_finite, summed over all 2^(k-1) sign patterns."""
    parts = []
    for pat in SignPattern.all_patterns(k):
        c = cos_quarter_pi(-pat.beta)
        if c != 0.0 and any(pat.bits):
            parts.append(c * pattern_series(a, pat, y, table))
    return math.fsum(parts)


class CkConvention(str, enum.Enum):
    DENSITY = "density"
    INTEGRATED = "integrated"


def moment_exponent(a: float, k: int) -> float:
    """p = (4 + k + 2ka)/4, the growth exponent of the k-th moment."""
    return (4 + k + 2 * k * a) / 4


def C_k(a: float, k: int, y: int, convention: CkConvention | str = CkConvention.INTEGRATED,
        table: SigmaTable | None = None, B: float | None = None) -> float:
    """B_k/((sqrt2 pi)^k 2^(k-1)); the integrated convention divides further by p."""
    convention = CkConvention(convention)
    if B is None:
        B = B_k_finite(a, k, y, table)
    density = B / ((math.sqrt(2.0) * math.pi) ** k * 2 ** (k - 1))
    if convention is CkConvention.DENSITY:
        return density
    return density / moment_exponent(a, k)


# ---------------------------------------------------------------------------
# exponents


def A0(a: float) -> float:
    return 8 * (1 - a * a) / (1 - 2 * a)


def b_a(a: float, k: int) -> float:
    if k < 3:
        raise DomainError("b_a(k) needs k >= 3")
    return 2.0 ** (k - 2) + (k - 6) / 4 - k * a / 2


class Branch(str, enum.Enum):
    SMALL_K = "SmallK"
    LARGE_K = "LargeK"


@dataclass(frozen=True)
class ExponentBundle:
    a: float
    k: int
    A0: float
    b: float
    alpha: float
    delta: float
    branch: Branch


def exponent_bundle(a: float, k: int, raw_printed: bool = False) -> ExponentBundle:
    """b_a(k), alpha(k, A0), delta_a(k, A0) with A0 = 8(1-a^2)/(1-2a).

    The large-k branch uses alpha = (A0-k)(1+2a)/(2(A0-2)).  With
    ``raw_printed`` it instead takes the literal (A0-k)/(2(A0-2)) + a, kept
    only for comparison; that version disagrees with the closed forms.
    """
    check_a(a)
    a0 = A0(a)
    if not 3 <= k < a0:
        raise DomainError(f"need 3 <= k < A0 = {a0:.6g}")
    b = b_a(a, k)
    if k - 1 < a0 / 2:
        branch, alpha = Branch.SMALL_K, 0.25 + a / 2
    else:
        # k - 1 >= A0/2 is the same condition as k >= A0/2 + 1: no integer k falls between
        branch = Branch.LARGE_K
        if raw_printed:
            alpha = (a0 - k) / (2 * (a0 - 2)) + a
        else:
            alpha = (a0 - k) * (1 + 2 * a) / (2 * (a0 - 2))
    return ExponentBundle(a=a, k=k, A0=a0, b=b, alpha=alpha,
                          delta=alpha / (2 * b + 2 * alpha), branch=branch)


def auto_cutoff(a: float, k: int, T: float) -> int:
    """y = T^(1/(2 b_a(k) + 2 alpha(k, A0))), rounded, at least 1."""
    eb = exponent_bundle(a, k)
    return max(1, round(T ** (1.0 / (2 * eb.b + 2 * eb.alpha))))


_SQ3 = math.sqrt(3.0)
COROLLARY_RANGES = {
    3: -0.5,
    4: -(_SQ3 - 1) / 2,
    5: -0.25,
    6: -(math.sqrt(13.0) - 3) / 4,
    7: -(math.sqrt(57.0) - 7) / 8,
}


def _corollary_printed(a: float, k: int) -> float:
    if k == 3:
        if a <= -(_SQ3 - 1) / 2:
            return (1 + 2 * a) ** 2 * (-5 + 4 * a) / (8 * (5 + 2 * a - 7 * a ** 2 + 2 * a ** 3))
        return (1 + 2 * a) / (12 - 8 * a)
    if k == 4:
        if a <= -(math.sqrt(13.0) - 3) / 4:
            return (1 + 4 * a + 2 * a ** 2 - 4 * a ** 3) / (23 + 10 * a - 32 * a ** 2 + 8 * a ** 3)
        return (1 + 2 * a) / (30 - 12 * a)
    if k == 5:
        return (1 + 2 * a) * (-3 - 10 * a + 8 * a ** 2) / (24 * (8 + 4 * a - 11 * a ** 2 + 2 * a ** 3))
    if k == 6:
        return (1 + 8 * a + 8 * a ** 2 - 8 * a ** 3) / (194 + 108 * a - 264 * a ** 2 + 32 * a ** 3)
    return (1 + 16 * a + 20 * a ** 2 - 16 * a ** 3) / (776 + 464 * a - 1048 * a ** 2 + 80 * a ** 3)


def corollary_delta(a: float, k: int, signed: bool = False) -> float:
    """Closed-form delta_a(k, A0) for k = 3..7 on each admissible a-range.

    Two printed numerators (k = 3 near a = -1/2, and k = 5) come out negative
    on their ranges; the default returns the absolute value, ``signed=True``
    the printed expression as is.
    """
    if k not in COROLLARY_RANGES:
        raise DomainError("closed forms exist for k = 3..7 only")
    if not COROLLARY_RANGES[k] < a < 0:
        raise DomainError(f"a = {a} outside ({COROLLARY_RANGES[k]:.6g}, 0) for k = {k}")
    v = _corollary_printed(a, k)
    return v if signed else abs(v)
