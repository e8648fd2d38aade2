"""Riemann zeta at real arguments by Euler-Maclaurin summation.

Only what the divisor-sum error term needs: real s away from the pole,
typically s in [-3, 3].  Downstream code reads the three constants it
needs from :class:`ZetaConstants` and never calls the evaluator directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath

from .errors import DomainError, NonConvergent, PoleAtOne

WORK_PREC = 128                    # bits; the power sums cancel heavily for s < 0
MAX_CORRECTION_TERMS = 15          # uses B_2 .. B_30
_TRUNCATIONS = (4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256, 512, 1024, 2048, 4096)


@lru_cache(maxsize=None)
def bernoulli_numbers(n_max: int = 2 * MAX_CORRECTION_TERMS + 2) -> tuple[Fraction, ...]:
    """B_0 .. B_{n_max} (convention B_1 = -1/2) as exact fractions."""
    b = [Fraction(0)] * (n_max + 1)
    b[0] = Fraction(1)
    for m in range(1, n_max + 1):
        acc = Fraction(0)
        binom = 1
        for j in range(m):
            acc += binom * b[j]
            binom = binom * (m + 1 - j) // (j + 1)
        b[m] = -acc / (m + 1)
    return tuple(b)


@lru_cache(maxsize=None)
def _em_coefficients() -> tuple[Fraction, ...]:
    # B_{2j} / (2j)!  for j = 1 .. MAX_CORRECTION_TERMS + 1
    b = bernoulli_numbers()
    return tuple(b[2 * j] / math.factorial(2 * j) for j in range(1, MAX_CORRECTION_TERMS + 2))


def _correction_terms(s, n: int) -> list:
    """T_j = B_{2j}/(2j)! * s(s+1)...(s+2j-2) * N^(-s-2j+1), j = 1..M+1.

    Works for float or mpf ``s``; the result type follows ``s``.
    """
    mpf_mode = isinstance(s, mpmath.mpf)
    terms = []
    rising = s                                    # s(s+1)...(s+2j-2)
    for j, c in enumerate(_em_coefficients(), start=1):
        cc = mpmath.mpf(c.numerator) / c.denominator if mpf_mode else float(c)
        base = mpmath.mpf(n) if mpf_mode else float(n)
        terms.append(cc * rising * base ** (-s - 2 * j + 1))
        rising *= (s + 2 * j - 1) * (s + 2 * j)
    return terms


def _plan(s: float, target_abs_error: float) -> tuple[int, int]:
    for n in _TRUNCATIONS:
        terms = _correction_terms(s, n)
        for m in range(1, MAX_CORRECTION_TERMS + 1):
            # for real s > 1-2m-... the remainder is bounded by the first omitted term;
            # factor 2 keeps a margin where that sign argument is borderline
            if 2.0 * abs(terms[m]) <= target_abs_error and s + 2 * m + 1 > 0:
                return n, m
    raise NonConvergent(f"zeta({s}): error budget {target_abs_error:g} not reachable "
                        f"with N <= {_TRUNCATIONS[-1]} and {MAX_CORRECTION_TERMS} correction terms")


def zeta_real(s: float, target_abs_error: float = 1e-15) -> float:
    """zeta(s) for real s != 1 with absolute error about ``target_abs_error``."""
    s = float(s)
    if not math.isfinite(s):
        raise DomainError(f"s must be finite, got {s}")
    if abs(s - 1.0) <= 1e-6:
        raise PoleAtOne(f"s = {s} is within 1e-6 of the pole at 1")
    if not 0.0 < target_abs_error <= 1e-6:
        raise DomainError("target_abs_error must lie in (0, 1e-6]")
    n, m = _plan(s, target_abs_error)
    with mpmath.workprec(WORK_PREC):
        sm = mpmath.mpf(s)
        big_n = mpmath.mpf(n)
        total = mpmath.fsum(mpmath.mpf(k) ** (-sm) for k in range(1, n))
        total += big_n ** (1 - sm) / (sm - 1) + big_n ** (-sm) / 2
        total += mpmath.fsum(_correction_terms(sm, n)[:m])
        return float(total)


@dataclass(frozen=True)
class ZetaConstants:
    a: float
    zeta_one_minus_a: float
    zeta_one_plus_a: float
    zeta_minus_a: float
    precision_bits: int = WORK_PREC


def check_a(a: float) -> float:
    a = float(a)
    if not -0.5 < a < 0.0:
        raise DomainError(f"a must lie in (-1/2, 0), got {a}")
    return a


@lru_cache(maxsize=64)
def zeta_constants(a: float) -> ZetaConstants:
    a = check_a(a)
    tol = 1e-15
    return ZetaConstants(
        a=a,
        zeta_one_minus_a=zeta_real(1.0 - a, tol),
        zeta_one_plus_a=zeta_real(1.0 + a, tol),
        zeta_minus_a=zeta_real(-a, tol),
    )
