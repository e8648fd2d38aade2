"""Exact arithmetic for signed sums of square roots of positive integers.

Every n >= 1 is written n = c^2 d with d squarefree, so sqrt(n) = c sqrt(d).
Square roots of distinct squarefree integers are linearly independent over
Q, hence a signed sum  sum_j s_j sqrt(n_j)  vanishes iff the signed
c-coefficients cancel inside every kernel class d.  All zero decisions in
this module go through that test; floating point (extended or 128-bit and
up) is only used for magnitudes of sums already known to be nonzero.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .errors import CapacityError, DomainError

DEFAULT_SOLUTION_CAP = 5_000_000
HIGH_PREC = 256              # bits, magnitudes of tiny nonzero sums
GAP_PREC = 128
_NEAR_ZERO = 1e-9            # float window that triggers an exact re-check


@dataclass(frozen=True)
class KernelForm:
    n: int
    c: int
    d: int


def kernel_decompose(n: int) -> KernelForm:
    """Unique (c, d) with n = c^2 d and d squarefree, by trial division."""
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    c, d, m = 1, 1, n
    p = 2
    while p * p <= m:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            c *= p ** (e // 2)
            if e % 2:
                d *= p
        p += 1 if p == 2 else 2
    d *= m
    return KernelForm(n=n, c=c, d=d)


@lru_cache(maxsize=8)
def kernel_table(limit: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays (c, d) with n = c[n]^2 d[n] for 1 <= n <= limit (index 0 unused)."""
    c = np.ones(limit + 1, dtype=np.int64)
    for q in range(2, math.isqrt(limit) + 1):
        c[q * q::q * q] = q          # ascending q leaves the largest square divisor
    n = np.arange(limit + 1, dtype=np.int64)
    d = n // (c * c)
    c.flags.writeable = False
    d.flags.writeable = False
    return c, d


@dataclass(frozen=True)
class SignPattern:
    """Bits (i_1..i_{k-1}); the signed sum is sqrt(n_1) + sum_j (-1)^{i_j} sqrt(n_{j+1})."""

    k: int
    bits: tuple[int, ...]

    def __post_init__(self):
        if self.k < 2 or len(self.bits) != self.k - 1 or any(b not in (0, 1) for b in self.bits):
            raise DomainError(f"bad sign pattern k={self.k} bits={self.bits}")

    @classmethod
    def parse(cls, text: str) -> "SignPattern":
        bits = tuple(int(t) for t in text.replace(" ", "").split(",") if t)
        return cls(len(bits) + 1, bits)

    @classmethod
    def balanced(cls, k: int, l: int) -> "SignPattern":
        """Pattern of sqrt(n_1)+..+sqrt(n_l) - sqrt(n_{l+1}) - .. - sqrt(n_k)."""
        return cls(k, (0,) * (l - 1) + (1,) * (k - l))

    @property
    def signs(self) -> tuple[int, ...]:
        return (1,) + tuple(-1 if b else 1 for b in self.bits)

    @property
    def l(self) -> int:
        return sum(self.bits)

    @property
    def beta(self) -> int:
        return self.k - 2 * self.l

    @classmethod
    def all_patterns(cls, k: int) -> list["SignPattern"]:
        return [cls(k, bits) for bits in itertools.product((0, 1), repeat=k - 1)]


def kernel_signature(ns: Sequence[int], signs: Sequence[int]) -> tuple[tuple[int, int], ...]:
    """Exact representation of sum_j signs[j] sqrt(ns[j]) as sorted (d, coefficient) pairs."""
    acc: dict[int, int] = {}
    for n, s in zip(ns, signs):
        kf = kernel_decompose(n)
        acc[kf.d] = acc.get(kf.d, 0) + s * kf.c
    return tuple(sorted((d, v) for d, v in acc.items() if v != 0))


def sqrt_sum_is_zero(ns: Sequence[int], signs: Sequence[int] | SignPattern) -> bool:
    if isinstance(signs, SignPattern):
        signs = signs.signs
    if len(ns) != len(signs):
        raise DomainError("ns and signs differ in length")
    if any(int(n) < 1 for n in ns):
        raise DomainError("all n_j must be >= 1")
    return not kernel_signature(ns, signs)


def sqrt_sum_value(ns: Sequence[int], signs: Sequence[int], prec: int = HIGH_PREC) -> mpmath.mpf:
    with mpmath.workprec(prec):
        return mpmath.fsum(s * mpmath.sqrt(n) for n, s in zip(ns, signs))


@dataclass(frozen=True)
class RelationTuple:
    ns: tuple[int, ...]
    pattern: SignPattern
    alpha_exact_zero: bool
    alpha_value: mpmath.mpf


def relation_tuple(ns: Sequence[int], pattern: SignPattern) -> RelationTuple:
    ns = tuple(int(n) for n in ns)
    if len(ns) != pattern.k:
        raise DomainError("tuple length does not match the pattern")
    zero = sqrt_sum_is_zero(ns, pattern)
    value = mpmath.mpf(0) if zero else sqrt_sum_value(ns, pattern.signs)
    return RelationTuple(ns, pattern, zero, value)


# ---------------------------------------------------------------------------
# enumeration of  sqrt(n_1)+..+sqrt(n_l) = sqrt(n_{l+1})+..+sqrt(n_k),  n_j <= y


def _half_tuples(h: int, y: int, max_classes: int, cap: int):
    """Ordered h-tuples over [1, y] using at most ``max_classes`` kernels, with signatures."""
    cs, ds = kernel_table(y)
    by_class: dict[int, list[int]] = {}
    for n in range(1, y + 1):
        by_class.setdefault(int(ds[n]), []).append(n)
    everything = range(1, y + 1)
    out: list[tuple[tuple[int, ...], tuple[tuple[int, int], ...]]] = []
    prefix: list[int] = []

    def rec(sig: dict[int, int]):
        if len(prefix) == h:
            out.append((tuple(prefix), tuple(sorted(sig.items()))))
            if len(out) > cap:
                raise CapacityError(f"more than {cap} half-tuples")
            return
        if len(sig) < max_classes:
            candidates: Iterable[int] = everything
        else:
            candidates = itertools.chain.from_iterable(by_class[d] for d in sorted(sig))
        for n in candidates:
            d = int(ds[n])
            nsig = dict(sig)
            nsig[d] = nsig.get(d, 0) + int(cs[n])
            prefix.append(n)
            rec(nsig)
            prefix.pop()

    rec({})
    return out


def _grouped_halves(k: int, l: int, y: int, cap: int):
    if not 1 <= l < k:
        raise DomainError("need 1 <= l < k")
    if k > 8:
        raise DomainError("k <= 8 only")
    if y < 1:
        raise DomainError("y must be >= 1")
    m = min(l, k - l)
    left: dict[tuple, list[tuple[int, ...]]] = {}
    for ns, sig in _half_tuples(l, y, m, cap):
        left.setdefault(sig, []).append(ns)
    right: dict[tuple, list[tuple[int, ...]]] = {}
    for ns, sig in _half_tuples(k - l, y, m, cap):
        if sig in left:
            right.setdefault(sig, []).append(ns)
    return left, right


def enumerate_solutions(k: int, l: int, y: int, cap: int = DEFAULT_SOLUTION_CAP) -> list[tuple[int, ...]]:
    """All ordered (n_1..n_k), n_j <= y, with sqrt(n_1)+..+sqrt(n_l) = sqrt(n_{l+1})+..+sqrt(n_k).

    Meet in the middle on the exact per-kernel coefficient sums of each side.
    """
    left, right = _grouped_halves(k, l, y, cap)
    total = sum(len(left[s]) * len(r) for s, r in right.items())
    if total > cap:
        raise CapacityError(f"{total} solutions exceed the cap {cap}")
    sols = [lt + rt for sig, rts in right.items() for lt in left[sig] for rt in rts]
    sols.sort()
    return sols


def grouped_solution_sum(k: int, l: int, y: int, weight: np.ndarray,
                         cap: int = DEFAULT_SOLUTION_CAP) -> tuple[float, int]:
    """Sum of prod_j weight[n_j] over enumerate_solutions(k, l, y), and the tuple count.

    Factorizes by matching signature: each signature contributes
    (sum over its left tuples) * (sum over its right tuples).
    """
    left, right = _grouped_halves(k, l, y, cap)
    w = weight.tolist()
    parts = []
    count = 0
    for sig in sorted(right):
        lw = math.fsum(math.prod(w[n] for n in ns) for ns in left[sig])
        rw = math.fsum(math.prod(w[n] for n in ns) for ns in right[sig])
        parts.append(lw * rw)
        count += len(left[sig]) * len(right[sig])
    return math.fsum(parts), count


def write_solutions_csv(path, solutions: Iterable[Sequence[int]], k: int, l: int) -> None:
    pattern = SignPattern.balanced(k, l)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"n{j}" for j in range(1, k + 1)] + [f"i{j}" for j in range(1, k)] + ["l"])
        for sol in solutions:
            w.writerow(list(sol) + list(pattern.bits) + [l])


# ---------------------------------------------------------------------------
# smallest nonzero |alpha| and near-solution counts


_GAP_LIMITS = {2: 3000, 3: 3000, 4: 300, 5: 60}


def _gap_k3(M: int, signs: tuple[int, ...]) -> tuple[mpmath.mpf, tuple[int, ...]]:
    if signs[1] == signs[2] == 1:
        return mpmath.mpf(3), (1, 1, 1)
    # every mixed-sign case is +-(sqrt(p) + sqrt(q) - sqrt(r)) with p, q, r in [1, M]
    p, q = np.triu_indices(M)
    p = p.astype(np.int64) + 1
    q = q.astype(np.int64) + 1
    four_pq = 4 * p * q
    root = np.sqrt(four_pq.astype(np.float64)).astype(np.int64)
    root -= (root * root > four_pq)
    root += ((root + 1) * (root + 1) <= four_pq)           # exact isqrt(4pq)
    r0 = p + q + root
    sp, sq = np.sqrt(p.astype(np.float64)), np.sqrt(q.astype(np.float64))
    best_val, best = np.inf, None
    for r in (r0 - 1, r0, r0 + 1, np.full_like(r0, M)):
        r = np.clip(r, 1, M)
        m = r - p - q
        exact_zero = (m > 0) & (m * m == four_pq)
        # (sqrt p + sqrt q)^2 - r = 2 sqrt(pq) - m, with the cancelling case rationalized
        two_rpq = 2.0 * np.sqrt((p * q).astype(np.float64))
        diff = np.where(m > 0,
                        (four_pq - m * m) / (two_rpq + np.maximum(m, 0)),
                        two_rpq - m)
        val = np.abs(diff / (sp + sq + np.sqrt(r.astype(np.float64))))
        val[exact_zero] = np.inf
        i = int(np.argmin(val))
        if val[i] < best_val:
            best_val, best = float(val[i]), (int(p[i]), int(q[i]), int(r[i]))
    pp, qq, rr = best
    value = abs(sqrt_sum_value((pp, qq, rr), (1, 1, -1), GAP_PREC))
    # back to the pattern's positions
    if signs[1] == 1:
        return value, (pp, qq, rr)
    if signs[2] == 1:
        return value, (pp, rr, qq)
    return value, (rr, pp, qq)


def _signed_half(ns_list, signs, negate):
    cs, ds = kernel_table(max(max(t) for t in ns_list))
    reps = []
    for ns in ns_list:
        acc: dict[int, int] = {}
        for n, s in zip(ns, signs):
            d = int(ds[n])
            acc[d] = acc.get(d, 0) + (-s if negate else s) * int(cs[n])
        reps.append(tuple(sorted((d, v) for d, v in acc.items() if v)))
    arr = np.array(ns_list, dtype=np.int64)
    roots = np.sqrt(arr.astype(np.longdouble))
    sgn = np.array(signs, dtype=np.longdouble) * (-1 if negate else 1)
    return reps, roots @ sgn


def _gap_mitm(k: int, M: int, signs: tuple[int, ...]) -> tuple[mpmath.mpf, tuple[int, ...]]:
    h = k // 2
    rng = range(1, M + 1)
    lt = list(itertools.product(rng, repeat=h))
    rt = list(itertools.product(rng, repeat=k - h))
    lreps, lvals = _signed_half(lt, signs[:h], False)
    rreps, rvals = _signed_half(rt, signs[h:], True)      # alpha = L - V
    # one representative per exact value on the right
    ids: dict[tuple, int] = {}
    uniq_idx = []
    for i, rep in enumerate(rreps):
        if rep not in ids:
            ids[rep] = len(uniq_idx)
            uniq_idx.append(i)
    uniq_idx = np.array(uniq_idx)
    uvals = rvals[uniq_idx]
    order = np.argsort(uvals, kind="stable")
    sorted_vals = uvals[order]
    sorted_ids = order                       # id of each sorted slot
    lid = np.array([ids.get(rep, -1) for rep in lreps])
    pos = np.searchsorted(sorted_vals, lvals)
    n_u = len(sorted_vals)
    cand_l, cand_r, cand_v = [], [], []
    for off in (-2, -1, 0, 1):
        j = np.clip(pos + off, 0, n_u - 1)
        v = np.abs(lvals - sorted_vals[j])
        v[sorted_ids[j] == lid] = np.inf                 # exact zero
        cand_l.append(np.arange(len(lt)))
        cand_r.append(uniq_idx[sorted_ids[j]])
        cand_v.append(v)
    cl, cr, cv = (np.concatenate(x) for x in (cand_l, cand_r, cand_v))
    top = np.argsort(cv, kind="stable")[:32]
    best_val, best = None, None
    for t in top:
        if not np.isfinite(cv[t]):
            continue
        ns = lt[cl[t]] + rt[cr[t]]
        val = abs(sqrt_sum_value(ns, signs, GAP_PREC))
        if best_val is None or val < best_val:
            best_val, best = val, ns
    return best_val, best


def min_nonzero_gap_witness(k: int, M: int, pattern: SignPattern,
                            method: str = "auto") -> tuple[mpmath.mpf, tuple[int, ...]]:
    if pattern.k != k:
        raise DomainError("pattern length does not match k")
    if k not in _GAP_LIMITS:
        raise DomainError("k must lie in [2, 5]")
    if M < 2:
        raise DomainError("M must be >= 2")
    if M > _GAP_LIMITS[k]:
        raise CapacityError(f"M = {M} above the work guard {_GAP_LIMITS[k]} for k = {k}")
    signs = pattern.signs
    if k == 2:
        if signs[1] == 1:
            return mpmath.sqrt(2), (1, 1)
        with mpmath.workprec(GAP_PREC):
            return mpmath.sqrt(M) - mpmath.sqrt(M - 1), (M, M - 1)
    if k == 3 and method != "mitm":
        return _gap_k3(M, signs)
    return _gap_mitm(k, M, signs)


def min_nonzero_gap(k: int, M: int, pattern: SignPattern) -> float:
    """min |alpha| over n_j <= M with alpha != 0 (exact zero test, 128-bit magnitude)."""
    return float(min_nonzero_gap_witness(k, M, pattern)[0])


def _box_half(ranges, signs, negate):
    grids = np.meshgrid(*[np.arange(lo + 1, 2 * lo + 1, dtype=np.int64) for lo in ranges],
                        indexing="ij")
    ns = np.stack([g.ravel() for g in grids], axis=1)
    sgn = np.array(signs, dtype=np.longdouble) * (-1 if negate else 1)
    return ns, np.sqrt(ns.astype(np.longdouble)) @ sgn


def count_near_solutions(N: Sequence[int], pattern: SignPattern, delta: float,
                         max_box: int = 10 ** 8) -> int:
    """#{N_j < n_j <= 2 N_j : |alpha| < delta}; exact zeros and exact ties at delta handled exactly."""
    N = [int(v) for v in N]
    k = len(N)
    if pattern.k != k:
        raise DomainError("pattern length does not match N")
    if not any(pattern.bits):
        raise DomainError("the all-plus pattern is excluded")
    if min(N) <= 1:
        raise DomainError("need N_j > 1")
    if not 0 < delta <= math.sqrt(max(N)):
        raise DomainError("need 0 < delta <= sqrt(max N_j)")
    if math.prod(N) > max_box:
        raise CapacityError("box too large for an exhaustive scan")
    signs = pattern.signs
    h = k // 2
    lns, lvals = _box_half(N[:h], signs[:h], False)
    rns, rvals = _box_half(N[h:], signs[h:], True)
    order = np.argsort(rvals, kind="stable")
    rvals, rns = rvals[order], rns[order]
    eps = np.longdouble(_NEAR_ZERO)
    dl = np.longdouble(delta)
    if dl > 4 * eps:
        inner = (np.searchsorted(rvals, lvals + dl - eps, "left")
                 - np.searchsorted(rvals, lvals - dl + eps, "right"))
        total = int(np.maximum(inner, 0).sum())
        bands = ((lvals - dl - eps, lvals - dl + eps), (lvals + dl - eps, lvals + dl + eps))
    else:
        total = 0
        bands = ((lvals - dl - eps, lvals + dl + eps),)
    # within eps of the boundary (or of zero when delta is tiny): decide one by one
    for lo_edge, hi_edge in bands:
        a = np.searchsorted(rvals, lo_edge, "left")
        b = np.searchsorted(rvals, hi_edge, "right")
        for i in np.nonzero(b > a)[0]:
            for j in range(a[i], b[i]):
                ns = tuple(int(v) for v in lns[i]) + tuple(int(v) for v in rns[j])
                if _abs_below(ns, signs, delta):
                    total += 1
    return total


def _abs_below(ns, signs, delta: float) -> bool:
    """|sum s_j sqrt(n_j)| < delta, exactly for delta an integer, else at 256 bits."""
    sig = kernel_signature(ns, signs)
    if not sig:
        return True
    if len(sig) == 1 and sig[0][0] == 1 and float(abs(sig[0][1])) == delta:
        return False
    with mpmath.workprec(HIGH_PREC):
        return abs(sqrt_sum_value(ns, signs)) < mpmath.mpf(delta)
