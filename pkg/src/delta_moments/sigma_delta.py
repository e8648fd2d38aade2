"""Tabulated sigma_a(n), its summatory function, and the exact error term Delta_a(x).

Delta_a(x) = sum'_{n<=x} sigma_a(n) - zeta(1-a) x - zeta(1+a)/(1+a) x^(1+a) + zeta(-a)/2,

where the primed sum counts sigma_a(x) with weight 1/2 when x is an integer.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityError, DomainError, FormatError, RangeError
from .special_values import ZetaConstants, check_a, zeta_constants

MAX_TABLE = 2 ** 30
MAGIC = b"SGMA"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIdQ")


@dataclass(frozen=True, eq=False)
class SigmaTable:
    """sigma[n] and full-weight prefix[n] for 0 <= n <= n_max (index 0 holds 0)."""

    a: float
    n_max: int
    sigma: np.ndarray
    prefix: np.ndarray
    zc: ZetaConstants | None

    def __post_init__(self):
        self.sigma.flags.writeable = False
        self.prefix.flags.writeable = False


def _compensated_prefix(values: np.ndarray) -> np.ndarray:
    # extended-precision running sum, rounded once per entry
    if np.finfo(np.longdouble).nmant >= 63:
        return np.cumsum(values, dtype=np.longdouble).astype(np.float64)
    out = np.empty_like(values)
    total = 0.0
    comp = 0.0
    for i, v in enumerate(values.tolist()):
        yv = v - comp
        t = total + yv
        comp = (t - total) - yv
        total = t
        out[i] = total
    return out


def sieve_sigma(a: float, n_max: int) -> np.ndarray:
    """sigma_a(n) for 0 <= n <= n_max by the harmonic sieve.

    Each divisor pair (d, m) with d*m <= n_max is visited once, grouped by
    s = min(d, m) so only 2*sqrt(n_max) vector updates are needed.
    """
    sigma = np.zeros(n_max + 1, dtype=np.float64)
    powa = np.zeros(n_max + 1, dtype=np.float64)
    powa[1:] = np.exp(a * np.log(np.arange(1, n_max + 1, dtype=np.float64)))
    for s in range(1, math.isqrt(n_max) + 1):
        # d = s, m >= s
        sigma[s * s::s] += powa[s]
        # m = s, d > s
        sigma[s * (s + 1)::s] += powa[s + 1:n_max // s + 1]
    return sigma


def build_sigma_table(a: float, n_max: int, _allow_positive: bool = False) -> SigmaTable:
    a = float(a)
    if _allow_positive:
        if not -0.5 < a < 0.5:
            raise DomainError(f"a must lie in (-1/2, 1/2), got {a}")
    else:
        check_a(a)
    n_max = int(n_max)
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    if n_max > MAX_TABLE:
        raise CapacityError(f"n_max = {n_max} exceeds the memory guard 2^30")
    sigma = sieve_sigma(a, n_max)
    prefix = _compensated_prefix(sigma)
    zc = zeta_constants(a) if a < 0 else None
    return SigmaTable(a=a, n_max=n_max, sigma=sigma, prefix=prefix, zc=zc)


def sigma_direct(a: float, n: int) -> float:
    """sigma_a(n) by trial division up to sqrt(n)."""
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    if n >= 2 ** 63:
        raise DomainError("n too large")
    terms = []
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            terms.append(d ** a)
            e = n // d
            if e != d:
                terms.append(e ** a)
    return math.fsum(terms)


class DeltaEvaluator:
    """Exact Delta_a(x) backed by a SigmaTable, valid for 1 <= x <= n_max."""

    def __init__(self, table: SigmaTable):
        if table.zc is None:
            raise DomainError("table was built for a >= 0; Delta_a needs a in (-1/2, 0)")
        self.table = table
        self.a = table.a
        zc = table.zc
        self._c1 = zc.zeta_one_minus_a
        self._c2 = zc.zeta_one_plus_a / (1.0 + table.a)
        self._c0 = 0.5 * zc.zeta_minus_a

    def smooth(self, x):
        """Main terms minus the constant: zeta(1-a) x + zeta(1+a)/(1+a) x^(1+a) - zeta(-a)/2."""
        x = np.asarray(x, dtype=np.float64)
        return self._c1 * x + self._c2 * x ** (1.0 + self.a) - self._c0

    def __call__(self, x):
        return delta_a(x, self)

    def values_at(self, ns: np.ndarray, xs: np.ndarray) -> np.ndarray:
        """Delta_a at interior points: row i of ``xs`` lies strictly inside (ns[i], ns[i] + 1)."""
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size and (ns.min() < 1 or ns.max() >= self.table.n_max):
            raise RangeError("interval outside the sieve table")
        return self.table.prefix[ns][:, None] - self.smooth(xs)


def delta_a(x, ev: DeltaEvaluator):
    """Delta_a(x) with the half-weight convention at integers; scalar or array ``x``."""
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if xs.size and (xs.min() < 1.0 or xs.max() > ev.table.n_max):
        raise RangeError(f"x must lie in [1, {ev.table.n_max}]")
    n = np.floor(xs).astype(np.int64)
    partial = ev.table.prefix[n].copy()
    at_int = xs == n
    partial[at_int] -= 0.5 * ev.table.sigma[n[at_int]]
    out = partial - ev.smooth(xs)
    return float(out[0]) if scalar else out


def _checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=8).digest()


def save_table(table: SigmaTable, path) -> None:
    """Write the little-endian cache file (checksum: 8-byte BLAKE2b of all preceding bytes)."""
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, table.a, table.n_max)
    body = (table.sigma[1:].astype("<f8").tobytes()
            + table.prefix[1:].astype("<f8").tobytes())
    payload = header + body
    Path(path).write_bytes(payload + _checksum(payload))


def load_table(path) -> SigmaTable:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size + 8:
        raise FormatError("file too short")
    magic, version, a, n_max = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported version {version}")
    expected = _HEADER.size + 16 * n_max + 8
    if len(raw) != expected:
        raise FormatError(f"size {len(raw)} does not match n_max = {n_max}")
    if _checksum(raw[:-8]) != raw[-8:]:
        raise FormatError("checksum mismatch")
    off = _HEADER.size
    sigma = np.zeros(n_max + 1)
    prefix = np.zeros(n_max + 1)
    sigma[1:] = np.frombuffer(raw, dtype="<f8", count=n_max, offset=off)
    prefix[1:] = np.frombuffer(raw, dtype="<f8", count=n_max, offset=off + 8 * n_max)
    zc = zeta_constants(a) if -0.5 < a < 0 else None
    return SigmaTable(a=a, n_max=n_max, sigma=sigma, prefix=prefix, zc=zc)


def cached_table(a: float, n_max: int, cache_dir=None) -> SigmaTable:
    """Build a table, or reuse an identical one stored under ``cache_dir``."""
    if cache_dir is None:
        return build_sigma_table(a, n_max)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"sigma_a{float(a).hex()}_n{n_max}.sgma"
    if path.exists():
        try:
            table = load_table(path)
        except FormatError:
            table = None
        if table is not None and table.a == float(a) and table.n_max == n_max:
            return table
    table = build_sigma_table(a, n_max)
    save_table(table, path)
    return table
