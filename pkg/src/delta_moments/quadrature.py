"""Per-unit-interval Gauss-Legendre quadrature with a fixed reduction order."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import OrderError

SUPPORTED_ORDERS = (4, 8, 16, 32)
PANELS_PER_CHUNK = 1 << 16       # fixed, so results never depend on the worker count


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    if order not in SUPPORTED_ORDERS:
        raise OrderError(f"quadrature order must be one of {SUPPORTED_ORDERS}")
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = 0.5 * (x + 1.0), 0.5 * w
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def pairwise_sum(values: Sequence[float]) -> float:
    vals = list(values)
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return float(vals[0])


def unit_panels(lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """Split [lo, hi] at the integers; returns left and right ends of each piece."""
    if not hi > lo:
        raise ValueError("need hi > lo")
    inner = np.arange(math.floor(lo) + 1, math.ceil(hi), dtype=np.float64)
    pts = np.concatenate(([lo], inner, [hi]))
    return pts[:-1], pts[1:]


def panel_chunks(lo: float, hi: float, order: int):
    """Yield (floor, x, w): panel integer parts, node matrix and weight matrix, chunk by chunk."""
    u, wu = gauss_legendre(order)
    left, right = unit_panels(lo, hi)
    for s in range(0, len(left), PANELS_PER_CHUNK):
        l_, r_ = left[s:s + PANELS_PER_CHUNK], right[s:s + PANELS_PER_CHUNK]
        width = (r_ - l_)[:, None]
        yield np.floor(l_).astype(np.int64), l_[:, None] + width * u[None, :], width * wu[None, :]


def map_chunks(fn: Callable, chunks, threads: int = 1) -> list:
    """Apply ``fn`` to every chunk, preserving order."""
    if threads <= 1:
        return [fn(*c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda c: fn(*c), chunks))


def integrate(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
              order: int = 16, threads: int = 1) -> float:
    """Integral of a vectorized f over [lo, hi], unit panels, Gauss-Legendre of ``order``."""
    parts = map_chunks(lambda n, x, w: float(np.sum(f(x) * w)), panel_chunks(lo, hi, order), threads)
    return pairwise_sum(parts)
