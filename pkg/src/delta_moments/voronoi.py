"""Truncated Voronoi series for Delta_a and the mean square of what it leaves out.

R_a1(x, y) = x^(1/4+a/2)/(sqrt(2) pi) * sum_{n<=y} sigma_a(n)/n^(3/4+a/2) cos(4 pi sqrt(n x) - pi/4)

Two evaluation paths share one set of coefficients: a direct sum, and a
panel scheme in t = sqrt(x) for many points at once.  In the panel scheme
the cosine sum is sampled on Chebyshev nodes of short t-panels, which turns
the work into two matrix products, and then interpolated barycentrically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, RangeError
from .quadrature import gauss_legendre, pairwise_sum, unit_panels
from .sigma_delta import DeltaEvaluator, SigmaTable

PRECISION_MODES = ("standard", "extended")
_CHEB_DEGREE = 48
_CHEB_BAND = 16.0          # max omega * h / 2 on a panel; interpolation error ~ (e*band/(2*degree))^degree
_TERM_BLOCK = 1024
_TARGET_BLOCK = 1 << 17


@dataclass(frozen=True, eq=False)
class VoronoiParams:
    a: float
    y: int
    table: SigmaTable
    coef: np.ndarray        # sigma_a(n)/n^(3/4+a/2), n = 1..y
    sqrt_n: np.ndarray      # sqrt(n), n = 1..y


def voronoi_params(table: SigmaTable, y: int) -> VoronoiParams:
    y = int(y)
    if not 0 <= y <= table.n_max:
        raise RangeError(f"need 0 <= y <= {table.n_max}")
    n = np.arange(1, y + 1, dtype=np.float64)
    coef = table.sigma[1:y + 1] * np.exp(-(0.75 + 0.5 * table.a) * np.log(n))
    return VoronoiParams(a=table.a, y=y, table=table, coef=coef, sqrt_n=np.sqrt(n))


def _amplitude(a: float, x):
    return np.asarray(x, dtype=np.float64) ** (0.25 + 0.5 * a) / (math.sqrt(2.0) * math.pi)


def _cos_phase(omega, t, precision):
    # cos(omega * t - pi/4)
    if precision == "extended":
        ph = np.multiply.outer(np.asarray(t, dtype=np.longdouble), omega.astype(np.longdouble))
        ph = np.fmod(ph, np.longdouble(2) * np.pi) - np.longdouble(np.pi) / 4
        return np.cos(ph).astype(np.float64)
    return np.cos(np.multiply.outer(t, omega) - math.pi / 4)


def R_a1(x, p: VoronoiParams, precision: str = "standard"):
    """Direct evaluation; scalar or array ``x`` >= 1."""
    if precision not in PRECISION_MODES:
        raise DomainError(f"precision must be one of {PRECISION_MODES}")
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if xs.size and xs.min() < 1.0:
        raise RangeError("R_a1 needs x >= 1")
    out = np.zeros(xs.shape)
    if p.y:
        omega = 4 * math.pi * p.sqrt_n
        t = np.sqrt(xs).ravel()
        acc = np.zeros(t.shape)
        for s in range(0, p.y, _TERM_BLOCK):
            for r in range(0, t.size, 4096):
                acc[r:r + 4096] += _cos_phase(omega[s:s + _TERM_BLOCK], t[r:r + 4096], precision) \
                    @ p.coef[s:s + _TERM_BLOCK]
        out = (_amplitude(p.a, xs).ravel() * acc).reshape(xs.shape)
    return float(out.ravel()[0]) if scalar else out


class PanelSampler:
    """Cosine sums over n <= y on Chebyshev nodes of t-panels covering [t_lo, t_hi].

    ``stages`` lists increasing cutoffs; samples for each are kept so several
    truncations can be interpolated from one pass over the terms.
    """

    def __init__(self, p: VoronoiParams, t_lo: float, t_hi: float, stages: Sequence[int]):
        stages = sorted(set(int(s) for s in stages))
        if not stages or stages[0] < 0 or stages[-1] > p.y:
            raise RangeError("stage cutoffs must lie in [0, y]")
        if t_hi - t_lo < 1e-6:
            t_hi = t_lo + 1e-6
        self.p = p
        self.stages = stages
        omega_max = 4 * math.pi * math.sqrt(max(stages[-1], 1))
        h = 2 * _CHEB_BAND / omega_max
        n_pan = max(1, math.ceil((t_hi - t_lo) / h))
        self.t_lo, self.h, self.n_pan = t_lo, (t_hi - t_lo) / n_pan, n_pan
        m = np.arange(_CHEB_DEGREE)
        self.tau = np.cos((2 * m + 1) * math.pi / (2 * _CHEB_DEGREE))
        self.bary = (-1.0) ** m * np.sin((2 * m + 1) * math.pi / (2 * _CHEB_DEGREE))
        centers = t_lo + (np.arange(n_pan) + 0.5) * self.h
        self.samples = {}
        acc = np.zeros((n_pan, _CHEB_DEGREE))
        done = 0
        for stop in stages:
            for s in range(done, stop, _TERM_BLOCK):
                e = min(stop, s + _TERM_BLOCK)
                omega = 4 * math.pi * p.sqrt_n[s:e]
                coef = p.coef[s:e]
                ph = np.multiply.outer(centers, omega) - math.pi / 4
                off = np.multiply.outer(omega * (self.h / 2), self.tau)
                acc += (np.cos(ph) * coef) @ np.cos(off) - (np.sin(ph) * coef) @ np.sin(off)
            done = stop
            self.samples[stop] = acc.copy()

    def weights(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Panel index and normalized barycentric weights for each target t."""
        pos = (t - self.t_lo) / self.h
        b = np.clip(np.floor(pos).astype(np.int64), 0, self.n_pan - 1)
        local = 2 * (pos - b) - 1
        diff = local[:, None] - self.tau[None, :]
        hit = diff == 0.0
        diff[hit] = 1.0
        w = self.bary[None, :] / diff
        rows = hit.any(axis=1)
        w[rows] = hit[rows].astype(np.float64)
        w /= w.sum(axis=1, keepdims=True)
        return b, w

    def evaluate(self, t: np.ndarray, stage: int, weights=None) -> np.ndarray:
        b, w = self.weights(t) if weights is None else weights
        return np.einsum("ij,ij->i", w, self.samples[stage][b])


def R_a1_many(x: np.ndarray, p: VoronoiParams, stages: Sequence[int] | None = None) -> dict[int, np.ndarray]:
    """R_a1 at many x for each cutoff in ``stages`` (default: just p.y), via the panel scheme."""
    xs = np.asarray(x, dtype=np.float64)
    stages = [p.y] if stages is None else list(stages)
    t = np.sqrt(xs.ravel())
    sampler = PanelSampler(p, float(t.min()), float(t.max()), stages)
    amp = _amplitude(p.a, xs.ravel())
    out = {}
    wts = sampler.weights(t)
    for s in sampler.stages:
        out[s] = (amp * sampler.evaluate(t, s, wts)).reshape(xs.shape)
    return out


def residual_second_moments(T: float, ys: Sequence[int], p: VoronoiParams,
                            quad_order: int = 8,
                            target: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
                            ) -> dict[int, float]:
    """Integral over [T, 2T] of (Delta_a - R_a1(., y))^2 for every y in ``ys``.

    Unit panels split at the integers, Gauss-Legendre inside each.
    ``target(ns, xs)`` replaces Delta_a (used for synthetic checks).
    """
    T = float(T)
    ys = sorted(set(int(v) for v in ys))
    if 2 * T > p.table.n_max:
        raise RangeError(f"2T = {2 * T} exceeds the table size {p.table.n_max}")
    if T < 1 or not ys or ys[0] < 1 or ys[-1] > min(T, p.y):
        raise RangeError("need 1 <= y <= min(T, params.y)")
    if target is None:
        target = DeltaEvaluator(p.table).values_at
    u, wu = gauss_legendre(quad_order)
    left, right = unit_panels(T, 2 * T)
    sampler = PanelSampler(p, math.sqrt(T), math.sqrt(2 * T), ys)
    parts = {y: [] for y in ys}
    per_chunk = max(1, _TARGET_BLOCK // quad_order)
    for s in range(0, len(left), per_chunk):
        l_, r_ = left[s:s + per_chunk], right[s:s + per_chunk]
        width = (r_ - l_)[:, None]
        xs = l_[:, None] + width * u[None, :]
        wx = width * wu[None, :]
        ns = np.floor(l_).astype(np.int64)
        d = target(ns, xs).ravel()
        t = np.sqrt(xs.ravel())
        amp = _amplitude(p.a, xs.ravel())
        wts = sampler.weights(t)
        for y in ys:
            res = d - amp * sampler.evaluate(t, y, wts)
            parts[y].append(float(np.sum(res * res * wx.ravel())))
    return {y: pairwise_sum(v) for y, v in parts.items()}


def residual_second_moment(T: float, y: int, p: VoronoiParams, quad_order: int = 8,
                           target=None) -> float:
    return residual_second_moments(T, [y], p, quad_order, target)[int(y)]


def sample_grid(T: float, p: VoronoiParams, step: float = 0.5) -> dict[str, np.ndarray]:
    """Columns x, delta, r_a1, residual on x = T + step/2, T + 3 step/2, ... < 2T (never an integer)."""
    xs = np.arange(T + step / 2, 2 * T, step)
    xs = xs[xs != np.floor(xs)]
    ev = DeltaEvaluator(p.table)
    d = ev(xs)
    r = R_a1_many(xs, p)[p.y] if p.y else np.zeros_like(xs)
    return {"x": xs, "delta": d, "r_a1": r, "residual": d - r}
