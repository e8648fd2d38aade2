"""Power moments of Delta_a over dyadic windows and log-log exponent fits."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import DomainError, InsufficientData, OrderError, RangeError
from .exponents import C_k, CkConvention, auto_cutoff, moment_exponent
from .quadrature import map_chunks, pairwise_sum, panel_chunks
from .sigma_delta import DeltaEvaluator

MOMENT_ORDERS = (8, 16, 32)
UNSTABLE_REL = 1e-6          # |main term| below this fraction of the absolute moment


class Evaluator(Protocol):
    def values_at(self, ns: np.ndarray, xs: np.ndarray) -> np.ndarray: ...


class Window(str, enum.Enum):
    DYADIC = "Dyadic"
    FROM_ONE = "FromOne"


@dataclass(frozen=True)
class MomentRecord:
    a: float
    k: int
    T: float
    window: Window
    value: float
    main_term: float
    ratio: float
    quad_order: int
    abs_value: float = math.nan
    status: str = "ok"
    y: int | None = None

    def to_json(self) -> dict:
        d = asdict(self)
        d["window"] = self.window.value
        for key in ("ratio", "main_term", "abs_value"):
            if isinstance(d[key], float) and not math.isfinite(d[key]):
                d[key] = None
        return d


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    points: tuple[tuple[float, float], ...]
    target: float = math.nan
    sign_consistent: bool = True

    def to_json(self) -> dict:
        d = asdict(self)
        d["points"] = [list(p) for p in self.points]
        if not math.isfinite(self.target):
            d["target"] = None
        return d


def _check_range(ev, lo, hi):
    table = getattr(ev, "table", None)
    if table is not None and hi > table.n_max:
        raise RangeError(f"window end {hi} exceeds the table size {table.n_max}")
    if lo < 1:
        raise RangeError("windows start at x >= 1")


def integrate_powers(ev: Evaluator, lo: float, hi: float, ks: Iterable[int],
                     quad_order: int = 16, threads: int = 1) -> dict[int, tuple[float, float]]:
    """{k: (integral of Delta^k, integral of |Delta|^k)} over [lo, hi], all k from one set of nodes."""
    if quad_order not in MOMENT_ORDERS:
        raise OrderError(f"quad_order must be one of {MOMENT_ORDERS}")
    ks = sorted(set(int(k) for k in ks))
    _check_range(ev, lo, hi)

    def chunk(ns, xs, ws):
        d = ev.values_at(ns, xs)
        ad = np.abs(d)
        out = []
        pw, apw = np.ones_like(d), np.ones_like(d)
        kk = 0
        for k in ks:
            while kk < k:
                pw *= d
                apw *= ad
                kk += 1
            out.append((float(np.sum(pw * ws)), float(np.sum(apw * ws))))
        return out

    parts = map_chunks(chunk, panel_chunks(lo, hi, quad_order), threads)
    return {k: (pairwise_sum(p[i][0] for p in parts), pairwise_sum(p[i][1] for p in parts))
            for i, k in enumerate(ks)}


def _record(a, k, T, window, value, abs_value, density, quad_order, y):
    p = moment_exponent(a, k)
    if density is None:
        main = math.nan
    elif window is Window.DYADIC:
        main = density * ((2 * T) ** p - T ** p) / p
    else:
        main = density * (T ** p - 1.0) / p
    status = "ok"
    if not math.isfinite(main):
        ratio, status = math.nan, "no-constant"
    elif abs(main) < UNSTABLE_REL * abs_value:
        ratio, status = math.nan, "unstable"
    else:
        ratio = value / main
    return MomentRecord(a=a, k=k, T=T, window=window, value=value, main_term=main, ratio=ratio,
                        quad_order=quad_order, abs_value=abs_value, status=status, y=y)


def integrate_delta_power(k: int, T: float, ev: Evaluator, quad_order: int = 16,
                          density: float | None = None, threads: int = 1,
                          y: int | None = None) -> MomentRecord:
    """Integral of Delta_a^k over the dyadic window [T, 2T].

    ``density`` is the density-convention constant C_k; the main term is
    density * ((2T)^p - T^p)/p with p = (4 + k + 2ka)/4.
    """
    if not 2 <= k <= 7:
        raise DomainError("k must lie in [2, 7]")
    T = float(T)
    _check_range(ev, T, 2 * T)
    (value, abs_value), = integrate_powers(ev, T, 2 * T, [k], quad_order, threads).values()
    return _record(getattr(ev, "a", math.nan), k, T, Window.DYADIC, value, abs_value,
                   density, quad_order, y)


def dyadic_records(ev: Evaluator, ks: Sequence[int], Ts: Sequence[float], quad_order: int = 16,
                   densities: dict | None = None, threads: int = 1) -> dict[int, list[MomentRecord]]:
    """Records for every k and every window [T, 2T], reusing nodes across k."""
    a = getattr(ev, "a", math.nan)
    out: dict[int, list[MomentRecord]] = {k: [] for k in ks}
    for T in Ts:
        vals = integrate_powers(ev, T, 2 * T, ks, quad_order, threads)
        for k in ks:
            dens, y = (densities or {}).get((k, T), (None, None))
            out[k].append(_record(a, k, float(T), Window.DYADIC, *vals[k], dens, quad_order, y))
    return out


def from_one(records: Sequence[MomentRecord], density: float | None = None) -> MomentRecord:
    """Assemble the integral over [1, T_top] from contiguous dyadic windows starting at 1."""
    recs = sorted(records, key=lambda r: r.T)
    if not recs or recs[0].T != 1.0:
        raise InsufficientData("dyadic windows must start at T = 1")
    for r0, r1 in zip(recs, recs[1:]):
        if r1.T != 2 * r0.T:
            raise InsufficientData("windows are not contiguous")
    top = 2 * recs[-1].T
    value = pairwise_sum(r.value for r in recs)
    abs_value = pairwise_sum(r.abs_value for r in recs)
    return _record(recs[0].a, recs[0].k, top, Window.FROM_ONE, value, abs_value, density,
                   recs[0].quad_order, recs[0].y)


def fit_exponent(records: Sequence[MomentRecord]) -> FitResult:
    """OLS of log|value| against log T over dyadic windows."""
    if len(records) < 5:
        raise InsufficientData("need at least 5 records")
    recs = sorted(records, key=lambda r: r.T)
    if len({(r.a, r.k) for r in recs}) != 1 and not all(math.isnan(r.a) for r in recs):
        raise DomainError("records mix different (a, k)")
    for r0, r1 in zip(recs, recs[1:]):
        if not math.isclose(r1.T, 2 * r0.T):
            raise DomainError("T must double between records")
    if any(r.value == 0 for r in recs):
        raise InsufficientData("a zero moment has no logarithm")
    xs = np.log([r.T for r in recs])
    ys = np.log([abs(r.value) for r in recs])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    signs = {math.copysign(1.0, r.value) for r in recs}
    a, k = recs[0].a, recs[0].k
    target = moment_exponent(a, k) if math.isfinite(a) else math.nan
    return FitResult(slope=float(slope), intercept=float(intercept), r_squared=min(max(r2, 0.0), 1.0),
                     points=tuple(zip(xs.tolist(), ys.tolist())), target=target,
                     sign_consistent=len(signs) == 1)


def main_term_density(a: float, k: int, y: int, table=None) -> float:
    return C_k(a, k, y, CkConvention.DENSITY, table=table)


def resolve_cutoff(a: float, k: int, T: float, y, table=None) -> int:
    """``y = "auto"``: T^(1/(2 b_a + 2 alpha)) for k >= 3; for k = 2 the whole table (or 2T)."""
    if y == "auto" or y is None:
        if k == 2:
            return int(table.n_max) if table is not None else int(2 * T)
        return auto_cutoff(a, k, T)
    return int(y)


@dataclass
class MomentReport:
    records: list[MomentRecord]
    fit: FitResult | None
    ratio_spread: float = math.nan
    notes: list[str] = field(default_factory=list)


def ratio_spread(records: Sequence[MomentRecord], top: int = 3) -> float:
    """max |ratio/median - 1| over the last ``top`` windows."""
    rs = [r.ratio for r in sorted(records, key=lambda r: r.T)[-top:]]
    if len(rs) < top or not all(math.isfinite(v) for v in rs):
        return math.nan
    med = float(np.median(rs))
    return max(abs(v / med - 1.0) for v in rs)


def moment_report(ev: DeltaEvaluator, k: int, Ts: Sequence[float], y="auto",
                  quad_order: int = 16, threads: int = 1) -> MomentReport:
    """Dyadic records with main terms, the exponent fit, and the ratio trajectory."""
    a = ev.a
    densities = {}
    cache: dict[int, float] = {}
    for T in Ts:
        yy = resolve_cutoff(a, k, T, y, ev.table)
        if yy not in cache:
            cache[yy] = main_term_density(a, k, yy, ev.table)
        densities[(k, T)] = (cache[yy], yy)
    recs = dyadic_records(ev, [k], Ts, quad_order, densities, threads)[k]
    notes = []
    fit = None
    if len(recs) >= 5:
        fit = fit_exponent(recs)
    else:
        notes.append("fewer than 5 windows: no exponent fit")
    if any(r.status == "unstable" for r in recs):
        notes.append("main term negligible against the absolute moment in some windows")
    return MomentReport(records=recs, fit=fit, ratio_spread=ratio_spread(recs), notes=notes)
