"""Command-line front end.

    delta-moments constants --a -0.25 --k 3 --y 10000
    delta-moments moments --a -0.25 --k 2 --tmin 16384 --tmax 4194304
    delta-moments voronoi --a -0.25 --tmin 4096 --y 256 --out run/
    delta-moments verify --a -0.25

Data goes to stdout (or files under --out); diagnostics go to stderr.
Nothing time- or host-dependent is written, so identical invocations give
identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import random
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import exponents as ex
from .errors import DeltaMomentsError, DomainError
from .moments import MOMENT_ORDERS, dyadic_records, main_term_density, moment_report
from .quadrature import integrate
from .sigma_delta import MAX_TABLE, DeltaEvaluator, cached_table, delta_a, sigma_direct
from .special_values import zeta_constants, zeta_real
from .sqrt_relations import (SignPattern, count_near_solutions, enumerate_solutions,
                             min_nonzero_gap, sqrt_sum_is_zero, sqrt_sum_value)
from .voronoi import PRECISION_MODES, R_a1, residual_second_moments, sample_grid, voronoi_params

COMMANDS = ("constants", "relations", "moments", "voronoi", "fit", "verify", "report")
CACHE_ENV = "DELTA_MOMENTS_CACHE"


@dataclass(frozen=True)
class RunConfig:
    command: str
    a: float
    k: int = 3
    l: int = 1
    y: int | str = "auto"
    t_min: float = 2.0 ** 12
    t_max: float = 2.0 ** 16
    pattern: str | None = None
    delta: float | None = None
    format: str = "json"
    cache_dir: str | None = None
    threads: int = 1
    quad_order: int = 16
    precision_mode: str = "standard"
    out: str | None = None


def _y_value(text: str):
    if text == "auto":
        return "auto"
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("y must be a positive integer or 'auto'")
    if v < 1:
        raise argparse.ArgumentTypeError("y must be a positive integer or 'auto'")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="delta-moments",
                                 description="Moments of the error term in the summatory sigma_a function.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--a", type=float, required=True, help="exponent a in (-1/2, 0)")
    ap.add_argument("--k", type=int, default=3, help="moment order, 2..7")
    ap.add_argument("--l", type=int, default=1, help="number of plus signs in a balanced relation")
    ap.add_argument("--y", type=_y_value, default="auto", help="series cutoff, integer or 'auto'")
    ap.add_argument("--tmin", type=float, default=2.0 ** 12, help="first window start T")
    ap.add_argument("--tmax", type=float, default=2.0 ** 16, help="largest x used (sieve size)")
    ap.add_argument("--pattern", default=None, help="sign bits i_1,..,i_{k-1}, e.g. 0,1")
    ap.add_argument("--delta", type=float, default=None, help="near-solution threshold")
    ap.add_argument("--format", choices=("csv", "json"), default="json")
    ap.add_argument("--cache-dir", default=None, help="sieve cache directory")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--quad-order", type=int, default=16)
    ap.add_argument("--precision", choices=PRECISION_MODES, default="standard")
    ap.add_argument("--out", default=None, help="write output files into this directory")
    return ap


def parse_args(argv=None) -> RunConfig:
    """Validated RunConfig; usage problems exit with status 2 and name the flag."""
    ap = build_parser()
    ns = ap.parse_args(argv)
    if not -0.5 < ns.a < 0:
        ap.error("--a: a must lie in (-1/2, 0)")
    if not 2 <= ns.k <= 7:
        ap.error("--k: k must lie in [2, 7]")
    if not 1 <= ns.l < ns.k:
        ap.error("--l: need 1 <= l < k")
    if not 1 <= ns.tmin < ns.tmax:
        ap.error("--tmin/--tmax: need 1 <= tmin < tmax")
    if ns.tmax > MAX_TABLE:
        ap.error(f"--tmax: must not exceed the sieve capacity {MAX_TABLE}")
    if ns.threads < 1:
        ap.error("--threads: must be >= 1")
    if ns.quad_order not in MOMENT_ORDERS:
        ap.error(f"--quad-order: must be one of {MOMENT_ORDERS}")
    if ns.delta is not None and not ns.delta > 0:
        ap.error("--delta: must be > 0")
    if ns.pattern is not None:
        try:
            pat = SignPattern.parse(ns.pattern)
        except (ValueError, DomainError):
            ap.error("--pattern: expected comma-separated bits such as 0,1")
        if pat.k != ns.k:
            ap.error(f"--pattern: needs k - 1 = {ns.k - 1} bits")
    cache = os.environ.get(CACHE_ENV) or ns.cache_dir
    return RunConfig(command=ns.command, a=ns.a, k=ns.k, l=ns.l, y=ns.y, t_min=ns.tmin,
                     t_max=ns.tmax, pattern=ns.pattern, delta=ns.delta, format=ns.format,
                     cache_dir=cache, threads=ns.threads, quad_order=ns.quad_order,
                     precision_mode=ns.precision, out=ns.out)


# ---------------------------------------------------------------------------
# output helpers


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.generic):
        return _clean(v.item())
    return v


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=False)


class _Sink:
    """stdout, or named files under --out."""

    def __init__(self, out_dir, stdout):
        self.out_dir = Path(out_dir) if out_dir else None
        self.stdout = stdout
        if self.out_dir:
            self.out_dir.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str):
        if self.out_dir is None:
            self.stdout.write(text)
        else:
            (self.out_dir / name).write_text(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _table(cfg: RunConfig, n_max: int):
    return cached_table(cfg.a, int(n_max), cfg.cache_dir)


def _windows(cfg: RunConfig) -> list[float]:
    Ts = []
    T = float(cfg.t_min)
    while 2 * T <= cfg.t_max:
        Ts.append(T)
        T *= 2
    return Ts


# ---------------------------------------------------------------------------
# commands


def constants_payload(a: float, k: int, y: int, table=None) -> dict:
    s = {str(l): ex.s_kl(a, k, min(l, k - l), y, table).value for l in range(1, k)}
    B = ex.B_k_finite(a, k, y, table)
    out = {"a": a, "k": k, "y": y, "s_kl": s, "B_k": B,
           "C_k_density": ex.C_k(a, k, y, "density", B=B),
           "C_k_integrated": ex.C_k(a, k, y, "integrated", B=B),
           "b_a": None, "A0": ex.A0(a), "alpha": None, "delta": None, "branch": None,
           "corollary_delta": None}
    if 3 <= k < ex.A0(a):
        eb = ex.exponent_bundle(a, k)
        out.update(b_a=eb.b, alpha=eb.alpha, delta=eb.delta, branch=eb.branch.value)
    if k in ex.COROLLARY_RANGES and ex.COROLLARY_RANGES[k] < a < 0:
        out["corollary_delta"] = ex.corollary_delta(a, k)
    return out


def _resolve_y(cfg: RunConfig, default: int) -> int:
    if cfg.y != "auto":
        return int(cfg.y)
    if cfg.k >= 3 and cfg.k < ex.A0(cfg.a):
        return ex.auto_cutoff(cfg.a, cfg.k, cfg.t_max)
    return default


def cmd_constants(cfg: RunConfig, sink: _Sink) -> int:
    y = _resolve_y(cfg, 10_000)
    payload = constants_payload(cfg.a, cfg.k, y, _table(cfg, max(y, 1)))
    if cfg.format == "json":
        sink.write("constants.json", _dumps(payload) + "\n")
    else:
        flat = {k: v for k, v in payload.items() if k != "s_kl"}
        flat.update({f"s_{cfg.k};{l}": v for l, v in payload["s_kl"].items()})
        sink.write("constants.csv", _csv_text(["name", "value"], [[k, _clean(v)] for k, v in flat.items()]))
    return 0


def cmd_relations(cfg: RunConfig, sink: _Sink) -> int:
    y = 20 if cfg.y == "auto" else int(cfg.y)
    if cfg.delta is not None:
        pattern = SignPattern.parse(cfg.pattern) if cfg.pattern else SignPattern.balanced(cfg.k, cfg.l)
        N = [y] * cfg.k
        count = count_near_solutions(N, pattern, cfg.delta)
        payload = {"k": cfg.k, "N": N, "pattern": list(pattern.bits), "delta": cfg.delta, "count": count}
        sink.write("near_solutions.json", _dumps(payload) + "\n")
        return 0
    sols = enumerate_solutions(cfg.k, cfg.l, y)
    bits = list(SignPattern.balanced(cfg.k, cfg.l).bits)
    if cfg.format == "csv":
        header = [f"n{j}" for j in range(1, cfg.k + 1)] + [f"i{j}" for j in range(1, cfg.k)] + ["l"]
        sink.write("relations.csv", _csv_text(header, [list(s) + bits + [cfg.l] for s in sols]))
    else:
        sink.write("relations.json", _dumps({"k": cfg.k, "l": cfg.l, "y": y, "pattern": bits,
                                             "count": len(sols), "solutions": sols}) + "\n")
    return 0


def _moment_run(cfg: RunConfig):
    Ts = _windows(cfg)
    if not Ts:
        raise DomainError("no dyadic window [T, 2T] fits in [tmin, tmax]")
    table = _table(cfg, int(math.ceil(2 * Ts[-1])))
    ev = DeltaEvaluator(table)
    return moment_report(ev, cfg.k, Ts, y=cfg.y, quad_order=cfg.quad_order, threads=cfg.threads)


def cmd_moments(cfg: RunConfig, sink: _Sink) -> int:
    rep = _moment_run(cfg)
    lines = [_dumps(r.to_json()) for r in rep.records]
    if rep.fit is not None:
        lines.append(_dumps(dict(rep.fit.to_json(), ratio_spread=rep.ratio_spread)))
    for note in rep.notes:
        print(f"note: {note}", file=sys.stderr)
    sink.write("moments.jsonl", "\n".join(lines) + "\n")
    return 0


def cmd_fit(cfg: RunConfig, sink: _Sink) -> int:
    rep = _moment_run(cfg)
    if rep.fit is None:
        raise DomainError("need at least 5 dyadic windows for a fit; widen [tmin, tmax]")
    payload = dict(rep.fit.to_json(), a=cfg.a, k=cfg.k, ratio_spread=rep.ratio_spread,
                   ratios=[r.ratio for r in rep.records])
    sink.write("fit.json", _dumps(payload) + "\n")
    return 0


def cmd_voronoi(cfg: RunConfig, sink: _Sink) -> int:
    T = float(cfg.t_min)
    y = min(int(T), 1024) if cfg.y == "auto" else int(cfg.y)
    if y > T:
        raise DomainError("need y <= T")
    table = _table(cfg, int(math.ceil(2 * T)))
    p = voronoi_params(table, y)
    ys = sorted({max(1, y >> s) for s in range(0, 7)})
    mom = residual_second_moments(T, ys, p)
    slope = math.nan
    if len(ys) >= 3:
        slope = float(np.polyfit(np.log(ys), np.log([mom[v] for v in ys]), 1)[0])
    step = max(0.5, T / 4096)
    grid = sample_grid(T, p, step)
    if cfg.precision_mode == "extended":
        grid["r_a1"] = R_a1(grid["x"], p, "extended")
        grid["residual"] = grid["delta"] - grid["r_a1"]
    rows = zip(*(grid[c].tolist() for c in ("x", "delta", "r_a1", "residual")))
    summary = {"T": T, "y": y, "residual_l2": math.sqrt(mom[y]),
               "residual_second_moments": {str(v): mom[v] for v in ys},
               "fitted_slopes": {"log_residual_vs_log_y": slope, "target": -(0.5 + cfg.a)}}
    if cfg.format == "csv":
        sink.write("voronoi.csv", _csv_text(["x", "delta", "r_a1", "residual"], rows))
        if sink.out_dir is not None:
            sink.write("voronoi_summary.json", _dumps(summary) + "\n")
    else:
        sink.write("voronoi_summary.json", _dumps(summary) + "\n")
    return 0


# verify: fast property checks, one PASS/FAIL line each


def _verify_checks(cfg: RunConfig) -> list[tuple[str, Callable[[], bool]]]:
    a = cfg.a
    rng = random.Random(20240611)
    n_max = 1 << 14
    table = _table(cfg, n_max)
    ev = DeltaEvaluator(table)
    zc = zeta_constants(a)

    def sieve_oracle():
        ns = [rng.randint(1, 10_000) for _ in range(300)]
        return all(abs(table.sigma[n] - sigma_direct(a, n)) <= 1e-12 * table.sigma[n] for n in ns)

    def multiplicative():
        ok = True
        for _ in range(200):
            m, n = rng.randint(2, 120), rng.randint(2, 120)
            if math.gcd(m, n) == 1:
                ok &= abs(table.sigma[m * n] - table.sigma[m] * table.sigma[n]) <= 1e-12 * table.sigma[m * n]
        return ok

    def sigma_bounds():
        d = np.zeros(n_max + 1)
        for q in range(1, n_max + 1):
            d[q::q] += 1
        s = table.sigma[1:]
        return table.sigma[1] == 1.0 and bool(np.all(s >= 1.0) and np.all(s <= d[1:] + 1e-12))

    def zeta_values():
        return (abs(zeta_real(2.0) - math.pi ** 2 / 6) < 1e-14
                and abs(zeta_real(-1.0) + 1 / 12) < 1e-14
                and abs(zeta_real(0.0) + 0.5) < 1e-14)

    def half_weight():
        x = 1000
        jump = delta_a(float(x), ev) - delta_a(x - 1e-9, ev)
        return abs(jump - table.sigma[x] / 2) < 1e-5

    def delta_at_one():
        want = 0.5 - zc.zeta_one_minus_a - zc.zeta_one_plus_a / (1 + a) + 0.5 * zc.zeta_minus_a
        return abs(delta_a(1.0, ev) - want) < 1e-12

    def closed_forms():
        ok = True
        for k, lo in ex.COROLLARY_RANGES.items():
            for _ in range(20):
                aa = rng.uniform(lo, 0)
                if not lo < aa < 0:
                    continue
                ok &= abs(ex.corollary_delta(aa, k) - ex.exponent_bundle(aa, k).delta) <= 1e-12
        return ok

    def relations():
        return len(enumerate_solutions(3, 1, 20)) == 11

    def zero_test():
        for _ in range(300):
            ns = [rng.choice([1, 2, 3, 5]) * rng.randint(1, 6) ** 2 for _ in range(3)]
            signs = (1, -1, rng.choice([1, -1]))
            exact = sqrt_sum_is_zero(ns, signs)
            if exact != (abs(sqrt_sum_value(ns, signs)) < 1e-60):
                return False
        return True

    def gap_trend():
        vals = [min_nonzero_gap(3, M, SignPattern.balanced(3, 2)) * M ** 1.5 for M in (50, 100)]
        return max(vals) / min(vals) < 50

    def oscillatory():
        # second mean value theorem in u = sqrt(t): |integral| <= 2 sqrt(2T) * 2/A
        ok = True
        for A in (1.0, 5.0, 20.0):
            for B in (0.0, 1.0):
                for T in (1e3, 1e4):
                    v = integrate(lambda t: np.cos(A * np.sqrt(t) + B), T, 2 * T, 16)
                    ok &= abs(v) <= 4 * math.sqrt(2 * T) / A
        return ok

    def second_moment_positive():
        recs = dyadic_records(ev, [2], [1024.0, 2048.0], cfg.quad_order)[2]
        return all(r.value > 0 for r in recs)

    def quad_refinement():
        r16 = dyadic_records(ev, [2], [4096.0], 16)[2][0].value
        r32 = dyadic_records(ev, [2], [4096.0], 32)[2][0].value
        return abs(r16 - r32) <= 1e-6 * abs(r32)

    def residual_trend():
        p = voronoi_params(table, 256)
        m = residual_second_moments(4096.0, [16, 256], p)
        return m[256] < m[16]

    return [("sieve matches divisor enumeration", sieve_oracle),
            ("sigma_a multiplicative on coprime pairs", multiplicative),
            ("1 <= sigma_a(n) <= d(n)", sigma_bounds),
            ("zeta special values", zeta_values),
            ("half weight at integers", half_weight),
            ("Delta_a(1) closed form", delta_at_one),
            ("closed-form delta agrees with general formula", closed_forms),
            ("11 relations for k=3, l=1, y=20", relations),
            ("exact zero test vs 256-bit value", zero_test),
            ("k=3 gap scaling band", gap_trend),
            ("oscillatory integral <= 4 sqrt(2T)/A", oscillatory),
            ("second moment positive", second_moment_positive),
            ("quadrature order 16 vs 32", quad_refinement),
            ("Voronoi residual shrinks with y", residual_trend)]


def cmd_verify(cfg: RunConfig, sink: _Sink) -> int:
    lines, failed = [], 0
    for name, check in _verify_checks(cfg):
        try:
            ok = bool(check())
        except DeltaMomentsError as exc:
            ok = False
            name = f"{name} ({exc})"
        failed += not ok
        lines.append(f"{'PASS' if ok else 'FAIL'} {name}")
    sink.write("verify.txt", "\n".join(lines) + "\n")
    return 1 if failed else 0


def cmd_report(cfg: RunConfig, sink: _Sink) -> int:
    a, k = cfg.a, cfg.k
    zc = zeta_constants(a)
    y = _resolve_y(cfg, 2000)
    consts = constants_payload(a, k, y, _table(cfg, max(y, 1)))
    rows = [("zeta(1-a)", zc.zeta_one_minus_a),
            ("zeta(1+a)", zc.zeta_one_plus_a),
            ("zeta(-a)", zc.zeta_minus_a),
            ("A0 = 8(1-a^2)/(1-2a)", consts["A0"]),
            ("b_a(k) = 2^(k-2) + (k-6)/4 - ka/2", consts["b_a"]),
            ("alpha(k, A0)", consts["alpha"]),
            ("delta_a(k, A0) = alpha/(2b_a(k) + 2alpha)", consts["delta"]),
            ("closed-form delta_a(k, A0)", consts["corollary_delta"]),
            ("moment exponent (4 + k + 2ka)/4", ex.moment_exponent(a, k))]
    rows += [(f"s_{{{k};{l}}}(sigma_a; y)", v) for l, v in consts["s_kl"].items()]
    rows += [(f"B_{k}(sigma_a; y)", consts["B_k"]),
             ("C_k = B_k/((sqrt2 pi)^k 2^(k-1)) (density)", consts["C_k_density"]),
             ("C_k integrated (density/p)", consts["C_k_integrated"])]
    Ts = _windows(cfg)
    if Ts:
        T = Ts[-1]
        table = _table(cfg, int(math.ceil(2 * T)))
        dens = main_term_density(a, k, y, table)
        rec = dyadic_records(DeltaEvaluator(table), [k], [T], cfg.quad_order,
                             {(k, T): (dens, y)})[k][0]
        rows += [(f"integral of Delta_a^k over [{T:g}, {2 * T:g}]", rec.value),
                 ("main term C_k-density ((2T)^p - T^p)/p", rec.main_term),
                 ("ratio value/main term", rec.ratio)]

    def fmt(v):
        if v is None or (isinstance(v, float) and not math.isfinite(v)):
            return "n/a"
        return f"{v:.12g}" if isinstance(v, float) else str(v)

    lines = [f"# a = {a}, k = {k}, y = {y}", "", "| quantity | value |", "|---|---|"]
    lines += [f"| {name} | {fmt(v)} |" for name, v in rows]
    sink.write("report.md", "\n".join(lines) + "\n")
    return 0


_DISPATCH = {"constants": cmd_constants, "relations": cmd_relations, "moments": cmd_moments,
             "voronoi": cmd_voronoi, "fit": cmd_fit, "verify": cmd_verify, "report": cmd_report}


def run(config: RunConfig, stdout=None) -> int:
    """0 on success, 1 on a computational failure, 2 on a usage problem."""
    stdout = sys.stdout if stdout is None else stdout
    handler = _DISPATCH.get(config.command)
    if handler is None:
        print(f"error: unknown command {config.command!r}", file=sys.stderr)
        return 2
    try:
        return handler(config, _Sink(config.out, stdout))
    except DeltaMomentsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    try:
        cfg = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
