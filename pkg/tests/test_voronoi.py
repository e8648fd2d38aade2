import math

import numpy as np
import pytest

from delta_moments.errors import DomainError, RangeError
from delta_moments.quadrature import integrate
from delta_moments.sigma_delta import build_sigma_table
from delta_moments.voronoi import (R_a1, R_a1_many, residual_second_moment, residual_second_moments,
                                   sample_grid, voronoi_params)
from oracles import osc_integral


@pytest.fixture(scope="module")
def table():
    return build_sigma_table(-0.25, 1 << 17)


def test_empty_sum(table):
    p = voronoi_params(table, 0)
    assert R_a1(1234.5, p) == 0.0


def test_single_term(table):
    p = voronoi_params(table, 1)
    for x in (1.0, 77.3, 5000.5):
        want = x ** 0.125 / (math.sqrt(2) * math.pi) * math.cos(4 * math.pi * math.sqrt(x) - math.pi / 4)
        assert R_a1(x, p) == pytest.approx(want, abs=1e-12)


def test_direct_sum_small(table):
    a, y, x = -0.25, 7, 321.75
    p = voronoi_params(table, y)
    terms = [table.sigma[n] / n ** (0.75 + a / 2) * math.cos(4 * math.pi * math.sqrt(n * x) - math.pi / 4)
             for n in range(1, y + 1)]
    assert R_a1(x, p) == pytest.approx(x ** (0.25 + a / 2) / (math.sqrt(2) * math.pi) * math.fsum(terms),
                                       abs=1e-11)


def test_panel_scheme_matches_direct(table):
    p = voronoi_params(table, 2000)
    xs = np.linspace(30000.3, 60000.7, 700)
    fast = R_a1_many(xs, p)[2000]
    slow = R_a1(xs, p)
    assert np.max(np.abs(fast - slow)) <= 1e-8 * max(1.0, np.max(np.abs(slow)))


def test_stages_match_separate_cutoffs(table):
    xs = np.linspace(5000.1, 9000.9, 300)
    many = R_a1_many(xs, voronoi_params(table, 512), stages=[16, 128, 512])
    for y in (16, 128):
        assert np.allclose(many[y], R_a1(xs, voronoi_params(table, y)), atol=1e-9)


def test_extended_phase_agrees(table):
    p = voronoi_params(table, 1000)
    xs = np.linspace(100000.5, 120000.5, 50)
    assert np.allclose(R_a1(xs, p, "extended"), R_a1(xs, p), atol=1e-8)
    with pytest.raises(DomainError):
        R_a1(xs, p, "quad")


def test_guards(table):
    with pytest.raises(RangeError):
        voronoi_params(table, table.n_max + 1)
    p = voronoi_params(table, 100)
    with pytest.raises(RangeError):
        R_a1(0.5, p)
    with pytest.raises(RangeError):
        residual_second_moment(float(table.n_max), 10, p)
    with pytest.raises(RangeError):
        residual_second_moment(50.0, 80, p)


def test_identity_target(table):
    p = voronoi_params(table, 64)
    target = lambda ns, xs: R_a1(xs.ravel(), p).reshape(xs.shape)
    assert residual_second_moment(2048.0, 64, p, target=target) < 1e-12


def test_residual_improves_with_y(table):
    T = 2.0 ** 14
    p = voronoi_params(table, int(T))
    m = residual_second_moments(T, [int(T) // 4, int(T)], p)
    assert m[int(T)] <= m[int(T) // 4]


def test_residual_rms_grows_slowly(table):
    Ts = [2 ** 10, 2 ** 12, 2 ** 14]
    rms = [math.sqrt(residual_second_moment(float(T), T, voronoi_params(table, T)) / T) for T in Ts]
    slope = np.polyfit(np.log(Ts), np.log(rms), 1)[0]
    assert slope < 0.1


def test_residual_against_direct_quadrature(table):
    T, y = 1024.0, 32
    p = voronoi_params(table, y)
    from delta_moments.sigma_delta import DeltaEvaluator
    ev = DeltaEvaluator(table)
    direct = integrate(lambda x: (ev(x) - R_a1(x, p)) ** 2, T, 2 * T, 8)
    assert residual_second_moment(T, y, p) == pytest.approx(direct, rel=1e-9)


def test_growth_of_R_a1(table):
    a = -0.25
    p = voronoi_params(table, 64)
    Ts = [2.0 ** j for j in range(8, 16)]
    peaks = [np.max(np.abs(R_a1_many(np.linspace(T, 2 * T, 20000), p)[64])) for T in Ts]
    slope = np.polyfit(np.log(Ts), np.log(peaks), 1)[0]
    assert abs(slope - (0.25 + a / 2)) <= 0.1


@pytest.mark.parametrize("A", [1.0, 5.0, 20.0])
@pytest.mark.parametrize("B", [0.0, 1.0])
@pytest.mark.parametrize("T", [1e3, 1e4])
def test_oscillatory_integral(A, B, T):
    v = integrate(lambda t: np.cos(A * np.sqrt(t) + B), T, 2 * T, 16)
    assert v == pytest.approx(osc_integral(A, B, T, 2 * T), abs=1e-9 * T)
    # second mean value theorem after t = u^2: |integral| <= 2 sqrt(2T) * 2/A
    assert abs(v) <= 4 * math.sqrt(2 * T) / A


@pytest.mark.parametrize("n", [1, 2, 5])
def test_first_moment_lemma(n):
    a, T = -0.25, 4096.0
    g = lambda x: x ** (0.25 + a / 2)
    f = lambda x: np.cos(4 * math.pi * np.sqrt(n * x) - math.pi / 4)
    whole = integrate(lambda x: g(x) * f(x), T, 2 * T, 16)
    # largest partial integral of the bare oscillation from T, sampled at unit steps
    ends = np.arange(T + 1, 2 * T + 1)
    u = np.sqrt(n * ends)
    F = lambda s: (np.sin(4 * math.pi * s - math.pi / 4) * s / (2 * math.pi * n)
                   + np.cos(4 * math.pi * s - math.pi / 4) / (8 * math.pi ** 2 * n))
    partial = np.max(np.abs(F(u) - F(math.sqrt(n * T))))
    assert abs(whole) <= 4 * g(2 * T) * partial


def test_sample_grid(table):
    p = voronoi_params(table, 50)
    g = sample_grid(1000.0, p, step=0.5)
    assert len(g["x"]) == 2000 and not np.any(g["x"] == np.floor(g["x"]))
    assert np.allclose(g["residual"], g["delta"] - g["r_a1"])
