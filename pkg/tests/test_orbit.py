import itertools
import math

import numpy as np
import pytest

from conftest import poly
from polybasin.basin import alpha
from polybasin.bottcher import green
from polybasin.errors import BudgetExceeded, DegenerateDenominator, ValidationError
from polybasin.orbit import (
    OrbitFrontier,
    base_point,
    expand,
    logsumexp,
    one_step_factor,
    one_step_factor_closed_form,
    series,
    sharp_bound,
    two_step_ratio,
    u_delta_estimate,
    v_deviation,
    v_estimate,
)
from polybasin.poly import iterate


def brute_force_S(f, w0, n):
    """S_n from companion-matrix roots and forward re-iteration, no shared code."""
    level = [complex(w0)]
    for _ in range(n):
        nxt = []
        for w in level:
            c = np.array(f.coeffs[::-1])
            c[-1] -= w
            nxt.extend(np.roots(c))
        level = nxt
    total = 0.0
    for z in level:
        d = 1.0
        for _ in range(n):
            d *= abs(sum(k * a * z ** (k - 1) for k, a in enumerate(f.coeffs) if k))
            z = sum(a * z**k for k, a in enumerate(f.coeffs))
        total += d * d
    return total


@pytest.mark.parametrize("m", [2, 3])
def test_base_point_power_map(m):
    f = poly(*([0] * m), 1)
    assert base_point(f, 0.5) == pytest.approx(2, abs=1e-9)
    assert base_point(f, 1 / math.e).real == pytest.approx(math.e, abs=1e-8)


def test_base_point_basilica_hits_target_potential(basilica):
    w0 = base_point(basilica, 0.5)
    assert w0.imag == 0 and w0.real > 1
    assert green(basilica, w0).value == pytest.approx(math.log(2), abs=1e-9)


def test_base_point_rejections():
    with pytest.raises(ValidationError):
        base_point(poly(0, 0, 1), 1.5)
    with pytest.raises(ValidationError):
        base_point(poly(4, 0, 1))
    with pytest.raises(ValidationError):
        base_point(poly(0, 0, 2))


def test_expand_square_map():
    f = poly(0, 0, 1)
    fr = expand(f, OrbitFrontier.root(2))
    assert fr.level == 1 and len(fr) == 2
    assert sorted(fr.points.real) == pytest.approx([-math.sqrt(2), math.sqrt(2)])
    assert fr.log_deriv == pytest.approx([math.log(2 * math.sqrt(2))] * 2)
    for node in fr.nodes:
        assert iterate(f, node.point, 1).value == pytest.approx(2)


def test_expand_critical_fiber():
    fr = expand(poly(0, 0, 1), OrbitFrontier.root(0))
    assert list(fr.points) == [0, 0]
    assert np.all(fr.log_deriv == -np.inf)


@pytest.mark.parametrize("coeffs", [(-1, 0, 1), (0.1, 0, 0, 1), (0.2, -0.1j, 0.3, 1)])
def test_expand_counts_and_closure(coeffs):
    f = poly(*coeffs)
    fr = OrbitFrontier.root(3.0)
    for level in range(1, 5):
        parents = fr.points
        fr = expand(f, fr)
        assert len(fr) == f.degree**level and fr.skipped == 0
        back = f.eval_array(fr.points).reshape(-1, f.degree)
        assert np.allclose(back, parents[:, None], atol=1e-9 * 3)


def test_series_square_map_closed_form():
    f = poly(0, 0, 1)
    rep = series(f, 2, 8)
    assert rep.S[0] == pytest.approx(16)
    for n, s in enumerate(rep.S, start=1):
        assert s == pytest.approx(8**n * 2 ** (2 - 2 / 2**n), rel=1e-12)
    assert rep.ratios[-1] == pytest.approx(8, rel=0.01) and max(rep.ratios) < 16
    assert rep.partial_sums[0] == pytest.approx(16 / 16)
    assert rep.m4 == 16 and rep.sharp_bound == pytest.approx(8 * 2**1.5)


@pytest.mark.parametrize("coeffs", [(-1, 0, 1), (0.1, 0, 0, 1), (0.2, -0.1j, 0.3, 1)])
def test_series_matches_brute_force(coeffs):
    f = poly(*coeffs)
    rep = series(f, 2.5, 4)
    for n in range(1, 5):
        assert rep.S[n - 1] == pytest.approx(brute_force_S(f, 2.5, n), rel=1e-9)


@pytest.mark.parametrize("coeffs", [(-1, 0, 1), (0.5j, 0, 0, 1)])
def test_series_step_bounded_by_one_step_factor(coeffs):
    f = poly(*coeffs)
    fr = OrbitFrontier.root(2.0)
    rep = series(f, 2.0, 6)
    for n in range(5):
        worst = max(one_step_factor(f, w) for w in fr.points)
        assert rep.S[n + 1] <= rep.S[n] * worst * (1 + 1e-9)
        fr = expand(f, fr)


@pytest.mark.parametrize("coeffs", [(0.2 + 0.1j, 0, 0, 1), (0.1, 0.3j, -0.2, 1)])
def test_series_invariant_under_conjugacy(coeffs):
    # L(z) = -z with (-1)^(m-1) = 1 for m = 3 turns f into -f(-z); |(f^n)'| is unchanged
    f = poly(*coeffs)
    g = poly(*[c * (-1) ** (1 - k) for k, c in enumerate(f.coeffs)])
    h = poly(*[c.conjugate() for c in f.coeffs])
    w0 = 1.7 + 0.4j
    base = series(f, w0, 5).log_S
    assert series(g, -w0, 5).log_S == pytest.approx(base, rel=1e-11)
    assert series(h, w0.conjugate(), 5).log_S == pytest.approx(base, rel=1e-11)


def test_deep_level_points_stay_inside_alpha():
    f = poly(0.3 + 0.2j, 0, 0, 1)
    fr = OrbitFrontier.root(base_point(f))
    for _ in range(7):
        fr = expand(f, fr)
    assert np.max(np.abs(fr.points)) <= alpha(abs(f.coeffs[0]), 3) + 0.05


def test_series_budget_and_partial_sum_definition():
    f = poly(-1, 0, 1)
    with pytest.raises(BudgetExceeded):
        series(f, 2, 24)
    rep = series(f, 2, 1)
    assert rep.partial_sums[0] == pytest.approx(rep.S[0] / 16)
    assert rep.ratios == ()


def test_series_csv_layout():
    rep = series(poly(-1, 0, 1), 2.3, 4)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "n,S_n_log10,ratio,partial_sum,m4,sharp_bound"
    assert len(lines) == 5
    first = lines[1].split(",")
    assert int(first[0]) == 1 and float(first[1]) == pytest.approx(math.log10(rep.S[0]))
    assert float(first[2]) == pytest.approx(rep.ratios[0])
    assert lines[-1].split(",")[2] == ""


def test_logsumexp():
    x = np.array([1000.0, 1000.0, -np.inf])
    assert logsumexp(x) == pytest.approx(1000 + math.log(2))
    assert logsumexp(np.array([])) == -math.inf
    assert logsumexp(np.array([-np.inf, -np.inf])) == -math.inf


@pytest.mark.parametrize("w, want", [(1, 8), (4, 32)])
def test_one_step_factor_square(w, want):
    f = poly(0, 0, 1)
    assert one_step_factor(f, w) == pytest.approx(want, rel=1e-12)
    assert one_step_factor_closed_form(f, w) == pytest.approx(want, rel=1e-12)


def test_one_step_factor_critical_fiber():
    assert one_step_factor(poly(1, 0, 0, 1), 1) == 0


def test_one_step_closed_form_needs_binomial():
    with pytest.raises(ValidationError):
        one_step_factor_closed_form(poly(0, 1, 1), 1)


def test_one_step_closed_form_non_monic():
    f = poly(0.5, 0, 0, 2)
    assert one_step_factor(f, 1.5 + 1j) == pytest.approx(one_step_factor_closed_form(f, 1.5 + 1j), rel=1e-10)


def test_two_step_ratio_square():
    f = poly(0, 0, 1)
    want = (16 * one_step_factor(f, 2) + 16 * one_step_factor(f, -2)) / 32
    assert two_step_ratio(f, 4) == pytest.approx(want, rel=1e-12)
    assert two_step_ratio(f, 4) == pytest.approx(16, rel=1e-12)


def test_two_step_ratio_brute_force():
    f = poly(0.3, -0.2j, 0.1, 1)
    w = 1.2 - 0.4j
    num = den = 0.0
    c = np.array(f.coeffs[::-1])
    for u in np.roots(c - np.r_[np.zeros(3), w]):
        du = abs(3 * u**2 + 0.2 * u - 0.2j) ** 2
        den += du
        for v in np.roots(c - np.r_[np.zeros(3), u]):
            num += du * abs(3 * v**2 + 0.2 * v - 0.2j) ** 2
    assert two_step_ratio(f, w) == pytest.approx(num / den, rel=1e-9)


def test_two_step_ratio_degenerate():
    with pytest.raises(DegenerateDenominator):
        two_step_ratio(poly(0, 0, 1), 0)


@pytest.mark.parametrize("m, a0", [(2, 0.5), (2, -1), (3, 0.1), (3, 0.6j), (4, 0.3 - 0.4j)])
def test_binomial_two_step_ratio_under_sharp_bound(m, a0):
    f = poly(a0, *([0] * (m - 1)), 1)
    r = alpha(abs(a0), m) + 0.01
    for t in np.linspace(0, 2 * np.pi, 13)[:-1]:
        assert two_step_ratio(f, r * np.exp(1j * t)) <= sharp_bound(m)


def test_u_delta_zero_is_exact():
    est = u_delta_estimate(3, 0.3, 1.5, 0.0, 1, 4)
    assert est.value == 0 and est.evaluated == 1


def test_u_delta_tiny_and_nested():
    tiny = u_delta_estimate(3, 0.3, 1.5, 1e-9, 50, 2)
    assert tiny.value < 1e-6
    a = u_delta_estimate(3, 0.3, 1.5, 0.01, 50, 2)
    b = u_delta_estimate(3, 0.3, 1.5, 0.1, 50, 2)
    assert a.value <= b.value + 1e-12


def test_u_delta_rejects_diagonal():
    with pytest.raises(ValidationError):
        u_delta_estimate(3, 0.3, 0.3, 0.1, 5, 0)


@pytest.mark.parametrize("m, a", [(2, 1), (3, 0.3 + 0.1j), (4, -0.5j)])
def test_v_deviation_binomial_is_zero(m, a):
    f = poly(a, *([0] * (m - 1)), 1)
    assert v_deviation(f, a, 0) <= 1e-10


def test_v_estimate_shrinks():
    vals = [v_estimate(3, 0.3 + 0.1j, e, 40, 1).value for e in (1e-2, 1e-6, 1e-12)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-3


def test_v_estimate_rejections():
    with pytest.raises(ValidationError):
        v_estimate(3, 2.5, 1e-3, 10, 0)
    with pytest.raises(ValidationError):
        v_estimate(3, 0.5, 0, 10, 0)


def test_cubic_ratios_stay_under_sharp_bound():
    for a0 in (0.1, 0.5j):
        f = poly(a0, 0, 0, 1)
        rep = series(f, base_point(f), 8)
        assert max(rep.ratios[4:]) <= sharp_bound(3)


def test_frontier_order_is_parent_major():
    f = poly(-1, 0, 1)
    fr = expand(f, expand(f, OrbitFrontier.root(2.0)))
    pairs = fr.points.reshape(-1, 2)
    for row in pairs:
        assert np.angle(row[0]) <= np.angle(row[1])
    parents = expand(f, OrbitFrontier.root(2.0)).points
    for p, row in zip(parents, pairs):
        assert np.allclose(f.eval_array(row), p)
    assert list(itertools.chain(*pairs)) == list(fr.points)
