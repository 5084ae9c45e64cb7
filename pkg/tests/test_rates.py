import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebitrates.rates import (
    RateCurve,
    bipartite_direct_rate,
    bipartite_sc_fidelity_rate,
    bipartite_sc_rate,
    curve_from_function,
    direct_plateau_start,
    oneshot_fid_to_prob,
    oneshot_lowfid_bound,
    oneshot_prob_to_fid,
    sc_fidelity_from_probability,
    sc_slope_one_point,
)
from oracles import binary_entropy, direct_rate_alpha_grid, renyi, sc_rate_alpha_grid

P34 = np.array([0.75, 0.25])


def test_direct_examples():
    assert bipartite_direct_rate(np.full(4, 0.25), 0.3) == pytest.approx(2.0, abs=1e-12)
    assert bipartite_direct_rate(P34, 0.05) == pytest.approx(direct_rate_alpha_grid(P34, 0.05), abs=1e-4)
    for p in ([0.5, 0.3, 0.2], [0.9, 0.1], P34):
        hinf = renyi(p, math.inf)
        assert bipartite_direct_rate(p, hinf) == hinf
        assert bipartite_direct_rate(p, hinf + 0.3) == hinf


def test_direct_rejects_nonpositive_r():
    for r in (0.0, -1.0):
        with pytest.raises(ValueError):
            bipartite_direct_rate(P34, r)


def test_direct_plateau_with_degenerate_top():
    # two-fold degenerate maximum: the plateau starts log2(2) below H_inf
    p = [0.4, 0.4, 0.2]
    start = direct_plateau_start(p)
    assert start == pytest.approx(-math.log2(0.4) - 1)
    assert bipartite_direct_rate(p, start) == pytest.approx(-math.log2(0.4), abs=1e-12)
    assert bipartite_direct_rate(p, start * 0.5) > -math.log2(0.4) + 1e-6


def test_sc_examples():
    for r in (0.0, 0.1, 3.0):
        assert bipartite_sc_rate([0.5, 0.5], r) == pytest.approx(1.0, abs=1e-12)
    assert bipartite_sc_rate(P34, 0) == pytest.approx(binary_entropy(0.25), abs=1e-12)
    assert bipartite_sc_rate(P34, 5) == pytest.approx(1.0, abs=1e-9)
    for r in (0.02, 0.1, 0.3):
        assert bipartite_sc_rate(P34, r) == pytest.approx(sc_rate_alpha_grid(P34, r), abs=1e-5)


def test_sc_fidelity_examples():
    assert bipartite_sc_fidelity_rate([0.5, 0.5], 0.2) == pytest.approx(1.2, abs=1e-9)
    assert bipartite_sc_fidelity_rate(P34, 1e-6) == pytest.approx(binary_entropy(0.25), abs=1e-3)
    xs = np.arange(0, 2.0001, 0.01)
    oracle = max(sc_rate_alpha_grid(P34, x) + 2 - x for x in xs)
    assert bipartite_sc_fidelity_rate(P34, 2.0) == pytest.approx(oracle, abs=1e-3)


def test_fidelity_rate_is_r_plus_half_renyi_above_r0():
    # unit-slope branch meets the alpha = 1/2 tangent line of R*
    p = [0.6, 0.3, 0.1]
    r0 = sc_slope_one_point(p)
    for r in (r0 + 0.1, r0 + 1.0):
        assert bipartite_sc_fidelity_rate(p, r, r0) == pytest.approx(r + renyi(p, 0.5), abs=2e-3)


def test_curve_transform_examples():
    grid = np.linspace(0, 1, 11)
    const = RateCurve(grid, np.full(11, 0.7), "strong-converse")
    assert sc_fidelity_from_probability(const, 0.4) == pytest.approx(1.1)
    unit = RateCurve(grid, 0.3 + grid, "strong-converse")
    assert sc_fidelity_from_probability(unit, 0.6) == pytest.approx(0.9)
    with pytest.raises(ValueError):
        sc_fidelity_from_probability(const, -0.1)
    with pytest.raises(ValueError):
        sc_fidelity_from_probability(RateCurve(grid, grid, "direct"), 0.1)


def test_oneshot_examples():
    assert oneshot_fid_to_prob(80, 0.01) == (10, pytest.approx(0.7))
    assert oneshot_fid_to_prob(8, 0) == (1, 1.0)
    assert oneshot_fid_to_prob(7, 0.05).degenerate
    assert oneshot_prob_to_fid(5, 1, 5) == 0
    assert oneshot_prob_to_fid(2, 0.5, 4) == pytest.approx(0.75)
    assert oneshot_prob_to_fid(3, 0.9, 3) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        oneshot_prob_to_fid(4, 0.5, 2)
    low = oneshot_lowfid_bound(2, 1.0)
    assert low.vacuous and low.bound < 0
    assert oneshot_lowfid_bound(1024, 0).bound == pytest.approx(31 / math.log(1024), abs=1e-12)
    assert oneshot_lowfid_bound(16, 0.75).bound == pytest.approx(1 / math.log(16), abs=1e-12)


def test_rate_curve_csv_roundtrip():
    c = RateCurve([0, 0.5, 1], [1, 0.9, 0.8], "direct")
    text = c.to_csv()
    assert text.splitlines()[0] == "r,R"
    back = RateCurve.from_csv(text, "direct")
    assert np.allclose(back.values, c.values)
    with pytest.raises(ValueError):
        RateCurve([0, 0], [1, 1], "direct")
    with pytest.raises(ValueError):
        RateCurve([0, 1], [1, 1], "bogus")


spectra = st.lists(st.floats(0.02, 1.0), min_size=2, max_size=4).map(
    lambda v: np.sort(np.array(v) / sum(v))[::-1])


@settings(max_examples=15)
@given(spectra)
def test_curve_shapes_and_sandwich(p):
    grid = np.linspace(0.01, 2.0, 40)
    direct = curve_from_function(lambda r: bipartite_direct_rate(p, r), grid, "direct")
    sc = curve_from_function(lambda r: bipartite_sc_rate(p, r), np.concatenate([[0], grid]),
                             "strong-converse")
    assert direct.is_monotone()
    assert sc.is_monotone() and sc.is_concave(1e-8)
    hinf, h, h0 = renyi(p, math.inf), renyi(p, 1), renyi(p, 0)
    assert np.all(direct.values >= hinf - 1e-12) and np.all(direct.values <= h + 1e-12)
    assert np.all(sc.values >= h - 1e-12) and np.all(sc.values <= h0 + 1e-12)


@settings(max_examples=20)
@given(spectra)
def test_fidelity_transform_excess_is_running_sup(p):
    # R_F(r) - r = sup_{x <= r} R*(x) - x: nondecreasing, flat past the peak of R*(x) - x
    grid = np.round(np.arange(0, 1.5001, 0.05), 10)
    sc = curve_from_function(lambda r: bipartite_sc_rate(p, r), grid, "strong-converse")
    vals = np.array([sc_fidelity_from_probability(sc, r) for r in grid])
    excess = vals - grid
    assert np.all(np.diff(excess) >= -1e-12)
    peak = int(np.argmax(sc.values - grid))
    assert np.allclose(excess[peak:], excess[peak], atol=1e-12)
    assert np.all(vals >= sc.values - 1e-12) and np.all(vals >= grid)


@given(st.integers(2, 4096), st.floats(0, 0.99), st.floats(0, 0.99))
def test_oneshot_monotone(d, e1, e2):
    lo, hi = sorted((e1, e2))
    assert oneshot_fid_to_prob(d, lo).p >= oneshot_fid_to_prob(d, hi).p
    assert oneshot_lowfid_bound(d, lo).bound >= oneshot_lowfid_bound(d, hi).bound
    assert oneshot_prob_to_fid(d, lo, 2 * d) >= oneshot_prob_to_fid(d, hi, 2 * d)
