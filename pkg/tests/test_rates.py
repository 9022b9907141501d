import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import scenarios
from lobbyrate.allocation import Group, Scenario, allocate
from lobbyrate.rates import (
    GrowthModel,
    compare_rates,
    efficient_shares,
    efficient_weights,
    growth_f,
    growth_f_prime,
    j_ratio,
    policy_breakdown,
    policy_rate,
    rho_policy,
    rho_welfare,
    stock_path,
)

REFERENCE_GROUPS = [Group(0.5, 0.01), Group(0.3, 0.02), Group(0.2, 0.03)]
MODEL = GrowthModel(0.3, 0.05, 1.0)


def test_efficient_shares_examples():
    np.testing.assert_allclose(efficient_shares(REFERENCE_GROUPS, 2.0, 0.0, 1.0), [0.5, 0.3, 0.2])
    np.testing.assert_allclose(
        efficient_weights(REFERENCE_GROUPS, t=1.0),
        [0.495024916874584026786952988589996, 0.294059601992026590666244231267583,
         0.194089106709701635386505670391841], rtol=1e-14)
    eq = [Group(0.25, 0.02)] * 4
    np.testing.assert_allclose(efficient_shares(eq, 2.0, 5.0, 2.0), [0.5] * 4)
    x = efficient_shares(REFERENCE_GROUPS, 2.0, 1.0, 3.0)
    assert math.fsum(x) == pytest.approx(3.0, abs=1e-14)


def test_efficient_shares_crra_mode():
    v = efficient_weights(REFERENCE_GROUPS, 2.0, 1.0, mode="crra")
    np.testing.assert_allclose(v, np.sqrt(efficient_weights(REFERENCE_GROUPS, t=1.0)), rtol=1e-15)
    with pytest.raises(ValueError):
        efficient_weights(REFERENCE_GROUPS, mode="bogus")


def test_rho_welfare_reference_values():
    assert rho_welfare(REFERENCE_GROUPS, 0.0) == math.fsum([0.01 * 0.5, 0.02 * 0.3, 0.03 * 0.2])
    assert rho_welfare(REFERENCE_GROUPS, 0.0) == pytest.approx(0.017, abs=1e-15)
    assert rho_welfare(REFERENCE_GROUPS, 1.0) == pytest.approx(0.01693913870005939994311193568,
                                                          rel=1e-13)
    assert abs(rho_welfare(REFERENCE_GROUPS, 1.0) - 0.0169394) <= 1e-6
    assert rho_welfare(REFERENCE_GROUPS, 1e5) == pytest.approx(0.01, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(scenarios(n_max=20), st.floats(0, 200), st.floats(0, 200))
def test_rho_welfare_nonincreasing(sc, t1, t2):
    lo, hi = sorted((t1, t2))
    assert rho_welfare(sc, hi) <= rho_welfare(sc, lo) + 1e-15
    assert sc.rates.min() <= rho_welfare(sc, hi) <= sc.rates.max()


def test_growth_examples():
    assert growth_f(MODEL) == pytest.approx(0.95)
    assert growth_f_prime(MODEL) == pytest.approx(0.25)
    m = GrowthModel(0.4, 0.0, 1.0)
    assert growth_f(m) == 1.0
    assert growth_f_prime(m) == pytest.approx(0.4)


@pytest.mark.parametrize("stock", np.linspace(0.1, 10, 25))
def test_growth_derivative_matches_finite_difference(stock):
    h = 1e-6
    up = growth_f(GrowthModel(0.3, 0.05, stock + h))
    down = growth_f(GrowthModel(0.3, 0.05, stock - h))
    assert growth_f_prime(GrowthModel(0.3, 0.05, stock)) == pytest.approx((up - down) / (2 * h),
                                                                          abs=1e-6)


def test_growth_validation():
    for args in ((1.0, 0.1, 1.0), (0.3, -0.1, 1.0), (0.3, 0.1, 0.0)):
        with pytest.raises(ValueError):
            GrowthModel(*args)


def test_j_ratio_examples():
    assert j_ratio([0.5, 0.5]) == 0.5
    assert j_ratio([1.0, 0.0]) == 1.0
    assert j_ratio([0.6, 0.4]) == pytest.approx(0.52, abs=1e-15)
    with pytest.raises(ValueError):
        j_ratio([0.0, 0.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=30).filter(lambda v: sum(v) > 0))
def test_j_ratio_bounds(x):
    j = j_ratio(x)
    assert 1.0 / len(x) <= j <= 1.0


def test_j_ratio_equality_cases():
    assert j_ratio([0.2] * 5) == 0.2
    assert all(j_ratio([0.37] * n) == 1.0 / n for n in range(1, 60))
    assert j_ratio([0.0, 0.0, 3.0]) == 1.0


def test_policy_rate_examples():
    res = policy_rate([0.01, 0.03], [0.5, 0.5], 0.25)
    assert res.j_ratio == 0.5
    assert res.rho_welfare == pytest.approx(0.02)
    assert res.rho_policy == pytest.approx(0.135, abs=1e-15)
    single = policy_breakdown([Group(1.0, 0.04)], 2.0, MODEL, 3.0)
    assert single.j_ratio == 1.0 and single.rho_policy == single.rho_welfare == 0.04


def test_policy_rate_display_mode_uses_squared_weights():
    x = np.array([0.7, 0.3])
    res = policy_rate([0.01, 0.03], x, 0.25, mode="display")
    assert res.rho_welfare == pytest.approx((0.01 * 0.49 + 0.03 * 0.09) / 0.58)
    with pytest.raises(ValueError):
        policy_rate([0.01, 0.03], x, 0.25, mode="other")


def test_tolerance_mode_is_consumption_weighted_mean():
    rng = np.random.default_rng(3)
    for _ in range(50):
        rho = rng.uniform(0, 0.1, 6)
        x = rng.uniform(0, 2, 6)
        assert policy_rate(rho, x, 0.2).rho_welfare == pytest.approx(np.dot(rho, x) / x.sum())


@settings(max_examples=100, deadline=None)
@given(scenarios(n_max=10), st.floats(0.25, 4.0), st.floats(0.05, 0.95), st.floats(0.0, 0.2),
       st.floats(0.1, 10.0), st.sampled_from(["tolerance", "display"]))
def test_policy_rate_is_convex_combination(sc, eta, g, d, s, mode):
    model = GrowthModel(g, d, s)
    res = policy_breakdown(sc, eta, model, sc.time, mode)
    lo, hi = sorted((res.rho_welfare, res.f_prime))
    assert lo <= res.rho_policy <= hi


def test_policy_above_welfare_when_return_dominates():
    res = policy_breakdown(REFERENCE_GROUPS, 2.0, MODEL, 1.0, mode="display")
    assert res.f_prime > res.rho_welfare
    assert res.rho_policy > res.rho_welfare
    assert rho_policy(REFERENCE_GROUPS, 2.0, MODEL, 1.0) > rho_welfare(REFERENCE_GROUPS, 1.0)


def test_stock_path_against_exact_solution():
    # with gamma -> tiny and no depreciation the ODE is nearly dS/dt = 1 - c
    model = GrowthModel(0.5, 0.0, 1.0)
    times, path = stock_path(model, 0.0, 2.0, 0.01)
    # dS/dt = sqrt(S), S(0)=1  =>  S(t) = (1 + t/2)**2
    np.testing.assert_allclose(path, (1 + times / 2) ** 2, rtol=1e-9)


def test_stock_path_with_consumption_and_depreciation():
    model = GrowthModel(0.3, 0.05, 1.0)
    times, path = stock_path(model, lambda t, s: 0.5, 1.0, 0.001)
    _, coarse = stock_path(model, 0.5, 1.0, 0.01)
    assert path[-1] == pytest.approx(coarse[-1], rel=1e-9)
    assert times[-1] == pytest.approx(1.0)


def test_compare_rates_reference_scenario():
    sc = Scenario.from_arrays((0.5, 0.3, 0.2), (0.01, 0.02, 0.03), 0.0, 2.0, 1.0, 1.0)
    thetas = np.linspace(0, 0.99, 100)
    lobby = [compare_rates(sc.with_changes(theta=th), 2.0, MODEL).rho_lobby for th in thetas]
    assert np.all(np.diff(lobby) < 0)
    cmp = compare_rates(sc, 2.0, MODEL, t=1.0)
    assert cmp.rho_policy > cmp.rho_welfare
    assert cmp.delta_disagreement == cmp.rho_lobby - cmp.rho_welfare
    assert cmp.rho_lobby == allocate(sc).equivalent_rate


def test_compare_rates_equal_rates():
    sc = Scenario.from_arrays((0.5, 0.5), (0.02, 0.02), 0.0, 2.0, 1.0, 0.0)
    cmp = compare_rates(sc, 2.0, MODEL)
    assert cmp.rho_lobby == cmp.rho_welfare == 0.02
    single = Scenario.from_arrays((1.0,), (0.02,), 0.0, 2.0, 1.0, 0.0)
    assert compare_rates(single, 2.0, MODEL).rho_policy == 0.02


@settings(max_examples=100, deadline=None)
@given(scenarios(n_max=15, t_max=50.0), st.floats(0.05, 0.95), st.floats(0.0, 3.0),
       st.floats(0.1, 10.0), st.sampled_from(["tolerance", "display"]))
def test_compare_rates_within_bounds(sc, g, d, s, mode):
    model = GrowthModel(g, d, s)
    cmp = compare_rates(sc, 2.0, model, mode=mode)
    fp = growth_f_prime(model)
    lo, hi = min(sc.rates.min(), fp), max(sc.rates.max(), fp)
    for v in (cmp.rho_lobby, cmp.rho_welfare, cmp.rho_policy):
        assert lo - 1e-12 <= v <= hi + 1e-12


def test_compare_rates_negative_marginal_return():
    sc = Scenario.from_arrays((0.5, 0.5), (0.02, 0.04), 0.0, 2.0, 1.0, 0.0)
    cmp = compare_rates(sc, 2.0, GrowthModel(0.3, 2.0, 5.0))
    assert cmp.rho_policy < 0.02
