"""
Acceptance suite. Each test is one criterion and prints a single PASS/FAIL
line, both inline and in a summary block at the end of the run::

    pytest tests/test_acceptance.py -v
"""

import json
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from lobbyrate.allocation import (
    Scenario,
    allocate,
    allocate_limit,
    three_group_allocation,
    two_group_allocation,
)
from lobbyrate.cli import main
from lobbyrate.distributions import (
    GammaSpec,
    ParetoSpec,
    SeededSampler,
    gamma_pdf,
    index_weights,
    sample,
)
from lobbyrate.oracle import validate_closed_form
from lobbyrate.rates import GrowthModel, j_ratio, policy_breakdown, rho_policy, rho_welfare

REFERENCE_Y = (0.5, 0.3, 0.2)
REFERENCE_RHO = (0.01, 0.02, 0.03)
THETA_GRID = np.round(np.arange(100) * 0.01, 10)


@pytest.fixture
def criterion(request, capsys):
    label = request.node.function.__doc__.strip().splitlines()[0]
    if hasattr(request.node, "callspec"):
        label = label.format(**request.node.callspec.params)
    yield
    rep = getattr(request.node, "rep_call", None)
    line = f"[{'PASS' if rep is not None and rep.passed else 'FAIL'}] {label}"
    ACCEPTANCE_LINES.append(line)
    with capsys.disabled():
        print(f"\n{line}")


def budget_scenario(rng):
    n = int(rng.integers(1, 51))
    rate_max = float(rng.choice([0.05, 0.2, 1.0]))
    return Scenario.from_arrays(
        rng.uniform(0.01, 1.0, n), rng.uniform(0.0, rate_max, n), rng.uniform(0.0, 0.99),
        rng.uniform(0.25, 4.0), rng.uniform(0.1, 10.0), rng.uniform(0.0, 100.0))


def test_budget_and_bounds(criterion):
    """budget and bounds: 1000 random scenarios, sum x = w to 1e-10, x >= 0, rho* in range, < 5 s"""
    rng = np.random.default_rng(20240101)
    cases = [budget_scenario(rng) for _ in range(1000)]
    start = time.perf_counter()
    worst = 0.0
    for sc in cases:
        a = allocate(sc)
        x = a.consumption
        worst = max(worst, abs(math.fsum(x) - sc.total_resource))
        assert np.all(x >= 0)
        assert sc.rates.min() <= a.equivalent_rate <= sc.rates.max()
    elapsed = time.perf_counter() - start
    assert worst <= 1e-10, worst
    assert elapsed < 5.0, elapsed


def test_oracle_equivalence(criterion):
    """oracle equivalence: 200 valid-flag scenarios, n in {2,3}, gap <= 2x grid, welfare gap <= 1e-6, < 60 s"""
    rng = np.random.default_rng(77)
    cases = []
    while len(cases) < 200:
        n = int(rng.integers(2, 4))
        sc = Scenario.from_arrays(rng.uniform(0.05, 1.0, n), rng.uniform(0.0, 0.3, n),
                                  rng.uniform(0.0, 0.5), rng.uniform(0.25, 4.0),
                                  rng.uniform(0.5, 5.0), rng.uniform(0.0, 50.0))
        if allocate(sc).min_utility_at_favored:
            cases.append(sc)
    start = time.perf_counter()
    for sc in cases:
        rep = validate_closed_form(sc, 0.02)
        assert rep.max_abs_gap <= 2 * rep.oracle.grid_resolution, (sc, rep.max_abs_gap)
        assert rep.welfare_gap <= 1e-6, (sc, rep.welfare_gap)
    assert time.perf_counter() - start < 60.0


def test_three_group_reference_scenario(criterion):
    """reference three-group scenario: rho_V(0) = 0.017, rho_V(1) = 0.0169394 +- 1e-6, rho* decreasing in theta"""
    base = Scenario.from_arrays(REFERENCE_Y, REFERENCE_RHO, 0.0, 2.0, 1.0, 1.0)
    assert rho_welfare(base, 0.0) == math.fsum(r * y for r, y in zip(REFERENCE_RHO, REFERENCE_Y))
    assert rho_welfare(base, 0.0) == 0.017
    assert abs(rho_welfare(base, 1.0) - 0.0169394) <= 1e-6
    assert len(THETA_GRID) == 100
    rho_star = [allocate(base.with_changes(theta=th)).equivalent_rate for th in THETA_GRID]
    assert np.all(np.diff(rho_star) < 0)


def test_limit_behavior(criterion):
    """limits: t = 1e4 within 1e-6 of the t -> inf limit; t = 0 matches the static closed form to 1e-12"""
    # Whole-percent rates: distinct rates differ by >= 0.01 and ties are exact,
    # so t = 1e4 is far into the asymptotic regime.
    rng = np.random.default_rng(3)
    for _ in range(300):
        n = int(rng.integers(1, 20))
        sc = Scenario.from_arrays(rng.uniform(0.05, 1.0, n), 0.01 * rng.integers(0, 21, n),
                                  rng.uniform(0.0, 0.99), rng.uniform(0.25, 4.0),
                                  rng.uniform(0.5, 5.0), 1e4)
        far = allocate(sc).consumption
        limit = allocate_limit(sc, "t_infinity").consumption
        assert np.max(np.abs(far - limit)) <= 1e-6
        zero = sc.with_changes(time=0.0)
        assert np.max(np.abs(allocate(zero).consumption
                             - allocate_limit(zero, "t_zero").consumption)) <= 1e-12
    # favored group strictly most impatient: it receives nothing in the limit
    sc = Scenario.from_arrays((0.5, 0.3, 0.2), (0.05, 0.02, 0.01), 0.3, 2.0, 1.0, 1e4)
    assert allocate(sc).consumption[0] <= 1e-6
    assert allocate_limit(sc, "t_infinity").consumption[0] == 0.0


def test_special_case_consistency(criterion):
    """special cases: two- and three-group formulas agree with the n-group formula to 1e-12 on 100 scenarios"""
    rng = np.random.default_rng(11)
    for k in range(100):
        n = 2 + k % 2
        sc = Scenario.from_arrays(rng.uniform(0.05, 1.0, n), rng.uniform(0.0, 0.1, n),
                                  rng.uniform(0.0, 0.99), rng.uniform(0.25, 4.0),
                                  rng.uniform(0.5, 5.0), rng.uniform(0.0, 50.0))
        special = two_group_allocation(sc) if n == 2 else three_group_allocation(sc)
        assert np.max(np.abs(special - allocate(sc).consumption)) <= 1e-12


def test_monotonicity(criterion):
    """monotonicity: x_1 nondecreasing in theta, x_i / x_j (i, j >= 2) theta-invariant to 1e-10"""
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(2, 12))
        base = Scenario.from_arrays(rng.uniform(0.05, 1.0, n), rng.uniform(0.0, 0.1, n), 0.0,
                                    rng.uniform(0.25, 4.0), 1.0, rng.uniform(0.0, 20.0))
        xs = np.array([allocate(base.with_changes(theta=th)).consumption for th in THETA_GRID])
        assert np.all(np.diff(xs[:, 0]) >= 0)
        if n >= 3:
            ratios = xs[:, 1:] / xs[:, [1]]
            assert np.max(np.abs(ratios / ratios[0] - 1.0)) <= 1e-10


def test_distribution_checks(criterion):
    """distributions: Gamma(4,2) pdf to 1e-12, Pareto index weights, sample means within 3 SE at 1e5 draws"""
    xs = np.linspace(0.0, 60.0, 6001)
    expected = xs ** 3 * np.exp(-xs / 2) / 96
    assert np.max(np.abs(gamma_pdf(GammaSpec(4.0, 2.0), xs) - expected)) <= 1e-12

    y = index_weights(ParetoSpec(1.0, 1.0), 10)
    assert abs(math.fsum(y) - 1.0) <= 1e-12
    asc = index_weights(ParetoSpec(1.0, 1.0), 10, sorted_ascending=True)
    assert np.all(np.diff(asc) >= 0)
    np.testing.assert_array_equal(np.sort(y), asc)

    for seed, spec in ((1, GammaSpec(4.0, 2.0)), (2, ParetoSpec(5.0, 1.0)),
                       (3, GammaSpec(0.5, 2.0))):
        draws = sample(SeededSampler(seed), spec, 100_000)
        se = math.sqrt(spec.variance / draws.size)
        assert abs(draws.mean() - spec.mean) <= 3 * se, (spec, draws.mean())


def test_policy_rate_sanity(criterion):
    """policy rate: rho_R between rho_V and F', above rho_V at t = 1 when F' > rho_V, j_ratio in [1/n, 1]"""
    rng = np.random.default_rng(9)
    for _ in range(300):
        n = int(rng.integers(1, 30))
        sc = Scenario.from_arrays(rng.uniform(0.05, 1.0, n), rng.uniform(0.0, 0.1, n), 0.0,
                                  rng.uniform(0.25, 4.0), 1.0, 1.0)
        model = GrowthModel(rng.uniform(0.05, 0.95), rng.uniform(0.0, 0.2),
                            rng.uniform(0.1, 10.0))
        for mode in ("tolerance", "display"):
            res = policy_breakdown(sc, rng.uniform(0.25, 4.0), model, 1.0, mode)
            lo, hi = sorted((res.rho_welfare, res.f_prime))
            assert lo <= res.rho_policy <= hi
            assert 1.0 / n <= res.j_ratio <= 1.0
            if res.f_prime > res.rho_welfare and res.j_ratio < 1.0:
                assert res.rho_policy > res.rho_welfare

    base = Scenario.from_arrays(REFERENCE_Y, REFERENCE_RHO, 0.0, 2.0, 1.0, 1.0)
    model = GrowthModel(0.3, 0.05, 1.0)
    assert rho_policy(base, 2.0, model, 1.0) > rho_welfare(base, 1.0)

    for n in range(1, 51):
        assert j_ratio(np.full(n, 0.7)) == 1.0 / n
        assert j_ratio(np.eye(n)[n // 2] * 3.0) == 1.0


DETERMINISM_CONFIG = """\
scenario:
  n_groups: 4
  wealth: {kind: pareto, shape: 1.0, scale: 1.0, ascending: true}
  rates: {kind: gamma, shape: 4.0, scale: 2.0}
  theta: 0.2
  sigma: 2.0
  t: 1.0
growth: {gamma: 0.3, delta: 0.05, S0: 1.0}
experiment:
  variable: theta
  grid: "0:0.99:0.01"
  outputs: [consumption, rho_lobby, rho_welfare, rho_policy, delta_disagreement]
  replications: 200
  seed: 12345
"""

COMMANDS = [["allocate"], ["sweep"], ["sweep", "--variable", "time", "--grid", "0:100:1"],
            ["montecarlo"], ["oracle-check"], ["compare-rates", "--t", "1"]] + [
            ["figure", f"F{k}"] for k in range(1, 12)]


def test_cli_determinism(criterion, tmp_path):
    """determinism: every CLI command gives byte-identical output across two runs"""
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(DETERMINISM_CONFIG)
    for argv in COMMANDS:
        for fmt in ("csv", "json"):
            blobs = []
            for k in range(2):
                out = tmp_path / f"run{k}.{fmt}"
                code = main([*argv, "--config", str(cfg), "--seed", "99", "--format", fmt,
                             "--out", str(out)])
                assert code in (0, 3), (argv, code)
                blobs.append(out.read_bytes())
            assert blobs[0] and blobs[0] == blobs[1], argv


@pytest.mark.parametrize("figure_id", ["F2", "F3", "F9", "F10", "F11"])
def test_figure_pipeline(criterion, figure_id, tmp_path):
    """figure pipeline {figure_id}: completes in < 10 s and satisfies its shape checks"""
    out = tmp_path / "fig.json"
    start = time.perf_counter()
    code = main(["figure", figure_id, "--format", "json", "--out", str(out)])
    elapsed = time.perf_counter() - start
    assert code == 0
    checks = json.loads(out.read_text())["summary"]["checks"]
    assert checks and all(checks.values()), checks
    assert elapsed < 10.0, elapsed
