import numpy as np
import pytest
from hypothesis import strategies as st

from lobbyrate.allocation import Scenario


@st.composite
def scenarios(draw, n_min=1, n_max=50, theta_max=0.99, sigma=(0.25, 4.0), t_max=100.0,
              rate_max=1.0):
    n = draw(st.integers(n_min, n_max))
    unit = st.floats(0.01, 1.0, allow_nan=False)
    weights = draw(st.lists(unit, min_size=n, max_size=n))
    rates = draw(st.lists(st.floats(0.0, rate_max), min_size=n, max_size=n))
    theta = draw(st.floats(0.0, theta_max))
    s = draw(st.floats(*sigma))
    t = draw(st.floats(0.0, t_max))
    w = draw(st.floats(0.1, 10.0))
    return Scenario.from_arrays(weights, rates, theta, s, w, t)


def random_scenario(rng: np.random.Generator, n, theta=None, sigma=None, t=None, rate_max=0.1,
                    w=1.0):
    return Scenario.from_arrays(
        rng.uniform(0.05, 1.0, n),
        rng.uniform(0.0, rate_max, n),
        rng.uniform(0.0, 0.99) if theta is None else theta,
        rng.uniform(0.25, 4.0) if sigma is None else sigma,
        w,
        rng.uniform(0.0, 20.0) if t is None else t,
    )


ACCEPTANCE_LINES: list[str] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    setattr(item, f"rep_{rep.when}", rep)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
