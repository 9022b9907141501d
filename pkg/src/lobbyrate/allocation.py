"""
Closed-form consumption allocation under an inequality-weighted welfare function.

The planner maximizes

    W(x) = (1 - theta) * sum_i y_i U_i(x_i) + theta * min_i U_i(x_i),
    U_i(x) = u(x) exp(-rho_i t),  u(x) = x**(1 - sigma) / (1 - sigma),

subject to sum_i x_i = w. Group 1 (index 0 here) is the favored group: the
first-order conditions are taken with the min term attached to it, which gives

    x_1 = w A_1 / (A_1 + sum_{i>=2} A_i),
    A_1 = ((1 - theta) y_1 + theta)**r,
    A_i = ((1 - theta) y_i)**r * exp(r (rho_1 - rho_i) t),   r = 1 / sigma.

The allocation is exact whenever group 1 really attains the minimum utility at
the returned point; :attr:`Allocation.min_utility_at_favored` reports this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

__all__ = [
    "Group",
    "Scenario",
    "Allocation",
    "felicity",
    "discounted_utility",
    "welfare",
    "alpha_coefficient",
    "allocate",
    "allocate_limit",
    "equivalent_rho",
    "equivalent_utility",
    "two_group_allocation",
    "three_group_allocation",
    "per_group_allocation",
    "equal_wealth_allocation",
]

_WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Group:
    """One interest group: its wealth (lobbying) weight and pure rate of time preference."""

    wealth_weight: float
    discount_rate: float

    def __post_init__(self):
        if not (self.wealth_weight > 0 and math.isfinite(self.wealth_weight)):
            raise ValueError(f"wealth_weight must be positive, got {self.wealth_weight!r}")
        if not (0.0 <= self.discount_rate <= 1.0):
            raise ValueError(f"discount_rate must lie in [0, 1], got {self.discount_rate!r}")


@dataclass(frozen=True)
class Scenario:
    """A full problem instance.

    Wealth weights are normalized to sum to one on construction. The first
    group is the favored group that carries the egalitarian (min) weight.
    """

    groups: tuple[Group, ...]
    theta: float
    sigma: float
    total_resource: float = 1.0
    time: float = 0.0
    weights: np.ndarray = field(init=False, repr=False, compare=False)
    rates: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        groups = tuple(self.groups)
        if not groups:
            raise ValueError("a scenario needs at least one group")
        if not (0.0 <= self.theta <= 1.0):
            raise ValueError(f"theta must lie in [0, 1], got {self.theta!r}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if not (self.total_resource > 0 and math.isfinite(self.total_resource)):
            raise ValueError(f"total_resource must be positive, got {self.total_resource!r}")
        if not (self.time >= 0 and math.isfinite(self.time)):
            raise ValueError(f"time must be finite and >= 0, got {self.time!r}")

        raw = np.array([g.wealth_weight for g in groups], dtype=float)
        total = math.fsum(raw)
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            groups = tuple(Group(g.wealth_weight / total, g.discount_rate) for g in groups)
        object.__setattr__(self, "groups", groups)

        weights = np.array([g.wealth_weight for g in groups], dtype=float)
        rates = np.array([g.discount_rate for g in groups], dtype=float)
        weights.setflags(write=False)
        rates.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "rates", rates)

    @classmethod
    def from_arrays(cls, weights, rates, theta, sigma, total_resource=1.0, time=0.0):
        weights = np.asarray(weights, dtype=float).ravel()
        rates = np.asarray(rates, dtype=float).ravel()
        if weights.shape != rates.shape:
            raise ValueError(
                f"weights and rates differ in length ({weights.size} vs {rates.size})"
            )
        groups = tuple(Group(float(y), float(p)) for y, p in zip(weights, rates))
        return cls(groups, float(theta), float(sigma), float(total_resource), float(time))

    @property
    def n(self) -> int:
        return len(self.groups)

    @property
    def r(self) -> float:
        return 1.0 / self.sigma

    def with_changes(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass(frozen=True)
class Allocation:
    consumption: np.ndarray
    equivalent_rate: float
    min_utility_at_favored: bool

    def __post_init__(self):
        self.consumption.setflags(write=False)


def felicity(x, sigma):
    """CRRA felicity ``x**(1-sigma)/(1-sigma)``, ``log(x)`` at ``sigma == 1``.

    Accepts scalars or arrays; raises ``ValueError`` for nonpositive input.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("felicity is only defined for strictly positive consumption")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    if sigma == 1.0:
        out = np.log(arr)
    else:
        out = arr ** (1.0 - sigma) / (1.0 - sigma)
    return float(out) if out.ndim == 0 else out


def discounted_utility(x, rho, t, sigma):
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t!r}")
    return felicity(x, sigma) * np.exp(-np.asarray(rho, dtype=float) * t)


def _utilities_with_limits(consumption: np.ndarray, scenario: Scenario) -> np.ndarray:
    # u(0) is 0 for sigma < 1 and -inf otherwise; used only for the validity flag.
    # Evaluated in log space so x**(1-sigma) overflowing against a vanishing
    # discount factor cannot produce inf * 0.
    x = np.asarray(consumption, dtype=float)
    sigma, decay = scenario.sigma, scenario.rates * scenario.time
    out = np.empty_like(x)
    pos = x > 0
    if np.any(pos):
        lx = np.log(x[pos])
        if sigma == 1.0:
            out[pos] = lx * np.exp(-decay[pos])
        else:
            with np.errstate(over="ignore"):
                mag = np.exp((1.0 - sigma) * lx - decay[pos]) / abs(1.0 - sigma)
            out[pos] = mag if sigma < 1.0 else -mag
    out[~pos] = 0.0 if sigma < 1.0 else -np.inf
    return out


def welfare(scenario: Scenario, consumption) -> float:
    """Inequality-weighted welfare of a strictly positive consumption vector."""
    x = np.asarray(consumption, dtype=float).ravel()
    if x.size != scenario.n:
        raise ValueError(f"expected {scenario.n} consumption entries, got {x.size}")
    u = discounted_utility(x, scenario.rates, scenario.time, scenario.sigma)
    u = np.atleast_1d(u)
    return float(
        (1.0 - scenario.theta) * math.fsum(scenario.weights * u) + scenario.theta * u.min()
    )


def alpha_coefficient(scenario: Scenario, i: int) -> float:
    """Ratio ``((1-theta) y_1 + theta) / ((1-theta) y_i)`` for a non-favored group.

    ``i`` is 1-based to match the usual group numbering, so ``2 <= i <= n``.
    """
    if not 2 <= i <= scenario.n:
        raise IndexError(f"group index must lie in [2, {scenario.n}], got {i}")
    if scenario.theta >= 1.0:
        raise ZeroDivisionError("alpha is undefined at theta = 1")
    th = scenario.theta
    y = scenario.weights
    return ((1.0 - th) * y[0] + th) / ((1.0 - th) * y[i - 1])


def _log_coefficients(scenario: Scenario, time: float) -> np.ndarray:
    """log A_i for every group (``-inf`` where a coefficient vanishes)."""
    th, r = scenario.theta, scenario.r
    y, rho = scenario.weights, scenario.rates
    logs = np.empty(scenario.n)
    logs[0] = r * math.log((1.0 - th) * y[0] + th)
    if scenario.n > 1:
        with np.errstate(divide="ignore"):
            logs[1:] = r * np.log((1.0 - th) * y[1:]) + r * (rho[0] - rho[1:]) * time
    return logs


def _shares_to_consumption(logs: np.ndarray, w: float) -> np.ndarray:
    top = logs.max()
    shares = np.exp(logs - top)
    x = w * shares / math.fsum(shares)
    # Put rounding residue on the largest entry so the budget closes exactly.
    k = int(np.argmax(x))
    x[k] = max(w - math.fsum(np.delete(x, k)), 0.0)
    return x


def _finish(scenario: Scenario, x: np.ndarray) -> Allocation:
    rho_star = equivalent_rho(scenario.rates, x)
    u = _utilities_with_limits(x, scenario)
    tol = 1e-12 * abs(u[0]) if math.isfinite(u[0]) else 0.0
    valid = bool(np.all(u[0] <= u[1:] + tol)) if scenario.n > 1 else True
    return Allocation(x, rho_star, valid)


def allocate(scenario: Scenario) -> Allocation:
    """Optimal consumption from the favored-group first-order conditions.

    Shares are normalized exponentials of the log-coefficients, so large
    ``r * (rho_1 - rho_i) * t`` never overflows. At ``theta = 1`` this returns
    the formula limit ``(w, 0, ..., 0)``, which is generally not the maximin
    optimum; the validity flag is then false.
    """
    if scenario.n == 0:
        raise ValueError("cannot allocate among zero groups")
    logs = _log_coefficients(scenario, scenario.time)
    x = _shares_to_consumption(logs, scenario.total_resource)
    return _finish(scenario, x)


def allocate_limit(scenario: Scenario, limit: str) -> Allocation:
    """Allocation in the ``"t_zero"`` or ``"t_infinity"`` time limit.

    As t grows the coefficient of every group other than those with the
    smallest discount rate vanishes relative to the rest, so the limit keeps
    only that set (group 1 included when it ties for the minimum) and splits
    the budget by the time-free coefficients.
    """
    if limit == "t_zero":
        return allocate(scenario.with_changes(time=0.0))
    if limit != "t_infinity":
        raise ValueError(f"limit must be 't_zero' or 't_infinity', got {limit!r}")

    w = scenario.total_resource
    if scenario.n == 1 or scenario.theta >= 1.0:
        x = np.zeros(scenario.n)
        x[0] = w
        return _finish(scenario, x)

    static = _log_coefficients(scenario, 0.0)
    rho = scenario.rates
    keep = rho == rho.min()
    logs = np.where(keep, static, -np.inf)
    x = _shares_to_consumption(logs, w)
    return _finish(scenario, x)


def equivalent_rho(rates, consumption) -> float:
    """Consumption-weighted mean discount rate."""
    rho = np.asarray(rates, dtype=float).ravel()
    x = np.asarray(consumption, dtype=float).ravel()
    if rho.shape != x.shape:
        raise ValueError(f"rates and consumption differ in length ({rho.size} vs {x.size})")
    if np.any(x < 0):
        raise ValueError("consumption must be nonnegative")
    total = math.fsum(x)
    if not total > 0:
        raise ValueError("equivalent rate needs some positive consumption")
    value = math.fsum(rho * x) / total
    return float(min(max(value, rho.min()), rho.max()))


def equivalent_utility(x, rho_star, t, sigma):
    return felicity(x, sigma) * math.exp(-rho_star * t)


# --- literal closed forms, kept separate as cross-checks of ``allocate`` ---


def two_group_allocation(scenario: Scenario) -> np.ndarray:
    if scenario.n != 2:
        raise ValueError("two_group_allocation needs exactly two groups")
    th, r, w, t = scenario.theta, scenario.r, scenario.total_resource, scenario.time
    (y1, y2), (p1, p2) = scenario.weights, scenario.rates
    a1 = ((1 - th) * y1 + th) ** r
    x1 = w * a1 / (a1 + ((1 - th) * y2) ** r * math.exp(r * (p1 - p2) * t))
    return np.array([x1, w - x1])


def three_group_allocation(scenario: Scenario) -> np.ndarray:
    if scenario.n != 3:
        raise ValueError("three_group_allocation needs exactly three groups")
    th, r, w, t = scenario.theta, scenario.r, scenario.total_resource, scenario.time
    (y1, y2, y3), (p1, p2, p3) = scenario.weights, scenario.rates
    a1 = ((1 - th) * y1 + th) ** r
    a2 = ((1 - th) * y2) ** r * math.exp(r * (p1 - p2) * t)
    a3 = ((1 - th) * y3) ** r * math.exp(r * (p1 - p3) * t)
    x1 = w * a1 / (a1 + a2 + a3)
    # x3 / x2 = (y3 exp(-p3 t) / (y2 exp(-p2 t)))**r
    ratio = (y3 / y2 * math.exp((p2 - p3) * t)) ** r
    x2 = (w - x1) / (1 + ratio)
    return np.array([x1, x2, w - x1 - x2])


def per_group_allocation(scenario: Scenario) -> np.ndarray:
    """Each group's consumption from its own closed-form expression (theta < 1)."""
    n, th, r, w, t = scenario.n, scenario.theta, scenario.r, scenario.total_resource, scenario.time
    y, rho = scenario.weights, scenario.rates
    if th >= 1.0:
        raise ZeroDivisionError("per-group closed forms are undefined at theta = 1")
    x = np.empty(n)
    a1 = ((1 - th) * y[0] + th) ** r
    x[0] = w * a1 / (a1 + sum(((1 - th) * y[i]) ** r * math.exp(r * (rho[0] - rho[i]) * t)
                              for i in range(1, n)))
    for i in range(1, n):
        alpha = alpha_coefficient(scenario, i + 1)
        denom = 1.0 + (alpha / math.exp((rho[0] - rho[i]) * t)) ** r
        for j in range(1, n):
            if j != i:
                denom += ((y[j] / y[i]) / math.exp((rho[j] - rho[i]) * t)) ** r
        x[i] = w / denom
    return x


def equal_wealth_allocation(scenario: Scenario) -> np.ndarray:
    """Closed form for identical wealth weights, where the ``y_j / y_i`` ratios drop out."""
    n, th, r, w, t = scenario.n, scenario.theta, scenario.r, scenario.total_resource, scenario.time
    rho = scenario.rates
    if not np.allclose(scenario.weights, 1.0 / n, rtol=0, atol=1e-15):
        raise ValueError("equal_wealth_allocation needs identical wealth weights")
    y = 1.0 / n
    x = np.empty(n)
    a1 = ((1 - th) * y + th) ** r
    x[0] = w * a1 / (a1 + sum(((1 - th) * y) ** r * math.exp(r * (rho[0] - rho[i]) * t)
                              for i in range(1, n)))
    alpha = ((1 - th) * y + th) / ((1 - th) * y)
    for i in range(1, n):
        denom = 1.0 + (alpha / math.exp((rho[0] - rho[i]) * t)) ** r
        denom += sum(math.exp(r * (rho[i] - rho[j]) * t) for j in range(1, n) if j != i)
        x[i] = w / denom
    return x


def scenario_from_pairs(pairs: Sequence[Sequence[float]], theta, sigma, total_resource=1.0,
                        time=0.0) -> Scenario:
    groups = tuple(Group(float(y), float(p)) for y, p in pairs)
    return Scenario(groups, float(theta), float(sigma), float(total_resource), float(time))
