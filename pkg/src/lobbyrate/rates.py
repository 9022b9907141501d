"""
Welfare-equivalent and policy-equivalent discount rates.

Both are compared against the lobbying-equivalent rate produced by
:func:`lobbyrate.allocation.allocate`.

The welfare-equivalent rate tilts each group's weight by its own discount
factor; the policy-equivalent rate mixes the marginal return on capital
``F'(S)`` with a welfare-equivalent rate, using the concentration index
``J = sum x**2 / (sum x)**2`` as the mixing weight.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .allocation import Group, Scenario, allocate

__all__ = [
    "FelicityParams",
    "GrowthModel",
    "PolicyRate",
    "RateComparison",
    "risk_tolerance",
    "efficient_weights",
    "efficient_shares",
    "rho_welfare",
    "growth_f",
    "growth_f_prime",
    "j_ratio",
    "policy_rate",
    "policy_breakdown",
    "rho_policy",
    "stock_path",
    "compare_rates",
    "SHARE_MODES",
    "POLICY_MODES",
]

SHARE_MODES = ("linear", "crra")
POLICY_MODES = ("tolerance", "display")


@dataclass(frozen=True)
class FelicityParams:
    eta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta!r}")


@dataclass(frozen=True)
class GrowthModel:
    """Net output ``F(S) = S**exponent - depreciation * S``."""

    exponent: float
    depreciation: float
    stock: float

    def __post_init__(self):
        if not 0.0 < self.exponent < 1.0:
            raise ValueError(f"exponent must lie in (0, 1), got {self.exponent!r}")
        if not self.depreciation >= 0.0:
            raise ValueError(f"depreciation must be >= 0, got {self.depreciation!r}")
        if not self.stock > 0.0:
            raise ValueError(f"stock must be positive, got {self.stock!r}")


@dataclass(frozen=True)
class PolicyRate:
    consumption: np.ndarray
    j_ratio: float
    rho_welfare: float
    f_prime: float
    rho_policy: float


@dataclass(frozen=True)
class RateComparison:
    """Rates at one point in time.

    ``delta_disagreement`` is ``rho_lobby - rho_welfare``, a proxy for the
    disagreement created by the planner's egalitarian weight.
    """

    t: float
    theta: float
    rho_lobby: float
    rho_welfare: float
    rho_policy: float
    delta_disagreement: float


GroupsLike = Union[Sequence[Group], Scenario]


def _arrays(groups: GroupsLike) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(groups, Scenario):
        return np.array(groups.weights), np.array(groups.rates)
    groups = list(groups)
    if not groups:
        raise ValueError("need at least one group")
    y = np.array([g.wealth_weight for g in groups], dtype=float)
    rho = np.array([g.discount_rate for g in groups], dtype=float)
    return y / math.fsum(y), rho


def risk_tolerance(x, eta):
    """``T(x) = x / eta`` for CRRA felicity."""
    return np.asarray(x, dtype=float) / eta


def _log_weights(y, rho, eta, t, mode):
    if mode not in SHARE_MODES:
        raise ValueError(f"mode must be one of {SHARE_MODES}, got {mode!r}")
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t!r}")
    logs = np.log(y) - rho * t
    return logs / eta if mode == "crra" else logs


def efficient_weights(groups: GroupsLike, eta: float = 1.0, t: float = 0.0,
                      mode: str = "linear") -> np.ndarray:
    """Unnormalized sharing weights.

    ``"linear"`` gives ``y_i exp(-rho_i t)``; ``"crra"`` raises those to ``1/eta``,
    which is the efficient split for CRRA felicity with elasticity ``eta``.
    """
    y, rho = _arrays(groups)
    return np.exp(_log_weights(y, rho, eta, t, mode))


def efficient_shares(groups: GroupsLike, eta: float = 1.0, t: float = 0.0, total: float = 1.0,
                     mode: str = "linear") -> np.ndarray:
    if not total > 0:
        raise ValueError(f"total must be positive, got {total!r}")
    y, rho = _arrays(groups)
    logs = _log_weights(y, rho, eta, t, mode)
    v = np.exp(logs - logs.max())
    return total * v / math.fsum(v)


def rho_welfare(groups: GroupsLike, t: float) -> float:
    """Welfare-equivalent rate ``sum rho_i y_i e^{-rho_i t} / sum y_i e^{-rho_i t}``."""
    y, rho = _arrays(groups)
    if t == 0:
        return math.fsum(rho * y)
    v = efficient_shares(groups, t=t, mode="linear")
    value = math.fsum(rho * v) / math.fsum(v)
    return float(min(max(value, rho.min()), rho.max()))


def growth_f(model: GrowthModel) -> float:
    s = model.stock
    return s ** model.exponent - model.depreciation * s


def growth_f_prime(model: GrowthModel) -> float:
    s = model.stock
    return model.exponent * s ** (model.exponent - 1.0) - model.depreciation


def j_ratio(consumption) -> float:
    x = np.asarray(consumption, dtype=float).ravel()
    if x.size == 0 or np.any(x < 0):
        raise ValueError("consumption must be a nonempty nonnegative vector")
    if not np.all(np.isfinite(x)) or not x.max() > 0:
        raise ValueError("concentration ratio needs finite, partly positive consumption")
    # exact rational arithmetic: equal shares give exactly 1/n, a single holder exactly 1
    q = [Fraction(v) for v in x.tolist()]
    total = sum(q)
    return float(sum(v * v for v in q) / (total * total))


def _rho_v(rates: np.ndarray, x: np.ndarray, mode: str) -> float:
    if mode == "tolerance":
        # T_i = x_i / eta, and eta cancels in the ratio.
        w = x
    elif mode == "display":
        w = x * x
    else:
        raise ValueError(f"mode must be one of {POLICY_MODES}, got {mode!r}")
    value = math.fsum(rates * w) / math.fsum(w)
    return float(min(max(value, rates.min()), rates.max()))


def policy_rate(rates, consumption, f_prime: float, mode: str = "tolerance") -> PolicyRate:
    """Policy-equivalent rate for a given consumption vector and marginal return."""
    rho = np.asarray(rates, dtype=float).ravel()
    x = np.asarray(consumption, dtype=float).ravel()
    if rho.shape != x.shape:
        raise ValueError("rates and consumption differ in length")
    j = j_ratio(x)
    rv = _rho_v(rho, x, mode)
    rr = (1.0 - j) * f_prime + j * rv
    lo, hi = min(rv, f_prime), max(rv, f_prime)
    return PolicyRate(x, j, rv, float(f_prime), float(min(max(rr, lo), hi)))


def policy_breakdown(groups: GroupsLike, eta: float, model: GrowthModel, t: float,
                     mode: str = "tolerance", aggregate: float = 1.0) -> PolicyRate:
    """Policy-equivalent rate with consumption ``x_i ∝ (y_i e^{-rho_i t})**(1/eta)``.

    The multiplier is fixed by ``sum x_i = aggregate``.
    """
    FelicityParams(eta)
    _, rho = _arrays(groups)
    x = efficient_shares(groups, eta, t, aggregate, mode="crra")
    return policy_rate(rho, x, growth_f_prime(model), mode)


def rho_policy(groups: GroupsLike, eta: float, model: GrowthModel, t: float,
               mode: str = "tolerance", aggregate: float = 1.0) -> float:
    return policy_breakdown(groups, eta, model, t, mode, aggregate).rho_policy


def stock_path(model: GrowthModel, consumption: Union[float, Callable[[float, float], float]],
               t_end: float, step: float = 0.01) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``dS/dt = F(S) - X(t, S)`` with fixed-step classical RK4.

    Returns the time grid and the stock path. The stock is floored at a tiny
    positive value so ``F`` stays defined if consumption exhausts it.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step!r}")
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    cons = consumption if callable(consumption) else (lambda t, s, c=float(consumption): c)
    g, d = model.exponent, model.depreciation

    def rhs(t, s):
        s = max(s, 1e-12)
        return s ** g - d * s - cons(t, s)

    steps = int(math.ceil(t_end / step - 1e-9))
    times = np.linspace(0.0, steps * step, steps + 1)
    path = np.empty(steps + 1)
    s = model.stock
    path[0] = s
    for k in range(steps):
        t = times[k]
        k1 = rhs(t, s)
        k2 = rhs(t + step / 2, s + step * k1 / 2)
        k3 = rhs(t + step / 2, s + step * k2 / 2)
        k4 = rhs(t + step, s + step * k3)
        s = max(s + step * (k1 + 2 * k2 + 2 * k3 + k4) / 6, 1e-12)
        path[k + 1] = s
    return times, path


def compare_rates(scenario: Scenario, eta: float, model: GrowthModel, t: float | None = None,
                  mode: str = "tolerance", aggregate: float = 1.0) -> RateComparison:
    t = scenario.time if t is None else float(t)
    sc = scenario.with_changes(time=t)
    rho_lobby = allocate(sc).equivalent_rate
    rv = rho_welfare(sc, t)
    rr = rho_policy(sc, eta, model, t, mode, aggregate)
    fp = growth_f_prime(model)
    lo, hi = min(sc.rates.min(), fp), max(sc.rates.max(), fp)
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    if not all(lo - slack <= v <= hi + slack for v in (rho_lobby, rv, rr)):
        raise RuntimeError(f"rate outside [{lo}, {hi}]: lobby={rho_lobby}, welfare={rv}, "
                           f"policy={rr}")
    return RateComparison(t, sc.theta, rho_lobby, rv, rr, rho_lobby - rv)
