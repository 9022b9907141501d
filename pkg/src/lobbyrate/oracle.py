"""Brute-force maximizer of the planner's welfare over the budget simplex.

Used to check the closed-form allocation independently. The objective has a
kink wherever two utilities tie, so the search is derivative-free: an
exhaustive lattice over the simplex followed by pairwise-transfer refinement
at successively halved step sizes, then sub-step refinement on a log scale.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .allocation import Scenario, allocate, welfare

__all__ = ["OracleResult", "ValidationReport", "maximize", "validate_closed_form", "MAX_GROUPS"]

MAX_GROUPS = 4
_LOG_TOL = 1e-6


@dataclass(frozen=True)
class OracleResult:
    argmax: np.ndarray
    welfare_value: float
    grid_resolution: float
    iterations: int


@dataclass(frozen=True)
class ValidationReport:
    max_abs_gap: float
    welfare_gap: float
    flag_agrees: bool
    within_tolerance: bool
    min_utility_at_favored: bool
    tolerance: float
    closed_form: np.ndarray
    oracle: OracleResult


def _batch_welfare(scenario: Scenario, X: np.ndarray) -> np.ndarray:
    sigma = scenario.sigma
    if sigma == 1.0:
        u = np.log(X)
    else:
        u = X ** (1.0 - sigma) / (1.0 - sigma)
    u = u * np.exp(-scenario.rates * scenario.time)
    return (1.0 - scenario.theta) * (u @ scenario.weights) + scenario.theta * u.min(axis=1)


def _lattice(n: int, steps: int) -> np.ndarray:
    # Lexicographic order over the first n-1 coordinates, so argmax ties resolve
    # to the smallest index.
    rows = [c + (steps - sum(c),) for c in itertools.product(range(steps + 1), repeat=n - 1)
            if sum(c) <= steps]
    return np.array(rows, dtype=float)


def maximize(scenario: Scenario, resolution: float = 0.02, floor: float | None = None,
             halvings: int = 16) -> OracleResult:
    """Maximize welfare over ``{x >= floor, sum(x) = w}``.

    Parameters
    ----------
    scenario : Scenario
        Problem instance with at most four groups.
    resolution : float
        Lattice spacing in resource units; the actual spacing is the largest
        ``(w - n*floor)/N`` not exceeding it.
    floor : float, optional
        Minimum consumption per group, default ``1e-9 * w``.
    halvings : int
        Number of times the refinement step is halved after the lattice stage.

    Returns
    -------
    OracleResult
        ``grid_resolution`` is the final refinement step.
    """
    n, w = scenario.n, scenario.total_resource
    if n > MAX_GROUPS:
        raise NotImplementedError(f"the oracle supports at most {MAX_GROUPS} groups, got {n}")
    if not resolution > 0:
        raise ValueError(f"resolution must be positive, got {resolution!r}")
    if halvings < 0:
        raise ValueError("halvings must be >= 0")
    eps = 1e-9 * w if floor is None else float(floor)
    if not eps > 0 or n * eps >= w:
        raise ValueError(f"floor must be positive and leave room in the budget, got {eps!r}")

    if n == 1:
        x = np.array([w])
        return OracleResult(x, welfare(scenario, x), 0.0, 0)

    span = w - n * eps
    steps = max(1, math.ceil(w / resolution - 1e-9))
    X = eps + _lattice(n, steps) / steps * span
    values = _batch_welfare(scenario, X)
    k = int(np.argmax(values))
    x, best = X[k].copy(), float(values[k])

    def f(z):
        return float(_batch_welfare(scenario, z[None, :])[0])

    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    step = span / steps
    sweeps = 0
    for level in range(halvings + 1):
        if level:
            step /= 2.0
        while True:
            sweeps += 1
            before = best
            for i, j in pairs:
                while x[j] - step >= eps:
                    cand = x.copy()
                    cand[i] += step
                    cand[j] -= step
                    value = f(cand)
                    if value > best:
                        x, best = cand, value
                    else:
                        break
            if not best > before:
                break

    # Near zero, welfare curvature can be large enough that even the final step
    # loses welfare. Refine every coordinate on a log scale with sub-step
    # moves, trading with the largest coordinate.
    factor = 2.0
    while factor - 1.0 > _LOG_TOL:
        while True:
            sweeps += 1
            before = best
            donor = int(np.argmax(x))
            for j in range(n):
                if j == donor:
                    continue
                for f_j in (factor, 1.0 / factor):
                    while True:
                        target = max(x[j] * f_j, eps)
                        delta = target - x[j]
                        if delta == 0.0 or abs(delta) >= step or x[donor] - delta < eps:
                            break
                        cand = x.copy()
                        cand[j] = target
                        cand[donor] -= delta
                        value = f(cand)
                        if value > best:
                            x, best = cand, value
                        else:
                            break
            if not best > before:
                break
        factor = math.sqrt(factor)

    return OracleResult(x, welfare(scenario, x), step, sweeps)


def validate_closed_form(scenario: Scenario, resolution: float = 0.02,
                         welfare_tol: float = 1e-6) -> ValidationReport:
    """Compare :func:`allocate` with :func:`maximize` on the same scenario.

    The closed-form point is mapped into the oracle's floored simplex before
    its welfare is evaluated, which keeps the comparison finite when the
    closed form assigns zero consumption.
    """
    alloc = allocate(scenario)
    result = maximize(scenario, resolution)
    n, w = scenario.n, scenario.total_resource
    gap = float(np.max(np.abs(alloc.consumption - result.argmax)))

    eps = 1e-9 * w
    mapped = eps + alloc.consumption * (w - n * eps) / w if n > 1 else alloc.consumption
    welfare_gap = result.welfare_value - welfare(scenario, mapped)

    tol = 2.0 * result.grid_resolution
    within = gap <= tol and welfare_gap <= welfare_tol
    return ValidationReport(
        max_abs_gap=gap,
        welfare_gap=float(welfare_gap),
        flag_agrees=alloc.min_utility_at_favored == within,
        within_tolerance=within,
        min_utility_at_favored=alloc.min_utility_at_favored,
        tolerance=tol,
        closed_form=alloc.consumption,
        oracle=result,
    )
