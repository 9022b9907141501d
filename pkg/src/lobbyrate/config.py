"""
Experiment configuration files.

A config is a YAML mapping with up to five blocks::

    scenario:
      groups: [[0.5, 0.01], [0.3, 0.02], [0.2, 0.03]]   # [wealth_weight, discount_rate]
      theta: 0.2
      sigma: 2.0
      eta: 2.0          # optional, defaults to sigma
      w: 1.0
      t: 1.0
    growth:
      gamma: 0.3
      delta: 0.05
      S0: 1.0
      step: 0.01
    experiment:
      variable: theta
      grid: "0:0.99:0.01"
      outputs: [consumption, rho_lobby]
      replications: 1000
      seed: 7
    figure:
      theta: 0.3        # overrides for the canned figure parameters
    output:
      format: csv
      path: out.csv
      precision: 12

Instead of ``groups`` a scenario may give ``n_groups`` together with
distribution blocks::

    wealth: {kind: pareto, shape: 1.0, scale: 1.0, ascending: true}   # or equal / fixed
    rates:  {kind: gamma, shape: 4.0, scale: 2.0, unit: 0.01}         # or fixed / constant

Unknown keys are rejected. Every error names the offending key and, when the
key is present in the file, its line number.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
import yaml

from .allocation import Scenario
from .distributions import GammaSpec, ParetoSpec, SeededSampler, index_weights, sample
from .experiments import OUTPUTS, MonteCarloSpec, SweepSpec
from .rates import POLICY_MODES, GrowthModel

__all__ = [
    "ConfigError",
    "Config",
    "ScenarioConfig",
    "GrowthConfig",
    "ExperimentConfig",
    "OutputConfig",
    "load_config",
    "parse_config",
    "dump_config",
    "parse_grid",
    "build_scenario",
    "build_growth",
    "build_sweep",
    "build_monte_carlo",
]

_U64 = (1 << 64) - 1


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(key)
        prefix = f"config error ({', '.join(where)})" if where else "config error"
        super().__init__(f"{prefix}: {message}")


@dataclass
class ScenarioConfig:
    theta: float
    sigma: float
    w: float = 1.0
    t: float = 0.0
    eta: float | None = None
    groups: list[list[float]] | None = None
    n_groups: int | None = None
    wealth: dict[str, Any] | None = None
    rates: dict[str, Any] | None = None


@dataclass
class GrowthConfig:
    gamma: float
    delta: float
    S0: float
    step: float = 0.01


@dataclass
class ExperimentConfig:
    variable: str | None = None
    grid: list[float] | None = None
    outputs: list[str] | None = None
    replications: int | None = None
    seed: int | None = None
    resolution: float | None = None
    policy_mode: str | None = None
    aggregate: float | None = None
    workers: int | None = None


@dataclass
class OutputConfig:
    format: str = "csv"
    path: str | None = None
    precision: int = 12


@dataclass
class Config:
    scenario: ScenarioConfig | None = None
    growth: GrowthConfig | None = None
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    figure: dict[str, Any] = field(default_factory=dict)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict[str, Any]:
        def clean(d):
            return {k: v for k, v in d.items() if v is not None}

        out: dict[str, Any] = {}
        if self.scenario is not None:
            out["scenario"] = clean(asdict(self.scenario))
        if self.growth is not None:
            out["growth"] = clean(asdict(self.growth))
        exp = clean(asdict(self.experiment))
        if exp:
            out["experiment"] = exp
        if self.figure:
            out["figure"] = dict(self.figure)
        out["output"] = clean(asdict(self.output))
        return out


# --- parsing --------------------------------------------------------------

def _key_lines(text: str) -> dict[tuple[str, ...], int]:
    lines: dict[tuple[str, ...], int] = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                sub = path + (str(key_node.value),)
                lines[sub] = key_node.start_mark.line + 1
                walk(value_node, sub)

    root = yaml.compose(text, Loader=yaml.SafeLoader)
    if root is not None:
        walk(root, ())
    return lines


class _Reader:
    def __init__(self, data: dict, lines: dict, path: tuple[str, ...]):
        self.data = data
        self.lines = lines
        self.path = path

    def fail(self, key: str | None, message: str):
        path = self.path + ((key,) if key else ())
        line = self.lines.get(path)
        if line is None:
            # fall back to the nearest enclosing key that has a line
            for k in range(len(path) - 1, 0, -1):
                if path[:k] in self.lines:
                    line = self.lines[path[:k]]
                    break
        raise ConfigError(message, ".".join(path) if path else None, line)

    def reject_unknown(self, allowed):
        for key in self.data:
            if key not in allowed:
                self.fail(str(key), f"unknown key (allowed: {', '.join(sorted(allowed))})")

    def number(self, key, default=None, required=False, lo=None, hi=None, lo_open=False,
               integer=False):
        if key not in self.data:
            if required:
                self.fail(key, "required key is missing")
            return default
        value = self.data[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(key, f"expected a number, got {value!r}")
        if integer and not isinstance(value, int):
            self.fail(key, f"expected an integer, got {value!r}")
        if not integer and not math.isfinite(value):
            self.fail(key, f"expected a finite number, got {value!r}")
        if lo is not None and (value <= lo if lo_open else value < lo):
            bound = f"> {lo}" if lo_open else f">= {lo}"
            self.fail(key, f"must be {bound}, got {value!r}")
        if hi is not None and value > hi:
            self.fail(key, f"must be <= {hi}, got {value!r}")
        return value if integer else float(value)

    def choice(self, key, options, default=None):
        if key not in self.data:
            return default
        value = self.data[key]
        if value not in options:
            self.fail(key, f"must be one of {', '.join(options)}, got {value!r}")
        return value

    def sub(self, key) -> "_Reader | None":
        if key not in self.data or self.data[key] is None:
            return None
        value = self.data[key]
        if not isinstance(value, dict):
            self.fail(key, "expected a mapping")
        return _Reader(value, self.lines, self.path + (key,))


def parse_grid(spec) -> list[float]:
    """``"start:stop:step"`` (stop included) or a list of numbers."""
    if isinstance(spec, str):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid string must look like start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if not step > 0 or stop < start:
            raise ValueError(f"grid needs step > 0 and stop >= start, got {spec!r}")
        count = int(math.floor((stop - start) / step + 1e-9))
        return [round(start + k * step, 12) for k in range(count + 1)]
    if isinstance(spec, (list, tuple)):
        return [float(v) for v in spec]
    raise ValueError(f"grid must be a start:stop:step string or a list, got {spec!r}")


def _parse_wealth(r: _Reader) -> dict[str, Any]:
    kind = r.choice("kind", ("pareto", "equal", "fixed"))
    if kind is None:
        r.fail("kind", "required key is missing")
    if kind == "pareto":
        r.reject_unknown({"kind", "shape", "scale", "ascending"})
        out = {"kind": kind,
               "shape": r.number("shape", 1.0, lo=0, lo_open=True),
               "scale": r.number("scale", 1.0, lo=0, lo_open=True)}
        asc = r.data.get("ascending", True)
        if not isinstance(asc, bool):
            r.fail("ascending", "expected true or false")
        out["ascending"] = asc
        return out
    if kind == "equal":
        r.reject_unknown({"kind"})
        return {"kind": kind}
    r.reject_unknown({"kind", "values"})
    values = r.data.get("values")
    if not isinstance(values, list) or not values or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in values):
        r.fail("values", "expected a nonempty list of positive numbers")
    return {"kind": kind, "values": [float(v) for v in values]}


def _parse_rates(r: _Reader) -> dict[str, Any]:
    kind = r.choice("kind", ("gamma", "fixed", "constant"))
    if kind is None:
        r.fail("kind", "required key is missing")
    if kind == "gamma":
        r.reject_unknown({"kind", "shape", "scale", "unit"})
        return {"kind": kind,
                "shape": r.number("shape", required=True, lo=0, lo_open=True),
                "scale": r.number("scale", required=True, lo=0, lo_open=True),
                "unit": r.number("unit", 0.01, lo=0, lo_open=True)}
    if kind == "constant":
        r.reject_unknown({"kind", "value"})
        return {"kind": kind, "value": r.number("value", required=True, lo=0, hi=1)}
    r.reject_unknown({"kind", "values"})
    values = r.data.get("values")
    if not isinstance(values, list) or not values or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) and 0 <= v <= 1
            for v in values):
        r.fail("values", "expected a nonempty list of rates in [0, 1]")
    return {"kind": kind, "values": [float(v) for v in values]}


def _parse_scenario(r: _Reader) -> ScenarioConfig:
    r.reject_unknown({"groups", "n_groups", "wealth", "rates", "theta", "sigma", "eta", "w", "t"})
    sc = ScenarioConfig(
        theta=r.number("theta", required=True, lo=0.0, hi=1.0),
        sigma=r.number("sigma", required=True, lo=0.0, lo_open=True),
        w=r.number("w", 1.0, lo=0.0, lo_open=True),
        t=r.number("t", 0.0, lo=0.0),
        eta=r.number("eta", None, lo=0.0, lo_open=True),
    )
    if "groups" in r.data:
        if any(k in r.data for k in ("n_groups", "wealth", "rates")):
            r.fail("groups", "give either groups or n_groups/wealth/rates, not both")
        groups = r.data["groups"]
        if not isinstance(groups, list) or not groups:
            r.fail("groups", "expected a nonempty list of [wealth_weight, discount_rate] pairs")
        pairs = []
        for k, g in enumerate(groups):
            ok = (isinstance(g, list) and len(g) == 2
                  and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in g))
            if not ok:
                r.fail("groups", f"entry {k + 1} is not a [wealth_weight, discount_rate] pair")
            y, rho = float(g[0]), float(g[1])
            if not (y > 0 and math.isfinite(y)):
                r.fail("groups", f"entry {k + 1}: wealth_weight must be positive, got {y!r}")
            if not 0.0 <= rho <= 1.0:
                r.fail("groups", f"entry {k + 1}: discount_rate must lie in [0, 1], got {rho!r}")
            pairs.append([y, rho])
        sc.groups = pairs
        return sc

    sc.n_groups = r.number("n_groups", required=True, lo=1, integer=True)
    wealth, rates = r.sub("wealth"), r.sub("rates")
    if wealth is None:
        r.fail("wealth", "required when groups is not given")
    if rates is None:
        r.fail("rates", "required when groups is not given")
    sc.wealth = _parse_wealth(wealth)
    sc.rates = _parse_rates(rates)
    for name, block in (("wealth", sc.wealth), ("rates", sc.rates)):
        if block["kind"] == "fixed" and len(block["values"]) != sc.n_groups:
            r.sub(name).fail("values", f"expected {sc.n_groups} values (n_groups)")
    return sc


def _parse_growth(r: _Reader) -> GrowthConfig:
    r.reject_unknown({"gamma", "delta", "S0", "step"})
    gamma = r.number("gamma", required=True, lo=0.0, lo_open=True)
    if gamma >= 1.0:
        r.fail("gamma", f"must be < 1, got {gamma!r}")
    return GrowthConfig(
        gamma=gamma,
        delta=r.number("delta", required=True, lo=0.0),
        S0=r.number("S0", required=True, lo=0.0, lo_open=True),
        step=r.number("step", 0.01, lo=0.0, lo_open=True),
    )


def _parse_experiment(r: _Reader) -> ExperimentConfig:
    r.reject_unknown({"variable", "grid", "outputs", "replications", "seed", "resolution",
                      "policy_mode", "aggregate", "workers"})
    exp = ExperimentConfig(
        variable=r.choice("variable", ("theta", "time")),
        replications=r.number("replications", None, lo=1, integer=True),
        seed=r.number("seed", None, lo=0, hi=_U64, integer=True),
        resolution=r.number("resolution", None, lo=0.0, lo_open=True),
        policy_mode=r.choice("policy_mode", POLICY_MODES),
        aggregate=r.number("aggregate", None, lo=0.0, lo_open=True),
        workers=r.number("workers", None, lo=1, integer=True),
    )
    if "grid" in r.data:
        try:
            exp.grid = parse_grid(r.data["grid"])
        except ValueError as err:
            r.fail("grid", str(err))
    if "outputs" in r.data:
        outs = r.data["outputs"]
        if not isinstance(outs, list) or not outs or any(o not in OUTPUTS for o in outs):
            r.fail("outputs", f"expected a nonempty list drawn from {', '.join(OUTPUTS)}")
        exp.outputs = list(outs)
    return exp


def _parse_output(r: _Reader) -> OutputConfig:
    r.reject_unknown({"format", "path", "precision"})
    out = OutputConfig(
        format=r.choice("format", ("csv", "json"), "csv"),
        precision=r.number("precision", 12, lo=1, hi=17, integer=True),
    )
    if "path" in r.data:
        if not isinstance(r.data["path"], str) or not r.data["path"]:
            r.fail("path", "expected a nonempty string")
        out.path = r.data["path"]
    return out


def parse_config(text: str) -> Config:
    try:
        lines = _key_lines(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(err, 'problem', err)}",
                          line=mark.line + 1 if mark else None) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", line=1)
    root = _Reader(data, lines, ())
    root.reject_unknown({"scenario", "growth", "experiment", "figure", "output"})

    cfg = Config()
    if (r := root.sub("scenario")) is not None:
        cfg.scenario = _parse_scenario(r)
    if (r := root.sub("growth")) is not None:
        cfg.growth = _parse_growth(r)
    if (r := root.sub("experiment")) is not None:
        cfg.experiment = _parse_experiment(r)
    if (r := root.sub("figure")) is not None:
        cfg.figure = dict(r.data)
    if (r := root.sub("output")) is not None:
        cfg.output = _parse_output(r)
    return cfg


def load_config(path) -> Config:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config file: {err}") from None
    return parse_config(text)


def dump_config(cfg: Config) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)


# --- building model objects -----------------------------------------------

def _require_scenario(cfg: Config) -> ScenarioConfig:
    if cfg.scenario is None:
        raise ConfigError("this command needs a scenario block", key="scenario")
    return cfg.scenario


def _vectors(sc: ScenarioConfig, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if sc.groups is not None:
        arr = np.array(sc.groups, dtype=float)
        return arr[:, 0], arr[:, 1]
    n = sc.n_groups
    wealth, rates = sc.wealth, sc.rates
    if wealth["kind"] == "pareto":
        y = index_weights(ParetoSpec(wealth["shape"], wealth["scale"]), n, wealth["ascending"])
    elif wealth["kind"] == "equal":
        y = np.full(n, 1.0 / n)
    else:
        y = np.array(wealth["values"])
    if rates["kind"] == "gamma":
        draws = sample(SeededSampler(seed), GammaSpec(rates["shape"], rates["scale"]), n)
        rho = draws * rates["unit"]
        if np.any(rho > 1.0):
            raise ConfigError("sampled discount rate exceeds 1; lower rates.unit",
                              key="scenario.rates.unit")
    elif rates["kind"] == "constant":
        rho = np.full(n, rates["value"])
    else:
        rho = np.array(rates["values"])
    return y, rho


def build_scenario(cfg: Config, seed: int = 0) -> Scenario:
    sc = _require_scenario(cfg)
    y, rho = _vectors(sc, seed)
    return Scenario.from_arrays(y, rho, sc.theta, sc.sigma, sc.w, sc.t)


def build_growth(cfg: Config, required: bool = True) -> GrowthModel | None:
    if cfg.growth is None:
        if required:
            raise ConfigError("this command needs a growth block (gamma, delta, S0)", key="growth")
        return None
    g = cfg.growth
    return GrowthModel(g.gamma, g.delta, g.S0)


def eta_of(cfg: Config) -> float:
    sc = _require_scenario(cfg)
    return sc.sigma if sc.eta is None else sc.eta


def build_sweep(cfg: Config, seed: int = 0, variable: str | None = None,
                grid: list[float] | None = None) -> SweepSpec:
    exp = cfg.experiment
    variable = variable or exp.variable
    if variable is None:
        raise ConfigError("sweep needs experiment.variable or --variable", key="experiment.variable")
    grid = grid if grid is not None else exp.grid
    if grid is None:
        raise ConfigError("sweep needs experiment.grid or --grid", key="experiment.grid")
    outputs = tuple(exp.outputs or ("consumption", "rho_lobby"))
    growth = build_growth(cfg, required="rho_policy" in outputs)
    try:
        return SweepSpec(build_scenario(cfg, seed), variable, tuple(grid), outputs,
                         eta=eta_of(cfg), growth=growth,
                         policy_mode=exp.policy_mode or "tolerance",
                         aggregate=exp.aggregate or 1.0)
    except ValueError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(str(err), key="experiment") from None


def build_monte_carlo(cfg: Config, seed: int = 0, replications: int | None = None
                      ) -> MonteCarloSpec:
    sc = _require_scenario(cfg)
    exp = cfg.experiment
    reps = replications or exp.replications or 1
    unit = 0.01
    if sc.groups is not None:
        arr = np.array(sc.groups, dtype=float)
        n = len(arr)
        wealth: Any = tuple(arr[:, 0])
        rates: Any = tuple(arr[:, 1])
        ascending = False
    else:
        n = sc.n_groups
        w, r = sc.wealth, sc.rates
        ascending = bool(w.get("ascending", True))
        if w["kind"] == "pareto":
            wealth = ParetoSpec(w["shape"], w["scale"])
        elif w["kind"] == "equal":
            wealth = "equal"
        else:
            wealth = tuple(w["values"])
        if r["kind"] == "gamma":
            rates = GammaSpec(r["shape"], r["scale"])
            unit = r["unit"]
        elif r["kind"] == "constant":
            rates = (r["value"],) * n
        else:
            rates = tuple(r["values"])
    return MonteCarloSpec(n, wealth, rates, reps, seed, sc.theta, sc.sigma, sc.w, sc.t,
                          wealth_ascending=ascending, rate_unit=unit, workers=exp.workers or 1)
