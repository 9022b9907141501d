"""
Pareto and Gamma densities, index-based group weights, and seeded sampling.

Random streams
--------------
:class:`SeededSampler` draws raw 64-bit words from the Philox4x64-10
counter-based generator keyed directly by the seed (counter starting at
zero). Words are consumed strictly in order and converted to doubles as
``((word >> 11) + 0.5) * 2**-53``, which lies in the open interval (0, 1).
All later transforms use the ``math`` module element by element, so a given
seed yields the same stream wherever the C library rounds ``log``/``pow``
correctly.

* Normal draws: Marsaglia's polar method (two uniforms per attempt, both
  outputs of an accepted pair are used in order).
* Gamma(alpha >= 1): Marsaglia-Tsang squeeze on the cube of a normal, one
  normal then one uniform per attempt.
* Gamma(alpha < 1): draw Gamma(alpha + 1), then multiply by ``U**(1/alpha)``.
* Pareto: inverse CDF ``k * U**(-1/alpha)``.

Child streams for independent replications use
``child_seed = blake2b(le64(seed) || le64(index), digest_size=8)`` read as a
little-endian unsigned integer.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ParetoSpec",
    "GammaSpec",
    "SeededSampler",
    "pareto_pdf",
    "gamma_pdf",
    "density",
    "index_weights",
    "pareto_from_uniform",
    "sample",
    "derive_seed",
]

_U64 = (1 << 64) - 1
_TO_UNIT = 2.0 ** -53
_BLOCK = 1024


@dataclass(frozen=True)
class ParetoSpec:
    shape: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError(f"Pareto shape and scale must be positive, got {self}")

    @property
    def mean(self) -> float:
        if self.shape <= 1:
            return math.inf
        return self.shape * self.scale / (self.shape - 1)

    @property
    def variance(self) -> float:
        a, k = self.shape, self.scale
        if a <= 2:
            return math.inf
        return k * k * a / ((a - 1) ** 2 * (a - 2))


@dataclass(frozen=True)
class GammaSpec:
    shape: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError(f"Gamma shape and scale must be positive, got {self}")

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale ** 2


Spec = Union[ParetoSpec, GammaSpec]


def pareto_pdf(spec: ParetoSpec, x):
    a, k = spec.shape, spec.scale
    arr = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(arr >= k, a * k ** a * np.abs(arr) ** (-a - 1.0), 0.0)
    return float(out) if out.ndim == 0 else out


def gamma_pdf(spec: GammaSpec, x):
    a, b = spec.shape, spec.scale
    arr = np.asarray(x, dtype=float)
    pos = arr > 0
    safe = np.where(pos, arr, 1.0)
    if a < 171:
        vals = b ** (-a) * safe ** (a - 1.0) * np.exp(-safe / b) / math.gamma(a)
    else:
        vals = np.exp(-a * math.log(b) + (a - 1.0) * np.log(safe) - safe / b - math.lgamma(a))
    out = np.where(pos, vals, 0.0)
    return float(out) if out.ndim == 0 else out


def density(spec: Spec, x):
    if isinstance(spec, ParetoSpec):
        return pareto_pdf(spec, x)
    if isinstance(spec, GammaSpec):
        return gamma_pdf(spec, x)
    raise TypeError(f"unsupported distribution spec {spec!r}")


def index_weights(spec: Spec, n: int, sorted_ascending: bool = False) -> np.ndarray:
    """Density evaluated at the group indices 1..n, normalized to sum to one."""
    if n < 1:
        raise ValueError(f"need at least one group, got {n}")
    f = np.atleast_1d(density(spec, np.arange(1, n + 1, dtype=float)))
    total = math.fsum(f)
    if not total > 0:
        raise ValueError(f"density of {spec!r} is zero at every index 1..{n}")
    y = f / total
    if sorted_ascending:
        y = np.sort(y, kind="stable")
    return y


def derive_seed(seed: int, index: int) -> int:
    payload = (int(seed) & _U64).to_bytes(8, "little") + (int(index) & _U64).to_bytes(8, "little")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


class SeededSampler:
    """Single-owner stream of uniforms and normals. Not safe to share across threads."""

    def __init__(self, seed: int):
        if not 0 <= int(seed) <= _U64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
        self.seed = int(seed)
        self.counter = 0
        self._bits = np.random.Philox(key=self.seed)
        self._buf: list[int] = []
        self._pos = 0
        self._spare: float | None = None

    def __repr__(self):
        return f"SeededSampler(seed={self.seed}, counter={self.counter})"

    def child(self, index: int) -> "SeededSampler":
        return SeededSampler(derive_seed(self.seed, index))

    def raw(self) -> int:
        if self._pos == len(self._buf):
            self._buf = self._bits.random_raw(_BLOCK).tolist()
            self._pos = 0
        word = self._buf[self._pos]
        self._pos += 1
        self.counter += 1
        return word

    def uniform(self) -> float:
        return ((self.raw() >> 11) + 0.5) * _TO_UNIT

    def normal(self) -> float:
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        while True:
            u = 2.0 * self.uniform() - 1.0
            v = 2.0 * self.uniform() - 1.0
            s = u * u + v * v
            if 0.0 < s < 1.0:
                break
        m = math.sqrt(-2.0 * math.log(s) / s)
        self._spare = v * m
        return u * m

    def standard_gamma(self, shape: float) -> float:
        if shape < 1.0:
            g = self.standard_gamma(shape + 1.0)
            return g * math.pow(self.uniform(), 1.0 / shape)
        d = shape - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            z = self.normal()
            v = 1.0 + c * z
            if v <= 0.0:
                continue
            v = v * v * v
            u = self.uniform()
            z2 = z * z
            if u < 1.0 - 0.0331 * z2 * z2:
                return d * v
            if math.log(u) < 0.5 * z2 + d * (1.0 - v + math.log(v)):
                return d * v


def pareto_from_uniform(spec: ParetoSpec, u: float) -> float:
    return spec.scale * math.pow(u, -1.0 / spec.shape)


def sample(sampler: SeededSampler, spec: Spec, count: int) -> np.ndarray:
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if isinstance(spec, ParetoSpec):
        draws = [pareto_from_uniform(spec, sampler.uniform()) for _ in range(count)]
    elif isinstance(spec, GammaSpec):
        draws = [spec.scale * sampler.standard_gamma(spec.shape) for _ in range(count)]
    else:
        raise TypeError(f"unsupported distribution spec {spec!r}")
    return np.array(draws, dtype=float)
