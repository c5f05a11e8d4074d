"""Demand and lead-time distributions with exact moments and seeded streams.

Every distribution is described by a small immutable :class:`DistributionSpec`.
Streams are drawn from a counter-based Philox generator keyed by
``(seed, stream_id, role)``, so replication ``k`` can be regenerated on any
worker without replaying replications ``0..k-1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

DEMAND = "demand"
LEAD_TIME = "lead-time"

_ROLE_KEYS = {DEMAND: 0, LEAD_TIME: 1}

# kind -> required parameter names
_KINDS: dict[str, tuple[str, ...]] = {
    "constant": ("value",),
    "normal": ("mean", "sd"),
    "gamma": ("shape", "scale"),
    "uniform": ("low", "high"),
    "discrete-uniform": ("low", "high"),
    "empirical": ("values", "probs"),
}

_ALIASES = {
    "uniform-continuous": "uniform",
    "discrete-uniform-integer": "discrete-uniform",
    "empirical-integer": "empirical",
}

_INTEGER_KINDS = ("constant", "discrete-uniform", "empirical")


class SpecError(ValueError):
    """A distribution spec is malformed; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class DistributionSpec:
    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)
    role: str = DEMAND

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", _ALIASES.get(self.kind, self.kind))
        validate(self)

    # convenience constructors
    @classmethod
    def constant(cls, value: float, role: str = DEMAND) -> DistributionSpec:
        return cls("constant", {"value": value}, role)

    @classmethod
    def normal(cls, mean: float, sd: float) -> DistributionSpec:
        return cls("normal", {"mean": mean, "sd": sd}, DEMAND)

    @classmethod
    def gamma(cls, shape: float, scale: float) -> DistributionSpec:
        return cls("gamma", {"shape": shape, "scale": scale}, DEMAND)

    @classmethod
    def uniform(cls, low: float, high: float) -> DistributionSpec:
        return cls("uniform", {"low": low, "high": high}, DEMAND)

    @classmethod
    def discrete_uniform(cls, low: int, high: int, role: str = LEAD_TIME) -> DistributionSpec:
        return cls("discrete-uniform", {"low": low, "high": high}, role)

    @classmethod
    def empirical(
        cls, values: Sequence[float], probs: Sequence[float], role: str = LEAD_TIME
    ) -> DistributionSpec:
        return cls("empirical", {"values": tuple(values), "probs": tuple(probs)}, role)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], role: str = DEMAND) -> DistributionSpec:
        """Build a spec from a config table such as ``{kind = "normal", mean = 2, sd = 1}``."""
        data = dict(data)
        try:
            kind = data.pop("kind")
        except KeyError:
            raise SpecError("kind", "missing distribution kind") from None
        role = data.pop("role", role)
        kind = _ALIASES.get(kind, kind)
        if kind == "empirical":
            data = {k: tuple(v) for k, v in data.items()}
        return cls(kind, data, role)

    def to_mapping(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        for k, v in self.params.items():
            out[k] = list(v) if isinstance(v, tuple) else v
        return out

    @property
    def upper_bound(self) -> float:
        """Largest value the distribution can produce (``inf`` when unbounded)."""
        p = self.params
        if self.kind == "constant":
            return float(p["value"])
        if self.kind in ("uniform", "discrete-uniform"):
            return float(p["high"])
        if self.kind == "empirical":
            return float(max(v for v, w in zip(p["values"], p["probs"]) if w > 0))
        return math.inf


def validate(spec: DistributionSpec) -> None:
    if spec.kind not in _KINDS:
        raise SpecError("kind", f"unknown distribution kind {spec.kind!r}")
    if spec.role not in _ROLE_KEYS:
        raise SpecError("role", f"must be {DEMAND!r} or {LEAD_TIME!r}, got {spec.role!r}")
    p = spec.params
    for name in _KINDS[spec.kind]:
        if name not in p:
            raise SpecError(name, f"missing parameter for {spec.kind} distribution")
    extra = set(p) - set(_KINDS[spec.kind])
    if extra:
        raise SpecError(sorted(extra)[0], f"unexpected parameter for {spec.kind} distribution")

    if spec.kind == "normal" and not p["sd"] >= 0:
        raise SpecError("sd", "standard deviation must be non-negative")
    if spec.kind == "gamma":
        if not p["shape"] > 0:
            raise SpecError("shape", "must be positive")
        if not p["scale"] > 0:
            raise SpecError("scale", "must be positive")
    if spec.kind in ("uniform", "discrete-uniform") and p["high"] < p["low"]:
        raise SpecError("high", "must be >= low (empty support)")
    if spec.kind == "empirical":
        values, probs = p["values"], p["probs"]
        if len(values) == 0:
            raise SpecError("values", "empty support")
        if len(values) != len(probs):
            raise SpecError("probs", "must have the same length as values")
        if any(w < 0 for w in probs):
            raise SpecError("probs", "probabilities must be non-negative")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise SpecError("probs", f"probabilities sum to {math.fsum(probs)!r}, not 1")

    if spec.role == LEAD_TIME:
        if spec.kind not in _INTEGER_KINDS:
            raise SpecError("kind", f"lead times must be integer-valued; {spec.kind} is not")
        support = _integer_support(spec)
        if any(v != int(v) for v in support):
            raise SpecError(_KINDS[spec.kind][0], "lead times must be integers")
        if min(support) < 1:
            raise SpecError(_KINDS[spec.kind][0], "lead times must be >= 1")


def _integer_support(spec: DistributionSpec) -> list[float]:
    p = spec.params
    if spec.kind == "constant":
        return [p["value"]]
    if spec.kind == "discrete-uniform":
        return [p["low"], p["high"]]
    return [v for v, w in zip(p["values"], p["probs"]) if w > 0]


def moments(spec: DistributionSpec) -> tuple[float, float]:
    """Exact ``(mean, variance)`` of the distribution."""
    p = spec.params
    kind = spec.kind
    if kind == "constant":
        return float(p["value"]), 0.0
    if kind == "normal":
        return float(p["mean"]), float(p["sd"]) ** 2
    if kind == "gamma":
        k, theta = float(p["shape"]), float(p["scale"])
        return k * theta, k * theta**2
    if kind == "uniform":
        a, b = float(p["low"]), float(p["high"])
        return (a + b) / 2, (b - a) ** 2 / 12
    if kind == "discrete-uniform":
        a, b = int(p["low"]), int(p["high"])
        width = b - a + 1
        return (a + b) / 2, (width**2 - 1) / 12
    values = np.asarray(p["values"], dtype=float)
    probs = np.asarray(p["probs"], dtype=float)
    mean = float(np.dot(probs, values))
    return mean, float(np.dot(probs, (values - mean) ** 2))


@dataclass(frozen=True)
class StreamHandle:
    spec: DistributionSpec
    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = (int(self.stream_id), _ROLE_KEYS[self.spec.role])
        ss = np.random.SeedSequence(int(self.seed), spawn_key=key)
        return np.random.Generator(np.random.Philox(ss))


def sample_sequence(handle: StreamHandle, length: int) -> np.ndarray:
    """Draw ``length`` iid values; lead-time streams come back as ``int64``."""
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    return draw(handle.spec, handle.generator(), length)


def draw(spec: DistributionSpec, rng: np.random.Generator, length: int) -> np.ndarray:
    p = spec.params
    kind = spec.kind
    if kind == "constant":
        out = np.full(length, p["value"], dtype=float)
    elif kind == "normal":
        out = rng.normal(p["mean"], p["sd"], size=length)
    elif kind == "gamma":
        out = rng.gamma(p["shape"], p["scale"], size=length)
    elif kind == "uniform":
        out = rng.uniform(p["low"], p["high"], size=length)
    elif kind == "discrete-uniform":
        out = rng.integers(int(p["low"]), int(p["high"]), size=length, endpoint=True)
    else:
        values = np.asarray(p["values"], dtype=float)
        cdf = np.cumsum(np.asarray(p["probs"], dtype=float))
        cdf[-1] = 1.0
        idx = np.searchsorted(cdf, rng.random(length), side="right")
        out = values[idx]
    if spec.role == LEAD_TIME:
        return np.asarray(out, dtype=np.int64)
    return np.asarray(out, dtype=float)


def default_demand() -> DistributionSpec:
    """Normal demand with mean 2 and sd 1, i.e. coefficient of variation 0.5."""
    return DistributionSpec.normal(2.0, 1.0)


def default_lead_time() -> DistributionSpec:
    """Lead time on {1, 3, 7} with mean 3 and variance 4."""
    return DistributionSpec.empirical((1, 3, 7), (1 / 3, 1 / 2, 1 / 6))


def lead_time_from_moments(mean: float, variance: float) -> DistributionSpec:
    """Integer lead-time distribution (support >= 1) with the given mean and variance.

    Mixes the tightest two-point law on ``{floor(mean), ceil(mean)}`` with a
    wide law on ``{1, K}``; both have the requested mean, so the mixture weight
    only moves the variance.
    """
    if mean < 1:
        raise SpecError("mean", "lead-time mean must be >= 1")
    if variance < 0:
        raise SpecError("variance", "must be non-negative")
    lo = math.floor(mean)
    frac = mean - lo
    base_var = frac * (1 - frac)
    if variance < base_var - 1e-12:
        raise SpecError(
            "variance", f"no integer distribution with mean {mean} has variance below {base_var}"
        )
    if frac == 0 and variance == 0:
        return DistributionSpec.constant(int(lo), role=LEAD_TIME)
    if mean == 1:
        raise SpecError("variance", "a lead time with mean 1 must be constant")

    weights: dict[int, float] = {}

    def add(v: int, w: float) -> None:
        if w > 0:
            weights[v] = weights.get(v, 0.0) + w

    top = math.ceil(mean + variance / (mean - 1))
    wide_var = (mean - 1) * (top - mean)
    mix = 1.0 if wide_var == base_var else (variance - base_var) / (wide_var - base_var)
    mix = min(max(mix, 0.0), 1.0)
    p_top = (mean - 1) / (top - 1)
    add(1, mix * (1 - p_top))
    add(top, mix * p_top)
    add(lo, (1 - mix) * (1 - frac))
    add(lo + 1, (1 - mix) * frac)
    values = sorted(weights)
    probs = [weights[v] for v in values]
    total = math.fsum(probs)
    probs = [w / total for w in probs]
    return DistributionSpec.empirical(values, probs)
