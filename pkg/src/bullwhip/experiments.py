"""Published tables, figure grids and simulation configs as plain data.

Everything here returns rows; :mod:`bullwhip.cli` only parses arguments and
writes those rows out.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from decimal import ROUND_DOWN, Decimal
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .analytics import ModelParams, bullwhip_measure, forecast_error_variance, order_variance
from .distributions import (
    DEMAND,
    LEAD_TIME,
    DistributionSpec,
    default_demand,
    default_lead_time,
    lead_time_from_moments,
    moments,
)
from .forecasting import DETERMINISTIC, KIM_MA, LtdStrategy
from .simulator import SimulationConfig

TABLE_N = {1: 5, 2: 10, 3: 20, 4: 30}
TABLE_M = (1, 3, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50)
TABLE_MOMENTS = dict(mu_L=3.0, sigma_L=2.0, cv_D=0.5)

_FIVE = Decimal("0.00001")


def fmt5(x: float) -> str:
    """Five decimals, truncated rather than rounded, as the published tables print them.

    The value is first rounded to 9 places so that binary noise such as
    ``0.11519999999`` does not truncate to ``0.11519``.
    """
    if math.isnan(x):
        return "nan"
    return str(Decimal(repr(round(float(x), 9))).quantize(_FIVE, rounding=ROUND_DOWN))


def table_rows(table_id: int) -> list[tuple[int, float, float, float]]:
    """Rows ``(m, BM1, BM2, BM)`` of published table ``table_id`` (1..4)."""
    if table_id not in TABLE_N:
        raise ValueError(f"table id must be one of {sorted(TABLE_N)}, got {table_id}")
    n = TABLE_N[table_id]
    rows = []
    for m in TABLE_M:
        d = bullwhip_measure(ModelParams.from_cv(n, m, **TABLE_MOMENTS))
        rows.append((m, d.bm1, d.bm2, d.bm))
    return rows


def table_csv(table_id: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "BM1", "BM2", "BM"])
    for m, bm1, bm2, bm in table_rows(table_id):
        w.writerow([m, fmt5(bm1), fmt5(bm2), fmt5(bm)])
    return buf.getvalue()


def analytic_summary(p: ModelParams) -> dict[str, float]:
    d = bullwhip_measure(p)
    return {
        "BM1": d.bm1,
        "BM2": d.bm2,
        "BM3": d.bm3,
        "BM": d.bm,
        "sigma_hat_sq": forecast_error_variance(p),
        "var_q": order_variance(p),
    }


# sweep axes ---------------------------------------------------------------

AXIS_NAMES = ("m", "n", "muL", "sigL")
_INTEGER_AXES = ("m", "n")


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    steps: int

    def __post_init__(self) -> None:
        if self.name not in AXIS_NAMES:
            raise ValueError(f"unknown sweep axis {self.name!r}; choose from {AXIS_NAMES}")
        if self.steps < 1:
            raise ValueError(f"axis {self.name}: steps must be >= 1")
        if self.hi < self.lo:
            raise ValueError(f"axis {self.name}: max must be >= min")

    @classmethod
    def parse(cls, text: str) -> Axis:
        """``name:min:max:steps``, e.g. ``m:20:40:21``."""
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(f"axis {text!r} is not of the form name:min:max:steps")
        name, lo, hi, steps = parts
        return cls(name, float(lo), float(hi), int(steps))

    def values(self) -> list[float]:
        pts = np.linspace(self.lo, self.hi, self.steps) if self.steps > 1 else np.array([self.lo])
        if self.name in _INTEGER_AXES:
            ints = sorted({int(round(v)) for v in pts})
            if any(v < 1 for v in ints):
                raise ValueError(f"axis {self.name}: values must be >= 1")
            return ints
        return [round(float(v), 12) for v in pts]


# Fixed parameters and axes of the five published surface plots.
FIGURE_PRESETS: dict[str, dict[str, Any]] = {
    "fig1": {"fixed": {"n": 10, "cvD": 0.5, "muL": 3.0},
             "axes": [Axis("m", 20, 40, 21), Axis("sigL", 0.5, 6, 12)]},
    "fig2": {"fixed": {"n": 10, "cvD": 0.5, "sigL": 3.0},
             "axes": [Axis("m", 5, 40, 36), Axis("muL", 1, 10, 10)]},
    "fig3": {"fixed": {"m": 10, "cvD": 0.5, "muL": 3.0},
             "axes": [Axis("n", 20, 40, 21), Axis("sigL", 0.5, 6, 12)]},
    "fig4": {"fixed": {"cvD": 0.5, "muL": 3.0, "sigL": 3.0},
             "axes": [Axis("m", 20, 40, 21), Axis("n", 20, 40, 21)]},
    "fig5": {"fixed": {"m": 10, "cvD": 0.5, "sigL": 3.0},
             "axes": [Axis("n", 20, 40, 21), Axis("muL", 1, 10, 10)]},
}


def params_from(values: Mapping[str, float]) -> ModelParams:
    """Model parameters from sweep-style names (``n m muL sigL muD sigD cvD``)."""
    missing = [k for k in ("n", "m", "muL", "sigL") if values.get(k) is None]
    if missing:
        raise ValueError(f"missing parameter(s): {', '.join(missing)}")
    mu_D = float(values.get("muD") or 2.0)
    if values.get("sigD") is not None:
        sd = float(values["sigD"])
    else:
        cv = values.get("cvD")
        sd = (0.5 if cv is None else float(cv)) * mu_D
    return ModelParams(
        mu_D=mu_D,
        var_D=sd**2,
        mu_L=float(values["muL"]),
        var_L=float(values["sigL"]) ** 2,
        n=int(values["n"]),
        m=int(values["m"]),
    )


def sweep(axes: Sequence[Axis], fixed: Mapping[str, float]) -> list[dict[str, float]]:
    """Evaluate the bullwhip decomposition over the product grid of one or two axes."""
    if not 1 <= len(axes) <= 2:
        raise ValueError(f"a sweep takes one or two axes, got {len(axes)}")
    if len({a.name for a in axes}) != len(axes):
        raise ValueError("sweep axes must be distinct")
    grids = [a.values() for a in axes]
    rows = []
    for v1 in grids[0]:
        for v2 in grids[1] if len(grids) > 1 else [None]:
            point = dict(fixed)
            point[axes[0].name] = v1
            if v2 is not None:
                point[axes[1].name] = v2
            d = bullwhip_measure(params_from(point))
            row = {axes[0].name: v1}
            if v2 is not None:
                row[axes[1].name] = v2
            row.update(BM=d.bm, BM1=d.bm1, BM2=d.bm2, BM3=d.bm3)
            rows.append(row)
    return rows


def rows_to_csv(rows: Iterable[Mapping[str, Any]], out) -> None:
    rows = list(rows)
    w = csv.writer(out, lineterminator="\n")
    if not rows:
        return
    header = list(rows[0])
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(r[k]) for k in header])


def _cell(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# simulation configs ---------------------------------------------------------

_SIM_KEYS = {
    "n", "m", "z", "horizon", "warmup", "replications", "seed", "bounded", "M",
    "track_inventory", "strategy", "p", "lead_time_fixed", "demand", "lead_time",
    "muD", "sigD", "cvD", "muL", "sigL",
}


def load_config_file(path) -> dict[str, Any]:
    """Read a TOML experiment file, flattening ``[model]`` and ``[simulation]`` tables."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    flat: dict[str, Any] = {}
    for key, value in raw.items():
        if key in ("model", "simulation") and isinstance(value, dict):
            flat.update(value)
        elif key == "strategy" and isinstance(value, dict):
            flat["strategy"] = value.get("name", "product-ma")
            if "p" in value:
                flat["p"] = value["p"]
            if "lead_time" in value:
                flat["lead_time_fixed"] = value["lead_time"]
        else:
            flat[key] = value
    unknown = sorted(set(flat) - _SIM_KEYS)
    if unknown:
        raise KeyError(f"unknown config key {unknown[0]!r}")
    return flat


def build_simulation_config(values: Mapping[str, Any]) -> SimulationConfig:
    """Assemble a :class:`SimulationConfig` from flattened config values.

    ``demand`` and ``lead_time`` may be distribution tables; the shorthand keys
    ``muD sigD cvD`` (normal demand) and ``muL sigL`` (lead time with those
    moments) override them when present.
    """
    v = dict(values)
    demand = v.get("demand")
    demand = DistributionSpec.from_mapping(demand, DEMAND) if isinstance(demand, Mapping) else (
        demand or default_demand()
    )
    if any(v.get(k) is not None for k in ("muD", "sigD", "cvD")):
        mu, var = moments(demand)
        mu = float(v["muD"]) if v.get("muD") is not None else mu
        if v.get("sigD") is not None:
            sd = float(v["sigD"])
        elif v.get("cvD") is not None:
            sd = float(v["cvD"]) * mu
        else:
            sd = math.sqrt(var)
        demand = DistributionSpec.normal(mu, sd)

    lead = v.get("lead_time")
    lead = DistributionSpec.from_mapping(lead, LEAD_TIME) if isinstance(lead, Mapping) else (
        lead or default_lead_time()
    )
    if v.get("muL") is not None or v.get("sigL") is not None:
        mu, var = moments(lead)
        mu = float(v["muL"]) if v.get("muL") is not None else mu
        var = float(v["sigL"]) ** 2 if v.get("sigL") is not None else var
        lead = lead_time_from_moments(mu, var)

    n = int(v.get("n", 5))
    m = int(v.get("m", 5))
    name = v.get("strategy") or "product-ma"
    p = v.get("p")
    fixed = v.get("lead_time_fixed")
    name = {"kim": KIM_MA, "hindsight-oracle": "hindsight"}.get(name, name)
    if name == KIM_MA and p is None:
        p = m
    if name == DETERMINISTIC and fixed is None:
        mu_L, _ = moments(lead)
        if mu_L != int(mu_L):
            raise ValueError("deterministic strategy needs lead_time_fixed when mean lead time is fractional")
        fixed = int(mu_L)
    strategy = LtdStrategy(name, p=None if p is None else int(p),
                           lead_time=None if fixed is None else int(fixed))

    return SimulationConfig(
        demand=demand,
        lead_time=lead,
        strategy=strategy,
        n=n,
        m=m,
        z=float(v.get("z", 0.0)),
        horizon=int(v.get("horizon", 100_000)),
        warmup=None if v.get("warmup") is None else int(v["warmup"]),
        replications=int(v.get("replications", 8)),
        seed=int(v.get("seed", 0)),
        bounded=bool(v.get("bounded", False)),
        M=None if v.get("M") is None else int(v["M"]),
        track_inventory=bool(v.get("track_inventory", False)),
    )
