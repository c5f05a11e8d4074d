"""Monte Carlo simulation of a retailer running an order-up-to policy.

Two engines share one set of conventions:

* :func:`simulate_replication` builds whole order sequences with numpy and is
  what :func:`run` uses for long horizons;
* :class:`Retailer` steps one period at a time and is the reference used for
  traces of small examples and for cross-checking the vectorised engine.

Period ``t`` runs as: receive arrivals, observe ``D[t-1]``, update forecasts,
set ``S[t]`` and order ``q[t] = S[t] - S[t-1] + D[t-1]``, then demand ``D[t]``
accrues. An order placed in period ``t`` with lead time ``L[t]`` is available to
serve demand from period ``t + L[t] - 1``, so the stock it must cover is exactly
``D[t] + ... + D[t + L[t] - 1]``.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np
from scipy import stats

from . import analytics
from .distributions import (
    DEMAND,
    LEAD_TIME,
    DistributionSpec,
    StreamHandle,
    default_demand,
    default_lead_time,
    moments,
    sample_sequence,
)
from .forecasting import (
    DETERMINISTIC,
    HINDSIGHT,
    KIM_MA,
    PRODUCT_MA,
    ForecastState,
    LtdStrategy,
    lead_time_forecast,
    ltd_forecast_hindsight,
    ltd_forecast_kim,
    realized_ltd,
)


class ConfigError(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class NotWarmedUpError(RuntimeError):
    pass


@dataclass
class SimulationConfig:
    demand: DistributionSpec = field(default_factory=default_demand)
    lead_time: DistributionSpec = field(default_factory=default_lead_time)
    strategy: LtdStrategy = field(default_factory=LtdStrategy)
    n: int = 5
    m: int = 5
    z: float = 0.0
    horizon: int = 100_000  # total periods per replication, warmup included
    warmup: int | None = None
    replications: int = 8
    seed: int = 0
    bounded: bool = False
    M: int | None = None
    track_inventory: bool = False

    @property
    def lead_time_bound(self) -> int:
        """Declared bound M, falling back to the largest value of the lead-time law."""
        if self.M is not None:
            return int(self.M)
        return int(self.lead_time.upper_bound)

    @property
    def lag(self) -> int:
        return self.lead_time_bound if self.bounded else 0

    def first_forecast_period(self) -> int:
        """First period at which the lead-time-demand forecast is defined."""
        s = self.strategy
        if s.name == PRODUCT_MA:
            return max(self.n, self.m + self.lag)
        if s.name == KIM_MA:
            # orders 0..p-1 have all completed by period p - 1 + Lmax
            return int(s.p) - 1 + self.lead_time_bound
        return self.n

    def min_warmup(self) -> int:
        return self.first_forecast_period() + 1 + self.lead_time_bound

    def effective_warmup(self) -> int:
        if self.warmup is not None:
            return int(self.warmup)
        mu_L, _ = moments(self.lead_time)
        base = max(self.n, self.m + self.lag) + 10 * math.ceil(mu_L)
        return max(base, self.min_warmup())

    def validate(self) -> None:
        problems = []
        if self.demand.role != DEMAND:
            problems.append("demand: spec must have the demand role")
        if self.lead_time.role != LEAD_TIME:
            problems.append("lead_time: spec must have the lead-time role")
        for name in ("n", "m"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                problems.append(f"{name}: must be an integer >= 1, got {v}")
        if self.replications < 1:
            problems.append(f"replications: must be >= 1, got {self.replications}")
        if self.M is not None and self.M < self.lead_time.upper_bound:
            problems.append(
                f"M: bound {self.M} is below the largest lead time {self.lead_time.upper_bound:g}"
            )
        if not problems:
            w = self.effective_warmup()
            if w < self.min_warmup():
                problems.append(f"warmup: must be >= {self.min_warmup()}, got {w}")
            if self.horizon <= w + 1:
                problems.append(f"horizon: must exceed warmup + 1 = {w + 1}, got {self.horizon}")
        if problems:
            raise ConfigError(problems)

    def sigma_hat(self) -> float:
        """Standard deviation of the lead-time-demand forecast error, from its closed form."""
        mu_D, var_D = moments(self.demand)
        mu_L, var_L = moments(self.lead_time)
        return math.sqrt(analytics._forecast_error_variance(mu_D, var_D, mu_L, var_L, self.n, self.m))

    def model_params(self) -> analytics.ModelParams:
        mu_D, var_D = moments(self.demand)
        mu_L, var_L = moments(self.lead_time)
        return analytics.ModelParams(mu_D, var_D, mu_L, var_L, self.n, self.m)


@dataclass
class ReplicationTrace:
    """Per-period arrays of one replication for periods ``start .. horizon - 1``."""

    start: int
    warmup: int
    demand: np.ndarray
    lead_time: np.ndarray
    forecast_ltd: np.ndarray
    order_up_to: np.ndarray
    order: np.ndarray
    realized_ltd: np.ndarray
    arrivals: np.ndarray
    net_inventory: np.ndarray | None

    @property
    def periods(self) -> np.ndarray:
        return np.arange(self.start, self.start + self.order.size)

    def measured(self, name: str) -> np.ndarray:
        return getattr(self, name)[self.warmup - self.start :]


def _rolling_mean(x: np.ndarray, k: int) -> np.ndarray:
    """``out[j] = mean(x[j : j + k])``."""
    return np.convolve(x, np.ones(k), mode="valid") / k


def simulate_replication(config: SimulationConfig, replication: int = 0) -> ReplicationTrace:
    T = int(config.horizon)
    W = config.effective_warmup()
    Lmax = int(config.lead_time.upper_bound)
    n, m, g = config.n, config.m, config.lag
    strategy = config.strategy

    D = sample_sequence(StreamHandle(config.demand, config.seed, replication), T + Lmax)
    L = sample_sequence(StreamHandle(config.lead_time, config.seed, replication), T)

    base = config.first_forecast_period()
    t = np.arange(base, T)

    def demand_avg() -> np.ndarray:
        return _rolling_mean(D[:T], n)[t - n]

    if strategy.name == PRODUCT_MA:
        F = _rolling_mean(L.astype(float), m)[t - g - m] * demand_avg()
    elif strategy.name == HINDSIGHT:
        F = L[t] * demand_avg()
    elif strategy.name == DETERMINISTIC:
        F = strategy.lead_time * demand_avg()
    else:
        F = _kim_forecasts(D, L, t, int(strategy.p))

    csum = np.concatenate(([0.0], np.cumsum(D)))
    s = np.arange(T)
    ltd = csum[s + L] - csum[s]

    # first order goes out at base + 1, the first period with S[t-1] defined
    q = (F[1:] - F[:-1]) + D[base : T - 1]
    S = F + config.z * config.sigma_hat()
    start = base + 1

    arrivals = np.zeros(T)
    order_periods = np.arange(start, T)
    due = order_periods + L[start:] - 1
    in_horizon = due < T
    np.add.at(arrivals, due[in_horizon], q[in_horizon])

    net = None
    if config.track_inventory:
        net0 = S[0] - D[base]
        net = net0 + np.cumsum(arrivals[start:] - D[start:T])

    return ReplicationTrace(
        start=start,
        warmup=W,
        demand=D[start:T],
        lead_time=L[start:],
        forecast_ltd=F[1:],
        order_up_to=S[1:],
        order=q,
        realized_ltd=ltd[start:],
        arrivals=arrivals[start:],
        net_inventory=net,
    )


def _kim_forecasts(D: np.ndarray, L: np.ndarray, t: np.ndarray, p: int) -> np.ndarray:
    """Average of the ``p`` lead-time demands completed most recently before each period.

    Order ``s`` is complete at period ``s + L[s]``, once ``D[s + L[s] - 1]`` has
    been observed; completions are ranked by completion period, then by ``s``.
    """
    T = L.size
    csum = np.concatenate(([0.0], np.cumsum(D)))
    s = np.arange(T)
    done = s + L
    ltd = csum[done] - csum[s]
    order = np.lexsort((s, done))
    done_sorted = done[order]
    prefix = np.concatenate(([0.0], np.cumsum(ltd[order])))
    count = np.searchsorted(done_sorted, t, side="right")
    if np.any(count < p):
        raise NotWarmedUpError("fewer than p lead-time demands completed")
    return (prefix[count] - prefix[count - p]) / p


@dataclass(frozen=True)
class ReplicationSummary:
    replication: int
    periods: int
    var_q: float
    var_d: float
    bm: float
    mean_q: float
    sigma_hat_sq: float
    var_q_first_half: float
    var_q_second_half: float
    service_level: float | None


def empirical_forecast_error_variance(realized: np.ndarray, forecast: np.ndarray) -> float:
    """Sample variance of realized minus forecast lead-time demand."""
    err = np.asarray(realized, dtype=float) - np.asarray(forecast, dtype=float)
    if err.size < 2:
        raise ValueError("need at least two periods to estimate a variance")
    return float(np.var(err, ddof=1))


def service_level(trace: ReplicationTrace) -> float:
    """Fraction of measured periods whose demand was met entirely from stock on hand."""
    if trace.net_inventory is None:
        raise ValueError("service level needs inventory tracking (track_inventory=True)")
    return float(np.mean(trace.measured("net_inventory") >= 0))


def _var(x: np.ndarray) -> float:
    return float(np.var(x, ddof=1))


def summarize(trace: ReplicationTrace, replication: int = 0) -> ReplicationSummary:
    q = trace.measured("order")
    d = trace.measured("demand")
    var_q, var_d = _var(q), _var(d)
    half = q.size // 2
    return ReplicationSummary(
        replication=replication,
        periods=int(q.size),
        var_q=var_q,
        var_d=var_d,
        bm=var_q / var_d if var_d > 0 else math.nan,
        mean_q=float(np.mean(q)),
        sigma_hat_sq=empirical_forecast_error_variance(
            trace.measured("realized_ltd"), trace.measured("forecast_ltd")
        ),
        var_q_first_half=_var(q[:half]),
        var_q_second_half=_var(q[half:]),
        service_level=service_level(trace) if trace.net_inventory is not None else None,
    )


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(values))
    if values.size < 2:
        return mean, math.nan
    return mean, float(np.std(values, ddof=1) / math.sqrt(values.size))


@dataclass
class SimulationReport:
    config: SimulationConfig
    replications: list[ReplicationSummary]
    var_q: float
    var_q_se: float
    var_d: float
    bm: float
    bm_se: float
    bm_ci: tuple[float, float]
    mean_q: float
    mean_q_se: float
    sigma_hat_sq: float
    sigma_hat_sq_se: float
    analytic_bm: float | None = None
    analytic_var_q: float | None = None
    analytic_sigma_hat_sq: float | None = None
    service_level: float | None = None

    @property
    def bm_defined(self) -> bool:
        return not math.isnan(self.bm)


def aggregate(config: SimulationConfig, summaries: list[ReplicationSummary]) -> SimulationReport:
    """Combine replications; every statistic is an order-independent mean over them."""
    summaries = sorted(summaries, key=lambda r: r.replication)
    var_q, var_q_se = _mean_se(np.array([r.var_q for r in summaries]))
    var_d = float(np.mean([r.var_d for r in summaries]))
    bm = var_q / var_d if var_d > 0 else math.nan
    ratios = np.array([r.bm for r in summaries])
    if math.isnan(bm) or ratios.size < 2:
        bm_se = math.nan
    else:
        bm_se = float(np.std(ratios, ddof=1) / math.sqrt(ratios.size))
    if math.isnan(bm_se):
        ci = (math.nan, math.nan)
    else:
        half = stats.t.ppf(0.975, ratios.size - 1) * bm_se
        ci = (float(bm - half), float(bm + half))
    mean_q, mean_q_se = _mean_se(np.array([r.mean_q for r in summaries]))
    sig, sig_se = _mean_se(np.array([r.sigma_hat_sq for r in summaries]))

    report = SimulationReport(
        config=config,
        replications=summaries,
        var_q=var_q,
        var_q_se=var_q_se,
        var_d=var_d,
        bm=bm,
        bm_se=bm_se,
        bm_ci=ci,
        mean_q=mean_q,
        mean_q_se=mean_q_se,
        sigma_hat_sq=sig,
        sigma_hat_sq_se=sig_se,
    )
    if config.strategy.name == PRODUCT_MA and moments(config.demand)[1] > 0:
        p = config.model_params()
        report.analytic_bm = analytics.bullwhip_measure(p).bm
        report.analytic_var_q = analytics.order_variance(p)
        report.analytic_sigma_hat_sq = analytics.forecast_error_variance(p)
    if config.track_inventory:
        report.service_level = float(np.mean([r.service_level for r in summaries]))
    return report


def run(config: SimulationConfig, workers: int | None = None) -> SimulationReport:
    """Run all replications and aggregate; results do not depend on ``workers``."""
    config.validate()

    def one(rep: int) -> ReplicationSummary:
        return summarize(simulate_replication(config, rep), rep)

    reps = range(config.replications)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(one, reps))
    else:
        summaries = [one(r) for r in reps]
    return aggregate(config, summaries)


TRACE_COLUMNS = ("period", "demand", "lead_time", "forecast_ltd", "order_up_to", "order", "arrivals")


def write_trace(trace: ReplicationTrace, out: IO[str], limit: int | None = None) -> None:
    """Write the measured periods of a replication as CSV."""
    writer = csv.writer(out, lineterminator="\n")
    cols = list(TRACE_COLUMNS)
    if trace.net_inventory is not None:
        cols.append("net_inventory")
    writer.writerow(cols)
    k = trace.warmup - trace.start
    arrays = [trace.periods[k:]] + [trace.measured(c) for c in cols[1:]]
    rows = zip(*arrays)
    for i, row in enumerate(rows):
        if limit is not None and i >= limit:
            break
        writer.writerow([int(row[0]), *(_fmt(v) for v in row[1:])])


def _fmt(v) -> str:
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    return repr(float(v))


class Retailer:
    """Period-by-period retailer: forecast windows, order-up-to level, pipeline, stock.

    Call :meth:`step` once per period with the previous period's demand and the
    lead time of the order about to be placed. It returns ``q[t]``, or ``None``
    while the windows are still filling or before ``first_period``.
    """

    def __init__(
        self,
        n: int,
        m: int,
        strategy: LtdStrategy | None = None,
        *,
        z: float = 0.0,
        sigma_hat: float = 0.0,
        bounded: bool = False,
        M: int | None = None,
        first_period: int = 0,
    ):
        self.first_period = first_period
        self.strategy = strategy or LtdStrategy()
        self.forecast = ForecastState(n=n, m=m, bounded=bounded, M=M)
        self.z = z
        self.sigma_hat = sigma_hat
        self.t = 0
        self.pipeline: dict[int, float] = {}
        self.net_inventory: float | None = None
        self.S_prev: float | None = None
        self.F_prev: float | None = None
        self.history: list[dict] = []
        self._demands: list[float] = []
        self._lead_times: list[int] = []
        self._completed: list[float] = []
        self._completing: dict[int, list[int]] = {}

    @classmethod
    def from_config(cls, config: SimulationConfig) -> Retailer:
        return cls(
            config.n,
            config.m,
            config.strategy,
            z=config.z,
            sigma_hat=config.sigma_hat(),
            bounded=config.bounded,
            M=config.lead_time_bound if config.bounded else None,
            first_period=config.first_forecast_period(),
        )

    @property
    def on_hand(self) -> float:
        return max(self.net_inventory or 0.0, 0.0)

    @property
    def backlog(self) -> float:
        return max(-(self.net_inventory or 0.0), 0.0)

    def _ltd_forecast(self, lead_time: int) -> float | None:
        name = self.strategy.name
        fs = self.forecast
        if name == KIM_MA:
            p = int(self.strategy.p)
            if len(self._completed) < p:
                return None
            return ltd_forecast_kim(self._completed[-p:][::-1], p)
        if not fs.demand_ready:
            return None
        if name == PRODUCT_MA:
            if not fs.lead_time_ready:
                return None
            return lead_time_forecast(fs) * fs.demand_forecast()
        if name == HINDSIGHT:
            return ltd_forecast_hindsight(fs.demand_forecast(), lead_time)
        return self.strategy.lead_time * fs.demand_forecast()

    def step(self, demand_prev: float | None, lead_time: int, strict: bool = False) -> float | None:
        t = self.t
        record = {"period": t, "demand_prev": demand_prev, "arrivals": 0.0}
        if demand_prev is not None:
            self._demands.append(float(demand_prev))
            if self.net_inventory is not None:
                self.net_inventory -= demand_prev
                self.history[-1]["net_inventory"] = self.net_inventory
            self.forecast.observe_demand(demand_prev)
        if self.net_inventory is not None:
            arrived = self.pipeline.pop(t, 0.0)
            self.net_inventory += arrived
            record["arrivals"] = arrived
        if t >= 1:
            self.forecast.observe_lead_time(self._lead_times[t - 1])
        for s in self._completing.pop(t, ()):
            self._completed.append(realized_ltd(self._demands, s, self._lead_times[s]))
        self._lead_times.append(int(lead_time))
        self._completing.setdefault(t + int(lead_time), []).append(t)

        F = self._ltd_forecast(lead_time) if t >= self.first_period else None
        q = None
        if F is None:
            if strict:
                raise NotWarmedUpError(f"forecast windows not filled at period {t}")
        else:
            S = F + self.z * self.sigma_hat
            if self.F_prev is None:
                self.net_inventory = S  # position raised to S with an empty pipeline
            else:
                # the constant safety stock cancels, keeping q independent of z bit for bit
                q = (F - self.F_prev) + demand_prev
                due = t + int(lead_time) - 1
                self.pipeline[due] = self.pipeline.get(due, 0.0) + q
                if due == t:
                    arrived = self.pipeline.pop(t)
                    self.net_inventory += arrived
                    record["arrivals"] += arrived
            record.update(forecast_ltd=F, order_up_to=S)
            self.S_prev, self.F_prev = S, F
        record["order"] = q
        self.history.append(record)
        self.t += 1
        return q


def simulate_stepwise(
    config: SimulationConfig, replication: int = 0, periods: int | None = None
) -> list[dict]:
    """Drive a :class:`Retailer` through the same streams as :func:`simulate_replication`."""
    T = int(periods or config.horizon)
    Lmax = int(config.lead_time.upper_bound)
    D = sample_sequence(StreamHandle(config.demand, config.seed, replication), int(config.horizon) + Lmax)
    L = sample_sequence(StreamHandle(config.lead_time, config.seed, replication), int(config.horizon))
    retailer = Retailer.from_config(config)
    for t in range(T):
        retailer.step(D[t - 1] if t else None, int(L[t]))
    retailer.step(D[T - 1], int(L[T]) if T < L.size else 1)
    return retailer.history[:T]


def iter_rows(report: SimulationReport) -> Iterable[list]:
    yield ["replication", "periods", "var_q", "var_d", "bm", "mean_q", "sigma_hat_sq", "service_level"]
    for r in report.replications:
        yield [
            r.replication,
            r.periods,
            repr(r.var_q),
            repr(r.var_d),
            repr(r.bm),
            repr(r.mean_q),
            repr(r.sigma_hat_sq),
            "" if r.service_level is None else repr(r.service_level),
        ]
