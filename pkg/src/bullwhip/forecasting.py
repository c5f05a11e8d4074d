"""Moving-average forecasts of demand, lead time and lead-time demand.

Windows are ordered most recent first: ``window[0]`` is the observation from
period ``t-1``, ``window[i-1]`` the one from ``t-i``.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

PRODUCT_MA = "product-ma"
KIM_MA = "kim-ma"
HINDSIGHT = "hindsight"
DETERMINISTIC = "deterministic"

STRATEGIES = (PRODUCT_MA, KIM_MA, HINDSIGHT, DETERMINISTIC)
_STRATEGY_ALIASES = {"kim": KIM_MA, "hindsight-oracle": HINDSIGHT, "product": PRODUCT_MA}


class ForecastError(ValueError):
    pass


def ma_forecast(window: Sequence[float], k: int | None = None) -> float:
    """Arithmetic mean of the last ``k`` observations.

    The moving average is horizon-flat: the same value forecasts every future
    period ``t + j``.
    """
    if k is None:
        k = len(window)
    if k < 1:
        raise ForecastError(f"window length must be >= 1, got {k}")
    if len(window) != k:
        raise ForecastError(f"expected {k} observations, got {len(window)}")
    return math.fsum(window) / k


@dataclass
class ForecastState:
    """Rolling demand and lead-time windows owned by one retailer.

    In bounded mode the lead-time forecast skips the ``M`` most recent lead
    times (they may still be in transit), so ``m + M`` lead times are kept.
    """

    n: int
    m: int
    bounded: bool = False
    M: int | None = None
    demands: deque = field(init=False, repr=False)
    lead_times: deque = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ForecastError(f"n must be >= 1, got {self.n}")
        if self.m < 1:
            raise ForecastError(f"m must be >= 1, got {self.m}")
        if self.bounded and (self.M is None or self.M < 1):
            raise ForecastError("bounded mode requires a lead-time bound M >= 1")
        self.demands = deque(maxlen=self.n)
        self.lead_times = deque(maxlen=self.m + self.lag)

    @property
    def lag(self) -> int:
        return int(self.M) if self.bounded else 0

    @classmethod
    def from_windows(
        cls,
        demands: Sequence[float],
        lead_times: Sequence[float],
        *,
        n: int | None = None,
        m: int | None = None,
        bounded: bool = False,
        M: int | None = None,
    ) -> ForecastState:
        """Build a state from most-recent-first windows."""
        n = len(demands) if n is None else n
        m = len(lead_times) - (M if bounded and M else 0) if m is None else m
        state = cls(n=n, m=m, bounded=bounded, M=M)
        for d in reversed(demands):
            state.observe_demand(d)
        for lt in reversed(lead_times):
            state.observe_lead_time(lt)
        return state

    def observe_demand(self, d: float) -> None:
        self.demands.appendleft(float(d))

    def observe_lead_time(self, lt: float) -> None:
        self.lead_times.appendleft(lt)

    @property
    def demand_ready(self) -> bool:
        return len(self.demands) == self.n

    @property
    def lead_time_ready(self) -> bool:
        return len(self.lead_times) == self.m + self.lag

    @property
    def warmed_up(self) -> bool:
        return self.demand_ready and self.lead_time_ready

    def demand_forecast(self) -> float:
        if not self.demand_ready:
            raise ForecastError(f"demand window holds {len(self.demands)} of {self.n} values")
        return ma_forecast(self.demands, self.n)


def lead_time_forecast(state: ForecastState) -> float:
    """Mean of the applicable ``m`` lead times; never rounded."""
    if not state.lead_time_ready:
        need = state.m + state.lag
        raise ForecastError(
            f"lead-time history holds {len(state.lead_times)} of {need} values"
            + (f" (m={state.m} plus bound M={state.M})" if state.bounded else "")
        )
    window = list(state.lead_times)[state.lag : state.lag + state.m]
    return ma_forecast(window, state.m)


def ltd_forecast_product(state: ForecastState) -> float:
    """Lead-time demand forecast as forecast lead time times forecast demand."""
    return lead_time_forecast(state) * state.demand_forecast()


def realized_ltd(demands: Sequence[float], t: int, lead_time: int) -> float:
    """Demand accruing over an order's lead time: ``demands[t] + ... + demands[t+L-1]``."""
    if lead_time < 1:
        raise ForecastError(f"lead time must be >= 1, got {lead_time}")
    if t < 0 or t + lead_time > len(demands):
        raise IndexError(
            f"demands cover periods 0..{len(demands) - 1}, need {t}..{t + lead_time - 1}"
        )
    return math.fsum(demands[t : t + lead_time])


def ltd_forecast_kim(past_ltd: Sequence[float], p: int) -> float:
    """Moving average of the ``p`` most recently completed lead-time demands."""
    if p < 1:
        raise ForecastError(f"delay parameter p must be >= 1, got {p}")
    return ma_forecast(past_ltd, p)


def ltd_forecast_hindsight(demand_forecast: float, lead_time: int) -> float:
    """Uses the true lead time of the order being placed; only possible in simulation."""
    if lead_time < 1:
        raise ForecastError(f"lead time must be >= 1, got {lead_time}")
    return lead_time * demand_forecast


@dataclass(frozen=True)
class LtdStrategy:
    """Lead-time-demand forecasting strategy.

    ``p`` is the Kim delay parameter; ``lead_time`` the fixed lead time assumed
    by the deterministic strategy.
    """

    name: str = PRODUCT_MA
    p: int | None = None
    lead_time: int | None = None

    def __post_init__(self) -> None:
        name = _STRATEGY_ALIASES.get(self.name, self.name)
        object.__setattr__(self, "name", name)
        if name not in STRATEGIES:
            raise ForecastError(f"unknown strategy {self.name!r}; choose one of {STRATEGIES}")
        if name == KIM_MA and (self.p is None or self.p < 1):
            raise ForecastError("kim-ma requires a delay parameter p >= 1")
        if name == DETERMINISTIC and (self.lead_time is None or self.lead_time < 1):
            raise ForecastError("deterministic strategy requires an integer lead time >= 1")

    def __str__(self) -> str:
        if self.name == KIM_MA:
            return f"{KIM_MA}(p={self.p})"
        if self.name == DETERMINISTIC:
            return f"{DETERMINISTIC}(L={self.lead_time})"
        return self.name
