import numpy as np
import pytest
from hypothesis import given, strategies as st

from bullwhip.forecasting import (
    ForecastError,
    ForecastState,
    LtdStrategy,
    lead_time_forecast,
    ltd_forecast_hindsight,
    ltd_forecast_kim,
    ltd_forecast_product,
    ma_forecast,
    realized_ltd,
)


@pytest.mark.parametrize("window, k, expected", [([2, 4, 6], 3, 4), ([5, 5, 5, 5], 4, 5), ([1, 2], 2, 1.5)])
def test_ma_forecast(window, k, expected):
    assert ma_forecast(window, k) == expected


def test_ma_forecast_rejects_bad_windows():
    with pytest.raises(ForecastError):
        ma_forecast([], 0)
    with pytest.raises(ForecastError):
        ma_forecast([1, 2, 3], 2)


def test_lead_time_forecast():
    assert lead_time_forecast(ForecastState.from_windows([1.0], [3, 5])) == 4.0
    assert lead_time_forecast(ForecastState.from_windows([1.0], [3, 3, 3])) == 3.0


def test_lead_time_forecast_is_not_rounded():
    assert lead_time_forecast(ForecastState.from_windows([1.0], [3, 4])) == 3.5


def test_bounded_lead_time_forecast_reads_lagged_values():
    # most recent first: lags 1..7 are noise, lags 8 and 9 hold 2 and 6
    history = [9, 9, 9, 9, 9, 9, 9, 2, 6]
    state = ForecastState.from_windows([1.0], history, m=2, bounded=True, M=7)
    assert lead_time_forecast(state) == 4.0


def test_bounded_mode_needs_bound_and_history():
    with pytest.raises(ForecastError):
        ForecastState(n=1, m=2, bounded=True)
    state = ForecastState.from_windows([1.0], [2, 6], m=2, bounded=True, M=7)
    with pytest.raises(ForecastError, match="bound M=7"):
        lead_time_forecast(state)


@pytest.mark.parametrize(
    "lead_times, demands, expected",
    [([3, 5], [2, 4, 6], 16.0), ([1], [10], 10.0), ([4, 4, 4], [2.5, 2.5], 10.0)],
)
def test_ltd_forecast_product(lead_times, demands, expected):
    assert ltd_forecast_product(ForecastState.from_windows(demands, lead_times)) == expected


def test_realized_ltd():
    demands = [9, 2, 3, 5, 9]
    assert realized_ltd(demands, 1, 3) == 10
    assert realized_ltd([7], 0, 1) == 7
    assert realized_ltd([4.0] * 6, 0, 6) == 24
    with pytest.raises(IndexError):
        realized_ltd(demands, 3, 3)
    with pytest.raises(ForecastError):
        realized_ltd(demands, 0, 0)


def test_kim_and_hindsight():
    assert ltd_forecast_kim([10, 14], 2) == 12
    assert ltd_forecast_kim([9], 1) == 9
    assert ltd_forecast_hindsight(4, 3) == 12
    assert ltd_forecast_hindsight(2.5, 1) == 2.5
    with pytest.raises(ForecastError):
        ltd_forecast_kim([], 0)
    with pytest.raises(ForecastError):
        ltd_forecast_hindsight(4, 0)


@pytest.mark.parametrize("d, ell, p", [(2.0, 3, 1), (1.5, 1, 4), (7.0, 5, 2)])
def test_all_strategies_agree_on_constant_streams(d, ell, p):
    state = ForecastState.from_windows([d] * 4, [ell] * 3)
    demands = [d] * 40
    past = [realized_ltd(demands, s, ell) for s in range(p)]
    values = {
        ltd_forecast_product(state),
        ltd_forecast_kim(past, p),
        ltd_forecast_hindsight(state.demand_forecast(), ell),
        ell * state.demand_forecast(),
    }
    assert values == {ell * d}


@given(
    st.lists(st.integers(-1000, 1000), min_size=2, max_size=30),
    st.integers(-1000, 1000),
)
def test_shift_identity(window, new):
    """Dropping the oldest and adding a new value moves the mean by (new - dropped) / k."""
    k = len(window)
    before = ma_forecast(window, k)
    after = ma_forecast([new] + window[:-1], k)
    assert after - before == pytest.approx((new - window[-1]) / k, abs=1e-9)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=12), st.lists(st.integers(1, 9), min_size=1, max_size=6))
def test_horizon_flat_sum_equals_product(demands, lead_times):
    """With integer lead-time forecasts the per-period sum of flat forecasts is the product."""
    state = ForecastState.from_windows(demands, [lead_times[0]] * len(lead_times))
    lhat = int(lead_time_forecast(state))
    dhat = state.demand_forecast()
    assert sum(dhat for _ in range(lhat)) == pytest.approx(ltd_forecast_product(state), rel=1e-12, abs=1e-12)


def test_state_windows_roll():
    state = ForecastState(n=2, m=1)
    for d in (1.0, 2.0, 3.0):
        state.observe_demand(d)
    assert list(state.demands) == [3.0, 2.0]
    assert not state.warmed_up
    state.observe_lead_time(4)
    assert state.warmed_up


def test_strategy_validation():
    assert LtdStrategy("kim", p=3).name == "kim-ma"
    assert LtdStrategy("hindsight-oracle").name == "hindsight"
    with pytest.raises(ForecastError):
        LtdStrategy("kim-ma")
    with pytest.raises(ForecastError):
        LtdStrategy("deterministic", lead_time=0)
    with pytest.raises(ForecastError):
        LtdStrategy("exponential")


def test_bounded_and_unbounded_windows_have_same_distribution():
    rng = np.random.default_rng(0)
    L = rng.choice([1, 3, 7], p=[1 / 3, 1 / 2, 1 / 6], size=200_000)
    m, M = 5, 7
    unbounded = np.convolve(L, np.ones(m), "valid")[M:] / m
    bounded = np.convolve(L, np.ones(m), "valid")[:-M] / m
    se = np.sqrt(4 / m / unbounded.size)
    assert abs(unbounded.mean() - bounded.mean()) < 6 * se
    assert unbounded.var() == pytest.approx(bounded.var(), rel=0.03)
