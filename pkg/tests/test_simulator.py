import io
import math

import numpy as np
import pytest

from bullwhip.analytics import ModelParams, bm_deterministic, bullwhip_measure, order_variance
from bullwhip.distributions import LEAD_TIME, DistributionSpec, StreamHandle, sample_sequence
from bullwhip.forecasting import LtdStrategy
from bullwhip.simulator import (
    ConfigError,
    NotWarmedUpError,
    Retailer,
    SimulationConfig,
    empirical_forecast_error_variance,
    run,
    service_level,
    simulate_replication,
    simulate_stepwise,
    write_trace,
)


def constant_config(**kw):
    base = dict(
        demand=DistributionSpec.constant(2.0),
        lead_time=DistributionSpec.constant(3, role=LEAD_TIME),
        horizon=400,
        replications=2,
    )
    base.update(kw)
    return SimulationConfig(**base)


def streams(config, rep=0):
    T = config.horizon
    Lmax = int(config.lead_time.upper_bound)
    D = sample_sequence(StreamHandle(config.demand, config.seed, rep), T + Lmax)
    L = sample_sequence(StreamHandle(config.lead_time, config.seed, rep), T)
    return D, L


def test_constant_streams_order_demand_every_period():
    trace = simulate_replication(constant_config(z=1.3, track_inventory=True))
    assert np.all(trace.order == 2.0)
    report = run(constant_config(track_inventory=True))
    assert report.var_q == 0 and report.mean_q == 2.0
    assert report.sigma_hat_sq == 0
    assert not report.bm_defined
    assert report.service_level == 1.0


def test_step_with_constant_streams():
    r = Retailer(n=3, m=2)
    orders = [r.step(None if t == 0 else 4.0, 2) for t in range(20)]
    assert orders[:4] == [None] * 4
    assert set(orders[4:]) == {4.0}


def test_step_strict_raises_before_windows_fill():
    with pytest.raises(NotWarmedUpError):
        Retailer(n=3, m=2).step(None, 2, strict=True)


def test_orders_match_proof_expansion():
    """q_t equals the expansion of S_t - S_{t-1} + D_{t-1} in raw demands and lead times."""
    config = SimulationConfig(n=5, m=4, horizon=3000, z=2.0, seed=31)
    trace = simulate_replication(config)
    D, L = streams(config)
    n, m = config.n, config.m
    worst = 0.0
    for i, t in enumerate(trace.periods):
        sum_L = sum(L[t - k] for k in range(1, m + 1))
        sum_D = sum(D[t - k] for k in range(1, n + 1))
        dD = D[t - n - 1] - D[t - 1]
        dL = L[t - m - 1] - L[t - 1]
        expected = (-dD * sum_L - dL * sum_D - dL * dD) / (m * n) + D[t - 1]
        worst = max(worst, abs(trace.order[i] - expected))
    assert worst < 1e-10


def test_orders_do_not_depend_on_safety_factor():
    a = simulate_replication(SimulationConfig(z=0.0, horizon=5000, seed=4))
    b = simulate_replication(SimulationConfig(z=5.0, horizon=5000, seed=4))
    assert np.array_equal(a.order, b.order)
    assert not np.array_equal(a.order_up_to, b.order_up_to)


@pytest.mark.parametrize(
    "kw",
    [
        dict(),
        dict(bounded=True),
        dict(strategy=LtdStrategy("kim-ma", p=4)),
        dict(strategy=LtdStrategy("hindsight")),
        dict(strategy=LtdStrategy("deterministic", lead_time=3)),
        dict(lead_time=DistributionSpec.discrete_uniform(1, 9), m=1, n=2),
    ],
    ids=["product", "bounded", "kim", "hindsight", "deterministic", "wide-lead-time"],
)
def test_vectorised_engine_matches_stepwise_retailer(kw):
    config = SimulationConfig(horizon=1500, seed=99, z=0.7, track_inventory=True, **kw)
    trace = simulate_replication(config)
    history = simulate_stepwise(config)
    rows = history[trace.start :]
    assert len(rows) == trace.order.size
    np.testing.assert_allclose([r["order"] for r in rows], trace.order, rtol=0, atol=1e-9)
    np.testing.assert_allclose([r["order_up_to"] for r in rows], trace.order_up_to, rtol=0, atol=1e-9)
    np.testing.assert_allclose([r["arrivals"] for r in rows], trace.arrivals, rtol=0, atol=1e-9)
    np.testing.assert_allclose([r["net_inventory"] for r in rows], trace.net_inventory, atol=1e-8)


def test_inventory_balance_every_period():
    config = SimulationConfig(horizon=2000, seed=8, z=1.0, track_inventory=True)
    D, _ = streams(config)
    rows = simulate_stepwise(config)
    tracked = [r for r in rows if "net_inventory" in r]
    for prev, cur in zip(tracked, tracked[1:]):
        t = cur["period"]
        assert cur["net_inventory"] == pytest.approx(
            prev["net_inventory"] + cur["arrivals"] - D[t], abs=1e-12
        )
    trace = simulate_replication(config)
    net = trace.net_inventory
    np.testing.assert_allclose(np.diff(net), trace.arrivals[1:] - trace.demand[1:], atol=1e-9)


def test_kim_uses_completed_orders_in_completion_order():
    """Crossover: the order placed at t=1 (L=1) completes before the one at t=0 (L=3)."""
    r = Retailer(n=1, m=1, strategy=LtdStrategy("kim-ma", p=1))
    demands = [1.0, 2.0, 4.0, 8.0, 16.0]
    lead_times = [3, 1, 2, 1, 1]
    for t, lt in enumerate(lead_times):
        r.step(demands[t - 1] if t else None, lt)
    # completions: order 1 at t=2 (ltd 2), order 0 at t=3 (ltd 7),
    # orders 2 and 3 both at t=4 (ltd 12 then 8, ties broken by placement)
    assert r._completed == [2.0, 7.0, 12.0, 8.0]
    assert r.history[2]["forecast_ltd"] == 2.0
    assert r.history[3]["forecast_ltd"] == 7.0
    assert r.history[4]["forecast_ltd"] == 8.0


def test_kim_vectorised_matches_hand_example():
    from bullwhip.simulator import _kim_forecasts

    D = np.array([1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 0, 0])
    L = np.array([3, 1, 2, 1, 1])
    F = _kim_forecasts(D, L, np.array([2, 3, 4]), 1)
    assert F.tolist() == [2.0, 7.0, 8.0]
    assert _kim_forecasts(D, L, np.array([4]), 2).tolist() == [10.0]
    with pytest.raises(NotWarmedUpError):
        _kim_forecasts(D, L, np.array([1]), 1)


def test_run_matches_table_value():
    report = run(SimulationConfig(horizon=10**6 + 50, replications=32, seed=1))
    assert report.analytic_bm == pytest.approx(4.3152)
    assert abs(report.bm / 4.3152 - 1) < 0.02
    assert report.bm_ci[0] < report.bm < report.bm_ci[1]


def test_run_deterministic_strategy():
    config = SimulationConfig(
        lead_time=DistributionSpec.constant(2, role=LEAD_TIME),
        strategy=LtdStrategy("deterministic", lead_time=2),
        n=4, horizon=300_000, replications=8, seed=5,
    )
    report = run(config)
    assert abs(report.bm / bm_deterministic(2, 4) - 1) < 0.02


def test_empirical_forecast_error_variance_matches_closed_form():
    report = run(SimulationConfig(horizon=400_000, replications=16, seed=77))
    assert abs(report.sigma_hat_sq - 24.16) < 3 * report.sigma_hat_sq_se


def test_empirical_forecast_error_variance_constant_lead_time():
    config = SimulationConfig(lead_time=DistributionSpec.constant(3, role=LEAD_TIME), n=5,
                              horizon=300_000, replications=12, seed=3)
    report = run(config)
    assert abs(report.sigma_hat_sq - 4.8) < 3 * report.sigma_hat_sq_se


def test_empirical_forecast_error_variance_function():
    assert empirical_forecast_error_variance([6, 6, 6], [6, 6, 6]) == 0.0
    with pytest.raises(ValueError):
        empirical_forecast_error_variance([1.0], [1.0])


def test_analytic_agreement_over_grid():
    misses = []
    for n in (5, 10, 20, 30):
        for m in (1, 3, 5, 10, 20, 50):
            report = run(SimulationConfig(n=n, m=m, horizon=150_000, replications=12, seed=n * 100 + m))
            p = ModelParams(2.0, 1.0, 3.0, 4.0, n, m)
            if abs(report.var_q - order_variance(p)) > 3 * report.var_q_se:
                misses.append((n, m))
    assert len(misses) <= 1, misses


def test_mean_order_and_stationarity():
    report = run(SimulationConfig(horizon=200_000, replications=16, seed=21))
    assert abs(report.mean_q - 2.0) < 4 * report.mean_q_se
    diffs = np.array([r.var_q_first_half - r.var_q_second_half for r in report.replications])
    se = diffs.std(ddof=1) / math.sqrt(diffs.size)
    assert abs(diffs.mean()) < 4 * se


def test_bounded_mode_gives_same_bullwhip():
    kw = dict(horizon=300_000, replications=16, seed=13)
    plain = run(SimulationConfig(**kw))
    bounded = run(SimulationConfig(bounded=True, **kw))
    diffs = np.array([a.bm - b.bm for a, b in zip(plain.replications, bounded.replications)])
    se = diffs.std(ddof=1) / math.sqrt(diffs.size)
    assert abs(diffs.mean()) < 3 * se
    assert bounded.analytic_bm == plain.analytic_bm


def test_service_level():
    high = run(SimulationConfig(z=10, horizon=100_000, replications=2, seed=1, track_inventory=True))
    assert high.service_level >= 0.999
    low = run(SimulationConfig(z=0, horizon=100_000, replications=2, seed=1, track_inventory=True))
    assert 0.3 < low.service_level < 0.9
    with pytest.raises(ValueError):
        service_level(simulate_replication(SimulationConfig(horizon=1000)))


def test_run_is_deterministic_and_worker_independent():
    config = SimulationConfig(horizon=20_000, replications=6, seed=42)
    a, b = run(config), run(config, workers=3)
    assert a.replications == b.replications
    assert a.bm == b.bm


def test_strategies_are_reported_without_closed_form():
    hind = run(SimulationConfig(strategy=LtdStrategy("hindsight"), horizon=50_000, replications=4))
    kim = run(SimulationConfig(strategy=LtdStrategy("kim-ma", p=5), horizon=50_000, replications=4))
    prod = run(SimulationConfig(horizon=50_000, replications=4))
    assert hind.analytic_bm is None and kim.analytic_bm is None
    assert abs(hind.bm - prod.bm) > 10 * prod.bm_se


def test_config_validation_lists_violations():
    with pytest.raises(ConfigError) as info:
        SimulationConfig(n=0, replications=0).validate()
    assert len(info.value.violations) == 2
    with pytest.raises(ConfigError, match="warmup"):
        SimulationConfig(warmup=3).validate()
    with pytest.raises(ConfigError, match="horizon"):
        SimulationConfig(horizon=20).validate()
    with pytest.raises(ConfigError, match="M"):
        SimulationConfig(M=4).validate()


def test_default_warmup():
    config = SimulationConfig(n=5, m=5)
    assert config.effective_warmup() == max(5, 5) + 10 * 3
    assert config.effective_warmup() >= config.min_warmup()
    bounded = SimulationConfig(n=5, m=5, bounded=True)
    assert bounded.effective_warmup() == 5 + 7 + 30


def test_trace_csv():
    trace = simulate_replication(SimulationConfig(horizon=200, track_inventory=True))
    buf = io.StringIO()
    write_trace(trace, buf, limit=10)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "period,demand,lead_time,forecast_ltd,order_up_to,order,arrivals,net_inventory"
    assert len(lines) == 11
    assert lines[1].split(",")[0] == str(trace.warmup)
