"""Bullwhip effect under moving-average forecasting of demands and lead times."""
from .analytics import (
    BullwhipDecomposition,
    ModelParams,
    ParamError,
    ZeroDemandVarianceError,
    bm_deterministic,
    bm_limit_m_inf,
    bm_limit_n_inf,
    bm_special_m1,
    bullwhip_measure,
    forecast_error_variance,
    order_variance,
    table_params,
)
from .distributions import DistributionSpec, SpecError, StreamHandle, moments, sample_sequence
from .forecasting import ForecastState, LtdStrategy
from .simulator import Retailer, SimulationConfig, SimulationReport, run

__version__ = "0.1.0"
