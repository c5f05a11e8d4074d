"""Closed-form bullwhip measure under moving-average demand and lead-time forecasts.

Demands and lead times are iid and mutually independent; the retailer uses an
order-up-to policy whose lead-time-demand forecast is the product of an
``n``-period demand average and an ``m``-period lead-time average.
"""
from __future__ import annotations

from dataclasses import dataclass


class ParamError(ValueError):
    pass


class ZeroDemandVarianceError(ParamError):
    """The bullwhip ratio divides by demand variance, so it must be positive."""


@dataclass(frozen=True)
class ModelParams:
    mu_D: float
    var_D: float
    mu_L: float
    var_L: float
    n: int
    m: int

    def __post_init__(self) -> None:
        if not self.var_D > 0:
            raise ZeroDemandVarianceError(f"var_D must be > 0, got {self.var_D}")
        if not self.mu_L >= 1:
            raise ParamError(f"mu_L must be >= 1, got {self.mu_L}")
        if not self.var_L >= 0:
            raise ParamError(f"var_L must be >= 0, got {self.var_L}")
        for name in ("n", "m"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ParamError(f"{name} must be an integer >= 1, got {v}")

    @classmethod
    def from_cv(
        cls, n: int, m: int, *, mu_L: float, sigma_L: float, cv_D: float, mu_D: float = 2.0
    ) -> ModelParams:
        """Parametrise demand by its coefficient of variation ``sigma_D / mu_D``."""
        return cls(mu_D=mu_D, var_D=(cv_D * mu_D) ** 2, mu_L=mu_L, var_L=sigma_L**2, n=n, m=m)

    def replace(self, **changes) -> ModelParams:
        fields = dict(
            mu_D=self.mu_D, var_D=self.var_D, mu_L=self.mu_L, var_L=self.var_L, n=self.n, m=self.m
        )
        fields.update(changes)
        return ModelParams(**fields)


def table_params(n: int, m: int) -> ModelParams:
    """Moments used in the published tables: cv_D = 0.5, mu_L = 3, sigma_L = 2."""
    return ModelParams.from_cv(n, m, mu_L=3.0, sigma_L=2.0, cv_D=0.5)


@dataclass(frozen=True)
class BullwhipDecomposition:
    bm1: float  # joint lead-time and demand forecasting
    bm2: float  # lead-time forecasting alone
    bm3: float  # demand forecasting alone
    bm: float


def _forecast_error_variance(mu_D, var_D, mu_L, var_L, n, m):
    return (
        mu_L * var_D
        + var_L * mu_D**2 * (m + 1) / m
        + mu_L**2 * var_D / n
        + var_L * var_D / (m * n)
    )


def forecast_error_variance(p: ModelParams) -> float:
    """Variance of realized minus forecast lead-time demand (independent of t)."""
    return _forecast_error_variance(p.mu_D, p.var_D, p.mu_L, p.var_L, p.n, p.m)


def order_variance(p: ModelParams) -> float:
    n, m = p.n, p.m
    return (
        2 * p.var_L * p.var_D * (m + n - 1) / (m**2 * n**2)
        + 2 * p.var_L * p.mu_D**2 / m**2
        + 2 * p.mu_L**2 * p.var_D / n**2
        + 2 * p.mu_L * p.var_D / n
        + p.var_D
    )


def bullwhip_measure(p: ModelParams) -> BullwhipDecomposition:
    """Order variance over demand variance, split into its three amplifying terms."""
    n, m = p.n, p.m
    bm1 = 2 * p.var_L * (m + n - 1) / (m**2 * n**2)
    bm2 = 2 * p.var_L * p.mu_D**2 / (m**2 * p.var_D)
    bm3 = 2 * p.mu_L**2 / n**2 + 2 * p.mu_L / n
    return BullwhipDecomposition(bm1, bm2, bm3, bm1 + bm2 + bm3 + 1)


def bm_special_m1(p: ModelParams) -> float:
    """Bullwhip measure when the lead-time forecast is the last observed lead time."""
    if p.m != 1:
        raise ParamError(f"requires m = 1, got m = {p.m}")
    n = p.n
    return (
        2 * p.var_L * p.mu_D**2 / p.var_D
        + 2 * p.mu_L**2 / n**2
        + 2 * (p.mu_L + p.var_L) / n
        + 1
    )


def bm_deterministic(lead_time: int, n: int) -> float:
    """Bullwhip measure for a constant, known lead time."""
    if int(lead_time) != lead_time or lead_time < 1:
        raise ParamError(f"lead time must be an integer >= 1, got {lead_time}")
    if int(n) != n or n < 1:
        raise ParamError(f"n must be an integer >= 1, got {n}")
    return 2 * lead_time**2 / n**2 + 2 * lead_time / n + 1


def bm_limit_m_inf(p: ModelParams) -> float:
    """Limit as the lead-time window grows without bound."""
    return 2 * p.mu_L**2 / p.n**2 + 2 * p.mu_L / p.n + 1


def bm_limit_n_inf(p: ModelParams) -> float:
    """Limit as the demand window grows without bound; lead-time forecasting still amplifies."""
    return 2 * p.var_L * p.mu_D**2 / (p.m**2 * p.var_D) + 1
