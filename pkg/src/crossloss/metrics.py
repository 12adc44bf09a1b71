"""Conventional accuracy metrics placed alongside the loss family.

Each metric carries a fixed admissibility flag naming the property it
breaks: RMSE ignores area size, MAPE and RMSPE sit on the ``p + q = 0``
boundary, and quantile or max-ratio statistics are not additive.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from crossloss._backend import kernels
from crossloss.loss import (
    WEBSTER, DomainError, LossParams, PredictionSet, component_losses, fellegi_components,
    total_loss)

# order statistic used for 90PE
P90_CONVENTION = "nearest-rank: ceil(0.9 * n)-th smallest APE"


class Flag(str, enum.Enum):
    ADMISSIBLE = "admissible"
    VIOLATES_ASSUMPTION_3 = "violates_assumption_3"
    VIOLATES_PROPERTY_1 = "violates_property_1"
    VIOLATES_VNM = "violates_vNM"


METRIC_FLAGS = {
    "mape": Flag.VIOLATES_PROPERTY_1,
    "medape": Flag.VIOLATES_VNM,
    "rmse": Flag.VIOLATES_ASSUMPTION_3,
    "rmspe": Flag.VIOLATES_PROPERTY_1,
    "p90_ape": Flag.VIOLATES_VNM,
    "fellegi": Flag.ADMISSIBLE,
    "hamilton": Flag.VIOLATES_ASSUMPTION_3,
    "hill": Flag.VIOLATES_ASSUMPTION_3,
    "jefferson": Flag.VIOLATES_VNM,
    "adams": Flag.VIOLATES_VNM,
}

ALL_METRICS = ("total_loss", "mean_loss") + tuple(METRIC_FLAGS)

# metrics whose value is the mean of their per-observation vector
MEAN_TYPE = frozenset({"mean_loss", "mape"})


def params_flag(params: LossParams) -> Flag:
    if params.q >= 0:
        return Flag.VIOLATES_ASSUMPTION_3
    if not params.admissible():
        return Flag.VIOLATES_PROPERTY_1
    return Flag.ADMISSIBLE


def _mean(x) -> float:
    return kernels.ordered_sum(x) / len(x)


def ape(pset: PredictionSet) -> np.ndarray:
    """Absolute percentage errors, ``100 * |P - A| / A``."""
    return 100.0 * np.abs(pset.predicted - pset.actuals) / pset.actuals


def mape(pset: PredictionSet) -> float:
    return _mean(ape(pset))


def mean_loss(pset: PredictionSet, params: LossParams) -> float:
    return total_loss(pset, params) / len(pset)


def mean_webster_loss(pset: PredictionSet) -> float:
    return mean_loss(pset, WEBSTER)


def average_estimated_variance(pset: PredictionSet) -> float:
    """Mean of ``(P - A)**2 / A``.

    If errors are unbiased with variance proportional to ``A``, this
    estimates the proportionality constant.
    """
    return mean_webster_loss(pset)


def medape(pset: PredictionSet) -> float:
    # np.median averages the two central order statistics for even n
    return float(np.median(ape(pset)))


def p90_ape(pset: PredictionSet) -> float:
    values = np.sort(ape(pset))
    rank = -(-9 * len(values) // 10)
    return float(values[rank - 1])


def rmse(pset: PredictionSet) -> float:
    err = pset.predicted - pset.actuals
    return math.sqrt(_mean(err * err))


def rmspe(pset: PredictionSet) -> float:
    rel = (pset.predicted - pset.actuals) / pset.actuals
    return 100.0 * math.sqrt(_mean(rel * rel))


def hamilton_components(pset: PredictionSet, p: float = 1.0) -> np.ndarray:
    return component_losses(pset, LossParams(p, 0.0))


def hill_components(pset: PredictionSet) -> np.ndarray:
    """``(P - A)**2 / P``; exact predictions contribute zero."""
    if np.any(pset.predicted <= 0):
        raise DomainError(f"prediction set {pset.name!r}: Hill loss needs every prediction > 0")
    err = pset.predicted - pset.actuals
    return err * err / pset.predicted


def apportionment_metrics(pset: PredictionSet, hamilton_p: float = 1.0) -> dict[str, float]:
    """Loss representations of the Hamilton, Hill, Jefferson and Adams methods."""
    if np.any(pset.predicted <= 0):
        raise DomainError(
            f"prediction set {pset.name!r}: Hill and Adams losses need every prediction > 0")
    return {
        "hamilton": kernels.ordered_sum(hamilton_components(pset, hamilton_p)),
        "hill": kernels.ordered_sum(hill_components(pset)),
        "jefferson": float(np.max(pset.predicted / pset.actuals)),
        "adams": float(np.max(pset.actuals / pset.predicted)),
    }


def bryan_q(value_range: float) -> float:
    """Exponent ``q = ln(range)/25 - 1`` paired with ``p = 1``.

    The pair is admissible only while ``range < exp(25)``.
    """
    if not value_range > 0:
        raise DomainError(f"range must be > 0, got {value_range}")
    return math.log(value_range) / 25.0 - 1.0


def bryan_params(actuals) -> LossParams:
    actuals = np.asarray(actuals, dtype=np.float64)
    return LossParams(1.0, bryan_q(float(actuals.max() - actuals.min())))


BELL_PARAMS = LossParams(1.0, -0.5)


@dataclass
class MetricReport:
    set_name: str
    metric_values: dict[str, float]
    per_observation: dict[str, np.ndarray] = field(default_factory=dict)
    admissibility_flags: dict[str, Flag] = field(default_factory=dict)
    params: LossParams = WEBSTER


def evaluate(pset: PredictionSet, params: LossParams = WEBSTER, metrics=None,
             hamilton_p: float = 1.0) -> MetricReport:
    """Compute the selected metrics (all by default) for one prediction set.

    Hill and Adams are skipped, not raised, when some prediction is zero.
    """
    wanted = ALL_METRICS if metrics is None else tuple(metrics)
    unknown = set(wanted) - set(ALL_METRICS)
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(unknown)}")
    values, per_obs, flags = {}, {}, {}

    if "total_loss" in wanted or "mean_loss" in wanted:
        losses = component_losses(pset, params)
        total = total_loss(pset, params)
        for name, value, vec in (("total_loss", total, losses),
                                 ("mean_loss", total / len(pset), losses)):
            if name in wanted:
                values[name], per_obs[name], flags[name] = value, vec, params_flag(params)
    if "mape" in wanted:
        per_obs["mape"] = ape(pset)
        values["mape"] = _mean(per_obs["mape"])
    simple = {"medape": medape, "rmse": rmse, "rmspe": rmspe, "p90_ape": p90_ape}
    for name, fn in simple.items():
        if name in wanted:
            values[name] = fn(pset)
    if "fellegi" in wanted:
        per_obs["fellegi"] = fellegi_components(pset)
        values["fellegi"] = kernels.ordered_sum(per_obs["fellegi"])
    if "hamilton" in wanted:
        per_obs["hamilton"] = hamilton_components(pset, hamilton_p)
        values["hamilton"] = kernels.ordered_sum(per_obs["hamilton"])
    if "jefferson" in wanted:
        values["jefferson"] = float(np.max(pset.predicted / pset.actuals))
    positive = bool(np.all(pset.predicted > 0))
    if "hill" in wanted and positive:
        per_obs["hill"] = hill_components(pset)
        values["hill"] = kernels.ordered_sum(per_obs["hill"])
    if "adams" in wanted and positive:
        values["adams"] = float(np.max(pset.actuals / pset.predicted))

    for name in values:
        flags.setdefault(name, METRIC_FLAGS.get(name))
    ordered = [m for m in wanted if m in values]
    return MetricReport(
        set_name=pset.name,
        metric_values={m: float(values[m]) for m in ordered},
        per_observation={m: per_obs[m] for m in ordered if m in per_obs},
        admissibility_flags={m: flags[m] for m in ordered},
        params=params,
    )


def generate_noisy_predictions(actuals, variance_factor: float, seed: int,
                               name: str = "simulated") -> PredictionSet:
    """Unbiased predictions with error variance ``variance_factor * A``.

    Errors are normal; predictions are clipped at zero.
    """
    actuals = np.asarray(actuals, dtype=np.float64)
    if variance_factor < 0:
        raise DomainError(f"variance factor must be >= 0, got {variance_factor}")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(actuals.size) * np.sqrt(variance_factor * actuals)
    predicted = np.maximum(0.0, actuals + noise)
    return PredictionSet(name, range(1, actuals.size + 1), actuals, predicted)


@dataclass(frozen=True)
class ScenarioTable:
    """Actual values plus named vectors of absolute errors."""

    actuals: tuple
    scenarios: dict

    def __post_init__(self):
        a = np.asarray(self.actuals, dtype=np.float64)
        for name, eps in self.scenarios.items():
            eps = np.asarray(eps, dtype=np.float64)
            if eps.shape != a.shape or np.any(eps < 0) or np.any(eps >= a):
                raise DomainError(f"scenario {name!r}: need 0 <= eps < A for every area")

    def prediction_set(self, name: str, sign: int = 1) -> PredictionSet:
        """Predictions ``A + sign * eps`` for one scenario."""
        a = np.asarray(self.actuals, dtype=np.float64)
        eps = np.asarray(self.scenarios[name], dtype=np.float64)
        return PredictionSet(name, range(1, a.size + 1), a, a + sign * eps)


TABLE1 = ScenarioTable(
    actuals=(100000, 50000, 10000, 5000, 1000, 100),
    scenarios={
        "Scenario 1": (2000, 1000, 200, 100, 20, 2),
        "Scenario 2": (1000, 500, 100, 50, 10, 10),
        "Scenario 3": (3000, 850, 170, 85, 17, 2),
    },
)


@dataclass
class ScenarioDemo:
    table: ScenarioTable
    reports: dict[str, MetricReport]

    def ape(self, scenario: str) -> np.ndarray:
        return self.reports[scenario].per_observation["mape"]

    def webster_loss(self, scenario: str) -> np.ndarray:
        return self.reports[scenario].per_observation["mean_loss"]

    def ranking(self, metric: str) -> list[str]:
        """Scenarios ordered best to worst by ``metric``."""
        return sorted(self.reports, key=lambda s: self.reports[s].metric_values[metric])


def table1_demo() -> ScenarioDemo:
    """Three six-area scenarios on which MAPE and Webster loss disagree."""
    reports = {name: evaluate(TABLE1.prediction_set(name)) for name in TABLE1.scenarios}
    return ScenarioDemo(TABLE1, reports)
