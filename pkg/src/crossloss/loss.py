"""Cobb-Douglas component losses ``|P - A|**p * A**q`` and their totals.

A member of the family is admissible when ``p + q > 0``: at a fixed
relative error the loss then grows with the size of the area. Members
with ``p + q <= 0`` (MAPE, RMSPE) can still be evaluated; they are only
flagged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from crossloss._backend import kernels


class DomainError(ValueError):
    """An input lies outside the domain where the loss is defined."""


@dataclass(frozen=True)
class Observation:
    id: Hashable
    actual: float
    predicted: float

    def __post_init__(self):
        if not (math.isfinite(self.actual) and self.actual > 0):
            raise DomainError(f"observation {self.id!r}: actual must be > 0, got {self.actual}")
        if not (math.isfinite(self.predicted) and self.predicted >= 0):
            raise DomainError(
                f"observation {self.id!r}: predicted must be >= 0, got {self.predicted}")

    @property
    def error(self) -> float:
        return self.predicted - self.actual


@dataclass(frozen=True)
class LossParams:
    p: float
    q: float

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p > 0):
            raise DomainError(f"exponent p must be > 0, got {self.p}")
        if not math.isfinite(self.q):
            raise DomainError(f"exponent q must be finite, got {self.q}")

    def admissible(self) -> bool:
        return self.p + self.q > 0


WEBSTER = LossParams(2.0, -1.0)


def webster_params() -> LossParams:
    """The Webster-Sainte-Lague parametrization, ``p=2, q=-1``."""
    return WEBSTER


def _frozen(values, name):
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """A named vector of predictions aligned to a vector of actual values."""

    name: str
    ids: tuple
    actuals: np.ndarray = field(repr=False)
    predicted: np.ndarray = field(repr=False)

    def __init__(self, name, ids, actuals, predicted):
        ids = tuple(ids)
        actuals = _frozen(actuals, "actuals")
        predicted = _frozen(predicted, "predicted")
        if not ids:
            raise DomainError(f"prediction set {name!r} is empty")
        if not (len(ids) == actuals.size == predicted.size):
            raise DomainError(
                f"prediction set {name!r}: {len(ids)} ids, {actuals.size} actuals, "
                f"{predicted.size} predictions")
        if len(set(ids)) != len(ids):
            raise DomainError(f"prediction set {name!r}: ids are not unique")
        bad = np.flatnonzero(~(np.isfinite(actuals) & (actuals > 0)))
        if bad.size:
            i = bad[0]
            raise DomainError(f"id {ids[i]!r}: actual must be > 0, got {actuals[i]}")
        bad = np.flatnonzero(~(np.isfinite(predicted) & (predicted >= 0)))
        if bad.size:
            i = bad[0]
            raise DomainError(f"id {ids[i]!r}: predicted must be >= 0, got {predicted[i]}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "actuals", actuals)
        object.__setattr__(self, "predicted", predicted)

    @classmethod
    def from_observations(cls, name: str, observations: Iterable[Observation]) -> PredictionSet:
        obs = list(observations)
        return cls(name, [o.id for o in obs], [o.actual for o in obs], [o.predicted for o in obs])

    @property
    def observations(self) -> list[Observation]:
        return [Observation(i, float(a), float(p))
                for i, a, p in zip(self.ids, self.actuals, self.predicted)]

    def __len__(self):
        return len(self.ids)

    def with_predictions(self, predicted, name: str | None = None) -> PredictionSet:
        return PredictionSet(self.name if name is None else name, self.ids, self.actuals, predicted)

    def aligned_with(self, other: PredictionSet) -> bool:
        return self.ids == other.ids and np.array_equal(self.actuals, other.actuals)

    def __eq__(self, other):
        if not isinstance(other, PredictionSet):
            return NotImplemented
        return (self.name == other.name and self.aligned_with(other)
                and np.array_equal(self.predicted, other.predicted))

    __hash__ = None


@dataclass(frozen=True)
class SignedLossRecord:
    id: Hashable
    signed_loss: float
    magnitude: float


def component_loss(obs: Observation, params: LossParams) -> float:
    """Loss of one observation; exactly zero when the prediction is exact."""
    if not obs.actual > 0:
        raise DomainError(f"observation {obs.id!r}: actual must be > 0")
    if obs.predicted == obs.actual:
        return 0.0
    return abs(obs.predicted - obs.actual) ** params.p * obs.actual ** params.q


def component_losses(pset: PredictionSet, params: LossParams) -> np.ndarray:
    return kernels.component_losses(pset.predicted, pset.actuals, params.p, params.q)


def total_loss(pset: PredictionSet, params: LossParams) -> float:
    """Sum of component losses, accumulated in observation order."""
    return float(kernels.total_loss(pset.predicted, pset.actuals, params.p, params.q))


def fellegi_components(pset: PredictionSet) -> np.ndarray:
    """Per-area summands of the share-based loss of Fellegi."""
    sum_p = kernels.ordered_sum(pset.predicted)
    sum_a = kernels.ordered_sum(pset.actuals)
    if not sum_p > 0:
        raise DomainError(f"prediction set {pset.name!r}: predictions sum to zero")
    share_err = pset.predicted / sum_p - pset.actuals / sum_a
    return share_err * share_err / sum_a


def fellegi_loss(pset: PredictionSet) -> float:
    """Squared share errors weighted by ``1 / sum(A)``.

    Invariant under rescaling all predictions by a positive constant.
    """
    return float(kernels.ordered_sum(fellegi_components(pset)))


def signed_loss(obs: Observation, params: LossParams) -> SignedLossRecord:
    # sign of P - A; sign of |P - A| would be uninformative
    magnitude = component_loss(obs, params)
    sign = (obs.predicted > obs.actual) - (obs.predicted < obs.actual)
    return SignedLossRecord(obs.id, sign * magnitude, magnitude)


def bias_ranking(pset: PredictionSet, params: LossParams) -> list[SignedLossRecord]:
    """Signed losses sorted from largest overprediction to largest underprediction.

    Ties are ordered by id.
    """
    records = [signed_loss(o, params) for o in pset.observations]
    return sorted(records, key=lambda r: (-r.signed_loss, r.id))


def total_signed_loss(records: Sequence[SignedLossRecord]) -> float:
    return math.fsum(r.signed_loss for r in records)
