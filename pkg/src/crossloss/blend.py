"""Loss-minimizing convex combinations of competing prediction sets.

Weights are searched on a lattice over the simplex: every composition
``(c_1, ..., c_k)`` of ``m = round(1/resolution)`` gives ``w_i = c_i / m``.
Refinement re-grids the neighbourhood of the incumbent ten times finer
until the spacing drops below ``1e-4``. Lattice numerators are integers,
so ties are broken on exact values (smallest weight vector wins).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from crossloss._backend import kernels
from crossloss.loss import DomainError, LossParams, PredictionSet, total_loss

REFINE_STOP = 1e-4
# lower bound on each weight when negative weights are enabled
NEGATIVE_WEIGHT_FLOOR = -1.0
_SUM_TOL = 1e-12


class AlignmentError(ValueError):
    """Prediction sets do not share ids and actual values."""


@dataclass(frozen=True)
class WeightVector:
    weights: tuple
    allow_negative: bool = False

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if not w:
            raise ValueError("weight vector is empty")
        if not self.allow_negative and min(w) < 0:
            raise ValueError(f"weights must be >= 0, got {w}")
        if abs(math.fsum(w) - 1.0) > _SUM_TOL:
            raise ValueError(f"weights must sum to 1, got {math.fsum(w)!r}")

    def __len__(self):
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)


@dataclass(frozen=True)
class ControlSpec:
    """Group membership of every id plus a positive control total per group."""

    assignment: Mapping[Hashable, Hashable]
    group_totals: Mapping[Hashable, float]

    def __post_init__(self):
        for g, t in self.group_totals.items():
            if not (math.isfinite(t) and t > 0):
                raise DomainError(f"control total for group {g!r} must be > 0, got {t}")
        missing = set(self.assignment.values()) - set(self.group_totals)
        if missing:
            raise DomainError(f"no control total for groups {sorted(map(str, missing))}")

    @classmethod
    def overall(cls, ids, total: float) -> ControlSpec:
        return cls({i: "total" for i in ids}, {"total": float(total)})

    def indices(self, ids: Sequence[Hashable]):
        """Dense group index per id and the matching totals array."""
        extra = set(self.assignment) - set(ids)
        if extra:
            raise AlignmentError(f"controls name unknown ids: {sorted(map(str, extra))[:5]}")
        groups = list(self.group_totals)
        pos = {g: n for n, g in enumerate(groups)}
        try:
            group = np.array([pos[self.assignment[i]] for i in ids], dtype=np.intp)
        except KeyError as exc:
            raise AlignmentError(f"id {exc.args[0]!r} has no control group") from None
        totals = np.array([self.group_totals[g] for g in groups], dtype=np.float64)
        return group, totals


@dataclass
class BlendResult:
    best_weights: WeightVector
    best_loss: float
    blended: PredictionSet
    grid_resolution: float
    evaluations: int


def _check_aligned(sets: Sequence[PredictionSet]):
    if not sets:
        raise AlignmentError("no prediction sets given")
    first = sets[0]
    for other in sets[1:]:
        if other.ids != first.ids:
            raise AlignmentError(f"sets {first.name!r} and {other.name!r} have different ids")
        if not np.array_equal(other.actuals, first.actuals):
            raise AlignmentError(
                f"sets {first.name!r} and {other.name!r} have different actual values")


def _combine(preds: np.ndarray, weights) -> np.ndarray:
    # same accumulation order as the kernels
    acc = np.zeros(preds.shape[1])
    for j, w in enumerate(weights):
        acc = acc + w * preds[j]
    return acc


def blend_predictions(sets: Sequence[PredictionSet], w, name: str = "blend") -> PredictionSet:
    """Elementwise weighted combination ``sum_j w_j P^j``."""
    _check_aligned(sets)
    if not isinstance(w, WeightVector):
        w = WeightVector(tuple(w))
    if len(w) != len(sets):
        raise AlignmentError(f"{len(w)} weights for {len(sets)} prediction sets")
    preds = np.stack([s.predicted for s in sets])
    blended = _combine(preds, w.weights)
    if np.any(blended < 0):
        i = int(np.flatnonzero(blended < 0)[0])
        raise DomainError(f"blend is negative at id {sets[0].ids[i]!r}")
    return sets[0].with_predictions(blended, name)


def _rescale(predicted, group, totals):
    gsum = np.bincount(group, weights=predicted, minlength=len(totals))
    with np.errstate(divide="ignore", invalid="ignore"):
        return predicted * (totals / gsum)[group], gsum


def rescale_to_controls(pset: PredictionSet, spec: ControlSpec) -> PredictionSet:
    """Scale each group proportionally so it sums to its control total."""
    group, totals = spec.indices(pset.ids)
    out, gsum = _rescale(pset.predicted, group, totals)
    bad = np.flatnonzero(gsum <= 0)
    if bad.size:
        name = list(spec.group_totals)[bad[0]]
        raise DomainError(f"group {name!r} sums to zero but has a positive control total")
    return pset.with_predictions(out)


def simplex_lattice(k: int, m: int, lower: int = 0) -> np.ndarray:
    """Integer vectors of length ``k`` summing to ``m`` with entries ``>= lower``.

    Rows come out in ascending lexicographic order.
    """
    span = m - k * lower
    if k < 1 or span < 0:
        raise ValueError(f"empty lattice for k={k}, m={m}, lower={lower}")
    if k == 1:
        return np.array([[m]], dtype=np.int64)
    blocks = []
    for first in range(span + 1):
        rest = simplex_lattice(k - 1, span - first, 0)
        blocks.append(np.column_stack([np.full(len(rest), first), rest]))
    return np.vstack(blocks) + lower


def _neighbourhood(k: int, radius: int) -> np.ndarray:
    """Integer offsets with zero sum and every entry in ``[-radius, radius]``."""
    grids = np.meshgrid(*([np.arange(-radius, radius + 1)] * (k - 1)), indexing="ij")
    head = np.column_stack([g.ravel() for g in grids]) if k > 1 else np.zeros((1, 0), int)
    last = -head.sum(axis=1)
    keep = np.abs(last) <= radius
    return np.column_stack([head[keep], last[keep]]).astype(np.int64)


class _Evaluator:
    def __init__(self, sets, params, controls, allow_negative, num_threads):
        self.preds = np.ascontiguousarray(np.stack([s.predicted for s in sets]))
        self.actuals = np.ascontiguousarray(sets[0].actuals)
        self.params = params
        if controls is None:
            self.group = np.zeros(0, dtype=np.intp)
            self.totals = np.zeros(0)
        else:
            self.group, self.totals = controls.indices(sets[0].ids)
        self.check_nonneg = allow_negative
        self.num_threads = num_threads
        self.count = 0

    def best(self, numerators: np.ndarray, denom: int):
        """Index of the minimum-loss row; the first row wins ties."""
        weights = np.ascontiguousarray(numerators / denom, dtype=np.float64)
        losses = kernels.blend_losses(
            self.preds, self.actuals, weights, self.params.p, self.params.q,
            self.group, self.totals, self.check_nonneg, self.num_threads)
        self.count += len(losses)
        idx = int(np.argmin(losses))
        return idx, float(losses[idx])


def grid_search_weights(sets: Sequence[PredictionSet], params: LossParams,
                        resolution: float = 0.01, controls: ControlSpec | None = None,
                        refine: bool = False, allow_negative_weights: bool = False,
                        num_threads: int = 1) -> BlendResult:
    """Find the lattice weights that minimize total loss of the blended set.

    With ``controls`` the blend is rescaled to the control totals before
    its loss is evaluated. With ``allow_negative_weights`` each weight may
    go down to ``NEGATIVE_WEIGHT_FLOOR``; blends with a negative
    prediction are skipped.
    """
    sets = list(sets)
    _check_aligned(sets)
    k = len(sets)
    if k < 2:
        raise ValueError("need at least two prediction sets to blend")
    if not 0 < resolution <= 1:
        raise ValueError(f"resolution must lie in (0, 1], got {resolution}")
    denom = max(1, round(1.0 / resolution))
    floor_frac = NEGATIVE_WEIGHT_FLOOR if allow_negative_weights else 0.0
    ev = _Evaluator(sets, params, controls, allow_negative_weights, num_threads)

    lattice = simplex_lattice(k, denom, round(floor_frac * denom))
    idx, loss = ev.best(lattice, denom)
    incumbent = lattice[idx]

    if refine:
        offsets = _neighbourhood(k, 10)
        while denom <= round(1.0 / REFINE_STOP):
            denom *= 10
            cand = incumbent * 10 + offsets
            cand = cand[(cand >= round(floor_frac * denom)).all(axis=1)]
            order = np.lexsort(cand.T[::-1])
            cand = cand[order]
            idx, loss = ev.best(cand, denom)
            incumbent = cand[idx]

    if not math.isfinite(loss):
        raise DomainError("no feasible blend: every candidate has a negative or unscalable group")
    weights = WeightVector(tuple(incumbent / denom), allow_negative=allow_negative_weights)
    preds = np.stack([s.predicted for s in sets])
    blended = sets[0].with_predictions(_combine(preds, weights.weights), "blend")
    if controls is not None:
        blended = rescale_to_controls(blended, controls)
    return BlendResult(weights, total_loss(blended, params), blended, 1.0 / denom, ev.count)

