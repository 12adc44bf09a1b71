"""Estimate loss exponents from a decision-maker's satisfaction scores.

Scores ``U`` in percentage points become losses ``L = 100 - U``, and
``log L = log a + p log eps + q log A + u`` is fitted by least squares.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from crossloss.loss import DomainError

DEFAULT_FLOOR_DELTA = 0.01
# chi-square(1) upper 5% point for the heteroscedasticity score
_BP_CRITICAL = 3.841458820694124
RANK_RTOL = 1e-10


class InsufficientSamplesError(ValueError):
    pass


class RankDeficientError(ArithmeticError):
    """The design matrix does not have full column rank."""


@dataclass(frozen=True)
class ElicitationSample:
    epsilon: float
    actual: float
    satisfaction: float

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise DomainError(f"epsilon must be > 0, got {self.epsilon}")
        if not (math.isfinite(self.actual) and self.actual > 0):
            raise DomainError(f"actual must be > 0, got {self.actual}")
        if not 0 <= self.satisfaction <= 100:
            raise DomainError(f"satisfaction must lie in [0, 100], got {self.satisfaction}")


@dataclass(frozen=True)
class CleanedSamples:
    epsilon: np.ndarray
    actual: np.ndarray
    loss: np.ndarray
    n_input: int
    n_dropped_zero_u: int = 0
    n_floored: int = 0
    n_dropped_full: int = 0

    @classmethod
    def from_triples(cls, triples: Iterable[Sequence[float]]) -> CleanedSamples:
        arr = np.array(list(triples), dtype=np.float64).reshape(-1, 3)
        if np.any(arr <= 0):
            raise DomainError("epsilon, actual and loss must all be > 0")
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], n_input=len(arr))

    def __len__(self):
        return len(self.loss)


def clean_samples(samples: Iterable[ElicitationSample], floor_delta: float = DEFAULT_FLOOR_DELTA,
                  full_satisfaction: str = "floor") -> CleanedSamples:
    """Convert scores to losses and remove unusable points.

    Zero-satisfaction answers are dropped. Full-satisfaction answers
    (loss 0, log undefined) get loss ``floor_delta`` when
    ``full_satisfaction="floor"`` or are dropped when it is ``"drop"``.
    """
    if not floor_delta > 0:
        raise ValueError(f"floor_delta must be > 0, got {floor_delta}")
    if full_satisfaction not in ("floor", "drop"):
        raise ValueError(f"full_satisfaction must be 'floor' or 'drop', got {full_satisfaction!r}")
    samples = list(samples)
    eps, act, loss = [], [], []
    zero_u = floored = dropped_full = 0
    for s in samples:
        if s.satisfaction == 0:
            zero_u += 1
            continue
        value = 100.0 - s.satisfaction
        if value <= 0:
            if full_satisfaction == "drop":
                dropped_full += 1
                continue
            value = floor_delta
            floored += 1
        eps.append(s.epsilon)
        act.append(s.actual)
        loss.append(value)
    if not loss:
        raise InsufficientSamplesError("no usable samples")
    if len(loss) < 3:
        raise InsufficientSamplesError(
            f"only {len(loss)} usable samples; at least 3 are needed to fit p, q and the scale")
    return CleanedSamples(np.array(eps), np.array(act), np.array(loss), len(samples),
                          zero_u, floored, dropped_full)


def _pivoted_cholesky(gram: np.ndarray, rtol: float = RANK_RTOL):
    """Cholesky factor with diagonal pivoting: ``gram[perm][:, perm] = R.T @ R``.

    Raises RankDeficientError when a pivot falls below ``rtol`` times the
    largest diagonal entry.
    """
    a = np.array(gram, dtype=np.float64)
    n = a.shape[0]
    perm = np.arange(n)
    r = np.zeros_like(a)
    scale = np.max(np.diag(a)) if n else 0.0
    if not scale > 0:
        raise RankDeficientError("design matrix has no variation")
    for j in range(n):
        d = np.diag(a)[j:] - np.sum(r[:j, j:] ** 2, axis=0)
        piv = j + int(np.argmax(d))
        if d[piv - j] <= rtol * scale:
            raise RankDeficientError(
                "design matrix is rank deficient (equal or collinear log epsilon and log actual)")
        if piv != j:
            a[[j, piv]] = a[[piv, j]]
            a[:, [j, piv]] = a[:, [piv, j]]
            r[:, [j, piv]] = r[:, [piv, j]]
            perm[[j, piv]] = perm[[piv, j]]
        r[j, j] = math.sqrt(d[piv - j])
        r[j, j + 1:] = (a[j, j + 1:] - r[:j, j] @ r[:j, j + 1:]) / r[j, j]
    return r, perm


def _solve_normal(r: np.ndarray, perm: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    y = np.linalg.solve(r.T, rhs[perm])
    z = np.linalg.solve(r, y)
    out = np.empty_like(z)
    out[perm] = z
    return out


@dataclass
class RegressionFit:
    p_hat: float
    q_hat: float
    intercept: float
    residuals: np.ndarray = field(repr=False)
    standard_errors: tuple
    n_used: int
    n_dropped_zero_u: int = 0
    n_floored: int = 0
    n_dropped_full: int = 0
    heteroscedasticity_score: float = float("nan")

    @property
    def scale(self) -> float:
        """The multiplicative constant ``a``; irrelevant for ranking."""
        return math.exp(self.intercept)


def fit_loss_params(cleaned: CleanedSamples) -> RegressionFit:
    """Least-squares fit of ``log L`` on ``log eps`` and ``log A`` with an intercept.

    Regressors are centred before forming the normal equations; the
    intercept and its standard error are recovered from the means.
    """
    n = len(cleaned)
    if n < 3:
        raise InsufficientSamplesError(f"need at least 3 samples, got {n}")
    x = np.column_stack([np.log(cleaned.epsilon), np.log(cleaned.actual)])
    y = np.log(cleaned.loss)
    x_mean = x.mean(axis=0)
    y_mean = y.mean()
    xc = x - x_mean
    gram = xc.T @ xc
    r, perm = _pivoted_cholesky(gram)
    beta = _solve_normal(r, perm, xc.T @ (y - y_mean))
    intercept = y_mean - x_mean @ beta
    residuals = y - intercept - x @ beta

    dof = n - 3
    if dof > 0:
        s2 = float(residuals @ residuals) / dof
        gram_inv = _solve_normal(r, perm, np.eye(2))
        se_beta = np.sqrt(s2 * np.diag(gram_inv))
        se_icpt = math.sqrt(s2 * (1.0 / n + x_mean @ gram_inv @ x_mean))
    else:
        se_beta = np.array([math.nan, math.nan])
        se_icpt = math.nan

    return RegressionFit(
        p_hat=float(beta[0]), q_hat=float(beta[1]), intercept=float(intercept),
        residuals=residuals, standard_errors=(float(se_beta[0]), float(se_beta[1]), se_icpt),
        n_used=n, n_dropped_zero_u=cleaned.n_dropped_zero_u, n_floored=cleaned.n_floored,
        n_dropped_full=cleaned.n_dropped_full,
        heteroscedasticity_score=_breusch_pagan(residuals, x[:, 1]),
    )


def _breusch_pagan(residuals: np.ndarray, log_actual: np.ndarray) -> float:
    """n * R^2 from regressing squared residuals on log A."""
    e2 = residuals ** 2
    xc = log_actual - log_actual.mean()
    ec = e2 - e2.mean()
    sxx, syy = float(xc @ xc), float(ec @ ec)
    if sxx <= 0 or syy <= 0:
        return 0.0
    return len(residuals) * float(xc @ ec) ** 2 / (sxx * syy)


@dataclass
class SpecificationResult:
    property1_holds: bool
    p_positive: bool
    sum_pq: float
    diagnostics: list[str] = field(default_factory=list)


def specification_test(fit: RegressionFit) -> SpecificationResult:
    """Check the fitted exponents; violations are reported, never raised."""
    sum_pq = fit.p_hat + fit.q_hat
    notes = []
    if sum_pq <= 0:
        notes.append(
            f"p + q = {sum_pq:.6g} <= 0: loss does not rise with A at fixed relative error; "
            "the functional form may be misspecified or preferences violate the property")
    if fit.p_hat <= 0:
        notes.append(f"p = {fit.p_hat:.6g} <= 0: loss does not increase with the error")
    if fit.heteroscedasticity_score > _BP_CRITICAL:
        notes.append(
            f"heteroscedasticity score {fit.heteroscedasticity_score:.4g} exceeds "
            f"{_BP_CRITICAL:.4g} (5% level); consider weighted regression")
    return SpecificationResult(sum_pq > 0, fit.p_hat > 0, sum_pq, notes)
