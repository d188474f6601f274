"""Group-wise Bayes-error bounds: Mahalanobis, Bhattacharyya, and
nearest-neighbor (Cover-Hart) estimates.

All bounds are computed within one protected group, with the binary
outcome playing the role of the class label.  Features are z-scored by
default (fit on the group's rows); covariances are ridge-regularized with
lambda = 1e-3 * trace / k, which is necessary on one-hot-expanded,
rank-deficient feature matrices.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .data import Dataset, Task
from .errors import AnalysisError


class BoundMethod(enum.Enum):
    MAHALANOBIS = "mahalanobis"
    BHATTACHARYYA = "bhattacharyya"
    NEAREST_NEIGHBOR = "nearest_neighbor"


@dataclass(frozen=True)
class NoiseBoundEstimate:
    method: BoundMethod
    group: int
    e_low: float | None
    e_up: float
    priors: tuple[float, float]
    auxiliary: dict

    def __post_init__(self):
        if self.e_low is not None:
            assert 0.0 <= self.e_low <= self.e_up + 1e-12


def _group_class_stats(d: Dataset, a: int, standardize: bool):
    if d.task is not Task.BINARY:
        raise AnalysisError("noise bounds require a binary task")
    rows = d.group_indices(a)
    if rows.size == 0:
        raise AnalysisError(f"group {a} has no rows")
    X = d.features[rows]
    y = d.outcome[rows]
    if standardize:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        X = (X - mean) / scale
    neg = X[y == 0.0]
    pos = X[y == 1.0]
    if neg.shape[0] < 2 or pos.shape[0] < 2:
        raise AnalysisError(
            f"group {a} needs >= 2 samples of each class for noise bounds"
        )
    m = rows.size
    priors = (neg.shape[0] / m, pos.shape[0] / m)
    return neg, pos, priors


def _regularized_cov(X: np.ndarray) -> np.ndarray:
    cov = np.cov(X, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov)
    k = cov.shape[0]
    lam = 1e-3 * np.trace(cov) / k
    if lam <= 0:
        lam = 1e-6
    return cov + lam * np.eye(k)


def mahalanobis_upper(
    d: Dataset, a: int, standardize: bool = True
) -> NoiseBoundEstimate:
    """Upper bound 2 p1 p2 / (1 + p1 p2 * Delta) from the Mahalanobis
    distance between class means under a pooled covariance."""
    neg, pos, priors = _group_class_stats(d, a, standardize)
    p1, p2 = priors
    n1, n2 = neg.shape[0], pos.shape[0]
    diff = pos.mean(axis=0) - neg.mean(axis=0)
    pooled = (
        (n1 - 1) * np.atleast_2d(np.cov(neg, rowvar=False, ddof=1))
        + (n2 - 1) * np.atleast_2d(np.cov(pos, rowvar=False, ddof=1))
    ) / (n1 + n2 - 2)
    k = pooled.shape[0]
    lam = 1e-3 * np.trace(pooled) / k
    if lam <= 0:
        lam = 1e-6
    pooled = pooled + lam * np.eye(k)
    delta = float(diff @ np.linalg.solve(pooled, diff))
    if not math.isfinite(delta):
        raise AnalysisError("non-finite Mahalanobis distance")
    e_up = 2.0 * p1 * p2 / (1.0 + p1 * p2 * delta)
    return NoiseBoundEstimate(
        method=BoundMethod.MAHALANOBIS,
        group=a,
        e_low=None,
        e_up=float(e_up),
        priors=priors,
        auxiliary={"delta": delta, "regularization": lam},
    )


def bhattacharyya_bounds(
    d: Dataset, a: int, standardize: bool = True
) -> NoiseBoundEstimate:
    """Gaussian-assumption Bhattacharyya distance bounds.

    B = (1/8) * dmu' Sbar^-1 dmu + (1/2) ln(det Sbar / sqrt(det S0 det S1)),
    rho = exp(-B); E_up = sqrt(p1 p2) rho,
    E_low = (1 - sqrt(1 - 4 p1 p2 rho^2)) / 2.
    """
    neg, pos, priors = _group_class_stats(d, a, standardize)
    p1, p2 = priors
    cov0 = _regularized_cov(neg)
    cov1 = _regularized_cov(pos)
    avg = 0.5 * (cov0 + cov1)
    diff = pos.mean(axis=0) - neg.mean(axis=0)
    sign, logdet_avg = np.linalg.slogdet(avg)
    sign0, logdet0 = np.linalg.slogdet(cov0)
    sign1, logdet1 = np.linalg.slogdet(cov1)
    if sign <= 0 or sign0 <= 0 or sign1 <= 0:
        raise AnalysisError("regularized covariance not positive definite")
    dist = 0.125 * float(diff @ np.linalg.solve(avg, diff)) + 0.5 * (
        logdet_avg - 0.5 * (logdet0 + logdet1)
    )
    rho = math.exp(-dist)
    e_up = math.sqrt(p1 * p2) * rho
    inner = max(0.0, 1.0 - 4.0 * p1 * p2 * rho * rho)
    e_low = 0.5 * (1.0 - math.sqrt(inner))
    return NoiseBoundEstimate(
        method=BoundMethod.BHATTACHARYYA,
        group=a,
        e_low=float(e_low),
        e_up=float(e_up),
        priors=priors,
        auxiliary={"bhattacharyya_distance": dist, "rho": rho},
    )


def cover_hart_lower(eps: float) -> float:
    """Invert the asymptotic nearest-neighbor error into a Bayes-error
    lower bound: (1 - sqrt(max(0, 1 - 2 eps))) / 2, clamped at 0.5."""
    if eps < 0.0:
        raise AnalysisError("error rate must be >= 0")
    if eps > 0.5:
        return 0.5
    return 0.5 * (1.0 - math.sqrt(max(0.0, 1.0 - 2.0 * eps)))


def nn_bounds(
    d: Dataset,
    a: int,
    k: int = 5,
    folds: int = 5,
    seed: int = 0,
    standardize: bool = True,
    max_samples: int | None = None,
) -> NoiseBoundEstimate:
    """Cross-validated k-NN error within group a, with the Cover-Hart
    inversion for the lower bound.

    ``max_samples`` optionally subsamples the group (deterministically)
    to keep the all-pairs distance computation tractable.
    """
    if d.task is not Task.BINARY:
        raise AnalysisError("noise bounds require a binary task")
    rows = d.group_indices(a)
    if rows.size < folds:
        raise AnalysisError(
            f"group {a} has {rows.size} rows; needs >= {folds} for "
            f"{folds}-fold cross validation"
        )
    rng = np.random.default_rng(seed)
    if max_samples is not None and rows.size > max_samples:
        rows = rows[np.sort(rng.choice(rows.size, size=max_samples, replace=False))]
    X = d.features[rows]
    y = d.outcome[rows]
    if standardize:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        X = (X - mean) / scale
    fold = rng.permutation(rows.size) % folds
    errors = kernels.knn_loo_fold_errors(
        np.ascontiguousarray(X),
        np.ascontiguousarray(y),
        np.ascontiguousarray(fold, dtype=np.int64),
        k,
        folds,
    )
    eps = float(errors.mean())
    e_up = min(eps, 0.5) if eps > 0.5 else eps
    neg = int((y == 0.0).sum())
    return NoiseBoundEstimate(
        method=BoundMethod.NEAREST_NEIGHBOR,
        group=a,
        e_low=cover_hart_lower(eps),
        e_up=float(e_up),
        priors=(neg / rows.size, 1.0 - neg / rows.size),
        auxiliary={"cv_error": eps, "k": k, "folds": folds, "n_used": rows.size},
    )


def all_bounds(
    d: Dataset, k: int = 5, folds: int = 5, seed: int = 0,
    standardize: bool = True, max_samples: int | None = None,
) -> list[NoiseBoundEstimate]:
    """All three methods for every group."""
    out = []
    for a in range(d.n_groups):
        out.append(mahalanobis_upper(d, a, standardize))
        out.append(bhattacharyya_bounds(d, a, standardize))
        out.append(
            nn_bounds(d, a, k=k, folds=folds, seed=seed,
                      standardize=standardize, max_samples=max_samples)
        )
    return out
