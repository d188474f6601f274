"""Group-conditional cost functions and the discrimination level.

Costs are empirical means of per-sample losses over a protected group,
optionally conditioned on the true class (FPR conditions on Y=0, FNR on
Y=1).  The discrimination level is the max-min gap across groups, which
reduces to the absolute two-group difference when G=2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, Task
from .errors import AnalysisError, DataError


class CostKind(enum.Enum):
    ZERO_ONE = "zero_one"
    FPR = "fpr"
    FNR = "fnr"
    MSE = "mse"
    GENERALIZED_ZERO_ONE = "generalized_zero_one"
    BRIER = "brier"

    @property
    def task(self) -> Task:
        return Task.REGRESSION if self is CostKind.MSE else Task.BINARY

    @property
    def needs_scores(self) -> bool:
        return self in (CostKind.GENERALIZED_ZERO_ONE, CostKind.BRIER)


@dataclass(frozen=True)
class PredictionSet:
    """One model's output on an evaluation set: scores and/or hard labels.

    For regression, ``scores`` holds the real-valued predictions.
    """

    scores: np.ndarray | None = None
    labels: np.ndarray | None = None

    def __post_init__(self):
        if self.scores is None and self.labels is None:
            raise DataError("PredictionSet needs scores or labels")
        for name in ("scores", "labels"):
            arr = getattr(self, name)
            if arr is not None:
                object.__setattr__(
                    self, name, np.ascontiguousarray(arr, dtype=np.float64)
                )

    @property
    def n(self) -> int:
        arr = self.scores if self.scores is not None else self.labels
        return arr.shape[0]

    def hard(self, threshold: float = 0.5) -> np.ndarray:
        """Hard labels, thresholding scores at ``threshold`` if needed."""
        if self.labels is not None:
            return self.labels
        return (self.scores >= threshold).astype(np.float64)


@dataclass(frozen=True)
class GroupCostReport:
    cost_kind: CostKind
    groups: tuple[int, ...]
    costs: tuple[float, ...]
    counts: tuple[int, ...]
    variances: tuple[float, ...]
    gap: float
    skipped_groups: tuple[int, ...] = ()
    warnings: tuple[str, ...] = field(default=())


def per_sample_losses(
    preds: PredictionSet, d: Dataset, kind: CostKind, a: int
) -> np.ndarray:
    """Per-sample losses over the subset of group ``a`` relevant to ``kind``.

    The cost is their mean; their unbiased variance feeds the normal
    approximations of the significance tests.
    """
    if preds.n != d.n:
        raise DataError(
            f"predictions have {preds.n} rows but dataset has {d.n}"
        )
    if kind.task is not d.task:
        raise AnalysisError(
            f"cost kind {kind.value} requires a {kind.task.value} task"
        )
    rows = d.group_indices(a)
    if rows.size == 0:
        raise AnalysisError(f"group {a} has no rows in the evaluation set")
    y = d.outcome[rows]

    if kind is CostKind.MSE:
        pred = (preds.scores if preds.scores is not None else preds.labels)[rows]
        return (pred - y) ** 2

    if kind.needs_scores:
        if preds.scores is None:
            raise AnalysisError(f"cost kind {kind.value} requires scores")
        s = preds.scores[rows]
        if np.any((s < 0.0) | (s > 1.0)):
            raise AnalysisError("scores outside [0,1]")
        if kind is CostKind.BRIER:
            return (s - y) ** 2
        # Generalized zero-one: expected zero-one loss of a randomized
        # classifier that accepts with probability s.
        return y * (1.0 - s) + (1.0 - y) * s

    yhat = preds.hard()[rows]
    if kind is CostKind.ZERO_ONE:
        return (yhat != y).astype(np.float64)
    if kind is CostKind.FPR:
        negatives = y == 0.0
        if not negatives.any():
            raise AnalysisError(f"group {a} has no Y=0 rows; FPR undefined")
        return yhat[negatives].astype(np.float64)
    if kind is CostKind.FNR:
        positives = y == 1.0
        if not positives.any():
            raise AnalysisError(f"group {a} has no Y=1 rows; FNR undefined")
        return (1.0 - yhat[positives]).astype(np.float64)
    raise AnalysisError(f"unhandled cost kind {kind}")


def group_cost(
    preds: PredictionSet, d: Dataset, kind: CostKind, a: int
) -> tuple[float, int, float]:
    """Return (cost, m_a, unbiased per-sample loss variance) for group a."""
    losses = per_sample_losses(preds, d, kind, a)
    m = losses.size
    variance = float(losses.var(ddof=1)) if m > 1 else 0.0
    return float(losses.mean()), m, variance


def discrimination_level(
    preds: PredictionSet, d: Dataset, kind: CostKind
) -> GroupCostReport:
    """Per-group costs and the gap Gamma = max cost - min cost.

    Groups where a class-conditional cost is undefined are excluded and
    reported in ``skipped_groups`` with a warning.
    """
    groups, costs, counts, variances = [], [], [], []
    skipped, warnings = [], []
    for a in range(d.n_groups):
        try:
            cost, m, var = group_cost(preds, d, kind, a)
        except AnalysisError as exc:
            skipped.append(a)
            warnings.append(f"group {a} skipped: {exc}")
            continue
        groups.append(a)
        costs.append(cost)
        counts.append(m)
        variances.append(var)
    if len(groups) < 2:
        raise AnalysisError(
            f"fewer than 2 evaluable groups for {kind.value}"
        )
    gap = float(max(costs) - min(costs))
    return GroupCostReport(
        cost_kind=kind,
        groups=tuple(groups),
        costs=tuple(costs),
        counts=tuple(counts),
        variances=tuple(variances),
        gap=gap,
        skipped_groups=tuple(skipped),
        warnings=tuple(warnings),
    )


def brier_score(scores: np.ndarray, d: Dataset, a: int) -> float:
    """Mean squared difference between score and binary outcome in group a."""
    scores = np.asarray(scores, dtype=np.float64)
    if d.task is not Task.BINARY:
        raise AnalysisError("Brier score requires a binary task")
    if np.any((scores < 0.0) | (scores > 1.0)):
        raise AnalysisError("scores outside [0,1]")
    rows = d.group_indices(a)
    if rows.size == 0:
        raise AnalysisError(f"group {a} has no rows")
    return float(np.mean((scores[rows] - d.outcome[rows]) ** 2))


def generalized_zero_one(scores: np.ndarray, d: Dataset, a: int) -> float:
    """Expected zero-one cost of score-as-probability randomization."""
    scores = np.asarray(scores, dtype=np.float64)
    if d.task is not Task.BINARY:
        raise AnalysisError("generalized zero-one requires a binary task")
    if np.any((scores < 0.0) | (scores > 1.0)):
        raise AnalysisError("scores outside [0,1]")
    rows = d.group_indices(a)
    if rows.size == 0:
        raise AnalysisError(f"group {a} has no rows")
    y = d.outcome[rows]
    s = scores[rows]
    return float(np.mean(y * (1.0 - s) + (1.0 - y) * s))
