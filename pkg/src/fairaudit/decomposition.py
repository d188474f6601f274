"""Bias-variance-noise decomposition of group costs and of the
discrimination level.

The expectation over training sets is taken uniformly over the T trained
ensemble members, which makes every decomposition an exact finite
identity: for each evaluation point,

    E_{models,Y}[loss] = c_n * N + B + c_v * V

holds to machine precision, and group costs satisfy
gamma_a = N_a + B_a + V_a where the noise and variance terms carry their
sign factors c_n and c_v.

When the conditional outcome distribution is unknown, y* is unavailable:
only the (unsigned) variance is reported exactly, together with a
combined bias+noise residual.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, Task, bootstrap_resample, derive_seed
from .errors import AnalysisError, DataError
from .learners import LearnerSpec, apply_threshold, train
from .stats import TestResult, two_tailed_normal_p
from .synth import ConditionalOutcomeModel


class Loss(enum.Enum):
    ZERO_ONE = "zero_one"
    SQUARED = "squared"


@dataclass(frozen=True)
class EnsemblePredictions:
    """T x n prediction matrix over a fixed evaluation set.

    Hard labels for zero-one analyses, reals for squared loss.
    """

    predictions: np.ndarray
    spec: LearnerSpec
    n_train: int
    source: str  # "fresh_draws" or "bootstrap"
    seed: int

    def __post_init__(self):
        preds = np.ascontiguousarray(self.predictions, dtype=np.float64)
        object.__setattr__(self, "predictions", preds)
        if preds.ndim != 2 or preds.shape[0] < 2:
            raise DataError("ensemble needs a T x n matrix with T >= 2")

    @property
    def n_models(self) -> int:
        return self.predictions.shape[0]

    @property
    def n_points(self) -> int:
        return self.predictions.shape[1]


@dataclass(frozen=True)
class PointDecomposition:
    y_star: float
    y_main: float
    noise: float
    bias: float
    variance: float
    c_n: float
    c_v: float

    @property
    def expected_loss(self) -> float:
        return self.c_n * self.noise + self.bias + self.c_v * self.variance


@dataclass(frozen=True)
class GroupDecomposition:
    """Per-group decomposition terms.

    In known-outcome mode, ``noise``, ``bias``, ``variance`` are the
    signed aggregates and sum to ``cost`` exactly.  In
    unknown mode only ``variance_raw`` and the ``bias_noise_residual``
    are populated.
    """

    group: int
    cost: float
    mode: str  # "known" or "unknown"
    noise: float | None = None
    bias: float | None = None
    variance: float | None = None
    variance_raw: float = 0.0
    bias_noise_residual: float | None = None
    n_points: int = 0


def ensemble_train(
    spec: LearnerSpec,
    source,
    t_models: int,
    n_train: int,
    eval_set: Dataset,
    seed: int,
    threshold: float = 0.5,
) -> EnsemblePredictions:
    """Train T models on resampled training sets; record eval predictions.

    ``source`` is either a Dataset (trials are bootstrap resamples of size
    n_train) or a callable ``sampler(n, seed) -> Dataset`` drawing fresh
    training sets.  Per-trial seeds derive from (seed, trial), so results
    do not depend on execution order.
    """
    if t_models < 2:
        raise AnalysisError("ensemble needs T >= 2 models")
    rows = []
    fresh = callable(source)
    for t in range(t_models):
        trial_seed = derive_seed(seed, "ensemble", t)
        if fresh:
            train_set = source(n_train, trial_seed)
        else:
            train_set = bootstrap_resample(source, n_train, trial_seed)
        model = train(replace(spec, seed=trial_seed), train_set)
        scores = model.predict_scores(eval_set.features)
        if eval_set.task is Task.BINARY:
            rows.append(apply_threshold(scores, threshold))
        else:
            rows.append(scores)
    return EnsemblePredictions(
        predictions=np.vstack(rows),
        spec=spec,
        n_train=n_train,
        source="fresh_draws" if fresh else "bootstrap",
        seed=seed,
    )


def main_prediction(
    e: EnsemblePredictions, i: int, loss: Loss
) -> float:
    """Majority vote (ties toward 0) for zero-one; mean for squared."""
    column = e.predictions[:, i]
    if loss is Loss.SQUARED:
        return float(column.mean())
    return 1.0 if column.mean() > 0.5 else 0.0


def _point_terms_zero_one(column: np.ndarray, p1: float) -> PointDecomposition:
    """Pointwise zero-one terms given p(Y=1|x,a) and the ensemble column."""
    y_star = 1.0 if p1 > 0.5 else 0.0  # ties toward 0
    noise = min(p1, 1.0 - p1)
    frac1 = float(column.mean())
    y_main = 1.0 if frac1 > 0.5 else 0.0
    bias = 1.0 if y_main != y_star else 0.0
    variance = float(np.mean(column != y_main))
    c_v = 1.0 if y_main == y_star else -1.0
    c_n = 2.0 * float(np.mean(column == y_star)) - 1.0
    return PointDecomposition(
        y_star=y_star,
        y_main=y_main,
        noise=noise,
        bias=bias,
        variance=variance,
        c_n=c_n,
        c_v=c_v,
    )


def _point_terms_squared(
    column: np.ndarray, mean: float, var: float
) -> PointDecomposition:
    y_main = float(column.mean())
    bias = (y_main - mean) ** 2
    variance = float(np.mean((column - y_main) ** 2))
    return PointDecomposition(
        y_star=mean,
        y_main=y_main,
        noise=var,
        bias=bias,
        variance=variance,
        c_n=1.0,
        c_v=1.0,
    )


def point_decomposition(
    e: EnsemblePredictions,
    i: int,
    eval_set: Dataset,
    om: ConditionalOutcomeModel,
    loss: Loss,
) -> PointDecomposition:
    """Exact pointwise decomposition; requires a known outcome model."""
    if om is None:
        raise AnalysisError(
            "pointwise decomposition needs a known outcome model; "
            "use group_decomposition in unknown mode instead"
        )
    if not 0 <= i < e.n_points:
        raise DataError(f"point index {i} out of range")
    x = eval_set.features[i]
    a = int(eval_set.group[i])
    column = e.predictions[:, i]
    if loss is Loss.ZERO_ONE:
        return _point_terms_zero_one(column, om.prob(x, a))
    return _point_terms_squared(column, om.mean(x, a), om.var(x, a))


def _expected_losses_zero_one(e, rows, p1) -> np.ndarray:
    """E_{models,Y}[zero-one loss] per point: average over models of
    p*1[yhat != 1] + (1-p)*1[yhat != 0]."""
    preds = e.predictions[:, rows]
    return np.mean(p1 * (preds != 1.0) + (1.0 - p1) * (preds != 0.0), axis=0)


def group_decomposition(
    e: EnsemblePredictions,
    eval_set: Dataset,
    om: ConditionalOutcomeModel | None,
    loss: Loss,
    a: int,
) -> GroupDecomposition:
    """Group-weighted decomposition; ``om=None`` selects unknown mode."""
    if e.n_points != eval_set.n:
        raise DataError("ensemble not aligned with evaluation set")
    rows = eval_set.group_indices(a)
    if rows.size == 0:
        raise AnalysisError(f"group {a} is empty in the evaluation set")
    preds = e.predictions[:, rows]

    if om is None:
        y = eval_set.outcome[rows]
        if loss is Loss.ZERO_ONE:
            cost = float(np.mean(preds != y))
            y_main = (preds.mean(axis=0) > 0.5).astype(np.float64)
            variance_raw = float(np.mean(preds != y_main))
        else:
            cost = float(np.mean((preds - y) ** 2))
            y_main = preds.mean(axis=0)
            variance_raw = float(np.mean((preds - y_main) ** 2))
        return GroupDecomposition(
            group=a,
            cost=cost,
            mode="unknown",
            variance_raw=variance_raw,
            bias_noise_residual=cost - variance_raw,
            n_points=rows.size,
        )

    points = [
        point_decomposition(e, int(i), eval_set, om, loss) for i in rows
    ]
    noise = float(np.mean([p.c_n * p.noise for p in points]))
    bias = float(np.mean([p.bias for p in points]))
    variance = float(np.mean([p.c_v * p.variance for p in points]))
    variance_raw = float(np.mean([p.variance for p in points]))
    cost = float(np.mean([p.expected_loss for p in points]))
    return GroupDecomposition(
        group=a,
        cost=cost,
        mode="known",
        noise=noise,
        bias=bias,
        variance=variance,
        variance_raw=variance_raw,
        n_points=rows.size,
    )


def class_conditional_decomposition(
    e: EnsemblePredictions,
    eval_set: Dataset,
    om: ConditionalOutcomeModel | None,
    a: int,
    y: int,
) -> GroupDecomposition:
    """Decomposition of the class-conditional zero-one cost (FNR for y=1,
    FPR for y=0).

    Known mode weights group-a points by p(y|x,a); unknown mode conditions
    on the observed labels and reports the bias+noise residual.
    """
    if y not in (0, 1):
        raise AnalysisError("conditioning class must be 0 or 1")
    if e.n_points != eval_set.n:
        raise DataError("ensemble not aligned with evaluation set")
    rows = eval_set.group_indices(a)
    if rows.size == 0:
        raise AnalysisError(f"group {a} is empty in the evaluation set")

    if om is None:
        mask = eval_set.outcome[rows] == float(y)
        if not mask.any():
            raise AnalysisError(
                f"group {a} has no observed Y={y} rows"
            )
        sub = rows[mask]
        preds = e.predictions[:, sub]
        cost = float(np.mean(preds != float(y)))
        y_main = (preds.mean(axis=0) > 0.5).astype(np.float64)
        variance_raw = float(np.mean(preds != y_main))
        return GroupDecomposition(
            group=a,
            cost=cost,
            mode="unknown",
            variance_raw=variance_raw,
            bias_noise_residual=cost - variance_raw,
            n_points=int(mask.sum()),
        )

    weights = np.array(
        [om.prob(eval_set.features[i], a) for i in rows], dtype=np.float64
    )
    if y == 0:
        weights = 1.0 - weights
    total = weights.sum()
    if total <= 0.0:
        raise AnalysisError(f"group {a} has zero mass on class {y}")
    weights = weights / total

    noise = bias = variance = cost = 0.0
    for w, i in zip(weights, rows):
        p = point_decomposition(e, int(i), eval_set, om, Loss.ZERO_ONE)
        fixed_loss_star = 1.0 if p.y_star != float(y) else 0.0
        column = e.predictions[:, int(i)]
        point_cost = float(np.mean(column != float(y)))
        noise += w * p.c_n * fixed_loss_star
        bias += w * p.bias
        variance += w * p.c_v * p.variance
        cost += w * point_cost
    return GroupDecomposition(
        group=a,
        cost=cost,
        mode="known",
        noise=noise,
        bias=bias,
        variance=variance,
        variance_raw=variance,
        n_points=rows.size,
    )


def gamma_bar(
    decomps: dict[int, GroupDecomposition]
) -> float:
    """Discrimination level from per-group decompositions (max-min gap)."""
    costs = [dec.cost for dec in decomps.values()]
    if len(costs) < 2:
        raise AnalysisError("need at least 2 groups")
    return float(max(costs) - min(costs))


def compare_models_bias_variance(
    e1: EnsemblePredictions,
    e2: EnsemblePredictions,
    eval_set: Dataset,
    loss: Loss,
    level: float = 0.05,
    groups: tuple[int, int] = (0, 1),
) -> TestResult:
    """Test H0: the bias+variance gap terms of two models agree.

    Noise cancels between models, so the statistic reduces to the
    difference of the observed cost gaps; the variance uses per-point
    paired contributions since both ensembles share the evaluation set.
    """
    if e1.n_points != eval_set.n or e2.n_points != eval_set.n:
        raise DataError("ensembles not aligned with evaluation set")
    g0, g1 = groups
    y = eval_set.outcome

    def point_losses(e):
        if loss is Loss.ZERO_ONE:
            return np.mean(e.predictions != y, axis=0)
        return np.mean((e.predictions - y) ** 2, axis=0)

    u = point_losses(e1) - point_losses(e2)
    rows0 = eval_set.group_indices(g0)
    rows1 = eval_set.group_indices(g1)
    if rows0.size == 0 or rows1.size == 0:
        raise AnalysisError("both groups must be present")
    stat = float(u[rows0].mean() - u[rows1].mean())
    var = (u[rows0].var(ddof=1) / rows0.size if rows0.size > 1 else 0.0) + (
        u[rows1].var(ddof=1) / rows1.size if rows1.size > 1 else 0.0
    )
    if var == 0.0:
        p = 1.0 if stat == 0.0 else 0.0
    else:
        p = two_tailed_normal_p(stat / np.sqrt(var))
    return TestResult(
        name=f"compare_models_bias_variance[{loss.value}]",
        statistic=stat,
        p_value=p,
        level=level,
        reject=p < level,
        detail={"groups": groups, "counts": (rows0.size, rows1.size)},
    )


def homoskedastic_noise_gap(
    om: ConditionalOutcomeModel, eval_set: Dataset, groups: tuple[int, int] = (0, 1)
) -> float:
    """N_0 - N_1 under squared loss, computed from the outcome model over
    the evaluation measure.

    Only valid for regression: under squared loss c_n = 1 so the group
    noise is the plain average of conditional variances.  For zero-one
    costs the c_n factor depends on the model and the gap is not a pure
    property of the outcome distribution.
    """
    if om is None or om.task is not Task.REGRESSION:
        raise AnalysisError(
            "noise-gap shortcut applies only to regression with a known "
            "outcome model (zero-one noise terms carry model-dependent c_n)"
        )
    means = []
    for a in groups:
        rows = eval_set.group_indices(a)
        if rows.size == 0:
            raise AnalysisError(f"group {a} is empty")
        values = np.array(
            [om.var(eval_set.features[i], a) for i in rows], dtype=np.float64
        )
        # mean of a constant sample is that constant; bypass summation
        # rounding so the homoskedastic case gives an exact zero gap
        if np.ptp(values) == 0.0:
            means.append(float(values[0]))
        else:
            means.append(float(values.mean()))
    return means[0] - means[1]
