"""Significance machinery: z-test for the discrimination level, paired
comparison of two models' discrimination, bootstrap confidence intervals,
one-way ANOVA, and pairwise Welch tests with Holm correction.

Distribution functions (normal, Student t, F) are implemented internally
via the error function and the regularized incomplete beta function; no
external statistics dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .costs import CostKind, PredictionSet, per_sample_losses
from .data import Dataset
from .errors import AnalysisError, DataError


# ---------------------------------------------------------------------------
# Distribution functions


def normal_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def two_tailed_normal_p(z: float) -> float:
    return min(1.0, 2.0 * normal_sf(abs(z)))


def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta function (Lentz's method).
    max_iter = 500
    eps = 1e-15
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise AnalysisError("incomplete beta continued fraction did not converge")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise AnalysisError(f"x={x} outside [0,1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_sf(f: float, d1: float, d2: float) -> float:
    """Upper tail of the F distribution."""
    if f <= 0.0:
        return 1.0
    return reg_inc_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f))


def t_sf(t: float, df: float) -> float:
    """Upper tail of the Student t distribution."""
    if df <= 0:
        raise AnalysisError("degrees of freedom must be positive")
    x = df / (df + t * t)
    p = 0.5 * reg_inc_beta(df / 2.0, 0.5, x)
    return p if t >= 0 else 1.0 - p


def two_tailed_t_p(t: float, df: float) -> float:
    return min(1.0, 2.0 * t_sf(abs(t), df))


# ---------------------------------------------------------------------------
# Results


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    p_value: float
    level: float
    reject: bool
    detail: dict = None

    def __post_init__(self):
        assert 0.0 <= self.p_value <= 1.0
        assert self.reject == (self.p_value < self.level)


# ---------------------------------------------------------------------------
# Tests


def gamma_z_test(
    preds: PredictionSet,
    d: Dataset,
    kind: CostKind,
    level: float = 0.05,
    groups: tuple[int, int] = (0, 1),
) -> TestResult:
    """Two-tailed z-test for the gap between two groups' costs.

    Uses the normal approximation gamma_a ~ N(mu_a, sigma_a^2 / m_a).
    """
    g0, g1 = groups
    l0 = per_sample_losses(preds, d, kind, g0)
    l1 = per_sample_losses(preds, d, kind, g1)
    m0, m1 = l0.size, l1.size
    warnings = []
    if min(m0, m1) < 30:
        warnings.append(
            f"small sample ({min(m0, m1)} < 30): normal approximation weak"
        )
    gap = float(l0.mean() - l1.mean())
    var0 = float(l0.var(ddof=1)) if m0 > 1 else 0.0
    var1 = float(l1.var(ddof=1)) if m1 > 1 else 0.0
    se = math.sqrt(var0 / m0 + var1 / m1)
    if se == 0.0:
        z = 0.0 if gap == 0.0 else math.copysign(math.inf, gap)
        p = 1.0 if gap == 0.0 else 0.0
    else:
        z = gap / se
        p = two_tailed_normal_p(z)
    return TestResult(
        name=f"gamma_z_test[{kind.value}]",
        statistic=z,
        p_value=p,
        level=level,
        reject=p < level,
        detail={
            "gap": gap,
            "se": se,
            "groups": groups,
            "counts": (m0, m1),
            "variances": (var0, var1),
            "warnings": warnings,
        },
    )


def compare_discrimination_test(
    preds_a: PredictionSet,
    preds_b: PredictionSet,
    d: Dataset,
    kind: CostKind,
    level: float = 0.05,
    groups: tuple[int, int] = (0, 1),
) -> TestResult:
    """Test H0: the discrimination levels of two models are equal.

    |Gamma - Gamma'| = min over alpha in {-1,+1} of |Z_alpha|, where each
    Z_alpha is normal; H0 is rejected only when both Z_alpha are unlikely.
    Standard errors use paired per-sample loss contributions, since both
    models are evaluated on the same sample.
    """
    if preds_a.n != d.n or preds_b.n != d.n:
        raise DataError("prediction sets not aligned with dataset")
    g0, g1 = groups
    la0 = per_sample_losses(preds_a, d, kind, g0)
    la1 = per_sample_losses(preds_a, d, kind, g1)
    lb0 = per_sample_losses(preds_b, d, kind, g0)
    lb1 = per_sample_losses(preds_b, d, kind, g1)
    if la0.size != lb0.size or la1.size != lb1.size:
        raise DataError("conditioning subsets differ between models")

    p_values = []
    z_values = []
    for alpha in (+1.0, -1.0):
        # Z_alpha = alpha*(gamma0^A - gamma1^A) - (gamma0^B - gamma1^B);
        # grouping per-sample terms keeps the pairing.
        u0 = alpha * la0 - lb0
        u1 = alpha * la1 - lb1
        z_stat = float(u0.mean() - u1.mean())
        var = (u0.var(ddof=1) / u0.size if u0.size > 1 else 0.0) + (
            u1.var(ddof=1) / u1.size if u1.size > 1 else 0.0
        )
        se = math.sqrt(var)
        if se == 0.0:
            p = 1.0 if z_stat == 0.0 else 0.0
        else:
            p = two_tailed_normal_p(z_stat / se)
        p_values.append(p)
        z_values.append(z_stat)
    # Intersection test: both must be unlikely.
    p = max(p_values)
    gap_a = float(la0.mean() - la1.mean())
    gap_b = float(lb0.mean() - lb1.mean())
    statistic = abs(abs(gap_a) - abs(gap_b))
    return TestResult(
        name=f"compare_discrimination[{kind.value}]",
        statistic=statistic,
        p_value=p,
        level=level,
        reject=p < level,
        detail={
            "z_plus": z_values[0],
            "z_minus": z_values[1],
            "p_plus": p_values[0],
            "p_minus": p_values[1],
            "gap_a": gap_a,
            "gap_b": gap_b,
        },
    )


def bootstrap_gamma_ci(
    preds: PredictionSet,
    d: Dataset,
    kind: CostKind,
    reps: int = 1000,
    level: float = 0.05,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap interval for the discrimination level Gamma.

    Resamples the evaluation rows; replicates where fewer than 2 groups are
    evaluable are skipped (error if more than 10% skip).
    """
    if reps < 100:
        raise AnalysisError("reps must be >= 100")
    rng = np.random.default_rng(seed)
    groups = sorted(set(d.group.tolist()))
    gammas = []
    skipped = 0
    for _ in range(reps):
        idx = rng.integers(0, d.n, size=d.n)
        db = d.take(idx)
        pb = PredictionSet(
            scores=None if preds.scores is None else preds.scores[idx],
            labels=None if preds.labels is None else preds.labels[idx],
        )
        costs = []
        for a in groups:
            try:
                costs.append(per_sample_losses(pb, db, kind, a).mean())
            except AnalysisError:
                continue
        if len(costs) < 2:
            skipped += 1
            continue
        gammas.append(max(costs) - min(costs))
    if skipped > 0.1 * reps:
        raise AnalysisError(
            f"{skipped}/{reps} bootstrap replicates lacked 2 evaluable groups"
        )
    lo = float(np.percentile(gammas, 100.0 * level / 2.0))
    hi = float(np.percentile(gammas, 100.0 * (1.0 - level / 2.0)))
    return lo, hi


def anova_f(group_losses: list[np.ndarray], level: float = 0.05) -> TestResult:
    """One-way ANOVA F-test over per-group loss samples."""
    samples = [np.asarray(g, dtype=np.float64) for g in group_losses]
    if len(samples) < 2:
        raise AnalysisError("ANOVA needs at least 2 groups")
    if any(s.size < 2 for s in samples):
        raise AnalysisError("every group needs at least 2 samples")
    n_total = sum(s.size for s in samples)
    grand = sum(s.sum() for s in samples) / n_total
    ss_between = sum(s.size * (s.mean() - grand) ** 2 for s in samples)
    ss_within = sum(((s - s.mean()) ** 2).sum() for s in samples)
    df_between = len(samples) - 1
    df_within = n_total - len(samples)
    if ss_within == 0.0:
        if ss_between == 0.0:
            f_stat, p = 0.0, 1.0
        else:
            f_stat, p = math.inf, 0.0
    else:
        f_stat = (ss_between / df_between) / (ss_within / df_within)
        p = f_sf(f_stat, df_between, df_within)
    return TestResult(
        name="anova_f",
        statistic=f_stat,
        p_value=p,
        level=level,
        reject=p < level,
        detail={
            "df": (df_between, df_within),
            "group_means": tuple(float(s.mean()) for s in samples),
            "group_counts": tuple(int(s.size) for s in samples),
        },
    )


def welch_t(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Welch two-sample t statistic, Welch-Satterthwaite df, and p-value."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2 or y.size < 2:
        raise AnalysisError("Welch test needs >= 2 samples per group")
    vx = x.var(ddof=1) / x.size
    vy = y.var(ddof=1) / y.size
    if vx + vy == 0.0:
        stat = 0.0 if x.mean() == y.mean() else math.inf
        return stat, float(x.size + y.size - 2), 1.0 if stat == 0.0 else 0.0
    stat = float((x.mean() - y.mean()) / math.sqrt(vx + vy))
    df = (vx + vy) ** 2 / (vx**2 / (x.size - 1) + vy**2 / (y.size - 1))
    return stat, float(df), two_tailed_t_p(stat, df)


def pairwise_welch_holm(
    group_losses: list[np.ndarray], level: float = 0.05
) -> dict[tuple[int, int], TestResult]:
    """All pairwise Welch t-tests with Holm step-down correction.

    Substitute for a studentized-range test: conservative, and needs no
    range-distribution tables.
    """
    samples = [np.asarray(g, dtype=np.float64) for g in group_losses]
    if len(samples) < 2:
        raise AnalysisError("need at least 2 groups")
    pairs = [
        (i, j)
        for i in range(len(samples))
        for j in range(i + 1, len(samples))
    ]
    raw = {}
    for i, j in pairs:
        stat, df, p = welch_t(samples[i], samples[j])
        raw[(i, j)] = (stat, df, p)
    # Holm step-down adjustment.
    order = sorted(pairs, key=lambda pr: raw[pr][2])
    m = len(pairs)
    adjusted = {}
    running_max = 0.0
    for rank, pair in enumerate(order):
        adj = min(1.0, (m - rank) * raw[pair][2])
        running_max = max(running_max, adj)
        adjusted[pair] = running_max
    results = {}
    for pair in pairs:
        stat, df, p = raw[pair]
        p_adj = adjusted[pair]
        results[pair] = TestResult(
            name=f"welch_holm[{pair[0]},{pair[1]}]",
            statistic=stat,
            p_value=p_adj,
            level=level,
            reject=p_adj < level,
            detail={"df": df, "p_raw": p},
        )
    return results
