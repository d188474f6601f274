import numpy as np
import pytest
from scipy import stats as sps

from fairaudit import (
    CostKind,
    Dataset,
    PredictionSet,
    Task,
    anova_f,
    bootstrap_gamma_ci,
    compare_discrimination_test,
    gamma_z_test,
    pairwise_welch_holm,
    welch_t,
)
from fairaudit.errors import AnalysisError
from fairaudit.stats import (
    f_sf,
    normal_cdf,
    reg_inc_beta,
    t_sf,
    two_tailed_normal_p,
)


def loss_dataset(y0, y1):
    """Two groups with given outcomes; constant-0 predictions make the
    zero-one losses equal the outcomes."""
    y = np.concatenate([y0, y1])
    n = y.size
    d = Dataset(
        features=np.zeros((n, 1)),
        group=np.concatenate(
            [np.zeros(len(y0), dtype=np.int64), np.ones(len(y1), dtype=np.int64)]
        ),
        outcome=y.astype(np.float64),
        task=Task.BINARY,
        column_names=("x",),
    )
    return d, PredictionSet(labels=np.zeros(n))


def test_distribution_functions_vs_scipy():
    for z in (-3.1, -0.4, 0.0, 1.7, 4.2):
        assert normal_cdf(z) == pytest.approx(sps.norm.cdf(z), abs=1e-12)
        assert two_tailed_normal_p(z) == pytest.approx(
            2 * sps.norm.sf(abs(z)), abs=1e-12
        )
    for a, b, x in [(2.0, 3.0, 0.4), (0.5, 0.5, 0.1), (10.0, 2.0, 0.9)]:
        from scipy.special import betainc

        assert reg_inc_beta(a, b, x) == pytest.approx(
            betainc(a, b, x), abs=1e-12
        )
    for f, d1, d2 in [(2.5, 3, 40), (0.7, 1, 10), (8.0, 5, 5)]:
        assert f_sf(f, d1, d2) == pytest.approx(sps.f.sf(f, d1, d2), abs=1e-10)
    for t, df in [(1.3, 7.0), (-2.2, 30.0), (0.0, 1.0)]:
        assert t_sf(t, df) == pytest.approx(sps.t.sf(t, df), abs=1e-12)


def test_gamma_z_test_matches_oracle():
    rng = np.random.default_rng(0)
    y0 = (rng.random(200) < 0.3).astype(float)
    y1 = (rng.random(150) < 0.45).astype(float)
    d, preds = loss_dataset(y0, y1)
    res = gamma_z_test(preds, d, CostKind.ZERO_ONE)
    se = np.sqrt(y0.var(ddof=1) / 200 + y1.var(ddof=1) / 150)
    z = (y0.mean() - y1.mean()) / se
    assert res.statistic == pytest.approx(z, abs=1e-12)
    assert res.p_value == pytest.approx(2 * sps.norm.sf(abs(z)), abs=1e-12)


def test_gamma_z_test_small_sample_warning():
    d, preds = loss_dataset(np.array([0.0, 1.0, 0.0]), np.array([1.0, 0.0, 1.0, 1.0]))
    res = gamma_z_test(preds, d, CostKind.ZERO_ONE)
    assert any("small sample" in w for w in res.detail["warnings"])


def test_gamma_z_test_degenerate_se():
    d, preds = loss_dataset(np.zeros(40), np.zeros(40))
    res = gamma_z_test(preds, d, CostKind.ZERO_ONE)
    assert res.p_value == 1.0 and not res.reject


def test_compare_identical_models_p_one():
    rng = np.random.default_rng(1)
    y0 = (rng.random(100) < 0.4).astype(float)
    y1 = (rng.random(100) < 0.6).astype(float)
    d, preds = loss_dataset(y0, y1)
    res = compare_discrimination_test(preds, preds, d, CostKind.ZERO_ONE)
    assert res.p_value == 1.0
    assert res.statistic == 0.0
    assert not res.reject


def test_compare_opposite_sign_gaps_not_rejected():
    # model A: errors concentrated on group 0; model B mirror image.
    # |gap_A| == |gap_B| so the intersection test must not reject.
    n = 200
    y = np.zeros(2 * n)
    d = Dataset(
        features=np.zeros((2 * n, 1)),
        group=np.concatenate([np.zeros(n, dtype=np.int64), np.ones(n, dtype=np.int64)]),
        outcome=y,
        task=Task.BINARY,
        column_names=("x",),
    )
    rng = np.random.default_rng(2)
    noise = (rng.random(n) < 0.3).astype(float)
    a_labels = np.concatenate([noise, np.zeros(n)])
    b_labels = np.concatenate([np.zeros(n), noise])
    res = compare_discrimination_test(
        PredictionSet(labels=a_labels), PredictionSet(labels=b_labels),
        d, CostKind.ZERO_ONE,
    )
    assert not res.reject
    assert res.detail["gap_a"] == pytest.approx(-res.detail["gap_b"])


def test_compare_detects_larger_discrimination():
    rng = np.random.default_rng(3)
    n = 500
    y = np.zeros(2 * n)
    d = Dataset(
        features=np.zeros((2 * n, 1)),
        group=np.concatenate([np.zeros(n, dtype=np.int64), np.ones(n, dtype=np.int64)]),
        outcome=y,
        task=Task.BINARY,
        column_names=("x",),
    )
    fair = PredictionSet(labels=(rng.random(2 * n) < 0.2).astype(float))
    unfair = PredictionSet(
        labels=np.concatenate(
            [(rng.random(n) < 0.45).astype(float), (rng.random(n) < 0.05).astype(float)]
        )
    )
    res = compare_discrimination_test(fair, unfair, d, CostKind.ZERO_ONE)
    assert res.reject


def test_bootstrap_ci_brackets_gamma():
    rng = np.random.default_rng(4)
    y0 = (rng.random(400) < 0.2).astype(float)
    y1 = (rng.random(400) < 0.4).astype(float)
    d, preds = loss_dataset(y0, y1)
    lo, hi = bootstrap_gamma_ci(preds, d, CostKind.ZERO_ONE, reps=400, seed=5)
    gamma = abs(y0.mean() - y1.mean())
    assert lo <= gamma <= hi
    assert 0.0 <= lo < hi
    # deterministic given the seed
    assert (lo, hi) == bootstrap_gamma_ci(
        preds, d, CostKind.ZERO_ONE, reps=400, seed=5
    )
    with pytest.raises(AnalysisError):
        bootstrap_gamma_ci(preds, d, CostKind.ZERO_ONE, reps=50, seed=5)


def test_anova_matches_scipy():
    rng = np.random.default_rng(6)
    groups = [rng.normal(loc, 1.0, size=80) for loc in (0.0, 0.3, 0.1)]
    res = anova_f(groups)
    f_ref, p_ref = sps.f_oneway(*groups)
    assert res.statistic == pytest.approx(f_ref, abs=1e-9)
    assert res.p_value == pytest.approx(p_ref, abs=1e-9)


def test_anova_f_equals_t_squared_two_groups():
    rng = np.random.default_rng(7)
    x = rng.normal(0, 1, 60)
    y = rng.normal(0.4, 1, 45)
    res = anova_f([x, y])
    # pooled-variance two-sample t
    sp2 = ((x.size - 1) * x.var(ddof=1) + (y.size - 1) * y.var(ddof=1)) / (
        x.size + y.size - 2
    )
    t = (x.mean() - y.mean()) / np.sqrt(sp2 * (1 / x.size + 1 / y.size))
    assert res.statistic == pytest.approx(t**2, abs=1e-9)


def test_welch_matches_scipy():
    rng = np.random.default_rng(8)
    x = rng.normal(0, 1, 50)
    y = rng.normal(0.5, 2, 70)
    stat, df, p = welch_t(x, y)
    ref = sps.ttest_ind(x, y, equal_var=False)
    assert stat == pytest.approx(ref.statistic, abs=1e-10)
    assert p == pytest.approx(ref.pvalue, abs=1e-10)


def test_holm_adjustment_properties():
    rng = np.random.default_rng(9)
    groups = [rng.normal(loc, 1.0, 60) for loc in (0.0, 0.0, 1.0)]
    results = pairwise_welch_holm(groups)
    assert set(results) == {(0, 1), (0, 2), (1, 2)}
    for pair, res in results.items():
        assert res.p_value >= res.detail["p_raw"]  # adjustment never shrinks
        assert res.p_value <= 1.0
    # Holm monotonicity: adjusted order respects raw order
    ordered = sorted(results.items(), key=lambda kv: kv[1].detail["p_raw"])
    adj = [r.p_value for _, r in ordered]
    assert adj == sorted(adj)
    # the separated pairs reject, the null pair does not
    assert results[(0, 2)].reject and results[(1, 2)].reject
    assert not results[(0, 1)].reject


def test_null_rejection_rate_calibrated():
    # simulated true null: both groups share the same Bernoulli loss law
    rng = np.random.default_rng(10)
    m = 400
    rejections = 0
    trials = 500
    for _ in range(trials):
        y0 = (rng.random(m) < 0.3).astype(float)
        y1 = (rng.random(m) < 0.3).astype(float)
        d, preds = loss_dataset(y0, y1)
        if gamma_z_test(preds, d, CostKind.ZERO_ONE).reject:
            rejections += 1
    rate = rejections / trials
    assert 0.02 < rate < 0.09
