import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairaudit import (
    Dataset,
    EnsemblePredictions,
    LearnerKind,
    LearnerSpec,
    Loss,
    Task,
    class_conditional_decomposition,
    compare_models_bias_variance,
    default_discrete_spec,
    ensemble_train,
    gamma_bar,
    gen_discrete,
    gen_regression,
    group_decomposition,
    point_decomposition,
    RegressionSynthSpec,
)
from fairaudit.decomposition import main_prediction
from fairaudit.errors import AnalysisError
from fairaudit.learners import LearnerSpec as LS
from fairaudit.synth import ConditionalOutcomeModel


def make_ensemble(preds):
    return EnsemblePredictions(
        predictions=np.asarray(preds, dtype=np.float64),
        spec=LS(kind=LearnerKind.TREE),
        n_train=10,
        source="fresh_draws",
        seed=0,
    )


def tiny_binary(n, probs, groups):
    onehot = np.eye(n)
    d = Dataset(
        features=onehot,
        group=np.asarray(groups, dtype=np.int64),
        outcome=np.zeros(n),
        task=Task.BINARY,
        column_names=tuple(f"x{i}" for i in range(n)),
    )
    probs = np.asarray(probs, dtype=np.float64)

    om = ConditionalOutcomeModel(
        task=Task.BINARY, _prob=lambda x, a: probs[int(np.argmax(x))]
    )
    return d, om


def test_point_terms_by_hand():
    # 3 points, 4 models
    d, om = tiny_binary(3, [0.9, 0.2, 0.5], [0, 0, 1])
    e = make_ensemble([[1, 0, 1], [1, 1, 0], [0, 0, 0], [1, 0, 1]])
    p0 = point_decomposition(e, 0, d, om, Loss.ZERO_ONE)
    assert p0.y_star == 1.0 and p0.noise == pytest.approx(0.1)
    assert p0.y_main == 1.0 and p0.bias == 0.0
    assert p0.variance == 0.25 and p0.c_v == 1.0
    assert p0.c_n == pytest.approx(2 * 0.75 - 1)
    # tie in p -> y* = 0
    p2 = point_decomposition(e, 2, d, om, Loss.ZERO_ONE)
    assert p2.y_star == 0.0
    # tie in votes (2/4) -> y_main = 0
    assert p2.y_main == 0.0


def test_pointwise_identity_random_ensembles():
    rng = np.random.default_rng(0)
    for _ in range(50):
        t, n = rng.integers(2, 9), rng.integers(1, 6)
        preds = (rng.random((t, n)) < rng.random()).astype(float)
        probs = rng.random(n)
        d, om = tiny_binary(n, probs, [0] * n)
        e = make_ensemble(preds)
        for i in range(n):
            p = point_decomposition(e, i, d, om, Loss.ZERO_ONE)
            col = preds[:, i]
            expected = np.mean(
                probs[i] * (col != 1.0) + (1 - probs[i]) * (col != 0.0)
            )
            assert abs(expected - p.expected_loss) < 1e-12


def test_squared_identity_random():
    rng = np.random.default_rng(1)
    preds = rng.normal(size=(6, 4))
    mean = rng.normal(size=4)
    var = rng.random(4)
    d = Dataset(
        features=np.eye(4),
        group=np.zeros(4, dtype=np.int64),
        outcome=np.zeros(4),
        task=Task.REGRESSION,
        column_names=tuple("abcd"),
    )
    om = ConditionalOutcomeModel(
        task=Task.REGRESSION,
        _mean=lambda x, a: mean[int(np.argmax(x))],
        _var=lambda x, a: var[int(np.argmax(x))],
    )
    e = make_ensemble(preds)
    for i in range(4):
        p = point_decomposition(e, i, d, om, Loss.SQUARED)
        # E over models and Y of (yhat - Y)^2 = mean over models of
        # (yhat - mean)^2 plus the conditional variance
        expected = np.mean((preds[:, i] - mean[i]) ** 2) + var[i]
        assert abs(expected - p.expected_loss) < 1e-12
        assert p.c_n == 1.0 and p.c_v == 1.0


def test_group_additivity_known_mode():
    spec = default_discrete_spec()
    d, om = gen_discrete(spec, 300, seed=2)
    sampler = lambda n, s: gen_discrete(spec, n, s)[0]
    e = ensemble_train(
        LS(kind=LearnerKind.TREE, max_depth=2), sampler, 8, 150, d, seed=3
    )
    for a in (0, 1):
        g = group_decomposition(e, d, om, Loss.ZERO_ONE, a)
        assert g.mode == "known"
        assert abs(g.cost - (g.noise + g.bias + g.variance)) < 1e-12


def test_unknown_mode_residual():
    spec = default_discrete_spec()
    d, _ = gen_discrete(spec, 300, seed=4)
    sampler = lambda n, s: gen_discrete(spec, n, s)[0]
    e = ensemble_train(
        LS(kind=LearnerKind.TREE, max_depth=2), sampler, 8, 150, d, seed=5
    )
    g = group_decomposition(e, d, None, Loss.ZERO_ONE, 0)
    assert g.mode == "unknown"
    assert g.noise is None and g.bias is None
    assert g.bias_noise_residual == pytest.approx(g.cost - g.variance_raw)
    assert g.variance_raw >= 0.0


def test_class_conditional_additivity():
    spec = default_discrete_spec()
    d, om = gen_discrete(spec, 300, seed=6)
    sampler = lambda n, s: gen_discrete(spec, n, s)[0]
    e = ensemble_train(
        LS(kind=LearnerKind.TREE, max_depth=2), sampler, 8, 150, d, seed=7
    )
    for a in (0, 1):
        for y in (0, 1):
            g = class_conditional_decomposition(e, d, om, a, y)
            assert abs(g.cost - (g.noise + g.bias + g.variance)) < 1e-12


def test_class_conditional_unknown_mode():
    spec = default_discrete_spec()
    d, _ = gen_discrete(spec, 300, seed=8)
    sampler = lambda n, s: gen_discrete(spec, n, s)[0]
    e = ensemble_train(
        LS(kind=LearnerKind.TREE, max_depth=2), sampler, 6, 150, d, seed=9
    )
    g = class_conditional_decomposition(e, d, None, 0, 1)
    # unknown-mode FNR cost equals the plain mean error vs the fixed class
    rows = np.flatnonzero((d.group == 0) & (d.outcome == 1.0))
    expected = float(np.mean(e.predictions[:, rows] != 1.0))
    assert g.cost == pytest.approx(expected)


def test_main_prediction_rules():
    e = make_ensemble([[1, 0.2], [1, 0.4], [0, 0.9]])
    assert main_prediction(e, 0, Loss.ZERO_ONE) == 1.0
    assert main_prediction(e, 1, Loss.SQUARED) == pytest.approx(0.5)
    tie = make_ensemble([[1], [0]])
    assert main_prediction(tie, 0, Loss.ZERO_ONE) == 0.0  # ties toward 0


def test_gamma_bar():
    from fairaudit.decomposition import GroupDecomposition

    decs = {
        0: GroupDecomposition(group=0, cost=0.3, mode="unknown"),
        1: GroupDecomposition(group=1, cost=0.1, mode="unknown"),
        2: GroupDecomposition(group=2, cost=0.25, mode="unknown"),
    }
    assert gamma_bar(decs) == pytest.approx(0.2)
    with pytest.raises(AnalysisError):
        gamma_bar({0: decs[0]})


def test_ensemble_train_order_independent():
    spec = default_discrete_spec()
    d, _ = gen_discrete(spec, 200, seed=10)
    sampler = lambda n, s: gen_discrete(spec, n, s)[0]
    lspec = LS(kind=LearnerKind.TREE, max_depth=2)
    e5 = ensemble_train(lspec, sampler, 5, 100, d, seed=11)
    e3 = ensemble_train(lspec, sampler, 3, 100, d, seed=11)
    # first 3 members agree: per-trial seeds depend only on (seed, trial)
    np.testing.assert_array_equal(e5.predictions[:3], e3.predictions)


def test_compare_models_identical_p1():
    spec = default_discrete_spec()
    d, _ = gen_discrete(spec, 300, seed=12)
    sampler = lambda n, s: gen_discrete(spec, n, s)[0]
    e = ensemble_train(
        LS(kind=LearnerKind.TREE, max_depth=2), sampler, 5, 150, d, seed=13
    )
    res = compare_models_bias_variance(e, e, d, Loss.ZERO_ONE)
    assert res.statistic == 0.0
    assert res.p_value == 1.0
    assert not res.reject


def test_compare_models_detects_difference():
    spec = default_discrete_spec()
    d, _ = gen_discrete(spec, 2000, seed=14)
    sampler = lambda n, s: gen_discrete(spec, n, s)[0]
    good = ensemble_train(
        LS(kind=LearnerKind.TREE, max_depth=4), sampler, 5, 1500, d, seed=15
    )
    # constant-0 predictor as the bad model
    bad = EnsemblePredictions(
        predictions=np.zeros((5, d.n)),
        spec=LS(kind=LearnerKind.TREE),
        n_train=10,
        source="fresh_draws",
        seed=0,
    )
    res = compare_models_bias_variance(good, bad, d, Loss.ZERO_ONE)
    assert res.p_value < 0.05


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_identity_property_squared(seed):
    rng = np.random.default_rng(seed)
    t, n = 4, 3
    preds = rng.normal(size=(t, n))
    mean = rng.normal(size=n)
    var = rng.random(n) + 0.01
    d = Dataset(
        features=np.eye(n),
        group=np.zeros(n, dtype=np.int64),
        outcome=np.zeros(n),
        task=Task.REGRESSION,
        column_names=tuple(f"x{i}" for i in range(n)),
    )
    om = ConditionalOutcomeModel(
        task=Task.REGRESSION,
        _mean=lambda x, a: mean[int(np.argmax(x))],
        _var=lambda x, a: var[int(np.argmax(x))],
    )
    g = group_decomposition(make_ensemble(preds), d, om, Loss.SQUARED, 0)
    assert abs(g.cost - (g.noise + g.bias + g.variance)) < 1e-10
