"""Hot numeric kernels: tree split search and k-NN scoring.

Kernels are compiled with numba when available; setting the environment
variable ``FAIRAUDIT_DISABLE_NUMBA=1`` (before import) selects the pure
numpy/python fallback path.  Both paths implement the same arithmetic in
the same order, so results agree except possibly on exact floating-point
ties.  ``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("FAIRAUDIT_DISABLE_NUMBA", "").lower() not in (
    "1",
    "true",
    "yes",
)

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a hard dependency
        USE_NUMBA = False

if not USE_NUMBA:

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


@njit(cache=True)
def best_split_gini(X, y):
    """Best axis-aligned split of a classification node by Gini impurity.

    Returns (feature, threshold, weighted_impurity); feature == -1 when no
    split separates the node.  Ties break toward the lowest feature index,
    then the lowest threshold.
    """
    n, k = X.shape
    best_feat = -1
    best_thresh = 0.0
    best_score = np.inf
    total_pos = 0.0
    for i in range(n):
        total_pos += y[i]
    for j in range(k):
        order = np.argsort(X[:, j], kind="mergesort")
        left_pos = 0.0
        for pos in range(n - 1):
            i = order[pos]
            left_pos += y[i]
            x_here = X[order[pos], j]
            x_next = X[order[pos + 1], j]
            if x_here == x_next:
                continue
            n_l = pos + 1
            n_r = n - n_l
            p_l = left_pos / n_l
            p_r = (total_pos - left_pos) / n_r
            score = n_l * 2.0 * p_l * (1.0 - p_l) + n_r * 2.0 * p_r * (1.0 - p_r)
            if score < best_score - 1e-12:
                best_score = score
                best_feat = j
                best_thresh = 0.5 * (x_here + x_next)
    return best_feat, best_thresh, best_score


@njit(cache=True)
def best_split_var(X, y):
    """Best split of a regression node by weighted within-child variance.

    Same contract and tie-breaking as best_split_gini.
    """
    n, k = X.shape
    best_feat = -1
    best_thresh = 0.0
    best_score = np.inf
    total_sum = 0.0
    total_sq = 0.0
    for i in range(n):
        total_sum += y[i]
        total_sq += y[i] * y[i]
    for j in range(k):
        order = np.argsort(X[:, j], kind="mergesort")
        left_sum = 0.0
        left_sq = 0.0
        for pos in range(n - 1):
            i = order[pos]
            left_sum += y[i]
            left_sq += y[i] * y[i]
            x_here = X[order[pos], j]
            x_next = X[order[pos + 1], j]
            if x_here == x_next:
                continue
            n_l = pos + 1
            n_r = n - n_l
            right_sum = total_sum - left_sum
            right_sq = total_sq - left_sq
            score = (left_sq - left_sum * left_sum / n_l) + (
                right_sq - right_sum * right_sum / n_r
            )
            if score < best_score - 1e-12:
                best_score = score
                best_feat = j
                best_thresh = 0.5 * (x_here + x_next)
    return best_feat, best_thresh, best_score


@njit(cache=True)
def knn_scores(train_X, train_y, test_X, k):
    """Mean label of the k nearest training rows (Euclidean) per test row."""
    n_train = train_X.shape[0]
    n_test = test_X.shape[0]
    dim = train_X.shape[1]
    kk = min(k, n_train)
    out = np.empty(n_test)
    dist = np.empty(n_train)
    for i in range(n_test):
        for t in range(n_train):
            acc = 0.0
            for j in range(dim):
                diff = test_X[i, j] - train_X[t, j]
                acc += diff * diff
            dist[t] = acc
        order = np.argsort(dist, kind="mergesort")
        total = 0.0
        for t in range(kk):
            total += train_y[order[t]]
        out[i] = total / kk
    return out


@njit(cache=True)
def knn_loo_fold_errors(X, y, fold, k, n_folds):
    """Cross-validated k-NN misclassification indicators.

    For each row, neighbors are searched among rows of the *other* folds;
    the prediction is the majority vote of the k nearest (ties toward
    label 0).  Returns a 0/1 error vector aligned with the rows.
    """
    n = X.shape[0]
    dim = X.shape[1]
    err = np.empty(n)
    dist = np.empty(n)
    for i in range(n):
        for t in range(n):
            if fold[t] == fold[i]:
                dist[t] = np.inf
            else:
                acc = 0.0
                for j in range(dim):
                    diff = X[i, j] - X[t, j]
                    acc += diff * diff
                dist[t] = acc
        order = np.argsort(dist, kind="mergesort")
        avail = 0
        for t in range(n):
            if fold[t] != fold[i]:
                avail += 1
        kk = min(k, avail)
        votes = 0.0
        for t in range(kk):
            votes += y[order[t]]
        pred = 1.0 if votes > kk / 2.0 else 0.0
        err[i] = 0.0 if pred == y[i] else 1.0
    return err
