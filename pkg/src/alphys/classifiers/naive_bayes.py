"""Gaussian naive Bayes."""

from dataclasses import dataclass

import numpy as np

from .base import as_features, resolve_classes


@dataclass(frozen=True)
class GaussianNBModel:
    classes: np.ndarray
    priors: np.ndarray  # per class in `classes`; zero for absent ones
    means: np.ndarray  # (n_classes, n_features)
    variances: np.ndarray
    var_floor: float
    degenerate: bool = False

    @property
    def n_features(self):
        return self.means.shape[1]

    def joint_log_likelihood(self, X):
        X = as_features(X, self.n_features)
        present = self.priors > 0
        jll = np.full((len(X), len(self.classes)), -np.inf)
        mu = self.means[present]
        var = self.variances[present]
        ll = -0.5 * np.sum(np.log(2.0 * np.pi * var), axis=1) - 0.5 * np.sum(
            (X[:, None, :] - mu[None]) ** 2 / var[None], axis=2
        )
        jll[:, present] = np.log(self.priors[present]) + ll
        return jll

    def predict_proba(self, X):
        jll = self.joint_log_likelihood(X)
        jll = jll - jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes[np.argmax(self.joint_log_likelihood(X), axis=1)]


def nb_fit(X, y, classes=None, var_smoothing=1e-9):
    """Class frequencies as priors, per-feature Gaussian moments per class.

    Variances are floored by adding ``var_smoothing * max(feature variance)``.
    Classes listed in `classes` but absent from `y` get prior 0 and are never
    predicted.
    """
    X = as_features(X)
    y = np.asarray(y)
    classes = resolve_classes(y, classes)
    n_cls, d = len(classes), X.shape[1]
    priors = np.zeros(n_cls)
    means = np.zeros((n_cls, d))
    variances = np.ones((n_cls, d))
    floor = var_smoothing * float(np.max(np.var(X, axis=0)))
    if floor <= 0.0:
        floor = var_smoothing
    for c, label in enumerate(classes):
        rows = X[y == label]
        if len(rows) == 0:
            continue
        priors[c] = len(rows) / len(X)
        means[c] = rows.mean(axis=0)
        variances[c] = rows.var(axis=0) + floor
    degenerate = np.count_nonzero(priors) < 2
    return GaussianNBModel(classes, priors, means, variances, floor, degenerate)
