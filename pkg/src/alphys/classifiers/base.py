import numpy as np


class NotFittedError(ValueError):
    pass


def as_features(X, n_features=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :] if n_features is not None and X.shape[0] == n_features else X[:, None]
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature array, got shape {X.shape}")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    return X


def resolve_classes(y, classes=None):
    present = np.unique(y)
    if classes is None:
        return present
    classes = np.unique(np.asarray(classes))
    missing = np.setdiff1d(present, classes)
    if len(missing):
        raise ValueError(f"labels {missing.tolist()} not among classes {classes.tolist()}")
    return classes


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out
