"""Binary C-SVM with a Gaussian (RBF) kernel."""

from dataclasses import dataclass

import numpy as np

from .. import _backend
from .base import as_features, sigmoid

CONFIDENCE_SLOPE = 2.0


@dataclass(frozen=True)
class RbfSvmModel:
    """Fitted RBF SVM.

    ``decision(x) = sum_i coef_i K(sv_i, x) + b`` with ``coef_i = alpha_i y_i``.
    Labels are -1 and +1.
    """

    coef: np.ndarray
    support_vectors: np.ndarray
    b: float
    gamma: float
    C: float = 1.0
    n_features: int = 2
    converged: bool = True
    iterations: int = 0
    kkt_gap: float = 0.0
    degenerate: bool = False
    support_index: np.ndarray | None = None  # rows of the training set

    def decision_function(self, X):
        X = as_features(X, self.n_features)
        if len(self.coef) == 0:
            return np.full(len(X), self.b)
        return rbf_kernel(X, self.support_vectors, self.gamma) @ self.coef + self.b

    def predict(self, X):
        return np.where(self.decision_function(X) > 0, 1, -1)

    def predict_proba(self, X):
        """Columns (-1, +1) from the squashed decision value ``sigmoid(2 f)``."""
        p = sigmoid(CONFIDENCE_SLOPE * self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    @property
    def classes(self):
        return np.array([-1, 1])


def rbf_kernel(A, B, gamma):
    sq = (
        np.einsum("ij,ij->i", A, A)[:, None]
        + np.einsum("ij,ij->i", B, B)[None, :]
        - 2.0 * A @ B.T
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


def default_gamma(X):
    """``1 / (2 var)`` with var the mean per-feature variance of `X`."""
    var = float(np.mean(np.var(X, axis=0)))
    return 1.0 / (2.0 * var) if var > 0 else 1.0


def svm_fit(X, y, C=1.0, gamma=None, tol=1e-3, max_iter=None, kernels=None):
    """Solve the dual by sequential pairwise optimization.

    `y` must hold -1/+1 labels. A single present label gives a constant
    model (``degenerate=True``) whose decision is +-1 everywhere.
    """
    X = as_features(X)
    y = np.asarray(y)
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("SVM labels must be -1 or +1")
    gamma = default_gamma(X) if gamma is None else float(gamma)
    if len(np.unique(y)) < 2:
        b = float(y[0]) if len(y) else -1.0
        return RbfSvmModel(np.zeros(0), np.zeros((0, X.shape[1])), b, gamma, C,
                           X.shape[1], True, 0, 0.0, degenerate=True)
    if max_iter is None:
        max_iter = max(10_000, 100 * len(y))
    k = _backend.kernels if kernels is None else kernels
    alpha, rho, gap, it = k.smo_solve(X, y.astype(float), float(C), gamma, tol,
                                      int(max_iter))
    sv = alpha > 0
    return RbfSvmModel(
        coef=(alpha * y)[sv],
        support_vectors=X[sv].copy(),
        b=-rho,
        gamma=gamma,
        C=C,
        n_features=X.shape[1],
        converged=gap < tol,
        iterations=it,
        kkt_gap=gap,
        support_index=np.flatnonzero(sv),
    )


def dual_diagnostics(model, X, y):
    """Recover the full alpha vector and KKT violation for a fitted model on (X, y)."""
    X = as_features(X)
    y = np.asarray(y, dtype=float)
    alpha = np.zeros(len(X))
    if len(model.coef):
        idx = model.support_index
        alpha[idx] = model.coef * y[idx]
    K = rbf_kernel(X, X, model.gamma)
    G = y * (K @ (alpha * y)) - 1.0
    C = model.C
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y < 0) & (alpha < C)) | ((y > 0) & (alpha > 0))
    v = -y * G
    gap = float(np.max(v[up]) - np.min(v[low])) if up.any() and low.any() else 0.0
    return alpha, gap
