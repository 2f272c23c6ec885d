"""Multinomial logistic regression with an L2 penalty on the non-bias weights."""

from dataclasses import dataclass

import numpy as np

from .base import as_features, resolve_classes


@dataclass(frozen=True)
class LogisticModel:
    """Softmax model; ``weights[c] = (bias, w_1, ..., w_d)`` for ``classes[c]``.

    Columns of `predict_proba` follow ``all_classes``; classes absent from
    the training data get probability 0.
    """

    weights: np.ndarray
    classes: np.ndarray
    all_classes: np.ndarray
    C: float = 1.0
    converged: bool = True
    iterations: int = 0
    degenerate: bool = False

    @property
    def n_features(self):
        return self.weights.shape[1] - 1

    def scores(self, X):
        X = as_features(X, self.n_features)
        return X @ self.weights[:, 1:].T + self.weights[:, 0]

    def predict_proba(self, X):
        s = self.scores(X)
        p = softmax(s)
        if len(self.classes) == len(self.all_classes):
            return p
        out = np.zeros((len(p), len(self.all_classes)))
        out[:, np.searchsorted(self.all_classes, self.classes)] = p
        return out

    def predict(self, X):
        return self.all_classes[np.argmax(self.predict_proba(X), axis=1)]


def softmax(s):
    s = s - s.max(axis=1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=1, keepdims=True)


def objective(w_flat, Xb, Y, lam):
    """Mean penalized negative log-likelihood and its gradient.

    ``Xb`` carries a leading column of ones, ``Y`` is one-hot.
    """
    n = len(Xb)
    W = w_flat.reshape(Y.shape[1], Xb.shape[1])
    s = Xb @ W.T
    s_max = s.max(axis=1, keepdims=True)
    z = s - s_max
    lse = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - lse
    nw = W[:, 1:]
    f = -np.sum(Y * logp) / n + 0.5 * lam * np.sum(nw * nw) / n
    g = (np.exp(logp) - Y).T @ Xb / n
    g[:, 1:] += lam * nw / n
    return f, g.ravel()


def lbfgs(fun, x0, tol=1e-6, max_iter=500, memory=10, history=None):
    """Minimize `fun` (returning value and gradient) by limited-memory BFGS.

    Uses a backtracking Armijo line search, so accepted steps never increase
    the objective. Stops when the max-norm of the gradient drops below
    `tol`. Returns ``(x, f, converged, iterations)``.
    """
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    if history is not None:
        history.append(f)
    s_list, y_list = [], []
    for it in range(max_iter):
        if np.max(np.abs(g)) <= tol:
            return x, f, True, it
        # two-loop recursion
        d = -g
        alphas = []
        for s, y in zip(reversed(s_list), reversed(y_list)):
            rho = 1.0 / (y @ s)
            a = rho * (s @ d)
            alphas.append((a, rho, s, y))
            d = d - a * y
        if s_list:
            s, y = s_list[-1], y_list[-1]
            d = d * ((s @ y) / (y @ y))
        for a, rho, s, y in reversed(alphas):
            b = rho * (y @ d)
            d = d + (a - b) * s
        slope = g @ d
        if slope >= 0:
            d = -g
            slope = -(g @ g)
            s_list.clear()
            y_list.clear()
        step = 1.0
        while True:
            x_new = x + step * d
            f_new, g_new = fun(x_new)
            if f_new <= f + 1e-4 * step * slope:
                break
            step *= 0.5
            if step < 1e-20:
                return x, f, False, it
        s_vec = x_new - x
        y_vec = g_new - g
        if y_vec @ s_vec > 1e-12 * (s_vec @ s_vec):
            s_list.append(s_vec)
            y_list.append(y_vec)
            if len(s_list) > memory:
                s_list.pop(0)
                y_list.pop(0)
        x, f, g = x_new, f_new, g_new
        if history is not None:
            history.append(f)
    return x, f, bool(np.max(np.abs(g)) <= tol), max_iter


def lr_fit(X, y, classes=None, C=1.0, tol=1e-6, max_iter=500, history=None):
    """Fit a multinomial logistic regression by L-BFGS.

    The objective is ``mean(-log p(y|x)) + ||W||^2 / (2 C n)`` with the bias
    column unpenalized. A single present class yields a constant model with
    ``degenerate=True``.
    """
    X = as_features(X)
    y = np.asarray(y)
    all_classes = resolve_classes(y, classes)
    present = np.unique(y)
    d = X.shape[1]
    if len(present) < 2:
        w = np.zeros((1, d + 1))
        return LogisticModel(w, present, all_classes, C, True, 0, degenerate=True)
    Y = (y[:, None] == present[None, :]).astype(float)
    Xb = np.column_stack([np.ones(len(X)), X])
    lam = 1.0 / C
    x, _, converged, it = lbfgs(
        lambda w: objective(w, Xb, Y, lam),
        np.zeros(len(present) * (d + 1)),
        tol=tol,
        max_iter=max_iter,
        history=history,
    )
    W = x.reshape(len(present), d + 1)
    return LogisticModel(W, present, all_classes, C, converged, it)
