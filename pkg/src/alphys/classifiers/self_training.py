"""Self-training: adopt confident predictions as pseudo-labels and refit."""

from dataclasses import dataclass, field

import numpy as np


def model_classes(model):
    for attr in ("all_classes", "classes"):
        c = getattr(model, attr, None)
        if c is not None:
            return np.asarray(c)
    raise TypeError(f"cannot determine the classes of {type(model).__name__}")


@dataclass
class SelfTrainingResult:
    model: object
    iterations: int
    added: list = field(default_factory=list)  # samples adopted per iteration
    pseudo_index: np.ndarray = None  # rows of X_unlabeled adopted
    pseudo_labels: np.ndarray = None


def self_train(model, fit, X_labeled, y_labeled, X_unlabeled, threshold=0.95,
               max_iter=5):
    """Grow the training set with pseudo-labels of confidence >= `threshold`.

    `model` is the current fit on the labeled data, `fit(X, y)` refits from
    scratch. Confidence is the largest column of ``model.predict_proba``.
    Stops after `max_iter` rounds or as soon as a round adopts nothing.
    True labels are never dropped or relabeled.
    """
    X_l = np.asarray(X_labeled, dtype=float)
    y_l = np.asarray(y_labeled)
    X_u = np.asarray(X_unlabeled, dtype=float)
    pending = np.ones(len(X_u), dtype=bool)
    pseudo = np.zeros(len(X_u), dtype=y_l.dtype if len(y_l) else int)
    order = []
    added = []
    it = 0
    while it < max_iter and pending.any():
        it += 1
        rows = np.flatnonzero(pending)
        proba = model.predict_proba(X_u[rows])
        conf = proba.max(axis=1)
        pick = conf >= threshold
        added.append(int(pick.sum()))
        if not pick.any():
            break
        chosen = rows[pick]
        pseudo[chosen] = model_classes(model)[np.argmax(proba[pick], axis=1)]
        pending[chosen] = False
        order.extend(chosen.tolist())
        idx = np.asarray(order)
        model = fit(np.vstack([X_l, X_u[idx]]), np.concatenate([y_l, pseudo[idx]]))
    idx = np.asarray(order, dtype=int)
    return SelfTrainingResult(model, it, added, idx, pseudo[idx])
