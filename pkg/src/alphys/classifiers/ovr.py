"""Three-phase prediction from two one-vs-rest SVMs."""

from dataclasses import dataclass

import numpy as np

from ..datasets import Phase
from .svm import RbfSvmModel


@dataclass(frozen=True)
class PhaseOvrModel:
    """Paramagnetic-vs-rest and ordered-vs-rest machines.

    The ordered machine is only consulted inside its training domain
    ``T/J <= ordered_t_max``; outside it the sample is treated as not ordered.
    """

    svm_para: RbfSvmModel
    svm_ord: RbfSvmModel
    ordered_t_max: float = 0.3

    def in_ordered_domain(self, X):
        return np.asarray(X)[:, 1] <= self.ordered_t_max + 1e-9

    def decisions(self, X):
        """``(f_para, f_ord)``; ``f_ord`` is NaN outside the ordered domain."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        f_para = self.svm_para.decision_function(X)
        f_ord = np.full(len(X), np.nan)
        dom = self.in_ordered_domain(X)
        if dom.any():
            f_ord[dom] = self.svm_ord.decision_function(X[dom])
        return f_para, f_ord

    def predict_phase(self, X):
        f_para, f_ord = self.decisions(X)
        ordered = np.nan_to_num(f_ord, nan=-1.0) > 0
        return np.where(
            f_para > 0,
            int(Phase.PARAMAGNETIC),
            np.where(ordered, int(Phase.ORDERED), int(Phase.KT)),
        )

    predict = predict_phase


def ovr_predict_phase(model, sample):
    out = model.predict_phase(np.atleast_2d(sample))
    return Phase(int(out[0])) if np.ndim(sample) == 1 else out
