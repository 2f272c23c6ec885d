"""JSON documents for fitted models.

Every document has a ``"type"`` field:

``logistic``
    ``weights`` (rows: bias then feature weights, one per fitted class),
    ``classes``, ``all_classes``, ``C``, ``converged``, ``iterations``,
    ``degenerate``.
``gaussian_nb``
    ``classes``, ``priors``, ``means``, ``variances``, ``var_floor``,
    ``degenerate``.
``rbf_svm``
    ``coef`` (alpha_i y_i), ``support_vectors``, ``b``, ``gamma``, ``C``,
    ``n_features``, ``converged``, ``iterations``, ``kkt_gap``,
    ``degenerate``.
``phase_ovr``
    ``para`` and ``ordered`` (two ``rbf_svm`` documents), ``ordered_t_max``.
"""

import json

import numpy as np

from .logistic import LogisticModel
from .naive_bayes import GaussianNBModel
from .ovr import PhaseOvrModel
from .svm import RbfSvmModel


def to_dict(model):
    if isinstance(model, LogisticModel):
        return {
            "type": "logistic",
            "weights": model.weights.tolist(),
            "classes": model.classes.tolist(),
            "all_classes": model.all_classes.tolist(),
            "C": model.C,
            "converged": bool(model.converged),
            "iterations": int(model.iterations),
            "degenerate": bool(model.degenerate),
        }
    if isinstance(model, GaussianNBModel):
        return {
            "type": "gaussian_nb",
            "classes": model.classes.tolist(),
            "priors": model.priors.tolist(),
            "means": model.means.tolist(),
            "variances": model.variances.tolist(),
            "var_floor": model.var_floor,
            "degenerate": bool(model.degenerate),
        }
    if isinstance(model, RbfSvmModel):
        return {
            "type": "rbf_svm",
            "coef": model.coef.tolist(),
            "support_vectors": model.support_vectors.tolist(),
            "b": model.b,
            "gamma": model.gamma,
            "C": model.C,
            "n_features": model.n_features,
            "converged": bool(model.converged),
            "iterations": int(model.iterations),
            "kkt_gap": float(model.kkt_gap),
            "degenerate": bool(model.degenerate),
        }
    if isinstance(model, PhaseOvrModel):
        return {
            "type": "phase_ovr",
            "para": to_dict(model.svm_para),
            "ordered": to_dict(model.svm_ord),
            "ordered_t_max": model.ordered_t_max,
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def from_dict(doc):
    kind = doc.get("type")
    if kind == "logistic":
        return LogisticModel(
            weights=np.asarray(doc["weights"], dtype=float),
            classes=np.asarray(doc["classes"]),
            all_classes=np.asarray(doc["all_classes"]),
            C=doc["C"],
            converged=doc["converged"],
            iterations=doc["iterations"],
            degenerate=doc["degenerate"],
        )
    if kind == "gaussian_nb":
        return GaussianNBModel(
            classes=np.asarray(doc["classes"]),
            priors=np.asarray(doc["priors"], dtype=float),
            means=np.asarray(doc["means"], dtype=float),
            variances=np.asarray(doc["variances"], dtype=float),
            var_floor=doc["var_floor"],
            degenerate=doc["degenerate"],
        )
    if kind == "rbf_svm":
        sv = np.asarray(doc["support_vectors"], dtype=float).reshape(-1, doc["n_features"])
        return RbfSvmModel(
            coef=np.asarray(doc["coef"], dtype=float),
            support_vectors=sv,
            b=doc["b"],
            gamma=doc["gamma"],
            C=doc["C"],
            n_features=doc["n_features"],
            converged=doc["converged"],
            iterations=doc["iterations"],
            kkt_gap=doc["kkt_gap"],
            degenerate=doc["degenerate"],
        )
    if kind == "phase_ovr":
        return PhaseOvrModel(from_dict(doc["para"]), from_dict(doc["ordered"]),
                             doc["ordered_t_max"])
    raise ValueError(f"unknown model type {kind!r}")


def save_model(model, path):
    with open(path, "w") as fh:
        json.dump(to_dict(model), fh, indent=1)


def load_model(path):
    with open(path) as fh:
        return from_dict(json.load(fh))
