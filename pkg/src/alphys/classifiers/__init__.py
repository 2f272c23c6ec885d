from .logistic import LogisticModel, lr_fit
from .naive_bayes import GaussianNBModel, nb_fit
from .ovr import PhaseOvrModel, ovr_predict_phase
from .self_training import SelfTrainingResult, self_train
from .svm import RbfSvmModel, default_gamma, svm_fit

__all__ = [
    "GaussianNBModel",
    "LogisticModel",
    "PhaseOvrModel",
    "RbfSvmModel",
    "SelfTrainingResult",
    "default_gamma",
    "lr_fit",
    "nb_fit",
    "ovr_predict_phase",
    "self_train",
    "svm_fit",
]


def lr_predict_proba(model, X):
    return model.predict_proba(X)


def nb_predict_proba(model, X):
    return model.predict_proba(X)


def svm_decision(model, X):
    return model.decision_function(X)
