"""Pool-based active learning with uncertainty sampling.

Two problems are supported. The qutrit problem labels lattice samples by
weak measurement and tracks the fidelity each labeling costs. The phase
problem labels points of the TIAF phase diagram with the noisy one-vs-rest
oracle and trains two RBF SVMs.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import partial

import numpy as np

from . import datasets as ds
from . import weak_measurement as wm
from .classifiers import PhaseOvrModel, RbfSvmModel, lr_fit, nb_fit, svm_fit
from .classifiers.self_training import self_train
from .classifiers.base import sigmoid
from .classifiers.svm import CONFIDENCE_SLOPE

class Strategy(str, Enum):
    RANDOM = "random"
    LEAST_CONFIDENCE = "lc"
    MARGIN = "margin"
    ENTROPY = "entropy"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {
            "rs": cls.RANDOM,
            "least_confidence": cls.LEAST_CONFIDENCE,
            "leastconfidence": cls.LEAST_CONFIDENCE,
            "margin_sampling": cls.MARGIN,
            "entropy_sampling": cls.ENTROPY,
        }
        key = str(value).lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


USAMP = (Strategy.LEAST_CONFIDENCE, Strategy.MARGIN, Strategy.ENTROPY)


# --- uncertainty measures ----------------------------------------------------


def _xlogx(p):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)


def binary_scores(q, strategy):
    """Scores from the top-class probability ``q`` of a two-class model.

    Computing all three measures from the same ``q`` keeps their rankings
    identical: ``1 - q`` and ``1 - 2q`` are exact for ``q`` in [1/2, 1].
    """
    q = np.clip(np.asarray(q, dtype=float), 0.5, 1.0)
    strategy = Strategy.parse(strategy)
    if strategy is Strategy.LEAST_CONFIDENCE:
        return 1.0 - q
    if strategy is Strategy.MARGIN:
        return 1.0 - 2.0 * q
    if strategy is Strategy.ENTROPY:
        return -(_xlogx(q) + _xlogx(1.0 - q))
    raise ValueError(f"{strategy} has no uncertainty score")


def uncertainty_scores(proba, strategy):
    """Per-sample uncertainty from class probabilities; larger is more uncertain.

    least confidence ``1 - max P``, margin ``-(P1 - P2)`` over the two most
    probable classes, entropy ``-sum P ln P``.
    """
    P = np.atleast_2d(np.asarray(proba, dtype=float))
    strategy = Strategy.parse(strategy)
    if strategy is Strategy.RANDOM:
        raise ValueError("random sampling does not score samples")
    if P.shape[1] == 2:
        return binary_scores(P.max(axis=1), strategy)
    if strategy is Strategy.LEAST_CONFIDENCE:
        return 1.0 - P.max(axis=1)
    if strategy is Strategy.MARGIN:
        top = -np.sort(-P, axis=1)
        return -(top[:, 0] - top[:, 1])
    return -np.sum(_xlogx(P), axis=1)


def _live_classes(model, n_columns):
    # columns of classes the fit actually saw; absent classes carry no
    # probability and would otherwise turn a two-class fit into a 3-class score
    if hasattr(model, "priors"):
        return np.asarray(model.priors) > 0
    if hasattr(model, "all_classes"):
        return np.isin(model.all_classes, model.classes)
    return np.ones(n_columns, dtype=bool)


def model_scores(model, X, strategy):
    """Uncertainty scores for any fitted model on pool points `X`."""
    strategy = Strategy.parse(strategy)
    if getattr(model, "degenerate", False):
        return np.zeros(len(X))
    if isinstance(model, PhaseOvrModel):
        f_para, f_ord = model.decisions(X)
        closest = np.fmin(np.abs(f_para), np.abs(f_ord))
        if strategy is Strategy.MARGIN:
            return -closest
        return binary_scores(sigmoid(CONFIDENCE_SLOPE * closest), strategy)
    if isinstance(model, RbfSvmModel):
        f = np.abs(model.decision_function(X))
        return binary_scores(sigmoid(CONFIDENCE_SLOPE * f), strategy)
    proba = model.predict_proba(X)
    live = _live_classes(model, proba.shape[1])
    if live.sum() < 2:
        return np.zeros(len(X))
    return uncertainty_scores(proba[:, live], strategy)


def ranking_key(model, X, strategy):
    """Array whose argmax is the query that `strategy` selects.

    For two-class models every uncertainty measure is a strictly decreasing
    function of one quantity (top-class probability, or ``|f|`` for SVMs), so
    all of them rank by that quantity directly. This keeps LC, margin and
    entropy on the same query sequence where rounding in ``-q ln q`` would
    otherwise reorder near-equal candidates.
    """
    strategy = Strategy.parse(strategy)
    if strategy is Strategy.RANDOM:
        raise ValueError("random sampling does not rank samples")
    if getattr(model, "degenerate", False):
        return np.zeros(len(X))
    if isinstance(model, PhaseOvrModel):
        f_para, f_ord = model.decisions(X)
        return -np.fmin(np.abs(f_para), np.abs(f_ord))
    if isinstance(model, RbfSvmModel):
        return -np.abs(model.decision_function(X))
    proba = model.predict_proba(X)
    live = _live_classes(model, proba.shape[1])
    if live.sum() < 2:
        return np.zeros(len(X))
    if live.sum() == 2:
        return -proba[:, live].max(axis=1)
    return uncertainty_scores(proba[:, live], strategy)


def vote_entropy(votes, committee_size):
    """Vote entropy ``-sum (V/n) ln (V/n)`` of committee votes per class."""
    v = np.asarray(votes, dtype=float)
    if committee_size < 1 or np.any(v < 0) or not math.isclose(v.sum(), committee_size):
        raise ValueError(f"votes {votes} do not sum to committee size {committee_size}")
    return float(-np.sum(_xlogx(v / committee_size)))


def select_query(scores, rng=None, strategy=Strategy.MARGIN, n_pool=None):
    """Position of the next query within the pool.

    Random draws uniformly; every other strategy takes the highest score,
    the lowest position winning ties.
    """
    strategy = Strategy.parse(strategy)
    if strategy is Strategy.RANDOM:
        n = len(scores) if scores is not None else n_pool
        if not n:
            raise ValueError("cannot query an empty pool")
        return int(rng.integers(n))
    s = np.asarray(scores, dtype=float)
    if s.size == 0:
        raise ValueError("cannot query an empty pool")
    return int(np.argmax(s))


# --- loop bookkeeping ----------------------------------------------------------


@dataclass(frozen=True)
class StoppingRule:
    """Stop at `max_labels` labels, or once system fidelity reaches `min_fidelity`.

    Both may be given; whichever triggers first ends the run. The labeling
    that crosses the fidelity floor is kept.
    """

    max_labels: int | None = None
    min_fidelity: float | None = None

    def __post_init__(self):
        if self.max_labels is None and self.min_fidelity is None:
            raise ValueError("a stopping rule needs max_labels or min_fidelity")
        if self.max_labels is not None and self.max_labels < 1:
            raise ValueError("max_labels must be >= 1")
        if self.min_fidelity is not None and not 0.0 < self.min_fidelity <= 1.0:
            raise ValueError("min_fidelity must lie in (0, 1]")


def MaxLabels(n):
    return StoppingRule(max_labels=int(n))


def MinSystemFidelity(f, max_labels=None):
    return StoppingRule(max_labels=max_labels, min_fidelity=float(f))


@dataclass(frozen=True)
class CurvePoint:
    n_labels: int
    accuracy: float
    mean_fidelity: float = 1.0


@dataclass
class ALState:
    pool_size: int
    labeled: list = field(default_factory=list)  # pool indices, in query order
    labels: list = field(default_factory=list)
    model: object = None
    fidelity: np.ndarray = None  # per pool sample; 1 for untouched samples
    curve: list = field(default_factory=list)
    queries: list = field(default_factory=list)  # indices chosen by the strategy
    n_seed: int = 0
    snapshots: dict = field(default_factory=dict)  # n_labels -> model

    def __post_init__(self):
        self._mask = np.zeros(self.pool_size, dtype=bool)
        if self.fidelity is None:
            self.fidelity = np.ones(self.pool_size)

    @property
    def labels_used(self):
        return len(self.labeled)

    @property
    def unlabeled(self):
        return np.flatnonzero(~self._mask)

    @property
    def labeled_mask(self):
        return self._mask.copy()

    def add(self, index, label):
        if self._mask[index]:
            raise ValueError(f"sample {index} already labeled")
        self._mask[index] = True
        self.labeled.append(int(index))
        self.labels.append(label)

    def system_fidelity(self):
        return float(np.mean(self.fidelity))

    def check_partition(self):
        lab = np.zeros(self.pool_size, dtype=bool)
        lab[self.labeled] = True
        assert len(set(self.labeled)) == len(self.labeled)
        assert np.array_equal(lab, self._mask)
        assert len(self.unlabeled) + len(self.labeled) == self.pool_size


def _eval_due(state, stopping_done, pool_size, every):
    if stopping_done:
        return True
    if every is None:
        every = 1 if pool_size <= 1000 else 5
    return state.labels_used % every == 0


# --- qutrit problem --------------------------------------------------------------

LEARNERS = {
    "logistic": partial(lr_fit, classes=(0, 1, 2)),
    "naive_bayes": partial(nb_fit, classes=(0, 1, 2)),
}


def evaluate_accuracy(model, X, truth):
    """Fraction of points whose predicted class equals the ground truth."""
    return float(np.mean(np.asarray(model.predict(X)) == np.asarray(truth)))


def run_qutrit_al(grid, strategy, stopping, rng, learner="logistic", coupling=None,
                  eval_every=None, seeds=None, on_query=None):
    """Active learning on a qutrit lattice.

    One random sample of each true class is handed over with its label; they
    count toward the label budget. Each query is labeled with
    ``weak_measurement.label_qutrit`` under `coupling`, or by the noiseless
    oracle when `coupling` is None (no fidelity is charged then).
    """
    strategy = Strategy.parse(strategy)
    fit = LEARNERS[learner] if isinstance(learner, str) else learner
    n_classes = int(grid.labels.max()) + 1
    if stopping.max_labels is not None and stopping.max_labels < n_classes:
        raise ValueError(
            f"label budget {stopping.max_labels} is below the {n_classes} seed samples"
        )
    state = ALState(len(grid))
    if seeds is None:
        seeds = [int(rng.choice(np.flatnonzero(grid.labels == c))) for c in range(n_classes)]
    for s in seeds:
        state.add(s, int(grid.labels[s]))
    state.n_seed = len(seeds)
    X = grid.x

    def refit():
        idx = np.asarray(state.labeled)
        state.model = fit(X[idx], np.asarray(state.labels))

    def record():
        state.curve.append(CurvePoint(
            state.labels_used, evaluate_accuracy(state.model, X, grid.labels),
            state.system_fidelity()))

    refit()
    record()
    while True:
        done = False
        if stopping.max_labels is not None and state.labels_used >= stopping.max_labels:
            break
        pool = state.unlabeled
        if len(pool) == 0:
            break
        if strategy is Strategy.RANDOM:
            pos = select_query(None, rng, strategy, n_pool=len(pool))
        else:
            scores = ranking_key(state.model, X[pool], strategy)
            pos = select_query(scores, rng, strategy)
            if on_query is not None:
                on_query(scores, pos)
        i = int(pool[pos])
        if coupling is None:
            label = int(grid.labels[i])
        else:
            out = wm.label_qutrit(grid.density(i), coupling, rng)
            label = out.assigned_class - 1
            state.fidelity[i] = out.final_fidelity
        state.add(i, label)
        state.queries.append(i)
        refit()
        if stopping.min_fidelity is not None and state.system_fidelity() <= stopping.min_fidelity:
            done = True
        if stopping.max_labels is not None and state.labels_used >= stopping.max_labels:
            done = True
        if not state.unlabeled.size:
            done = True
        if _eval_due(state, done, len(grid), eval_every):
            record()
        if done:
            break
    if state.curve[-1].n_labels != state.labels_used:
        record()
    return state


def run_qutrit_ovr_al(grid, target_class, strategy, stopping, rng, learner="naive_bayes",
                      eval_every=None, seeds=None):
    """Binary class-vs-rest active learning on a qutrit lattice (noiseless labels)."""
    strategy = Strategy.parse(strategy)
    base = {"logistic": lr_fit, "naive_bayes": nb_fit}[learner] if isinstance(learner, str) else learner
    fit = partial(base, classes=(0, 1))
    truth = (grid.labels == target_class).astype(int)
    binary = ds.QutritGrid(grid.x, grid.amplitudes, truth, grid.case, grid.side)
    if seeds is None:
        seeds = [int(rng.choice(np.flatnonzero(truth == c))) for c in (0, 1)]
    return run_qutrit_al(binary, strategy, stopping, rng, learner=fit, coupling=None,
                         eval_every=eval_every, seeds=seeds)


# --- phase problem -----------------------------------------------------------

PHASE_TARGETS = ("triple", ds.PARA_VS_REST, ds.ORDERED_VS_REST)


@dataclass
class PhaseProblem:
    """Grid, pool and precomputed oracle distances for one target."""

    grid: ds.PhaseGrid
    target: str = "triple"
    ordered_t_max: float = 0.3

    def __post_init__(self):
        if self.target not in PHASE_TARGETS:
            raise ValueError(f"unknown phase target {self.target!r}")
        x = self.grid.x
        self.in_ord = self.grid.ordered_domain(self.ordered_t_max)
        self.pool = np.flatnonzero(self.in_ord) if self.target == ds.ORDERED_VS_REST else np.arange(len(x))
        self.X = x[self.pool]
        self.dist_para = self.grid.distances(ds.PARA_VS_REST)[self.pool]
        self.dist_ord = self.grid.distances(ds.ORDERED_VS_REST)[self.pool]
        phase = self.grid.phase[self.pool]
        self.truth_para = ds.ovr_truth(phase, ds.PARA_VS_REST)
        self.truth_ord = ds.ovr_truth(phase, ds.ORDERED_VS_REST)
        self.pool_in_ord = self.in_ord[self.pool]

    @property
    def uses_para(self):
        return self.target != ds.ORDERED_VS_REST

    @property
    def uses_ord(self):
        return self.target != ds.PARA_VS_REST

    def oracle(self, pos, k, rng):
        """Noisy labels ``(para, ord)`` of pool position `pos`; None where not queried."""
        para = ordl = None
        if self.uses_para:
            flip = rng.random() < 0.5 * math.exp(-k * self.dist_para[pos])
            para = -self.truth_para[pos] if flip else self.truth_para[pos]
        if self.uses_ord and self.pool_in_ord[pos]:
            flip = rng.random() < 0.5 * math.exp(-k * self.dist_ord[pos])
            ordl = -self.truth_ord[pos] if flip else self.truth_ord[pos]
        return para, ordl

    def accuracy(self, model):
        if self.target == "triple":
            return evaluate_accuracy(model, self.grid.x, self.grid.phase)
        if self.target == ds.PARA_VS_REST:
            X = self.grid.x
            truth = ds.ovr_truth(self.grid.phase, ds.PARA_VS_REST)
        else:
            X = self.X
            truth = self.truth_ord
        return evaluate_accuracy(model, X, truth)


@dataclass
class PhaseLabels:
    para_idx: list = field(default_factory=list)
    para_y: list = field(default_factory=list)
    ord_idx: list = field(default_factory=list)
    ord_y: list = field(default_factory=list)


def fit_phase_model(problem, labels, C=1.0, gamma=None):
    X = problem.X
    para = ordm = None
    if problem.uses_para:
        para = svm_fit(X[labels.para_idx], np.asarray(labels.para_y), C=C, gamma=gamma)
    if problem.uses_ord:
        ordm = svm_fit(X[labels.ord_idx], np.asarray(labels.ord_y), C=C, gamma=gamma)
    if problem.target == "triple":
        return PhaseOvrModel(para, ordm, problem.ordered_t_max)
    return para if para is not None else ordm


def _seeded(problem, labels):
    ok = True
    if problem.uses_para:
        ok &= len(set(labels.para_y)) == 2
    if problem.uses_ord:
        ok &= len(set(labels.ord_y)) == 2
    return ok


def run_phase_al(problem, strategy, max_labels, k, rng, C=1.0, gamma=None,
                 eval_every=None, snapshot_at=()):
    """Active learning of phase boundaries with the noisy OvR oracle.

    Random draws seed the labeled set until every trained machine has seen
    both labels; seeds count toward `max_labels`. Each query yields the
    paramagnetic label and, inside the ordered domain, the ordered label.
    """
    strategy = Strategy.parse(strategy)
    if max_labels < 2:
        raise ValueError(f"label budget {max_labels} cannot seed two one-vs-rest labels")
    state = ALState(len(problem.pool))
    labels = PhaseLabels()
    state.phase_labels = labels

    def label(pos):
        para, ordl = problem.oracle(pos, k, rng)
        if para is not None:
            labels.para_idx.append(pos)
            labels.para_y.append(int(para))
        if ordl is not None:
            labels.ord_idx.append(pos)
            labels.ord_y.append(int(ordl))
        state.add(pos, (para, ordl))

    while not _seeded(problem, labels) and state.labels_used < max_labels:
        pool = state.unlabeled
        label(int(pool[rng.integers(len(pool))]))
    state.n_seed = state.labels_used

    def refit():
        state.model = fit_phase_model(problem, labels, C, gamma)
        if state.labels_used in snapshot_at:
            state.snapshots[state.labels_used] = (state.model, _copy_labels(labels))

    def record():
        state.curve.append(CurvePoint(state.labels_used, problem.accuracy(state.model)))

    refit()
    record()
    while state.labels_used < max_labels and state.unlabeled.size:
        pool = state.unlabeled
        if strategy is Strategy.RANDOM:
            pos = select_query(None, rng, strategy, n_pool=len(pool))
        else:
            pos = select_query(ranking_key(state.model, problem.X[pool], strategy), rng, strategy)
        i = int(pool[pos])
        label(i)
        state.queries.append(i)
        refit()
        done = state.labels_used >= max_labels or not state.unlabeled.size
        if _eval_due(state, done, len(problem.pool), eval_every):
            record()
    if state.curve[-1].n_labels != state.labels_used:
        record()
    return state


def _copy_labels(labels):
    return PhaseLabels(list(labels.para_idx), list(labels.para_y),
                       list(labels.ord_idx), list(labels.ord_y))


def al_run(problem, strategy, stopping, rng, **kwargs):
    """Dispatch to the qutrit or phase loop based on the problem object."""
    if isinstance(problem, ds.QutritGrid):
        return run_qutrit_al(problem, strategy, stopping, rng, **kwargs)
    if isinstance(problem, PhaseProblem):
        budget = stopping.max_labels if isinstance(stopping, StoppingRule) else int(stopping)
        return run_phase_al(problem, strategy, budget, rng=rng, **kwargs)
    raise TypeError(f"unsupported problem {type(problem).__name__}")


def self_train_phase(problem, labels, C=1.0, gamma=None, threshold=0.95, max_iter=5):
    """Self-train each one-vs-rest machine on the unlabeled rest of its pool."""
    X = problem.X
    fit = partial(svm_fit, C=C, gamma=gamma)

    def grow(idx, y, candidates):
        rest = np.setdiff1d(candidates, idx)
        base = svm_fit(X[idx], np.asarray(y), C=C, gamma=gamma)
        return self_train(base, fit, X[idx], np.asarray(y), X[rest], threshold, max_iter).model

    para = ordm = None
    if problem.uses_para:
        para = grow(labels.para_idx, labels.para_y, np.arange(len(X)))
    if problem.uses_ord:
        ordm = grow(labels.ord_idx, labels.ord_y, np.flatnonzero(problem.pool_in_ord))
    if problem.target == "triple":
        return PhaseOvrModel(para, ordm, problem.ordered_t_max)
    return para if para is not None else ordm


# --- three-phase problem -----------------------------------------------------


@dataclass
class TripleRun:
    """Learning curve of the combined three-phase predictor."""

    curve: list
    model: PhaseOvrModel
    runs: dict  # "para"/"ordered" -> ALState in separate mode, "joint" -> ALState
    snapshots: dict  # n_labels -> (model, {name: PhaseLabels})
    problems: dict


def _eval_points(budget, every=5):
    return set(range(0, budget + 1, every)) | {budget}


def run_phase_triple(grid, strategy, max_labels, k, rng, mode="separate", C=1.0, gamma=None,
                     ordered_t_max=0.3, every=5):
    """Three-phase prediction from two one-vs-rest machines.

    ``mode="separate"`` runs one active-learning loop per machine, each on
    its own pool (the full grid, and ``T <= ordered_t_max``) with its own
    `max_labels` budget, and combines the two machines afterwards; the
    curve point at ``n`` combines both machines trained on ``n`` labels.
    ``mode="joint"`` drives both machines from one shared query sequence
    scored by the closer of the two decision boundaries.
    """
    marks = _eval_points(max_labels, every)
    triple = PhaseProblem(grid, "triple", ordered_t_max)
    if mode == "joint":
        st = run_phase_al(triple, strategy, max_labels, k, rng, C, gamma, eval_every=every,
                          snapshot_at=marks)
        snaps = {n: (m, {"joint": lab}) for n, (m, lab) in st.snapshots.items()}
        return TripleRun(st.curve, st.model, {"joint": st}, snaps, {"joint": triple})
    if mode != "separate":
        raise ValueError(f"unknown mode {mode!r}")
    problems = {ds.PARA_VS_REST: PhaseProblem(grid, ds.PARA_VS_REST, ordered_t_max),
                ds.ORDERED_VS_REST: PhaseProblem(grid, ds.ORDERED_VS_REST, ordered_t_max)}
    runs = {name: run_phase_al(p, strategy, max_labels, k, rng, C, gamma, eval_every=every,
                               snapshot_at=marks)
            for name, p in problems.items()}
    para, ordr = runs[ds.PARA_VS_REST], runs[ds.ORDERED_VS_REST]
    curve, snaps = [], {}
    for n in sorted(set(para.snapshots) & set(ordr.snapshots)):
        (mp, lp), (mo, lo) = para.snapshots[n], ordr.snapshots[n]
        model = PhaseOvrModel(mp, mo, ordered_t_max)
        snaps[n] = (model, {ds.PARA_VS_REST: lp, ds.ORDERED_VS_REST: lo})
        curve.append(CurvePoint(n, triple.accuracy(model)))
    model = PhaseOvrModel(para.model, ordr.model, ordered_t_max)
    if not curve or curve[-1].n_labels != max(para.labels_used, ordr.labels_used):
        curve.append(CurvePoint(max(para.labels_used, ordr.labels_used), triple.accuracy(model)))
    problems["triple"] = triple
    return TripleRun(curve, model, runs, snaps, problems)


def self_train_triple(run, n_labels, C=1.0, gamma=None, threshold=0.95, max_iter=5):
    """Self-trained copy of the combined model stored at `n_labels`."""
    model, labels = run.snapshots[n_labels]
    if "joint" in labels:
        return self_train_phase(run.problems["joint"], labels["joint"], C, gamma, threshold, max_iter)
    para = self_train_phase(run.problems[ds.PARA_VS_REST], labels[ds.PARA_VS_REST], C, gamma,
                            threshold, max_iter)
    ordm = self_train_phase(run.problems[ds.ORDERED_VS_REST], labels[ds.ORDERED_VS_REST], C,
                            gamma, threshold, max_iter)
    return PhaseOvrModel(para, ordm, model.ordered_t_max)
