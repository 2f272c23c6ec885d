import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alphys import datasets as ds
from alphys.classifiers import (GaussianNBModel, LogisticModel, PhaseOvrModel, RbfSvmModel,
                                default_gamma, lr_fit, nb_fit, ovr_predict_phase, self_train,
                                svm_fit)
from alphys.classifiers.io import from_dict, load_model, save_model, to_dict
from alphys.classifiers.logistic import lbfgs, objective, softmax
from alphys.classifiers.svm import CONFIDENCE_SLOPE, dual_diagnostics, rbf_kernel

XOR_X = np.array([[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]])
XOR_Y = np.array([1, -1, -1, 1])


def _blobs(rng, n=60, k=3):
    centers = np.array([[0, 0], [2, 0], [1, 2]])[:k]
    y = np.arange(n) % k
    return centers[y] + 0.6 * rng.normal(size=(n, 2)), y


# --- logistic regression ---------------------------------------------------

def test_lr_symmetric_boundary():
    m = lr_fit([[-1.0], [1.0]], [0, 1])
    p = m.predict_proba([[0.0]])[0]
    assert p == pytest.approx([0.5, 0.5], abs=1e-6)


def test_lr_zero_weights_uniform():
    m = LogisticModel(np.zeros((3, 3)), np.arange(3), np.arange(3))
    assert np.allclose(m.predict_proba(np.random.default_rng(0).normal(size=(5, 2))), 1 / 3)


def test_lr_two_class_sigmoid():
    m = LogisticModel(np.array([[0.0, 0.0], [0.0, 0.5]]), np.arange(2), np.arange(2))
    assert m.predict_proba([[2.0]])[0, 1] == pytest.approx(1 / (1 + math.exp(-1)))
    assert m.predict_proba([[2.0]])[0, 1] == pytest.approx(0.7311, abs=1e-4)


def test_lr_gradient_matches_finite_differences(rng):
    X, y = _blobs(rng)
    Xb = np.column_stack([np.ones(len(X)), X])
    Y = np.eye(3)[y]
    w = rng.normal(size=9)
    _, g = objective(w, Xb, Y, 1.0)
    h = 1e-5
    fd = np.array([(objective(w + h * e, Xb, Y, 1.0)[0] - objective(w - h * e, Xb, Y, 1.0)[0]) / (2 * h)
                   for e in np.eye(9)])
    assert np.allclose(g, fd, rtol=1e-5, atol=1e-9)


def test_lr_objective_decreases(rng):
    X, y = _blobs(rng)
    hist = []
    m = lr_fit(X, y, history=hist)
    assert m.converged
    assert all(b <= a + 1e-15 for a, b in zip(hist, hist[1:]))


def test_lbfgs_quadratic():
    A = np.diag([1.0, 10.0, 100.0])
    x, f, ok, _ = lbfgs(lambda v: (0.5 * v @ A @ v - v.sum(), A @ v - 1), np.zeros(3), tol=1e-10)
    assert ok and np.allclose(x, 1 / np.diag(A))


def test_lr_softmax_shift_invariance(rng):
    s = rng.normal(size=(4, 3))
    assert np.allclose(softmax(s), softmax(s + 7.5))
    assert np.allclose(softmax(s).sum(axis=1), 1, atol=1e-9)


def test_lr_single_class_degenerate():
    m = lr_fit([[0.0], [1.0]], [2, 2], classes=[0, 1, 2])
    assert m.degenerate
    assert np.array_equal(m.predict([[5.0]]), [2])
    assert np.allclose(m.predict_proba([[5.0]]), [[0, 0, 1]])


def test_lr_dimension_mismatch(rng):
    m = lr_fit(*_blobs(rng))
    with pytest.raises(ValueError):
        m.predict_proba(np.zeros((2, 3)))


def test_lr_matches_sklearn(rng):
    sk = pytest.importorskip("sklearn.linear_model")
    X, y = _blobs(rng)
    ours = lr_fit(X, y, tol=1e-10, max_iter=2000)
    ref = sk.LogisticRegression(C=1.0, tol=1e-12, max_iter=10_000).fit(X, y)
    assert np.allclose(ours.predict_proba(X), ref.predict_proba(X), atol=1e-5)


# --- naive Bayes -----------------------------------------------------------

def _nb_pm1():
    return GaussianNBModel(np.array([0, 1]), np.array([0.5, 0.5]), np.array([[-1.0], [1.0]]),
                           np.ones((2, 1)), 0.0)


def test_nb_symmetric_posterior():
    assert _nb_pm1().predict_proba([[0.0]])[0] == pytest.approx([0.5, 0.5])


def test_nb_posterior_ratio():
    p = _nb_pm1().predict_proba([[1.0]])[0]
    assert p[1] / p[0] == pytest.approx(math.exp(2))


def test_nb_absent_class_never_predicted(rng):
    X, y = _blobs(rng, k=2)
    m = nb_fit(X, y, classes=[0, 1, 2])
    assert m.priors[2] == 0
    grid = rng.uniform(-5, 5, size=(500, 2))
    assert np.all(m.predict_proba(grid)[:, 2] == 0)
    assert not np.any(m.predict(grid) == 2)


def test_nb_priors_and_floor(rng):
    X, y = _blobs(rng)
    m = nb_fit(X, y)
    assert m.priors.sum() == pytest.approx(1)
    assert np.all(m.variances >= m.var_floor)


def test_nb_independent_features_by_enumeration():
    m = GaussianNBModel(np.array([0, 1]), np.array([0.5, 0.5]),
                        np.array([[0.0, 1.0], [1.0, -0.5]]), np.array([[1.0, 2.0], [0.5, 1.0]]), 0.0)

    def pdf(x, mu, var):
        return math.exp(-(x - mu) ** 2 / (2 * var)) / math.sqrt(2 * math.pi * var)

    for x1, x2 in itertools.product((-1.0, 0.0, 1.0), repeat=2):
        joint = np.array([0.5 * pdf(x1, m.means[c, 0], m.variances[c, 0])
                          * pdf(x2, m.means[c, 1], m.variances[c, 1]) for c in range(2)])
        assert np.allclose(m.predict_proba([[x1, x2]])[0], joint / joint.sum())


def test_nb_matches_sklearn(rng):
    sk = pytest.importorskip("sklearn.naive_bayes")
    X, y = _blobs(rng)
    ref = sk.GaussianNB().fit(X, y)
    assert np.allclose(nb_fit(X, y).predict_proba(X), ref.predict_proba(X), atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.permutations([0, 1, 2]))
def test_label_permutation_equivariance(seed, perm):
    rng = np.random.default_rng(seed)
    X, y = _blobs(rng)
    perm = np.array(perm)
    Xq = rng.normal(size=(10, 2))
    for fit in (nb_fit, lr_fit):
        p = fit(X, y).predict_proba(Xq)
        q = fit(X, perm[y]).predict_proba(Xq)
        assert np.allclose(q[:, perm], p, atol=1e-5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_probabilities_on_simplex(seed):
    rng = np.random.default_rng(seed)
    X, y = _blobs(rng)
    Xq = rng.normal(scale=10, size=(20, 2))
    for m in (nb_fit(X, y), lr_fit(X, y), svm_fit(X, np.where(y == 0, 1, -1))):
        p = m.predict_proba(Xq)
        assert np.all(p >= 0) and np.allclose(p.sum(axis=1), 1, atol=1e-9)


# --- SVM -------------------------------------------------------------------

def _dual_objective(alpha, y, K):
    v = alpha * y
    return alpha.sum() - 0.5 * v @ K @ v


def test_svm_separable_pair():
    m = svm_fit([[-1.0, -1.0], [1.0, 1.0]], [-1, 1])
    assert list(m.predict([[-1.0, -1.0], [1.0, 1.0]])) == [-1, 1]


def test_xor_against_brute_force_dual():
    gamma = default_gamma(XOR_X)
    assert gamma == pytest.approx(0.5)
    K = rbf_kernel(XOR_X, XOR_X, gamma)
    y = XOR_Y.astype(float)
    # grid over alpha_0..alpha_2; alpha_3 is fixed by sum(alpha y) = 0
    g = np.linspace(0, 1, 101)
    a0, a1, a2 = np.meshgrid(g, g, g, indexing="ij")
    A = np.stack([a0.ravel(), a1.ravel(), a2.ravel()], axis=1)
    a3 = -(A @ y[:3]) / y[3]
    ok = (a3 >= 0) & (a3 <= 1)
    A = np.column_stack([A[ok], a3[ok]])
    V = A * y
    obj = A.sum(axis=1) - 0.5 * np.einsum("ni,ij,nj->n", V, K, V)
    best = A[np.argmax(obj)]
    # every multiplier may sit at the bound; the mean residual is then a valid bias
    free = (best > 1e-9) & (best < 1 - 1e-9)
    rows = np.flatnonzero(free) if free.any() else np.arange(4)
    b = float(np.mean(y[rows] - K[rows] @ (best * y)))
    brute_pred = np.sign(K @ (best * y) + b)
    assert np.array_equal(brute_pred, y)

    m = svm_fit(XOR_X, XOR_Y)
    alpha, gap = dual_diagnostics(m, XOR_X, XOR_Y)
    assert np.array_equal(m.predict(XOR_X), XOR_Y)
    assert _dual_objective(alpha, y, K) >= obj.max() - 1e-9
    assert gap <= 1e-3


def test_svm_kkt_and_constraints(rng):
    X, y = _blobs(rng, n=80, k=2)
    y = np.where(y == 0, 1, -1)
    m = svm_fit(X, y)
    alpha, gap = dual_diagnostics(m, X, y)
    assert m.converged and gap <= 1e-3
    assert np.all(alpha >= 0) and np.all(alpha <= m.C + 1e-12)
    assert abs(np.sum(alpha * y)) <= 1e-6


def test_svm_kernel_and_far_field(rng):
    X, y = _blobs(rng, n=40, k=2)
    m = svm_fit(X, np.where(y == 0, 1, -1))
    assert np.allclose(np.diag(rbf_kernel(X, X, 0.7)), 1)
    far = np.array([[50.0, 50.0]])
    D2 = np.min(np.sum((m.support_vectors - far) ** 2, axis=1))
    bound = np.sum(np.abs(m.coef)) * math.exp(-m.gamma * D2)
    assert abs(m.decision_function(far)[0] - m.b) <= bound
    # continuity
    x = np.array([[0.5, 0.5]])
    assert abs(m.decision_function(x + 1e-7)[0] - m.decision_function(x)[0]) < 1e-5


def test_svm_degenerate_and_label_check():
    m = svm_fit([[0.0], [1.0]], [1, 1])
    assert m.degenerate and list(m.predict([[3.0]])) == [1]
    with pytest.raises(ValueError):
        svm_fit([[0.0], [1.0]], [0, 1])


def test_svm_confidence_squashing(rng):
    X, y = _blobs(rng, n=40, k=2)
    m = svm_fit(X, np.where(y == 0, 1, -1))
    f = m.decision_function(X)
    assert np.allclose(m.predict_proba(X)[:, 1], 1 / (1 + np.exp(-CONFIDENCE_SLOPE * f)))


def test_svm_matches_sklearn(rng):
    sk = pytest.importorskip("sklearn.svm")
    X, y = _blobs(rng, n=100, k=2)
    y = np.where(y == 0, 1, -1)
    m = svm_fit(X, y, tol=1e-5)
    ref = sk.SVC(C=1.0, gamma=m.gamma, tol=1e-5).fit(X, y)
    Xq = rng.normal(size=(200, 2)) + 1
    assert np.max(np.abs(m.decision_function(Xq) - ref.decision_function(Xq))) < 1e-2


# --- one-vs-rest phase model ----------------------------------------------

def _const_svm(b):
    return RbfSvmModel(np.zeros(0), np.zeros((0, 2)), b, 1.0)


def test_ovr_rules():
    both_neg = PhaseOvrModel(_const_svm(-1.0), _const_svm(-1.0))
    assert ovr_predict_phase(both_neg, np.array([0.5, 0.1])) == ds.Phase.KT
    both_pos = PhaseOvrModel(_const_svm(1.0), _const_svm(1.0))
    assert ovr_predict_phase(both_pos, np.array([0.5, 0.1])) == ds.Phase.PARAMAGNETIC
    ordered = PhaseOvrModel(_const_svm(-1.0), _const_svm(1.0))
    assert ovr_predict_phase(ordered, np.array([0.5, 0.1])) == ds.Phase.ORDERED
    # outside its domain the ordered machine is ignored
    assert ovr_predict_phase(ordered, np.array([0.5, 0.5])) == ds.Phase.KT


def test_ovr_end_to_end_partition():
    grid = ds.gen_phase_grid(step=0.05)
    X = grid.x
    para = svm_fit(X, ds.ovr_truth(grid.phase, ds.PARA_VS_REST))
    dom = grid.ordered_domain()
    ordm = svm_fit(X[dom], ds.ovr_truth(grid.phase[dom], ds.ORDERED_VS_REST))
    model = PhaseOvrModel(para, ordm)
    fine = ds.gen_phase_grid(step=0.01)
    acc = np.mean(model.predict_phase(fine.x) == fine.phase)
    assert acc > 0.9


# --- self-training ---------------------------------------------------------

def test_self_train_empty_pool(rng):
    X, y = _blobs(rng)
    m = nb_fit(X, y)
    res = self_train(m, nb_fit, X, y, np.zeros((0, 2)))
    assert res.model is m and res.iterations == 0


def test_self_train_nothing_confident(rng):
    X, y = _blobs(rng)
    m = nb_fit(X, y)
    res = self_train(m, nb_fit, X, y, np.array([[1.0, 0.7]]), threshold=0.999999)
    assert res.iterations == 1 and res.added == [0] and res.model is m


def test_self_train_adopts_interior_sample():
    grid = ds.gen_phase_grid(step=0.05)
    truth = ds.ovr_truth(grid.phase, ds.PARA_VS_REST)
    rng = np.random.default_rng(2)
    idx = rng.choice(len(grid), 60, replace=False)
    fit = lambda X, y: svm_fit(X, y)  # noqa: E731
    m = fit(grid.x[idx], truth[idx])
    # one point deep in the paramagnetic region, one deep in the ordered region
    deep = np.array([[0.05, 0.6], [0.3, 0.02]])
    res = self_train(m, fit, grid.x[idx], truth[idx], deep)
    assert sorted(res.pseudo_index.tolist()) == [0, 1]
    order = np.argsort(res.pseudo_index)
    assert list(res.pseudo_labels[order]) == [1, -1]


def test_self_train_keeps_true_labels(rng):
    X, y = _blobs(rng)
    Xu = rng.normal(size=(50, 2)) + 1
    res = self_train(lr_fit(X, y), lr_fit, X, y, Xu, threshold=0.8)
    assert len(res.pseudo_index) == len(set(res.pseudo_index.tolist()))
    assert sum(res.added) == len(res.pseudo_index)
    # refitting on the final set is a fixed point
    again = self_train(res.model, lr_fit, np.vstack([X, Xu[res.pseudo_index]]),
                       np.concatenate([y, res.pseudo_labels]),
                       np.delete(Xu, res.pseudo_index, axis=0), threshold=0.8, max_iter=1)
    assert again.iterations <= 1


# --- serialization ---------------------------------------------------------

def test_model_round_trip(tmp_path, rng):
    X, y = _blobs(rng)
    yb = np.where(y == 0, 1, -1)
    Xq = rng.normal(size=(10, 2))
    svm = svm_fit(X, yb)
    for m in (lr_fit(X, y), nb_fit(X, y), svm, PhaseOvrModel(svm, svm)):
        back = from_dict(to_dict(m))
        assert type(back) is type(m)
        save_model(m, tmp_path / "m.json")
        again = load_model(tmp_path / "m.json")
        assert np.allclose(back.predict(Xq), m.predict(Xq))
        assert np.allclose(again.predict(Xq), m.predict(Xq))
