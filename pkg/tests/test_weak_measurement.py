import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alphys import quantum as q
from alphys import weak_measurement as wm

ANGLES = (0.1, 0.5, 1.0, math.pi / 2)
B0 = np.ones(3) / math.sqrt(3)


def _kraus_post_state(rho, j, ta, tb):
    """Independent oracle: the coupling as two consecutive Kraus channels.

    Ancilla A rotates by ta only on |j>, ancilla B by tb only on |b0>; tracing
    an ancilla that starts in |0> leaves Kraus operators
    ``(I - P) + cos(t) P`` and ``sin(t) P``.
    """
    PA = np.zeros((3, 3))
    PA[j, j] = 1.0
    PB = np.outer(B0, B0)
    out = rho
    for P, t in ((PA, ta), (PB, tb)):
        K0 = np.eye(3) - P + math.cos(t) * P
        K1 = math.sin(t) * P
        out = K0 @ out @ K0.conj().T + K1 @ out @ K1.conj().T
    return out


def _correlator_oracle(rho, j, ta, tb):
    # the branch with both pointers flipped and the qutrit found in |j>:
    # amplitude <j| sin(tb) P_b0 sin(ta) P_j = sin ta sin tb |<j|b0>|^2 psi_j
    return (math.sin(ta) * math.sin(tb)) ** 2 * rho[j, j].real / 9.0


def test_zero_coupling_limit(rng):
    rho = q.random_pure_state(3, rng)
    cfg = wm.CouplingConfig(1e-8, 1e-8)
    out = wm.build_coupled_state(rho, 0, cfg)
    ref = q.tensor_product(q.tensor_product(rho, q.projector(2, 0)), q.projector(2, 0))
    assert np.allclose(out, ref, atol=1e-6)


def test_coupled_state_is_valid(rng):
    for _ in range(50):
        rho = q.random_pure_state(3, rng)
        for t in (0.1, 0.7, math.pi / 2):
            q.check_density(wm.build_coupled_state(rho, int(rng.integers(3)), wm.CouplingConfig(t, t)))


def test_ancilla_a_untouched_when_orthogonal():
    rho = q.projector(3, 2)
    out = wm.build_coupled_state(rho, 0, wm.CouplingConfig(math.pi / 2, math.pi / 2))
    anc_a = q.partial_trace(out, (3, 2, 2), 1)
    assert np.allclose(anc_a, q.projector(2, 0), atol=1e-12)


def test_index_out_of_range():
    with pytest.raises(ValueError):
        wm.build_coupled_state(np.eye(3) / 3, 3, wm.CouplingConfig())


def test_correlator_matches_branch_amplitude(rng):
    for _ in range(20):
        rho = q.random_density(3, rng)
        for ta in ANGLES:
            for tb in ANGLES:
                j = int(rng.integers(3))
                assert wm.correlator(rho, j, wm.CouplingConfig(ta, tb)) == pytest.approx(
                    _correlator_oracle(rho, j, ta, tb), abs=1e-13)


@pytest.mark.parametrize("ta", ANGLES)
@pytest.mark.parametrize("tb", ANGLES)
def test_normalization_closed_form(ta, tb):
    # d^2 / (sin^2 ta sin^2 tb), i.e. 16 N_AB^2 with N_AB = d / (4 sin ta sin tb)
    n_ab = 3 / (4 * math.sin(ta) * math.sin(tb))
    for j in range(3):
        assert wm.normalization_factor(wm.CouplingConfig(ta, tb), j) == pytest.approx(
            16 * n_ab**2, rel=1e-12)


def test_reconstruction_examples():
    rho = np.diag([0.1, 0.7, 0.2]).astype(complex)
    assert wm.reconstruct_diagonal(rho, 1, wm.CouplingConfig()) == pytest.approx(0.7, abs=1e-12)
    for t in ANGLES:
        assert wm.reconstruct_diagonal(q.projector(3, 0), 0, wm.CouplingConfig(t, t)) == pytest.approx(1.0, abs=1e-12)


def test_shot_mode_confidence_interval():
    rho = np.diag([0.1, 0.7, 0.2]).astype(complex)
    cfg = wm.CouplingConfig(shots=10_000)
    p = _correlator_oracle(rho, 1, math.pi / 2, math.pi / 2)
    factor = 9.0
    est = wm.reconstruct_diagonal(rho, 1, cfg, np.random.default_rng(0))
    assert abs(est - 0.7) <= 3 * factor * math.sqrt(p * (1 - p) / 10_000)


def test_shot_mode_unbiased():
    rho = np.diag([0.1, 0.7, 0.2]).astype(complex)
    cfg = wm.CouplingConfig(1.0, 1.0, shots=50)
    rng = np.random.default_rng(1)
    draws = np.array([wm.reconstruct_diagonal(rho, 1, cfg, rng) for _ in range(10_000)])
    assert abs(draws.mean() - 0.7) <= 4 * draws.std(ddof=1) / math.sqrt(len(draws))


def test_shots_must_be_positive():
    with pytest.raises(ValueError):
        wm.CouplingConfig(shots=0)
    with pytest.raises(ValueError):
        wm.CouplingConfig(theta_a=0.0)


def test_post_state_matches_kraus_oracle(rng):
    for _ in range(20):
        rho = q.random_density(3, rng)
        ta, tb = rng.uniform(0.05, math.pi / 2, size=2)
        j = int(rng.integers(3))
        got = wm.post_state(rho, j, wm.CouplingConfig(ta, tb))
        assert np.allclose(got, _kraus_post_state(rho, j, ta, tb), atol=1e-12)


def test_weak_coupling_fidelity():
    rho = q.random_pure_state(3, np.random.default_rng(3))
    _, F = wm.post_state_and_loss(rho, 0, wm.CouplingConfig(1e-4, 1e-4))
    assert F >= 1 - 1e-6


def test_orthogonal_state_only_feels_second_coupling():
    # the j-projector misses |2>, but the b0 projector overlaps it
    for tb in ANGLES:
        _, F = wm.post_state_and_loss(q.projector(3, 2), 0, wm.CouplingConfig(0.7, tb))
        expected = (2 / 3 + math.cos(tb) / 3) ** 2 + math.sin(tb) ** 2 / 9
        assert F == pytest.approx(expected, abs=1e-10)


def test_maximally_mixed_fidelity_non_increasing():
    rho = np.eye(3, dtype=complex) / 3
    fs = [wm.post_state_and_loss(rho, 0, wm.CouplingConfig(t, 0.3))[1] for t in ANGLES]
    assert all(b <= a + 1e-12 for a, b in zip(fs, fs[1:]))


def test_label_first_retrieval_decides():
    rho = np.diag([0.1, 0.7, 0.2]).astype(complex)
    out = wm.label_qutrit(rho, wm.CouplingConfig(), np.random.default_rng(0), first=1)
    assert out.assigned_class == 2 and out.couplings_performed == 1
    assert out.diagonals_retrieved == [(1, pytest.approx(0.7))]


def test_label_second_retrieval_infers_third():
    rho = np.diag([0.1, 0.7, 0.2]).astype(complex)
    out = wm.label_qutrit(rho, wm.CouplingConfig(), np.random.default_rng(0), first=0, second=2)
    assert out.assigned_class == 2 and out.couplings_performed == 2
    (j, a), (k, b) = out.diagonals_retrieved
    assert (j, k) == (0, 2)
    assert (a, b, 1 - a - b) == pytest.approx((0.1, 0.2, 0.7))


def test_label_pure_basis_state_always_class_one():
    rng = np.random.default_rng(4)
    for _ in range(30):
        assert wm.label_qutrit(q.projector(3, 0), wm.CouplingConfig(0.4, 0.9), rng).assigned_class == 1


def test_sequential_coupling_costs_more_than_fresh_copy():
    rho = np.diag([0.1, 0.7, 0.2]).astype(complex)
    seq = wm.label_qutrit(rho, wm.CouplingConfig(), np.random.default_rng(0), first=0, second=2)
    fresh = wm.label_qutrit(rho, wm.CouplingConfig(fresh_copy=True), np.random.default_rng(0),
                            first=0, second=2)
    single, F1 = wm.post_state_and_loss(rho, 0, wm.CouplingConfig())
    assert fresh.final_fidelity == pytest.approx(F1)
    assert seq.final_fidelity < fresh.final_fidelity
    assert np.allclose(seq.final_state, wm.post_state(single, 2, wm.CouplingConfig()))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(ANGLES), st.sampled_from(ANGLES))
def test_exact_labels_are_true_argmax(seed, ta, tb):
    rng = np.random.default_rng(seed)
    rho = q.random_pure_state(3, rng)
    pops = np.real(np.diag(rho))
    if np.sort(pops)[-1] - np.sort(pops)[-2] < 1e-9:
        return
    out = wm.label_qutrit(rho, wm.CouplingConfig(ta, tb), rng)
    assert out.assigned_class == int(np.argmax(pops)) + 1
    assert 0.0 <= out.final_fidelity <= 1.0 + 1e-12
    assert 1 <= len(out.diagonals_retrieved) <= 2
    for _, v in out.diagonals_retrieved:
        assert -1e-9 <= v <= 1 + 1e-9


def test_shot_mode_estimates_clamped():
    rho = np.diag([0.1, 0.7, 0.2]).astype(complex)
    rng = np.random.default_rng(9)
    for _ in range(50):
        out = wm.label_qutrit(rho, wm.CouplingConfig(0.3, 0.3, shots=5), rng)
        assert all(0.0 <= v <= 1.0 for _, v in out.diagonals_retrieved)
