import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alphys import quantum as q


def _kron_by_loops(a, b):
    # entry (i*db + k, j*db + l) = a[i, j] * b[k, l]
    da, db = a.shape[0], b.shape[0]
    out = np.zeros((da * db, da * db), dtype=complex)
    for i, j, k, l in itertools.product(range(da), range(da), range(db), range(db)):
        out[i * db + k, j * db + l] = a[i, j] * b[k, l]
    return out


def _partial_trace_by_loops(rho, dims, keep):
    # sum over every basis index of the traced factors
    n = len(dims)
    out = np.zeros((dims[keep], dims[keep]), dtype=complex)
    for idx_r in itertools.product(*[range(d) for d in dims]):
        for idx_c in itertools.product(*[range(d) for d in dims]):
            if any(idx_r[m] != idx_c[m] for m in range(n) if m != keep):
                continue
            r = np.ravel_multi_index(idx_r, dims)
            c = np.ravel_multi_index(idx_c, dims)
            out[idx_r[keep], idx_c[keep]] += rho[r, c]
    return out


def _expm_series(A, terms=60):
    out = np.eye(A.shape[0], dtype=complex)
    term = np.eye(A.shape[0], dtype=complex)
    for n in range(1, terms):
        term = term @ A / n
        out = out + term
    return out


def test_identity_tensor():
    assert np.allclose(q.tensor_product(np.eye(2), np.eye(3)), np.eye(6))


def test_tensor_trace_multiplicative(rng):
    rho = q.random_density(3, rng)
    out = q.tensor_product(rho, q.projector(2, 0))
    assert np.isclose(np.trace(out), np.trace(rho))


def test_tensor_matches_index_formula(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    assert np.allclose(q.tensor_product(a, b), _kron_by_loops(a, b))


def test_projector_times_rotation_block():
    Y = np.array([[0, -1j], [1j, 0]])
    rot = _expm_series(-1j * (np.pi / 2) * Y)
    out = q.tensor_product(q.projector(3, 0), rot)
    assert abs(out[0, 0]) < 1e-12  # cos(pi/2)
    assert np.isclose(out[0, 1], -1.0) and np.isclose(out[1, 0], 1.0)
    assert np.allclose(out[2:, :], 0)


def test_tensor_dimension_limit():
    with pytest.raises(ValueError):
        q.tensor_product(np.eye(4), np.eye(5))


def test_partial_trace_product_state(rng):
    rho = q.random_density(3, rng)
    sigma = q.random_density(2, rng)
    tau = q.random_density(2, rng)
    full = q.tensor_product(q.tensor_product(rho, sigma), tau)
    assert np.allclose(q.partial_trace(full, (3, 2, 2), 0), rho)
    assert np.allclose(q.partial_trace(full, (3, 2, 2), 1), sigma)
    assert np.allclose(q.partial_trace(full, (3, 2, 2), 2), tau)


def test_partial_trace_matches_loops(rng):
    full = q.random_density(12, rng)
    for keep in range(3):
        assert np.allclose(q.partial_trace(full, (3, 2, 2), keep),
                           _partial_trace_by_loops(full, (3, 2, 2), keep))


def test_partial_trace_rejects_bad_dims(rng):
    with pytest.raises(ValueError):
        q.partial_trace(q.random_density(6, rng), (3, 3), 0)


def test_fidelity_examples():
    r0 = q.projector(3, 0)
    r1 = q.projector(3, 1)
    assert q.fidelity(r0, r0) == pytest.approx(1.0)
    assert q.fidelity(r0, r1) == pytest.approx(0.0, abs=1e-12)
    mixed = np.diag([0.5, 0.5, 0.0]).astype(complex)
    assert q.fidelity(mixed, r0) == pytest.approx(0.5)


def test_fidelity_with_pure_argument(rng):
    # one pure argument: F = <psi|rho|psi>
    for _ in range(20):
        psi = rng.normal(size=3) + 1j * rng.normal(size=3)
        psi /= np.linalg.norm(psi)
        rho = q.random_density(3, rng)
        assert q.fidelity(rho, np.outer(psi, psi.conj())) == pytest.approx(
            float(np.real(psi.conj() @ rho @ psi)), abs=1e-10)


def test_fidelity_symmetry(rng):
    for _ in range(100):
        a = q.random_density(3, rng, rank=int(rng.integers(1, 4)))
        b = q.random_density(3, rng, rank=int(rng.integers(1, 4)))
        assert abs(q.fidelity(a, b) - q.fidelity(b, a)) <= 1e-8


def test_fidelity_rejects_non_psd():
    bad = np.diag([1.2, -0.2, 0.0]).astype(complex)
    with pytest.raises(ValueError):
        q.fidelity(bad, q.projector(3, 0))


def test_psd_sqrt_squares_back(rng):
    for _ in range(20):
        G = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        H = G @ G.conj().T
        s = q.psd_sqrt(H)
        assert np.linalg.norm(s @ s - H) <= 1e-9 * max(1.0, np.linalg.norm(H))


def test_expectation_examples():
    rho = np.diag([0.1, 0.7, 0.2]).astype(complex)
    assert q.expectation(np.eye(3), rho) == pytest.approx(1.0)
    assert q.expectation(q.spin1_z(), rho) == pytest.approx(-0.1)


def test_expectation_rejects_non_hermitian():
    with pytest.raises(ValueError):
        q.expectation(np.array([[0, 1], [0, 0]]), np.eye(2) / 2)


def test_density_validation():
    with pytest.raises(q.StateError):
        q.check_density(np.diag([0.5, 0.6]))
    with pytest.raises(q.StateError):
        q.check_density(np.array([[0.5, 0.1], [0.2, 0.5]]))


def test_ket_normalization():
    with pytest.raises(q.StateError):
        q.ket([1.0, 1.0])
    assert np.allclose(q.ket([0.6, 0.8]), [0.6, 0.8])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_random_states_are_valid(seed, rank):
    rng = np.random.default_rng(seed)
    rho = q.random_density(3, rng, rank=rank)
    q.check_density(rho)
    assert 0.0 <= q.fidelity(rho, q.random_pure_state(3, rng)) <= 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_partial_trace_preserves_trace(seed):
    rng = np.random.default_rng(seed)
    full = q.random_density(12, rng)
    for keep in range(3):
        assert np.trace(q.partial_trace(full, (3, 2, 2), keep)).real == pytest.approx(1.0)
