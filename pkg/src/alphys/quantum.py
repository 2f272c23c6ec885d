"""Dense complex linear algebra for small quantum systems.

Everything here works on plain ``numpy`` arrays of shape ``(d, d)`` with
``d <= MAX_DIM``. Density matrices are validated on the way in; nothing is
silently repaired beyond clamping eigenvalue noise in ``[-ATOL, 0)``.
"""

import numpy as np

MAX_DIM = 16
ATOL = 1e-10


class StateError(ValueError):
    """Raised when an operator or state violates its invariants."""


def _square(a, name="matrix"):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise StateError(f"{name} must be square, got shape {a.shape}")
    if a.shape[0] > MAX_DIM:
        raise StateError(f"{name} dimension {a.shape[0]} exceeds {MAX_DIM}")
    if not np.all(np.isfinite(a)):
        raise StateError(f"{name} has non-finite entries")
    return a


def check_hermitian(h, atol=ATOL, name="operator"):
    """Return ``(h + h^dagger)/2`` after verifying ``h`` is Hermitian to `atol`."""
    h = _square(h, name)
    if np.max(np.abs(h - h.conj().T), initial=0.0) > atol:
        raise StateError(f"{name} is not Hermitian")
    return 0.5 * (h + h.conj().T)


def check_density(rho, atol=ATOL):
    """Validate a density matrix and return its symmetrized copy.

    Checks Hermiticity, unit trace and positivity, each to `atol`.
    """
    rho = check_hermitian(rho, atol, "density matrix")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol:
        raise StateError(f"density matrix trace is {tr!r}, expected 1")
    if np.linalg.eigvalsh(rho)[0] < -atol:
        raise StateError("density matrix is not positive semidefinite")
    return rho


def ket(amplitudes):
    """Normalized column state from a sequence of amplitudes."""
    v = np.asarray(amplitudes, dtype=complex).ravel()
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > ATOL:
        raise StateError(f"ket norm is {norm!r}, expected 1")
    return v


def pure_density(amplitudes):
    v = ket(amplitudes)
    return np.outer(v, v.conj())


def projector(dim, index):
    """Rank-one projector onto computational basis state `index`."""
    p = np.zeros((dim, dim), dtype=complex)
    p[index, index] = 1.0
    return p


def tensor_product(a, b):
    """Kronecker product; entry ``(i*db + k, j*db + l)`` is ``a[i,j] * b[k,l]``."""
    a = _square(a, "left factor")
    b = _square(b, "right factor")
    if a.shape[0] * b.shape[0] > MAX_DIM:
        raise StateError(
            f"tensor product dimension {a.shape[0] * b.shape[0]} exceeds {MAX_DIM}"
        )
    return np.kron(a, b)


def partial_trace(rho, dims, keep):
    """Reduce `rho` on a multipartite space to the subsystem at index `keep`.

    Parameters
    ----------
    rho : (D, D) array
        Operator on the product space, ``D = prod(dims)``.
    dims : sequence of int
        Subsystem dimensions in tensor order.
    keep : int
        Index of the subsystem to keep.
    """
    rho = _square(rho, "operator")
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims) or int(np.prod(dims)) != rho.shape[0]:
        raise StateError(f"dims {dims} inconsistent with dimension {rho.shape[0]}")
    if not 0 <= keep < len(dims):
        raise StateError(f"keep={keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    t = rho.reshape(dims + dims)
    # move the kept pair of axes to the front, then contract the rest
    order = [keep, n + keep] + [i for i in range(n) if i != keep] + [
        n + i for i in range(n) if i != keep
    ]
    t = t.transpose(order)
    rest = int(np.prod(dims)) // dims[keep]
    t = t.reshape(dims[keep], dims[keep], rest, rest)
    return np.trace(t, axis1=2, axis2=3)


def psd_sqrt(h, atol=ATOL):
    """Square root of a Hermitian positive semidefinite matrix.

    Eigenvalues in ``[-atol, 0)`` are treated as zero; anything more negative
    is an error.
    """
    h = check_hermitian(h, atol)
    w, v = np.linalg.eigh(h)
    if w[0] < -atol:
        raise StateError(f"matrix has negative eigenvalue {w[0]!r}")
    # roundoff-sized eigenvalues would otherwise become ~1e-8 after the root
    w = np.where(w > 64 * np.finfo(float).eps * max(w[-1], 0.0), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho, sigma):
    """Uhlmann fidelity ``[Tr sqrt(sqrt(sigma) rho sqrt(sigma))]^2`` in [0, 1]."""
    rho = check_density(rho)
    sigma = check_density(sigma)
    if rho.shape != sigma.shape:
        raise StateError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    # singular values of sqrt(rho) sqrt(sigma) avoid square-rooting tiny eigenvalues
    sv = np.linalg.svd(psd_sqrt(rho) @ psd_sqrt(sigma), compute_uv=False)
    f = float(np.sum(sv)) ** 2
    return min(max(f, 0.0), 1.0)


def expectation(obs, rho):
    """Real expectation value ``Tr(obs rho)`` of a Hermitian observable."""
    obs = check_hermitian(obs, name="observable")
    rho = _square(rho, "state")
    if obs.shape != rho.shape:
        raise StateError(f"dimension mismatch {obs.shape} vs {rho.shape}")
    val = np.trace(obs @ rho)
    if abs(val.imag) > ATOL:
        raise StateError(f"expectation has imaginary part {val.imag!r}")
    return float(val.real)


def spin1_z():
    """S_z for a spin-1 (qutrit) in the basis |0>, |1>, |2>."""
    return np.diag([1.0, 0.0, -1.0]).astype(complex)


def random_pure_state(dim, rng):
    """Haar-random pure density matrix."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_density(dim, rng, rank=None):
    """Random mixed state ``G G^dagger / Tr`` from a complex Ginibre matrix."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
