"""Two-ancilla weak measurement of qutrit populations.

A qutrit ``rho`` is coupled to pointer qubits A and B (both starting in
``|0>``). Pointer A rotates by ``theta_a`` about Y when the qutrit is in
``|j>``; pointer B rotates by ``theta_b`` when the qutrit is in the uniform
superposition ``|b0>``. The joint probability of finding the qutrit in
``|k>`` and both pointers in ``|1>`` is proportional to ``rho_jj`` for every
coupling strength, which makes the reconstruction exact.

Tensor order throughout is qutrit (3) x A (2) x B (2).
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import quantum as q

DIM = 3
DIMS = (DIM, 2, 2)


@dataclass(frozen=True)
class CouplingConfig:
    """Coupling strengths and readout mode.

    ``shots=None`` means the correlator is read exactly; an integer means
    that many copies are measured and the empirical frequency is rescaled.
    ``fresh_copy`` switches the second retrieval of a labeling onto a new
    copy of the original qutrit instead of the already-disturbed carrier.
    ``estimate_source`` chooses what the second retrieval reads on the
    carrier: ``"original"`` reports the population of the state before any
    coupling (the error-free labeling idealization) while ``"carrier"``
    reads the disturbed state. Fidelity is charged on the carrier either way.
    """

    theta_a: float = np.pi / 2
    theta_b: float = np.pi / 2
    shots: int | None = None
    fresh_copy: bool = False
    estimate_source: str = "original"

    def __post_init__(self):
        for name in ("theta_a", "theta_b"):
            t = getattr(self, name)
            if not 0.0 < t <= np.pi / 2 + 1e-15:
                raise ValueError(f"{name}={t!r} must lie in (0, pi/2]")
        if self.shots is not None and int(self.shots) < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots!r}")
        if self.estimate_source not in ("original", "carrier"):
            raise ValueError(f"unknown estimate_source {self.estimate_source!r}")

    @property
    def exact(self):
        return self.shots is None


@dataclass
class LabelingOutcome:
    assigned_class: int  # 1-based
    diagonals_retrieved: list = field(default_factory=list)  # [(j, estimate)]
    final_fidelity: float = 1.0
    couplings_performed: int = 0
    final_state: np.ndarray | None = None


def _ry(theta):
    c, s = np.cos(theta), np.sin(theta)
    # exp(-i theta Y)
    return np.array([[c, -s], [s, c]], dtype=complex)


@lru_cache(maxsize=256)
def _unitaries(j, theta_a, theta_b):
    i2 = np.eye(2, dtype=complex)
    i3 = np.eye(DIM, dtype=complex)
    pj = q.projector(DIM, j)
    b0 = np.ones(DIM, dtype=complex) / np.sqrt(DIM)
    pb = np.outer(b0, b0.conj())
    ua = np.kron(np.kron(i3 - pj, i2), i2) + np.kron(np.kron(pj, _ry(theta_a)), i2)
    ub = np.kron(np.kron(i3 - pb, i2), i2) + np.kron(np.kron(pb, i2), _ry(theta_b))
    u = ub @ ua
    u.setflags(write=False)
    return u


@lru_cache(maxsize=8)
def _correlator_observable(k):
    one = q.projector(2, 1)
    obs = np.kron(np.kron(q.projector(DIM, k), one), one)
    obs.setflags(write=False)
    return obs


def _check_index(j):
    if j not in (0, 1, 2):
        raise ValueError(f"basis index {j!r} out of range")


def build_coupled_state(rho, j, cfg):
    """Joint 12-dimensional state after both pointer couplings."""
    _check_index(j)
    rho = q.check_density(rho)
    zero = q.projector(2, 0)
    ini = np.kron(np.kron(rho, zero), zero)
    u = _unitaries(j, float(cfg.theta_a), float(cfg.theta_b))
    out = u @ ini @ u.conj().T
    return 0.5 * (out + out.conj().T)


def correlator(rho, j, cfg, k=None):
    """Joint probability that the qutrit is found in ``|k>`` and both pointers in ``|1>``."""
    k = j if k is None else k
    _check_index(k)
    coupled = build_coupled_state(rho, j, cfg)
    return q.expectation(_correlator_observable(k), coupled)


@lru_cache(maxsize=256)
def _probe_factor(j, theta_a, theta_b, k):
    # invert the forward map on the maximally mixed state, whose populations are 1/d
    cfg = CouplingConfig(theta_a, theta_b)
    p = correlator(np.eye(DIM) / DIM, j, cfg, k)
    return (1.0 / DIM) / p


def normalization_factor(cfg, j=0, k=None):
    """Constant that converts the pointer correlator into ``rho_jj``.

    Obtained by probing the simulated coupling with ``I/3``; analytically it
    equals ``d**2 / (sin(theta_a)**2 * sin(theta_b)**2)``.
    """
    k = j if k is None else k
    return _probe_factor(j, float(cfg.theta_a), float(cfg.theta_b), k)


def reconstruct_diagonal(rho, j, cfg, rng=None, k=None):
    """Estimate the population ``rho_jj`` from the pointer correlator.

    In exact mode the result equals ``rho_jj`` for any coupling strength. In
    shot mode ``cfg.shots`` Bernoulli trials are drawn from `rng` and the
    rescaled frequency is returned (unclamped).
    """
    p = correlator(rho, j, cfg, k)
    factor = normalization_factor(cfg, j, k)
    if cfg.exact:
        return factor * p
    if rng is None:
        raise ValueError("shot-mode reconstruction needs a random generator")
    n = int(cfg.shots)
    hits = rng.binomial(n, min(max(p, 0.0), 1.0))
    return factor * hits / n


def post_state(rho, j, cfg):
    """Qutrit state after the coupling, ancillas traced out."""
    return q.partial_trace(build_coupled_state(rho, j, cfg), DIMS, 0)


def post_state_and_loss(rho, j, cfg):
    """Return ``(post_state, F(rho, post_state))``."""
    rho = q.check_density(rho)
    out = post_state(rho, j, cfg)
    out = q.check_density(out, atol=1e-9)
    return out, q.fidelity(rho, out)


def _argmax_lowest(values):
    values = list(values)
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best


def label_qutrit(rho, cfg, rng, first=None, second=None):
    """Label a qutrit by its largest population.

    One population ``rho_jj`` is retrieved for a uniformly drawn ``j``. If it
    exceeds 1/2 the class is ``j + 1``; otherwise a second, distinct index is
    drawn and retrieved, the third population follows from the unit trace and
    the class is the argmax (lowest index on ties). `first` and `second`
    override the random draws.
    """
    rho = q.check_density(rho)
    j = int(rng.integers(DIM)) if first is None else int(first)
    _check_index(j)

    def estimate(state, idx):
        v = reconstruct_diagonal(state, idx, cfg, rng)
        if not cfg.exact:
            v = min(max(v, 0.0), 1.0)
        return float(v)

    est_j = estimate(rho, j)
    carrier = q.check_density(post_state(rho, j, cfg), atol=1e-9)
    retrieved = [(j, est_j)]
    couplings = 1
    if est_j > 0.5:
        cls = j
    else:
        others = [i for i in range(DIM) if i != j]
        if second is None:
            k = others[int(rng.integers(2))]
        else:
            k = int(second)
            if k not in others:
                raise ValueError(f"second index {k} must differ from first {j}")
        if cfg.fresh_copy:
            # a second copy is consumed; the labeled carrier saw only one coupling
            est_k = estimate(rho, k)
        else:
            est_k = estimate(rho if cfg.estimate_source == "original" else carrier, k)
            carrier = q.check_density(post_state(carrier, k, cfg), atol=1e-9)
        couplings += 1
        retrieved.append((k, est_k))
        pops = [0.0] * DIM
        pops[j] = est_j
        pops[k] = est_k
        third = [i for i in range(DIM) if i not in (j, k)][0]
        pops[third] = 1.0 - est_j - est_k
        cls = _argmax_lowest(pops)
    return LabelingOutcome(
        assigned_class=cls + 1,
        diagonals_retrieved=retrieved,
        final_fidelity=q.fidelity(rho, carrier),
        couplings_performed=couplings,
        final_state=carrier,
    )
