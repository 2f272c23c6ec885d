"""Worldline configurations and the cluster sweep."""

import math
from dataclasses import dataclass

import numpy as np

from .. import _backend


@dataclass
class WorldlineConfiguration:
    """Spin histories on the imaginary-time circle ``[0, beta)``.

    Kink times of site ``i`` are ``times[offsets[i]:offsets[i+1]]``, sorted.
    ``s0[i]`` is the spin just after ``tau = 0``; the spin flips at every kink.
    """

    times: np.ndarray
    offsets: np.ndarray
    s0: np.ndarray
    beta: float

    @classmethod
    def classical(cls, spins, beta):
        spins = np.asarray(spins, dtype=np.int8)
        return cls(np.zeros(0), np.zeros(len(spins) + 1, dtype=np.int64), spins.copy(), float(beta))

    @classmethod
    def random(cls, n_sites, beta, rng):
        return cls.classical(rng.choice(np.array([-1, 1], dtype=np.int8), size=n_sites), beta)

    @property
    def n_sites(self):
        return len(self.s0)

    @property
    def n_kinks(self):
        return int(self.offsets[-1])

    def kinks(self, i):
        return self.times[self.offsets[i]:self.offsets[i + 1]]

    def segments(self, i):
        """``(start, end, spin)`` triples of site `i`; the wrapping segment is split in two."""
        t = self.kinks(i)
        s = int(self.s0[i])
        edges = np.concatenate([[0.0], t, [self.beta]])
        out = []
        for a, b in zip(edges[:-1], edges[1:]):
            out.append((float(a), float(b), s))
            s = -s
        return out

    def check(self):
        """Raise AssertionError unless the structural invariants hold."""
        assert self.offsets[0] == 0 and np.all(np.diff(self.offsets) >= 0)
        assert self.offsets[-1] == len(self.times)
        assert np.all(np.isin(self.s0, (-1, 1)))
        for i in range(self.n_sites):
            t = self.kinks(i)
            assert len(t) % 2 == 0, f"site {i} has an odd number of cuts"
            assert np.all(t >= 0.0) and np.all(t < self.beta)
            assert np.all(np.diff(t) > 0), f"site {i} cuts are not strictly increasing"
            segs = self.segments(i)
            assert math.isclose(sum(b - a for a, b, _ in segs), self.beta, rel_tol=1e-12)
            assert all(x[2] == -y[2] for x, y in zip(segs[:-1], segs[1:]))
        return True

    def copy(self):
        return WorldlineConfiguration(self.times.copy(), self.offsets.copy(), self.s0.copy(), self.beta)


def space_action(config, spec, kernels=None):
    """``J sum_<ij> int s_i s_j dtau`` over the configuration."""
    k = _backend.kernels if kernels is None else kernels
    return spec.J * config.beta * float(np.sum(
        k.bond_integrals(config.times, config.offsets, config.s0, spec.bonds, config.beta)))


@dataclass
class SweepInfo:
    inserted: np.ndarray  # new cuts per site
    n_clusters: int
    accepted: bool = True


def sw_sweep(config, spec, rng, metropolis=False, kernels=None):
    """One continuous-time Swendsen-Wang sweep; returns ``(new_config, SweepInfo)``.

    New cuts arrive on every site as a Poisson process of rate Gamma.
    Overlapping segments of neighbouring sites that satisfy the
    antiferromagnetic bond are joined with probability ``1 - exp(-2 J t)``,
    each cluster takes a random sign, and cuts with equal spin on both sides
    disappear. With ``metropolis=True`` the proposal is additionally accepted
    with ``min(1, exp(-dS))``, ``dS`` the change of the space-bond action.

    Randomness is drawn in a fixed order (cut counts, cut times, bond
    uniforms, flip uniforms, acceptance uniform) so every kernel backend
    yields the same chain.
    """
    k = _backend.kernels if kernels is None else kernels
    beta = config.beta
    n = config.n_sites
    inserted = rng.poisson(spec.Gamma * beta, size=n)
    new_times = rng.random(int(inserted.sum())) * beta

    old_counts = np.diff(config.offsets)
    counts = old_counts + inserted
    cut_off = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=cut_off[1:])
    cut_times = np.empty(int(cut_off[-1]))
    cut_kink = np.empty(int(cut_off[-1]), dtype=np.int8)
    pos = 0
    for i in range(n):
        t = np.concatenate([config.kinks(i), new_times[pos:pos + inserted[i]]])
        flag = np.concatenate([np.ones(old_counts[i], np.int8), np.zeros(inserted[i], np.int8)])
        order = np.argsort(t, kind="stable")
        cut_times[cut_off[i]:cut_off[i + 1]] = t[order]
        cut_kink[cut_off[i]:cut_off[i + 1]] = flag[order]
        pos += inserted[i]

    pieces = np.where(counts > 0, counts + 1, 1)
    bonds = spec.bonds
    u_bond = rng.random(int(np.sum(pieces[bonds[:, 0]] + pieces[bonds[:, 1]])))
    u_flip = rng.random(int(np.sum(np.maximum(counts, 1))))
    times, offsets, s0, n_clusters = k.sw_cluster_update(
        cut_times, cut_kink, cut_off, config.s0, bonds, spec.J, beta, u_bond, u_flip)
    proposal = WorldlineConfiguration(np.asarray(times, float), np.asarray(offsets, np.int64),
                                      np.asarray(s0, np.int8), beta)
    accepted = True
    if metropolis:
        d_action = space_action(proposal, spec, k) - space_action(config, spec, k)
        u = rng.random()
        accepted = d_action <= 0 or u < math.exp(-d_action)
        if not accepted:
            proposal = config
    return proposal, SweepInfo(inserted, int(n_clusters), accepted)
