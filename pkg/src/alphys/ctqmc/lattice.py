"""Triangular clusters for the transverse-field antiferromagnet."""

from dataclasses import dataclass

import numpy as np

# the three bond directions of the triangular lattice in (x, y) coordinates
_OFFSETS = ((1, 0), (0, 1), (-1, 1))


@dataclass(frozen=True)
class LatticeSpec:
    """Couplings, temperature and geometry of one simulation.

    ``H = J sum_<ij> sz_i sz_j - Gamma sum_i sx_i`` with Pauli matrices and
    ``k_B = 1``. Build instances with :meth:`triangular` or :meth:`triangle`.
    """

    J: float
    Gamma: float
    T: float
    n_sites: int
    bonds: np.ndarray  # (n_bonds, 2) site pairs, each bond once
    sublattice: np.ndarray  # 0, 1 or 2 per site
    L: int | None = None  # linear size of a periodic lattice; None for the triangle

    def __post_init__(self):
        for name in ("J", "Gamma", "T"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive number, got {v}")
        if self.L is not None and (self.L < 3 or self.L % 3):
            raise ValueError(f"L must be a positive multiple of 3, got {self.L}")
        b = np.asarray(self.bonds)
        if b.ndim != 2 or b.shape[1] != 2 or np.any(b < 0) or np.any(b >= self.n_sites):
            raise ValueError("bonds must be (n, 2) pairs of valid sites")
        if np.any(b[:, 0] == b[:, 1]):
            raise ValueError("a bond cannot join a site to itself")
        sub = np.asarray(self.sublattice)
        if np.any(sub[b[:, 0]] == sub[b[:, 1]]):
            raise ValueError("sublattice coloring is not proper on these bonds")

    @property
    def beta(self):
        return 1.0 / self.T

    @classmethod
    def triangular(cls, L, J=1.0, Gamma=1.0, T=1.0):
        """Periodic L x L triangular lattice; site ``x + L*y``."""
        L = int(L)
        if L < 3 or L % 3:
            raise ValueError(f"L must be a positive multiple of 3, got {L}")
        bonds = []
        for y in range(L):
            for x in range(L):
                for dx, dy in _OFFSETS:
                    bonds.append((x + L * y, (x + dx) % L + L * ((y + dy) % L)))
        sub = np.array([(x - y) % 3 for y in range(L) for x in range(L)])
        return cls(J, Gamma, T, L * L, np.array(bonds, dtype=np.int64), sub, L)

    @classmethod
    def triangle(cls, J=1.0, Gamma=1.0, T=1.0):
        """A single open three-site plaquette."""
        bonds = np.array([(0, 1), (1, 2), (0, 2)], dtype=np.int64)
        return cls(J, Gamma, T, 3, bonds, np.array([0, 1, 2]), None)

    def with_params(self, **kw):
        fields = dict(J=self.J, Gamma=self.Gamma, T=self.T)
        fields.update(kw)
        return LatticeSpec(fields["J"], fields["Gamma"], fields["T"], self.n_sites,
                           self.bonds, self.sublattice, self.L)
