"""Per-configuration measurements, accumulation and jackknife estimates."""

import math
from dataclasses import dataclass, field

import numpy as np

from .. import _backend

N_BINS = 20
_PHASE = np.exp(1j * 4.0 * np.pi / 3.0)


@dataclass(frozen=True)
class Measurement:
    m: np.ndarray  # time-averaged spin per site
    psi: complex  # XY order parameter
    energy: float  # total energy estimator
    nn_zz: float  # mean <sz sz> over bonds
    n_kinks: int


def order_parameter(m, sublattice):
    """``[m1 + m2 e^{i4pi/3} + m3 e^{-i4pi/3}] / sqrt(3)`` from sublattice means."""
    m = np.asarray(m, dtype=float)
    # an empty sublattice (clusters smaller than a triangle) contributes zero
    ms = [float(np.mean(m[sublattice == a])) if np.any(sublattice == a) else 0.0 for a in range(3)]
    return (ms[0] + ms[1] * _PHASE + ms[2] * np.conj(_PHASE)) / math.sqrt(3.0)


def measure(config, spec, kernels=None):
    k = _backend.kernels if kernels is None else kernels
    m = np.asarray(k.site_integrals(config.times, config.offsets, config.s0, config.beta))
    zz = np.asarray(k.bond_integrals(config.times, config.offsets, config.s0, spec.bonds, config.beta))
    energy = spec.J * float(np.sum(zz)) - config.n_kinks / config.beta
    return Measurement(m, complex(order_parameter(m, spec.sublattice)), energy,
                       float(np.mean(zz)) if zz.size else math.nan, config.n_kinks)


@dataclass
class ObservableAccumulators:
    """Time series of every accumulated quantity, in measurement order.

    Keeping the series (rather than bare sums) allows binning and
    autocorrelation estimates; sums are available through :meth:`sums`.
    Merging concatenates, so it is associative and order-fixed.
    """

    n_sites: int
    beta: float
    m: list = field(default_factory=list)
    psi: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    nn_zz: list = field(default_factory=list)

    @property
    def count(self):
        return len(self.energy)

    def add(self, meas):
        self.m.append(np.asarray(meas.m, dtype=float))
        self.psi.append(complex(meas.psi))
        self.energy.append(float(meas.energy))
        self.nn_zz.append(float(meas.nn_zz))

    def merge(self, other):
        if other.n_sites != self.n_sites or other.beta != self.beta:
            raise ValueError("cannot merge accumulators of different simulations")
        return ObservableAccumulators(self.n_sites, self.beta, self.m + other.m,
                                      self.psi + other.psi, self.energy + other.energy,
                                      self.nn_zz + other.nn_zz)

    def series(self):
        """Columns of primary quantities whose means feed every estimator."""
        m = np.array(self.m).reshape(self.count, self.n_sites)
        psi = np.array(self.psi, dtype=complex)
        r2 = np.abs(psi) ** 2
        return {
            "m": m,
            "m2": m ** 2,
            "psi2": r2,
            "psi4": r2 ** 2,
            "psi6": r2 ** 3,
            "psi6cos6": np.real(psi ** 6),
            "energy": np.array(self.energy),
            "nn_zz": np.array(self.nn_zz),
        }

    def sums(self):
        return {k: v.sum(axis=0) for k, v in self.series().items()}


def _estimators(means, beta, n_sites):
    psi2, psi4, psi6 = means["psi2"], means["psi4"], means["psi6"]
    out = {
        "energy": means["energy"],
        "energy_per_site": means["energy"] / n_sites,
        "nn_zz": means["nn_zz"],
        "psi2": psi2,
        "binder": 1.0 - psi4 / (3.0 * psi2 ** 2) if psi2 > 0 else math.nan,
        "c6": means["psi6cos6"] / psi6 if psi6 > 0 else math.nan,
    }
    for i in range(n_sites):
        out[f"m_{i}"] = means["m"][i]
        out[f"chi_{i}"] = beta * means["m2"][i]
    return out


def integrated_autocorrelation(x, window=5.0):
    """Integrated autocorrelation time with a self-consistent window."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 4:
        return 0.5
    d = x - x.mean()
    var = float(np.dot(d, d)) / n
    if var == 0.0:
        return 0.5
    f = np.fft.rfft(d, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n] / (n * var)
    tau = 0.5
    for t in range(1, n):
        tau += acf[t]
        if t >= window * tau:
            break
    return max(float(tau), 0.5)


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float


def finalize(acc, n_bins=N_BINS):
    """Jackknife means and standard errors of every estimator.

    ``c6`` is NaN, the undefined marker, when ``<psi0^6>`` vanishes.
    Returns ``(estimates, info)`` with ``info`` carrying the autocorrelation
    time of the energy and the bin count.
    """
    if acc.count < 2:
        raise ValueError("at least two samples are needed to finalize")
    series = acc.series()
    nb = min(n_bins, acc.count)
    edges = np.linspace(0, acc.count, nb + 1).astype(int)
    bin_sums = {k: np.array([v[a:b].sum(axis=0) for a, b in zip(edges[:-1], edges[1:])])
                for k, v in series.items()}
    sizes = np.diff(edges)
    total = {k: v.sum(axis=0) for k, v in bin_sums.items()}
    full = _estimators({k: v / acc.count for k, v in total.items()}, acc.beta, acc.n_sites)
    jack = []
    for j in range(nb):
        n_j = acc.count - sizes[j]
        jack.append(_estimators({k: (total[k] - bin_sums[k][j]) / n_j for k in total},
                                acc.beta, acc.n_sites))
    est = {}
    for key, value in full.items():
        vals = np.array([row[key] for row in jack])
        if math.isnan(value) or np.any(np.isnan(vals)):
            err = math.nan
        else:
            err = math.sqrt((nb - 1) / nb * float(np.sum((vals - vals.mean()) ** 2)))
        est[key] = Estimate(float(value), err)
    info = {"samples": acc.count, "bins": nb,
            "tau_int_energy": integrated_autocorrelation(series["energy"]),
            "c6_defined": not math.isnan(full["c6"])}
    return est, info
