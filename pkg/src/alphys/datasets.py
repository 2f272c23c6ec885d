"""Qutrit lattices, the TIAF phase grid and its noisy labeling oracle."""

import csv
from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache

import numpy as np

SIDE = 21
CASE1_ANGLES = (0.32, 2 * np.pi / 3 + 0.32, 4 * np.pi / 3 + 0.32)


class Phase(IntEnum):
    PARAMAGNETIC = 0
    KT = 1
    ORDERED = 2


PARA_VS_REST = "para"
ORDERED_VS_REST = "ordered"


@dataclass(frozen=True)
class QutritGrid:
    """Row-major lattice of qutrit samples.

    ``x`` holds the (x1, x2) coordinates, ``amplitudes`` the nonnegative
    (c1, c2, c3) and ``labels`` the 0-based true class.
    """

    x: np.ndarray
    amplitudes: np.ndarray
    labels: np.ndarray
    case: str
    side: int = SIDE

    def __len__(self):
        return len(self.labels)

    def density(self, index):
        c = self.amplitudes[index].astype(complex)
        return np.outer(c, c.conj())


@dataclass(frozen=True)
class BoundaryModel:
    b: float = 0.98
    nu: float = 2.0 / 3.0
    gamma_c_over_j: float = 1.65


DEFAULT_BOUNDARY = BoundaryModel()


def _argmax_lowest(values):
    # np.argmax already returns the first maximal index
    return np.argmax(values, axis=-1)


def case1_amplitudes(x1, x2):
    """Amplitudes of the rotationally symmetric lattice at points (x1, x2).

    For each of the three rotated frames, ``phi = arctan(x2'/x1')`` with the
    half-plane rule ``(1 + sin phi)/2`` for ``x1' >= 0`` and ``(1 - sin phi)/2``
    otherwise. At the origin every unnormalized weight is 1/2.
    """
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    r = np.hypot(x1, x2)
    weights = []
    for angle in CASE1_ANGLES:
        c, s = np.cos(angle), np.sin(angle)
        xr1 = c * x1 - s * x2
        xr2 = s * x1 + c * x2
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.arctan(xr2 / xr1)
        # x1' == 0 off the origin: arctan saturates to +-pi/2
        phi = np.where(xr1 == 0.0, np.sign(xr2) * np.pi / 2, phi)
        sin_phi = np.sin(phi)
        w = np.where(xr1 >= 0.0, 0.5 * (1.0 + sin_phi), 0.5 * (1.0 - sin_phi))
        weights.append(np.where(r == 0.0, 0.5, w))
    w = np.stack(weights, axis=-1)
    return np.sqrt(w / w.sum(axis=-1, keepdims=True))


def case2_amplitudes(x1, x2):
    s = np.asarray(x1, dtype=float) + np.asarray(x2, dtype=float)
    c1 = np.sin(s) ** 2
    c3 = np.cos(s) ** 2
    c2 = np.sqrt(np.abs(1.0 - c1**2 - c3**2))
    return np.stack([c1, c2, c3], axis=-1)


def _lattice(lo, hi, side):
    axis = np.linspace(lo, hi, side)
    # row-major: x1 varies fastest within a row of constant x2
    x2, x1 = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([x1.ravel(), x2.ravel()])


def _grid(x, amps, case):
    amps = np.atleast_2d(amps)
    labels = _argmax_lowest(amps**2)
    for arr in (x, amps, labels):
        arr.setflags(write=False)
    return QutritGrid(x=x, amplitudes=amps, labels=labels, case=case)


def gen_case1(side=SIDE):
    x = _lattice(-1.0, 1.0, side)
    return _grid(x, case1_amplitudes(x[:, 0], x[:, 1]), "case1")


def gen_case2(side=SIDE):
    x = _lattice(0.0, np.pi / 4, side)
    return _grid(x, case2_amplitudes(x[:, 0], x[:, 1]), "case2")


def gen_case(case, side=SIDE):
    if case in ("case1", "CaseI", 1, "1"):
        return gen_case1(side)
    if case in ("case2", "CaseII", 2, "2"):
        return gen_case2(side)
    raise ValueError(f"unknown qutrit case {case!r}")


# --- phase diagram -------------------------------------------------------


def boundary_temperatures(gamma_ratio, model=DEFAULT_BOUNDARY):
    """Return ``(T1/J, T2/J)`` at transverse field ratio ``Gamma/Gamma_c``.

    ``T2/J = b g ln(1/g)**nu`` for ``0 < g < 1`` and ``T1 = 4/9 T2``; both
    vanish at ``g = 0`` and ``g >= 1``. Works elementwise on arrays.
    """
    g = np.asarray(gamma_ratio, dtype=float)
    if np.any(g < 0) or np.any(np.isnan(g)):
        raise ValueError("gamma_ratio must be nonnegative")
    inside = (g > 0) & (g < 1)
    gs = np.where(inside, g, 0.5)
    t2 = np.where(inside, model.b * gs * np.log(1.0 / gs) ** model.nu, 0.0)
    t1 = 4.0 / 9.0 * t2
    if t2.ndim == 0:
        return float(t1), float(t2)
    return t1, t2


def true_phase(gamma_ratio, t_ratio, model=DEFAULT_BOUNDARY):
    """Analytic phase label(s) as ``Phase`` integers."""
    g = np.asarray(gamma_ratio, dtype=float)
    t = np.asarray(t_ratio, dtype=float)
    t1, t2 = boundary_temperatures(g, model)
    phase = np.where(
        (t > t2) | (g >= 1.0),
        int(Phase.PARAMAGNETIC),
        np.where(t < t1, int(Phase.ORDERED), int(Phase.KT)),
    )
    if phase.ndim == 0:
        return Phase(int(phase))
    return phase


def ovr_truth(phase, which):
    """Binary one-vs-rest labels in {-1, +1} (+1 for the named phase)."""
    phase = np.asarray(phase)
    target = Phase.PARAMAGNETIC if which == PARA_VS_REST else Phase.ORDERED
    return np.where(phase == int(target), 1, -1)


@dataclass(frozen=True)
class PhaseGrid:
    """Evaluation grid over ``Gamma/Gamma_c`` in [0, 1.1] and ``T/J`` in [0, 0.6]."""

    x: np.ndarray  # columns gamma_ratio, t_ratio
    phase: np.ndarray
    n_gamma: int
    n_t: int
    model: BoundaryModel = DEFAULT_BOUNDARY

    def __len__(self):
        return len(self.phase)

    def distances(self, which):
        """Distance of every grid point to a boundary, computed once per grid."""
        cache = self.__dict__.setdefault("_distances", {})
        if which not in cache:
            d = distance_to_boundary(self.x, which, self.model)
            d.setflags(write=False)
            cache[which] = d
        return cache[which]

    def ordered_domain(self, t_max=0.3):
        """Boolean mask of the OrderedVsRest training domain ``T/J <= t_max``."""
        return self.x[:, 1] <= t_max + 1e-9


def gen_phase_grid(step=0.01, g_max=1.1, t_max=0.6, model=DEFAULT_BOUNDARY):
    n_g = int(round(g_max / step)) + 1
    n_t = int(round(t_max / step)) + 1
    g = np.round(np.arange(n_g) * step, 10)
    t = np.round(np.arange(n_t) * step, 10)
    tt, gg = np.meshgrid(t, g, indexing="ij")
    x = np.column_stack([gg.ravel(), tt.ravel()])
    phase = true_phase(x[:, 0], x[:, 1], model)
    x.setflags(write=False)
    phase.setflags(write=False)
    return PhaseGrid(x=x, phase=phase, n_gamma=n_g, n_t=n_t, model=model)


@lru_cache(maxsize=8)
def boundary_polyline(which, model=DEFAULT_BOUNDARY, step=1e-3, g_max=1.1):
    """Dense samples of a boundary curve including its ``T = 0`` tail."""
    g = np.arange(1, int(round(1.0 / step)) + 1) * step
    t1, t2 = boundary_temperatures(g, model)
    t = t2 if which == PARA_VS_REST else t1
    tail = np.arange(1, int(round((g_max - 1.0) / step)) + 1) * step + 1.0
    pts = np.concatenate(
        [np.column_stack([g, t]), np.column_stack([tail, np.zeros_like(tail)])]
    )
    pts.setflags(write=False)
    return pts


def distance_to_boundary(points, which, model=DEFAULT_BOUNDARY):
    """Euclidean distance from (gamma_ratio, t_ratio) points to a boundary.

    The curve is sampled at gamma steps of 1e-3 and treated as a polyline.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    poly = boundary_polyline(which, model)
    a = poly[:-1]
    d = poly[1:] - a
    dd = np.einsum("ij,ij->i", d, d)
    out = np.empty(len(pts))
    # chunk to bound memory on the full grid
    for s in range(0, len(pts), 512):
        p = pts[s : s + 512, None, :]
        u = np.clip(np.einsum("nij,ij->ni", p - a, d) / dd, 0.0, 1.0)
        foot = a + u[..., None] * d
        out[s : s + 512] = np.sqrt(np.min(np.sum((p - foot) ** 2, axis=-1), axis=1))
    return out if np.ndim(points) > 1 else float(out[0])


def flip_probability(distance, k):
    if k < 0:
        raise ValueError("k must be nonnegative")
    return 0.5 * np.exp(-k * np.asarray(distance, dtype=float))


def noisy_ovr_label(point, which, k, rng, model=DEFAULT_BOUNDARY, distance=None):
    """One-vs-rest oracle label in {-1, +1}, flipped with probability ``exp(-k d)/2``."""
    g, t = float(point[0]), float(point[1])
    truth = int(ovr_truth(true_phase(g, t, model), which))
    if distance is None:
        distance = distance_to_boundary((g, t), which, model)
    flip = rng.random() < float(flip_probability(distance, k))
    return -truth if flip else truth


# --- CSV -----------------------------------------------------------------

QUTRIT_COLUMNS = ("x1", "x2", "c1", "c2", "c3", "class")
PHASE_COLUMNS = ("gamma_ratio", "t_ratio", "phase")


def save_qutrit_csv(grid, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(QUTRIT_COLUMNS)
        for (x1, x2), c, lab in zip(grid.x, grid.amplitudes, grid.labels):
            w.writerow([f"{v:.17g}" for v in (x1, x2, *c)] + [int(lab) + 1])


def load_qutrit_csv(path, case="loaded"):
    rows = _read_csv(path, QUTRIT_COLUMNS)
    data = np.array([[float(v) for v in r[:5]] for r in rows])
    labels = np.array([int(r[5]) - 1 for r in rows])
    for arr in (data, labels):
        arr.setflags(write=False)
    side = int(round(np.sqrt(len(rows))))
    return QutritGrid(x=data[:, :2], amplitudes=data[:, 2:], labels=labels,
                      case=case, side=side)


def save_phase_csv(grid, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PHASE_COLUMNS)
        for (g, t), ph in zip(grid.x, grid.phase):
            w.writerow([f"{g:.17g}", f"{t:.17g}", Phase(int(ph)).name])


def load_phase_csv(path):
    rows = _read_csv(path, PHASE_COLUMNS)
    x = np.array([[float(r[0]), float(r[1])] for r in rows])
    phase = np.array([int(Phase[r[2]]) for r in rows])
    n_g = len(np.unique(x[:, 0]))
    return PhaseGrid(x=x, phase=phase, n_gamma=n_g, n_t=len(rows) // n_g)


def _read_csv(path, columns):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != columns:
            raise ValueError(f"{path}: expected header {','.join(columns)}, got {header}")
        return [r for r in reader if r]
