"""Spatial layer: point processes, cell association and link distances.

Coordinates are in meters inside a square window centred on the typical
base station, which sits at the origin.  With ``wraparound=True`` (the
default) the window is a torus, so association and distances use the
periodic metric and there are no boundary effects.

Point sets are plain ``(k, 2)`` float arrays.
"""

from dataclasses import dataclass, field
import csv
import warnings

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import beta as beta_fn

from .exceptions import InvalidParameterError

__all__ = [
    "B1",
    "B2",
    "Window",
    "CellAssignment",
    "DistanceProfile",
    "NetworkRealization",
    "sample_homogeneous_ppp",
    "sample_inhomogeneous_ppp",
    "associate_and_select",
    "distance_profile",
    "sample_network",
    "rayleigh_distance_pdf",
    "rayleigh_distance_cdf",
    "ordered_distance_pdf",
    "pair_correlation",
    "k_function",
    "parent_intensity_measure",
    "model_second_moment",
    "sample_interferers_model_a",
    "sample_interferers_model_b",
    "estimate_k_function",
    "estimate_second_moment_measure",
    "default_r_grid",
    "write_points_csv",
    "read_points_csv",
]

#: Correction factor of the Rayleigh link-distance fit.
B1 = 5.0 / 4.0
#: Correction factor of the BS-UE pair correlation fit.
B2 = 12.0 / 5.0


@dataclass(frozen=True)
class Window:
    """Square observation window ``[-L/2, L/2)^2``."""

    side_length: float = 1000.0
    wraparound: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.side_length) and self.side_length > 0):
            raise InvalidParameterError(f"side_length must be positive, got {self.side_length}")

    @property
    def area(self):
        return self.side_length ** 2

    def offsets(self, points, origin=(0.0, 0.0)):
        """Displacement vectors from ``origin`` under the window metric."""
        d = np.asarray(points, dtype=float) - np.asarray(origin, dtype=float)
        if self.wraparound:
            d = d - self.side_length * np.round(d / self.side_length)
        return d

    def distances(self, points, origin=(0.0, 0.0)):
        return np.hypot(*self.offsets(points, origin).reshape(-1, 2).T)


@dataclass
class CellAssignment:
    """Nearest-BS association and per-cell user selection.

    Attributes
    ----------
    nearest : ndarray of int, shape (n_ue,)
        Index of the nearest BS of every UE.
    selected : ndarray of int, shape (n_bs, n_per_cell)
        Selected UE indices per BS, padded with -1 for cells that have
        fewer members than ``n_per_cell``.
    members : ndarray of int, shape (n_bs,)
        Number of UEs in each cell.
    """

    nearest: np.ndarray
    selected: np.ndarray
    members: np.ndarray

    @property
    def n_per_cell(self):
        return self.selected.shape[1]

    @property
    def short_cells(self):
        """Boolean mask of cells with fewer than ``n_per_cell`` members."""
        return self.members < self.n_per_cell

    @property
    def typical_ok(self):
        return not self.short_cells[0]


@dataclass
class DistanceProfile:
    """Link distances seen by the typical BS.

    ``ordered_typical`` holds R_1 <= ... <= R_N of the typical cell's
    scheduled UEs and ``interferer`` the distances D_x of all scheduled UEs
    of other cells.
    """

    ordered_typical: np.ndarray
    interferer: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        self.ordered_typical = np.asarray(self.ordered_typical, dtype=float).ravel()
        self.interferer = np.asarray(self.interferer, dtype=float).ravel()
        if self.ordered_typical.size == 0:
            raise InvalidParameterError("profile needs at least one typical link")
        if np.any(np.diff(self.ordered_typical) < 0):
            raise InvalidParameterError("ordered_typical must be sorted ascending")
        if np.any(self.ordered_typical <= 0) or np.any(self.interferer <= 0):
            raise InvalidParameterError("all distances must be positive")

    @property
    def n_users(self):
        return self.ordered_typical.size


@dataclass
class NetworkRealization:
    """One sampled topology around a typical BS at the origin."""

    bs: np.ndarray
    ue: np.ndarray
    assignment: CellAssignment
    profile: DistanceProfile
    window: Window
    discarded: int = 0

    @property
    def interferer_points(self):
        sel = self.assignment.selected[1:].ravel()
        return self.window.offsets(self.ue[sel[sel >= 0]])


def _check_intensity(intensity):
    if not np.isfinite(intensity):
        raise InvalidParameterError(f"intensity must be finite, got {intensity}")
    if intensity <= 0:
        raise InvalidParameterError(f"intensity must be positive, got {intensity}")


def sample_homogeneous_ppp(intensity, window, rng):
    """Sample a homogeneous PPP of the given intensity (per m^2) in ``window``."""
    _check_intensity(intensity)
    count = rng.poisson(intensity * window.area)
    half = 0.5 * window.side_length
    return rng.uniform(-half, half, size=(count, 2))


def sample_inhomogeneous_ppp(intensity_fn, max_intensity, window, rng):
    """Sample a PPP with radial intensity ``intensity_fn(|x|)`` by thinning.

    ``max_intensity`` must bound ``intensity_fn`` on the window.
    """
    pts = sample_homogeneous_ppp(max_intensity, window, rng)
    keep = rng.random(len(pts)) * max_intensity < intensity_fn(np.hypot(*pts.T))
    return pts[keep]


def _nearest_bs(bs, ue, window):
    if window is not None and window.wraparound:
        L = window.side_length
        shift = lambda p: np.mod(p + 0.5 * L, L) % L
        tree = cKDTree(shift(bs), boxsize=L)
        _, idx = tree.query(shift(ue))
    else:
        _, idx = cKDTree(bs).query(ue)
    return np.asarray(idx, dtype=np.intp)


def associate_and_select(bs, ue, n_per_cell, rng, window=None):
    """Associate UEs with their nearest BS and pick ``n_per_cell`` per cell.

    The selection is uniform without replacement among the members of each
    Voronoi cell.  BS index 0 is the typical BS.  Cells with fewer than
    ``n_per_cell`` members select all of them; check
    :attr:`CellAssignment.typical_ok` before using the typical cell.
    """
    if n_per_cell < 1:
        raise InvalidParameterError(f"n_per_cell must be >= 1, got {n_per_cell}")
    bs = np.asarray(bs, dtype=float)
    ue = np.asarray(ue, dtype=float)
    n_bs = len(bs)
    selected = np.full((n_bs, n_per_cell), -1, dtype=np.intp)
    if len(ue) == 0:
        return CellAssignment(np.empty(0, dtype=np.intp), selected, np.zeros(n_bs, dtype=np.intp))
    nearest = _nearest_bs(bs, ue, window)
    members = np.bincount(nearest, minlength=n_bs)
    order = np.lexsort((rng.random(len(ue)), nearest))
    cells = nearest[order]
    first = np.concatenate([[0], np.cumsum(members)[:-1]])
    rank = np.arange(len(ue)) - first[cells]
    take = rank < n_per_cell
    selected[cells[take], rank[take]] = order[take]
    return CellAssignment(nearest, selected, members)


def distance_profile(assignment, bs, ue, window=None, colocated=False):
    """Extract the typical-cell link distances and inter-cell distances.

    With ``colocated=True`` every interfering cell's scheduled UEs are moved
    onto the position of one of them (the first selected, which is a
    uniform pick), so each interferer distance appears with multiplicity
    equal to the number of scheduled UEs of that cell.
    """
    bs = np.asarray(bs, dtype=float)
    ue = np.asarray(ue, dtype=float)
    origin = bs[0]
    if window is None:
        dist = lambda p, o: np.hypot(*(p - o).T)
    else:
        dist = window.distances
    typ = assignment.selected[0]
    typ = typ[typ >= 0]
    r = np.sort(dist(ue[typ], origin))
    others = assignment.selected[1:]
    if colocated:
        lead = others[:, 0]
        counts = (others >= 0).sum(axis=1)
        valid = lead >= 0
        d = np.repeat(dist(ue[lead[valid]], origin), counts[valid])
    else:
        flat = others.ravel()
        d = dist(ue[flat[flat >= 0]], origin)
    return DistanceProfile(r, d)


def sample_network(lambda_bs, n_per_cell, window, rng, lambda_ue=None, colocated=False,
                   max_attempts=1000):
    """Sample one topology conditioned on a typical BS at the origin.

    BSs are a PPP plus the typical BS at the origin; UEs are an independent
    PPP of intensity ``lambda_ue`` (default ``20 * n_per_cell * lambda_bs``).
    Draws whose typical cell holds fewer than ``n_per_cell`` UEs are
    discarded and redrawn; the number of discarded draws is recorded.
    """
    _check_intensity(lambda_bs)
    if lambda_ue is None:
        lambda_ue = 20.0 * n_per_cell * lambda_bs
    _check_intensity(lambda_ue)
    for attempt in range(max_attempts):
        bs = np.vstack([np.zeros((1, 2)), sample_homogeneous_ppp(lambda_bs, window, rng)])
        ue = sample_homogeneous_ppp(lambda_ue, window, rng)
        assignment = associate_and_select(bs, ue, n_per_cell, rng, window)
        if assignment.typical_ok:
            profile = distance_profile(assignment, bs, ue, window, colocated=colocated)
            return NetworkRealization(bs, ue, assignment, profile, window, discarded=attempt)
    raise InvalidParameterError(
        f"typical cell had fewer than {n_per_cell} UEs in {max_attempts} attempts; "
        "increase lambda_ue"
    )


def rayleigh_distance_cdf(r, lam, b1=B1):
    r = np.asarray(r, dtype=float)
    return -np.expm1(-b1 * lam * np.pi * r * r)


def rayleigh_distance_pdf(r, lam, b1=B1):
    """Density of an unordered BS-UE link distance (Rayleigh fit)."""
    r = np.asarray(r, dtype=float)
    c = b1 * lam * np.pi
    return np.where(r >= 0, 2.0 * c * r * np.exp(-c * r * r), 0.0)


def ordered_distance_pdf(r, n, N, lam, b1=B1):
    """Density of the n-th smallest of N i.i.d. link distances."""
    if not (1 <= n <= N):
        raise InvalidParameterError(f"rank n must satisfy 1 <= n <= N, got n={n}, N={N}")
    r = np.asarray(r, dtype=float)
    c = b1 * lam * np.pi
    z = c * r * r
    dens = 2.0 * c * r * (-np.expm1(-z)) ** (n - 1) * np.exp(-z * (N - n + 1)) / beta_fn(N - n + 1, n)
    return np.where(r >= 0, dens, 0.0)


def pair_correlation(r, lam, b2=B2):
    """BS-UE pair correlation ``1 - exp(-b2*lam*pi*r^2)``."""
    r = np.asarray(r, dtype=float)
    return -np.expm1(-b2 * lam * np.pi * r * r)


def k_function(r, lam, b2=B2):
    """Ripley K of the interferer field, the integral of ``2*pi*r*g(r)``."""
    r = np.asarray(r, dtype=float)
    return np.pi * r * r + np.expm1(-b2 * lam * np.pi * r * r) / (b2 * lam)


def parent_intensity_measure(r, lam, b2=B2):
    """Expected number of Model-A parents in the disk of radius ``r``."""
    return lam * k_function(r, lam, b2)


def model_second_moment(r, lam, N, model="A", b2=B2):
    """Second moment of the interferer count in ``b(o, r)`` for Model A or B."""
    lp = parent_intensity_measure(r, lam, b2)
    if model == "A":
        return N * N * (lp * lp + lp)
    if model == "B":
        return N * N * lp * lp + N * lp
    raise InvalidParameterError(f"model must be 'A' or 'B', got {model!r}")


def sample_interferers_model_a(lam, N, window, rng, b2=B2):
    """Zero-radius Poisson cluster process: each parent carries N co-located UEs."""
    if N < 1:
        raise InvalidParameterError(f"N must be >= 1, got {N}")
    parents = sample_inhomogeneous_ppp(lambda d: lam * pair_correlation(d, lam, b2), lam, window, rng)
    return np.repeat(parents, N, axis=0)


def sample_interferers_model_b(lam, N, window, rng, b2=B2):
    """Inhomogeneous PPP with intensity ``N * lam * g(r)``."""
    if N < 1:
        raise InvalidParameterError(f"N must be >= 1, got {N}")
    return sample_inhomogeneous_ppp(
        lambda d: N * lam * pair_correlation(d, lam, b2), N * lam, window, rng
    )


def _radial_counts(realizations, r_grid):
    if len(realizations) == 0:
        raise InvalidParameterError("need at least one realization")
    if len(realizations) < 100:
        warnings.warn(f"only {len(realizations)} realizations; estimates will be noisy",
                      stacklevel=3)
    r_grid = np.asarray(r_grid, dtype=float)
    counts = np.empty((len(realizations), r_grid.size))
    for k, item in enumerate(realizations):
        if isinstance(item, tuple):
            origin, pts = item
            pts = np.asarray(pts, dtype=float).reshape(-1, 2) - np.asarray(origin, dtype=float)
        else:
            pts = np.asarray(item, dtype=float).reshape(-1, 2)
        d = np.sort(np.hypot(*pts.T))
        counts[k] = np.searchsorted(d, r_grid, side="right")
    return counts


def estimate_k_function(realizations, N, lam, r_grid):
    """Estimate K(r) of the interferer field from realizations around the typical BS.

    Each realization is an array of interferer positions relative to the
    typical BS (or an ``(origin, points)`` tuple).  The estimate is the mean
    number of interferers within ``r`` divided by ``N * lam``.  Positions
    must come from a torus window with half-side above ``max(r_grid)`` for
    the count to be free of border bias.
    """
    counts = _radial_counts(realizations, r_grid)
    return counts.mean(axis=0) / (N * lam)


def estimate_second_moment_measure(realizations, r_grid):
    """Empirical ``E[N(b(o, r))^2]`` over realizations."""
    counts = _radial_counts(realizations, r_grid)
    return (counts * counts).mean(axis=0)


def default_r_grid(lam, num=50):
    """Log-spaced radii in ``[0.01, 3] / sqrt(lam*pi)``."""
    return np.geomspace(0.01, 3.0, num) / np.sqrt(lam * np.pi)


def write_points_csv(path, points):
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y"])
        for x, y in points:
            w.writerow([repr(float(x)), repr(float(y))])


def read_points_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([[float(r["x"]), float(r["y"])] for r in rows]).reshape(-1, 2)


def interferer_counts_all_cells(net, r_grid):
    """Other-cell scheduled UEs within each radius, counted around every fully served BS.

    On a torus every BS sees the same law as the typical one, so pooling
    all BSs of a topology sharpens K-function estimates.  Returns an array
    of shape ``(n_cells, len(r_grid))``.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    sel = net.assignment.selected
    full = np.flatnonzero(np.all(sel >= 0, axis=1))
    flat = sel.ravel()
    owner = np.repeat(np.arange(sel.shape[0]), sel.shape[1])[flat >= 0]
    ue = net.ue[flat[flat >= 0]]
    counts = np.empty((full.size, r_grid.size))
    for k, b in enumerate(full):
        d = np.sort(net.window.distances(ue[owner != b], net.bs[b]))
        counts[k] = np.searchsorted(d, r_grid, side="right")
    return counts
