"""Monte Carlo evaluation of the rate statistics.

Each topology is an independent work item: sample the network, average the
threshold-crossing indicators over fading, and keep the per-topology
success table.  Rate statistics for any MCS ladder whose thresholds are in
the table then follow without resimulation, which is how one run serves
several presets.

Randomness is derived from ``SeedSequence(master_seed, spawn_key=...)``
with one key per (topology, stream), so results do not depend on how
topologies are distributed over worker processes.  With common random
numbers (the default) the key does not include the sweep point, so every
sweep point sees the same topologies and fading draws.
"""

from dataclasses import dataclass, field, replace
import json
import math
import multiprocessing
import time
import warnings

import numpy as np

from .exceptions import InvalidParameterError
from .mcs import ACCESS_SCHEMES, McsScheme, PRESETS, crr_from_success, fading_averages
from .sinr import SystemConfig
from .spatial import Window, sample_network

__all__ = [
    "SWEEP_PARAMETERS",
    "ExperimentSpec",
    "SuccessTables",
    "RateStatistics",
    "simulate_success_tables",
    "statistics_from_tables",
    "run_experiment",
    "empirical_meta",
    "interval_probability",
    "co_location_toggle",
    "default_xi_grid",
    "format_float",
    "statistics_csv",
    "ccdf_csv",
    "write_statistics_csv",
    "write_ccdf_csv",
    "write_metadata_json",
]

SWEEP_PARAMETERS = ("beta", "q", "sigma2_norm", "lambda_bs", "eta", "thresholds")
DISCARD_WARNING_RATE = 0.05
# topology and fading streams of one work item
_TOPOLOGY_STREAM, _FADING_STREAM = 0, 1


def default_xi_grid(scheme, num=100):
    """``num`` uniform points on ``[0, 2 r_M]``."""
    return np.linspace(0.0, 2.0 * scheme.max_rate, num)


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to rerun a simulation bit-identically.

    ``sweep`` is a sequence of ``(parameter, values)`` pairs; each pair is
    swept on its own with the other parameters at their base values.  For
    ``"thresholds"`` every value is a list of dB thresholds that keeps the
    rate ladder of ``scheme``.
    """

    cfg: SystemConfig = field(default_factory=SystemConfig)
    scheme: McsScheme = PRESETS["S1"]
    access: str = "rsma"
    n_topologies: int = 1000
    n_fading: int = 5000
    master_seed: int = 0
    sweep: tuple = ()
    window: Window = field(default_factory=Window)
    colocated: bool = False
    common_random_numbers: bool = True
    xi_grid: tuple = None

    def __post_init__(self):
        if self.access not in ACCESS_SCHEMES:
            raise InvalidParameterError(f"access must be one of {ACCESS_SCHEMES}, got {self.access!r}")
        if int(self.n_topologies) != self.n_topologies or self.n_topologies < 1:
            raise InvalidParameterError(f"n_topologies must be >= 1, got {self.n_topologies}")
        if int(self.n_fading) != self.n_fading or self.n_fading < 1:
            raise InvalidParameterError(f"n_fading must be >= 1, got {self.n_fading}")
        if self.access == "oma" and self.cfg.N != 1:
            raise InvalidParameterError("OMA requires N = 1")
        sweep = tuple((str(name), tuple(values)) for name, values in self.sweep)
        for name, values in sweep:
            if name not in SWEEP_PARAMETERS:
                raise InvalidParameterError(
                    f"sweep parameter must be one of {SWEEP_PARAMETERS}, got {name!r}")
            if not values:
                raise InvalidParameterError(f"sweep over {name} has no values")
        object.__setattr__(self, "sweep", sweep)
        if self.xi_grid is not None:
            object.__setattr__(self, "xi_grid", tuple(float(x) for x in self.xi_grid))

    def points(self):
        """Sweep points as ``(parameter, value, cfg, scheme)``; no sweep gives one point."""
        if not self.sweep:
            return [("none", "", self.cfg, self.scheme)]
        out = []
        for name, values in self.sweep:
            for value in values:
                if name == "thresholds":
                    thr = tuple(float(t) for t in value)
                    scheme = McsScheme.from_db(thr, self.scheme.rates[1:], self.scheme.name)
                    out.append((name, thr, self.cfg, scheme))
                else:
                    out.append((name, float(value), self.cfg.replace(**{name: float(value)}),
                                self.scheme))
        return out

    def to_dict(self):
        return {
            "cfg": self.cfg.to_dict(),
            "scheme": self.scheme.to_dict(),
            "access": self.access,
            "n_topologies": int(self.n_topologies),
            "n_fading": int(self.n_fading),
            "master_seed": int(self.master_seed),
            "sweep": [[name, list(values)] for name, values in self.sweep],
            "window": {"side_length": self.window.side_length, "wraparound": self.window.wraparound},
            "colocated": self.colocated,
            "common_random_numbers": self.common_random_numbers,
            "xi_grid": None if self.xi_grid is None else list(self.xi_grid),
        }


@dataclass
class SuccessTables:
    """Per-topology fading averages of one simulation pass.

    Attributes
    ----------
    success : ndarray, shape (n_topologies, N, n_beta, 2, n_thresholds)
    shannon : ndarray, shape (n_topologies, N, n_beta)
    thresholds, betas : ndarray
    discarded : int
        Topology draws rejected because the typical cell was short of UEs.
    """

    success: np.ndarray
    shannon: np.ndarray
    thresholds: np.ndarray
    betas: np.ndarray
    discarded: int

    @property
    def n_topologies(self):
        return self.success.shape[0]

    @property
    def discard_rate(self):
        return self.discarded / (self.discarded + self.n_topologies)

    def crr(self, scheme, beta_index=0):
        """Per-topology CRR samples, shape (n_topologies, N)."""
        return crr_from_success(self.success[:, :, beta_index], self.thresholds, scheme)


@dataclass
class RateStatistics:
    """Statistics over topologies of the conditional received rate.

    ``samples[i, n-1]`` is the fading-averaged rate of rank ``n`` in topology ``i``.
    """

    samples: np.ndarray
    xi_grid: np.ndarray
    sweep_param: str = "none"
    sweep_value: object = ""
    achievable: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_topologies(self):
        return self.samples.shape[0]

    @property
    def mean(self):
        return np.mean(self.samples, axis=0)

    @property
    def m2(self):
        return np.mean(self.samples ** 2, axis=0)

    @property
    def var(self):
        return np.maximum(self.m2 - self.mean ** 2, 0.0)

    @property
    def stderr(self):
        n = self.n_topologies
        if n < 2:
            return np.full(self.samples.shape[1], np.nan)
        return np.std(self.samples, axis=0, ddof=1) / math.sqrt(n)

    @property
    def ccdf(self):
        """Empirical ``P[CRR > xi]``, shape (N, len(xi_grid))."""
        return np.vstack([empirical_meta(col, self.xi_grid, min_samples=1)
                          for col in self.samples.T])

    @property
    def achievable_mean(self):
        return None if self.achievable is None else np.mean(self.achievable, axis=0)


def _topology_rngs(master_seed, index, point=None):
    key = (index,) if point is None else (point, index)
    return (np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key + (_TOPOLOGY_STREAM,))),
            np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key + (_FADING_STREAM,))))


def _simulate_block(task):
    """Worker: fading averages for a contiguous block of topology indices."""
    cfg, thresholds, betas, n_fading, master_seed, access, window, colocated, point, lo, hi = task
    success, shannon, discarded = [], [], 0
    for index in range(lo, hi):
        topo_rng, fading_rng = _topology_rngs(master_seed, index, point)
        net = sample_network(cfg.lambda_bs, cfg.N, window, topo_rng, colocated=colocated)
        discarded += net.discarded
        avg = fading_averages(net.profile, cfg, thresholds, n_fading, fading_rng, betas=betas,
                              access=access)
        success.append(avg.success)
        shannon.append(avg.shannon)
    return np.stack(success), np.stack(shannon), discarded


def _blocks(n, workers):
    size = max(1, min(250, math.ceil(n / (4 * max(workers, 1)))))
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def simulate_success_tables(cfg, thresholds, n_topologies, n_fading, master_seed, *, betas=None,
                            access="rsma", window=None, colocated=False, workers=1, point=None):
    """Simulate ``n_topologies`` topologies and keep their success tables.

    ``point`` adds the sweep-point index to the seed keys (independent
    streams per point); ``None`` shares streams across calls.
    """
    window = Window() if window is None else window
    thresholds = np.unique(np.asarray(thresholds, dtype=float))
    betas = np.atleast_1d(np.asarray(cfg.beta if betas is None else betas, dtype=float))
    tasks = [(cfg, thresholds, betas, n_fading, master_seed, access, window, colocated, point, lo, hi)
             for lo, hi in _blocks(n_topologies, workers)]
    if workers > 1:
        with multiprocessing.get_context("spawn").Pool(workers) as pool:
            parts = pool.map(_simulate_block, tasks)
    else:
        parts = [_simulate_block(t) for t in tasks]
    return SuccessTables(
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        thresholds, betas, sum(p[2] for p in parts),
    )


def statistics_from_tables(tables, scheme, beta_index=0, xi_grid=None, sweep_param="none",
                           sweep_value="", metadata=None):
    """Rate statistics of ``scheme`` from precomputed success tables."""
    xi = default_xi_grid(scheme) if xi_grid is None else np.asarray(xi_grid, dtype=float)
    meta = dict(metadata or {})
    meta["discard_rate"] = tables.discard_rate
    if tables.discard_rate > DISCARD_WARNING_RATE:
        meta["warning"] = (f"{100 * tables.discard_rate:.1f}% of topology draws were discarded "
                           f"(typical cell short of UEs)")
    return RateStatistics(tables.crr(scheme, beta_index), xi, sweep_param, sweep_value,
                          tables.shannon[:, :, beta_index], meta)


def run_experiment(spec, workers=1):
    """Run every sweep point of ``spec``.

    Returns
    -------
    list of RateStatistics
        One entry per sweep point, in sweep order.  Power-split sweeps with
        common random numbers are served by a single simulation pass.
    """
    start = time.perf_counter()
    xi = None if spec.xi_grid is None else np.asarray(spec.xi_grid)
    common = dict(access=spec.access, window=spec.window, colocated=spec.colocated, workers=workers)
    points = spec.points()
    results = []
    if spec.common_random_numbers and all(name == "beta" for name, _, _, _ in points):
        # one pass with all power splits
        betas = [cfg.beta for _, _, cfg, _ in points]
        tables = simulate_success_tables(spec.cfg, spec.scheme.theta, spec.n_topologies, spec.n_fading,
                                         spec.master_seed, betas=betas, **common)
        for k, (name, value, _, scheme) in enumerate(points):
            results.append(statistics_from_tables(tables, scheme, k, xi, name, value))
    else:
        for k, (name, value, cfg, scheme) in enumerate(points):
            tables = simulate_success_tables(
                cfg, scheme.theta, spec.n_topologies, spec.n_fading, spec.master_seed,
                point=None if spec.common_random_numbers else k, **common)
            results.append(statistics_from_tables(tables, scheme, 0, xi, name, value))
    elapsed = time.perf_counter() - start
    for stats in results:
        if "warning" in stats.metadata:
            warnings.warn(stats.metadata["warning"], RuntimeWarning, stacklevel=2)
        stats.metadata["wall_time_s"] = elapsed
    return results


def co_location_toggle(spec, mode, workers=1):
    """Run ``spec`` with interfering UEs at their cluster point or at their true positions."""
    if mode not in ("colocated", "dispersed"):
        raise InvalidParameterError(f"mode must be 'colocated' or 'dispersed', got {mode!r}")
    return run_experiment(replace(spec, colocated=(mode == "colocated")), workers=workers)


def empirical_meta(samples, xi_grid, min_samples=100):
    """Fraction of samples strictly exceeding each ``xi``.

    ``samples`` may be numbers or :class:`~uplink_rsma.mcs.CrrSample` objects.
    """
    values = np.array([getattr(s, "value", s) for s in np.ravel(np.asarray(samples, dtype=object))],
                      dtype=float)
    if values.size == 0:
        raise InvalidParameterError("no samples")
    if values.size < min_samples:
        warnings.warn(f"only {values.size} samples for the empirical meta distribution",
                      RuntimeWarning, stacklevel=2)
    ordered = np.sort(values)
    xi = np.asarray(xi_grid, dtype=float)
    return (values.size - np.searchsorted(ordered, xi, side="right")) / values.size


def interval_probability(ccdf, xi, delta):
    """``P[xi - delta < CRR <= xi]`` from a CCDF callable or ``(grid, values)`` pair."""
    if not delta > 0:
        raise InvalidParameterError(f"delta must be positive, got {delta}")
    if callable(ccdf):
        upper, lower = ccdf(np.asarray(xi) - delta), ccdf(xi)
    else:
        grid, values = (np.asarray(v, dtype=float) for v in ccdf)
        # right-continuous step interpolation of the CCDF
        def at(x):
            idx = np.searchsorted(grid, x, side="right") - 1
            return np.where(idx < 0, 1.0, values[np.clip(idx, 0, None)])
        upper, lower = at(np.asarray(xi) - delta), at(xi)
    return np.maximum(np.asarray(upper) - np.asarray(lower), 0.0)


# ---------------------------------------------------------------------------
# output


def format_float(x):
    """Platform-stable float formatting for CSV output."""
    return format(float(x), ".12g")


def _format_value(v):
    if isinstance(v, (tuple, list)):
        return ";".join(format_float(x) for x in v)
    if isinstance(v, str):
        return v
    return format_float(v)


def statistics_csv(results, extra_columns=None):
    """CSV text with columns sweep_param, sweep_value, rank, mean, m2, var, stderr."""
    header = ["sweep_param", "sweep_value", "rank", "mean", "m2", "var", "stderr"]
    extra = dict(extra_columns or {})
    header += list(extra)
    lines = [",".join(header)]
    for stats in results:
        for n, row in enumerate(zip(stats.mean, stats.m2, stats.var, stats.stderr), start=1):
            cells = [stats.sweep_param, _format_value(stats.sweep_value), str(n)]
            cells += [format_float(v) for v in row] + [str(v) for v in extra.values()]
            lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def ccdf_csv(results):
    """CSV text with columns sweep_param, sweep_value, xi, rank, ccdf."""
    lines = ["sweep_param,sweep_value,xi,rank,ccdf"]
    for stats in results:
        ccdf = stats.ccdf
        for n in range(ccdf.shape[0]):
            for x, p in zip(stats.xi_grid, ccdf[n]):
                lines.append(f"{stats.sweep_param},{_format_value(stats.sweep_value)},"
                             f"{format_float(x)},{n + 1},{format_float(p)}")
    return "\n".join(lines) + "\n"


def _write(path, text):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def write_statistics_csv(path, results):
    _write(path, statistics_csv(results))


def write_ccdf_csv(path, results):
    _write(path, ccdf_csv(results))


def write_metadata_json(path, spec, results):
    """Spec echo, seed, discard rates and wall time."""
    data = {
        "spec": spec.to_dict(),
        "master_seed": int(spec.master_seed),
        "points": [
            {"sweep_param": s.sweep_param, "sweep_value": s.sweep_value,
             **{k: v for k, v in s.metadata.items()}}
            for s in results
        ],
    }
    _write(path, json.dumps(data, indent=2, sort_keys=True, default=list) + "\n")
