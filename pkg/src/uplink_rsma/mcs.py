"""Multi-level MCS rate adaptation and fading-averaged rates.

Rates are in nats/s/Hz with the bandwidth normalized to one.  Threshold
values are stored linear; configuration files and presets use dB.
"""

from dataclasses import dataclass
import math

import numpy as np
import yaml

from .exceptions import ConfigError, InvalidParameterError
from .sinr import rsma_sinr_arrays, sinr_ratio

__all__ = [
    "ACCESS_SCHEMES",
    "McsScheme",
    "CrrSample",
    "FadingAverages",
    "PRESETS",
    "preset",
    "db_to_linear",
    "linear_to_db",
    "rate_map",
    "fading_averages",
    "crr_from_success",
    "crr_empirical",
    "spectral_efficiency",
    "nats_to_bits",
    "scheme_from_mapping",
    "load_scheme",
]

ACCESS_SCHEMES = ("rsma", "noma", "oma")


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class McsScheme:
    """Ascending SINR thresholds and the rate ladder ``r_0 = 0 < r_1 < ... < r_M``."""

    thresholds: tuple
    rates: tuple
    name: str = ""

    def __post_init__(self):
        thr = tuple(float(t) for t in np.atleast_1d(self.thresholds))
        rates = tuple(float(r) for r in np.atleast_1d(self.rates))
        object.__setattr__(self, "thresholds", thr)
        object.__setattr__(self, "rates", rates)
        if len(thr) == 0:
            raise InvalidParameterError("at least one threshold is required")
        if len(rates) != len(thr) + 1:
            raise InvalidParameterError(
                f"need M+1={len(thr) + 1} rates (including r_0 = 0), got {len(rates)}")
        if not all(t > 0 and math.isfinite(t) for t in thr):
            raise InvalidParameterError("linear thresholds must be positive and finite")
        if any(b <= a for a, b in zip(thr, thr[1:])):
            raise InvalidParameterError("thresholds not ascending")
        if rates[0] != 0.0:
            raise InvalidParameterError("r_0 must be 0")
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise InvalidParameterError("rates not ascending")

    @classmethod
    def from_db(cls, thresholds_db, rates, name=""):
        """Build a scheme from dB thresholds and rates ``r_1..r_M`` (``r_0`` is implied)."""
        thresholds_db = list(np.atleast_1d(np.asarray(thresholds_db, dtype=float)))
        rates = list(np.atleast_1d(np.asarray(rates, dtype=float)))
        if len(rates) == 0:
            raise InvalidParameterError("rates list is empty")
        if len(rates) == len(thresholds_db):
            rates = [0.0] + rates
        return cls(tuple(db_to_linear(thresholds_db)), tuple(rates), name)

    @property
    def M(self):
        return len(self.thresholds)

    @property
    def theta(self):
        return np.asarray(self.thresholds)

    @property
    def thresholds_db(self):
        return linear_to_db(self.thresholds)

    @property
    def rate_array(self):
        return np.asarray(self.rates)

    @property
    def increments(self):
        """``r_m - r_{m-1}`` for m = 1..M."""
        return np.diff(self.rates)

    @property
    def max_rate(self):
        return self.rates[-1]

    def with_rates(self, rates, name=None):
        return McsScheme.from_db(self.thresholds_db, rates, self.name if name is None else name)

    def is_shannon_admissible(self):
        """True when every rate is achievable at its threshold, ``r_m <= ln(1 + theta_m)``.

        Equality is accepted up to a relative 1e-12 so that ladders built as
        ``ln(1 + theta)`` qualify despite rounding.
        """
        return all(r <= math.log1p(t) * (1 + 1e-12) for r, t in zip(self.rates[1:], self.thresholds))

    def to_dict(self):
        return {
            "name": self.name,
            "thresholds_db": [float(x) for x in self.thresholds_db],
            "rates": list(self.rates[1:]),
        }


_PRESET_TABLE = {
    "S1": ([-15.0], [0.4]),
    "S2": ([-5.0], [0.4]),
    "S3": ([-15.0, -10.0], [0.4, 0.6]),
    "S4": ([-15.0, -5.0], [0.4, 0.6]),
}

PRESETS = {name: McsScheme.from_db(t, r, name) for name, (t, r) in _PRESET_TABLE.items()}


def preset(name, rates=None):
    """Return a named preset, optionally with a different rate ladder."""
    try:
        scheme = PRESETS[name.upper()]
    except KeyError:
        raise InvalidParameterError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return scheme if rates is None else scheme.with_rates(rates)


def rate_map(gamma, scheme):
    """Rate of the MCS level whose SINR interval contains ``gamma``.

    Level m covers ``[theta_m, theta_{m+1})``; ``+inf`` maps to ``r_M``.
    """
    idx = np.searchsorted(scheme.theta, gamma, side="right")
    out = scheme.rate_array[idx]
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class CrrSample:
    """Fading-averaged received rate of one typical UE on one topology."""

    value: float
    rank: int
    scheme_tag: str


@dataclass
class FadingAverages:
    """Fading averages on a fixed topology, for every rank and power split.

    Attributes
    ----------
    success : ndarray, shape (N, n_beta, 2, n_thresholds)
        Fraction of draws with sub-message SINR at or above each threshold.
        NOMA/OMA fill only sub-message index 0.
    shannon : ndarray, shape (N, n_beta)
        Mean of ``ln(1 + gamma_1) + ln(1 + gamma_2)`` (RSMA) or ``ln(1 + gamma)``.
    thresholds : ndarray
        Linear thresholds of the last axis of ``success``.
    betas : ndarray
    """

    success: np.ndarray
    shannon: np.ndarray
    thresholds: np.ndarray
    betas: np.ndarray


def fading_averages(profile, cfg, thresholds, n_fading, rng, betas=None, access="rsma",
                    chunk=4096):
    """Average threshold-crossing indicators over ``n_fading`` fading draws.

    One draw provides gains for all typical links and interferers plus the
    decoding-order bits; it is shared by all ranks and all ``betas`` so the
    sweep uses common random numbers.
    """
    if n_fading < 1:
        raise InvalidParameterError(f"n_fading must be >= 1, got {n_fading}")
    if access not in ACCESS_SCHEMES:
        raise InvalidParameterError(f"access must be one of {ACCESS_SCHEMES}, got {access!r}")
    if access == "oma" and profile.n_users != 1:
        raise InvalidParameterError("OMA serves exactly one UE per cell")
    betas = np.atleast_1d(np.asarray(cfg.beta if betas is None else betas, dtype=float))
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
    N = profile.n_users
    path_typ = profile.ordered_typical ** -cfg.eta
    path_int = profile.interferer ** -cfg.eta
    counts = np.zeros((N, betas.size, 2, thresholds.size))
    shannon = np.zeros((N, betas.size))
    done = 0
    while done < n_fading:
        c = min(chunk, n_fading - done)
        h = rng.standard_exponential((c, N))
        h_int = rng.standard_exponential((c, path_int.size))
        bits = (rng.random((c, N)) < cfg.q).astype(np.int8)
        rx = h * path_typ
        inter = h_int @ path_int if path_int.size else np.zeros(c)
        tail = np.cumsum(rx[:, ::-1], axis=1)[:, ::-1]
        intra = np.concatenate([tail[:, 1:], np.zeros((c, 1))], axis=1)
        interference = intra + inter[:, None] + cfg.sigma2_norm
        if access == "rsma":
            for k, beta in enumerate(betas):
                g1, g2 = rsma_sinr_arrays(rx, interference, beta, bits)
                counts[:, k, 0] += np.count_nonzero(g1[..., None] >= thresholds, axis=0)
                counts[:, k, 1] += np.count_nonzero(g2[..., None] >= thresholds, axis=0)
                shannon[:, k] += np.sum(np.log1p(g1) + np.log1p(g2), axis=0)
        else:
            g = sinr_ratio(rx, interference)
            counts[:, :, 0] += np.count_nonzero(g[..., None] >= thresholds, axis=0)[:, None, :]
            shannon += np.sum(np.log1p(g), axis=0)[:, None]
        done += c
    return FadingAverages(counts / n_fading, shannon / n_fading, thresholds, betas)


def _threshold_columns(table_thresholds, scheme):
    table = np.asarray(table_thresholds)
    cols = np.searchsorted(table, scheme.theta)
    cols = np.minimum(cols, table.size - 1)
    if not np.allclose(table[cols], scheme.theta, rtol=1e-12, atol=0):
        raise InvalidParameterError("scheme thresholds are missing from the success table")
    return cols


def crr_from_success(success, table_thresholds, scheme):
    """Combine threshold-crossing probabilities into the received rate.

    ``success[..., sub, t]`` with the last two axes being (sub-message,
    threshold); returns an array over the leading axes.  Uses
    ``R_MCS(g) = sum_m (r_m - r_{m-1}) 1(g >= theta_m)``.
    """
    cols = _threshold_columns(table_thresholds, scheme)
    per_threshold = success[..., 0, :] + success[..., 1, :]
    return per_threshold[..., cols] @ scheme.increments


def crr_empirical(profile, cfg, scheme, n, n_fading, rng, access="rsma"):
    """Monte Carlo estimate of the conditional received rate of rank ``n``."""
    if not (1 <= n <= profile.n_users):
        raise InvalidParameterError(f"rank n must satisfy 1 <= n <= {profile.n_users}, got {n}")
    avg = fading_averages(profile, cfg, scheme.theta, n_fading, rng, access=access)
    value = float(crr_from_success(avg.success[n - 1, 0], avg.thresholds, scheme))
    return CrrSample(value, n, access.upper())


def spectral_efficiency(rate, bw=1.0):
    """Rate per unit bandwidth."""
    if not bw > 0:
        raise InvalidParameterError(f"bandwidth must be positive, got {bw}")
    return np.asarray(rate, dtype=float) / bw if np.ndim(rate) else rate / bw


def nats_to_bits(x):
    return np.asarray(x, dtype=float) / math.log(2.0) if np.ndim(x) else x / math.log(2.0)


def scheme_from_mapping(data, path="scheme"):
    """Validate a ``{thresholds_db: [...], rates: [...]}`` mapping."""
    if not isinstance(data, dict):
        raise ConfigError(path, "expected a mapping with thresholds_db and rates")
    for key in ("thresholds_db", "rates"):
        if key not in data:
            raise ConfigError(f"{path}.{key}", "missing field")
        if not isinstance(data[key], (list, tuple)):
            raise ConfigError(f"{path}.{key}", "expected a list")
    thr, rates = list(data["thresholds_db"]), list(data["rates"])
    if not thr:
        raise ConfigError(f"{path}.thresholds_db", "empty threshold list")
    if not rates:
        raise ConfigError(f"{path}.rates", "empty rates list")
    if any(b <= a for a, b in zip(thr, thr[1:])):
        raise ConfigError(f"{path}.thresholds_db", "thresholds not ascending")
    if len(rates) != len(thr):
        raise ConfigError(f"{path}.rates", f"expected {len(thr)} rates, got {len(rates)}")
    try:
        return McsScheme.from_db(thr, rates, data.get("name", ""))
    except InvalidParameterError as exc:
        raise ConfigError(f"{path}.rates", str(exc)) from None


def load_scheme(path):
    """Load an MCS scheme from a YAML file."""
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return scheme_from_mapping(data, path=str(path))
