"""Instantaneous SINRs of uplink RSMA, NOMA and OMA links.

Quantities are normalized by the transmit power, so a link's received
power is ``H * R**-eta`` and the noise is ``sigma2_norm``.  Intra-cell
interference for rank ``n`` comes only from the farther UEs ``i > n``
(distance-ordered SIC).

A ratio with a zero numerator is 0; a positive numerator over a zero
denominator is ``+inf``.
"""

from dataclasses import dataclass, field, asdict

import numpy as np

from .exceptions import InvalidParameterError
from .spatial import B1, B2

__all__ = [
    "SystemConfig",
    "FadingDraw",
    "SinrPair",
    "draw_fading",
    "sinr_ratio",
    "rsma_sinr_arrays",
    "sinr_rsma",
    "sinr_noma",
    "sinr_oma",
]


@dataclass(frozen=True)
class SystemConfig:
    """Scalar network parameters.

    Attributes
    ----------
    lambda_bs : float
        BS intensity per m^2.
    N : int
        UEs scheduled per cell and resource block.
    eta : float
        Path-loss exponent, must exceed 2.
    sigma2_norm : float
        Noise power normalized by the transmit power.
    beta : float
        Fraction of power on sub-message 1.
    q : float
        Probability that sub-message 1 is decoded first (``b_n = 1``).
    b1, b2 : float
        Link-distance and pair-correlation fit constants.
    """

    lambda_bs: float = 1e-4
    N: int = 2
    eta: float = 4.0
    sigma2_norm: float = 0.0
    beta: float = 0.5
    q: float = 0.0
    b1: float = B1
    b2: float = B2

    def __post_init__(self):
        if not (np.isfinite(self.lambda_bs) and self.lambda_bs > 0):
            raise InvalidParameterError(f"lambda_bs must be positive and finite, got {self.lambda_bs}")
        if int(self.N) != self.N or self.N < 1:
            raise InvalidParameterError(f"N must be a positive integer, got {self.N}")
        if not self.eta > 2:
            raise InvalidParameterError(f"eta must exceed 2, got {self.eta}")
        if not self.sigma2_norm >= 0:
            raise InvalidParameterError(f"sigma2_norm must be >= 0, got {self.sigma2_norm}")
        if not 0 <= self.beta <= 1:
            raise InvalidParameterError(f"beta must lie in [0, 1], got {self.beta}")
        if not 0 <= self.q <= 1:
            raise InvalidParameterError(f"q must lie in [0, 1], got {self.q}")
        if not (self.b1 > 0 and self.b2 > 0):
            raise InvalidParameterError("b1 and b2 must be positive")

    def replace(self, **changes):
        return SystemConfig(**{**asdict(self), **changes})

    def to_dict(self):
        return asdict(self)


@dataclass
class FadingDraw:
    """One small-scale fading realization.

    ``h_typical`` holds the N unit-exponential gains of the typical links
    in rank order, ``h_interferer`` one gain per inter-cell interferer and
    ``b`` the Bernoulli(q) decoding-order bits.
    """

    h_typical: np.ndarray
    h_interferer: np.ndarray = field(default_factory=lambda: np.empty(0))
    b: np.ndarray = None

    def __post_init__(self):
        self.h_typical = np.asarray(self.h_typical, dtype=float)
        self.h_interferer = np.asarray(self.h_interferer, dtype=float)
        if self.b is None:
            self.b = np.zeros(self.h_typical.shape, dtype=np.int8)
        self.b = np.asarray(self.b)
        if np.any(self.h_typical <= 0) or np.any(self.h_interferer <= 0):
            raise InvalidParameterError("fading gains must be positive")
        if not np.all((self.b == 0) | (self.b == 1)):
            raise InvalidParameterError("decoding-order bits must be 0 or 1")


@dataclass(frozen=True)
class SinrPair:
    """Linear SINRs of the two RSMA sub-messages."""

    gamma1: float
    gamma2: float


def draw_fading(N, n_interferers, q, rng):
    """Draw unit-exponential gains and Bernoulli(q) decoding bits."""
    return FadingDraw(
        rng.standard_exponential(N),
        rng.standard_exponential(n_interferers),
        (rng.random(N) < q).astype(np.int8),
    )


def sinr_ratio(num, den):
    """Elementwise ``num / den`` with 0 for a zero numerator and inf for a zero denominator."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    out = np.where(den == 0, np.inf, out)
    return np.where(num == 0, 0.0, out)


def rsma_sinr_arrays(signal, interference, beta, b):
    """Vectorized sub-message SINRs.

    Parameters
    ----------
    signal : array
        Desired received power ``H_n R_n^-eta``.
    interference : array
        Intra-cell plus inter-cell interference plus noise.
    beta : float
        Power split.
    b : array of {0, 1}
        Decoding-order bits; with ``b = 1`` sub-message 1 sees sub-message 2
        as interference, with ``b = 0`` the roles are swapped.
    """
    signal = np.asarray(signal, dtype=float)
    b = np.asarray(b)
    g1 = sinr_ratio(beta * signal, b * (1.0 - beta) * signal + interference)
    g2 = sinr_ratio((1.0 - beta) * signal, (1 - b) * beta * signal + interference)
    return g1, g2


def _link_terms(n, profile, fading, cfg):
    N = profile.n_users
    if not (1 <= n <= N):
        raise InvalidParameterError(f"rank n must satisfy 1 <= n <= {N}, got {n}")
    rx = fading.h_typical * profile.ordered_typical ** -cfg.eta
    inter = np.sum(fading.h_interferer * profile.interferer ** -cfg.eta)
    interference = np.sum(rx[n:]) + inter + cfg.sigma2_norm
    return rx[n - 1], interference


def sinr_rsma(n, profile, fading, cfg):
    """SINRs of both sub-messages of the rank-``n`` typical UE."""
    signal, interference = _link_terms(n, profile, fading, cfg)
    g1, g2 = rsma_sinr_arrays(signal, interference, cfg.beta, fading.b[n - 1])
    return SinrPair(float(g1), float(g2))


def sinr_noma(n, profile, fading, cfg):
    """SINR of the rank-``n`` typical UE without rate splitting."""
    signal, interference = _link_terms(n, profile, fading, cfg)
    return float(sinr_ratio(signal, interference))


def sinr_oma(profile, fading, cfg):
    """SINR of the single scheduled UE; requires ``N == 1``."""
    if profile.n_users != 1:
        raise InvalidParameterError(f"OMA serves exactly one UE per cell, got {profile.n_users}")
    return sinr_noma(1, profile, fading, cfg)
