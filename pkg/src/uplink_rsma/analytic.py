"""Numerical evaluation of the analytical rate expressions.

Two layers live here.  The conditional layer (:func:`crr_conditional` and
friends) gives the exact fading average of the MCS rate on a fixed
topology.  The spatial layer averages products of those conditional terms
over the typical link distance ``R_n``, the farther intra-cell UEs and a
Model-A interferer field (zero-radius Poisson cluster process whose parents
have intensity ``lambda * g(r)``).

Every conditional term has the shape::

    exp(-a * sigma2 * R_n^eta) * prod_i 1/(1 + a (R_n/R_i)^eta) * prod_x 1/(1 + a (R_n/D_x)^eta)

with ``a = theta / u``, so moments reduce to expectations of products of
such terms with integer powers.  Those expectations are computed by
:func:`expected_products` with three nested adaptive quadratures, written
in the dimensionless variable ``z = B1 * lambda * pi * R_n^2``:

* the intra-cell factor, ``E[prod_{i>n} h(R_n/R_i) | R_n]``, equals the
  ``(N-n)``-th power of a one-dimensional integral because, given ``R_n``,
  the farther UEs are i.i.d. on ``[R_n, inf)``;
* the inter-cell factor is the probability generating functional of the
  parent PPP with each parent carrying N independently faded UEs;
* the outer integral runs over the density of ``z``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import stats
from scipy.special import beta as beta_fn

from .exceptions import InfeasibleMomentsError, InvalidParameterError
from .quadrature import integrate

__all__ = [
    "QuadratureOptions",
    "SplitFactors",
    "BetaMeta",
    "MomentSpec",
    "split_factors",
    "shannon_factors",
    "shannon_weight",
    "crr_conditional",
    "crr_noma_conditional",
    "crr_oma_conditional",
    "expected_products",
    "intra_cell_factor",
    "inter_cell_factor",
    "avg_received_rate_rsma",
    "avg_received_rate",
    "avg_achievable_rate_rsma",
    "moment_crr_rsma",
    "moment_crr_noma",
    "moment_crr_oma",
    "fit_beta_meta",
    "beta_meta",
    "meta_scale",
]

# The three integrals run in logarithmic variables so that features at any
# scale (success requires tiny R_n when theta/u is large) are resolved.
# exp(-Z_MAX) is below 1e-12, so the outer tail beyond Z_MAX is negligible;
# below Z_MIN the outer integrand is bounded by the density, at most N.
Z_MAX = -math.log(1e-12)
Z_MIN = 1e-15
# the intra-cell integrand is bounded by exp(-w); both cut tails are below 1e-18
W_MAX = 44.0
W_MIN = 1e-18
# length scale (in log-distance) of the half-line maps of the inter-cell integral
LOG_SCALE = 4.0


@dataclass(frozen=True)
class QuadratureOptions:
    """Tolerances of the nested quadratures.

    ``abs_tol``/``rel_tol`` apply to each reported spatial average; the
    inner integrals run at ``inner_abs_tol``/``inner_rel_tol``.  ``chunk``
    caps the number of inner integrals refined together.
    """

    abs_tol: float = 1e-9
    rel_tol: float = 1e-8
    inner_abs_tol: float = 1e-12
    inner_rel_tol: float = 1e-10
    max_subdivisions: int = 2000
    chunk: int = 2048
    group: int = 16


DEFAULT_OPTIONS = QuadratureOptions()


@dataclass(frozen=True)
class SplitFactors:
    """Per-term coefficients of the RSMA conditional rate.

    ``u[j, m]`` is the effective signal share of term ``j + 1`` at threshold
    ``m + 1``, ``c[j]`` the probability of the matching decoding order and
    ``active[j, m]`` the existence condition ``u > 0``.
    Terms 1 and 2 belong to sub-message 1 (decoded with and without
    sub-message 2 as interference), terms 3 and 4 to sub-message 2.
    """

    u: np.ndarray
    c: np.ndarray
    active: np.ndarray

    def ratios(self, theta):
        """``theta_m / u_{j,m}`` on active entries, NaN elsewhere."""
        theta = np.broadcast_to(np.asarray(theta, dtype=float), self.u.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.active, theta / self.u, np.nan)


def split_factors(beta, q, scheme):
    """Build the ``u``, ``c`` and indicator tables for a power split and decoding factor."""
    if not 0 <= beta <= 1:
        raise InvalidParameterError(f"beta must lie in [0, 1], got {beta}")
    if not 0 <= q <= 1:
        raise InvalidParameterError(f"q must lie in [0, 1], got {q}")
    theta = scheme.theta
    u = np.vstack([
        (1.0 + theta) * beta - theta,
        np.full_like(theta, beta),
        1.0 - (1.0 + theta) * beta,
        np.full_like(theta, 1.0 - beta),
    ])
    c = np.array([q, 1.0 - q, 1.0 - q, q])
    return SplitFactors(u, c, u > 0)


def shannon_factors(t, beta):
    """Effective signal shares at SINR threshold ``e^t - 1``, shape ``(4,) + t.shape``."""
    t = np.asarray(t, dtype=float)
    et = np.exp(t)
    return np.stack([
        et * beta - et + 1.0,
        np.full_like(et, beta),
        1.0 - beta * et,
        np.full_like(et, 1.0 - beta),
    ])


def _check_rank(n, N):
    if not (1 <= n <= N):
        raise InvalidParameterError(f"rank n must satisfy 1 <= n <= N={N}, got {n}")


# ---------------------------------------------------------------------------
# conditional rates on a fixed topology


def crr_conditional(profile, cfg, scheme, n):
    """Conditional received rate of the rank-``n`` UE under RSMA.

    Exact expectation over fading and decoding order of the sum of both
    sub-message rates, for the distances in ``profile``.
    """
    R = profile.ordered_typical
    _check_rank(n, R.size)
    rn = R[n - 1]
    eta = cfg.eta
    intra = (rn / R[n:]) ** eta
    inter = (rn / profile.interferer) ** eta
    sf = split_factors(cfg.beta, cfg.q, scheme)
    total = 0.0
    for m, (dr, theta) in enumerate(zip(scheme.increments, scheme.theta)):
        inner = 0.0
        for j in range(4):
            if not sf.active[j, m] or sf.c[j] == 0.0:
                continue
            u = sf.u[j, m]
            noise = math.exp(-rn ** eta * theta * cfg.sigma2_norm / u)
            f = np.prod(u / (u + theta * intra)) * np.prod(u / (u + theta * inter))
            inner += sf.c[j] * noise * f
        total += dr * inner
    return float(total)


def crr_noma_conditional(profile, cfg, scheme, n):
    """Conditional received rate of the rank-``n`` UE without rate splitting."""
    R = profile.ordered_typical
    _check_rank(n, R.size)
    rn = R[n - 1]
    eta = cfg.eta
    total = 0.0
    for dr, theta in zip(scheme.increments, scheme.theta):
        f = (np.prod(1.0 / (theta * rn ** eta * R[n:] ** -eta + 1.0))
             * np.prod(1.0 / (theta * rn ** eta * profile.interferer ** -eta + 1.0)))
        total += dr * math.exp(-theta * rn ** eta * cfg.sigma2_norm) * f
    return float(total)


def crr_oma_conditional(profile, cfg, scheme):
    """Conditional received rate of the single UE of an OMA cell."""
    if profile.n_users != 1:
        raise InvalidParameterError(f"OMA serves exactly one UE per cell, got {profile.n_users}")
    r1 = profile.ordered_typical[0]
    eta = cfg.eta
    total = 0.0
    for dr, theta in zip(scheme.increments, scheme.theta):
        f = np.prod(1.0 / (theta * r1 ** eta * profile.interferer ** -eta + 1.0))
        total += dr * math.exp(-theta * r1 ** eta * cfg.sigma2_norm) * f
    return float(total)


# ---------------------------------------------------------------------------
# spatial averages


def _log_link_factor(a, k, rho_eta):
    """``sum_t k_t * log(1 + a_t * rho^eta)`` broadcast over leading axes.

    ``a`` and ``k`` have shape ``(C, T)``; ``rho_eta`` has shape ``(L, C)``.
    """
    return np.einsum("lct,ct->lc", np.log1p(a[None, :, :] * rho_eta[:, :, None]), k)


def _chunked(fn, z, a, k, size):
    out = np.empty(z.size)
    for lo in range(0, z.size, size):
        sl = slice(lo, lo + size)
        out[sl] = fn(z[sl], a[sl], k[sl])
    return out


def _intra_mean(z, a, k, eta, opts):
    """``E[prod_t (1 + a_t (R_n/R)^eta)^(-k_t) | R > R_n]`` for one farther UE.

    With ``w = B1*lambda*pi*(R^2 - R_n^2)`` the conditional law of the
    farther distance is a unit exponential in ``w`` and
    ``(R_n/R)^eta = (z/(z + w))^(eta/2)``.
    """
    def one_chunk(zc, ac, kc):
        def g(x):
            w = np.exp(x)[:, None]
            rho_eta = (zc[None, :] / (zc[None, :] + w)) ** (0.5 * eta)
            return np.exp(-_log_link_factor(ac, kc, rho_eta) - w) * w

        val, _ = integrate(g, math.log(W_MIN), math.log(W_MAX), abs_tol=opts.inner_abs_tol,
                           rel_tol=opts.inner_rel_tol, max_subdivisions=opts.max_subdivisions,
                           initial_intervals=16)
        # the integrand is flat below W_MIN
        head = W_MIN * np.exp(-np.sum(kc * np.log1p(ac), axis=1))
        return val + head

    return _chunked(one_chunk, z, a, k, opts.chunk)


def _inter_exponent(z, a, k, N, eta, kappa, opts):
    """``int_0^inf (1 - prod_t (1 + a_t y^-eta)^(-N k_t)) (1 - exp(-kappa z y^2)) y dy``.

    ``y`` is the interferer distance in units of ``R_n`` and ``kappa = B2/B1``.
    """
    def one_chunk(zc, ac, kc):
        # with y = exp(x0 +- t) the integrand decays exponentially in t on both
        # sides; x0 sits at the largest transition y ~ a^(1/eta)
        x0 = math.log(max(float(np.max(ac)), 1e-300)) / eta

        with np.errstate(divide="ignore"):
            log_a = np.log(ac)
            log_kz = np.log(kappa * zc)

        def g(x):
            # log domain: y = e^x spans hundreds of decades on the mapped half-lines
            x = x[:, None]
            with np.errstate(divide="ignore"):
                u = log_a[None, :, :] - eta * x[:, :, None]
                L = N * np.einsum("lct,ct->lc", np.logaddexp(0.0, u), kc)
                log_link = np.log(-np.expm1(-L))
                v = np.exp(np.minimum(log_kz[None, :] + 2.0 * x, 700.0))
                log_pcf = np.log(-np.expm1(-v))
            return np.exp(log_link + log_pcf + 2.0 * x)

        common = dict(abs_tol=0.5 * opts.inner_abs_tol, rel_tol=opts.inner_rel_tol,
                      max_subdivisions=opts.max_subdivisions, scale=LOG_SCALE)
        right, _ = integrate(lambda t: g(x0 + t), 0.0, np.inf, **common)
        left, _ = integrate(lambda t: g(x0 - t), 0.0, np.inf, **common)
        return left + right

    return _chunked(one_chunk, z, a, k, opts.chunk)


def _z_density(z, n, N):
    return (-np.expm1(-z)) ** (n - 1) * np.exp(-z * (N - n + 1)) / beta_fn(N - n + 1, n)


def _conditional_product(z, a, k, cfg, n, inter_cell, opts):
    """Conditional expectation given ``z`` for flattened (z, term-set) pairs."""
    N = cfg.N
    c = cfg.b1 * cfg.lambda_bs * math.pi
    exponent = np.zeros_like(z)
    if cfg.sigma2_norm > 0:
        exponent -= cfg.sigma2_norm * (z / c) ** (0.5 * cfg.eta) * np.sum(k * a, axis=1)
    if inter_cell:
        exponent -= (2.0 * z / cfg.b1) * _inter_exponent(z, a, k, N, cfg.eta, cfg.b2 / cfg.b1, opts)
    value = np.exp(exponent)
    if N > n:
        value = value * _intra_mean(z, a, k, cfg.eta, opts) ** (N - n)
    return value


def expected_products(a, k, cfg, n, *, inter_cell=True, opts=DEFAULT_OPTIONS):
    """Spatial average of products of conditional terms.

    Parameters
    ----------
    a : array_like, shape (P, T)
        Ratios ``theta / u`` of the T factors in each of P products.
    k : array_like, shape (P, T) or (T,)
        Non-negative integer powers of the factors.
    cfg : SystemConfig
    n : int
        Rank of the typical UE.
    inter_cell : bool
        Drop the inter-cell factor when False.

    Returns
    -------
    ndarray, shape (P,)
    """
    _check_rank(n, cfg.N)
    a = np.atleast_2d(np.asarray(a, dtype=float))
    k = np.broadcast_to(np.asarray(k, dtype=float), a.shape)
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise InvalidParameterError("ratios a must be finite and non-negative")
    if a.shape[0] > opts.group:
        # products with similar ratios need refinement at similar radii
        order = np.argsort(np.max(a, axis=1), kind="stable")
        out = np.empty(a.shape[0])
        for lo in range(0, order.size, opts.group):
            idx = order[lo:lo + opts.group]
            out[idx] = _expected_products_group(a[idx], k[idx], cfg, n, inter_cell, opts)
        return out
    return _expected_products_group(a, k, cfg, n, inter_cell, opts)


def _expected_products_group(a, k, cfg, n, inter_cell, opts):
    P = a.shape[0]

    def outer(z):
        K = z.size
        zz = np.repeat(z, P)
        aa = np.tile(a, (K, 1))
        kk = np.tile(k, (K, 1))
        cond = _conditional_product(zz, aa, kk, cfg, n, inter_cell, opts).reshape(K, P)
        return _z_density(z, n, cfg.N)[:, None] * cond

    def outer_log(x):
        z = np.exp(x)
        return outer(z) * z[:, None]

    val, _ = integrate(outer_log, math.log(Z_MIN), math.log(Z_MAX), abs_tol=opts.abs_tol,
                       rel_tol=opts.rel_tol, max_subdivisions=opts.max_subdivisions,
                       initial_intervals=16)
    return np.atleast_1d(val)


def intra_cell_factor(r, a, cfg, n, k=1, opts=DEFAULT_OPTIONS):
    """``E[prod_{i>n} prod_t (1 + a_t (r/R_i)^eta)^(-k_t) | R_n = r]`` for radii ``r`` (m)."""
    _check_rank(n, cfg.N)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    k = np.broadcast_to(np.asarray(k, dtype=float), a.shape)
    if cfg.N == n:
        return np.ones_like(r)
    z = cfg.b1 * cfg.lambda_bs * math.pi * r * r
    aa = np.tile(a, (r.size, 1))
    kk = np.tile(k, (r.size, 1))
    return _intra_mean(z, aa, kk, cfg.eta, opts) ** (cfg.N - n)


def inter_cell_factor(r, a, cfg, k=1, opts=DEFAULT_OPTIONS):
    """Model-A generating functional ``E[prod_x prod_t (1 + a_t (r/D_x)^eta)^(-k_t)]``."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    k = np.broadcast_to(np.asarray(k, dtype=float), a.shape)
    z = cfg.b1 * cfg.lambda_bs * math.pi * r * r
    aa = np.tile(a, (r.size, 1))
    kk = np.tile(k, (r.size, 1))
    J = _inter_exponent(z, aa, kk, cfg.N, cfg.eta, cfg.b2 / cfg.b1, opts)
    return np.exp(-(2.0 * z / cfg.b1) * J)


def _rsma_terms(cfg, scheme):
    """Weights ``dr_m * c_j`` and ratios ``theta_m / u_jm`` of the active RSMA terms."""
    sf = split_factors(cfg.beta, cfg.q, scheme)
    ratios = sf.ratios(scheme.theta[None, :])
    weights, a = [], []
    for m in range(scheme.M):
        for j in range(4):
            if sf.active[j, m] and sf.c[j] > 0:
                weights.append(scheme.increments[m] * sf.c[j])
                a.append(ratios[j, m])
    return np.array(weights), np.array(a)


def avg_received_rate_rsma(cfg, scheme, n, *, inter_cell=True, opts=DEFAULT_OPTIONS):
    """Spatially averaged received rate of the rank-``n`` UE under RSMA."""
    return moment_crr_rsma(1, cfg, scheme, n, inter_cell=inter_cell, opts=opts)


def avg_received_rate(cfg, scheme, n, access="rsma", *, inter_cell=True, opts=DEFAULT_OPTIONS):
    """Average received rate for ``access`` in {"rsma", "noma", "oma"}."""
    if access == "rsma":
        return avg_received_rate_rsma(cfg, scheme, n, inter_cell=inter_cell, opts=opts)
    if access == "noma":
        return moment_crr_noma(1, cfg, scheme, n, inter_cell=inter_cell, opts=opts)
    if access == "oma":
        return moment_crr_oma(1, cfg, scheme, inter_cell=inter_cell, opts=opts)
    raise InvalidParameterError(f"unknown access scheme {access!r}")


def shannon_weight(a, beta, q):
    """Density ``sum_j c_j dt_j/da`` turning the Shannon bound into one integral over ``a``.

    Each of the four crossing events ``{gamma > e^t - 1}`` is a single
    conditional term with ratio ``a = (e^t - 1) / L_j(t, beta)``.  Inverting,
    ``t_1 = ln(1+a) - ln(1+a(1-beta))``, ``t_2 = ln(1+a beta)``,
    ``t_3 = ln(1+a) - ln(1+a beta)`` and ``t_4 = ln(1+a(1-beta))``, so all
    terms share the same spatial average ``F(a)``.
    """
    a = np.asarray(a, dtype=float)
    nb = 1.0 - beta
    d1 = 1.0 / (1.0 + a) - nb / (1.0 + a * nb)
    d2 = beta / (1.0 + a * beta)
    d3 = 1.0 / (1.0 + a) - beta / (1.0 + a * beta)
    d4 = nb / (1.0 + a * nb)
    return q * (d1 + d4) + (1.0 - q) * (d2 + d3)


def avg_achievable_rate_rsma(cfg, n, *, inter_cell=True, opts=DEFAULT_OPTIONS):
    """Average of ``ln(1 + SINR_1) + ln(1 + SINR_2)`` (nats/s/Hz).

    Uses ``E[ln(1 + X)] = int_0^inf P(X > e^t - 1) dt`` term by term and the
    change of variable of :func:`shannon_weight`, giving
    ``int_0^inf F(a) w(a) da`` with ``F`` the spatial average of one
    conditional term.  The integral runs in ``ln a`` on two half-lines.
    """
    _check_rank(n, cfg.N)
    if cfg.sigma2_norm == 0 and not inter_cell and n == cfg.N:
        raise InvalidParameterError(
            "achievable rate diverges without noise and interference; "
            "set sigma2_norm > 0 or keep the inter-cell field")

    def integrand(x):
        a = np.exp(x)
        ok = a < 1e250
        out = np.zeros(x.shape)
        if ok.any():
            F = expected_products(a[ok, None], 1.0, cfg, n, inter_cell=inter_cell, opts=opts)
            out[ok] = F * shannon_weight(a[ok], cfg.beta, cfg.q) * a[ok]
        return out

    common = dict(abs_tol=0.5 * opts.abs_tol, rel_tol=opts.rel_tol,
                  max_subdivisions=opts.max_subdivisions, scale=LOG_SCALE)
    with np.errstate(over="ignore"):
        right, _ = integrate(integrand, 0.0, np.inf, **common)
        left, _ = integrate(lambda t: integrand(-t), 0.0, np.inf, **common)
    return float(left + right)


# ---------------------------------------------------------------------------
# moments


def compositions(total, parts):
    """All tuples of ``parts`` non-negative integers summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class MomentSpec:
    """Index sets of the double multinomial expansion of a b-th moment.

    The outer expansion distributes ``b`` over the M thresholds
    (``n_m >= 0``, ``sum n_m = b``) with coefficient ``b! / prod n_m!``;
    each ``n_m`` is then split over the four RSMA terms
    (``k_jm >= 0``, ``sum_j k_jm = n_m``) with coefficient ``n_m! / prod k_jm!``.
    """

    b: int
    M: int

    def __post_init__(self):
        if int(self.b) != self.b or self.b < 1:
            raise InvalidParameterError(f"moment order must be a positive integer, got {self.b}")

    def outer(self):
        """Yield ``(n, A_b)`` pairs."""
        for n in compositions(self.b, self.M):
            yield n, math.factorial(self.b) // math.prod(math.factorial(x) for x in n)

    @staticmethod
    def inner(n_m):
        """Yield ``(k, B_m)`` pairs for one threshold."""
        for k in compositions(n_m, 4):
            yield k, math.factorial(n_m) // math.prod(math.factorial(x) for x in k)

    def terms(self):
        """Yield ``(k, coefficient)`` with ``k`` of shape (4, M) over the full expansion."""
        for n, a_b in self.outer():
            per_m = [list(self.inner(n_m)) for n_m in n]
            for combo in _product(per_m):
                k = np.array([kb[0] for kb in combo], dtype=int).T
                yield k, a_b * math.prod(kb[1] for kb in combo)


def _product(lists):
    if not lists:
        yield ()
        return
    for head in lists[0]:
        for tail in _product(lists[1:]):
            yield (head,) + tail


def moment_crr_rsma(b, cfg, scheme, n, *, inter_cell=True, opts=DEFAULT_OPTIONS):
    """b-th moment over topologies of the RSMA conditional received rate."""
    _check_rank(n, cfg.N)
    spec = MomentSpec(b, scheme.M)
    sf = split_factors(cfg.beta, cfg.q, scheme)
    ratios = np.nan_to_num(sf.ratios(scheme.theta[None, :]), nan=0.0)
    live = sf.active & (sf.c[:, None] > 0)
    coefs, powers = [], []
    for k, coef in spec.terms():
        if np.any((k > 0) & ~live):
            continue
        weight = coef * np.prod(scheme.increments ** k.sum(axis=0)) * np.prod(sf.c[:, None] ** k)
        coefs.append(weight)
        powers.append(k.ravel())
    if not coefs:
        return 0.0
    powers = np.array(powers, dtype=float)
    a = np.broadcast_to(ratios.ravel(), powers.shape)
    vals = expected_products(a, powers, cfg, n, inter_cell=inter_cell, opts=opts)
    return float(np.dot(coefs, vals))


def moment_crr_noma(b, cfg, scheme, n, *, inter_cell=True, opts=DEFAULT_OPTIONS):
    """b-th moment of the NOMA conditional received rate.

    Expands ``(sum_m dr_m e^{-theta_m sigma2 R^eta} f_n(theta_m))^b`` over
    ``n_m`` with ``sum n_m = b``; the noise factor of a composition is
    ``exp(-R^eta sigma2 Omega)`` with ``Omega = sum_m theta_m n_m``.
    """
    _check_rank(n, cfg.N)
    spec = MomentSpec(b, scheme.M)
    coefs, powers = [], []
    for nm, a_b in spec.outer():
        nm = np.array(nm)
        coefs.append(a_b * np.prod(scheme.increments ** nm))
        powers.append(nm)
    powers = np.array(powers, dtype=float)
    a = np.broadcast_to(scheme.theta, powers.shape)
    vals = expected_products(a, powers, cfg, n, inter_cell=inter_cell, opts=opts)
    return float(np.dot(coefs, vals))


def moment_crr_oma(b, cfg, scheme, *, inter_cell=True, opts=DEFAULT_OPTIONS):
    """b-th moment of the OMA conditional received rate (one UE per cell)."""
    return moment_crr_noma(b, cfg.replace(N=1), scheme, 1, inter_cell=inter_cell, opts=opts)


# ---------------------------------------------------------------------------
# meta distribution


@dataclass(frozen=True)
class BetaMeta:
    """Beta law fitted to the normalized conditional rate ``CRR / scale``."""

    alpha: float
    phi: float
    scale: float
    clamped: bool = False

    def ccdf(self, xi):
        return stats.beta.sf(np.asarray(xi, dtype=float) / self.scale, self.alpha, self.phi)

    @property
    def mean(self):
        return self.scale * self.alpha / (self.alpha + self.phi)


def fit_beta_meta(mean, m2, scale, clamp=False):
    """Match a scaled beta law to the first two moments of the conditional rate.

    Raises
    ------
    InfeasibleMomentsError
        When ``mean`` is outside ``(0, scale)`` or the variance is outside
        ``(0, mean * (scale - mean))``.  With ``clamp=True`` a too large
        variance is clamped to 0.999 of the bound and the fit is flagged.
    """
    if not scale > 0:
        raise InvalidParameterError(f"scale must be positive, got {scale}")
    if not 0 < mean < scale:
        raise InfeasibleMomentsError(f"mean {mean} must lie in (0, scale={scale})")
    var = m2 - mean * mean
    bound = mean * (scale - mean)
    clamped = False
    if not var > 0:
        raise InfeasibleMomentsError(f"variance {var} must be positive")
    if not var < bound:
        if not clamp:
            raise InfeasibleMomentsError(
                f"variance {var} must be below mean*(scale-mean)={bound}")
        var, clamped = 0.999 * bound, True
    mu = mean / scale
    v = var / scale ** 2
    common = mu * (1.0 - mu) / v - 1.0
    return BetaMeta(mu * common, (1.0 - mu) * common, float(scale), clamped)


def beta_meta(mean, m2, scale, xi_grid, clamp=False):
    """Beta-approximated CCDF ``P[CRR > xi]`` on ``xi_grid``."""
    return fit_beta_meta(mean, m2, scale, clamp=clamp).ccdf(xi_grid)


def meta_scale(access, scheme):
    """Normalization of the conditional rate: ``2 r_M`` for RSMA, ``r_M`` otherwise."""
    return 2.0 * scheme.max_rate if access == "rsma" else scheme.max_rate
