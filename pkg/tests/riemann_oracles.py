"""Dense fixed-grid reference integrals in the original distance variables.

These deliberately avoid the adaptive machinery and the variable changes of
the analytic module: every integral is a composite trapezoid or Simpson sum
on a uniform grid over the physical distances, with the ordered intra-cell
region summed cell by cell.
"""

import math

import numpy as np
from scipy.integrate import simpson

B1, B2 = 1.25, 2.4


def link_factor(rho_eta, a, k):
    """``prod_t (1 + a_t rho^eta)^(-k_t)`` for an array ``rho_eta``."""
    out = np.ones_like(rho_eta)
    for at, kt in zip(np.atleast_1d(a), np.atleast_1d(k)):
        out = out * (1.0 + at * rho_eta) ** (-kt)
    return out


def _tail_radius(r, lam, b1=B1, eps=1e-17):
    # exp(-b1 lam pi (s^2 - r^2)) < eps beyond s
    return math.sqrt(r * r - math.log(eps) / (b1 * lam * math.pi))


def intra_one(r, a, k, lam, eta, m=200_001):
    """``E[h(r/R) | R > r]`` for one farther UE, Simpson over ``s in [r, s_max]``."""
    s = np.linspace(r, _tail_radius(r, lam), m)
    pdf = 2 * B1 * math.pi * lam * s * np.exp(-B1 * lam * math.pi * (s * s - r * r))
    return simpson(link_factor((r / s) ** eta, a, k) * pdf, x=s)


def intra_ordered_two(r, a, k, lam, eta, m=2000):
    """Two farther UEs: ``2! e^{2 B1 lam pi r^2} int_{r<=s1<=s2} prod h f`` on an m x m grid.

    Trapezoid on the triangle (half weight on the diagonal), refined once
    and Richardson-extrapolated.
    """
    def level(m):
        s = np.linspace(r, _tail_radius(r, lam, eps=1e-12), m + 1)
        h = s[1] - s[0]
        g = link_factor((r / s) ** eta, a, k) * 2 * B1 * math.pi * lam * s \
            * np.exp(-B1 * lam * math.pi * (s * s - r * r))
        w = np.full(m + 1, h)
        w[0] = w[-1] = h / 2
        gw = g * w
        full = np.outer(gw, gw)
        i, j = np.indices(full.shape)
        tri = np.where(j > i, full, 0.0).sum() + 0.5 * np.trace(full)
        return 2.0 * tri

    coarse, fine = level(m), level(2 * m)
    return fine + (fine - coarse) / 3.0


def inter_pgfl(r, a, k, lam, N, eta, m=400_001):
    """``exp(-2 pi lam int_0^inf Q(r, x) dx)`` with the cluster-field kernel ``Q``.

    ``Q = [1 - prod_t (1 + a_t x^-eta)^(-N k_t)] (1 - exp(-B2 lam pi x^2 r^2)) x r^2``,
    summed by the trapezoid rule in ``ln x`` over ``[1e-8, 1e10]``.
    """
    u = np.linspace(math.log(1e-8), math.log(1e10), m)
    x = np.exp(u)
    one_minus_h = 1.0 - link_factor(x ** -eta, a, np.asarray(k, dtype=float) * N)
    q = one_minus_h * -np.expm1(-B2 * lam * math.pi * x * x * r * r) * x * r * r
    return math.exp(-2 * math.pi * lam * np.trapezoid(q * x, u))


def ordered_pdf(r, n, N, lam):
    from scipy.special import beta as beta_fn
    c = B1 * lam * math.pi * r * r
    return (2 * B1 * lam * math.pi * r * (-np.expm1(-c)) ** (n - 1) * np.exp(-c * (N - n + 1))
            / beta_fn(N - n + 1, n))


def expected_product(a, k, lam, N, n, eta, sigma2=0.0, m_outer=1201, m_intra=20_001, m_inter=40_001):
    """Spatial average of one product of conditional terms for ``N - n <= 1``.

    Simpson over ``r``; at each abscissa the intra-cell and inter-cell
    factors are themselves dense sums.
    """
    if N - n > 1:
        raise ValueError("nested reference limited to one farther UE")
    r_max = math.sqrt(-math.log(1e-16) / (B1 * lam * math.pi))
    r = np.linspace(0.0, r_max, m_outer)
    vals = np.empty_like(r)
    a = np.atleast_1d(a)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    for i, ri in enumerate(r):
        if ri == 0.0:
            vals[i] = 0.0 if n > 1 else ordered_pdf(ri, n, N, lam)
            continue
        v = ordered_pdf(ri, n, N, lam) * math.exp(-sigma2 * ri ** eta * float(np.sum(k * a)))
        if N > n:
            v *= intra_one(ri, a, k, lam, eta, m=m_intra)
        v *= inter_pgfl(ri, a, k, lam, N, eta, m=m_inter)
        vals[i] = v
    return simpson(vals, x=r)
