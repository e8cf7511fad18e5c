"""Real scalar spherical harmonics and their divergence-free vector companions.

The scalar harmonics used throughout are the real forms

    Y_mu^nu(x) = N(mu, nu) P_mu^nu(z) cos(nu lam),   nu = 0..mu,
    Y_mu^nu(x) = N(mu, nu) P_mu^nu(z) sin(-nu lam),  nu = -mu..-1,

with N(mu, nu) = sqrt((2 mu + 1)/(4 pi)) sqrt((mu - nu)!/(mu + nu)!),
longitude lam = atan2(y, x), z the third Cartesian coordinate, and
P_mu^nu the associated Legendre functions with the Condon-Shortley phase.
Negative orders resolve through P_mu^{-m} = (-1)^m (mu-m)!/(mu+m)! P_mu^m.
Note there is no sqrt(2) on the nu != 0 terms; expansions built on these
functions halve their nu = 0 term to compensate.

The divergence-free vector harmonics are w_mu^nu = Q(x) grad Y_mu^nu (the
rotated surface gradient).  In the meridional/zonal frame (a, b) their
components are

    G_mu^nu = a . w_mu^nu = (1/sin th) dY/dlam,
    H_mu^nu = b . w_mu^nu = dY/dth,

which we evaluate through degree recurrences on sin(th)-scaled normalized
Legendre functions.  That formulation has no pole singularities: at the
poles only |nu| = 1 survives, with the correct analytic limits.

Internally everything runs on fully normalized Legendre recurrences
(Holmes & Featherstone style), so degrees up to several hundred evaluate
without overflow of the unnormalized factorials.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .geom import sphere_point, tangent_frame

_FOUR_PI = 4.0 * np.pi


class HarmonicIndex(NamedTuple):
    """Degree/order pair with |nu| <= mu."""

    mu: int
    nu: int


def _check_index(idx, min_mu=0):
    mu, nu = int(idx[0]), int(idx[1])
    if mu < min_mu:
        raise ValueError(f"degree must be >= {min_mu}, got {mu}")
    if abs(nu) > mu:
        raise ValueError(f"order {nu} out of range for degree {mu}")
    return mu, nu


@dataclass(frozen=True)
class HarmonicEnumeration:
    """Ordered list of (mu, nu) indices: ascending mu, nu = -mu..mu within."""

    mu_min: int
    mu_max: int
    indices: tuple = field(repr=False)

    def __len__(self):
        return len(self.indices)

    def offset(self, mu):
        """Position of (mu, -mu) in the enumeration."""
        return mu * mu - self.mu_min * self.mu_min

    def position(self, mu, nu):
        mu, nu = _check_index((mu, nu), min_mu=self.mu_min)
        if mu > self.mu_max:
            raise ValueError(f"degree {mu} beyond enumeration maximum {self.mu_max}")
        return self.offset(mu) + nu + mu

    @property
    def degrees(self):
        """Degree of each enumerated harmonic, as an int array."""
        return np.repeat(
            np.arange(self.mu_min, self.mu_max + 1),
            [2 * mu + 1 for mu in range(self.mu_min, self.mu_max + 1)],
        )


def enumerate_harmonics(mu_min, mu_max):
    if mu_min not in (0, 1):
        raise ValueError("enumerations start at degree 0 or 1")
    if mu_max < mu_min:
        raise ValueError("mu_max must be >= mu_min")
    idx = tuple(
        HarmonicIndex(mu, nu)
        for mu in range(mu_min, mu_max + 1)
        for nu in range(-mu, mu + 1)
    )
    return HarmonicEnumeration(mu_min=mu_min, mu_max=mu_max, indices=idx)


def assoc_legendre(mu, nu, z):
    """Associated Legendre function P_mu^nu(z), Condon-Shortley phase.

    Evaluated by the stable upward recurrence in degree seeded from the
    closed-form diagonal P_nu^nu.  Orders must satisfy 0 <= nu <= mu;
    negative orders are handled by callers through the reflection identity.

    Raises
    ------
    ValueError
        If |z| exceeds 1 by more than 1e-12 (z is clamped inside that slack).
    """
    mu, nu = int(mu), int(nu)
    if nu < 0 or nu > mu:
        raise ValueError(f"order must satisfy 0 <= nu <= mu, got nu={nu}, mu={mu}")
    z = float(z)
    if abs(z) > 1.0 + 1e-12:
        raise ValueError(f"argument {z!r} outside [-1, 1]")
    z = min(1.0, max(-1.0, z))

    # diagonal seed P_nu^nu = (-1)^nu (2 nu - 1)!! (1 - z^2)^{nu/2}
    s2 = (1.0 - z) * (1.0 + z)
    p = 1.0
    for k in range(1, nu + 1):
        p *= -(2 * k - 1)
    p *= s2 ** (nu / 2.0)
    if mu == nu:
        return p
    p_prev = p
    p = z * (2 * nu + 1) * p_prev
    for deg in range(nu + 2, mu + 1):
        p, p_prev = (z * (2 * deg - 1) * p - (deg + nu - 1) * p_prev) / (deg - nu), p
    return p


def _tables(points, mu_max):
    """Normalized harmonic tables at a batch of points.

    Returns (S, G, H) where S has one row per (mu, nu) with mu >= 0 and
    G, H have one row per (mu, nu) with mu >= 1; columns index the points.
    S holds the scalar harmonics, G/H the meridional/zonal components of
    the divergence-free vector harmonics.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    npts = pts.shape[0]
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    s = np.hypot(x, y)
    lam = np.arctan2(y, x)

    n_scalar = (mu_max + 1) ** 2
    n_vec = mu_max * (mu_max + 2)
    S = np.zeros((n_scalar, npts))
    G = np.zeros((max(n_vec, 0), npts))
    H = np.zeros((max(n_vec, 0), npts))

    def sidx(mu, nu):
        return mu * mu + nu + mu

    def vidx(mu, nu):
        return mu * mu - 1 + nu + mu

    # order 0 chain: normalized Legendre polynomials A_mu^0
    a_prev2 = np.full(npts, 1.0 / np.sqrt(_FOUR_PI))
    S[0] = a_prev2
    if mu_max >= 1:
        a_prev = np.sqrt(3.0) * z * a_prev2
        S[sidx(1, 0)] = a_prev
        for mu in range(2, mu_max + 1):
            f = np.sqrt((4.0 * mu * mu - 1.0)) / mu
            g = (mu - 1.0) / np.sqrt(4.0 * (mu - 1.0) ** 2 - 1.0)
            a_cur = f * (z * a_prev - g * a_prev2)
            S[sidx(mu, 0)] = a_cur
            a_prev2, a_prev = a_prev, a_cur
        # G rows for nu = 0 are identically zero (no longitude dependence).

    # order m >= 1 chains run on T = A / sin(th), which stays finite at the
    # poles; the H rows for nu = 0 are filled during the m = 1 pass through
    # d/dth A_mu^0 = sqrt(mu (mu + 1)) A_mu^1.
    spow = np.ones(npts)  # s^(m-1)
    dfratio = 1.0  # (2m-1)!! / (2m)!!
    for m in range(1, mu_max + 1):
        dfratio *= (2.0 * m - 1.0) / (2.0 * m)
        sign = -1.0 if m % 2 else 1.0
        cosml = np.cos(m * lam)
        sinml = np.sin(m * lam)
        t_prev = np.zeros(npts)
        t_cur = sign * np.sqrt((2.0 * m + 1.0) / _FOUR_PI * dfratio) * spow
        for mu in range(m, mu_max + 1):
            if mu > m:
                if mu == m + 1:
                    t_next = np.sqrt(2.0 * m + 3.0) * z * t_cur
                else:
                    f = np.sqrt((4.0 * mu * mu - 1.0) / (mu * mu - m * m))
                    g = np.sqrt(((mu - 1.0) ** 2 - m * m) / (4.0 * (mu - 1.0) ** 2 - 1.0))
                    t_next = f * (z * t_cur - g * t_prev)
                t_prev, t_cur = t_cur, t_next
            amu = s * t_cur
            e = np.sqrt((mu * mu - m * m) * (2.0 * mu + 1.0) / (2.0 * mu - 1.0))
            dth = mu * z * t_cur - e * t_prev
            ip, im = sidx(mu, m), sidx(mu, -m)
            S[ip] = amu * cosml
            S[im] = sign * amu * sinml
            jp, jm = vidx(mu, m), vidx(mu, -m)
            G[jp] = -m * t_cur * sinml
            G[jm] = sign * m * t_cur * cosml
            H[jp] = dth * cosml
            H[jm] = sign * dth * sinml
            if m == 1:
                H[vidx(mu, 0)] = np.sqrt(mu * (mu + 1.0)) * amu
        spow = spow * s

    return S, G, H


def scalar_harmonic(idx, p):
    """Value of the real scalar harmonic Y_mu^nu at a sphere point."""
    mu, nu = _check_index(idx)
    p = sphere_point(p)
    S, _, _ = _tables(p[None, :], mu)
    return float(S[mu * mu + nu + mu, 0])


def divfree_components(idx, p):
    """Meridional and zonal components (G, H) of w_mu^nu at a point.

    Pole values are the analytic limits along the meridian whose frame
    matches the fixed pole frame; only |nu| = 1 is nonzero there.
    """
    mu, nu = _check_index(idx, min_mu=1)
    p = sphere_point(p)
    _, G, H = _tables(p[None, :], mu)
    j = mu * mu - 1 + nu + mu
    return float(G[j, 0]), float(H[j, 0])


def divfree_harmonic(idx, p):
    """The divergence-free vector harmonic w_mu^nu as a Cartesian 3-vector."""
    g, h = divfree_components(idx, p)
    fr = tangent_frame(p)
    return g * fr.a + h * fr.b


def harmonic_matrix(enumeration, points):
    """Divergence-free component matrix over an enumeration and point set.

    Row r is the r-th enumerated harmonic; for point k, column 2k holds the
    meridional components G and column 2k+1 the zonal components H.  Raw
    values: no coefficient scaling and no halving of the nu = 0 terms.
    """
    if enumeration.mu_min != 1:
        raise ValueError("divergence-free enumerations start at degree 1")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    _, G, H = _tables(pts, enumeration.mu_max)
    out = np.empty((len(enumeration), 2 * pts.shape[0]))
    out[:, 0::2] = G
    out[:, 1::2] = H
    return out


def scalar_harmonic_matrix(enumeration, points):
    """Scalar harmonic values: one row per enumerated (mu, nu), one column
    per point.  Same ordering conventions as :func:`harmonic_matrix`."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    S, _, _ = _tables(pts, enumeration.mu_max)
    return S[enumeration.mu_min * enumeration.mu_min:, :]
