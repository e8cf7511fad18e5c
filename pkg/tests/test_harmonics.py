import math

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss
from numpy.testing import assert_allclose

from divsphere import geom, harmonics

from conftest import (
    great_circle_derivative,
    neville_extrapolate,
    random_sphere_points,
)

SQRT_4PI = np.sqrt(4.0 * np.pi)


# ---------------------------------------------------------------------------
# associated Legendre functions


def test_assoc_legendre_degree_one():
    for z in (-1.0, 0.0, 0.5):
        assert harmonics.assoc_legendre(1, 0, z) == pytest.approx(z, abs=1e-15)
    # Condon-Shortley phase: P_1^1(0) = -1
    assert harmonics.assoc_legendre(1, 1, 0.0) == pytest.approx(-1.0, abs=1e-15)


def test_assoc_legendre_against_high_precision_recurrence():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 50

    def oracle(mu, nu, z):
        z = mpmath.mpf(z)
        s2 = (1 - z) * (1 + z)
        p = mpmath.mpf(1)
        for k in range(1, nu + 1):
            p *= -(2 * k - 1)
        p *= s2 ** (mpmath.mpf(nu) / 2)
        if mu == nu:
            return p
        p_prev, p = p, z * (2 * nu + 1) * p
        for deg in range(nu + 2, mu + 1):
            p, p_prev = (z * (2 * deg - 1) * p - (deg + nu - 1) * p_prev) / (deg - nu), p
        return p

    assert harmonics.assoc_legendre(5, 3, 0.3) == pytest.approx(
        float(oracle(5, 3, 0.3)), rel=1e-13)
    rng = np.random.default_rng(11)
    for _ in range(25):
        mu = int(rng.integers(0, 12))
        nu = int(rng.integers(0, mu + 1))
        z = float(rng.uniform(-1, 1))
        assert harmonics.assoc_legendre(mu, nu, z) == pytest.approx(
            float(oracle(mu, nu, z)), rel=1e-13, abs=1e-300)


def test_assoc_legendre_domain():
    with pytest.raises(ValueError):
        harmonics.assoc_legendre(2, 0, 1.001)
    with pytest.raises(ValueError):
        harmonics.assoc_legendre(2, 3, 0.0)
    # values inside the 1e-12 slack are clamped, not rejected
    assert harmonics.assoc_legendre(2, 0, 1.0 + 1e-13) == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# scalar harmonics


def test_scalar_harmonic_constant_mode(rng):
    for p in random_sphere_points(rng, 5):
        assert harmonics.scalar_harmonic((0, 0), p) == pytest.approx(1.0 / SQRT_4PI)


def test_scalar_harmonic_degree_one_pole():
    val = harmonics.scalar_harmonic((1, 0), [0.0, 0.0, 1.0])
    assert val == pytest.approx(np.sqrt(3.0 / (4.0 * np.pi)))


def test_scalar_harmonic_longitude_dependence():
    # Y_2^1 varies with longitude only through cos(lam)
    z = 0.4
    s = np.sqrt(1 - z * z)
    vals = {}
    for lam in (0.25, -0.25, 2 * np.pi - 0.25):
        p = [s * np.cos(lam), s * np.sin(lam), z]
        vals[lam] = harmonics.scalar_harmonic((2, 1), p)
    assert vals[0.25] == pytest.approx(vals[-0.25], rel=1e-14)
    assert vals[0.25] == pytest.approx(vals[2 * np.pi - 0.25], rel=1e-14)


def test_scalar_harmonic_negative_order_reflection():
    # verbatim negative-order branch equals the reflected positive-order form
    p = geom.sphere_point(np.array([0.48, -0.6, 0.64]) / np.linalg.norm([0.48, -0.6, 0.64]))
    lam = np.arctan2(p[1], p[0])
    for mu, m in [(3, 1), (5, 4), (8, 8)]:
        norm = np.sqrt((2 * mu + 1) / (4 * np.pi)
                       * math.factorial(mu - m) / math.factorial(mu + m))
        expected = (-1) ** m * norm * harmonics.assoc_legendre(mu, m, p[2]) * np.sin(m * lam)
        assert harmonics.scalar_harmonic((mu, -m), p) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_zonal_invariance(rng):
    # the halved sum over orders depends on x.y only: invariant under rotations
    x, y = random_sphere_points(rng, 2)
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.linalg.det(q))
    for mu_probe in (1, 3, 7):
        enum = harmonics.enumerate_harmonics(0, mu_probe)
        nu = np.array([i.nu for i in enum.indices])
        halve = np.where(nu == 0, 0.5, 1.0)
        deg = enum.degrees

        def halved(a, b):
            sa = harmonics.scalar_harmonic_matrix(enum, a[None, :])[:, 0]
            sb = harmonics.scalar_harmonic_matrix(enum, b[None, :])[:, 0]
            return np.sum((halve * sa * sb)[deg == mu_probe])

        assert halved(x, y) == pytest.approx(halved(q @ x, q @ y), abs=1e-12)


# ---------------------------------------------------------------------------
# divergence-free vector harmonics


def test_divfree_components_degree_one_example():
    g, h = harmonics.divfree_components((1, 0), [1.0, 0.0, 0.0])
    assert g == 0.0
    assert h == pytest.approx(-np.sqrt(3.0 / (4.0 * np.pi)))


def test_divfree_harmonic_solid_rotation():
    w = harmonics.divfree_harmonic((1, 0), [1.0, 0.0, 0.0])
    assert_allclose(w, -np.sqrt(3.0 / (4.0 * np.pi)) * np.array([0, 1, 0]), atol=1e-15)


def test_divfree_harmonic_tangent(rng):
    for p in random_sphere_points(rng, 20):
        mu = int(rng.integers(1, 7))
        nu = int(rng.integers(-mu, mu + 1))
        w = harmonics.divfree_harmonic((mu, nu), p)
        assert abs(p @ w) < 1e-12 * max(1.0, np.linalg.norm(w))


def test_divfree_components_match_finite_differences(rng):
    # G = d_b Y and H = -d_a Y along great circles
    worst = 0.0
    pts = random_sphere_points(rng, 100)
    for k, p in enumerate(pts):
        mu = 1 + k % 8
        nu = int(rng.integers(-mu, mu + 1))
        fr = geom.tangent_frame(p)

        def y(q, mu=mu, nu=nu):
            return harmonics.scalar_harmonic((mu, nu), q)

        g_fd = great_circle_derivative(y, p, fr.b, h=1e-5)
        h_fd = -great_circle_derivative(y, p, fr.a, h=1e-5)
        g, h = harmonics.divfree_components((mu, nu), p)
        worst = max(worst, abs(g - g_fd), abs(h - h_fd))
    assert worst < 1e-6


def test_divfree_surface_divergence_free(rng):
    # flux through small geodesic circles vanishes (line-integral oracle)
    c = random_sphere_points(rng, 1)[0]
    e1 = np.cross(c, [0.0, 0.0, 1.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(c, e1)
    nt = 256
    t = 2 * np.pi * np.arange(nt) / nt
    for rho in (0.2, 0.7):
        ring = np.cos(rho) * c + np.sin(rho) * (np.cos(t)[:, None] * e1 + np.sin(t)[:, None] * e2)
        conormal = -np.sin(rho) * c + np.cos(rho) * (np.cos(t)[:, None] * e1 + np.sin(t)[:, None] * e2)
        for idx in [(1, 0), (3, 2), (5, -4)]:
            w = np.array([harmonics.divfree_harmonic(idx, p) for p in ring])
            flux = np.sum(np.sum(w * conormal, axis=1)) * (2 * np.pi / nt) * np.sin(rho)
            assert abs(flux) < 1e-12


def test_divfree_pole_limits():
    # values at the poles equal the limits along the matching meridian
    thetas = [1e-3 / 2 ** j for j in range(5)]
    for sgn in (1.0, -1.0):
        pole = np.array([0.0, 0.0, sgn])
        for mu in range(1, 9):
            for nu in range(-mu, mu + 1):
                approach = []
                for th in thetas:
                    p = np.array([np.sin(th), 0.0, sgn * np.cos(th)])
                    approach.append(harmonics.divfree_components((mu, nu), p))
                lim = neville_extrapolate(thetas, approach)
                val = harmonics.divfree_components((mu, nu), pole)
                assert_allclose(val, lim, atol=1e-8)
                if abs(nu) != 1:
                    assert val == (0.0, 0.0)


def test_gram_matrix_diagonal():
    # product Gauss-Legendre x trapezoid rule, exact for the polynomial
    # integrands of degree <= 2 mu_max
    mu_max = 5
    nz = 2 * mu_max + 1
    nlon = 4 * mu_max + 4
    zq, wq = leggauss(nz)
    lam = 2 * np.pi * np.arange(nlon) / nlon
    zz, ll = np.meshgrid(zq, lam, indexing="ij")
    ss = np.sqrt(1.0 - zz ** 2)
    pts = np.stack([ss * np.cos(ll), ss * np.sin(ll), zz], axis=-1).reshape(-1, 3)
    wts = np.repeat(wq, nlon) * (2 * np.pi / nlon)

    enum = harmonics.enumerate_harmonics(1, mu_max)
    ym = harmonics.harmonic_matrix(enum, pts)
    g, h = ym[:, 0::2], ym[:, 1::2]
    gram = (g * wts) @ g.T + (h * wts) @ h.T
    diag = np.diag(gram).copy()
    off = gram - np.diag(diag)
    assert np.max(np.abs(off)) < 1e-12
    assert np.all(diag > 0)
    # quadrature fixes the diagonal itself: mu (mu + 1), halved off the
    # zonal order by this basis convention
    nu = np.array([i.nu for i in enum.indices])
    mus = enum.degrees
    expected = mus * (mus + 1) * np.where(nu == 0, 1.0, 0.5)
    assert_allclose(diag, expected, rtol=1e-12)


# ---------------------------------------------------------------------------
# matrices and enumerations


def test_harmonic_matrix_shape_and_entries():
    enum = harmonics.enumerate_harmonics(1, 1)
    pt = np.array([[1.0, 0.0, 0.0]])
    ym = harmonics.harmonic_matrix(enum, pt)
    assert ym.shape == (3, 2)
    row = enum.position(1, 0)
    assert ym[row, 0] == 0.0
    assert ym[row, 1] == pytest.approx(-0.4886025119029199)


def test_harmonic_matrix_identical_points():
    enum = harmonics.enumerate_harmonics(1, 4)
    p = geom.hammersley_nodes(3)[1]
    ym = harmonics.harmonic_matrix(enum, np.array([p, p]))
    assert np.array_equal(ym[:, 0:2], ym[:, 2:4])


def test_harmonic_matrix_consistent_with_scalar_ops(rng):
    enum = harmonics.enumerate_harmonics(1, 6)
    pts = random_sphere_points(rng, 4)
    ym = harmonics.harmonic_matrix(enum, pts)
    sm = harmonics.scalar_harmonic_matrix(enum, pts)
    for k, p in enumerate(pts):
        for j in (0, 7, 20, len(enum) - 1):
            mu, nu = enum.indices[j]
            g, h = harmonics.divfree_components((mu, nu), p)
            assert ym[j, 2 * k] == pytest.approx(g, abs=1e-14)
            assert ym[j, 2 * k + 1] == pytest.approx(h, abs=1e-14)
            assert sm[j, k] == pytest.approx(
                harmonics.scalar_harmonic((mu, nu), p), abs=1e-14)


def test_enumeration_ordering_and_length():
    enum = harmonics.enumerate_harmonics(1, 4)
    assert len(enum) == 4 * 6  # mu_max (mu_max + 2)
    assert enum.indices[0] == (1, -1)
    assert enum.indices[3] == (2, -2)
    nus = [i.nu for i in enum.indices if i.mu == 3]
    assert nus == list(range(-3, 4))
    with pytest.raises(ValueError):
        harmonics.enumerate_harmonics(2, 5)


def test_index_validation():
    with pytest.raises(ValueError):
        harmonics.scalar_harmonic((2, 3), [1, 0, 0])
    with pytest.raises(ValueError):
        harmonics.divfree_components((0, 0), [1, 0, 0])
