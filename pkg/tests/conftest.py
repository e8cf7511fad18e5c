import numpy as np
import pytest

from divsphere import (
    KernelConfig,
    build_truncation_plan,
    enumerate_harmonics,
    harmonic_matrix,
    scalar_harmonic_matrix,
    scaled_expansion_coeff,
    tangent_frame,
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_sphere_points(rng, k):
    v = rng.normal(size=(k, 3))
    return v / np.linalg.norm(v, axis=1)[:, None]


def random_tangent(rng, p):
    """Unit tangent vector at p."""
    v = np.cross(p, rng.normal(size=3))
    return v / np.linalg.norm(v)


def great_circle_derivative(f, p, direction, h=1e-4):
    """Central difference of a scalar function along a great circle."""
    plus = np.cos(h) * p + np.sin(h) * direction
    minus = np.cos(h) * p - np.sin(h) * direction
    return (f(plus / np.linalg.norm(plus)) - f(minus / np.linalg.norm(minus))) / (2 * h)


def rotated_gradient(f, p, h=1e-4):
    """On-sphere finite-difference approximation of Q(p) grad f.

    Uses Q(p) grad f = (d_b f) a - (d_a f) b in the local tangent frame.
    """
    fr = tangent_frame(p)
    da = great_circle_derivative(f, p, fr.a, h)
    db = great_circle_derivative(f, p, fr.b, h)
    return db * fr.a - da * fr.b


def expansion_weights(config, enum, halve_zonal=True):
    """Scaled expansion coefficients per enumerated harmonic column."""
    w = np.array([scaled_expansion_coeff(config, mu)
                  for mu in range(enum.mu_max + 1)])
    out = w[enum.degrees].astype(float)
    if halve_zonal:
        nu = np.array([idx.nu for idx in enum.indices])
        out[nu == 0] *= 0.5
    return out


def mercer_scalar_sum(config, x, y):
    """Truncated zonal expansion of phi(|x - y|) through the harmonics."""
    plan = build_truncation_plan(config, n=1)
    enum = enumerate_harmonics(0, plan.mu_trunc)
    sx = scalar_harmonic_matrix(enum, x[None, :])[:, 0]
    sy = scalar_harmonic_matrix(enum, y[None, :])[:, 0]
    return float(np.sum(expansion_weights(config, enum) * sx * sy))


def expansion_kernel_block(config, x, y):
    """Truncated vector-harmonic expansion of the 2x2 tangent-frame kernel
    block: the independent route against the analytic Hessian assembly."""
    plan = build_truncation_plan(config, n=1)
    enum = enumerate_harmonics(1, plan.mu_trunc)
    yx = harmonic_matrix(enum, x[None, :])
    yy = harmonic_matrix(enum, y[None, :])
    w = expansion_weights(config, enum)
    gx, hx = yx[:, 0], yx[:, 1]
    gy, hy = yy[:, 0], yy[:, 1]
    return np.array([
        [np.sum(w * gx * gy), np.sum(w * gx * hy)],
        [np.sum(w * hx * gy), np.sum(w * hx * hy)],
    ])


def neville_extrapolate(xs, ys):
    """Polynomial extrapolation of samples ys(xs) to x = 0."""
    ys = [np.asarray(y, dtype=float).copy() for y in ys]
    n = len(xs)
    for k in range(1, n):
        for i in range(n - k):
            ys[i] = (xs[i + k] * ys[i] - xs[i] * ys[i + 1]) / (xs[i + k] - xs[i])
    return ys[0]


ALL_KERNELS = ("mq", "imq", "iq", "ga")
SPD_KERNELS = ("imq", "iq", "ga")  # mq yields a negative definite system


def make_config(kind, eps):
    return KernelConfig(kind, eps)


# ---------------------------------------------------------------------------
# extended-precision Legendre projection oracle
#
# Scaled expansion coefficients decay below 1e-12 by degree 20, so a float64
# quadrature cannot certify them to 1e-10 relative accuracy; the oracle runs
# in mpmath with its own kernel formulas and its own Gauss-Legendre rule.

_GL_CACHE = {}


def _mp_gauss_legendre(order, dps=40):
    import mpmath

    key = (order, dps)
    if key in _GL_CACHE:
        return _GL_CACHE[key]
    with mpmath.workdps(dps):
        seeds, _ = np.polynomial.legendre.leggauss(order)
        nodes, weights = [], []
        for seed in seeds:
            x = mpmath.mpf(float(seed))
            for _ in range(4):  # Newton refinement of the float64 seed
                p_prev, p_cur = mpmath.mpf(1), x
                for k in range(2, order + 1):
                    p_prev, p_cur = p_cur, ((2 * k - 1) * x * p_cur - (k - 1) * p_prev) / k
                dp = order * (x * p_cur - p_prev) / (x * x - 1)
                x = x - p_cur / dp
            p_prev, p_cur = mpmath.mpf(1), x
            for k in range(2, order + 1):
                p_prev, p_cur = p_cur, ((2 * k - 1) * x * p_cur - (k - 1) * p_prev) / k
            dp = order * (x * p_cur - p_prev) / (x * x - 1)
            nodes.append(x)
            weights.append(2 / ((1 - x * x) * dp * dp))
    _GL_CACHE[key] = (nodes, weights)
    return nodes, weights


def _mp_phi(kind, eps, r2):
    """Kernel value from its defining expression, in mp arithmetic; r2 is
    the squared distance."""
    import mpmath

    u = mpmath.mpf(eps) ** 2 * r2
    if kind == "mq":
        return mpmath.sqrt(1 + u)
    if kind == "imq":
        return 1 / mpmath.sqrt(1 + u)
    if kind == "iq":
        return 1 / (1 + u)
    return mpmath.exp(-u)


def legendre_projection_oracle(kind, eps, mu_max, order=140, dps=55):
    """Raw Legendre coefficients (2 mu + 1)/2 int phi(sqrt(2-2t)) P_mu(t) dt
    for mu = 0..mu_max, as floats accurate to far below 1e-10 relative."""
    import mpmath

    with mpmath.workdps(dps):
        nodes, weights = _mp_gauss_legendre(order, dps)
        vals = [w * _mp_phi(kind, eps, 2 - 2 * x) for x, w in zip(nodes, weights)]
        p_prev = [mpmath.mpf(1)] * len(nodes)
        p_cur = list(nodes)
        out = [mpmath.fsum(v * p for v, p in zip(vals, p_prev)) / 2]
        if mu_max >= 1:
            out.append(3 * mpmath.fsum(v * p for v, p in zip(vals, p_cur)) / 2)
        for mu in range(2, mu_max + 1):
            p_prev, p_cur = p_cur, [
                ((2 * mu - 1) * x * pc - (mu - 1) * pp) / mu
                for x, pc, pp in zip(nodes, p_cur, p_prev)
            ]
            out.append((2 * mu + 1) * mpmath.fsum(v * p for v, p in zip(vals, p_cur)) / 2)
        return [float(v) for v in out]


def quadrature_scaled_coefficients(kind, eps, mu_max):
    """Scaled coefficients c eps^(2 mu) from the projection oracle; the
    expansion constant is calibrated at degrees 0 and 1 (checked for
    consistency) instead of assumed."""
    proj = legendre_projection_oracle(kind, eps, mu_max)
    cfg = KernelConfig(kind, eps)
    k0 = proj[0] / scaled_expansion_coeff(cfg, 0)
    k1 = proj[1] / (3.0 * scaled_expansion_coeff(cfg, 1))
    assert abs(k0 - k1) <= 1e-10 * abs(k0), "calibration degrees disagree"
    slope = 0.5 * (k0 + k1)
    return np.array([proj[mu] / (slope * (2 * mu + 1)) for mu in range(mu_max + 1)])
