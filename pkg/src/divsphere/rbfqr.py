"""Stable change of basis for divergence-free kernel interpolation.

The kernel's truncated vector-harmonic expansion factors the node-side
evaluation matrix as B E Y: B carries the expansion coefficients and the
harmonic components at the nodes, E is diagonal in even shape-parameter
powers eps^(2 mu), and Y holds the harmonic components at the evaluation
point.  Conditioning of the standard basis collapses as eps -> 0 entirely
because of E.

The stable basis removes E analytically.  A thin, unpivoted QR of B gives
R = [R1 | R2] with R1 the leading 2n-by-2n triangle (column pivoting is
deliberately avoided: the degree ordering of the columns is what makes
every surviving power of eps nonnegative).  The basis combination matrix
is then

    Bt = [I | (R1^-1 R2) o E~],   E~_{i,j} = eps^(2 (deg(col 2n+j) - deg(col i))),

a Hadamard product of an eps-free triangular solve with exact nonnegative
powers of eps.  No intermediate ever divides by a power of eps, so the
construction stays finite down to eps = 1e-10 and beyond.  Fitting reduces
to a square (generally unsymmetric) 2n-by-2n solve against Bt applied to
the harmonic components at the nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .geom import sphere_points, tangent_frames
from .harmonics import enumerate_harmonics, harmonic_matrix, scalar_harmonic_matrix
from .kernels import CoefficientTable, build_truncation_plan

_EVAL_CHUNK = 512
_UNISOLVENCY_TOL = 1e-13


class UnisolvencyError(RuntimeError):
    """The node set fails to determine the leading harmonic block."""


class SingularSystemError(RuntimeError):
    """The stable-basis fit matrix is numerically singular."""


def expansion_matrix(config, nodes, plan):
    """Node-side expansion matrix B: 2n rows, one column per harmonic.

    Row pair (2i, 2i+1) holds the meridional/zonal components at node i;
    the column for harmonic (mu, nu) is scaled by the expansion coefficient
    c_{mu,eps}, halved on nu = 0.  No eps^(2 mu) factors enter here.
    """
    nodes = sphere_points(nodes)
    enum = enumerate_harmonics(1, plan.mu_trunc)
    table = CoefficientTable.build(config, plan.mu_trunc)
    weights = table.values[enum.degrees].astype(float)
    nu = np.array([idx.nu for idx in enum.indices])
    weights[nu == 0] *= 0.5
    ym = harmonic_matrix(enum, nodes)  # (m, 2n)
    return (weights[:, None] * ym).T


def epsilon_exponents(plan, n):
    """Integer exponent matrix of the Hadamard eps-power factor.

    Entry (i, j) is 2 (deg(col 2n+j) - deg(col i)) from the degree ordering
    of the expansion columns.  All entries are nonnegative because column
    degrees are nondecreasing; when 2n coincides with a full degree block
    boundary this reduces to the constant-by-block pattern, and otherwise
    same-degree row/column pairs get exponent zero.
    """
    if plan.m < 2 * n:
        raise ValueError("truncation plan is too small for this node count")
    deg = plan.degree_of_column
    lead = deg[: 2 * n]
    trail = deg[2 * n:]
    return 2 * (trail[None, :] - lead[:, None]).astype(np.int64)


@dataclass(frozen=True)
class StableBasis:
    """Stable combination matrix plus everything needed to evaluate it."""

    config: object
    nodes: np.ndarray = field(repr=False)
    plan: object
    enumeration: object = field(repr=False)
    bt: np.ndarray = field(repr=False)
    rcond_r1: float = np.nan

    def __len__(self):
        return self.bt.shape[0]


def build_stable_basis(config, nodes, tol=1e-16, mu_max=300):
    """Construct the stable basis for a node set.

    Raises
    ------
    UnisolvencyError
        When the leading triangle of the QR factor collapses relative to
        its column scales, signalling a degenerate node set.
    """
    nodes = sphere_points(nodes)
    n = nodes.shape[0]
    plan = build_truncation_plan(config, n, tol=tol, mu_max=mu_max)
    enum = enumerate_harmonics(1, plan.mu_trunc)
    b = expansion_matrix(config, nodes, plan)

    _, r = scipy.linalg.qr(b, mode="economic", pivoting=False)
    r1 = r[:, : 2 * n]
    r2 = r[:, 2 * n:]

    # Unisolvency guard: |R1_kk| measured against the k-th column's own
    # scale, so coefficient decay across degrees cannot mask (or fake) a
    # genuinely dependent column.
    colnorm = np.linalg.norm(b[:, : 2 * n], axis=0)
    decay = np.abs(np.diag(r1)) / np.where(colnorm > 0, colnorm, 1.0)
    if np.min(decay) < _UNISOLVENCY_TOL:
        k = int(np.argmin(decay))
        raise UnisolvencyError(
            f"node set is not unisolvent through degree {plan.mu0} "
            f"(column {k} decay {decay[k]:.2e})"
        )
    rcond, info = scipy.linalg.lapack.dtrcon(r1, norm="1", uplo="U", diag="N")
    rcond = float(rcond) if info == 0 else 0.0

    if r2.shape[1] > 0:
        x = scipy.linalg.solve_triangular(r1, r2)
        expo = epsilon_exponents(plan, n)
        with np.errstate(under="ignore"):
            powers = np.power(config.epsilon, expo.astype(float))
        powers[expo == 0] = 1.0
        trailing = x * powers
    else:
        trailing = np.zeros((2 * n, 0))
    bt = np.hstack([np.eye(2 * n), trailing])
    return StableBasis(
        config=config, nodes=nodes, plan=plan, enumeration=enum,
        bt=bt, rcond_r1=rcond,
    )


def basis_eval(basis, x):
    """Tangent-frame components of every stable basis function at a point.

    Returns a (2n, 2) array: row k holds the meridional/zonal components of
    the k-th basis function at x.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    ym = harmonic_matrix(basis.enumeration, pts)
    return basis.bt @ ym if pts.shape[0] > 1 else basis.bt @ ym[:, :2]


@dataclass(frozen=True)
class QRInterpolant:
    """Coefficients in the stable basis plus fit diagnostics."""

    basis: StableBasis
    coeffs: np.ndarray = field(repr=False)
    residual: float = 0.0
    # coefficients pushed through Bt once, so evaluation is a single dot
    # against raw harmonic components
    _weights: np.ndarray = field(repr=False, default=None)

    @property
    def config(self):
        return self.basis.config


def fit_qr(basis, samples):
    """Interpolate samples given on the basis nodes (same ordering).

    The fit matrix stacks ``basis_eval`` at each node; the change of basis
    destroys symmetry, so the square system is solved with partial
    pivoting.  Raises :class:`SingularSystemError` if the factorization
    reports exact singularity.
    """
    if samples.nodes.shape != basis.nodes.shape or np.max(
        np.abs(samples.nodes - basis.nodes)
    ) > 1e-12:
        raise ValueError("samples must live on the basis nodes, in order")
    ym = harmonic_matrix(basis.enumeration, basis.nodes)  # (m, 2n)
    fit_matrix = (basis.bt @ ym).T
    rhs = samples.comps.reshape(-1)
    try:
        lu, piv = scipy.linalg.lu_factor(fit_matrix)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError(f"stable-basis fit failed: {exc}") from None
    if np.any(np.diag(lu) == 0.0):
        raise SingularSystemError("stable-basis fit matrix is singular")
    coeffs = scipy.linalg.lu_solve((lu, piv), rhs)
    residual = float(np.max(np.abs(fit_matrix @ coeffs - rhs)))
    weights = basis.bt.T @ coeffs
    return QRInterpolant(basis=basis, coeffs=coeffs, residual=residual, _weights=weights)


def eval_qr(interp, x):
    """Evaluate the stable-basis interpolant at one point or many points.

    Works entirely in the stable representation: the harmonic components at
    x are contracted against Bt^T coeffs, then expanded in the local
    tangent frame.  Kernel coefficients are never reconstructed.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    comps = np.empty((pts.shape[0], 2))
    for lo in range(0, pts.shape[0], _EVAL_CHUNK):
        hi = min(lo + _EVAL_CHUNK, pts.shape[0])
        ym = harmonic_matrix(interp.basis.enumeration, pts[lo:hi])
        vals = interp._weights @ ym  # (2*chunk,)
        comps[lo:hi, 0] = vals[0::2]
        comps[lo:hi, 1] = vals[1::2]
    a, b = tangent_frames(pts)
    out = comps[:, :1] * a + comps[:, 1:] * b
    return out[0] if np.asarray(x).ndim == 1 else out


def stream_qr(interp, x):
    """Stream function of the stable-basis interpolant.

    Each basis function is a fixed combination of divergence-free vector
    harmonics, and each of those is the rotated surface gradient of the
    matching scalar harmonic; the interpolant's stream function is therefore
    the same Bt combination applied to raw scalar harmonic values.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    psi = np.empty(pts.shape[0])
    for lo in range(0, pts.shape[0], _EVAL_CHUNK):
        hi = min(lo + _EVAL_CHUNK, pts.shape[0])
        sm = scalar_harmonic_matrix(interp.basis.enumeration, pts[lo:hi])
        psi[lo:hi] = interp._weights @ sm
    return float(psi[0]) if np.asarray(x).ndim == 1 else psi
