"""Divergence-free interpolation by direct solve of the kernel system.

The matrix-valued divergence-free kernel is

    K(x, y) = Q(x) (grad grad^T phi(|x - y|)) Q(y),

where Q(p) v = p x v.  Applied to a vector tangent at y it produces a field
tangent and surface divergence-free in x.  Writing coefficients and data in
the per-node tangent frames reduces the fit to a symmetric 2n-by-2n system;
its blocks are

    block(i, j) = [a_i b_i]^T K(y_i, y_j) [a_j b_j]
                = -(F(r) C_i C_j^T + G2(r) (C_i d)(C_j d)^T),

with d = y_i - y_j, (F, G2) the kernel Hessian radial factors, and
C_p = [(a x p)^T; (b x p)^T] the frame rows crossed with their base point.

The system is sign-definite: positive definite for the imq/iq/ga kernels
and negative definite for mq (whose expansion coefficients are negative
beyond degree zero).  The solver factors whichever sign is definite and
raises when neither Cholesky succeeds, which is the expected signal of
shape-parameter ill-conditioning in double precision.

A stream function for the fitted field comes from the same coefficients:
psi(x) = sum_j F(r_j) (x - y_j) . (y_j x c_j).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .geom import sphere_point, sphere_points, tangent_frame, tangent_frames
from .kernels import radial_factors

_CHUNK = 512
_MIN_NODE_SEPARATION = 1e-10


class NotDefiniteError(RuntimeError):
    """Neither sign of the symmetric system admits a Cholesky factorization.

    For well-separated nodes this signals shape-parameter ill-conditioning:
    the system has become numerically indefinite in double precision.
    """


@dataclass(frozen=True)
class TangentFieldSamples:
    """Scattered samples of a tangential field in frame components.

    ``nodes`` is (n, 3); ``comps`` is (n, 2) holding the meridional and
    zonal components (gamma_i, delta_i) of the sampled vectors.
    """

    nodes: np.ndarray = field(repr=False)
    comps: np.ndarray = field(repr=False)

    def __post_init__(self):
        nodes = sphere_points(self.nodes)
        comps = np.atleast_2d(np.asarray(self.comps, dtype=float))
        if comps.shape != (nodes.shape[0], 2):
            raise ValueError(
                f"components shape {comps.shape} does not match {nodes.shape[0]} nodes"
            )
        d2 = np.sum((nodes[:, None, :] - nodes[None, :, :]) ** 2, axis=-1)
        np.fill_diagonal(d2, np.inf)
        if np.min(d2) <= _MIN_NODE_SEPARATION ** 2:
            i, j = np.unravel_index(np.argmin(d2), d2.shape)
            raise ValueError(f"nodes {i} and {j} coincide (separation <= {_MIN_NODE_SEPARATION})")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "comps", comps)

    @classmethod
    def from_vectors(cls, nodes, vectors):
        """Project Cartesian sample vectors onto the node tangent frames."""
        nodes = sphere_points(nodes)
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        A, B = tangent_frames(nodes)
        comps = np.stack([np.sum(A * vectors, axis=1), np.sum(B * vectors, axis=1)], axis=1)
        return cls(nodes=nodes, comps=comps)

    def __len__(self):
        return self.nodes.shape[0]


def _frame_cross(points):
    """Rows (a x p, b x p) per point: the 2x3 factors C_p above."""
    A, B = tangent_frames(points)
    return np.stack([np.cross(A, points), np.cross(B, points)], axis=1)


def kernel_block(config, x, yj):
    """2x2 tangent-frame block of the divergence-free kernel at (x, yj)."""
    x = sphere_point(x)
    yj = sphere_point(yj)
    cx = _frame_cross(x[None, :])[0]
    cy = _frame_cross(yj[None, :])[0]
    d = x - yj
    f, g2 = radial_factors(config, np.sqrt(d @ d))
    return -(f * (cx @ cy.T) + g2 * np.outer(cx @ d, cy @ d))


def assemble_system(config, nodes):
    """Full 2n-by-2n tangent-frame interpolation matrix.

    Block (i, j) equals ``kernel_block(nodes[i], nodes[j])``; the result is
    symmetric to rounding and sign-definite for the supported kernels.
    """
    nodes = sphere_points(nodes)
    n = nodes.shape[0]
    C = _frame_cross(nodes)
    d = nodes[:, None, :] - nodes[None, :, :]
    r = np.sqrt(np.sum(d * d, axis=-1))
    f, g2 = radial_factors(config, r)
    E = np.einsum("ipa,jqa->ipjq", C, C)
    Cd_i = np.einsum("ipa,ija->ipj", C, d)   # (C_i d_ij)_p
    Cd_j = np.einsum("jqa,ija->ijq", C, d)   # (C_j d_ij)_q
    A = -(f[:, None, :, None] * E
          + g2[:, None, :, None] * Cd_i[:, :, :, None] * Cd_j[:, None, :, :])
    return A.reshape(2 * n, 2 * n)


@dataclass(frozen=True)
class DirectInterpolant:
    """Fitted direct interpolant: frame coefficients plus fit diagnostics."""

    config: object
    nodes: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)
    residual: float = 0.0
    cond_estimate: float = np.nan
    definite_sign: int = 1


def fit_direct(config, samples):
    """Solve the tangent-frame kernel system for the sample data.

    Uses a Cholesky factorization of the system or its negation (the mq
    kernel yields a negative definite system).  Raises
    :class:`NotDefiniteError` when neither factorization succeeds.
    """
    A = assemble_system(config, samples.nodes)
    rhs = samples.comps.reshape(-1)
    sign = 1
    try:
        factor = scipy.linalg.cho_factor(A)
    except np.linalg.LinAlgError:
        try:
            factor = scipy.linalg.cho_factor(-A)
            sign = -1
        except np.linalg.LinAlgError:
            raise NotDefiniteError(
                f"tangent system is numerically indefinite "
                f"({config.kind}, eps={config.epsilon}, n={len(samples)})"
            ) from None
    x = sign * scipy.linalg.cho_solve(factor, rhs)
    residual = float(np.max(np.abs(A @ x - rhs)))
    anorm = np.linalg.norm(sign * A, 1)
    rcond, info = scipy.linalg.lapack.dpocon(factor[0], anorm)
    cond = 1.0 / rcond if (info == 0 and rcond > 0) else np.inf
    return DirectInterpolant(
        config=config, nodes=samples.nodes, coeffs=x.reshape(-1, 2),
        residual=residual, cond_estimate=float(cond), definite_sign=sign,
    )


def _node_moments(interp):
    """Per-node 3-vectors w_j = y_j x c_j entering evaluation and stream."""
    C = _frame_cross(interp.nodes)
    # y x c = -(a x y) alpha - (b x y) beta = -C^T coeffs
    return -np.einsum("jqa,jq->ja", C, interp.coeffs)


def _eval_components(interp, pts):
    """Tangent-frame components of the interpolant at many points."""
    Cx = _frame_cross(pts)
    W = _node_moments(interp)
    comps = np.empty((pts.shape[0], 2))
    for lo in range(0, pts.shape[0], _CHUNK):
        hi = min(lo + _CHUNK, pts.shape[0])
        d = pts[lo:hi, None, :] - interp.nodes[None, :, :]
        r = np.sqrt(np.sum(d * d, axis=-1))
        f, g2 = radial_factors(interp.config, r)
        dw = np.einsum("cja,ja->cj", d, W)
        comps[lo:hi] = np.einsum("cpa,ja,cj->cp", Cx[lo:hi], W, f) \
            + np.einsum("cpa,cja,cj->cp", Cx[lo:hi], d, g2 * dw)
    return comps


def eval_direct(interp, x):
    """Evaluate the fitted field at one point (3,) or many points (k, 3)."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    comps = _eval_components(interp, pts)
    A, B = tangent_frames(pts)
    out = comps[:, :1] * A + comps[:, 1:] * B
    return out[0] if np.asarray(x).ndim == 1 else out


def stream_direct(interp, x):
    """Stream function of the fitted field at one point or many points."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    W = _node_moments(interp)
    psi = np.empty(pts.shape[0])
    for lo in range(0, pts.shape[0], _CHUNK):
        hi = min(lo + _CHUNK, pts.shape[0])
        d = pts[lo:hi, None, :] - interp.nodes[None, :, :]
        r = np.sqrt(np.sum(d * d, axis=-1))
        f, _ = radial_factors(interp.config, r)
        psi[lo:hi] = np.einsum("cj,cja,ja->c", f, d, W)
    return float(psi[0]) if np.asarray(x).ndim == 1 else psi
