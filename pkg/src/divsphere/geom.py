"""Points, tangent frames, and quasi-uniform node sets on the unit sphere.

All points are plain numpy arrays of Cartesian coordinates: shape (3,) for a
single point, (n, 3) for a set.  Every operation here is a pure function of
immutable inputs, so everything is safe to call concurrently.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

# Inputs are renormalized when the norm deviates by less than this; larger
# deviations are rejected as genuinely off-sphere data.
NORM_TOLERANCE = 1e-8

# |z| above this uses the fixed pole frame; the meridional/zonal formulas
# divide by sqrt(1 - z^2).
POLE_THRESHOLD = 1.0 - 1e-12


class TangentFrame(NamedTuple):
    """Orthonormal frame at a sphere point.

    ``a`` is the meridional unit vector, ``b`` the zonal unit vector, and
    ``n`` the outward normal (the point itself).  Right-handed in the sense
    a = n x b.
    """

    a: np.ndarray
    b: np.ndarray
    n: np.ndarray


def sphere_point(p):
    """Validate and normalize a single point onto the unit sphere.

    Parameters
    ----------
    p : array_like, shape (3,)
        Cartesian coordinates with norm within ``NORM_TOLERANCE`` of 1.

    Returns
    -------
    ndarray, shape (3,)
        The normalized point.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (3,):
        raise ValueError(f"expected 3 Cartesian coordinates, got shape {p.shape}")
    r = np.sqrt(p @ p)
    if abs(r - 1.0) >= NORM_TOLERANCE:
        raise ValueError(f"point has norm {r!r}, more than {NORM_TOLERANCE} from 1")
    # idempotent: points already unit to rounding pass through bit-identically
    return p if abs(r - 1.0) < 1e-15 else p / r


def sphere_points(pts):
    """Validate and normalize an (n, 3) array of points onto the sphere."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) array, got shape {pts.shape}")
    r = np.sqrt(np.sum(pts * pts, axis=1))
    bad = np.abs(r - 1.0) >= NORM_TOLERANCE
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(f"point {i} has norm {r[i]!r}, more than {NORM_TOLERANCE} from 1")
    return pts / np.where(np.abs(r - 1.0) < 1e-15, 1.0, r)[:, None]


def cross_matrix(p):
    """Antisymmetric matrix Q(p) with Q(p) @ v == cross(p, v).

    Q(p) applied to the surface gradient of a scalar field gives the rotated
    (divergence-free) tangential field generated by that scalar.
    """
    x, y, z = np.asarray(p, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def tangent_frame(p):
    """Meridional/zonal/normal frame at a point.

    Away from the poles this is the standard pair

        a = (-z x, -z y, 1 - z^2) / sqrt(1 - z^2),
        b = (-y, x, 0) / sqrt(1 - z^2),

    with n the point itself.  Within ``POLE_THRESHOLD`` of a pole any
    orthogonal pair in the xy-plane works; we fix b = (0, 1, 0), a = n x b.
    """
    p = sphere_point(p)
    x, y, z = p
    if abs(z) > POLE_THRESHOLD:
        b = np.array([0.0, 1.0, 0.0])
        a = np.cross(p, b)
    else:
        s = np.hypot(x, y)
        a = np.array([-z * x / s, -z * y / s, s])
        b = np.array([-y / s, x / s, 0.0])
    return TangentFrame(a=a, b=b, n=p)


def tangent_frames(pts):
    """Vectorized tangent frames.

    Parameters
    ----------
    pts : ndarray, shape (n, 3)
        Unit points.

    Returns
    -------
    (A, B) : pair of ndarrays, each shape (n, 3)
        Meridional and zonal unit vectors per point; the normals are the
        points themselves.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    polar = np.abs(z) > POLE_THRESHOLD
    s = np.hypot(x, y)
    safe = np.where(polar, 1.0, s)
    A = np.stack([-z * x / safe, -z * y / safe, s], axis=1)
    B = np.stack([-y / safe, x / safe, np.zeros_like(x)], axis=1)
    if np.any(polar):
        bp = np.array([0.0, 1.0, 0.0])
        A[polar] = np.cross(pts[polar], bp)
        B[polar] = bp
    return A, B


def reconstruct_vector(frame, comp):
    """Expand tangent-frame components back into a Cartesian 3-vector."""
    return comp[0] * frame.a + comp[1] * frame.b


def _van_der_corput(i):
    """Base-2 radical inverse of the integer array i (bit reversal)."""
    i = np.asarray(i, dtype=np.int64).copy()
    v = np.zeros(i.shape, dtype=float)
    f = 0.5
    while np.any(i > 0):
        v += (i & 1) * f
        i >>= 1
        f *= 0.5
    return v


def hammersley_nodes(n):
    """Deterministic quasi-uniform node set of size n.

    Equal-area z spacing z_i = 1 - (2i+1)/n combined with base-2 van der
    Corput longitudes lambda_i = 2 pi vdc2(i).  Output is bit-identical
    across calls and all points are pairwise distinct (strictly decreasing z).
    """
    if n < 1:
        raise ValueError("need at least one node")
    i = np.arange(n, dtype=np.int64)
    z = 1.0 - (2.0 * i + 1.0) / n
    lam = 2.0 * np.pi * _van_der_corput(i)
    s = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return np.stack([s * np.cos(lam), s * np.sin(lam), z], axis=1)


def latlon_grid(nlat, nlon):
    """Latitude-longitude evaluation grid (cell centers, poles excluded)."""
    if nlat < 1 or nlon < 1:
        raise ValueError("grid needs at least one point per direction")
    theta = np.pi * (np.arange(nlat) + 0.5) / nlat
    lam = 2.0 * np.pi * np.arange(nlon) / nlon
    th, lm = np.meshgrid(theta, lam, indexing="ij")
    st = np.sin(th)
    pts = np.stack([st * np.cos(lm), st * np.sin(lm), np.cos(th)], axis=-1)
    return pts.reshape(-1, 3)
