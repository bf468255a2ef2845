"""Exact analytic geometry of the two reference surfaces.

Supported reference geometries are the unit sphere S^2 in R^3 and the unit
circle S^1 in R^2 (boundary of the unit disk).  Both are level sets of
|x| = 1, so closest points, normals and curvatures are closed-form; all
principal curvatures equal 1.

Also provides the finite-difference tangential-derivative oracle used by the
test suites of every other module.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegeneratePoint, OutOfBand


class SurfaceKind(Enum):
    UNIT_SPHERE_3D = "unit_sphere_3d"
    UNIT_CIRCLE_2D = "unit_circle_2d"


@dataclass(frozen=True)
class ReferenceSurface:
    kind: SurfaceKind

    @property
    def ambient_dim(self) -> int:
        return 3 if self.kind is SurfaceKind.UNIT_SPHERE_3D else 2

    @property
    def codim_curvatures(self) -> int:
        """Number of non-zero principal curvatures (all equal to 1)."""
        return self.ambient_dim - 1


UNIT_SPHERE = ReferenceSurface(SurfaceKind.UNIT_SPHERE_3D)
UNIT_CIRCLE = ReferenceSurface(SurfaceKind.UNIT_CIRCLE_2D)


@dataclass(frozen=True)
class FermiData:
    """Signed distance, closest point and outward normal at the closest point."""

    distance: float
    foot_point: np.ndarray
    normal_at_foot: np.ndarray


def fermi(x, surface: ReferenceSurface = UNIT_SPHERE) -> FermiData:
    """Fermi coordinates of an ambient point: (signed distance, closest point).

    The signed distance is positive outside the unit ball.  Raises
    DegeneratePoint for points too close to the origin, where the radial
    projection is not defined.
    """
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if r < 1e-12:
        raise DegeneratePoint(f"cannot project |x| = {r:g} onto |x| = 1")
    foot = x / r
    return FermiData(distance=r - 1.0, foot_point=foot, normal_at_foot=foot)


def closest_point(x, surface: ReferenceSurface = UNIT_SPHERE) -> np.ndarray:
    """Radial projection onto the reference surface (vectorised over rows)."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(r < 1e-12):
        raise DegeneratePoint("point too close to the origin")
    return x / r


def outward_normal(p) -> np.ndarray:
    """Outward unit normal at a point of the reference surface (= p itself)."""
    return np.asarray(p, dtype=float)


def tangent_projector(p) -> np.ndarray:
    """Projection I - p p^T onto the tangent space, vectorised over rows."""
    p = np.asarray(p, dtype=float)
    eye = np.eye(p.shape[-1])
    return eye - p[..., :, None] * p[..., None, :]


def weingarten(p, surface: ReferenceSurface = UNIT_SPHERE) -> np.ndarray:
    """Extended Weingarten map at a surface point: I - p (x) p.

    Both reference surfaces have unit principal curvatures, so the map
    coincides with the tangent projector.  Symmetric, annihilates p.
    """
    p = np.asarray(p, dtype=float)
    r = np.linalg.norm(p, axis=-1)
    if np.any(np.abs(r - 1.0) > 1e-10):
        raise ValueError("weingarten requires |p| = 1 within 1e-10")
    return tangent_projector(p)


def lift_area_ratio(x, facet_normal, surface: ReferenceSurface = UNIT_SPHERE):
    """Surface-measure ratio delta_h between the reference surface and a facet.

    For a point x on a mesh facet with unit normal nu_h this is the product
    (nu(a(x)) . nu_h) * prod_j (1 - d(x) kappa_j(x)) with the principal
    curvatures of the extended distance function, kappa_j(x) = 1/(1 + d(x))
    for both reference surfaces, i.e. (nu.nu_h)/(1+d)^2 on the sphere and
    (nu.nu_h)/(1+d) on the circle: radial projection scales each tangential
    direction by 1/|x| and the tilt contributes nu.nu_h.  Certified against
    the subdivide-and-project area oracle in the tests.  Vectorised over rows.
    """
    x = np.asarray(x, dtype=float)
    nh = np.asarray(facet_normal, dtype=float)
    r = np.linalg.norm(x, axis=-1)
    d = r - 1.0
    if np.any(np.abs(d) >= 0.5):
        raise OutOfBand("facet point outside the |d| < 0.5 band")
    nu = x / r[..., None]
    cosang = np.sum(nu * nh, axis=-1)
    out = cosang / (1.0 + d) ** surface.codim_curvatures
    return out if out.ndim else float(out)


def tangential_fd_gradient(f, p, step: float = 1e-5) -> np.ndarray:
    """Central-difference tangential gradient of a surface field.

    The field is extended off the surface as f(a(x)) (constant along
    normals); central differences along the ambient axes are projected onto
    the tangent space at p.  Used as the independent oracle for all analytic
    tangential derivatives in this package.
    """
    if not 1e-7 <= step <= 1e-3:
        raise ValueError("step outside [1e-7, 1e-3]")
    p = np.asarray(p, dtype=float)
    dim = p.shape[-1]
    g = np.empty(dim)
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = step
        fp = f(closest_point(p + e))
        fm = f(closest_point(p - e))
        g[j] = (fp - fm) / (2.0 * step)
    return tangent_projector(p) @ g


def tangential_fd_divergence(q, p, step: float = 1e-5) -> float:
    """FD surface divergence of a vector field on the reference surface.

    Applies the tangential FD gradient component-wise:
    div_G q = sum_j e_j . (P grad(q_j o a)).
    """
    p = np.asarray(p, dtype=float)
    dim = p.shape[-1]
    total = 0.0
    for j in range(dim):
        gj = tangential_fd_gradient(lambda y, j=j: q(y)[j], p, step)
        total += gj[j]
    return total
