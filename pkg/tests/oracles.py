"""Finite-difference and refinement oracles shared by the test modules.

Everything here recomputes geometric quantities from first principles
(central differences, brute-force subdivision) so that the closed-form
production code is checked against independent constructions.
"""
import numpy as np

from stochfem.geometry import closest_point, tangent_projector, tangential_fd_gradient
from stochfem.pullback import pulled_normal
from stochfem.random_field import eval_height


def surface_map(sample, p):
    """The graph parametrisation phi(p) = p (1 + h(p)) at a surface point."""
    h, _ = eval_height(sample, p)
    return (1.0 + h) * np.asarray(p, dtype=float)


def fd_surface_jacobian(sample, p, step=1e-5):
    """Columns of grad_surf(phi) by the tangential FD oracle, componentwise."""
    p = np.asarray(p, dtype=float)
    d = len(p)
    cols = np.empty((d, d))
    for j in range(d):
        cols[j] = tangential_fd_gradient(
            lambda y, j=j: surface_map(sample, y)[j], p, step
        )
    return cols  # row j holds grad of component j; grad_phi[i, k] = cols[i, k]


def fd_metric(sample, p, step=1e-5):
    """(G_inv, sqrt_g) from the FD surface Jacobian: G = J^T J + nu nu^T."""
    J = fd_surface_jacobian(sample, p, step)
    p = np.asarray(p, dtype=float)
    # J row j is the tangential gradient of component j, J[j, k] = D_k phi_j,
    # so G_ik = sum_j D_i phi_j D_k phi_j = (J^T J)_ik plus the normal part
    G = J.T @ J + np.outer(p, p)
    return np.linalg.inv(G), np.sqrt(np.linalg.det(G))


def fd_b_matrix(sample, p, step=1e-5):
    """B = grad_surf(phi) + (pulled normal) (x) nu, from the FD Jacobian."""
    J = fd_surface_jacobian(sample, p, step)
    p = np.asarray(p, dtype=float)
    n = pulled_normal(p, sample)
    return J + np.outer(n, p)


def _bary_grid(n):
    """Sub-triangle vertex index grid of an n-fold edge subdivision."""
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    keep = (i + j) <= n
    return i[keep], j[keep]


def _sub_triangles(n):
    """Index triples of the 4^?: n^2 sub-triangles in (i, j) numbering."""
    index = {}
    i, j = _bary_grid(n)
    for k, (a, b) in enumerate(zip(i, j)):
        index[(a, b)] = k
    tris = []
    for a in range(n):
        for b in range(n - a):
            tris.append((index[(a, b)], index[(a + 1, b)], index[(a, b + 1)]))
            if a + b < n - 1:
                tris.append(
                    (index[(a + 1, b)], index[(a + 1, b + 1)], index[(a, b + 1)])
                )
    return np.array(tris, dtype=np.int64)


def _tri_areas(pts, tris):
    v = pts[tris]
    return 0.5 * np.linalg.norm(
        np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1
    )


def _facet_pair(v0, v1, v2, ratio_fn, n):
    """(curved area, integral of ratio_fn over the flat facet) at resolution n."""
    i, j = _bary_grid(n)
    pts = v0 + np.outer(i / n, v1 - v0) + np.outer(j / n, v2 - v0)
    tris = _sub_triangles(n)
    curved = _tri_areas(closest_point(pts), tris).sum()
    cent = pts[tris].mean(axis=1)
    integral = float(np.sum(ratio_fn(cent) * _tri_areas(pts, tris)))
    return curved, integral


def facet_area_defect(v0, v1, v2, ratio_fn, n=64):
    """|integral of the lift ratio - projected curved area| for one facet.

    Both sides are O(1/n^2) accurate; one Richardson step with 2n brings the
    subdivide-and-project oracle well below 1e-7.
    """
    c1, i1 = _facet_pair(v0, v1, v2, ratio_fn, n)
    c2, i2 = _facet_pair(v0, v1, v2, ratio_fn, 2 * n)
    curved = (4.0 * c2 - c1) / 3.0
    integral = (4.0 * i2 - i1) / 3.0
    return abs(integral - curved)


def random_surface_points(rng, n, dim=3):
    x = rng.normal(size=(n, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)
