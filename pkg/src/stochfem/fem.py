"""P1 finite elements for one geometry sample.

Assembles and solves the pulled-back surface problem on icosphere meshes and
the coupled bulk-surface problem on disk meshes.  Coefficients are evaluated
at lifted quadrature points (radial projection on surfaces, the piecewise
bulk lift on boundary simplices), and the lifted error norms carry the
surface-measure ratio delta_h respectively |det grad G_h| so that errors are
measured over the continuous reference domain.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from . import solid_harmonics as sh
from .errors import NoConvergence
from .geometry import lift_area_ratio, UNIT_CIRCLE
from .meshing import BulkMesh, SurfaceMesh, bulk_lift_barycentric
from .pullback import bulk_fields, surface_fields
from .random_field import (
    BoundaryHeightSample,
    GeometrySample,
    SurfaceHeightSample,
    _phi_jacobian,
    circle_height_theta,
)


@dataclass(frozen=True)
class QuadratureRule:
    """Positive-weight rule on the reference simplex (weights sum to its
    measure: 1/2 for the triangle, 1 for the unit segment)."""

    points: np.ndarray
    weights: np.ndarray
    degree: int


def _tri_degree4() -> QuadratureRule:
    a1, b1, w1 = 0.445948490915965, 0.108103018168070, 0.223381589678011
    a2, b2, w2 = 0.091576213509771, 0.816847572980459, 0.109951743655322
    pts = np.array(
        [
            (b1, a1, a1), (a1, b1, a1), (a1, a1, b1),
            (b2, a2, a2), (a2, b2, a2), (a2, a2, b2),
        ]
    )
    w = 0.5 * np.array([w1, w1, w1, w2, w2, w2])
    return QuadratureRule(pts, w, degree=4)


def _seg_gauss3() -> QuadratureRule:
    c = 0.5 * np.sqrt(0.6)
    pts = np.array([0.5 - c, 0.5, 0.5 + c])[:, None]
    w = np.array([5.0, 8.0, 5.0]) / 18.0
    return QuadratureRule(pts, w, degree=5)


TRI_DEGREE4 = _tri_degree4()
SEG_GAUSS3 = _seg_gauss3()


@dataclass
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    n_bulk: int          # bulk DOFs first; surface block follows
    n_surface: int


@dataclass
class FemSolution:
    values: np.ndarray
    iterations: int
    residual: float


def solve_cg(
    system: SparseSystem,
    tol: float = 1e-10,
    preconditioner: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> FemSolution:
    """Jacobi-preconditioned conjugate gradients (relative residual test).

    An alternative preconditioner may be supplied as a callable r -> z.
    Raises NoConvergence after 10 N iterations, which for these SPD systems
    signals an assembly bug rather than slow convergence.
    """
    if not 1e-14 <= tol <= 1e-2:
        raise ValueError("tol outside [1e-14, 1e-2]")
    A, b = system.matrix, system.rhs
    n = len(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return FemSolution(np.zeros(n), 0, 0.0)
    if preconditioner is None:
        dinv = 1.0 / A.diagonal()
        preconditioner = lambda r: dinv * r
    x = np.zeros(n)
    r = b.copy()
    z = preconditioner(r)
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, 10 * n + 1):
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise NoConvergence("non-positive curvature direction in CG")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r)
        if res <= tol * bnorm:
            return FemSolution(x, it, res / bnorm)
        z = preconditioner(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NoConvergence(f"CG did not reach {tol:g} in {10 * n} iterations")


def _as_height(sample):
    if isinstance(sample, GeometrySample):
        return sample.height
    return sample


def _field_values(exact, points, shape):
    """Evaluate an exact field given as a callable or a precomputed array."""
    vals = exact(points) if callable(exact) else exact
    return np.asarray(vals).reshape(shape)


# ---------------------------------------------------------------------------
# surface problem


class SurfaceDiscretisation:
    """Per-mesh precomputed data for the sphere surface problem.

    The height field is linear in the 36 harmonic coefficients, so the basis
    values and ambient gradients at all lifted quadrature points are stored
    once as dense matrices; per-sample coefficient fields are then two
    matrix-vector products.
    """

    def __init__(self, mesh: SurfaceMesh, quad: QuadratureRule = TRI_DEGREE4):
        self.mesh = mesh
        self.quad = quad
        tris = mesh.triangles
        v = mesh.vertices[tris]                      # (nt, 3, 3)
        self.nt, self.nq = len(tris), len(quad.weights)
        self.nv = len(mesh.vertices)

        e = np.stack([v[:, 2] - v[:, 1], v[:, 0] - v[:, 2], v[:, 1] - v[:, 0]], axis=1)
        n = mesh.facet_normals
        areas = mesh.facet_areas
        # in-plane gradient of hat i: (n x opposite_edge) / (2 area)
        self.grads = np.cross(n[:, None, :], e) / (2.0 * areas)[:, None, None]

        xq = np.einsum("qi,tij->tqj", quad.points, v)
        self.w = (2.0 * areas)[:, None] * quad.weights[None, :]
        flat = xq.reshape(-1, 3)
        self.points = flat / np.linalg.norm(flat, axis=1, keepdims=True)
        self.delta_h = lift_area_ratio(
            flat, np.repeat(n, self.nq, axis=0)
        ).reshape(self.nt, self.nq)
        self.Y = sh.basis_values(self.points)
        self.GA = sh.basis_gradients(self.points)

        rows = np.broadcast_to(tris[:, :, None], (self.nt, 3, 3))
        cols = np.broadcast_to(tris[:, None, :], (self.nt, 3, 3))
        self._rows = rows.ravel()
        self._cols = cols.ravel()

    def height_fields(self, height: SurfaceHeightSample):
        """(h, tangential grad) at all lifted quadrature points."""
        c = height.coeffs
        h = height.eps_tol * (self.Y @ c)
        ga = height.eps_tol * (self.GA @ c)
        gt = ga - self.points * np.sum(ga * self.points, axis=1, keepdims=True)
        return h, gt

    def coefficient_fields(self, height: SurfaceHeightSample):
        h, gt = self.height_fields(height)
        return surface_fields(self.points, h, gt)

    def assemble(self, sample, load_values=None, load_eval=None) -> SparseSystem:
        height = _as_height(sample)
        D, sqrt_g = self.coefficient_fields(height)
        D = D.reshape(self.nt, self.nq, 3, 3)
        sg = sqrt_g.reshape(self.nt, self.nq)
        if load_values is None:
            load_values = load_eval(self.points)
        f = np.asarray(load_values).reshape(self.nt, self.nq)

        Dw = np.einsum("tq,tqab->tab", self.w, D)
        K = np.einsum("tia,tab,tjb->tij", self.grads, Dw, self.grads)
        mw = self.w * sg
        bary = self.quad.points
        M = np.einsum("tq,qi,qj->tij", mw, bary, bary)
        rhs_loc = np.einsum("tq,qi->ti", mw * f, bary)

        A = sp.coo_matrix(
            ((K + M).ravel(), (self._rows, self._cols)), shape=(self.nv, self.nv)
        ).tocsr()
        rhs = np.bincount(
            self.mesh.triangles.ravel(), weights=rhs_loc.ravel(), minlength=self.nv
        )
        return SparseSystem(A, rhs, n_bulk=0, n_surface=self.nv)

    def error_norms(self, values, exact, exact_grad):
        """(L2, H1) of the P1 function against a field on the unit sphere.

        Integrates over the discrete surface weighted by delta_h; the H1
        seminorm compares the in-plane facet gradient with the projection of
        the exact tangential gradient onto the facet plane.
        """
        values = np.asarray(values, dtype=float)
        wl = self.w * self.delta_h
        uq = np.einsum("qi,ti->tq", self.quad.points, values[self.mesh.triangles])
        ue = _field_values(exact, self.points, (self.nt, self.nq))
        l2_sq = float(np.sum(wl * (uq - ue) ** 2))

        guh = np.einsum("ti,tia->ta", values[self.mesh.triangles], self.grads)
        ge = _field_values(exact_grad, self.points, (self.nt, self.nq, 3))
        n = self.mesh.facet_normals
        ge_proj = ge - np.einsum("tqa,ta->tq", ge, n)[:, :, None] * n[:, None, :]
        diff = guh[:, None, :] - ge_proj
        semi_sq = float(np.sum(wl * np.einsum("tqa,tqa->tq", diff, diff)))
        return np.sqrt(l2_sq), np.sqrt(l2_sq + semi_sq)


_SURFACE_CACHE: dict = {}


def surface_discretisation(mesh: SurfaceMesh) -> SurfaceDiscretisation:
    key = id(mesh)
    if key not in _SURFACE_CACHE or _SURFACE_CACHE[key].mesh is not mesh:
        _SURFACE_CACHE.clear()
        _SURFACE_CACHE[key] = SurfaceDiscretisation(mesh)
    return _SURFACE_CACHE[key]


def assemble_surface(mesh: SurfaceMesh, sample, load_eval) -> SparseSystem:
    """Assemble the surface scheme with the load evaluated at lifted points."""
    return surface_discretisation(mesh).assemble(sample, load_eval=load_eval)


# ---------------------------------------------------------------------------
# coupled bulk-surface problem


class CoupledDiscretisation:
    """Per-mesh precomputed data for the coupled disk problem.

    Degrees of freedom: all bulk vertices, followed by one surface DOF per
    boundary vertex (in boundary-loop order, sharing vertex positions).
    """

    def __init__(
        self,
        mesh: BulkMesh,
        quad: QuadratureRule = TRI_DEGREE4,
        seg_quad: QuadratureRule = SEG_GAUSS3,
        fd_step: float = 1e-6,
    ):
        self.mesh = mesh
        self.quad = quad
        self.seg_quad = seg_quad
        tris = mesh.triangles
        v = mesh.vertices[tris]                      # (nt, 3, 2)
        self.nt, self.nq = len(tris), len(quad.weights)
        self.nv = len(mesh.vertices)

        d1 = v[:, 1] - v[:, 0]
        d2 = v[:, 2] - v[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        self.areas = 0.5 * np.abs(det)
        # gradients of the three barycentric hats
        g1 = np.stack([d2[:, 1], -d2[:, 0]], axis=1) / det[:, None]
        g2 = np.stack([-d1[:, 1], d1[:, 0]], axis=1) / det[:, None]
        self.grads = np.stack([-g1 - g2, g1, g2], axis=1)   # (nt, 3, 2)

        xq = np.einsum("qi,tij->tqj", quad.points, v)
        self.w = (2.0 * self.areas)[:, None] * quad.weights[None, :]

        # lift of bulk quadrature points through G_h on boundary simplices,
        # and the FD volume ratio |det grad G_h|
        self.lifted = xq.copy()
        self.det_gh = np.ones((self.nt, self.nq))
        btris = np.flatnonzero(mesh.is_boundary_simplex)
        self._btris = btris
        if len(btris):
            on = mesh.boundary_vertex_flags[tris[btris]]       # (tb, 3)
            off_pos = np.argmax(~on, axis=1)
            perm = np.stack(
                [off_pos, (off_pos + 1) % 3, (off_pos + 2) % 3], axis=1
            )                                                  # (tb, 3) roles
            vb = mesh.vertices[np.take_along_axis(tris[btris], perm, axis=1)]
            v0, v1, v2 = vb[:, 0], vb[:, 1], vb[:, 2]
            lam_std = np.broadcast_to(quad.points, (len(btris), self.nq, 3))
            lam_role = np.take_along_axis(lam_std, perm[:, None, :], axis=2)
            self.lifted[btris] = bulk_lift_barycentric(
                lam_role, v0[:, None], v1[:, None], v2[:, None]
            )
            # FD Jacobian of the lift in the ambient axes
            cols = []
            glam = self.grads[btris]                           # (tb, 3, 2)
            for k in range(2):
                shift = fd_step * glam[:, None, :, k]          # (tb, 1, 3)
                lp = np.take_along_axis(lam_std + shift, perm[:, None, :], axis=2)
                lm = np.take_along_axis(lam_std - shift, perm[:, None, :], axis=2)
                gp = bulk_lift_barycentric(lp, v0[:, None], v1[:, None], v2[:, None])
                gm = bulk_lift_barycentric(lm, v0[:, None], v1[:, None], v2[:, None])
                cols.append((gp - gm) / (2.0 * fd_step))
            self.det_gh[btris] = np.abs(
                cols[0][..., 0] * cols[1][..., 1] - cols[0][..., 1] * cols[1][..., 0]
            )
        self.lifted_flat = self.lifted.reshape(-1, 2)

        # boundary edge geometry (1D surface mesh on the boundary loop)
        be = mesh.boundary_edges
        self.ne = len(be)
        self.edge_v = be
        p0, p1 = mesh.vertices[be[:, 0]], mesh.vertices[be[:, 1]]
        self.edge_len = np.linalg.norm(p1 - p0, axis=1)
        self.tau = (p1 - p0) / self.edge_len[:, None]
        s = seg_quad.points[:, 0]
        self.nq1 = len(s)
        sq = p0[:, None, :] + s[None, :, None] * (p1 - p0)[:, None, :]
        rq = np.linalg.norm(sq, axis=2)
        self.edge_theta = np.arctan2(sq[..., 1], sq[..., 0])   # (ne, nq1)
        self.edge_points = sq / rq[..., None]
        edge_normal = np.stack([self.tau[:, 1], -self.tau[:, 0]], axis=1)
        self.edge_delta_h = lift_area_ratio(
            sq.reshape(-1, 2),
            np.repeat(edge_normal, self.nq1, axis=0),
            UNIT_CIRCLE,
        ).reshape(self.ne, self.nq1)
        self.edge_w = self.edge_len[:, None] * seg_quad.weights[None, :]
        self.edge_basis = np.stack([1.0 - s, s], axis=1)       # (nq1, 2)

        # DOF layout: surface DOFs follow the boundary loop order
        self.surf_of_vertex = -np.ones(self.nv, dtype=np.int64)
        self.surf_of_vertex[be[:, 0]] = np.arange(self.ne)
        self.n_dof = self.nv + self.ne

        rows = np.broadcast_to(tris[:, :, None], (self.nt, 3, 3))
        cols = np.broadcast_to(tris[:, None, :], (self.nt, 3, 3))
        self._trows, self._tcols = rows.ravel(), cols.ravel()
        # edge endpoint ids in bulk and in surface numbering
        self._e_bulk = be
        self._e_surf = self.nv + self.surf_of_vertex[be]

    def edge_coefficient_fields(self, height: BoundaryHeightSample):
        """(D_surf (ne*nq1,2,2), sqrt_g_surf (ne,nq1)) at lifted edge points."""
        theta = self.edge_theta.ravel()
        h, hp, _ = circle_height_theta(height, theta)
        p = self.edge_points.reshape(-1, 2)
        tv = np.stack([-p[:, 1], p[:, 0]], axis=1)
        D, sg = surface_fields(p, h, hp[:, None] * tv)
        return D, sg.reshape(self.ne, self.nq1)

    def assemble(
        self, sample, f_values=None, fg_values=None, f_eval=None,
        fGamma_eval=None, alpha: float = 1.0, beta: float = 1.0,
    ) -> SparseSystem:
        if alpha <= 0.0 or beta <= 0.0:
            raise ValueError("alpha and beta must be positive")
        height = _as_height(sample)
        if f_values is None:
            f_values = f_eval(self.lifted_flat)
        if fg_values is None:
            fg_values = fGamma_eval(self.edge_theta.ravel())

        _, J = _phi_jacobian(height, self.lifted_flat)
        Db, sg = bulk_fields(J)
        Db = Db.reshape(self.nt, self.nq, 2, 2)
        sg = sg.reshape(self.nt, self.nq)

        Dw = np.einsum("tq,tqab->tab", self.w, Db)
        K = np.einsum("tia,tab,tjb->tij", self.grads, Dw, self.grads)
        mw = self.w * sg
        bary = self.quad.points
        M = np.einsum("tq,qi,qj->tij", mw, bary, bary)
        f = np.asarray(f_values).reshape(self.nt, self.nq)
        rhs_bulk_loc = np.einsum("tq,qi->ti", mw * f, bary)

        De, sg_e = self.edge_coefficient_fields(height)
        De = De.reshape(self.ne, self.nq1, 2, 2)
        tdt = np.einsum("ea,eqab,eb->eq", self.tau, De, self.tau)
        c_e = np.sum(self.edge_w * tdt, axis=1) / self.edge_len**2
        K_e = c_e[:, None, None] * np.array([[1.0, -1.0], [-1.0, 1.0]])
        mwe = self.edge_w * sg_e
        M_e = np.einsum("eq,qi,qj->eij", mwe, self.edge_basis, self.edge_basis)
        fg = np.asarray(fg_values).reshape(self.ne, self.nq1)
        rhs_surf_loc = np.einsum("eq,qi->ei", mwe * fg, self.edge_basis)

        # global block assembly
        a, b = alpha, beta
        datas, rows, cols = [], [], []

        datas.append(a * (K + M).ravel())
        rows.append(self._trows)
        cols.append(self._tcols)

        eb = self._e_bulk
        es = self._e_surf
        er = np.broadcast_to(eb[:, :, None], (self.ne, 2, 2)).ravel()
        ec = np.broadcast_to(eb[:, None, :], (self.ne, 2, 2)).ravel()
        sr = np.broadcast_to(es[:, :, None], (self.ne, 2, 2)).ravel()
        sc = np.broadcast_to(es[:, None, :], (self.ne, 2, 2)).ravel()

        datas.append((a * a * M_e).ravel()); rows.append(er); cols.append(ec)
        datas.append((-a * b * M_e).ravel()); rows.append(er); cols.append(sc)
        datas.append((-a * b * M_e).ravel()); rows.append(sr); cols.append(ec)
        datas.append((b * (K_e + M_e) + b * b * M_e).ravel())
        rows.append(sr); cols.append(sc)

        A = sp.coo_matrix(
            (np.concatenate(datas), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.n_dof, self.n_dof),
        ).tocsr()
        rhs = np.zeros(self.n_dof)
        np.add.at(rhs, self.mesh.triangles.ravel(), a * rhs_bulk_loc.ravel())
        np.add.at(rhs, es.ravel(), b * rhs_surf_loc.ravel())
        return SparseSystem(A, rhs, n_bulk=self.nv, n_surface=self.ne)

    def error_norms_bulk(self, values, exact, exact_grad):
        """(L2, H1) of the bulk block against a field on the unit disk."""
        values = np.asarray(values, dtype=float)[: self.nv]
        wl = self.w * self.det_gh
        uq = np.einsum("qi,ti->tq", self.quad.points, values[self.mesh.triangles])
        ue = _field_values(exact, self.lifted_flat, (self.nt, self.nq))
        l2_sq = float(np.sum(wl * (uq - ue) ** 2))
        guh = np.einsum("ti,tia->ta", values[self.mesh.triangles], self.grads)
        ge = _field_values(exact_grad, self.lifted_flat, (self.nt, self.nq, 2))
        diff = guh[:, None, :] - ge
        semi_sq = float(np.sum(wl * np.einsum("tqa,tqa->tq", diff, diff)))
        return np.sqrt(l2_sq), np.sqrt(l2_sq + semi_sq)

    def error_norms_surface(self, values, exact_theta, exact_dtheta):
        """(L2, H1) of the surface block against a field v(theta) on S^1."""
        values = np.asarray(values, dtype=float)
        vdof = values[self.nv:] if len(values) == self.n_dof else values
        v_e = vdof[self._e_surf - self.nv]                     # (ne, 2)
        wl = self.edge_w * self.edge_delta_h
        vq = np.einsum("qi,ei->eq", self.edge_basis, v_e)
        ve = _field_values(exact_theta, self.edge_theta.ravel(), (self.ne, self.nq1))
        l2_sq = float(np.sum(wl * (vq - ve) ** 2))
        gvh = (v_e[:, 1] - v_e[:, 0]) / self.edge_len          # d/ds along edge
        dve = _field_values(
            exact_dtheta, self.edge_theta.ravel(), (self.ne, self.nq1)
        )
        tq = np.stack(
            [-np.sin(self.edge_theta), np.cos(self.edge_theta)], axis=2
        )
        ge_tau = dve * np.einsum("eqa,ea->eq", tq, self.tau)
        semi_sq = float(np.sum(wl * (gvh[:, None] - ge_tau) ** 2))
        return np.sqrt(l2_sq), np.sqrt(l2_sq + semi_sq)


_COUPLED_CACHE: dict = {}


def coupled_discretisation(mesh: BulkMesh) -> CoupledDiscretisation:
    key = id(mesh)
    if key not in _COUPLED_CACHE or _COUPLED_CACHE[key].mesh is not mesh:
        _COUPLED_CACHE.clear()
        _COUPLED_CACHE[key] = CoupledDiscretisation(mesh)
    return _COUPLED_CACHE[key]


def assemble_coupled(
    mesh: BulkMesh, sample, f_eval, fGamma_eval, alpha: float, beta: float
) -> SparseSystem:
    """Assemble the coupled scheme; fGamma_eval takes boundary angles theta."""
    return coupled_discretisation(mesh).assemble(
        sample, f_eval=f_eval, fGamma_eval=fGamma_eval, alpha=alpha, beta=beta
    )


def error_norms(mesh, solution, exact, exact_grad):
    """(L2, H1) error of a surface FEM solution against an exact field."""
    values = solution.values if isinstance(solution, FemSolution) else solution
    return surface_discretisation(mesh).error_norms(values, exact, exact_grad)
