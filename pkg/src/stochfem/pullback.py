"""Closed-form pull-back coefficients of the sampled geometry.

All tensors of the transformed PDEs evaluated at reference-domain points:
the surface diffusion tensor and area element for graph-like surfaces over
the sphere or circle, the pulled-back unit normal, the bulk metric pair from
the domain-mapping Jacobian, the boundary conormal factor of the coupled
system, and the pull-back of the extended Weingarten map.

The graph-case formulas exploit that both reference surfaces have all
principal curvatures equal to 1, so (I + h H)^{-1} has the two eigenvalues
1/(1+h) (tangent) and 1 (normal) and everything reduces to rational
expressions in h and its tangential gradient.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularGeometry
from .random_field import (
    BoundaryHeightSample,
    GeometrySample,
    SurfaceHeightSample,
    _phi_jacobian,
    circle_height_theta,
    eval_height,
    sphere_height_hessian,
)


@dataclass(frozen=True)
class SurfaceCoefficients:
    D: np.ndarray        # sqrt_g * G^{-1}, symmetric
    sqrt_g: float
    A: np.ndarray        # (I + h H)^{-1}


@dataclass(frozen=True)
class BulkCoefficients:
    D_bulk: np.ndarray   # sqrt_g * G^{-1}, symmetric positive definite
    sqrt_g: float


def _height(sample, p):
    h, gt = eval_height(sample, p)
    return h, gt


def surface_fields(p, h, grad_h):
    """Vectorised (D, sqrt_g) of the graph-case pull-back.

    p: (N, d) surface points, h: (N,), grad_h: (N, d) tangential gradients.
    With kappa_j = 1 the closed forms reduce to

        G^{-1}  = P/(1+h)^2 + p (x) p - u (x) u / (1 + |w|^2),
        sqrt_g  = sqrt(1 + |w|^2) (1+h)^(d-1),

    where w = grad_h/(1+h) = A grad_h and u = grad_h/(1+h)^2.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    gt = np.atleast_2d(np.asarray(grad_h, dtype=float))
    d = p.shape[-1]
    one_h = 1.0 + h
    if np.any(one_h <= 1e-8):
        raise SingularGeometry("1 + h reached the singular threshold")
    w2 = np.sum(gt * gt, axis=-1) / one_h**2
    u = gt / one_h[:, None] ** 2
    eye = np.eye(d)
    P = eye - p[:, :, None] * p[:, None, :]
    G_inv = (
        P / one_h[:, None, None] ** 2
        + p[:, :, None] * p[:, None, :]
        - u[:, :, None] * u[:, None, :] / (1.0 + w2)[:, None, None]
    )
    sqrt_g = np.sqrt(1.0 + w2) * one_h ** (d - 1)
    return sqrt_g[:, None, None] * G_inv, sqrt_g


def surface_coefficients(p, sample) -> SurfaceCoefficients:
    """Diffusion tensor D = sqrt_g G^{-1}, area element and A at one point."""
    p = np.asarray(p, dtype=float)
    h, gt = _height(sample, p)
    D, sqrt_g = surface_fields(p[None], [h], gt[None])
    one_h = 1.0 + h
    A = (np.eye(len(p)) - np.outer(p, p)) / one_h + np.outer(p, p)
    return SurfaceCoefficients(D=D[0], sqrt_g=float(sqrt_g[0]), A=A)


def pulled_normal(p, sample) -> np.ndarray:
    """Unit normal of the random surface pulled back to the reference point:
    (nu - A grad_h)/|nu - A grad_h| with A grad_h = grad_h/(1+h)."""
    p = np.asarray(p, dtype=float)
    h, gt = _height(sample, p)
    v = p - gt / (1.0 + h)
    return v / np.linalg.norm(v)


def bulk_fields(jac):
    """Vectorised (D_bulk, sqrt_g) from (N, 2, 2) domain-map Jacobians."""
    jac = np.asarray(jac, dtype=float)
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    if np.any(np.abs(det) <= 1e-8):
        raise SingularGeometry("domain-map Jacobian is (near-)singular")
    sqrt_g = np.abs(det)
    # G^{-1} = J^{-1} J^{-T} via the 2x2 adjugate
    inv = np.empty_like(jac)
    inv[..., 0, 0] = jac[..., 1, 1]
    inv[..., 0, 1] = -jac[..., 0, 1]
    inv[..., 1, 0] = -jac[..., 1, 0]
    inv[..., 1, 1] = jac[..., 0, 0]
    inv /= det[..., None, None]
    G_inv = inv @ np.swapaxes(inv, -1, -2)
    return sqrt_g[..., None, None] * G_inv, sqrt_g


def bulk_coefficients(x, sample) -> BulkCoefficients:
    """Metric pair of the transformed bulk operator at one disk point."""
    height = sample.height if isinstance(sample, GeometrySample) else sample
    _, jac = _phi_jacobian(height, np.asarray(x, dtype=float)[None])
    D, sqrt_g = bulk_fields(jac)
    return BulkCoefficients(D_bulk=D[0], sqrt_g=float(sqrt_g[0]))


def conormal_fields(theta, height: BoundaryHeightSample):
    """Vectorised boundary conormal data at polar angles theta.

    Returns (ratio, vec, sqrt_g_surf) with ratio = sqrt_g/sqrt_g_{Gamma_0},
    vec = ratio * G^{-1} nu in ambient coordinates, and the boundary area
    element sqrt_g_{Gamma_0} = sqrt((1+h)^2 + h'^2).

    At the boundary the Jacobian in the (nu, t) frame is [[1, h'], [0, 1+h]]
    so det J = 1+h, G^{-1} nu = ((h'^2 + (1+h)^2) nu - h' t)/(1+h)^2.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    h, hp, _ = circle_height_theta(height, theta)
    one_h = 1.0 + h
    if np.any(np.abs(one_h) <= 1e-8):
        raise SingularGeometry("boundary Jacobian is (near-)singular")
    sqrt_g_surf = np.sqrt(one_h**2 + hp**2)
    sqrt_g = np.abs(one_h)
    ratio = sqrt_g / sqrt_g_surf
    nu = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    tv = np.stack([-nu[..., 1], nu[..., 0]], axis=-1)
    ginv_nu = ((hp**2 + one_h**2)[..., None] * nu - hp[..., None] * tv) / one_h[
        ..., None
    ] ** 2
    return ratio, ratio[..., None] * ginv_nu, sqrt_g_surf


def conormal_factor(p, sample):
    """(ratio, vec) of the pulled-back normal derivative at a boundary point:
    (du/dnu) o phi = vec . grad(u-hat), vec = (sqrt_g/sqrt_g_surf) G^{-1} nu."""
    height = sample.height if isinstance(sample, GeometrySample) else sample
    p = np.asarray(p, dtype=float)
    theta = np.arctan2(p[1], p[0])
    ratio, vec, _ = conormal_fields(theta, height)
    return float(ratio[0]), vec[0]


# ---------------------------------------------------------------------------
# Weingarten pull-back


def _ambient_height_data(p, sample):
    """h, ambient gradient and ambient Hessian of the height extension."""
    height = sample.height if isinstance(sample, GeometrySample) else sample
    p = np.asarray(p, dtype=float)
    if isinstance(height, SurfaceHeightSample):
        from . import solid_harmonics as sh

        h = height.eps_tol * float(sh.basis_values(p[None])[0] @ height.coeffs)
        ga = height.eps_tol * (sh.basis_gradients(p[None])[0] @ height.coeffs)
        hess = sphere_height_hessian(height, p)[0]
        return h, ga, hess
    theta = np.arctan2(p[1], p[0])
    hv, hp, hpp = circle_height_theta(height, np.array([theta]))
    h, hp, hpp = float(hv[0]), float(hp[0]), float(hpp[0])
    x, y = p
    r2 = x * x + y * y
    gtheta = np.array([-y, x]) / r2
    htheta = np.array([[2 * x * y, y * y - x * x], [y * y - x * x, -2 * x * y]]) / r2**2
    return h, hp * gtheta, hpp * np.outer(gtheta, gtheta) + hp * htheta


def _tangential_hessian(p, grad_amb, hess_amb):
    """Second tangential derivatives D_i D_j h from ambient extension data.

    Differentiates g_j(x) = (P(x) grad hbar(x))_j with P(x) = I - x x^T/|x|^2
    and projects again; evaluated on |p| = 1.
    """
    d = len(p)
    P = np.eye(d) - np.outer(p, p)
    pg = float(p @ grad_amb)
    # d_k g_j = -delta_jk (p.grad) - p_j d_k hbar + 2 p_j p_k (p.grad) + (P Hess)_jk
    dg = (
        -pg * np.eye(d)
        - np.outer(p, grad_amb)
        + 2.0 * pg * np.outer(p, p)
        + P @ hess_amb
    )
    # row j of dg is grad g_j; project each row tangentially: (P dg^T)^T_ij
    return np.einsum("ik,jk->ij", P, dg)


def weingarten_pullback(p, sample) -> np.ndarray:
    """Pull-back of the random surface's extended Weingarten map.

    Builds B = grad_surf(phi) + (pulled normal) (x) nu and the second
    fundamental form L_ij = n . D_i D_j phi for the graph parametrisation
    phi(x) = x (1 + h(x)), then returns -B^{-T} L B^{-1}.
    """
    p = np.asarray(p, dtype=float)
    d = len(p)
    h, ga, hess_amb = _ambient_height_data(p, sample)
    P = np.eye(d) - np.outer(p, p)
    gt = P @ ga
    # grad_surf phi (rows: components, cols: derivative directions)
    grad_phi = (1.0 + h) * P + np.outer(p, gt)
    n = p - gt / (1.0 + h)
    n /= np.linalg.norm(n)
    B = grad_phi + np.outer(n, p)
    if abs(np.linalg.det(B)) <= 1e-8:
        raise SingularGeometry("surface-map tangential Jacobian near-singular")
    hess_t = _tangential_hessian(p, ga, hess_amb)
    # D_i D_j phi_m = -(P_ij p_m + p_j P_im)(1+h) + P_jm gt_i + P_im gt_j
    #                + p_m D_i D_j h
    L = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            vec = (
                -(P[i, j] * p + p[j] * P[i]) * (1.0 + h)
                + P[j] * gt[i]
                + P[i] * gt[j]
                + p * hess_t[i, j]
            )
            L[i, j] = n @ vec
    Binv = np.linalg.inv(B)
    return -Binv.T @ L @ Binv
