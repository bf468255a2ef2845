"""Sampled random geometry.

Height fields over the reference surfaces: a truncated spherical-harmonic
expansion on the unit sphere and a truncated Fourier series on the unit
circle, the latter extended into the disk through a smooth compactly
supported blending of the radial coordinate.  A counter-based RNG keyed on
(master_seed, sample_index) makes every sample reproducible independently of
evaluation order or thread count.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from . import solid_harmonics as sh
from .errors import DegeneratePoint

N_FOURIER = 6  # Fourier modes n = 1..6 on the circle


class Problem(Enum):
    SURFACE = "surface"
    BULK_SURFACE = "bulk_surface"


@dataclass(frozen=True)
class SurfaceHeightSample:
    """Spherical-harmonic height field h = eps_tol * sum lam_{l,m} Y_l^m."""

    coeffs: np.ndarray      # (36,) in [-1, 1], order: (l, m) lexicographic
    eps_tol: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))
        if self.coeffs.shape != (sh.N_HARMONICS,):
            raise ValueError("expected 36 spherical-harmonic coefficients")
        if np.any(np.abs(self.coeffs) > 1.0 + 1e-12):
            raise ValueError("coefficients must lie in [-1, 1]")


@dataclass(frozen=True)
class BoundaryHeightSample:
    """Fourier height field on S^1 with radial blending width delta."""

    cos_coeffs: np.ndarray  # (6,) lam_n, n = 1..6
    sin_coeffs: np.ndarray  # (6,) lam-hat_n
    delta: float
    eps_tol: float

    def __post_init__(self):
        object.__setattr__(self, "cos_coeffs", np.asarray(self.cos_coeffs, dtype=float))
        object.__setattr__(self, "sin_coeffs", np.asarray(self.sin_coeffs, dtype=float))
        if not 0.0 < self.delta < 0.9:
            raise ValueError("blending width delta must lie in (0, 0.9)")
        if max(np.abs(self.cos_coeffs).max(), np.abs(self.sin_coeffs).max()) > 1.0 + 1e-12:
            raise ValueError("coefficients must lie in [-1, 1]")


@dataclass(frozen=True)
class SolutionRandoms:
    """Scalar uniforms entering the manufactured solutions."""

    nu1: float
    nu2: float
    lam: float
    sigma_tol: float
    eps_tol: float


@dataclass(frozen=True)
class GeometrySample:
    height: Union[SurfaceHeightSample, BoundaryHeightSample]
    randoms: SolutionRandoms
    sample_index: int
    master_seed: int


def sample_rng(master_seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for one sample, independent of draw order."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def draw_sample(
    master_seed: int,
    index: int,
    problem: Problem,
    eps_tol: float = 0.1,
    sigma_tol: float = 0.3,
    delta: float = 0.4,
) -> GeometrySample:
    """Draw the full coefficient set of sample `index`.

    Fixed draw order: height coefficients first (sphere: lexicographic in
    (l, m); circle: the six cosine then the six sine amplitudes), then the
    three solution uniforms nu1, nu2, lambda.  All draws are U(-1, 1).
    """
    rng = sample_rng(master_seed, index)
    if problem is Problem.SURFACE:
        height = SurfaceHeightSample(
            coeffs=rng.uniform(-1.0, 1.0, sh.N_HARMONICS), eps_tol=eps_tol
        )
    else:
        height = BoundaryHeightSample(
            cos_coeffs=rng.uniform(-1.0, 1.0, N_FOURIER),
            sin_coeffs=rng.uniform(-1.0, 1.0, N_FOURIER),
            delta=delta,
            eps_tol=eps_tol,
        )
    nu1, nu2, lam = rng.uniform(-1.0, 1.0, 3)
    randoms = SolutionRandoms(
        nu1=float(nu1), nu2=float(nu2), lam=float(lam),
        sigma_tol=sigma_tol, eps_tol=eps_tol,
    )
    return GeometrySample(height, randoms, index, master_seed)


# ---------------------------------------------------------------------------
# height field evaluation


def sphere_height(height: SurfaceHeightSample, points) -> tuple:
    """(h, tangential grad) of the sphere height field, vectorised over rows."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    h = height.eps_tol * (sh.basis_values(p) @ height.coeffs)
    ga = height.eps_tol * (sh.basis_gradients(p) @ height.coeffs)
    gt = ga - p * np.sum(ga * p, axis=-1, keepdims=True)
    return h, gt


def sphere_height_hessian(height: SurfaceHeightSample, points) -> np.ndarray:
    """Ambient Hessian of the solid-harmonic extension of h."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    return height.eps_tol * (sh.basis_hessians(p) @ height.coeffs)


def circle_height_theta(height: BoundaryHeightSample, theta) -> tuple:
    """(h, h', h'') of the Fourier height field at polar angles theta."""
    theta = np.asarray(theta, dtype=float)
    n = np.arange(1, N_FOURIER + 1)
    ang = theta[..., None] * n
    c, s = np.cos(ang), np.sin(ang)
    eps = height.eps_tol
    h = eps * (c @ height.cos_coeffs + s @ height.sin_coeffs)
    hp = eps * ((-s * n) @ height.cos_coeffs + (c * n) @ height.sin_coeffs)
    hpp = eps * ((-c * n**2) @ height.cos_coeffs + (-s * n**2) @ height.sin_coeffs)
    return h, hp, hpp


def circle_height(height: BoundaryHeightSample, points) -> tuple:
    """(h, tangential grad) at points of S^1, vectorised over rows."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    theta = np.arctan2(p[:, 1], p[:, 0])
    h, hp, _ = circle_height_theta(height, theta)
    tvec = np.stack([-p[:, 1], p[:, 0]], axis=-1)
    return h, hp[:, None] * tvec


def eval_height(sample: GeometrySample, p) -> tuple:
    """(h, grad_h) of one surface point; grad_h is the tangential gradient."""
    p = np.asarray(p, dtype=float)
    if isinstance(sample.height, SurfaceHeightSample):
        h, gt = sphere_height(sample.height, p)
    else:
        h, gt = circle_height(sample.height, p)
    return float(h[0]), gt[0]


# ---------------------------------------------------------------------------
# blending and the bulk domain mapping


def blending(t, delta: float) -> tuple:
    """Smooth cutoff L(t) = exp(-t^2/(delta^2 - t^2)) for t < delta, else 0.

    Returns (value, derivative); both vanish identically for t >= delta and
    the derivative is continuous across the cutoff.  Vectorised.
    """
    t = np.asarray(t, dtype=float)
    inside = t < delta
    ts = np.where(inside, t, 0.0)
    den = delta**2 - ts**2
    val = np.where(inside, np.exp(-(ts**2) / den), 0.0)
    # d/dt [-t^2/(d^2 - t^2)] = -2 t d^2 / (d^2 - t^2)^2
    dval = np.where(inside, val * (-2.0 * ts * delta**2 / den**2), 0.0)
    if t.ndim == 0:
        return float(val), float(dval)
    return val, dval


def _phi_jacobian(height: BoundaryHeightSample, x: np.ndarray) -> tuple:
    """Vectorised phi and its Jacobian; no domain checks (FD probes may poke
    marginally past |x| = 1, where the formula extends smoothly)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.linalg.norm(x, axis=-1)
    if np.any(r < 1e-12):
        raise DegeneratePoint("bulk map undefined at the origin")
    nu = x / r[:, None]
    tvec = np.stack([-nu[:, 1], nu[:, 0]], axis=-1)
    s = r - 1.0
    L, Lp = blending(np.abs(s), height.delta)
    theta = np.arctan2(x[:, 1], x[:, 0])
    h, hp, _ = circle_height_theta(height, theta)

    phi = x + (L * h)[:, None] * nu
    # grad(L h) = h L'(|s|) sign(s) nu + L h' t / r ; grad(nu) = t (x) t / r
    jac = np.broadcast_to(np.eye(2), (len(x), 2, 2)).copy()
    a_nn = h * Lp * np.sign(s)
    a_nt = L * hp / r
    a_tt = L * h / r
    jac += a_nn[:, None, None] * nu[:, :, None] * nu[:, None, :]
    jac += a_nt[:, None, None] * nu[:, :, None] * tvec[:, None, :]
    jac += a_tt[:, None, None] * tvec[:, :, None] * tvec[:, None, :]
    return phi, jac


def bulk_map(sample, x) -> tuple:
    """Domain mapping phi(x) = x + L(|1-|x||) h(a(x)) nu(a(x)) and Jacobian.

    Identity (exactly) wherever |x| <= 1 - delta.  Accepts a GeometrySample
    or a bare BoundaryHeightSample; x may be a single point or (N, 2).
    """
    height = sample.height if isinstance(sample, GeometrySample) else sample
    xa = np.asarray(x, dtype=float)
    single = xa.ndim == 1
    xb = np.atleast_2d(xa)
    if np.any(np.linalg.norm(xb, axis=-1) > 1.0 + 1e-12):
        raise ValueError("bulk_map expects points of the closed unit disk")
    phi, jac = _phi_jacobian(height, xb)
    if single:
        return phi[0], jac[0]
    return phi, jac
