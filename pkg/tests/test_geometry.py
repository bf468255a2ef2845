import numpy as np
import pytest

from stochfem.errors import DegeneratePoint, OutOfBand
from stochfem.geometry import (
    UNIT_CIRCLE,
    UNIT_SPHERE,
    fermi,
    lift_area_ratio,
    outward_normal,
    tangent_projector,
    tangential_fd_divergence,
    tangential_fd_gradient,
    weingarten,
)
from stochfem.meshing import build_icosphere

from oracles import facet_area_defect, random_surface_points


def test_fermi_examples():
    d = fermi((2.0, 0.0, 0.0))
    assert d.distance == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(d.foot_point, [1, 0, 0], atol=1e-14)

    d = fermi((0.0, 0.0, -3.0))
    assert d.distance == pytest.approx(2.0, abs=1e-14)
    np.testing.assert_allclose(d.foot_point, [0, 0, -1], atol=1e-14)

    d = fermi((0.3, 0.4), UNIT_CIRCLE)
    assert d.distance == pytest.approx(-0.5, abs=1e-14)
    np.testing.assert_allclose(d.foot_point, [0.6, 0.8], atol=1e-14)


def test_fermi_reconstruction_identity():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(10_000, 3))
    x *= (0.5 + 1.5 * rng.random(len(x)))[:, None] / np.linalg.norm(
        x, axis=1, keepdims=True
    )
    for xi in x[:200]:
        d = fermi(xi)
        np.testing.assert_allclose(
            xi, d.foot_point + d.distance * d.normal_at_foot, atol=1e-12
        )
        assert abs(np.linalg.norm(d.normal_at_foot) - 1.0) < 1e-14
    # vectorised check of the remaining points through the same formula
    r = np.linalg.norm(x, axis=1)
    recon = x / r[:, None] * (1.0 + (r - 1.0))[:, None]
    np.testing.assert_allclose(recon, x, atol=1e-12)


def test_fermi_degenerate_origin():
    with pytest.raises(DegeneratePoint):
        fermi((0.0, 0.0, 0.0))


def test_weingarten_examples():
    np.testing.assert_allclose(weingarten([0, 0, 1]), np.diag([1, 1, 0]), atol=1e-15)
    np.testing.assert_allclose(weingarten([1, 0, 0]), np.diag([0, 1, 1]), atol=1e-15)
    np.testing.assert_allclose(
        weingarten([0, 1], UNIT_CIRCLE), np.diag([1, 0]), atol=1e-15
    )


def test_weingarten_properties():
    rng = np.random.default_rng(1)
    for p in random_surface_points(rng, 20):
        H = weingarten(p)
        np.testing.assert_allclose(H, H.T, atol=1e-14)
        np.testing.assert_allclose(H @ p, 0.0, atol=1e-14)
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(H)), [0, 1, 1], atol=1e-12)
    with pytest.raises(ValueError):
        weingarten([0, 0, 1.1])


def test_tangent_projector_and_normal():
    p = np.array([0.6, 0.0, 0.8])
    np.testing.assert_allclose(outward_normal(p), p)
    P = tangent_projector(p)
    np.testing.assert_allclose(P @ p, 0.0, atol=1e-15)
    np.testing.assert_allclose(P @ P, P, atol=1e-15)


def test_lift_area_ratio_examples():
    p = np.array([0.0, 0.0, 1.0])
    assert lift_area_ratio(p, p) == pytest.approx(1.0, abs=1e-14)
    assert lift_area_ratio(1.1 * p, p) == pytest.approx(1.0 / 1.21, abs=1e-14)
    assert lift_area_ratio(
        np.array([0.0, 1.1]), np.array([0.0, 1.0]), UNIT_CIRCLE
    ) == pytest.approx(1.0 / 1.1, abs=1e-14)
    with pytest.raises(OutOfBand):
        lift_area_ratio(1.6 * p, p)


def test_lift_area_ratio_matches_area_oracle_level1():
    mesh = build_icosphere(1)
    t = 7
    v = mesh.vertices[mesh.triangles[t]]
    n = mesh.facet_normals[t]

    def ratio(points):
        return lift_area_ratio(points, np.broadcast_to(n, points.shape))

    assert facet_area_defect(v[0], v[1], v[2], ratio) < 1e-6 * mesh.facet_areas[t]


def test_fd_gradient_examples():
    p = np.array([0.3, -0.4, 0.0])
    p /= np.linalg.norm(p)
    np.testing.assert_allclose(
        tangential_fd_gradient(lambda x: x @ x, p), 0.0, atol=1e-9
    )
    np.testing.assert_allclose(
        tangential_fd_gradient(lambda x: x[2], np.array([0.0, 0.0, 1.0])),
        0.0,
        atol=1e-9,
    )
    np.testing.assert_allclose(
        tangential_fd_gradient(lambda x: x[2], np.array([1.0, 0.0, 0.0])),
        [0, 0, 1],
        atol=1e-8,
    )


def test_fd_gradient_against_analytic_polynomials():
    rng = np.random.default_rng(2)
    fields = [
        (lambda x: x[0], lambda x: np.array([1.0, 0.0, 0.0])),
        (lambda x: x[0] * x[1], lambda x: np.array([x[1], x[0], 0.0])),
        (lambda x: x[2] ** 2, lambda x: np.array([0.0, 0.0, 2.0 * x[2]])),
    ]
    for p in random_surface_points(rng, 25):
        P = tangent_projector(p)
        for f, grad in fields:
            np.testing.assert_allclose(
                tangential_fd_gradient(f, p), P @ grad(p), atol=1e-7
            )


def test_fd_gradient_is_tangential_and_validates_step():
    p = np.array([0.0, 0.6, 0.8])
    g = tangential_fd_gradient(lambda x: np.sin(x[0] + x[2]), p)
    assert abs(g @ p) < 1e-9
    with pytest.raises(ValueError):
        tangential_fd_gradient(lambda x: x[0], p, step=1e-8)


def test_fd_divergence_of_tangential_field():
    # q = P e3 is the tangential part of a constant field; div_G q = -2 z on S^2
    def q(x):
        return np.array([0.0, 0.0, 1.0]) - x[2] * x

    rng = np.random.default_rng(3)
    for p in random_surface_points(rng, 10):
        assert tangential_fd_divergence(q, p) == pytest.approx(-2.0 * p[2], abs=1e-7)
