"""Vectorised evaluation of real orthonormal spherical harmonics (l <= 5).

Each harmonic is evaluated as a homogeneous harmonic polynomial in Cartesian
coordinates (solid harmonic), so values, gradients and Hessians are exact
polynomials with no pole singularities.  Restricted to |x| = 1 the values are
the orthonormal real spherical harmonics; tangential derivatives follow by
projecting the ambient polynomial derivatives.
"""
from __future__ import annotations

import numpy as np

from ._sh_table import COEFFS

#: index order of the 36 harmonics: lexicographic in (l, m), m = -l..l
KEYS = tuple((l, m) for l in range(6) for m in range(-l, l + 1))
N_HARMONICS = len(KEYS)

# second-derivative component order (i <= j): xx, xy, xz, yy, yz, zz
HESS_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def _build_tables():
    monos = sorted({(i, j, k) for key in KEYS for i, j, k, _ in COEFFS[key]})
    mono_index = {m: n for n, m in enumerate(monos)}

    def need(expo):
        if expo not in mono_index:
            mono_index[expo] = len(mono_index)
        return mono_index[expo]

    # derivative exponent triples must also exist in the monomial set
    entries_val, entries_d, entries_dd = [], [], []
    for col, key in enumerate(KEYS):
        for i, j, k, c in COEFFS[key]:
            entries_val.append((need((i, j, k)), col, c))
            e = (i, j, k)
            for ax in range(3):
                if e[ax] > 0:
                    de = list(e)
                    de[ax] -= 1
                    entries_d.append((ax, need(tuple(de)), col, c * e[ax]))
            for comp, (a, b) in enumerate(HESS_PAIRS):
                ee = list(e)
                fac = 1.0
                for ax in (a, b):
                    if ee[ax] == 0:
                        fac = 0.0
                        break
                    fac *= ee[ax]
                    ee[ax] -= 1
                if fac:
                    entries_dd.append((comp, need(tuple(ee)), col, c * fac))

    nm = len(mono_index)
    C = np.zeros((nm, N_HARMONICS))
    for row, col, c in entries_val:
        C[row, col] += c
    CD = np.zeros((3, nm, N_HARMONICS))
    for ax, row, col, c in entries_d:
        CD[ax, row, col] += c
    CDD = np.zeros((6, nm, N_HARMONICS))
    for comp, row, col, c in entries_dd:
        CDD[comp, row, col] += c
    expo = np.array(sorted(mono_index, key=mono_index.get), dtype=np.int64)
    return expo, C, CD, CDD


_EXPO, _C, _CD, _CDD = _build_tables()


def _monomials(points: np.ndarray) -> np.ndarray:
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    # powers 0..5 for each coordinate
    px = np.stack([x**n for n in range(6)], axis=1)
    py = np.stack([y**n for n in range(6)], axis=1)
    pz = np.stack([z**n for n in range(6)], axis=1)
    return px[:, _EXPO[:, 0]] * py[:, _EXPO[:, 1]] * pz[:, _EXPO[:, 2]]


def basis_values(points) -> np.ndarray:
    """(N, 36) values of the solid harmonics at the given points."""
    return _monomials(np.atleast_2d(np.asarray(points, dtype=float))) @ _C


def basis_gradients(points) -> np.ndarray:
    """(N, 3, 36) ambient gradients of the solid harmonics."""
    mono = _monomials(np.atleast_2d(np.asarray(points, dtype=float)))
    return np.stack([mono @ _CD[ax] for ax in range(3)], axis=1)


def basis_hessians_packed(points) -> np.ndarray:
    """(N, 6, 36) upper-triangle Hessian components in HESS_PAIRS order."""
    mono = _monomials(np.atleast_2d(np.asarray(points, dtype=float)))
    return np.stack([mono @ _CDD[c] for c in range(6)], axis=1)


def basis_hessians(points) -> np.ndarray:
    """(N, 3, 3, 36) ambient Hessians of the solid harmonics."""
    packed = basis_hessians_packed(points)
    out = np.empty((packed.shape[0], 3, 3, N_HARMONICS))
    for comp, (a, b) in enumerate(HESS_PAIRS):
        out[:, a, b] = packed[:, comp]
        out[:, b, a] = packed[:, comp]
    return out
