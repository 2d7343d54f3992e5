"""Shared helpers: independent re-implementations used as oracles."""

from fractions import Fraction as F

import numpy as np
import pytest

import kakeya_lab as kl


def float_X_of_lambda(Cf: np.ndarray, t0: float, t1: float, lam: float) -> np.ndarray:
    """X(lam) written out longhand, independent of the library path."""
    I = np.eye(Cf.shape[0])
    inner = np.linalg.inv(I + (t0 + t1) * Cf)
    M = (t1 - t0) * Cf @ inner
    return lam / (1 - lam) * np.linalg.inv(I + lam * M) @ (I - (1 - lam) * M)


def float_T(Cf: np.ndarray, t0: float, t1: float) -> np.ndarray:
    I = np.eye(Cf.shape[0])
    return (t0 / t1) * (I + t0 * Cf) @ np.linalg.inv(I + t1 * Cf)


def rational_det_by_elimination(rows):
    """Fraction determinant via elimination; used to cross-check polynomial dets."""
    m = [list(map(F, r)) for r in rows]
    n = len(m)
    sign = 1
    det = F(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return F(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            sign = -sign
        det *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            for j in range(c, n):
                m[r][j] -= f * m[c][j]
    return sign * det


def reduced_ball_net(k: int, zero_axes, dim: int):
    """Lattice net of the unit ball restricted to a coordinate subspace."""
    delta = 2.0**-k
    r = int(1 / delta)
    free = [a for a in range(dim) if a not in zero_axes]
    vals = np.arange(-r, r + 1) * delta
    grids = np.stack(np.meshgrid(*([vals] * len(free)), indexing="ij"), axis=-1)
    grids = grids.reshape(-1, len(free))
    keep = (grids * grids).sum(axis=1) <= 1.0 + 1e-12
    out = []
    for g in grids[keep]:
        y = [0.0] * dim
        for a, v in zip(free, g):
            y[a] = v
        out.append(tuple(y))
    return out


def crossing_tube_pair(rng, family, delta, min_sep):
    """Two tubes whose curves meet at a common random point, directions min_sep apart."""
    Cf = family.C.to_float()
    while True:
        y1 = rng.uniform(-0.8, 0.8, 2)
        y2 = rng.uniform(-0.8, 0.8, 2)
        if np.linalg.norm(y1 - y2) >= min_sep:
            break
    tstar = rng.uniform(-0.8, 0.8)
    p = rng.uniform(-0.5, 0.5, 2)
    om1 = p + tstar * y1 + tstar**2 * (Cf @ y1)
    om2 = p + tstar * y2 + tstar**2 * (Cf @ y2)
    t1 = kl.TubeSpec(params=kl.CurveParams(y=tuple(y1), omega=tuple(om1)), delta=delta)
    t2 = kl.TubeSpec(params=kl.CurveParams(y=tuple(y2), omega=tuple(om2)), delta=delta)
    return t1, t2


@pytest.fixture
def worst_case_matrix():
    return kl.companion([0, 0])
