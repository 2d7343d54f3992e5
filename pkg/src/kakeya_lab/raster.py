"""Voxel rasterization of tube families, union volumes and box-counting slopes.

Cells are indexed by integer coordinates: cell j covers [j*delta, (j+1)*delta)
per axis, with delta = 2^-k, inside [-1,1]^n padded by one cell.  A cell is
occupied when its centre lies within delta of a curve point sampled at the
cell's height band.  Scaling claims downstream are slope-based, so stamping
constants are not chased.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .curves import CurveFamily, CurveParams, TubeSpec
from .errors import ResolutionTooFine
from .exact import RationalMatrix
from .slices import vanishing_order, w_matrix

CELL_BUDGET = 2**30
MAX_K = 12


@dataclass(frozen=True)
class CellSet:
    """Occupied cells of the delta-dyadic grid at resolution exponent k."""

    n: int
    k: int
    occupied: frozenset

    def __post_init__(self):
        object.__setattr__(self, "occupied", frozenset(tuple(int(c) for c in p) for p in self.occupied))

    @property
    def delta(self) -> float:
        return 2.0 ** (-self.k)

    @property
    def cell_count(self) -> int:
        return len(self.occupied)

    def volume(self) -> float:
        return self.delta**self.n * len(self.occupied)

    def to_json(self) -> dict:
        return {"n": self.n, "k": self.k, "cells": sorted(map(list, self.occupied))}

    @classmethod
    def from_json(cls, obj: dict) -> "CellSet":
        return cls(n=obj["n"], k=obj["k"], occupied=frozenset(map(tuple, obj["cells"])))


@dataclass(frozen=True)
class TubeFamilySpec:
    """A curve family, its tube list and the height interval in play."""

    family: CurveFamily
    tubes: tuple
    t_range: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "tubes", tuple(self.tubes))
        lo, hi = self.t_range
        if not (-1.0 <= lo < hi <= 1.0):
            raise ValueError("t_range must be a sub-interval of [-1, 1]")


def _workers(default: int = 1) -> int:
    env = os.environ.get("KAKEYA_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return default


def _tube_arrays(spec: TubeFamilySpec):
    d = spec.family.n - 1
    m = len(spec.tubes)
    Y = np.empty((m, d))
    W = np.empty((m, d))
    for i, t in enumerate(spec.tubes):
        Y[i] = [float(v) for v in t.params.y]
        W[i] = [float(v) for v in t.params.omega]
    return Y, W


def _band_indices(k: int, t_range) -> np.ndarray:
    lo = max(-1.0, float(t_range[0]))
    hi = min(1.0, float(t_range[1]))
    delta = 2.0**-k
    bands = np.arange(-(2**k) - 1, 2**k + 1, dtype=np.int64)
    centres = (bands + 0.5) * delta
    return bands[(centres >= lo) & (centres <= hi)]


def _stamp_chunk(Y, WY, CY, bands, k, d):
    """Packed cell keys touched by these tubes over the given height bands.

    A point at u (in cell units) can only occupy, per axis, the two cells
    floor(u-1/2) and floor(u-1/2)+1; out-of-box candidates get their squared
    axis contribution forced above 1 so the radius test drops them.
    """
    delta = 2.0**-k
    R = 2**k
    K = 2 * R + 2  # coordinate range [-R-1, R] shifted to [0, K-1]
    t = (bands + 0.5) * delta
    centres = WY[:, None, :] - t[None, :, None] * Y[:, None, :] - (t * t)[None, :, None] * CY[:, None, :]
    u = centres.reshape(-1, d)
    u *= 1.0 / delta
    j0f = np.floor(u - 0.5)
    w0 = j0f + 0.5
    w0 -= u  # in [-1, 0)
    w1 = w0 + 1.0
    if j0f.min() >= -R - 1 and j0f.max() + 1 <= R:  # whole chunk inside the box
        a0 = w0 * w0
        a1 = w1 * w1
    else:
        a0 = np.where((j0f >= -R - 1) & (j0f <= R), w0 * w0, 2.0)
        a1 = np.where((j0f + 1 >= -R - 1) & (j0f + 1 <= R), w1 * w1, 2.0)
    # base key of the (j0, ..., j0, band) candidate; neighbours are offsets
    base = np.zeros(u.shape[0])
    step = np.empty(d, dtype=np.int64)
    mult = K  # trailing band axis
    for axis in range(d - 1, -1, -1):
        base += j0f[:, axis] * mult
        step[axis] = mult
        mult *= K
    shift = sum(int(s) * (R + 1) for s in step) + R + 1  # also shifts the band axis
    base = base.astype(np.int64) + shift
    base += np.broadcast_to(bands[None, :], (Y.shape[0], bands.size)).reshape(-1)

    keys = []
    for bits in range(2**d):
        q = None
        for axis in range(d):
            ax = a1[:, axis] if (bits >> axis) & 1 else a0[:, axis]
            q = ax.copy() if q is None else q + ax
        mask = q < 1.0
        if not mask.any():
            continue
        off = sum(step[axis] for axis in range(d) if (bits >> axis) & 1)
        keys.append(base[mask] + off)
    if not keys:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(keys)


def _unpack_keys(keys: np.ndarray, k: int, n: int) -> list:
    R = 2**k
    K = 2 * R + 2
    out = np.empty((len(keys), n), dtype=np.int64)
    rem = keys.copy()
    for axis in range(n - 1, -1, -1):
        out[:, axis] = rem % K - (R + 1)
        rem //= K
    return list(map(tuple, out.tolist()))


def _chunk_ranges(m: int, chunk: int):
    for s in range(0, m, chunk):
        yield s, min(s + chunk, m)


def rasterize(spec: TubeFamilySpec, k: int, workers: Optional[int] = None) -> CellSet:
    """Voxelize the union of the tubes at delta = 2^-k.

    Raises :class:`ResolutionTooFine` when the stamping budget (2^30 candidate
    cells) would be exceeded; use :func:`union_volume` for larger counting-only
    experiments.
    """
    n = spec.family.n
    d = n - 1
    if k > MAX_K:
        raise ResolutionTooFine(f"k = {k} exceeds the supported maximum {MAX_K}")
    for t in spec.tubes:
        if abs(float(t.delta) - 2.0**-k) > 1e-15:
            raise ValueError("tube delta must equal 2^-k")
    if not spec.tubes:
        return CellSet(n=n, k=k, occupied=frozenset())
    bands = _band_indices(k, spec.t_range)
    m = len(spec.tubes)
    if m * bands.size * (2**d) > CELL_BUDGET:
        raise ResolutionTooFine(
            f"stamp budget exceeded: {m} tubes x {bands.size} bands x {2**d} candidates")
    Y, W = _tube_arrays(spec)
    CY = Y @ spec.family._cf.T

    R = 2**k
    K = 2 * R + 2
    chunk = max(1, int(2e6 // max(bands.size, 1)))
    jobs = list(_chunk_ranges(m, chunk))

    def run(rng):
        s, e = rng
        return _stamp_chunk(Y[s:e], W[s:e], CY[s:e], bands, k, d)

    nw = _workers() if workers is None else max(1, workers)
    dense_size = K ** n
    if dense_size <= 2.5e8:
        grid = np.zeros(dense_size, dtype=bool)
        if nw > 1:
            with ThreadPoolExecutor(max_workers=nw) as ex:
                for keys in ex.map(run, jobs):
                    grid[keys] = True
        else:
            for rng in jobs:
                grid[run(rng)] = True
        occ = np.nonzero(grid)[0]
    else:
        parts = []
        if nw > 1:
            with ThreadPoolExecutor(max_workers=nw) as ex:
                parts = [np.unique(keys) for keys in ex.map(run, jobs)]
        else:
            parts = [np.unique(run(rng)) for rng in jobs]
        occ = np.unique(np.concatenate(parts)) if parts else np.empty(0, dtype=np.int64)
    return CellSet(n=n, k=k, occupied=frozenset(_unpack_keys(occ, k, n)))


def union_volume(spec: TubeFamilySpec, k: int) -> tuple[int, float]:
    """(cell count, volume) of the union, streamed band by band.

    Handles unions too large to hold as a :class:`CellSet`; only per-band
    deduplication buffers are kept in memory.
    """
    n = spec.family.n
    d = n - 1
    if not spec.tubes:
        return 0, 0.0
    for t in spec.tubes:
        if abs(float(t.delta) - 2.0**-k) > 1e-15:
            raise ValueError("tube delta must equal 2^-k")
    bands = _band_indices(k, spec.t_range)
    m = len(spec.tubes)
    if m * (2**d) > CELL_BUDGET:
        raise ResolutionTooFine(f"per-band stamp budget exceeded: {m} tubes x {2**d} candidates")
    Y, W = _tube_arrays(spec)
    CY = Y @ spec.family._cf.T
    total = 0
    chunk = 200_000
    for band in bands:
        barr = np.array([band], dtype=np.int64)
        parts = []
        for s, e in _chunk_ranges(m, chunk):
            parts.append(np.unique(_stamp_chunk(Y[s:e], W[s:e], CY[s:e], barr, k, d)))
        if parts:
            total += int(np.unique(np.concatenate(parts)).size)
    return total, (2.0**-k) ** n * total


@dataclass(frozen=True)
class DimensionFit:
    slope: float          # estimated box dimension
    fit_residual: float   # rms residual of the log-log fit
    volumes: tuple        # (k, volume) pairs
    n: int


def box_dimension(builder: Callable, ks: Sequence[int], n: Optional[int] = None) -> DimensionFit:
    """Fit |N_delta| ~ delta^(n-d) over the given resolutions and return d.

    ``builder(k)`` may return a :class:`CellSet` or a bare volume (float).
    Unweighted least squares on (log2 delta, log2 volume); the rms residual of
    the fit is reported alongside.
    """
    ks = list(ks)
    if len(ks) < 3 or any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("need at least 3 strictly increasing resolutions")
    vols = []
    for k in ks:
        out = builder(k)
        if isinstance(out, CellSet):
            if n is None:
                n = out.n
            elif n != out.n:
                raise ValueError("inconsistent ambient dimension")
            v = out.volume()
        else:
            v = float(out)
        if v <= 0:
            raise ValueError(f"empty set at k={k}; cannot fit a slope")
        vols.append(v)
    if n is None:
        raise ValueError("ambient dimension n is required when the builder returns volumes")
    x = np.array([-k for k in ks], dtype=float)          # log2 delta
    y = np.log2(np.array(vols))
    coeff = np.polyfit(x, y, 1)
    resid = y - np.polyval(coeff, x)
    return DimensionFit(
        slope=float(n - coeff[0]),
        fit_residual=float(np.sqrt(np.mean(resid**2))),
        volumes=tuple(zip(ks, vols)),
        n=n,
    )


def ball_lattice_directions(dim: int, k: int, radius: float = 1.0) -> list:
    """The direction net (2^-k Z)^dim intersected with the closed ball."""
    delta = 2.0**-k
    r = int(math.floor(radius / delta))
    axes = [np.arange(-r, r + 1, dtype=np.int64)] * dim
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    pts = grid * delta
    keep = (pts * pts).sum(axis=1) <= radius * radius + 1e-12
    return [tuple(p) for p in pts[keep]]


def build_worstcase_kakeya(
    C: RationalMatrix,
    k: int,
    directions: Optional[Sequence] = None,
) -> TubeFamilySpec:
    """The small-volume construction for a companion-block matrix C.

    Centres are the linear images omega = W y; heights are restricted to
    [-delta^(1/m), delta^(1/m)] where m is the vanishing order of the
    direction-map determinant (the full range when it vanishes identically).
    Directions default to the 2^-k lattice net of the unit ball; callers must
    supply a thinner net in higher dimensions.
    """
    W = w_matrix(C)
    m = vanishing_order(C, W)
    delta = 2.0**-k
    n = C.dim + 1
    if directions is None:
        if C.dim > 2 and (2 ** (k + 1) + 1) ** C.dim > 2**22:
            raise ResolutionTooFine(
                "full lattice net too large in this dimension; pass explicit directions")
        directions = ball_lattice_directions(C.dim, k)
    Wf = W.to_float()
    tubes = []
    for y in directions:
        yf = tuple(float(v) for v in y)
        om = tuple(Wf @ np.array(yf))
        tubes.append(TubeSpec(params=CurveParams(y=yf, omega=om), delta=delta))
    cap = 1.0 if math.isinf(m) else min(1.0, delta ** (1.0 / m))
    family = CurveFamily(n=n, C=C)
    return TubeFamilySpec(family=family, tubes=tuple(tubes), t_range=(-cap, cap))


def covering_norm(spec: TubeFamilySpec, p_prime: float, k: int) -> float:
    """The L^{p'} norm of the tube overlap function on the grid:
    (delta^n * sum_cells count^{p'})^{1/p'}."""
    if p_prime < 1:
        raise ValueError("p_prime must be at least 1")
    n = spec.family.n
    d = n - 1
    bands = _band_indices(k, spec.t_range)
    Y, W = _tube_arrays(spec)
    CY = Y @ spec.family._cf.T
    parts = []
    for i in range(len(spec.tubes)):
        keys = _stamp_chunk(Y[i:i + 1], W[i:i + 1], CY[i:i + 1], bands, k, d)
        parts.append(np.unique(keys))
    if not parts:
        return 0.0
    allkeys = np.concatenate(parts)
    _, counts = np.unique(allkeys, return_counts=True)
    delta_n = (2.0**-k) ** n
    return float((delta_n * np.sum(counts.astype(float) ** p_prime)) ** (1.0 / p_prime))


@dataclass(frozen=True)
class HairbrushDecomposition:
    brushes: tuple        # tuple of sorted index tuples
    bad: tuple            # sorted indices not in any brush
    centrals: tuple       # candidate index chosen for each brush


def hairbrush_decompose(
    spec: TubeFamilySpec,
    N: int,
    candidates: Optional[Sequence[TubeSpec]] = None,
) -> HairbrushDecomposition:
    """Greedy extraction of hairbrushes of size at least N.

    Repeatedly pick the candidate central tube meeting the most remaining
    tubes (ties to the lowest index); if it meets at least N of them, remove
    them as one brush.  Tubes meet when their curves pass within twice the
    larger thickness at some common height.  On return no candidate meets N
    of the leftover ("bad") tubes.
    """
    tubes = list(spec.tubes)
    cands = list(candidates) if candidates is not None else tubes
    if not cands:
        raise ValueError("need at least one candidate central tube")
    fam = spec.family
    lo, hi = spec.t_range
    # sample at the finest tube scale so transversal crossings are not missed
    step = min(float(t.delta) for t in tubes + cands)
    H = max(257, int(math.ceil((hi - lo) / step)) + 1)
    ts = np.linspace(lo, hi, H)

    def traj(t: TubeSpec) -> np.ndarray:
        y = np.array([float(v) for v in t.params.y])
        w = np.array([float(v) for v in t.params.omega])
        cy = fam._cf @ y
        return w[None, :] - ts[:, None] * y[None, :] - (ts * ts)[:, None] * cy[None, :]

    tube_tr = np.stack([traj(t) for t in tubes])
    cand_tr = np.stack([traj(c) for c in cands])
    tube_delta = np.array([float(t.delta) for t in tubes])
    cand_delta = np.array([float(c.delta) for c in cands])
    # meets[c, t]: min over heights of |cand_c - tube_t| <= 2 max(delta)
    meets = np.empty((len(cands), len(tubes)), dtype=bool)
    for ci in range(len(cands)):
        dist = np.linalg.norm(cand_tr[ci][None, :, :] - tube_tr, axis=2).min(axis=1)
        meets[ci] = dist <= 2.0 * np.maximum(cand_delta[ci], tube_delta)

    remaining = np.ones(len(tubes), dtype=bool)
    brushes, centrals = [], []
    while True:
        counts = (meets & remaining[None, :]).sum(axis=1)
        best = int(np.argmax(counts))
        if counts[best] < N:
            break
        members = np.nonzero(meets[best] & remaining)[0]
        brushes.append(tuple(int(i) for i in members))
        centrals.append(best)
        remaining[members] = False
    return HairbrushDecomposition(
        brushes=tuple(brushes),
        bad=tuple(int(i) for i in np.nonzero(remaining)[0]),
        centrals=tuple(centrals),
    )


def surface_residual(points: Sequence) -> float:
    """max |x1 - x2*x3| over the given R^3 points (0 for an empty list)."""
    worst = 0.0
    for p in points:
        if len(p) != 3:
            raise ValueError("surface residual is defined for R^3 points")
        x1, x2, x3 = (float(c) for c in p)
        worst = max(worst, abs(x1 - x2 * x3))
    return worst
