"""Parabolic curve families, their tubes, intersections and the two-curve locus.

A family is determined by a square matrix C of size n-1; the curve with
direction y and centre omega is t -> (omega - t*y - t^2*C*y, t) for t in
[-1, 1].  Tubes thicken curves by a radius delta in every horizontal slice.

Operations accept exact rational data (ints / Fractions) or floats; exact
inputs stay exact wherever the result is rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConfigurationViolation,
    HeightOutOfSupport,
    IdenticalCurves,
    SingularConfiguration,
)
from .exact import RationalMatrix, rat

Vector = tuple


def _is_exact(*values) -> bool:
    for v in values:
        if isinstance(v, (tuple, list)):
            if not _is_exact(*v):
                return False
        elif not isinstance(v, (int, Fraction)):
            return False
    return True


def _as_float_vec(v: Sequence) -> np.ndarray:
    return np.array([float(x) for x in v], dtype=float)


@dataclass(frozen=True)
class CurveParams:
    """Direction y and centre omega, both in the unit ball of R^{n-1}."""

    y: Vector
    omega: Vector

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(self.y))
        object.__setattr__(self, "omega", tuple(self.omega))
        if len(self.y) != len(self.omega):
            raise ValueError("y and omega must have equal length")


@dataclass(frozen=True)
class TubeSpec:
    """A delta-thickened curve; cross-sections are (n-1)-balls of radius delta."""

    params: CurveParams
    delta: float

    def __post_init__(self):
        if not 0 < float(self.delta) < 1:
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class CurveFamily:
    """All curves sharing the quadratic coefficient matrix C (ambient dimension n)."""

    n: int
    C: RationalMatrix
    _cf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 3 <= self.n <= 9:
            raise ValueError("ambient dimension must be between 3 and 9")
        if self.C.dim != self.n - 1:
            raise ValueError("C must have size n-1")
        object.__setattr__(self, "_cf", self.C.to_float())

    @property
    def nondegenerate(self) -> bool:
        """Whether the direction-derivative determinant avoids zero on the support."""
        from .slices import check_nondegenerate

        return check_nondegenerate(self.C)

    def to_json(self) -> dict:
        return {"n": self.n, "C": self.C.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "CurveFamily":
        return cls(n=obj["n"], C=RationalMatrix.from_json(obj["C"]))


def _check_height(t):
    if not -1 <= float(t) <= 1:
        raise HeightOutOfSupport(f"t = {t} outside [-1, 1]")


def curve_point(family: CurveFamily, params: CurveParams, t) -> tuple:
    """The point (omega - t*y - t^2*C*y, t)."""
    _check_height(t)
    if _is_exact(params.y, params.omega, t):
        t = rat(t)
        cy = family.C.mat_vec([rat(v) for v in params.y])
        sp = tuple(rat(w) - t * rat(v) - t * t * c for w, v, c in zip(params.omega, params.y, cy))
        return sp + (t,)
    y = _as_float_vec(params.y)
    w = _as_float_vec(params.omega)
    tf = float(t)
    sp = w - tf * y - tf * tf * (family._cf @ y)
    return tuple(sp) + (tf,)


def curve_tangent(family: CurveFamily, params: CurveParams, t) -> tuple:
    """The tangent (-y - 2t*C*y, 1); the last component is exactly 1."""
    _check_height(t)
    if _is_exact(params.y, t):
        t = rat(t)
        cy = family.C.mat_vec([rat(v) for v in params.y])
        sp = tuple(-rat(v) - 2 * t * c for v, c in zip(params.y, cy))
        one = Fraction(1)
        return sp + (one,)
    y = _as_float_vec(params.y)
    tf = float(t)
    sp = -y - 2.0 * tf * (family._cf @ y)
    return tuple(sp) + (1.0,)


def _exact_sqrt(x: Fraction) -> Optional[Fraction]:
    if x < 0:
        return None
    pn, pd = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if pn * pn == x.numerator and pd * pd == x.denominator:
        return Fraction(pn, pd)
    return None


def intersect_curves(family: CurveFamily, p1: CurveParams, p2: CurveParams) -> list:
    """Heights t in [-1, 1] at which the two curves meet.

    Solves (t*I + t^2*C)(y1 - y2) = omega1 - omega2 on the first component with
    a non-trivial coefficient, then verifies every component.  Exact inputs
    give exact heights when the discriminant is a rational square, floats
    otherwise (verified to 1e-10).
    """
    if p1 == p2:
        raise IdenticalCurves("curve parameters coincide")
    exact = _is_exact(p1.y, p1.omega, p2.y, p2.omega)

    if exact:
        dy = [rat(a) - rat(b) for a, b in zip(p1.y, p2.y)]
        dw = [rat(a) - rat(b) for a, b in zip(p1.omega, p2.omega)]
        cdy = family.C.mat_vec(dy)

        def residual_zero(t):
            return all(t * a + t * t * b == c for a, b, c in zip(dy, cdy, dw))

        comp = next((i for i in range(len(dy)) if dy[i] != 0 or cdy[i] != 0), None)
        if comp is None:
            # identical direction: parallel curves meet nowhere (or everywhere,
            # which the parameter check above already excluded)
            return []
        a, b, c = cdy[comp], dy[comp], dw[comp]  # a t^2 + b t = c
        roots = []
        if a == 0:
            roots = [c / b]
        else:
            disc = b * b + 4 * a * c
            sq = _exact_sqrt(disc)
            if sq is None:
                if disc < 0:
                    return []
                sqf = math.sqrt(float(disc))
                roots = [(-float(b) + s * sqf) / (2 * float(a)) for s in (1, -1)]
            else:
                roots = [(-b + s * sq) / (2 * a) for s in (1, -1)]
        out = []
        for t in roots:
            if not -1 <= t <= 1:
                continue
            if isinstance(t, Fraction):
                if residual_zero(t):
                    out.append(t)
            else:
                res = max(abs(t * float(ai) + t * t * float(bi) - float(ci))
                          for ai, bi, ci in zip(dy, cdy, dw))
                if res <= 1e-10:
                    out.append(t)
        return sorted(set(out))

    dy = _as_float_vec(p1.y) - _as_float_vec(p2.y)
    dw = _as_float_vec(p1.omega) - _as_float_vec(p2.omega)
    cdy = family._cf @ dy
    comp = next((i for i in range(dy.size) if abs(dy[i]) > 1e-14 or abs(cdy[i]) > 1e-14), None)
    if comp is None:
        return []
    a, b, c = cdy[comp], dy[comp], dw[comp]
    if abs(a) < 1e-14:
        roots = [c / b]
    else:
        disc = b * b + 4 * a * c
        if disc < 0:
            return []
        roots = [(-b + s * math.sqrt(disc)) / (2 * a) for s in (1, -1)]
    out = []
    for t in roots:
        if -1 <= t <= 1:
            res = float(np.max(np.abs(t * dy + t * t * cdy - dw)))
            if res <= 1e-10:
                out.append(t)
    return sorted(set(out))


def _tube_centres(family: CurveFamily, params: CurveParams, ts: np.ndarray) -> np.ndarray:
    y = _as_float_vec(params.y)
    w = _as_float_vec(params.omega)
    cy = family._cf @ y
    return w[None, :] - ts[:, None] * y[None, :] - (ts * ts)[:, None] * cy[None, :]


def intersection_diameter(
    family: CurveFamily,
    tube1: TubeSpec,
    tube2: TubeSpec,
    samples: int | None = None,
) -> tuple[float, float]:
    """Measured diameter of the intersection of two tubes, plus |y1 - y2|.

    Height sampling at step delta/4 (or ``samples`` points); each slice is the
    lens cut from two radius-delta discs, represented by its extreme points.
    Returns (0.0, separation) when the tubes are disjoint.
    """
    if float(tube1.delta) != float(tube2.delta):
        raise ConfigurationViolation("tubes must share delta")
    delta = float(tube1.delta)
    sep = float(np.linalg.norm(_as_float_vec(tube1.params.y) - _as_float_vec(tube2.params.y)))
    if samples is None:
        samples = int(math.ceil(8.0 / delta)) + 1
    ts = np.linspace(-1.0, 1.0, samples)
    c1 = _tube_centres(family, tube1.params, ts)
    c2 = _tube_centres(family, tube2.params, ts)
    diff = c2 - c1
    dist = np.linalg.norm(diff, axis=1)
    overlap = dist < 2.0 * delta
    if not overlap.any():
        return 0.0, sep

    pts = []
    d = c1.shape[1]
    for idx in np.nonzero(overlap)[0]:
        mid = 0.5 * (c1[idx] + c2[idx])
        t = ts[idx]
        g = dist[idx]
        if g > 1e-12:
            u = diff[idx] / g
            half = math.sqrt(max(delta * delta - 0.25 * g * g, 0.0))
            # one perpendicular direction suffices for the extreme points
            perp = np.zeros(d)
            axis = int(np.argmin(np.abs(u)))
            perp[axis] = 1.0
            perp -= np.dot(perp, u) * u
            nrm = np.linalg.norm(perp)
            if nrm > 1e-12:
                perp /= nrm
                pts.append(np.append(mid + half * perp, t))
                pts.append(np.append(mid - half * perp, t))
            else:
                pts.append(np.append(mid, t))
        else:
            for axis in range(d):
                e = np.zeros(d)
                e[axis] = delta
                pts.append(np.append(mid + e, t))
                pts.append(np.append(mid - e, t))
    P = np.array(pts)
    # max pairwise distance, chunked to bound memory
    best = 0.0
    for i in range(0, len(P), 512):
        block = P[i:i + 512]
        d2 = np.sum((block[:, None, :] - P[None, :, :]) ** 2, axis=2)
        best = max(best, float(np.sqrt(d2.max())))
    return best, sep


# ----------------------------------------------------------------------- locus

def _one_plus(C: RationalMatrix, s) -> RationalMatrix:
    return RationalMatrix.identity(C.dim) + rat(s) * C


def locus_curve_params(family: CurveFamily, y0: Sequence, t0, u, s) -> tuple[tuple, tuple]:
    """Direction and centre of the curve meeting the axis curve at s and the
    (y0, t0)-curve at u, as functions of the free parameters (u, s)."""
    if _is_exact(tuple(y0), t0, u, s):
        t0, u, s = rat(t0), rat(u), rat(s)
        if s == u:
            raise SingularConfiguration("s = u")
        C = family.C
        core = _one_plus(C, s + u).inverse() * _one_plus(C, t0 + u)
        y0v = [rat(v) for v in y0]
        y = tuple(((t0 - u) / (s - u)) * x for x in core.mat_vec(y0v))
        omega_mat = _one_plus(C, s) * core
        omega = tuple((s * (t0 - u) / (s - u)) * x for x in omega_mat.mat_vec(y0v))
        return y, omega
    t0f, uf, sf = float(t0), float(u), float(s)
    if sf == uf:
        raise SingularConfiguration("s = u")
    Cf = family._cf
    I = np.eye(Cf.shape[0])
    core = np.linalg.solve(I + (sf + uf) * Cf, I + (t0f + uf) * Cf)
    y0f = _as_float_vec(y0)
    y = ((t0f - uf) / (sf - uf)) * (core @ y0f)
    omega = (sf * (t0f - uf) / (sf - uf)) * ((I + sf * Cf) @ core @ y0f)
    return tuple(y), tuple(omega)


def locus_point(family: CurveFamily, y0: Sequence, t0, u, s, t) -> tuple:
    """Point of the locus of curves meeting both base curves, at height t."""
    if _is_exact(tuple(y0), t0, u, s, t):
        t0, u, s, t = rat(t0), rat(u), rat(s), rat(t)
        if s == u:
            raise SingularConfiguration("s = u")
        C = family.C
        mat = _one_plus(C, s + t) * _one_plus(C, s + u).inverse() * _one_plus(C, t0 + u)
        fac = (s - t) * (t0 - u) / (s - u)
        sp = tuple(fac * x for x in mat.mat_vec([rat(v) for v in y0]))
        return sp + (t,)
    t0f, uf, sf, tf = float(t0), float(u), float(s), float(t)
    if sf == uf:
        raise SingularConfiguration("s = u")
    Cf = family._cf
    I = np.eye(Cf.shape[0])
    mat = (I + (sf + tf) * Cf) @ np.linalg.solve(I + (sf + uf) * Cf, I + (t0f + uf) * Cf)
    fac = (sf - tf) * (t0f - uf) / (sf - uf)
    sp = fac * (mat @ _as_float_vec(y0))
    return tuple(sp) + (tf,)


def _rel_residual_to_line(points: np.ndarray, direction: np.ndarray) -> np.ndarray:
    u = direction / np.linalg.norm(direction)
    proj = points @ u
    res = points - proj[:, None] * u[None, :]
    norms = np.linalg.norm(points, axis=1)
    safe = np.maximum(norms, 1e-300)
    return np.linalg.norm(res, axis=1) / safe


def _best_fit_direction(points: np.ndarray) -> np.ndarray:
    _, _, vt = np.linalg.svd(points, full_matrices=False)
    return vt[0]


def _minimax_line_residual(points: np.ndarray) -> float:
    """min over lines through 0 of the max relative distance of the points (2-d exact
    grid search; best-fit direction elsewhere)."""
    if points.shape[1] == 2:
        angles = np.linspace(0.0, math.pi, 20001)
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        norms = np.maximum(np.linalg.norm(points, axis=1), 1e-300)
        # distance of p to span{d} is |p x d| in 2-d
        cross = np.abs(points[:, 0][:, None] * dirs[:, 1][None, :]
                       - points[:, 1][:, None] * dirs[:, 0][None, :])
        rel = cross / norms[:, None]
        return float(rel.max(axis=0).min())
    return float(_rel_residual_to_line(points, _best_fit_direction(points)).max())


@dataclass(frozen=True)
class LocusDichotomy:
    omega_one_param: bool
    y_one_param: bool
    max_line_residual: float
    omega_offline_witness: float  # min over all lines of the max relative residual
    samples: int


def locus_dichotomy_test(
    family: CurveFamily,
    y0: Sequence,
    t0: float,
    trials: int = 200,
    seed: int = 0,
    tol: float = 1e-9,
) -> LocusDichotomy:
    """Sample (u, s) pairs and test whether locus centres / directions are
    confined to one line.

    Centres are tested against the predicted line span{(I + t0*C) y0};
    directions against their own best-fit line through the origin.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    rng = np.random.default_rng(seed)
    Cf = family._cf
    y0f = _as_float_vec(y0)
    t0f = float(t0)
    omegas, ys = [], []
    attempts = 0
    while len(omegas) < trials and attempts < 50 * trials:
        attempts += 1
        u, s = rng.uniform(-1.0, 1.0, size=2)
        if abs(s - u) < 0.05 or abs(s - t0f) < 0.05 or abs(u - t0f) < 0.05 or abs(s) < 0.025:
            continue
        y, omega = locus_curve_params(family, tuple(y0f), t0f, u, s)
        if np.linalg.norm(omega) < 1e-9 or np.linalg.norm(y) < 1e-9:
            continue
        omegas.append(omega)
        ys.append(y)
    O = np.array(omegas)
    Y = np.array(ys)
    line = (np.eye(Cf.shape[0]) + t0f * Cf) @ y0f
    omega_res = _rel_residual_to_line(O, line)
    y_res = _rel_residual_to_line(Y, _best_fit_direction(Y))
    return LocusDichotomy(
        omega_one_param=bool(omega_res.max() <= tol),
        y_one_param=bool(y_res.max() <= tol),
        max_line_residual=float(omega_res.max()),
        omega_offline_witness=_minimax_line_residual(O),
        samples=len(omegas),
    )


# ------------------------------------------------------------------ claim check

@dataclass(frozen=True)
class ClaimReport:
    dist_centres: float
    dist_to_line: float
    k_centres: float  # dist_centres / 2^{-l}
    k_line: float     # dist_to_line / 2^{-(l+m)}
    passed: bool
    meet_heights: tuple[float, float, float]  # (t_j, t_i, s)


def _nearest_approach(family, pa: CurveParams, pb: CurveParams, delta: float, window=None):
    """(height, distance) of the closest approach, optionally restricted to
    heights t with |t - window[0]| in [window[1], window[2]]."""
    ts = np.linspace(-1.0, 1.0, int(math.ceil(16.0 / delta)) + 1)
    if window is not None:
        centre, lo, hi = window
        gap = np.abs(ts - centre)
        ts = ts[(gap >= lo) & (gap <= hi)]
        if ts.size == 0:
            return None
    ca = _tube_centres(family, pa, ts)
    cb = _tube_centres(family, pb, ts)
    dist = np.linalg.norm(ca - cb, axis=1)
    i = int(np.argmin(dist))
    return float(ts[i]), float(dist[i])


def hairbrush_claim_check(
    family: CurveFamily,
    central: TubeSpec,
    tube_j: TubeSpec,
    tube_i: TubeSpec,
    k: int,
    l: int,
    m: int,
    K: float = 16.0,
) -> ClaimReport:
    """Check the two quantitative hairbrush distance bounds on one tube triple.

    Requires C^2 = 0, the central tube normalised to direction 0 / centre 0,
    and the dyadic direction and meeting-height preconditions indexed by
    (k, l, m).  Reports |omega_j - omega_i|, the distance of omega_i from the
    line span{(I + t_j C) y_j}, the fitted constants, and whether both are
    within K times their dyadic bounds.
    """
    C = family.C
    if not (C * C).is_zero():
        raise ConfigurationViolation("claim check requires C^2 = 0")
    if any(abs(float(v)) > 1e-12 for v in central.params.y + central.params.omega):
        raise ConfigurationViolation("central tube must be normalised to T_0(0)")
    deltas = {float(central.delta), float(tube_j.delta), float(tube_i.delta)}
    if len(deltas) != 1:
        raise ConfigurationViolation("all three tubes must share delta")
    delta = deltas.pop()

    yj = _as_float_vec(tube_j.params.y)
    yi = _as_float_vec(tube_i.params.y)
    for name, v, idx in (("y_j", yj, k), ("y_i", yi, k), ("y_j - y_i", yj - yi, l)):
        r = float(np.linalg.norm(v))
        if not 2.0 ** (-idx - 1) < r <= 2.0 ** (-idx):
            raise ConfigurationViolation(f"|{name}| = {r:.4g} outside dyadic shell 2^-{idx}")
    if l < k - 2:
        raise ConfigurationViolation("need l >= k - 2")

    t_j, dj = _nearest_approach(family, tube_j.params, central.params, delta)
    t_i, di = _nearest_approach(family, tube_i.params, central.params, delta)
    if max(dj, di) > 2.0 * delta:
        raise ConfigurationViolation("tube_j and tube_i must both meet the central tube")
    # the i-j meeting is sought inside the prescribed dyadic distance window
    window = (t_j, delta * 2.0 ** (l + m), delta * 2.0 ** (l + m + 1))
    hit = _nearest_approach(family, tube_i.params, tube_j.params, delta, window=window)
    if hit is None or hit[1] > 2.0 * delta:
        raise ConfigurationViolation(
            "tubes i and j do not meet at any height with |s - t_j| in "
            "[delta*2^(l+m), delta*2^(l+m+1)]")
    s = hit[0]

    wj = _as_float_vec(tube_j.params.omega)
    wi = _as_float_vec(tube_i.params.omega)
    dist_centres = float(np.linalg.norm(wj - wi))
    line = (np.eye(C.dim) + t_j * family._cf) @ yj
    u = line / np.linalg.norm(line)
    dist_to_line = float(np.linalg.norm(wi - np.dot(wi, u) * u))
    k_centres = dist_centres / 2.0 ** (-l)
    k_line = dist_to_line / 2.0 ** (-(l + m))
    return ClaimReport(
        dist_centres=dist_centres,
        dist_to_line=dist_to_line,
        k_centres=k_centres,
        k_line=k_line,
        passed=(k_centres <= K and k_line <= K),
        meet_heights=(t_j, t_i, s),
    )


# ------------------------------------------------------------------------- io

def tubes_to_json(tubes: Sequence[TubeSpec]) -> list:
    return [
        {"y": [float(v) for v in t.params.y],
         "omega": [float(v) for v in t.params.omega],
         "delta": float(t.delta)}
        for t in tubes
    ]


def tubes_from_json(obj: list) -> list[TubeSpec]:
    return [
        TubeSpec(params=CurveParams(y=tuple(d["y"]), omega=tuple(d["omega"])), delta=d["delta"])
        for d in obj
    ]
