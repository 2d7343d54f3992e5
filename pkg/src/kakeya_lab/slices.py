"""Slice matrices, nondegeneracy, height solvers and exponent calculators.

The algebra relates two horizontal slices of a curved tube family to
intermediate slices (matrix ``X(lam)``), to the set of tube centres (matrix
``T``) and to the auxiliary matrix ``M`` that both are built from.  The two
solvers look for height configurations that collapse these matrices onto the
identities needed by three- and four-slice sum/difference arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import NoSolution, NotCompanionForm, SingularConfiguration, SingularMatrix
from .exact import (
    Polynomial,
    RationalMatrix,
    eigenvalues_float,
    count_real_roots,
    nilpotency,
    poly_combination,
    rat,
)

GOLDEN_SUM_BARRIER = -2.0 * (1.0 + math.sqrt(2.0))  # root-sum threshold for the four-slice case

RESIDUAL_TOL = 1e-9
RANGE_PROBE = 1e-3


@dataclass(frozen=True)
class SliceMatrices:
    """The exact matrices relating two slices at heights t0 < t1."""

    X: RationalMatrix
    T: Optional[RationalMatrix]
    M: RationalMatrix
    heights: tuple[Fraction, Fraction, Fraction]  # (t0, t1, lam)


@dataclass(frozen=True)
class HeightsSolution:
    """Heights solving a slice identity, with the verified residual."""

    kind: str  # "nikodym3" | "kakeya4"
    heights: tuple  # (t0, t1, t2) or (t0, t1)
    lam: float | Fraction
    mu: Optional[float] = None
    residual: float = 0.0
    t0_range: Optional[tuple[float, float]] = None
    regime: str = ""

    def to_json(self) -> dict:
        def num(x):
            if isinstance(x, Fraction):
                return str(x) if x.denominator != 1 else int(x)
            return float(x)

        return {
            "kind": self.kind,
            "heights": [num(h) for h in self.heights],
            "lambda": num(self.lam),
            "mu": None if self.mu is None else num(self.mu),
            "residual": float(self.residual),
            "range": None if self.t0_range is None else [float(a) for a in self.t0_range],
            "regime": self.regime,
        }


def aux_matrix(C: RationalMatrix, t0, t1) -> RationalMatrix:
    """M = (t1-t0) C (I + (t0+t1)C)^{-1}."""
    t0, t1 = rat(t0), rat(t1)
    I = RationalMatrix.identity(C.dim)
    try:
        inner = (I + (t0 + t1) * C).inverse()
    except SingularMatrix as e:
        raise SingularConfiguration(f"I + (t0+t1)C is singular at t0+t1={t0 + t1}") from e
    return (t1 - t0) * (C * inner)


def x_of_lambda(C: RationalMatrix, t0, t1, lam) -> RationalMatrix:
    """X(lam) = lam/(1-lam) [I + lam M]^{-1} [I - (1-lam) M]."""
    lam = rat(lam)
    if lam == 1:
        raise SingularConfiguration("lam = 1")
    I = RationalMatrix.identity(C.dim)
    M = aux_matrix(C, t0, t1)
    try:
        left = (I + lam * M).inverse()
    except SingularMatrix as e:
        raise SingularConfiguration("I + lam*M is singular") from e
    return (lam / (1 - lam)) * (left * (I - (1 - lam) * M))


def centre_matrix(C: RationalMatrix, t0, t1) -> RationalMatrix:
    """T = (t0/t1) (I + t0 C)(I + t1 C)^{-1}; needs t0, t1 != 0."""
    t0, t1 = rat(t0), rat(t1)
    if t0 == 0 or t1 == 0:
        raise SingularConfiguration("T requires t0, t1 != 0")
    I = RationalMatrix.identity(C.dim)
    try:
        right = (I + t1 * C).inverse()
    except SingularMatrix as e:
        raise SingularConfiguration("I + t1*C is singular") from e
    return (t0 / t1) * ((I + t0 * C) * right)


def slice_matrices(C: RationalMatrix, t0, t1, lam) -> SliceMatrices:
    """All three slice matrices at heights (t0, t1) and interpolation lam.

    ``T`` is left undefined (``None``) when either height is zero.
    """
    t0, t1, lam = rat(t0), rat(t1), rat(lam)
    if t0 == t1:
        raise SingularConfiguration("t0 and t1 must differ")
    M = aux_matrix(C, t0, t1)
    X = x_of_lambda(C, t0, t1, lam)
    T = None if (t0 == 0 or t1 == 0) else centre_matrix(C, t0, t1)
    return SliceMatrices(X=X, T=T, M=M, heights=(t0, t1, lam))


def check_nondegenerate(C: RationalMatrix) -> bool:
    """det(I + 2tC) != 0 for all t in [-1, 1], decided exactly.

    Equivalent to every real eigenvalue of C lying in (-1/2, 1/2).
    """
    p = poly_combination(C.dim, [(None, Polynomial([1])), (C, Polynomial([0, 2]))]).det()
    if p.is_zero():  # cannot happen: leading behaviour of det(I+2tC) is bounded below
        return False
    return count_real_roots(p, Fraction(-1), Fraction(1)) == 0


# --------------------------------------------------------------------------- solvers

def _float_X(Mf: np.ndarray, z: float) -> np.ndarray:
    I = np.eye(Mf.shape[0])
    return z / (1.0 - z) * np.linalg.solve(I + z * Mf, I - (1.0 - z) * Mf)


def _float_T(Cf: np.ndarray, t0: float, t1: float) -> np.ndarray:
    I = np.eye(Cf.shape[0])
    return (t0 / t1) * (I + t0 * Cf) @ np.linalg.inv(I + t1 * Cf)


def _nikodym_residual(Cf: np.ndarray, t0: float, t1: float, t2: float) -> float:
    lam = (t0 - t2) / (t0 - t1)
    I = np.eye(Cf.shape[0])
    Mf = (t1 - t0) * Cf @ np.linalg.inv(I + (t0 + t1) * Cf)
    return float(np.max(np.abs(_float_X(Mf, lam) - _float_T(Cf, t0, t1))))


def _distinct_eigenvalue_pair(C: RationalMatrix, tol: float = 1e-8):
    """Cluster the float spectrum; return the (at most two) distinct values or None."""
    eigs = eigenvalues_float(C)
    reps: list[complex] = []
    for z in eigs:
        for r in reps:
            if abs(z - r) <= tol * max(1.0, abs(r)):
                break
        else:
            reps.append(z)
    if len(reps) > 2:
        return None
    if len(reps) == 1:
        reps = [reps[0], reps[0]]
    return reps[0], reps[1]


def _valid_heights(*ts: float) -> bool:
    if any(not (-1.0 < t < 1.0) or t == 0.0 for t in ts):
        return False
    return all(abs(a - b) > 1e-12 for i, a in enumerate(ts) for b in ts[i + 1:])


def _newton_heights(S: float, P: float, t0: float, t1: float, t2: float):
    """Solve t0+t1+t2 = -S and product identity = P for (t1, t2) at fixed t0."""

    def g(t1_, t2_):
        a = t0**2 * t2_**2 + t1_**2 * t2_**2 - 2 * t0**2 * t1_**2
        c = t0 * t2_ + t1_ * t2_ - 2 * t0 * t1_
        if abs(a) < 1e-14:
            return None
        return np.array([t0 + t1_ + t2_ + S, c / a - P])

    x = np.array([t1, t2], dtype=float)
    for _ in range(60):
        f0 = g(*x)
        if f0 is None:
            return None
        if np.max(np.abs(f0)) < 1e-12:
            return x
        J = np.empty((2, 2))
        h = 1e-7
        for j in range(2):
            xp = x.copy()
            xp[j] += h
            fp = g(*xp)
            if fp is None:
                return None
            J[:, j] = (fp - f0) / h
        try:
            step = np.linalg.solve(J, f0)
        except np.linalg.LinAlgError:
            return None
        x = x - step
    return None


def _nikodym_range(Cf, S, P, t0, t1, t2) -> Optional[tuple[float, float]]:
    for sgn in (-1.0, 1.0):
        t0p = t0 + sgn * RANGE_PROBE
        sol = _newton_heights(S, P, t0p, t1, t2)
        if sol is None or not _valid_heights(t0p, *sol):
            return None
        if _nikodym_residual(Cf, t0p, *sol) > RESIDUAL_TOL:
            return None
    return (t0 - RANGE_PROBE, t0 + RANGE_PROBE)


# Region walk for the real-spectrum case.  With t1 = b*t0, t2 = c*t0 the height
# quadratic becomes Q(x) = A x^2 + B x + D in x = (eigenvalue)*t0, and the walk
# looks for (b, c) with -(b+c+1) * x_plus(b, c) equal to 1 + h/k.

def _region_Q(b: float, c: float):
    A = 2 * b * b - b * b * c * c - c * c
    B = (b + c + 1) * (2 * b - b * c - c)
    D = 2 * b - b * c - c
    return A, B, D


def _region_x_plus(b: float, c: float) -> Optional[float]:
    A, B, D = _region_Q(b, c)
    disc = B * B - 4 * A * D
    if disc < 0 or A == 0:
        return None
    return (-B + math.sqrt(disc)) / (2 * A)


def _region_c_bounds(b: float) -> tuple[float, float]:
    lo = (-6 - 4 * b - 2 * b * b
          + 2 * math.sqrt(7 * b**4 + 28 * b**3 + 52 * b**2 + 48 * b + 9)) / (2 * (b * b + 2 * b + 3))
    return lo, 2 * b / (1 + b)


def _solve_real_pair(h: float, k: float):
    """Heights for a real eigenvalue pair; requires 0 < 1 + h/k < 3/5."""
    if abs(h) > abs(k):
        h, k = k, h
    tau = 1.0 + h / k
    if not (0.0 < tau < 0.6):
        return None
    for j in range(1, 45):
        b = 1.0 - 0.5**j
        lo, up = _region_c_bounds(b)
        if not lo < up:
            continue
        eps = (up - lo) * 1e-7
        f = lambda c: (lambda xp: None if xp is None else -(b + c + 1) * xp)(_region_x_plus(b, c))
        flo, fup = f(lo + eps), f(up - eps)
        if flo is None or fup is None or (flo - tau) * (fup - tau) > 0:
            continue
        a_, b_, fa = lo + eps, up - eps, flo - tau
        for _ in range(200):
            mid = 0.5 * (a_ + b_)
            fm = f(mid) - tau
            if fa * fm <= 0:
                b_ = mid
            else:
                a_, fa = mid, fm
        c0 = 0.5 * (a_ + b_)
        xp = _region_x_plus(b, c0)
        if xp is None:
            continue
        t0 = xp / h
        t1, t2 = b * t0, c0 * t0
        if _valid_heights(t0, t1, t2):
            return t0, t1, t2
    return None


def solve_nikodym_three_slice(C: RationalMatrix) -> HeightsSolution:
    """Find heights (t0, t1, t2) making X(lam) equal to T, with lam = (t0-t2)/(t0-t1).

    Supported inputs: C with C^2 = 0 (exact branch), and diagonal or invertible C
    whose spectrum consists of at most two values.  Raises :class:`NoSolution`
    with a reason code otherwise.
    """
    if (C * C).is_zero():
        # X(lam) and T are parallel; lam/(1-lam) = t0/t1 makes them equal.
        t0, t1 = Fraction(1, 3), Fraction(2, 3)
        lam = Fraction(1, 3)
        t2 = (1 - lam) * t0 + lam * t1
        X = x_of_lambda(C, t0, t1, lam)
        T = centre_matrix(C, t0, t1)
        residual = max(abs(float(a - b)) for ra, rb in zip(X.rows, T.rows) for a, b in zip(ra, rb))
        return HeightsSolution(
            kind="nikodym3",
            heights=(t0, t1, t2),
            lam=lam,
            residual=residual,
            t0_range=(float(t0) - RANGE_PROBE, float(t0) + RANGE_PROBE),
            regime="square_zero",
        )

    if not (C.is_diagonal() or C.det() != 0):
        raise NoSolution("unsupported_matrix_shape", "need C diagonal or invertible, or C^2 = 0")

    pair = _distinct_eigenvalue_pair(C)
    if pair is None:
        raise NoSolution("too_many_eigenvalues", "spectrum must have at most two values")
    h, k = pair
    if abs(h) < 1e-12 or abs(k) < 1e-12:
        raise NoSolution("reciprocal_sum_out_of_range", "zero eigenvalue")
    S = complex(1) / h + complex(1) / k
    if abs(S.imag) > 1e-9:
        raise NoSolution("unsupported_matrix_shape", "eigenvalues are not a real or conjugate pair")
    S = S.real
    if abs(S) >= 3.0:
        raise NoSolution("reciprocal_sum_out_of_range", f"|1/h + 1/k| = {abs(S):.6g} >= 3")

    Cf = C.to_float()
    P = (h * k).real

    if abs(h.imag) > 1e-10:  # complex conjugate pair alpha +/- i beta
        alpha, beta = h.real, abs(h.imag)
        a2b2 = alpha * alpha + beta * beta
        heights = None
        if 3 * alpha * alpha - beta * beta > 1e-14:
            t0 = math.sqrt(3 * alpha * alpha - beta * beta) / a2b2
            cand = (t0, -t0, -2 * alpha / a2b2)
            if _valid_heights(*cand):
                heights = cand
                regime = "complex_symmetric"
        if heights is None:
            # fallback branch with t2 = -t0: cubic in t0
            roots = np.roots([a2b2 * a2b2, 0.0, beta * beta - 3 * alpha * alpha, -6 * alpha])
            t1 = -2 * alpha / a2b2
            for r in roots:
                if abs(r.imag) < 1e-10:
                    cand = (r.real, t1, -r.real)
                    if _valid_heights(*cand):
                        heights = cand
                        regime = "complex_antisymmetric"
                        break
        if heights is None:
            raise NoSolution("complex_region_empty", "no admissible heights for this (alpha, beta)")
    else:
        got = _solve_real_pair(h.real, k.real)
        if got is None:
            raise NoSolution("real_region_empty", "1 + h/k outside (0, 3/5) or walk failed")
        heights = got
        regime = "real_pair"

    t0, t1, t2 = heights
    residual = _nikodym_residual(Cf, t0, t1, t2)
    if residual > RESIDUAL_TOL:
        raise NoSolution("residual_check_failed", f"residual {residual:.3g}")
    lam = (t0 - t2) / (t0 - t1)
    return HeightsSolution(
        kind="nikodym3",
        heights=(t0, t1, t2),
        lam=lam,
        residual=residual,
        t0_range=_nikodym_range(Cf, S, P, t0, t1, t2),
        regime=regime,
    )


def quartic_q(mu, l, m):
    """The root-compatibility function q(mu, l, m): quartic in mu, quadratic in l.

    Exact (``Fraction``) when all inputs are rational; otherwise evaluated in
    complex arithmetic and returned as a real number (the imaginary part
    cancels for conjugate or real pairs l, m).
    """
    exact = all(isinstance(v, (int, Fraction)) for v in (mu, l, m))
    if exact:
        mu, l, m = rat(mu), rat(l), rat(m)
    u = (mu * mu * m - mu * m + mu - 2) * (mu * m - mu + 2)
    val = -(mu * mu * (1 - mu) * (mu * m + 1)) * l * l + mu * u * l + u
    if exact:
        return val
    val = complex(val)
    scale = max(1.0, abs(val))
    if abs(val.imag) > 1e-7 * scale:
        raise ValueError("q(mu, l, m) is only real for real or conjugate pairs (l, m)")
    return val.real


def _quartic_coeffs(s: float, p: float) -> list[float]:
    # q as a polynomial in mu, written through s = l+m and p = lm (degree 4..0).
    return [
        p * (s - 1),
        -p * s + s * s + 2 * p - s,
        -s * s - 2 * p + 4 * s - 1,
        -4 * (s - 1),
        -4.0,
    ]


def _lambda_of_mu(mu: float, s: float) -> float:
    return 1.0 - mu * (1.0 - mu) / (2.0 - mu + mu * (1.0 - mu) * s)


def solve_kakeya_four_slice(C: RationalMatrix) -> HeightsSolution:
    """Find (t0, t1, lam, mu) with X(lam) - X(mu) equal to the identity.

    Works when C is invertible with a single complex-conjugate eigenvalue pair
    whose root-sum can be pushed below -2(1+sqrt(2)) by the height family
    t0 = -1+eps, t1 = 1-2eps.  Raises :class:`NoSolution` with reason
    ``nilpotent_M`` / ``real_spectrum_blocked`` / ``region_violated``.
    """
    is_nil, _ = nilpotency(C)
    if is_nil:
        raise NoSolution("nilpotent_M", "C (hence M) is nilpotent; no combination can reach I")
    eigs = eigenvalues_float(C)
    if all(abs(z.imag) <= 1e-10 for z in eigs):
        raise NoSolution("real_spectrum_blocked", "real spectrum cannot solve the quadratic in (-1,1)")
    pair = _distinct_eigenvalue_pair(C)
    if pair is None or abs(pair[0].conjugate() - pair[1]) > 1e-8 * max(1.0, abs(pair[0])):
        raise NoSolution("region_violated", "need exactly one complex-conjugate eigenvalue pair")
    alpha, beta = pair[0].real, abs(pair[0].imag)
    a2b2 = alpha * alpha + beta * beta

    # Root-sum of M's spectrum along the one-parameter height family; both
    # orientations of the outer heights are tried (swapping flips the sign).
    grid = [Fraction(2, 3) * Fraction(j, 65) for j in range(1, 65)]

    def root_sum(eps: float, swap: bool) -> float:
        t0, t1 = (-1 + eps, 1 - 2 * eps) if not swap else (1 - 2 * eps, -1 + eps)
        ssum = t0 + t1
        den = 1 + 2 * ssum * alpha + ssum * ssum * a2b2
        return 2 * (t1 - t0) * (alpha + ssum * a2b2) / den

    sums = [(root_sum(float(e), swap), e, swap) for e in grid for swap in (False, True)]
    admissible = [(e, swap) for s, e, swap in sums if s < GOLDEN_SUM_BARRIER]
    if not admissible:
        raise NoSolution("region_violated", "root-sum never falls below -2(1+sqrt(2)) on the grid")
    best_s, best_eps, best_swap = min(sums, key=lambda se: (se[0], se[1], se[2]))

    if best_swap:
        t0, t1 = Fraction(1) - 2 * best_eps, Fraction(-1) + best_eps
    else:
        t0, t1 = Fraction(-1) + best_eps, Fraction(1) - 2 * best_eps
    M = aux_matrix(C, t0, t1)
    Mf = M.to_float()
    ev = np.linalg.eigvals(Mf)
    # collapse to the two distinct values
    lm_pair = _distinct_eigenvalue_pair_from(ev)
    s = float((lm_pair[0] + lm_pair[1]).real)
    p = float((lm_pair[0] * lm_pair[1]).real)

    disc = (s + 2.0) ** 2 - 8.0
    if disc <= 0:
        raise NoSolution("region_violated", "mu interval is empty")
    mu_lo = (2.0 - s - math.sqrt(disc)) / (2.0 * (1.0 - s))

    coeffs = _quartic_coeffs(s, p)
    roots = [r.real for r in np.roots(coeffs) if abs(r.imag) < 1e-9]
    candidates = sorted(r for r in roots if 1e-12 < r < 1.0 - 1e-12)
    mu = None
    for r in candidates:
        # Newton polish on the quartic
        for _ in range(8):
            f = np.polyval(coeffs, r)
            df = np.polyval(np.polyder(coeffs), r)
            if df == 0:
                break
            r -= f / df
        lam = _lambda_of_mu(r, s)
        if 0.0 < r < 1.0 and 0.0 < lam < 1.0:
            residual = float(np.max(np.abs(_float_X(Mf, lam) - _float_X(Mf, r) - np.eye(C.dim))))
            if residual <= RESIDUAL_TOL:
                mu = r
                break
    if mu is None:
        raise NoSolution("region_violated", "no quartic root gave an admissible (lam, mu)")
    lam = _lambda_of_mu(mu, s)

    same_side = [e for e, swap in admissible if swap == best_swap]
    eps_lo, eps_hi = min(same_side), max(same_side)
    t0_at = (lambda e: float(1 - 2 * e)) if best_swap else (lambda e: float(-1 + e))
    t0_range = tuple(sorted((t0_at(eps_lo), t0_at(eps_hi))))
    return HeightsSolution(
        kind="kakeya4",
        heights=(t0, t1),
        lam=lam,
        mu=mu,
        residual=residual,
        t0_range=t0_range,
        regime="complex_pair_swapped" if best_swap else "complex_pair",
    )


def _distinct_eigenvalue_pair_from(eigs, tol: float = 1e-8):
    reps: list[complex] = []
    for z in eigs:
        for r in reps:
            if abs(z - r) <= tol * max(1.0, abs(r)):
                break
        else:
            reps.append(complex(z))
    if len(reps) == 1:
        reps = [reps[0], reps[0]]
    if len(reps) != 2:
        raise NoSolution("region_violated", "auxiliary matrix has more than two eigenvalues")
    return reps[0], reps[1]


# --------------------------------------------------------------------- calculators

def iterate_epsilon(eps: float) -> float:
    """One application of the improvement map eps -> (2 - eps^2)/(8 - 7 eps + eps^2)."""
    if isinstance(eps, (int, Fraction)):
        e = rat(eps)
        if not 0 <= e < 1:
            raise ValueError("eps must lie in [0, 1)")
        return (2 - e * e) / (8 - 7 * e + e * e)
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    return (2.0 - eps * eps) / (8.0 - 7.0 * eps + eps * eps)


def iteration_fixed_point(tol: float = 1e-12) -> float:
    """Fixed point of the improvement map in (0, 1), located by bisection."""
    f = lambda e: iterate_epsilon(e) - e
    a, b = 0.0, 0.99
    fa = f(a)
    for _ in range(200):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fa * fm <= 0:
            b = mid
        else:
            a, fa = mid, fm
        if b - a < tol:
            break
    return 0.5 * (a + b)


def dimension_lower_bound(n: int, eps, has_range: bool):
    """Lower bound (n-1)/(2-eps) for the box dimension, plus 1 given a height range."""
    if n < 3:
        raise ValueError("n must be at least 3")
    if isinstance(eps, (int, Fraction)):
        e = rat(eps)
        if not 0 <= e < 1:
            raise ValueError("eps must lie in [0, 1)")
        return Fraction(n - 1) / (2 - e) + (1 if has_range else 0)
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    return (n - 1) / (2.0 - eps) + (1.0 if has_range else 0.0)


@dataclass(frozen=True)
class ExponentThresholds:
    """Maximal exponents below which the small-set construction rules out estimates."""

    p_max: Fraction
    s_max: Fraction
    m: float  # vanishing order used; math.inf when the determinant vanishes identically

    def to_json(self) -> dict:
        return {
            "p_max": str(self.p_max),
            "s_max": str(self.s_max),
            "m": "inf" if math.isinf(self.m) else int(self.m),
        }


def genfail_exponents(n: int, k: int, tr_adj_zero: bool = False, det_zero: bool = False) -> ExponentThresholds:
    """Exponent thresholds for dimension n with repeated-factor multiplicity k.

    The flags select the strengthened variants available when k = 0; they are
    ignored for k > 0, where only the generic threshold applies.
    """
    if not 0 <= k <= n - 2:
        raise ValueError("need 0 <= k <= n-2")
    if k == 0 and tr_adj_zero and det_zero:
        p_max = Fraction(n - 1)
        s_max = Fraction(2 * n, n - 1) + Fraction(2, (n - 1) * (2 * n - 3))
        m: float = math.inf
    elif k == 0 and tr_adj_zero:
        p_max = n - Fraction(n - 1, 2 * n - 3)
        s_max = Fraction(2 * n, n - 1) + Fraction(2 * n - 2, 2 * (n - 1) ** 2 * (2 * n - 3))
        m = 2 * (n - 1)
    else:
        if k == n - 2:
            p_max = Fraction(n)
        else:
            p_max = n - Fraction(n - k - 2, 2 * n - k - 4)
        s_max = Fraction(2 * n, n - 1) + Fraction(2 * n - 2 * k - 2, (2 * n - k - 3) * (n - 1) * (2 * n - 3))
        m = 2 * (n - 1) - k - 1
    return ExponentThresholds(p_max=p_max, s_max=s_max, m=m)


# ----------------------------------------------------------------- W construction

def companion_blocks(C: RationalMatrix) -> list[tuple[int, list[Fraction]]]:
    """Split a companion-block direct sum into (size, coefficient list) blocks.

    Raises :class:`NotCompanionForm` if the matrix is not such a direct sum.
    """
    n = C.dim
    blocks = []
    r = 0
    while r < n:
        l = 1
        while r + l < n and C[r + l - 1, r + l] == 1:
            l += 1
        blocks.append((r, l))
        r += l
    # validate: inside its block the first column is free and the superdiagonal
    # is 1; everything else (including all off-block rectangles) is zero.
    owner = {}
    for (r, l) in blocks:
        for i in range(r, r + l):
            owner[i] = (r, l)
    for i in range(n):
        for j in range(n):
            r, l = owner[i]
            if not r <= j < r + l:
                if C[i, j] != 0:
                    raise NotCompanionForm(f"non-zero entry outside blocks at ({i},{j})")
                continue
            bi, bj = i - r, j - r
            if bj == 0:
                continue
            expected = 1 if bj == bi + 1 else 0
            if C[i, j] != expected:
                raise NotCompanionForm(f"entry ({i},{j}) breaks companion layout")
    return [(l, [C[r + i, r] for i in range(l)]) for (r, l) in blocks]


def w_matrix(C: RationalMatrix) -> RationalMatrix:
    """The linear centre map W for a companion-block matrix.

    Per block of size l with the first column (c_1, ..., c_l), W is zero except
    for its own first column (0, -1, c_1, ..., c_{l-2}); det(W - tI - t^2 C)
    then vanishes to order 2l-1 in t on that block.
    """
    blocks = companion_blocks(C)
    n = C.dim
    rows = [[Fraction(0)] * n for _ in range(n)]
    r = 0
    for l, cs in blocks:
        if l >= 2:
            rows[r + 1][r] = Fraction(-1)
        for i in range(2, l):
            rows[r + i][r] = cs[i - 2]
        r += l
    return RationalMatrix(rows)


def direction_map_det(C: RationalMatrix, W: RationalMatrix) -> Polynomial:
    """det(W - tI - t^2 C), exactly."""
    return poly_combination(
        C.dim,
        [(W, Polynomial([1])), (None, Polynomial([0, -1])), (C, Polynomial([0, 0, -1]))],
    ).det()


def vanishing_order(C: RationalMatrix, W: RationalMatrix) -> float:
    """Order of det(W - tI - t^2 C) at t = 0; ``inf`` when it vanishes identically."""
    order = direction_map_det(C, W).order_at_zero()
    return math.inf if order is None else order
