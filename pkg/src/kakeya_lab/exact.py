"""Exact rational scalars, small dense matrices and polynomials.

Everything here is exact: scalars are ``fractions.Fraction``, matrix and
polynomial arithmetic never rounds.  Floats appear only in
:func:`eigenvalues_float`, which is meant for condition screening and never
for pass/fail identities.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import SingularMatrix

Rational = Fraction

MAX_DIM = 8


def rat(x) -> Fraction:
    """Coerce an int, Fraction or ``"p/q"`` string to an exact rational."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        raise TypeError("refusing to coerce a float to an exact rational; pass a Fraction")
    raise TypeError(f"cannot interpret {x!r} as a rational")


def _rat_to_json(x: Fraction):
    return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class RationalMatrix:
    """Immutable square matrix over the rationals, dimension at most 8."""

    __slots__ = ("dim", "rows")

    def __init__(self, rows: Sequence[Sequence]):
        rows = tuple(tuple(rat(e) for e in row) for row in rows)
        dim = len(rows)
        if dim == 0 or any(len(r) != dim for r in rows):
            raise ValueError("matrix must be square and non-empty")
        if dim > MAX_DIM:
            raise ValueError(f"dimension {dim} exceeds the supported maximum {MAX_DIM}")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "rows", rows)

    def __setattr__(self, *a):
        raise AttributeError("RationalMatrix is immutable")

    @classmethod
    def identity(cls, dim: int) -> "RationalMatrix":
        return cls([[1 if i == j else 0 for j in range(dim)] for i in range(dim)])

    @classmethod
    def zero(cls, dim: int) -> "RationalMatrix":
        return cls([[0] * dim for _ in range(dim)])

    @classmethod
    def diagonal(cls, entries: Sequence) -> "RationalMatrix":
        d = len(entries)
        return cls([[entries[i] if i == j else 0 for j in range(d)] for i in range(d)])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        return isinstance(other, RationalMatrix) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return f"RationalMatrix({[[str(e) for e in r] for r in self.rows]})"

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        self._check_dim(other)
        return RationalMatrix(
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)]
        )

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        self._check_dim(other)
        return RationalMatrix(
            [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)]
        )

    def __neg__(self) -> "RationalMatrix":
        return RationalMatrix([[-e for e in r] for r in self.rows])

    def __mul__(self, other):
        if isinstance(other, RationalMatrix):
            self._check_dim(other)
            n = self.dim
            cols = list(zip(*other.rows))
            return RationalMatrix(
                [[sum(self.rows[i][k] * cols[j][k] for k in range(n)) for j in range(n)]
                 for i in range(n)]
            )
        s = rat(other)
        return RationalMatrix([[s * e for e in r] for r in self.rows])

    __rmul__ = __mul__

    def _check_dim(self, other: "RationalMatrix"):
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")

    def mat_vec(self, v: Sequence) -> tuple:
        if len(v) != self.dim:
            raise ValueError("dimension mismatch")
        return tuple(sum(r[j] * v[j] for j in range(self.dim)) for r in self.rows)

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(list(zip(*self.rows)))

    def is_zero(self) -> bool:
        return all(e == 0 for r in self.rows for e in r)

    def is_diagonal(self) -> bool:
        return all(e == 0 for i, r in enumerate(self.rows) for j, e in enumerate(r) if i != j)

    def power(self, p: int) -> "RationalMatrix":
        if p < 0:
            raise ValueError("negative power")
        out = RationalMatrix.identity(self.dim)
        for _ in range(p):
            out = out * self
        return out

    def det(self) -> Fraction:
        # Gaussian elimination; exact, so no pivot-size concerns.
        m = [list(r) for r in self.rows]
        n = self.dim
        sign = 1
        det = Fraction(1)
        for c in range(n):
            piv = next((r for r in range(c, n) if m[r][c] != 0), None)
            if piv is None:
                return Fraction(0)
            if piv != c:
                m[c], m[piv] = m[piv], m[c]
                sign = -sign
            det *= m[c][c]
            inv = 1 / m[c][c]
            for r in range(c + 1, n):
                f = m[r][c] * inv
                if f == 0:
                    continue
                for j in range(c, n):
                    m[r][j] -= f * m[c][j]
        return sign * det

    def inverse(self) -> "RationalMatrix":
        n = self.dim
        m = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(self.rows)]
        for c in range(n):
            piv = next((r for r in range(c, n) if m[r][c] != 0), None)
            if piv is None:
                raise SingularMatrix("matrix has zero determinant")
            m[c], m[piv] = m[piv], m[c]
            inv = 1 / m[c][c]
            m[c] = [e * inv for e in m[c]]
            for r in range(n):
                if r == c or m[r][c] == 0:
                    continue
                f = m[r][c]
                m[r] = [e - f * p for e, p in zip(m[r], m[c])]
        return RationalMatrix([row[n:] for row in m])

    def to_float(self) -> np.ndarray:
        return np.array([[float(e) for e in r] for r in self.rows], dtype=float)

    def to_json(self) -> dict:
        return {"dim": self.dim, "entries": [[_rat_to_json(e) for e in r] for r in self.rows]}

    @classmethod
    def from_json(cls, obj: dict) -> "RationalMatrix":
        m = cls(obj["entries"])
        if m.dim != obj.get("dim", m.dim):
            raise ValueError("declared dimension does not match entries")
        return m


class Polynomial:
    """Univariate polynomial with exact rational coefficients, low degree first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable):
        cs = [rat(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, *a):
        raise AttributeError("Polynomial is immutable")

    @property
    def degree(self) -> int:
        """Degree, with the zero polynomial reported as -1."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __getitem__(self, k: int) -> Fraction:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        if self.is_zero():
            return "Polynomial(0)"
        terms = [f"{c}*t^{k}" for k, c in enumerate(self.coeffs) if c != 0]
        return "Polynomial(" + " + ".join(terms) + ")"

    def __add__(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return Polynomial([self[k] + other[k] for k in range(n)])

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return Polynomial([self[k] - other[k] for k in range(n)])

    def __neg__(self) -> "Polynomial":
        return Polynomial([-c for c in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            if self.is_zero() or other.is_zero():
                return Polynomial([])
            out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                if a == 0:
                    continue
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return Polynomial(out)
        s = rat(other)
        return Polynomial([s * c for c in self.coeffs])

    __rmul__ = __mul__

    def __call__(self, x):
        out = 0
        for c in reversed(self.coeffs):
            out = out * x + (c if isinstance(x, (Fraction, int)) else float(c))
        return out

    def derivative(self) -> "Polynomial":
        return Polynomial([k * c for k, c in enumerate(self.coeffs)][1:])

    def divmod(self, other: "Polynomial") -> tuple["Polynomial", "Polynomial"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        q = [Fraction(0)] * max(len(rem) - len(other.coeffs) + 1, 0)
        d = other.degree
        lead = other.coeffs[-1]
        while len(rem) - 1 >= d and any(c != 0 for c in rem):
            k = len(rem) - 1 - d
            f = rem[-1] / lead
            q[k] = f
            for j in range(d + 1):
                rem[k + j] -= f * other.coeffs[j]
            while rem and rem[-1] == 0:
                rem.pop()
        return Polynomial(q), Polynomial(rem)

    def order_at_zero(self):
        """Index of the lowest non-zero coefficient; ``None`` for the zero polynomial."""
        for k, c in enumerate(self.coeffs):
            if c != 0:
                return k
        return None

    @classmethod
    def monomial(cls, k: int, c=1) -> "Polynomial":
        return cls([0] * k + [c])


class PolyMatrix:
    """Square matrix of polynomials with an exact, division-free determinant."""

    __slots__ = ("dim", "rows")

    def __init__(self, rows: Sequence[Sequence[Polynomial]]):
        rows = tuple(tuple(rows[i]) for i in range(len(rows)))
        dim = len(rows)
        if dim == 0 or any(len(r) != dim for r in rows):
            raise ValueError("matrix must be square and non-empty")
        if dim > MAX_DIM:
            raise ValueError(f"dimension {dim} exceeds the supported maximum {MAX_DIM}")
        if any(not isinstance(e, Polynomial) for r in rows for e in r):
            raise TypeError("entries must be Polynomial")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "rows", rows)

    def __setattr__(self, *a):
        raise AttributeError("PolyMatrix is immutable")

    @classmethod
    def from_rational(cls, m: RationalMatrix) -> "PolyMatrix":
        return cls([[Polynomial([e]) for e in r] for r in m.rows])

    def det(self) -> Polynomial:
        # Cofactor expansion down the leading column of each minor, memoised on
        # the surviving row set.  Division-free, so exact over the polynomial ring.
        n = self.dim
        rows = self.rows
        memo: dict[int, Polynomial] = {}

        def minor(row_mask: int, col: int) -> Polynomial:
            if col == n:
                return Polynomial([1])
            cached = memo.get(row_mask)
            if cached is not None:
                return cached
            total = Polynomial([])
            sign = 1
            for i in range(n):
                if not (row_mask >> i) & 1:
                    continue
                e = rows[i][col]
                if not e.is_zero():
                    sub = minor(row_mask & ~(1 << i), col + 1)
                    term = e * sub
                    total = total + term if sign > 0 else total - term
                sign = -sign
            memo[row_mask] = total
            return total

        return minor((1 << n) - 1, 0)


def poly_combination(dim: int, parts: Sequence[tuple[RationalMatrix | None, Polynomial]]) -> PolyMatrix:
    """Build sum_k p_k(t) * M_k as a PolyMatrix (``None`` stands for the identity)."""
    rows = [[Polynomial([]) for _ in range(dim)] for _ in range(dim)]
    for mat, poly in parts:
        for i in range(dim):
            for j in range(dim):
                coef = (1 if i == j else 0) if mat is None else mat[i, j]
                if coef != 0:
                    rows[i][j] = rows[i][j] + poly * coef
    return PolyMatrix(rows)


def companion(poly_coeffs: Sequence, l: int | None = None) -> RationalMatrix:
    """Companion matrix with coefficients c_1..c_l down the first column and a
    superdiagonal of ones."""
    coeffs = [rat(c) for c in poly_coeffs]
    if l is None:
        l = len(coeffs)
    if l < 1 or len(coeffs) != l:
        raise ValueError(f"need exactly l >= 1 coefficients, got {len(coeffs)} for l={l}")
    rows = [[Fraction(0)] * l for _ in range(l)]
    for i in range(l):
        rows[i][0] = coeffs[i]
        if i + 1 < l:
            rows[i][i + 1] = Fraction(1)
    return RationalMatrix(rows)


def nilpotency(c: RationalMatrix) -> tuple[bool, int | None]:
    """Whether ``c`` is nilpotent, and if so the least power that vanishes."""
    power = RationalMatrix.identity(c.dim)
    for k in range(1, c.dim + 1):
        power = power * c
        if power.is_zero():
            return True, k
    return False, None


def eigenvalues_float(c: RationalMatrix) -> list[complex]:
    """Floating-point eigenvalues, for screening only (never exact identities)."""
    return [complex(z) for z in np.linalg.eigvals(c.to_float())]


def char_poly(c: RationalMatrix) -> Polynomial:
    """Exact characteristic polynomial det(c - t*I)."""
    return poly_combination(
        c.dim, [(c, Polynomial([1])), (None, Polynomial([0, -1]))]
    ).det()


def _squarefree_part(p: Polynomial) -> Polynomial:
    g = _poly_gcd(p, p.derivative())
    if g.degree <= 0:
        return p
    q, r = p.divmod(g)
    assert r.is_zero()
    return q


def _poly_gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    while not b.is_zero():
        _, r = a.divmod(b)
        a, b = b, r
    if a.is_zero():
        return a
    return a * (1 / a.coeffs[-1])


def _sturm_chain(p: Polynomial) -> list[Polynomial]:
    chain = [p, p.derivative()]
    while not chain[-1].is_zero() and chain[-1].degree > 0:
        _, r = chain[-2].divmod(chain[-1])
        if r.is_zero():
            break
        chain.append(-r)
    return [q for q in chain if not q.is_zero()]

def _sign_changes(chain: list[Polynomial], x: Fraction) -> int:
    signs = [q(x) for q in chain]
    signs = [s for s in signs if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def count_real_roots(p: Polynomial, lo: Fraction, hi: Fraction) -> int:
    """Number of distinct real roots of ``p`` in the closed interval [lo, hi], exactly."""
    if p.is_zero():
        raise ValueError("zero polynomial has infinitely many roots")
    lo, hi = rat(lo), rat(hi)
    if lo > hi:
        raise ValueError("empty interval")
    sf = _squarefree_part(p)
    chain = _sturm_chain(sf)
    # Sturm counts roots in (lo, hi]; add lo back if it is a root.
    n = _sign_changes(chain, lo) - _sign_changes(chain, hi)
    if sf(lo) == 0:
        n += 1
    return n
