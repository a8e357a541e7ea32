"""Prime-field arithmetic, polynomials modulo D^L - 1, and polynomial matrices.

Everything here is exact integer arithmetic over F_p.  Polynomials are stored
dense; inside the circular ring they always have length L.  Matrices of
polynomials support determinant and adjugate by cofactor expansion, which is
all that is needed at the sizes that occur (at most 4x4).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "FieldSpec",
    "Poly",
    "PolyMatrix",
    "poly_mul_circ",
    "deconvolve_tail",
    "DecodeFailure",
    "mat_rank",
    "mat_inv",
    "mat_solve_right",
]


class DecodeFailure(Exception):
    """Raised when a deconvolution has no solution consistent with a zero tail."""


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class FieldSpec:
    """The prime field F_p."""

    p: int

    def __post_init__(self):
        if not _is_prime(self.p):
            raise ValueError(f"field modulus must be prime, got {self.p}")

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def neg(self, a: int) -> int:
        return (-a) % self.p

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroDivisionError("inverse of zero in F_p")
        return pow(a, self.p - 2, self.p)


@dataclass(frozen=True)
class Poly:
    """Dense polynomial over F_p; coefficient k multiplies D^k."""

    coeffs: tuple
    field: FieldSpec

    @classmethod
    def of(cls, coeffs: Iterable[int], field: FieldSpec) -> "Poly":
        return cls(tuple(int(c) % field.p for c in coeffs), field)

    @classmethod
    def zero(cls, length: int, field: FieldSpec) -> "Poly":
        return cls((0,) * length, field)

    @classmethod
    def one(cls, field: FieldSpec, length: int = 1) -> "Poly":
        return cls((1,) + (0,) * (length - 1), field)

    @classmethod
    def monomial(cls, k: int, field: FieldSpec, coef: int = 1, length: int | None = None) -> "Poly":
        n = (k + 1) if length is None else length
        c = [0] * n
        c[k] = coef % field.p
        return cls(tuple(c), field)

    def __len__(self) -> int:
        return len(self.coeffs)

    def degree(self) -> int:
        """Degree of the polynomial; -1 for the zero polynomial."""
        for k in range(len(self.coeffs) - 1, -1, -1):
            if self.coeffs[k]:
                return k
        return -1

    def is_zero(self) -> bool:
        return self.degree() < 0

    def padded(self, length: int) -> "Poly":
        if len(self.coeffs) > length:
            if self.degree() >= length:
                raise ValueError("cannot pad: degree exceeds target length")
            return Poly(self.coeffs[:length], self.field)
        return Poly(self.coeffs + (0,) * (length - len(self.coeffs)), self.field)

    def add(self, other: "Poly") -> "Poly":
        n = max(len(self), len(other))
        a, b = self.padded(n), other.padded(n)
        return Poly(tuple((x + y) % self.field.p for x, y in zip(a.coeffs, b.coeffs)), self.field)

    def scale(self, c: int) -> "Poly":
        c %= self.field.p
        return Poly(tuple((c * x) % self.field.p for x in self.coeffs), self.field)

    def as_array(self, length: int | None = None) -> np.ndarray:
        p = self if length is None else self.padded(length)
        return np.array(p.coeffs, dtype=np.int64)


def poly_mul_circ(a: Poly, b: Poly, L: int) -> Poly:
    """Product of two polynomials modulo D^L - 1 (circular convolution)."""
    if L <= 0:
        raise ValueError("ring length L must be positive")
    if a.field != b.field:
        raise ValueError("mixed fields")
    if len(a) > L and a.degree() >= L:
        raise ValueError("polynomial longer than ring length")
    if len(b) > L and b.degree() >= L:
        raise ValueError("polynomial longer than ring length")
    p = a.field.p
    full = np.convolve(a.as_array(L), b.as_array(L))
    out = np.zeros(L, dtype=np.int64)
    for k in range(full.shape[0]):
        out[k % L] += full[k]
    return Poly(tuple(int(v % p) for v in out), a.field)


def poly_mul(a: Poly, b: Poly) -> Poly:
    """Plain (non-circular) product over F_p."""
    if a.field != b.field:
        raise ValueError("mixed fields")
    p = a.field.p
    full = np.convolve(a.as_array(), b.as_array()) % p
    return Poly(tuple(int(v) for v in full), a.field)


@dataclass(frozen=True)
class PolyMatrix:
    """Rectangular matrix of polynomials over a common F_p."""

    entries: tuple  # tuple of row tuples of Poly
    field: FieldSpec

    @classmethod
    def of(cls, rows: Sequence[Sequence[Poly]], field: FieldSpec) -> "PolyMatrix":
        ncol = len(rows[0])
        for r in rows:
            if len(r) != ncol:
                raise ValueError("ragged rows")
            for e in r:
                if e.field != field:
                    raise ValueError("entry field mismatch")
        return cls(tuple(tuple(r) for r in rows), field)

    @classmethod
    def from_monomials(
        cls, coeffs: Sequence[Sequence[int]], delays: Sequence[Sequence[int]], field: FieldSpec
    ) -> "PolyMatrix":
        """Matrix with entries coeffs[i][j] * D^delays[i][j]."""
        rows = []
        for crow, drow in zip(coeffs, delays):
            rows.append([Poly.monomial(int(d), field, coef=int(c)) for c, d in zip(crow, drow)])
        return cls.of(rows, field)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    def entry(self, i: int, j: int) -> Poly:
        return self.entries[i][j]

    def minor(self, i: int, j: int) -> "PolyMatrix":
        rows = [
            tuple(e for cj, e in enumerate(r) if cj != j)
            for ri, r in enumerate(self.entries)
            if ri != i
        ]
        return PolyMatrix(tuple(rows), self.field)

    def det(self, L: int) -> Poly:
        """Determinant by cofactor expansion, reduced mod D^L - 1."""
        if self.rows != self.cols:
            raise ValueError("determinant of non-square matrix")
        n = self.rows
        if n == 1:
            return self.entries[0][0].padded(L)
        acc = Poly.zero(L, self.field)
        for j in range(n):
            e = self.entries[0][j]
            if e.is_zero():
                continue
            term = poly_mul_circ(e, self.minor(0, j).det(L), L)
            if j % 2:
                term = term.scale(self.field.p - 1)
            acc = acc.add(term)
        return acc

    def adj(self, L: int) -> "PolyMatrix":
        """Adjugate: adj(M) @ M = det(M) * I in F_p[D]/(D^L - 1)."""
        if self.rows != self.cols:
            raise ValueError("adjugate of non-square matrix")
        n = self.rows
        if n == 1:
            return PolyMatrix.of([[Poly.one(self.field, L)]], self.field)
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                # adj[i][j] = (-1)^(i+j) * det(minor(j, i))
                cof = self.minor(j, i).det(L)
                if (i + j) % 2:
                    cof = cof.scale(self.field.p - 1)
                row.append(cof)
            out.append(row)
        return PolyMatrix.of(out, self.field)

    def matmul(self, other: "PolyMatrix", L: int) -> "PolyMatrix":
        if self.cols != other.rows:
            raise ValueError("dimension mismatch")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = Poly.zero(L, self.field)
                for k in range(self.cols):
                    acc = acc.add(poly_mul_circ(self.entries[i][k], other.entries[k][j], L))
                row.append(acc)
            out.append(row)
        return PolyMatrix.of(out, self.field)


def deconvolve_tail(f: Poly, g: Poly, n_frozen: int) -> Poly:
    """Recover c with a zero tail of length n_frozen from f = g * c mod (D^L - 1).

    Because deg(g) <= n_frozen and the unknown c vanishes on its last n_frozen
    coefficients, the circular product never wraps around, so c follows by
    backward substitution from the top index.  The result is verified by
    forward convolution; an inconsistent f raises DecodeFailure.
    """
    field = f.field
    p = field.p
    L = len(f)
    if L == 0:
        raise ValueError("empty target polynomial")
    gdeg = g.degree()
    if gdeg < 0:
        raise ValueError("deconvolution by the zero polynomial")
    if gdeg > n_frozen:
        raise ValueError("deg(g) exceeds the frozen tail length")
    garr = g.as_array()[: gdeg + 1]
    # Factor g = D^k * g' so that g' has a nonzero constant term; D^k is undone
    # by circularly shifting f left by k.
    k = 0
    while garr[k] == 0:
        k += 1
    gp = garr[k:]
    dd = gp.shape[0] - 1  # degree of g'
    farr = np.roll(f.as_array(), -k)
    if n_frozen >= L:
        raise ValueError("frozen tail covers the whole block")
    c = np.zeros(L, dtype=np.int64)
    lead_inv = field.inv(int(gp[dd]))
    for j in range(L - n_frozen - 1, -1, -1):
        acc = int(farr[j + dd])
        for i in range(dd):
            acc -= int(gp[i]) * int(c[j + dd - i])
        c[j] = (acc * lead_inv) % p
    cpoly = Poly(tuple(int(v) for v in c), field)
    if poly_mul_circ(g, cpoly, L).coeffs != f.coeffs:
        raise DecodeFailure("no zero-tail solution consistent with the received polynomial")
    return cpoly


# ---------------------------------------------------------------------------
# Dense linear algebra over F_p (used for generator construction and oracles)
# ---------------------------------------------------------------------------


def _eliminate(mat: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Gauss-Jordan elimination mod p; returns reduced matrix and pivot columns."""
    m = mat % p
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        pr = r + int(nz[0])
        if pr != r:
            m[[r, pr]] = m[[pr, r]]
        m[r] = (m[r] * pow(int(m[r, c]), p - 2, p)) % p
        other = np.nonzero(m[:, c])[0]
        other = other[other != r]
        if other.size:
            if p == 2:
                m[other] ^= m[r]
            else:
                m[other] = (m[other] - np.outer(m[other, c], m[r])) % p
        pivots.append(c)
        r += 1
    return m, pivots


def mat_rank(mat: np.ndarray, p: int) -> int:
    _, pivots = _eliminate(np.array(mat, dtype=np.int64), p)
    return len(pivots)


def mat_inv(mat: np.ndarray, p: int) -> np.ndarray:
    """Inverse of a square matrix over F_p; raises ValueError if singular."""
    a = np.array(mat, dtype=np.int64) % p
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    aug = np.concatenate([a, np.eye(n, dtype=np.int64)], axis=1)
    red, pivots = _eliminate(aug, p)
    if pivots[: n] != list(range(n)) or len(pivots) < n:
        raise ValueError("singular matrix over F_p")
    return red[:, n:]


def mat_solve_right(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """Solve a @ x = b over F_p for square invertible a."""
    return (mat_inv(a, p) @ (np.array(b, dtype=np.int64) % p)) % p
