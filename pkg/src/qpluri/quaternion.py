"""Rational quaternions, hyperhermitian matrices and the Moore determinant."""

from fractions import Fraction
from itertools import permutations

import numpy as np

from .errors import DomainError

__all__ = ["Quaternion", "HyperhermitianMatrix", "moore_det"]


class Quaternion:
    """``a + b i + c j + d k`` with exact rational components."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a=0, b=0, c=0, d=0):
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.c = Fraction(c)
        self.d = Fraction(d)

    @property
    def components(self):
        return (self.a, self.b, self.c, self.d)

    def __add__(self, o):
        return Quaternion(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)

    def __sub__(self, o):
        return Quaternion(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)

    def __neg__(self):
        return Quaternion(-self.a, -self.b, -self.c, -self.d)

    def __mul__(self, o):
        if not isinstance(o, Quaternion):
            return self.scale(o)
        a1, b1, c1, d1 = self.components
        a2, b2, c2, d2 = o.components
        return Quaternion(
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        )

    def __rmul__(self, s):
        return self.scale(s)

    def scale(self, s):
        s = Fraction(s)
        return Quaternion(s * self.a, s * self.b, s * self.c, s * self.d)

    def conj(self):
        return Quaternion(self.a, -self.b, -self.c, -self.d)

    def norm2(self):
        return self.a ** 2 + self.b ** 2 + self.c ** 2 + self.d ** 2

    def is_real(self):
        return self.b == 0 and self.c == 0 and self.d == 0

    def __bool__(self):
        return any(self.components)

    def __eq__(self, o):
        if isinstance(o, (int, Fraction)):
            o = Quaternion(o)
        if not isinstance(o, Quaternion):
            return NotImplemented
        return self.components == o.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        return "Quaternion({}, {}, {}, {})".format(*self.components)

    def complex_pair(self):
        """``(z1, z2)`` with ``q = z1 + z2 j``, as Python complex numbers."""
        return complex(self.a, self.b), complex(self.c, self.d)


class HyperhermitianMatrix:
    """Square quaternionic matrix with ``A[k][j] == conj(A[j][k])``."""

    def __init__(self, rows):
        rows = [[q if isinstance(q, Quaternion) else Quaternion(q) for q in r]
                for r in rows]
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise DomainError("hyperhermitian matrix must be square and non-empty")
        for j in range(n):
            for k in range(j, n):
                if rows[k][j] != rows[j][k].conj():
                    raise DomainError(f"entries ({j},{k}) and ({k},{j}) are not conjugate")
        self.rows = rows
        self.n = n

    @classmethod
    def identity(cls, n, scale=1):
        return cls([[Quaternion(scale if j == k else 0) for k in range(n)]
                    for j in range(n)])

    @classmethod
    def diag(cls, values):
        n = len(values)
        return cls([[Quaternion(values[j] if j == k else 0) for k in range(n)]
                    for j in range(n)])

    def __getitem__(self, jk):
        j, k = jk
        return self.rows[j][k]

    def __eq__(self, other):
        return isinstance(other, HyperhermitianMatrix) and self.rows == other.rows

    def is_zero(self):
        return not any(q for r in self.rows for q in r)

    def complex_adjoint(self):
        """The ``2n x 2n`` complex matrix of the same linear map (float)."""
        n = self.n
        out = np.zeros((2 * n, 2 * n), dtype=complex)
        for j in range(n):
            for k in range(n):
                z1, z2 = self.rows[j][k].complex_pair()
                out[2 * j, 2 * k] = z1
                out[2 * j, 2 * k + 1] = z2
                out[2 * j + 1, 2 * k] = -z2.conjugate()
                out[2 * j + 1, 2 * k + 1] = z1.conjugate()
        return out

    def __repr__(self):
        return f"HyperhermitianMatrix({self.rows!r})"


def _cycles(perm):
    """Disjoint cycles, each rotated to start at its smallest element."""
    seen = set()
    cycles = []
    for start in range(len(perm)):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        nxt = perm[start]
        while nxt != start:
            cyc.append(nxt)
            seen.add(nxt)
            nxt = perm[nxt]
        cycles.append(cyc)
    return cycles


def moore_det(A):
    """Moore determinant of a hyperhermitian matrix, as an exact ``Fraction``.

    Sum over permutations written as disjoint cycles, each starting at its
    smallest index, with the cycles ordered by decreasing leading index;
    entries are multiplied in that order.
    """
    if not isinstance(A, HyperhermitianMatrix):
        raise DomainError("moore_det expects a HyperhermitianMatrix")
    n = A.n
    total = Quaternion(0)
    for perm in permutations(range(n)):
        cycles = sorted(_cycles(perm), key=lambda c: c[0], reverse=True)
        prod = Quaternion(1)
        for cyc in cycles:
            for t in range(len(cyc)):
                prod = prod * A.rows[cyc[t]][cyc[(t + 1) % len(cyc)]]
        if (n - len(cycles)) % 2:
            prod = -prod
        total = total + prod
    if not total.is_real():
        raise DomainError("Moore determinant came out non-real")
    return total.a
