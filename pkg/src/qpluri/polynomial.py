"""Sparse multivariate polynomials over the Gaussian rationals.

A :class:`RealPolynomial` lives in the real coordinates ``x_0 .. x_{4n-1}``
of quaternionic space, ``q_j = x_{4j} + i x_{4j+1} + j x_{4j+2} + k x_{4j+3}``.
Coefficients may be complex because the first-order operators of the
calculus carry a factor ``i``.
"""

from fractions import Fraction
from numbers import Rational

from .errors import DomainError
from .scalars import GaussQ, as_gauss

__all__ = ["RealPolynomial"]


def _add_exp(a, b):
    return tuple(x + y for x, y in zip(a, b))


class RealPolynomial:
    """Polynomial in ``4n`` real variables with exact coefficients.

    ``terms`` maps an exponent tuple of length ``4n`` to a coefficient.  The
    stored form is canonical (no zero coefficients), so ``==`` is exact.
    """

    __slots__ = ("n", "terms", "_hash")

    def __init__(self, n, terms=None):
        if n < 1:
            raise DomainError("dimension n must be positive")
        self.n = n
        nv = 4 * n
        clean = {}
        for exp, c in (terms or {}).items():
            exp = tuple(exp)
            if len(exp) != nv or any(e < 0 for e in exp):
                raise DomainError(f"bad exponent {exp} for n={n}")
            c = as_gauss(c)
            if c:
                clean[exp] = c
        self.terms = clean
        self._hash = None

    # -- constructors -------------------------------------------------
    @classmethod
    def _raw(cls, n, terms):
        p = object.__new__(cls)
        p.n = n
        p.terms = terms
        p._hash = None
        return p

    @classmethod
    def constant(cls, n, c):
        c = as_gauss(c)
        return cls._raw(n, {(0,) * (4 * n): c} if c else {})

    @classmethod
    def variable(cls, n, m):
        if not 0 <= m < 4 * n:
            raise DomainError(f"variable index {m} out of range for n={n}")
        exp = [0] * (4 * n)
        exp[m] = 1
        return cls._raw(n, {tuple(exp): GaussQ(1)})

    @classmethod
    def variables(cls, n):
        return [cls.variable(n, m) for m in range(4 * n)]

    @classmethod
    def normsq(cls, n, center=None):
        """``|q - center|^2`` as a polynomial; ``center`` has 4n rationals."""
        xs = cls.variables(n)
        total = cls.constant(n, 0)
        for m, x in enumerate(xs):
            shift = x if center is None else x - Fraction(center[m])
            total = total + shift * shift
        return total

    # -- basic protocol -----------------------------------------------
    @property
    def nvars(self):
        return 4 * self.n

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def degree(self):
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def is_real(self):
        return all(c.is_real() for c in self.terms.values())

    def constant_term(self):
        return self.terms.get((0,) * self.nvars, GaussQ(0))

    def __eq__(self, other):
        if isinstance(other, RealPolynomial):
            return self.n == other.n and self.terms == other.terms
        if isinstance(other, (int, Rational, GaussQ)):
            o = as_gauss(other)
            if not o:
                return not self.terms
            return self.terms == {(0,) * self.nvars: o}
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.n, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        return f"RealPolynomial(n={self.n}, {self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for exp in sorted(self.terms, reverse=True):
            mono = "*".join(
                f"x{m}" if e == 1 else f"x{m}^{e}" for m, e in enumerate(exp) if e
            )
            c = self.terms[exp]
            parts.append(f"{c}*{mono}" if mono else str(c))
        return " + ".join(parts)

    # -- ring operations ----------------------------------------------
    def _coerce(self, other):
        if isinstance(other, RealPolynomial):
            if other.n != self.n:
                raise DomainError("polynomials over different dimensions")
            return other
        if isinstance(other, (int, Rational, GaussQ)):
            return RealPolynomial.constant(self.n, other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for exp, c in o.terms.items():
            s = out.get(exp)
            if s is None:
                out[exp] = c
            else:
                s = s + c
                if s:
                    out[exp] = s
                else:
                    del out[exp]
        return RealPolynomial._raw(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return RealPolynomial._raw(self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def scale(self, c):
        c = as_gauss(c)
        if not c:
            return RealPolynomial._raw(self.n, {})
        return RealPolynomial._raw(self.n, {e: c * v for e, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Rational, GaussQ)):
            return self.scale(other)
        if not isinstance(other, RealPolynomial):
            return NotImplemented
        if other.n != self.n:
            raise DomainError("polynomials over different dimensions")
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = _add_exp(e1, e2)
                s = out.get(e)
                out[e] = c1 * c2 if s is None else s + c1 * c2
        return RealPolynomial._raw(self.n, {e: c for e, c in out.items() if c})

    def __rmul__(self, other):
        if isinstance(other, (int, Rational, GaussQ)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise DomainError("only non-negative integer powers")
        result = RealPolynomial.constant(self.n, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- calculus -----------------------------------------------------
    def diff(self, m):
        """Partial derivative in ``x_m``."""
        if not 0 <= m < self.nvars:
            raise DomainError(f"variable index {m} out of range")
        out = {}
        for exp, c in self.terms.items():
            e = exp[m]
            if e:
                new = exp[:m] + (e - 1,) + exp[m + 1:]
                out[new] = c * e
        return RealPolynomial._raw(self.n, out)

    def __call__(self, point):
        return self.evaluate(point)

    def evaluate(self, point):
        """Exact value at a point given by ``4n`` rationals."""
        if len(point) != self.nvars:
            raise DomainError(f"point needs {self.nvars} coordinates")
        pt = [Fraction(x) for x in point]
        total = GaussQ(0)
        for exp, c in self.terms.items():
            v = Fraction(1)
            for x, e in zip(pt, exp):
                if e:
                    v *= x ** e
            total = total + c * v
        return total

    def evaluate_float(self, coords):
        """Vectorised float evaluation; ``coords`` is a sequence of 4n arrays."""
        import numpy as np

        total = 0.0
        for exp, c in self.terms.items():
            term = complex(c)
            for x, e in zip(coords, exp):
                if e:
                    term = term * np.asarray(x, dtype=float) ** e
            total = total + term
        return total
