"""Exact exterior algebra over C^{2n} with basis forms omega^0 .. omega^{2n-1}.

Basis indices are plain tuples of strictly increasing integers; a
:class:`Multivector` of degree ``p`` maps such tuples of length ``p`` to
coefficients.  Coefficients may be Gaussian rationals or polynomials; the
algebra only needs ``+``, ``*`` and truthiness (zero test) from them.
"""

from .errors import DomainError
from .scalars import GaussQ

__all__ = ["perm_sign", "sort_sign", "Multivector", "wedge", "top_coefficient"]


def sort_sign(seq):
    """Sign of the permutation that sorts ``seq``; 0 if an entry repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    # insertion sort, counting transpositions
    for i in range(1, len(seq)):
        j = i
        while j > 0 and seq[j - 1] > seq[j]:
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            sign = -sign
            j -= 1
    return sign


def perm_sign(seq):
    """Sign of the permutation taking ``seq`` to ``(0, 1, ..., len(seq)-1)``.

    Returns 0 when an index repeats.

    >>> perm_sign((1, 0, 2, 3))
    -1
    """
    k = len(seq)
    for s in seq:
        if not 0 <= s < k:
            raise DomainError(f"entry {s} outside [0, {k - 1}]")
    return sort_sign(seq)


class Multivector:
    """Homogeneous element of the exterior algebra, stored canonically."""

    __slots__ = ("n", "terms", "degree")

    def __init__(self, n, terms=None, degree=None):
        if n < 1:
            raise DomainError("dimension n must be positive")
        self.n = n
        clean = {}
        for idx, c in (terms or {}).items():
            idx = tuple(idx)
            s = sort_sign(idx)
            if any(not 0 <= i < 2 * n for i in idx):
                raise DomainError(f"basis index {idx} out of range for n={n}")
            if s == 0 or not c:
                continue
            key = tuple(sorted(idx))
            if degree is None:
                degree = len(key)
            elif len(key) != degree:
                raise DomainError("all terms of a multivector need one degree")
            c = c if s > 0 else -c
            if key in clean:
                c = clean[key] + c
                if not c:
                    del clean[key]
                    continue
            clean[key] = c
        self.terms = clean
        self.degree = 0 if degree is None else degree
        if not 0 <= self.degree <= 2 * n:
            raise DomainError(f"degree {self.degree} out of range for n={n}")

    @classmethod
    def _raw(cls, n, terms, degree):
        mv = object.__new__(cls)
        mv.n = n
        mv.terms = terms
        mv.degree = degree
        return mv

    @classmethod
    def basis(cls, n, *indices, coefficient=None):
        """``coefficient * omega^{i_1} ^ ... ^ omega^{i_p}`` in canonical form."""
        c = GaussQ(1) if coefficient is None else coefficient
        return cls(n, {tuple(indices): c}, degree=len(indices))

    @classmethod
    def scalar(cls, n, c):
        return cls(n, {(): c}, degree=0)

    @classmethod
    def zero(cls, n, degree=0):
        return cls._raw(n, {}, degree)

    @classmethod
    def top(cls, n):
        """The volume form Omega_{2n} = omega^0 ^ ... ^ omega^{2n-1}."""
        return cls.basis(n, *range(2 * n))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def coefficient(self, idx):
        idx = tuple(idx)
        s = sort_sign(idx)
        if s == 0:
            return None
        c = self.terms.get(tuple(sorted(idx)))
        if c is None:
            return None
        return c if s > 0 else -c

    def _check(self, other):
        if not isinstance(other, Multivector):
            raise TypeError("expected a Multivector")
        if other.n != self.n:
            raise DomainError("multivectors over different dimensions")
        if self.terms and other.terms and other.degree != self.degree:
            raise DomainError("cannot add multivectors of different degree")

    def __add__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            if k in out:
                s = out[k] + c
                if s:
                    out[k] = s
                else:
                    del out[k]
            else:
                out[k] = c
        deg = self.degree if self.terms else other.degree
        return Multivector._raw(self.n, out, deg)

    def __neg__(self):
        return Multivector._raw(self.n, {k: -c for k, c in self.terms.items()},
                                self.degree)

    def __sub__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        return self + (-other)

    def scale(self, c):
        out = {}
        for k, v in self.terms.items():
            p = c * v
            if p:
                out[k] = p
        return Multivector._raw(self.n, out, self.degree)

    def __mul__(self, c):
        if isinstance(c, Multivector):
            return NotImplemented
        return self.scale(c)

    def __rmul__(self, c):
        return self.scale(c)

    def __xor__(self, other):
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        if self.n != other.n:
            return False
        if not self.terms and not other.terms:
            return True
        return self.degree == other.degree and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, self.degree, frozenset(self.terms.items())))

    def map(self, f):
        """Apply ``f`` to every coefficient, dropping zeros."""
        out = {}
        for k, v in self.terms.items():
            w = f(v)
            if w:
                out[k] = w
        return Multivector._raw(self.n, out, self.degree)

    def __repr__(self):
        if not self.terms:
            return f"Multivector(n={self.n}, degree={self.degree}, 0)"
        body = " + ".join(
            f"({c})*w{''.join(str(i) for i in k) or '()'}"
            for k, c in sorted(self.terms.items())
        )
        return f"Multivector(n={self.n}, degree={self.degree}, {body})"


def wedge(F, G):
    """Exterior product ``F ^ G`` with sign absorption into canonical order."""
    if not isinstance(F, Multivector) or not isinstance(G, Multivector):
        raise TypeError("wedge expects Multivectors")
    if F.n != G.n:
        raise DomainError("wedge of multivectors over different dimensions")
    deg = F.degree + G.degree
    if deg > 2 * F.n:
        return Multivector.zero(F.n, min(deg, 2 * F.n))
    out = {}
    for I, a in F.terms.items():
        sI = set(I)
        for J, b in G.terms.items():
            if sI.intersection(J):
                continue
            s = sort_sign(I + J)
            key = tuple(sorted(I + J))
            c = a * b
            if s < 0:
                c = -c
            if key in out:
                c = out[key] + c
            out[key] = c
    return Multivector._raw(F.n, {k: c for k, c in out.items() if c}, deg)


def top_coefficient(F):
    """Coefficient ``c`` with ``F = c * Omega_{2n}``."""
    if not F.terms:
        return GaussQ(0)
    if F.degree != 2 * F.n:
        raise DomainError(f"top coefficient needs degree {2 * F.n}, got {F.degree}")
    c = F.terms.get(tuple(range(2 * F.n)))
    return GaussQ(0) if c is None else c
