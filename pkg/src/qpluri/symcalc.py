"""Exact quaternionic calculus on polynomials.

The first-order operators ``nabla_{j alpha}`` (``j`` in ``[0, 2n)``,
``alpha`` in ``{0, 1}``) act on functions of ``x_0 .. x_{4n-1}``; for the
block ``l`` (rows ``2l`` and ``2l+1``)::

    nabla_{2l,0}   =  d_{4l}   + i d_{4l+1}      nabla_{2l,1}   = -d_{4l+2} - i d_{4l+3}
    nabla_{2l+1,0} =  d_{4l+2} - i d_{4l+3}      nabla_{2l+1,1} =  d_{4l}   - i d_{4l+1}

From these come ``d0``, ``d1`` on polynomial-valued forms, the Baston
operator ``baston(u) = d0(d1(u))``, the coefficients ``delta_ij`` and the
Monge-Ampere density.  Everything is exact.
"""

from fractions import Fraction
from itertools import permutations

from .errors import DomainError
from .exterior import Multivector, perm_sign, top_coefficient, wedge
from .polynomial import RealPolynomial
from .quaternion import HyperhermitianMatrix, Quaternion
from .scalars import GaussQ

__all__ = [
    "OperatorTable",
    "nabla",
    "d0",
    "d1",
    "d_alpha",
    "baston",
    "delta_ij",
    "baston_from_deltas",
    "ma_density",
    "wedge_density",
    "hessian",
    "moore_ma_constant",
]

_ONE = GaussQ(1)
_I = GaussQ(0, 1)


class OperatorTable:
    """Signed combinations ``sum c * d/dx_m`` for every ``(j, alpha)``.

    ``entries[(j, alpha)]`` is a tuple of ``(m, c)`` pairs with ``c`` a
    Gaussian rational.  :meth:`standard` builds the table used throughout;
    :meth:`with_sign_flip` produces the corrupted tables the verification
    harness feeds in to make sure its checks can fail.
    """

    def __init__(self, n, entries):
        self.n = n
        self.entries = {k: tuple(v) for k, v in entries.items()}
        for j in range(2 * n):
            for a in (0, 1):
                if (j, a) not in self.entries:
                    raise DomainError(f"operator table misses entry ({j}, {a})")

    @classmethod
    def standard(cls, n):
        entries = {}
        for l in range(n):
            b = 4 * l
            entries[(2 * l, 0)] = ((b, _ONE), (b + 1, _I))
            entries[(2 * l, 1)] = ((b + 2, -_ONE), (b + 3, -_I))
            entries[(2 * l + 1, 0)] = ((b + 2, _ONE), (b + 3, -_I))
            entries[(2 * l + 1, 1)] = ((b, _ONE), (b + 1, -_I))
        return cls(n, entries)

    def with_sign_flip(self, j=0, alpha=0):
        entries = dict(self.entries)
        entries[(j, alpha)] = tuple((m, -c) for m, c in entries[(j, alpha)])
        return OperatorTable(self.n, entries)

    def apply(self, j, alpha, p):
        if not 0 <= j < 2 * self.n or alpha not in (0, 1):
            raise DomainError(f"operator index ({j}, {alpha}) out of range")
        out = RealPolynomial.constant(p.n, 0)
        for m, c in self.entries[(j, alpha)]:
            out = out + p.diff(m).scale(c)
        return out

    def __eq__(self, other):
        return isinstance(other, OperatorTable) and (self.n, self.entries) == (
            other.n, other.entries)


_TABLES = {}


def _table(n, table):
    if table is not None:
        if table.n != n:
            raise DomainError("operator table built for a different n")
        return table
    if n not in _TABLES:
        _TABLES[n] = OperatorTable.standard(n)
    return _TABLES[n]


def nabla(j, alpha, p, table=None):
    """Apply ``nabla_{j alpha}`` to the polynomial ``p``."""
    return _table(p.n, table).apply(j, alpha, p)


def _as_form(F):
    if isinstance(F, RealPolynomial):
        return Multivector(F.n, {(): F}, degree=0)
    if isinstance(F, Multivector):
        return F
    raise TypeError("expected a RealPolynomial or a polynomial-valued Multivector")


def d_alpha(F, alpha, table=None):
    """``sum_{k,I} nabla_{k alpha} f_I  omega^k ^ omega^I``."""
    F = _as_form(F)
    n = F.n
    if F.degree >= 2 * n:
        raise DomainError("cannot raise the degree of a top-degree form")
    tab = _table(n, table)
    out = {}
    for I, f in F.terms.items():
        if not isinstance(f, RealPolynomial):
            f = RealPolynomial.constant(n, f)
        for k in range(2 * n):
            if k in I:
                continue
            g = tab.apply(k, alpha, f)
            if not g:
                continue
            # omega^k ^ omega^I: move omega^k past the indices smaller than k
            pos = sum(1 for i in I if i < k)
            key = I[:pos] + (k,) + I[pos:]
            if pos % 2:
                g = -g
            if key in out:
                g = out[key] + g
            out[key] = g
    return Multivector._raw(n, {key: c for key, c in out.items() if c}, F.degree + 1)


def d0(F, table=None):
    return d_alpha(F, 0, table)


def d1(F, table=None):
    return d_alpha(F, 1, table)


def baston(u, table=None):
    """The Baston operator ``d0 d1 u``, a 2-form."""
    if not isinstance(u, RealPolynomial):
        raise TypeError("baston expects a RealPolynomial")
    return d0(d1(u, table), table)


def delta_ij(u, i, j, table=None):
    """``(nabla_{i0} nabla_{j1} u - nabla_{i1} nabla_{j0} u) / 2``."""
    n = u.n
    for idx in (i, j):
        if not 0 <= idx < 2 * n:
            raise DomainError(f"index {idx} out of range for n={n}")
    tab = _table(n, table)
    a = tab.apply(i, 0, tab.apply(j, 1, u))
    b = tab.apply(i, 1, tab.apply(j, 0, u))
    return (a - b).scale(Fraction(1, 2))


def baston_from_deltas(u, table=None, delta=delta_ij):
    """``sum_{i<j} 2 delta_ij(u) omega^i ^ omega^j`` built coefficient-wise."""
    n = u.n
    terms = {}
    for i in range(2 * n):
        for j in range(i + 1, 2 * n):
            c = delta(u, i, j, table=table).scale(2)
            if c:
                terms[(i, j)] = c
    return Multivector._raw(n, terms, 2)


def ma_density(us, table=None, *, sign=perm_sign, delta=delta_ij):
    """Omega_{2n}-coefficient of ``baston(u_1) ^ ... ^ baston(u_n)``.

    Evaluated through the permutation-signed sum over ``delta_ij`` products.
    ``sign`` and ``delta`` are injection points used by mutation tests.
    """
    us = list(us)
    if not us:
        raise DomainError("need at least one polynomial")
    n = us[0].n
    if len(us) != n or any(u.n != n for u in us):
        raise DomainError(f"ma_density needs exactly n={n} polynomials of dimension {n}")
    size = 2 * n
    tabs = []
    for u in us:
        D = {}
        for i in range(size):
            for j in range(size):
                if i != j:
                    c = delta(u, i, j, table=table)
                    if c:
                        D[(i, j)] = c
        tabs.append(D)
    total = RealPolynomial.constant(n, 0)
    for perm in permutations(range(size)):
        factors = []
        for k in range(n):
            c = tabs[k].get((perm[2 * k], perm[2 * k + 1]))
            if c is None:
                break
            factors.append(c)
        else:
            s = sign(perm)
            if not s:
                continue
            prod = factors[0]
            for f in factors[1:]:
                prod = prod * f
            total = total + (prod if s > 0 else -prod)
    return total


def wedge_density(us, table=None):
    """Top coefficient of ``baston(u_1) ^ ... ^ baston(u_n)`` via wedges."""
    us = list(us)
    n = us[0].n
    if len(us) != n:
        raise DomainError(f"need exactly n={n} polynomials")
    form = baston(us[0], table)
    for u in us[1:]:
        form = wedge(form, baston(u, table))
    return top_coefficient(form)


# -- quaternionic Hessian ------------------------------------------------

_UNITS = (
    Quaternion(1, 0, 0, 0),
    Quaternion(0, 1, 0, 0),
    Quaternion(0, 0, 1, 0),
    Quaternion(0, 0, 0, 1),
)


def hessian(u, point):
    """Quaternionic Hessian ``d^2 u / dq_j dqbar_k`` at a rational point.

    Convention: ``d/dqbar_k = (d_0 + i d_1 + j d_2 + k d_3)/4`` on block
    ``k`` with the units on the left, and ``d/dq_j`` its conjugate with the
    units on the right, so entry
    ``(j, k) = 1/16 sum_{a,b} e_a conj(e_b) d_{4k+a} d_{4j+b} u``.
    Placing both sets of units on the left gives a hyperhermitian matrix too,
    but its Moore determinant is not proportional to the Baston density.
    """
    if not u.is_real():
        raise DomainError("the Hessian needs a real-valued polynomial")
    n = u.n
    pt = [Fraction(x) for x in point]
    if len(pt) != 4 * n:
        raise DomainError(f"point needs {4 * n} coordinates")
    second = {}
    for p in range(4 * n):
        up = u.diff(p)
        for q in range(p, 4 * n):
            v = up.diff(q).evaluate(pt).re
            second[(p, q)] = second[(q, p)] = v
    rows = []
    for j in range(n):
        row = []
        for k in range(n):
            acc = Quaternion(0, 0, 0, 0)
            for a in range(4):
                for b in range(4):
                    h = second[(4 * j + b, 4 * k + a)]
                    if h:
                        acc = acc + (_UNITS[a] * _UNITS[b].conj()).scale(h)
            row.append(acc.scale(Fraction(1, 16)))
        rows.append(row)
    return HyperhermitianMatrix(rows)


def moore_ma_constant(n):
    """Ratio ``ma_density / moore_det(hessian)`` for ``u = |q|^2`` in dimension n."""
    from .quaternion import moore_det

    u = RealPolynomial.normsq(n)
    dens = ma_density([u] * n).constant_term()
    det = moore_det(hessian(u, [0] * (4 * n)))
    return dens.re / det
