"""Exact layers: Gaussian rationals, polynomials, exterior algebra, operators."""

import random
from fractions import Fraction

import numpy as np
import pytest

from qpluri.errors import DomainError
from qpluri.exterior import Multivector, perm_sign, sort_sign, top_coefficient, wedge
from qpluri.polynomial import RealPolynomial
from qpluri.quaternion import HyperhermitianMatrix, Quaternion, moore_det
from qpluri.scalars import I, ONE, GaussQ
from qpluri.symcalc import (OperatorTable, baston, baston_from_deltas, d0, d1, delta_ij,
                            hessian, ma_density, moore_ma_constant, nabla, wedge_density)
from qpluri.verify import random_polynomial

from test_oracles import quadratic_density


# -- scalars and polynomials ------------------------------------------------

def test_gauss_arithmetic():
    a = GaussQ(Fraction(1, 2), 3)
    b = GaussQ(-2, 1)
    assert a * b == GaussQ(Fraction(-1) - 3, Fraction(1, 2) - 6)
    assert (a / b) * b == a
    assert I * I == -ONE
    assert a.conjugate().im == -3
    assert (a * a.conjugate()).is_real()
    assert complex(b) == complex(-2, 1)
    with pytest.raises(ZeroDivisionError):
        a / GaussQ(0)


def test_polynomial_diff_and_eval():
    x = RealPolynomial.variables(1)
    p = x[0] ** 3 * x[1] + x[2].scale(5) + 7
    assert p.degree() == 4
    assert p.diff(0) == (x[0] ** 2 * x[1]).scale(3)
    assert p.diff(3).is_zero()
    assert p.evaluate([2, 3, 1, 0]) == GaussQ(8 * 3 + 5 + 7)
    assert p.evaluate_float(np.array([2.0, 3.0, 1.0, 0.0])) == pytest.approx(36.0)


def test_normsq_center():
    u = RealPolynomial.normsq(1, center=[1, 0, 0, 0])
    assert u.evaluate([1, 0, 0, 0]) == GaussQ(0)
    assert u.evaluate([0, 0, 0, 0]) == GaussQ(1)


# -- exterior algebra ----------------------------------------------------------

def test_sort_sign():
    assert sort_sign((0, 1, 2)) == 1
    assert sort_sign((5, 2)) == -1
    assert sort_sign((1, 1)) == 0
    assert perm_sign((2, 0, 1)) == 1
    assert perm_sign((1, 0, 2)) == -1


def test_wedge_graded_commutativity():
    n = 2
    a = Multivector.basis(n, 0)
    b = Multivector.basis(n, 3)
    assert wedge(a, b) == -wedge(b, a)
    assert wedge(a, a).is_zero()
    ab = wedge(a, b)
    c = Multivector.basis(n, 1, 2)
    assert wedge(ab, c) == wedge(c, ab)


def test_top_coefficient():
    n = 1
    top = wedge(Multivector.basis(n, 1), Multivector.basis(n, 0))
    assert top_coefficient(top) == -1
    with pytest.raises(DomainError):
        top_coefficient(Multivector.basis(n, 0))


# -- operators --------------------------------------------------------------------

def test_nabla_table_on_coordinates():
    n = 1
    x = RealPolynomial.variables(n)
    # nabla_{0,0} = d0 + i d1 ; nabla_{1,1} = d0 - i d1
    assert nabla(0, 0, x[1]).constant_term() == I
    assert nabla(1, 1, x[1]).constant_term() == -I
    assert nabla(0, 1, x[2]).constant_term() == GaussQ(-1)
    assert nabla(1, 0, x[3]).constant_term() == -I


@pytest.mark.parametrize("n, expected", [(1, 8), (2, 128), (3, 3072)])
def test_density_normsq(n, expected):
    u = RealPolynomial.normsq(n)
    dens = ma_density([u] * n)
    assert dens == RealPolynomial.constant(n, expected)
    assert wedge_density([u] * n) == dens


def test_density_n1_equals_laplacian():
    rng = random.Random(5)
    for _ in range(10):
        u = random_polynomial(rng, 1, 4, complex_coeffs=False)
        lap = sum((u.diff(m).diff(m) for m in range(4)), RealPolynomial.constant(1, 0))
        assert ma_density([u]) == lap


def test_density_matches_oracle_on_quadratics():
    rng = np.random.default_rng(2)
    for n in (1, 2):
        A = rng.integers(-2, 3, size=(4 * n, 4 * n))
        S = A + A.T
        xs = RealPolynomial.variables(n)
        u = RealPolynomial.constant(n, 0)
        for a in range(4 * n):
            for b in range(4 * n):
                if S[a, b]:
                    u = u + (xs[a] * xs[b]).scale(int(S[a, b]))
        got = ma_density([u] * n).constant_term()
        assert complex(got) == pytest.approx(quadratic_density(S.astype(float)), abs=1e-8)


def test_d0_squares_and_baston_closed():
    rng = random.Random(7)
    n = 2
    for _ in range(5):
        u = random_polynomial(rng, n, 4)
        assert d0(d0(u)).is_zero()
        assert d1(d1(u)).is_zero()
        assert (d0(d1(u)) + d1(d0(u))).is_zero()
        b = baston(u)
        assert d0(b).is_zero() and d1(b).is_zero()
        assert b == baston_from_deltas(u)


def test_delta_block_identity():
    u = RealPolynomial.normsq(1)
    assert delta_ij(u, 0, 1) == RealPolynomial.constant(1, 4)
    assert delta_ij(u, 1, 0) == RealPolynomial.constant(1, -4)


def test_sign_flip_changes_table():
    std = OperatorTable.standard(1)
    assert std.with_sign_flip(0, 0) != std
    u = RealPolynomial.normsq(1)
    assert ma_density([u], std.with_sign_flip(0, 0)) != ma_density([u], std)


def test_baston_of_constant_and_linear_vanish():
    n = 2
    assert baston(RealPolynomial.constant(n, 3)).is_zero()
    assert baston(RealPolynomial.variable(n, 5)).is_zero()


# -- quaternions and the Moore determinant -------------------------------------

def test_quaternion_units():
    i, j, k = Quaternion(0, 1), Quaternion(0, 0, 1), Quaternion(0, 0, 0, 1)
    assert i * j == k and j * i == -k
    assert i * i == Quaternion(-1)
    q = Quaternion(1, 2, 3, 4)
    assert q * q.conj() == Quaternion(q.norm2())


def test_hyperhermitian_validation():
    q = Quaternion(0, 1, 1, 0)
    HyperhermitianMatrix([[Quaternion(2), q], [q.conj(), Quaternion(3)]])
    with pytest.raises(DomainError):
        HyperhermitianMatrix([[Quaternion(2), q], [q, Quaternion(3)]])


def test_moore_det_two_by_two():
    q = Quaternion(0, 1, 1, 0)
    A = HyperhermitianMatrix([[Quaternion(5), q], [q.conj(), Quaternion(3)]])
    assert moore_det(A) == 15 - q.norm2()
    assert moore_det(HyperhermitianMatrix.identity(3, 2)) == 8
    adj = np.linalg.det(A.complex_adjoint()).real
    assert np.sqrt(adj) == pytest.approx(float(moore_det(A)))


def test_hessian_of_normsq():
    for n in (1, 2):
        H = hessian(RealPolynomial.normsq(n), [0] * (4 * n))
        assert H == HyperhermitianMatrix.identity(n, Fraction(1, 2))


def test_moore_constants():
    assert moore_ma_constant(1) == 16
    assert moore_ma_constant(2) == 512
