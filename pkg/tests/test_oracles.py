"""Independent oracles for the derived reference values.

Nothing here goes through the package's polynomial or exterior-algebra
code: densities of quadratics are computed from the real Hessian with
plain complex vectors, and the radial capacity from a 1-D energy integral.
"""

import itertools
import math

import numpy as np
import pytest
from scipy.integrate import quad


def nabla_vectors(n):
    """Coefficient vectors c[(j, alpha)] with nabla_{j alpha} = sum_m c_m d_m."""
    c = {}
    for l in range(n):
        base = 4 * l
        v = np.zeros((4, 4 * n), dtype=complex)
        v[0, base], v[0, base + 1] = 1, 1j            # (2l, 0)
        v[1, base + 2], v[1, base + 3] = -1, -1j      # (2l, 1)
        v[2, base + 2], v[2, base + 3] = 1, -1j       # (2l+1, 0)
        v[3, base], v[3, base + 1] = 1, -1j           # (2l+1, 1)
        c[(2 * l, 0)], c[(2 * l, 1)], c[(2 * l + 1, 0)], c[(2 * l + 1, 1)] = v
    return c


def perm_parity(p):
    p = list(p)
    s = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            s = -s
    return s


def quadratic_density(S):
    """Density of u = x^T S x: sum over orderings of the 2n indices of
    sign * prod of 1/2 (nabla_i0 nabla_j1 - nabla_i1 nabla_j0) u, paired up."""
    m = S.shape[0]
    n = m // 4
    H = 2 * S
    c = nabla_vectors(n)

    def delta(i, j):
        return 0.5 * (c[(i, 0)] @ H @ c[(j, 1)] - c[(i, 1)] @ H @ c[(j, 0)])

    D = np.array([[delta(i, j) for j in range(2 * n)] for i in range(2 * n)])
    total = 0
    for p in itertools.permutations(range(2 * n)):
        term = perm_parity(p)
        for k in range(n):
            term *= D[p[2 * k], p[2 * k + 1]]
        total += term
    return total


@pytest.mark.parametrize("n, expected", [(1, 8), (2, 128), (3, 3072)])
def test_oracle_normsq_density(n, expected):
    val = quadratic_density(np.eye(4 * n))
    assert abs(val - expected) < 1e-9


def test_oracle_n1_is_laplacian():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(4, 4))
    S = A + A.T
    assert abs(quadratic_density(S) - 2 * np.trace(S)) < 1e-9


def test_oracle_radial_capacity():
    # Dirichlet energy of the radial profile on the annulus r < rho < R
    r, R = 0.5, 1.0
    k = 1.0 / (r ** -2 - R ** -2)

    def integrand(rho):
        du = 2 * k * rho ** -3
        return du * du * 2 * math.pi ** 2 * rho ** 3

    energy, _ = quad(integrand, r, R)
    assert energy == pytest.approx(4 * math.pi ** 2 / 3, rel=1e-10)
