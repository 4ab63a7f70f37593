"""Finite-difference layer on boxes in R^4."""

import math

import numpy as np
import pytest

from qpluri.errors import DomainError
from qpluri.grid import (BOUNDARY, INTERIOR, OUTSIDE, Box4, _fourth_difference_bound, dump,
                         fd_ma_density, load, ma_mass, mollify, psh_check)


def normsq(*X):
    return sum(x * x for x in X)


@pytest.fixture(scope="module")
def box():
    return Box4(21)


def test_box_validation():
    with pytest.raises(DomainError):
        Box4(4)
    with pytest.raises(DomainError):
        Box4(20)
    with pytest.raises(DomainError):
        Box4(21, half_width=0)
    b = Box4(21, 1.0)
    assert b.h == pytest.approx(0.1)
    assert b.coarser() == Box4(11, 1.0)


def test_mask_flags(box):
    u = box.sample(normsq, 1.0)
    m = u.mask
    assert set(np.unique(m)) <= {OUTSIDE, BOUNDARY, INTERIOR}
    rho = box.radius()
    assert np.all(m[rho >= 1.0] == OUTSIDE)
    assert m[10, 10, 10, 10] == INTERIOR


def test_density_exact_on_quadratics(box):
    u = box.sample(normsq, 1.0)
    dens = fd_ma_density(u).density
    inner = u.mask == INTERIOR
    assert np.allclose(dens[inner], 8.0, atol=1e-9)
    for f in (lambda *X: 0 * X[0] + 3.0, lambda *X: X[0]):
        d = fd_ma_density(box.sample(f, 1.0)).density
        assert np.allclose(d[inner], 0.0, atol=1e-9)


def test_mass_of_normsq_on_unit_ball():
    box = Box4(41)
    u = box.sample(normsq, 1.0)
    total = ma_mass(u)
    # density 8 times the volume of the unit 4-ball, up to the staircase
    assert total == pytest.approx(4 * math.pi ** 2, rel=0.05)


def test_mass_additivity_and_empty(box):
    u = box.sample(lambda *X: normsq(*X) + np.exp(X[0]), 1.0)
    inner = u.mask == INTERIOR
    left = inner & (box.coords()[0] < 0)
    right = inner & ~left
    assert ma_mass(u, left) + ma_mass(u, right) == pytest.approx(ma_mass(u, inner))
    assert ma_mass(u, np.zeros(box.shape, dtype=bool)) == 0.0


def test_mass_region_outside_interior_is_rejected(box):
    u = box.sample(normsq, 0.5)
    with pytest.raises(DomainError):
        ma_mass(u, np.ones(box.shape, dtype=bool))


def test_mollify_constant_and_linear(box):
    c = mollify(box.sample(lambda *X: 0 * X[0] + 2.5), 3 * box.h)
    ok = np.isfinite(c.values)
    assert ok.any() and np.allclose(c.values[ok], 2.5)
    lin = box.sample(lambda *X: X[0] + 0 * X[1])
    m = mollify(lin, 3 * box.h)
    ok = np.isfinite(m.values)
    assert np.allclose(m.values[ok], lin.values[ok], atol=1e-12)
    with pytest.raises(DomainError):
        mollify(lin, 0.5 * box.h)


def test_mollify_raises_subharmonic(box):
    a = np.array([0.1, 0.0, 0.0, 0.0])
    u = box.sample(lambda *X: np.maximum(-1.0, -(0.3 ** 2) / sum((X[i] - a[i]) ** 2 for i in range(4))))
    h = box.h
    b, certified = _fourth_difference_bound(u.values, h, np.isfinite(u.values))
    for eps in (2 * h, 3 * h):
        m = mollify(u, eps)
        ok = np.isfinite(m.values) & certified
        # the lattice kernel has isotropic second moments but not fourth ones,
        # so harmonic pieces may drop by about eps^4/24 sum |D^4 u|
        slack = eps ** 4 / 24 * (12 * b / h ** 2)
        assert np.all(m.values[ok] >= u.values[ok] - slack[ok] - 1e-12)


def test_psh_check_examples():
    box = Box4(21)
    assert psh_check(box.sample(normsq, 1.0)).passed
    bad = psh_check(box.sample(lambda *X: -normsq(*X), 1.0))
    assert not bad.passed
    assert bad.details[0]["laplacian"] == pytest.approx(-8.0)
    r = 0.3
    trunc = box.sample(lambda *X: np.maximum(-1.0, -r * r / normsq(*X)), 1.0)
    assert psh_check(trunc).passed
    # harmonic away from the pole: only the stencil error may be negative
    pole = box.sample(lambda *X: -0.04 / normsq(*X), 1.0)
    assert psh_check(pole).passed


def test_snapshot_round_trip(tmp_path, box):
    u = box.sample(lambda *X: normsq(*X) - X[2], 0.8)
    for fmt in ("text", "binary"):
        path = tmp_path / f"u.{fmt}"
        dump(u, path, fmt)
        v = load(path)
        assert v.box == u.box
        assert v.domain_radius == u.domain_radius
        same = np.isfinite(u.values)
        assert np.array_equal(np.isfinite(v.values), same)
        assert np.array_equal(v.values[same], u.values[same])
    with open(tmp_path / "u.text") as fh:
        assert fh.readline().startswith("# qgrid n=1")
