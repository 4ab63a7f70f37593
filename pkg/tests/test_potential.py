"""Obstacle solver, extremal functions and capacities (n = 1)."""

import math

import numpy as np
import pytest

from qpluri.errors import DomainError, SolverError
from qpluri.grid import Box4
from qpluri.lattice import FullLattice, SymmetricLattice
from qpluri.potential import (CompactSpec, capacity, capacity_lower, capacity_table,
                              extremal_function, fit_offset_power_law, fit_power_law,
                              outer_capacity, radial_capacity, radial_extremal,
                              sublevel_capacity_decay)

BOX = Box4(21)


@pytest.fixture(scope="module")
def ball_solution():
    return extremal_function(CompactSpec.ball(0.5), 1.0, BOX)


def test_spec_parse_round_trip():
    for text in ("ball:0.5", "open-ball:0.25", "empty", "domain"):
        assert str(CompactSpec.parse(text)) == text
    for text in ("ball:0.2@0.1,0,0,0", "union:0.25@0.45,0,0,0;0.25@-0.45,0,0,0"):
        E = CompactSpec.parse(text)
        again = CompactSpec.parse(str(E))
        assert again.balls == E.balls and again.kind == E.kind
    assert CompactSpec.parse("point").balls[0][1] == 0.0
    with pytest.raises(DomainError):
        CompactSpec.parse("cube:1")
    with pytest.raises(DomainError):
        CompactSpec.ball(-1.0)


def test_symmetric_lattice_weights_count_points():
    box = Box4(15)
    keep = 0.8
    sym = SymmetricLattice(box, keep)
    full = FullLattice(box)
    X = full.coords()
    inside = sum(x * x for x in X) <= keep ** 2 + 1e-12
    assert sym.weights().sum() == pytest.approx(inside.sum())


def test_extremal_properties(ball_solution):
    sol = ball_solution
    u = sol.u.values
    inside = BOX.radius() < 1.0
    assert u[inside].max() <= 1e-12 and u[inside].min() >= -1 - 1e-12
    assert np.all(u[BOX.radius() <= 0.5] == -1.0)
    assert sol.residual <= 1e-8
    assert sol.complementarity(1e-8) < 1e-6


def test_extremal_matches_radial_profile(ball_solution):
    rho = BOX.radius()
    ann = (rho > 0.5 + 2 * BOX.h) & (rho < 1.0)
    err = np.abs(ball_solution.u.values - radial_extremal(rho, 0.5, 1.0))[ann].max()
    assert err < 0.08


def test_symmetric_and_full_lattices_agree():
    a = extremal_function(CompactSpec.ball(0.4), 1.0, BOX, lattice="symmetric")
    b = extremal_function(CompactSpec.ball(0.4), 1.0, BOX, lattice="full")
    assert np.abs(a.u.values - b.u.values).max() < 1e-6


def test_solution_is_deterministic():
    a = capacity(CompactSpec.ball(0.3), 1.0, BOX)
    b = capacity(CompactSpec.ball(0.3), 1.0, BOX)
    assert a.value == b.value


def test_extremal_errors():
    with pytest.raises(DomainError):
        extremal_function(CompactSpec.ball(1.0), 1.0, BOX)
    with pytest.raises(DomainError):
        extremal_function(CompactSpec.ball(0.5), 1.5, BOX)
    with pytest.raises(SolverError) as info:
        extremal_function(CompactSpec.ball(0.5), 1.0, BOX, max_iter=3, warm_start=False)
    assert info.value.residual > 0


def test_capacity_coarse_value_and_monotone():
    c3 = capacity(CompactSpec.ball(0.3), 1.0, BOX).value
    c5 = capacity(CompactSpec.ball(0.5), 1.0, BOX)
    assert c3 < c5.value
    assert c5.value == pytest.approx(radial_capacity(0.5, 1.0), rel=0.15)
    assert c5.diagnostics["residual"] <= 1e-8
    assert capacity(CompactSpec.empty(), 1.0, BOX).value == 0.0
    table = capacity_table([c5])
    assert table.splitlines()[0].startswith("K\tomega")


def test_off_centre_union_uses_full_lattice():
    K = CompactSpec.parse("union:0.2@0.4,0,0,0;0.2@-0.4,0,0,0")
    c = capacity(K, 1.0, BOX)
    assert c.diagnostics["lattice"] == "full"
    single = capacity(CompactSpec.parse("ball:0.2@0.4,0,0,0"), 1.0, BOX).value
    assert single < c.value <= 2 * single * 1.001


def test_capacity_lower_bound(ball_solution):
    K = CompactSpec.ball(0.5)
    good = ball_solution.u.with_values(ball_solution.u.values + 1.0)
    too_big = good.with_values(good.values * 2)
    concave = BOX.sample(lambda *X: 1 - 0.5 * sum(x * x for x in X), 1.0)
    low = capacity_lower(K, 1.0, [good, too_big, concave], BOX)
    reasons = dict(low.diagnostics["rejected"])
    assert "0 <= u <= 1" in reasons[1]
    assert "psh" in reasons[2]
    upper = capacity(K, 1.0, BOX).value
    assert low.value == pytest.approx(upper, rel=1e-6)


def test_outer_capacity_of_point_shrinks():
    oc = outer_capacity(CompactSpec.point(), 1.0, BOX, [0.4, 0.3])
    seq = oc.diagnostics["sequence"]
    assert seq[1][1] < seq[0][1]
    assert oc.diagnostics["monotone"]
    with pytest.raises(DomainError):
        outer_capacity(CompactSpec.point(), 1.0, BOX, [0.2, 0.3])
    open_ball = outer_capacity(CompactSpec.ball(0.4, open=True), 1.0, BOX)
    assert open_ball.value == pytest.approx(capacity(CompactSpec.ball(0.4, open=True), 1.0, BOX).value)


def test_sublevel_decay_small_grid():
    v = BOX.sample(lambda *X: -0.04 / sum(x * x for x in X), 1.0)
    vals = sublevel_capacity_decay(v, CompactSpec.ball(0.5), [0.5, 1.0, 2.0])
    C = [x.value for x in vals]
    assert C[0] > C[1] > C[2] > 0
    # away from the pole the sublevel set is empty
    far = sublevel_capacity_decay(v, CompactSpec.ball(0.2, (0.6, 0, 0, 0)), [200.0])
    assert far[0].value == 0.0
    with pytest.raises(DomainError):
        sublevel_capacity_decay(v, CompactSpec.ball(0.5), [2.0, 1.0])


def test_radial_oracles():
    assert radial_capacity(0.5, 1.0) == pytest.approx(4 * math.pi ** 2 / 3)
    assert radial_capacity(0.0, 1.0) == 0.0
    prof = radial_extremal(np.array([0.2, 0.5, 0.75, 1.0, 1.2]), 0.5, 1.0)
    assert prof[0] == -1 and prof[1] == pytest.approx(-1) and prof[3] == 0 and prof[4] == 0
    assert -1 < prof[2] < 0


def test_power_law_fits():
    r = np.array([0.4, 0.2, 0.1, 0.05])
    C = 3.0 * r ** 2
    p, a = fit_power_law(r, C)
    assert p == pytest.approx(2.0) and a == pytest.approx(3.0)
    # reciprocal with a constant offset, like the condenser in a finite ball
    C2 = 1.0 / (0.5 * r ** -2.0 + 0.3)
    assert fit_offset_power_law(r, C2) == pytest.approx(2.0, abs=1e-6)
    assert fit_power_law(r, C2)[0] < 1.97
