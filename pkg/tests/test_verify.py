"""Verification harness: report records, symbolic checks, grid checks."""

import math

import numpy as np
import pytest

from qpluri.errors import DomainError
from qpluri.grid import Box4
from qpluri.potential import CompactSpec
from qpluri.report import CheckReport, read_reports, write_reports
from qpluri.verify import (MUTATIONS, check_cln, check_comparison, check_comparison_symbolic,
                           check_convergence, check_demailly, check_demailly_symbolic,
                           check_identities, check_moore, random_psh_pair, window_masses)


def normsq(*X):
    return sum(x * x for x in X)


# -- records ----------------------------------------------------------------------

def test_report_pass_rule_and_vacuous_case():
    assert CheckReport("x", 3, -1e-10, 1e-9).passed
    assert not CheckReport("x", 3, -1e-8, 1e-9).passed
    assert not CheckReport("x", 3, float("nan"), 1.0).passed
    empty = CheckReport("x", 0, -5.0, 0.0)
    assert empty.passed and empty.worst_margin == 0.0 and empty.note == "no instances"


def test_report_serialization(tmp_path):
    reps = [CheckReport("a", 2, 0.5, 0.0, [{"k": 1.5}]),
            CheckReport("b", 1, -2.0, 0.1, note="mutation=x")]
    path = tmp_path / "r.tsv"
    write_reports(path, reps)
    assert read_reports(path) == reps
    bad = tmp_path / "bad.tsv"
    bad.write_text(CheckReport.header() + "\nb\t1\t1\t-2.0\t0.1\t\t[]\n")
    with pytest.raises(ValueError):
        read_reports(bad)


# -- symbolic ----------------------------------------------------------------------

def test_identities_small_run():
    rep = check_identities(seed=3, count=10, n_range=(1, 2))
    assert rep.passed and rep.worst_margin == 0 and rep.tolerance == 0
    assert check_identities(count=0).note == "no instances"


@pytest.mark.parametrize("mutation", MUTATIONS)
def test_identities_catch_mutations(mutation):
    rep = check_identities(seed=1, count=5, n_range=(1, 2), mutation=mutation)
    assert not rep.passed
    assert rep.details


def test_moore_check_and_mutations():
    assert check_moore(seed=1, count=5).passed
    for mutation in MUTATIONS:
        assert not check_moore(seed=1, count=5, n_range=(2,), mutation=mutation).passed


def test_symbolic_inequalities():
    assert check_comparison_symbolic(count=4).passed
    assert not check_comparison_symbolic(count=4, mutation="perm-sign").passed
    assert check_demailly_symbolic(count=4).passed
    assert not check_demailly_symbolic(count=4, mutation="drop-half").passed


def test_unknown_mutation():
    with pytest.raises(DomainError):
        check_identities(count=1, mutation="typo")


# -- comparison ---------------------------------------------------------------------

@pytest.fixture(scope="module")
def box41():
    return Box4(41)


def test_comparison_examples(box41):
    u = box41.sample(lambda *X: normsq(*X) - 1, 1.0)
    # v = 2u lies below u on the ball: empty comparison set
    v = u.with_values(2 * u.values)
    rep = check_comparison(u, v, 1.0)
    assert rep.passed and rep.worst_margin == 0
    # v = u/2 - 0.1: {u < v} is the ball |q|^2 < 0.8 and the margin is (8 - 4) vol
    w = u.with_values(0.5 * u.values - 0.1)
    rep = check_comparison(u, w, 1.0)
    vol = math.pi ** 2 / 2 * 0.8 ** 2
    assert rep.passed
    assert rep.worst_margin == pytest.approx(4 * vol, rel=0.05)
    assert check_comparison(u, u, 1.0).worst_margin == 0


def test_comparison_boundary_hypothesis(box41):
    u = box41.sample(lambda *X: normsq(*X) - 1, 1.0)
    with pytest.raises(DomainError):
        check_comparison(u, u.with_values(u.values + 0.5), 1.0)


def test_comparison_random_pairs():
    box = Box4(21)
    for seed in range(4):
        u, v = random_psh_pair(seed, box)
        rep = check_comparison(u, v, 1.0)
        assert rep.passed and rep.details[0]["cells"] > 0


# -- Demailly ------------------------------------------------------------------------

def test_demailly_examples():
    box = Box4(21)
    u = box.sample(lambda *X: normsq(*X) - 1)
    a = (0.3, 0.0, 0.0, 0.0)
    v = box.sample(lambda *X: sum((X[i] - a[i]) ** 2 for i in range(4)) - 1)
    eps = 2 * box.h
    rep = check_demailly(u, v, eps, omega_radius=1.0)
    assert rep.passed
    assert rep.details[0]["interface_mass"] > 0
    lower = u.with_values(u.values - 1.0)
    assert abs(check_demailly(u, lower, eps).worst_margin) < 1e-9
    assert abs(check_demailly(u, u, eps).worst_margin) < 1e-9


# -- convergence ------------------------------------------------------------------------

def test_window_masses_of_normsq_are_constant_under_mollification(box41):
    u = box41.sample(normsq, 1.0)
    rep = check_convergence("decreasing-mollified", u)
    assert rep.passed
    first = rep.details[1]["masses"]
    last = rep.details[-1]["masses"]
    assert np.allclose(first, last, rtol=1e-9)


def test_convergence_rejects_unknown_kind(box41):
    with pytest.raises(DomainError):
        check_convergence("sideways", box41.sample(normsq, 1.0))


def test_increasing_truncations_reach_target(box41):
    r = 0.3
    pole = box41.sample(lambda *X: -r * r / normsq(*X), 1.0)
    rep = check_convergence("increasing-truncated", pole)
    assert rep.passed
    trend = [d["masses"][0] for d in rep.details[1:]]
    assert all(b >= a for a, b in zip(trend, trend[1:]))


def test_window_masses_match_density_on_quadratics(box41):
    # sum u Lap chi = sum chi Lap u for the lattice Laplacian; Lap |q|^2 = 8
    u = box41.sample(normsq, 1.0)
    chi_mass = window_masses(u)[0]
    s = 0.5
    # 8 * integral of (1 - r^2/s^2)^3 over the 4-ball of radius s
    exact = 8 * 2 * math.pi ** 2 * s ** 4 * (1 / 4 - 3 / 6 + 3 / 8 - 1 / 10)
    assert chi_mass == pytest.approx(exact, rel=0.02)


# -- CLN -----------------------------------------------------------------------------------

def test_cln_scaling_invariance_and_skip():
    box = Box4(21)
    K, L = CompactSpec.ball(0.7), CompactSpec.ball(0.4)
    base = box.sample(normsq, 1.0)
    samples = [base.with_values(lam * base.values) for lam in (1, 2, 10)]
    rep = check_cln(K, L, samples)
    ratios = [d["ratio"] for d in rep.details[1:]]
    assert rep.passed
    assert np.allclose(ratios, ratios[0])
    zero = base.with_values(0 * base.values)
    rep = check_cln(K, L, [zero])
    assert rep.instances == 0 and "skipped" in rep.details[0]["note"]
    with pytest.raises(DomainError):
        check_cln(L, K, samples)


def test_cln_family_bounded():
    box = Box4(21)
    K, L = CompactSpec.ball(0.8), CompactSpec.ball(0.5)
    fam = []
    for ax in (0.0, 0.1, 0.2):
        fam.append(box.sample(lambda *X, ax=ax: np.maximum(
            -1.0, -0.09 / ((X[0] - ax) ** 2 + X[1] ** 2 + X[2] ** 2 + X[3] ** 2)), 1.0))
    rep = check_cln(K, L, fam)
    assert rep.passed
    assert math.isfinite(rep.details[0]["empirical_constant"])


def test_checks_are_deterministic():
    a = check_identities(seed=9, count=5, n_range=(1, 2))
    b = check_identities(seed=9, count=5, n_range=(1, 2))
    assert a == b
    box = Box4(21)
    u1, v1 = random_psh_pair(4, box)
    u2, v2 = random_psh_pair(4, box)
    assert check_comparison(u1, v1, 1.0) == check_comparison(u2, v2, 1.0)
