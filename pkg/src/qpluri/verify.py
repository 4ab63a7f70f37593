"""Verification harness: each check returns a :class:`CheckReport`.

Symbolic checks are exact and carry tolerance 0.  Grid checks state the
tolerance they used, derived from rounding or from the stencil's
truncation error.  Every check is deterministic given its seed and grid.
"""

import math
import random
from fractions import Fraction

import numpy as np
from scipy.ndimage import distance_transform_edt

from .errors import DomainError
from .exterior import Multivector, perm_sign, top_coefficient, wedge
from .grid import (INTERIOR, OUTSIDE, Box4, GridFunction, _fourth_difference_bound,
                   fd_ma_density, laplacian, ma_mass, mollify, psh_check)
from .polynomial import RealPolynomial
from .potential import (CompactSpec, capacity, fit_offset_power_law, fit_power_law,
                        outer_capacity, sublevel_capacity_decay)
from .quaternion import moore_det
from .report import CheckReport
from .scalars import GaussQ
from .symcalc import (OperatorTable, baston, baston_from_deltas, d0, d1, d_alpha, delta_ij,
                      hessian, ma_density, moore_ma_constant, wedge_density)

__all__ = [
    "CheckReport",
    "MUTATIONS",
    "random_polynomial",
    "check_identities",
    "check_moore",
    "check_cln",
    "check_comparison",
    "check_comparison_symbolic",
    "check_demailly",
    "check_demailly_symbolic",
    "check_convergence",
    "check_capacity_axioms",
    "check_polar_decay",
    "check_sublevel_decay",
    "random_psh_pair",
    "window",
    "run_battery",
]

MUTATIONS = ("nabla-sign", "drop-half", "perm-sign")


# -- symbolic checks -----------------------------------------------------------

def random_polynomial(rng, n, max_degree=4, max_terms=4, complex_coeffs=True):
    """Sparse random polynomial with small Gaussian-integer coefficients."""
    nv = 4 * n
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        exp = [0] * nv
        for _ in range(rng.randint(0, max_degree)):
            exp[rng.randrange(nv)] += 1
        re = rng.randint(-5, 5)
        im = rng.randint(-3, 3) if complex_coeffs and rng.random() < 0.3 else 0
        terms[tuple(exp)] = GaussQ(re, im)
    return RealPolynomial(n, terms)


def _random_form(rng, n, degree, max_degree=2):
    """Random polynomial-valued form of the given degree."""
    if degree == 0:
        return Multivector.scalar(n, random_polynomial(rng, n, max_degree, 2))
    terms = {}
    for _ in range(rng.randint(1, 2)):
        idx = tuple(sorted(rng.sample(range(2 * n), degree)))
        terms[idx] = random_polynomial(rng, n, max_degree, 2)
    return Multivector(n, terms, degree)


def _size(x):
    """Largest coefficient modulus of a residual (polynomial, form or scalar)."""
    if isinstance(x, Multivector):
        return max((_size(c) for c in x.terms.values()), default=0.0)
    if isinstance(x, RealPolynomial):
        return max((abs(complex(c)) for c in x.terms.values()), default=0.0)
    return abs(complex(x))


def _injections(n, mutation):
    table = OperatorTable.standard(n)
    delta = delta_ij
    sign = perm_sign
    if mutation is None:
        pass
    elif mutation == "nabla-sign":
        table = table.with_sign_flip(0, 0)
    elif mutation == "drop-half":
        def delta(u, i, j, table=None):
            return delta_ij(u, i, j, table).scale(2)
    elif mutation == "perm-sign":
        def sign(seq):
            return -perm_sign(seq)
    else:
        raise DomainError(f"unknown mutation {mutation!r}; choose from {MUTATIONS}")
    return table, delta, sign


def _block_laplacian(u, l):
    acc = RealPolynomial.constant(u.n, 0)
    for m in range(4 * l, 4 * l + 4):
        acc = acc + u.diff(m).diff(m)
    return acc.scale(Fraction(1, 2))


def check_identities(seed=1, count=200, n_range=(1, 2, 3), mutation=None, max_degree=4):
    """Exact identity suite over ``count`` random polynomials per ``n``.

    Per instance: ``d0^2 = d1^2 = 0``, ``d0 d1 = -d1 d0``, ``d0 Delta =
    d1 Delta = 0``, the Leibniz rule for both operators, the coefficient
    form ``Delta u = sum 2 Delta_ij u w^i w^j``, the block identity
    ``Delta_{2l,2l+1} u = 1/2 sum_block d^2 u``, and agreement of the
    permutation expansion of the density with the wedge product together
    with the two rewritten forms of the top coefficient.
    ``mutation`` injects one of :data:`MUTATIONS`.
    """
    rng = random.Random(seed)
    worst = 0.0
    failures = []
    instances = 0
    for n in n_range:
        table, delta, sign = _injections(n, mutation)
        for k in range(count):
            u = random_polynomial(rng, n, max_degree)
            res = {}
            du0 = d0(u, table)
            du1 = d1(u, table)
            res["d0d0"] = d0(du0, table)
            res["d1d1"] = d1(du1, table)
            res["d0d1+d1d0"] = d0(du1, table) + d1(du0, table)
            bu = d0(du1, table)
            if n > 1:
                res["d0 Delta"] = d0(bu, table)
                res["d1 Delta"] = d1(bu, table)
            res["Delta coefficients"] = bu - baston_from_deltas(u, table, delta)
            for l in range(n):
                res[f"block {l}"] = delta(u, 2 * l, 2 * l + 1, table=table) - _block_laplacian(u, l)
            p = rng.randint(0, min(2, 2 * n - 1))
            q = rng.randint(0, 2 * n - 1 - p)
            F = _random_form(rng, n, p)
            G = _random_form(rng, n, q)
            if p + q < 2 * n:
                FG = wedge(F, G)
                for a in (0, 1):
                    lhs = d_alpha(FG, a, table)
                    rhs = wedge(d_alpha(F, a, table), G)
                    second = wedge(F, d_alpha(G, a, table))
                    rhs = rhs + (second if p % 2 == 0 else -second)
                    res[f"Leibniz d{a}"] = lhs - rhs
            # density comparisons grow fast with n; thin them out for n = 3
            if n < 3 or k % 10 == 0:
                deg = max_degree if n == 1 else 2
                us = [u] + [random_polynomial(rng, n, deg, 2) for _ in range(n - 1)]
                if n == 3:
                    us = [random_polynomial(rng, n, 2, 2) for _ in range(n)]
                dens = ma_density(us, table, sign=sign, delta=delta)
                res["density vs wedge"] = dens - wedge_density(us, table)
                rest = None
                for v in us[1:]:
                    bv = baston(v, table)
                    rest = bv if rest is None else wedge(rest, bv)
                a0 = d1(us[0], table) if rest is None else wedge(d1(us[0], table), rest)
                a1 = d0(us[0], table) if rest is None else wedge(d0(us[0], table), rest)
                top = wedge_density(us, table)
                res["rewrite d0"] = top - top_coefficient(d0(a0, table))
                res["rewrite d1"] = top + top_coefficient(d1(a1, table))
            instances += 1
            for name, r in res.items():
                s = _size(r)
                if s:
                    worst = max(worst, s)
                    if len(failures) < 20:
                        failures.append({"n": n, "instance": k, "identity": name, "residual": s})
    note = f"mutation={mutation}" if mutation else ""
    return CheckReport("identities", instances, -worst if worst else 0.0, 0.0, failures, note)


def _random_spd(rng, size, scale=2):
    A = np.array([[rng.randint(-scale, scale) for _ in range(size)] for _ in range(size)])
    return A.T @ A + np.eye(size, dtype=int)


def _quadratic(n, S, c=0):
    xs = RealPolynomial.variables(n)
    u = RealPolynomial.constant(n, c)
    for a in range(4 * n):
        for b in range(4 * n):
            if S[a][b]:
                u = u + (xs[a] * xs[b]).scale(Fraction(S[a][b]))
    return u


def check_moore(seed=2, count=50, n_range=(1, 2), mutation=None):
    """Density / Moore determinant is one constant on strictly PSH quadratics.

    The constant is the ratio calibrated on ``|q|^2``.  The Moore
    determinant is also compared with the square root of the determinant
    of the complex adjoint matrix.
    """
    rng = random.Random(seed)
    worst = 0.0
    details = []
    inst = 0
    for n in n_range:
        table, delta, sign = _injections(n, mutation)
        const = moore_ma_constant(n)
        for k in range(count):
            S = _random_spd(rng, 4 * n)
            u = _quadratic(n, S)
            dens = ma_density([u] * n, table, sign=sign, delta=delta).constant_term()
            H = hessian(u, [0] * (4 * n))
            det = moore_det(H)
            if det <= 0:
                rel = math.inf
            else:
                ratio = dens.re / det
                rel = float(abs(ratio - const) / abs(const))
                if dens.im:
                    rel = math.inf
            adj = np.linalg.det(H.complex_adjoint()).real
            rel_adj = abs(math.sqrt(max(adj, 0.0)) - float(det)) / float(det) if det > 0 else math.inf
            inst += 1
            w = max(rel, rel_adj)
            if w > worst:
                worst = w
            if w > 1e-9 and len(details) < 20:
                details.append({"n": n, "instance": k, "ratio_error": rel, "adjoint_error": rel_adj})
        details.append({"n": n, "constant": str(const)})
    note = f"mutation={mutation}" if mutation else ""
    return CheckReport("moore", inst, -worst if worst else 0.0, 1e-9, details, note)


def check_comparison_symbolic(seed=3, count=20, mutation=None):
    """Comparison inequality for ``n = 2`` on explicit quadratic pairs.

    ``v = x^T Q x`` and ``u = x^T (P + Q) x + c`` with ``P, Q`` positive
    definite and ``-lambda_min(P) < c < 0``, so ``u >= v`` on the unit sphere
    and ``{u < v}`` is the ellipsoid ``x^T P x < -c``.  Both densities are
    constant, so the two masses are density times the ellipsoid volume.
    """
    rng = random.Random(seed)
    n = 2
    table, delta, sign = _injections(n, mutation)
    worst = math.inf
    details = []
    unit = math.pi ** 4 / 24  # volume of the unit ball in R^8
    for k in range(count):
        P = _random_spd(rng, 8, 1)
        Q = _random_spd(rng, 8, 1)
        lam = float(np.linalg.eigvalsh(P.astype(float)).min())
        c = Fraction(-lam * rng.uniform(0.2, 0.9)).limit_denominator(1000)
        u = _quadratic(n, P + Q, c)
        v = _quadratic(n, Q)
        mu = ma_density([u, u], table, sign=sign, delta=delta).constant_term().re
        mv = ma_density([v, v], table, sign=sign, delta=delta).constant_term().re
        vol = unit * float(-c) ** 4 / math.sqrt(float(np.linalg.det(P.astype(float))))
        margin = float(mu - mv) * vol
        worst = min(worst, margin)
        details.append({"instance": k, "mass_u": float(mu) * vol, "mass_v": float(mv) * vol})
    return CheckReport("comparison-n2", count, worst if count else 0.0, 0.0, details)


def check_demailly_symbolic(seed=4, count=20, points=8, mutation=None):
    """Demailly's inequality for ``n = 2`` quadratic pairs, off the interface.

    Away from ``{u = v}`` the maximum agrees with one of the two functions on
    a neighbourhood, so the inequality holds there as an identity of
    densities; this checks that identity at random rational points.
    """
    rng = random.Random(seed)
    n = 2
    table, delta, sign = _injections(n, mutation)
    worst = 0.0
    inst = 0
    details = []
    for k in range(count):
        u = _quadratic(n, _random_spd(rng, 8, 1), Fraction(rng.randint(-4, 0)))
        v = _quadratic(n, _random_spd(rng, 8, 1), Fraction(rng.randint(-4, 0)))
        mu = ma_density([u, u], table, sign=sign, delta=delta)
        mv = ma_density([v, v], table, sign=sign, delta=delta)
        for _ in range(points):
            x = [Fraction(rng.randint(-8, 8), 10) for _ in range(8)]
            uu, vv = u.evaluate(x).re, v.evaluate(x).re
            if uu == vv:
                continue
            active = u if uu > vv else v
            dmax = wedge_density([active, active], table).evaluate(x)
            rhs = (mu if uu > vv else mv).evaluate(x)
            r = abs(complex(dmax - rhs))
            inst += 1
            if r > worst:
                worst = r
                details.append({"instance": k, "residual": r})
    return CheckReport("demailly-n2", inst, -worst if worst else 0.0, 0.0, details,
                       "interface measure not evaluated for n=2")


# -- grid checks -----------------------------------------------------------------

def _rounding_tol(*fs, cells=1):
    h = fs[0].h
    scale = sum(max(f.sup_norm(), 1.0) for f in fs)
    return 1e-9 * scale / (h * h) * h ** 4 * max(cells, 1)


def check_comparison(u, v, omega_radius, tol=None, check_psh=True):
    """``int_{u<v} (Delta v) <= int_{u<v} (Delta u)`` on a grid (``n = 1``).

    Hypotheses, checked first: ``u >= v`` on the lattice points of Omega
    within ``2h`` of its boundary sphere, and both functions pass
    :func:`psh_check`.  Then ``{u < v}`` and its lattice neighbours stay in
    Omega, and on the lattice the inequality is exact: the mass difference
    over ``{u < v}`` is a sum of boundary differences of ``u - v``, each
    non-negative, so the tolerance only covers rounding.
    """
    box = u.box
    if v.box != box:
        raise DomainError("u and v live on different grids")
    h = box.h
    rho = box.radius()
    shell = (rho >= omega_radius - 2 * h) & (rho < omega_radius)
    shell &= np.isfinite(u.values) & np.isfinite(v.values)
    gap = (u.values - v.values)[shell]
    if gap.size and gap.min() < -1e-12 * max(u.sup_norm(), v.sup_norm(), 1.0):
        raise DomainError(f"boundary hypothesis violated: u - v reaches {gap.min():.3g} near the boundary")
    if check_psh:
        for name, f in (("u", u), ("v", v)):
            rep = psh_check(f)
            if not rep.passed:
                raise DomainError(f"{name} fails the PSH check (margin {rep.worst_margin:.3g})")
    U = GridFunction(box, u.values, omega_radius)
    V = GridFunction(box, v.values, omega_radius)
    interior = (U.mask == INTERIOR) & (V.mask == INTERIOR)
    S = interior & (U.values < V.values)
    mu = ma_mass(U, S)
    mv = ma_mass(V, S)
    if tol is None:
        tol = _rounding_tol(U, V, cells=int(S.sum()))
    details = [{"cells": int(S.sum()), "mass_u": mu, "mass_v": mv}]
    return CheckReport("comparison", 1, mu - mv, tol, details)


def check_demailly(u, v, smoothing_eps, tol=None, omega_radius=None):
    """Cell-level Demailly inequality for ``n = 1`` grids.

    ``max(u, v)``, ``u`` and ``v`` are mollified at the same scale; the
    margin ``density(max) - [1_{u>=v} density(u) + 1_{u<v} density(v)]`` is
    summed over interior cells farther than ``2 eps`` from ``{|u - v| <
    eps}``.  The mass carried by the excluded interface band is reported
    in the details.
    """
    box = u.box
    h = box.h
    M = mollify(u.with_values(np.maximum(u.values, v.values)), smoothing_eps)
    U = mollify(u, smoothing_eps)
    V = mollify(v, smoothing_eps)
    if omega_radius is not None:
        M, U, V = (GridFunction(box, f.values, omega_radius) for f in (M, U, V))
    dM = fd_ma_density(M).density
    dU = fd_ma_density(U).density
    dV = fd_ma_density(V).density
    ok = (M.mask == INTERIOR) & (U.mask == INTERIOR) & (V.mask == INTERIOR)
    zone = np.abs(u.values - v.values) < smoothing_eps
    if zone.any():
        dist = distance_transform_edt(~zone) * h
        far = dist > 2 * smoothing_eps
    else:
        far = np.ones(box.shape, dtype=bool)
    cells = ok & far
    chi = u.values >= v.values
    diff = dM - np.where(chi, dU, dV)
    margin = float(diff[cells].sum() * h ** 4)
    band = ok & ~far
    if tol is None:
        tol = _rounding_tol(u, v, cells=int(cells.sum()))
    details = [{"cells": int(cells.sum()),
                "worst_cell": float(diff[cells].min()) if cells.any() else 0.0,
                "interface_mass": float(diff[band].sum() * h ** 4)}]
    return CheckReport("demailly", int(cells.sum() > 0), margin, tol, details)


def window(center, radius):
    """Smooth window ``(1 - |x - c|^2 / s^2)^3`` supported in the ball ``B(c, s)``."""
    def f(*X):
        t = 1.0 - sum((X[a] - center[a]) ** 2 for a in range(4)) / radius ** 2
        return np.where(t > 0, t, 0.0) ** 3
    return f


DEFAULT_WINDOWS = (
    ((0.0, 0.0, 0.0, 0.0), 0.5),
    ((0.1, 0.0, 0.0, 0.0), 0.45),
    ((0.0, 0.05, -0.05, 0.0), 0.5),
)


def window_masses(u, windows=DEFAULT_WINDOWS, where=None):
    """``sum u * Lap_h chi * h^4`` for each window ``chi`` (the weak-form mass).

    Non-finite samples (poles) are skipped, as is anything outside the
    optional boolean mask ``where``.  Apart from a single pole, every
    point in the support of ``Lap_h chi`` must carry a finite value.
    """
    box = u.box
    h = box.h
    out = []
    for c, s in windows:
        chi = box.sample(window(c, s)).values
        L = laplacian(chi, h)
        for a in range(4):
            sl = [slice(None)] * 4
            for e in (0, -1):
                sl[a] = e
                L[tuple(sl)] = 0.0
        support = L != 0
        vals = u.values
        bad = support & ~np.isfinite(vals)
        if bad.sum() > 1:
            raise DomainError("window reaches undefined samples")
        use = support & np.isfinite(vals)
        if where is not None:
            use &= where
        out.append(float(np.where(use, vals * L, 0.0).sum() * h ** 4))
    return out


def check_convergence(kind, u_target, parameters=None, windows=DEFAULT_WINDOWS, rel_tol=0.02):
    """Weak convergence of Laplacian masses against a fixed window battery.

    ``decreasing-mollified``: ``u_j = u_target * rho_eps`` for decreasing
    ``eps`` (default ``8h, 4h, 2h``).  The mollified masses differ from the
    limit by ``O(eps^2)``, so the limit is read off the last two members
    by one Richardson step.

    ``increasing-truncated``: ``u_j = max(u_target, -j)`` for ``j = 1, 2,
    4, ...`` until ``u_j`` agrees with ``u_target`` at every finite sample;
    the limit is the last member.

    Passes when each window's mass trend is monotone and its limit is
    within ``rel_tol`` of the target's mass.
    """
    target = window_masses(u_target, windows)
    h = u_target.h
    if kind == "decreasing-mollified":
        params = list(parameters or (8 * h, 4 * h, 2 * h))
        members = (mollify(u_target, e) for e in params)
    elif kind == "increasing-truncated":
        if parameters is None:
            finite = np.isfinite(u_target.values)
            lo = float(u_target.values[finite].min())
            params = [1]
            while params[-1] < -lo:
                params.append(2 * params[-1])
        else:
            params = list(parameters)
        members = (u_target.with_values(np.maximum(u_target.values, -j)) for j in params)
    else:
        raise DomainError(f"unknown sequence kind {kind!r}")
    # members are summed over the target's finite samples, so a pole cell
    # (value -j in u_j) is omitted on both sides
    where = np.isfinite(u_target.values)
    seq = [(float(p), window_masses(uj, windows, where)) for p, uj in zip(params, members)]
    worst = math.inf
    limits = []
    for k, t in enumerate(target):
        trend = [m[k] for _, m in seq]
        if kind == "decreasing-mollified" and len(seq) >= 2:
            e1, e2 = seq[-2][0], seq[-1][0]
            m1, m2 = trend[-2], trend[-1]
            limit = m2 + (m2 - m1) * e2 ** 2 / (e1 ** 2 - e2 ** 2)
        else:
            limit = trend[-1]
        limits.append(limit)
        scale = max(abs(t), 1e-12)
        worst = min(worst, rel_tol - abs(limit - t) / scale)
        steps = np.diff(trend)
        if steps.size and not (np.all(steps >= -1e-12 * scale) or np.all(steps <= 1e-12 * scale)):
            worst = min(worst, -float(np.abs(steps).min()) / scale)
    details = [{"target": target, "limit": limits}] + [{"parameter": p, "masses": m} for p, m in seq]
    return CheckReport(f"convergence-{kind}", len(seq), worst, 1e-12, details)


def check_cln(K, L, u_samples, shrink=0.5):
    """Chern-Levine-Nirenberg ratio ``int_L Delta u / ||u||_{L^inf(K)}``.

    Reports the empirical constant (largest ratio).  The inequality tested
    is that the ratio does not grow when ``L`` is shrunk (mass over a
    subset of ``L`` cannot exceed the mass over ``L`` for PSH samples), with
    the stencil truncation bound as tolerance.
    """
    if K.kind != "ball" or L.kind != "ball":
        raise DomainError("K and L must be balls")
    (cK, rK), = K.balls
    (cL, rL), = L.balls
    if math.dist(cK, cL) + rL >= rK:
        raise DomainError("L must lie in the interior of K")
    small = CompactSpec.ball(rL * shrink, cL)
    ratios = []
    worst = math.inf
    tol = 0.0
    details = []
    for i, u in enumerate(u_samples):
        box = u.box
        inK = K.contains(box) & (u.mask != OUTSIDE)
        norm = float(np.abs(u.values[inK]).max()) if inK.any() else 0.0
        if norm == 0.0:
            details.append({"sample": i, "note": "zero sup norm, skipped"})
            continue
        inter = u.mask == INTERIOR
        big = L.contains(box) & inter
        sub = small.contains(box) & inter
        r_big = ma_mass(u, big) / norm
        r_small = ma_mass(u, sub) / norm
        ratios.append(r_big)
        worst = min(worst, r_big - r_small)
        # stencil truncation over the annulus, normalized like the ratios
        b, _ = _fourth_difference_bound(u.values, box.h, np.isfinite(u.values))
        tol = max(tol, float(b[big & ~sub].sum() * box.h ** 4) / norm)
        details.append({"sample": i, "ratio": r_big, "ratio_shrunk": r_small})
    if not ratios:
        return CheckReport("cln", 0, 0.0, 0.0, details)
    finite = all(math.isfinite(r) for r in ratios)
    details.insert(0, {"empirical_constant": max(ratios)})
    return CheckReport("cln", len(ratios), worst if finite else -math.inf, tol + 1e-9, details)


# -- capacity checks ---------------------------------------------------------------

def check_capacity_axioms(resolution=41, rel_tol=0.03, js=(4, 16, 64, 256)):
    """Elementary capacity properties on ball families.

    Monotonicity in ``K`` (nested balls), anti-monotonicity in Omega,
    subadditivity on two disjoint balls, increasing-union continuity
    (``ball(0.5 - 1/j)`` up to the open ball of radius 0.5) and
    decreasing-compact continuity (``ball(0.5 + 1/j)`` down to the closed
    ball).  Margins are relative: monotonicity slack, or ``rel_tol`` minus
    the relative gap for the continuity limits.
    """
    box = Box4(resolution)
    items = []

    def cap(K, R=1.0, b=box):
        return capacity(K, R, b).value

    nested = [cap(CompactSpec.ball(r)) for r in (0.3, 0.4, 0.5)]
    for a, b_ in zip(nested, nested[1:]):
        items.append(("monotone in K", (b_ - a) / a, {"values": nested}))

    wide = Box4(resolution, 1.3)
    c1 = cap(CompactSpec.ball(0.5), 1.0, wide)
    c13 = cap(CompactSpec.ball(0.5), 1.3, wide)
    items.append(("anti-monotone in Omega", (c1 - c13) / c1, {"omega_1.0": c1, "omega_1.3": c13}))

    A = ((0.45, 0.0, 0.0, 0.0), 0.25)
    B = ((-0.45, 0.0, 0.0, 0.0), 0.25)
    ca = cap(CompactSpec.union([A]))
    cb = cap(CompactSpec.union([B]))
    cab = cap(CompactSpec.union([A, B]))
    items.append(("subadditive", (ca + cb - cab) / cab, {"A": ca, "B": cb, "A+B": cab}))

    limit_open = cap(CompactSpec.ball(0.5, open=True))
    inc = [cap(CompactSpec.ball(0.5 - 1.0 / j)) for j in js]
    items.append(("increasing union", rel_tol - abs(inc[-1] - limit_open) / limit_open,
                  {"sequence": inc, "limit": limit_open}))
    for a, b_ in zip(inc, inc[1:]):
        items.append(("increasing union monotone", (b_ - a) / a, {}))

    limit = cap(CompactSpec.ball(0.5))
    dec = [cap(CompactSpec.ball(0.5 + 1.0 / j)) for j in js]
    items.append(("decreasing compacts", rel_tol - abs(dec[-1] - limit) / limit,
                  {"sequence": dec, "limit": limit}))
    for a, b_ in zip(dec, dec[1:]):
        items.append(("decreasing compacts monotone", (a - b_) / a, {}))

    worst = min(m for _, m, _ in items)
    details = [{"item": name, "margin": m, **extra} for name, m, extra in items]
    return CheckReport("capacity-axioms", len(items), worst, 1e-9, details)


def check_polar_decay(resolution=121, radii=(0.4, 0.2, 0.1, 0.05), target=2.0, tol=0.1):
    """Outer capacities of shrinking balls about a point fit ``C ~ r^p``.

    The exponent is read from ``1/C = a r^-p + b``, which separates the
    fixed outer contribution of Omega; the plain log-log slope is reported
    alongside.
    """
    box = Box4(resolution)
    point = CompactSpec.point()
    radii = sorted(radii, reverse=True)
    oc = outer_capacity(point, 1.0, box, radii)
    seq = oc.diagnostics["sequence"]
    r = [d for d, _ in seq]
    C = [c for _, c in seq]
    p = fit_offset_power_law(r, C)
    p_plain, _ = fit_power_law(r, C)
    mono = all(b < a for a, b in zip(C, C[1:]))
    margin = tol - abs(p - target)
    if not mono:
        margin = min(margin, -1.0)
    details = [{"radius": a, "capacity": b} for a, b in seq]
    details.append({"exponent": p, "exponent_plain": p_plain, "resolution": resolution})
    return CheckReport("polar-decay", len(seq), margin, 0.0, details)


def check_sublevel_decay(resolution=41, c=0.04, window_radius=0.5, thresholds=(1, 2, 4, 8),
                         bound_factor=2.0):
    """Sublevel capacities of ``v = -c/|q|^2`` fall off like ``1/m``.

    Passes when the capacities are non-increasing and ``m C_m`` never
    exceeds ``bound_factor`` times its first value.
    """
    box = Box4(resolution)
    v = box.sample(lambda *X: -c / sum(x * x for x in X), 1.0)
    rep = psh_check(v)
    vals = sublevel_capacity_decay(v, CompactSpec.ball(window_radius), thresholds)
    C = [x.value for x in vals]
    mC = [m * x for m, x in zip(thresholds, C)]
    margin = bound_factor - max(mC) / mC[0]
    for a, b in zip(C, C[1:]):
        margin = min(margin, (a - b) / a)
    details = [{"threshold": m, "capacity": x, "m_times_C": y}
               for m, x, y in zip(thresholds, C, mC)]
    details.append({"psh_margin": rep.worst_margin, "psh_passed": rep.passed})
    if not rep.passed:
        margin = min(margin, rep.worst_margin)
    return CheckReport("sublevel-decay", len(C), margin, 0.0, details)


# -- random smooth PSH pairs on grids ------------------------------------------------

def _random_term(rng, box):
    kind = int(rng.integers(3))
    if kind == 0:
        A = rng.normal(size=(4, 4))
        S = A @ A.T / 4 + 0.1 * np.eye(4)
        b = rng.normal(size=4) * 0.5
        c = rng.uniform(-1, 1)

        def f(*X):
            q = sum(S[i, j] * X[i] * X[j] for i in range(4) for j in range(4))
            return q + sum(b[i] * X[i] for i in range(4)) + c
    elif kind == 1:
        e = rng.normal(size=4)
        e /= np.linalg.norm(e)
        k = rng.uniform(0.5, 1.5)
        a = rng.uniform(0.2, 1.0)

        def f(*X):
            return a * np.exp(k * sum(e[i] * X[i] for i in range(4)))
    else:
        p = rng.normal(size=4)
        p *= rng.uniform(2.5, 3.5) * box.half_width / np.abs(p).max()
        a = rng.uniform(0.2, 1.0)

        def f(*X):
            return -a / sum((X[i] - p[i]) ** 2 for i in range(4))
    return box.sample(f).values


def random_psh_pair(seed, box, omega_radius=1.0):
    """Two smooth PSH functions with ``u >= v`` near the boundary sphere.

    Each is a sum of one or two terms drawn from convex quadratics,
    exponentials of linear forms and ``-a/|x - p|^2`` with the pole outside
    the box, plus ``0.05 |x|^2``.  ``v`` is shifted to sit just below ``u`` on
    the boundary shell and ``u`` gets a convex bowl that vanishes on the
    inner shell, deep enough that ``u < v`` at the centre.
    """
    rng = np.random.default_rng(seed)
    base = 0.05 * box.radius() ** 2  # keeps the stencil Laplacian strictly positive
    u = base + sum(_random_term(rng, box) for _ in range(rng.integers(1, 3)))
    v = base + sum(_random_term(rng, box) for _ in range(rng.integers(1, 3)))
    h = box.h
    rho = box.radius()
    shell = (rho >= omega_radius - 2 * h) & (rho < omega_radius)
    v = v - float((v - u)[shell].max()) - 0.05
    # lower u inside the shell so that {u < v} is not empty
    inner = (omega_radius - 2 * h) ** 2
    mid = tuple(k // 2 for k in box.shape)
    kappa = max(rng.uniform(1.0, 3.0), (u[mid] - v[mid] + 0.2) / inner)
    u = u + kappa * (rho ** 2 - inner)
    return GridFunction(box, u, omega_radius), GridFunction(box, v, omega_radius)


def run_battery(seed=1, resolution=21, pairs=20, identity_count=200, quick=False):
    """The standard set of checks used by ``verify-all``."""
    reports = []
    reports.append(check_identities(seed, identity_count))
    reports.append(check_moore(seed + 1))
    reports.append(check_comparison_symbolic(seed + 2))
    reports.append(check_demailly_symbolic(seed + 3))
    box = Box4(resolution)
    comp = []
    dem = []
    for k in range(pairs):
        u, v = random_psh_pair(seed * 1000 + k, box)
        comp.append(check_comparison(u, v, 1.0))
        dem.append(check_demailly(u, v, 2 * box.h, omega_radius=1.0))
    reports.append(_merge("comparison-n1", comp))
    reports.append(_merge("demailly-n1", dem))
    conv_box = Box4(41)
    r = 0.3
    target = conv_box.sample(lambda *X: np.maximum(-1.0, -r * r / sum(x * x for x in X)), 1.0)
    target = mollify(target, 2 * conv_box.h)
    reports.append(check_convergence("decreasing-mollified", target))
    pole = conv_box.sample(lambda *X: -r * r / sum(x * x for x in X), 1.0)
    reports.append(check_convergence("increasing-truncated", pole))
    if not quick:
        reports.append(check_capacity_axioms())
        reports.append(check_polar_decay())
        reports.append(check_sublevel_decay())
    return reports


def _merge(check_id, reports):
    worst = min(r.worst_margin for r in reports)
    tol = max(r.tolerance for r in reports)
    details = [{"instance": i, "margin": r.worst_margin, **(r.details[0] if r.details else {})}
               for i, r in enumerate(reports)]
    return CheckReport(check_id, sum(r.instances for r in reports), worst, tol, details)
