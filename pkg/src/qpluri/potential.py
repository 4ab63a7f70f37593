"""Relative extremal functions and quaternionic capacities for n = 1.

With ``n = 1`` the Monge-Ampere mass of ``u`` is the mass of its Laplacian,
so the capacity of ``K`` relative to the ball Omega is the Laplacian mass
of the relative extremal function ``u_K``: the largest subharmonic
function that is <= 0 on Omega and <= -1 on ``K``.  It is computed by the
Jacobi obstacle iteration of :mod:`qpluri.lattice`.
"""

import math

import numpy as np
from scipy.optimize import curve_fit

from . import lattice as lat
from .errors import DomainError
from .grid import Box4, GridFunction, ma_mass, psh_check

__all__ = [
    "CompactSpec",
    "ExtremalSolution",
    "CapacityValue",
    "extremal_function",
    "capacity",
    "capacity_lower",
    "outer_capacity",
    "sublevel_capacity_decay",
    "radial_capacity",
    "radial_extremal",
    "fit_power_law",
    "fit_offset_power_law",
    "capacity_table",
]

_ORIGIN = (0.0, 0.0, 0.0, 0.0)


def _fmt(x):
    return repr(float(x))


class CompactSpec:
    """A set ``E`` inside the ball Omega.

    Kinds: ``ball`` (a single ball), ``union`` (finitely many balls),
    ``sublevel`` (``{v < -m}`` intersected with a window ball, ``v`` a
    GridFunction or a callable), ``empty`` and ``domain`` (all of Omega).
    ``open`` decides whether the boundary of each ball belongs to ``E``.
    """

    def __init__(self, kind, balls=(), v=None, threshold=None, window=None, open=False):
        if kind not in ("ball", "union", "sublevel", "empty", "domain"):
            raise DomainError(f"unknown set kind {kind!r}")
        balls = tuple((tuple(float(x) for x in c), float(r)) for c, r in balls)
        for c, r in balls:
            if len(c) != 4:
                raise DomainError("ball centres need four coordinates")
            if r < 0:
                raise DomainError("ball radius must be non-negative")
        if kind == "ball" and len(balls) != 1:
            raise DomainError("a ball spec holds exactly one ball")
        if kind == "sublevel" and (v is None or threshold is None or window is None):
            raise DomainError("a sublevel spec needs v, a threshold and a window ball")
        self.kind = kind
        self.balls = balls
        self.v = v
        self.threshold = None if threshold is None else float(threshold)
        self.window = window
        self.open = bool(open)

    @classmethod
    def ball(cls, radius, center=_ORIGIN, open=False):
        return cls("ball", [(center, radius)], open=open)

    @classmethod
    def point(cls, center=_ORIGIN):
        return cls("ball", [(center, 0.0)])

    @classmethod
    def union(cls, balls, open=False):
        balls = list(balls)
        if len(balls) == 1:
            return cls("ball", balls, open=open)
        return cls("union", balls, open=open)

    @classmethod
    def empty(cls):
        return cls("empty")

    @classmethod
    def domain(cls):
        return cls("domain")

    @classmethod
    def sublevel(cls, v, threshold, window):
        if not isinstance(window, CompactSpec) or window.kind != "ball":
            raise DomainError("the sublevel window must be a ball spec")
        return cls("sublevel", v=v, threshold=threshold, window=window, open=True)

    @classmethod
    def parse(cls, text):
        """``empty``, ``domain``, ``ball:R[@c0,c1,c2,c3]``, ``point[@c]``,
        ``open-ball:R[@c]`` or ``union:R@c;R@c;...``."""
        text = text.strip()
        if text in ("empty", "domain"):
            return cls(text)
        head, _, body = text.partition(":")
        if head == "point" or text.startswith("point@"):
            _, _, c = text.partition("@")
            return cls.point(_center(c) if c else _ORIGIN)
        if head in ("ball", "open-ball", "union"):
            balls = []
            for part in body.split(";"):
                r, _, c = part.partition("@")
                balls.append((_center(c) if c else _ORIGIN, float(r)))
            if head == "union":
                return cls.union(balls)
            return cls("ball", balls[:1], open=head == "open-ball")
        raise DomainError(f"cannot parse set spec {text!r}")

    def __str__(self):
        if self.kind in ("empty", "domain"):
            return self.kind
        if self.kind == "sublevel":
            return f"sublevel:{self.threshold!r}|{self.window}"
        parts = []
        for c, r in self.balls:
            s = _fmt(r)
            if any(c):
                s += "@" + ",".join(_fmt(x) for x in c)
            parts.append(s)
        head = "union" if self.kind == "union" else ("open-ball" if self.open else "ball")
        return head + ":" + ";".join(parts)

    __repr__ = __str__

    def is_centered(self):
        """True when ``E`` is invariant under coordinate permutations and sign changes."""
        if self.kind in ("empty", "domain"):
            return True
        return self.kind == "ball" and not any(self.balls[0][0])

    def extent(self):
        """Largest distance from 0 reached by ``E``."""
        if self.kind == "empty":
            return 0.0
        if self.kind == "sublevel":
            return self.window.extent()
        if self.kind == "domain":
            return math.inf
        return max(math.sqrt(sum(x * x for x in c)) + r for c, r in self.balls)

    def level(self, box=None):
        """Level function (callable on coordinate arrays), <= 0 on ``E``."""
        if self.kind == "empty":
            return None
        if self.kind == "domain":
            return lambda *X: np.full(np.broadcast(*X).shape, -1.0)
        if self.kind in ("ball", "union"):
            balls = self.balls

            def f(*X):
                out = None
                for c, r in balls:
                    d = np.sqrt(sum((X[a] - c[a]) ** 2 for a in range(4))) - r
                    out = d if out is None else np.minimum(out, d)
                return out
            return f
        win = self.window.level()
        m = self.threshold
        v = self.v
        if isinstance(v, GridFunction):
            vals = _restrict(v, box)

            def f(*X):
                return np.maximum(vals + m, win(*X))
            return f

        def f(*X):
            return np.maximum(v(*X) + m, win(*X))
        return f

    def contains(self, box):
        """Boolean array of lattice points in ``E``."""
        f = self.level(box)
        if f is None:
            return np.zeros(box.shape, dtype=bool)
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.broadcast_to(f(*box.coords()), box.shape)
        return (phi < 0) if self.open else (phi <= 0)


def _restrict(v, box):
    """Samples of ``v`` on ``box``, which must be ``v.box`` or a coarsening of it."""
    if box is None:
        box = v.box
    if box == v.box:
        return v.values
    fine = v.box
    s, rem = divmod(fine.resolution - 1, box.resolution - 1)
    if rem or (fine.half_width, fine.center) != (box.half_width, box.center):
        raise DomainError("a sampled sublevel set needs v on the solve grid")
    return v.values[::s, ::s, ::s, ::s]


def _center(text):
    c = tuple(float(x) for x in text.split(","))
    if len(c) != 4:
        raise DomainError(f"centre {text!r} needs four coordinates")
    return c


class ExtremalSolution:
    """Solved relative extremal function on a dense grid."""

    def __init__(self, u, iterations, residual, obstacle, E, omega_radius, problem, schedule):
        self.u = u
        self.iterations = iterations
        self.residual = residual
        self.obstacle = obstacle
        self.E = E
        self.omega_radius = omega_radius
        self.problem = problem
        self.schedule = schedule

    def mean_defect(self):
        """Solver-operator Laplacian times h^2/8 at the free points (zero at a fixed point)."""
        prob = self.problem
        u = prob.lattice.from_grid(self.u.values)
        return prob.mean_defect(u)

    def complementarity(self, tol):
        """Worst violation of: u == obstacle, or |A u - u| <= tol."""
        d = np.abs(self.mean_defect())
        return float(d.max()) if d.size else 0.0


class CapacityValue:
    """A computed capacity with its provenance."""

    def __init__(self, value, method, diagnostics=None, K="", omega=""):
        if value < 0 and value > -1e-12:
            value = 0.0
        self.value = float(value)
        self.method = method
        self.diagnostics = dict(diagnostics or {})
        self.K = str(K)
        self.omega = str(omega)

    def __float__(self):
        return self.value

    def __repr__(self):
        return f"CapacityValue({self.value:.6g}, method={self.method!r}, K={self.K}, omega={self.omega})"

    ROW_HEADER = "K\tomega\tresolution\tvalue\tmethod\tresidual"

    def to_row(self):
        d = self.diagnostics
        return "\t".join([self.K, self.omega, str(d.get("resolution", "")),
                          repr(self.value), self.method, repr(float(d.get("residual", 0.0)))])


def capacity_table(values):
    return "\n".join([CapacityValue.ROW_HEADER] + [v.to_row() for v in values]) + "\n"


def _check_setup(E, omega_radius, grid):
    if not isinstance(E, CompactSpec):
        raise DomainError("E must be a CompactSpec")
    if any(grid.center):
        raise DomainError("Omega is a ball about 0; the grid box must be centred at 0")
    if not 0 < omega_radius <= grid.half_width:
        raise DomainError("Omega must fit inside the grid box")
    if E.kind != "domain" and not E.extent() < omega_radius:
        raise DomainError(f"{E} is not compactly contained in the ball of radius {omega_radius}")


def _lattice_kind(E, lattice):
    if lattice == "auto":
        return "symmetric" if E.is_centered() else "full"
    if lattice == "symmetric" and not E.is_centered():
        raise DomainError("the symmetric lattice needs a centred ball")
    if lattice not in ("full", "symmetric"):
        raise DomainError(f"unknown lattice kind {lattice!r}")
    return lattice


def _solve(E, omega_radius, grid, tol, max_iter, warm_start, lattice):
    _check_setup(E, omega_radius, grid)
    kind = _lattice_kind(E, lattice)
    if E.kind == "sublevel":
        kind = "full"
    if tol is None:
        tol = 1e-8
    return lat.coarse_to_fine(grid, kind, lambda b: E.level(b), omega_radius, E.open,
                              tol, max_iter, warm_start)


def extremal_function(E, omega_radius, grid, tol=None, max_iter=10 ** 6,
                      warm_start=True, lattice="auto"):
    """Relative extremal function of ``E`` in the ball of radius ``omega_radius``.

    Returns an :class:`ExtremalSolution` whose ``u`` is a dense GridFunction.
    """
    prob, u, it, res, sched = _solve(E, omega_radius, grid, tol, max_iter, warm_start, lattice)
    L = prob.lattice
    U = GridFunction(grid, L.to_grid(u), omega_radius)
    obst = GridFunction(grid, L.to_grid(prob.obstacle), omega_radius)
    return ExtremalSolution(U, it, res, obst, E, omega_radius, prob, sched)


def _mass_profile(prob, u, h):
    """Standard-stencil Laplacian masses over Omega's lattice points."""
    nodes = np.flatnonzero(prob.inside)
    lap = prob.laplacian_std(u, nodes)
    w = prob.lattice.weights()
    w = np.ones(len(nodes)) if w is None else w[nodes]
    return nodes, w * lap * h * h


def capacity(K, omega_radius, grid, tol=None, max_iter=10 ** 6, warm_start=True,
             lattice="auto"):
    """``C(K, Omega)`` as the Laplacian mass of the extremal function.

    The diagnostics include the fraction of the mass within ``3h`` of the
    boundary of ``K`` (measured with the level function).
    """
    h = grid.h
    prob, u, it, res, sched = _solve(K, omega_radius, grid, tol, max_iter, warm_start, lattice)
    nodes, mass = _mass_profile(prob, u, h)
    total = float(mass.sum())
    phi = prob.phi[nodes]
    near = np.abs(phi) <= 3 * h
    frac = float(mass[near].sum() / total) if total > 0 else 1.0
    diag = {
        "resolution": grid.resolution,
        "half_width": grid.half_width,
        "iterations": it,
        "residual": res,
        "schedule": sched,
        "lattice": prob.lattice.kind,
        "near_boundary_fraction": frac,
    }
    return CapacityValue(total, "extremal-mass", diag, K, f"ball:{_fmt(omega_radius)}")


def _halo(box, inK):
    out = inK.copy()
    for a in range(4):
        out |= np.roll(inK, 1, a) | np.roll(inK, -1, a)
    return out


def capacity_lower(K, omega_radius, candidates, grid, tol=None):
    """Supremum of candidate masses over ``K``; a lower bound for ``C(K, Omega)``.

    Each candidate must satisfy ``0 <= u <= 1`` on Omega and pass
    :func:`psh_check`; rejected candidates are listed in the diagnostics.
    Mass is integrated over the lattice points of ``K`` and their axis
    neighbours, which is where the stencil of a function constant on ``K``
    registers the mass sitting on ``dK``.
    """
    _check_setup(K, omega_radius, grid)
    best = 0.0
    best_idx = None
    rejected = []
    region = None
    for i, u in enumerate(candidates):
        if u.box != grid:
            rejected.append((i, "grid mismatch"))
            continue
        inside = u.mask != 0
        vals = u.values[inside]
        slack = 1e-9 if tol is None else tol
        if vals.size and (vals.min() < -slack or vals.max() > 1 + slack):
            rejected.append((i, "violates 0 <= u <= 1"))
            continue
        rep = psh_check(u)
        if not rep.passed:
            rejected.append((i, f"psh check failed (margin {rep.worst_margin:.3g})"))
            continue
        if region is None:
            region = _halo(grid, K.contains(grid))
        reg = region & (u.mask == 2)
        val = ma_mass(u, reg)
        if val > best:
            best, best_idx = val, i
    diag = {"resolution": grid.resolution, "candidates": len(candidates),
            "rejected": rejected, "best": best_idx}
    return CapacityValue(best, "candidate-sup", diag, K, f"ball:{_fmt(omega_radius)}")


def _grow(E, delta):
    if E.kind not in ("ball", "union"):
        raise DomainError("outer capacity needs a ball or a union of balls")
    return CompactSpec.union([(c, r + delta) for c, r in E.balls], open=True)


def outer_capacity(E, omega_radius, grid, shrink_schedule=(), **solve_opts):
    """Limit of ``C(omega, Omega)`` over open neighbourhoods ``omega`` of ``E``.

    The neighbourhoods are the ``delta``-enlargements of ``E`` for the
    strictly decreasing values in ``shrink_schedule``.  For an open ``E`` the
    trivial neighbourhood ``E`` itself attains the infimum.  The value
    reported is the last (smallest) neighbourhood's capacity; the whole
    sequence is in ``diagnostics['sequence']``.
    """
    sched = [float(d) for d in shrink_schedule]
    if any(b >= a for a, b in zip(sched, sched[1:])) or any(d < 0 for d in sched):
        raise DomainError("shrink schedule must be non-negative and strictly decreasing")
    if E.open:
        c = capacity(E, omega_radius, grid, **solve_opts)
        return CapacityValue(c.value, "open-cover-limit", {**c.diagnostics, "sequence": [(0.0, c.value)]},
                             E, c.omega)
    if not sched:
        raise DomainError("a closed set needs a non-empty shrink schedule")
    seq = []
    last = None
    for d in sched:
        last = capacity(_grow(E, d), omega_radius, grid, **solve_opts)
        seq.append((d, last.value))
    diag = dict(last.diagnostics)
    diag["sequence"] = seq
    diag["monotone"] = all(b <= a * (1 + 1e-9) for (_, a), (_, b) in zip(seq, seq[1:]))
    return CapacityValue(last.value, "open-cover-limit", diag, E, last.omega)


def sublevel_capacity_decay(v, omega, thresholds, omega_radius=1.0, grid=None, **solve_opts):
    """Capacities of ``{v < -m} cap omega`` for increasing thresholds ``m``.

    ``v`` is a GridFunction (then its box is the solve grid) or a callable.
    """
    ms = [float(m) for m in thresholds]
    if any(b <= a for a, b in zip(ms, ms[1:])):
        raise DomainError("thresholds must be strictly increasing")
    if isinstance(v, GridFunction):
        grid = v.box
    elif grid is None:
        raise DomainError("a callable v needs a grid")
    out = []
    for m in ms:
        E = CompactSpec.sublevel(v, m, omega)
        if isinstance(v, GridFunction):
            empty = not (E.contains(grid) & (grid.radius() < omega_radius)).any()
        else:
            empty = False
        if empty:
            c = CapacityValue(0.0, "extremal-mass", {"resolution": grid.resolution,
                                                     "iterations": 0, "residual": 0.0},
                              E, f"ball:{_fmt(omega_radius)}")
        else:
            c = capacity(E, omega_radius, grid, **solve_opts)
        c.diagnostics["threshold"] = m
        out.append(c)
    return out


# -- closed forms used as oracles ------------------------------------------

def radial_capacity(r, R):
    """Capacity of the ball of radius ``r`` about 0 in the ball of radius ``R`` (n = 1)."""
    if r <= 0:
        return 0.0
    return 4 * math.pi ** 2 * r * r * R * R / (R * R - r * r)


def radial_extremal(rho, r, R):
    """``-(rho^-2 - R^-2) / (r^-2 - R^-2)`` on the annulus, -1 inside, 0 outside."""
    rho = np.asarray(rho, dtype=float)
    with np.errstate(divide="ignore"):
        val = -(rho ** -2.0 - R ** -2.0) / (r ** -2.0 - R ** -2.0)
    return np.where(rho <= r, -1.0, np.where(rho >= R, 0.0, val))


def fit_power_law(r, C):
    """Least-squares slope of ``log C`` against ``log r``."""
    r = np.asarray(r, dtype=float)
    C = np.asarray(C, dtype=float)
    p, loga = np.polyfit(np.log(r), np.log(C), 1)
    return float(p), float(math.exp(loga))


def fit_offset_power_law(r, C):
    """Fit ``1/C = a r^-p + b`` and return ``p``.

    The reciprocal of a condenser capacity adds up like resistances in
    series: an inner part that scales with ``r`` and an outer part set by
    Omega that does not.  Separating them isolates the small-``r``
    exponent from the finite size of Omega.
    """
    r = np.asarray(r, dtype=float)
    if len(r) < 4:
        raise DomainError("the offset model has three parameters; give at least four radii")
    y = 1.0 / np.asarray(C, dtype=float)
    p0, a0 = fit_power_law(r, np.asarray(C, dtype=float))

    def model(x, a, p, b):
        return a * x ** (-p) + b

    popt, _ = curve_fit(model, r, y, p0=(1.0 / a0, p0, 0.0), maxfev=20000)
    return float(popt[1])
