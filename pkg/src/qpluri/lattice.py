"""Jacobi obstacle iteration for relative extremal functions on lattices.

The unknown lives on the nodes of a :class:`Lattice`.  Two kinds exist:

* ``FullLattice`` -- every point of the ``m^4`` box, flat C-order indices.
* ``SymmetricLattice`` -- one node per orbit of the hyperoctahedral group
  (coordinate permutations and sign changes) on a box centred at 0.  For
  data invariant under that group (centred balls) the Jacobi iterates are
  invariant as well, so iterating on orbit representatives reproduces the
  full-lattice iteration at a fraction of the memory.

Nodes inside the set ``E`` are fixed at -1, nodes outside the open ball
Omega at 0.  The remaining (free) nodes are updated by
``u <- min(obstacle, A u)`` where ``A`` is the plain 8-neighbour average,
except next to the interface ``dE`` where Shortley-Weller weights place
the -1 boundary value at the interpolated crossing of a level function.
"""

import math
from itertools import combinations_with_replacement

import numba
import numpy as np

from .errors import DomainError, SolverError

__all__ = ["FullLattice", "SymmetricLattice", "ObstacleProblem", "solve", "coarse_to_fine"]

# Direction ``d`` is axis ``d // 2``, step ``-1`` for even ``d`` and ``+1`` for odd.
_THETA_MIN = 1e-6


@numba.njit(cache=True)
def _iterate(u, out, free, nbr, band_of, bw, bc, obst, tol, max_iter):
    it = 0
    dmax = np.inf
    while it < max_iter:
        dmax = 0.0
        for t in range(free.size):
            p = free[t]
            b = band_of[t]
            if b < 0:
                s = 0.0
                for d in range(8):
                    s += u[nbr[t, d]]
                v = 0.125 * s
            else:
                v = bc[b]
                for d in range(8):
                    v += bw[b, d] * u[nbr[t, d]]
            if obst[p] < v:
                v = obst[p]
            out[p] = v
            dd = abs(v - u[p])
            if dd > dmax:
                dmax = dd
        tmp = u
        u = out
        out = tmp
        it += 1
        if dmax < tol:
            break
    return u, it, dmax


@numba.njit(cache=True)
def _mean_defect(u, free, nbr, band_of, bw, bc):
    r = np.zeros(free.size)
    for t in range(free.size):
        b = band_of[t]
        if b < 0:
            s = 0.0
            for d in range(8):
                s += u[nbr[t, d]]
            v = 0.125 * s
        else:
            v = bc[b]
            for d in range(8):
                v += bw[b, d] * u[nbr[t, d]]
        r[t] = v - u[free[t]]
    return r


class FullLattice:
    kind = "full"

    def __init__(self, box):
        self.box = box
        m = box.resolution
        self.size = m ** 4
        self.strides = np.array([m ** 3, m ** 2, m, 1], dtype=np.int64)

    def coords(self):
        """Coordinate arrays broadcastable to the flat node vector (via ravel)."""
        return self.box.coords()

    def flat(self, arr):
        return np.broadcast_to(arr, self.box.shape).ravel()

    def weights(self):
        return None

    def neighbours(self, nodes):
        off = np.empty(8, dtype=np.int64)
        off[0::2] = -self.strides
        off[1::2] = self.strides
        return nodes[:, None] + off[None, :]

    def to_grid(self, values):
        return values.reshape(self.box.shape)

    def from_grid(self, grid):
        return np.asarray(grid, dtype=float).ravel().copy()


def _orbit_size(reps):
    c = reps
    nonzero = (c > 0).sum(axis=1)
    # reps are sorted ascending, so equal values are adjacent
    mult = np.ones(len(c))
    run = np.ones(len(c))
    for j in range(1, 4):
        same = c[:, j] == c[:, j - 1]
        run = np.where(same, run + 1, 1)
        mult *= run
    return (2.0 ** nonzero) * 24.0 / mult


class SymmetricLattice:
    """Orbit representatives ``0 <= c0 <= c1 <= c2 <= c3 <= k`` of a centred box.

    Only orbits with radius below ``keep_radius`` are stored; the solver
    never looks further out than one lattice step beyond Omega.
    """

    kind = "symmetric"

    def __init__(self, box, keep_radius=None):
        if any(c != 0 for c in box.center):
            raise DomainError("the symmetric lattice needs a box centred at the origin")
        self.box = box
        k = (box.resolution - 1) // 2
        self.k = k
        h = box.h
        lim = k if keep_radius is None else min(k, int(math.floor(keep_radius / h)) + 1)
        reps = np.fromiter(
            (x for t in combinations_with_replacement(range(lim + 1), 4) for x in t),
            dtype=np.int64).reshape(-1, 4)
        if keep_radius is not None:
            r2 = (reps.astype(float) ** 2).sum(axis=1)
            reps = reps[r2 * h * h <= keep_radius ** 2 + 1e-12]
        self.reps = reps
        self.size = len(reps)
        self._base = k + 1
        self.keys = self._key(reps)

    def _key(self, c):
        B = self._base
        return ((c[:, 0] * B + c[:, 1]) * B + c[:, 2]) * B + c[:, 3]

    def lookup(self, c):
        """Node index of arbitrary integer points (any signs, any order)."""
        c = np.sort(np.abs(c), axis=1)
        keys = self._key(c)
        idx = np.searchsorted(self.keys, keys)
        idx = np.minimum(idx, self.size - 1)
        found = self.keys[idx] == keys
        return np.where(found, idx, -1)

    def coords(self):
        h = self.box.h
        return tuple(self.reps[:, a] * h for a in range(4))

    def flat(self, arr):
        return np.asarray(arr)

    def weights(self):
        return _orbit_size(self.reps)

    def neighbours(self, nodes):
        c = self.reps[nodes]
        out = np.empty((len(nodes), 8), dtype=np.int64)
        for d in range(8):
            q = c.copy()
            q[:, d // 2] += 1 if d % 2 else -1
            out[:, d] = self.lookup(q)
        if (out < 0).any():
            raise DomainError("a free node has a neighbour outside the stored lattice")
        return out

    def to_grid(self, values):
        """Expand to the dense ``m^4`` array (moderate resolutions only)."""
        m = self.box.resolution
        if m ** 4 > 10 ** 8:
            raise DomainError(f"resolution {m} is too large to expand to a dense grid")
        k = self.k
        idx = np.indices((m,) * 4).reshape(4, -1).T - k
        nodes = self.lookup(idx)
        out = np.where(nodes >= 0, values[np.maximum(nodes, 0)], 0.0)
        return out.reshape(self.box.shape)

    def from_grid(self, grid):
        k = self.k
        g = np.asarray(grid, dtype=float)
        c = self.reps + k
        return g[c[:, 0], c[:, 1], c[:, 2], c[:, 3]].copy()


class ObstacleProblem:
    """Discrete extremal-function problem on a lattice.

    ``level`` maps coordinate arrays to a level function that is <= 0
    exactly on ``E`` (or < 0 when ``open_set``); ``None`` means ``E`` is
    empty.  Omega is the open ball of radius ``omega_radius`` about 0.
    """

    def __init__(self, lattice, level, omega_radius, open_set=False):
        self.lattice = lattice
        self.omega_radius = float(omega_radius)
        X = lattice.coords()
        rho = lattice.flat(np.sqrt(sum(x * x for x in X)))
        inside = rho < omega_radius - 1e-12
        if level is None:
            phi = np.full(lattice.size, np.inf)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                phi = np.array(lattice.flat(level(*X)), dtype=float)
            phi = np.where(np.isnan(phi), np.inf, phi)
        inE = (phi < 0) if open_set else (phi <= 0)
        inE &= inside
        self.phi = phi
        self.inside = inside
        self.in_set = inE
        self.obstacle = np.where(inE, -1.0, 0.0)
        self.free = np.flatnonzero(inside & ~inE).astype(np.int64)
        self.nbr = lattice.neighbours(self.free)
        self._band()

    def _band(self):
        nbr = self.nbr
        inE = self.in_set
        phi = self.phi
        hit = inE[nbr]
        rows = np.flatnonzero(hit.any(axis=1))
        band_of = np.full(len(self.free), -1, dtype=np.int64)
        band_of[rows] = np.arange(len(rows))
        theta = np.ones((len(rows), 8))
        p_phi = phi[self.free[rows]]
        for d in range(8):
            q_phi = phi[nbr[rows, d]]
            h_d = hit[rows, d]
            ok = h_d & np.isfinite(q_phi) & np.isfinite(p_phi)
            with np.errstate(divide="ignore", invalid="ignore"):
                th = p_phi / (p_phi - q_phi)
            th = np.where(ok, np.clip(th, _THETA_MIN, 1.0), 1.0)
            theta[:, d] = th
        tm = theta[:, 0::2]
        tp = theta[:, 1::2]
        c = np.empty_like(theta)
        c[:, 0::2] = 2.0 / ((tm + tp) * tm)
        c[:, 1::2] = 2.0 / ((tm + tp) * tp)
        w = c / c.sum(axis=1, keepdims=True)
        crossing = hit[rows]
        self.band_const = np.where(crossing, -w, 0.0).sum(axis=1)
        self.band_w = np.where(crossing, 0.0, w)
        self.band_of = band_of

    def initial(self, guess=None):
        u = self.obstacle.copy() if guess is None else np.minimum(guess, self.obstacle)
        u[~self.inside] = 0.0
        u[self.in_set] = -1.0
        return u

    def mean_defect(self, u):
        """``A u - u`` at the free nodes (the Jacobi update at a fixed point is 0)."""
        return _mean_defect(u, self.free, self.nbr, self.band_of, self.band_w, self.band_const)

    def laplacian_std(self, u, nodes):
        """Standard-stencil Laplacian (times h^2) at the given nodes."""
        nb = self.lattice.neighbours(nodes)
        return u[nb].sum(axis=1) - 8.0 * u[nodes]


def solve(problem, tol=1e-8, max_iter=10 ** 6, guess=None):
    """Iterate to ``max |update| < tol``.  Returns ``(u, iterations, residual)``."""
    u = problem.initial(guess)
    out = u.copy()
    u, it, res = _iterate(u, out, problem.free, problem.nbr, problem.band_of,
                          problem.band_w, problem.band_const, problem.obstacle,
                          float(tol), int(max_iter))
    if res >= tol:
        raise SolverError(f"no convergence after {it} sweeps (last update {res:.3g})",
                          residual=float(res), iterations=int(it))
    return u, int(it), float(res)


def _prolong_dense(v):
    """Multilinear interpolation from every-other-line to the full lattice."""
    for a in range(4):
        n = v.shape[a]
        shape = list(v.shape)
        shape[a] = 2 * n - 1
        w = np.empty(shape)
        sl = [slice(None)] * 4
        sl[a] = slice(0, None, 2)
        w[tuple(sl)] = v
        lo = [slice(None)] * 4
        hi = [slice(None)] * 4
        lo[a] = slice(0, n - 1)
        hi[a] = slice(1, n)
        sl[a] = slice(1, None, 2)
        w[tuple(sl)] = 0.5 * (v[tuple(lo)] + v[tuple(hi)])
        v = w
    return v


def _prolong_symmetric(coarse_lat, coarse_u, fine_lat):
    c = fine_lat.reps
    acc = np.zeros(fine_lat.size)
    cnt = np.zeros(fine_lat.size)
    odd = c % 2 == 1
    for corner in range(16):
        q = c // 2
        for a in range(4):
            up = (corner >> a) & 1
            q[:, a] = np.where(odd[:, a] & (up == 1), q[:, a] + 1, q[:, a])
        # corners differing only in even axes coincide; count each once
        valid = np.ones(len(c), dtype=bool)
        for a in range(4):
            valid &= ~((~odd[:, a]) & (((corner >> a) & 1) == 1))
        idx = coarse_lat.lookup(q)
        val = np.where(idx >= 0, coarse_u[np.maximum(idx, 0)], 0.0)
        acc += np.where(valid, val, 0.0)
        cnt += valid
    return acc / cnt


def make_lattice(box, kind, omega_radius):
    if kind == "full":
        return FullLattice(box)
    return SymmetricLattice(box, keep_radius=omega_radius + 1.5 * box.h)


def coarse_to_fine(box, kind, level_for, omega_radius, open_set=False, tol=1e-8,
                   max_iter=10 ** 6, warm_start=True):
    """Solve on a chain of coarser boxes first, interpolating each result up.

    ``level_for(box)`` returns the level function to use on that box.

    Returns ``(problem, u, iterations, residual, schedule)`` for the finest
    box; ``iterations`` counts sweeps on the finest lattice only.
    """
    chain = [box]
    while warm_start and chain[-1].coarser() is not None:
        chain.append(chain[-1].coarser())
    chain.reverse()
    guess = None
    prev = None
    for b in chain:
        lat = make_lattice(b, kind, omega_radius)
        prob = ObstacleProblem(lat, level_for(b), omega_radius, open_set)
        if prev is not None:
            plat, pu = prev
            if kind == "full":
                guess = _prolong_dense(plat.to_grid(pu)).ravel()
            else:
                guess = _prolong_symmetric(plat, pu, lat)
        u, it, res = solve(prob, tol, max_iter, guess)
        prev = (lat, u)
    return prob, u, it, res, [b.resolution for b in chain]
