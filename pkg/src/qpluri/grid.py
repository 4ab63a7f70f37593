"""Finite differences on uniform lattices over boxes in R^4.

For ``n = 1`` the Monge-Ampere density of a function on H = R^4 is its
Euclidean Laplacian, so everything here is built on the standard
second-order stencil.  Grids are dense ``m^4`` arrays indexed ``[i0, i1,
i2, i3]`` with axis ``a`` carrying the coordinate ``x_a``.
"""

import math

import numpy as np
from scipy.signal import fftconvolve

from .errors import DomainError
from .report import CheckReport

__all__ = [
    "OUTSIDE",
    "BOUNDARY",
    "INTERIOR",
    "Box4",
    "GridFunction",
    "MeasureGrid",
    "laplacian",
    "fd_ma_density",
    "ma_mass",
    "mollify",
    "psh_check",
    "dump",
    "load",
]

OUTSIDE, BOUNDARY, INTERIOR = 0, 1, 2


class Box4:
    """Uniform lattice on ``center + [-half_width, half_width]^4``."""

    def __init__(self, resolution=41, half_width=1.0, center=(0.0, 0.0, 0.0, 0.0)):
        m = int(resolution)
        if m != resolution or m < 5 or m % 2 == 0:
            raise DomainError(f"resolution must be an odd integer >= 5, got {resolution}")
        if not half_width > 0:
            raise DomainError("half_width must be positive")
        center = tuple(float(c) for c in center)
        if len(center) != 4:
            raise DomainError("center needs four coordinates")
        self.resolution = m
        self.half_width = float(half_width)
        self.center = center

    @property
    def h(self):
        return 2.0 * self.half_width / (self.resolution - 1)

    @property
    def shape(self):
        return (self.resolution,) * 4

    def axis(self, a):
        return self.center[a] + np.linspace(-self.half_width, self.half_width, self.resolution)

    def coords(self):
        """Four broadcastable coordinate arrays (sparse meshgrid)."""
        return np.meshgrid(*(self.axis(a) for a in range(4)), indexing="ij", sparse=True)

    def radius(self, center=None):
        c = self.center if center is None else center
        X = self.coords()
        return np.sqrt(sum((X[a] - c[a]) ** 2 for a in range(4)))

    def sample(self, f, domain_radius=None):
        """Evaluate ``f(x0, x1, x2, x3)`` on the lattice."""
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = f(*self.coords())
        vals = np.broadcast_to(np.asarray(vals, dtype=float), self.shape).copy()
        return GridFunction(self, vals, domain_radius)

    def coarser(self):
        """Box with every other lattice line, or None if that is too coarse."""
        m = self.resolution
        if (m - 1) % 4 or (m - 1) // 2 + 1 < 11:
            return None
        return Box4((m - 1) // 2 + 1, self.half_width, self.center)

    def __eq__(self, other):
        return isinstance(other, Box4) and (
            self.resolution, self.half_width, self.center) == (
            other.resolution, other.half_width, other.center)

    def __hash__(self):
        return hash((self.resolution, self.half_width, self.center))

    def __repr__(self):
        return f"Box4(resolution={self.resolution}, half_width={self.half_width}, center={self.center})"


def _mask(box, values, domain_radius):
    finite = np.isfinite(values)
    inside = finite.copy()
    if domain_radius is not None:
        inside &= box.radius() < domain_radius - 1e-12
    interior = inside.copy()
    for a in range(4):
        sl = [slice(None)] * 4
        sl[a] = 0
        interior[tuple(sl)] = False
        sl[a] = -1
        interior[tuple(sl)] = False
        # the stencil needs finite values on both neighbours
        interior &= np.roll(finite, 1, a) & np.roll(finite, -1, a)
    mask = np.full(values.shape, OUTSIDE, dtype=np.int8)
    mask[inside] = BOUNDARY
    mask[interior] = INTERIOR
    return mask


class GridFunction:
    """Samples of a real function on a :class:`Box4`.

    ``domain_radius`` declares the ball Omega (centred at the box centre).
    The mask marks lattice points as ``INTERIOR`` (inside Omega, stencil
    fully available), ``BOUNDARY`` (inside Omega, stencil not available)
    or ``OUTSIDE``.  Non-finite samples, e.g. at a pole, are outside.
    """

    def __init__(self, box, values, domain_radius=None):
        values = np.asarray(values, dtype=float)
        if values.shape != box.shape:
            raise DomainError(f"values have shape {values.shape}, box needs {box.shape}")
        if domain_radius is not None and not domain_radius > 0:
            raise DomainError("domain radius must be positive")
        self.box = box
        self.values = values
        self.domain_radius = None if domain_radius is None else float(domain_radius)
        self._mask = None

    @property
    def mask(self):
        if self._mask is None:
            self._mask = _mask(self.box, self.values, self.domain_radius)
        return self._mask

    @property
    def h(self):
        return self.box.h

    def interior(self):
        return self.mask == INTERIOR

    def sup_norm(self, where=None):
        sel = self.mask != OUTSIDE if where is None else where
        v = self.values[sel]
        return float(np.abs(v).max()) if v.size else 0.0

    def with_values(self, values):
        return GridFunction(self.box, values, self.domain_radius)

    def __repr__(self):
        return f"GridFunction({self.box!r}, domain_radius={self.domain_radius})"


class MeasureGrid:
    """Cell densities of a measure; the mass of a cell is ``density * h^4``."""

    def __init__(self, box, density, mask):
        self.box = box
        self.density = density
        self.mask = mask

    @property
    def total(self):
        return float(self.density.sum() * self.box.h ** 4)

    def mass(self, region=None):
        return float(self.density[_region(self.box, self.mask, region)].sum() * self.box.h ** 4)


def laplacian(values, h):
    """Standard 9-point 4-D Laplacian; wraps at the faces, callers mask those."""
    v = np.where(np.isfinite(values), values, 0.0)
    s = -8.0 * v
    for a in range(4):
        s += np.roll(v, 1, a) + np.roll(v, -1, a)
    return s / (h * h)


def fd_ma_density(u):
    """Discrete ``(Delta u)^1`` density: the Laplacian at interior points, 0 elsewhere."""
    if u.box.resolution < 5:
        raise DomainError("resolution below 5")
    interior = u.interior()
    dens = np.where(interior, laplacian(u.values, u.h), 0.0)
    return MeasureGrid(u.box, dens, u.mask)


def _region(box, mask, region):
    if region is None:
        return mask == INTERIOR
    if callable(region):
        with np.errstate(divide="ignore", invalid="ignore"):
            sel = region(*box.coords())
        sel = np.broadcast_to(np.asarray(sel, dtype=bool), box.shape)
    else:
        sel = np.asarray(region, dtype=bool)
        if sel.shape != box.shape:
            raise DomainError("region array does not match the grid")
    if np.any(sel & (mask != INTERIOR)):
        raise DomainError("region reaches points outside the interior mask")
    return sel


def ma_mass(u, region=None):
    """``sum_{x in region} density(x) h^4``; ``region`` is None (whole interior),
    a boolean array or a predicate on the coordinate arrays."""
    if isinstance(u, MeasureGrid):
        return u.mass(region)
    return fd_ma_density(u).mass(region)


def _kernel(eps, h):
    k = int(math.floor(eps / h + 1e-9))
    off = np.arange(-k, k + 1) * h
    X = np.meshgrid(off, off, off, off, indexing="ij", sparse=True)
    t = 1.0 - sum(x * x for x in X) / (eps * eps)
    K = np.where(t > 0, t, 0.0) ** 3
    return K / K.sum()


def mollify(u, eps):
    """Convolve with the normalized bump ``(1 - (r/eps)^2)^3``.

    Points whose kernel support reaches a non-finite sample or the box
    faces are set to NaN, so the result lives on an eroded interior.
    """
    h = u.h
    if eps < h * (1 - 1e-9):
        raise DomainError(f"eps={eps} is below the grid spacing {h}")
    K = _kernel(eps, h)
    k = K.shape[0] // 2
    finite = np.isfinite(u.values)
    filled = np.where(finite, u.values, 0.0)
    out = fftconvolve(filled, K, mode="same")
    bad = np.zeros(u.box.shape, dtype=bool)
    if not finite.all():
        support = (K > 0).astype(float)
        bad = fftconvolve((~finite).astype(float), support, mode="same") > 0.5
    for a in range(4):
        sl = [slice(None)] * 4
        sl[a] = slice(0, k)
        bad[tuple(sl)] = True
        sl[a] = slice(u.box.resolution - k, None)
        bad[tuple(sl)] = True
    out[bad] = np.nan
    return u.with_values(out)


def _fourth_difference_bound(values, h, finite):
    """``h^2/12 * sum_a |D_a^4 u|``, the leading truncation term of the stencil.

    Uses centred five-point fourth differences.  Returns the bound and the
    mask of points where all four lines are available; elsewhere the bound
    is 0 and cannot be relied on.
    """
    v = np.where(finite, values, 0.0)
    b = np.zeros(values.shape)
    certified = np.ones(values.shape, dtype=bool)
    for a in range(4):
        d4 = (np.roll(v, 2, a) - 4 * np.roll(v, 1, a) + 6 * v
              - 4 * np.roll(v, -1, a) + np.roll(v, -2, a)) / h ** 4
        ok = finite.copy()
        for s in (-2, -1, 1, 2):
            ok &= np.roll(finite, s, a)
        sl = [slice(None)] * 4
        for edge in (0, 1, -2, -1):
            sl[a] = edge
            ok[tuple(sl)] = False
        b += np.where(ok, np.abs(d4), 0.0)
        certified &= ok
    return b * h * h / 12.0, certified


def psh_check(u, tol=None, check_id="psh"):
    """Discrete subharmonicity on the interior mask.

    The margin at a point is ``Lap_h u + 2 * h^2/12 sum |D^4 u|``: the
    stencil's own truncation error is granted, since the stencil Laplacian
    of a harmonic function can come out slightly negative.  The factor 2
    absorbs the next order, which matters when all fourth derivatives
    share a sign and the leading term alone is nearly exact.  Points where some
    axis has no five-point line (boxed in by faces or masked samples) cannot
    be certified and are skipped; their number is in the details.  ``tol``
    defaults to ``1e-9 ||u||_inf / h^2`` (rounding).
    """
    h = u.h
    interior = u.interior()
    if tol is None:
        tol = 1e-9 * max(u.sup_norm(), 1.0) / (h * h)
    if not interior.any():
        return CheckReport(check_id, 0, 0.0, tol)
    lap = laplacian(u.values, h)
    bound, certified = _fourth_difference_bound(u.values, h, np.isfinite(u.values))
    checked = interior & certified
    if not checked.any():
        return CheckReport(check_id, 0, 0.0, tol, note="no certifiable points")
    margin = np.where(checked, lap + 2.0 * bound, np.inf)
    idx = np.unravel_index(int(np.argmin(margin)), margin.shape)
    X = [u.box.axis(a)[idx[a]] for a in range(4)]
    details = [{"point": [float(x) for x in X], "laplacian": float(lap[idx]),
                "stencil_bound": float(2.0 * bound[idx]),
                "uncertified": int((interior & ~certified).sum())}]
    return CheckReport(check_id, int(checked.sum()), float(margin[idx]), tol, details)


# -- snapshots -------------------------------------------------------------

def _header(u, fmt):
    c = ",".join(repr(x) for x in u.box.center)
    r = "none" if u.domain_radius is None else repr(u.domain_radius)
    return (f"# qgrid n=1 center={c} half_width={u.box.half_width!r} "
            f"resolution={u.box.resolution} domain_radius={r} format={fmt}\n")


def dump(u, path, fmt="text"):
    """Write a snapshot: a one-line header, then the values in C order."""
    if fmt not in ("text", "binary"):
        raise DomainError(f"unknown snapshot format {fmt!r}")
    flat = u.values.ravel()
    if fmt == "text":
        with open(path, "w") as fh:
            fh.write(_header(u, fmt))
            fh.write("\n".join(repr(float(x)) for x in flat))
            fh.write("\n")
    else:
        with open(path, "wb") as fh:
            fh.write(_header(u, fmt).encode())
            fh.write(flat.astype("<f8").tobytes())


def load(path):
    with open(path, "rb") as fh:
        head = fh.readline().decode()
        if not head.startswith("# qgrid "):
            raise DomainError(f"{path}: missing qgrid header")
        meta = dict(tok.split("=", 1) for tok in head[8:].split())
        box = Box4(int(meta["resolution"]), float(meta["half_width"]),
                   tuple(float(c) for c in meta["center"].split(",")))
        R = None if meta["domain_radius"] == "none" else float(meta["domain_radius"])
        body = fh.read()
    if meta["format"] == "binary":
        vals = np.frombuffer(body, dtype="<f8").astype(float)
    else:
        vals = np.array([float(t) for t in body.split()])
    if vals.size != box.resolution ** 4:
        raise DomainError(f"{path}: expected {box.resolution ** 4} values, found {vals.size}")
    return GridFunction(box, vals.reshape(box.shape), R)
