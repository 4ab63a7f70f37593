"""Quaternionic pluripotential calculus: exact operators, grid solvers, checks.

Subpackages by layer:

* ``scalars``, ``polynomial``, ``exterior``, ``symcalc``, ``quaternion``:
  exact arithmetic for the first-order operators, the Baston operator and
  the Monge-Ampere density of polynomials in ``4n`` real variables.
* ``grid``, ``lattice``, ``potential``: finite differences on ``R^4``,
  the obstacle solver and capacities (``n = 1``).
* ``verify``, ``report``, ``cli``: checks, their records and the runner.
"""

from .errors import DomainError, SolverError
from .grid import Box4, GridFunction, fd_ma_density, ma_mass, mollify, psh_check
from .polynomial import RealPolynomial
from .potential import CompactSpec, capacity, extremal_function, outer_capacity
from .report import CheckReport
from .symcalc import baston, d0, d1, hessian, ma_density

__version__ = "0.1.0"

__all__ = [
    "Box4", "CheckReport", "CompactSpec", "DomainError", "GridFunction", "RealPolynomial",
    "SolverError", "baston", "capacity", "d0", "d1", "extremal_function", "fd_ma_density",
    "hessian", "ma_density", "ma_mass", "mollify", "outer_capacity", "psh_check",
]
