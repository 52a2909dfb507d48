"""Paths, quadrature, grids and solution containers.

States are numpy arrays whose last axis holds the ``m`` components; any
leading axes are treated as a batch (typically the cell index).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParam, NonAdmissibleState

MatrixMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Quadrature:
    """Nodes and weights on [0, 1]; the weights sum to one."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape:
            raise InvalidParam("quadrature nodes and weights differ in length")

    def integrate(self, f):
        return sum(w * f(s) for s, w in zip(self.nodes, self.weights))


def gauss_lobatto_5():
    r = np.sqrt(3.0 / 7.0)
    nodes = 0.5 + 0.5 * np.array([-1.0, -r, 0.0, r, 1.0])
    weights = np.array([1.0 / 20.0, 49.0 / 180.0, 16.0 / 45.0, 49.0 / 180.0, 1.0 / 20.0])
    return Quadrature(nodes, weights)


def gauss_lobatto(n=5):
    """Gauss-Lobatto rule with ``n >= 2`` points mapped to [0, 1]."""
    if n < 2:
        raise InvalidParam("Gauss-Lobatto needs at least two points")
    if n == 5:
        return gauss_lobatto_5()
    legendre = np.polynomial.legendre.Legendre.basis(n - 1)
    interior = np.sort(legendre.deriv().roots().real)
    x = np.concatenate(([-1.0], interior, [1.0]))
    w = 2.0 / (n * (n - 1) * legendre(x) ** 2)
    return Quadrature(0.5 + 0.5 * x, 0.5 * w)


class PathFamily:
    """A family of paths s -> phi(s; w_minus, w_plus) joining two states.

    Subclasses implement ``phi`` and ``dphi_ds``; ``s`` is a scalar and the
    states may carry batch axes.
    """

    def phi(self, s, w_minus, w_plus):
        raise NotImplementedError

    def dphi_ds(self, s, w_minus, w_plus):
        raise NotImplementedError


class SegmentPath(PathFamily):
    def phi(self, s, w_minus, w_plus):
        # convex-combination form reproduces both endpoints exactly
        return (1.0 - s) * np.asarray(w_minus, dtype=float) + s * np.asarray(w_plus, dtype=float)

    def dphi_ds(self, s, w_minus, w_plus):
        return np.asarray(w_plus, dtype=float) - np.asarray(w_minus, dtype=float)

    def __repr__(self):
        return "SegmentPath()"


class ReversedPath(PathFamily):
    """phi~(s; w1, w2) = phi(1 - s; w2, w1)."""

    def __init__(self, base):
        self.base = base

    def phi(self, s, w_minus, w_plus):
        return self.base.phi(1.0 - s, w_plus, w_minus)

    def dphi_ds(self, s, w_minus, w_plus):
        return -self.base.dphi_ds(1.0 - s, w_plus, w_minus)

    def __repr__(self):
        return f"ReversedPath({self.base!r})"


def reverse_family(phi):
    return ReversedPath(phi)


SEGMENT = SegmentPath()


def path_integral(A, phi, w_l, w_r, quad, admissible=None):
    """Approximate the integral of A(phi(s)) dphi/ds over s in [0, 1].

    ``A`` maps states of shape (..., m) to matrices of shape (..., m, m).
    Raises NonAdmissibleState if a quadrature node fails ``admissible``.
    """
    w_l = np.asarray(w_l, dtype=float)
    w_r = np.asarray(w_r, dtype=float)
    states = np.stack([phi.phi(s, w_l, w_r) for s in quad.nodes])
    if admissible is not None:
        ok = np.asarray(admissible(states))
        if not np.all(ok):
            bad = np.argwhere(~ok)[0]
            raise NonAdmissibleState(
                f"path node s={quad.nodes[bad[0]]:.6g} is not admissible",
                cell=int(bad[1]) if len(bad) > 1 else None,
            )
    tangents = np.stack([phi.dphi_ds(s, w_l, w_r) for s in quad.nodes])
    integrand = np.einsum("...ij,...j->...i", A(states), tangents)
    return np.tensordot(quad.weights, integrand, axes=1)


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid; cell j spans [x_left + j dx, x_left + (j+1) dx)."""

    x_left: float
    dx: float
    n_cells: int

    def __post_init__(self):
        if not self.dx > 0:
            raise InvalidParam(f"dx must be positive, got {self.dx}")
        if self.n_cells < 1:
            raise InvalidParam(f"n_cells must be at least 1, got {self.n_cells}")

    @classmethod
    def from_bounds(cls, x_left, x_right, n_cells):
        return cls(float(x_left), (x_right - x_left) / n_cells, int(n_cells))

    @property
    def x_right(self):
        return self.x_left + self.n_cells * self.dx

    @property
    def length(self):
        return self.n_cells * self.dx

    @property
    def centers(self):
        return self.x_left + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def interfaces(self):
        return self.x_left + np.arange(self.n_cells + 1) * self.dx


@dataclass
class GridSolution:
    grid: Grid1D
    u: np.ndarray
    v: Optional[np.ndarray] = None
    time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.u = np.array(self.u, dtype=float)
        if self.u.ndim != 2 or self.u.shape[0] != self.grid.n_cells:
            raise InvalidParam(
                f"u must have shape (n_cells, m) = ({self.grid.n_cells}, m), got {self.u.shape}"
            )
        if self.v is not None:
            self.v = np.array(self.v, dtype=float)
            if self.v.shape != self.u.shape:
                raise InvalidParam(f"v shape {self.v.shape} differs from u shape {self.u.shape}")

    @property
    def m(self):
        return self.u.shape[1]

    def copy(self):
        return GridSolution(
            self.grid,
            self.u.copy(),
            None if self.v is None else self.v.copy(),
            self.time,
            dict(self.meta),
        )
