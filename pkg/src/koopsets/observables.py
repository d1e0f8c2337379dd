"""Complex-valued observables on box windows, closed-form and grid-sampled.

Closed forms (bump, linear functional, constants and their sums, products,
scalar multiples and powers) carry analytic gradients.  Grid-sampled
observables interpolate multilinearly inside their box and differentiate
with second-order finite differences on the lattice; evaluation outside the
box is an error, since values there are simply unknown.

Observables are treated as immutable once constructed.  All value arrays
are complex128.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

__all__ = [
    "SpatialGrid",
    "Observable",
    "Bump",
    "LinearWindow",
    "Constant",
    "Scaled",
    "Sum",
    "Product",
    "Power",
    "GridSampled",
    "ObservableSet",
    "WindowEscapeError",
    "sup_norm_diff",
    "compose_with_flow",
    "observable_csv",
]


class WindowEscapeError(ValueError):
    """Raised when evaluation is requested outside a sampled window."""

    def __init__(self, point, node_index=None):
        self.point = np.asarray(point, dtype=float)
        self.node_index = node_index
        at = f" (node {node_index})" if node_index is not None else ""
        super().__init__(
            f"point {np.array2string(self.point, precision=6)} left the sampled window{at}"
        )


class SpatialGrid:
    """Uniform lattice on a box, corners included, C-order node enumeration."""

    def __init__(self, lo, hi, points_per_axis):
        lo = np.asarray(lo, dtype=float).reshape(-1)
        hi = np.asarray(hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise ValueError("box corners must have equal dimension")
        if np.any(hi <= lo):
            raise ValueError("box must be nondegenerate (lo < hi per axis)")
        if points_per_axis < 2:
            raise ValueError("need at least two points per axis")
        self.lo = lo
        self.hi = hi
        self.points_per_axis = int(points_per_axis)
        self.axes = tuple(
            np.linspace(lo[i], hi[i], self.points_per_axis) for i in range(len(lo))
        )
        mesh = np.meshgrid(*self.axes, indexing="ij")
        self.nodes = np.stack([m.reshape(-1) for m in mesh], axis=1)

    @property
    def dim(self):
        return len(self.axes)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def spacing(self):
        return (self.hi - self.lo) / (self.points_per_axis - 1)

    def lattice_shape(self):
        return (self.points_per_axis,) * self.dim

    def __eq__(self, other):
        return (
            isinstance(other, SpatialGrid)
            and self.points_per_axis == other.points_per_axis
            and np.array_equal(self.lo, other.lo)
            and np.array_equal(self.hi, other.hi)
        )

    def __hash__(self):
        return hash((self.points_per_axis, self.lo.tobytes(), self.hi.tobytes()))


class Observable:
    """Base class: subclasses provide vectorized values() and gradients()."""

    dims: int
    compact: bool = False
    smooth: bool = True  # C^1 with an exact gradient rule

    @property
    def support_radius(self):
        """Radius of a ball at the origin containing the support; inf if unbounded."""
        return math.inf

    def values(self, X):
        raise NotImplementedError

    def gradients(self, X):
        raise NotImplementedError

    def eval(self, x):
        return complex(self.values(np.asarray(x, dtype=float)[None, :])[0])

    def gradient(self, x):
        return self.gradients(np.asarray(x, dtype=float)[None, :])[0]

    # algebra sugar; scalar factors fold into Scaled, observables into Product
    def __add__(self, other):
        return Sum(self, other)

    def __mul__(self, other):
        if isinstance(other, Observable):
            return Product(self, other)
        return Scaled(complex(other), self)

    def __rmul__(self, other):
        return Scaled(complex(other), self)

    def __pow__(self, p):
        return Power(self, p)


def _as_points(X, dims):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != dims:
        raise ValueError(f"points have dimension {X.shape[1]}, observable has {dims}")
    return X


class Bump(Observable):
    """Compactly supported C^1 bump: (1 - |x-c|^2/r^2)^2 inside |x-c| < r, else 0."""

    compact = True

    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float).reshape(-1)
        if radius <= 0:
            raise ValueError("bump radius must be positive")
        self.radius = float(radius)
        self.dims = self.center.size

    @property
    def support_radius(self):
        return float(np.linalg.norm(self.center) + self.radius)

    def values(self, X):
        X = _as_points(X, self.dims)
        y = X - self.center
        s = np.sum(y * y, axis=1) / self.radius**2
        out = np.where(s < 1.0, (1.0 - s) ** 2, 0.0)
        return out.astype(np.complex128)

    def gradients(self, X):
        X = _as_points(X, self.dims)
        y = X - self.center
        s = np.sum(y * y, axis=1) / self.radius**2
        coef = np.where(s < 1.0, -4.0 * (1.0 - s) / self.radius**2, 0.0)
        return (coef[:, None] * y).astype(np.complex128)


class LinearWindow(Observable):
    """Linear functional x -> e . x (bilinear, no conjugation); not compact."""

    compact = False

    def __init__(self, coeffs):
        self.coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        self.dims = self.coeffs.size

    def values(self, X):
        X = _as_points(X, self.dims)
        return X @ self.coeffs

    def gradients(self, X):
        X = _as_points(X, self.dims)
        return np.broadcast_to(self.coeffs, (X.shape[0], self.dims)).copy()


class Constant(Observable):
    """Constant observable; compact only in the degenerate zero case."""

    def __init__(self, value, dims):
        self.value = complex(value)
        self.dims = int(dims)
        self.compact = self.value == 0

    @property
    def support_radius(self):
        return 0.0 if self.value == 0 else math.inf

    def values(self, X):
        X = _as_points(X, self.dims)
        return np.full(X.shape[0], self.value, dtype=np.complex128)

    def gradients(self, X):
        X = _as_points(X, self.dims)
        return np.zeros((X.shape[0], self.dims), dtype=np.complex128)


class Scaled(Observable):
    def __init__(self, alpha, inner):
        self.alpha = complex(alpha)
        self.inner = inner
        self.dims = inner.dims
        self.compact = inner.compact
        self.smooth = inner.smooth

    @property
    def support_radius(self):
        return self.inner.support_radius

    def values(self, X):
        return self.alpha * self.inner.values(X)

    def gradients(self, X):
        return self.alpha * self.inner.gradients(X)


class Sum(Observable):
    def __init__(self, left, right):
        if left.dims != right.dims:
            raise ValueError("cannot add observables of different dimension")
        self.left, self.right = left, right
        self.dims = left.dims
        self.compact = left.compact and right.compact
        self.smooth = left.smooth and right.smooth

    @property
    def support_radius(self):
        return max(self.left.support_radius, self.right.support_radius)

    def values(self, X):
        return self.left.values(X) + self.right.values(X)

    def gradients(self, X):
        return self.left.gradients(X) + self.right.gradients(X)


class Product(Observable):
    def __init__(self, left, right):
        if left.dims != right.dims:
            raise ValueError("cannot multiply observables of different dimension")
        self.left, self.right = left, right
        self.dims = left.dims
        self.compact = left.compact or right.compact
        self.smooth = left.smooth and right.smooth

    @property
    def support_radius(self):
        return min(self.left.support_radius, self.right.support_radius)

    def values(self, X):
        return self.left.values(X) * self.right.values(X)

    def gradients(self, X):
        lv = self.left.values(X)[:, None]
        rv = self.right.values(X)[:, None]
        return lv * self.right.gradients(X) + rv * self.left.gradients(X)


class Power(Observable):
    """Real power of an observable, principal branch for complex bases.

    The gradient rule p * base^{p-1} * grad(base) is exact away from zeros
    of the base; callers must handle or exclude vanishing bases when p < 1
    and negative real bases when p is not an integer.
    """

    def __init__(self, base, exponent):
        self.base = base
        self.exponent = float(exponent)
        self.dims = base.dims
        self.compact = base.compact and self.exponent > 0
        self.smooth = base.smooth

    @property
    def support_radius(self):
        return self.base.support_radius if self.exponent > 0 else math.inf

    def values(self, X):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.power(self.base.values(X), self.exponent)

    def gradients(self, X):
        v = self.base.values(X)
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = self.exponent * np.power(v, self.exponent - 1.0)
        return coef[:, None] * self.base.gradients(X)


class GridSampled(Observable):
    """Observable known by its values on a lattice, multilinear in between.

    Gradients come from second-order finite differences of the node values
    (central in the interior, one-sided on the box faces), interpolated off
    the lattice.  Points that stray beyond a small snap tolerance of the box
    raise WindowEscapeError.
    """

    compact = True
    smooth = False

    def __init__(self, grid, values):
        values = np.asarray(values, dtype=np.complex128).reshape(-1)
        if values.size != grid.n_nodes:
            raise ValueError("one value per grid node required")
        self.grid = grid
        self.node_values = values
        self.dims = grid.dim
        stacked = np.stack(
            [values.real.reshape(grid.lattice_shape()),
             values.imag.reshape(grid.lattice_shape())],
            axis=-1,
        )
        self._interp = RegularGridInterpolator(
            grid.axes, stacked, method="linear", bounds_error=True
        )
        self._grad_interp = None

    @property
    def support_radius(self):
        corners = np.stack([self.grid.lo, self.grid.hi])
        return float(
            np.max(np.linalg.norm(
                np.array(np.meshgrid(*corners.T, indexing="ij")).reshape(self.dims, -1).T,
                axis=1,
            ))
        )

    def _snap(self, X):
        X = _as_points(X, self.dims)
        lo, hi = self.grid.lo, self.grid.hi
        tol = 1e-9 * np.maximum(1.0, hi - lo)
        out = np.clip(X, lo - tol, hi + tol)
        over = (X > hi + tol) | (X < lo - tol)
        if np.any(over):
            idx = int(np.nonzero(over.any(axis=1))[0][0])
            raise WindowEscapeError(X[idx], idx)
        return np.clip(out, lo, hi)

    def values(self, X):
        parts = self._interp(self._snap(X))
        return parts[..., 0] + 1j * parts[..., 1]

    def _gradient_lattices(self):
        if self._grad_interp is None:
            shape = self.grid.lattice_shape()
            re = self.node_values.real.reshape(shape)
            im = self.node_values.imag.reshape(shape)
            order = 2 if self.grid.points_per_axis >= 3 else 1
            comps = []
            for axis in range(self.dims):
                h = self.grid.spacing[axis]
                comps.append(np.gradient(re, h, axis=axis, edge_order=order))
                comps.append(np.gradient(im, h, axis=axis, edge_order=order))
            stacked = np.stack(comps, axis=-1)
            self._grad_interp = RegularGridInterpolator(
                self.grid.axes, stacked, method="linear", bounds_error=True
            )
        return self._grad_interp

    def gradients(self, X):
        parts = self._gradient_lattices()(self._snap(X))
        out = np.empty((parts.shape[0], self.dims), dtype=np.complex128)
        for axis in range(self.dims):
            out[:, axis] = parts[..., 2 * axis] + 1j * parts[..., 2 * axis + 1]
        return out


@dataclass
class ObservableSet:
    """Finite, labeled sample of a set of observables."""

    members: list
    labels: list

    def __post_init__(self):
        if len(self.members) != len(self.labels):
            raise ValueError("one label per member required")

    def __len__(self):
        return len(self.members)

    def values_matrix(self, grid):
        """Member values on the grid, shape (n_members, n_nodes)."""
        if not self.members:
            raise ValueError("empty observable set")
        return np.stack([m.values(grid.nodes) for m in self.members])

    def scaled(self, alpha):
        return ObservableSet([Scaled(alpha, m) for m in self.members], list(self.labels))


def sup_norm_diff(a, b, grid):
    """Sup over grid nodes of |a - b|; both observables must cover the grid."""
    return float(np.max(np.abs(a.values(grid.nodes) - b.values(grid.nodes))))


def compose_with_flow(obs, field, signal, tau, t, grid, step):
    """Sample obs after the flow: node -> obs(flow from tau to t of node).

    Returns a GridSampled observable on the given grid.  Escaping the window
    of a grid-sampled obs raises WindowEscapeError naming the node.
    """
    from .flows import flow_on_grid

    flowed = flow_on_grid(field, signal, tau, t, grid, step)
    return GridSampled(grid, obs.values(flowed))


def observable_csv(obs, grid=None):
    """CSV dump on a grid: node_0..node_{d-1}, re, im per node."""
    if grid is None:
        if not isinstance(obs, GridSampled):
            raise ValueError("a grid is required for closed-form observables")
        grid = obs.grid
    vals = obs.values(grid.nodes)
    d = grid.dim
    lines = [",".join(f"node_{i}" for i in range(d)) + ",re,im"]
    for row, v in zip(grid.nodes, vals):
        coords = ",".join(f"{c:.17g}" for c in row)
        lines.append(f"{coords},{v.real:.17g},{v.imag:.17g}")
    return "\n".join(lines) + "\n"
