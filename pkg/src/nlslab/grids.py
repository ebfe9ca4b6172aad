"""Grids, quadrature, and Laplacians.

Two grid kinds:

* ``line1d`` -- uniform nodes on [-R, R] at x = -R + (k + 1/2) h, symmetric
  about the origin with a half-cell offset so no node sits on the
  singularity of |x|^(-alpha).  Differentiation is Fourier-spectral (the
  fields of interest decay far below round-off at |x| = R, so the periodic
  wrap is immaterial).

* ``radial`` -- nodes r = (k + 1/2) h on (0, R] for radially symmetric
  fields in N dimensions.  The Laplacian v'' + (N-1)/r v' is discretized in
  divergence form on cell faces, which makes it self-adjoint with respect
  to the quadrature weights (exact discrete integration by parts) and
  builds in the even-reflection condition at the origin.  Dirichlet 0 at R.

Quadrature weights are exact cell volumes, so integrating the constant 1
over the ball reproduces the analytic volume to round-off for any node
count.  The singular measure |x|^(-alpha) dx is handled by product
integration: each cell's contribution uses the exact integral of the
measure over the cell (see :meth:`Grid.cell_average_inverse_power`), the
smooth factor being sampled at the node.  A plain weighted sum of the
singular integrand would lose O(h^(1-alpha)) accuracy at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

GRID_KINDS = ("line1d", "radial")


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^(N-1); equals 2 for N = 1."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


class GridError(ValueError):
    """Raised for invalid grid construction or misuse of a grid."""


def _moment_fitted_weights(m0: np.ndarray, m1: np.ndarray, m2: np.ndarray,
                           h: float, inner_mirror: bool,
                           order: np.ndarray) -> np.ndarray:
    """Diagonal quadrature weights matching each cell's measure moments.

    Cell k contributes to nodes k-1, k, k+1 the unique 3-point rule exact
    for polynomials of degree <= 2 about its own node: the combined rule
    integrates (measure) * (smooth factor) two orders better than plain
    product-midpoint while remaining a plain weighted sum of node values.
    With ``inner_mirror`` the left spill of the first cell folds back onto
    node 0 (even fields across the origin on radial grids).

    Positivity of the weights is required (G >= 0 must survive any field);
    where the singular cells' spills break it, those cells fall back to
    plain product-midpoint (``order`` ranks cells by distance from the
    singularity).
    """
    for n_plain in (0, 1, 2, 4, 8, 16):
        keep1 = m1.copy()
        keep2 = m2.copy()
        keep1[order[:n_plain]] = 0.0
        keep2[order[:n_plain]] = 0.0
        g = m0 - keep2 / (h * h)
        left = 0.5 * (keep2 / (h * h) - keep1 / h)     # lands on node k-1
        right = 0.5 * (keep2 / (h * h) + keep1 / h)    # lands on node k+1
        g[1:] += right[:-1]
        g[:-1] += left[1:]
        if inner_mirror:
            g[0] += left[0]
        if np.all(g >= 0.0):
            return g
    raise GridError("singular-measure weights could not be kept positive")


@dataclass(frozen=True)
class Grid:
    kind: str
    dimension: int
    radius: float
    spacing: float
    nodes: np.ndarray            # node positions (radial: r > 0)
    weights: np.ndarray          # quadrature weights, exact cell volumes
    # cached spectral / stencil data, filled in build_grid
    fourier_k2: np.ndarray | None = field(default=None, repr=False)
    face_factors: np.ndarray | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.nodes.size

    # ------------------------------------------------------------------
    # quadrature
    # ------------------------------------------------------------------
    def integrate(self, f: np.ndarray) -> complex | float:
        """Weighted sum of node values (ascending node order, deterministic).

        Non-finite node values are a hard error: a NaN here nearly always
        means a node fell on a singularity or an overflow upstream.
        """
        f = np.asarray(f)
        if f.shape != self.nodes.shape:
            raise GridError(f"length mismatch: {f.shape} values on {self.nodes.shape} grid")
        if not np.all(np.isfinite(f)):
            raise GridError("non-finite values passed to integrate()")
        acc = np.sum(self.weights * f)
        return complex(acc) if np.iscomplexobj(f) else float(acc)

    def cell_edges(self) -> np.ndarray:
        """Cell boundary positions (size + 1 of them)."""
        if self.kind == "line1d":
            return np.concatenate([self.nodes - 0.5 * self.spacing,
                                   [self.nodes[-1] + 0.5 * self.spacing]])
        return np.arange(self.size + 1) * self.spacing

    def cell_average_inverse_power(self, alpha: float,
                                   corrected: bool = True) -> np.ndarray:
        """Effective node values Vbar of the measure |x|^(-alpha) dx:
        sum_k w_k Vbar_k f(x_k) integrates |x|^(-alpha) f(x).

        The base rule integrates the measure exactly over each cell and
        samples the smooth factor at the node (product midpoint); its error
        is the second-moment defect (h^2/24) int f'' |x|^(-alpha).  With
        ``corrected`` the defect is folded back into the weights through
        the exact cell second moments and a second-difference stencil --
        the rule stays a diagonal quadratic form (essential for variational
        consistency of the solvers) but gains two orders.  Requires
        alpha < min(2, N) so every cell integral is finite.
        """
        n = self.dimension
        if not (0.0 < alpha < min(2.0, float(n))):
            raise GridError(f"alpha={alpha} outside (0, min(2, N)) for N={n}")
        edges = self.cell_edges()
        if self.kind == "line1d":
            lo = np.minimum(np.abs(edges[:-1]), np.abs(edges[1:]))
            hi = np.maximum(np.abs(edges[:-1]), np.abs(edges[1:]))

            def power_int(s):
                return (hi ** s - lo ** s) / s
            m0 = power_int(1.0 - alpha)
            if corrected:
                c = np.abs(self.nodes)
                sgn = np.sign(self.nodes)
                m1 = sgn * (power_int(2.0 - alpha) - c * power_int(1.0 - alpha))
                m2 = power_int(3.0 - alpha) - 2.0 * c * power_int(2.0 - alpha) \
                    + c * c * power_int(1.0 - alpha)
                order = np.argsort(np.abs(self.nodes))
                m0 = _moment_fitted_weights(m0, m1, m2, self.spacing,
                                            inner_mirror=False, order=order)
            vbar = m0 / self.spacing
        else:
            f1, f2 = edges[:-1], edges[1:]
            area = sphere_area(n)

            def power_int(s):
                return (f2 ** s - f1 ** s) / s
            m0 = area * power_int(n - alpha)
            if corrected:
                c = self.nodes
                m1 = area * (power_int(n + 1.0 - alpha) - c * power_int(n - alpha))
                m2 = area * (power_int(n + 2.0 - alpha)
                             - 2.0 * c * power_int(n + 1.0 - alpha)
                             + c * c * power_int(n - alpha))
                m0 = _moment_fitted_weights(m0, m1, m2, self.spacing,
                                            inner_mirror=True,
                                            order=np.arange(self.size))
            vbar = m0 / self.weights
        if not np.all(np.isfinite(vbar)):
            raise GridError("singular-measure weights overflow; node at singularity?")
        if np.any(vbar < 0.0):
            raise GridError("corrected singular-measure weights went negative")
        return vbar

    def second_moment_weight(self) -> np.ndarray:
        """Node-wise |x|^2 factor for the variance (virial) integrand."""
        return self.nodes ** 2

    def origin_interpolation(self) -> tuple[np.ndarray, np.ndarray]:
        """Indices and coefficients of the 4-point value-at-origin stencil.

        The half-cell offset keeps nodes off x = 0; the delta potential and
        diagnostics need v(0), reconstructed here to O(h^4) from the
        neighbors (using even symmetry on radial grids).
        """
        if self.kind == "line1d":
            m = self.size // 2
            idx = np.array([m - 2, m - 1, m, m + 1])
            coef = np.array([-1.0, 9.0, 9.0, -1.0]) / 16.0
        else:
            idx = np.array([0, 1])
            coef = np.array([9.0, -1.0]) / 8.0
        return idx, coef

    def value_at_origin(self, values: np.ndarray) -> complex:
        idx, coef = self.origin_interpolation()
        return complex(np.sum(coef * np.asarray(values)[idx]))

    def outer_shell_mass_fraction(self, values: np.ndarray) -> float:
        """Fraction of integral |v|^2 carried by the outer 10% shell."""
        dens = np.abs(values) ** 2
        total = float(np.sum(self.weights * dens))
        if total == 0.0:
            return 0.0
        outer = np.abs(self.nodes) > 0.9 * self.radius
        return float(np.sum(self.weights[outer] * dens[outer])) / total

    # ------------------------------------------------------------------
    # differential operators
    # ------------------------------------------------------------------
    def laplacian(self, values: np.ndarray) -> np.ndarray:
        """Apply the discrete Laplacian (spectral on line1d, FD radial)."""
        if self.kind == "line1d":
            vhat = scipy.fft.fft(values)
            out = scipy.fft.ifft(-self.fourier_k2 * vhat)
            return out if np.iscomplexobj(values) else out.real
        return self._laplacian_radial(values)

    def _laplacian_radial(self, v: np.ndarray) -> np.ndarray:
        h = self.spacing
        ff = self.face_factors               # (jh)^(N-1), with ff[0] = 0
        rpow = self.weights / (sphere_area(self.dimension) * h)  # r_k^(N-1) cell-avg
        out = np.empty_like(v, dtype=complex if np.iscomplexobj(v) else float)
        flux = np.zeros(self.size + 1, dtype=out.dtype)
        flux[1:-1] = ff[1:-1] * (v[1:] - v[:-1])
        flux[-1] = ff[-1] * (0.0 - v[-1])    # Dirichlet at R
        # flux[0] stays 0: even reflection across the origin
        out[:] = (flux[1:] - flux[:-1]) / (rpow * h * h)
        return out

    def laplacian_diagonals(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(sub, main, super) diagonals of the radial FD Laplacian."""
        if self.kind != "radial":
            raise GridError("banded form only for radial grids")
        h = self.spacing
        ff = self.face_factors
        rpow = self.weights / (sphere_area(self.dimension) * h)
        denom = rpow * h * h
        main = -(ff[1:] + ff[:-1]) / denom
        sub = ff[1:-1] / denom[1:]
        sup = ff[1:-1] / denom[:-1]
        return sub, main, sup

    def grad_squared(self, values: np.ndarray) -> float:
        """Quadratic form  -<Lap v, v>  of the discrete Laplacian.

        This is the grad-norm used everywhere, so functional identities
        that pair the Laplacian with quadrature hold to round-off.
        """
        if self.kind == "line1d":
            vhat = scipy.fft.fft(values)
            return float(np.sum(self.fourier_k2 * np.abs(vhat) ** 2)
                         * self.spacing / self.size)
        h = self.spacing
        ff = self.face_factors
        dv2 = np.empty(self.size + 1)
        dv2[0] = 0.0
        dv2[1:-1] = np.abs(values[1:] - values[:-1]) ** 2
        dv2[-1] = np.abs(values[-1]) ** 2
        return float(sphere_area(self.dimension) / h * np.sum(ff * dv2))


def build_grid(kind: str, dimension: int, radius: float, n_nodes: int) -> Grid:
    """Construct a grid; see module docstring for node placement.

    line1d requires dimension 1 and an even node count (so the origin is a
    cell edge); radial accepts any N >= 1.  n_nodes >= 64.
    """
    if kind not in GRID_KINDS:
        raise GridError(f"unknown grid kind {kind!r}")
    if radius <= 0 or not math.isfinite(radius):
        raise GridError(f"radius must be positive, got {radius}")
    if n_nodes < 64:
        raise GridError(f"need at least 64 nodes, got {n_nodes}")
    if kind == "line1d":
        if dimension != 1:
            raise GridError("line1d grids are one-dimensional")
        if n_nodes % 2:
            raise GridError("line1d node count must be even")
        h = 2.0 * radius / n_nodes
        nodes = -radius + (np.arange(n_nodes) + 0.5) * h
        weights = np.full(n_nodes, h)
        k = 2.0 * math.pi * scipy.fft.fftfreq(n_nodes, d=h)
        return Grid(kind, 1, radius, h, nodes, weights, fourier_k2=k * k)
    h = radius / n_nodes
    nodes = (np.arange(n_nodes) + 0.5) * h
    edges = np.arange(n_nodes + 1) * h
    area = sphere_area(dimension)
    weights = area * (edges[1:] ** dimension - edges[:-1] ** dimension) / dimension
    ff = edges ** (dimension - 1)
    ff[0] = 0.0                                  # even reflection for N = 1
    if not (np.all(weights > 0) and np.all(np.isfinite(weights))):
        raise GridError("non-positive or non-finite quadrature weights")
    return Grid(kind, dimension, radius, h, nodes, weights, face_factors=ff)
