"""B-spline Galerkin discretization of the radial problem.

The box [R_min, R_max] is split into intervals by a graded breakpoint
sequence (geometrically growing spacing, dense at small R where the
potential varies fast, sparse in the trap tail). On the resulting open
knot vector, stiffness/overlap matrices are assembled with per-interval
Gauss-Legendre quadrature; products of two degree-p splines are integrated
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import sparse
from scipy.interpolate import BSpline

from .errors import ConfigError


@dataclass(frozen=True)
class BasisSpec:
    """Discretization parameters.

    ``n_basis`` is the requested number of degrees of freedom after the
    Dirichlet conditions u(R_min) = u(R_max) = 0 remove the two boundary
    splines. ``grading`` g >= 0 makes interval lengths grow geometrically
    by a total factor e^g across the box (0 = uniform). ``fixed_points``
    are radii forced to be breakpoints (e.g. a potential discontinuity).
    """

    r_min: float
    r_max: float
    n_basis: int
    degree: int = 7
    grading: float = 0.0
    fixed_points: tuple[float, ...] = ()

    def __post_init__(self):
        if not 0 <= self.r_min < self.r_max:
            raise ConfigError(f"need 0 <= R_min < R_max, got [{self.r_min}, {self.r_max}]")
        if self.n_basis < 10:
            raise ConfigError(f"basis size must be >= 10, got {self.n_basis}")
        if self.degree < 5:
            raise ConfigError(f"spline degree must be >= 5 (order >= 6), got {self.degree}")
        if self.grading < 0:
            raise ConfigError("grading must be nonnegative")
        for p in self.fixed_points:
            if not self.r_min < p < self.r_max:
                raise ConfigError(f"fixed point {p} outside ({self.r_min}, {self.r_max})")


def _breakpoints(spec: BasisSpec) -> np.ndarray:
    n_iv = spec.n_basis - spec.degree + 2
    if n_iv < 4:
        raise ConfigError("basis too small for the requested degree")
    s = np.linspace(0.0, 1.0, n_iv + 1)
    if spec.grading > 0:
        s = np.expm1(spec.grading * s) / np.expm1(spec.grading)
    pts = spec.r_min + (spec.r_max - spec.r_min) * s
    pts[0], pts[-1] = spec.r_min, spec.r_max
    if spec.fixed_points:
        pts = np.union1d(pts, np.asarray(spec.fixed_points, dtype=float))
        # drop graded points that collide with a forced breakpoint
        keep = np.concatenate([[True], np.diff(pts) > 1e-12 * (spec.r_max - spec.r_min)])
        pts = pts[keep]
    return pts


class RadialBasis:
    """Assembled quadrature grid and design matrices for one BasisSpec."""

    def __init__(self, spec: BasisSpec):
        self.spec = spec
        p = spec.degree
        bp = _breakpoints(spec)
        self.breakpoints = bp
        self.knots = np.concatenate([np.full(p, bp[0]), bp, np.full(p, bp[-1])])
        self.n_full = len(self.knots) - p - 1          # all B-splines
        self.n_dof = self.n_full - 2                   # after Dirichlet

        # Gauss-Legendre nodes per interval; exact for degree 2p+3 polynomials.
        xg, wg = leggauss(p + 2)
        lo, hi = bp[:-1], bp[1:]
        half = 0.5 * (hi - lo)
        self.quad_x = (0.5 * (hi + lo)[:, None] + half[:, None] * xg[None, :]).ravel()
        self.quad_w = (half[:, None] * wg[None, :]).ravel()

        self._values = BSpline.design_matrix(self.quad_x, self.knots, p).tocsr()
        self._derivs = self._derivative_matrix()

    def _derivative_matrix(self) -> sparse.csr_matrix:
        # B'_{i,p} = p [ B_{i,p-1}/(t_{i+p}-t_i) - B_{i+1,p-1}/(t_{i+p+1}-t_{i+1}) ]
        p = self.spec.degree
        t = self.knots
        lower = BSpline.design_matrix(self.quad_x, t, p - 1).tocsc()
        n = self.n_full
        rows, cols, vals = [], [], []
        for i in range(n):
            d1 = t[i + p] - t[i]
            if d1 > 0:
                rows.append(i); cols.append(i); vals.append(p / d1)
            d2 = t[i + p + 1] - t[i + 1]
            if d2 > 0:
                rows.append(i + 1); cols.append(i); vals.append(-p / d2)
        chain = sparse.csc_matrix((vals, (rows, cols)), shape=(n + 1, n))
        return (lower @ chain).tocsr()

    def gram(self, weight: np.ndarray | None = None) -> np.ndarray:
        """Dense matrix of integrals B_i * f * B_j with f given at quad points
        (overlap matrix for f = 1), restricted to the interior splines."""
        w = self.quad_w if weight is None else self.quad_w * weight
        m = (self._values.T @ sparse.diags(w) @ self._values).toarray()
        return m[1:-1, 1:-1]

    def stiffness(self) -> np.ndarray:
        """Dense matrix of integrals B_i' * B_j', restricted to the interior."""
        m = (self._derivs.T @ sparse.diags(self.quad_w) @ self._derivs).toarray()
        return m[1:-1, 1:-1]

    def values_at_quad(self, coefs: np.ndarray) -> np.ndarray:
        """Evaluate interior-coefficient expansions on the quadrature grid.

        ``coefs`` has shape (n_dof,) or (n_dof, nstates).
        """
        return self._values[:, 1:-1] @ coefs

    def spline(self, coefs: np.ndarray) -> BSpline:
        full = np.zeros(self.n_full)
        full[1:-1] = coefs
        return BSpline(self.knots, full, self.spec.degree, extrapolate=False)
