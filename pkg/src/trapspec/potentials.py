"""Interaction potentials and the effective radial potential.

A curve is represented piecewise: a short-range part (sampled table or an
analytic model) for R < R_m and a dispersion tail -sum_n C_n/R^n for
R >= R_m. Everything is in Hartree atomic units (lengths in bohr).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, DomainError

ArrayLike = float | np.ndarray

#: relative disagreement between table and tail at the match radius above
#: which construction fails (no silent blending).
JOIN_TOL = 1e-3


@dataclass(frozen=True)
class TrapSystem:
    """Reduced mass mu (electron masses), rotational quantum number J and
    trap angular frequency omega (a.u.); defines the effective radial problem."""

    mu: float
    j: int = 0
    omega: float = 0.0

    def __post_init__(self):
        if self.mu <= 0:
            raise ConfigError(f"reduced mass must be positive, got {self.mu}")
        if self.j < 0 or int(self.j) != self.j:
            raise ConfigError(f"J must be a nonnegative integer, got {self.j}")
        if self.omega < 0:
            raise ConfigError(f"omega must be nonnegative, got {self.omega}")

    @property
    def a_ho(self) -> float:
        """Harmonic trap length sqrt(1/(mu*omega)); defined only for omega > 0."""
        if self.omega <= 0:
            raise DomainError("a_ho is undefined for omega = 0")
        return 1.0 / np.sqrt(self.mu * self.omega)

    def with_mass(self, mu: float) -> "TrapSystem":
        return TrapSystem(mu=mu, j=self.j, omega=self.omega)

    def with_omega(self, omega: float) -> "TrapSystem":
        return TrapSystem(mu=self.mu, j=self.j, omega=omega)


def _tail_value(terms: tuple[tuple[int, float], ...], r: ArrayLike) -> ArrayLike:
    v = np.zeros_like(np.asarray(r, dtype=float))
    for n, cn in terms:
        v -= cn / np.asarray(r, dtype=float) ** n
    return v if isinstance(r, np.ndarray) else float(v)


@dataclass(frozen=True)
class PotentialCurve:
    """Piecewise interaction potential V_int(R).

    ``short_range`` is used for R < match_radius, the dispersion tail
    beyond. ``inner_wall`` is the smallest R at which the curve may be
    evaluated (table curves cannot be extrapolated inward; the solver box
    must start at or above it).
    """

    short_range: Callable[[np.ndarray], np.ndarray] | None
    tail: tuple[tuple[int, float], ...] = ()
    match_radius: float = np.inf
    inner_wall: float = 0.0
    label: str = "custom"

    def __post_init__(self):
        for n, cn in self.tail:
            if n < 3 or int(n) != n:
                raise ConfigError(f"dispersion exponent must be an integer >= 3, got {n}")
        if self.short_range is None and self.match_radius > 0 and np.isfinite(self.match_radius):
            raise ConfigError("no short-range representation below the match radius")
        if self.short_range is not None and np.isfinite(self.match_radius) and self.tail:
            vs = float(self.short_range(np.array([self.match_radius]))[0])
            vt = float(_tail_value(self.tail, self.match_radius))
            scale = max(abs(vs), abs(vt))
            if scale > 0 and abs(vs - vt) / scale > JOIN_TOL:
                raise ConfigError(
                    f"short range and tail disagree at R_m={self.match_radius}: "
                    f"{vs:.6e} vs {vt:.6e} (relative {abs(vs - vt) / scale:.2e} > {JOIN_TOL})"
                )

    def __call__(self, r: ArrayLike) -> ArrayLike:
        return eval_potential(self, r)

    @property
    def leading_tail(self) -> tuple[int, float] | None:
        """Dominant long-range term (smallest exponent), if any."""
        if not self.tail:
            return None
        return min(self.tail, key=lambda t: t[0])

    # -- constructors -----------------------------------------------------

    @classmethod
    def morse(cls, depth: float, r_eq: float, stiffness: float,
              tail: Sequence[tuple[int, float]] = (),
              match_radius: float = np.inf) -> "PotentialCurve":
        """Morse well D_e*(1 - exp(-a(R-R_e)))^2 - D_e, zero at dissociation."""
        if depth <= 0 or r_eq <= 0 or stiffness <= 0:
            raise ConfigError("Morse parameters must be positive")

        def v(r):
            e = np.exp(-stiffness * (np.asarray(r, dtype=float) - r_eq))
            return depth * (1.0 - e) ** 2 - depth

        return cls(short_range=v, tail=tuple(tail), match_radius=match_radius,
                   label="morse")

    @classmethod
    def lennard_jones(cls, tail: Sequence[tuple[int, float]], a12: float,
                      match_radius: float | None = None) -> "PotentialCurve":
        """Generalized Lennard-Jones A/R^12 - sum C_n/R^n.

        The tail terms double as the long-range representation; by default
        the switch happens where the repulsive term has fallen to 1e-4 of
        the leading attraction, so the join check passes by construction.
        """
        tail = tuple(tail)
        if a12 <= 0 or not tail:
            raise ConfigError("lennard_jones needs a12 > 0 and at least one tail term")
        if match_radius is None:
            n, cn = min(tail, key=lambda t: t[0])
            match_radius = (a12 / (1e-4 * cn)) ** (1.0 / (12 - n))

        def v(r):
            r = np.asarray(r, dtype=float)
            return a12 / r**12 + _tail_value(tail, r)

        return cls(short_range=v, tail=tail, match_radius=match_radius, label="lj")

    @classmethod
    def from_table(cls, r_knots: np.ndarray, v_knots: np.ndarray,
                   tail: Sequence[tuple[int, float]] = (),
                   match_radius: float | None = None) -> "PotentialCurve":
        """Sampled short-range curve, interpolated by a cubic spline.

        Knots must be strictly increasing. Points below the first knot are
        behind the inner hard wall and cannot be evaluated.
        """
        r_knots = np.asarray(r_knots, dtype=float)
        v_knots = np.asarray(v_knots, dtype=float)
        if r_knots.ndim != 1 or r_knots.size < 4:
            raise ConfigError("potential table needs at least 4 points")
        if np.any(np.diff(r_knots) <= 0):
            raise ConfigError("potential table knots must be strictly increasing")
        if r_knots[0] <= 0:
            raise ConfigError("potential table must start at R > 0")
        spline = CubicSpline(r_knots, v_knots, extrapolate=False)
        wall = float(r_knots[0])
        if match_radius is None:
            match_radius = float(r_knots[-1]) if tail else np.inf
        if match_radius > r_knots[-1] and np.isfinite(match_radius):
            raise ConfigError("match radius lies beyond the table")

        def v(r):
            r = np.asarray(r, dtype=float)
            if np.any(r < wall):
                raise DomainError(
                    f"table curve evaluated at R < inner wall ({wall} bohr)")
            return spline(r)

        return cls(short_range=v, tail=tuple(tail), match_radius=match_radius,
                   inner_wall=wall, label="table")

    @classmethod
    def from_callable(cls, fn: Callable[[np.ndarray], np.ndarray],
                      tail: Sequence[tuple[int, float]] = (),
                      match_radius: float = np.inf,
                      inner_wall: float = 0.0,
                      label: str = "custom") -> "PotentialCurve":
        return cls(short_range=fn, tail=tuple(tail), match_radius=match_radius,
                   inner_wall=inner_wall, label=label)

    @classmethod
    def hard_sphere(cls, radius: float) -> "PotentialCurve":
        """V = 0 outside an impenetrable core at ``radius`` (boundary
        condition u(radius) = 0)."""
        if radius <= 0:
            raise ConfigError("hard-sphere radius must be positive")
        return cls(short_range=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
                   tail=(), match_radius=np.inf, inner_wall=radius,
                   label="hard_sphere")

    @classmethod
    def tail_only(cls, tail: Sequence[tuple[int, float]]) -> "PotentialCurve":
        """Pure dispersion curve; diverges attractively at R -> 0, so solves
        must place the inner boundary at finite R."""
        return cls(short_range=None, tail=tuple(tail), match_radius=0.0,
                   label="tail")

    @classmethod
    def free(cls) -> "PotentialCurve":
        """V_int = 0 everywhere (trap-only problems)."""
        return cls(short_range=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
                   tail=(), match_radius=np.inf, label="free")


def eval_potential(curve: PotentialCurve, r: ArrayLike) -> ArrayLike:
    """V_int(R): short-range representation below R_m, tail at and beyond."""
    scalar = np.isscalar(r)
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr <= 0):
        raise DomainError("potential evaluated at R <= 0")
    out = np.empty_like(r_arr)
    short = r_arr < curve.match_radius
    if np.any(short):
        if curve.short_range is None:
            raise DomainError("curve has no short-range representation")
        out[short] = curve.short_range(r_arr[short])
    if np.any(~short):
        out[~short] = _tail_value(curve.tail, r_arr[~short])
    return float(out[0]) if scalar else out


def effective_potential(curve: PotentialCurve, sys: TrapSystem, r: ArrayLike) -> ArrayLike:
    """V_int(R) + J(J+1)/(2 mu R^2) + mu omega^2 R^2 / 2."""
    scalar = np.isscalar(r)
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    v = np.atleast_1d(np.asarray(eval_potential(curve, r_arr), dtype=float)).copy()
    if sys.j:
        v += sys.j * (sys.j + 1) / (2.0 * sys.mu * r_arr**2)
    if sys.omega:
        v += 0.5 * sys.mu * sys.omega**2 * r_arr**2
    return float(v[0]) if scalar else v


def scale_mass(mu0: float, factor: float) -> float:
    """Scaled reduced mass mu0*factor.

    Continuous (unphysical) tuning of the scattering length while the
    interaction curve stays fixed: only the kinetic term changes.
    """
    if factor <= 0:
        raise DomainError(f"mass scale factor must be positive, got {factor}")
    return mu0 * factor


def trap_crossing_radius(c_n: float, n: int, sys: TrapSystem) -> float:
    """Radius where the trap overtakes the dispersion term.

    Solves C_n/R^n = mu omega^2 R^2 / 2, i.e. R_c = (2 C_n/(mu omega^2))^(1/(n+2)).
    """
    if c_n <= 0:
        raise DomainError(f"C_n must be positive, got {c_n}")
    if sys.omega <= 0:
        raise DomainError("no trap/dispersion crossing for omega = 0")
    return (2.0 * c_n / (sys.mu * sys.omega**2)) ** (1.0 / (n + 2))


def interaction_length(curve: PotentialCurve, mu: float) -> float:
    """Characteristic length (2 mu C_n)^(1/(n-2)) of the leading tail term
    (beta_6 for a van der Waals C6 curve)."""
    lead = curve.leading_tail
    if lead is None:
        raise DomainError("curve has no dispersion tail")
    n, cn = lead
    return (2.0 * mu * cn) ** (1.0 / (n - 2))


def load_potential_table(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column (R_bohr, V_hartree) text table; '#' starts a comment."""
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise ConfigError(f"potential table {path} must have exactly 2 columns")
    return data[:, 0], data[:, 1]
