"""Bound and trap-discretized eigenstates of the effective radial problem.

Solves (-(1/2mu) d^2/dR^2 + J(J+1)/(2 mu R^2) + V_int(R)
        + mu omega^2 R^2 / 2) u = E u on [R_min, R_max] with u = 0 at both
walls, as a symmetric-definite generalized eigenproblem in the B-spline
basis. Eigenfunctions are unit-normalized (integral of u^2 dR = 1) and
energy ordered; the sign convention makes the first interior lobe positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import BSpline
from scipy.optimize import brentq

from .bsplines import BasisSpec, RadialBasis
from .errors import ConfigError, DomainError, NumericError
from .potentials import PotentialCurve, TrapSystem, effective_potential

BOUND = "bound"
TRAP_INDUCED = "trap_induced"

#: sign changes with amplitude below this fraction of max|u| are ignored
NODE_AMPLITUDE_TOL = 1e-12


@dataclass(frozen=True)
class VibrationalState:
    """One eigenpair of the trapped radial problem.

    ``values`` holds u on the solver quadrature grid (``grid``/``weights``
    are shared between all states of one solve); transition moments use
    exactly this rule. ``u`` is an evaluable spline for off-grid sampling.
    """

    v: int
    energy: float
    j: int
    label: str
    u: BSpline = field(repr=False)
    grid: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def evaluate(self, r) -> np.ndarray:
        out = self.u(np.asarray(r, dtype=float))
        return np.nan_to_num(out, nan=0.0)

    def same_grid(self, other: "VibrationalState") -> bool:
        return (self.grid is other.grid) or (
            self.grid.shape == other.grid.shape and np.array_equal(self.grid, other.grid))


def solve_radial(curve: PotentialCurve, sys: TrapSystem, basis: BasisSpec,
                 count: int) -> list[VibrationalState]:
    """The ``count`` lowest eigenpairs, energy ordered.

    Raises ConfigError for an unusable discretization (count > basis size,
    box starting inside a table's hard wall, overlap not positive definite)
    and NumericError if the eigensolver fails.
    """
    rb = RadialBasis(basis)
    if count < 1 or count > rb.n_dof:
        raise ConfigError(f"count must be in [1, {rb.n_dof}], got {count}")
    if basis.r_min < curve.inner_wall:
        raise ConfigError(
            f"box starts at {basis.r_min} but the curve has an inner wall at "
            f"{curve.inner_wall}; raise R_min")

    veff = effective_potential(curve, sys, rb.quad_x)
    if not np.all(np.isfinite(veff)):
        raise NumericError("effective potential is not finite on the quadrature grid")

    hmat = rb.stiffness() / (2.0 * sys.mu) + rb.gram(weight=veff)
    smat = rb.gram()
    try:
        if count > rb.n_dof // 3:
            energies, coefs = sla.eigh(hmat, smat)
            energies, coefs = energies[:count], coefs[:, :count]
        else:
            energies, coefs = sla.eigh(hmat, smat, subset_by_index=(0, count - 1))
    except sla.LinAlgError as exc:
        if "positive definite" in str(exc) or "leading minor" in str(exc):
            raise ConfigError(f"overlap matrix not positive definite: {exc}") from exc
        raise NumericError(f"generalized eigensolver failed: {exc}") from exc

    vals = rb.values_at_quad(coefs)          # (n_quad, count)

    # first interior lobe positive
    for k in range(count):
        col = vals[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-3 * np.abs(col).max())
        if nz.size and col[nz[0]] < 0:
            vals[:, k] = -col
            coefs[:, k] = -coefs[:, k]

    order = _resolve_degeneracies(energies, vals)
    labels, _ = classify_states(energies[order], sys)

    states = []
    for rank, k in enumerate(order):
        states.append(VibrationalState(
            v=rank, energy=float(energies[k]), j=sys.j, label=labels[rank],
            u=rb.spline(coefs[:, k]), grid=rb.quad_x, weights=rb.quad_w,
            values=vals[:, k]))
    return states


def _resolve_degeneracies(energies: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Energy order with near-degenerate pairs broken by node count."""
    order = np.arange(len(energies))
    scale = max(abs(energies[0]), abs(energies[-1]), 1e-300)
    for i in range(len(energies) - 1):
        if abs(energies[i + 1] - energies[i]) < 1e-13 * scale:
            if _count_sign_changes(vals[:, order[i]]) > _count_sign_changes(vals[:, order[i + 1]]):
                order[i], order[i + 1] = order[i + 1], order[i]
    return order


def _count_sign_changes(u: np.ndarray) -> int:
    amp = np.abs(u).max()
    if amp == 0:
        return 0
    live = u[np.abs(u) > NODE_AMPLITUDE_TOL * amp]
    return int(np.count_nonzero(np.signbit(live[1:]) != np.signbit(live[:-1])))


def count_nodes(state: VibrationalState) -> int:
    """Strict sign changes of u on the open box, ignoring wiggle below
    1e-12 of max|u|. Equals v for a single-well effective potential."""
    # refine between quadrature points so degree-p oscillations cannot hide
    x = state.grid
    mid = 0.5 * (x[1:] + x[:-1])
    fine = np.sort(np.concatenate([x, mid]))
    return _count_sign_changes(state.evaluate(fine))


def classify_states(energies: np.ndarray | list[float], sys: TrapSystem
                    ) -> tuple[list[str], int | None]:
    """Labels (E < 0: bound, else trap_induced) and the index of the first
    trap-induced state (the photoassociation initial state).

    For omega = 0 the same E < 0 rule separates bound states from the
    discretized continuum.
    """
    labels = [BOUND if e < 0 else TRAP_INDUCED for e in energies]
    first = labels.index(TRAP_INDUCED) if TRAP_INDUCED in labels else None
    return labels, first


def outer_turning_point(curve: PotentialCurve, sys: TrapSystem, energy: float,
                        r_max: float | None = None, r_min: float | None = None) -> float:
    """Largest R with V_eff(R) = E, bracketed on a scan grid and refined by
    bisection to 1e-10 relative."""
    if r_min is None:
        r_min = max(curve.inner_wall, 1e-3)
    if r_max is None:
        r_max = _default_scan_limit(curve, sys, energy, r_min)

    def f(r):
        return effective_potential(curve, sys, r) - energy

    grid = np.geomspace(r_min, r_max, 4096)
    fg = f(grid)
    sign_flips = np.flatnonzero(np.diff(np.sign(fg)) != 0)
    if sign_flips.size == 0:
        raise DomainError(
            f"no classical turning point for E={energy} in [{r_min}, {r_max}]")
    i = sign_flips[-1]
    return brentq(f, grid[i], grid[i + 1], xtol=1e-300, rtol=1e-10)


def _default_scan_limit(curve: PotentialCurve, sys: TrapSystem, energy: float,
                        r_min: float) -> float:
    if sys.omega > 0:
        # the trap wall guarantees a crossing: mu w^2 R^2/2 = |E| + margin
        r = np.sqrt(2.0 * (abs(energy) + sys.omega) / sys.mu) / sys.omega
        return max(4.0 * r, 8.0 / np.sqrt(sys.mu * sys.omega), 2.0 * r_min)
    if energy >= 0:
        raise DomainError("no outer turning point for E >= 0 without a trap")
    # attractive tail: |V| drops below |E| at finite R
    lead = curve.leading_tail
    if lead is None:
        return 1e4 * max(r_min, 1.0)
    n, cn = lead
    return 10.0 * (cn / abs(energy)) ** (1.0 / n)
