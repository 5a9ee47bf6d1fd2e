"""Trap-free s-wave scattering properties of an interaction curve.

The zero-energy scattering length is extracted from the lowest discretized
continuum state of the omega = 0 box problem via a = R_max - pi/k,
k = sqrt(2 mu E0), with Richardson extrapolation over a growing R_max
schedule. Finite-energy phase shifts come from outward integration of the
radial equation and node matching against the free solution sin(kR + d0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .bsplines import BasisSpec
from .errors import DomainError, NumericError, ResonanceError
from .potentials import PotentialCurve, TrapSystem, eval_potential
from .pseudopotential import xi_from_scaled_energy
from .solver import solve_radial


@dataclass(frozen=True)
class ScatteringResult:
    """Extracted a_sc with its convergence history.

    ``history`` rows are (R_max, E0, a_estimate); ``k`` belongs to the probe
    state of the last schedule entry.
    """

    a_sc: float
    history: tuple[tuple[float, float, float], ...]
    k: float


def scattering_length(curve: PotentialCurve, mu: float,
                      schedule: tuple[float, ...] = (),
                      tol: float = 0.005,
                      n_basis: int = 600,
                      degree: int = 7,
                      grading: float = 6.0,
                      r_min: float | None = None,
                      fixed_points: tuple[float, ...] = ()) -> ScatteringResult:
    """a_sc from the R_max schedule (default {L, 2L, 4L} built from the
    first entry, or an auto-chosen L).

    The estimate error falls like 1/R_max^2, so successive pairs are
    Richardson extrapolated; convergence requires the last two extrapolants
    to agree within tol * max(|a|, 1 bohr). Non-convergence raises
    NumericError carrying the history (the signature of |a_sc| >~ R_max).

    ``r_min`` places the inner box wall; curves with a steep repulsive core
    (where V overwhelms double precision at R -> 0) need it inside the
    classically forbidden region rather than at 0.
    """
    if not schedule:
        schedule = (100.0, 200.0, 400.0)
    elif len(schedule) == 1:
        schedule = (schedule[0], 2 * schedule[0], 4 * schedule[0])
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise DomainError("R_max schedule must be increasing")
    if r_min is None:
        r_min = curve.inner_wall

    sys0 = TrapSystem(mu=mu, j=0, omega=0.0)
    history = []
    estimates = []
    k_last = math.nan
    for i, r_max in enumerate(schedule):
        # keep the short-range resolution fixed as the box grows
        g = grading + math.log(r_max / schedule[0]) if grading > 0 else 0.0
        basis = BasisSpec(r_min=r_min, r_max=float(r_max),
                          n_basis=n_basis, degree=degree, grading=g,
                          fixed_points=fixed_points)
        states = solve_radial(curve, sys0, basis, min(40, n_basis))
        e0 = next((s.energy for s in states if s.energy > 0), None)
        if e0 is None:
            raise NumericError(
                f"no positive-energy state among the lowest solutions at R_max={r_max}",
                diagnostics=tuple(history))
        k_last = math.sqrt(2.0 * mu * e0)
        a_est = r_max - math.pi / k_last
        history.append((float(r_max), float(e0), float(a_est)))
        estimates.append(a_est)

    extrapolants = []
    for (r1, _, a1), (r2, _, a2) in zip(history, history[1:]):
        ratio = (r2 / r1) ** 2
        extrapolants.append(a2 + (a2 - a1) / (ratio - 1.0))

    best = extrapolants[-1] if extrapolants else estimates[-1]
    scale = max(abs(best), 1.0)
    converged = (
        len(extrapolants) >= 2 and abs(extrapolants[-1] - extrapolants[-2]) < tol * scale
    ) or abs(estimates[-1] - estimates[-2]) < tol * max(abs(estimates[-1]), 1.0)
    if not converged:
        raise NumericError(
            "scattering length did not converge over the R_max schedule "
            f"(last extrapolants {extrapolants[-2:]}); |a_sc| may exceed the box",
            diagnostics=tuple(history))
    return ScatteringResult(a_sc=float(best), history=tuple(history), k=k_last)


def _integration_start(curve: PotentialCurve, mu: float, energy: float
                       ) -> tuple[float, float]:
    """Start radius inside the repulsive wall and the local log-derivative.

    For a hard inner wall the boundary condition u = 0 is exact. For smooth
    walls integration starts where V - E is large and uses the WKB growing
    solution u'/u = +kappa; deeper history is exponentially irrelevant.
    """
    if curve.inner_wall > 0:
        return curve.inner_wall, math.inf
    probe = np.geomspace(1e-4, 50.0, 600)
    v = eval_potential(curve, probe)
    wall_scale = max(abs(energy) * 1e4, 1e3 / (2 * mu))
    above = np.flatnonzero(v - energy > wall_scale)
    if above.size == 0:
        return probe[0], math.inf  # no wall: u ~ R at the origin
    r0 = probe[above[-1]]
    kappa = math.sqrt(2 * mu * (float(eval_potential(curve, r0)) - energy))
    return float(r0), kappa


def phase_shift(curve: PotentialCurve, mu: float, energy: float) -> float:
    """s-wave phase shift d0(E) mod pi, in (-pi/2, pi/2].

    The stationary solution at E is integrated outward and matched to
    sin(kR + d0) on its nodes at radii beyond 5x the tail scale; the two
    outermost nodes must agree, which checks that the asymptotic regime was
    reached.
    """
    if energy <= 0:
        raise DomainError(f"phase shift needs E > 0, got {energy}")
    k = math.sqrt(2.0 * mu * energy)
    if not np.isfinite(k) or k < 1e-12:
        raise DomainError("collision energy below the numerical floor")

    tail_scale = curve.match_radius if np.isfinite(curve.match_radius) else 10.0
    if curve.leading_tail is not None:
        n, cn = curve.leading_tail
        # radius where the residual tail phase is negligible at this k
        tail_scale = max(tail_scale, (20.0 * 2 * mu * cn / k) ** (1.0 / (n - 1)))
    r_asym = max(5.0 * tail_scale, 5.0 * curve.inner_wall, 1.0)
    r_stop = r_asym + 2.5 * math.pi / k

    r0, logderiv = _integration_start(curve, mu, energy)

    def rhs(r, y):
        return [y[1], 2.0 * mu * (float(eval_potential(curve, r)) - energy) * y[0]]

    y0 = [0.0, 1.0] if math.isinf(logderiv) else [1.0, logderiv]
    first = min(1e-3 * (r_stop - r0), 0.1 / k, 0.1)
    sol = solve_ivp(rhs, (r0, r_stop), y0, method="DOP853", first_step=first,
                    rtol=1e-11, atol=1e-250, dense_output=True)
    if not sol.success:
        raise NumericError(f"radial integration failed: {sol.message}")

    u = lambda r: sol.sol(r)[0]
    grid = np.linspace(r_asym, r_stop, 4007)
    ug = np.array([sol.sol(r)[0] for r in grid])
    flips = np.flatnonzero(np.sign(ug[1:]) != np.sign(ug[:-1]))
    if flips.size < 2:
        raise NumericError("fewer than two asymptotic nodes; increase range")
    nodes = [brentq(u, grid[i], grid[i + 1], xtol=1e-14, rtol=8.9e-16)
             for i in flips[-2:]]

    deltas = [-(k * rn) % math.pi for rn in nodes]
    # fold to a common branch before averaging
    d0, d1 = deltas
    if abs(d1 - d0) > math.pi / 2:
        d1 -= math.pi * round((d1 - d0) / math.pi)
    delta = 0.5 * (d0 + d1) % math.pi
    if delta > math.pi / 2:
        delta -= math.pi
    return delta


def energy_dependent_a(curve: PotentialCurve, mu: float, energy: float) -> float:
    """a_E = -tan d0(E)/k, the finite-energy extension of a_sc."""
    delta = phase_shift(curve, mu, energy)
    k = math.sqrt(2.0 * mu * energy)
    if abs(math.cos(delta)) < 1e-9:
        raise ResonanceError("d0 = pi/2 (mod pi): a_E at a resonance pole")
    return -math.tan(delta) / k


def self_consistent_aE(e_ground: float, sys: TrapSystem) -> float:
    """Scattering length whose contact model reproduces a trap ground energy.

    Inverts the trapped-pair eigenvalue relation
    Gamma(3/4 - x/2)/Gamma(1/4 - x/2) = 1/(2 xi) at x = E/omega and returns
    a_E = xi * a_ho. Unitarity poles x in {1/2, 5/2, ...} have |a_E| -> inf.
    """
    if sys.omega <= 0:
        raise DomainError("self-consistent a_E needs omega > 0")
    x = e_ground / sys.omega
    b_arg = 0.25 - 0.5 * x
    if abs(b_arg - round(b_arg)) < 1e-12 and round(b_arg) <= 0:
        raise ResonanceError(f"x = {x}: unitarity pole, |a_E| infinite")
    return xi_from_scaled_energy(x) * sys.a_ho
