"""Closed-form model of two trapped atoms with a regularized contact
interaction.

Scaled energies x = E/omega solve

    Gamma(3/4 - x/2) / Gamma(1/4 - x/2) = 1/(2 xi),   xi = a / a_ho,

with a_ho = 1/sqrt(mu omega); the slope of each branch is dx/dxi = F(x)
with F(3/2) = 2/sqrt(pi), matching first-order perturbation theory for the
contact interaction. Eigenfunctions are

    Psi(R) = (1/2) pi^(-3/2) A R exp(-Rb^2/2) Gamma(-nu) U(-nu, 3/2, Rb^2)

with Rb = R/a_ho, nu = x/2 - 3/4, and U the confluent hypergeometric
function of the second kind. |A|^2 follows from the energy derivative,
|A|^2 = sqrt(2 omega) pi xi^2 (dE/dxi) * 4 sqrt(2) pi mu^(3/2); the mass
factor makes the reduced radial function unit-normalized in atomic units
and cancels in every ratio of amplitudes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import mpmath as mp
import numpy as np
from scipy.optimize import brentq
from scipy.special import (eval_genlaguerre, gamma as sp_gamma, gammaln,
                           gammasgn, hyp1f1, psi, rgamma)

from .errors import DomainError, NumericError
from .potentials import TrapSystem

__all__ = [
    "PseudoModel", "PseudoState", "energy_roots", "pseudo_state",
    "tricomi_u", "pseudo_wavefunction", "normalization", "f_c_pseudo",
    "f_c_ho", "energy_series", "f_c_series", "energy_slope",
    "xi_from_scaled_energy", "SeriesConvergenceWarning",
]

#: highest usable truncation order of the scaled-energy series
MAX_SERIES_ORDER = 12


class SeriesConvergenceWarning(UserWarning):
    """The scaled-energy series was evaluated outside its reliable range."""


@dataclass(frozen=True)
class PseudoModel:
    """Contact-interaction model: scattering length a (bohr, may be an
    energy-dependent value) in the trap described by ``sys``."""

    a: float
    sys: TrapSystem

    def __post_init__(self):
        if self.sys.omega <= 0:
            raise DomainError("the contact model needs omega > 0")
        if not math.isfinite(self.a):
            raise DomainError("scattering length must be finite; use the "
                              "unitarity set of energy_roots for |a| = inf")

    @property
    def xi(self) -> float:
        return self.a / self.sys.a_ho


@dataclass(frozen=True)
class PseudoState:
    """One eigenstate: index n_t, scaled energy x = E/omega, effective
    quantum number nu = x/2 - 3/4 and squared normalization constant."""

    n_t: int
    x: float
    norm_sq: float

    @property
    def nu(self) -> float:
        return self.x / 2.0 - 0.75


# -- eigenvalue relation ----------------------------------------------------

def _gamma_args(x: float) -> tuple[float, float]:
    return 0.75 - 0.5 * x, 0.25 - 0.5 * x


def gamma_ratio(x: float) -> float:
    """Gamma(3/4 - x/2)/Gamma(1/4 - x/2), the left side of the eigenvalue
    relation, via log-gamma differences (safe for |x| >> 1)."""
    a_arg, b_arg = _gamma_args(x)
    sign = gammasgn(a_arg) * gammasgn(b_arg)
    return sign * math.exp(gammaln(a_arg) - gammaln(b_arg))


def xi_from_scaled_energy(x: float) -> float:
    """Invert the eigenvalue relation: xi = Gamma(1/4-x/2)/(2 Gamma(3/4-x/2)).

    Returns 0 exactly at the non-interacting energies x = 2n + 3/2; the
    unitarity poles x = 2n + 1/2 are the caller's job to screen.
    """
    a_arg, b_arg = _gamma_args(x)
    if abs(a_arg - round(a_arg)) < 1e-13 and round(a_arg) <= 0:
        return 0.0
    sign = gammasgn(a_arg) * gammasgn(b_arg)
    return 0.5 * sign * math.exp(gammaln(b_arg) - gammaln(a_arg))


def energy_slope(x: float) -> float:
    """dx/dxi along an interaction branch:
    -4 Gamma(3/4-x/2) / {Gamma(1/4-x/2) [psi(1/4-x/2) - psi(3/4-x/2)]}.

    The grouping of the denominator is fixed by the perturbative anchor
    F(3/2) = 2/sqrt(pi); the pole of Gamma(3/4-x/2) at x = 2n + 3/2 cancels
    against the digamma pole and the limit form is used nearby.
    """
    a_arg, b_arg = _gamma_args(x)
    n = round(a_arg)
    if n <= 0 and abs(a_arg - n) < 1e-9:
        m = -n
        return -4.0 * (-1.0) ** m * gammasgn(b_arg) * math.exp(
            -gammaln(m + 1) - gammaln(b_arg))
    ratio = gammasgn(a_arg) * gammasgn(b_arg) * math.exp(gammaln(a_arg) - gammaln(b_arg))
    return -4.0 * ratio / (psi(b_arg) - psi(a_arg))


def _root_in_bracket(target: float, lo: float, hi: float) -> float:
    """Unique root of gamma_ratio(x) = target between two consecutive poles.

    gamma_ratio falls monotonically from +inf to -inf on each bracket; the
    endpoints are nudged inward until they straddle the target.
    """
    f = lambda x: gamma_ratio(x) - target
    span = hi - lo
    eps = 1e-3
    flo, fhi = f(lo + eps * span), f(hi - eps * span)
    for _ in range(60):
        if flo > 0:
            break
        eps *= 0.1
        flo = f(lo + eps * span)
    else:
        raise NumericError(f"cannot bracket root above {lo}")
    eps_hi = 1e-3
    for _ in range(60):
        if fhi < 0:
            break
        eps_hi *= 0.1
        fhi = f(hi - eps_hi * span)
    else:
        raise NumericError(f"cannot bracket root below {hi}")
    return brentq(f, lo + eps * span, hi - eps_hi * span,
                  xtol=1e-13, rtol=8.9e-16, maxiter=200)


def energy_roots(model: PseudoModel, count: int) -> np.ndarray:
    """The ``count`` lowest scaled energies x of the contact model.

    xi = 0 returns the oscillator set 2n + 3/2 exactly; xi = +-inf is not
    representable by PseudoModel, so the unitarity set 2n + 1/2 is exposed
    through ``unitarity_roots``. For a > 0 the lowest root is the molecular
    branch (x < 1/2, strongly negative for small xi).
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    xi = model.xi
    if xi == 0.0:
        return 2.0 * np.arange(count) + 1.5
    target = 1.0 / (2.0 * xi)

    roots = []
    if xi > 0:
        # molecular branch: x ~ 1/2 - 2 target^2 for small xi
        lo = 0.5 - 3.0 * target**2 - 10.0 * (1.0 + abs(target))
        roots.append(_root_in_bracket(target, lo, 1.5))
    else:
        roots.append(_root_in_bracket(target, -10.0, 1.5))
    n = 0
    while len(roots) < count:
        roots.append(_root_in_bracket(target, 2 * n + 1.5, 2 * n + 3.5))
        n += 1
    return np.array(roots[:count])


def unitarity_roots(count: int) -> np.ndarray:
    """Scaled energies at |a| -> infinity: x = 2n + 1/2."""
    return 2.0 * np.arange(count) + 0.5


def pseudo_state(model: PseudoModel, n_t: int) -> PseudoState:
    if n_t < 0:
        raise DomainError("n_t must be >= 0")
    x = float(energy_roots(model, n_t + 1)[n_t])
    return PseudoState(n_t=n_t, x=x, norm_sq=normalization(model, x))


def first_trap_pseudo_state(model: PseudoModel) -> PseudoState:
    """Lowest state of the trap branch (x > 1/2): the contact-model analog
    of the first trap-induced state that initiates photoassociation. For
    a > 0 this skips the molecular-branch root below it."""
    roots = energy_roots(model, 2)
    if roots[0] > 0.5:
        return PseudoState(n_t=0, x=float(roots[0]),
                           norm_sq=normalization(model, float(roots[0])))
    return PseudoState(n_t=1, x=float(roots[1]),
                       norm_sq=normalization(model, float(roots[1])))


# -- Tricomi U --------------------------------------------------------------

def _u_polynomial(n: int, b: float, z: np.ndarray) -> np.ndarray:
    # U(-n, b, z) = (-1)^n n! L_n^{(b-1)}(z)
    sign = -1.0 if n % 2 else 1.0
    return sign * math.exp(gammaln(n + 1)) * eval_genlaguerre(n, b - 1.0, z)


def _u_kummer(alpha: float, b: float, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two-Kummer-function combination; also returns the cancellation factor
    max(|term|)/|result| that bounds the precision loss."""
    pref = math.pi / math.sin(math.pi * b)
    t1 = hyp1f1(alpha, b, z) * (rgamma(1.0 + alpha - b) * rgamma(b))
    t2 = z ** (1.0 - b) * hyp1f1(1.0 + alpha - b, 2.0 - b, z) * (
        rgamma(alpha) * rgamma(2.0 - b))
    val = pref * (t1 - t2)
    with np.errstate(divide="ignore", invalid="ignore"):
        canc = np.where(val != 0.0,
                        np.maximum(np.abs(t1), np.abs(t2)) / np.abs(t1 - t2),
                        np.inf)
    return val, canc


def _u_asymptotic(alpha: float, b: float, z: np.ndarray,
                  kmax: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Large-z expansion z^-alpha * 2F0(alpha, alpha-b+1; -1/z); returns the
    value and the smallest-term truncation estimate."""
    term = np.ones_like(z)
    total = np.ones_like(z)
    min_term = np.ones_like(z)
    active = np.ones_like(z, dtype=bool)
    for k in range(1, kmax):
        term = term * ((alpha + k - 1) * (alpha - b + k) / k) / (-z)
        diverging = np.abs(term) > min_term
        active &= ~diverging
        total = np.where(active, total + term, total)
        min_term = np.where(active, np.abs(term), min_term)
        if not active.any() or np.all(min_term <= 1e-17 * np.abs(total)):
            break
    return z ** (-alpha) * total, min_term / np.maximum(np.abs(total), 1e-300)


def tricomi_u(alpha: float, b: float, z) -> float | np.ndarray:
    """Confluent hypergeometric function of the second kind U(alpha, b, z).

    Principal branch for z > 0 and non-integer b. Nonpositive-integer alpha
    terminates to a generalized Laguerre polynomial; otherwise a two-Kummer
    combination (small/moderate z) or the asymptotic series (large z) is
    used, falling back to arbitrary precision wherever the double-precision
    paths would lose more than ~1e-11 relative accuracy.
    """
    scalar = np.isscalar(z)
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z_arr <= 0):
        raise DomainError("tricomi_u requires z > 0")
    if abs(b - round(b)) < 1e-12:
        raise DomainError("integer b is outside the supported domain")

    if alpha <= 0 and abs(alpha - round(alpha)) < 1e-14:
        out = _u_polynomial(int(round(-alpha)), b, z_arr)
        if not np.all(np.isfinite(out)):
            raise NumericError("polynomial U overflowed; scaled representation needed")
        return float(out[0]) if scalar else out

    out = np.empty_like(z_arr)
    todo = np.ones_like(z_arr, dtype=bool)

    big = z_arr > 25.0
    if big.any():
        val, trunc = _u_asymptotic(alpha, b, z_arr[big])
        good = trunc < 1e-12
        idx = np.flatnonzero(big)[good]
        out[idx] = val[good]
        todo[idx] = False

    if todo.any():
        val, canc = _u_kummer(alpha, b, z_arr[todo])
        good = (canc < 3e3) & np.isfinite(val)
        idx = np.flatnonzero(todo)[good]
        out[idx] = val[good]
        todo[idx] = False

    if todo.any():
        for i in np.flatnonzero(todo):
            out[i] = float(mp.hyperu(alpha, b, z_arr[i]))

    if not np.all(np.isfinite(out)):
        raise NumericError("U overflowed; scaled representation needed")
    return float(out[0]) if scalar else out


# -- eigenfunctions ---------------------------------------------------------

def normalization(model: PseudoModel, state: "PseudoState | float") -> float:
    """|A|^2 of the eigenfunction at a root x (state or raw scaled energy).

    sqrt(2 omega) pi xi^2 (dE/dxi) * 4 sqrt(2) pi mu^(3/2)
      = 8 pi^2 xi^2 F(x) (mu omega)^(3/2),
    which makes the reduced radial function carry unit L2 norm. At xi = 0
    the formula degenerates (A -> 0 with a diverging Gamma(-nu)); the
    oscillator closed form and its norm take over there.
    """
    x = state.x if isinstance(state, PseudoState) else float(state)
    xi = model.xi
    sys = model.sys
    if xi == 0.0:
        n = round((x - 1.5) / 2.0)
        return _oscillator_norm_sq(n, sys)
    slope = energy_slope(x)
    if slope <= 0:
        raise NumericError(f"non-positive dE/dxi at x={x}; not a branch root")
    return 8.0 * math.pi**2 * xi**2 * slope * (sys.mu * sys.omega) ** 1.5


def _oscillator_norm_sq(n: int, sys: TrapSystem) -> float:
    # squared prefactor of Rb exp(-Rb^2/2) L_n^(1/2)(Rb^2), unit L2 norm
    d = sys.a_ho
    return 2.0 * math.exp(gammaln(n + 1) - gammaln(n + 1.5)) / d


def pseudo_wavefunction(state: PseudoState, model: PseudoModel, r) -> float | np.ndarray:
    """Reduced radial eigenfunction of the contact model, unit-normalized.

    Finite and nonzero at R = 0 for a != 0 (the contact interaction's
    short-range signature); for xi = 0 the oscillator closed form replaces
    the Gamma(-nu) U(...) representation, whose prefactor has a pole there.
    """
    scalar = np.isscalar(r)
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr < 0):
        raise DomainError("R must be nonnegative")
    sys = model.sys
    d = sys.a_ho
    rb = r_arr / d
    z = rb**2

    if model.xi == 0.0:
        n = round((state.x - 1.5) / 2.0)
        amp = math.sqrt(_oscillator_norm_sq(n, sys))
        vals = amp * rb * np.exp(-0.5 * z) * eval_genlaguerre(n, 0.5, z)
        return float(vals[0]) if scalar else vals

    nu = state.nu
    gam = sp_gamma(-nu)
    if not math.isfinite(gam):
        raise NumericError(f"Gamma(-nu) overflowed at nu={nu}; state too close "
                           "to the non-interacting limit or too deeply bound")
    amp = 0.5 * math.pi ** (-1.5) * math.sqrt(state.norm_sq)
    vals = np.empty_like(r_arr)
    at_origin = r_arr == 0.0
    if at_origin.any():
        # R Gamma(-nu) U -> sqrt(pi) d / Gamma' cancellation: limit A d/(2 pi)
        vals[at_origin] = math.sqrt(state.norm_sq) * d / (2.0 * math.pi)
    rest = ~at_origin
    if rest.any():
        zr = z[rest]
        vals[rest] = amp * r_arr[rest] * np.exp(-0.5 * zr) * gam * tricomi_u(-nu, 1.5, zr)
    return float(vals[0]) if scalar else vals


# -- trap enhancement in the constant regime --------------------------------

def f_c_ho(omega: float, omega_ref: float) -> float:
    """Non-interacting estimate (omega/omega_ref)^(3/2) from the oscillator
    ground states at R = 0."""
    if omega <= 0 or omega_ref <= 0:
        raise DomainError("frequencies must be positive")
    return (omega / omega_ref) ** 1.5


def _lowest_trap_root(a: float, sys: TrapSystem) -> float:
    model = PseudoModel(a=a, sys=sys)
    roots = energy_roots(model, 2)
    return float(roots[0]) if roots[0] > 0.5 else float(roots[1])


def f_c_pseudo(model: PseudoModel, omega_ref: float,
               a_ref: float | None = None) -> float:
    """Constant-regime enhancement of the contact model,
    [A(omega)/A(omega_ref)]^2 (omega_ref/omega).

    Evaluated on the first trap-induced branch. ``a_ref`` supplies a
    different (e.g. energy-dependent) scattering length at the reference
    frequency; by default the same a is used at both.
    """
    if omega_ref <= 0:
        raise DomainError("omega_ref must be positive")
    sys = model.sys
    sys_ref = sys.with_omega(omega_ref)
    a_ref = model.a if a_ref is None else a_ref

    if model.a == 0.0 and a_ref == 0.0:
        return f_c_ho(sys.omega, omega_ref)
    slope = energy_slope(_lowest_trap_root(model.a, sys)) if model.a else 2.0 / math.sqrt(math.pi)
    slope_ref = energy_slope(_lowest_trap_root(a_ref, sys_ref)) if a_ref else 2.0 / math.sqrt(math.pi)
    return (sys.omega / omega_ref) ** 1.5 * slope / slope_ref


# -- series expansion of the scaled energy ----------------------------------

@lru_cache(maxsize=1)
def _series_coefficients() -> tuple[float, ...]:
    """Taylor coefficients b_m of x(xi) = 3/2 + sum_m b_m xi^m.

    xi(x) = Gamma(1/4-x/2)/(2 Gamma(3/4-x/2)) is analytic at x = 3/2 (the
    apparent Gamma/psi poles cancel); its high-precision Taylor expansion is
    reverted order by order. b_1 equals F(3/2) = 2/sqrt(pi).
    """
    n_coef = MAX_SERIES_ORDER + 1
    with mp.workdps(50):
        f = lambda t: mp.gamma(mp.mpf(1) / 4 - t / 2) * mp.rgamma(mp.mpf(3) / 4 - t / 2) / 2
        a = mp.taylor(f, mp.mpf(3) / 2, n_coef + 1)     # xi(3/2 + d) = sum a_k d^k
        b = [mp.mpf(0)] * (n_coef + 1)
        b[1] = 1 / a[1]
        for m in range(2, n_coef + 1):
            # xi^m coefficient of sum_{k>=2} a_k B(xi)^k must cancel a_1 b_m,
            # where B is the reversion truncated below order m
            trunc = b[:m]
            power = trunc[:]
            acc = mp.mpf(0)
            for k in range(2, m + 1):
                power = _mp_convolve(power, trunc, m + 1)
                acc += a[k] * power[m]
            b[m] = -acc / a[1]
        return tuple(float(x) for x in b[1:])


def _mp_convolve(p: list, q: list, n: int) -> list:
    out = [mp.mpf(0)] * n
    for i, pi in enumerate(p):
        if pi == 0:
            continue
        for j, qj in enumerate(q):
            if i + j < n:
                out[i + j] += pi * qj
    return out


def energy_series(xi: float, order: int) -> float:
    """Truncated scaled-energy expansion 3/2 + sum_{m=1..order} b_m xi^m.

    ``order`` counts powers of xi (0 returns the oscillator value 3/2).
    |xi| >= 1 lies outside the convergence region and raises a
    SeriesConvergenceWarning.
    """
    if order < 0 or order > MAX_SERIES_ORDER:
        raise DomainError(f"order must be in [0, {MAX_SERIES_ORDER}]")
    if abs(xi) >= 1.0:
        warnings.warn(f"|xi| = {abs(xi):.3g} >= 1: energy series unreliable",
                      SeriesConvergenceWarning, stacklevel=2)
    coeffs = _series_coefficients()
    x = 1.5
    for m in range(order, 0, -1):
        x += coeffs[m - 1] * xi**m
    return x


def _slope_series(xi: float, order: int) -> float:
    # term-by-term derivative of the energy series: sum (m+1) b_{m+1} xi^m
    coeffs = _series_coefficients()
    s = 0.0
    for m in range(min(order, MAX_SERIES_ORDER), -1, -1):
        s += (m + 1) * coeffs[m] * xi**m
    return s


def f_c_series(xi: float, xi_ref: float, omega: float, omega_ref: float,
               order: int) -> float:
    """Series form of the constant-regime enhancement:
    (omega/omega_ref)^(3/2) times the ratio of truncated dx/dxi sums at xi
    and xi_ref. Replacing xi_ref by a_ref/a_ho_ref evaluates the combined
    (trap x interaction) factor against an a = a_ref reference."""
    if order < 0 or order > MAX_SERIES_ORDER:
        raise DomainError(f"order must be in [0, {MAX_SERIES_ORDER}]")
    for v in (xi, xi_ref):
        if abs(v) >= 1.0:
            warnings.warn(f"|xi| = {abs(v):.3g} >= 1: energy series unreliable",
                          SeriesConvergenceWarning, stacklevel=2)
    return f_c_ho(omega, omega_ref) * _slope_series(xi, order) / _slope_series(xi_ref, order)
