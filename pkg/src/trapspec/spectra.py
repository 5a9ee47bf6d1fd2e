"""Transition moments, rates, sum rule, enhancement factors and
window/dip analysis for photoassociation spectra.

The squared transition moment to final level v is
I^v = |integral u_v(R) D(R) u_init(R) dR|^2, evaluated with the same
Gauss-Legendre rule the solver used for assembly, and the rate is
Gamma_v = 4 pi^2 * intensity * I^v.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import ConfigError, DomainError, GridMismatchError, NumericError
from .potentials import PotentialCurve, TrapSystem
from .solver import VibrationalState, outer_turning_point

BOUND = "bound"


class DipoleFunction:
    """Electronic transition dipole D(R): a constant, or a sampled table
    with a declared separated-atom asymptote used beyond the last knot."""

    def __init__(self, value: float | None = None,
                 knots: np.ndarray | None = None,
                 samples: np.ndarray | None = None,
                 asymptote: float | None = None):
        if value is not None:
            self.asymptote = float(value)
            self._spline = None
            self._range = None
        else:
            knots = np.asarray(knots, dtype=float)
            samples = np.asarray(samples, dtype=float)
            if np.any(np.diff(knots) <= 0):
                raise ConfigError("dipole table knots must be strictly increasing")
            if asymptote is None:
                raise ConfigError("a dipole table needs a declared asymptote")
            self.asymptote = float(asymptote)
            self._spline = CubicSpline(knots, samples, extrapolate=False)
            self._range = (float(knots[0]), float(knots[-1]))
            self._edge = float(samples[0])

    @classmethod
    def constant(cls, d_at: float) -> "DipoleFunction":
        return cls(value=d_at)

    @classmethod
    def from_table(cls, r: np.ndarray, d: np.ndarray, asymptote: float) -> "DipoleFunction":
        return cls(knots=r, samples=d, asymptote=asymptote)

    @property
    def is_constant(self) -> bool:
        return self._spline is None

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self._spline is None:
            return np.full_like(r, self.asymptote)
        lo, hi = self._range
        out = np.where(r >= hi, self.asymptote, self._edge)
        inside = (r >= lo) & (r < hi)
        out = np.asarray(out, dtype=float)
        out[inside] = self._spline(r[inside])
        return out


def transition_moment(initial: VibrationalState, final: VibrationalState,
                      dipole: DipoleFunction) -> float:
    """Squared radial dipole integral between two states of one box.

    Both states must come from solves on the identical quadrature grid;
    anything else raises GridMismatchError rather than re-gridding.
    """
    if not initial.same_grid(final):
        raise GridMismatchError(
            "initial and final states live on different boxes/grids")
    amp = np.sum(initial.weights * initial.values * dipole(initial.grid) * final.values)
    return float(amp * amp)


def rate(i_v, laser_intensity: float):
    """Photoassociation rate 4 pi^2 * intensity * I^v."""
    if laser_intensity < 0:
        raise DomainError("laser intensity must be nonnegative")
    return 4.0 * math.pi**2 * laser_intensity * np.asarray(i_v, dtype=float)


def sum_rule(initial: VibrationalState, dipole: DipoleFunction,
             states: Sequence[VibrationalState]) -> tuple[float, float, float]:
    """Both sides of the closure sum rule and their difference.

    Returns (sum of I^v over `states`, <u_init|D^2|u_init>, defect). With a
    truncated state set the defect simply reports the missing weight.
    """
    i_sum = sum(transition_moment(initial, s, dipole) for s in states)
    d_vals = dipole(initial.grid)
    i_int = float(np.sum(initial.weights * initial.values**2 * d_vals**2))
    return i_sum, i_int, i_sum - i_int


@dataclass(frozen=True)
class SpectrumTable:
    """Per-final-level spectrum at one (omega, interaction) point.

    Rows are energy ordered; ``f_v``/``g_v`` are attached after comparison
    against a reference table. ``metadata`` carries identifying run data
    (a_sc when known, curve/dipole labels, mass factor).
    """

    omega: float
    mu: float
    v: np.ndarray
    energy: np.ndarray
    label: tuple[str, ...]
    r_out: np.ndarray
    i_v: np.ndarray
    gamma_v: np.ndarray
    f_v: np.ndarray | None = None
    g_v: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.energy) < 0):
            raise ConfigError("spectrum rows must be energy ordered")
        if np.any(self.i_v < 0):
            raise ConfigError("squared moments cannot be negative")

    @property
    def n_bound(self) -> int:
        return sum(1 for s in self.label if s == BOUND)

    def with_f(self, f_v: np.ndarray) -> "SpectrumTable":
        return replace(self, f_v=np.asarray(f_v, dtype=float))

    def with_g(self, g_v: np.ndarray) -> "SpectrumTable":
        return replace(self, g_v=np.asarray(g_v, dtype=float))

    def to_json_dict(self) -> dict:
        def col(a):
            return None if a is None else [float(x) for x in a]
        return {
            "metadata": {"omega_au": self.omega, "mu_me": self.mu, **self.metadata},
            "columns": {
                "v": [int(x) for x in self.v],
                "E_v_hartree": col(self.energy),
                "label": list(self.label),
                "R_out_bohr": col(self.r_out),
                "I_v": col(self.i_v),
                "Gamma_v": col(self.gamma_v),
                "f_v": col(self.f_v),
                "g_v": col(self.g_v),
            },
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SpectrumTable":
        meta = dict(data["metadata"])
        cols = data["columns"]
        omega = meta.pop("omega_au")
        mu = meta.pop("mu_me")
        opt = lambda name: (None if cols.get(name) is None
                            else np.asarray(cols[name], dtype=float))
        return cls(
            omega=omega, mu=mu,
            v=np.asarray(cols["v"], dtype=int),
            energy=np.asarray(cols["E_v_hartree"], dtype=float),
            label=tuple(cols["label"]),
            r_out=np.asarray(cols["R_out_bohr"], dtype=float),
            i_v=np.asarray(cols["I_v"], dtype=float),
            gamma_v=np.asarray(cols["Gamma_v"], dtype=float),
            f_v=opt("f_v"), g_v=opt("g_v"), metadata=meta)


def build_spectrum(initial: VibrationalState,
                   finals: Sequence[VibrationalState],
                   dipole: DipoleFunction,
                   final_curve: PotentialCurve,
                   final_sys: TrapSystem,
                   laser_intensity: float = 1.0,
                   metadata: dict | None = None) -> SpectrumTable:
    """Spectrum table for transitions from one initial state to a ladder of
    final states (all on the same box)."""
    for s in finals:
        if not initial.same_grid(s):
            raise GridMismatchError("all states must share one quadrature grid")
    u_fin = np.stack([s.values for s in finals])
    weighted = initial.weights * initial.values * dipole(initial.grid)
    i_v = (u_fin @ weighted) ** 2
    r_out = np.array([
        outer_turning_point(final_curve, final_sys, s.energy) for s in finals])
    return SpectrumTable(
        omega=final_sys.omega, mu=final_sys.mu,
        v=np.arange(len(finals)),
        energy=np.array([s.energy for s in finals]),
        label=tuple(s.label for s in finals),
        r_out=r_out, i_v=i_v,
        gamma_v=rate(i_v, laser_intensity),
        metadata=dict(metadata or {}))


def enhancement_f(spec: SpectrumTable, ref: SpectrumTable) -> np.ndarray:
    """Per-level trap enhancement f^v = I^v(omega)/I^v(omega_ref).

    Requires the same interaction (equal reduced mass and bound-state
    count) so that v indexes identical final levels. Ratios with a zero
    reference moment come back as NaN.
    """
    if spec.mu != ref.mu:
        raise ConfigError("f^v compares the same system at two frequencies; "
                          f"got mu={spec.mu} vs {ref.mu}")
    if spec.n_bound != ref.n_bound:
        raise ConfigError(
            f"bound-state counts differ ({spec.n_bound} vs {ref.n_bound}); "
            "final-state indexing would not line up")
    return _index_ratio(spec, ref)


def enhancement_g(spec: SpectrumTable, ref: SpectrumTable) -> np.ndarray:
    """Combined trap/interaction enhancement
    g^v = I^v(omega, a)/I^v(omega_ref, a_ref), the reference being a
    mass-tuned a_ref ~ 0 system in a shallow trap. Aligned by level index."""
    return _index_ratio(spec, ref)


def _index_ratio(spec: SpectrumTable, ref: SpectrumTable) -> np.ndarray:
    n = min(len(spec.i_v), len(ref.i_v))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(ref.i_v[:n] != 0.0, spec.i_v[:n] / ref.i_v[:n], np.nan)
    return out


@dataclass(frozen=True)
class ConstantRegime:
    """Plateau value f_c, the wavefunction-agreement radius R_0, and the
    predicted vs empirical indices where the plateau breaks down (None:
    no breakdown within the table)."""

    f_c: float
    r0: float | None
    v_break_predicted: int | None
    v_break_empirical: int | None
    plateau_median: float


def constant_regime(table: SpectrumTable, initial: VibrationalState,
                    initial_ref: VibrationalState,
                    threshold: float = 1e-3) -> ConstantRegime:
    """Plateau analysis of an f^v table.

    f_c is taken at v = 0 and cross-checked against the plateau median
    (mismatch beyond 2% warns). The breakdown radius R_0 is where
    sqrt(f_c) * u(R; omega_ref) stops tracking u(R; omega) to within
    ``threshold``; levels with outer turning point beyond R_0 are predicted
    to leave the plateau. The empirical index is the first v whose f^v
    deviates from f_c by more than 10%.
    """
    if table.f_v is None:
        raise DomainError("attach f^v to the table before plateau analysis")
    f_v = table.f_v
    if not np.isfinite(f_v[0]) or f_v[0] <= 0:
        raise NumericError("no constant plateau: f^(v=0) undefined")
    f_c = float(f_v[0])
    if not initial.same_grid(initial_ref):
        raise GridMismatchError("initial states at the two frequencies must "
                                "share one box")

    rel = np.abs(f_v / f_c - 1.0)
    above = np.flatnonzero(~(rel <= 0.10))  # NaN counts as a breakdown
    v_break_emp = int(above[0]) if above.size else None
    if v_break_emp == 0:
        raise NumericError("no constant plateau: f^v deviates immediately")

    delta = math.sqrt(f_c) * initial_ref.values - initial.values
    exceeded = np.abs(delta) > threshold
    r0 = None
    run = 5
    hits = np.flatnonzero(exceeded)
    for i in hits:
        if exceeded[i:i + run].all():
            r0 = float(initial.grid[i])
            break

    v_break_pred = None
    if r0 is not None:
        beyond = np.flatnonzero(table.r_out > r0)
        if beyond.size:
            v_break_pred = int(beyond[0])

    upper = v_break_emp if v_break_emp is not None else table.n_bound
    plateau = f_v[:max(upper - 2, 1)]
    med = float(np.nanmedian(plateau))
    if abs(med / f_c - 1.0) > 0.02:
        warnings.warn(
            f"plateau median {med:.6g} deviates from f_c = f^0 = {f_c:.6g} "
            "by more than 2%; a low-v dip may sit at v=0", stacklevel=2)
    return ConstantRegime(f_c=f_c, r0=r0, v_break_predicted=v_break_pred,
                          v_break_empirical=v_break_emp, plateau_median=med)


@dataclass(frozen=True)
class WindowScan:
    """Spectral dips (level indices, with their depth ratios) and the
    outermost initial-state node R_x, if one exists beyond the molecular
    region (the a_sc > 0 photoassociation window)."""

    dips: tuple[int, ...]
    depths: tuple[float, ...]
    r_x: float | None


def find_window(table: SpectrumTable, initial: VibrationalState,
                molecular_radius: float | None = None) -> WindowScan:
    """Locate spectrum dips and the initial-state node that causes the
    photoassociation window.

    A bound level v is a dip when it is at least a decade below the nearest
    flanking local maxima of I^v. R_x is the outermost node of the initial
    wavefunction lying in its large-amplitude region (outside the tiny
    short-range oscillations); ``molecular_radius`` overrides that
    amplitude-based cut. For attractive interactions no such node exists
    and R_x is None.
    """
    nb = table.n_bound
    i_v = table.i_v[:nb]
    dips, depths = [], []
    for v in range(1, nb - 1):
        if not (i_v[v] <= i_v[v - 1] and i_v[v] <= i_v[v + 1]):
            continue
        left = _nearest_peak(i_v, v, -1)
        right = _nearest_peak(i_v, v, +1)
        with np.errstate(divide="ignore"):
            depth = float(min(left, right) / i_v[v]) if i_v[v] > 0 else math.inf
        if depth >= 10.0:
            dips.append(v)
            depths.append(depth)

    r_x = _outer_node(initial, molecular_radius)
    return WindowScan(dips=tuple(dips), depths=tuple(depths), r_x=r_x)


def _nearest_peak(i_v: np.ndarray, v: int, step: int) -> float:
    j = v + step
    best = i_v[v]
    while 0 <= j < len(i_v):
        if i_v[j] > best:
            best = i_v[j]
        if 0 < j < len(i_v) - 1 and i_v[j] >= i_v[j - 1] and i_v[j] >= i_v[j + 1] \
                and i_v[j] > i_v[v]:
            return float(i_v[j])
        j += step
    return float(best)


def _outer_node(state: VibrationalState, molecular_radius: float | None) -> float | None:
    x = state.grid
    mid = 0.5 * (x[1:] + x[:-1])
    fine = np.sort(np.concatenate([x, mid]))
    u = state.evaluate(fine)
    amp = np.abs(u).max()
    live = np.abs(u) > 1e-9 * amp
    sign = np.sign(u)
    idx = [i for i in range(len(fine) - 1)
           if live[i] and live[i + 1] and sign[i] != sign[i + 1]]
    nodes = [brentq(state.evaluate, fine[i], fine[i + 1],
                    xtol=1e-12, rtol=8.9e-16) for i in idx]
    if molecular_radius is not None:
        outside = [r for r in nodes if r > molecular_radius]
        return float(outside[-1]) if outside else None
    # Heuristic when no molecular scale is given: short-range nodes cluster
    # (neighbors within a factor of 3 in radius), a window node stands alone
    # with the large outer lobe next to it. With a single short-range node
    # this cannot distinguish the attractive case; pass the radius then.
    for k in range(len(nodes) - 1, -1, -1):
        r_node = nodes[k]
        isolated = all(not (r_node / 3 < r < 3 * r_node)
                       for j, r in enumerate(nodes) if j != k)
        upper = nodes[k + 1] if k + 1 < len(nodes) else fine[-1]
        seg = (fine > r_node) & (fine < upper)
        lobe = np.abs(u[seg]).max() if seg.any() else 0.0
        if isolated and lobe >= 0.3 * amp:
            return float(r_node)
    return None
