"""Unit conversions. All internal quantities are Hartree atomic units."""

import math

# CODATA: atomic unit of time in seconds.
AU_TIME_S = 2.4188843265e-17

# CODATA: unified atomic mass unit in electron masses.
AMU_IN_ME = 1822.888486


def omega_from_khz(nu_khz: float) -> float:
    """Trap angular frequency in a.u. from an ordinary frequency in kHz."""
    return 2.0 * math.pi * nu_khz * 1e3 * AU_TIME_S


def khz_from_omega(omega_au: float) -> float:
    return omega_au / (2.0 * math.pi * 1e3 * AU_TIME_S)


def mu_from_amu(mass_amu: float) -> float:
    """Reduced mass of a homonuclear pair (m/2) in electron masses."""
    return 0.5 * mass_amu * AMU_IN_ME
