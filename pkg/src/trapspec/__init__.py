"""trapspec: photoassociation of two ultracold atoms in an isotropic
harmonic trap.

Solves the trapped radial two-body problem for realistic or model
interaction potentials, computes transition-moment spectra, sum rules and
trap/interaction enhancement factors, and cross-validates against the
closed-form contact-interaction model.
"""

from .bsplines import BasisSpec
from .errors import (ConfigError, DomainError, GridMismatchError,
                     NumericError, ResonanceError, TrapspecError)
from .potentials import (PotentialCurve, TrapSystem, effective_potential,
                         eval_potential, interaction_length,
                         load_potential_table, scale_mass,
                         trap_crossing_radius)
from .pseudopotential import (PseudoModel, PseudoState, energy_roots,
                              energy_series, f_c_ho, f_c_pseudo, f_c_series,
                              normalization, pseudo_state,
                              pseudo_wavefunction, tricomi_u)
from .scattering import (ScatteringResult, energy_dependent_a, phase_shift,
                         scattering_length, self_consistent_aE)
from .solver import (VibrationalState, classify_states, count_nodes,
                     outer_turning_point, solve_radial)
from .spectra import (DipoleFunction, SpectrumTable, build_spectrum,
                      constant_regime, enhancement_f, enhancement_g,
                      find_window, rate, sum_rule, transition_moment)

__version__ = "0.1.0"
