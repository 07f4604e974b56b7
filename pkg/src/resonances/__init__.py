"""Numerical toolkit for unstable states: S-matrix poles of potential
scattering, Dyson-resummed propagators with complex masses, and Gamow
states evolving under a time semigroup."""

from .errors import (ConsistencyError, ConvergenceError, DomainError, NumericalError,
                     PoleProximityError, ResonanceError, SingularSystemError)
from .gamow import (ComplexMass, EnergyDensity, GamowState, mass_convert,
                    mass_squared_apply, semigroup_evolve, survival_amplitude)
from .numerics import ComplexRegion
from .poles import PoleKind, PoleRecord, classify, find_poles, pole_to_breit_wigner
from .radial import PotentialSpec, cross_section, jost_denominator, phase_shift, s_matrix
from .resonance import BreitWignerFit, fit_breit_wigner, universality_report
from .veltman import (GaugeConfig, VeltmanModel, corrected_unstable_propagator,
                      dressed_propagator, dyson_factor, find_complex_pole,
                      naive_unstable_propagator, self_energy, stable_vector_propagator,
                      ward_residual)

__version__ = "0.1.0"
