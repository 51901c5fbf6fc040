"""Charged-particle dynamics in a travelling wave plus static fields, parametrized by xi = ct - z.

The light-front variable xi turns the Lorentz-force equations into an ODE
system whose step size is fixed by the pump, not by the particle energy.
"""
__version__ = "0.1.0"

from .kinematics import (R_E_UM, SFactorCollapse, XiState, derive_lab, kappa_from_plates,
                         mass_shell_residual, normalized_amplitude, plasma_coupling)
from .pump import (BumpEnvelope, ConstantEnvelope, GaussianEnvelope, ModulatedCarrier,
                   SampledEnvelope, SampledPump, Superposition, ZeroPump, gaussian_pulse,
                   plasma_impact_pulse, pulse_length)
from .fields import AxialProfile, ConstantUniform, SumField, ZeroField
from .dynamics import (IntegrationFailure, Trajectory, energy_gain, first_integrals,
                       integrate_general, integrate_reduced_Az, state_at_time, xi_at_time)
from .exact import (AxialB, AxialE, GeneralBzEz, ZeroStatic, autoresonance_diag, kappa_scan,
                    lawson_woodward_check, solve_exact)
from .plasma import (ProfileDensity, StepDensity, aperp_residual, period_estimate, solve_family,
                     solve_step_cauchy)
from .oracle import TState, compare, integrate_time
