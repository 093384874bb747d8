"""Periodic orbits of the relativistic Lorentz force equation.

Solver library and CLI for computing T-periodic orbits of a relativistic
charged particle in singular electric/magnetic fields by homotopy
continuation, with explicit a priori bound certificates and a Brouwer
degree computation anchoring the continuation at the autonomous limit.
"""

__version__ = "0.1.0"

from lfe.certificate import BoundsCertificate, compute_certificate, verify_orbit
from lfe.degree import DegreeReport, brouwer_degree, find_zero_f0
from lfe.fields import (
    ABCField,
    DipoleField,
    FieldConfig,
    Forcing,
    GeneralizedCoulomb,
    Harmonic,
    TabulatedPotential,
    UniformField,
    ZeroField,
    validate_hypotheses,
)
from lfe.homotopy import HomotopySystem
from lfe.integrator import IntegratorConfig, Trajectory, energy_drift, integrate
from lfe.kinematics import State, lorentz_factor, phi, phi_inv
from lfe.shooting import (
    ContinuationPath,
    Domain,
    OrbitSolution,
    ShootingProblem,
    continue_lambda,
    newton_shooting,
    periodicity_residual,
)

__all__ = [
    "__version__",
    "State",
    "phi",
    "phi_inv",
    "lorentz_factor",
    "GeneralizedCoulomb",
    "TabulatedPotential",
    "ZeroField",
    "UniformField",
    "DipoleField",
    "ABCField",
    "Forcing",
    "Harmonic",
    "FieldConfig",
    "validate_hypotheses",
    "HomotopySystem",
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "energy_drift",
    "ShootingProblem",
    "Domain",
    "OrbitSolution",
    "ContinuationPath",
    "periodicity_residual",
    "newton_shooting",
    "continue_lambda",
    "BoundsCertificate",
    "compute_certificate",
    "verify_orbit",
    "DegreeReport",
    "find_zero_f0",
    "brouwer_degree",
]
