"""Shared scenario fixtures.

The desk-scale scenario (cubic-decay potential, weak dipole, constant
forcing plus one cosine harmonic) is the standard end-to-end case; its
certificate and continuation are computed once per session and shared
between the solver tests and the acceptance suite.
"""

from __future__ import annotations

import numpy as np
import pytest

from lfe.certificate import compute_certificate
from lfe.degree import find_zero_f0
from lfe.fields import (
    DipoleField,
    FieldConfig,
    Forcing,
    GeneralizedCoulomb,
    Harmonic,
    TabulatedPotential,
    UniformField,
    ZeroField,
    magnetic_ceiling,
)
from lfe.homotopy import HomotopySystem
from lfe.integrator import IntegratorConfig
from lfe.shooting import Domain, ShootingProblem, continue_lambda, newton_shooting

SEED = 20240803


def zero_potential():
    return TabulatedPotential(lambda q: 0.0, lambda q: np.zeros(3))


def force_free_config(magnetic=None, mean=(0.0, 0.0, 0.0)) -> FieldConfig:
    """No electric force; used for free-particle and gyromotion runs at lam = 1."""
    return FieldConfig(
        potential=zero_potential(),
        magnetic=magnetic if magnetic is not None else ZeroField(),
        forcing=Forcing(1.0, mean),
        c0=1.0,
        gamma=1.0,
        eps0=1.0,
        c_B=1.0,
        c1=0.0,
        beta=0.5,
        eps1=1.0,
    )


def coulomb_config(c0=1.0, mean=(0.0, 0.0, 2.0), c_B=1.0) -> FieldConfig:
    """Plain Coulomb potential, no magnetic field, constant forcing."""
    return FieldConfig(
        potential=GeneralizedCoulomb(c0, 1.0),
        magnetic=ZeroField(),
        forcing=Forcing(1.0, np.asarray(mean, dtype=float)),
        c0=c0,
        gamma=1.0,
        eps0=1.0,
        c_B=c_B,
        c1=0.0,
        beta=0.5,
        eps1=1.0,
    )


def desk_config() -> FieldConfig:
    """Cubic-decay potential, dipole, constant + cosine forcing over one period."""
    dipole = DipoleField([0.0, 0.0, 0.1])
    c1, beta = dipole.bound_constants()
    forcing = Forcing(1.0, [0.0, 0.0, 2.0], [Harmonic(1, [0.1, 0.0, 0.0], [0.0, 0.0, 0.0])])
    c_B = magnetic_ceiling(dipole, radius=1.0, period=1.0, seed=SEED)
    return FieldConfig(
        potential=GeneralizedCoulomb(1.0, 3.0),
        magnetic=dipole,
        forcing=forcing,
        c0=1.0,
        gamma=3.0,
        eps0=0.5,
        c_B=c_B,
        c1=c1,
        beta=beta,
        eps1=0.5,
    )


def gyro_config() -> FieldConfig:
    return force_free_config(magnetic=UniformField([0.0, 0.0, 1.0]))


@pytest.fixture(scope="session")
def desk():
    config = desk_config()
    return config, HomotopySystem(config)


@pytest.fixture(scope="session")
def desk_cert(desk):
    config, _ = desk
    return compute_certificate(config, seed=SEED)


@pytest.fixture(scope="session")
def desk_problem(desk, desk_cert):
    _, system = desk
    return ShootingProblem(
        system=system,
        lam=0.0,
        integrator=IntegratorConfig(r_min=0.5 * desk_cert.m),
        domain=Domain.from_bounds(*desk_cert.region()),
    )


@pytest.fixture(scope="session")
def desk_start(desk_problem):
    equilibrium = find_zero_f0(1.0, [0.0, 0.0, 2.0])
    return newton_shooting(equilibrium, desk_problem)


@pytest.fixture(scope="session")
def desk_path(desk_problem, desk_start, desk_cert):
    return continue_lambda(
        desk_problem, desk_start, 1.0, certified_bounds=desk_cert.region()
    )
