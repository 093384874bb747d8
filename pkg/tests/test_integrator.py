import math

import numpy as np
import pytest

from conftest import coulomb_config, force_free_config, gyro_config, zero_potential
from lfe.degree import find_zero_f0
from lfe.fields import FieldConfig, Forcing, TabulatedPotential, ZeroField
from lfe.homotopy import HomotopySystem
from lfe.integrator import (
    IntegratorConfig,
    MaxStepsExceeded,
    SingularityApproach,
    StepUnderflow,
    Trajectory,
    energy_drift,
    integrate,
)
from lfe.kinematics import State, phi_inv

GYRO_PERIOD = 2.0 * math.pi * 1.25  # uniform unit field, |p| = 0.75


def gyro_analytic(t, q0, p_mag=0.75, b=1.0):
    """Relativistic circular motion in a uniform field along z, p(0) = (p, 0, 0)."""
    gamma = math.sqrt(1.0 + p_mag**2)
    w = b / gamma
    p = np.array([p_mag * math.cos(w * t), -p_mag * math.sin(w * t), 0.0])
    q = np.asarray(q0, dtype=float) + (p_mag / b) * np.array(
        [math.sin(w * t), math.cos(w * t) - 1.0, 0.0]
    )
    return np.concatenate([q, p])


@pytest.fixture(scope="module")
def gyro_system():
    return HomotopySystem(gyro_config())


@pytest.fixture(scope="module")
def coulomb_system():
    return HomotopySystem(coulomb_config())


def test_free_particle_exact():
    system = HomotopySystem(force_free_config())
    x0 = State(q=[1.0, 2.0, 3.0], p=[0.75, 0.0, 0.0])
    traj = integrate(system, x0, (0.0, 1.0), 1.0)
    expected = np.concatenate([x0.q + phi_inv(x0.p), x0.p])
    assert np.abs(traj.states[-1] - expected).max() <= 1e-12


def test_gyromotion_returns_after_one_period(gyro_system):
    x0 = State(q=[5.0, 0.0, 0.0], p=[0.75, 0.0, 0.0])
    traj = integrate(gyro_system, x0, (0.0, GYRO_PERIOD), 1.0)
    assert np.abs(traj.states[-1] - traj.states[0]).max() < 1e-8


def test_gyromotion_matches_analytic_path(gyro_system):
    x0 = State(q=[5.0, 0.0, 0.0], p=[0.75, 0.0, 0.0])
    traj = integrate(gyro_system, x0, (0.0, GYRO_PERIOD), 1.0)
    for t in np.linspace(0.3, GYRO_PERIOD - 0.3, 7):
        assert np.abs(traj.at(t) - gyro_analytic(t, x0.q)).max() < 1e-8
    # momentum magnitude is conserved along the nodes
    p_mags = np.linalg.norm(traj.states[:, 3:], axis=1)
    assert np.abs(p_mags - 0.75).max() < 1e-10


def test_equilibrium_is_constant(coulomb_system):
    x_eq = find_zero_f0(1.0, [0.0, 0.0, 2.0])
    traj = integrate(coulomb_system, x_eq, (0.0, 1.0), 0.0)
    assert np.abs(traj.states - traj.states[0]).max() < 1e-10


def test_energy_drift_zero_at_equilibrium(coulomb_system):
    x_eq = find_zero_f0(1.0, [0.0, 0.0, 2.0])
    traj = integrate(coulomb_system, x_eq, (0.0, 1.0), 0.0)
    assert energy_drift(coulomb_system, traj) < 1e-13


def test_energy_drift_small_when_perturbed(coulomb_system):
    x_eq = find_zero_f0(1.0, [0.0, 0.0, 2.0])
    x0 = State(q=x_eq.q + np.array([1e-2, 0.0, 0.0]), p=np.zeros(3))
    traj = integrate(coulomb_system, x0, (0.0, 1.0), 0.0)
    assert energy_drift(coulomb_system, traj) < 1e-8


def test_energy_drift_scales_with_tolerance(coulomb_system):
    x_eq = find_zero_f0(1.0, [0.0, 0.0, 2.0])
    x0 = State(q=x_eq.q + np.array([1e-2, 0.0, 0.0]), p=np.zeros(3))
    drifts = {}
    for rtol in (1e-8, 1e-10):
        cfg = IntegratorConfig(rtol=rtol, atol=rtol * 1e-2)
        drifts[rtol] = energy_drift(coulomb_system, integrate(coulomb_system, x0, (0.0, 1.0), 0.0, cfg))
    assert drifts[1e-8] / drifts[1e-10] > 1.0


def test_energy_drift_rejects_time_dependent_forcing():
    from conftest import desk_config

    system = HomotopySystem(desk_config())
    x_eq = find_zero_f0(1.0, [0.0, 0.0, 2.0])
    traj = integrate(system, x_eq, (0.0, 0.2), 1.0)
    with pytest.raises(ValueError):
        energy_drift(system, traj)


def test_observed_order_of_embedded_pair(gyro_system):
    """Error vs mean step size across a tolerance sweep follows the pair's order."""
    x0 = State(q=[5.0, 0.0, 0.0], p=[0.75, 0.0, 0.0])
    y0 = x0.as_array()
    for method, rtols in [
        ("RK45", (1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10)),
        ("DOP853", (1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9)),
    ]:
        hs, errs = [], []
        for rtol in rtols:
            cfg = IntegratorConfig(rtol=rtol, atol=rtol * 1e-2, method=method)
            traj = integrate(gyro_system, x0, (0.0, GYRO_PERIOD), 1.0, cfg)
            hs.append(GYRO_PERIOD / (len(traj.ts) - 1))
            errs.append(max(np.abs(traj.states[-1] - y0).max(), 1e-15))
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert slope >= 4.5, (method, slope)


def test_speed_bound_at_nodes(gyro_system):
    x0 = State(q=[5.0, 0.0, 0.0], p=[10.0, 0.0, 5.0])
    traj = integrate(gyro_system, x0, (0.0, 2.0), 1.0)
    speeds = [np.linalg.norm(phi_inv(y[3:])) for y in traj.states]
    assert max(speeds) < 1.0


def test_time_symmetry_via_momentum_flip(coulomb_system):
    x_eq = find_zero_f0(1.0, [0.0, 0.0, 2.0])
    x0 = State(q=x_eq.q + np.array([1e-2, 0.0, 0.0]), p=np.zeros(3))
    forward = integrate(coulomb_system, x0, (0.0, 1.0), 0.0)
    xe = forward.final_state()
    back = integrate(coulomb_system, State(q=xe.q, p=-xe.p), (0.0, 1.0), 0.0)
    xb = back.final_state()
    recovered = np.concatenate([xb.q, -xb.p])
    assert np.abs(recovered - x0.as_array()).max() <= 10 * IntegratorConfig().rtol


def test_nodes_strictly_increasing(gyro_system):
    traj = integrate(gyro_system, State(q=[5, 0, 0], p=[0.75, 0, 0]), (0.0, 2.0), 1.0)
    assert np.all(np.diff(traj.ts) > 0)


def test_singularity_guard_triggers():
    # strong inward mean forcing drives the orbit toward the origin
    config = coulomb_config(mean=(0.0, 0.0, -10.0), c_B=1.0)
    system = HomotopySystem(config)
    x0 = State(q=[0.0, 0.0, 1.0], p=[0.0, 0.0, -1.0])
    cfg = IntegratorConfig(r_min=0.5)
    with pytest.raises(SingularityApproach) as exc:
        integrate(system, x0, (0.0, 5.0), 0.0, cfg)
    err = exc.value
    assert 0.0 < err.t < 5.0
    assert math.isclose(np.linalg.norm(err.state.q), 0.5, rel_tol=1e-6)


def test_max_steps_exceeded(gyro_system):
    cfg = IntegratorConfig(max_steps=3)
    with pytest.raises(MaxStepsExceeded):
        integrate(gyro_system, State(q=[5, 0, 0], p=[0.75, 0, 0]), (0.0, GYRO_PERIOD), 1.0, cfg)


def test_step_underflow_on_nonfinite_field():
    bad_pot = TabulatedPotential(
        lambda q: 0.0,
        lambda q: np.full(3, np.nan) if q[2] > 0.5 else np.zeros(3),
    )
    config = FieldConfig(
        potential=bad_pot,
        magnetic=ZeroField(),
        forcing=Forcing(1.0, [0.0, 0.0, 0.0]),
        c0=1.0,
        gamma=1.0,
        eps0=1.0,
        c_B=1.0,
        c1=0.0,
        beta=0.5,
        eps1=1.0,
    )
    system = HomotopySystem(config)
    x0 = State(q=[0.0, 0.0, -1.0], p=[0.0, 0.0, 0.5])
    with pytest.raises(StepUnderflow):
        integrate(system, x0, (0.0, 10.0), 1.0)


def test_integrate_validates_inputs(gyro_system):
    x0 = State(q=[5, 0, 0], p=[0, 0, 0])
    with pytest.raises(ValueError):
        integrate(gyro_system, x0, (1.0, 0.0), 1.0)
    with pytest.raises(ValueError):
        integrate(gyro_system, x0, (0.0, 1.0), -0.2)
    with pytest.raises(ValueError):
        integrate(gyro_system, State(q=[1e-8, 0, 0], p=[0, 0, 0]), (0.0, 1.0), 1.0)


def test_csv_export(tmp_path, gyro_system):
    traj = integrate(gyro_system, State(q=[5, 0, 0], p=[0.75, 0, 0]), (0.0, 1.0), 1.0)
    path = tmp_path / "traj.csv"
    grid = np.linspace(0.0, 1.0, 11)
    traj.write_csv(path, grid)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,q1,q2,q3,p1,p2,p3"
    assert len(lines) == 12
    first = [float(tok) for tok in lines[1].split(",")]
    assert first == [0.0, 5.0, 0.0, 0.0, 0.75, 0.0, 0.0]
    # byte-identical on re-export
    path2 = tmp_path / "traj2.csv"
    traj.write_csv(path2, grid)
    assert path.read_bytes() == path2.read_bytes()
