"""Adaptive initial-value integration of the homotopy system with a singularity guard.

Integration is done in (position, momentum) coordinates, never
(position, velocity), so the speed limit |v| < 1 is structural.  The
stepper is an embedded Runge-Kutta pair with dense output; periodicity
residuals and period quadratures are read from the stored interpolant,
never from re-integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import DOP853, RK45, OdeSolution

from lfe.homotopy import HomotopySystem
from lfe.kinematics import State, lorentz_factor, phi_inv


class SolverError(RuntimeError):
    """Base class for numerical failures of the integrator and solvers."""


class SingularityApproach(SolverError):
    """The orbit crossed the guard radius around the field singularity."""

    def __init__(self, t: float, state: State, r_min: float):
        super().__init__(f"|q| fell below the guard radius {r_min:g} at t = {t:.6g}")
        self.t = t
        self.state = state
        self.r_min = r_min


class MaxStepsExceeded(SolverError):
    pass


class StepUnderflow(SolverError):
    """Step control stalled (step size below machine limits)."""


_METHODS = {"DOP853": DOP853, "RK45": RK45}


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 1_000_000
    r_min: float = 1e-6
    method: str = "DOP853"

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.r_min <= 0:
            raise ValueError("guard radius must be positive")
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {sorted(_METHODS)}")


@dataclass(frozen=True)
class Trajectory:
    """Accepted nodes plus the per-step interpolant of one integration run."""

    ts: np.ndarray
    states: np.ndarray
    lam: float
    interpolant: OdeSolution | None = None
    n_rhs_evals: int = 0

    @property
    def t0(self) -> float:
        return float(self.ts[0])

    @property
    def t1(self) -> float:
        return float(self.ts[-1])

    def initial_state(self) -> State:
        return State.from_array(self.states[0])

    def final_state(self) -> State:
        return State.from_array(self.states[-1])

    def at(self, t) -> np.ndarray:
        """Dense-output evaluation; shape (6,) for scalar t, (6, n) for arrays."""
        if self.interpolant is None:
            raise ValueError("trajectory has no interpolant (single node)")
        return self.interpolant(t)

    def state_at(self, t: float) -> State:
        return State.from_array(self.at(float(t)))

    def write_csv(self, path, times) -> None:
        """Sample the orbit on the given grid and write t,q1,q2,q3,p1,p2,p3 rows."""
        times = np.asarray(times, dtype=float)
        ys = self.at(times)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t,q1,q2,q3,p1,p2,p3\n")
            for k, t in enumerate(times):
                row = [t] + [ys[i, k] for i in range(6)]
                fh.write(",".join(repr(float(x)) for x in row) + "\n")


def _bisect_guard_crossing(interp, t_lo: float, t_hi: float, r_min: float):
    """First time in [t_lo, t_hi] where |q(t)| = r_min, by bisection on the step interpolant."""

    def above(t):
        y = interp(t)
        return math.hypot(y[0], y[1], y[2]) >= r_min

    for _ in range(80):
        t_mid = 0.5 * (t_lo + t_hi)
        if above(t_mid):
            t_lo = t_mid
        else:
            t_hi = t_mid
    return t_hi, interp(t_hi)


def integrate(
    system: HomotopySystem,
    x0: State,
    t_span: tuple[float, float],
    lam: float,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> Trajectory:
    """Integrate the homotopy system from x0 over t_span at the given lam.

    Raises SingularityApproach if |q| reaches the guard radius (with the
    crossing time refined by bisection on the step interpolant),
    MaxStepsExceeded or StepUnderflow on step-control failures.
    Deterministic for fixed inputs.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t0 < t1:
        raise ValueError(f"need t0 < t1, got ({t0}, {t1})")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must lie in [0, 1], got {lam}")
    if float(np.linalg.norm(x0.q)) <= cfg.r_min:
        raise ValueError("initial position is inside the guard radius")

    n_evals = 0

    def fun(t, y):
        nonlocal n_evals
        n_evals += 1
        return system.rhs_array(t, y, lam)

    stepper = _METHODS[cfg.method](fun, t0, x0.as_array(), t1, rtol=cfg.rtol, atol=cfg.atol)
    ts = [t0]
    ys = [x0.as_array()]
    interps = []
    steps = 0
    while stepper.status == "running":
        if steps >= cfg.max_steps:
            raise MaxStepsExceeded(f"no convergence within {cfg.max_steps} steps")
        message = stepper.step()
        steps += 1
        if stepper.status == "failed":
            raise StepUnderflow(f"step control failed at t = {stepper.t:.6g}: {message}")
        interp = stepper.dense_output()
        interps.append(interp)
        ts.append(stepper.t)
        ys.append(stepper.y.copy())
        r = math.hypot(*stepper.y[:3])
        if r < cfg.r_min:
            t_cross, y_cross = _bisect_guard_crossing(interp, ts[-2], stepper.t, cfg.r_min)
            raise SingularityApproach(t_cross, State.from_array(y_cross), cfg.r_min)

    ts_arr = np.asarray(ts)
    states = np.asarray(ys)
    # |phi_inv(p)| < 1 holds by construction in momentum coordinates; assert anyway
    for y in states:
        assert math.hypot(*phi_inv(y[3:])) < 1.0
    sol = OdeSolution(ts_arr, interps) if interps else None
    return Trajectory(ts=ts_arr, states=states, lam=lam, interpolant=sol, n_rhs_evals=n_evals)


def conserved_energy(system: HomotopySystem, y: np.ndarray, lam: float) -> float:
    """sqrt(1+|p|^2) + V_lam(q) - h_mean . q; constant when h_lam is time-independent."""
    q, p = y[:3], y[3:]
    r = float(np.linalg.norm(q))
    v_lam = (1.0 - lam) * system.config.c0 / r
    if lam != 0.0:
        v_lam += lam * system.config.potential.value(q)
    return lorentz_factor(p) + v_lam - float(np.dot(system.h_mean, q))


def energy_drift(system: HomotopySystem, traj: Trajectory) -> float:
    """Max node deviation of the conserved energy along an autonomous-forcing run.

    Only meaningful when the interpolated forcing is time-independent
    (lam = 0 or no harmonics); raises ValueError otherwise.
    """
    if traj.lam != 0.0 and not system.config.forcing.is_constant():
        raise ValueError("energy drift is undefined for time-dependent forcing")
    e0 = conserved_energy(system, traj.states[0], traj.lam)
    return max(abs(conserved_energy(system, y, traj.lam) - e0) for y in traj.states)
