"""Single shooting for the T-periodic problem and the continuation driver.

A periodic orbit is a fixed point of the time-T flow in (q, p).  Damped
Newton iterates on the flow residual with a finite-difference monodromy
matrix; the continuation driver walks the deformation parameter from the
autonomous equilibrium at lam = 0 toward the full equation at lam = 1
with adaptive step halving and regrowth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad_vec

from lfe.homotopy import HomotopySystem
from lfe.integrator import IntegratorConfig, SolverError, Trajectory, integrate
from lfe.kinematics import State


class NewtonDiverged(SolverError):
    pass


class SingularJacobian(SolverError):
    pass


class LeftDomain(SolverError):
    """An iterate exited the numerical search region."""


@dataclass(frozen=True)
class Domain:
    """Search region for the shooting iteration.

    With a bounds certificate available the natural choice is
    r_min = m/2 (half the certified singularity clearance) with outer
    caps a factor two beyond the certified radius and momentum bound.
    """

    r_min: float = 1e-6
    r_max: float = math.inf
    p_max: float = math.inf

    @staticmethod
    def from_bounds(m: float, upper: float, p_bound: float) -> "Domain":
        return Domain(r_min=0.5 * m, r_max=2.0 * upper, p_max=2.0 * p_bound)

    def violation(self, x: State) -> str | None:
        r = float(np.linalg.norm(x.q))
        if r <= self.r_min:
            return f"|q| = {r:.6g} <= r_min = {self.r_min:.6g}"
        if r >= self.r_max:
            return f"|q| = {r:.6g} >= r_max = {self.r_max:.6g}"
        pn = float(np.linalg.norm(x.p))
        if pn >= self.p_max:
            return f"|p| = {pn:.6g} >= p_max = {self.p_max:.6g}"
        return None


@dataclass(frozen=True)
class ShootingProblem:
    system: HomotopySystem
    lam: float
    period: float | None = None
    integrator: IntegratorConfig = IntegratorConfig()
    domain: Domain = Domain()
    newton_tol: float = 1e-9
    max_iterations: int = 50
    max_halvings: int = 20
    fd_step: float = 1e-7

    def __post_init__(self):
        if self.period is None:
            object.__setattr__(self, "period", self.system.period)
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")

    def flow(self, x0: State) -> Trajectory:
        return integrate(self.system, x0, (0.0, self.period), self.lam, self.integrator)


def periodicity_residual(x0: State, problem: ShootingProblem) -> np.ndarray:
    """Flow(T, x0) - x0; zero exactly at a T-periodic orbit."""
    traj = problem.flow(x0)
    return traj.states[-1] - traj.states[0]


@dataclass(frozen=True)
class OrbitSolution:
    lam: float
    x0: State
    trajectory: Trajectory
    residual_norm: float
    monodromy: np.ndarray
    newton_iterations: int
    diagnostics: dict = field(default_factory=dict)

    def summary(self) -> dict:
        out = {
            "lambda": self.lam,
            "residual_norm": self.residual_norm,
            "newton_iterations": self.newton_iterations,
            "x0_q": [float(v) for v in self.x0.q],
            "x0_p": [float(v) for v in self.x0.p],
        }
        out.update({k: float(v) for k, v in self.diagnostics.items()})
        return out


def _monodromy(x0: State, traj_end: np.ndarray, problem: ShootingProblem) -> np.ndarray:
    """Forward finite-difference derivative of the time-T flow at x0 (6 extra runs)."""
    y0 = x0.as_array()
    m = np.empty((6, 6))
    for i in range(6):
        e = np.zeros(6)
        e[i] = problem.fd_step
        pert = problem.flow(State.from_array(y0 + e))
        m[:, i] = (pert.states[-1] - traj_end) / problem.fd_step
    return m


def force_along(system: HomotopySystem, traj: Trajectory, t: float) -> np.ndarray:
    """Momentum derivative of the system evaluated on the stored orbit at time t."""
    return system.rhs_array(t, traj.at(t), traj.lam)[3:]


def orbit_identities(system: HomotopySystem, traj: Trajectory) -> dict:
    """Integral identities every converged periodic orbit must satisfy.

    mean_identity: |integral of p' over one period| (zero for a closed orbit).
    virial_lhs:    integral of q . p' dt, non-positive for periodic orbits.
    virial_rhs:    -integral of |p|^2 / sqrt(1+|p|^2) dt (the matching value).
    Quadratures run on the dense output with Gauss-Kronrod, rtol 1e-8.
    """
    t0, t1 = traj.t0, traj.t1

    mean_vec, _ = quad_vec(
        lambda t: force_along(system, traj, t), t0, t1, epsabs=1e-10, epsrel=1e-8
    )

    def virial_pair(t):
        y = traj.at(t)
        f = system.rhs_array(t, y, traj.lam)[3:]
        p2 = float(np.dot(y[3:], y[3:]))
        return np.array([float(np.dot(y[:3], f)), p2 / math.sqrt(1.0 + p2)])

    pair, _ = quad_vec(virial_pair, t0, t1, epsabs=1e-10, epsrel=1e-8)
    return {
        "mean_identity": float(np.max(np.abs(mean_vec))),
        "virial_lhs": float(pair[0]),
        "virial_rhs": float(-pair[1]),
        "virial_gap": float(abs(pair[0] + pair[1])),
    }


def newton_shooting(guess: State, problem: ShootingProblem) -> OrbitSolution:
    """Damped Newton on the periodicity residual, monodromy by finite differences.

    Convergence is residual sup-norm below problem.newton_tol.  Raises
    NewtonDiverged (no residual decrease within the damping budget or the
    iteration cap), SingularJacobian (condition estimate above 1e12) or
    LeftDomain (an iterate exited the numerical search region).
    """
    bad = problem.domain.violation(guess)
    if bad is not None:
        raise LeftDomain(f"initial guess outside the search region: {bad}")

    x = guess
    traj = problem.flow(x)
    res = traj.states[-1] - traj.states[0]
    res_norm = float(np.max(np.abs(res)))

    iterations = 0
    while res_norm >= problem.newton_tol:
        if iterations >= problem.max_iterations:
            raise NewtonDiverged(
                f"residual {res_norm:.3e} after {iterations} iterations (tol {problem.newton_tol:g})"
            )
        monodromy = _monodromy(x, traj.states[-1], problem)
        jac = monodromy - np.eye(6)
        cond = float(np.linalg.cond(jac))
        if not math.isfinite(cond) or cond > 1e12:
            raise SingularJacobian(f"shooting Jacobian condition estimate {cond:.3e}")
        delta = np.linalg.solve(jac, -res)

        alpha = 1.0
        accepted = False
        left_domain_only = True
        for _ in range(problem.max_halvings):
            y_try = x.as_array() + alpha * delta
            if float(np.linalg.norm(y_try[:3])) == 0.0:
                alpha *= 0.5
                continue
            x_try = State.from_array(y_try)
            if problem.domain.violation(x_try) is not None:
                alpha *= 0.5
                continue
            left_domain_only = False
            try:
                traj_try = problem.flow(x_try)
            except SolverError:
                alpha *= 0.5
                continue
            res_try = traj_try.states[-1] - traj_try.states[0]
            res_try_norm = float(np.max(np.abs(res_try)))
            if res_try_norm < res_norm:
                x, traj, res, res_norm = x_try, traj_try, res_try, res_try_norm
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            if left_domain_only:
                raise LeftDomain("every damped step left the search region")
            raise NewtonDiverged(
                f"no residual decrease after {problem.max_halvings} damping halvings "
                f"(residual {res_norm:.3e})"
            )
        iterations += 1

    monodromy = _monodromy(x, traj.states[-1], problem)
    diagnostics = orbit_identities(problem.system, traj)
    return OrbitSolution(
        lam=problem.lam,
        x0=x,
        trajectory=traj,
        residual_norm=res_norm,
        monodromy=monodromy,
        newton_iterations=iterations,
        diagnostics=diagnostics,
    )


@dataclass
class ContinuationPath:
    solutions: list
    history: list
    status: str = "incomplete"
    message: str = ""

    @property
    def final(self) -> OrbitSolution:
        return self.solutions[-1]

    def reached(self, target: float) -> bool:
        return self.status == "reached_target" and self.final.lam == target

    def summary_rows(self) -> list[dict]:
        return [
            {
                "lambda": sol.lam,
                "x0_norm": float(np.linalg.norm(sol.x0.as_array())),
                "residual": sol.residual_norm,
                "newton_iterations": sol.newton_iterations,
            }
            for sol in self.solutions
        ]


def _orbit_inside(traj: Trajectory, bounds: tuple[float, float, float]) -> str | None:
    m, upper, p_max = bounds
    r = np.linalg.norm(traj.states[:, :3], axis=1)
    pn = np.linalg.norm(traj.states[:, 3:], axis=1)
    if float(r.min()) <= m:
        return f"min |q| = {float(r.min()):.6g} <= m = {m:.6g}"
    if float(r.max()) >= upper:
        return f"max |q| = {float(r.max()):.6g} >= {upper:.6g}"
    if float(pn.max()) >= p_max:
        return f"max |p| = {float(pn.max()):.6g} >= L = {p_max:.6g}"
    return None


def continue_lambda(
    problem: ShootingProblem,
    start: OrbitSolution,
    target_lambda: float = 1.0,
    *,
    dlam_init: float = 0.1,
    dlam_floor: float = 1e-4,
    growth: float = 1.5,
    certified_bounds: tuple[float, float, float] | None = None,
) -> ContinuationPath:
    """Natural-parameter continuation from a converged lam = 0 orbit.

    Step size starts at dlam_init, halves on any solver failure, grows by
    the given factor after two consecutive successes, and never drops
    below dlam_floor.  The predictor is the previous initial state.  The
    path reports how far it got rather than raising: status is one of
    reached_target / stepsize_underflow / bound_violation.  A failed path
    means the path is incomplete, not that no orbit exists.
    """
    if start.lam != 0.0:
        raise ValueError("continuation must start from a lam = 0 solution")
    if start.residual_norm > problem.newton_tol:
        raise ValueError("continuation must start from a converged solution")

    path = ContinuationPath(solutions=[start], history=[])
    if target_lambda == 0.0:
        path.status = "reached_target"
        path.message = "target is the starting parameter"
        return path

    lam = 0.0
    dlam = dlam_init
    consecutive = 0
    while lam < target_lambda:
        lam_try = min(lam + dlam, target_lambda)
        step_problem = replace(problem, lam=lam_try)
        try:
            sol = newton_shooting(path.final.x0, step_problem)
        except SolverError as err:
            path.history.append(
                {"lambda": lam_try, "dlam": dlam, "accepted": False, "reason": str(err)}
            )
            consecutive = 0
            dlam *= 0.5
            if dlam < dlam_floor:
                path.status = "stepsize_underflow"
                path.message = (
                    f"step below floor {dlam_floor:g} at lam = {lam:.6g}: {err}"
                )
                return path
            continue

        if certified_bounds is not None:
            bad = _orbit_inside(sol.trajectory, certified_bounds)
            if bad is not None:
                path.history.append(
                    {"lambda": lam_try, "dlam": dlam, "accepted": False, "reason": bad}
                )
                path.status = "bound_violation"
                path.message = f"orbit at lam = {lam_try:.6g} exited the certified region: {bad}"
                return path

        path.solutions.append(sol)
        path.history.append({"lambda": lam_try, "dlam": dlam, "accepted": True, "reason": ""})
        lam = lam_try
        consecutive += 1
        if consecutive >= 2:
            dlam *= growth

    path.status = "reached_target"
    path.message = f"reached lam = {target_lambda:g}"
    return path
