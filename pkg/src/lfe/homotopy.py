"""The deformation family connecting an autonomous Coulomb system to the full LFE.

For lam in [0, 1] the first-order system in (position, momentum) reads

    q' = phi_inv(p)
    p' = -grad V_lam(q) + h_lam(t) + lam * (phi_inv(p) x B(t, q))

with  V_lam = lam*V + (1-lam)*c0/|q|  and  h_lam = lam*h(t) + (1-lam)*h_mean.
At lam = 1 this is the original equation; at lam = 0 it is autonomous with
a single explicit equilibrium, which anchors both the degree computation
and the continuation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lfe.fields import FieldConfig, SingularityError, eval_B, grad_V
from lfe.kinematics import State, phi_inv


def _norm(q: np.ndarray) -> float:
    return math.hypot(q[0], q[1], q[2])


@dataclass(frozen=True)
class HomotopySystem:
    """Field evaluations of the lam-parametrized system for one FieldConfig."""

    config: FieldConfig

    @property
    def period(self) -> float:
        return self.config.forcing.period

    @property
    def h_mean(self) -> np.ndarray:
        return self.config.forcing.mean

    def grad_V_lambda(self, q, lam: float) -> np.ndarray:
        """lam * grad V(q) + (1-lam) * grad(c0/|q|); singular at the origin."""
        q = np.asarray(q, dtype=float)
        r = _norm(q)
        if r == 0.0:
            raise SingularityError("potential gradient undefined at the origin")
        if lam == 0.0:
            return -self.config.c0 * q / r**3
        if lam == 1.0:
            return grad_V(self.config.potential, q)
        return lam * grad_V(self.config.potential, q) - (1.0 - lam) * self.config.c0 * q / r**3

    def h_lambda(self, t: float, lam: float) -> np.ndarray:
        """lam * h(t) + (1-lam) * h_mean; its period average is h_mean for every lam."""
        if lam == 0.0 or self.config.forcing.is_constant():
            return self.h_mean.copy()
        h = self.config.forcing.eval(t)
        if lam == 1.0:
            return h
        return lam * h + (1.0 - lam) * self.h_mean

    def rhs_array(self, t: float, y: np.ndarray, lam: float) -> np.ndarray:
        """Vector field on the flat state [q, p]; the hot path for integration.

        Non-finite input propagates to non-finite output (instead of
        raising) so the step controller can reject and shrink the step.
        """
        q = y[:3]
        p = y[3:]
        r = _norm(q)
        if r == 0.0:
            raise SingularityError("state hit the field singularity")
        v = p / math.hypot(1.0, p[0], p[1], p[2])
        force = -self.grad_V_lambda(q, lam) + self.h_lambda(t, lam)
        if lam != 0.0:
            force = force + lam * np.cross(v, eval_B(self.config.magnetic, t, q))
        out = np.empty(6)
        out[:3] = v
        out[3:] = force
        return out

    def rhs(self, t: float, x: State, lam: float) -> np.ndarray:
        """Same as rhs_array but on a State; returns [dq/dt, dp/dt]."""
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {lam}")
        return self.rhs_array(t, x.as_array(), lam)

    def autonomous(self) -> "AutonomousField":
        return AutonomousField(c0=self.config.c0, h_mean=self.h_mean.copy())


@dataclass(frozen=True)
class AutonomousField:
    """The lam = 0 field: f0(q, p) = (phi_inv(p), h_mean + c0 q/|q|^3).

    Time-independent by construction; its unique zero and block Jacobian
    are what the degree toolkit works with.
    """

    c0: float
    h_mean: np.ndarray

    def value(self, x: State) -> np.ndarray:
        q, p = x.q, x.p
        r = _norm(q)
        if r == 0.0:
            raise SingularityError("autonomous field undefined at the origin")
        return np.concatenate([phi_inv(p), self.h_mean + self.c0 * q / r**3])


def velocity_jacobian(p: np.ndarray) -> np.ndarray:
    """d phi_inv / dp = I (1+|p|^2)^(-1/2) - p p^T (1+|p|^2)^(-3/2)."""
    p = np.asarray(p, dtype=float)
    s = 1.0 + float(np.dot(p, p))
    return np.eye(3) * s**-0.5 - np.outer(p, p) * s**-1.5


def coulomb_force_jacobian(q: np.ndarray, c0: float) -> np.ndarray:
    """d/dq of c0 q/|q|^3 = c0 (I |q|^-3 - 3 q q^T |q|^-5)."""
    q = np.asarray(q, dtype=float)
    r = _norm(q)
    if r == 0.0:
        raise SingularityError("force Jacobian undefined at the origin")
    return c0 * (np.eye(3) / r**3 - 3.0 * np.outer(q, q) / r**5)


def f0_determinant_closed_form(c0: float, q, p) -> float:
    """Closed form of det Jac f0 in momentum-first coordinates.

    det = -2 c0^3 |q|^-9 [ (1+|p|^2)^(-3/2) - |p|^2 (1+|p|^2)^(-5/2) ],
    strictly negative for every admissible (q, p).
    """
    r = _norm(np.asarray(q, dtype=float))
    s = 1.0 + float(np.dot(p, p))
    return -2.0 * c0**3 * r**-9 * (s**-1.5 - float(np.dot(p, p)) * s**-2.5)


def f0_and_jacobian(x: State, c0: float, h_mean) -> tuple[np.ndarray, np.ndarray, float]:
    """Value, Jacobian and determinant of the autonomous field at x.

    The value is the 6-vector (phi_inv(p), h_mean + c0 q/|q|^3).  The
    Jacobian is taken in momentum-first coordinates (p, q), where the map
    decouples and the matrix is block diagonal:

        [ d phi_inv/dp      0        ]
        [      0        d force/dq   ]

    so its determinant is the product of the two block determinants and
    matches the closed form above.  The determinant is evaluated both ways
    (direct 6x6 and closed form) and an ArithmeticError is raised if they
    disagree, rather than silently trusting either.
    """
    h_mean = np.asarray(h_mean, dtype=float)
    field = AutonomousField(c0=c0, h_mean=h_mean)
    value = field.value(x)
    jac = np.zeros((6, 6))
    jac[:3, :3] = velocity_jacobian(x.p)
    jac[3:, 3:] = coulomb_force_jacobian(x.q, c0)
    det_direct = float(np.linalg.det(jac))
    det_closed = f0_determinant_closed_form(c0, x.q, x.p)
    if not math.isclose(det_direct, det_closed, rel_tol=1e-8):
        raise ArithmeticError(
            f"determinant mismatch: direct {det_direct!r} vs closed form {det_closed!r}"
        )
    return value, jac, det_direct
