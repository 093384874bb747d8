"""Explicit a priori constants confining every periodic orbit, and orbit verification.

For a valid field configuration the solver can certify, independently of
the deformation parameter:

  * an outer radius:   every periodic orbit stays inside |q| < R + T,
  * a clearance m > 0: no periodic orbit comes closer than m to the
    field singularity at the origin,
  * a momentum bound L: |p(t)| < L along every periodic orbit.

All suprema are sampled (with seeds recorded) and locally refined, never
proven; the certificate carries that provenance.  One deliberate change
against the source estimates: the near-origin inequality is required with
half the electric constant on the right-hand side, and that halved
constant is used wherever the downstream formula divides by it.  As
written the inequality is unsatisfiable for the plain Coulomb exponent;
the split preserves the structure of the estimate while being checkable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from lfe.fields import FieldConfig, eval_B, forcing_stats, grad_V
from lfe.sampling import log_radii, maximize_on_annulus, sphere_directions


class CertificateError(RuntimeError):
    pass


class RadiusNotFound(CertificateError):
    """No radius up to 1e6 satisfied the far-field smallness conditions."""


class InequalityFails(CertificateError):
    """No clearance radius satisfied the near-origin repulsion inequality."""


@dataclass(frozen=True)
class BoundsCertificate:
    """The computed confinement constants with evaluation provenance.

    upper = R + period is the certified outer radius; m the inner
    clearance; L the momentum bound.  K2, C_gradV_B, epsilon and c0_eff
    are the intermediate constants the m-formula is assembled from, kept
    so the formula can be re-evaluated from the stored values alone.
    """

    R: float
    period: float
    epsilon: float
    K2: float
    C_gradV_B: float
    m: float
    M: float
    L: float
    l1_norm: float
    c0_eff: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = [self.R, self.epsilon, self.K2, self.C_gradV_B, self.m, self.M, self.L]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("certificate constants must be finite")
        if not 0.0 < self.m < self.epsilon <= self.upper:
            raise ValueError(
                f"need 0 < m < epsilon <= upper, got m={self.m}, "
                f"epsilon={self.epsilon}, upper={self.upper}"
            )
        if self.L <= 0:
            raise ValueError("momentum bound must be positive")

    @property
    def upper(self) -> float:
        return self.R + self.period

    def m_from_constants(self) -> float:
        """Re-evaluate the clearance formula from the stored constants."""
        return clearance_formula(
            self.K2, self.period, self.epsilon, self.C_gradV_B, self.c0_eff, self.upper, self.l1_norm
        )

    def region(self) -> tuple[float, float, float]:
        """(m, R + period, L): the certified orbit region."""
        return (self.m, self.upper, self.L)

    def lines(self) -> list[str]:
        p = self.provenance
        return [
            f"R          = {self.R!r}   ({p.get('R', 'geometric grid, sampled spheres')})",
            f"upper      = R + T = {self.upper!r}",
            f"epsilon    = {self.epsilon!r}   ({p.get('epsilon', 'largest grid value passing the sampled inequality')})",
            f"K2         = |ln epsilon| = {self.K2!r}",
            f"C_gradV_B  = {self.C_gradV_B!r}   ({p.get('C_gradV_B', 'sampled max + local ascent')})",
            f"m          = {self.m!r}   ({p.get('m', 'exponential formula, as printed')})",
            f"M          = {self.M!r}   ({p.get('M', 'sampled max + local ascent')})",
            f"L          = T*M + 2*l1 = {self.L!r}",
            f"l1_norm    = {self.l1_norm!r}",
            f"c0_eff     = {self.c0_eff!r}   (halved electric constant used in the inequality and divisions)",
            f"note       = {p.get('note', 'all suprema sampled, not proven')}",
        ]


def clearance_formula(
    K2: float, period: float, epsilon: float, C_gradV_B: float, c0_eff: float, upper: float, l1: float
) -> float:
    return math.exp(-K2 - period / epsilon - period * C_gradV_B / c0_eff - upper * l1 / c0_eff)


_SPHERE_MULTIPLES = (1.0, 2.0, 4.0, 8.0)
_MAX_RADIUS = 1e6


def compute_R(config: FieldConfig, *, r0: float = 1.0, seed: int = 20240803) -> float:
    """Smallest grid radius 2^k r0 beyond which both far-field conditions hold.

    Sampled on spheres at {R, 2R, 4R, 8R} with 2^10 quasi-random
    directions (and a time grid for the magnetic field): |B| must fall
    strictly below the ceiling c_B, and both the potential gradient and
    the interpolated Coulomb gradient strictly below |mean h| - c_B.
    """
    h_mean, _ = forcing_stats(config.forcing)
    hm = float(np.linalg.norm(h_mean))
    if hm <= config.c_B:
        raise ValueError(f"requires |mean h| > c_B, got {hm:.6g} <= {config.c_B:.6g}")
    threshold = hm - config.c_B

    dirs = sphere_directions(10, seed)
    times = np.linspace(0.0, config.forcing.period, 5)

    radius = r0
    while radius <= _MAX_RADIUS:
        b_sup = 0.0
        e_sup = 0.0
        for mult in _SPHERE_MULTIPLES:
            r = radius * mult
            coulomb = config.c0 / r**2
            for d in dirs:
                q = r * d
                e_sup = max(e_sup, float(np.linalg.norm(grad_V(config.potential, q))), coulomb)
            for t in times:
                for d in dirs:
                    b_sup = max(b_sup, float(np.linalg.norm(eval_B(config.magnetic, t, r * d))))
        if b_sup < config.c_B and e_sup < threshold:
            return radius
        radius *= 2.0
    raise RadiusNotFound(
        f"no radius up to {_MAX_RADIUS:g} satisfies the far-field conditions "
        "(the decay hypotheses are likely violated)"
    )


_EPS_GRID_FACTOR = 0.9
_EPS_GRID_STEPS = 132  # down to ~1e-6 of the cap


def compute_lower_constants(
    config: FieldConfig, R: float, *, seed: int = 20240803
) -> tuple[float, float, float, float]:
    """(epsilon, K2, C_gradV_B, m): the singularity-clearance constants.

    epsilon is the largest value on a decreasing geometric grid below
    min(eps0, eps1, 1) such that the sampled radii underneath all satisfy

        -q . grad V(q)  >=  (c0/2) |q|^-1  +  c1 |q|^-beta.

    K2 = |ln epsilon|; C_gradV_B is the sampled maximum of
    |grad V| + |B| over the annulus epsilon < |q| < R + T; and

        m = exp[-K2 - T/eps - T C/(c0/2) - (R+T) l1/(c0/2)].
    """
    period = config.forcing.period
    cap = min(config.eps0, config.eps1, 1.0)
    c0_eff = 0.5 * config.c0

    dirs = sphere_directions(6, seed)
    radii = log_radii(cap * 1e-8, cap, 160)
    r_bad = math.inf
    for r in radii:
        rhs = c0_eff / r + config.c1 * r ** (-config.beta)
        slack = 1e-12 * rhs
        for d in dirs:
            q = r * d
            lhs = -float(np.dot(q, grad_V(config.potential, q)))
            if lhs < rhs - slack:
                r_bad = min(r_bad, r)
                break

    epsilon = None
    value = cap
    for _ in range(_EPS_GRID_STEPS):
        if value <= r_bad:
            epsilon = value
            break
        value *= _EPS_GRID_FACTOR
    if epsilon is None:
        raise InequalityFails(
            "no clearance radius satisfies the near-origin inequality "
            f"(first sampled failure at |q| = {r_bad:.3e}); the configuration "
            "is outside the certified family"
        )

    K2 = abs(math.log(epsilon))
    _, l1 = forcing_stats(config.forcing)

    def grad_plus_b(t, q):
        return float(np.linalg.norm(grad_V(config.potential, q))) + float(
            np.linalg.norm(eval_B(config.magnetic, t, q))
        )

    C, _, _, _ = maximize_on_annulus(
        grad_plus_b, epsilon, R + period, period, seed=seed + 1
    )
    m = clearance_formula(K2, period, epsilon, C, c0_eff, R + period, l1)
    assert m < epsilon
    return epsilon, K2, C, m


def compute_momentum_bound(
    config: FieldConfig, m: float, R: float, *, seed: int = 20240803
) -> tuple[float, float]:
    """(M, L): the force ceiling on the confined annulus and the momentum bound.

    M maximizes |grad V| + c0/|q|^2 + |B| over m <= |q| <= R + T and one
    period in time (sampled plus local ascent); L = T M + 2 l1.
    """
    period = config.forcing.period
    if not 0.0 < m < R + period:
        raise ValueError(f"need 0 < m < R + T, got m={m}, R+T={R + period}")

    def h_total(t, q):
        r = float(np.linalg.norm(q))
        return (
            float(np.linalg.norm(grad_V(config.potential, q)))
            + config.c0 / r**2
            + float(np.linalg.norm(eval_B(config.magnetic, t, q)))
        )

    M, _, _, _ = maximize_on_annulus(h_total, m, R + period, period, seed=seed + 2)
    _, l1 = forcing_stats(config.forcing)
    L = period * M + 2.0 * l1
    return M, L


def compute_certificate(config: FieldConfig, *, seed: int = 20240803) -> BoundsCertificate:
    """Run the three bound computations and assemble the certificate."""
    period = config.forcing.period
    R = compute_R(config, seed=seed)
    epsilon, K2, C, m = compute_lower_constants(config, R, seed=seed)
    M, L = compute_momentum_bound(config, m, R, seed=seed)
    _, l1 = forcing_stats(config.forcing)
    provenance = {
        "R": f"geometric grid 2^k, spheres x{_SPHERE_MULTIPLES}, 2^10 directions, seed={seed}",
        "epsilon": f"decreasing grid factor {_EPS_GRID_FACTOR} under min(eps0, eps1, 1), sampled inequality with halved c0",
        "C_gradV_B": f"sampled max + local ascent on ({epsilon:.6g}, {R + period:.6g}), seed={seed + 1}",
        "m": "exponential clearance formula, as printed, with halved c0 in the divisions",
        "M": f"sampled max + local ascent on ({m:.6g}, {R + period:.6g}), seed={seed + 2}",
        "note": "all suprema sampled, not proven",
        "seed": seed,
    }
    return BoundsCertificate(
        R=R,
        period=period,
        epsilon=epsilon,
        K2=K2,
        C_gradV_B=C,
        m=m,
        M=M,
        L=L,
        l1_norm=l1,
        c0_eff=0.5 * config.c0,
        provenance=provenance,
    )


@dataclass(frozen=True)
class VerificationEntry:
    name: str
    passed: bool
    margin: float
    detail: str


@dataclass(frozen=True)
class VerificationReport:
    entries: tuple
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "passed", all(e.passed for e in self.entries))

    def lines(self) -> list[str]:
        out = []
        for e in self.entries:
            status = "pass" if e.passed else "FAIL"
            out.append(f"{status:4s}  {e.name:18s}  margin={e.margin: .6e}  {e.detail}")
        out.append(f"overall: {'pass' if self.passed else 'FAIL'}")
        return out


IDENTITY_TOL = 1e-6


def verify_orbit(orbit, cert: BoundsCertificate, n_dense: int = 1000) -> VerificationReport:
    """Check a converged orbit against the certificate.

    Position, momentum and speed are checked at every trajectory node and
    on a dense sample of the interpolant; the integral identities come
    from the orbit diagnostics.  Failures become report entries with
    negative margins, never exceptions.
    """
    traj = orbit.trajectory
    ys = traj.states
    if traj.interpolant is not None and n_dense > 0:
        dense = traj.at(np.linspace(traj.t0, traj.t1, n_dense)).T
        ys = np.vstack([ys, dense])
    r = np.linalg.norm(ys[:, :3], axis=1)
    pn = np.linalg.norm(ys[:, 3:], axis=1)
    speeds = pn / np.sqrt(1.0 + pn**2)

    entries = [
        VerificationEntry(
            "clearance",
            float(r.min()) > cert.m,
            float(r.min() - cert.m),
            f"min |q| = {float(r.min()):.6g} vs m = {cert.m:.6g}",
        ),
        VerificationEntry(
            "outer-radius",
            float(r.max()) < cert.upper,
            float(cert.upper - r.max()),
            f"max |q| = {float(r.max()):.6g} vs R + T = {cert.upper:.6g}",
        ),
        VerificationEntry(
            "momentum-bound",
            float(pn.max()) < cert.L,
            float(cert.L - pn.max()),
            f"max |p| = {float(pn.max()):.6g} vs L = {cert.L:.6g}",
        ),
        VerificationEntry(
            "speed-limit",
            float(speeds.max()) < 1.0,
            float(1.0 - speeds.max()),
            f"max |v| = {float(speeds.max()):.12g}",
        ),
    ]

    diag = orbit.diagnostics
    if diag:
        mean_res = diag["mean_identity"]
        entries.append(
            VerificationEntry(
                "mean-identity",
                mean_res <= IDENTITY_TOL,
                IDENTITY_TOL - mean_res,
                f"|integral p'| = {mean_res:.3e}",
            )
        )
        virial_lhs = diag["virial_lhs"]
        gap = diag["virial_gap"]
        entries.append(
            VerificationEntry(
                "virial-identity",
                virial_lhs <= IDENTITY_TOL and gap <= IDENTITY_TOL,
                IDENTITY_TOL - max(virial_lhs, gap),
                f"integral q.p' = {virial_lhs:.6e}, balance gap = {gap:.3e}",
            )
        )
    return VerificationReport(entries=tuple(entries))
