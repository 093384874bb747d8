"""Run configuration files: strict INI parsing, defaults, canonical serialization.

One config file fully describes one scenario.  Unknown sections or keys
are errors (no silently ignored typos), defaults are applied at parse
time and echoed back by the serializer, and the serialized form is
canonical so that parse -> serialize round-trips to the identical file.

Schema (INI sections and keys; vectors are space-separated triples):

  [potential]   kind = generalized-coulomb ; c0 ; gamma ; eps0
  [magnetic]    kind = zero | uniform | dipole | abc ; b | moment | abc ;
                c_B (number or 'auto') ; c1 ; beta ; eps1
  [forcing]     period ; mean ; harmonic_<k>_cos / harmonic_<k>_sin
  [integrator]  rtol ; atol ; max_steps ; method ; r_min (number or 'auto')
  [solver]      newton_tol ; max_iterations ; dlam_init ; dlam_floor ;
                growth ; target_lambda ; seed
  [initial-state]  lambda ; q (triple or 'equilibrium') ; p ; t_end
  [output]      sample_points

Potentials given as callables cannot be written to a file; the file
format covers the generalized-coulomb family only.
"""

from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field

import numpy as np

from lfe.fields import (
    ABCField,
    DipoleField,
    FieldConfig,
    Forcing,
    GeneralizedCoulomb,
    Harmonic,
    UniformField,
    ZeroField,
    magnetic_ceiling,
)
from lfe.integrator import IntegratorConfig


class ConfigError(ValueError):
    """Malformed, incomplete or unknown content in a run configuration."""


@dataclass(frozen=True)
class SolverOptions:
    newton_tol: float = 1e-9
    max_iterations: int = 50
    dlam_init: float = 0.1
    dlam_floor: float = 1e-4
    growth: float = 1.5
    target_lambda: float = 1.0
    seed: int = 20240803


@dataclass(frozen=True)
class InitialState:
    lam: float = 0.0
    q: np.ndarray | None = None  # None means: start at the autonomous equilibrium
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t_end: float | None = None  # None means: one forcing period


@dataclass(frozen=True)
class OutputOptions:
    sample_points: int = 1000


@dataclass(frozen=True)
class RunConfig:
    fields: FieldConfig
    integrator: IntegratorConfig
    r_min_auto: bool
    solver: SolverOptions
    initial: InitialState
    output: OutputOptions
    c_B_auto: bool = False


_HARMONIC_KEY = re.compile(r"^harmonic_(\d+)_(cos|sin)$")

_SECTION_KEYS = {
    "potential": {"kind", "c0", "gamma", "eps0"},
    "magnetic": {"kind", "b", "moment", "abc", "c_b", "c1", "beta", "eps1"},
    "forcing": {"period", "mean"},  # harmonic_* matched by pattern
    "integrator": {"rtol", "atol", "max_steps", "method", "r_min"},
    "solver": {
        "newton_tol",
        "max_iterations",
        "dlam_init",
        "dlam_floor",
        "growth",
        "target_lambda",
        "seed",
    },
    "initial-state": {"lambda", "q", "p", "t_end"},
    "output": {"sample_points"},
}


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        val = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from None
    if not math.isfinite(val):
        raise ConfigError(f"[{section}] {key} must be finite")
    return val


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not an integer") from None


def _parse_vec(section: str, key: str, raw: str) -> np.ndarray:
    parts = raw.split()
    if len(parts) != 3:
        raise ConfigError(f"[{section}] {key} must be three numbers, got {raw!r}")
    return np.array([_parse_float(section, key, p) for p in parts])


def _check_keys(section: str, keys, extra_pattern=None) -> None:
    allowed = _SECTION_KEYS[section]
    for key in keys:
        if key in allowed:
            continue
        if extra_pattern is not None and extra_pattern.match(key):
            continue
        raise ConfigError(f"unknown key {key!r} in section [{section}]")


def parse_config(path) -> RunConfig:
    """Read and fully validate a run configuration file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from err
    except configparser.Error as err:
        raise ConfigError(f"malformed config file {path}: {err}") from err

    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown section [{section}]")
    for required in ("potential", "forcing"):
        if not parser.has_section(required):
            raise ConfigError(f"missing required section [{required}]")

    # potential
    sec = dict(parser.items("potential"))
    _check_keys("potential", sec)
    kind = sec.get("kind", "generalized-coulomb")
    if kind not in ("generalized-coulomb", "coulomb"):
        raise ConfigError(f"[potential] kind must be generalized-coulomb, got {kind!r}")
    if "c0" not in sec:
        raise ConfigError("[potential] c0 is required")
    c0 = _parse_float("potential", "c0", sec["c0"])
    gamma = _parse_float("potential", "gamma", sec.get("gamma", "1.0"))
    eps0 = _parse_float("potential", "eps0", sec.get("eps0", "1.0"))
    potential = GeneralizedCoulomb(c0=c0, gamma=gamma)

    # forcing
    sec = dict(parser.items("forcing"))
    _check_keys("forcing", sec, _HARMONIC_KEY)
    if "period" not in sec or "mean" not in sec:
        raise ConfigError("[forcing] period and mean are required")
    period = _parse_float("forcing", "period", sec["period"])
    mean = _parse_vec("forcing", "mean", sec["mean"])
    harmonics_raw: dict[int, dict[str, np.ndarray]] = {}
    for key, raw in sec.items():
        match = _HARMONIC_KEY.match(key)
        if not match:
            continue
        k = int(match.group(1))
        if k < 1:
            raise ConfigError(f"[forcing] harmonic index must be >= 1 in {key!r}")
        harmonics_raw.setdefault(k, {})[match.group(2)] = _parse_vec("forcing", key, raw)
    harmonics = tuple(
        Harmonic(
            k,
            cos_coeff=parts.get("cos", np.zeros(3)),
            sin_coeff=parts.get("sin", np.zeros(3)),
        )
        for k, parts in sorted(harmonics_raw.items())
    )
    forcing = Forcing(period=period, mean=mean, harmonics=harmonics)

    # magnetic
    sec = dict(parser.items("magnetic")) if parser.has_section("magnetic") else {}
    _check_keys("magnetic", sec)
    kind = sec.get("kind", "zero")
    variant_keys = {"zero": set(), "uniform": {"b"}, "dipole": {"moment"}, "abc": {"abc"}}
    for key in sec.keys() & ({"b", "moment", "abc"} - variant_keys.get(kind, set())):
        raise ConfigError(f"[magnetic] key {key!r} does not belong to kind {kind!r}")
    if kind == "zero":
        magnetic = ZeroField()
    elif kind == "uniform":
        if "b" not in sec:
            raise ConfigError("[magnetic] uniform field needs b = bx by bz")
        magnetic = UniformField(_parse_vec("magnetic", "b", sec["b"]))
    elif kind == "dipole":
        if "moment" not in sec:
            raise ConfigError("[magnetic] dipole field needs moment = mx my mz")
        magnetic = DipoleField(_parse_vec("magnetic", "moment", sec["moment"]))
    elif kind == "abc":
        if "abc" not in sec:
            raise ConfigError("[magnetic] abc field needs abc = A B C")
        a, b, c = _parse_vec("magnetic", "abc", sec["abc"])
        magnetic = ABCField(a, b, c)
    else:
        raise ConfigError(f"[magnetic] kind must be zero|uniform|dipole|abc, got {kind!r}")

    # near-origin magnetic constants: sharp defaults where the variant has them
    if "c1" in sec:
        c1 = _parse_float("magnetic", "c1", sec["c1"])
    elif isinstance(magnetic, DipoleField):
        c1 = magnetic.bound_constants()[0]
    elif isinstance(magnetic, ZeroField):
        c1 = 0.0
    else:
        raise ConfigError("[magnetic] c1 is required for this field kind")
    if "beta" in sec:
        beta = _parse_float("magnetic", "beta", sec["beta"])
    elif isinstance(magnetic, DipoleField):
        beta = magnetic.bound_constants()[1]
    elif isinstance(magnetic, ZeroField):
        beta = 0.5 * gamma
    else:
        raise ConfigError("[magnetic] beta is required for this field kind")
    eps1 = _parse_float("magnetic", "eps1", sec.get("eps1", "1.0"))

    # solver (needed before c_B = auto, which uses the seed)
    sec = dict(parser.items("solver")) if parser.has_section("solver") else {}
    _check_keys("solver", sec)
    solver = SolverOptions(
        newton_tol=_parse_float("solver", "newton_tol", sec.get("newton_tol", "1e-9")),
        max_iterations=_parse_int("solver", "max_iterations", sec.get("max_iterations", "50")),
        dlam_init=_parse_float("solver", "dlam_init", sec.get("dlam_init", "0.1")),
        dlam_floor=_parse_float("solver", "dlam_floor", sec.get("dlam_floor", "1e-4")),
        growth=_parse_float("solver", "growth", sec.get("growth", "1.5")),
        target_lambda=_parse_float("solver", "target_lambda", sec.get("target_lambda", "1.0")),
        seed=_parse_int("solver", "seed", sec.get("seed", "20240803")),
    )

    sec = dict(parser.items("magnetic")) if parser.has_section("magnetic") else {}
    c_b_raw = sec.get("c_b", "auto")
    c_B_auto = c_b_raw.strip().lower() == "auto"
    if c_B_auto:
        c_B = magnetic_ceiling(magnetic, radius=1.0, period=period, seed=solver.seed)
        if c_B <= 0.0:
            c_B = 1.0  # vanishing field: any positive ceiling is valid
    else:
        c_B = _parse_float("magnetic", "c_b", c_b_raw)

    field_config = FieldConfig(
        potential=potential,
        magnetic=magnetic,
        forcing=forcing,
        c0=c0,
        gamma=gamma,
        eps0=eps0,
        c_B=c_B,
        c1=c1,
        beta=beta,
        eps1=eps1,
    )

    # integrator
    sec = dict(parser.items("integrator")) if parser.has_section("integrator") else {}
    _check_keys("integrator", sec)
    r_min_raw = sec.get("r_min", "auto")
    r_min_auto = r_min_raw.strip().lower() == "auto"
    integrator = IntegratorConfig(
        rtol=_parse_float("integrator", "rtol", sec.get("rtol", "1e-10")),
        atol=_parse_float("integrator", "atol", sec.get("atol", "1e-12")),
        max_steps=_parse_int("integrator", "max_steps", sec.get("max_steps", "1000000")),
        r_min=1e-6 if r_min_auto else _parse_float("integrator", "r_min", r_min_raw),
        method=sec.get("method", "DOP853"),
    )

    # initial state
    sec = dict(parser.items("initial-state")) if parser.has_section("initial-state") else {}
    _check_keys("initial-state", sec)
    q_raw = sec.get("q", "equilibrium").strip()
    initial = InitialState(
        lam=_parse_float("initial-state", "lambda", sec.get("lambda", "0.0")),
        q=None if q_raw.lower() == "equilibrium" else _parse_vec("initial-state", "q", q_raw),
        p=_parse_vec("initial-state", "p", sec.get("p", "0 0 0")),
        t_end=(
            _parse_float("initial-state", "t_end", sec["t_end"]) if "t_end" in sec else None
        ),
    )
    if not 0.0 <= initial.lam <= 1.0:
        raise ConfigError("[initial-state] lambda must lie in [0, 1]")

    # output
    sec = dict(parser.items("output")) if parser.has_section("output") else {}
    _check_keys("output", sec)
    output = OutputOptions(
        sample_points=_parse_int("output", "sample_points", sec.get("sample_points", "1000"))
    )
    if output.sample_points < 2:
        raise ConfigError("[output] sample_points must be at least 2")

    return RunConfig(
        fields=field_config,
        integrator=integrator,
        r_min_auto=r_min_auto,
        solver=solver,
        initial=initial,
        output=output,
        c_B_auto=c_B_auto,
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_vec(v) -> str:
    return " ".join(repr(float(x)) for x in v)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form of a run configuration; parses back to an equal config."""
    fc = cfg.fields
    lines = []
    lines.append("[potential]")
    lines.append("kind = generalized-coulomb")
    lines.append(f"c0 = {_fmt(fc.c0)}")
    lines.append(f"gamma = {_fmt(fc.gamma)}")
    lines.append(f"eps0 = {_fmt(fc.eps0)}")
    lines.append("")

    lines.append("[magnetic]")
    mag = fc.magnetic
    if isinstance(mag, ZeroField):
        lines.append("kind = zero")
    elif isinstance(mag, UniformField):
        lines.append("kind = uniform")
        lines.append(f"b = {_fmt_vec(mag.b)}")
    elif isinstance(mag, DipoleField):
        lines.append("kind = dipole")
        lines.append(f"moment = {_fmt_vec(mag.moment)}")
    elif isinstance(mag, ABCField):
        lines.append("kind = abc")
        lines.append(f"abc = {_fmt(mag.A)} {_fmt(mag.B)} {_fmt(mag.C)}")
    else:
        raise ConfigError(f"magnetic field {type(mag).__name__} has no file representation")
    lines.append("c_B = auto" if cfg.c_B_auto else f"c_B = {_fmt(fc.c_B)}")
    lines.append(f"c1 = {_fmt(fc.c1)}")
    lines.append(f"beta = {_fmt(fc.beta)}")
    lines.append(f"eps1 = {_fmt(fc.eps1)}")
    lines.append("")

    lines.append("[forcing]")
    lines.append(f"period = {_fmt(fc.forcing.period)}")
    lines.append(f"mean = {_fmt_vec(fc.forcing.mean)}")
    for harm in sorted(fc.forcing.harmonics, key=lambda h: h.k):
        lines.append(f"harmonic_{harm.k}_cos = {_fmt_vec(harm.cos_coeff)}")
        lines.append(f"harmonic_{harm.k}_sin = {_fmt_vec(harm.sin_coeff)}")
    lines.append("")

    lines.append("[integrator]")
    lines.append(f"rtol = {_fmt(cfg.integrator.rtol)}")
    lines.append(f"atol = {_fmt(cfg.integrator.atol)}")
    lines.append(f"max_steps = {cfg.integrator.max_steps}")
    lines.append(f"method = {cfg.integrator.method}")
    lines.append("r_min = auto" if cfg.r_min_auto else f"r_min = {_fmt(cfg.integrator.r_min)}")
    lines.append("")

    lines.append("[solver]")
    sv = cfg.solver
    lines.append(f"newton_tol = {_fmt(sv.newton_tol)}")
    lines.append(f"max_iterations = {sv.max_iterations}")
    lines.append(f"dlam_init = {_fmt(sv.dlam_init)}")
    lines.append(f"dlam_floor = {_fmt(sv.dlam_floor)}")
    lines.append(f"growth = {_fmt(sv.growth)}")
    lines.append(f"target_lambda = {_fmt(sv.target_lambda)}")
    lines.append(f"seed = {sv.seed}")
    lines.append("")

    lines.append("[initial-state]")
    ini = cfg.initial
    lines.append(f"lambda = {_fmt(ini.lam)}")
    lines.append("q = equilibrium" if ini.q is None else f"q = {_fmt_vec(ini.q)}")
    lines.append(f"p = {_fmt_vec(ini.p)}")
    if ini.t_end is not None:
        lines.append(f"t_end = {_fmt(ini.t_end)}")
    lines.append("")

    lines.append("[output]")
    lines.append(f"sample_points = {cfg.output.sample_points}")
    lines.append("")
    return "\n".join(lines)


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
