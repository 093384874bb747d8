import json

import numpy as np
import pytest

from lfe.cli import main
from lfe.config_io import ConfigError, parse_config, serialize_config
from lfe.fields import DipoleField, GeneralizedCoulomb, ZeroField

MINIMAL = """
[potential]
c0 = 1.0
gamma = 3.0

[forcing]
period = 1.0
mean = 0 0 2
"""

DESK = """
[potential]
kind = generalized-coulomb
c0 = 1.0
gamma = 3.0
eps0 = 0.5

[magnetic]
kind = dipole
moment = 0 0 0.1
c_B = auto
eps1 = 0.5

[forcing]
period = 1.0
mean = 0 0 2
harmonic_1_cos = 0.1 0 0

[solver]
seed = 42
"""

# plain Coulomb + constant forcing: the deformation family is constant in
# its parameter, so the continuation is a single cheap step
LIGHT = """
[potential]
c0 = 1.0
gamma = 1.0

[magnetic]
kind = zero
c_B = 1.0

[forcing]
period = 1.0
mean = 0 0 2

[solver]
dlam_init = 1.0
seed = 7

[output]
sample_points = 101
"""

BAD_ORDERING = """
[potential]
c0 = 1.0
gamma = 1.0

[magnetic]
kind = dipole
moment = 0 0 0.1
c_B = 0.5

[forcing]
period = 1.0
mean = 0 0 2
"""


def write(tmp_path, text, name="scenario.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_parse_minimal_applies_defaults(tmp_path):
    cfg = parse_config(write(tmp_path, MINIMAL))
    assert isinstance(cfg.fields.potential, GeneralizedCoulomb)
    assert isinstance(cfg.fields.magnetic, ZeroField)
    assert cfg.fields.c1 == 0.0
    assert cfg.fields.beta == 1.5  # half the potential exponent for a vanishing field
    assert cfg.integrator.rtol == 1e-10
    assert cfg.solver.newton_tol == 1e-9
    assert cfg.initial.q is None
    assert cfg.output.sample_points == 1000


def test_parse_desk_scenario(tmp_path):
    cfg = parse_config(write(tmp_path, DESK))
    assert isinstance(cfg.fields.magnetic, DipoleField)
    assert cfg.fields.c1 == pytest.approx(0.2)
    assert cfg.fields.beta == 2.0
    assert cfg.c_B_auto
    assert cfg.fields.c_B == pytest.approx(0.2, rel=1e-9)
    assert len(cfg.fields.forcing.harmonics) == 1
    assert np.array_equal(cfg.fields.forcing.harmonics[0].cos_coeff, [0.1, 0, 0])


def test_unknown_key_is_an_error(tmp_path):
    bad = MINIMAL.replace("gamma = 3.0", "gamm = 3.0")
    with pytest.raises(ConfigError, match="gamm"):
        parse_config(write(tmp_path, bad))


def test_unknown_section_is_an_error(tmp_path):
    with pytest.raises(ConfigError, match="outputs"):
        parse_config(write(tmp_path, MINIMAL + "\n[outputs]\nx = 1\n"))


def test_vector_key_of_wrong_field_kind_is_an_error(tmp_path):
    bad = DESK.replace("kind = dipole", "kind = uniform\nb = 0 0 1")
    with pytest.raises(ConfigError, match="moment"):
        parse_config(write(tmp_path, bad))


def test_malformed_vector_is_an_error(tmp_path):
    bad = MINIMAL.replace("mean = 0 0 2", "mean = 0 0")
    with pytest.raises(ConfigError, match="mean"):
        parse_config(write(tmp_path, bad))


def test_missing_required_section(tmp_path):
    with pytest.raises(ConfigError, match="forcing"):
        parse_config(write(tmp_path, "[potential]\nc0 = 1.0\n"))


def test_round_trip_is_canonical(tmp_path):
    for text in (MINIMAL, DESK, LIGHT):
        cfg = parse_config(write(tmp_path, text))
        serialized = serialize_config(cfg)
        reparsed = parse_config(write(tmp_path, serialized, "echo.ini"))
        assert serialize_config(reparsed) == serialized


# --- CLI ---


def test_cli_validate_pass_and_artifacts(tmp_path):
    cfg = write(tmp_path, DESK)
    out = tmp_path / "out"
    assert main(["validate", "--config", str(cfg), "--out", str(out)]) == 0
    payload = json.loads((out / "validate_report.json").read_text())
    assert payload["passed"] is True
    assert (out / "validate_report.txt").exists()


def test_cli_validate_exit_2_names_failed_check(tmp_path):
    cfg = write(tmp_path, BAD_ORDERING)
    out = tmp_path / "out"
    assert main(["validate", "--config", str(cfg), "--out", str(out)]) == 2
    payload = json.loads((out / "validate_report.json").read_text())
    failed = [c["name"] for c in payload["checks"] if not c["passed"]]
    assert "beta-below-gamma" in failed


def test_cli_bounds(tmp_path):
    cfg = write(tmp_path, LIGHT)
    out = tmp_path / "out"
    assert main(["bounds", "--config", str(cfg), "--out", str(out)]) == 0
    payload = json.loads((out / "certificate.json").read_text())
    assert payload["R"] == 2.0
    assert payload["m"] == pytest.approx(np.exp(-15.0))
    text = (out / "certificate.txt").read_text()
    assert "C_gradV_B" in text and "epsilon" in text


def test_cli_degree(tmp_path):
    cfg = write(tmp_path, LIGHT)
    out = tmp_path / "out"
    assert main(["degree", "--config", str(cfg), "--out", str(out)]) == 0
    payload = json.loads((out / "degree_report.json").read_text())
    assert payload["degree"] == -1
    assert payload["det_analytic"] < 0
    assert "degree:          -1" in (out / "degree_report.txt").read_text()


def test_cli_integrate_csv_contract(tmp_path):
    cfg = write(tmp_path, LIGHT)
    out = tmp_path / "out"
    assert main(["integrate", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,q1,q2,q3,p1,p2,p3"
    assert len(lines) == 102  # header + sample_points


def test_cli_find_orbit(tmp_path):
    cfg = write(tmp_path, LIGHT)
    out = tmp_path / "out"
    assert main(["find-orbit", "--config", str(cfg), "--out", str(out)]) == 0
    payload = json.loads((out / "orbit_report.json").read_text())
    assert payload["residual_norm"] < 1e-9
    assert (out / "orbit.csv").exists()


def test_cli_continue_full_pipeline(tmp_path):
    cfg = write(tmp_path, LIGHT)
    out = tmp_path / "out"
    assert main(["continue", "--config", str(cfg), "--out", str(out)]) == 0
    payload = json.loads((out / "run_report.json").read_text())
    assert payload["validation_passed"] is True
    assert payload["degree"] == -1
    assert payload["continuation"]["status"] == "reached_target"
    assert payload["final_orbit"]["residual_norm"] < 1e-9
    assert payload["final_orbit"]["verified"] is True
    assert len(payload["config_sha256"]) == 64
    csv_lines = (out / "orbit.csv").read_text().splitlines()
    assert csv_lines[0] == "t,q1,q2,q3,p1,p2,p3"
    assert (out / "continuation.csv").read_text().splitlines()[0] == (
        "lambda,x0_norm,residual,newton_iterations"
    )


def test_cli_continue_partial_target(tmp_path):
    cfg = write(tmp_path, LIGHT.replace("seed = 7", "seed = 7\ntarget_lambda = 0.5"))
    out = tmp_path / "out"
    assert main(["continue", "--config", str(cfg), "--out", str(out)]) == 0
    payload = json.loads((out / "run_report.json").read_text())
    assert payload["continuation"]["status"] == "reached_target"
    assert payload["final_orbit"]["lambda"] == 0.5


def test_cli_continue_solver_failure_writes_partial_report(tmp_path):
    # strangle the solver: one Newton iteration and a huge step floor
    text = LIGHT.replace("dlam_init = 1.0", "dlam_init = 1.0\nmax_iterations = 1\ndlam_floor = 0.9")
    text = text.replace("mean = 0 0 2", "mean = 0 0 2\nharmonic_1_cos = 0.9 0 0")
    cfg = write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["continue", "--config", str(cfg), "--out", str(out)]) == 3
    payload = json.loads((out / "run_report.json").read_text())
    assert payload["continuation"]["status"] == "stepsize_underflow"
    assert payload["continuation"]["steps"][-1]["lambda"] == 0.0  # path up to last success
    assert (out / "continuation.csv").exists()


def test_cli_integrate_zero_mean_forcing_has_no_equilibrium(tmp_path):
    cfg = write(tmp_path, LIGHT.replace("mean = 0 0 2", "mean = 0 0 0"))
    out = tmp_path / "out"
    assert main(["integrate", "--config", str(cfg), "--out", str(out)]) == 2
    assert main(["find-orbit", "--config", str(cfg), "--out", str(out)]) == 2


def test_cli_config_errors_exit_4(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "missing.ini")]) == 4
    bad = write(tmp_path, MINIMAL.replace("c0 = 1.0", "c00 = 1.0"))
    assert main(["validate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 4
