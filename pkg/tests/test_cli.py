"""
Tests for the command-line front end and run configuration
"""
import csv

import pytest

from src.cli.cli import build_parser, load_run_config, main
from src.geometry.mesh import regular_polygon
from src.geometry.mesh_files import write_surface
from src.utils.helpers import ConfigError


def _header(path):
    with path.open() as handle:
        return next(csv.reader(handle))


def test_verify_writes_report(tmp_path):
    """A passing verification run exits 0 and writes the report"""
    code = main(["--mode", "verify", "--family", "sphere", "--out", str(tmp_path)])
    assert code == 0
    assert _header(tmp_path / "verify_report.csv") == [
        "identity", "family", "h", "max_residual", "order_estimate", "noise_floor"]
    assert "Running verify" in (tmp_path / "run.log").read_text()


def test_verify_detects_wrong_identity(tmp_path):
    """The hidden mutation flag makes the metric identity fail with exit code 1"""
    code = main(["--family", "sphere", "--out", str(tmp_path), "--curvature-coefficient", "2"])
    assert code == 1


@pytest.mark.parametrize("argv", [
    ["--mode", "verify"],
    ["--mode", "verify", "--family", "mobius"],
    ["--mode", "flow"],
    ["--mode", "flow", "--family", "sphere", "--mesh", "missing.obj"],
    ["--config", "does-not-exist.env"],
    ["--mode", "flow", "--family", "circle", "--sigma", "-1"],
])
def test_usage_errors(tmp_path, argv):
    """Invalid invocations exit with code 2"""
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_flow_certifies_circle(tmp_path):
    """A regular polygon is certified and all outputs are written"""
    code = main(["--mode", "flow", "--family", "circle", "--law", "vpmcf", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "snap_000000.csv").exists()
    assert _header(tmp_path / "diagnostics.csv")[:3] == ["step", "time", "area"]
    assert (tmp_path / "certificate.txt").read_text().startswith("equilibrium certificate")


def test_flow_from_mesh_file(tmp_path):
    """Curves can be read from CSV files"""
    path = write_surface(regular_polygon(48, radius=1.5), tmp_path / "polygon.csv")
    out = tmp_path / "run"
    assert main(["--mode", "flow", "--mesh", str(path), "--out", str(out)]) == 0
    assert (out / "certificate.txt").exists()


def test_flow_requires_sphere(tmp_path):
    """Tori cannot be certified as spheres: exit code 4"""
    code = main(["--mode", "flow", "--family", "torus", "--require-sphere", "--out", str(tmp_path)])
    assert code == 4


def test_flow_budget_exhausted(tmp_path):
    """An unconverged volume-preserving run exits with code 4"""
    code = main(["--mode", "flow", "--family", "ellipse", "--max-steps", "3", "--out", str(tmp_path)])
    assert code == 4
    assert (tmp_path / "certificate.txt").read_text().startswith("no certificate")


def test_mcf_flow_exits_cleanly(tmp_path):
    """Mean-curvature flow stops at max_time without a certificate"""
    code = main(["--mode", "flow", "--family", "circle", "--law", "mcf", "--max-time", "0.01",
                 "--snapshot-every", "5", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "snap_000005.csv").exists()


@pytest.mark.parametrize("demo", ["static", "expanding", "mcf"])
def test_pde_demo(tmp_path, demo):
    """The continuity-law demos conserve mass"""
    code = main(["--mode", "pde-demo", "--demo", demo, "--seed", "3", "--out", str(tmp_path)])
    assert code == 0
    assert _header(tmp_path / "mass_report.csv") == ["step", "time", "mass_total", "mass_drift", "density_error"]
    assert (tmp_path / "density_final.csv").exists()


def test_config_file_with_overrides(tmp_path):
    """Dotted keys nest into sections and command-line flags win"""
    path = tmp_path / "run.env"
    path.write_text("mode = flow\nfamilies = circle\nflow.law = yl\nflow.sigma = 2\nverify.steps = 1e-3,5e-4\n")
    config = load_run_config(str(path), {"flow.sigma": 3.0, "out": str(tmp_path)})
    assert config.mode == "flow"
    assert config.families == ["circle"]
    assert config.flow.law == "yl"
    assert config.flow.sigma == 3.0
    assert config.verify.steps == [1e-3, 5e-4]


def test_config_file_rejects_unknown_keys(tmp_path):
    """Misspelled top-level keys are usage errors"""
    path = tmp_path / "run.env"
    path.write_text("mode = verify\nfamilies = sphere\ncolour = red\n")
    with pytest.raises(ConfigError):
        load_run_config(str(path), {})


def test_override_cannot_enter_a_scalar_key(tmp_path):
    """A flag addressing `flow.x` when the file sets `flow` to a value is a usage error"""
    path = tmp_path / "run.env"
    path.write_text("mode = flow\nfamilies = circle\nflow = fast\n")
    with pytest.raises(ConfigError):
        load_run_config(str(path), {"flow.sigma": 3.0})
    with pytest.raises(ConfigError):
        load_run_config(None, {"flow.law": "yl", "flow.law.kind": "yl"})


def test_parser_rejects_bad_steps():
    """--h takes comma-separated numbers"""
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--h", "small"])
