"""
Command-line front end: identity verification, surface flows and the
continuity-law demo.
"""
import argparse
import sys
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.config import DEFAULT_SEED, THREADS
from src.families.families import FAMILY_PRESETS, FamilySpec, make_family, preset_family
from src.flow.flow import FlowConfig, FlowRecord, FlowState, run_to_equilibrium, write_certificate
from src.geometry.measure import component_count, euler_characteristic
from src.geometry.mesh import MESH_PRESETS, DiscreteSurface, preset_mesh, validate_surface
from src.geometry.mesh_files import read_surface, write_field_csv, write_surface
from src.pde.pde import advect_density_chart, chart_density, chart_field
from src.utils.helpers import (CMSError, ConfigError, IdentityFailure, NonConvergenceError,
                               format_float, format_report, nest_dotted, set_dotted)
from src.utils.logging import RunLog, setup_logger
from src.verifier.verifier import SuiteOptions, assert_all_passed, run_suite, write_report_csv

# Set up logger
logger = setup_logger("cli")

MASS_DRIFT_LIMIT = 1e-6
CLOSED_FORM_LIMIT = 5e-3


class RunConfig(BaseModel):
    """One invocation: mode, inputs, outputs and the settings of the driven module"""
    model_config = ConfigDict(extra="forbid")

    mode: Literal["verify", "flow", "pde-demo"] = "verify"
    families: List[str] = Field(default_factory=list)
    family: Optional[FamilySpec] = None
    mesh: Optional[Path] = None
    out: Path = Path("out")
    flow: FlowConfig = Field(default_factory=FlowConfig)
    verify: SuiteOptions = Field(default_factory=SuiteOptions)
    snapshot_every: int = Field(default=100, ge=1)
    require_sphere: bool = False
    seed: int = DEFAULT_SEED
    demo: Literal["expanding", "static", "mcf"] = "expanding"
    demo_steps: int = Field(default=200, ge=1)

    @field_validator("families", mode="before")
    @classmethod
    def split_families(cls, value):
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @model_validator(mode="after")
    def check_inputs(self) -> "RunConfig":
        if self.mesh is not None and not self.mesh.exists():
            raise ValueError(f"mesh file not found: {self.mesh}")
        if self.mode == "verify":
            if self.mesh is not None:
                raise ValueError("verify runs on analytic families, not meshes")
            if not self.families and self.family is None:
                raise ValueError("verify needs at least one family")
            unknown = [n for n in self.families if n not in FAMILY_PRESETS]
            if unknown:
                raise ValueError(f"unknown families {unknown}; known: {', '.join(sorted(FAMILY_PRESETS))}")
        if self.mode == "flow":
            if len(self.families) + (self.mesh is not None) != 1:
                raise ValueError("flow needs exactly one of --mesh PATH or --family NAME")
            if self.families and self.families[0] not in MESH_PRESETS:
                raise ValueError(f"unknown mesh preset '{self.families[0]}'; known: {', '.join(sorted(MESH_PRESETS))}")
        return self


def load_run_config(path: Optional[str], overrides: Dict) -> RunConfig:
    """
    Read a flat `key = value` file with dotted keys, apply overrides and validate

    Raises:
        ConfigError: On a missing file or invalid settings
    """
    values: Dict = {}
    if path:
        if not Path(path).exists():
            raise ConfigError(f"Config file not found: {path}")
        values = nest_dotted(dotenv_values(path))
    for key, value in overrides.items():
        if value is not None:
            set_dotted(values, key, value)
    try:
        return RunConfig.model_validate(values)
    except ValidationError as exc:
        problems = "; ".join(f"{'.'.join(str(p) for p in e['loc']) or 'config'}: {e['msg']}" for e in exc.errors())
        raise ConfigError(f"Invalid configuration: {problems}") from exc


# Commands

def cmd_verify(config: RunConfig) -> int:
    """
    Run the identity suite over the configured families

    Writes verify_report.csv and prints a summary.

    Raises:
        IdentityFailure: Naming the first failing identity
    """
    families = [preset_family(name) for name in config.families]
    if config.family is not None:
        families.append(make_family(config.family))
    config.out.mkdir(parents=True, exist_ok=True)
    reports = run_suite(families, config.verify)
    write_report_csv(reports, config.out / "verify_report.csv")
    rows = [{"identity": r.identity, "family": r.family, "residual": r.max_residual, "floor": r.noise_floor,
             "order": r.order_estimate if r.order_estimate is not None else ("exact" if r.exact else "n/a"),
             "status": "PASS" if r.passed else "FAIL"} for r in reports]
    passed = sum(r.passed for r in reports)
    print(format_report("verification", rows, f"{passed}/{len(reports)} identity checks passed"))
    assert_all_passed(reports)
    return 0


def _load_surface(config: RunConfig) -> DiscreteSurface:
    surface = read_surface(config.mesh) if config.mesh is not None else preset_mesh(config.families[0])
    validate_surface(surface)
    return surface


def cmd_flow(config: RunConfig) -> int:
    """
    Relax a surface and write snapshots, diagnostics.csv and certificate.txt

    Raises:
        NonConvergenceError: If a sphere is required but the input is not
            simply connected, or a volume-preserving run does not converge
    """
    surface = _load_surface(config)
    chi = euler_characteristic(surface)
    simple = component_count(surface) == 1 if surface.is_curve else chi == 2
    if config.require_sphere and not simple:
        raise NonConvergenceError(f"Input is not simply connected (chi={chi}); no sphere can be certified")

    out = config.out
    out.mkdir(parents=True, exist_ok=True)
    suffix = ".csv" if surface.is_curve else ".obj"

    def snapshot(state: FlowState, record: FlowRecord) -> None:
        if state.step % config.snapshot_every == 0:
            write_surface(state.surface, out / f"snap_{state.step:06d}{suffix}")
            logger.info(f"Snapshot {state.step}: t={record.time:.6g}, H_relstd={record.H_relstd:.3e}")

    final, diagnostics, certificate = run_to_equilibrium(surface, config.flow, observer=snapshot)
    write_surface(final, out / f"snap_{diagnostics.last.step:06d}{suffix}")
    diagnostics.write_csv(out / "diagnostics.csv")

    if certificate is not None:
        write_certificate(certificate, out / "certificate.txt")
        print(certificate.to_text(), end="")
        return 0
    if not config.flow.preserves_volume:
        write_certificate(None, out / "certificate.txt", "mean-curvature flow has no equilibrium to certify")
        print(f"Flow finished at t={format_float(diagnostics.last.time)} after {diagnostics.last.step} steps")
        return 0
    converged = diagnostics.last.H_relstd < config.flow.tau_h
    if converged and not config.require_sphere:
        note = f"constant mean curvature reached, but chi={chi}: not a sphere"
        write_certificate(None, out / "certificate.txt", note)
        print(note)
        return 0
    note = (f"not simply connected (chi={chi})" if converged else
            f"H_relstd={diagnostics.last.H_relstd:.3e} above tau_H={config.flow.tau_h:.1e} "
            f"after {diagnostics.last.step} steps")
    write_certificate(None, out / "certificate.txt", note)
    raise NonConvergenceError(f"No equilibrium certificate: {note}")


def _chart_demo(config: RunConfig, spec: FamilySpec, horizon: float) -> List[Dict]:
    family = make_family(spec)
    rng = np.random.default_rng(config.seed)
    nodes, field = chart_field(family, lambda s: 1.0 + 0.5 * rng.random(len(s)), 0.0)
    initial, density0 = field.total(), field.values.copy()
    dt = horizon / config.demo_steps
    rows = []
    for k in range(config.demo_steps + 1):
        t = k * dt
        if k % max(1, config.demo_steps // 10) == 0 or k == config.demo_steps:
            exact = chart_density(family, density0, 0.0, nodes, t)
            error = float(np.max(np.abs(field.values - exact) / exact))
            rows.append({"step": k, "time": t, "mass_total": field.total(),
                         "mass_drift": abs(field.total() - initial) / initial, "density_error": error})
        if k < config.demo_steps:
            field = advect_density_chart(family, field, nodes, t, dt)
    write_field_csv(field.values, config.out / "density_final.csv")
    return rows


def _flow_demo(config: RunConfig) -> List[Dict]:
    rng = np.random.default_rng(config.seed)
    flow = config.flow.model_copy(update={"law": "mcf", "max_time": config.flow.max_time or 0.1})
    surface = _load_surface(config) if (config.mesh or config.families) else preset_mesh("sphere")
    final_density = {}

    def keep(state: FlowState, record: FlowRecord) -> None:
        final_density["values"] = state.density.values

    _, diagnostics, _ = run_to_equilibrium(surface, flow, observer=keep,
                                           density=1.0 + 0.5 * rng.random(surface.vertex_count))
    write_field_csv(final_density["values"], config.out / "density_final.csv")
    initial = diagnostics.records[0].mass_total
    return [{"step": r.step, "time": r.time, "mass_total": r.mass_total,
             "mass_drift": abs(r.mass_total - initial) / initial, "density_error": 0.0}
            for r in diagnostics.records
            if r.step % config.snapshot_every == 0 or r is diagnostics.last]


def cmd_pde_demo(config: RunConfig) -> int:
    """
    Carry a seeded random density through a moving surface and report mass conservation

    Demos: `expanding` (chart sphere with R = 1 + t/2 against the closed-form
    density), `static` (no motion, zero drift) and `mcf` (mesh under
    mean-curvature flow with Lagrangian mass transport).

    Raises:
        IdentityFailure: If mass drifts or the density leaves the closed form
    """
    config.out.mkdir(parents=True, exist_ok=True)
    if config.demo == "expanding":
        rows = _chart_demo(config, FamilySpec(kind="sphere", name="expanding", radius_rate=0.5), 0.1)
    elif config.demo == "static":
        rows = _chart_demo(config, FamilySpec(kind="sphere", name="static"), 0.1)
    else:
        rows = _flow_demo(config)

    path = config.out / "mass_report.csv"
    with path.open("w") as handle:
        handle.write("step,time,mass_total,mass_drift,density_error\n")
        for row in rows:
            handle.write(",".join(format_float(row[k]) if isinstance(row[k], float) else str(row[k])
                                  for k in ("step", "time", "mass_total", "mass_drift", "density_error")) + "\n")
    drift = max(r["mass_drift"] for r in rows)
    error = max(r["density_error"] for r in rows)
    print(format_report(f"pde demo ({config.demo})", rows[-1:],
                        f"max mass drift {drift:.3e}, max density error {error:.3e}"))
    # explicit Euler conserves chart mass only to first order in dt
    drift_limit = CLOSED_FORM_LIMIT if config.demo == "expanding" else MASS_DRIFT_LIMIT
    if drift > drift_limit:
        raise IdentityFailure(f"mass conservation: drift {drift:.3e} exceeds {drift_limit:.0e}")
    if error > CLOSED_FORM_LIMIT:
        raise IdentityFailure(f"continuity law: density error {error:.3e} exceeds {CLOSED_FORM_LIMIT:.0e}")
    return 0


COMMANDS = {"verify": cmd_verify, "flow": cmd_flow, "pde-demo": cmd_pde_demo}


def _float_list(text: str) -> str:
    try:
        [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cmsflow",
        description="Verify moving-surface identities, relax surfaces to equilibrium and "
                    "transport surface densities.",
        epilog=f"CMSFLOW_THREADS caps internal parallelism (currently {THREADS}). "
               "Config files hold dotted `key = value` lines such as `flow.sigma = 2`.",
    )
    parser.add_argument("--mode", choices=sorted(COMMANDS), help="what to run (default: verify)")
    parser.add_argument("--config", help="flat key = value run-config file")
    parser.add_argument("--out", help="output directory (default: out)")
    parser.add_argument("--family", "--families", dest="families",
                        help=f"comma-separated analytic families for verify ({', '.join(FAMILY_PRESETS)}) "
                             f"or one starting mesh for flow ({', '.join(MESH_PRESETS)})")
    parser.add_argument("--mesh", help="input surface: .obj mesh or .csv closed curve")
    parser.add_argument("--law", help="flow law: mcf, vpmcf or yl (default: vpmcf)")
    parser.add_argument("--sigma", type=float, help="surface tension (default: 1)")
    parser.add_argument("--mu", type=float, help="mobility (default: 1)")
    parser.add_argument("--tau-h", type=float, help="relative std of H accepted as equilibrium (default: 1e-3)")
    parser.add_argument("--max-steps", type=int, help="step budget (default: 100000)")
    parser.add_argument("--max-time", type=float, help="stop flows at this time")
    parser.add_argument("--snapshot-every", type=int, help="snapshot cadence in steps (default: 100)")
    parser.add_argument("--require-sphere", action="store_true", default=None,
                        help="fail unless the input can relax to a sphere")
    parser.add_argument("--physical-pressure", action="store_true", default=None,
                        help="report pressure with the physical sign (positive inside a tensioned sphere)")
    parser.add_argument("--tangential", action="store_true", default=None,
                        help="apply tangential smoothing during flows")
    parser.add_argument("--seed", type=int, help=f"seed for randomized fields (default: {DEFAULT_SEED})")
    parser.add_argument("--h", type=_float_list, help="comma-separated time steps (default: 1e-3,5e-4)")
    parser.add_argument("--demo", choices=["expanding", "static", "mcf"], help="pde-demo scenario")
    parser.add_argument("--curvature-coefficient", type=float, help=argparse.SUPPRESS)
    return parser


def _overrides(args: argparse.Namespace) -> Dict:
    return {
        "mode": args.mode,
        "out": args.out,
        "families": args.families,
        "mesh": args.mesh,
        "flow.law": args.law,
        "flow.sigma": args.sigma,
        "flow.mu": args.mu,
        "flow.tau_h": args.tau_h,
        "flow.max_steps": args.max_steps,
        "flow.max_time": args.max_time,
        "flow.physical_pressure": args.physical_pressure,
        "flow.tangential": args.tangential,
        "snapshot_every": args.snapshot_every,
        "require_sphere": args.require_sphere,
        "seed": args.seed,
        "verify.steps": args.h,
        "verify.curvature_coefficient": args.curvature_coefficient,
        "demo": args.demo,
    }


def _fail(exc: CMSError) -> int:
    logger.error(f"{exc.error_type}: {exc.detail}")
    print(f"{exc.error_type}: {exc.detail}", file=sys.stderr)
    return exc.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, run the selected mode and map errors to exit codes

    Returns:
        0 on success, 1 identity failure, 2 usage error, 3 topology or step
        failure, 4 non-convergence
    """
    args = build_parser().parse_args(argv)
    try:
        config = load_run_config(args.config, _overrides(args))
    except CMSError as exc:
        return _fail(exc)
    with RunLog(config.out):
        logger.info(f"Running {config.mode} with output in {config.out}")
        try:
            return COMMANDS[config.mode](config)
        except CMSError as exc:
            return _fail(exc)
