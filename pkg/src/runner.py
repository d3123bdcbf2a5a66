"""
Runs one toolkit subcommand from a RunConfig and writes its artifacts.

Every artifact carries the tool version, seed and tolerances: JSON files in
a ``header`` object, CSV tables in a block of '#' lines. The output
directory is assembled in a sibling staging directory and renamed into
place once the run has finished.
"""

import logging
import os
import shutil
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
from keboola.component.exceptions import UserException
from pydantic import BaseModel, Field, ValidationError

from comparison_functions import (
    ComparisonFunction,
    ConstructionOutput,
    FunctionClass,
    FunctionFamily,
    FunctionRecord,
    KLFunction,
    KLRecord,
    TwoArgFunction,
    asymptotic_gain_from_family,
    bound_family,
    certify,
    combine,
    default_grid,
    factor_kk,
    factor_kl,
    factor_posdef,
    factor_product,
    family_max,
    to_record,
    two_arg_extend,
    uniformize,
)
from configuration import (
    TOOL_NAME,
    TOOL_VERSION,
    CertificateTolerance,
    Construction,
    RunConfig,
    Subcommand,
    Tolerances,
    UniformizationSamples,
)
from counterexample import CounterexampleConfig, reproduce
from duckdb_client import DuckDB
from estimate_checker import CheckReport, EstimateSpec, Verdict, Witness, check_trajectory, falsify
from exceptions import ConstructionError
from system_model import InputSignal, Trajectory, TrajectoryStatus, TrajectoryStatusRecord, parse_system, simulate

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ESCAPE = 2
EXIT_VIOLATED = 3


class RunHeader(BaseModel):
    tool: str = TOOL_NAME
    version: str = TOOL_VERSION
    subcommand: Subcommand
    seed: int
    tolerances: Tolerances
    certificate_tolerance: CertificateTolerance


class StatusFile(BaseModel):
    header: RunHeader
    status: TrajectoryStatusRecord


class ReportFile(BaseModel):
    header: RunHeader
    report: CheckReport
    witness_file: str | None = None


class WitnessFile(BaseModel):
    header: RunHeader
    witness: Witness


class ConstructionFile(BaseModel):
    header: RunHeader
    output: ConstructionOutput


class FunctionsInput(BaseModel):
    """Operands of a construction; each construction reads the fields it needs."""

    family: list[FunctionRecord | KLRecord] = Field(default_factory=list)
    function: FunctionRecord | KLRecord | None = None
    two_arg: str | None = None  # g(s, r) for factor-kk
    index: int | None = None  # M for family-max
    grid: list[float] | None = None
    s_grid: list[float] | None = None
    t_grid: list[float] | None = None
    beta_family: list[KLRecord] = Field(default_factory=list)
    sigma_family: list[FunctionRecord] = Field(default_factory=list)
    gamma_family: list[FunctionRecord] = Field(default_factory=list)
    alpha1: FunctionRecord | None = None
    alpha2: FunctionRecord | None = None
    samples: UniformizationSamples = Field(default_factory=UniformizationSamples)

    @property
    def axis(self) -> np.ndarray:
        return default_grid() if self.grid is None else np.asarray(self.grid, dtype=float)

    def members(self) -> FunctionFamily:
        if not self.family:
            raise UserException("construction needs a non-empty 'family'")
        return FunctionFamily(tuple(m.to_function() for m in self.family))

    def operand(self, kind: type):
        if self.function is None:
            raise UserException("construction needs a 'function'")
        f = self.function.to_function()
        if not isinstance(f, kind):
            raise UserException(f"'function' must be a {kind.__name__}")
        return f


@dataclass
class RunOutcome:
    exit_code: int
    outputs: dict[str, str] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


@contextmanager
def staged_directory(target: str):
    """Yield a staging directory that replaces ``target`` when the block succeeds."""
    target = os.path.abspath(target)
    parent = os.path.dirname(target)
    os.makedirs(parent, exist_ok=True)
    staging = tempfile.mkdtemp(prefix=f".{os.path.basename(target)}-", dir=parent)
    try:
        yield staging
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    if os.path.exists(target):
        previous = tempfile.mkdtemp(prefix=f".{os.path.basename(target)}-old-", dir=parent)
        os.replace(target, os.path.join(previous, "out"))
        os.replace(staging, target)
        shutil.rmtree(previous, ignore_errors=True)
    else:
        os.replace(staging, target)


def verdict_exit_code(report: CheckReport) -> int:
    return EXIT_VIOLATED if report.verdict is Verdict.VIOLATED else EXIT_OK


def _read_text(path: str, what: str) -> str:
    try:
        with open(path) as f:
            return f.read()
    except OSError as e:
        raise UserException(f"cannot read {what} file '{path}': {e}")


def trajectory_rows(trajectory: Trajectory) -> tuple[list[str], list[tuple]]:
    n = trajectory.states.shape[1]
    m = trajectory.signal.dimension
    columns = ["t"] + [f"x{i}" for i in range(1, n + 1)] + [f"u{i}" for i in range(1, m + 1)]
    inputs = trajectory.signal.value_at(trajectory.times)
    rows = [(t, *x, *u) for t, x, u in zip(trajectory.times, trajectory.states, inputs)]
    return columns, rows


class ToolkitRunner:
    """Executes the subcommand named in a RunConfig."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.header = RunHeader(
            subcommand=config.subcommand,
            seed=config.seed,
            tolerances=config.tolerances,
            certificate_tolerance=config.certificate_tolerance,
        )
        self.duckdb = DuckDB(self._header_lines())

    def _header_lines(self) -> list[str]:
        tol = self.config.tolerances
        cert = self.config.certificate_tolerance
        return [
            f"{TOOL_NAME} {TOOL_VERSION}",
            f"subcommand: {self.config.subcommand.value}",
            f"seed: {self.config.seed}",
            f"tolerances: atol={tol.atol:g} rtol={tol.rtol:g}",
            f"certificate tolerance: absolute={cert.absolute:g} relative={cert.relative:g}",
        ]

    def run(self) -> RunOutcome:
        """Run the subcommand inside a staged output directory."""
        handlers = {
            Subcommand.SIMULATE: self._run_simulate,
            Subcommand.CHECK: self._run_check,
            Subcommand.FALSIFY: self._run_falsify,
            Subcommand.FUNCTIONS: self._run_functions,
            Subcommand.COUNTEREXAMPLE: self._run_counterexample,
        }
        logging.info(f"Running '{self.config.subcommand.value}' with seed {self.config.seed}")
        try:
            with staged_directory(self.config.out) as staging:
                outcome = handlers[self.config.subcommand](staging)
        finally:
            self.duckdb.close()
        outcome.outputs = {name: os.path.join(self.config.out, os.path.basename(path))
                           for name, path in outcome.outputs.items()}
        logging.info(f"Finished '{self.config.subcommand.value}' with exit code {outcome.exit_code}")
        return outcome

    def _write_json(self, directory: str, name: str, model: BaseModel) -> str:
        path = os.path.join(directory, name)
        with open(path, "w") as f:
            f.write(model.model_dump_json(indent=2))
            f.write("\n")
        return path

    def _load_system(self):
        return parse_system(_read_text(self.config.system, "system"))

    def _load_spec(self) -> EstimateSpec:
        try:
            return EstimateSpec.from_json(_read_text(self.config.spec, "estimate spec"))
        except ValidationError as e:
            raise UserException(f"invalid estimate spec file '{self.config.spec}': {e}")

    def _load_witness(self) -> Witness:
        text = _read_text(self.config.witness, "witness")
        try:
            return WitnessFile.model_validate_json(text).witness
        except ValidationError:
            return Witness.model_validate_json(text)

    def _initial_condition(self, input_dimension: int) -> tuple[np.ndarray, InputSignal, float]:
        """xi, u and horizon from a witness file, or from --xi, --input and --horizon."""
        if self.config.witness is not None:
            witness = self._load_witness()
            return np.asarray(witness.xi, dtype=float), witness.signal, witness.horizon
        if self.config.input is not None:
            signal = self.duckdb.read_input_signal(self.config.input)
        else:
            signal = InputSignal.zero(input_dimension)
        return np.asarray(self.config.xi, dtype=float), signal, self.config.horizon

    def _run_simulate(self, staging: str) -> RunOutcome:
        system = self._load_system()
        xi, signal, horizon = self._initial_condition(system.input_dimension)
        trajectory = simulate(system, xi, signal, horizon, self.config.tolerances)
        columns, rows = trajectory_rows(trajectory)
        outputs = {
            "trajectory": self.duckdb.write_table(os.path.join(staging, "trajectory.csv"), columns, rows),
            "status": self._write_json(staging, "status.json",
                                       StatusFile(header=self.header, status=trajectory.status_record())),
        }
        exit_code = {
            TrajectoryStatus.COMPLETED: EXIT_OK,
            TrajectoryStatus.FINITE_ESCAPE: EXIT_ESCAPE,
            TrajectoryStatus.STEP_FAILURE: EXIT_ERROR,
        }[trajectory.status]
        if trajectory.status is not TrajectoryStatus.COMPLETED:
            logging.warning(f"Simulation ended with {trajectory.status.value}: {trajectory.message}")
        return RunOutcome(exit_code, outputs, {"status": trajectory.status.value, "end_time": trajectory.end_time})

    def _report_outputs(self, staging: str, report: CheckReport) -> dict[str, str]:
        report = report.model_copy(update={"seed": self.config.seed, "tolerances": self.config.tolerances})
        outputs = {}
        witness_file = None
        if report.witness is not None:
            outputs["witness"] = self._write_json(staging, "witness.json",
                                                  WitnessFile(header=self.header, witness=report.witness))
            outputs["witness_input"] = self.duckdb.write_input_signal(os.path.join(staging, "witness_input.csv"),
                                                                      report.witness.signal)
            witness_file = "witness.json"
        outputs["report"] = self._write_json(staging, "report.json",
                                             ReportFile(header=self.header, report=report, witness_file=witness_file))
        return outputs

    def _run_check(self, staging: str) -> RunOutcome:
        system = self._load_system()
        spec = self._load_spec()
        xi, signal, horizon = self._initial_condition(system.input_dimension)
        trajectory = simulate(system, xi, signal, horizon, self.config.tolerances)
        report = check_trajectory(trajectory, xi, spec, self.config.certificate_tolerance)
        outputs = self._report_outputs(staging, report)
        columns, rows = trajectory_rows(trajectory)
        outputs["trajectory"] = self.duckdb.write_table(os.path.join(staging, "trajectory.csv"), columns, rows)
        return RunOutcome(verdict_exit_code(report), outputs, {"verdict": report.verdict.value,
                                                               "margin": report.margin})

    def _run_falsify(self, staging: str) -> RunOutcome:
        system = self._load_system()
        spec = self._load_spec()
        report = falsify(system, spec, self.config.region, self.config.budget, self.config.seed,
                         self.config.tolerances, self.config.certificate_tolerance, self.config.jobs)
        outputs = self._report_outputs(staging, report)
        return RunOutcome(verdict_exit_code(report), outputs, {"verdict": report.verdict.value,
                                                               "margin": report.margin})

    def _run_functions(self, staging: str) -> RunOutcome:
        try:
            spec = FunctionsInput.model_validate_json(_read_text(self.config.inputs, "construction inputs"))
        except ValidationError as e:
            raise UserException(f"invalid construction inputs '{self.config.inputs}': {e}")
        construction = self.config.construction
        try:
            output, table = self._construct(construction, spec)
        except ConstructionError as e:
            logging.error(f"Construction '{construction.value}' failed: {e}")
            output = ConstructionOutput(construction=construction.value, status="fail")
            if e.certificate is not None:
                output.certificates["last attempt"] = e.certificate
            table = None

        outputs = {"functions": self._write_json(staging, "functions.json",
                                                 ConstructionFile(header=self.header, output=output))}
        certificates = output.model_copy(update={"functions": {}})
        outputs["certificates"] = self._write_json(staging, "certificates.json",
                                                   ConstructionFile(header=self.header, output=certificates))
        if table is not None:
            columns, rows = table
            outputs["table"] = self.duckdb.write_table(os.path.join(staging, f"{construction.value}.csv"),
                                                       columns, rows)
        exit_code = EXIT_OK if output.status == "pass" else EXIT_VIOLATED
        return RunOutcome(exit_code, outputs, {"construction": construction.value, "status": output.status})

    def _construct(self, construction: Construction, spec: FunctionsInput):
        """Dispatch one construction; returns its output record and an optional table."""
        tolerance = self.config.certificate_tolerance
        axis = spec.axis
        functions: dict[str, ComparisonFunction | KLFunction] = {}
        certificates = {}
        table = None

        match construction:
            case Construction.FAMILY_MAX:
                family = spec.members()
                index = spec.index or len(family)
                f = family_max(family, index, axis)
                members = np.vstack([family.member(m)(axis) for m in range(1, index + 1)])
                m_mesh, r_mesh = np.meshgrid(np.arange(1, index + 1, dtype=float), axis, indexing="ij")
                points = np.column_stack((m_mesh.ravel(), r_mesh.ravel()))
                certificates["member <= family max"] = certify(
                    members, np.broadcast_to(f(axis), members.shape), points, "member <= family max", tolerance)
                functions["family_max"] = f
            case Construction.EXTEND:
                family = spec.members()
                extension = two_arg_extend(family, axis)
                indices = np.arange(1, len(family) + 1, dtype=float)
                s_mesh, r_mesh = np.meshgrid(indices, axis, indexing="ij")
                members = np.vstack([m(axis) for m in family])
                extended = extension(s_mesh, r_mesh)
                points = np.column_stack((s_mesh.ravel(), r_mesh.ravel()))
                certificates["extension matches members"] = combine([
                    certify(extended, members, points, "extension <= member", tolerance),
                    certify(members, extended, points, "member <= extension", tolerance),
                ], "extension matches members")
                s_axis = merge_index_grid(spec.s_grid, len(family))
                s_mesh, r_mesh = np.meshgrid(s_axis, axis, indexing="ij")
                values = extension(s_mesh, r_mesh)
                table = (["s", "r", "value"], list(zip(s_mesh.ravel(), r_mesh.ravel(), values.ravel())))
            case Construction.FACTOR_KK:
                if spec.two_arg is None:
                    raise UserException("factor-kk needs 'two_arg', an expression in s and r")
                result = factor_kk(TwoArgFunction.from_expression(spec.two_arg), axis, spec.s_grid, tolerance)
                functions["sigma"] = result.sigma
                certificates["kk factor"] = result.certificate
            case Construction.FACTOR_PRODUCT:
                result = factor_product(spec.operand(ComparisonFunction), axis, tolerance)
                functions["sigma"] = result.sigma
                certificates["product factor"] = result.certificate
            case Construction.FACTOR_KL:
                result = factor_kl(spec.operand(KLFunction), axis, spec.t_grid, tolerance)
                functions["theta1"] = result.theta1
                functions["theta2"] = result.theta2
                certificates["kl factor"] = result.certificate
            case Construction.FACTOR_POSDEF:
                result = factor_posdef(spec.operand(ComparisonFunction), axis, tolerance)
                functions["rho1"] = result.rho1
                functions["rho2"] = result.rho2
                certificates["positive definite factor"] = result.certificate
            case Construction.BOUND_FAMILY:
                bound = bound_family(spec.members(), axis, tolerance)
                functions["sigma"] = bound.sigma
                functions["asymptotic_gain"] = asymptotic_gain_from_family(bound)
                certificates.update(bound.links)
                certificates["family bound"] = bound.certificate
            case Construction.UNIFORMIZE:
                if spec.alpha1 is None or spec.alpha2 is None:
                    raise UserException("uniformize needs 'alpha1' and 'alpha2'")
                result = uniformize(
                    FunctionFamily(tuple(r.to_function() for r in spec.beta_family)),
                    FunctionFamily(tuple(r.to_function() for r in spec.sigma_family)),
                    FunctionFamily(tuple(r.to_function() for r in spec.gamma_family)),
                    spec.alpha1.to_function(),
                    spec.alpha2.to_function(),
                    spec.samples,
                    tolerance,
                )
                functions.update(beta=result.beta, gamma1=result.gamma1, gamma2=result.gamma2,
                                 delta1=result.delta1, delta2=result.delta2)
                certificates.update(result.step_certificates)
                certificates["uniform bound"] = result.certificate

        passed = all(c.passed for c in certificates.values())
        output = ConstructionOutput(
            construction=construction.value,
            functions={name: to_record(f) for name, f in functions.items()},
            certificates=certificates,
            status="pass" if passed else "fail",
        )
        return output, table

    def _run_counterexample(self, staging: str) -> RunOutcome:
        gain = ComparisonFunction.expression(self.config.gain, FunctionClass.K)
        config = CounterexampleConfig(gamma=gain, bound=self.config.bound, horizon=self.config.horizon,
                                      tolerances=self.config.tolerances)
        run = reproduce(config, seed=self.config.seed)
        outputs = self._report_outputs(staging, run.report)
        outputs["trajectory"] = self.duckdb.write_table(
            os.path.join(staging, "trajectory.csv"), ["t", "x1", "x2", "x1_closed_form", "x2_closed_form"],
            run.trajectory_rows)
        outputs["margins"] = self.duckdb.write_table(
            os.path.join(staging, "margins.csv"), ["sample", "t", "x1_margin", "x2_margin", "combined_margin"],
            run.margin_rows)
        reproduced = run.report.verdict is Verdict.VIOLATED
        if not reproduced:
            logging.error("The witness did not violate the candidate gain")
        return RunOutcome(EXIT_OK if reproduced else EXIT_ERROR, outputs,
                          {"verdict": run.report.verdict.value, "margin": run.report.margin})


def merge_index_grid(s_grid, size: int) -> np.ndarray:
    """Index axis for tabulating a family extension: the integers 1..size plus any requested points."""
    indices = np.arange(1, size + 1, dtype=float)
    if s_grid is None:
        return np.union1d(np.linspace(0.0, size, 4 * size + 1), indices)
    points = np.asarray(s_grid, dtype=float)
    return np.union1d(points[(points >= 0) & (points <= size)], indices)
