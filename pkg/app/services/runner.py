"""Experiment execution: dispatch to a solver, compare with the exact solution, write artifacts.

Each experiment writes into its own directory:

    solution.csv      1D: x, u_exact, u_numeric; 2D: x, y, u_exact, u_numeric
    loss_history.csv  trained methods only: epoch, loss_total, components..., seconds
    network.ckpt      trained methods only
    report.json       SolveReport without the wall time
    timing.json       wall_time_seconds
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union
import csv
import json
import logging
import time

import numpy as np

from ..core.config import settings
from ..core.exceptions import EXIT_OK, SolverFailureError, SolverSuiteError, TrainingDivergedError
from ..models.experiment import (
    SUITE_COLUMNS,
    ExperimentConfig,
    MeshConfig,
    Method,
    SolveReport,
    SuiteRow,
)
from .bspline import build_basis
from .fem1d import ErrorNorms, Problem1D, error_norms, exact_solution_1d, solve_galerkin, solve_resmin_1d
from .fem2d import (
    ProblemEJ,
    error_norms_2d,
    exact_solution_ej,
    solve_galerkin_2d,
    solve_resmin_2d,
    solve_supg,
)
from .mesh import ADAPTIVE_RECURRENCE, PRINTED_RECURRENCE, MeshKind, make_mesh, make_mesh_2d
from .neural import init_network, parameter_count, predict, save_checkpoint
from .optimizer import AdamState, TrainingHistory, train
from .pinn import build_pinn_problem, pinn_loss
from .quadrature import default_order
from .vpinn import build_test_space, vpinn_combined_loss, vpinn_strong_loss, vpinn_weak_loss

logger = logging.getLogger(__name__)


@dataclass
class _Outcome:
    """What a solver hands back to the reporting code."""

    approx_1d: Optional[Callable[[np.ndarray], np.ndarray]] = None
    approx_2d: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    residual_norm: Optional[float] = None
    n_unknowns: Optional[int] = None
    n_parameters: Optional[int] = None
    quad_order: Optional[int] = None
    history: Optional[TrainingHistory] = None
    network: object = None


def _csv_format() -> str:
    return f"%.{settings.CSV_PRECISION}g"


def _mesh(config: ExperimentConfig):
    if config.dimension == 1:
        return make_mesh(config.mesh.kind, config.mesh.n_points, config.eps, config.mesh.refinements)
    return make_mesh_2d(config.mesh.kind, config.mesh.n_points, config.eps, config.mesh.refinements)


def _solve_fem_1d(config: ExperimentConfig, mesh) -> _Outcome:
    problem = Problem1D(config.eps)
    trial = build_basis(config.trial_degree, mesh.breakpoints, config.trial_multiplicity)
    if config.method is Method.GALERKIN:
        solution = solve_galerkin(problem, trial, config.quad_order)
        order = config.quad_order or default_order(trial.degree, trial.degree)
    else:
        test = build_basis(config.test_degree, mesh.breakpoints, config.test_multiplicity)
        solution = solve_resmin_1d(problem, trial, test, config.quad_order)
        order = config.quad_order or default_order(trial.degree, test.degree)
    return _Outcome(
        approx_1d=solution,
        residual_norm=solution.residual_norm,
        n_unknowns=trial.dimension - 1,
        quad_order=order,
    )


def _solve_fem_2d(config: ExperimentConfig, mesh) -> _Outcome:
    problem = ProblemEJ(config.eps)
    common = dict(quad_order=config.quad_order, penalty_constant=config.penalty_constant)
    if config.method is Method.SUPG:
        solution = solve_supg(
            problem, mesh, config.trial_degree, trial_multiplicity=config.trial_multiplicity, **common
        )
        order = default_order(config.trial_degree, config.trial_degree)
    elif config.method is Method.RESMIN:
        solution = solve_resmin_2d(
            problem, mesh, config.trial_degree, config.test_degree,
            trial_multiplicity=config.trial_multiplicity,
            test_multiplicity=config.test_multiplicity,
            **common,
        )
        order = default_order(config.trial_degree, config.test_degree)
    else:
        solution = solve_galerkin_2d(
            problem, mesh, config.trial_degree, config.trial_multiplicity, **common
        )
        order = default_order(config.trial_degree, config.trial_degree)
    return _Outcome(
        approx_2d=solution.on_grid,
        residual_norm=solution.residual_norm,
        n_unknowns=solution.coefficients.size,
        quad_order=config.quad_order or order,
    )


def _loss_evaluator(config: ExperimentConfig, mesh):
    problem = build_pinn_problem(mesh, config.eps, config.bc_weight)
    if config.method is Method.PINN:
        return (lambda net: pinn_loss(net, problem)), None
    space = build_test_space(
        mesh, config.test_degree, config.test_multiplicity, config.quad_order, config.gamma
    )
    loss = {
        Method.VPINN_STRONG: vpinn_strong_loss,
        Method.VPINN_WEAK: vpinn_weak_loss,
        Method.VPINN_BOTH: vpinn_combined_loss,
    }[config.method]
    return (lambda net: loss(net, space, problem)), space.quad_order


def _train_network(config: ExperimentConfig, mesh) -> _Outcome:
    evaluator, order = _loss_evaluator(config, mesh)
    net = init_network(config.widths, config.seed)
    adam = AdamState.fresh(parameter_count(net), lr=config.lr)
    net, history, _ = train(net, evaluator, config.epochs, adam, config.log_every)

    if config.dimension == 1:
        approx_1d, approx_2d = (lambda x: predict(net, x)), None
    else:
        def approx_2d(xs, ys):
            xx, yy = np.meshgrid(xs, ys, indexing="ij")
            return predict(net, np.column_stack([xx.ravel(), yy.ravel()])).reshape(xx.shape)
        approx_1d = None
    return _Outcome(
        approx_1d=approx_1d,
        approx_2d=approx_2d,
        n_parameters=parameter_count(net),
        quad_order=order,
        history=history,
        network=net,
    )


def _sample_table(config: ExperimentConfig, outcome: _Outcome) -> np.ndarray:
    if config.dimension == 1:
        x = np.linspace(0.0, 1.0, settings.SAMPLE_POINTS_1D)
        return np.column_stack([x, exact_solution_1d(Problem1D(config.eps), x), outcome.approx_1d(x)])
    grid = np.linspace(0.0, 1.0, settings.EVAL_GRID_2D)
    xx, yy = np.meshgrid(grid, grid, indexing="ij")
    exact = exact_solution_ej(ProblemEJ(config.eps), xx, yy)
    return np.column_stack([xx.ravel(), yy.ravel(), exact.ravel(), outcome.approx_2d(grid, grid).ravel()])


def _norms(config: ExperimentConfig, mesh, outcome: _Outcome) -> ErrorNorms:
    if config.dimension == 1:
        return error_norms(outcome.approx_1d, Problem1D(config.eps), mesh.breakpoints)
    return error_norms_2d(outcome.approx_2d, ProblemEJ(config.eps), mesh)


def _write_history(history: TrainingHistory, path: Path) -> None:
    np.savetxt(
        path, np.array(history.rows(), dtype=float), fmt=_csv_format(), delimiter=",",
        header=",".join(history.header()), comments="",
    )


def _write_report(report: SolveReport, report_path: Path, timing_path: Path) -> None:
    # report.json stays byte-identical across reruns of the same config
    report_path.write_text(report.model_dump_json(indent=2, exclude={"wall_time_seconds"}))
    timing_path.write_text(json.dumps({"wall_time_seconds": report.wall_time_seconds}, indent=2))


def _describe_points(config: ExperimentConfig) -> Dict[str, Optional[str]]:
    recurrence = None
    if config.mesh.kind is MeshKind.ADAPTIVE:
        recurrence = f"{ADAPTIVE_RECURRENCE} (printed form {PRINTED_RECURRENCE} leaves (0, 1) at i = 3)"
    interpretation = None
    if config.dimension == 2:
        n = config.mesh.total_points
        interpretation = f"n_points={config.mesh.n_points} counts points per direction ({n}x{n} grid)"
        if config.mesh.refinements:
            interpretation += f" after {config.mesh.refinements} bisection(s)"
    return {"mesh_recurrence": recurrence, "point_interpretation": interpretation}


def run_experiment(config: ExperimentConfig, output_dir: Optional[Union[str, Path]] = None) -> SolveReport:
    """Solve, evaluate and write the artifacts of one experiment; failures end up in report.json."""
    root = Path(output_dir) if output_dir is not None else settings.OUTPUT_DIR
    directory = root / config.experiment_name
    directory.mkdir(parents=True, exist_ok=True)
    report_path = directory / "report.json"
    timing_path = directory / "timing.json"
    base = dict(experiment=config.experiment_name, config=config, **_describe_points(config))
    logger.info(f"Running {config.experiment_name}")

    start = time.perf_counter()
    try:
        mesh = _mesh(config)
        if config.method.is_trained:
            outcome = _train_network(config, mesh)
        elif config.dimension == 1:
            outcome = _solve_fem_1d(config, mesh)
        else:
            outcome = _solve_fem_2d(config, mesh)
    except SolverSuiteError as exc:
        wall = time.perf_counter() - start
        logger.error(f"{config.experiment_name} failed: {exc.detail}")
        report = SolveReport(
            status="failed",
            exit_code=exc.exit_code,
            error=f"{type(exc).__name__}: {exc.detail}",
            condition_number=exc.condition_number if isinstance(exc, SolverFailureError) else None,
            failed_epoch=exc.epoch if isinstance(exc, TrainingDivergedError) else None,
            files={"report": str(report_path), "timing": str(timing_path)},
            wall_time_seconds=wall,
            **base,
        )
        _write_report(report, report_path, timing_path)
        return report
    wall = time.perf_counter() - start

    files = {
        "report": str(report_path),
        "timing": str(timing_path),
        "solution": str(directory / "solution.csv"),
    }
    table = _sample_table(config, outcome)
    header = "x,u_exact,u_numeric" if config.dimension == 1 else "x,y,u_exact,u_numeric"
    np.savetxt(files["solution"], table, fmt=_csv_format(), delimiter=",", header=header, comments="")

    final = None
    if outcome.history is not None:
        files["loss_history"] = str(directory / "loss_history.csv")
        files["checkpoint"] = str(directory / "network.ckpt")
        _write_history(outcome.history, Path(files["loss_history"]))
        save_checkpoint(outcome.network, files["checkpoint"])
        final = outcome.history.final

    norms = _norms(config, mesh, outcome)
    numeric = table[:, -1]
    u_min, u_max = float(numeric.min()), float(numeric.max())
    # the exact solutions of both problems take values in [0, 1]
    excursion = max(-u_min, u_max - 1.0, 0.0)
    report = SolveReport(
        status="ok",
        exit_code=EXIT_OK,
        mse=norms.mse,
        l2_error=norms.l2_error,
        max_error=norms.max_error,
        max_error_outside_layer=norms.max_error_outside_layer,
        n_samples=norms.n_samples,
        u_min=u_min,
        u_max=u_max,
        excursion=excursion,
        oscillation=excursion > settings.OSCILLATION_TOLERANCE,
        residual_norm=outcome.residual_norm,
        n_unknowns=outcome.n_unknowns,
        n_parameters=outcome.n_parameters,
        quad_order=outcome.quad_order,
        epochs_run=final.epoch if final else None,
        final_loss=final.loss_total if final else None,
        final_components=dict(final.components) if final else {},
        files=files,
        wall_time_seconds=wall,
        **base,
    )
    _write_report(report, report_path, timing_path)
    logger.info(
        f"{config.experiment_name}: mse={norms.mse:.3e} l2={norms.l2_error:.3e} "
        f"max={norms.max_error:.3e} in {wall:.2f}s"
    )
    return report


def _suite_row(config: ExperimentConfig, report: SolveReport) -> SuiteRow:
    return SuiteRow(
        name=config.experiment_name,
        method=config.method,
        dimension=config.dimension,
        n_points=config.mesh.total_points,
        eps=config.eps,
        mse=report.mse,
        status=report.status,
        exit_code=report.exit_code,
    )


def _run_one(payload: dict, output_dir: str) -> dict:
    config = ExperimentConfig.model_validate(payload)
    try:
        report = run_experiment(config, output_dir)
    except Exception as exc:  # a crashing experiment must not stop the suite
        logger.error(f"{config.experiment_name} crashed: {exc}", exc_info=True)
        return SuiteRow(
            name=config.experiment_name, method=config.method, dimension=config.dimension,
            n_points=config.mesh.total_points, eps=config.eps, status="failed", exit_code=3,
        ).model_dump()
    return _suite_row(config, report).model_dump()


def write_summary(rows: Sequence[SuiteRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fmt = _csv_format()
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SUITE_COLUMNS)
        for row in rows:
            writer.writerow([
                row.name, row.method.value, row.dimension, row.n_points, fmt % row.eps,
                "" if row.mse is None else fmt % row.mse, row.status,
            ])
    return path


def run_suite(
    configs: Sequence[ExperimentConfig],
    output_dir: Optional[Union[str, Path]] = None,
    jobs: int = 1,
) -> List[SuiteRow]:
    """Run every experiment, in input order, and write ``summary.csv``."""
    root = Path(output_dir) if output_dir is not None else settings.OUTPUT_DIR
    root.mkdir(parents=True, exist_ok=True)
    payloads = [c.model_dump(mode="json") for c in configs]
    logger.info(f"Running suite of {len(payloads)} experiments with {jobs} worker(s)")

    if jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, payloads, [str(root)] * len(payloads)))
    else:
        results = [_run_one(p, str(root)) for p in payloads]

    rows = [SuiteRow.model_validate(r) for r in results]
    write_summary(rows, root / "summary.csv")
    failed = sum(r.status != "ok" for r in rows)
    logger.info(f"Suite finished: {len(rows) - failed} ok, {failed} failed")
    return rows


def _grid(methods, dimension, kinds_points, eps_values, epochs=None) -> List[ExperimentConfig]:
    """``kinds_points`` holds (kind, n_points) or (kind, n_points, refinements) tuples."""
    configs = []
    for method in methods:
        for eps in eps_values:
            for kind, n_points, *rest in kinds_points:
                payload = dict(
                    method=method, dimension=dimension, eps=eps,
                    mesh=MeshConfig(kind=kind, n_points=n_points, refinements=rest[0] if rest else 0),
                )
                if epochs is not None:
                    payload["epochs"] = epochs
                configs.append(ExperimentConfig(**payload))
    return configs


TRAINED_1D = (Method.PINN, Method.VPINN_STRONG, Method.VPINN_WEAK, Method.VPINN_BOTH)
EPS_VALUES = (0.1, 0.01, 0.001)
# eps = 0.001 needs an 11-point geometric prefix plus two layer points
ADAPTED_BASE_POINTS = 13

GRID_PRESETS: Dict[str, Callable[[], List[ExperimentConfig]]] = {
    "pinn1d-uniform": lambda: _grid(
        TRAINED_1D, 1, [(MeshKind.UNIFORM, 100), (MeshKind.UNIFORM, 1000)], EPS_VALUES, 150_000
    ),
    "pinn1d-adaptive": lambda: _grid(
        TRAINED_1D, 1, [(MeshKind.ADAPTIVE, 100), (MeshKind.ADAPTIVE, 1000)], EPS_VALUES, 40_000
    ),
    "ej-tables": lambda: _grid(
        (Method.PINN, Method.VPINN_BOTH), 2, [(MeshKind.ADAPTIVE, 50), (MeshKind.ADAPTIVE, 80)],
        EPS_VALUES, 40_000,
    ),
    "fem1d-comparison": lambda: _grid(
        (Method.GALERKIN, Method.RESMIN), 1, [(MeshKind.UNIFORM, n) for n in (11, 21, 31)], (0.001,)
    ),
    # nested sequence: the coarsest layer-adapted mesh and two uniform bisections of it
    "ej-fem-adapted": lambda: _grid(
        (Method.SUPG, Method.RESMIN), 2,
        [(MeshKind.ADAPTIVE, ADAPTED_BASE_POINTS, level) for level in range(3)], (0.001,),
    ),
}


def grid_suite(name: str) -> List[ExperimentConfig]:
    return GRID_PRESETS[name]()
