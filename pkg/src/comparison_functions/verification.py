import numpy as np

from configuration import CertificateTolerance

from .certificates import InequalityCertificate, certify, combine, structural_failure
from .functions import ComparisonFunction, FunctionClass
from .multivariate import KLFunction

FAR_ARGUMENT = 1e6


def _tail_decays(f: ComparisonFunction) -> bool:
    near, far = f(np.array([FAR_ARGUMENT, 10.0 * FAR_ARGUMENT]))
    return bool(far == 0.0 or (far < near and f.growth_exponent(FAR_ARGUMENT) < 0))


def _monotone(values: np.ndarray, points: np.ndarray, label: str, increasing: bool, tolerance) -> InequalityCertificate:
    if values.size < 2:
        return certify(np.zeros(0), np.zeros(0), np.zeros(0), label, tolerance)
    lower, upper = (values[:-1], values[1:]) if increasing else (values[1:], values[:-1])
    return certify(lower, upper, points[1:], label, tolerance)


def _verify_scalar(f: ComparisonFunction, declared: FunctionClass, grid: np.ndarray, tolerance) -> list:
    values = f(grid)
    if not np.all(np.isfinite(values)):
        bad = grid[~np.isfinite(values)][0]
        return [structural_failure("finite values", grid, [bad], tolerance)]

    checks = []
    origin = grid == 0.0
    if declared.vanishes_at_origin and np.any(origin):
        checks.append(certify(values[origin], np.zeros(1), grid[origin], "zero at origin", tolerance))

    if declared in (FunctionClass.K, FunctionClass.K_INF):
        checks.append(_monotone(values, grid, "increasing", True, tolerance))
        positive = (grid > 0) & (values <= 0)
        if np.any(positive):
            checks.append(structural_failure("positive off the origin", grid, [grid[positive][0]], tolerance))
    if declared is FunctionClass.K_INF and not f.is_unbounded:
        checks.append(structural_failure("unbounded tail", grid, [grid[-1]], tolerance))
    if declared is FunctionClass.L:
        checks.append(_monotone(values, grid, "nonincreasing", False, tolerance))
        if not _tail_decays(f):
            checks.append(structural_failure("decaying tail", grid, [grid[-1]], tolerance))
    if declared is FunctionClass.POSITIVE_DEFINITE:
        nonpositive = (grid > 0) & (values <= 0)
        if np.any(nonpositive):
            checks.append(structural_failure("positive off the origin", grid, [grid[nonpositive][0]], tolerance))
    return checks


def _verify_kl(beta: KLFunction, grid: np.ndarray, t_grid: np.ndarray, tolerance) -> list:
    r_mesh, t_mesh = np.meshgrid(grid, t_grid, indexing="ij")
    values = beta(r_mesh, t_mesh)
    points = np.column_stack((r_mesh.ravel(), t_mesh.ravel()))
    if not np.all(np.isfinite(values)):
        return [structural_failure("finite values", points, points[~np.isfinite(values.ravel())][0], tolerance)]

    checks = []
    origin = grid == 0.0
    if np.any(origin):
        row = values[origin][0]
        checks.append(certify(row, np.zeros_like(row), t_grid, "zero at r=0", tolerance))
    if grid.size > 1:
        checks.append(certify(values[:-1, :], values[1:, :], points.reshape(grid.size, t_grid.size, 2)[1:, :],
                              "increasing in r", tolerance))
    if t_grid.size > 1:
        checks.append(certify(values[:, 1:], values[:, :-1], points.reshape(grid.size, t_grid.size, 2)[:, 1:],
                              "nonincreasing in t", tolerance))

    positive = grid[grid > 0]
    if positive.size:
        far_t = 10.0 * float(np.max(t_grid)) + 50.0
        start = beta(positive, np.zeros_like(positive))
        end = beta(positive, np.full_like(positive, far_t))
        stuck = (start > 0) & (end >= start)
        if np.any(stuck):
            checks.append(structural_failure("decay in t", points, [positive[stuck][0], far_t], tolerance))
    return checks


def verify_class(
    f: ComparisonFunction | KLFunction,
    grid,
    declared_class: FunctionClass | None = None,
    t_grid=None,
    tolerance: CertificateTolerance | None = None,
) -> InequalityCertificate:
    """Check the class invariants of ``f`` pointwise on ``grid``.

    Failures are reported in the certificate, never raised. KL functions are
    checked on ``grid x t_grid`` (``t_grid`` defaults to ``grid``).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) < 0):
        raise ValueError("verification grid must be nonempty and sorted")

    if isinstance(f, KLFunction):
        t_grid = grid if t_grid is None else np.asarray(t_grid, dtype=float)
        return combine(_verify_kl(f, grid, t_grid, tolerance), "class KL")

    declared = declared_class or f.declared_class
    checks = _verify_scalar(f, declared, grid, tolerance)
    if not checks:
        checks = [certify(np.zeros(0), np.zeros(0), np.zeros(0), f"class {declared.value}", tolerance)]
    return combine(checks, f"class {declared.value}")
