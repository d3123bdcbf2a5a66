import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from configuration import CertificateTolerance

# stands in for -inf / nan slack so certificates stay valid JSON
STRUCTURAL_FAILURE = -1.0e300


class GridSpec(BaseModel):
    """Summary of the points an inequality was checked on."""

    size: int
    lower: float
    upper: float
    dimensions: int = 1


class InequalityCertificate(BaseModel):
    """Outcome of checking ``lhs <= rhs`` pointwise on a finite grid.

    ``worst_slack`` is the minimum over the grid of ``rhs - lhs`` plus the
    relative cushion; the certificate passes iff it is at least ``-tolerance``.
    """

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    label: str
    grid: GridSpec
    worst_slack: float
    worst_gap: float
    worst_point: list[float] = Field(default_factory=list)
    passed: bool = Field(alias="pass")
    tolerance: float
    relative_tolerance: float = 0.0

    def dump(self) -> str:
        return self.model_dump_json(indent=2, by_alias=True)


def _grid_spec(points: np.ndarray) -> GridSpec:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.size == 0:
        return GridSpec(size=0, lower=0.0, upper=0.0, dimensions=points.shape[-1] if points.ndim > 1 else 1)
    return GridSpec(
        size=int(points.shape[0]),
        lower=float(np.min(points)),
        upper=float(np.max(points)),
        dimensions=int(points.shape[1]),
    )


def certify(
    lhs: np.ndarray,
    rhs: np.ndarray,
    points: np.ndarray,
    label: str,
    tolerance: CertificateTolerance | None = None,
) -> InequalityCertificate:
    """Certify ``lhs <= rhs`` elementwise.

    Args:
        lhs: Left-hand side values, any shape.
        rhs: Right-hand side values, same shape as ``lhs``.
        points: Coordinates of the evaluations, shape ``(lhs.size, d)`` or ``(lhs.size,)``.
        label: Name recorded in the certificate.
        tolerance: Absolute and relative slack.

    Returns:
        InequalityCertificate
    """
    tolerance = tolerance or CertificateTolerance()
    lhs = np.asarray(lhs, dtype=float).ravel()
    rhs = np.asarray(rhs, dtype=float).ravel()
    points = np.asarray(points, dtype=float).reshape(lhs.size, -1) if lhs.size else np.zeros((0, 1))

    if lhs.size == 0:
        return InequalityCertificate(
            label=label,
            grid=_grid_spec(points),
            worst_slack=0.0,
            worst_gap=0.0,
            passed=True,
            tolerance=tolerance.absolute,
            relative_tolerance=tolerance.relative,
        )

    with np.errstate(all="ignore"):
        gap = rhs - lhs
        cushion = tolerance.relative * np.maximum(np.abs(lhs), np.abs(rhs))
        cushion = np.where(np.isfinite(cushion), cushion, 0.0)
        slack = gap + cushion
    # an infinite right side dominates anything finite
    slack = np.where(np.isposinf(rhs) & np.isfinite(lhs), np.inf, slack)
    slack = np.where(np.isnan(slack), -np.inf, slack)
    gap = np.where(np.isnan(gap), -np.inf, gap)

    worst = int(np.argmin(slack))
    worst_slack = float(max(slack[worst], STRUCTURAL_FAILURE))
    if not np.isfinite(worst_slack):
        worst_slack = -STRUCTURAL_FAILURE
    worst_gap = float(np.clip(gap[worst], STRUCTURAL_FAILURE, -STRUCTURAL_FAILURE))

    return InequalityCertificate(
        label=label,
        grid=_grid_spec(points),
        worst_slack=worst_slack,
        worst_gap=worst_gap,
        worst_point=[float(v) for v in points[worst]],
        passed=bool(worst_slack >= -tolerance.absolute),
        tolerance=tolerance.absolute,
        relative_tolerance=tolerance.relative,
    )


def structural_failure(label: str, points: np.ndarray, point: list[float],
                       tolerance: CertificateTolerance | None = None):
    """Certificate for a violated structural property (monotonicity, sign, tail)."""
    tolerance = tolerance or CertificateTolerance()
    return InequalityCertificate(
        label=label,
        grid=_grid_spec(points),
        worst_slack=-1.0,
        worst_gap=-1.0,
        worst_point=[float(v) for v in point],
        passed=False,
        tolerance=tolerance.absolute,
        relative_tolerance=tolerance.relative,
    )


def combine(certificates: list[InequalityCertificate], label: str) -> InequalityCertificate:
    """Join several certificates: passes iff all pass, reports the worst member."""
    if not certificates:
        raise ValueError("no certificates to combine")
    failing = [c for c in certificates if not c.passed]
    worst = min(failing or certificates, key=lambda c: c.worst_slack + c.tolerance)
    return worst.model_copy(update={"label": label, "passed": not failing})
