"""
Construct-and-certify versions of the comparison-function existence results.

Each construction builds a candidate, checks the defining inequality on a
finite grid and, where the candidate is scalable, doubles it until the
certificate passes or ``budget`` rounds are spent.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from configuration import CertificateTolerance
from exceptions import ConstructionError, FamilyIndexError, PositiveDefinitenessError

from .certificates import InequalityCertificate, certify, combine
from .functions import ComparisonFunction, FunctionClass, FunctionKind, default_grid, log_slope, merge_grids
from .multivariate import FunctionFamily, KLForm, KLFunction, TwoArgFunction

DOUBLING_BUDGET = 32


class FactorResult(NamedTuple):
    sigma: ComparisonFunction
    certificate: InequalityCertificate


class KLFactorResult(NamedTuple):
    theta1: ComparisonFunction
    theta2: ComparisonFunction
    certificate: InequalityCertificate


class PosDefFactorResult(NamedTuple):
    rho1: ComparisonFunction
    rho2: ComparisonFunction
    certificate: InequalityCertificate
    # factor applied to the running-minimum rho1; 1 for the exact pair
    scale: float = 1.0


@dataclass(frozen=True)
class FamilyBound:
    """sigma with gamma_M(r) <= sigma(M) sigma(r), plus the certified links of the chain."""

    sigma: ComparisonFunction
    certificate: InequalityCertificate
    extension: TwoArgFunction
    links: dict[str, InequalityCertificate] = field(default_factory=dict)


def _grid(grid) -> np.ndarray:
    return merge_grids([0.0], default_grid() if grid is None else grid)


def _tail(nodes: np.ndarray, values: np.ndarray) -> float:
    return max(log_slope(nodes, values), 0.0)


def family_max(family: FunctionFamily, M: int, grid=None) -> ComparisonFunction:
    """Pointwise maximum of the first ``M`` members, tabulated on the union grid.

    Args:
        family: Family of class K_inf functions.
        M: Number of members to include, 1 <= M <= len(family).
        grid: Sample points; the members' own table grids are always added.

    Returns:
        Table of class K_inf.
    """
    if len(family) == 0:
        raise ValueError("family is empty")
    if not 1 <= M <= len(family):
        raise FamilyIndexError(f"index {M} outside 1..{len(family)}")
    members = [family.member(i) for i in range(1, M + 1)]
    nodes = merge_grids(
        [0.0], default_grid() if grid is None else grid, *[m.grid for m in members if m.kind is FunctionKind.TABLE]
    )
    values = np.max(np.vstack([m(nodes) for m in members]), axis=0)
    tail = max(m.growth_exponent() for m in members)
    return ComparisonFunction.table(nodes, values, FunctionClass.K_INF, tail, name=f"max_1..{M}")


def two_arg_extend(family: FunctionFamily, grid=None) -> TwoArgFunction:
    """Interpolate the running maxima of ``family`` into a function of (s, r).

    Integer s gives the running maximum of the first s members, non-integer
    s > 1 interpolates linearly between neighbouring integers and s in [0, 1]
    scales the first member by s.
    """
    size = len(family)
    if size == 0:
        raise ValueError("family is empty")
    maxima = [family_max(family, k, grid) for k in range(1, size + 1)]

    def evaluate(s: np.ndarray, r: np.ndarray) -> np.ndarray:
        stack = np.stack([g(r) for g in maxima])
        low = np.clip(np.floor(s), 1, size).astype(int)
        high = np.clip(np.ceil(s), 1, size).astype(int)
        at_low = np.take_along_axis(stack, (low - 1)[None, ...], axis=0)[0]
        at_high = np.take_along_axis(stack, (high - 1)[None, ...], axis=0)[0]
        between = at_low * (high - s) + at_high * (s - low)
        out = np.where(low == high, at_low, between)
        return np.where(s <= 1.0, stack[0] * s, out)

    return TwoArgFunction(evaluate, index_limit=float(size), name="family extension")


def certify_kk(g: TwoArgFunction, sigma: ComparisonFunction, grid, s_grid=None,
               tolerance: CertificateTolerance | None = None) -> InequalityCertificate:
    """Certify g(s, r) <= sigma(s) sigma(r) on s_grid x grid."""
    r_axis = np.asarray(grid, dtype=float)
    s_axis = r_axis if s_grid is None else np.asarray(s_grid, dtype=float)
    s_mesh, r_mesh = np.meshgrid(s_axis, r_axis, indexing="ij")
    return certify(
        g(s_mesh, r_mesh),
        sigma(s_mesh) * sigma(r_mesh),
        np.column_stack((s_mesh.ravel(), r_mesh.ravel())),
        "g(s,r) <= sigma(s) sigma(r)",
        tolerance,
    )


def factor_kk(
    g: TwoArgFunction,
    grid,
    s_grid=None,
    tolerance: CertificateTolerance | None = None,
    budget: int = DOUBLING_BUDGET,
) -> FactorResult:
    """Find one class-K sigma with g(s, r) <= sigma(s) sigma(r).

    The candidate is the monotone envelope of max(sqrt(g(x, x)), g(x, x)),
    read one node ahead; it is doubled until the grid certificate passes.
    The origin is added to the table nodes but only ``grid`` is certified.
    """
    r_axis = merge_grids(default_grid() if grid is None else grid)
    s_axis = r_axis if s_grid is None else merge_grids(s_grid)
    nodes = merge_grids([0.0], r_axis, s_axis)
    diagonal = g.diagonal(nodes)
    envelope = np.maximum.accumulate(np.maximum(np.sqrt(diagonal), diagonal))
    # each node takes the envelope of its right neighbour, so sigma between two
    # nodes dominates g at the upper corner of the cell
    envelope[1:-1] = envelope[2:]
    tail = _tail(nodes, envelope)

    scale = 1.0
    for attempt in range(budget + 1):
        sigma = ComparisonFunction.table(nodes, scale * envelope, FunctionClass.K, tail, name="kk factor")
        certificate = certify_kk(g, sigma, r_axis, s_axis, tolerance)
        if certificate.passed:
            logging.debug(f"KK factor certified after {attempt} doublings (slack {certificate.worst_slack:.3e})")
            return FactorResult(sigma, certificate)
        scale *= 2.0
    logging.warning(f"KK factorization failed after {budget} doublings, worst slack {certificate.worst_slack:.3e}")
    raise ConstructionError(f"no KK factor found within {budget} doublings", certificate)


def certify_product(gamma: ComparisonFunction, sigma: ComparisonFunction, grid,
                    tolerance: CertificateTolerance | None = None) -> InequalityCertificate:
    """Certify gamma(r s) <= sigma(r) sigma(s) on grid x grid."""
    axis = _grid(grid)
    return certify_kk(TwoArgFunction(lambda s, r: gamma(s * r), name="gamma(rs)"), sigma, axis, axis, tolerance)


def factor_product(
    gamma: ComparisonFunction,
    grid,
    tolerance: CertificateTolerance | None = None,
    budget: int = DOUBLING_BUDGET,
) -> FactorResult:
    """Find sigma with gamma(r s) <= sigma(r) sigma(s)."""
    axis = _grid(grid)
    if gamma.kind in (FunctionKind.LINEAR, FunctionKind.POWER):
        a = gamma.params[0]
        b = gamma.params[1] if gamma.kind is FunctionKind.POWER else 1.0
        root = math.sqrt(a)
        sigma = ComparisonFunction.linear(root) if b == 1.0 else ComparisonFunction.power(root, b)
        certificate = certify_product(gamma, sigma, axis, tolerance)
        if certificate.passed:
            return FactorResult(sigma, certificate)
    g = TwoArgFunction(lambda s, r: gamma(s * r), name="gamma(rs)")
    return factor_kk(g, axis, tolerance=tolerance, budget=budget)


def certify_kl(beta: KLFunction, theta1: ComparisonFunction, theta2: ComparisonFunction, grid, t_grid,
               tolerance: CertificateTolerance | None = None) -> InequalityCertificate:
    r_mesh, t_mesh = np.meshgrid(grid, t_grid, indexing="ij")
    return certify(
        beta(r_mesh, t_mesh),
        theta1(theta2(r_mesh) * np.exp(-t_mesh)),
        np.column_stack((r_mesh.ravel(), t_mesh.ravel())),
        "beta(r,t) <= theta1(theta2(r) exp(-t))",
        tolerance,
    )


def factor_kl(
    beta: KLFunction,
    grid,
    t_grid=None,
    tolerance: CertificateTolerance | None = None,
    budget: int = DOUBLING_BUDGET,
) -> KLFactorResult:
    """Write ``beta`` as theta1(theta2(r) e^-t) up to a certified upper bound.

    Composed KL functions return their components. For g(r) h(t) the first
    candidate is theta2 = g with theta1 = h(0) id; if h decays slower than
    e^-t the fallback tabulates theta1 as the monotone envelope of
    g(r) h(t) over the nodes theta2(r) e^-t.
    """
    r_axis = _grid(grid)
    t_axis = r_axis if t_grid is None else merge_grids(t_grid)

    if beta.form is KLForm.COMPOSED:
        certificate = certify_kl(beta, beta.first, beta.second, r_axis, t_axis, tolerance)
        return KLFactorResult(beta.first, beta.second, certificate)

    g, h = beta.first, beta.second
    theta2 = g if g.declared_class is FunctionClass.K_INF else g + ComparisonFunction.identity()
    h0 = float(h(0.0))
    if h0 > 0:
        theta1 = ComparisonFunction.linear(h0)
        certificate = certify_kl(beta, theta1, theta2, r_axis, t_axis, tolerance)
        if certificate.passed:
            return KLFactorResult(theta1, theta2, certificate)

    r_mesh, t_mesh = np.meshgrid(r_axis, t_axis, indexing="ij")
    nodes = (theta2(r_mesh) * np.exp(-t_mesh)).ravel()
    bounds = beta(r_mesh, t_mesh).ravel()
    order = np.argsort(nodes, kind="stable")
    nodes, bounds = nodes[order], np.maximum.accumulate(bounds[order])
    nodes, last = np.unique(nodes[::-1], return_index=True)
    bounds = bounds[::-1][last]
    if nodes[0] > 0:
        nodes, bounds = np.concatenate(([0.0], nodes)), np.concatenate(([0.0], bounds))
    envelope = bounds + nodes

    scale = 1.0
    for attempt in range(budget + 1):
        theta1 = ComparisonFunction.table(nodes, scale * envelope, FunctionClass.K_INF, 1.0, name="kl envelope")
        certificate = certify_kl(beta, theta1, theta2, r_axis, t_axis, tolerance)
        if certificate.passed:
            return KLFactorResult(theta1, theta2, certificate)
        scale *= 2.0
    raise ConstructionError(f"no KL factorization found within {budget} doublings", certificate)


def certify_posdef(rho, rho1, rho2, grid, tolerance: CertificateTolerance | None = None,
                   scale: float | None = None) -> InequalityCertificate:
    axis = np.asarray(grid, dtype=float)
    label = "rho1(r) rho2(r) <= rho(r)" if scale is None else f"rho1(r) rho2(r) <= rho(r), rho1 scale {scale:.6g}"
    return certify(rho1(axis) * rho2(axis), rho(axis), axis, label, tolerance)


def factor_posdef(
    rho: ComparisonFunction,
    grid,
    tolerance: CertificateTolerance | None = None,
    budget: int = DOUBLING_BUDGET,
) -> PosDefFactorResult:
    """Find rho1 of class K_inf and rho2 of class L with rho1 rho2 <= rho.

    When rho(r)/r is already nonincreasing and decaying the pair is
    (identity, rho(r)/r) and the product reproduces rho. Otherwise rho1 is
    half of r times the running minimum of rho(s)/s over s >= r, and
    rho2(r) = 1/(1+r). That rho1 is halved at most ``budget`` times; the
    scale reached is returned and named in the certificate label.
    """
    from .verification import verify_class

    nodes = _grid(grid)
    positive = nodes[nodes > 0]
    values = rho(positive)
    if np.any(values <= 0):
        bad = positive[values <= 0][0]
        raise PositiveDefinitenessError(f"rho vanishes at r={bad:g}")
    quotient = values / positive

    if positive.size > 1 and np.all(np.diff(quotient) <= 0) and quotient[-1] < quotient[0]:
        rho1 = ComparisonFunction.identity()
        rho2 = ComparisonFunction.table(positive, quotient, FunctionClass.L, min(log_slope(positive, quotient), -1e-12),
                                        name="rho(r)/r")
        certificate = certify_posdef(rho, rho1, rho2, nodes, tolerance)
        if certificate.passed and verify_class(rho2, nodes, tolerance=tolerance).passed:
            return PosDefFactorResult(rho1, rho2, certificate)

    running_min = np.minimum.accumulate(quotient[::-1])[::-1]
    rho1_values = np.concatenate(([0.0], 0.5 * positive * running_min))
    rho2 = ComparisonFunction.expression("1/(1 + r)", FunctionClass.L)
    scale = 1.0
    for attempt in range(budget + 1):
        rho1 = ComparisonFunction.table(np.concatenate(([0.0], positive)), scale * rho1_values, FunctionClass.K_INF,
                                        1.0, name="posdef factor")
        certificate = certify_posdef(rho, rho1, rho2, nodes, tolerance, scale)
        if certificate.passed:
            if attempt:
                logging.info(f"Positive-definite factor certified after {attempt} halvings, rho1 scale {scale:g}")
            return PosDefFactorResult(rho1, rho2, certificate, scale)
        scale *= 0.5
    logging.warning(f"Positive-definite factorization failed after {budget} halvings, "
                    f"worst slack {certificate.worst_slack:.3e}")
    raise ConstructionError(f"no positive-definite factorization within {budget} halvings", certificate)


def bound_family(
    family: FunctionFamily,
    grid,
    tolerance: CertificateTolerance | None = None,
    budget: int = DOUBLING_BUDGET,
) -> FamilyBound:
    """Find sigma with gamma_M(r) <= sigma(M) sigma(r) for every member M.

    Runs family_max, two_arg_extend and factor_kk in turn and certifies each
    link of gamma_M <= running max <= extension <= sigma(M) sigma(r)
    separately on the index set 1..M_max times ``grid``.
    """
    size = len(family)
    if size == 0:
        raise ValueError("family is empty")
    r_axis = _grid(grid)
    indices = np.arange(1, size + 1, dtype=float)
    s_axis = merge_grids(r_axis[r_axis <= size], indices)
    nodes = merge_grids(r_axis, s_axis)

    extension = two_arg_extend(family, nodes)
    sigma, kk_certificate = factor_kk(extension, r_axis, s_axis, tolerance, budget)

    m_mesh, r_mesh = np.meshgrid(indices, r_axis, indexing="ij")
    points = np.column_stack((m_mesh.ravel(), r_mesh.ravel()))
    members = np.vstack([family.member(m)(r_axis) for m in range(1, size + 1)])
    maxima = np.vstack([family_max(family, m, nodes)(r_axis) for m in range(1, size + 1)])
    extended = extension(m_mesh, r_mesh)
    bound = sigma(m_mesh) * sigma(r_mesh)

    links = {
        "member <= running max": certify(members, maxima, points, "member <= running max", tolerance),
        "running max <= extension": certify(maxima, extended, points, "running max <= extension", tolerance),
        "extension <= sigma(M) sigma(r)": certify(extended, bound, points, "extension <= sigma(M) sigma(r)",
                                                  tolerance),
        "kk factor": kk_certificate,
    }
    direct = certify(members, bound, points, "gamma_M(r) <= sigma(M) sigma(r)", tolerance)
    certificate = combine([direct, *links.values()], "gamma_M(r) <= sigma(M) sigma(r)")
    if not certificate.passed:
        logging.warning(f"Family bound failed a link: {certificate.label}, slack {certificate.worst_slack:.3e}")
    return FamilyBound(sigma, certificate, extension, links)


def asymptotic_gain_from_family(bound: FamilyBound) -> ComparisonFunction:
    """gamma(r) = sigma(r + 1) sigma(r) from a family bound sigma."""
    return (bound.sigma.shifted(1.0) * bound.sigma).with_class(FunctionClass.K)
