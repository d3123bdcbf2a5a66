"""
Uniform bound for families of estimates indexed by a size parameter M.

Given estimates beta_M(R, T) + gamma_M(int sigma_M(phi)) that hold for
M = ceil(alpha1(R) + alpha2(S)), ``uniformize`` builds one set of functions
beta, gamma1, gamma2, delta1, delta2 with

    beta_M(R, T) + gamma_M(int sigma_M(phi))
        <= beta(R, T) + gamma1(alpha1(R)) + gamma2(alpha2(S)) + delta1(int delta2(phi))

and certifies it on sampled (R, S, T, phi) with phi piecewise constant.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from configuration import CertificateTolerance, UniformizationSamples
from exceptions import FamilyIndexError

from .certificates import InequalityCertificate, certify
from .constructions import DOUBLING_BUDGET, bound_family, factor_kl, factor_product
from .functions import ComparisonFunction, merge_grids
from .multivariate import FunctionFamily, KLFunction

GRID_POINTS = 64


@dataclass(frozen=True)
class SampledTuple:
    """One (R, S, T, phi) sample; phi is piecewise constant on ``breakpoints``."""

    radius: float
    input_bound: float
    horizon: float
    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def integral(self, f: ComparisonFunction) -> float:
        """Exact integral of f(phi) over [0, horizon]."""
        if self.horizon == 0.0:
            return 0.0
        edges = np.append(np.asarray(self.breakpoints, dtype=float), self.horizon)
        return float(np.sum(f(np.asarray(self.values, dtype=float)) * np.diff(edges)))


@dataclass(frozen=True)
class UniformBound:
    beta: KLFunction
    gamma1: ComparisonFunction
    gamma2: ComparisonFunction
    delta1: ComparisonFunction
    delta2: ComparisonFunction
    certificate: InequalityCertificate
    step_certificates: dict[str, InequalityCertificate] = field(default_factory=dict)
    # intermediate products, kept for inspection and serialization
    gamma_hat1: ComparisonFunction | None = None
    gamma_hat2: ComparisonFunction | None = None
    beta_hat: KLFunction | None = None

    def right_side(self, sample: SampledTuple, alpha1: ComparisonFunction, alpha2: ComparisonFunction) -> float:
        return (
            self.beta(sample.radius, sample.horizon)
            + self.gamma1(alpha1(sample.radius))
            + self.gamma2(alpha2(sample.input_bound))
            + self.delta1(sample.integral(self.delta2))
        )


def value_grid(upper: float, points: int = GRID_POINTS) -> np.ndarray:
    """Linear plus log-spaced points covering [0, upper]."""
    upper = max(float(upper), 1e-12)
    return merge_grids([0.0], np.linspace(0.0, upper, points), upper * np.logspace(-6, 0, points))


def family_index(alpha1: ComparisonFunction, alpha2: ComparisonFunction, radius: float, input_bound: float) -> int:
    """M = ceil(alpha1(R) + alpha2(S)), never below 1."""
    return max(1, math.ceil(alpha1(radius) + alpha2(input_bound)))


def sample_tuples(samples: UniformizationSamples) -> list[SampledTuple]:
    rng = np.random.default_rng(samples.seed)
    out = []
    for _ in range(samples.count):
        radius = float(rng.uniform(0.0, samples.radius))
        input_bound = float(rng.uniform(0.0, samples.input_bound))
        horizon = float(rng.uniform(0.0, samples.horizon))
        cuts = np.sort(rng.uniform(0.0, horizon, samples.segments - 1)) if horizon > 0 else np.zeros(0)
        breakpoints = np.unique(np.concatenate(([0.0], cuts)))
        values = rng.uniform(0.0, input_bound, breakpoints.size)
        out.append(SampledTuple(radius, input_bound, horizon, tuple(breakpoints), tuple(values)))
    return out


def left_side(
    beta_family: FunctionFamily,
    sigma_family: FunctionFamily,
    gamma_family: FunctionFamily,
    alpha1: ComparisonFunction,
    alpha2: ComparisonFunction,
    sample: SampledTuple,
) -> float:
    M = family_index(alpha1, alpha2, sample.radius, sample.input_bound)
    if M > len(beta_family) or M > len(sigma_family) or M > len(gamma_family):
        raise FamilyIndexError(f"sample needs family member {M}, families stop earlier")
    return beta_family.member(M)(sample.radius, sample.horizon) + gamma_family.member(M)(
        sample.integral(sigma_family.member(M))
    )


def uniformize(
    beta_family: FunctionFamily,
    sigma_family: FunctionFamily,
    gamma_family: FunctionFamily,
    alpha1: ComparisonFunction,
    alpha2: ComparisonFunction,
    samples: UniformizationSamples | None = None,
    tolerance: CertificateTolerance | None = None,
    budget: int = DOUBLING_BUDGET,
) -> UniformBound:
    """Build M-independent comparison functions dominating the family estimates.

    Args:
        beta_family: KL functions beta_M.
        sigma_family: K_inf functions applied inside the integral.
        gamma_family: K_inf functions applied to the integral.
        alpha1: Nondecreasing map of the state radius.
        alpha2: Nondecreasing map of the input bound.
        samples: Region and count of the (R, S, T, phi) samples to certify on.

    Returns:
        UniformBound with the master certificate and the intermediate ones.
    """
    samples = samples or UniformizationSamples()
    size = min(len(beta_family), len(sigma_family), len(gamma_family))
    certificates: dict[str, InequalityCertificate] = {}

    # decaying part: beta_M(r, t) <= gamma_hat1(M) beta_hat(r, t)
    radius_grid = value_grid(samples.radius)
    time_grid = value_grid(samples.horizon)
    kl_factors = [factor_kl(beta_family.member(M), radius_grid, time_grid, tolerance, budget)
                  for M in range(1, size + 1)]
    for M, factor in enumerate(kl_factors, start=1):
        certificates[f"kl factor {M}"] = factor.certificate
    theta1_family = FunctionFamily(tuple(f.theta1 for f in kl_factors))
    theta2_family = FunctionFamily(tuple(f.theta2 for f in kl_factors))

    inner = bound_family(theta2_family, radius_grid, tolerance, budget)
    outer_upper = max(float(f.theta2(samples.radius)) for f in kl_factors)
    outer = bound_family(theta1_family, value_grid(outer_upper), tolerance, budget)
    theta = factor_product(outer.sigma, value_grid(max(inner.sigma(float(size)), inner.sigma(samples.radius))),
                           tolerance, budget)
    certificates.update({"theta2 family": inner.certificate, "theta1 family": outer.certificate,
                         "theta product": theta.certificate})
    s1, s2 = outer.sigma, inner.sigma
    gamma_hat1 = s1 * theta.sigma.compose(s2)
    beta_hat = KLFunction.composed(theta.sigma, s2)

    # integral part: gamma_M(int sigma_M(phi)) <= gamma_hat2(M) delta_hat1(int delta2(phi))
    integrand = bound_family(sigma_family, value_grid(samples.input_bound), tolerance, budget)
    integral_upper = samples.horizon * integrand.sigma(samples.input_bound)
    scaled_upper = max(float(integrand.sigma(float(M))) for M in range(1, size + 1)) * integral_upper
    gains = bound_family(gamma_family, value_grid(scaled_upper), tolerance, budget)
    theta_prime = factor_product(
        gains.sigma, value_grid(max(integrand.sigma(float(size)), integral_upper)), tolerance, budget
    )
    certificates.update({"sigma family": integrand.certificate, "gamma family": gains.certificate,
                         "theta' product": theta_prime.certificate})
    gamma_hat2 = gains.sigma * theta_prime.sigma.compose(integrand.sigma)
    delta_hat1 = theta_prime.sigma
    delta2 = integrand.sigma

    # M <= a + b + 1 <= 3 max(a, b, 1) splits gamma_hat(M) into three terms; ab <= a^2 + b^2 squares them
    c1 = float(gamma_hat1(3.0))
    c2 = float(gamma_hat2(3.0))
    beta_outer = theta.sigma.power_of(2.0).scaled(2.0)
    if c1 > 0:
        beta_outer = theta.sigma.scaled(c1) + beta_outer
    beta = KLFunction.composed(beta_outer, s2)
    gamma1 = gamma_hat1.of_scaled_argument(3.0).power_of(2.0) + gamma_hat2.of_scaled_argument(3.0).power_of(2.0)
    delta1 = delta_hat1.power_of(2.0).scaled(2.0)
    if c2 > 0:
        delta1 = delta_hat1.scaled(c2) + delta1

    tuples = sample_tuples(samples)
    lhs, rhs, decay_lhs, decay_rhs, integral_lhs, integral_rhs, points = [], [], [], [], [], [], []
    bound = UniformBound(beta, gamma1, gamma1, delta1, delta2, certificates.get("theta product"))
    for sample in tuples:
        M = family_index(alpha1, alpha2, sample.radius, sample.input_bound)
        if M > size:
            raise FamilyIndexError(f"sample (R={sample.radius:g}, S={sample.input_bound:g}) needs member {M} > {size}")
        lhs.append(left_side(beta_family, sigma_family, gamma_family, alpha1, alpha2, sample))
        rhs.append(bound.right_side(sample, alpha1, alpha2))
        decay_lhs.append(beta_family.member(M)(sample.radius, sample.horizon))
        decay_rhs.append(gamma_hat1(float(M)) * beta_hat(sample.radius, sample.horizon))
        integral_lhs.append(gamma_family.member(M)(sample.integral(sigma_family.member(M))))
        integral_rhs.append(gamma_hat2(float(M)) * delta_hat1(sample.integral(delta2)))
        points.append((sample.radius, sample.input_bound, sample.horizon))

    certificates["decaying part"] = certify(decay_lhs, decay_rhs, points, "beta_M <= gamma_hat1(M) beta_hat", tolerance)
    certificates["integral part"] = certify(integral_lhs, integral_rhs, points,
                                            "gamma_M(int sigma_M) <= gamma_hat2(M) delta_hat1(int delta2)", tolerance)
    master = certify(lhs, rhs, points, "uniform bound", tolerance)
    if not master.passed:
        logging.warning(f"Uniform bound violated on a sample, worst slack {master.worst_slack:.3e}")
    logging.info(f"Uniform bound certified on {len(tuples)} samples: pass={master.passed}")
    return UniformBound(beta, gamma1, gamma1, delta1, delta2, master, certificates, gamma_hat1, gamma_hat2, beta_hat)
