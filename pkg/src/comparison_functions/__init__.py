"""
Comparison functions: classes K, K_inf, L and KL, their algebra and the
construct-and-certify factorizations built on top of them.
"""

from .certificates import GridSpec, InequalityCertificate, certify, combine
from .constructions import (
    DOUBLING_BUDGET,
    FactorResult,
    FamilyBound,
    KLFactorResult,
    PosDefFactorResult,
    asymptotic_gain_from_family,
    bound_family,
    certify_kk,
    certify_product,
    factor_kk,
    factor_kl,
    factor_posdef,
    factor_product,
    family_max,
    two_arg_extend,
)
from .functions import (
    ComparisonFunction,
    CompositeOp,
    FunctionClass,
    FunctionKind,
    default_grid,
    invert,
    merge_grids,
)
from .multivariate import FunctionFamily, KLForm, KLFunction, TwoArgFunction
from .records import ConstructionOutput, FamilyRecord, FunctionRecord, KLRecord, dumps, loads, to_record
from .uniformization import SampledTuple, UniformBound, left_side, sample_tuples, uniformize, value_grid
from .verification import verify_class

__all__ = [
    "ComparisonFunction",
    "CompositeOp",
    "ConstructionOutput",
    "DOUBLING_BUDGET",
    "FactorResult",
    "FamilyBound",
    "FamilyRecord",
    "FunctionClass",
    "FunctionFamily",
    "FunctionKind",
    "FunctionRecord",
    "GridSpec",
    "InequalityCertificate",
    "KLFactorResult",
    "KLForm",
    "KLFunction",
    "KLRecord",
    "PosDefFactorResult",
    "SampledTuple",
    "TwoArgFunction",
    "UniformBound",
    "asymptotic_gain_from_family",
    "bound_family",
    "certify",
    "certify_kk",
    "certify_product",
    "combine",
    "default_grid",
    "dumps",
    "factor_kk",
    "factor_kl",
    "factor_posdef",
    "factor_product",
    "family_max",
    "invert",
    "left_side",
    "loads",
    "merge_grids",
    "sample_tuples",
    "to_record",
    "two_arg_extend",
    "uniformize",
    "value_grid",
    "verify_class",
]
