"""
Estimate specifications: which inequality to check and the comparison
functions plugged into it.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field

from comparison_functions import (
    ComparisonFunction,
    FunctionClass,
    FunctionRecord,
    KLFunction,
    KLRecord,
    to_record,
    verify_class,
)
from exceptions import EstimateSpecError

KL = "KL"
# slot class checks run on [0, 100], where exponential primitives stay finite
SLOT_GRID = np.concatenate(([0.0], np.logspace(-3, 2, 41)))


class EstimateForm(str, Enum):
    IISS = "IISS"  # alpha(|x|) <= beta(|xi|, t) + int sigma(|u|)
    INT2INT = "INT2INT"  # int alpha(|x|) <= chi(|xi|) + int sigma(|u|)
    MIXED_LPLQ = "MIXED_LPLQ"  # (int |x|^q)^(1/q) <= (|xi|^p + int sigma(|u|)^p)^(1/p)
    MIXED_INT = "MIXED_INT"  # int alpha(|x|) <= chi(|xi| + int sigma(|u|))
    MIXED_GAMMA = "MIXED_GAMMA"  # gamma(int alpha(|x|)) <= chi(|xi|) + int sigma(|u|)
    UBEBS = "UBEBS"  # alpha(|x|) <= gamma(|xi|) + int sigma(|u|) + c
    MIXED_SUP = "MIXED_SUP"  # alpha(|x|) <= beta(|xi|, t) + int sigma(|u|) + gamma(||u||)
    MIXED_SUP_NODECAY = "MIXED_SUP_NODECAY"  # alpha(|x|) <= beta0(|xi|) + int sigma(|u|) + gamma(||u||)
    SEMIGLOBAL = "SEMIGLOBAL"  # IISS form for |xi|, ||u|| <= M
    ISS = "ISS"  # |x| <= beta(|xi|, t) + gamma(||u||), optionally for ||u|| <= M
    ASYMPTOTIC_GAIN = "ASYMPTOTIC_GAIN"  # limsup |x| <= gamma(||u||)


REQUIRED_SLOTS: dict[EstimateForm, dict[str, object]] = {
    EstimateForm.IISS: {"alpha": FunctionClass.K_INF, "beta": KL, "sigma": FunctionClass.K},
    EstimateForm.INT2INT: {"alpha": FunctionClass.K_INF, "chi": FunctionClass.K, "sigma": FunctionClass.K},
    EstimateForm.MIXED_LPLQ: {"sigma": FunctionClass.K},
    EstimateForm.MIXED_INT: {"alpha": FunctionClass.K_INF, "chi": FunctionClass.K, "sigma": FunctionClass.K},
    EstimateForm.MIXED_GAMMA: {"alpha": FunctionClass.K_INF, "gamma": FunctionClass.K_INF, "chi": FunctionClass.K,
                               "sigma": FunctionClass.K},
    EstimateForm.UBEBS: {"alpha": FunctionClass.K_INF, "gamma": FunctionClass.K, "sigma": FunctionClass.K},
    EstimateForm.MIXED_SUP: {"alpha": FunctionClass.K_INF, "beta": KL, "sigma": FunctionClass.K,
                             "gamma": FunctionClass.K},
    EstimateForm.MIXED_SUP_NODECAY: {"alpha": FunctionClass.K_INF, "beta0": FunctionClass.K,
                                     "sigma": FunctionClass.K, "gamma": FunctionClass.K},
    EstimateForm.SEMIGLOBAL: {"alpha": FunctionClass.K_INF, "beta": KL, "sigma": FunctionClass.K},
    EstimateForm.ISS: {"beta": KL, "gamma": FunctionClass.K},
    EstimateForm.ASYMPTOTIC_GAIN: {"gamma": FunctionClass.K},
}

REQUIRED_CONSTANTS: dict[EstimateForm, list[str]] = {
    EstimateForm.MIXED_LPLQ: ["p", "q"],
    EstimateForm.UBEBS: ["c"],
    EstimateForm.SEMIGLOBAL: ["M"],
}

POINTWISE_FORMS = frozenset({
    EstimateForm.IISS, EstimateForm.UBEBS, EstimateForm.MIXED_SUP, EstimateForm.MIXED_SUP_NODECAY,
    EstimateForm.SEMIGLOBAL, EstimateForm.ISS, EstimateForm.ASYMPTOTIC_GAIN,
})
INTEGRAL_FORMS = frozenset({
    EstimateForm.INT2INT, EstimateForm.MIXED_LPLQ, EstimateForm.MIXED_INT, EstimateForm.MIXED_GAMMA,
})


class EstimateSpecRecord(BaseModel):
    form: EstimateForm
    slots: dict[str, FunctionRecord | KLRecord] = Field(default_factory=dict)
    constants: dict[str, float] = Field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class EstimateSpec:
    """A form tag plus the functions and constants its inequality needs."""

    form: EstimateForm
    slots: dict[str, ComparisonFunction | KLFunction] = field(default_factory=dict)
    constants: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        missing = [name for name in REQUIRED_SLOTS[self.form] if name not in self.slots]
        missing += [name for name in REQUIRED_CONSTANTS.get(self.form, []) if name not in self.constants]
        if missing:
            raise EstimateSpecError(f"{self.form.value} estimate is missing slot(s): {', '.join(missing)}")
        for name, required in REQUIRED_SLOTS[self.form].items():
            if (required == KL) != isinstance(self.slots[name], KLFunction):
                kind = "a KL function" if required == KL else "a comparison function"
                raise EstimateSpecError(f"slot '{name}' of {self.form.value} must be {kind}")
        for name in ("c", "M", "p", "q"):
            if name in self.constants and self.constants[name] < 0:
                raise EstimateSpecError(f"constant '{name}' must be nonnegative")

    def function(self, name: str) -> ComparisonFunction:
        return self.slots[name]

    def kl(self, name: str = "beta") -> KLFunction:
        return self.slots[name]

    def constant(self, name: str, default: float | None = None) -> float | None:
        return float(self.constants[name]) if name in self.constants else default

    def validate_classes(self, grid=SLOT_GRID) -> None:
        """Run verify_class on every required slot; raise on the first failure."""
        for name, required in REQUIRED_SLOTS[self.form].items():
            declared = None if required == KL else required
            certificate = verify_class(self.slots[name], grid, declared_class=declared)
            if not certificate.passed:
                logging.error(f"Slot '{name}' failed its class check: {certificate.label}")
                raise EstimateSpecError(
                    f"slot '{name}' is not of class {required if required == KL else required.value}: "
                    f"failed '{certificate.label}' near {certificate.worst_point}"
                )

    def to_record(self) -> EstimateSpecRecord:
        return EstimateSpecRecord(
            form=self.form, slots={k: to_record(v) for k, v in self.slots.items()}, constants=dict(self.constants)
        )

    @classmethod
    def from_record(cls, record: EstimateSpecRecord) -> "EstimateSpec":
        return cls(record.form, {k: v.to_function() for k, v in record.slots.items()}, dict(record.constants))

    @classmethod
    def from_json(cls, text: str) -> "EstimateSpec":
        return cls.from_record(EstimateSpecRecord.model_validate_json(text))


def mixed_gamma_to_mixed_int(spec: EstimateSpec) -> EstimateSpec:
    """Rewrite gamma(int alpha) <= chi(|xi|) + int sigma as int alpha <= gamma^-1(chi(|xi|) + int sigma).

    The result has chi := gamma^-1 and carries the original chi as
    ``inner_chi``, applied to |xi| inside the argument.
    """
    if spec.form is not EstimateForm.MIXED_GAMMA:
        raise EstimateSpecError("conversion needs a MIXED_GAMMA estimate")
    gamma_inverse = spec.function("gamma").inverse()
    chi = spec.function("chi")
    return EstimateSpec(
        EstimateForm.MIXED_INT,
        {"alpha": spec.function("alpha"), "chi": gamma_inverse, "sigma": spec.function("sigma"),
         "inner_chi": chi},
        dict(spec.constants),
    )
