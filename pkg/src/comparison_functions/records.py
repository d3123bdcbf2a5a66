"""Structured text records for comparison functions and their certificates."""

import json
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field

from .certificates import InequalityCertificate
from .functions import ComparisonFunction, CompositeOp, FunctionClass, FunctionKind
from .multivariate import FunctionFamily, KLForm, KLFunction


class FunctionRecord(BaseModel):
    kind: FunctionKind
    declared_class: FunctionClass
    parameters: list[float] = Field(default_factory=list)
    grid: list[float] | None = None
    values: list[float] | None = None
    tail_exponent: float = 0.0
    expression: str | None = None
    op: CompositeOp | None = None
    operands: list["FunctionRecord"] = Field(default_factory=list)

    @classmethod
    def from_function(cls, f: ComparisonFunction) -> "FunctionRecord":
        return cls(
            kind=f.kind,
            declared_class=f.declared_class,
            parameters=list(f.params),
            grid=None if f.grid is None else [float(v) for v in f.grid],
            values=None if f.values is None else [float(v) for v in f.values],
            tail_exponent=f.tail_exponent,
            expression=f.source,
            op=f.op,
            operands=[cls.from_function(o) for o in f.operands],
        )

    def to_function(self) -> ComparisonFunction:
        return ComparisonFunction(
            kind=self.kind,
            declared_class=self.declared_class,
            params=tuple(self.parameters),
            grid=None if self.grid is None else np.asarray(self.grid, dtype=float),
            values=None if self.values is None else np.asarray(self.values, dtype=float),
            tail_exponent=self.tail_exponent,
            source=self.expression,
            op=self.op,
            operands=tuple(o.to_function() for o in self.operands),
        )


class KLRecord(BaseModel):
    form: KLForm
    first: FunctionRecord
    second: FunctionRecord

    @classmethod
    def from_function(cls, beta: KLFunction) -> "KLRecord":
        return cls(form=beta.form, first=FunctionRecord.from_function(beta.first),
                   second=FunctionRecord.from_function(beta.second))

    def to_function(self) -> KLFunction:
        return KLFunction(self.form, self.first.to_function(), self.second.to_function())


class FamilyRecord(BaseModel):
    members: list[FunctionRecord | KLRecord]

    @classmethod
    def from_family(cls, family: FunctionFamily) -> "FamilyRecord":
        return cls(members=[to_record(m) for m in family])

    def to_family(self) -> FunctionFamily:
        return FunctionFamily(tuple(m.to_function() for m in self.members))


class ConstructionOutput(BaseModel):
    """Result file of a construction: named functions and their certificates."""

    construction: str
    functions: dict[str, FunctionRecord | KLRecord] = Field(default_factory=dict)
    certificates: dict[str, InequalityCertificate] = Field(default_factory=dict)
    status: Literal["pass", "fail"] = "pass"


def to_record(f: ComparisonFunction | KLFunction) -> FunctionRecord | KLRecord:
    if isinstance(f, KLFunction):
        return KLRecord.from_function(f)
    return FunctionRecord.from_function(f)


def dumps(f: ComparisonFunction | KLFunction) -> str:
    return to_record(f).model_dump_json(indent=2)


def loads(text: str) -> ComparisonFunction | KLFunction:
    data = json.loads(text)
    if "form" in data:
        return KLRecord.model_validate(data).to_function()
    return FunctionRecord.model_validate(data).to_function()
