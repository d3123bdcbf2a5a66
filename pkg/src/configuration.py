import logging
from enum import Enum

from keboola.component.exceptions import UserException
from pydantic import BaseModel, Field, ValidationError, model_validator

TOOL_NAME = "iiss-estimate-toolkit"
TOOL_VERSION = "1.0.0"

DEFAULT_SEGMENTS = 8
BLOWUP_THRESHOLD = 1e12


class Subcommand(str, Enum):
    SIMULATE = "simulate"
    CHECK = "check"
    FALSIFY = "falsify"
    FUNCTIONS = "functions"
    COUNTEREXAMPLE = "counterexample"


class Construction(str, Enum):
    FAMILY_MAX = "family-max"
    EXTEND = "extend"
    FACTOR_KK = "factor-kk"
    FACTOR_PRODUCT = "factor-product"
    FACTOR_KL = "factor-kl"
    FACTOR_POSDEF = "factor-posdef"
    BOUND_FAMILY = "bound-family"
    UNIFORMIZE = "uniformize"


class Tolerances(BaseModel):
    """Integrator error tolerances."""

    atol: float = Field(default=1e-8, gt=0)
    rtol: float = Field(default=1e-6, gt=0)

    def tightened(self, factor: float = 10.0) -> "Tolerances":
        return Tolerances(atol=self.atol / factor, rtol=self.rtol / factor)


class CertificateTolerance(BaseModel):
    """Slack allowed when comparing two sides of an inequality."""

    absolute: float = Field(default=1e-9, ge=0)
    relative: float = Field(default=1e-6, ge=0)


class SearchRegion(BaseModel):
    """Region searched by the falsifier and the value-function search."""

    radius: float = Field(default=1.0, ge=0)  # |xi| <= radius
    input_bound: float = Field(default=1.0, ge=0)  # ||u||_inf <= input_bound
    horizon: float = Field(default=10.0, gt=0)
    segments: int = Field(default=DEFAULT_SEGMENTS, ge=1)


class UniformizationSamples(BaseModel):
    """Sampled (R, S, T, phi) tuples used to certify the uniform bound."""

    radius: float = Field(default=1.0, gt=0)
    input_bound: float = Field(default=1.0, ge=0)
    horizon: float = Field(default=5.0, gt=0)
    segments: int = Field(default=4, ge=1)
    count: int = Field(default=200, ge=1)
    seed: int = 0


class RunConfig(BaseModel):
    """Parameters of one toolkit run, built from CLI flags or a component config.json."""

    subcommand: Subcommand
    system: str | None = None
    spec: str | None = None
    input: str | None = None
    inputs: str | None = None
    witness: str | None = None
    construction: Construction | None = None
    xi: list[float] | None = None
    horizon: float = Field(default=10.0, gt=0)
    budget: int = Field(default=200, ge=1)
    seed: int = 0
    jobs: int = Field(default=1, ge=1)
    out: str = "out"
    radius: float = Field(default=1.0, ge=0)
    input_bound: float = Field(default=1.0, ge=0)
    segments: int = Field(default=DEFAULT_SEGMENTS, ge=1)
    gain: str = "r"  # candidate ISS gain of the counterexample, in r
    bound: float = Field(default=1.0, gt=0)  # state bound M of the counterexample
    tolerances: Tolerances = Field(default_factory=Tolerances)
    certificate_tolerance: CertificateTolerance = Field(default_factory=CertificateTolerance)
    debug: bool = False

    @property
    def region(self) -> SearchRegion:
        return SearchRegion(
            radius=self.radius, input_bound=self.input_bound, horizon=self.horizon, segments=self.segments
        )

    @model_validator(mode="after")
    def validate_required_files(self) -> "RunConfig":
        """Each subcommand needs its own set of input files."""
        required = {
            Subcommand.SIMULATE: ["system"],
            Subcommand.CHECK: ["system", "spec"],
            Subcommand.FALSIFY: ["system", "spec"],
            Subcommand.FUNCTIONS: ["construction", "inputs"],
            Subcommand.COUNTEREXAMPLE: [],
        }[self.subcommand]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"subcommand '{self.subcommand.value}' requires: {', '.join(missing)}")
        if self.subcommand in (Subcommand.SIMULATE, Subcommand.CHECK) and self.xi is None and self.witness is None:
            raise ValueError(f"subcommand '{self.subcommand.value}' requires xi or a witness file")
        return self

    def __init__(self, /, **data):
        try:
            super().__init__(**data)
            if self.debug:
                logging.debug("Toolkit will run in Debug mode")
        except ValidationError as e:
            error_messages = []
            for err in e.errors():
                if "loc" in err and err["loc"]:
                    location = ".".join(str(x) for x in err["loc"])
                else:
                    location = "unknown"
                error_messages.append(f"{location}: {err.get('msg', 'Validation error')}")
            raise UserException(f"Configuration validation error: {', '.join(error_messages)}")
