"""
Circuit Data Models

Gate operations (a tagged union on ``kind``), measurement events, circuit
programs and measurement records.

Conventions: hbar = 1, x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)).
  Squeeze(r, phi)        exp[(r/2)(e^{-2i phi} a^2 - e^{2i phi} a^dag^2)]
  BeamSplitter(th, phi)  exp[th (e^{i phi} a_i^dag a_j - e^{-i phi} a_i a_j^dag)]
  Phase(phi)             exp(i phi n)
  Kerr(Phi)              exp[i Phi n (n - 1)]
  Displace(beta)         exp(beta a^dag - beta^* a)
"""

import math
from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from fockloop_core import InvalidEta, InvalidMode


class _Op(BaseModel):
    model_config = ConfigDict(frozen=True)

    @property
    def modes(self) -> Tuple[int, ...]:
        return (self.mode,)  # type: ignore[attr-defined]

    @property
    def is_gaussian(self) -> bool:
        return True

    @property
    def is_measurement(self) -> bool:
        return False


class Displace(_Op):
    kind: Literal["displace"] = "displace"
    mode: int = Field(..., ge=0)
    beta_re: float = Field(default=0.0, description="Real part of beta")
    beta_im: float = Field(default=0.0, description="Imaginary part of beta")

    @property
    def beta(self) -> complex:
        return complex(self.beta_re, self.beta_im)

    @classmethod
    def of(cls, mode: int, beta: complex) -> "Displace":
        beta = complex(beta)
        return cls(mode=mode, beta_re=beta.real, beta_im=beta.imag)


class Squeeze(_Op):
    kind: Literal["squeeze"] = "squeeze"
    mode: int = Field(..., ge=0)
    r: float = Field(..., ge=0.0, description="Squeezing parameter")
    phi: float = Field(default=0.0, description="Squeezing angle")


class BeamSplitter(_Op):
    kind: Literal["beamsplitter"] = "beamsplitter"
    mode_i: int = Field(..., ge=0)
    mode_j: int = Field(..., ge=0)
    theta: float = Field(..., description="Mixing angle (pi/4 is 50:50)")
    phi: float = Field(default=0.0, description="Beamsplitter phase")

    @model_validator(mode="after")
    def _distinct_modes(self) -> "BeamSplitter":
        if self.mode_i == self.mode_j:
            raise InvalidMode(f"Beamsplitter needs two distinct modes, got {self.mode_i} twice")
        return self

    @property
    def modes(self) -> Tuple[int, ...]:
        return (self.mode_i, self.mode_j)


class Phase(_Op):
    kind: Literal["phase"] = "phase"
    mode: int = Field(..., ge=0)
    phi: float = Field(..., description="Rotation angle")


class Kerr(_Op):
    kind: Literal["kerr"] = "kerr"
    mode: int = Field(..., ge=0)
    strength: float = Field(..., description="Kerr phase Phi")

    @property
    def is_gaussian(self) -> bool:
        return False


class Loss(_Op):
    kind: Literal["loss"] = "loss"
    mode: int = Field(..., ge=0)
    eta: float = Field(..., description="Transmission in [0, 1]")

    @field_validator("eta")
    @classmethod
    def _eta_range(cls, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise InvalidEta(f"Loss transmission must lie in [0, 1], got {value}")
        return value


class MeasureHomodyne(_Op):
    """Projection on a fixed homodyne outcome; the measured bin is reset to vacuum."""

    kind: Literal["homodyne"] = "homodyne"
    mode: int = Field(..., ge=0)
    theta: float = Field(default=0.0)
    outcome: float = Field(default=0.0)

    @property
    def is_gaussian(self) -> bool:
        return False

    @property
    def is_measurement(self) -> bool:
        return True


class MeasurePnrd(_Op):
    """Projection on a fixed photon count; the measured bin is reset to vacuum."""

    kind: Literal["pnrd"] = "pnrd"
    mode: int = Field(..., ge=0)
    outcome: int = Field(default=0, ge=0)

    @property
    def is_gaussian(self) -> bool:
        return False

    @property
    def is_measurement(self) -> bool:
        return True


GateOp = Annotated[
    Union[Displace, Squeeze, BeamSplitter, Phase, Kerr, Loss, MeasureHomodyne, MeasurePnrd],
    Field(discriminator="kind"),
]

# Hardware module each operation kind occupies on the loop machine.
MODULE_FOR_KIND = {
    "displace": "core",
    "beamsplitter": "core",
    "phase": "core",
    "loss": "core",
    "squeeze": "squeezer",
    "kerr": "kerr",
    "homodyne": "homodyne",
    "pnrd": "pnrd",
}


class CircuitProgram(BaseModel):
    """Ordered list of gate events on numbered modes."""

    model_config = ConfigDict(frozen=True)

    mode_count: int = Field(..., ge=1, description="Number of modes the program acts on")
    ops: List[GateOp] = Field(default_factory=list, description="Gate events in program order")

    @model_validator(mode="after")
    def _check_modes(self) -> "CircuitProgram":
        for index, op in enumerate(self.ops):
            for mode in op.modes:
                if mode >= self.mode_count:
                    raise InvalidMode(
                        f"Event {index} ({op.kind}) uses mode {mode} >= mode_count {self.mode_count}"
                    )
        return self

    def __len__(self) -> int:
        return len(self.ops)

    @property
    def has_loss(self) -> bool:
        return any(op.kind == "loss" for op in self.ops)

    def extended(self, ops: List[_Op]) -> "CircuitProgram":
        return CircuitProgram(mode_count=self.mode_count, ops=list(self.ops) + list(ops))


class MeasurementRecord(BaseModel):
    """One measurement outcome with its branch weight and acceptance flag."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["homodyne", "pnrd"] = Field(..., description="Detector type")
    mode: int = Field(..., ge=0, description="Measured mode")
    theta: float = Field(default=0.0, description="Homodyne angle in [0, 2pi)")
    outcome: float = Field(..., description="Quadrature value or photon count")
    weight: float = Field(..., ge=0.0, description="Probability (density) of the branch")
    accepted: bool = Field(default=True, description="Acceptance-window flag")

    @field_validator("theta")
    @classmethod
    def _wrap_theta(cls, value: float) -> float:
        wrapped = math.fmod(value, 2 * math.pi)
        if wrapped < 0:
            wrapped += 2 * math.pi
        # fmod can return exactly 2pi after the shift for tiny negatives
        return 0.0 if wrapped >= 2 * math.pi else wrapped

    def with_acceptance(self, window: Optional[float]) -> "MeasurementRecord":
        if window is None:
            return self
        return self.model_copy(update={"accepted": abs(self.outcome) < window})
