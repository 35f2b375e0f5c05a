"""
Result Data Models

Pydantic models for values the engines and experiments hand back: truncation
summaries, Fock-configuration distributions, Wigner grids, peak lists, GKP
metrics and compiled time-bin schedules.
"""

from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from fockloop_core import ShapeMismatch, ZeroNormError
from src.models.circuit_model import GateOp

DISTRIBUTION_TOL = 1e-9


class TruncationReport(BaseModel):
    """Population near the Fock cutoff, per mode."""

    cutoff: int = Field(..., ge=2, description="Fock cutoff of the inspected state")
    top_level: List[float] = Field(default_factory=list, description="Population of level d-1 per mode")
    edge: List[float] = Field(default_factory=list, description="Population of levels d-2 and d-1 per mode")
    max_top_level: float = Field(default=0.0, description="Largest top-level population")
    max_edge: float = Field(default=0.0, description="Largest edge population")

    def exceeds(self, tolerance: float) -> bool:
        return self.max_edge > tolerance


class FockConfigDistribution(BaseModel):
    """Probabilities of photon-number configurations in a fixed-N sector."""

    model_config = ConfigDict(frozen=True)

    probabilities: Dict[Tuple[int, ...], float] = Field(
        ..., description="Occupation tuple -> probability, in basis order"
    )

    @model_validator(mode="after")
    def _check_total(self) -> "FockConfigDistribution":
        total = sum(self.probabilities.values())
        if abs(total - 1.0) > DISTRIBUTION_TOL:
            raise ZeroNormError(f"Configuration probabilities sum to {total:.12f}, not 1")
        return self

    @property
    def configs(self) -> List[Tuple[int, ...]]:
        return list(self.probabilities.keys())

    def get(self, config: Tuple[int, ...]) -> float:
        return self.probabilities.get(tuple(config), 0.0)

    def tv_distance(self, other: "FockConfigDistribution") -> float:
        """Total-variation distance 0.5 * sum |p - q|."""
        keys = set(self.probabilities) | set(other.probabilities)
        return 0.5 * sum(abs(self.get(k) - other.get(k)) for k in keys)

    def reversed_sites(self) -> "FockConfigDistribution":
        return FockConfigDistribution(
            probabilities={tuple(reversed(k)): v for k, v in self.probabilities.items()}
        )


class WignerGrid(BaseModel):
    """Wigner function sampled on a rectangular (x, p) grid; values[i, j] = W(x[j], p[i])."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    x: np.ndarray = Field(..., description="x sample points")
    p: np.ndarray = Field(..., description="p sample points")
    values: np.ndarray = Field(..., description="Real Wigner values, shape (len(p), len(x))")

    @field_validator("x", "p", "values", mode="before")
    @classmethod
    def _as_float(cls, value) -> np.ndarray:
        return np.asarray(value, dtype=float)

    @model_validator(mode="after")
    def _check_shape(self) -> "WignerGrid":
        if self.values.shape != (self.p.size, self.x.size):
            raise ShapeMismatch(f"Wigner values {self.values.shape} do not match grid ({self.p.size}, {self.x.size})")
        return self

    @property
    def x_range(self) -> Tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    @property
    def p_range(self) -> Tuple[float, float]:
        return float(self.p[0]), float(self.p[-1])

    @property
    def resolution(self) -> Tuple[int, int]:
        return self.x.size, self.p.size

    @property
    def cell_area(self) -> float:
        return float((self.x[1] - self.x[0]) * (self.p[1] - self.p[0]))

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def value_at(self, x: float, p: float) -> float:
        """Value at the grid point nearest to (x, p)."""
        return float(self.values[np.argmin(np.abs(self.p - p)), np.argmin(np.abs(self.x - x))])

    def to_rows(self) -> List[dict]:
        rows = []
        for i, p in enumerate(self.p):
            for j, x in enumerate(self.x):
                rows.append({"x": float(x), "p": float(p), "W": float(self.values[i, j])})
        return rows

    def to_json_dict(self) -> dict:
        return {
            "x_range": list(self.x_range),
            "p_range": list(self.p_range),
            "resolution": list(self.resolution),
            "values": self.values.tolist(),
        }


class Peak(BaseModel):
    """One local maximum of a marginal density."""

    position: float = Field(..., description="Density-weighted mean inside the peak window")
    height: float = Field(..., description="Density at the local maximum")
    variance: float = Field(..., description="Local variance inside the peak window")


class GKPMetrics(BaseModel):
    """Stabilizer amplitudes and central-peak variances of a (mixture of) grid state(s)."""

    s_x: float = Field(..., description="|<S_x>| for the x-lattice stabilizer displacement")
    s_logical: float = Field(..., description="|<S_1L>| for the half-period logical displacement")
    var_x_peak: float = Field(..., gt=0.0, description="x variance of the central lattice peak")
    var_p_peak: float = Field(..., gt=0.0, description="p variance of the central lattice peak")
    var_product: float = Field(..., gt=0.0, description="var_x_peak * var_p_peak")
    n_peaks_x: int = Field(default=0, ge=0, description="Peaks found in the x marginal")
    peak_spacing: Optional[float] = Field(default=None, description="Median x-peak spacing")
    acceptance_fraction: Optional[float] = Field(default=None, description="Accepted / total trajectories")
    n_trajectories: int = Field(default=1, ge=0, description="Trajectories in the ensemble")
    reference: Dict[str, float] = Field(default_factory=dict, description="Experimental comparison values")

    @field_validator("s_x", "s_logical")
    @classmethod
    def _unit_interval(cls, value: float) -> float:
        if not -1e-12 <= value <= 1.0 + 1e-12:
            raise ValueError(f"stabilizer amplitude {value} outside [0, 1]")
        return min(1.0, max(0.0, value))


class ScheduledEvent(BaseModel):
    """A circuit event placed on a (resource, bin) slot of the loop machine."""

    model_config = ConfigDict(frozen=True)

    bin_index: int = Field(..., ge=0, description="Time bin the event fires in")
    resource: str = Field(..., description="Core or module id, e.g. 'core0', 'kerr'")
    event_index: int = Field(..., ge=0, description="Position of the event in the source program")
    op: GateOp = Field(..., description="The gate or measurement")
    operand_bins: Tuple[int, ...] = Field(..., description="Temporal modes the event touches")
    delay: Optional[int] = Field(default=None, description="Delay line length used by a two-bin gate")


class TimeBinSchedule(BaseModel):
    """Compiled assignment of events to time bins, cores and delay lines."""

    model_config = ConfigDict(frozen=True)

    mode_count: int = Field(..., ge=1, description="Temporal modes of the source program")
    events: List[ScheduledEvent] = Field(default_factory=list, description="Scheduled events")
    makespan: int = Field(default=0, ge=0, description="Bins from first to last occupied slot")
    cores_used: int = Field(default=0, ge=0, description="Core budget the greedy pass ran with")

    def ordered_events(self) -> List[ScheduledEvent]:
        """Events by bin, then source order within a bin."""
        return sorted(self.events, key=lambda e: (e.bin_index, e.event_index))

    def to_json_dict(self) -> dict:
        return {
            "mode_count": self.mode_count,
            "makespan": self.makespan,
            "cores_used": self.cores_used,
            "events": [e.model_dump(mode="json") for e in self.ordered_events()],
        }
