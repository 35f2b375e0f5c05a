"""Models module for Pydantic data models."""
from .state_models import DensityOperator, FockState, GaussianState, Nullifier
from .circuit_model import (
    BeamSplitter,
    CircuitProgram,
    Displace,
    Kerr,
    Loss,
    MeasureHomodyne,
    MeasurePnrd,
    MeasurementRecord,
    Phase,
    Squeeze,
)
from .experiment_models import (
    BreedingConfig,
    ExperimentManifest,
    LatticeSpec,
    MachineSpec,
    parse_manifest,
)
from .result_models import (
    FockConfigDistribution,
    GKPMetrics,
    Peak,
    ScheduledEvent,
    TimeBinSchedule,
    TruncationReport,
    WignerGrid,
)

__all__ = [
    "DensityOperator",
    "FockState",
    "GaussianState",
    "Nullifier",
    "BeamSplitter",
    "CircuitProgram",
    "Displace",
    "Kerr",
    "Loss",
    "MeasureHomodyne",
    "MeasurePnrd",
    "MeasurementRecord",
    "Phase",
    "Squeeze",
    "BreedingConfig",
    "ExperimentManifest",
    "LatticeSpec",
    "MachineSpec",
    "parse_manifest",
    "FockConfigDistribution",
    "GKPMetrics",
    "Peak",
    "ScheduledEvent",
    "TimeBinSchedule",
    "TruncationReport",
    "WignerGrid",
]
